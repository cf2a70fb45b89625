use magnon_ghz::broadening::{self, DetuningScheme, TableSetup};
use magnon_ghz::ghz::{self, TraceOptions};
use magnon_ghz::hamiltonians::{self, ChiVariant, SystemParams};

#[test]
fn fitted_chi_scales_as_g_squared() {
    // At fixed r the remainder term is a fixed fraction of the coupling, so
    // only G changes between these runs.
    let r = 3.0;
    let ratios: Vec<f64> = [0.37, 0.5, 1.0]
        .iter()
        .map(|&big_g| {
            let p = SystemParams::from_squeezed_frame(2, 60.0, 10.0, big_g, r, 0.0, 0.0, 8);
            ghz::chi_fit(&p, r).unwrap().chi / (big_g * big_g)
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / lo < 0.05, "{ratios:?}");
    // And the coefficient is the c = 2 closed form, 2G²ω̃/(Δ₊Δ₋) = G²/175.
    assert!(ratios.iter().all(|x| (x * 175.0 - 1.0).abs() < 0.1), "{ratios:?}");
}

#[test]
fn squeezing_remainder_raises_the_fitted_chi_at_small_r() {
    let fitted = |r: f64| {
        let p = SystemParams::from_squeezed_frame(2, 60.0, 10.0, 1.0, r, 0.0, 0.0, 8);
        ghz::chi_fit(&p, r).unwrap().chi * 175.0
    };
    let (low, high) = (fitted(2.0), fitted(3.0));
    assert!(low > high * 1.1, "{low} vs {high}");
}

#[test]
fn unbroadened_table_cell_is_the_plain_trace() {
    let setup = TableSetup {
        n_spins: 2,
        g: 0.3,
        r_ref: 3.0,
        omega_m_tilde_ratio: 10.0,
        delta_q_ratio: 60.0,
        gamma_m: 0.0,
        gamma_q: 0.0,
        fock_cutoff: 6,
        dissipative: false,
    };
    let options = TraceOptions::default();
    let (cell, trace) = broadening::table_cell(&setup, 3.0, 0.0, &DetuningScheme::Alternating, &options).unwrap();
    let plain = ghz::fidelity_trace(&setup.params(3.0), 3.0, false, &trace.times(), &options).unwrap();
    assert_eq!(trace.fidelities(), plain.fidelities());
    assert_eq!(cell.fidelity, plain.peak().unwrap().fidelity);
}

#[test]
fn closed_two_spin_peak_is_near_unity_and_periodic() {
    let p = SystemParams::from_squeezed_frame(2, 60.0, 10.0, 1.0, 3.0, 0.0, 0.0, 8);
    let c = hamiltonians::effective_couplings(&p, 3.0, ChiVariant::Appendix).unwrap();
    let t = c.prep_time();
    let grid = ghz::prep_grid(t, 3.5, 4001);
    let first = ghz::fidelity_trace(&p, 3.0, false, &grid, &TraceOptions::default()).unwrap();
    let second = ghz::fidelity_trace(&p, 3.0, false, &grid, &TraceOptions { peak_order: 1, ..Default::default() }).unwrap();
    let (a, b) = (first.peak().unwrap(), second.peak().unwrap());
    assert!(a.fidelity > 0.99 && b.fidelity > 0.98);
    assert!(((b.time - a.time) / (2.0 * t) - 1.0).abs() < 0.02);
}

#[test]
fn dissipation_lowers_the_peak() {
    let closed = SystemParams::from_squeezed_frame(2, 60.0, 10.0, 1.0, 3.0, 0.0, 0.0, 6);
    let lossy = SystemParams { gamma_m: 0.005, gamma_q: 1.5e-4, ..closed.clone() };
    let c = hamiltonians::effective_couplings(&closed, 3.0, ChiVariant::Appendix).unwrap();
    let grid = ghz::prep_grid(c.prep_time(), 1.5, 151);
    let opts = TraceOptions { stop_after_first_peak: true, ..Default::default() };
    let f_closed = ghz::fidelity_trace(&closed, 3.0, false, &grid, &opts).unwrap().peak().unwrap().fidelity;
    let lossy_trace = ghz::fidelity_trace(&lossy, 3.0, true, &grid, &opts).unwrap();
    let f_lossy = lossy_trace.peak().unwrap().fidelity;
    assert!(f_lossy < f_closed && f_lossy > 0.9, "{f_closed} {f_lossy}");
    let d = lossy_trace.diagnostics.unwrap();
    assert!(d.max_trace_error < 1e-7 && d.min_eigenvalue > -1e-6);
}
