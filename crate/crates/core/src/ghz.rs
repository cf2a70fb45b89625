//! One-axis-twisting GHZ preparation in the squeezed-magnon frame.
//!
//! Starting from |−−…−⟩ (the J_x = −N/2 eigenstate), the effective
//! Hamiltonian s·J_z + χ(J² − J_z²) produces at T = π/(2χ)
//!
//!   (√2/2) e^{iπ/4} 𝒜 [ |−…−⟩ + i^{N−1} |+…+⟩ ]          (N even)
//!
//! with 𝒜 = e^{−i s T J_z} e^{−iπ(N²/2 + N)/4}. For odd N the state only
//! becomes a GHZ state, with relative phase −i^N, after the local rotation
//! C = e^{iπ/8} e^{−iπJ_z/2}. Fidelities are always taken on the spin state
//! in the frame co-rotating with Δ_q J_z, where the effective Hamiltonian
//! holds.
//!
//! Later revivals at (2Z+1)T carry an extra e^{iπZ J_z²}, which is a global
//! phase for odd N but a π rotation about z for even N, so each peak order
//! has its own target.

use crate::dynamics::{self, CollapseChannel, Diagnostics, EvolveOptions};
use crate::hamiltonians::{effective_couplings, h_squeezed, ChiVariant, EffectiveCouplings, SystemParams};
use crate::operators::{DensityMatrix, HilbertSpace, Operator, StateVector};
use crate::{Error, Matrix, Result, Vector, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

/// J_z eigenvalue of computational basis state `index` (|e⟩ = bit clear).
fn jz_value(n: usize, index: usize) -> f64 {
    0.5 * n as f64 - index.count_ones() as f64
}

fn x_product(n: usize, sign: f64) -> Vector {
    let amp = (0.5f64).powf(0.5 * n as f64);
    Vector::from_fn(1 << n, |i, _| {
        let flips = i.count_ones() as i32;
        C64::new(amp * sign.powi(flips), 0.0)
    })
}

/// ⊗_j (|e⟩ − |g⟩)/√2.
pub fn initial_state(n: usize) -> Result<StateVector> {
    StateVector::new(HilbertSpace::spins(n)?, x_product(n, -1.0))
}

/// ⊗_j (|e⟩ + |g⟩)/√2.
pub fn all_plus_state(n: usize) -> Result<StateVector> {
    StateVector::new(HilbertSpace::spins(n)?, x_product(n, 1.0))
}

/// e^{iπ/8} e^{−iπJ_z/2}.
pub fn local_correction(n: usize) -> Result<Operator> {
    let space = HilbertSpace::spins(n)?;
    let d = space.total_dim();
    let diag = Vector::from_fn(d, |i, _| C64::from_polar(1.0, PI / 8.0 - FRAC_PI_2 * jz_value(n, i)));
    Operator::new(space, Matrix::from_diagonal(&diag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug)]
pub struct GhzTarget {
    pub n: usize,
    pub parity: Parity,
    pub state: StateVector,
    pub prep_time: f64,
    /// Peak order Z: the state is reached at (2Z+1)·prep_time.
    pub order: usize,
    correction: Option<Operator>,
}

impl GhzTarget {
    pub fn peak_time(&self) -> f64 {
        (2 * self.order + 1) as f64 * self.prep_time
    }
}

/// The GHZ state reached at T = π/(2χ) under `couplings`.
pub fn target_state(n: usize, couplings: &EffectiveCouplings, include_a_phase: bool) -> Result<GhzTarget> {
    target_state_at(n, couplings, include_a_phase, 0)
}

/// The GHZ state reached at (2Z+1)·π/(2χ).
pub fn target_state_at(n: usize, couplings: &EffectiveCouplings, include_a_phase: bool, order: usize) -> Result<GhzTarget> {
    if n < 2 {
        return Err(Error::InvalidArgument("a GHZ target needs N ≥ 2".into()));
    }
    if !(couplings.chi.is_finite() && couplings.chi != 0.0) {
        return Err(Error::InvalidArgument(format!("χ = {} gives no preparation time", couplings.chi)));
    }
    let prep_time = FRAC_PI_2 / couplings.chi;
    let parity = if n % 2 == 0 { Parity::Even } else { Parity::Odd };
    let i = C64::new(0.0, 1.0);
    let relative = match parity {
        Parity::Even => i.powu(n as u32 - 1),
        Parity::Odd => -i.powu(n as u32),
    };
    let mut amps = (x_product(n, -1.0) + x_product(n, 1.0) * relative) * C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4);
    for (k, a) in amps.iter_mut().enumerate() {
        *a *= C64::from_polar(1.0, PI * order as f64 * jz_value(n, k).powi(2));
    }
    if include_a_phase {
        let rotation = couplings.jz_shift() * (2 * order + 1) as f64 * prep_time;
        let global = -PI * (0.5 * (n * n) as f64 + n as f64) / 4.0;
        for (k, a) in amps.iter_mut().enumerate() {
            *a *= C64::from_polar(1.0, global - rotation * jz_value(n, k));
        }
    }
    let correction = match parity {
        Parity::Even => None,
        Parity::Odd => Some(local_correction(n)?),
    };
    Ok(GhzTarget { n, parity, state: StateVector::new(HilbertSpace::spins(n)?, amps)?, prep_time, order, correction })
}

impl GhzTarget {
    /// ⟨ψ_T| C ρ C† |ψ_T⟩ with C applied for odd N only.
    pub fn fidelity(&self, rho_spin: &DensityMatrix) -> Result<f64> {
        match &self.correction {
            None => crate::operators::fidelity(rho_spin, &self.state),
            Some(c) => {
                let m = &c.matrix * &rho_spin.matrix * c.matrix.adjoint();
                crate::operators::fidelity(&DensityMatrix::unchecked(rho_spin.space, m)?, &self.state)
            }
        }
    }

    pub fn fidelity_pure(&self, psi: &StateVector) -> Result<f64> {
        self.fidelity(&DensityMatrix::from_pure(psi))
    }
}

/// Reduced spin state of a spin ⊗ boson state, viewed in the frame
/// co-rotating with Δ_q J_z at time t.
pub fn spin_state_in_frame(rho: &DensityMatrix, delta_q: f64, t: f64) -> DensityMatrix {
    let mut reduced = rho.spin_reduced();
    rotate_into_frame(&mut reduced.matrix, rho.space.spin_count, delta_q, t);
    reduced
}

pub fn pure_spin_state_in_frame(psi: &StateVector, delta_q: f64, t: f64) -> DensityMatrix {
    let c = psi.space.fock_cutoff;
    let ds = psi.space.spin_dim();
    let a = &psi.amplitudes;
    let mut m = Matrix::from_fn(ds, ds, |x, y| (0..c).map(|k| a[x * c + k] * a[y * c + k].conj()).sum());
    rotate_into_frame(&mut m, psi.space.spin_count, delta_q, t);
    DensityMatrix { space: psi.space.spin_part(), matrix: m }
}

fn rotate_into_frame(m: &mut Matrix, n: usize, delta_q: f64, t: f64) {
    for a in 0..m.nrows() {
        for b in 0..m.ncols() {
            m[(a, b)] *= C64::from_polar(1.0, delta_q * t * (jz_value(n, a) - jz_value(n, b)));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub time: f64,
    pub fidelity: f64,
}

/// Quadratic interpolation through the discrete maximum and its neighbours
/// among the samples with `lo ≤ t ≤ hi`; the maximum must be interior.
pub fn peak_in_window(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<Peak> {
    let idx: Vec<usize> = (0..times.len().min(values.len())).filter(|&i| times[i] >= lo && times[i] <= hi).collect();
    if idx.len() < 3 {
        return Err(Error::NoPeak(format!("fewer than three samples in [{lo}, {hi}]")));
    }
    let best = (0..idx.len()).max_by(|&a, &b| values[idx[a]].total_cmp(&values[idx[b]])).unwrap();
    if best == 0 || best == idx.len() - 1 {
        return Err(Error::NoPeak(format!("maximum sits on the edge of [{lo}, {hi}]")));
    }
    let (i0, i1, i2) = (idx[best - 1], idx[best], idx[best + 1]);
    let (x0, x1, x2) = (times[i0], times[i1], times[i2]);
    let (y0, y1, y2) = (values[i0], values[i1], values[i2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature < 0.0) {
        return Ok(Peak { time: x1, fidelity: y1 });
    }
    // Vertex of the Newton-form parabola y0 + d01(x−x0) + curvature(x−x0)(x−x1).
    let time = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    let time = time.clamp(x0, x2);
    let fidelity = y0 + d01 * (time - x0) + curvature * (time - x0) * (time - x1);
    Ok(Peak { time, fidelity })
}

/// The peak near χt = (2Z+1)π/2, searched within ±T/2.
pub fn peak_near(times: &[f64], values: &[f64], prep_time: f64, order: usize) -> Result<Peak> {
    let centre = (2 * order + 1) as f64 * prep_time;
    peak_in_window(times, values, centre - 0.5 * prep_time, centre + 0.5 * prep_time)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiFit {
    pub chi: f64,
    pub fidelity: f64,
}

/// Finds the χ whose target best matches the propagated state at π/(2χ).
///
/// `spin_state_at(t)` must return the spin state in the co-rotating frame.
/// Candidates cover [χ_lo, χ_hi] on a uniform grid of `samples` points,
/// followed by a golden-section refinement around the best one.
pub fn chi_fit_with<F>(
    n: usize,
    template: &EffectiveCouplings,
    bracket: (f64, f64),
    samples: usize,
    mut spin_state_at: F,
) -> Result<ChiFit>
where
    F: FnMut(f64) -> Result<DensityMatrix>,
{
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) || samples < 3 {
        return Err(Error::InvalidArgument(format!("bad χ bracket [{lo}, {hi}] with {samples} samples")));
    }
    let mut score = |chi: f64| -> Result<f64> {
        let target = target_state(n, &template.with_chi(chi), true)?;
        target.fidelity(&spin_state_at(target.prep_time)?)
    };
    let step = (hi - lo) / (samples - 1) as f64;
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        values.push(score(lo + step * k as f64)?);
    }
    let best = (0..samples).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    if best == 0 || best == samples - 1 {
        return Err(Error::NoPeak(format!("fidelity is largest at the edge of the χ bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo + step * (best - 1) as f64, lo + step * (best + 1) as f64);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (score(c)?, score(d)?);
    while (b - a) > 1e-12 * (a + b) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = score(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = score(d)?;
        }
    }
    let chi = 0.5 * (a + b);
    Ok(ChiFit { chi, fidelity: score(chi)? })
}

/// The default χ bracket: half the appendix value up to twice the main-text value.
pub fn default_chi_bracket(c: &EffectiveCouplings) -> (f64, f64) {
    let appendix = 2.0 * c.big_g * c.big_g * c.omega_m_tilde / (c.delta_plus * c.delta_minus);
    (0.5 * appendix, 6.0 * appendix)
}

/// χ fitted against closed-system propagation of the full squeezed-frame
/// Hamiltonian, with the magnon starting in vacuum.
pub fn chi_fit(p: &SystemParams, r: f64) -> Result<ChiFit> {
    let h = h_squeezed(p, r)?;
    let template = effective_couplings(p, r, ChiVariant::Appendix)?;
    if !template.is_dispersive() {
        return Err(Error::InvalidArgument(format!(
            "not dispersive: G/min|Δ±| = {:.3}",
            template.dispersive_ratio
        )));
    }
    let n = p.n_spins;
    let psi0 = initial_state(n)?.with_fock(p.fock_cutoff, 0)?;
    let eig = crate::linalg::hermitian_eigen(&h.matrix);
    let coeffs = eig.vectors.adjoint() * &psi0.amplitudes;
    let delta_q = template.delta_q();
    chi_fit_with(n, &template, default_chi_bracket(&template), 4000, |t| {
        let phased = Vector::from_fn(coeffs.len(), |k, _| coeffs[k] * C64::from_polar(1.0, -eig.values[k] * t));
        let psi = StateVector { space: psi0.space, amplitudes: &eig.vectors * phased };
        Ok(pure_spin_state_in_frame(&psi, delta_q, t))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub t: f64,
    pub chi_t: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityTrace {
    pub records: Vec<FidelityRecord>,
    pub couplings: EffectiveCouplings,
    pub prep_time: f64,
    pub peak_order: usize,
    pub truncation_flag: bool,
    /// Present for dissipative runs, which go through the master equation.
    pub diagnostics: Option<Diagnostics>,
}

impl FidelityTrace {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fidelity).collect()
    }

    pub fn peak(&self) -> Result<Peak> {
        peak_near(&self.times(), &self.fidelities(), self.prep_time, self.peak_order)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,chi_t,fidelity\n");
        for r in &self.records {
            out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", r.t, r.chi_t, r.fidelity));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    pub chi: ChiVariant,
    /// Which revival the fidelity is measured against.
    pub peak_order: usize,
    pub evolve: EvolveOptions,
    /// Stop once the fidelity has fallen well below its maximum at the chosen peak.
    pub stop_after_first_peak: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { chi: ChiVariant::Appendix, peak_order: 0, evolve: EvolveOptions::default(), stop_after_first_peak: false }
    }
}

/// Drop below the running maximum that marks the first peak as passed.
const PEAK_PASSED_DROP: f64 = 0.05;

/// Fidelity against the GHZ target along a full squeezed-frame run.
///
/// Dissipation-free runs are propagated exactly from the spectrum of H;
/// dissipative runs integrate the master equation with γ_m·m̂ and γ_q·σ̂_j⁻.
pub fn fidelity_trace(
    p: &SystemParams,
    r: f64,
    dissipative: bool,
    grid: &[f64],
    options: &TraceOptions,
) -> Result<FidelityTrace> {
    fidelity_trace_for(p, r, &h_squeezed(p, r)?, dissipative, grid, options)
}

/// As [`fidelity_trace`], with the target taken from (p, r) but the state
/// propagated under `h`, e.g. a squeezed-frame Hamiltonian with per-spin
/// detunings.
pub fn fidelity_trace_for(
    p: &SystemParams,
    r: f64,
    h: &Operator,
    dissipative: bool,
    grid: &[f64],
    options: &TraceOptions,
) -> Result<FidelityTrace> {
    if h.space != p.space()? {
        return Err(Error::Dimension("Hamiltonian does not match the parameter space".into()));
    }
    let couplings = effective_couplings(p, r, options.chi)?;
    let n = p.n_spins;
    let target = target_state_at(n, &couplings, true, options.peak_order)?;
    let prep_time = target.prep_time;
    let peak_time = target.peak_time();
    let delta_q = couplings.delta_q();
    let psi0 = initial_state(n)?.with_fock(p.fock_cutoff, 0)?;
    let mut records = Vec::with_capacity(grid.len());
    let mut best: f64 = 0.0;
    let mut keep_going = |t: f64, f: f64, records: &mut Vec<FidelityRecord>| {
        records.push(FidelityRecord { t, chi_t: couplings.chi * t, fidelity: f });
        if t >= peak_time - 0.5 * prep_time {
            best = best.max(f);
        }
        !(options.stop_after_first_peak && t > peak_time && f < best - PEAK_PASSED_DROP)
    };
    if dissipative {
        let channels: Vec<CollapseChannel> = dynamics::standard_channels(h.space, p.gamma_m, p.gamma_q)?;
        let rho0 = DensityMatrix::from_pure(&psi0);
        let traj = dynamics::evolve_observed(&rho0, h, &channels, grid, &options.evolve, |t, rho| {
            let f = target.fidelity(&spin_state_in_frame(rho, delta_q, t))?;
            Ok(keep_going(t, f, &mut records))
        })?;
        Ok(FidelityTrace {
            records,
            couplings,
            prep_time,
            peak_order: options.peak_order,
            truncation_flag: traj.truncation_flag,
            diagnostics: Some(traj.diagnostics),
        })
    } else {
        let states = dynamics::propagate_pure(&psi0, h, grid)?;
        let mut top: f64 = 0.0;
        let c = p.fock_cutoff;
        for (&t, psi) in grid.iter().zip(&states) {
            let f = target.fidelity(&pure_spin_state_in_frame(psi, delta_q, t))?;
            top = top.max(
                psi.amplitudes.iter().enumerate().filter(|(i, _)| i % c >= c - 2).map(|(_, a)| a.norm_sqr()).sum(),
            );
            if !keep_going(t, f, &mut records) {
                break;
            }
        }
        Ok(FidelityTrace {
            records,
            couplings,
            prep_time,
            peak_order: options.peak_order,
            truncation_flag: top > options.evolve.truncation_threshold,
            diagnostics: None,
        })
    }
}

/// Uniform grid over [0, span·T] with `points` samples.
pub fn prep_grid(prep_time: f64, span: f64, points: usize) -> Vec<f64> {
    let end = span * prep_time;
    (0..points).map(|k| end * k as f64 / (points - 1) as f64).collect()
}

/// Fidelity between the reduced spin state under h_truncated and the
/// h_effective evolution of the same initial spins, sampled on [0, horizon].
pub fn effective_agreement(
    p: &SystemParams,
    r: f64,
    couplings: &EffectiveCouplings,
    horizon: f64,
    samples: usize,
) -> Result<Vec<FidelityRecord>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("agreement sweep needs at least one interval".into()));
    }
    let n = p.n_spins;
    let spins0 = initial_state(n)?;
    let psi0 = spins0.with_fock(p.fock_cutoff, 0)?;
    let full = crate::linalg::hermitian_eigen(&crate::hamiltonians::h_truncated(p, r)?.matrix);
    let effective = crate::linalg::hermitian_eigen(&crate::hamiltonians::h_effective(n, couplings)?.matrix);
    let delta_q = couplings.delta_q();
    (0..=samples)
        .map(|k| {
            let t = horizon * k as f64 / samples as f64;
            let psi = StateVector { space: psi0.space, amplitudes: full.evolve(&psi0.amplitudes, t) };
            let eff = StateVector { space: spins0.space, amplitudes: effective.evolve(&spins0.amplitudes, t) };
            let fidelity = crate::operators::fidelity(&pure_spin_state_in_frame(&psi, delta_q, t), &eff)?;
            Ok(FidelityRecord { t, chi_t: couplings.chi * t, fidelity })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GhzSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub r: f64,
    pub dissipative: bool,
    pub chi_fitted: Option<f64>,
    pub first_peak_time: f64,
    pub first_peak_fidelity: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{couplings_from_frame, h_effective};
    use crate::linalg;
    use crate::operators::{collective_spin, dicke_state, BasisAxis, SpinAxis};
    use proptest::prelude::*;

    fn fig3_couplings() -> EffectiveCouplings {
        couplings_from_frame(1.0, 10.0, 60.0, ChiVariant::Appendix).unwrap()
    }

    fn evolve_effective(n: usize, c: &EffectiveCouplings, t: f64) -> StateVector {
        let h = h_effective(n, c).unwrap();
        let u = linalg::expm_hermitian(&h.matrix, t).unwrap();
        let psi = initial_state(n).unwrap();
        StateVector { space: psi.space, amplitudes: u * &psi.amplitudes }
    }

    #[test]
    fn initial_state_examples() {
        let one = initial_state(1).unwrap();
        assert!((one.amplitudes[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((one.amplitudes[1].re + FRAC_1_SQRT_2).abs() < 1e-15);
        for n in 1..=4 {
            let psi = initial_state(n).unwrap();
            let jx = collective_spin(n, SpinAxis::X).unwrap();
            let out = &jx.matrix * &psi.amplitudes;
            assert!((out - psi.amplitudes.scale(-0.5 * n as f64)).norm() < 1e-12);
            let dicke = dicke_state(n, BasisAxis::X, -0.5 * n as f64).unwrap();
            assert!((psi.inner(&dicke).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bare_targets_have_expected_relative_phase() {
        for (n, phase) in [(2, C64::new(0.0, 1.0)), (3, C64::new(0.0, 1.0)), (4, C64::new(0.0, -1.0))] {
            let t = target_state(n, &fig3_couplings(), false).unwrap();
            let cm = initial_state(n).unwrap().inner(&t.state);
            let cp = all_plus_state(n).unwrap().inner(&t.state);
            assert!((cm.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
            assert!((cp.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
            assert!((cp / cm - phase).norm() < 1e-12);
        }
        assert!(target_state(1, &fig3_couplings(), true).is_err());
    }

    #[test]
    fn effective_propagation_reaches_the_target() {
        let c = fig3_couplings();
        for n in 2..=5 {
            let target = target_state(n, &c, true).unwrap();
            let psi = evolve_effective(n, &c, target.prep_time);
            let f = target.fidelity_pure(&psi).unwrap();
            assert!((f - 1.0).abs() < 1e-8, "N={n}: {f}");
        }
    }

    #[test]
    fn main_text_chi_misses_the_target() {
        let app = fig3_couplings();
        let main = couplings_from_frame(1.0, 10.0, 60.0, ChiVariant::MainText).unwrap();
        let target = target_state(2, &main, true).unwrap();
        let f = target.fidelity_pure(&evolve_effective(2, &app, target.prep_time)).unwrap();
        assert!(f < 0.9, "{f}");
    }

    #[test]
    fn correction_properties() {
        for n in 1..=4 {
            let c = local_correction(n).unwrap();
            let id = &c.matrix * c.matrix.adjoint();
            assert!(linalg::max_abs(&(id - Matrix::identity(1 << n, 1 << n))) < 1e-12);
            let jz = collective_spin(n, SpinAxis::Z).unwrap();
            assert!(linalg::max_abs(&c.commutator(&jz).matrix) < 1e-12);
        }
        // On the odd-N evolved state the correction produces equal x-basis weights.
        let cpl = fig3_couplings();
        for n in [3, 5] {
            let t = target_state(n, &cpl, true).unwrap();
            let psi = evolve_effective(n, &cpl, t.prep_time).apply(&local_correction(n).unwrap()).unwrap();
            let cm = initial_state(n).unwrap().inner(&psi).norm();
            let cp = all_plus_state(n).unwrap().inner(&psi).norm();
            assert!((cm - FRAC_1_SQRT_2).abs() < 1e-9 && (cp - FRAC_1_SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn later_revivals_match_their_targets() {
        let c = fig3_couplings();
        for n in 2..=5 {
            for order in 0..3 {
                let target = target_state_at(n, &c, true, order).unwrap();
                let psi = evolve_effective(n, &c, target.peak_time());
                let f = target.fidelity_pure(&psi).unwrap();
                assert!((f - 1.0).abs() < 1e-8, "N={n} Z={order}: {f}");
            }
        }
        // For even N consecutive revivals are different GHZ states.
        let t0 = target_state_at(2, &c, false, 0).unwrap();
        let t1 = target_state_at(2, &c, false, 1).unwrap();
        assert!(t0.state.inner(&t1.state).norm() < 1e-12);
    }

    #[test]
    fn effective_peaks_repeat_with_period_pi_over_chi() {
        let c = fig3_couplings();
        let h = h_effective(2, &c).unwrap();
        let psi0 = initial_state(2).unwrap();
        let period = PI / c.chi;
        let grid: Vec<f64> = (0..=1400).map(|k| 3.5 * period * k as f64 / 1400.0).collect();
        let states = dynamics::propagate_pure(&psi0, &h, &grid).unwrap();
        let peaks: Vec<Peak> = (0..3)
            .map(|order| {
                let target = target_state_at(2, &c, true, order).unwrap();
                let f: Vec<f64> = states.iter().map(|s| target.fidelity_pure(s).unwrap()).collect();
                peak_near(&grid, &f, target.prep_time, order).unwrap()
            })
            .collect();
        for w in peaks.windows(2) {
            assert!(((w[1].time - w[0].time) - period).abs() < 1e-4 * period);
        }
        for p in &peaks {
            assert!((p.fidelity - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn peak_interpolation_recovers_a_parabola() {
        let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| 0.9 - 3.0 * (t - 1.234f64).powi(2)).collect();
        let p = peak_in_window(&times, &values, 0.0, 2.0).unwrap();
        assert!((p.time - 1.234).abs() < 1e-12);
        assert!((p.fidelity - 0.9).abs() < 1e-12);
        let rising: Vec<f64> = times.clone();
        assert!(matches!(peak_in_window(&times, &rising, 0.0, 2.0), Err(Error::NoPeak(_))));
        assert!(peak_in_window(&times, &values, 5.0, 6.0).is_err());
    }

    #[test]
    fn chi_fit_recovers_the_effective_chi() {
        let c = fig3_couplings().with_chi(0.0061);
        let h = h_effective(2, &c).unwrap();
        let psi0 = initial_state(2).unwrap();
        let fit = chi_fit_with(2, &c, default_chi_bracket(&c), 400, |t| {
            let psi = &dynamics::propagate_pure(&psi0, &h, &[t])?[0];
            Ok(DensityMatrix::from_pure(psi))
        })
        .unwrap();
        assert!((fit.chi / 0.0061 - 1.0).abs() < 1e-6, "{}", fit.chi);
        assert!((fit.fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frame_rotation_undoes_bare_jz_precession() {
        let n = 2;
        let jz = collective_spin(n, SpinAxis::Z).unwrap();
        let psi0 = initial_state(n).unwrap();
        let t = 0.37;
        let psi = &dynamics::propagate_pure(&psi0, &jz.scale(60.0), &[t]).unwrap()[0];
        let rho = pure_spin_state_in_frame(psi, 60.0, t);
        assert!(linalg::max_abs(&(rho.matrix - psi0.projector())) < 1e-12);
    }

    proptest! {
        #[test]
        fn fidelity_ignores_global_phase(phase in 0.0f64..6.3, n in 2usize..5) {
            let target = target_state(n, &fig3_couplings(), true).unwrap();
            let psi = evolve_effective(n, &fig3_couplings(), 0.8 * target.prep_time);
            let rotated = StateVector { space: psi.space, amplitudes: psi.amplitudes.clone() * C64::from_polar(1.0, phase) };
            let mut shifted = target.clone();
            shifted.state.amplitudes *= C64::from_polar(1.0, -2.0 * phase);
            prop_assert!((target.fidelity_pure(&psi).unwrap() - target.fidelity_pure(&rotated).unwrap()).abs() < 1e-14);
            prop_assert!((target.fidelity_pure(&psi).unwrap() - shifted.fidelity_pure(&psi).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn targets_are_balanced(n in 2usize..7) {
            let t = target_state(n, &fig3_couplings(), false).unwrap();
            let cm = initial_state(n).unwrap().inner(&t.state).norm();
            let cp = all_plus_state(n).unwrap().inner(&t.state).norm();
            prop_assert!((cm - FRAC_1_SQRT_2).abs() < 1e-12);
            prop_assert!((cp - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn agreement_is_exact_without_coupling() {
        let p = SystemParams::from_squeezed_frame(2, 60.0, 10.0, 1e-7, 3.0, 0.0, 0.0, 4);
        let c = effective_couplings(&p, 3.0, ChiVariant::Appendix).unwrap();
        let trace = effective_agreement(&p, 3.0, &c, 100.0, 50).unwrap();
        let gap = trace.iter().map(|x| 1.0 - x.fidelity).fold(0.0, f64::max);
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn agreement_degrades_outside_the_dispersive_regime() {
        let gap = |big_g: f64| {
            let p = SystemParams::from_squeezed_frame(2, 60.0, 10.0, big_g, 3.0, 0.0, 0.0, 12);
            let c = effective_couplings(&p, 3.0, ChiVariant::Appendix).unwrap();
            let trace = effective_agreement(&p, 3.0, &c, c.prep_time(), 300).unwrap();
            trace.iter().map(|x| 1.0 - x.fidelity).fold(0.0, f64::max)
        };
        let (good, bad) = (gap(1.0), gap(25.0));
        assert!(good < 0.01 && bad > 10.0 * good, "{good} {bad}");
    }
}
