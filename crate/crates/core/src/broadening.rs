//! Inhomogeneous broadening of the spin transition frequencies.
//!
//! A profile assigns each spin a signed detuning δ_j. Its strength is the
//! scalar Δω = Σ|δ_j|/√N. The collective (superradiant) mode
//! b = Σ a_j/√N couples to the magnon, while ĉ = Σ δ_j a_j / Δω and
//! d̂ = Σ δ_j² a_j / Δω² carry the broadening away from it.

use crate::ghz::{self, FidelityTrace, TraceOptions};
use crate::hamiltonians::{gap_values, h_inhomogeneous, h_squeezed, EffectiveCouplings, SystemParams};
use crate::operators::{site_operator, half_pauli, HilbertSpace, Operator, SpinAxis, StateVector};
use crate::{linalg, Error, Result, Vector, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningScheme {
    /// Evenly spaced signed detunings symmetric about zero.
    SymmetricLinear,
    /// ±δ with alternating signs, δ = Δω/√N.
    Alternating,
    /// Explicit signed detunings; Δω must agree with them.
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetuningProfile {
    pub deltas: Vec<f64>,
    pub signs: Vec<f64>,
    pub delta_omega: f64,
}

impl DetuningProfile {
    pub fn n(&self) -> usize {
        self.deltas.len()
    }

    pub fn signed(&self) -> Vec<f64> {
        self.deltas.iter().zip(&self.signs).map(|(d, s)| d * s).collect()
    }

    fn from_signed(signed: &[f64], delta_omega: f64) -> Self {
        DetuningProfile {
            deltas: signed.iter().map(|d| d.abs()).collect(),
            signs: signed.iter().map(|d| if *d < 0.0 { -1.0 } else { 1.0 }).collect(),
            delta_omega,
        }
    }
}

pub fn detuning_profile(n: usize, delta_omega: f64, scheme: &DetuningScheme) -> Result<DetuningProfile> {
    if n == 0 {
        return Err(Error::InvalidArgument("a profile needs N ≥ 1".into()));
    }
    if !(delta_omega >= 0.0) || !delta_omega.is_finite() {
        return Err(Error::InvalidArgument(format!("Δω = {delta_omega} must be finite and ≥ 0")));
    }
    let root_n = (n as f64).sqrt();
    let signed: Vec<f64> = match scheme {
        DetuningScheme::SymmetricLinear => {
            if n == 1 {
                return Err(Error::InvalidArgument("a symmetric profile needs N ≥ 2".into()));
            }
            let shape: Vec<f64> = (0..n).map(|j| -1.0 + 2.0 * j as f64 / (n - 1) as f64).collect();
            let total: f64 = shape.iter().map(|x| x.abs()).sum();
            shape.iter().map(|x| x * root_n * delta_omega / total).collect()
        }
        DetuningScheme::Alternating => {
            let delta = delta_omega / root_n;
            (0..n).map(|j| if j % 2 == 0 { delta } else { -delta }).collect()
        }
        DetuningScheme::Custom(values) => {
            if values.len() != n {
                return Err(Error::Dimension(format!("{} detunings for {n} spins", values.len())));
            }
            let implied = values.iter().map(|d| d.abs()).sum::<f64>() / root_n;
            if (implied - delta_omega).abs() > 1e-12 * delta_omega.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "custom detunings imply Δω = {implied}, not {delta_omega}"
                )));
            }
            values.clone()
        }
    };
    Ok(DetuningProfile::from_signed(&signed, delta_omega))
}

/// Mode coefficients over the spin-boson modes â_j.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeVectors {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn mode_operators(profile: &DetuningProfile) -> Result<ModeVectors> {
    let w = profile.delta_omega;
    if w == 0.0 {
        return Err(Error::InvalidArgument("homogeneous profile: the ĉ and d̂ modes are undefined".into()));
    }
    let n = profile.n();
    let signed = profile.signed();
    Ok(ModeVectors {
        b: vec![1.0 / (n as f64).sqrt(); n],
        c: signed.iter().map(|d| d / w).collect(),
        d: signed.iter().map(|d| d * d / (w * w)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Protection {
    /// Δ_gap/Δω.
    Ratio(f64),
    /// Δω = 0.
    Full,
}

pub fn protection_ratio(p: &SystemParams, c: &EffectiveCouplings, profile: &DetuningProfile) -> Result<Protection> {
    let gap = gap_values(p.delta_q(), c)?;
    if profile.delta_omega == 0.0 {
        return Ok(Protection::Full);
    }
    Ok(Protection::Ratio(gap.delta_gap / profile.delta_omega))
}

/// h_squeezed plus Σ_j δ_j σ_z^j/2.
pub fn h_detuned(p: &SystemParams, r: f64, profile: &DetuningProfile) -> Result<Operator> {
    if profile.n() != p.n_spins {
        return Err(Error::Dimension(format!("{}-spin profile for {} spins", profile.n(), p.n_spins)));
    }
    let mut h = h_squeezed(p, r)?;
    let sz = half_pauli(SpinAxis::Z);
    for (j, delta) in profile.signed().iter().enumerate() {
        if *delta != 0.0 {
            h = h + site_operator(p.n_spins, j, &sz)?.with_boson(p.fock_cutoff)?.scale(*delta);
        }
    }
    Ok(h)
}

/// Single-excitation state Σ_j v_j σ_j⁺|g…g⟩ ⊗ |0⟩.
fn single_excitation(n: usize, cutoff: usize, v: &[f64]) -> Result<StateVector> {
    let ground = StateVector::basis(HilbertSpace::spins(n)?, (1 << n) - 1)?;
    let mut amps = Vector::zeros(1 << n);
    for (j, c) in v.iter().enumerate() {
        amps += (&site_operator(n, j, &half_pauli(SpinAxis::Plus))?.matrix * &ground.amplitudes) * C64::new(*c, 0.0);
    }
    StateVector::new(ground.space, amps)?.with_fock(cutoff, 0)
}

/// ⟨c|H|b⟩ on the magnon vacuum, with ĉ left unnormalized as in [`mode_operators`].
pub fn bc_coupling(p: &SystemParams, r: f64, profile: &DetuningProfile) -> Result<f64> {
    let modes = mode_operators(profile)?;
    let h = h_inhomogeneous(p, &profile.signed(), r)?;
    let norm_c: f64 = modes.c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let unit_c: Vec<f64> = modes.c.iter().map(|x| x / norm_c).collect();
    let b = single_excitation(p.n_spins, p.fock_cutoff, &modes.b)?;
    let c = single_excitation(p.n_spins, p.fock_cutoff, &unit_c)?;
    Ok(c.amplitudes.dotc(&(&h.matrix * &b.amplitudes)).re * norm_c)
}

/// Dressed single-excitation energies of the homogeneous bosonized frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapCheck {
    /// E(superradiant) − E(ground) − Δ_q.
    pub excitation_shift: f64,
    /// E(superradiant) − E(subradiant); absent for a single spin.
    pub superradiant_splitting: Option<f64>,
    pub delta_gap: f64,
    pub delta_shift: f64,
}

/// Diagonalizes h_inhomogeneous at Δω = 0 and reads off the dressed levels
/// with the largest overlap on |G,0⟩, |B,0⟩ and a subradiant |C,0⟩.
pub fn gap_check(p: &SystemParams, r: f64) -> Result<GapCheck> {
    let n = p.n_spins;
    let h = h_inhomogeneous(p, &vec![0.0; n], r)?;
    let frame = p.squeezed_frame(r);
    let couplings = crate::hamiltonians::couplings_from_frame(
        frame.big_g,
        frame.omega_m_tilde,
        frame.delta_q,
        crate::hamiltonians::ChiVariant::Appendix,
    )?;
    let gap = gap_values(frame.delta_q, &couplings)?;
    let eig = linalg::hermitian_eigen(&h.matrix);
    let level = |psi: &StateVector| {
        let ov = eig.vectors.adjoint() * &psi.amplitudes;
        let k = (0..ov.len()).max_by(|&a, &b| ov[a].norm().total_cmp(&ov[b].norm())).unwrap();
        eig.values[k]
    };
    let ground = StateVector::basis(HilbertSpace::spins(n)?, (1 << n) - 1)?.with_fock(p.fock_cutoff, 0)?;
    let bright = single_excitation(n, p.fock_cutoff, &vec![1.0; n])?;
    let e_bright = level(&bright);
    let superradiant_splitting = if n >= 2 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v[1] = -1.0;
        Some(e_bright - level(&single_excitation(n, p.fock_cutoff, &v)?))
    } else {
        None
    };
    Ok(GapCheck {
        excitation_shift: e_bright - level(&ground) - frame.delta_q,
        superradiant_splitting,
        delta_gap: gap.delta_gap,
        delta_shift: gap.delta_shift,
    })
}

/// Squeezed-frame scalars held fixed across a fidelity table. G grows as
/// e^{r} with the bare coupling g, while ω̃_m and Δ_q stay at fixed
/// multiples of the enhanced coupling at `r_ref`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSetup {
    pub n_spins: usize,
    pub g: f64,
    pub r_ref: f64,
    pub omega_m_tilde_ratio: f64,
    pub delta_q_ratio: f64,
    pub gamma_m: f64,
    pub gamma_q: f64,
    pub fock_cutoff: usize,
    pub dissipative: bool,
}

impl TableSetup {
    pub fn big_g(&self, r: f64) -> f64 {
        0.5 * self.g * r.exp()
    }

    pub fn params(&self, r: f64) -> SystemParams {
        let g_ref = self.big_g(self.r_ref);
        SystemParams::from_squeezed_frame(
            self.n_spins,
            self.delta_q_ratio * g_ref,
            self.omega_m_tilde_ratio * g_ref,
            self.big_g(r),
            r,
            self.gamma_m,
            self.gamma_q,
            self.fock_cutoff,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCell {
    pub r: f64,
    pub delta_omega: f64,
    pub fidelity: f64,
    pub peak_time: f64,
    pub prep_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityTable {
    pub r_values: Vec<f64>,
    pub delta_omega_values: Vec<f64>,
    /// cells[i][k] is Δω_i at r_k.
    pub cells: Vec<Vec<TableCell>>,
}

impl FidelityTable {
    pub fn fidelity(&self, i: usize, k: usize) -> f64 {
        self.cells[i][k].fidelity
    }

    /// `delta_omega_MHz,r3,r3_5,r4` for the r values at hand; Δω is written
    /// in `unit` (the table's own Δω unit).
    pub fn to_csv(&self, to_unit: impl Fn(f64) -> f64) -> String {
        let mut out = String::from("delta_omega_MHz");
        for r in &self.r_values {
            out.push_str(&format!(",r{}", format!("{r}").replace('.', "_")));
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            out.push_str(&format!("{}", to_unit(self.delta_omega_values[i])));
            for cell in row {
                out.push_str(&format!(",{:.6}", cell.fidelity));
            }
            out.push('\n');
        }
        out
    }
}

/// Samples per prep time on the uniform trace grid.
const TABLE_GRID_POINTS: usize = 1501;

pub fn table_cell(setup: &TableSetup, r: f64, delta_omega: f64, scheme: &DetuningScheme, options: &TraceOptions) -> Result<(TableCell, FidelityTrace)> {
    let p = setup.params(r);
    let profile = detuning_profile(setup.n_spins, delta_omega, scheme)?;
    let h = h_detuned(&p, r, &profile)?;
    let couplings = crate::hamiltonians::effective_couplings(&p, r, options.chi)?;
    let prep_time = couplings.prep_time();
    let grid = ghz::prep_grid(prep_time, 1.5, TABLE_GRID_POINTS);
    let trace = ghz::fidelity_trace_for(&p, r, &h, setup.dissipative, &grid, options)?;
    let peak = trace.peak()?;
    Ok((TableCell { r, delta_omega, fidelity: peak.fidelity, peak_time: peak.time, prep_time }, trace))
}

pub fn fidelity_table(
    setup: &TableSetup,
    r_values: &[f64],
    delta_omega_values: &[f64],
    scheme: &DetuningScheme,
    options: &TraceOptions,
) -> Result<FidelityTable> {
    let cells = delta_omega_values
        .iter()
        .map(|&w| r_values.iter().map(|&r| table_cell(setup, r, w, scheme, options).map(|c| c.0)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    Ok(FidelityTable { r_values: r_values.to_vec(), delta_omega_values: delta_omega_values.to_vec(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{couplings_from_frame, ChiVariant};
    use proptest::prelude::*;

    fn fig3(n: usize) -> SystemParams {
        SystemParams::from_squeezed_frame(n, 60.0, 10.0, 1.0, 3.0, 0.0, 0.0, 6)
    }

    #[test]
    fn zero_width_profile_is_zero() {
        for scheme in [DetuningScheme::SymmetricLinear, DetuningScheme::Alternating] {
            let p = detuning_profile(3, 0.0, &scheme).unwrap();
            assert!(p.signed().iter().all(|d| *d == 0.0));
        }
    }

    #[test]
    fn alternating_example() {
        let p = detuning_profile(4, 2.0, &DetuningScheme::Alternating).unwrap();
        assert_eq!(p.deltas, vec![1.0; 4]);
        assert_eq!(p.signs, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn symmetric_linear_three_spins() {
        let p = detuning_profile(3, 0.5, &DetuningScheme::SymmetricLinear).unwrap();
        let s = p.signed();
        assert!((s[0] + s[2]).abs() < 1e-15 && s[1] == 0.0 && s[2] > 0.0);
        let recomputed = s.iter().map(|d| d.abs()).sum::<f64>() / 3f64.sqrt();
        assert!((recomputed - 0.5).abs() < 1e-15);
    }

    #[test]
    fn custom_profile_is_checked() {
        let ok = detuning_profile(2, 2f64.sqrt(), &DetuningScheme::Custom(vec![1.0, -1.0])).unwrap();
        assert_eq!(ok.signs, vec![1.0, -1.0]);
        assert!(detuning_profile(2, 1.0, &DetuningScheme::Custom(vec![1.0, -1.0])).is_err());
        assert!(detuning_profile(3, 1.0, &DetuningScheme::Custom(vec![1.0])).is_err());
        assert!(detuning_profile(3, -1.0, &DetuningScheme::Alternating).is_err());
    }

    #[test]
    fn modes_need_broadening() {
        let flat = detuning_profile(2, 0.0, &DetuningScheme::Alternating).unwrap();
        assert!(mode_operators(&flat).is_err());
        let alt = detuning_profile(2, 1.0, &DetuningScheme::Alternating).unwrap();
        let m = mode_operators(&alt).unwrap();
        let dot: f64 = m.b.iter().zip(&m.c).map(|(x, y)| x * y).sum();
        assert_eq!(dot, 0.0);
        assert!((m.c[0] + m.c[1]).abs() < 1e-15 && m.c[0] > 0.0);
    }

    #[test]
    fn bc_element_matches_mode_algebra() {
        for (n, scheme) in [
            (2, DetuningScheme::Alternating),
            (3, DetuningScheme::SymmetricLinear),
            (4, DetuningScheme::Alternating),
            (4, DetuningScheme::SymmetricLinear),
        ] {
            let w = 0.37;
            let profile = detuning_profile(n, w, &scheme).unwrap();
            let modes = mode_operators(&profile).unwrap();
            let norm2: f64 = modes.c.iter().map(|x| x * x).sum();
            let expected = w * norm2 / (n as f64).sqrt();
            let got = bc_coupling(&fig3(n), 3.0, &profile).unwrap();
            assert!((got - expected).abs() < 1e-6 * expected, "N={n}: {got} vs {expected}");
        }
    }

    #[test]
    fn protection_examples() {
        let p = fig3(3);
        let c = couplings_from_frame(1.0, 10.0, 60.0, ChiVariant::Appendix).unwrap();
        let flat = detuning_profile(3, 0.0, &DetuningScheme::SymmetricLinear).unwrap();
        assert_eq!(protection_ratio(&p, &c, &flat).unwrap(), Protection::Full);
        let ratio = |w: f64| match protection_ratio(&p, &c, &detuning_profile(3, w, &DetuningScheme::SymmetricLinear).unwrap()).unwrap() {
            Protection::Ratio(x) => x,
            Protection::Full => f64::INFINITY,
        };
        let a = ratio(0.18);
        assert!((a - (120.0 / 3500.0) / 0.18).abs() < 1e-12);
        assert!((ratio(0.36) - a / 2.0).abs() < 1e-12);
    }

    #[test]
    fn detuned_hamiltonian_without_broadening_is_squeezed() {
        let p = fig3(2);
        let flat = detuning_profile(2, 0.0, &DetuningScheme::Alternating).unwrap();
        assert_eq!(h_detuned(&p, 3.0, &flat).unwrap().matrix, h_squeezed(&p, 3.0).unwrap().matrix);
        let wrong = detuning_profile(3, 0.0, &DetuningScheme::Alternating).unwrap();
        assert!(h_detuned(&p, 3.0, &wrong).is_err());
    }

    #[test]
    fn single_spin_gap_matches_formula() {
        let g = gap_check(&fig3(1), 3.0).unwrap();
        assert!(g.superradiant_splitting.is_none());
        assert!((g.excitation_shift - g.delta_gap).abs() / g.delta_gap < 0.01);
    }

    #[test]
    fn collective_splitting_tracks_the_magnon_side_shift() {
        // Second-order result: E(B) − E(C) = G²/(Δq−ω̃) − G²/(Δq+ω̃), the same as the Δ formula.
        for n in [2, 3] {
            let g = gap_check(&fig3(n), 3.0).unwrap();
            let split = g.superradiant_splitting.unwrap();
            assert!((split - g.delta_shift).abs() / g.delta_shift < 0.01, "N={n}: {split}");
        }
    }

    #[test]
    fn table_setup_scales_coupling_with_r() {
        let setup = TableSetup {
            n_spins: 3,
            g: 0.2,
            r_ref: 3.0,
            omega_m_tilde_ratio: 10.0,
            delta_q_ratio: 60.0,
            gamma_m: 0.0,
            gamma_q: 0.0,
            fock_cutoff: 4,
            dissipative: false,
        };
        let f3 = setup.params(3.0).squeezed_frame(3.0);
        let f4 = setup.params(4.0).squeezed_frame(4.0);
        assert!((f4.big_g / f3.big_g - 1f64.exp()).abs() < 1e-12);
        assert!((f4.omega_m_tilde - f3.omega_m_tilde).abs() < 1e-9);
        assert!((f4.delta_q - f3.delta_q).abs() < 1e-12);
    }

    #[test]
    fn table_csv_layout() {
        let cell = |r: f64, w: f64, f: f64| TableCell { r, delta_omega: w, fidelity: f, peak_time: 1.0, prep_time: 1.0 };
        let t = FidelityTable {
            r_values: vec![3.0, 3.5, 4.0],
            delta_omega_values: vec![0.0, 0.18],
            cells: vec![
                vec![cell(3.0, 0.0, 0.9), cell(3.5, 0.0, 0.8), cell(4.0, 0.0, 0.7)],
                vec![cell(3.0, 0.18, 0.6), cell(3.5, 0.18, 0.5), cell(4.0, 0.18, 0.4)],
            ],
        };
        let csv = t.to_csv(|w| w);
        assert_eq!(csv.lines().next().unwrap(), "delta_omega_MHz,r3,r3_5,r4");
        assert_eq!(csv.lines().nth(2).unwrap(), "0.18,0.600000,0.500000,0.400000");
    }

    proptest! {
        #[test]
        fn profile_reproduces_delta_omega(n in 2usize..7, w in 0.0f64..5.0, alt in any::<bool>()) {
            let scheme = if alt { DetuningScheme::Alternating } else { DetuningScheme::SymmetricLinear };
            let p = detuning_profile(n, w, &scheme).unwrap();
            let implied = p.deltas.iter().sum::<f64>() / (n as f64).sqrt();
            prop_assert!((implied - w).abs() <= 1e-12 * w.max(1.0));
            prop_assert!(p.deltas.iter().all(|d| *d >= 0.0));
        }

        #[test]
        fn b_c_overlap_formula(n in 2usize..7, w in 0.1f64..5.0, alt in any::<bool>()) {
            let scheme = if alt { DetuningScheme::Alternating } else { DetuningScheme::SymmetricLinear };
            let p = detuning_profile(n, w, &scheme).unwrap();
            let m = mode_operators(&p).unwrap();
            let dot: f64 = m.b.iter().zip(&m.c).map(|(x, y)| x * y).sum();
            let formula = p.signed().iter().sum::<f64>() / ((n as f64).sqrt() * w);
            prop_assert!((dot - formula).abs() < 1e-12);
        }
    }
}
