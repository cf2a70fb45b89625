//! Hamiltonian frames of the spin–magnon system and their scalar couplings.
//!
//! Frames, in the frame rotating at the drive frequency:
//!
//! * linearized: Δ_q J_z + Δ_m m†m − ½𝒦(m² + m†²) + g(J₊m + J₋m†)
//! * squeezed: Δ_q J_z + ω̃ m†m + G(J₊+J₋)(m+m†) + G e^{−2r}(J₊−J₋)(m−m†)
//! * truncated: the squeezed frame without its e^{−2r} term
//!
//! The squeezed frame is the image U·H_L·U† under U = exp[r(m² − m†²)/2],
//! for which U m U† = m cosh r + m† sinh r. Writing the coupling as
//! ½g[(J₊+J₋)(m+m†) + (J₊−J₋)(m−m†)] shows that the enhanced coupling is
//! G = g e^{r}/2, and the image also carries the c-number (ω̃ − Δ_m)/2.

use crate::operators::{
    boson_matrix, collective_spin, site_operator, total_spin_squared, half_pauli, squeeze_rows,
    BosonKind, HilbertSpace, Operator, SpinAxis,
};
use crate::steady_state::kappa_for_squeezing;
use crate::units::deserialize_frequency;
use crate::{linalg, Error, Matrix, Result, C64};
use serde::{Deserialize, Serialize};

const HERMITIAN_TOL: f64 = 1e-12;

/// Physical parameters; frequencies are angular (rad/μs internally).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_spins: usize,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub omega_q: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub omega_m: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub omega_d: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub g: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub kerr_k: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub drive_amp: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub gamma_m: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    pub gamma_q: f64,
    pub fock_cutoff: usize,
    #[serde(default)]
    pub squeezing_r: Option<f64>,
}

impl SystemParams {
    /// Parameters specified directly by their squeezed-frame values.
    ///
    /// The drive sits at zero so that ω_q = Δ_q and ω_m = δ_m, and the bare
    /// coupling and magnon detuning are back-computed from (G, ω̃, r).
    #[allow(clippy::too_many_arguments)]
    pub fn from_squeezed_frame(
        n_spins: usize,
        delta_q: f64,
        omega_m_tilde: f64,
        big_g: f64,
        r: f64,
        gamma_m: f64,
        gamma_q: f64,
        fock_cutoff: usize,
    ) -> Self {
        let big_delta = omega_m_tilde * (2.0 * r).cosh();
        let delta_m = big_delta * (1.0 + 2.0 * (2.0 * r).tanh());
        SystemParams {
            n_spins,
            omega_q: delta_q,
            omega_m: delta_m,
            omega_d: 0.0,
            g: 2.0 * big_g * (-r).exp(),
            kerr_k: 0.0,
            drive_amp: 0.0,
            gamma_m,
            gamma_q,
            fock_cutoff,
            squeezing_r: Some(r),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_q, self.omega_m, self.omega_d, self.g, self.kerr_k, self.drive_amp, self.gamma_m,
            self.gamma_q,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite frequency".into()));
        }
        if self.n_spins == 0 {
            return Err(Error::InvalidArgument("n_spins must be ≥ 1".into()));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::InvalidArgument("fock_cutoff must be ≥ 2".into()));
        }
        if !(self.g > 0.0) {
            return Err(Error::InvalidArgument("g must be positive".into()));
        }
        if self.gamma_m < 0.0 || self.gamma_q < 0.0 {
            return Err(Error::InvalidArgument("decay rates must be ≥ 0".into()));
        }
        HilbertSpace::new(self.n_spins, self.fock_cutoff)?;
        Ok(())
    }

    pub fn delta_q(&self) -> f64 {
        self.omega_q - self.omega_d
    }

    pub fn delta_m(&self) -> f64 {
        self.omega_m - self.omega_d
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.n_spins, self.fock_cutoff)
    }

    pub fn squeezed_frame(&self, r: f64) -> SqueezedFrame {
        let kappa = kappa_for_squeezing(r, self.delta_m());
        let big_delta = self.delta_m() - 2.0 * kappa;
        SqueezedFrame {
            r,
            kappa,
            effective_detuning: big_delta,
            omega_m_tilde: big_delta / (2.0 * r).cosh(),
            big_g: 0.5 * self.g * r.exp(),
            minor_g: 0.5 * self.g * (-r).exp(),
            delta_q: self.delta_q(),
        }
    }
}

/// Scalars of the squeezed frame at a given r.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqueezedFrame {
    pub r: f64,
    pub kappa: f64,
    /// Δ_m = δ_m − 2𝒦.
    pub effective_detuning: f64,
    pub omega_m_tilde: f64,
    /// Coefficient of (J₊+J₋)(m+m†).
    pub big_g: f64,
    /// Coefficient of (J₊−J₋)(m−m†).
    pub minor_g: f64,
    pub delta_q: f64,
}

impl SqueezedFrame {
    /// The c-number by which U·H_L·U† exceeds [`h_squeezed`].
    pub fn offset(&self) -> f64 {
        0.5 * (self.omega_m_tilde - self.effective_detuning)
    }
}

pub fn squeezed_frame_offset(p: &SystemParams, r: f64) -> f64 {
    p.squeezed_frame(r).offset()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub mu0: f64,
    pub k_an: f64,
    pub gamma_gyro: f64,
    pub m_sat: f64,
    pub v_m: f64,
}

/// K = 2µ0K_anγ²/(M²V_m²).
pub fn kerr_coefficient(m: &MaterialParams) -> Result<f64> {
    if [m.mu0, m.k_an, m.gamma_gyro, m.m_sat, m.v_m].iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument("material constants must be positive".into()));
    }
    Ok(2.0 * m.mu0 * m.k_an * m.gamma_gyro.powi(2) / (m.m_sat.powi(2) * m.v_m.powi(2)))
}

fn spin_boson(space: HilbertSpace, spin: &Matrix, boson: &Matrix) -> Operator {
    Operator { space, matrix: linalg::kron(spin, boson) }
}

struct SpinSet {
    jz: Matrix,
    jp: Matrix,
    jm: Matrix,
}

fn spins(n: usize) -> Result<SpinSet> {
    Ok(SpinSet {
        jz: collective_spin(n, SpinAxis::Z)?.matrix,
        jp: collective_spin(n, SpinAxis::Plus)?.matrix,
        jm: collective_spin(n, SpinAxis::Minus)?.matrix,
    })
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn h_linearized(p: &SystemParams, kappa: f64) -> Result<Operator> {
    p.validate()?;
    let space = p.space()?;
    let cutoff = p.fock_cutoff;
    let s = spins(p.n_spins)?;
    let a = boson_matrix(cutoff, BosonKind::Annihilate);
    let ad = boson_matrix(cutoff, BosonKind::Create);
    let num = boson_matrix(cutoff, BosonKind::Number);
    let ident_s = Matrix::identity(s.jz.nrows(), s.jz.nrows());
    let ident_b = Matrix::identity(cutoff, cutoff);
    let big_delta = p.delta_m() - 2.0 * kappa;
    let magnon = &num * c(big_delta) - (&a * &a + &ad * &ad) * c(0.5 * kappa);
    let h = spin_boson(space, &(&s.jz * c(p.delta_q())), &ident_b)
        + spin_boson(space, &ident_s, &magnon)
        + spin_boson(space, &(&s.jp * c(p.g)), &a)
        + spin_boson(space, &(&s.jm * c(p.g)), &ad);
    h.ensure_hermitian(HERMITIAN_TOL)
}

fn squeezed_terms(p: &SystemParams, r: f64, with_minor: bool) -> Result<Operator> {
    p.validate()?;
    if !r.is_finite() {
        return Err(Error::InvalidArgument("r must be finite".into()));
    }
    let frame = p.squeezed_frame(r);
    let space = p.space()?;
    let cutoff = p.fock_cutoff;
    let s = spins(p.n_spins)?;
    let a = boson_matrix(cutoff, BosonKind::Annihilate);
    let ad = boson_matrix(cutoff, BosonKind::Create);
    let num = boson_matrix(cutoff, BosonKind::Number);
    let ident_s = Matrix::identity(s.jz.nrows(), s.jz.nrows());
    let ident_b = Matrix::identity(cutoff, cutoff);
    let mut h = spin_boson(space, &(&s.jz * c(frame.delta_q)), &ident_b)
        + spin_boson(space, &ident_s, &(&num * c(frame.omega_m_tilde)))
        + spin_boson(space, &((&s.jp + &s.jm) * c(frame.big_g)), &(&a + &ad));
    if with_minor {
        h = h + spin_boson(space, &((&s.jp - &s.jm) * c(frame.minor_g)), &(&a - &ad));
    }
    h.ensure_hermitian(HERMITIAN_TOL)
}

pub fn h_squeezed(p: &SystemParams, r: f64) -> Result<Operator> {
    squeezed_terms(p, r, true)
}

pub fn h_truncated(p: &SystemParams, r: f64) -> Result<Operator> {
    squeezed_terms(p, r, false)
}

/// The squeezed-frame term dropped by [`h_truncated`]: G e^{−2r}(J₊−J₋)(m−m†).
pub fn squeezing_remainder(p: &SystemParams, r: f64) -> Result<Operator> {
    Ok(h_squeezed(p, r)? - h_truncated(p, r)?)
}

/// U·h_linearized·U† on the Fock levels below `fock_cutoff / 2`.
///
/// The conjugation is carried out in an enlarged working Fock space that is
/// grown until the retained block stops changing, since the squeezed images
/// of low Fock states reach far above any modest cutoff. Returns the operator
/// together with the working dimension that was used.
pub fn linearized_in_squeezed_frame(p: &SystemParams, kappa: f64, r: f64) -> Result<(Operator, usize)> {
    p.validate()?;
    let levels = (p.fock_cutoff / 2).max(1);
    let big_delta = p.delta_m() - 2.0 * kappa;
    let images = |dim: usize| {
        let u = squeeze_rows(r, dim, levels);
        let a = boson_matrix(dim, BosonKind::Annihilate);
        let ad = boson_matrix(dim, BosonKind::Create);
        let num = boson_matrix(dim, BosonKind::Number);
        // Only `levels` rows of U are needed, so every product stays levels × dim.
        let ua = &u * &a;
        let uad = &u * &ad;
        let u_magnon = &u * &num * c(big_delta) - (&ua * &a + &uad * &ad) * c(0.5 * kappa);
        let ut = u.adjoint();
        [&u_magnon * &ut, &ua * &ut, &uad * &ut]
    };
    let scale = 1.0 + big_delta.abs() + kappa.abs() + p.g.abs();
    let mut dim = (4 * p.fock_cutoff).max((p.fock_cutoff as f64 * (2.0 * r.abs()).exp()) as usize + 32);
    let mut current = images(dim);
    loop {
        let next_dim = dim + dim / 2;
        let next = images(next_dim);
        let change = current
            .iter()
            .zip(&next)
            .map(|(x, y)| linalg::max_abs(&(x - y)))
            .fold(0.0, f64::max);
        dim = next_dim;
        current = next;
        if change < 1e-10 * scale {
            break;
        }
        if dim > 1 << 14 {
            return Err(Error::Numerical(format!(
                "squeezed-frame conjugation did not converge (last change {change:.3e})"
            )));
        }
    }
    let space = HilbertSpace::new(p.n_spins, levels)?;
    let s = spins(p.n_spins)?;
    let ident_s = Matrix::identity(s.jz.nrows(), s.jz.nrows());
    let [magnon, a, ad] = current;
    let h = spin_boson(space, &(&s.jz * c(p.delta_q())), &Matrix::identity(levels, levels))
        + spin_boson(space, &ident_s, &magnon)
        + spin_boson(space, &(&s.jp * c(p.g)), &a)
        + spin_boson(space, &(&s.jm * c(p.g)), &ad);
    Ok((h, dim))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiVariant {
    /// c = 6.
    MainText,
    /// c = 2.
    Appendix,
    /// A χ obtained numerically, e.g. from `ghz::chi_fit`.
    Fitted(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveCouplings {
    pub big_g: f64,
    pub omega_m_tilde: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub chi: f64,
    /// G / min|Δ±|; the dispersive treatment wants this ≲ 0.2.
    pub dispersive_ratio: f64,
}

impl EffectiveCouplings {
    pub fn delta_q(&self) -> f64 {
        0.5 * (self.delta_plus + self.delta_minus)
    }

    /// Coefficient of J_z in the effective Hamiltonian, 2G²Δ_q/(Δ₊Δ₋).
    pub fn jz_shift(&self) -> f64 {
        2.0 * self.big_g * self.big_g * self.delta_q() / (self.delta_plus * self.delta_minus)
    }

    /// χ·(Δ₊Δ₋)/(G²ω̃): 2 for the appendix form, 6 for the main-text form.
    pub fn chi_coefficient(&self) -> f64 {
        self.chi * self.delta_plus * self.delta_minus / (self.big_g * self.big_g * self.omega_m_tilde)
    }

    pub fn prep_time(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.chi
    }

    pub fn is_dispersive(&self) -> bool {
        self.dispersive_ratio < 0.2
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        EffectiveCouplings { chi, ..*self }
    }
}

pub fn couplings_from_frame(
    big_g: f64,
    omega_m_tilde: f64,
    delta_q: f64,
    variant: ChiVariant,
) -> Result<EffectiveCouplings> {
    let delta_plus = delta_q + omega_m_tilde;
    let delta_minus = delta_q - omega_m_tilde;
    if delta_plus * delta_minus == 0.0 {
        return Err(Error::Resonance("Δ₊Δ₋ = 0".into()));
    }
    let closed = |coefficient: f64| coefficient * big_g * big_g * omega_m_tilde / (delta_plus * delta_minus);
    let chi = match variant {
        ChiVariant::MainText => closed(6.0),
        ChiVariant::Appendix => closed(2.0),
        ChiVariant::Fitted(chi) => chi,
    };
    Ok(EffectiveCouplings {
        big_g,
        omega_m_tilde,
        delta_plus,
        delta_minus,
        chi,
        dispersive_ratio: big_g.abs() / delta_plus.abs().min(delta_minus.abs()),
    })
}

pub fn effective_couplings(p: &SystemParams, r: f64, variant: ChiVariant) -> Result<EffectiveCouplings> {
    let frame = p.squeezed_frame(r);
    couplings_from_frame(frame.big_g, frame.omega_m_tilde, frame.delta_q, variant)
}

/// (2G²Δ_q/Δ₊Δ₋)J_z + χ(J² − J_z²) on the spin space.
pub fn h_effective(n_spins: usize, c: &EffectiveCouplings) -> Result<Operator> {
    let jz = collective_spin(n_spins, SpinAxis::Z)?;
    let j2 = total_spin_squared(n_spins)?;
    let h = jz.scale(c.jz_shift()) + (&j2 - &(&jz * &jz)).scale(c.chi);
    h.ensure_hermitian(HERMITIAN_TOL)
}

/// Bosonized frame with per-spin transition frequencies Δ_q + δ_j.
///
/// Spin bosons are hard-truncated at one excitation, so â_j is σ_j⁻ on the
/// same 2^N ⊗ Fock space used by the other builders.
pub fn h_inhomogeneous(p: &SystemParams, detunings: &[f64], r: f64) -> Result<Operator> {
    p.validate()?;
    if detunings.len() != p.n_spins {
        return Err(Error::Dimension(format!(
            "{} detunings for {} spins",
            detunings.len(),
            p.n_spins
        )));
    }
    let frame = p.squeezed_frame(r);
    let space = p.space()?;
    let n = p.n_spins;
    let cutoff = p.fock_cutoff;
    let a = boson_matrix(cutoff, BosonKind::Annihilate);
    let ad = boson_matrix(cutoff, BosonKind::Create);
    let num = boson_matrix(cutoff, BosonKind::Number);
    let ident_s = Matrix::identity(1 << n, 1 << n);
    let ident_b = Matrix::identity(cutoff, cutoff);
    let lowering = half_pauli(SpinAxis::Minus);
    let mut occupation = Matrix::zeros(1 << n, 1 << n);
    let mut b = Matrix::zeros(1 << n, 1 << n);
    for (j, &delta) in detunings.iter().enumerate() {
        let aj = site_operator(n, j, &lowering)?.matrix;
        occupation += aj.adjoint() * &aj * c(frame.delta_q + delta);
        b += aj;
    }
    b /= c((n as f64).sqrt());
    let h = spin_boson(space, &ident_s, &(&num * c(frame.omega_m_tilde)))
        + spin_boson(space, &occupation, &ident_b)
        + spin_boson(space, &((&b + &b.adjoint()) * c(frame.big_g)), &(&a + &ad));
    h.ensure_hermitian(HERMITIAN_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapValues {
    pub delta_gap: f64,
    /// The magnon-side shift Δ of the adiabatically eliminated Hamiltonian.
    pub delta_shift: f64,
}

/// Δ_gap = 2G²ω_q/((ω_q−ω̃)(ω_q+ω̃)) and Δ = 2G²ω̃/((ω_q−ω̃)(ω_q+ω̃)).
pub fn gap_values(omega_q: f64, c: &EffectiveCouplings) -> Result<GapValues> {
    let w = c.omega_m_tilde;
    let denom = (omega_q - w) * (omega_q + w);
    if denom == 0.0 {
        return Err(Error::Resonance("ω_q = ±ω̃_m".into()));
    }
    let g2 = 2.0 * c.big_g * c.big_g;
    Ok(GapValues { delta_gap: g2 * omega_q / denom, delta_shift: g2 * w / denom })
}
