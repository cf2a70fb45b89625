//! Lindblad master-equation integration and closed-system propagation.
//!
//! The integrator works in the interaction picture generated by the diagonal
//! of H whenever every collapse operator is an eigenoperator of that
//! diagonal, which strips the large bare frequencies out of ρ and lets the
//! step size follow the coupling dynamics instead. Otherwise it falls back to
//! the Schrödinger picture. Either way ρ is integrated as a matrix:
//!
//! dρ/dt = −i(Aρ − ρA†) + Σ γ LρL†,  A = H − (i/2) Σ γ L†L.

use crate::dop853::{self, OdeSystem, StepControl};
use crate::operators::{boson, site_operator, half_pauli, BosonKind, DensityMatrix, HilbertSpace, Operator, SpinAxis, StateVector};
use crate::sparse::{adjoint_into, Csr};
use crate::{linalg, Error, Matrix, Result, C64};
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct CollapseChannel {
    pub operator: Operator,
    pub rate: f64,
}

impl CollapseChannel {
    pub fn new(operator: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("collapse rate {rate} must be finite and ≥ 0")));
        }
        Ok(CollapseChannel { operator, rate })
    }
}

/// γ_m·m̂ on the magnon followed by γ_q·σ̂_j⁻ on every spin.
pub fn standard_channels(space: HilbertSpace, gamma_m: f64, gamma_q: f64) -> Result<Vec<CollapseChannel>> {
    let n = space.spin_count;
    let c = space.fock_cutoff;
    let mut out = Vec::with_capacity(n + 1);
    if c >= 2 {
        out.push(CollapseChannel::new(boson(c, BosonKind::Annihilate)?.behind_spins(n)?, gamma_m)?);
    }
    for j in 0..n {
        let sigma = site_operator(n, j, &half_pauli(SpinAxis::Minus))?;
        let sigma = if c >= 2 { sigma.with_boson(c)? } else { sigma };
        out.push(CollapseChannel::new(sigma, gamma_q)?);
    }
    Ok(out)
}

fn check_shapes(space: HilbertSpace, h: &Operator, channels: &[CollapseChannel]) -> Result<()> {
    if h.space != space || channels.iter().any(|c| c.operator.space != space) {
        return Err(Error::Dimension("state, Hamiltonian and collapse operators live on different spaces".into()));
    }
    Ok(())
}

/// −i[H,ρ] + Σ γ(LρL† − ½{L†L, ρ}), evaluated densely.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &Operator, channels: &[CollapseChannel]) -> Result<Matrix> {
    check_shapes(rho.space, h, channels)?;
    let r = &rho.matrix;
    let mut out = (&h.matrix * r - r * &h.matrix) * C64::new(0.0, -1.0);
    for ch in channels {
        let l = &ch.operator.matrix;
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += (l * r * &ld - (&ldl * r + r * &ldl) * C64::new(0.5, 0.0)) * C64::new(ch.rate, 0.0);
    }
    Ok(out)
}

/// Tr(ρA).
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<C64> {
    if rho.space != a.space {
        return Err(Error::Dimension("observable and state live on different spaces".into()));
    }
    let value: C64 = (&rho.matrix * &a.matrix).trace();
    if a.hermiticity_residual() < 1e-12 && value.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!("⟨A⟩ of a Hermitian A has imaginary part {:.3e}", value.im)));
    }
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Positivity is checked on every n-th output (and the last one).
    pub positivity_stride: usize,
    pub positivity_tol: f64,
    /// Top-two-Fock-level population above which the run is flagged.
    pub truncation_threshold: f64,
    pub interaction_picture: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 20_000_000,
            positivity_stride: 10,
            positivity_tol: 1e-6,
            truncation_threshold: 1e-6,
            interaction_picture: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    /// Largest ‖ρ − ρ†‖ seen on an accepted step, before Hermitization.
    pub max_hermiticity: f64,
    pub min_eigenvalue: f64,
    pub max_top_fock: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    pub interaction_picture: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Empty when the run was observed instead of recorded.
    pub states: Vec<DensityMatrix>,
    pub truncation_flag: bool,
    /// False when an observer stopped the run before the last grid time.
    pub completed: bool,
    pub diagnostics: Diagnostics,
}

enum Jump {
    /// At most one entry per row and per column: (row, column, value).
    Monomial(Vec<(usize, usize, C64)>),
    General(Csr),
}

impl Jump {
    fn new(l: &Matrix) -> Self {
        let csr = Csr::from_dense(l);
        let mut col_used = vec![false; l.ncols()];
        let mut entries = Vec::with_capacity(csr.nnz());
        for i in 0..csr.dim {
            let (a, b) = (csr.row_ptr[i], csr.row_ptr[i + 1]);
            if b - a > 1 || (b > a && std::mem::replace(&mut col_used[csr.cols[a]], true)) {
                return Jump::General(csr);
            }
            if b > a {
                entries.push((i, csr.cols[a], csr.vals[a]));
            }
        }
        Jump::Monomial(entries)
    }
}

struct MasterEquation {
    dim: usize,
    coupling: Csr,
    frequencies: Vec<f64>,
    phased: Vec<C64>,
    damping: Csr,
    jumps: Vec<(f64, Jump)>,
    work: Vec<C64>,
    work_adj: Vec<C64>,
    max_hermiticity: f64,
}

impl MasterEquation {
    fn new(h: &Operator, channels: &[CollapseChannel], interaction: bool) -> Self {
        let dim = h.dim();
        let diag: Vec<f64> = if interaction { (0..dim).map(|i| h.matrix[(i, i)].re).collect() } else { vec![0.0; dim] };
        let mut v = h.matrix.clone();
        for (i, d) in diag.iter().enumerate() {
            v[(i, i)] -= C64::new(*d, 0.0);
        }
        let coupling = Csr::from_dense(&v);
        let frequencies: Vec<f64> = coupling
            .rows()
            .iter()
            .zip(&coupling.cols)
            .map(|(&i, &j)| diag[i] - diag[j])
            .collect();
        let mut k = Matrix::zeros(dim, dim);
        let mut jumps = Vec::new();
        for ch in channels.iter().filter(|c| c.rate > 0.0) {
            let l = &ch.operator.matrix;
            k += l.adjoint() * l * C64::new(ch.rate, 0.0);
            jumps.push((ch.rate, Jump::new(l)));
        }
        MasterEquation {
            dim,
            phased: coupling.vals.clone(),
            coupling,
            frequencies,
            damping: Csr::from_dense(&k),
            jumps,
            work: vec![ZERO; dim * dim],
            work_adj: vec![ZERO; dim * dim],
            max_hermiticity: 0.0,
        }
    }
}

impl OdeSystem for MasterEquation {
    fn rhs(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for ((p, v), w) in self.phased.iter_mut().zip(&self.coupling.vals).zip(&self.frequencies) {
            *p = v * C64::from_polar(1.0, w * t);
        }
        out.fill(ZERO);
        self.coupling.mul_acc_with(&self.phased, C64::new(0.0, -1.0), rho, d, out);
        self.damping.mul_acc(C64::new(-0.5, 0.0), rho, d, out);
        for i in 0..d {
            out[i * d + i] = C64::new(2.0 * out[i * d + i].re, 0.0);
            for j in i + 1..d {
                let a = out[i * d + j];
                let b = out[j * d + i];
                out[i * d + j] = a + b.conj();
                out[j * d + i] = b + a.conj();
            }
        }
        for (rate, jump) in &self.jumps {
            match jump {
                Jump::Monomial(entries) => {
                    for &(i, ci, li) in entries {
                        let li = li * *rate;
                        let src = &rho[ci * d..(ci + 1) * d];
                        let dst = &mut out[i * d..(i + 1) * d];
                        for &(j, cj, lj) in entries {
                            dst[j] += li * lj.conj() * src[cj];
                        }
                    }
                }
                Jump::General(l) => {
                    self.work.fill(ZERO);
                    l.mul_acc(C64::new(1.0, 0.0), rho, d, &mut self.work);
                    adjoint_into(&self.work, d, &mut self.work_adj);
                    l.mul_acc(C64::new(*rate, 0.0), &self.work_adj, d, out);
                }
            }
        }
    }

    fn accepted(&mut self, _t: f64, rho: &mut [C64]) {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            let diag = rho[i * d + i];
            worst = worst.max(2.0 * diag.im.abs());
            rho[i * d + i] = C64::new(diag.re, 0.0);
            for j in i + 1..d {
                let a = rho[i * d + j];
                let b = rho[j * d + i];
                worst = worst.max((a - b.conj()).norm());
                let mean = (a + b.conj()) * 0.5;
                rho[i * d + j] = mean;
                rho[j * d + i] = mean.conj();
            }
        }
        self.max_hermiticity = self.max_hermiticity.max(worst);
    }
}

/// True when every nonzero L_ab connects levels with the same diagonal gap.
fn is_eigenoperator(diag: &[f64], l: &Matrix) -> bool {
    let scale = diag.iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let mut gap: Option<f64> = None;
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            if l[(i, j)] != ZERO {
                let g = diag[i] - diag[j];
                match gap {
                    None => gap = Some(g),
                    Some(g0) if (g - g0).abs() > 1e-12 * scale => return false,
                    _ => {}
                }
            }
        }
    }
    true
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if grid[0] < 0.0 || !grid.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidArgument("time grid must be finite and start at t ≥ 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Integrates ρ over `grid`, handing each output state to `observer`, which
/// may stop the run by returning `false`. States are not stored.
pub fn evolve_observed<F>(
    rho0: &DensityMatrix,
    h: &Operator,
    channels: &[CollapseChannel],
    grid: &[f64],
    options: &EvolveOptions,
    mut observer: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &DensityMatrix) -> Result<bool>,
{
    check_shapes(rho0.space, h, channels)?;
    validate_grid(grid)?;
    let residual = h.hermiticity_residual();
    if residual > 1e-10 {
        return Err(Error::NotHermitian(residual));
    }
    let dim = h.dim();
    let diag: Vec<f64> = (0..dim).map(|i| h.matrix[(i, i)].re).collect();
    let interaction = options.interaction_picture
        && channels.iter().filter(|c| c.rate > 0.0).all(|c| is_eigenoperator(&diag, &c.operator.matrix));
    let mut system = MasterEquation::new(h, channels, interaction);
    let mut y: Vec<C64> = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| rho0.matrix[(i, j)]).collect();
    let control = StepControl {
        rtol: options.rtol,
        atol: options.atol,
        max_steps: options.max_steps,
        h_max: f64::INFINITY,
    };
    let mut diagnostics = Diagnostics { min_eigenvalue: f64::INFINITY, interaction_picture: interaction, ..Default::default() };
    let mut times = Vec::with_capacity(grid.len());
    let stride = options.positivity_stride.max(1);
    let has_boson = rho0.space.fock_cutoff >= 2;
    let last = grid.len() - 1;
    let stats = dop853::integrate(&mut system, 0.0, &mut y, grid, &control, |i, t, flat| {
        let frame = |a: usize| if interaction { diag[a] } else { 0.0 };
        let matrix = Matrix::from_fn(dim, dim, |a, b| flat[a * dim + b] * C64::from_polar(1.0, -(frame(a) - frame(b)) * t));
        let rho = DensityMatrix::unchecked(rho0.space, matrix)?;
        diagnostics.max_trace_error = diagnostics.max_trace_error.max((rho.trace() - 1.0).abs());
        if has_boson {
            diagnostics.max_top_fock = diagnostics.max_top_fock.max(rho.top_fock_population());
        }
        if i % stride == 0 || i == last {
            let min = rho.min_eigenvalue();
            diagnostics.min_eigenvalue = diagnostics.min_eigenvalue.min(min);
            if min < -options.positivity_tol {
                return Err(Error::Positivity { t, min_eig: min });
            }
        }
        times.push(t);
        observer(t, &rho)
    })?;
    diagnostics.max_hermiticity = system.max_hermiticity;
    diagnostics.accepted_steps = stats.accepted;
    diagnostics.rejected_steps = stats.rejected;
    diagnostics.evaluations = stats.evaluations;
    Ok(Trajectory {
        completed: times.len() == grid.len(),
        times,
        states: Vec::new(),
        truncation_flag: diagnostics.max_top_fock > options.truncation_threshold,
        diagnostics,
    })
}

/// Integrates ρ over `grid` and records the state at every grid time.
pub fn evolve(
    rho0: &DensityMatrix,
    h: &Operator,
    channels: &[CollapseChannel],
    grid: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.len());
    let mut traj = evolve_observed(rho0, h, channels, grid, options, |_, rho| {
        states.push(rho.clone());
        Ok(true)
    })?;
    traj.states = states;
    Ok(traj)
}

/// Exact closed-system propagation e^{−iHt}|ψ0⟩ on `grid`.
pub fn propagate_pure(psi0: &StateVector, h: &Operator, grid: &[f64]) -> Result<Vec<StateVector>> {
    if psi0.space != h.space {
        return Err(Error::Dimension("state and Hamiltonian live on different spaces".into()));
    }
    validate_grid(grid)?;
    let residual = h.hermiticity_residual();
    if residual > 1e-10 {
        return Err(Error::NotHermitian(residual));
    }
    let eig = linalg::hermitian_eigen(&h.matrix);
    let coeffs = eig.vectors.adjoint() * &psi0.amplitudes;
    Ok(grid
        .iter()
        .map(|&t| {
            let phased = crate::Vector::from_fn(coeffs.len(), |k, _| coeffs[k] * C64::from_polar(1.0, -eig.values[k] * t));
            StateVector { space: psi0.space, amplitudes: &eig.vectors * phased }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub cutoffs: Vec<usize>,
    /// Max pointwise difference between the curves of consecutive cutoffs.
    pub differences: Vec<f64>,
    /// First cutoff whose curve agrees with the next one below the threshold.
    pub converged_at: Option<usize>,
}

pub const CONVERGENCE_THRESHOLD: f64 = 1e-4;

/// Repeats `run` at each cutoff and compares the returned curves.
pub fn cutoff_convergence<F>(cutoffs: &[usize], mut run: F) -> Result<ConvergenceReport>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    if cutoffs.len() < 2 {
        return Err(Error::InvalidArgument("cutoff_convergence needs at least two cutoffs".into()));
    }
    let curves = cutoffs.iter().map(|&c| run(c)).collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = curves
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let converged_at = differences.iter().position(|&d| d < CONVERGENCE_THRESHOLD).map(|i| cutoffs[i]);
    Ok(ConvergenceReport { cutoffs: cutoffs.to_vec(), differences, converged_at })
}
