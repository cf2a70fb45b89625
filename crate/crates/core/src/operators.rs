//! Hilbert spaces, operators and states for N spins plus one truncated boson.
//!
//! The tensor order is spin₁ ⊗ … ⊗ spin_N ⊗ boson. Each spin has basis
//! (|e⟩, |g⟩) with σ_z = diag(+1, −1), so collective operators J_α = Σσ_α/2
//! and J₊ = Σ|e⟩⟨g|. A space with `fock_cutoff == 1` carries no boson and a
//! space with `spin_count == 0` is a bare boson.

use crate::linalg::{self, kron, kron_vec};
use crate::{Error, Matrix, Result, Vector, C64};
use nalgebra::DMatrix;
use std::ops::{Add, Mul, Sub};

pub const DEFAULT_DIM_CEILING: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    pub spin_count: usize,
    pub fock_cutoff: usize,
}

impl HilbertSpace {
    pub fn new(spin_count: usize, fock_cutoff: usize) -> Result<Self> {
        Self::with_ceiling(spin_count, fock_cutoff, DEFAULT_DIM_CEILING)
    }

    pub fn with_ceiling(spin_count: usize, fock_cutoff: usize, ceiling: usize) -> Result<Self> {
        if fock_cutoff == 0 {
            return Err(Error::InvalidArgument("fock_cutoff must be at least 1".into()));
        }
        let spin_dim = 1usize
            .checked_shl(spin_count as u32)
            .filter(|_| spin_count < usize::BITS as usize)
            .ok_or(Error::DimensionCeiling { dim: usize::MAX, ceiling })?;
        let dim = spin_dim.saturating_mul(fock_cutoff);
        if dim > ceiling {
            return Err(Error::DimensionCeiling { dim, ceiling });
        }
        Ok(HilbertSpace { spin_count, fock_cutoff })
    }

    pub fn spins(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn boson(cutoff: usize) -> Result<Self> {
        Self::new(0, cutoff)
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.spin_count
    }

    pub fn total_dim(&self) -> usize {
        self.spin_dim() * self.fock_cutoff
    }

    pub fn spin_part(&self) -> HilbertSpace {
        HilbertSpace { spin_count: self.spin_count, fock_cutoff: 1 }
    }

    /// Index of |spin_index⟩ ⊗ |n⟩.
    pub fn index(&self, spin_index: usize, n: usize) -> usize {
        spin_index * self.fock_cutoff + n
    }

    fn product(&self, other: &HilbertSpace) -> Result<HilbertSpace> {
        if self.fock_cutoff != 1 && other.spin_count != 0 {
            return Err(Error::Dimension(
                "tensor would place a spin factor after the boson factor".into(),
            ));
        }
        HilbertSpace::new(self.spin_count + other.spin_count, self.fock_cutoff * other.fock_cutoff)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub space: HilbertSpace,
    pub matrix: Matrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: Matrix) -> Result<Self> {
        let d = space.total_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "matrix is {:?}, space needs {d}x{d}",
                matrix.shape()
            )));
        }
        Ok(Operator { space, matrix })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Operator { space, matrix: Matrix::identity(d, d) }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Operator { space, matrix: Matrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator { space: self.space, matrix: self.matrix.adjoint() }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.matrix)
    }

    pub fn ensure_hermitian(self, tol: f64) -> Result<Self> {
        let res = self.hermiticity_residual();
        if res > tol {
            return Err(Error::NotHermitian(res));
        }
        Ok(self)
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        self * other - other * self
    }

    /// Places a spin-only operator in front of the boson identity.
    pub fn with_boson(&self, cutoff: usize) -> Result<Operator> {
        tensor(self, &Operator::identity(HilbertSpace::boson(cutoff)?))
    }

    /// Places a boson-only operator behind the identity on `n` spins.
    pub fn behind_spins(&self, n: usize) -> Result<Operator> {
        tensor(&Operator::identity(HilbertSpace::spins(n)?), self)
    }

    /// Keeps only the boson levels below `levels`.
    pub fn restrict_boson(&self, levels: usize) -> Result<Operator> {
        let c = self.space.fock_cutoff;
        if levels == 0 || levels > c {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict a {c}-level boson to {levels} levels"
            )));
        }
        let space = HilbertSpace::new(self.space.spin_count, levels)?;
        let keep: Vec<usize> = (0..self.space.spin_dim())
            .flat_map(|s| (0..levels).map(move |n| s * c + n))
            .collect();
        let matrix = Matrix::from_fn(keep.len(), keep.len(), |i, j| self.matrix[(keep[i], keep[j])]);
        Operator::new(space, matrix)
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { space: self.space, matrix: &self.matrix * C64::new(s, 0.0) }
    }

    pub fn scale_c(&self, s: C64) -> Operator {
        Operator { space: self.space, matrix: &self.matrix * s }
    }
}

fn same_space(a: &Operator, b: &Operator) {
    assert_eq!(a.space, b.space, "operator arithmetic across different spaces");
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        same_space(self, rhs);
        Operator { space: self.space, matrix: &self.matrix + &rhs.matrix }
    }
}

impl Add<Operator> for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        same_space(self, rhs);
        Operator { space: self.space, matrix: &self.matrix - &rhs.matrix }
    }
}

impl Sub<Operator> for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        same_space(self, rhs);
        Operator { space: self.space, matrix: &self.matrix * &rhs.matrix }
    }
}

impl Mul<Operator> for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub space: HilbertSpace,
    pub amplitudes: Vector,
}

impl StateVector {
    /// Normalizes the amplitudes; fails on a zero vector or a length mismatch.
    pub fn new(space: HilbertSpace, amplitudes: Vector) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {}-dimensional space",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("state has zero or non-finite norm".into()));
        }
        Ok(StateVector { space, amplitudes: amplitudes / C64::new(norm, 0.0) })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let mut v = Vector::zeros(space.total_dim());
        if index >= v.len() {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range")));
        }
        v[index] = C64::new(1.0, 0.0);
        Ok(StateVector { space, amplitudes: v })
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        if op.space != self.space {
            return Err(Error::Dimension("operator and state live in different spaces".into()));
        }
        StateVector::new(self.space, &op.matrix * &self.amplitudes)
    }

    pub fn with_fock(&self, cutoff: usize, n: usize) -> Result<StateVector> {
        let fock = StateVector::basis(HilbertSpace::boson(cutoff)?, n)?;
        tensor(self, &fock)
    }

    pub fn projector(&self) -> Matrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub matrix: Matrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(space: HilbertSpace, matrix: Matrix) -> Result<Self> {
        let rho = Self::unchecked(space, matrix)?;
        let herm = linalg::hermiticity_residual(&rho.matrix);
        if herm > 1e-10 {
            return Err(Error::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr}")));
        }
        let min = linalg::min_eigenvalue(&rho.matrix);
        if min < -1e-8 {
            return Err(Error::InvalidArgument(format!("density matrix eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Shape-checked only; for states produced by trusted numerics.
    pub fn unchecked(space: HilbertSpace, matrix: Matrix) -> Result<Self> {
        let d = space.total_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::Dimension(format!("{:?} density matrix for dim {d}", matrix.shape())));
        }
        Ok(DensityMatrix { space, matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        DensityMatrix { space: psi.space, matrix: psi.projector() }
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        DensityMatrix { space, matrix: Matrix::identity(d, d) / C64::new(d as f64, 0.0) }
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.matrix)
    }

    /// Traces out the boson, leaving the spin-only state.
    pub fn spin_reduced(&self) -> DensityMatrix {
        let c = self.space.fock_cutoff;
        let ds = self.space.spin_dim();
        let matrix = Matrix::from_fn(ds, ds, |a, b| (0..c).map(|n| self.matrix[(a * c + n, b * c + n)]).sum());
        DensityMatrix { space: self.space.spin_part(), matrix }
    }

    /// Population in the two highest boson levels.
    pub fn top_fock_population(&self) -> f64 {
        let c = self.space.fock_cutoff;
        if c < 2 {
            return 0.0;
        }
        (0..self.space.spin_dim())
            .flat_map(|s| [s * c + c - 1, s * c + c - 2])
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }
}

pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.product(&other.space)?;
        Ok(Operator { space, matrix: kron(&self.matrix, &other.matrix) })
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.product(&other.space)?;
        Ok(StateVector { space, amplitudes: kron_vec(&self.amplitudes, &other.amplitudes) })
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Single-spin matrix σ_α/2 (or σ± for the ladder axes).
pub fn half_pauli(axis: SpinAxis) -> Matrix {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    let one = C64::new(1.0, 0.0);
    let entries = match axis {
        SpinAxis::X => [z, h, h, z],
        SpinAxis::Y => [z, -ih, ih, z],
        SpinAxis::Z => [h, z, z, -h],
        SpinAxis::Plus => [z, one, z, z],
        SpinAxis::Minus => [z, z, one, z],
    };
    Matrix::from_row_slice(2, 2, &entries)
}

/// `single` acting on spin `site` (0-based) of `n`, identity elsewhere.
pub fn site_operator(n: usize, site: usize, single: &Matrix) -> Result<Operator> {
    if site >= n {
        return Err(Error::InvalidArgument(format!("site {site} of {n} spins")));
    }
    let space = HilbertSpace::spins(n)?;
    let mut m = Matrix::identity(1, 1);
    for k in 0..n {
        m = if k == site { kron(&m, single) } else { kron(&m, &Matrix::identity(2, 2)) };
    }
    Operator::new(space, m)
}

pub fn collective_spin(n: usize, axis: SpinAxis) -> Result<Operator> {
    if n == 0 {
        return Err(Error::InvalidArgument("collective spin needs N ≥ 1".into()));
    }
    let single = half_pauli(axis);
    let mut total = Operator::zeros(HilbertSpace::spins(n)?);
    for j in 0..n {
        total = total + site_operator(n, j, &single)?;
    }
    Ok(total)
}

/// Ĵ² = Ĵ_x² + Ĵ_y² + Ĵ_z².
pub fn total_spin_squared(n: usize) -> Result<Operator> {
    let mut total = Operator::zeros(HilbertSpace::spins(n)?);
    for axis in [SpinAxis::X, SpinAxis::Y, SpinAxis::Z] {
        let j = collective_spin(n, axis)?;
        total = total + &j * &j;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BosonKind {
    Annihilate,
    Create,
    Number,
}

pub fn boson_matrix(cutoff: usize, kind: BosonKind) -> Matrix {
    let mut m = Matrix::zeros(cutoff, cutoff);
    for k in 1..cutoff {
        let s = C64::new((k as f64).sqrt(), 0.0);
        match kind {
            BosonKind::Annihilate => m[(k - 1, k)] = s,
            BosonKind::Create => m[(k, k - 1)] = s,
            BosonKind::Number => m[(k, k)] = C64::new(k as f64, 0.0),
        }
    }
    m
}

pub fn boson(cutoff: usize, kind: BosonKind) -> Result<Operator> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument("boson operators need cutoff ≥ 2".into()));
    }
    Operator::new(HilbertSpace::boson(cutoff)?, boson_matrix(cutoff, kind))
}

/// First `rows` rows of exp[r(m² − m†²)/2] on a `dim`-level truncated boson.
///
/// The generator is real antisymmetric and only couples levels of equal
/// parity, so each parity chain is a tridiagonal matrix T. With
/// D = diag(iᵃ) one has D·T·D⁻¹ = −i·S for the real symmetric tridiagonal S
/// built from the same off-diagonal, hence exp(T) = D⁻¹·exp(−iS)·D.
pub fn squeeze_rows(r: f64, dim: usize, rows: usize) -> Matrix {
    let rows = rows.min(dim);
    let mut out = Matrix::zeros(rows, dim);
    for parity in 0..2 {
        let levels: Vec<usize> = (parity..dim).step_by(2).collect();
        let len = levels.len();
        if len == 0 {
            continue;
        }
        let mut s = DMatrix::<f64>::zeros(len, len);
        for a in 0..len.saturating_sub(1) {
            let k = levels[a];
            let b = 0.5 * r * (((k + 1) * (k + 2)) as f64).sqrt();
            s[(a, a + 1)] = b;
            s[(a + 1, a)] = b;
        }
        let eig = s.symmetric_eigen();
        let phases: Vec<C64> = eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l)).collect();
        let i_pow = |p: usize| match p % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        for a in 0..len {
            if levels[a] >= rows {
                break;
            }
            for b in 0..len {
                let mut acc = C64::new(0.0, 0.0);
                for (k, ph) in phases.iter().enumerate() {
                    acc += ph * (eig.eigenvectors[(a, k)] * eig.eigenvectors[(b, k)]);
                }
                out[(levels[a], levels[b])] = acc * i_pow(4 + b % 4 - a % 4);
            }
        }
    }
    out
}

/// The squeeze operator exp[r(m² − m†²)/2] on a `cutoff`-level boson.
pub fn squeeze_unitary(r: f64, cutoff: usize) -> Result<Operator> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument("squeeze_unitary needs cutoff ≥ 2".into()));
    }
    if !r.is_finite() || r.abs() > 5.0 {
        return Err(Error::InvalidArgument(format!(
            "|r| = {} is outside the truncation-safe range |r| ≤ 5",
            r.abs()
        )));
    }
    let u = squeeze_rows(r, cutoff, cutoff);
    let half = cutoff / 2;
    let cols = u.columns(0, half.max(1));
    let gram = cols.adjoint() * cols;
    let residual = linalg::max_abs(&(gram - Matrix::identity(half.max(1), half.max(1))));
    if residual > 1e-6 {
        return Err(Error::Truncation(residual));
    }
    Operator::new(HilbertSpace::boson(cutoff)?, u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisAxis {
    X,
    Z,
}

/// Symmetric Dicke state |N/2, m⟩ along z or x.
///
/// The x-basis state is the z-basis state with every spin mapped by
/// |e⟩ → |+⟩, |g⟩ → |−⟩, where |±⟩ = (|e⟩ ± |g⟩)/√2.
pub fn dicke_state(n: usize, axis: BasisAxis, m: f64) -> Result<StateVector> {
    let j = n as f64 / 2.0;
    let excited = j + m;
    if n == 0 || m.abs() > j + 1e-12 || (excited - excited.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("no Dicke state with N = {n}, m = {m}")));
    }
    let excited = excited.round() as u32;
    let space = HilbertSpace::spins(n)?;
    let dim = space.total_dim();
    // Bit (n−1−site) clear means that site is excited.
    let mut amps = Vector::from_fn(dim, |s, _| {
        let ground = s.count_ones();
        if n as u32 - ground == excited {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    if axis == BasisAxis::X {
        let h = Matrix::from_element(2, 2, C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let mut hadamard = h.clone();
        hadamard[(1, 1)] = -hadamard[(1, 1)];
        let mut full = Matrix::identity(1, 1);
        for _ in 0..n {
            full = kron(&full, &hadamard);
        }
        amps = full * amps;
    }
    StateVector::new(space, amps)
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.space != psi.space {
        return Err(Error::Dimension("fidelity between different spaces".into()));
    }
    let f = psi.amplitudes.dotc(&(&rho.matrix * &psi.amplitudes));
    let scale = 1.0 + f.re.abs();
    if f.im.abs() > 1e-10 * scale {
        return Err(Error::Numerical(format!("fidelity has imaginary part {:.3e}", f.im)));
    }
    Ok(f.re.clamp(0.0, 1.0))
}
