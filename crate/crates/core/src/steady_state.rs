//! Mean-field steady state of the driven Kerr magnon.
//!
//! With 𝒦 = K|⟨m⟩|² the steady state obeys F(𝒦) = 𝒦³ + C₂𝒦² + C₁𝒦 + C₀ = 0.
//! Linearizing the Heisenberg–Langevin equation around a root gives the drift
//! matrix
//!
//! ```text
//! [ −γ/2 − iΔ_m      i𝒦e^{2iφ}  ]
//! [ −i𝒦e^{−2iφ}     −γ/2 + iΔ_m ]
//! ```
//!
//! with Δ_m = δ_m − 2𝒦. Its eigenvalues are −γ/2 ± √(𝒦² − Δ_m²), so a branch
//! is unstable exactly when 𝒦² − Δ_m² > γ²/4. Expanding that inequality shows
//! it is the same as ∂F/∂𝒦 < 0, the middle root of an S-shaped response.

use crate::{Error, Result};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyParams {
    pub delta_m: f64,
    pub gamma_m: f64,
    pub kerr_k: f64,
    pub drive_amp: f64,
}

impl SteadyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_m >= 0.0) || !(self.drive_amp >= 0.0) {
            return Err(Error::InvalidArgument("gamma_m and drive_amp must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn with_delta(&self, delta_m: f64) -> Self {
        SteadyParams { delta_m, ..*self }
    }

    pub fn residual(&self, kappa: f64) -> f64 {
        let (c2, c1, c0) = cubic_coefficients(self);
        ((kappa + c2) * kappa + c1) * kappa + c0
    }

    fn residual_slope(&self, kappa: f64) -> f64 {
        let (c2, c1, _) = cubic_coefficients(self);
        (3.0 * kappa + 2.0 * c2) * kappa + c1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SteadyStateBranch {
    pub kappa: f64,
    pub stable: bool,
    /// `None` where (Δ_m+𝒦)/(Δ_m−𝒦) ≤ 0 or diverges.
    pub squeezing_r: Option<f64>,
    pub effective_detuning: f64,
}

/// (C₂, C₁, C₀).
pub fn cubic_coefficients(p: &SteadyParams) -> (f64, f64, f64) {
    (
        -2.0 * p.delta_m,
        p.delta_m * p.delta_m + p.gamma_m * p.gamma_m / 4.0,
        -p.kerr_k * p.drive_amp * p.drive_amp,
    )
}

pub fn is_stable(kappa: f64, delta_m: f64, gamma_m: f64) -> bool {
    let big_delta = delta_m - 2.0 * kappa;
    kappa * kappa - big_delta * big_delta <= gamma_m * gamma_m / 4.0
}

/// Eigenvalues of the fluctuation drift matrix.
pub fn drift_eigenvalues(kappa: f64, delta_m: f64, gamma_m: f64) -> [num_complex::Complex64; 2] {
    let big_delta = delta_m - 2.0 * kappa;
    let root = num_complex::Complex64::new(kappa * kappa - big_delta * big_delta, 0.0).sqrt();
    let base = num_complex::Complex64::new(-gamma_m / 2.0, 0.0);
    [base + root, base - root]
}

fn polish(p: &SteadyParams, mut kappa: f64) -> f64 {
    let mut best = p.residual(kappa).abs();
    for _ in 0..8 {
        let slope = p.residual_slope(kappa);
        if slope == 0.0 {
            break;
        }
        let next = kappa - p.residual(kappa) / slope;
        let res = p.residual(next).abs();
        if !(res < best) {
            break;
        }
        kappa = next;
        best = res;
    }
    kappa
}

/// Real roots of the cubic from companion-matrix eigenvalues.
pub fn real_roots(p: &SteadyParams) -> Vec<f64> {
    let (c2, c1, c0) = cubic_coefficients(p);
    let companion = Matrix3::new(-c2, -c1, -c0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let eig = companion.complex_eigenvalues();
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() < 1e-8 * z.norm().max(1.0))
        .map(|z| z.re)
        .collect();
    if roots.is_empty() {
        // An odd-degree real polynomial always has a real root; a triple or
        // near-triple root can push every eigenvalue off the axis by ~ε^{1/3}.
        let closest = eig
            .iter()
            .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
            .expect("cubic has three eigenvalues");
        roots.push(closest.re);
    }
    let mut roots: Vec<f64> = roots.into_iter().map(|k| polish(p, k)).collect();
    roots.sort_by(f64::total_cmp);
    roots
}

pub fn solve_kappa(p: &SteadyParams) -> Vec<SteadyStateBranch> {
    real_roots(p)
        .into_iter()
        .map(|kappa| SteadyStateBranch {
            kappa,
            stable: is_stable(kappa, p.delta_m, p.gamma_m),
            squeezing_r: squeezing_parameter(kappa, p.delta_m).ok().map(|s| s.r),
            effective_detuning: p.delta_m - 2.0 * kappa,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Squeezing {
    pub r: f64,
    pub effective_detuning: f64,
}

/// r = ¼ ln[(Δ_m+𝒦)/(Δ_m−𝒦)] with Δ_m = δ_m − 2𝒦.
pub fn squeezing_parameter(kappa: f64, delta_m: f64) -> Result<Squeezing> {
    let big_delta = delta_m - 2.0 * kappa;
    let ratio = (big_delta + kappa) / (big_delta - kappa);
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::SqueezingInvalid { ratio });
    }
    let r = ratio.ln() / 4.0;
    if !r.is_finite() {
        return Err(Error::SqueezingInvalid { ratio });
    }
    Ok(Squeezing { r, effective_detuning: big_delta })
}

/// The 𝒦 that yields squeezing `r` at detuning δ_m, i.e. 𝒦 = δ_m·tanh2r/(1 + 2·tanh2r).
pub fn kappa_for_squeezing(r: f64, delta_m: f64) -> f64 {
    let t = (2.0 * r).tanh();
    delta_m * t / (1.0 + 2.0 * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub omega_c: f64,
    pub delta_c: f64,
    pub kappa_c: f64,
}

/// Critical drive and detuning. For K < 0 the picture is mirrored: δ and 𝒦
/// change sign while Ω_c uses |K|.
pub fn critical_drive(gamma_m: f64, kerr_k: f64) -> Result<CriticalPoint> {
    if kerr_k == 0.0 {
        return Err(Error::NoCriticalPoint);
    }
    let sign = kerr_k.signum();
    let omega_c = (3f64.sqrt() * gamma_m.powi(3) / (9.0 * kerr_k.abs())).sqrt();
    Ok(CriticalPoint {
        omega_c,
        delta_c: sign * 3f64.sqrt() * gamma_m / 2.0,
        kappa_c: sign * 3f64.sqrt() * gamma_m / 3.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwitchingPoint {
    pub delta_m: f64,
    pub kappa: f64,
}

/// Roots of ∂F/∂𝒦 = 0 at fixed δ_m: 𝒦 = (2δ ± √(δ² − 3γ²/4))/3.
pub fn tangency_kappa(delta_m: f64, gamma_m: f64, upper: bool) -> f64 {
    let disc = (delta_m * delta_m - 0.75 * gamma_m * gamma_m).max(0.0).sqrt();
    if upper {
        (2.0 * delta_m + disc) / 3.0
    } else {
        (2.0 * delta_m - disc) / 3.0
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The two tangency points (δ_m−, 𝒦−) and (δ_m+, 𝒦+) bounding the bistable
/// window, with δ_m− < δ_m+.
pub fn switching_points(p: &SteadyParams) -> Result<(SwitchingPoint, SwitchingPoint)> {
    let crit = critical_drive(p.gamma_m, p.kerr_k)?;
    if p.kerr_k < 0.0 {
        let mirrored = SteadyParams { kerr_k: -p.kerr_k, delta_m: -p.delta_m, ..*p };
        let (a, b) = switching_points(&mirrored)?;
        let flip = |s: SwitchingPoint| SwitchingPoint { delta_m: -s.delta_m, kappa: -s.kappa };
        return Ok((flip(b), flip(a)));
    }
    let critical = SwitchingPoint { delta_m: crit.delta_c, kappa: crit.kappa_c };
    let excess = (p.drive_amp - crit.omega_c) / crit.omega_c;
    if excess.abs() <= 1e-12 {
        return Ok((critical, critical));
    }
    if excess < 0.0 {
        return Err(Error::NoBistableWindow { drive: p.drive_amp, critical: crit.omega_c });
    }
    let solve = |upper: bool| {
        let h = |d: f64| p.with_delta(d).residual(tangency_kappa(d, p.gamma_m, upper));
        let lo = crit.delta_c;
        let mut hi = crit.delta_c + p.gamma_m.max(f64::MIN_POSITIVE);
        while h(hi) < 0.0 {
            hi = lo + 2.0 * (hi - lo);
        }
        let delta = bisect(lo, hi, h);
        SwitchingPoint { delta_m: delta, kappa: tangency_kappa(delta, p.gamma_m, upper) }
    };
    let upper = solve(true);
    let lower = solve(false);
    Ok(if lower.delta_m <= upper.delta_m { (lower, upper) } else { (upper, lower) })
}

/// Number of distinct real roots decided by the cubic discriminant.
pub fn real_root_count(p: &SteadyParams) -> usize {
    let (b, c, d) = cubic_coefficients(p);
    let disc = 18.0 * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * c.powi(3) - 27.0 * d * d;
    if disc > 0.0 {
        3
    } else {
        1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub delta_m: f64,
    pub kappa: f64,
    pub stable: bool,
    pub r: Option<f64>,
    pub branch_id: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    /// Sorted by (δ_m, 𝒦).
    pub records: Vec<SweepRecord>,
    pub branch_count: usize,
}

impl Sweep {
    pub fn branch(&self, id: usize) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(move |r| r.branch_id == id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_m,kappa,stable,r,branch_id\n");
        for rec in &self.records {
            let r = rec.r.map_or_else(|| "nan".to_string(), |r| format!("{r:.17e}"));
            out.push_str(&format!(
                "{:.17e},{:.17e},{},{},{}\n",
                rec.delta_m, rec.kappa, rec.stable, r, rec.branch_id
            ));
        }
        out
    }
}

/// Solves every grid point and stitches roots into branches by
/// nearest-neighbour continuation in 𝒦.
pub fn sweep(template: &SteadyParams, delta_grid: &[f64]) -> Result<Sweep> {
    if delta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("δ_m grid must be strictly increasing".into()));
    }
    let solved: Vec<Vec<SteadyStateBranch>> =
        delta_grid.iter().map(|&d| solve_kappa(&template.with_delta(d))).collect();

    let mut records = Vec::new();
    let mut active: Vec<(usize, f64)> = Vec::new();
    let mut next_id = 0;
    for (&delta, roots) in delta_grid.iter().zip(&solved) {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ri, root) in roots.iter().enumerate() {
            for (ai, &(_, last)) in active.iter().enumerate() {
                pairs.push(((root.kappa - last).abs(), ri, ai));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut root_id: Vec<Option<usize>> = vec![None; roots.len()];
        let mut used = vec![false; active.len()];
        for (_, ri, ai) in pairs {
            if root_id[ri].is_none() && !used[ai] {
                root_id[ri] = Some(active[ai].0);
                used[ai] = true;
            }
        }
        let mut next_active = Vec::with_capacity(roots.len());
        for (root, id) in roots.iter().zip(root_id) {
            let id = id.unwrap_or_else(|| {
                next_id += 1;
                next_id - 1
            });
            next_active.push((id, root.kappa));
            records.push(SweepRecord {
                delta_m: delta,
                kappa: root.kappa,
                stable: root.stable,
                r: root.squeezing_r,
                branch_id: id,
            });
        }
        active = next_active;
    }
    Ok(Sweep { records, branch_count: next_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn example() -> SteadyParams {
        SteadyParams { delta_m: 2.0 * TAU, gamma_m: TAU, kerr_k: TAU * 1.56e-12, drive_amp: 0.0 }
    }

    #[test]
    fn undriven_coefficients() {
        let (_, _, c0) = cubic_coefficients(&SteadyParams { drive_amp: 0.0, ..example() });
        assert_eq!(c0, 0.0);
        let (c2, c1, _) =
            cubic_coefficients(&SteadyParams { delta_m: 0.0, gamma_m: 2.0, kerr_k: 1.0, drive_amp: 1.0 });
        assert_eq!((c2, c1), (0.0, 1.0));
    }

    #[test]
    fn undriven_single_branch() {
        let branches = solve_kappa(&example());
        assert_eq!(branches.len(), 1);
        assert!(branches[0].kappa.abs() < 1e-12);
        assert_eq!(branches[0].squeezing_r, Some(0.0));
    }

    #[test]
    fn critical_values_unit_gamma() {
        let c = critical_drive(1.0, 1.0).unwrap();
        assert!((c.delta_c - 0.8660254).abs() < 1e-7);
        assert!((c.kappa_c - 0.5773503).abs() < 1e-7);
        assert!((c.omega_c - 0.4386913).abs() < 1e-7);
        let doubled = critical_drive(2.0, 1.0).unwrap();
        assert!((doubled.omega_c / c.omega_c - 2f64.powf(1.5)).abs() < 1e-12);
        assert!(matches!(critical_drive(1.0, 0.0), Err(Error::NoCriticalPoint)));
    }

    #[test]
    fn critical_point_is_a_degenerate_root() {
        let gamma = TAU;
        let k = TAU * 1.56e-12;
        let c = critical_drive(gamma, k).unwrap();
        let p = SteadyParams { delta_m: c.delta_c, gamma_m: gamma, kerr_k: k, drive_amp: c.omega_c };
        let roots = real_roots(&p);
        assert!(!roots.is_empty());
        let (_, _, c0) = cubic_coefficients(&p);
        for k in &roots {
            assert!((k - c.kappa_c).abs() / c.kappa_c < 1e-4);
            assert!(p.residual(*k).abs() / c0.abs().max(1.0) < 1e-9);
        }
    }

    #[test]
    fn squeezing_examples() {
        assert_eq!(squeezing_parameter(0.0, 3.0).unwrap().r, 0.0);
        let s = squeezing_parameter(1.0, 3.25).unwrap();
        assert!((s.r - 0.549306).abs() < 1e-6);
        assert!((s.effective_detuning - 1.25).abs() < 1e-15);
        assert!(matches!(squeezing_parameter(1.0, 3.0), Err(Error::SqueezingInvalid { .. })));
        assert!(squeezing_parameter(1.0, 2.5).is_err());
    }

    #[test]
    fn switching_degenerates_at_critical_drive() {
        let c = critical_drive(1.0, 1.0).unwrap();
        let p = SteadyParams { delta_m: 0.0, gamma_m: 1.0, kerr_k: 1.0, drive_amp: c.omega_c };
        let (a, b) = switching_points(&p).unwrap();
        assert_eq!(a, b);
        assert!((a.delta_m - c.delta_c).abs() < 1e-15);
        let below = SteadyParams { drive_amp: 0.9 * c.omega_c, ..p };
        assert!(matches!(switching_points(&below), Err(Error::NoBistableWindow { .. })));
    }

    #[test]
    fn switching_points_satisfy_tangency_expressions() {
        let c = critical_drive(1.0, 1.0).unwrap();
        let p = SteadyParams { delta_m: 0.0, gamma_m: 1.0, kerr_k: 1.0, drive_amp: 1.5 * c.omega_c };
        let (lo, hi) = switching_points(&p).unwrap();
        assert!(lo.delta_m < hi.delta_m);
        for s in [lo, hi] {
            let q = p.with_delta(s.delta_m);
            assert!(q.residual(s.kappa).abs() < 1e-9);
            assert!(q.residual_slope(s.kappa).abs() < 1e-9);
        }
        assert!((lo.kappa - tangency_kappa(lo.delta_m, 1.0, false)).abs() < 1e-12);
        assert!((hi.kappa - tangency_kappa(hi.delta_m, 1.0, true)).abs() < 1e-12);
    }

    #[test]
    fn negative_kerr_mirrors_switching_points() {
        let c = critical_drive(1.0, 1.0).unwrap();
        let p = SteadyParams { delta_m: 0.0, gamma_m: 1.0, kerr_k: 1.0, drive_amp: 1.7 * c.omega_c };
        let (a, b) = switching_points(&p).unwrap();
        let (ma, mb) = switching_points(&SteadyParams { kerr_k: -1.0, ..p }).unwrap();
        assert!((ma.delta_m + b.delta_m).abs() < 1e-12 && (mb.delta_m + a.delta_m).abs() < 1e-12);
        assert!((ma.kappa + b.kappa).abs() < 1e-12);
    }

    #[test]
    fn monostable_sweep_has_one_branch() {
        let c = critical_drive(1.0, 1.0).unwrap();
        let p = SteadyParams { delta_m: 0.0, gamma_m: 1.0, kerr_k: 1.0, drive_amp: 0.8 * c.omega_c };
        let grid: Vec<f64> = (0..400).map(|i| -1.0 + i as f64 * 0.01).collect();
        let s = sweep(&p, &grid).unwrap();
        assert_eq!(s.branch_count, 1);
        assert_eq!(s.records.len(), grid.len());
        assert!(s.records.iter().all(|r| r.stable));
    }

    #[test]
    fn sweep_csv_header_and_rows() {
        let p = SteadyParams { delta_m: 0.0, gamma_m: 1.0, kerr_k: 1.0, drive_amp: 0.1 };
        let csv = sweep(&p, &[0.0, 0.5]).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "delta_m,kappa,stable,r,branch_id");
        assert_eq!(lines.len(), 3);
    }

    proptest! {
        #[test]
        fn returned_roots_are_roots(delta in -4.0f64..4.0, gamma in 0.1f64..3.0, k in -2.0f64..2.0, drive in 0.0f64..3.0) {
            let p = SteadyParams { delta_m: delta, gamma_m: gamma, kerr_k: k, drive_amp: drive };
            let branches = solve_kappa(&p);
            prop_assert!(branches.len() == 1 || branches.len() == 3);
            let (_, _, c0) = cubic_coefficients(&p);
            for b in &branches {
                let scale = c0.abs().max(1.0);
                prop_assert!(p.residual(b.kappa).abs() / scale < 1e-9);
            }
            prop_assert!(branches.windows(2).all(|w| w[0].kappa <= w[1].kappa));
        }

        #[test]
        fn stability_matches_drift_eigenvalues(kappa in -5.0f64..5.0, delta in -5.0f64..5.0, gamma in 0.01f64..3.0) {
            let eig = drift_eigenvalues(kappa, delta, gamma);
            let by_eig = eig.iter().all(|z| z.re < 1e-12);
            prop_assert_eq!(by_eig, is_stable(kappa, delta, gamma));
        }

        #[test]
        fn kerr_sign_flip_negates_branches(delta in -4.0f64..4.0, gamma in 0.1f64..3.0, k in 0.1f64..2.0, drive in 0.0f64..3.0) {
            let p = SteadyParams { delta_m: delta, gamma_m: gamma, kerr_k: k, drive_amp: drive };
            let q = SteadyParams { delta_m: -delta, kerr_k: -k, ..p };
            let a = real_roots(&p);
            let mut b: Vec<f64> = real_roots(&q).into_iter().map(|x| -x).collect();
            b.sort_by(f64::total_cmp);
            prop_assume!(a.len() == b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn squeezing_inverse_round_trip(r in -1.5f64..1.5, delta in 0.2f64..10.0) {
            let kappa = kappa_for_squeezing(r, delta);
            let back = squeezing_parameter(kappa, delta).unwrap();
            prop_assert!((back.r - r).abs() < 1e-9);
        }

        #[test]
        fn squeezing_vanishes_continuously(delta in 0.5f64..5.0, eps in 1e-9f64..1e-6) {
            let r = squeezing_parameter(eps, delta).unwrap().r;
            prop_assert!(r.abs() < 1e-5);
        }
    }
}
