//! Radial ODEs obtained by separating `(d*d + 2dd*)X = δh` in torus modes.
//!
//! For a coclosed tangential 1-form `η` with `Δη = μη`, the field `X = f(r)η`
//! gives the scalar equation `f'' - μ f = α` with `α = -(source coefficient)`.
//! For a scalar eigenfunction `φ`, `X = k(r) dφ + ℓ(r) φ dr` gives
//!
//! ```text
//! (d*d + 2dd*)X = (-k'' + 2μk - ℓ') dφ + (-2ℓ'' + μk' + μℓ) φ dr
//! ```
//!
//! so a source `b dφ + c φ dr` turns into the first-order system
//! `u' = A u + (0, β, 0, γ)` on `u = (k, k', ℓ, ℓ')` with `β = -b`, `γ = -c/2`.
//!
//! Solutions are built by variation of parameters with the closed-form
//! fundamental matrices. Rows of `Ψ⁻¹F` that carry `e^{+√μ s}` are integrated
//! from `0`, rows carrying `e^{-√μ s}` from `+∞`, which removes every
//! `r e^{√μ r}` contribution exactly.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{RadialProfile, SampledProfile, Window};
use crate::quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    #[serde(rename = "2x2")]
    Scalar2x2,
    #[serde(rename = "4x4")]
    Mixed4x4,
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::NegativeEigenvalue(mu));
    }
    Ok(())
}

/// `A` for the 2×2 system `(f, f')' = A (f, f')`.
pub fn scalar_system_matrix(mu: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, mu, 0.0)
}

/// `A` for the 4×4 system on `(k, k', ℓ, ℓ')`.
pub fn mixed_system_matrix(mu: f64) -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        2.0 * mu, 0.0, 0.0, -1.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.5 * mu, 0.5 * mu, 0.0,
    )
}

/// Closed-form fundamental matrices for one eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalMatrixSet {
    pub mu: f64,
}

impl FundamentalMatrixSet {
    pub fn new(mu: f64) -> Result<Self> {
        check_mu(mu)?;
        Ok(FundamentalMatrixSet { mu })
    }

    fn a(&self) -> f64 {
        self.mu.sqrt()
    }

    pub fn psi0_2x2(r: f64) -> Matrix2<f64> {
        Matrix2::new(1.0, r, 0.0, 1.0)
    }

    pub fn psi_mu_2x2(&self, r: f64) -> Matrix2<f64> {
        let a = self.a();
        let (ep, em) = ((a * r).exp(), (-a * r).exp());
        Matrix2::new(ep, em, a * ep, -a * em)
    }

    pub fn psi_mu_2x2_inv(&self, r: f64) -> Matrix2<f64> {
        let a = self.a();
        let (ep, em) = ((a * r).exp(), (-a * r).exp());
        Matrix2::new(0.5 * em, 0.5 * em / a, 0.5 * ep, -0.5 * ep / a)
    }

    pub fn phi0_4x4(r: f64) -> Matrix4<f64> {
        Matrix4::new(
            1.0, r, 0.0, -0.5 * r * r, //
            0.0, 1.0, 0.0, -r, //
            0.0, 0.0, 1.0, r, //
            0.0, 0.0, 0.0, 1.0,
        )
    }

    pub fn phi0_4x4_inv(r: f64) -> Matrix4<f64> {
        Self::phi0_4x4(-r)
    }

    /// Eigenvectors and generalized eigenvectors of `A(μ)` as columns.
    pub fn v(&self) -> Matrix4<f64> {
        let a = self.a();
        let mu = self.mu;
        Matrix4::new(
            1.0, 0.0, -1.0, 0.0, //
            a, 1.0, a, -1.0, //
            a, -3.0, a, 3.0, //
            mu, -2.0 * a, -mu, -2.0 * a,
        )
    }

    pub fn v_inv(&self) -> Matrix4<f64> {
        let a = self.a();
        Matrix4::new(
            0.5, 3.0 / (8.0 * a), 1.0 / (8.0 * a), 0.0, //
            a / 4.0, 0.125, -0.125, -1.0 / (4.0 * a), //
            -0.5, 3.0 / (8.0 * a), 1.0 / (8.0 * a), 0.0, //
            a / 4.0, -0.125, 0.125, -1.0 / (4.0 * a),
        )
    }

    /// Jordan factor `e^{Jr}` with blocks for `+√μ` then `-√μ`.
    pub fn jordan(&self, r: f64) -> Matrix4<f64> {
        let a = self.a();
        let (ep, em) = ((a * r).exp(), (-a * r).exp());
        Matrix4::new(
            ep, r * ep, 0.0, 0.0, //
            0.0, ep, 0.0, 0.0, //
            0.0, 0.0, em, r * em, //
            0.0, 0.0, 0.0, em,
        )
    }

    pub fn jordan_inv(&self, r: f64) -> Matrix4<f64> {
        let a = self.a();
        let (ep, em) = ((a * r).exp(), (-a * r).exp());
        Matrix4::new(
            em, -r * em, 0.0, 0.0, //
            0.0, em, 0.0, 0.0, //
            0.0, 0.0, ep, -r * ep, //
            0.0, 0.0, 0.0, ep,
        )
    }

    pub fn psi_mu_4x4(&self, r: f64) -> Matrix4<f64> {
        self.v() * self.jordan(r)
    }

    pub fn psi_mu_4x4_inv(&self, r: f64) -> Matrix4<f64> {
        self.jordan_inv(r) * self.v_inv()
    }
}

/// Fundamental matrix of the requested system; polynomial form at `μ = 0`.
pub fn fundamental_matrix(system: SystemKind, mu: f64, r: f64) -> Result<DMatrix<f64>> {
    let set = FundamentalMatrixSet::new(mu)?;
    Ok(match (system, mu == 0.0) {
        (SystemKind::Scalar2x2, true) => to_dyn2(FundamentalMatrixSet::psi0_2x2(r)),
        (SystemKind::Scalar2x2, false) => to_dyn2(set.psi_mu_2x2(r)),
        (SystemKind::Mixed4x4, true) => to_dyn4(FundamentalMatrixSet::phi0_4x4(r)),
        (SystemKind::Mixed4x4, false) => to_dyn4(set.psi_mu_4x4(r)),
    })
}

pub fn fundamental_matrix_inverse(system: SystemKind, mu: f64, r: f64) -> Result<DMatrix<f64>> {
    let set = FundamentalMatrixSet::new(mu)?;
    Ok(match (system, mu == 0.0) {
        (SystemKind::Scalar2x2, true) => to_dyn2(FundamentalMatrixSet::psi0_2x2(-r)),
        (SystemKind::Scalar2x2, false) => to_dyn2(set.psi_mu_2x2_inv(r)),
        (SystemKind::Mixed4x4, true) => to_dyn4(FundamentalMatrixSet::phi0_4x4_inv(r)),
        (SystemKind::Mixed4x4, false) => to_dyn4(set.psi_mu_4x4_inv(r)),
    })
}

pub fn system_matrix(system: SystemKind, mu: f64) -> Result<DMatrix<f64>> {
    check_mu(mu)?;
    Ok(match system {
        SystemKind::Scalar2x2 => to_dyn2(scalar_system_matrix(mu)),
        SystemKind::Mixed4x4 => to_dyn4(mixed_system_matrix(mu)),
    })
}

fn to_dyn2(m: Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_iterator(2, 2, m.iter().copied())
}

fn to_dyn4(m: Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_iterator(4, 4, m.iter().copied())
}

/// Central difference of a matrix function with one Richardson step.
pub fn richardson_derivative(f: impl Fn(f64) -> DMatrix<f64>, r: f64, h: f64) -> DMatrix<f64> {
    let d = |h: f64| (f(r + h) - f(r - h)) / (2.0 * h);
    (d(0.5 * h) * 4.0 - d(h)) / 3.0
}

/// Diagnostics of a fundamental matrix at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalResidual {
    pub r: f64,
    /// Max over columns of `|Ψ' - AΨ|` relative to the column norm.
    pub ode_residual: f64,
    /// Max entry of `ΨΨ⁻¹ - I`.
    pub inverse_residual: f64,
}

pub fn fundamental_residual(system: SystemKind, mu: f64, r: f64) -> Result<FundamentalResidual> {
    let a = system_matrix(system, mu)?;
    let psi = fundamental_matrix(system, mu, r)?;
    let h = 2e-3 / (1.0 + mu.sqrt());
    let dpsi = richardson_derivative(|s| fundamental_matrix(system, mu, s).expect("valid mu"), r, h);
    let res = dpsi - &a * &psi;
    let ode_residual = (0..psi.ncols())
        .map(|j| res.column(j).norm() / psi.column(j).norm())
        .fold(0.0, f64::max);
    let inv = fundamental_matrix_inverse(system, mu, r)?;
    let id = DMatrix::<f64>::identity(psi.nrows(), psi.ncols());
    let inverse_residual = (&psi * &inv - id).amax();
    Ok(FundamentalResidual { r, ode_residual, inverse_residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRoot {
    pub value: f64,
    pub algebraic: usize,
    pub geometric: usize,
    pub shifted_rank: usize,
}

pub fn matrix_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax.max(1.0)).count()
}

/// Roots of `(λ² - μ)² = 0` for the 4×4 system, with geometric
/// multiplicities measured from `rank(A - λI)`.
pub fn check_characteristic(mu: f64) -> Result<Vec<CharacteristicRoot>> {
    check_mu(mu)?;
    let a = to_dyn4(mixed_system_matrix(mu));
    let roots: Vec<(f64, usize)> =
        if mu == 0.0 { vec![(0.0, 4)] } else { vec![(mu.sqrt(), 2), (-mu.sqrt(), 2)] };
    Ok(roots
        .into_iter()
        .map(|(value, algebraic)| {
            let shifted = &a - DMatrix::<f64>::identity(4, 4) * value;
            let shifted_rank = matrix_rank(&shifted, 1e-10);
            CharacteristicRoot { value, algebraic, geometric: 4 - shifted_rank, shifted_rank }
        })
        .collect())
}

/// Solves `f'' - μ f = α` on the half-line.
///
/// For `μ > 0` this is the convolution `-(1/2√μ) ∫_0^∞ e^{-√μ|r-s|} α(s) ds`,
/// the unique solution without `e^{√μ r}` growth; for `μ = 0` it is
/// `∫_0^r (r - s) α(s) ds`. The returned profile is exact and defined for all
/// `r`; on `r < 0` it continues the homogeneous solution.
pub fn solve_scalar_mode(mu: f64, alpha: &RadialProfile) -> Result<RadialProfile> {
    check_mu(mu)?;
    if alpha.is_zero() {
        return Ok(RadialProfile::zero());
    }
    if mu == 0.0 {
        let first = alpha.integral_from(0.0)?;
        let second = alpha.mul_r().integral_from(0.0)?;
        return Ok(&first.mul_r() - &second);
    }
    let a = mu.sqrt();
    let src = alpha.restrict(Window::POSITIVE);
    let inner = src.mul_exp(a).integral_from(0.0)?;
    let outer = src.mul_exp(-a).tail_integral().map_err(|_| {
        Error::DivergentConvolution(format!("source grows at least like e^({a} r)"))
    })?;
    let f = &inner.mul_exp(-a) + &outer.mul_exp(a);
    Ok(f.scale(-0.5 / a))
}

/// Solution of the 4×4 system with its derivative components.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MixedSolution {
    pub k: RadialProfile,
    pub dk: RadialProfile,
    pub l: RadialProfile,
    pub dl: RadialProfile,
}

/// Solves `u' = A(μ) u + (0, β, 0, γ)` for `u = (k, k', ℓ, ℓ')`, `μ > 0`.
pub fn solve_mixed_mode(mu: f64, beta: &RadialProfile, gamma: &RadialProfile) -> Result<MixedSolution> {
    check_mu(mu)?;
    if mu == 0.0 {
        return solve_mixed_mode_zero(beta, gamma);
    }
    if beta.is_zero() && gamma.is_zero() {
        return Ok(MixedSolution::default());
    }
    let set = FundamentalMatrixSet::new(mu)?;
    let a = mu.sqrt();
    let vi = set.v_inv();
    let b = beta.restrict(Window::POSITIVE);
    let g = gamma.restrict(Window::POSITIVE);
    // V⁻¹ (0, β, 0, γ)
    let v: Vec<RadialProfile> =
        (0..4).map(|i| &b.scale(vi[(i, 1)]) + &g.scale(vi[(i, 3)])).collect();
    let diverge = |_| Error::DivergentConvolution(format!("source grows at least like e^({a} r)"));
    // J(s)⁻¹ applied row by row; decaying rows integrate from +∞.
    let c1 = (&v[0] - &v[1].mul_r()).mul_exp(-a);
    let c2 = v[1].mul_exp(-a);
    let c3 = (&v[2] - &v[3].mul_r()).mul_exp(a);
    let c4 = v[3].mul_exp(a);
    let w1 = c1.integral_from(f64::INFINITY).map_err(diverge)?;
    let w2 = c2.integral_from(f64::INFINITY).map_err(diverge)?;
    let w3 = c3.integral_from(0.0)?;
    let w4 = c4.integral_from(0.0)?;
    let y1 = (&w1 + &w2.mul_r()).mul_exp(a);
    let y2 = w2.mul_exp(a);
    let y3 = (&w3 + &w4.mul_r()).mul_exp(-a);
    let y4 = w4.mul_exp(-a);
    let vm = set.v();
    let row = |i: usize| {
        let mut acc = RadialProfile::zero();
        for (j, y) in [&y1, &y2, &y3, &y4].into_iter().enumerate() {
            if vm[(i, j)] != 0.0 {
                acc += &y.scale(vm[(i, j)]);
            }
        }
        acc
    };
    Ok(MixedSolution { k: row(0), dk: row(1), l: row(2), dl: row(3) })
}

/// The `μ = 0` variant with all integrals from `0`.
pub fn solve_mixed_mode_zero(beta: &RadialProfile, gamma: &RadialProfile) -> Result<MixedSolution> {
    let (b, g) = (beta, gamma);
    // Φ₀(-s) (0, β, 0, γ)
    let w1 = (&b.mul_r().scale(-1.0) - &g.mul_r().mul_r().scale(0.5)).integral_from(0.0)?;
    let w2 = (b + &g.mul_r()).integral_from(0.0)?;
    let w3 = g.mul_r().scale(-1.0).integral_from(0.0)?;
    let w4 = g.integral_from(0.0)?;
    let k = &(&w1 + &w2.mul_r()) - &w4.mul_r().mul_r().scale(0.5);
    let dk = &w2 - &w4.mul_r();
    let l = &w3 + &w4.mul_r();
    Ok(MixedSolution { k, dk, l, dl: w4 })
}

impl MixedSolution {
    /// Sup over `[a, b]` of the residual of the 4×4 system.
    pub fn residual(&self, mu: f64, beta: &RadialProfile, gamma: &RadialProfile, a: f64, b: f64, n: usize) -> f64 {
        let e = [
            &self.k.derivative() - &self.dk,
            &(&self.dk.derivative() - &self.k.scale(2.0 * mu)) + &(&self.dl - beta),
            &self.l.derivative() - &self.dl,
            &self.dl.derivative() - &(&(&self.dk.scale(0.5 * mu) + &self.l.scale(0.5 * mu)) + gamma),
        ];
        e.iter().map(|p| p.sup_abs(a, b, n)).fold(0.0, f64::max)
    }
}

/// Result of the quadrature-based scalar solve on a truncated domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSolution {
    pub profile: SampledProfile,
    pub r_max: f64,
    pub source_sup: f64,
    pub mu: f64,
}

impl SampledSolution {
    /// Bound on the contribution a source bounded by `source_sup` beyond
    /// `r_max` would add at radius `r`.
    pub fn truncation_bound(&self, r: f64) -> f64 {
        let a = self.mu.sqrt();
        self.source_sup * (-a * (self.r_max - r)).exp() / (2.0 * self.mu)
    }
}

/// Scalar solve for a sampled source on `[0, r_max]` by adaptive
/// Gauss–Kronrod convolution at each node.
pub fn solve_scalar_mode_sampled(mu: f64, alpha: &SampledProfile, rel_tol: f64) -> Result<SampledSolution> {
    check_mu(mu)?;
    if mu == 0.0 {
        return Err(Error::InvalidInput("sampled solve requires mu > 0".into()));
    }
    let a = mu.sqrt();
    let (lo, r_max) = alpha.range();
    let lo = lo.max(0.0);
    let nodes = alpha.nodes().to_vec();
    let vals: Vec<f64> = nodes
        .iter()
        .map(|&r| {
            let q = quadrature::integrate_with_breaks(
                |s| (-a * (r - s).abs()).exp() * alpha.eval(s),
                lo,
                r_max,
                &[r],
                1e-14,
                rel_tol,
            );
            -q.value / (2.0 * a)
        })
        .collect();
    Ok(SampledSolution {
        profile: SampledProfile::new(nodes, vals)?,
        r_max,
        source_sup: alpha.sup_abs(),
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Term;
    use std::f64::consts::PI;

    #[test]
    fn printed_examples() {
        let m = fundamental_matrix(SystemKind::Scalar2x2, 0.0, 2.0).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]));
        let m = fundamental_matrix(SystemKind::Scalar2x2, 1.0, 0.0).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]));
        let m = fundamental_matrix(SystemKind::Mixed4x4, 1.0, 0.0).unwrap();
        let want = [
            1.0, 0.0, -1.0, 0.0, 1.0, 1.0, 1.0, -1.0, 1.0, -3.0, 1.0, 3.0, 1.0, -2.0, -1.0, -2.0,
        ];
        assert_eq!(m, DMatrix::from_row_slice(4, 4, &want));
    }

    #[test]
    fn rejects_negative_mu() {
        assert!(fundamental_matrix(SystemKind::Mixed4x4, -1.0, 0.0).is_err());
        assert!(solve_scalar_mode(-0.5, &RadialProfile::constant(1.0)).is_err());
    }

    #[test]
    fn v_inverse_is_exact() {
        for mu in [0.5, 1.0, 4.0, 4.0 * PI * PI] {
            let s = FundamentalMatrixSet::new(mu).unwrap();
            let e = (s.v() * s.v_inv() - Matrix4::identity()).amax();
            assert!(e < 1e-14, "mu={mu} err={e}");
        }
    }

    #[test]
    fn residuals_on_sample_radii() {
        for mu in [0.0, 0.5, 1.0, 4.0, 4.0 * PI * PI] {
            for sys in [SystemKind::Scalar2x2, SystemKind::Mixed4x4] {
                for r in [-10.0, -3.3, 0.0, 2.5, 10.0] {
                    let d = fundamental_residual(sys, mu, r).unwrap();
                    assert!(d.ode_residual < 1e-8, "{sys:?} mu={mu} r={r} {d:?}");
                    assert!(d.inverse_residual < 1e-12, "{sys:?} mu={mu} r={r} {d:?}");
                }
            }
        }
    }

    #[test]
    fn characteristic_multiplicities() {
        let r = check_characteristic(4.0).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].value, r[0].algebraic, r[0].geometric), (2.0, 2, 1));
        assert_eq!((r[1].value, r[1].algebraic, r[1].geometric), (-2.0, 2, 1));
        let r = check_characteristic(0.0).unwrap();
        assert_eq!((r[0].algebraic, r[0].geometric), (4, 2));
        assert_eq!(check_characteristic(1.0).unwrap()[0].shifted_rank, 3);
    }

    #[test]
    fn scalar_examples() {
        let f = solve_scalar_mode(1.0, &RadialProfile::exponential(1.0, -1.0)).unwrap();
        for r in [0.0, 0.7, 3.0, 12.0] {
            let want = -(r / 2.0 + 0.25) * (-r as f64).exp();
            assert!((f.eval(r) - want).abs() < 1e-14, "r={r}");
        }
        let resid = &(&f.nth_derivative(2) - &f) - &RadialProfile::exponential(1.0, -1.0);
        assert!(resid.sup_abs(0.01, 20.0, 200) < 1e-14);
        let f = solve_scalar_mode(0.0, &RadialProfile::constant(1.0)).unwrap();
        assert!((f.eval(3.0) - 4.5).abs() < 1e-14);
        assert!(solve_scalar_mode(4.0, &RadialProfile::zero()).unwrap().is_zero());
    }

    #[test]
    fn scalar_divergence_detected() {
        let e = solve_scalar_mode(1.0, &RadialProfile::exponential(1.0, 1.0));
        assert!(matches!(e, Err(Error::DivergentConvolution(_))));
    }

    #[test]
    fn mixed_solution_satisfies_system() {
        let mu = 2.3;
        let beta = RadialProfile::from_terms([Term::new(1.0, 0, -2.0), Term::new(-0.4, 1, -0.5)]);
        let gamma = RadialProfile::from_terms([Term::windowed(0.8, 0, 0.0, Window::new(0.0, 3.0))]);
        let s = solve_mixed_mode(mu, &beta, &gamma).unwrap();
        assert!(s.residual(mu, &beta, &gamma, 0.01, 2.99, 300) < 1e-12);
        assert!(s.residual(mu, &beta, &gamma, 3.01, 30.0, 300) < 1e-12);
        // no growing rate survives at infinity
        for p in [&s.k, &s.l] {
            assert!(p.rate_at_infinity().unwrap() < 0.0);
        }
    }

    #[test]
    fn mixed_zero_mu_satisfies_system() {
        let beta = RadialProfile::term(1.0, 1, -1.0);
        let gamma = RadialProfile::constant(0.3);
        let s = solve_mixed_mode(0.0, &beta, &gamma).unwrap();
        assert!(s.residual(0.0, &beta, &gamma, -2.0, 5.0, 200) < 1e-12);
    }

    #[test]
    fn windowed_source_leaves_no_secular_term() {
        let mu = 1.0;
        let beta = RadialProfile::from_terms([Term::windowed(1.0, 0, 0.0, Window::new(0.0, 10.0))]);
        let s = solve_mixed_mode(mu, &beta, &RadialProfile::zero()).unwrap();
        for r in [20.0, 50.0] {
            let env = (15.0 + r) * (-(r - 10.0f64)).exp();
            assert!(s.k.eval(r).abs() <= env && s.l.eval(r).abs() <= env);
        }
    }

    #[test]
    fn sampled_scalar_solve_matches_symbolic() {
        let mu = 4.0;
        let alpha = RadialProfile::term(1.0, 1, -1.0);
        let exact = solve_scalar_mode(mu, &alpha).unwrap();
        let sp = alpha.to_sampled(0.0, 30.0, 600).unwrap();
        let sol = solve_scalar_mode_sampled(mu, &sp, 1e-10).unwrap();
        for r in [0.5, 2.0, 10.0] {
            assert!((sol.profile.eval(r) - exact.eval(r)).abs() < 1e-6);
            assert!(sol.truncation_bound(r) < 1e-9);
        }
    }
}
