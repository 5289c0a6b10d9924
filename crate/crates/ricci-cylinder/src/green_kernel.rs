//! Green kernels of `d*d + 2dd*` on the positive-eigenvalue mode sectors.
//!
//! A 1-form source splits per torus frequency into a coclosed tangential
//! part `a(r) η` and a gradient/radial part `b(r) dφ + c(r) φ dr`. The first
//! is inverted by the scalar kernel `e^{-√μ|t-s|}/(2√μ)`, the second by the
//! 4-block kernel [`Type2Kernel`]. The symbolic path ([`apply_green`]) goes
//! through the closed-form mode solves; [`GreenKernelSpec::evaluate_at`]
//! integrates the kernels by quadrature and is kept as an independent check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cross_section::{orthogonal_complement, Harmonic, Mode, ModeKind, Phase, Polarization};
use crate::error::{Error, Result};
use crate::expansion::{FieldRank, ModeExpansion};
use crate::mode_ode::{solve_mixed_mode, solve_scalar_mode, FundamentalMatrixSet};
use crate::profile::{RadialProfile, Window};
use crate::quadrature;

fn check_positive(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInput(format!("green kernel needs mu > 0, got {mu}")));
    }
    Ok(())
}

/// `e^{-√μ|t-s|} / (2√μ)`.
pub fn eval_type1(mu: f64, t: f64, s: f64) -> Result<f64> {
    check_positive(mu)?;
    let a = mu.sqrt();
    Ok((-a * (t - s).abs()).exp() / (2.0 * a))
}

/// The four coefficient blocks of the type-2 kernel at `(t, s)`.
///
/// With `X = k dφ + ℓ φ dr` and source `b dφ + c φ dr`,
/// `k(t) = ∫ μ dphi_dphi·b + dphi_dr·c ds` and
/// `ℓ(t) = ∫ μ dr_dphi·b + dr_dr·c ds`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type2Kernel {
    /// `d_Nφ(x) ⊗ d_Nφ(y)` block.
    pub dphi_dphi: f64,
    /// `φ(x) dr ⊗ d_Nφ(y)` block.
    pub dr_dphi: f64,
    /// `d_Nφ(x) ⊗ φ(y) dr` block.
    pub dphi_dr: f64,
    /// `φ(x) dr ⊗ φ(y) dr` block.
    pub dr_dr: f64,
}

pub fn eval_type2(mu: f64, t: f64, s: f64) -> Result<Type2Kernel> {
    check_positive(mu)?;
    let a = mu.sqrt();
    let u = t - s;
    let e = (-a * u.abs()).exp();
    Ok(Type2Kernel {
        dphi_dphi: (3.0 / a - u.abs()) / (8.0 * mu) * e,
        dr_dphi: u / (8.0 * a) * e,
        dphi_dr: -u / (8.0 * a) * e,
        dr_dr: (u.abs() + 3.0 / a) / 8.0 * e,
    })
}

/// A coclosed tangential source `−α(r) η` for the equation `f'' − μf = α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarTypeSource {
    pub mode: Mode,
    pub alpha: RadialProfile,
}

/// A source `b dφ + c φ dr` recorded as `β = −b`, `γ = −c/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedTypeSource {
    pub mode: Mode,
    pub beta: RadialProfile,
    pub gamma: RadialProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceExpansion {
    pub lengths: Vec<f64>,
    pub scalar_type: Vec<ScalarTypeSource>,
    pub mixed_type: Vec<MixedTypeSource>,
}

fn flip(phase: Phase) -> Phase {
    match phase {
        Phase::Cos => Phase::Sin,
        Phase::Sin => Phase::Cos,
    }
}

fn scalar_mode(h: &Harmonic, lengths: &[f64]) -> Mode {
    Mode {
        kind: ModeKind::Scalar,
        freq: h.freq.clone(),
        eigenvalue: h.eigenvalue(lengths),
        polarization: Polarization::Scalar,
        phase: h.phase,
    }
}

impl SourceExpansion {
    pub fn empty(lengths: &[f64]) -> Self {
        SourceExpansion { lengths: lengths.to_vec(), scalar_type: Vec::new(), mixed_type: Vec::new() }
    }

    pub fn num_modes(&self) -> usize {
        self.scalar_type.len() + self.mixed_type.len()
    }

    /// Splits a 1-form into mode sources; the constant-harmonic part is
    /// returned separately since it has no Green kernel.
    pub fn from_one_form(rhs: &ModeExpansion) -> Result<(SourceExpansion, ModeExpansion)> {
        rhs.check_rank(FieldRank::OneForm)?;
        let lengths = rhs.lengths().to_vec();
        let d = lengths.len();
        let zero = rhs.zero_frequency();
        let mut out = SourceExpansion::empty(&lengths);
        let mut mixed: BTreeMap<Harmonic, (RadialProfile, RadialProfile)> = BTreeMap::new();
        for (g, comps) in rhs.entries() {
            if g.is_constant() {
                continue;
            }
            let mu = g.eigenvalue(&lengths);
            // radial part belongs to φ = g
            if !comps[0].is_zero() {
                mixed.entry(g.clone()).or_default().1 += &comps[0];
            }
            // tangential gradient part belongs to the φ whose partner is g
            let phi = Harmonic { freq: g.freq.clone(), phase: flip(g.phase) };
            let (partner, f) = phi.gradient(&lengths);
            debug_assert_eq!(&partner, g);
            let mut b = RadialProfile::zero();
            for j in 0..d {
                b += &comps[j + 1].scale(f[j] / mu);
            }
            if !b.is_zero() {
                mixed.entry(phi).or_default().0 += &b;
            }
            let omega = crate::cross_section::omega(&lengths, &g.freq);
            for e in orthogonal_complement(&omega) {
                let mut a = RadialProfile::zero();
                for j in 0..d {
                    a += &comps[j + 1].scale(e[j]);
                }
                if a.is_zero() {
                    continue;
                }
                out.scalar_type.push(ScalarTypeSource {
                    mode: Mode {
                        kind: ModeKind::CoclosedOneForm,
                        freq: g.freq.clone(),
                        eigenvalue: mu,
                        polarization: Polarization::Vector(e),
                        phase: g.phase,
                    },
                    alpha: a.scale(-1.0),
                });
            }
        }
        for (phi, (b, c)) in mixed {
            out.mixed_type.push(MixedTypeSource {
                mode: scalar_mode(&phi, &lengths),
                beta: b.scale(-1.0),
                gamma: c.scale(-0.5),
            });
        }
        Ok((out, zero))
    }

    /// The 1-form `δh` this source represents.
    pub fn to_one_form(&self) -> ModeExpansion {
        let mut out = ModeExpansion::zero(&self.lengths, FieldRank::OneForm);
        for s in &self.scalar_type {
            out = out.add(&ModeExpansion::from_mode(&s.mode, &s.alpha.scale(-1.0), &self.lengths));
        }
        for s in &self.mixed_type {
            let phi = s.mode.harmonic();
            let (partner, f) = phi.gradient(&self.lengths);
            for (j, fj) in f.iter().enumerate() {
                out.add_to(&partner, j + 1, &s.beta.scale(-fj));
            }
            out.add_to(&phi, 0, &s.gamma.scale(-2.0));
        }
        out
    }
}

/// Kernel evaluation settings for the quadrature path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenKernelSpec {
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
}

impl Default for GreenKernelSpec {
    fn default() -> Self {
        GreenKernelSpec { quad_rel_tol: 1e-10, quad_abs_tol: 1e-13 }
    }
}

impl GreenKernelSpec {
    pub fn type1(&self, mu: f64, t: f64, s: f64) -> Result<f64> {
        eval_type1(mu, t, s)
    }

    pub fn type2(&self, mu: f64, t: f64, s: f64) -> Result<Type2Kernel> {
        eval_type2(mu, t, s)
    }

    /// Half-width of the `s`-window kept around `t`.
    pub fn truncation(&self, mu: f64) -> f64 {
        (40.0 + self.quad_rel_tol.ln().abs()) / mu.sqrt()
    }

    fn integrate(&self, f: impl Fn(f64) -> f64, mu: f64, t: f64, breaks: &[f64]) -> f64 {
        let w = self.truncation(mu);
        let (lo, hi) = ((t - w).max(0.0), t + w);
        let mut b = breaks.to_vec();
        b.push(t);
        quadrature::integrate_with_breaks(f, lo, hi, &b, self.quad_abs_tol, self.quad_rel_tol).value
    }

    /// The solution 1-form evaluated at radius `t` by kernel quadrature,
    /// returned as an expansion with constant profiles.
    pub fn evaluate_at(&self, source: &SourceExpansion, t: f64) -> Result<ModeExpansion> {
        let lengths = &source.lengths;
        let mut out = ModeExpansion::zero(lengths, FieldRank::OneForm);
        for s in &source.scalar_type {
            let mu = s.mode.eigenvalue;
            check_positive(mu)?;
            let src = s.alpha.restrict(Window::POSITIVE);
            let br = window_breaks(&src);
            let v = self.integrate(|x| eval_type1(mu, t, x).unwrap() * -src.eval(x), mu, t, &br);
            out = out.add(&ModeExpansion::from_mode(&s.mode, &RadialProfile::constant(v), lengths));
        }
        for s in &source.mixed_type {
            let mu = s.mode.eigenvalue;
            check_positive(mu)?;
            let b = s.beta.restrict(Window::POSITIVE).scale(-1.0);
            let c = s.gamma.restrict(Window::POSITIVE).scale(-2.0);
            let mut br = window_breaks(&b);
            br.extend(window_breaks(&c));
            let k = self.integrate(
                |x| {
                    let g = eval_type2(mu, t, x).unwrap();
                    mu * g.dphi_dphi * b.eval(x) + g.dphi_dr * c.eval(x)
                },
                mu,
                t,
                &br,
            );
            let l = self.integrate(
                |x| {
                    let g = eval_type2(mu, t, x).unwrap();
                    mu * g.dr_dphi * b.eval(x) + g.dr_dr * c.eval(x)
                },
                mu,
                t,
                &br,
            );
            let phi = s.mode.harmonic();
            let (partner, f) = phi.gradient(lengths);
            for (j, fj) in f.iter().enumerate() {
                out.add_to(&partner, j + 1, &RadialProfile::constant(k * fj));
            }
            out.add_to(&phi, 0, &RadialProfile::constant(l));
        }
        Ok(out)
    }
}

fn window_breaks(p: &RadialProfile) -> Vec<f64> {
    p.terms()
        .iter()
        .flat_map(|t| [t.window.lo, t.window.hi])
        .filter(|x| x.is_finite())
        .collect()
}

fn solve_one(lengths: &[f64], s: SourceRef<'_>) -> Result<ModeExpansion> {
    match s {
        SourceRef::Scalar(s) => {
            let f = solve_scalar_mode(s.mode.eigenvalue, &s.alpha)?;
            Ok(ModeExpansion::from_mode(&s.mode, &f, lengths))
        }
        SourceRef::Mixed(s) => {
            let sol = solve_mixed_mode(s.mode.eigenvalue, &s.beta, &s.gamma)?;
            let phi = s.mode.harmonic();
            let (partner, f) = phi.gradient(lengths);
            let mut out = ModeExpansion::zero(lengths, FieldRank::OneForm);
            for (j, fj) in f.iter().enumerate() {
                out.add_to(&partner, j + 1, &sol.k.scale(*fj));
            }
            out.add_to(&phi, 0, &sol.l);
            Ok(out)
        }
    }
}

#[derive(Clone, Copy)]
enum SourceRef<'a> {
    Scalar(&'a ScalarTypeSource),
    Mixed(&'a MixedTypeSource),
}

/// Inverts `d*d + 2dd*` mode by mode on `r > 0`.
pub fn apply_green(_spec: &GreenKernelSpec, source: &SourceExpansion) -> Result<ModeExpansion> {
    let refs: Vec<SourceRef<'_>> = source
        .scalar_type
        .iter()
        .map(SourceRef::Scalar)
        .chain(source.mixed_type.iter().map(SourceRef::Mixed))
        .collect();
    for r in &refs {
        let (mu, m) = match r {
            SourceRef::Scalar(s) => (s.mode.eigenvalue, &s.mode),
            SourceRef::Mixed(s) => (s.mode.eigenvalue, &s.mode),
        };
        if !(mu > 0.0) {
            return Err(Error::ZeroModeInGreen(format!("mode {:?} with eigenvalue {mu}", m.freq)));
        }
    }
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<ModeExpansion>> = {
        use rayon::prelude::*;
        refs.par_iter().map(|s| solve_one(&source.lengths, *s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<ModeExpansion>> =
        refs.iter().map(|s| solve_one(&source.lengths, *s)).collect();
    let mut out = ModeExpansion::zero(&source.lengths, FieldRank::OneForm);
    for p in parts {
        out = out.add(&p?);
    }
    Ok(out)
}

/// Discrete weighted `C^k` norm `Σ_{j≤k} sup ψ(r) e^{ρr} |∂_r^j h|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub k: usize,
    pub rho: f64,
    pub r_grid: Vec<f64>,
}

/// Smooth cutoff equal to 1 on `r ≥ 0` and 0 on `r ≤ -1`.
pub fn cutoff(r: f64) -> f64 {
    let x = r + 1.0;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let f = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    f(x) / (f(x) + f(1.0 - x))
}

impl WeightedNormSpec {
    pub fn lattice(k: usize, rho: f64, a: f64, b: f64, n: usize) -> Self {
        let n = n.max(1);
        WeightedNormSpec {
            k,
            rho,
            r_grid: (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect(),
        }
    }

    pub fn profile_norm(&self, p: &RadialProfile) -> f64 {
        let mut q = p.clone();
        let mut total = 0.0;
        for _ in 0..=self.k {
            total += self
                .r_grid
                .iter()
                .map(|&r| cutoff(r) * q.eval_weighted(r, self.rho).abs())
                .fold(0.0, f64::max);
            q = q.derivative();
        }
        total
    }

    pub fn expansion_norm(&self, e: &ModeExpansion) -> f64 {
        let mut q = e.clone();
        let mut total = 0.0;
        for _ in 0..=self.k {
            total += self
                .r_grid
                .iter()
                .map(|&r| cutoff(r) * q.pointwise_bound_weighted(r, self.rho))
                .fold(0.0, f64::max);
            q = q.partial(0);
        }
        total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// Coclosed tangential sources `a(r) η`.
    OneForm,
    /// Gradient/radial sources `b dφ + c φ dr`.
    Function,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub rho: f64,
    pub ratio: f64,
    pub log_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub kind: SourceKind,
    pub mu1: f64,
    pub p: f64,
    pub intercept: f64,
    pub points: Vec<BoundPoint>,
}

/// Weighted operator-norm ratio of the Green inverse on the worst single-mode
/// source `e^{-ρr}` at eigenvalue `mu`.
pub fn weighted_ratio(mu: f64, rho: f64, kind: SourceKind, samples: usize) -> Result<f64> {
    check_positive(mu)?;
    let a = mu.sqrt();
    if !(0.0..a).contains(&rho) {
        return Err(Error::InvalidInput(format!("rho = {rho} outside [0, {a})")));
    }
    let r_max = 40.0 / (a - rho);
    let grid: Vec<f64> = (0..=samples).map(|i| r_max * i as f64 / samples as f64).collect();
    let wsup = |f: &dyn Fn(f64) -> f64| grid.iter().map(|&r| f(r).abs()).fold(0.0, f64::max);
    let src = RadialProfile::exponential(1.0, -rho).restrict(Window::POSITIVE);
    match kind {
        SourceKind::OneForm => {
            let f = solve_scalar_mode(mu, &src.scale(-1.0))?;
            Ok(wsup(&|r| f.eval_weighted(r, rho)) / wsup(&|r| src.eval_weighted(r, rho)))
        }
        SourceKind::Function => {
            let mut worst: f64 = 0.0;
            for (b, c) in [(1.0 / a, 0.0), (0.0, 1.0)] {
                let sol = solve_mixed_mode(mu, &src.scale(-b), &src.scale(-0.5 * c))?;
                let x = wsup(&|r| {
                    let k = sol.k.eval_weighted(r, rho);
                    let l = sol.l.eval_weighted(r, rho);
                    (mu * k * k + l * l).sqrt()
                });
                let s = wsup(&|r| {
                    let v = src.eval_weighted(r, rho);
                    (mu * b * b * v * v + c * c * v * v).sqrt()
                });
                worst = worst.max(x / s);
            }
            Ok(worst)
        }
    }
}

/// Fits `log ratio ≈ p · (−log(√μ₁ − ρ)) + c` over the given weights.
pub fn estimate_weighted_bound(mu1: f64, rho_samples: &[f64], kind: SourceKind) -> Result<BoundFit> {
    check_positive(mu1)?;
    if rho_samples.len() < 2 {
        return Err(Error::InvalidInput("need at least two rho samples".into()));
    }
    let a = mu1.sqrt();
    let mut points = Vec::with_capacity(rho_samples.len());
    for &rho in rho_samples {
        let ratio = weighted_ratio(mu1, rho, kind, 8000)?;
        points.push(BoundPoint { rho, ratio, log_gap: -(a - rho).ln() });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.log_gap).sum::<f64>() / n;
    let my = points.iter().map(|p| p.ratio.ln()).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.log_gap - mx) * (p.ratio.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.log_gap - mx).powi(2)).sum();
    let p = sxy / sxx;
    Ok(BoundFit { kind, mu1, p, intercept: my - p * mx, points })
}

/// Coefficients `(A, B)` with `|kernel entry| ≤ (A + B u) e^{-√μ u}` for the
/// decaying propagator `V P_- e^{J u} V⁻¹`, `u ≥ 0`; rows are `(k, ℓ)`,
/// columns the `(β, γ)` source slots.
pub fn decaying_propagator_majorant(mu: f64) -> Result<[[(f64, f64); 2]; 2]> {
    check_positive(mu)?;
    let set = FundamentalMatrixSet::new(mu)?;
    let (v, vi) = (set.v(), set.v_inv());
    let mut out = [[(0.0, 0.0); 2]; 2];
    for (oi, i) in [0usize, 2].into_iter().enumerate() {
        for (oj, j) in [1usize, 3].into_iter().enumerate() {
            // block 2 of e^{Ju} e^{au} = [[1, u], [0, 1]]
            let a_ij = v[(i, 2)] * vi[(2, j)] + v[(i, 3)] * vi[(3, j)];
            let b_ij = v[(i, 2)] * vi[(3, j)];
            out[oi][oj] = (a_ij.abs(), b_ij.abs());
        }
    }
    Ok(out)
}

/// Envelope `E(r) = ∫_0^L Σ_j (A + B(r−s)) e^{−√μ(r−s)} sup|F_j| ds` for a source
/// supported in `[0, L]`, valid for `r ≥ L`; returns `(E_k, E_ℓ)`.
pub fn secular_envelope(mu: f64, support: f64, sup_beta: f64, sup_gamma: f64, r: f64) -> Result<(f64, f64)> {
    let m = decaying_propagator_majorant(mu)?;
    let a = mu.sqrt();
    // ∫_0^L e^{-a(r-s)} ds and ∫_0^L (r-s) e^{-a(r-s)} ds
    let i0 = ((-a * (r - support)).exp() - (-a * r).exp()) / a;
    let i1 = {
        let g = |u: f64| -(u / a + 1.0 / (a * a)) * (-a * u).exp();
        g(r) - g(r - support)
    };
    let sup = [sup_beta, sup_gamma];
    let e = |row: usize| (0..2).map(|j| sup[j] * (m[row][j].0 * i0 + m[row][j].1 * i1)).sum::<f64>();
    Ok((e(0), e(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Term;
    use std::f64::consts::PI;

    #[test]
    fn type1_examples() {
        assert!((eval_type1(4.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((eval_type1(1.0, 2f64.ln(), 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(eval_type1(1.0, 800.0, 0.0).unwrap() == 0.0);
        assert!(eval_type1(0.0, 1.0, 0.0).is_err());
        assert_eq!(eval_type1(2.0, 0.3, 1.1).unwrap(), eval_type1(2.0, 1.1, 0.3).unwrap());
    }

    #[test]
    fn type2_values_and_continuity() {
        let g = eval_type2(1.0, 1e-12, 0.0).unwrap();
        assert!((g.dphi_dphi - 0.375).abs() < 1e-10);
        assert!((g.dr_dr - 0.375).abs() < 1e-10);
        let p = eval_type2(1.7, 1e-8, 0.0).unwrap();
        let m = eval_type2(1.7, -1e-8, 0.0).unwrap();
        for (x, y) in [
            (p.dphi_dphi, m.dphi_dphi),
            (p.dr_dphi, m.dr_dphi),
            (p.dphi_dr, m.dphi_dr),
            (p.dr_dr, m.dr_dr),
        ] {
            assert!((x - y).abs() < 1e-7);
        }
        // symmetry G(t, s) = G(s, t)^T
        let a = eval_type2(2.0, 1.3, 0.4).unwrap();
        let b = eval_type2(2.0, 0.4, 1.3).unwrap();
        assert!((a.dr_dphi - b.dphi_dr).abs() < 1e-15);
        assert!((a.dr_dr - b.dr_dr).abs() < 1e-15);
    }

    #[test]
    fn kernel_envelope_degree_one() {
        for mu in [0.5, 1.0, 4.0 * PI * PI] {
            let a: f64 = mu.sqrt();
            for i in 0..200 {
                let u = -10.0 + 0.1 * i as f64;
                let g = eval_type2(mu, u, 0.0).unwrap();
                let env = (1.0 + u.abs()) * (3.0 / a).max(1.0) / (8.0 * mu.min(1.0)) * (-a * u.abs()).exp();
                for x in [g.dphi_dphi, g.dr_dphi, g.dphi_dr, g.dr_dr] {
                    assert!(x.abs() <= env * (1.0 + 1e-12));
                }
            }
        }
    }

    fn lengths() -> Vec<f64> {
        vec![2.0 * PI, 2.0 * PI]
    }

    fn sample_one_form() -> ModeExpansion {
        let l = lengths();
        let mut e = ModeExpansion::zero(&l, FieldRank::OneForm);
        let h1 = Harmonic { freq: vec![1, 0], phase: Phase::Cos };
        let h2 = Harmonic { freq: vec![1, 1], phase: Phase::Sin };
        e.add_to(&h1, 0, &RadialProfile::exponential(1.0, -2.0));
        e.add_to(&h1, 1, &RadialProfile::term(0.5, 1, -1.0));
        e.add_to(&h1, 2, &RadialProfile::exponential(-0.7, -0.5));
        e.add_to(&h2, 1, &RadialProfile::exponential(0.3, -3.0));
        e.add_to(&h2, 2, &RadialProfile::from_terms([Term::windowed(1.0, 0, 0.0, Window::new(0.0, 2.0))]));
        e
    }

    #[test]
    fn source_split_round_trips() {
        let e = sample_one_form();
        let (src, zero) = SourceExpansion::from_one_form(&e).unwrap();
        assert!(zero.is_zero());
        let back = src.to_one_form();
        assert!(back.sub(&e).max_coeff() < 1e-14);
    }

    #[test]
    fn green_inverts_operator_symbolically() {
        let e = sample_one_form();
        let (src, _) = SourceExpansion::from_one_form(&e).unwrap();
        let x = apply_green(&GreenKernelSpec::default(), &src).unwrap();
        let res = x.hodge_operator().unwrap().sub(&e);
        for r in [0.1, 0.5, 1.9, 2.1, 5.0, 20.0] {
            assert!(res.pointwise_bound(r) < 1e-12, "r={r} {}", res.pointwise_bound(r));
        }
    }

    #[test]
    fn quadrature_path_agrees_with_symbolic() {
        let e = sample_one_form();
        let spec = GreenKernelSpec::default();
        let (src, _) = SourceExpansion::from_one_form(&e).unwrap();
        let x = apply_green(&spec, &src).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let q = spec.evaluate_at(&src, t).unwrap();
            let pt = [0.4, 1.1];
            let a = x.eval(t, &pt);
            let b = q.eval(0.0, &pt);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-9, "t={t} {u} {v}");
            }
        }
    }

    #[test]
    fn zero_mode_rejected() {
        let l = lengths();
        let c = Harmonic::constant(2);
        let e = ModeExpansion::single(&l, FieldRank::OneForm, c.clone(), 0, RadialProfile::constant(1.0));
        let (src, zero) = SourceExpansion::from_one_form(&e).unwrap();
        assert_eq!(src.num_modes(), 0);
        assert!(!zero.is_zero());
        let bad = SourceExpansion {
            lengths: l.clone(),
            scalar_type: vec![],
            mixed_type: vec![MixedTypeSource {
                mode: scalar_mode(&c, &l),
                beta: RadialProfile::constant(1.0),
                gamma: RadialProfile::zero(),
            }],
        };
        assert!(matches!(apply_green(&GreenKernelSpec::default(), &bad), Err(Error::ZeroModeInGreen(_))));
    }

    #[test]
    fn ratio_at_zero_weight_matches_direct_convolution() {
        let mu = 2.0;
        let r = weighted_ratio(mu, 0.0, SourceKind::OneForm, 4000).unwrap();
        // sup_t ∫_0^∞ e^{-a|t-s|}/(2a) ds = 1/μ
        assert!((r - 1.0 / mu).abs() < 1e-3 / mu);
    }

    #[test]
    fn exponent_fits() {
        let mu1 = 1.0;
        let rhos: Vec<f64> = [0.5, 0.8, 0.9, 0.95, 0.99].iter().map(|x| x * mu1).collect();
        let f1 = estimate_weighted_bound(mu1, &rhos, SourceKind::OneForm).unwrap();
        let f2 = estimate_weighted_bound(mu1, &rhos, SourceKind::Function).unwrap();
        assert!(f1.p <= 1.15 && f1.p > 0.8, "{}", f1.p);
        assert!(f2.p <= 2.15 && f2.p > 1.6, "{}", f2.p);
    }

    #[test]
    fn envelope_dominates_secular_free_solution() {
        let mu = 1.0;
        let beta = RadialProfile::from_terms([Term::windowed(1.0, 0, 0.0, Window::new(0.0, 10.0))]);
        let s = solve_mixed_mode(mu, &beta, &RadialProfile::zero()).unwrap();
        for i in 0..=40 {
            let r = 10.0 + i as f64;
            let (ek, el) = secular_envelope(mu, 10.0, 1.0, 0.0, r).unwrap();
            assert!(s.k.eval(r).abs() <= 2.0 * ek + 1e-300);
            assert!(s.l.eval(r).abs() <= 2.0 * el + 1e-300);
        }
    }
}
