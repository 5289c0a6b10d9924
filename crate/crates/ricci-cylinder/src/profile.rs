//! Radial profiles: finite sums of windowed exponential-polynomial terms.
//!
//! A term is `coeff * r^power * exp(rate * (r - anchor))` restricted to a
//! half-open window `[lo, hi)`. The anchor is `lo` when finite, else `hi`
//! when finite, else `0`, which keeps the exponential factor of order one on
//! bounded windows. Products, exponential shifts and antiderivatives stay
//! inside this class, so convolution solves are exact term lists and any
//! cancellation between growing contributions happens in the coefficients
//! rather than in floating point evaluation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates closer to zero than this are integrated as polynomials.
const RATE_ZERO: f64 = 1e-12;
const RATE_MERGE_REL: f64 = 1e-13;

/// Half-open interval `[lo, hi)`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "WindowRepr", into = "WindowRepr")]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct WindowRepr {
    #[serde(default)]
    lo: Option<f64>,
    #[serde(default)]
    hi: Option<f64>,
}

impl From<WindowRepr> for Window {
    fn from(w: WindowRepr) -> Self {
        Window {
            lo: w.lo.unwrap_or(f64::NEG_INFINITY),
            hi: w.hi.unwrap_or(f64::INFINITY),
        }
    }
}

impl From<Window> for WindowRepr {
    fn from(w: Window) -> Self {
        WindowRepr {
            lo: w.lo.is_finite().then_some(w.lo),
            hi: w.hi.is_finite().then_some(w.hi),
        }
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::ALL
    }
}

impl Window {
    pub const ALL: Window = Window { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const POSITIVE: Window = Window { lo: 0.0, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Window { lo: lo + 0.0, hi: hi + 0.0 }
    }

    pub fn all() -> Self {
        Window::ALL
    }

    pub fn is_all(&self) -> bool {
        *self == Window::ALL
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r < self.hi
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn anchor(&self) -> f64 {
        if self.lo.is_finite() {
            self.lo
        } else if self.hi.is_finite() {
            self.hi
        } else {
            0.0
        }
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let w = Window { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) };
        (!w.is_empty()).then_some(w)
    }

    fn clamp(&self, r: f64) -> f64 {
        r.max(self.lo).min(self.hi)
    }

    fn cmp_key(&self, other: &Window) -> Ordering {
        self.lo.total_cmp(&other.lo).then(self.hi.total_cmp(&other.hi))
    }
}

/// One term `coeff * r^power * exp(rate * (r - anchor))` on `window`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    #[serde(default)]
    pub power: u32,
    #[serde(default)]
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Window::is_all")]
    pub window: Window,
}

impl Term {
    pub fn new(coeff: f64, power: u32, rate: f64) -> Self {
        Term { coeff, power, rate, window: Window::ALL }
    }

    pub fn windowed(coeff: f64, power: u32, rate: f64, window: Window) -> Self {
        Term { coeff, power, rate, window }
    }

    pub fn anchor(&self) -> f64 {
        self.window.anchor()
    }

    pub fn value(&self, r: f64) -> f64 {
        if !self.window.contains(r) {
            return 0.0;
        }
        let e = if self.rate == 0.0 { 1.0 } else { (self.rate * (r - self.anchor())).exp() };
        self.coeff * r.powi(self.power as i32) * e
    }

    /// `value(r) * exp(w r)` with the exponentials combined before evaluation.
    pub fn value_weighted(&self, r: f64, w: f64) -> f64 {
        if !self.window.contains(r) || self.coeff == 0.0 {
            return 0.0;
        }
        let x = self.rate * (r - self.anchor()) + w * r;
        let p = r.powi(self.power as i32);
        if p == 0.0 {
            return 0.0;
        }
        self.coeff * p * x.exp()
    }

    fn same_key(&self, o: &Term) -> bool {
        self.window == o.window
            && self.power == o.power
            && (self.rate - o.rate).abs() <= RATE_MERGE_REL * self.rate.abs().max(1.0)
    }

    fn cmp_key(&self, o: &Term) -> Ordering {
        self.window
            .cmp_key(&o.window)
            .then(self.power.cmp(&o.power))
            .then(self.rate.total_cmp(&o.rate))
    }

    /// Antiderivative pieces `(coeff, power, rate)` sharing this term's anchor.
    fn antiderivative(&self) -> Vec<(f64, u32, f64)> {
        let p = self.power;
        if self.rate.abs() < RATE_ZERO {
            return vec![(self.coeff / (p as f64 + 1.0), p + 1, 0.0)];
        }
        let lam = self.rate;
        let mut out = Vec::with_capacity(p as usize + 1);
        let mut falling = 1.0;
        let mut lam_pow = lam;
        for j in 0..=p {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            out.push((self.coeff * sign * falling / lam_pow, p - j, lam));
            falling *= (p - j) as f64;
            lam_pow *= lam;
        }
        out
    }
}

/// Evaluates antiderivative pieces at `s`, taking limits at infinity.
fn eval_pieces(pieces: &[(f64, u32, f64)], anchor: f64, s: f64) -> Result<f64> {
    let mut acc = 0.0;
    for &(c, p, lam) in pieces {
        if c == 0.0 {
            continue;
        }
        if s.is_infinite() {
            let decays = if s > 0.0 { lam < -RATE_ZERO } else { lam > RATE_ZERO };
            if !decays {
                return Err(Error::DivergentConvolution(format!(
                    "term r^{p} e^({lam} r) has no limit at r = {s}"
                )));
            }
            continue;
        }
        let e = if lam == 0.0 { 1.0 } else { (lam * (s - anchor)).exp() };
        acc += c * s.powi(p as i32) * e;
    }
    Ok(acc)
}

/// A radial profile in canonical form: merged, sorted, no exact zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RadialProfile {
    terms: Vec<Term>,
}

impl RadialProfile {
    pub fn zero() -> Self {
        RadialProfile { terms: Vec::new() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut p = RadialProfile { terms: terms.into_iter().collect() };
        p.normalize();
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([Term::new(c, 0, 0.0)])
    }

    pub fn monomial(c: f64, power: u32) -> Self {
        Self::from_terms([Term::new(c, power, 0.0)])
    }

    pub fn exponential(c: f64, rate: f64) -> Self {
        Self::from_terms([Term::new(c, 0, rate)])
    }

    pub fn term(c: f64, power: u32, rate: f64) -> Self {
        Self::from_terms([Term::new(c, power, rate)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn normalize(&mut self) {
        for t in &mut self.terms {
            t.rate += 0.0;
            t.window = Window::new(t.window.lo, t.window.hi);
        }
        self.terms.retain(|t| t.coeff != 0.0 && !t.window.is_empty());
        self.terms.sort_by(|a, b| a.cmp_key(b));
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.same_key(&t) => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        self.terms = merged;
    }

    /// Drops terms whose coefficient is below `tol` times the largest one.
    pub fn chop(&self, tol: f64) -> Self {
        let m = self.max_coeff();
        RadialProfile {
            terms: self.terms.iter().copied().filter(|t| t.coeff.abs() > tol * m).collect(),
        }
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.value(r)).sum()
    }

    /// `eval(r) * exp(w r)` without forming the possibly overflowing factors.
    pub fn eval_weighted(&self, r: f64, w: f64) -> f64 {
        self.terms.iter().map(|t| t.value_weighted(r, w)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    /// Piecewise derivative; jumps at window edges are not represented.
    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.power > 0 {
                out.push(Term { coeff: t.coeff * t.power as f64, power: t.power - 1, ..*t });
            }
            if t.rate != 0.0 {
                out.push(Term { coeff: t.coeff * t.rate, ..*t });
            }
        }
        Self::from_terms(out)
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// Multiplies by `r`.
    pub fn mul_r(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.power += 1;
        }
        out
    }

    /// Multiplies by `exp(kappa r)`.
    pub fn mul_exp(&self, kappa: f64) -> Self {
        if kappa == 0.0 {
            return self.clone();
        }
        Self::from_terms(self.terms.iter().map(|t| Term {
            coeff: t.coeff * (kappa * t.anchor()).exp(),
            rate: t.rate + kappa,
            ..*t
        }))
    }

    pub fn product(&self, other: &RadialProfile) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let Some(w) = a.window.intersect(&b.window) else { continue };
                let anc = w.anchor();
                let shift = a.rate * (anc - a.anchor()) + b.rate * (anc - b.anchor());
                out.push(Term {
                    coeff: a.coeff * b.coeff * shift.exp(),
                    power: a.power + b.power,
                    rate: a.rate + b.rate,
                    window: w,
                });
            }
        }
        Self::from_terms(out)
    }

    /// Restricts every term to `w`, re-anchoring as needed.
    pub fn restrict(&self, w: Window) -> Self {
        Self::from_terms(self.terms.iter().filter_map(|t| {
            let nw = t.window.intersect(&w)?;
            let shift = t.rate * (nw.anchor() - t.anchor());
            Some(Term { coeff: t.coeff * shift.exp(), window: nw, ..*t })
        }))
    }

    /// Exact `∫_a^b`; infinite limits are accepted when the integral converges.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return self.integrate(b, a).map(|v| -v);
        }
        let mut acc = 0.0;
        for t in &self.terms {
            let lo = a.max(t.window.lo);
            let hi = b.min(t.window.hi);
            if !(lo < hi) {
                continue;
            }
            let g = t.antiderivative();
            acc += eval_pieces(&g, t.anchor(), hi)? - eval_pieces(&g, t.anchor(), lo)?;
        }
        Ok(acc)
    }

    /// The profile `r ↦ ∫_{r0}^r self(s) ds`; `r0` may be `±∞`.
    pub fn integral_from(&self, r0: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(3 * self.terms.len());
        for t in &self.terms {
            let w = t.window;
            let anc = t.anchor();
            let g = t.antiderivative();
            let g0 = eval_pieces(&g, anc, w.clamp(r0))?;
            if w.lo.is_finite() {
                let below = eval_pieces(&g, anc, w.lo)? - g0;
                out.push(Term::windowed(below, 0, 0.0, Window::new(f64::NEG_INFINITY, w.lo)));
            }
            for &(c, p, lam) in &g {
                out.push(Term::windowed(c, p, lam, w));
            }
            out.push(Term::windowed(-g0, 0, 0.0, w));
            if w.hi.is_finite() {
                let above = eval_pieces(&g, anc, w.hi)? - g0;
                out.push(Term::windowed(above, 0, 0.0, Window::new(w.hi, f64::INFINITY)));
            }
        }
        Ok(Self::from_terms(out))
    }

    /// `r ↦ ∫_r^∞ self(s) ds`.
    pub fn tail_integral(&self) -> Result<Self> {
        Ok(-self.integral_from(f64::INFINITY)?)
    }

    /// Largest rate among terms whose window reaches `+∞`.
    pub fn rate_at_infinity(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| t.window.hi == f64::INFINITY)
            .map(|t| t.rate)
            .reduce(f64::max)
    }

    /// Largest power carried with the rate `rate_at_infinity`.
    pub fn power_at_infinity(&self) -> Option<u32> {
        let r = self.rate_at_infinity()?;
        self.terms
            .iter()
            .filter(|t| t.window.hi == f64::INFINITY && t.rate == r)
            .map(|t| t.power)
            .max()
    }

    pub fn max_power(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    /// Sampled sup of `|self|` on `[a, b]` with `n + 1` equispaced points.
    pub fn sup_abs(&self, a: f64, b: f64, n: usize) -> f64 {
        let n = n.max(1);
        (0..=n)
            .map(|i| self.eval(a + (b - a) * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_sampled(&self, a: f64, b: f64, n: usize) -> Result<SampledProfile> {
        SampledProfile::from_fn(|r| self.eval(r), a, b, n)
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            if t.power > 0 {
                write!(f, "·r^{}", t.power)?;
            }
            if t.rate != 0.0 {
                write!(f, "·e^({}(r-{}))", t.rate, t.anchor())?;
            }
            if !t.window.is_all() {
                write!(f, "[{}, {})", t.window.lo, t.window.hi)?;
            }
        }
        Ok(())
    }
}

impl Add<&RadialProfile> for &RadialProfile {
    type Output = RadialProfile;
    fn add(self, rhs: &RadialProfile) -> RadialProfile {
        RadialProfile::from_terms(self.terms.iter().chain(rhs.terms.iter()).copied())
    }
}

impl Add for RadialProfile {
    type Output = RadialProfile;
    fn add(self, rhs: RadialProfile) -> RadialProfile {
        &self + &rhs
    }
}

impl AddAssign<&RadialProfile> for RadialProfile {
    fn add_assign(&mut self, rhs: &RadialProfile) {
        self.terms.extend_from_slice(&rhs.terms);
        self.normalize();
    }
}

impl Sub<&RadialProfile> for &RadialProfile {
    type Output = RadialProfile;
    fn sub(self, rhs: &RadialProfile) -> RadialProfile {
        self + &(-rhs)
    }
}

impl Sub for RadialProfile {
    type Output = RadialProfile;
    fn sub(self, rhs: RadialProfile) -> RadialProfile {
        &self - &rhs
    }
}

impl Neg for &RadialProfile {
    type Output = RadialProfile;
    fn neg(self) -> RadialProfile {
        self.scale(-1.0)
    }
}

impl Neg for RadialProfile {
    type Output = RadialProfile;
    fn neg(self) -> RadialProfile {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &RadialProfile {
    type Output = RadialProfile;
    fn mul(self, s: f64) -> RadialProfile {
        self.scale(s)
    }
}

impl Mul<f64> for RadialProfile {
    type Output = RadialProfile;
    fn mul(self, s: f64) -> RadialProfile {
        self.scale(s)
    }
}

/// Natural cubic spline through samples; zero outside the sampled range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    r: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
}

impl SampledProfile {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r.len() != v.len() {
            return Err(Error::InvalidInput("sampled profile needs >= 2 matching samples".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("sample abscissae must increase strictly".into()));
        }
        let m = natural_spline_moments(&r, &v);
        Ok(SampledProfile { r, v, m })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || n < 1 {
            return Err(Error::InvalidInput(format!("bad sampling range [{a}, {b}] with n = {n}")));
        }
        let r: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let v = r.iter().map(|&x| f(x)).collect();
        Self::new(r, v)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r[0], self.r[self.r.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn sup_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.range();
        if x < a || x > b {
            return 0.0;
        }
        let i = match self.r.partition_point(|&ri| ri <= x) {
            0 => 0,
            k => (k - 1).min(self.r.len() - 2),
        };
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let s = 1.0 - t;
        s * self.v[i]
            + t * self.v[i + 1]
            + h * h / 6.0 * ((s * s * s - s) * self.m[i] + (t * t * t - t) * self.m[i + 1])
    }
}

fn natural_spline_moments(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior moments.
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        let h0 = r[i] - r[i - 1];
        let h1 = r[i + 1] - r[i];
        diag[j] = 2.0 * (h0 + h1);
        upper[j] = h1;
        rhs[j] = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
    }
    for j in 1..k {
        let lower = r[j + 1] - r[j];
        let w = lower / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn merge_and_prune() {
        let p = RadialProfile::from_terms([
            Term::new(1.0, 1, -1.0),
            Term::new(2.0, 1, -1.0),
            Term::new(3.0, 0, 0.0),
            Term::new(-3.0, 0, 0.0),
        ]);
        assert_eq!(p.len(), 1);
        assert_eq!(p.terms()[0].coeff, 3.0);
    }

    #[test]
    fn eval_matches_formula() {
        let p = RadialProfile::from_terms([Term::new(2.0, 1, -0.5), Term::new(-1.0, 0, 0.25)]);
        let r = 1.7f64;
        let want = 2.0 * r * (-0.5 * r).exp() - (0.25 * r).exp();
        assert!(close(p.eval(r), want, 1e-15));
    }

    #[test]
    fn windowed_anchor_keeps_factor_small() {
        let t = Term::windowed(1.0, 0, -3.0, Window::new(100.0, f64::INFINITY));
        assert_eq!(t.value(100.0), 1.0);
        assert_eq!(t.value(99.0), 0.0);
    }

    #[test]
    fn mul_exp_and_mul_agree() {
        let p = RadialProfile::from_terms([Term::windowed(1.5, 2, 0.3, Window::new(1.0, 4.0))]);
        let q = p.mul_exp(-0.7);
        let e = RadialProfile::exponential(1.0, -0.7);
        let q2 = p.product(&e);
        for &r in &[0.5, 1.0, 2.2, 3.9, 4.1] {
            assert!(close(q.eval(r), q2.eval(r), 1e-14));
            assert!(close(q.eval(r), p.eval(r) * (-0.7 * r).exp(), 1e-14));
        }
    }

    #[test]
    fn derivative_of_r_exp() {
        let p = RadialProfile::term(1.0, 1, -2.0);
        let d = p.derivative();
        let r = 0.9f64;
        assert!(close(d.eval(r), (1.0 - 2.0 * r) * (-2.0 * r).exp(), 1e-15));
    }

    #[test]
    fn integral_from_zero_polynomial_exp() {
        let p = RadialProfile::term(1.0, 2, -1.0);
        let g = p.integral_from(0.0).unwrap();
        // ∫_0^r s^2 e^{-s} ds = 2 - e^{-r}(r^2 + 2r + 2)
        for &r in &[0.0, 0.5, 3.0, -1.0] {
            let want = 2.0 - (-r as f64).exp() * (r * r + 2.0 * r + 2.0);
            assert!(close(g.eval(r), want, 1e-13), "r={r}");
        }
    }

    #[test]
    fn integral_from_infinity_and_divergence() {
        let p = RadialProfile::exponential(1.0, -2.0);
        let t = p.tail_integral().unwrap();
        assert!(close(t.eval(1.0), (-2.0f64).exp() / 2.0, 1e-14));
        assert!(matches!(
            RadialProfile::exponential(1.0, 0.5).tail_integral(),
            Err(Error::DivergentConvolution(_))
        ));
    }

    #[test]
    fn windowed_integral_is_piecewise() {
        let p = RadialProfile::from_terms([Term::windowed(2.0, 0, 0.0, Window::new(1.0, 3.0))]);
        let g = p.integral_from(0.0).unwrap();
        assert_eq!(g.eval(0.5), 0.0);
        assert!(close(g.eval(2.0), 2.0, 1e-15));
        assert!(close(g.eval(10.0), 4.0, 1e-15));
        assert!(close(p.integrate(0.0, f64::INFINITY).unwrap(), 4.0, 1e-15));
    }

    #[test]
    fn near_zero_rate_integrates_as_polynomial() {
        let p = RadialProfile::term(1.0, 1, 1e-15);
        let g = p.integral_from(0.0).unwrap();
        assert!(close(g.eval(2.0), 2.0, 1e-12));
    }

    #[test]
    fn spline_reproduces_smooth_profile() {
        let p = RadialProfile::term(1.0, 1, -0.5);
        let s = p.to_sampled(0.0, 10.0, 400).unwrap();
        for i in 0..97 {
            let r = 0.1 + 0.1 * i as f64;
            assert!((s.eval(r) - p.eval(r)).abs() < 1e-6);
        }
        assert_eq!(s.eval(-1.0), 0.0);
    }

    #[test]
    fn serde_round_trip_keeps_infinite_windows() {
        let p = RadialProfile::from_terms([
            Term::windowed(1.0, 1, -1.0, Window::new(0.0, f64::INFINITY)),
            Term::new(2.0, 0, 0.0),
        ]);
        let s = serde_json::to_string(&p).unwrap();
        let q: RadialProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
