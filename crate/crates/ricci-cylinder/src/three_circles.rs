//! Tube norms and the three-circles inequality for kernel elements without
//! parallel part.
//!
//! Tube norms are `∫_a^b ∫_N |h|²`, computed exactly from the profiles by
//! orthonormality of the harmonics. All comparisons happen in the log domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cross_section::{build_spectrum, Mode, ModeKind, TorusCrossSection};
use crate::deformation_solver::{classify_kernel, KernelElement};
use crate::error::{Error, Result};
use crate::expansion::{FieldRank, ModeExpansion};
use crate::profile::RadialProfile;
use crate::quadrature;

/// `∫_a^b ∫_N |h|² dvol dr`.
pub fn tube_norm(h: &ModeExpansion, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidInput(format!("tube needs a < b, got [{a}, {b}]")));
    }
    let mut acc = 0.0;
    for (_, v) in h.entries() {
        for (c, p) in v.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            acc += h.component_weight(c) * p.product(p).integrate(a, b)?;
        }
    }
    if !acc.is_finite() {
        return Err(Error::InvalidInput(format!("tube norm on [{a}, {b}] overflows")));
    }
    Ok(acc.max(0.0))
}

/// Same norm by adaptive quadrature in `r` of the slice norm.
pub fn tube_norm_quadrature(h: &ModeExpansion, a: f64, b: f64, rel_tol: f64) -> f64 {
    quadrature::integrate(|r| h.slice_norm_sq(r), a, b, 0.0, rel_tol).value
}

/// Same norm with a trapezoidal rule on an `n^d` torus grid, exact for the
/// harmonics present when `n` exceeds twice the largest frequency.
pub fn tube_norm_2d(h: &ModeExpansion, a: f64, b: f64, n: usize, rel_tol: f64) -> f64 {
    let l = h.lengths().to_vec();
    let d = l.len();
    let total = n.pow(d as u32);
    let cell: f64 = l.iter().map(|x| x / n as f64).product();
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|j| {
                    let i = idx % n;
                    idx /= n;
                    l[j] * i as f64 / n as f64
                })
                .collect()
        })
        .collect();
    let weights: Vec<f64> = (0..h.num_components()).map(|c| h.component_weight(c)).collect();
    let slice = |r: f64| {
        points
            .iter()
            .map(|x| h.eval(r, x).iter().zip(&weights).map(|(v, w)| w * v * v).sum::<f64>())
            .sum::<f64>()
            * cell
    };
    quadrature::integrate(slice, a, b, 0.0, rel_tol).value
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeNormSeries {
    pub l: f64,
    pub offsets: Vec<u32>,
    /// `‖h‖_{t L, (t+1) L}` per offset.
    pub values: Vec<f64>,
}

pub fn tube_norm_series(h: &ModeExpansion, l: f64, offsets: &[u32]) -> Result<TubeNormSeries> {
    let values = offsets
        .iter()
        .map(|&t| tube_norm(h, t as f64 * l, (t as f64 + 1.0) * l))
        .collect::<Result<_>>()?;
    Ok(TubeNormSeries { l, offsets: offsets.to_vec(), values })
}

/// Upper bound `½ log(Q(t₃)/Q(t₂))`, `Q(t) = t² + Lt + L²/3`, for `β'`.
pub fn beta_prime_log_bound(l: f64, t2: u32, t3: u32) -> f64 {
    let q = |t: f64| t * t + l * t + l * l / 3.0;
    0.5 * (q(t3 as f64) / q(t2 as f64)).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeCirclesParams {
    pub mu1: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub l: f64,
    pub triple: [u32; 3],
}

impl ThreeCirclesParams {
    pub fn validate(&self) -> Result<()> {
        let a = self.mu1.sqrt();
        if !(self.mu1 > 0.0) {
            return Err(Error::InvalidParams(format!("mu1 must be positive, got {}", self.mu1)));
        }
        if !(self.beta > 0.0 && self.beta < a) {
            return Err(Error::InvalidParams(format!("beta = {} outside (0, {a})", self.beta)));
        }
        if !(self.l > 0.0) || (2.0 * (a - self.beta) * self.l).exp() <= 2.0 {
            return Err(Error::InvalidParams(format!(
                "need exp(2(sqrt(mu1) - beta) L) > 2, got L = {}",
                self.l
            )));
        }
        let [t1, t2, t3] = self.triple;
        if !(t1 < t2 && t2 < t3) {
            return Err(Error::InvalidParams(format!("triple must increase, got {:?}", self.triple)));
        }
        let bound = self.beta.min(beta_prime_log_bound(self.l, t2, t3));
        if !(self.beta_prime < bound) {
            return Err(Error::InvalidParams(format!(
                "beta' = {} must be below {bound}",
                self.beta_prime
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeCirclesOutcome {
    pub holds: bool,
    /// `e^{-β'L}(N₁ + N₃) / N₂`; infinite when `N₂ = 0`.
    pub slack: f64,
    pub norms: [f64; 3],
}

/// Slack of `N₂ ≤ e^{-β'L}(N₁ + N₃)` without parameter validation.
pub fn three_circles_slack(h: &ModeExpansion, beta_prime: f64, l: f64, triple: [u32; 3]) -> Result<ThreeCirclesOutcome> {
    let mut norms = [0.0; 3];
    for (k, &t) in triple.iter().enumerate() {
        norms[k] = tube_norm(h, t as f64 * l, (t as f64 + 1.0) * l)?;
    }
    let [n1, n2, n3] = norms;
    let slack = if n2 == 0.0 {
        f64::INFINITY
    } else {
        let side = n1.max(n3);
        let log_sum = side.ln() + (1.0 + n1.min(n3) / side).ln();
        (-beta_prime * l + log_sum - n2.ln()).exp()
    };
    Ok(ThreeCirclesOutcome { holds: n2 <= 0.0 || slack >= 1.0, slack, norms })
}

pub fn three_circles_check(h: &ModeExpansion, p: &ThreeCirclesParams) -> Result<ThreeCirclesOutcome> {
    p.validate()?;
    three_circles_slack(h, p.beta_prime, p.l, p.triple)
}

/// `h` minus its `r`-independent kernel part.
pub fn project_out_parallel(h: &ModeExpansion, tau: f64) -> Result<ModeExpansion> {
    let dec = classify_kernel(h, tau)?;
    Ok(h.sub(&dec.parallel_part()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepClass {
    LeftDominated,
    RightDominated,
    Both,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub steps: Vec<StepClass>,
    /// Interior indices where neither neighbor dominates.
    pub violations: Vec<usize>,
    /// Indices where a growth or decay premise holds but does not propagate.
    pub propagation_failures: Vec<usize>,
}

/// Classifies every interior index of a series of consecutive tubes.
pub fn monotonicity_classify(series: &TubeNormSeries, beta_prime: f64, l: f64) -> MonotonicityReport {
    let v = &series.values;
    let q = (2.0 * beta_prime * l).exp();
    let ge = |a: f64, b: f64| a >= q * b;
    let mut steps = Vec::new();
    let mut violations = Vec::new();
    let mut propagation_failures = Vec::new();
    for j in 1..v.len().saturating_sub(1) {
        let left = ge(v[j - 1], v[j]);
        let right = ge(v[j + 1], v[j]);
        steps.push(match (left, right) {
            (true, true) => StepClass::Both,
            (true, false) => StepClass::LeftDominated,
            (false, true) => StepClass::RightDominated,
            (false, false) => {
                violations.push(j);
                StepClass::Violation
            }
        });
        // growth propagates forward, decay propagates backward
        if ge(v[j], v[j - 1]) && !ge(v[j + 1], v[j]) {
            propagation_failures.push(j);
        }
        if ge(v[j], v[j + 1]) && !ge(v[j - 1], v[j]) {
            propagation_failures.push(j);
        }
    }
    MonotonicityReport { steps, violations, propagation_failures }
}

/// Random kernel element of the form `ã r g_N + r B̃₀ + Σ (a⁺e^{√μ r} + a⁻e^{-√μ r}) B_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormH {
    pub a_tilde: f64,
    /// Coefficients of `r B` over the parallel TT modes.
    pub a0_tilde: Vec<(Mode, f64)>,
    pub exp_modes: Vec<(Mode, f64, f64)>,
}

impl FormH {
    pub fn random(cs: &TorusCrossSection, rng: &mut impl Rng, amplitude: f64) -> Result<Self> {
        let spec = build_spectrum(cs, ModeKind::TTTensor)?;
        let mut u = || amplitude * rng.gen_range(-1.0..1.0);
        let a_tilde = u();
        let mut a0 = Vec::new();
        let mut exp_modes = Vec::new();
        for m in spec.modes {
            if m.eigenvalue < 0.0 {
                return Err(Error::NegativeEigenvalue(m.eigenvalue));
            }
            if m.eigenvalue == 0.0 {
                a0.push((m, u()));
            } else {
                let (p, q) = (u(), u());
                exp_modes.push((m, p, q));
            }
        }
        Ok(FormH { a_tilde, a0_tilde: a0, exp_modes })
    }

    /// Same data with every eigenvalue scaled by `1 + shifts[i]`.
    pub fn expansion_with_shifts(&self, lengths: &[f64], shifts: &[f64]) -> Result<ModeExpansion> {
        let mut out = KernelElement::PureTrace { linear: true }.build(lengths)?.scale(self.a_tilde);
        for (m, c) in &self.a0_tilde {
            out = out.add(&ModeExpansion::from_mode(m, &RadialProfile::monomial(*c, 1), lengths));
        }
        for (i, (m, p, q)) in self.exp_modes.iter().enumerate() {
            let a = (m.eigenvalue * (1.0 + shifts.get(i).copied().unwrap_or(0.0))).sqrt();
            let prof = RadialProfile::exponential(*p, a) + RadialProfile::exponential(*q, -a);
            out = out.add(&ModeExpansion::from_mode(m, &prof, lengths));
        }
        Ok(out)
    }

    pub fn expansion(&self, lengths: &[f64]) -> Result<ModeExpansion> {
        self.expansion_with_shifts(lengths, &[])
    }
}

/// Random valid parameters with `t₃ ≤ t_max`.
pub fn random_params(mu1: f64, rng: &mut impl Rng, t_max: u32, l_range: (f64, f64)) -> ThreeCirclesParams {
    let a = mu1.sqrt();
    loop {
        let beta = a * rng.gen_range(0.05..0.95);
        let l_min = (2f64.ln() / (2.0 * (a - beta))).max(l_range.0);
        if l_min >= l_range.1 {
            continue;
        }
        let l = rng.gen_range(l_min..l_range.1) * 1.0001;
        let t1 = rng.gen_range(0..t_max - 1);
        let t2 = rng.gen_range(t1 + 1..t_max);
        let t3 = rng.gen_range(t2 + 1..=t_max);
        let bound = beta.min(beta_prime_log_bound(l, t2, t3));
        let p = ThreeCirclesParams { mu1, beta, beta_prime: bound * rng.gen_range(0.0..0.999), l, triple: [t1, t2, t3] };
        if p.validate().is_ok() {
            return p;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub passed: usize,
    pub min_slack: f64,
}

impl TrialSummary {
    pub fn pass_rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.passed as f64 / self.trials as f64
        }
    }
}

fn run_trials<F>(trials: usize, seed: u64, f: F) -> Result<TrialSummary>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ThreeCirclesOutcome> + Sync,
{
    let one = |i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        f(&mut rng)
    };
    #[cfg(feature = "parallel")]
    let outs: Vec<Result<ThreeCirclesOutcome>> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outs: Vec<Result<ThreeCirclesOutcome>> = (0..trials).map(one).collect();
    let mut s = TrialSummary { trials, passed: 0, min_slack: f64::INFINITY };
    for o in outs {
        let o = o?;
        s.passed += usize::from(o.holds);
        s.min_slack = s.min_slack.min(o.slack);
    }
    Ok(s)
}

/// Randomized suite: random `h̄` of the form above with random valid parameters.
pub fn randomized_suite(cs: &TorusCrossSection, trials: usize, seed: u64, t_max: u32, l_range: (f64, f64)) -> Result<TrialSummary> {
    let mu1 = cs.mu1();
    run_trials(trials, seed, |rng| {
        let h = FormH::random(cs, rng, 1.0)?.expansion(&cs.side_lengths)?;
        let p = random_params(mu1, rng, t_max, l_range);
        three_circles_check(&h, &p)
    })
}

/// Trials on perturbed kernel elements: every eigenvalue shifted by a
/// relative amount up to `chi`, plus an additive `chi`-sized TT field with
/// affine profile.
pub fn perturbed_three_circles_trial(
    cs: &TorusCrossSection,
    chi: f64,
    trials: usize,
    seed: u64,
    params: &ThreeCirclesParams,
) -> Result<TrialSummary> {
    params.validate()?;
    run_trials(trials, seed, |rng| {
        let form = FormH::random(cs, rng, 1.0)?;
        let shifts: Vec<f64> = (0..form.exp_modes.len()).map(|_| chi * rng.gen_range(-1.0..1.0)).collect();
        let mut h = form.expansion_with_shifts(&cs.side_lengths, &shifts)?;
        if chi > 0.0 {
            let extra = FormH::random(cs, rng, 1.0)?;
            let span = (params.triple[2] as f64 + 1.0) * params.l;
            let mut pert = ModeExpansion::zero(&cs.side_lengths, FieldRank::Sym2);
            for (m, p, _) in &extra.exp_modes {
                let prof = RadialProfile::constant(*p) + RadialProfile::monomial(rng.gen_range(-1.0..1.0) / span, 1);
                pert = pert.add(&ModeExpansion::from_mode(m, &prof, &cs.side_lengths));
            }
            let sup = pert.sup_bound(0.0, span, 64).max(f64::MIN_POSITIVE);
            h = h.add(&pert.scale(chi / sup));
        }
        three_circles_slack(&h, params.beta_prime, params.l, params.triple)
    })
}

/// Smallest `chi` in `[lo, hi]` (to bisection tolerance) with a failing
/// trial, or `None` when even `hi` passes.
pub fn perturbation_failure_threshold(
    cs: &TorusCrossSection,
    params: &ThreeCirclesParams,
    trials: usize,
    seed: u64,
    mut lo: f64,
    mut hi: f64,
    steps: usize,
) -> Result<Option<f64>> {
    let fails = |chi: f64| -> Result<bool> {
        Ok(perturbed_three_circles_trial(cs, chi, trials, seed, params)?.pass_rate() < 1.0)
    };
    if !fails(hi)? {
        return Ok(None);
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if fails(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Pure `r B̃₀` against every triple in `0..=t_max` with
/// `β' = factor · log(Q(t₃)/Q(t₂))`, so `factor > 0.5` breaks the restriction;
/// returns `(triple, slack)` per triple.
pub fn sharpness_probe(lengths: &[f64], l: f64, t_max: u32, factor: f64) -> Result<Vec<([u32; 3], f64)>> {
    let d = lengths.len();
    let spec = build_spectrum(&TorusCrossSection::new(lengths.to_vec(), 1)?, ModeKind::TTTensor)?;
    let h = match spec.modes.first() {
        Some(m) => ModeExpansion::from_mode(m, &RadialProfile::monomial(1.0, 1), lengths),
        // d = 1 has no TT tensors; the r g_N mode has the same radial profile
        None => KernelElement::PureTrace { linear: true }.build(lengths)?.scale(1.0 / (d as f64).sqrt()),
    };
    let mut out = Vec::new();
    for t1 in 0..t_max {
        for t2 in t1 + 1..t_max {
            for t3 in t2 + 1..=t_max {
                let bp = factor * 2.0 * beta_prime_log_bound(l, t2, t3);
                let o = three_circles_slack(&h, bp, l, [t1, t2, t3])?;
                out.push(([t1, t2, t3], o.slack));
            }
        }
    }
    Ok(out)
}
