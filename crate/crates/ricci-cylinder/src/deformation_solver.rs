//! Infinitesimal Ricci deformations of the flat cylinder: the harmonic-trace
//! split, the trace-absorbing gauge field, the kernel basis of
//! `D Ric(h) = 0, δ_τ h = 0`, and the unique decomposition of kernel elements.
//!
//! Every kernel element is a finite combination of [`KernelElement`]s. At the
//! constant harmonic these are `g_N`, parallel TT tensors, their `r`-multiples
//! and the radial gauge blocks (`dr⊗dr`, `dx^j⊠dr` when `τ = 0`, their
//! `e^{-τr}` versions when `τ > 0`). At a frequency with eigenvalue `μ = a²`
//! and each sign `s = ±1` they are `e^{sar}B` for TT polarizations `B`, the
//! trace-absorbing gauge, the coclosed gauge `L_{e^{sar}η} g` and the exact
//! gauge `∇²(e^{sar}φ)/μ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cross_section::{
    build_spectrum, omega, orthogonal_complement, tt_polarizations, Harmonic, Mode, ModeKind, Phase,
    Polarization, TorusCrossSection,
};
use crate::divergence_solver::{modified_divergence, DivergenceConfig, GaugeField};
use crate::error::{Error, Result};
use crate::expansion::{sym_index, FieldRank, ModeExpansion};
use crate::profile::{RadialProfile, Term};

/// A symmetric 2-tensor with its three structural blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationTensor {
    pub expansion: ModeExpansion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralBlocks {
    /// `f(r) η₁⊠η₂`, the purely tangential entries.
    pub tangential: ModeExpansion,
    /// `k(r) η⊠dr`.
    pub mixed: ModeExpansion,
    /// `ℓ(r) φ dr⊗dr`.
    pub radial: ModeExpansion,
}

impl DeformationTensor {
    pub fn new(expansion: ModeExpansion) -> Result<Self> {
        expansion.check_rank(FieldRank::Sym2)?;
        Ok(DeformationTensor { expansion })
    }

    pub fn blocks(&self) -> StructuralBlocks {
        let e = &self.expansion;
        let n = e.n();
        let mut out = StructuralBlocks {
            tangential: ModeExpansion::zero(e.lengths(), FieldRank::Sym2),
            mixed: ModeExpansion::zero(e.lengths(), FieldRank::Sym2),
            radial: ModeExpansion::zero(e.lengths(), FieldRank::Sym2),
        };
        for (h, v) in e.entries() {
            for a in 0..n {
                for b in a..n {
                    let p = &v[sym_index(n, a, b)];
                    let target = match (a, b) {
                        (0, 0) => &mut out.radial,
                        (0, _) => &mut out.mixed,
                        _ => &mut out.tangential,
                    };
                    target.add_sym(h, a, b, p);
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Result<ModeExpansion> {
        self.expansion.trace()
    }

    pub fn divergence(&self) -> Result<ModeExpansion> {
        self.expansion.divergence()
    }
}

/// `∇*∇h − L_{δh} g − ∇² tr h`, twice the first variation of Ricci.
pub fn linearized_ricci(h: &ModeExpansion) -> Result<ModeExpansion> {
    h.linearized_ricci()
}

/// Coefficients of `c⁺ e^{√μ r} φ + c⁻ e^{-√μ r} φ` for one scalar harmonic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceCoefficient {
    pub harmonic: Harmonic,
    pub c_plus: f64,
    pub c_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSplit {
    /// Pointwise value of the affine trace part at `r = 0`.
    pub c0: f64,
    /// Its slope.
    pub c0_bar: f64,
    pub coefficients: Vec<TraceCoefficient>,
    /// The trace minus its affine part.
    pub remainder: ModeExpansion,
}

fn rel_size(res: &ModeExpansion, reference: &ModeExpansion, a: f64, b: f64) -> f64 {
    let r = res.sup_bound(a, b, 64);
    let s = reference.sup_bound(a, b, 64);
    if s > 0.0 {
        r / s
    } else {
        r
    }
}

/// Splits a harmonic trace into its `μ = 0` affine part and the
/// exponential modes.
pub fn harmonic_trace_split(h: &ModeExpansion) -> Result<TraceSplit> {
    let t = h.trace()?;
    let lap = t.rough_laplacian();
    let res = rel_size(&lap, &t.scale(1.0 + t.harmonics().map(|x| x.eigenvalue(t.lengths())).fold(0.0, f64::max)), 0.0, 1.0);
    if res > 1e-9 {
        return Err(Error::NonHarmonicTrace(res));
    }
    let lengths = t.lengths().to_vec();
    let mut out = TraceSplit { c0: 0.0, c0_bar: 0.0, coefficients: Vec::new(), remainder: t.clone() };
    for (hm, v) in t.entries() {
        let p = &v[0];
        if hm.is_constant() {
            let nz = hm.normalization(&lengths);
            out.c0 = p.eval(0.0) * nz;
            out.c0_bar = p.derivative().eval(0.0) * nz;
            continue;
        }
        let a = hm.eigenvalue(&lengths).sqrt();
        let (p0, p1) = (p.eval(0.0), p.derivative().eval(0.0));
        out.coefficients.push(TraceCoefficient {
            harmonic: hm.clone(),
            c_plus: 0.5 * (p0 + p1 / a),
            c_minus: 0.5 * (p0 - p1 / a),
        });
    }
    out.remainder = t.nonzero_frequency();
    Ok(out)
}

/// Generating 1-form of the trace-absorbing field for one harmonic and sign,
/// scaled so that `tr L_X g₀ = c e^{s√μ r} φ`.
fn absorption_generator(h: &Harmonic, sign: f64, c: f64, lengths: &[f64]) -> ModeExpansion {
    let mu = h.eigenvalue(lengths);
    let a = mu.sqrt();
    let rate = sign * a;
    let mut x = ModeExpansion::zero(lengths, FieldRank::OneForm);
    let x0 = RadialProfile::from_terms([
        Term::new(sign * c / (4.0 * a), 0, rate),
        Term::new(-c / 4.0, 1, rate),
    ]);
    x.add_to(h, 0, &x0);
    let xt = RadialProfile::from_terms([
        Term::new(-c / (2.0 * mu), 0, rate),
        Term::new(-sign * c / (4.0 * a), 1, rate),
    ]);
    let (partner, f) = h.gradient(lengths);
    for (j, fj) in f.iter().enumerate() {
        if *fj != 0.0 {
            x.add_to(&partner, j + 1, &xt.scale(*fj));
        }
    }
    x
}

/// The trace-absorbing gauge field with its Lie derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceAbsorption {
    pub coefficients: Vec<TraceCoefficient>,
    pub field: GaugeField,
    pub lie_derivative: ModeExpansion,
}

pub fn trace_absorption_field(coefficients: &[TraceCoefficient], lengths: &[f64]) -> Result<TraceAbsorption> {
    let mut x = ModeExpansion::zero(lengths, FieldRank::OneForm);
    for tc in coefficients {
        if tc.harmonic.is_constant() || tc.harmonic.dim() != lengths.len() {
            return Err(Error::InvalidInput(format!(
                "trace absorption needs a nonconstant harmonic of dimension {}, got {:?}",
                lengths.len(),
                tc.harmonic.freq
            )));
        }
        for (sign, c) in [(1.0, tc.c_plus), (-1.0, tc.c_minus)] {
            if c != 0.0 {
                x = x.add(&absorption_generator(&tc.harmonic, sign, c, lengths));
            }
        }
    }
    let lie = x.sym_grad()?;
    Ok(TraceAbsorption { coefficients: coefficients.to_vec(), field: GaugeField::new(x)?, lie_derivative: lie })
}

/// `L_X g₀` of the trace-absorbing field written block by block:
/// `dr⊗dr`: `-s c (√μ/2) r e^{s√μ r} φ`,
/// `dφ⊠dr`: `-(c/2)(r + s/√μ) e^{s√μ r}`,
/// `∇²φ`: `-(c/μ)(1 + s(√μ/2) r) e^{s√μ r}`.
pub fn trace_absorption_lie_closed_form(coefficients: &[TraceCoefficient], lengths: &[f64]) -> Result<ModeExpansion> {
    let d = lengths.len();
    let n = d + 1;
    let mut out = ModeExpansion::zero(lengths, FieldRank::Sym2);
    for tc in coefficients {
        let h = &tc.harmonic;
        if h.is_constant() {
            return Err(Error::InvalidInput("trace absorption needs nonconstant harmonics".into()));
        }
        let mu = h.eigenvalue(lengths);
        let a = mu.sqrt();
        let w = omega(lengths, &h.freq);
        let (partner, f) = h.gradient(lengths);
        for (s, c) in [(1.0, tc.c_plus), (-1.0, tc.c_minus)] {
            if c == 0.0 {
                continue;
            }
            let rate = s * a;
            out.add_to(h, 0, &RadialProfile::term(-s * c * a / 2.0, 1, rate));
            let mixed = RadialProfile::from_terms([Term::new(-c / 2.0, 1, rate), Term::new(-c * s / (2.0 * a), 0, rate)]);
            for j in 0..d {
                out.add_to(&partner, sym_index(n, 0, j + 1), &mixed.scale(f[j]));
            }
            let hess = RadialProfile::from_terms([Term::new(-c / mu, 0, rate), Term::new(-c * s / (2.0 * a), 1, rate)]);
            for i in 0..d {
                for j in i..d {
                    let wij = -w[i] * w[j];
                    if wij != 0.0 {
                        out.add_to(h, sym_index(n, i + 1, j + 1), &hess.scale(wij));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One generator of the deformation kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelElement {
    /// `g_N` (pointwise identity on the torus block), or `r g_N`.
    PureTrace { linear: bool },
    /// L²-normalized parallel TT tensor `B₀`, or `r B₀`.
    ParallelTT { mode: Mode, linear: bool },
    /// `dr⊗dr = L_{r dr/2} g₀`.
    RadialGauge,
    /// `dx^j⊠dr = L_{r dx^j} g₀`.
    HarmonicGauge { j: usize },
    /// `e^{-τr} dr⊗dr`.
    TauRadial { tau: f64 },
    /// `e^{-τr} dx^j⊠dr`.
    TauHarmonic { tau: f64, j: usize },
    /// `e^{s√μ r} B` for a TT mode `B`.
    ExpTT { mode: Mode, sign: i8 },
    /// Trace-absorbing gauge with `c^s = 1`.
    TraceAbsorption { harmonic: Harmonic, sign: i8 },
    /// `L_{e^{s√μ r} η} g₀` for a coclosed mode `η`.
    CoclosedGauge { mode: Mode, sign: i8 },
    /// `∇²(e^{s√μ r} φ) / μ = L_{d(e^{s√μ r}φ)} g₀ / (2μ)`.
    ExactGauge { harmonic: Harmonic, sign: i8 },
}

impl KernelElement {
    /// Independent of `r`.
    pub fn is_parallel(&self) -> bool {
        matches!(
            self,
            KernelElement::PureTrace { linear: false }
                | KernelElement::ParallelTT { linear: false, .. }
                | KernelElement::RadialGauge
                | KernelElement::HarmonicGauge { .. }
        )
    }

    pub fn frequency(&self, dim: usize) -> Vec<i32> {
        match self {
            KernelElement::ExpTT { mode, .. } | KernelElement::CoclosedGauge { mode, .. } => mode.freq.clone(),
            KernelElement::TraceAbsorption { harmonic, .. } | KernelElement::ExactGauge { harmonic, .. } => {
                harmonic.freq.clone()
            }
            _ => vec![0; dim],
        }
    }

    /// The generating 1-form for gauge elements.
    pub fn generator(&self, lengths: &[f64]) -> Option<ModeExpansion> {
        let d = lengths.len();
        let h0 = Harmonic::constant(d);
        let sv = h0.normalization(lengths).recip();
        match self {
            KernelElement::RadialGauge => Some(ModeExpansion::single(lengths, FieldRank::OneForm, h0, 0, RadialProfile::monomial(0.5 * sv, 1))),
            KernelElement::HarmonicGauge { j } => {
                Some(ModeExpansion::single(lengths, FieldRank::OneForm, h0, j + 1, RadialProfile::monomial(sv, 1)))
            }
            KernelElement::TauRadial { tau } => Some(ModeExpansion::single(
                lengths,
                FieldRank::OneForm,
                h0,
                0,
                RadialProfile::exponential(-0.5 * sv / tau, -tau),
            )),
            KernelElement::TauHarmonic { tau, j } => Some(ModeExpansion::single(
                lengths,
                FieldRank::OneForm,
                h0,
                j + 1,
                RadialProfile::exponential(-sv / tau, -tau),
            )),
            KernelElement::TraceAbsorption { harmonic, sign } => {
                Some(absorption_generator(harmonic, *sign as f64, 1.0, lengths))
            }
            KernelElement::CoclosedGauge { mode, sign } => {
                let a = mode.eigenvalue.sqrt();
                Some(ModeExpansion::from_mode(mode, &RadialProfile::exponential(1.0, *sign as f64 * a), lengths))
            }
            KernelElement::ExactGauge { harmonic, sign } => {
                let mu = harmonic.eigenvalue(lengths);
                let phi = ModeExpansion::single(
                    lengths,
                    FieldRank::Scalar,
                    harmonic.clone(),
                    0,
                    RadialProfile::exponential(0.5 / mu, *sign as f64 * mu.sqrt()),
                );
                phi.gradient().ok()
            }
            _ => None,
        }
    }

    pub fn build(&self, lengths: &[f64]) -> Result<ModeExpansion> {
        if let Some(x) = self.generator(lengths) {
            return x.sym_grad();
        }
        let d = lengths.len();
        let n = d + 1;
        let h0 = Harmonic::constant(d);
        let sv = h0.normalization(lengths).recip();
        match self {
            KernelElement::PureTrace { linear } => {
                let p = RadialProfile::monomial(sv, u32::from(*linear));
                let mut e = ModeExpansion::zero(lengths, FieldRank::Sym2);
                for j in 1..n {
                    e.add_sym(&h0, j, j, &p);
                }
                Ok(e)
            }
            KernelElement::ParallelTT { mode, linear } => {
                Ok(ModeExpansion::from_mode(mode, &RadialProfile::monomial(1.0, u32::from(*linear)), lengths))
            }
            KernelElement::ExpTT { mode, sign } => {
                let a = mode.eigenvalue.sqrt();
                Ok(ModeExpansion::from_mode(mode, &RadialProfile::exponential(1.0, *sign as f64 * a), lengths))
            }
            _ => unreachable!("gauge elements are built from their generators"),
        }
    }
}

fn mode(kind: ModeKind, freq: &[i32], phase: Phase, polarization: Polarization, lengths: &[f64]) -> Mode {
    Mode { kind, freq: freq.to_vec(), eigenvalue: crate::cross_section::eigenvalue(lengths, freq), polarization, phase }
}

/// Kernel generators at one frequency (both phases when nonzero).
pub fn kernel_basis_at(lengths: &[f64], freq: &[i32], tau: f64) -> Vec<KernelElement> {
    let d = lengths.len();
    let mut out = Vec::new();
    if freq.iter().all(|&k| k == 0) {
        out.push(KernelElement::PureTrace { linear: false });
        out.push(KernelElement::PureTrace { linear: true });
        for p in tt_polarizations(&vec![0.0; d]) {
            let m = mode(ModeKind::TTTensor, freq, Phase::Cos, Polarization::Matrix(p), lengths);
            out.push(KernelElement::ParallelTT { mode: m.clone(), linear: false });
            out.push(KernelElement::ParallelTT { mode: m, linear: true });
        }
        if tau == 0.0 {
            out.push(KernelElement::RadialGauge);
            out.extend((0..d).map(|j| KernelElement::HarmonicGauge { j }));
        } else {
            out.push(KernelElement::TauRadial { tau });
            out.extend((0..d).map(|j| KernelElement::TauHarmonic { tau, j }));
        }
        return out;
    }
    let w = omega(lengths, freq);
    for phase in [Phase::Cos, Phase::Sin] {
        let h = Harmonic { freq: freq.to_vec(), phase };
        for sign in [1i8, -1] {
            for p in tt_polarizations(&w) {
                let m = mode(ModeKind::TTTensor, freq, phase, Polarization::Matrix(p), lengths);
                out.push(KernelElement::ExpTT { mode: m, sign });
            }
            out.push(KernelElement::TraceAbsorption { harmonic: h.clone(), sign });
            for e in orthogonal_complement(&w) {
                let m = mode(ModeKind::CoclosedOneForm, freq, phase, Polarization::Vector(e), lengths);
                out.push(KernelElement::CoclosedGauge { mode: m, sign });
            }
            out.push(KernelElement::ExactGauge { harmonic: h.clone(), sign });
        }
    }
    out
}

/// A kernel generator together with its tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBasisElement {
    pub element: KernelElement,
    pub eigenvalue: f64,
    pub tensor: ModeExpansion,
}

/// Kernel generators of `D Ric(h) = 0, δ_τ h = 0` for every frequency of the
/// cross section, grouped by eigenvalue.
pub fn solve_reduced_system(cs: &TorusCrossSection, tau: f64) -> Result<Vec<KernelBasisElement>> {
    let cfg = DivergenceConfig::with_tau(tau);
    cfg.check_resonance(cs)?;
    let mut out = Vec::new();
    for k in cs.frequencies() {
        let mu = cs.eigenvalue(&k);
        if mu < 0.0 {
            return Err(Error::NegativeEigenvalue(mu));
        }
        for e in kernel_basis_at(&cs.side_lengths, &k, tau) {
            let tensor = e.build(&cs.side_lengths)?;
            out.push(KernelBasisElement { element: e, eigenvalue: mu, tensor });
        }
    }
    out.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    Ok(out)
}

/// Residuals `(D Ric(h), δ_τ h)` relative to the size of `h` on `[0, r_max]`.
pub fn kernel_residuals(h: &ModeExpansion, tau: f64, r_max: f64) -> Result<(f64, f64)> {
    let mu_max = h.harmonics().map(|x| x.eigenvalue(h.lengths())).fold(0.0, f64::max);
    let scale_ric = h.scale(1.0 + mu_max);
    let scale_div = h.scale(1.0 + mu_max.sqrt());
    let ric = linearized_ricci(h)?;
    let div = modified_divergence(h, tau)?;
    Ok((rel_size(&ric, &scale_ric, 0.0, r_max), rel_size(&div, &scale_div, 0.0, r_max)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpModeCoefficient {
    pub mode: Mode,
    pub a_plus: f64,
    pub a_minus: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeY {
    /// `Y ⊃ c r dr`, so `L_Y g₀ ⊃ 2c dr⊗dr`.
    pub c: f64,
    /// Coefficient of the Killing field `dr`; invisible in `h`, reported as 0.
    pub c_prime: f64,
    /// `Y ⊃ r η` with `η = Σ η_j dx^j`.
    pub eta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub element: KernelElement,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDecomposition {
    pub tau: f64,
    pub lengths: Vec<f64>,
    pub gauge_x: TraceAbsorption,
    pub gauge_y: GaugeY,
    /// `(a, ã)` with `h ⊃ a g_N + ã r g_N`.
    pub pure_trace: (f64, f64),
    pub parallel_tt: Vec<(Mode, f64)>,
    pub linear_tt: Vec<(Mode, f64)>,
    pub exp_modes: Vec<ExpModeCoefficient>,
    /// Always empty on flat tori.
    pub osc_modes: Vec<ExpModeCoefficient>,
    /// Gauge modes with exponential profiles, and the `e^{-τr}` radial modes.
    pub exp_gauge: Vec<KernelTerm>,
    pub terms: Vec<KernelTerm>,
    pub condition_number: f64,
    pub reconstruction_error: f64,
}

impl KernelDecomposition {
    pub fn reconstruct(&self) -> Result<ModeExpansion> {
        let mut out = ModeExpansion::zero(&self.lengths, FieldRank::Sym2);
        for t in &self.terms {
            out = out.add(&t.element.build(&self.lengths)?.scale(t.coefficient));
        }
        Ok(out)
    }

    /// Sum of the terms independent of `r`.
    pub fn parallel_part(&self) -> Result<ModeExpansion> {
        let mut out = ModeExpansion::zero(&self.lengths, FieldRank::Sym2);
        for t in self.terms.iter().filter(|t| t.element.is_parallel()) {
            out = out.add(&t.element.build(&self.lengths)?.scale(t.coefficient));
        }
        Ok(out)
    }
}

fn chebyshev_nodes(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let x = (std::f64::consts::PI * (i as f64 + 0.5) / m as f64).cos();
            0.5 * (a + b) - 0.5 * (b - a) * x
        })
        .collect()
}

fn sample_block(e: &ModeExpansion, harmonics: &[Harmonic], nodes: &[f64]) -> Vec<f64> {
    let nc = e.num_components();
    let mut out = Vec::with_capacity(harmonics.len() * nc * nodes.len());
    for h in harmonics {
        for c in 0..nc {
            let p = e.component(h, c);
            let w = e.component_weight(c).sqrt();
            out.extend(nodes.iter().map(|&r| w * p.eval(r)));
        }
    }
    out
}

/// Least-squares fit of `target` by `columns`, with column equilibration.
/// Returns coefficients and the condition number of the scaled system.
fn fit(columns: &[Vec<f64>], target: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = target.len();
    let k = columns.len();
    if k == 0 {
        return Ok((Vec::new(), 1.0));
    }
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300)).collect();
    let a = DMatrix::from_fn(m, k, |i, j| columns[j][i] / norms[j]);
    let b = DVector::from_column_slice(target);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let x = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| Error::InvalidInput(format!("kernel fit failed: {e}")))?;
    Ok(((0..k).map(|j| x[j] / norms[j]).collect(), cond))
}

/// Tolerance on the relative residuals accepted as "in the kernel".
pub const KERNEL_TOL: f64 = 1e-9;

/// Unique decomposition of a kernel element into [`KernelElement`]s.
pub fn classify_kernel(h: &ModeExpansion, tau: f64) -> Result<KernelDecomposition> {
    h.check_rank(FieldRank::Sym2)?;
    DivergenceConfig::with_tau(tau).validate()?;
    let lengths = h.lengths().to_vec();
    let d = lengths.len();
    for hm in h.harmonics() {
        let mu = hm.eigenvalue(&lengths);
        if mu < 0.0 {
            return Err(Error::NegativeEigenvalue(mu));
        }
    }
    let (ric, div) = kernel_residuals(h, tau, 1.0)?;
    if ric > KERNEL_TOL {
        return Err(Error::NotInKernel { what: "linearized ricci".into(), residual: ric, tol: KERNEL_TOL });
    }
    if div > KERNEL_TOL {
        return Err(Error::NotInKernel { what: "modified divergence".into(), residual: div, tol: KERNEL_TOL });
    }
    let mut freqs: Vec<Vec<i32>> = h.harmonics().map(|x| x.freq.clone()).collect();
    freqs.dedup();
    let mut terms = Vec::new();
    let mut cond: f64 = 1.0;
    for k in freqs {
        let mu = crate::cross_section::eigenvalue(&lengths, &k);
        let zero = k.iter().all(|&x| x == 0);
        let harmonics: Vec<Harmonic> = if zero {
            vec![Harmonic::constant(d)]
        } else {
            [Phase::Cos, Phase::Sin].into_iter().map(|phase| Harmonic { freq: k.clone(), phase }).collect()
        };
        let r_hi = if zero { 1.0 } else { (2.0 / mu.sqrt()).min(1.0) };
        let nodes = chebyshev_nodes(0.0, r_hi, 8);
        let basis = kernel_basis_at(&lengths, &k, tau);
        let cols: Vec<Vec<f64>> = basis
            .iter()
            .map(|e| e.build(&lengths).map(|t| sample_block(&t, &harmonics, &nodes)))
            .collect::<Result<_>>()?;
        let target = sample_block(h, &harmonics, &nodes);
        let (coef, c) = fit(&cols, &target)?;
        cond = cond.max(c);
        for (e, x) in basis.into_iter().zip(coef) {
            if x != 0.0 {
                terms.push(KernelTerm { element: e, coefficient: x });
            }
        }
    }
    let mut dec = assemble(tau, &lengths, terms, cond)?;
    let recon = dec.reconstruct()?;
    dec.reconstruction_error = rel_size(&recon.sub(h), h, 0.0, 1.0);
    if dec.reconstruction_error > 1e-8 {
        return Err(Error::NotInKernel {
            what: "kernel decomposition".into(),
            residual: dec.reconstruction_error,
            tol: 1e-8,
        });
    }
    Ok(dec)
}

fn assemble(tau: f64, lengths: &[f64], terms: Vec<KernelTerm>, cond: f64) -> Result<KernelDecomposition> {
    let d = lengths.len();
    let mut gauge_y = GaugeY { eta: vec![0.0; d], ..Default::default() };
    let mut pure_trace = (0.0, 0.0);
    let mut parallel_tt = Vec::new();
    let mut linear_tt = Vec::new();
    let mut exp_modes: Vec<ExpModeCoefficient> = Vec::new();
    let mut exp_gauge = Vec::new();
    let mut trace: Vec<TraceCoefficient> = Vec::new();
    for t in &terms {
        let x = t.coefficient;
        match &t.element {
            KernelElement::PureTrace { linear: false } => pure_trace.0 = x,
            KernelElement::PureTrace { linear: true } => pure_trace.1 = x,
            KernelElement::ParallelTT { mode, linear: false } => parallel_tt.push((mode.clone(), x)),
            KernelElement::ParallelTT { mode, linear: true } => linear_tt.push((mode.clone(), x)),
            KernelElement::RadialGauge => gauge_y.c = 0.5 * x,
            KernelElement::HarmonicGauge { j } => gauge_y.eta[*j] = x,
            KernelElement::ExpTT { mode, sign } => {
                let slot = match exp_modes.iter_mut().find(|e| e.mode == *mode) {
                    Some(s) => s,
                    None => {
                        exp_modes.push(ExpModeCoefficient { mode: mode.clone(), a_plus: 0.0, a_minus: 0.0 });
                        exp_modes.last_mut().unwrap()
                    }
                };
                if *sign > 0 {
                    slot.a_plus = x;
                } else {
                    slot.a_minus = x;
                }
            }
            KernelElement::TraceAbsorption { harmonic, sign } => {
                let slot = match trace.iter_mut().find(|e| e.harmonic == *harmonic) {
                    Some(s) => s,
                    None => {
                        trace.push(TraceCoefficient { harmonic: harmonic.clone(), c_plus: 0.0, c_minus: 0.0 });
                        trace.last_mut().unwrap()
                    }
                };
                if *sign > 0 {
                    slot.c_plus = x;
                } else {
                    slot.c_minus = x;
                }
            }
            KernelElement::TauRadial { .. }
            | KernelElement::TauHarmonic { .. }
            | KernelElement::CoclosedGauge { .. }
            | KernelElement::ExactGauge { .. } => exp_gauge.push(t.clone()),
        }
    }
    Ok(KernelDecomposition {
        tau,
        lengths: lengths.to_vec(),
        gauge_x: trace_absorption_field(&trace, lengths)?,
        gauge_y,
        pure_trace,
        parallel_tt,
        linear_tt,
        exp_modes,
        osc_modes: Vec::new(),
        exp_gauge,
        terms,
        condition_number: cond,
        reconstruction_error: 0.0,
    })
}

fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Dimension of the `r`-independent kernel, by a rank computation on the
/// constant ansatz over every harmonic of the cross section.
pub fn parallel_dimension(cs: &TorusCrossSection, tau: f64) -> Result<usize> {
    DivergenceConfig::with_tau(tau).check_resonance(cs)?;
    let lengths = &cs.side_lengths;
    let n = cs.dim + 1;
    let nc = n * (n + 1) / 2;
    let harmonics = cs.harmonics();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for h in &harmonics {
        for c in 0..nc {
            let e = ModeExpansion::single(lengths, FieldRank::Sym2, h.clone(), c, RadialProfile::constant(1.0));
            let mut col = sample_block(&linearized_ricci(&e)?, &harmonics, &[0.5]);
            col.extend(sample_block(&modified_divergence(&e, tau)?, &harmonics, &[0.5]));
            cols.push(col);
        }
    }
    let rows = cols[0].len();
    let a = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
    Ok(cols.len() - numerical_rank(&a, 1e-10))
}

/// Kernel dimension at one frequency and sign `s`, computed by rank on the
/// ansatz `r^p e^{s√μ r}`, `p ≤ 2`, over both phases.
pub fn kernel_dimension_by_rank(lengths: &[f64], freq: &[i32], sign: i8, tau: f64) -> Result<usize> {
    let d = lengths.len();
    let n = d + 1;
    let nc = n * (n + 1) / 2;
    let zero = freq.iter().all(|&k| k == 0);
    let harmonics: Vec<Harmonic> = if zero {
        vec![Harmonic::constant(d)]
    } else {
        [Phase::Cos, Phase::Sin].into_iter().map(|phase| Harmonic { freq: freq.to_vec(), phase }).collect()
    };
    let rate = sign as f64 * crate::cross_section::eigenvalue(lengths, freq).sqrt();
    let nodes = chebyshev_nodes(0.0, 1.0, 10);
    let mut cols = Vec::new();
    for h in &harmonics {
        for c in 0..nc {
            for p in 0..=2 {
                let e = ModeExpansion::single(lengths, FieldRank::Sym2, h.clone(), c, RadialProfile::term(1.0, p, rate));
                let mut col = sample_block(&linearized_ricci(&e)?, &harmonics, &nodes);
                col.extend(sample_block(&modified_divergence(&e, tau)?, &harmonics, &nodes));
                cols.push(col);
            }
        }
    }
    let a = DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    Ok(cols.len() - numerical_rank(&a, 1e-10))
}

/// Number of parallel TT polarizations, the `k = 0` TT modes of the spectrum.
pub fn parallel_tt_count(cs: &TorusCrossSection) -> Result<usize> {
    let s = build_spectrum(cs, ModeKind::TTTensor)?;
    Ok(s.modes.iter().filter(|m| m.freq.iter().all(|&k| k == 0)).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus(d: usize) -> TorusCrossSection {
        TorusCrossSection::cube(d, 2.0 * PI, 1).unwrap()
    }

    #[test]
    fn linearized_ricci_examples() {
        let l = vec![2.0 * PI; 3];
        let g = KernelElement::PureTrace { linear: false }.build(&l).unwrap();
        let mut g0 = g.clone();
        g0.add_sym(&Harmonic::constant(3), 0, 0, &RadialProfile::constant((8.0 * PI * PI * PI).sqrt()));
        assert!(linearized_ricci(&g0).unwrap().chop(1e-14).is_zero());
        let m = mode(ModeKind::TTTensor, &[0, 0, 0], Phase::Cos, Polarization::Matrix(tt_polarizations(&[0.0; 3])[0].clone()), &l);
        let r2 = ModeExpansion::from_mode(&m, &RadialProfile::monomial(1.0, 2), &l);
        let want = ModeExpansion::from_mode(&m, &RadialProfile::constant(-2.0), &l);
        assert!(linearized_ricci(&r2).unwrap().sub(&want).chop(1e-14).is_zero());
    }

    #[test]
    fn every_basis_element_is_in_the_kernel() {
        for d in [2, 3] {
            for tau in [0.0, 0.01] {
                for b in solve_reduced_system(&torus(d), tau).unwrap() {
                    let (r, v) = kernel_residuals(&b.tensor, tau, 1.0).unwrap();
                    assert!(r < 1e-12 && v < 1e-12, "{:?}: {r} {v}", b.element);
                }
            }
        }
    }

    #[test]
    fn basis_size_matches_rank_oracle() {
        let l = vec![2.0 * PI, 2.0 * PI, 4.0];
        for tau in [0.0, 0.05] {
            for k in [vec![1, 0, 0], vec![1, -1, 1], vec![0, 0, 2]] {
                let ours = kernel_basis_at(&l, &k, tau).len();
                let by_rank = kernel_dimension_by_rank(&l, &k, 1, tau).unwrap() + kernel_dimension_by_rank(&l, &k, -1, tau).unwrap();
                assert_eq!(ours, by_rank, "k={k:?}");
            }
        }
    }

    #[test]
    fn parallel_dimension_drops_with_tau() {
        for d in [1, 2, 3] {
            let cs = torus(d);
            let p = parallel_tt_count(&cs).unwrap();
            assert_eq!(parallel_dimension(&cs, 0.0).unwrap(), p + 1 + d + 1);
            for tau in [0.005, 0.01, 0.05] {
                assert_eq!(parallel_dimension(&cs, tau).unwrap(), p + 1);
                let basis = solve_reduced_system(&cs, tau).unwrap();
                assert_eq!(basis.iter().filter(|b| b.element.is_parallel()).count(), p + 1);
            }
        }
    }

    #[test]
    fn tau_kills_mixed_parallel_blocks() {
        let basis = solve_reduced_system(&torus(2), 0.01).unwrap();
        for b in basis.iter().filter(|b| b.element.is_parallel()) {
            let blocks = DeformationTensor::new(b.tensor.clone()).unwrap().blocks();
            assert!(blocks.mixed.is_zero() && blocks.radial.is_zero());
        }
        let basis0 = solve_reduced_system(&torus(2), 0.0).unwrap();
        assert!(basis0.iter().any(|b| matches!(b.element, KernelElement::HarmonicGauge { .. })));
    }

    #[test]
    fn absorption_matches_closed_form_and_trace() {
        let l = vec![2.0 * PI, 3.0];
        let coeffs = vec![
            TraceCoefficient { harmonic: Harmonic { freq: vec![1, 0], phase: Phase::Cos }, c_plus: 0.3, c_minus: 1.0 },
            TraceCoefficient { harmonic: Harmonic { freq: vec![1, -2], phase: Phase::Sin }, c_plus: -0.7, c_minus: 0.2 },
        ];
        let ta = trace_absorption_field(&coeffs, &l).unwrap();
        let cf = trace_absorption_lie_closed_form(&coeffs, &l).unwrap();
        assert!(ta.lie_derivative.sub(&cf).sup_bound(0.0, 2.0, 50) < 1e-14 * cf.sup_bound(0.0, 2.0, 50));
        let tr = ta.lie_derivative.trace().unwrap();
        for c in &coeffs {
            let a = c.harmonic.eigenvalue(&l).sqrt();
            let want = RadialProfile::exponential(c.c_plus, a) + RadialProfile::exponential(c.c_minus, -a);
            let got = tr.component(&c.harmonic, 0);
            for r in [0.0, 0.4, 1.0] {
                assert!((got.eval(r) - want.eval(r)).abs() <= 1e-12 * want.eval(r).abs().max(1.0));
            }
        }
        assert!(ta.lie_derivative.divergence().unwrap().sup_bound(0.0, 2.0, 50) < 1e-13 * ta.lie_derivative.sup_bound(0.0, 2.0, 50));
    }

    #[test]
    fn absorption_minus_branch_example() {
        let l = vec![2.0 * PI];
        let h = Harmonic { freq: vec![1], phase: Phase::Cos };
        let ta = trace_absorption_field(&[TraceCoefficient { harmonic: h.clone(), c_plus: 0.0, c_minus: 1.0 }], &l).unwrap();
        let rr = ta.lie_derivative.component(&h, 0);
        for r in [0.0, 0.5, 2.0] {
            assert!((rr.eval(r) - 0.5 * r * (-r).exp()).abs() < 1e-15);
        }
        assert!(trace_absorption_field(&[TraceCoefficient { harmonic: Harmonic::constant(1), c_plus: 1.0, c_minus: 0.0 }], &l).is_err());
    }

    #[test]
    fn trace_split_examples() {
        let l = vec![1.0];
        let h0 = Harmonic::constant(1);
        let h1 = Harmonic { freq: vec![1], phase: Phase::Cos };
        let a = 2.0 * PI;
        let mut h = ModeExpansion::zero(&l, FieldRank::Sym2);
        h.add_sym(&h0, 1, 1, &RadialProfile::monomial(3.0, 1));
        h.add_sym(&h1, 1, 1, &RadialProfile::exponential(std::f64::consts::FRAC_1_SQRT_2, -a));
        let s = harmonic_trace_split(&h).unwrap();
        assert!(s.c0.abs() < 1e-15 && (s.c0_bar - 3.0).abs() < 1e-14);
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0].c_minus - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(s.coefficients[0].c_plus.abs() < 1e-14);

        let mut bad = ModeExpansion::zero(&l, FieldRank::Sym2);
        bad.add_sym(&h1, 0, 0, &RadialProfile::monomial(1.0, 1));
        assert!(matches!(harmonic_trace_split(&bad), Err(Error::NonHarmonicTrace(_))));

        let five = ModeExpansion::single(&l, FieldRank::Sym2, h0, 0, RadialProfile::constant(5.0));
        let s = harmonic_trace_split(&five).unwrap();
        assert!((s.c0 - 5.0).abs() < 1e-14 && s.remainder.is_zero());
    }

    #[test]
    fn classify_example() {
        // d = 2 has no TT modes off k = 0
        let l3 = vec![2.0 * PI; 3];
        let cs3 = TorusCrossSection::new(l3.clone(), 1).unwrap();
        let spec = build_spectrum(&cs3, ModeKind::TTTensor).unwrap();
        let b = spec.modes.iter().find(|m| m.eigenvalue > 0.0).unwrap().clone();
        let a = b.eigenvalue.sqrt();
        let h = KernelElement::PureTrace { linear: false }
            .build(&l3)
            .unwrap()
            .scale(3.0)
            .add(&ModeExpansion::from_mode(&b, &RadialProfile::exponential(1.0, -a), &l3));
        let dec = classify_kernel(&h, 0.0).unwrap();
        assert!((dec.pure_trace.0 - 3.0).abs() < 1e-12);
        let e = dec.exp_modes.iter().find(|e| e.mode == b).unwrap();
        assert!(e.a_plus.abs() < 1e-12 && (e.a_minus - 1.0).abs() < 1e-12);
        assert!(dec.reconstruction_error < 1e-12);
        let again = classify_kernel(&dec.reconstruct().unwrap(), 0.0).unwrap();
        assert_eq!(again.terms.len(), dec.terms.len());
    }

    #[test]
    fn classify_rejects_and_zero() {
        let l = vec![2.0 * PI, 2.0 * PI];
        let drdr = ModeExpansion::single(&l, FieldRank::Sym2, Harmonic::constant(2), 0, RadialProfile::constant(1.0));
        assert!(matches!(classify_kernel(&drdr, 0.1), Err(Error::NotInKernel { .. })));
        let dec = classify_kernel(&drdr, 0.0).unwrap();
        // pointwise dr⊗dr has coefficient 1/√vol here
        assert!((dec.gauge_y.c - 0.25 / PI).abs() < 1e-12);
        let z = classify_kernel(&ModeExpansion::zero(&l, FieldRank::Sym2), 0.01).unwrap();
        assert!(z.terms.is_empty() && z.pure_trace == (0.0, 0.0));
    }
}
