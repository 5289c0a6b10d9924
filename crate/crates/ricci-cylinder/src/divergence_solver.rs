//! Gauge fixing: solves `δ_τ(L_X g) = δ_τ h` for the 1-form `X`.
//!
//! The constant harmonic (the finite sector) is handled by variation of
//! parameters on `y'' + τy' = q` with zero data at `r = 0`; every other
//! harmonic goes through the Green kernels on `r > 0`.

use serde::{Deserialize, Serialize};

use crate::cross_section::{Harmonic, TorusCrossSection};
use crate::error::{Error, Result};
use crate::expansion::{sym_index, FieldRank, ModeExpansion};
use crate::green_kernel::{apply_green, GreenKernelSpec, SourceExpansion};
use crate::profile::RadialProfile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DivergenceConfig {
    pub tau: f64,
    pub rho: f64,
    /// Minimum allowed `|4τ² − μ|` over the spectrum.
    pub resonance_tol: f64,
    /// Refuse a constant `dr⊗dr` / `dr⊠η` source when `τ = 0`.
    pub reject_noninvertible: bool,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        DivergenceConfig { tau: 0.01, rho: 0.0, resonance_tol: 1e-6, reject_noninvertible: true }
    }
}

impl DivergenceConfig {
    pub fn with_tau(tau: f64) -> Self {
        DivergenceConfig { tau, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !self.rho.is_finite() {
            return Err(Error::InvalidInput("rho must be finite".into()));
        }
        Ok(())
    }

    /// Errors if `4τ²` is within `resonance_tol` of a cross-section eigenvalue.
    pub fn check_resonance(&self, cs: &TorusCrossSection) -> Result<()> {
        self.validate()?;
        if self.tau == 0.0 {
            return Ok(());
        }
        let ft = 4.0 * self.tau * self.tau;
        for k in cs.frequencies() {
            let mu = cs.eigenvalue(&k);
            let gap = (ft - mu).abs();
            if gap <= self.resonance_tol {
                return Err(Error::ResonantTau { four_tau_sq: ft, mu, gap });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    /// Constant harmonic, `μ = 0`.
    Finite,
    /// `μ > 0`.
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum GrowthClass {
    Zero,
    Decaying { rate: f64 },
    Polynomial { degree: u32 },
    Exponential { rate: f64, degree: u32 },
}

impl GrowthClass {
    pub fn of(profiles: &[RadialProfile]) -> Self {
        let mut best: Option<(f64, u32)> = None;
        for p in profiles {
            let p = p.chop(0.0);
            if let (Some(r), Some(k)) = (p.rate_at_infinity(), p.power_at_infinity()) {
                best = Some(match best {
                    Some((r0, k0)) if r0 > r || (r0 == r && k0 >= k) => (r0, k0),
                    _ => (r, k),
                });
            }
        }
        match best {
            None => GrowthClass::Zero,
            Some((r, k)) if r.abs() < 1e-12 => GrowthClass::Polynomial { degree: k },
            Some((r, _)) if r < 0.0 => GrowthClass::Decaying { rate: r },
            Some((r, k)) => GrowthClass::Exponential { rate: r, degree: k },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorTag {
    pub harmonic: Harmonic,
    pub sector: Sector,
    pub growth: GrowthClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    pub one_form: ModeExpansion,
    pub sectors: Vec<SectorTag>,
}

impl GaugeField {
    pub fn new(one_form: ModeExpansion) -> Result<Self> {
        one_form.check_rank(FieldRank::OneForm)?;
        let sectors = one_form
            .entries()
            .map(|(h, v)| SectorTag {
                harmonic: h.clone(),
                sector: if h.is_constant() { Sector::Finite } else { Sector::Infinite },
                growth: GrowthClass::of(v),
            })
            .collect();
        Ok(GaugeField { one_form, sectors })
    }

    pub fn zero(lengths: &[f64]) -> Self {
        GaugeField { one_form: ModeExpansion::zero(lengths, FieldRank::OneForm), sectors: Vec::new() }
    }
}

/// `L_X g₀`, the symmetrized derivative `∂_a X_b + ∂_b X_a`.
pub fn lie_derivative_metric(x: &GaugeField) -> Result<ModeExpansion> {
    x.one_form.sym_grad()
}

/// `δh − τ ι_{∂_r} h` on the constant harmonic, `δh` elsewhere.
pub fn modified_divergence(h: &ModeExpansion, tau: f64) -> Result<ModeExpansion> {
    let d = h.divergence()?;
    if tau == 0.0 {
        return Ok(d);
    }
    let i = h.zero_frequency().interior_r()?;
    Ok(d.sub(&i.scale(tau)))
}

/// `y` with `y'' + τy' = q`, `y(0) = y'(0) = 0`.
fn finite_sector_solve(q: &RadialProfile, tau: f64) -> Result<RadialProfile> {
    if tau == 0.0 {
        return q.integral_from(0.0)?.integral_from(0.0);
    }
    let dy = q.mul_exp(tau).integral_from(0.0)?.mul_exp(-tau);
    dy.integral_from(0.0)
}

fn has_constant_term(p: &RadialProfile) -> bool {
    let scale = p.max_coeff().max(1e-300);
    p.terms()
        .iter()
        .any(|t| t.power == 0 && t.rate.abs() < 1e-12 && t.window.hi == f64::INFINITY && t.coeff.abs() > 1e-12 * scale)
}

/// Solves `δ_τ(L_X g₀) = δ_τ(source)` on `r > 0`.
pub fn solve_gauge(source: &ModeExpansion, cfg: &DivergenceConfig) -> Result<GaugeField> {
    cfg.validate()?;
    source.check_rank(FieldRank::Sym2)?;
    let lengths = source.lengths().to_vec();
    let n = source.n();
    if source.is_zero() {
        return Ok(GaugeField::zero(&lengths));
    }
    let h0 = Harmonic::constant(source.dim());
    if cfg.tau == 0.0 && cfg.reject_noninvertible {
        for b in 0..n {
            if has_constant_term(&source.component(&h0, sym_index(n, 0, b))) {
                return Err(Error::NonInvertibleSector(format!(
                    "constant radial block h_0{b} at tau = 0 is not in the range of the gauge map"
                )));
            }
        }
    }
    let rhs = modified_divergence(source, cfg.tau)?;
    let (src, zero) = SourceExpansion::from_one_form(&rhs)?;
    let mut x = apply_green(&GreenKernelSpec::default(), &src)?;
    for b in 0..n {
        let q = zero.component(&h0, b);
        if q.is_zero() {
            continue;
        }
        let q = if b == 0 { q.scale(-0.5) } else { q.scale(-1.0) };
        x.add_to(&h0, b, &finite_sector_solve(&q, cfg.tau)?);
    }
    GaugeField::new(x.chop(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeResidual {
    pub sup: f64,
    pub source_sup: f64,
    pub relative: f64,
}

/// Sampled sup on `[0, r_max]` of `δ_τ(L_X g₀) − δ_τ(source)`.
pub fn gauge_residual(
    source: &ModeExpansion,
    x: &GaugeField,
    cfg: &DivergenceConfig,
    r_max: f64,
    samples: usize,
) -> Result<GaugeResidual> {
    let lhs = modified_divergence(&lie_derivative_metric(x)?, cfg.tau)?;
    let rhs = modified_divergence(source, cfg.tau)?;
    let sup = lhs.sub(&rhs).sup_bound(0.0, r_max, samples);
    let source_sup = rhs.sup_bound(0.0, r_max, samples);
    Ok(GaugeResidual { sup, source_sup, relative: sup / source_sup.max(f64::MIN_POSITIVE) })
}
