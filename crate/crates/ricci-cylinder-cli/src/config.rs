//! Job configuration. Every section has defaults, so an empty file is a valid
//! config and the resolved form written to the manifest spells out each value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ricci_cylinder::cross_section::{Harmonic, ModeKind, Phase, TorusCrossSection};
use ricci_cylinder::expansion::{sym_index, FieldRank, ModeExpansion};
use ricci_cylinder::green_kernel::SourceKind;
use ricci_cylinder::mode_ode::SystemKind;
use ricci_cylinder::profile::RadialProfile;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    /// Seed of the single generator behind every random choice.
    pub seed: u64,
    pub output_dir: String,
    pub cross_section: CrossSectionConfig,
    pub spectrum: SpectrumConfig,
    pub solve_div: SolveDivConfig,
    pub solve_deform: SolveDeformConfig,
    pub kernel_classify: KernelClassifyConfig,
    pub three_circles: ThreeCirclesConfig,
    pub validate: ValidateConfig,
    pub bound_fit: BoundFitConfig,
    pub ode_check: OdeCheckConfig,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            seed: 0,
            output_dir: "ricci-cyl-out".into(),
            cross_section: Default::default(),
            spectrum: Default::default(),
            solve_div: Default::default(),
            solve_deform: Default::default(),
            kernel_classify: Default::default(),
            three_circles: Default::default(),
            validate: Default::default(),
            bound_fit: Default::default(),
            ode_check: Default::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossSectionConfig {
    pub lengths: Vec<f64>,
    pub cutoff: u32,
}

impl Default for CrossSectionConfig {
    fn default() -> Self {
        CrossSectionConfig { lengths: vec![2.0 * std::f64::consts::PI; 2], cutoff: 2 }
    }
}

impl CrossSectionConfig {
    pub fn build(&self) -> Result<TorusCrossSection, CliError> {
        Ok(TorusCrossSection::new(self.lengths.clone(), self.cutoff)?)
    }
}

/// One harmonic component of a field: `Σ coeff r^power e^{rate r}` times the
/// harmonic `(freq, phase)` in the packed component named by `component`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldTerm {
    pub freq: Vec<i32>,
    #[serde(default = "default_phase")]
    pub phase: Phase,
    /// `[a, b]` for symmetric tensors, `[a]` for 1-forms, `[]` for functions.
    #[serde(default)]
    pub component: Vec<usize>,
    /// `[coeff, power, rate]` triples.
    pub terms: Vec<(f64, u32, f64)>,
}

fn default_phase() -> Phase {
    Phase::Cos
}

pub fn build_field(lengths: &[f64], rank: FieldRank, terms: &[FieldTerm]) -> Result<ModeExpansion, CliError> {
    let n = lengths.len() + 1;
    let mut out = ModeExpansion::zero(lengths, rank);
    for (i, t) in terms.iter().enumerate() {
        if t.freq.len() != lengths.len() {
            return Err(CliError::Invalid(format!("term {i}: freq has {} entries, expected {}", t.freq.len(), lengths.len())));
        }
        let (h, sign) = if t.freq.iter().all(|&k| k == 0) {
            (Harmonic::constant(lengths.len()), 1.0)
        } else {
            Harmonic::canonical(t.freq.clone(), t.phase)
                .ok_or_else(|| CliError::Invalid(format!("term {i}: sine of the zero frequency vanishes")))?
        };
        let c = match (rank, t.component.as_slice()) {
            (FieldRank::Scalar, []) => 0,
            (FieldRank::OneForm, [a]) if *a < n => *a,
            (FieldRank::Sym2, [a, b]) if *a < n && *b < n => sym_index(n, *a, *b),
            _ => return Err(CliError::Invalid(format!("term {i}: component {:?} does not fit a {rank:?} field", t.component))),
        };
        let p = t
            .terms
            .iter()
            .fold(RadialProfile::zero(), |acc, &(a, k, rate)| acc + RadialProfile::term(sign * a, k, rate));
        out.add_to(&h, c, &p);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Scalar,
    CoclosedOneForm,
    HarmonicOneForm,
    TtTensor,
    PureTrace,
}

impl From<SpectrumKind> for ModeKind {
    fn from(k: SpectrumKind) -> Self {
        match k {
            SpectrumKind::Scalar => ModeKind::Scalar,
            SpectrumKind::CoclosedOneForm => ModeKind::CoclosedOneForm,
            SpectrumKind::HarmonicOneForm => ModeKind::HarmonicOneForm,
            SpectrumKind::TtTensor => ModeKind::TTTensor,
            SpectrumKind::PureTrace => ModeKind::PureTrace,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub kinds: Vec<SpectrumKind>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { kinds: vec![SpectrumKind::Scalar, SpectrumKind::CoclosedOneForm, SpectrumKind::TtTensor] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveDivConfig {
    pub tau: f64,
    /// Empty means a random decaying source drawn from the seed.
    pub source: Vec<FieldTerm>,
    pub r_max: f64,
    pub tolerance: f64,
    /// Also evaluate the solution by kernel quadrature at `green_radii`.
    pub green: bool,
    pub green_radii: Vec<f64>,
}

impl Default for SolveDivConfig {
    fn default() -> Self {
        SolveDivConfig {
            tau: 0.01,
            source: Vec::new(),
            r_max: 10.0,
            tolerance: 1e-9,
            green: false,
            green_radii: vec![0.3, 1.0, 2.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveDeformConfig {
    pub tau: f64,
    pub r_max: f64,
    pub tolerance: f64,
}

impl Default for SolveDeformConfig {
    fn default() -> Self {
        SolveDeformConfig { tau: 0.01, r_max: 3.0, tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelClassifyConfig {
    pub tau: f64,
    /// Empty means a random kernel element drawn from the seed.
    pub h: Vec<FieldTerm>,
    pub tolerance: f64,
}

impl Default for KernelClassifyConfig {
    fn default() -> Self {
        KernelClassifyConfig { tau: 0.01, h: Vec::new(), tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeCirclesConfig {
    pub beta: f64,
    pub beta_prime: f64,
    pub l: f64,
    pub triples: Vec<[u32; 3]>,
    /// Empty means a random kernel element drawn from the seed.
    pub h: Vec<FieldTerm>,
    /// Tubes `0..series_len` for the monotonicity report.
    pub series_len: u32,
}

impl Default for ThreeCirclesConfig {
    fn default() -> Self {
        ThreeCirclesConfig { beta: 0.5, beta_prime: 0.1, l: 3.0, triples: vec![[0, 1, 2]], h: Vec::new(), series_len: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub r_range: (f64, f64),
    pub n_r: usize,
    pub n_x: usize,
    pub order: u8,
    pub epsilons: Vec<f64>,
    /// Extra copy of the payload; empty means none.
    pub report: String,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            r_range: (0.5, 2.5),
            n_r: 128,
            n_x: 24,
            order: 2,
            epsilons: vec![1e-1, 3e-2, 1e-2],
            report: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundFitConfig {
    /// Fractions of `√μ₁`.
    pub rho_fractions: Vec<f64>,
    pub kinds: Vec<SourceKind>,
}

impl Default for BoundFitConfig {
    fn default() -> Self {
        BoundFitConfig {
            rho_fractions: vec![0.5, 0.8, 0.9, 0.95, 0.99],
            kinds: vec![SourceKind::OneForm, SourceKind::Function],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeCheckConfig {
    pub mus: Vec<f64>,
    pub systems: Vec<SystemKind>,
    pub r_min: f64,
    pub r_max: f64,
    pub samples: usize,
}

impl Default for OdeCheckConfig {
    fn default() -> Self {
        OdeCheckConfig {
            mus: vec![0.0, 0.5, 1.0, 4.0, 4.0 * std::f64::consts::PI * std::f64::consts::PI],
            systems: vec![SystemKind::Scalar2x2, SystemKind::Mixed4x4],
            r_min: -10.0,
            r_max: 10.0,
            samples: 50,
        }
    }
}

/// Reads TOML, or JSON when the extension is `.json`.
pub fn load(path: &Path) -> Result<JobConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text, path.extension().is_some_and(|e| e == "json"))
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn parse(text: &str, json: bool) -> Result<JobConfig, String> {
    if json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
