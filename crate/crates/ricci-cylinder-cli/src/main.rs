//! `ricci-cyl`: runs one solver or verification job per invocation and writes
//! a payload, a manifest and a result envelope into the output directory.

mod config;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use config::{FieldTerm, JobConfig, SpectrumKind};
use output::{Envelope, Outputs, Timing};
use ricci_cylinder::mode_ode::SystemKind;
use tasks::Task;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("missing series: {0}")]
    MissingSeries(String),
    #[error("{0}")]
    Internal(String),
    #[error(transparent)]
    Solver(#[from] ricci_cylinder::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ricci_cylinder::Error as E;
        match self {
            CliError::Invalid(_) | CliError::MissingSeries(_) => 2,
            CliError::Internal(_) => 1,
            CliError::Solver(e) => match e {
                E::NegativeEigenvalue(_) | E::NonPositiveDefinite { .. } => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ricci-cyl", version, about = "Linearized Ricci solvers and oracles on flat cylinders")]
struct Cli {
    /// TOML config, or JSON when the file ends in `.json`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "RICCI_CYL_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel solvers; 0 keeps the default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lists cross-section modes with eigenvalues and polarizations.
    Spectrum(SpectrumArgs),
    /// Residuals of the closed-form fundamental matrices.
    OdeCheck(OdeArgs),
    /// Solves the gauge equation for a source tensor.
    SolveDiv(SolveDivArgs),
    /// Generates the kernel basis with residual certificates.
    SolveDeform(TauArgs),
    /// Decomposes a kernel element into its structural terms.
    KernelClassify(KernelArgs),
    /// Checks the three-circles inequality on tube norms.
    ThreeCircles(ThreeCirclesArgs),
    /// Runs the finite-difference oracle suite.
    Validate(ValidateArgs),
    /// Fits the blow-up exponent of the weighted Green bound.
    BoundFit,
    /// Writes a plot series from a previous run as CSV.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated side lengths.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<f64>>,
    #[arg(long)]
    cutoff: Option<u32>,
    /// Mode kinds: scalar, coclosed-one-form, harmonic-one-form, tt-tensor, pure-trace.
    #[arg(long, value_delimiter = ',')]
    rank: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct OdeArgs {
    #[arg(long)]
    mu: Option<f64>,
    /// `2x2` or `4x4`.
    #[arg(long)]
    system: Option<String>,
}

#[derive(Args, Debug)]
struct SolveDivArgs {
    #[arg(long)]
    tau: Option<f64>,
    /// Cross-check the closed form against kernel quadrature.
    #[arg(long)]
    green: bool,
}

#[derive(Args, Debug)]
struct TauArgs {
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long)]
    tau: Option<f64>,
    /// File holding `terms = [...]` for the tensor to classify.
    #[arg(long)]
    mode_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThreeCirclesArgs {
    /// File holding `terms = [...]` for the tensor to test.
    #[arg(long)]
    mode_file: Option<PathBuf>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_prime: Option<f64>,
    /// `t1,t2,t3[;t1,t2,t3...]`.
    #[arg(long)]
    triples: Option<String>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// `NR` or `NRxNX` nodes.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    order: Option<u8>,
    /// Extra copy of the JSON residual report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Envelope file, or the run directory containing `envelope.json`.
    #[arg(long)]
    envelope: PathBuf,
    /// tube-norm-series, bound-fit or remainder-scan.
    #[arg(long)]
    kind: String,
    /// Picks one of several series of the same kind.
    #[arg(long)]
    label: Option<String>,
    /// Defaults to `<kind>.csv` next to the envelope.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeFile {
    terms: Vec<FieldTerm>,
}

fn load_mode_file(path: &Path) -> Result<Vec<FieldTerm>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read mode file {}: {e}", path.display())))?;
    let parsed: Result<ModeFile, String> = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map(|m| m.terms).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn parse_triples(s: &str) -> Result<Vec<[u32; 3]>, CliError> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v: Vec<u32> = t
                .split(',')
                .map(|x| x.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Invalid(format!("bad triple {t:?}: {e}")))?;
            <[u32; 3]>::try_from(v).map_err(|_| CliError::Invalid(format!("triple {t:?} needs three entries")))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<(usize, Option<usize>), CliError> {
    let bad = |_| CliError::Invalid(format!("bad grid {s:?}; expected NR or NRxNX"));
    match s.split_once(['x', 'X', ',']) {
        Some((a, b)) => Ok((a.trim().parse().map_err(bad)?, Some(b.trim().parse().map_err(bad)?))),
        None => Ok((s.trim().parse().map_err(bad)?, None)),
    }
}

/// Folds subcommand flags into the config; flags win over file values.
fn resolve(cli: &Cli) -> Result<(Option<Task>, JobConfig), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => JobConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.display().to_string();
    }
    let task = match &cli.command {
        Command::Spectrum(a) => {
            if let Some(l) = &a.lengths {
                cfg.cross_section.lengths = l.clone();
            }
            if let Some(d) = a.dim {
                if a.lengths.is_none() {
                    cfg.cross_section.lengths = vec![2.0 * std::f64::consts::PI; d];
                } else if cfg.cross_section.lengths.len() != d {
                    return Err(CliError::Invalid(format!(
                        "--dim {d} disagrees with {} lengths",
                        cfg.cross_section.lengths.len()
                    )));
                }
            }
            if let Some(c) = a.cutoff {
                cfg.cross_section.cutoff = c;
            }
            if let Some(r) = &a.rank {
                cfg.spectrum.kinds = r
                    .iter()
                    .map(|k| {
                        serde_json::from_value::<SpectrumKind>(Value::String(k.clone()))
                            .map_err(|_| CliError::Invalid(format!("unknown mode kind {k:?}")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            Task::Spectrum
        }
        Command::OdeCheck(a) => {
            if let Some(mu) = a.mu {
                cfg.ode_check.mus = vec![mu];
            }
            if let Some(s) = &a.system {
                let sys = serde_json::from_value::<SystemKind>(Value::String(s.clone()))
                    .map_err(|_| CliError::Invalid(format!("unknown system {s:?}; expected 2x2 or 4x4")))?;
                cfg.ode_check.systems = vec![sys];
            }
            Task::OdeCheck
        }
        Command::SolveDiv(a) => {
            if let Some(t) = a.tau {
                cfg.solve_div.tau = t;
            }
            cfg.solve_div.green |= a.green;
            Task::SolveDiv
        }
        Command::SolveDeform(a) => {
            if let Some(t) = a.tau {
                cfg.solve_deform.tau = t;
            }
            Task::SolveDeform
        }
        Command::KernelClassify(a) => {
            if let Some(t) = a.tau {
                cfg.kernel_classify.tau = t;
            }
            if let Some(p) = &a.mode_file {
                cfg.kernel_classify.h = load_mode_file(p)?;
            }
            Task::KernelClassify
        }
        Command::ThreeCircles(a) => {
            let tc = &mut cfg.three_circles;
            if let Some(p) = &a.mode_file {
                tc.h = load_mode_file(p)?;
            }
            if let Some(l) = a.l {
                tc.l = l;
            }
            if let Some(b) = a.beta {
                tc.beta = b;
            }
            if let Some(b) = a.beta_prime {
                tc.beta_prime = b;
            }
            if let Some(t) = &a.triples {
                tc.triples = parse_triples(t)?;
            }
            Task::ThreeCircles
        }
        Command::Validate(a) => {
            if let Some(g) = &a.grid {
                let (nr, nx) = parse_grid(g)?;
                cfg.validate.n_r = nr;
                if let Some(nx) = nx {
                    cfg.validate.n_x = nx;
                }
            }
            if let Some(o) = a.order {
                cfg.validate.order = o;
            }
            if let Some(r) = &a.report {
                cfg.validate.report = r.display().to_string();
            }
            Task::Validate
        }
        Command::BoundFit => Task::BoundFit,
        Command::Export(_) => return Ok((None, cfg)),
    };
    Ok((Some(task), cfg))
}

/// Runs one task and persists payload, manifest and envelope.
fn execute(task: Task, cfg: &JobConfig, threads: usize) -> Result<Envelope, CliError> {
    let start = Instant::now();
    let out_dir = PathBuf::from(&cfg.output_dir);
    let version = env!("CARGO_PKG_VERSION");
    let resolved = output::to_value(cfg)?;
    let manifest = json!({"task": task.name(), "version": version, "seed": cfg.seed, "threads": threads, "config": resolved});
    let digest_input = json!({"task": task.name(), "config": resolved});
    let inputs_digest = output::sha256_hex(output::to_canonical_json(&digest_input).as_bytes());
    log::info!("{} seed {} digest {}", task.name(), cfg.seed, &inputs_digest[..12]);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let result = tasks::run(task, cfg, &mut rng)?;

    let mut payload = result.payload;
    payload.insert("series".into(), output::to_value(&result.series)?);
    payload.insert("certificates".into(), output::to_value(&result.certificates)?);
    let payload_text = output::to_canonical_json(&Value::Object(payload));
    output::write_file(&out_dir.join("payload.json"), &payload_text)?;
    output::write_file(&out_dir.join("manifest.json"), &output::to_canonical_json(&manifest))?;

    let mut files = vec!["payload.json".to_string(), "manifest.json".to_string()];
    let payload_value: Value = serde_json::from_str(&payload_text).map_err(|e| CliError::Internal(e.to_string()))?;
    for s in &result.series {
        // the tube-norm series is always written next to the payload
        if s.kind == "tube-norm-series" {
            let name = format!("{}.csv", s.kind);
            output::export_series(&payload_value, &s.kind, Some(&s.label), &out_dir.join(&name))?;
            files.push(name);
        }
    }
    if task == Task::Validate && !cfg.validate.report.is_empty() {
        output::write_file(Path::new(&cfg.validate.report), &payload_text)?;
    }

    let env = Envelope {
        task: task.name().into(),
        version: version.into(),
        seed: cfg.seed,
        inputs_digest,
        outputs: Outputs {
            payload: "payload.json".into(),
            payload_sha256: output::sha256_hex(payload_text.as_bytes()),
            series: result.series.iter().map(|s| s.kind.clone()).collect(),
            files,
        },
        certificates: result.certificates,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
    };
    output::write_file(&out_dir.join("envelope.json"), &output::to_canonical_json(&output::to_value(&env)?))?;
    Ok(env)
}

fn export(a: &ExportArgs) -> Result<PathBuf, CliError> {
    let (env, dir) = output::read_envelope(&a.envelope)?;
    let ppath = dir.join(&env.outputs.payload);
    let text = std::fs::read_to_string(&ppath)
        .map_err(|e| CliError::Invalid(format!("cannot read payload {}: {e}", ppath.display())))?;
    let payload: Value = serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", ppath.display())))?;
    let out = a.csv.clone().unwrap_or_else(|| dir.join(format!("{}.csv", a.kind)));
    let rows = output::export_series(&payload, &a.kind, a.label.as_deref(), &out)?;
    log::info!("wrote {rows} rows to {}", out.display());
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let result = resolve(&cli).and_then(|(task, cfg)| match (task, &cli.command) {
        (Some(t), _) => {
            let env = execute(t, &cfg, cli.threads)?;
            for c in &env.certificates {
                let mark = if c.passed { "ok" } else { "FAILED" };
                println!("{:<28} {:>12.4e} {} {:<10.3e} {mark}", c.name, c.value, c.comparison, c.threshold);
            }
            println!("wrote {}", Path::new(&cfg.output_dir).join("envelope.json").display());
            Ok(if env.all_passed() { 0 } else { 3 })
        }
        (None, Command::Export(a)) => {
            println!("wrote {}", export(a)?.display());
            Ok(0)
        }
        (None, _) => Err(CliError::Internal("no task resolved".into())),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
