//! One function per subcommand. Each returns its JSON payload, residual
//! certificates and plot series; persistence happens in the caller.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use ricci_cylinder::cross_section::{build_spectrum, pointwise_operators, Harmonic, TorusCrossSection};
use ricci_cylinder::deformation_solver::{classify_kernel, kernel_residuals, solve_reduced_system, KernelElement};
use ricci_cylinder::divergence_solver::{gauge_residual, solve_gauge, DivergenceConfig};
use ricci_cylinder::expansion::{FieldRank, ModeExpansion};
use ricci_cylinder::fd_oracle::{
    fd_operator, nonlinear_ricci, quadratic_remainder_scan, sample, FdOp, GridField, GridSpec, StencilConfig,
};
use ricci_cylinder::green_kernel::{estimate_weighted_bound, GreenKernelSpec, SourceExpansion, SourceKind};
use ricci_cylinder::mode_ode::{check_characteristic, fundamental_residual};
use ricci_cylinder::profile::RadialProfile;
use ricci_cylinder::three_circles::{
    monotonicity_classify, three_circles_check, tube_norm_series, FormH, ThreeCirclesParams,
};

use crate::config::{build_field, JobConfig};
use crate::output::{to_value, Certificate, Series};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    OdeCheck,
    SolveDiv,
    SolveDeform,
    KernelClassify,
    ThreeCircles,
    Validate,
    BoundFit,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::OdeCheck => "ode-check",
            Task::SolveDiv => "solve-div",
            Task::SolveDeform => "solve-deform",
            Task::KernelClassify => "kernel-classify",
            Task::ThreeCircles => "three-circles",
            Task::Validate => "validate",
            Task::BoundFit => "bound-fit",
        }
    }
}

pub struct TaskOutput {
    pub payload: Map<String, Value>,
    pub certificates: Vec<Certificate>,
    pub series: Vec<Series>,
}

impl TaskOutput {
    fn new() -> Self {
        TaskOutput { payload: Map::new(), certificates: Vec::new(), series: Vec::new() }
    }

    fn put(&mut self, key: &str, v: impl serde::Serialize) -> Result<(), CliError> {
        self.payload.insert(key.into(), to_value(&v)?);
        Ok(())
    }
}

pub fn run(task: Task, cfg: &JobConfig, rng: &mut ChaCha8Rng) -> Result<TaskOutput, CliError> {
    match task {
        Task::Spectrum => spectrum(cfg),
        Task::OdeCheck => ode_check(cfg),
        Task::SolveDiv => solve_div(cfg, rng),
        Task::SolveDeform => solve_deform(cfg),
        Task::KernelClassify => kernel_classify(cfg, rng),
        Task::ThreeCircles => three_circles(cfg, rng),
        Task::Validate => validate(cfg, rng),
        Task::BoundFit => bound_fit(cfg),
    }
}

fn nonzero_harmonics(cs: &TorusCrossSection) -> Vec<Harmonic> {
    cs.harmonics().into_iter().filter(|h| !h.is_constant()).collect()
}

/// Up to 20 decaying terms on random nonconstant harmonics and components.
pub fn random_decaying_source(cs: &TorusCrossSection, rng: &mut ChaCha8Rng) -> Result<ModeExpansion, CliError> {
    let hs = nonzero_harmonics(cs);
    if hs.is_empty() {
        return Err(CliError::Invalid("cutoff leaves no nonconstant harmonics".into()));
    }
    let nc = FieldRank::Sym2.components(cs.dim + 1);
    let mut h = ModeExpansion::zero(&cs.side_lengths, FieldRank::Sym2);
    for _ in 0..rng.gen_range(1..=20) {
        let harm = &hs[rng.gen_range(0..hs.len())];
        let c = rng.gen_range(0..nc);
        let p = RadialProfile::term(rng.gen_range(-1.0..1.0), rng.gen_range(0..=1), -rng.gen_range(0.5..2.0));
        h.add_to(harm, c, &p);
    }
    Ok(h)
}

fn spectrum(cfg: &JobConfig) -> Result<TaskOutput, CliError> {
    let cs = cfg.cross_section.build()?;
    let mut out = TaskOutput::new();
    let mut listing = Map::new();
    let mut worst = 0.0f64;
    for &k in &cfg.spectrum.kinds {
        let s = build_spectrum(&cs, k.into())?;
        for m in &s.modes {
            let img = pointwise_operators(m, &cs);
            let norm = 1.0 + m.eigenvalue.sqrt();
            let mut check = |t: &Option<ricci_cylinder::cross_section::ImageTerm>| {
                if let Some(t) = t {
                    worst = worst.max(t.coefficients.iter().fold(0.0f64, |a, c| a.max(c.abs())) / norm);
                }
            };
            // coclosed and TT modes are divergence free, TT modes trace free
            use ricci_cylinder::cross_section::ModeKind;
            match m.kind {
                ModeKind::CoclosedOneForm | ModeKind::HarmonicOneForm => check(&img.divergence_image),
                ModeKind::TTTensor => {
                    check(&img.divergence_image);
                    check(&img.trace_image);
                }
                _ => {}
            }
        }
        listing.insert(to_value(&k)?.as_str().unwrap_or_default().to_string(), to_value(&s)?);
    }
    out.put("mu1", cs.mu1())?;
    out.put("spectra", listing)?;
    out.certificates.push(Certificate::at_most("constraint-residual", worst, 1e-12));
    Ok(out)
}

fn ode_check(cfg: &JobConfig) -> Result<TaskOutput, CliError> {
    let c = &cfg.ode_check;
    if c.samples < 2 || !(c.r_min < c.r_max) {
        return Err(CliError::Invalid("ode_check needs samples >= 2 and r_min < r_max".into()));
    }
    let mut out = TaskOutput::new();
    let (mut ode, mut inv) = (0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for &mu in &c.mus {
        for &sys in &c.systems {
            let mut worst = (0.0f64, 0.0f64);
            for i in 0..c.samples {
                let r = c.r_min + (c.r_max - c.r_min) * i as f64 / (c.samples - 1) as f64;
                let res = fundamental_residual(sys, mu, r)?;
                worst = (worst.0.max(res.ode_residual), worst.1.max(res.inverse_residual));
            }
            ode = ode.max(worst.0);
            inv = inv.max(worst.1);
            rows.push(json!({"mu": mu, "system": to_value(&sys)?, "ode_residual": worst.0, "inverse_residual": worst.1}));
        }
    }
    let roots = c
        .mus
        .iter()
        .map(|&mu| Ok(json!({"mu": mu, "roots": to_value(&check_characteristic(mu)?)?})))
        .collect::<Result<Vec<_>, CliError>>()?;
    out.put("residuals", rows)?;
    out.put("characteristic", roots)?;
    out.certificates.push(Certificate::at_most("ode-residual", ode, 1e-8));
    out.certificates.push(Certificate::at_most("inverse-residual", inv, 1e-12));
    Ok(out)
}

fn solve_div(cfg: &JobConfig, rng: &mut ChaCha8Rng) -> Result<TaskOutput, CliError> {
    let c = &cfg.solve_div;
    let cs = cfg.cross_section.build()?;
    let h = if c.source.is_empty() {
        random_decaying_source(&cs, rng)?
    } else {
        build_field(&cs.side_lengths, FieldRank::Sym2, &c.source)?
    };
    let dcfg = DivergenceConfig::with_tau(c.tau);
    dcfg.check_resonance(&cs)?;
    let x = solve_gauge(&h, &dcfg)?;
    let res = gauge_residual(&h, &x, &dcfg, c.r_max, 201)?;
    let mut out = TaskOutput::new();
    out.put("source", &h)?;
    out.put("gauge_field", &x)?;
    out.put("residual", res)?;
    out.certificates.push(Certificate::at_most("gauge-residual", res.relative, c.tolerance));
    if c.green {
        // the kernel quadrature sees only the nonconstant harmonics
        let rhs = ricci_cylinder::divergence_solver::modified_divergence(&h, c.tau)?;
        let (src, _) = SourceExpansion::from_one_form(&rhs)?;
        let spec = GreenKernelSpec::default();
        let x_nz = x.one_form.nonzero_frequency();
        let mut worst = 0.0f64;
        let mut samples = Vec::new();
        for &t in &c.green_radii {
            let q = spec.evaluate_at(&src, t)?;
            let diff = q.sub(&x_nz.map_profiles(|p| RadialProfile::constant(p.eval(t)))).pointwise_bound(0.0);
            let scale = x_nz.pointwise_bound(t).max(1e-300);
            worst = worst.max(diff / scale);
            samples.push(json!({"r": t, "difference": diff, "scale": scale}));
        }
        out.put("green_quadrature", samples)?;
        out.certificates.push(Certificate::at_most("green-quadrature-agreement", worst, 1e-8));
    }
    Ok(out)
}

fn solve_deform(cfg: &JobConfig) -> Result<TaskOutput, CliError> {
    let c = &cfg.solve_deform;
    let cs = cfg.cross_section.build()?;
    let basis = solve_reduced_system(&cs, c.tau)?;
    let (mut ric, mut div) = (0.0f64, 0.0f64);
    let mut listing = Vec::new();
    for b in &basis {
        let (r, d) = kernel_residuals(&b.tensor, c.tau, c.r_max)?;
        ric = ric.max(r);
        div = div.max(d);
        listing.push(json!({
            "element": to_value(&b.element)?,
            "eigenvalue": b.eigenvalue,
            "ricci_residual": r,
            "divergence_residual": d,
        }));
    }
    let mut out = TaskOutput::new();
    out.put("tau", c.tau)?;
    out.put("dimension", basis.len())?;
    out.put("parallel_dimension", basis.iter().filter(|b| b.element.is_parallel()).count())?;
    out.put("basis", listing)?;
    out.certificates.push(Certificate::at_most("ricci-residual", ric, c.tolerance));
    out.certificates.push(Certificate::at_most("divergence-residual", div, c.tolerance));
    Ok(out)
}

fn kernel_classify(cfg: &JobConfig, rng: &mut ChaCha8Rng) -> Result<TaskOutput, CliError> {
    let c = &cfg.kernel_classify;
    let cs = cfg.cross_section.build()?;
    let h = if c.h.is_empty() {
        let mut h = ModeExpansion::zero(&cs.side_lengths, FieldRank::Sym2);
        for b in solve_reduced_system(&cs, c.tau)? {
            if rng.gen_bool(0.4) {
                h = h.add(&b.tensor.scale(rng.gen_range(-1.0..1.0)));
            }
        }
        h
    } else {
        build_field(&cs.side_lengths, FieldRank::Sym2, &c.h)?
    };
    let dec = classify_kernel(&h, c.tau)?;
    let (ric, div) = kernel_residuals(&h, c.tau, 3.0)?;
    let mut out = TaskOutput::new();
    out.put("input", &h)?;
    out.put("decomposition", &dec)?;
    out.certificates.push(Certificate::at_most("reconstruction-error", dec.reconstruction_error, c.tolerance));
    out.certificates.push(Certificate::at_most("ricci-residual", ric, c.tolerance));
    out.certificates.push(Certificate::at_most("divergence-residual", div, c.tolerance));
    Ok(out)
}

fn three_circles(cfg: &JobConfig, rng: &mut ChaCha8Rng) -> Result<TaskOutput, CliError> {
    let c = &cfg.three_circles;
    let cs = cfg.cross_section.build()?;
    let mu1 = cs.mu1();
    let params: Vec<ThreeCirclesParams> = c
        .triples
        .iter()
        .map(|&triple| ThreeCirclesParams { mu1, beta: c.beta, beta_prime: c.beta_prime, l: c.l, triple })
        .collect();
    if params.is_empty() {
        return Err(CliError::Invalid("three_circles needs at least one triple".into()));
    }
    for p in &params {
        p.validate()?;
    }
    let h = if c.h.is_empty() {
        FormH::random(&cs, rng, 1.0)?.expansion(&cs.side_lengths)?
    } else {
        build_field(&cs.side_lengths, FieldRank::Sym2, &c.h)?
    };
    let mut out = TaskOutput::new();
    let mut outcomes = Vec::new();
    let mut min_slack = f64::INFINITY;
    for p in &params {
        let o = three_circles_check(&h, p)?;
        min_slack = min_slack.min(o.slack);
        outcomes.push(json!({"triple": p.triple, "holds": o.holds, "slack": o.slack, "norms": o.norms}));
    }
    let offsets: Vec<u32> = (0..c.series_len).collect();
    let series = tube_norm_series(&h, c.l, &offsets)?;
    let mono = monotonicity_classify(&series, c.beta_prime, c.l);
    out.put("field", &h)?;
    out.put("mu1", mu1)?;
    out.put("outcomes", outcomes)?;
    out.put("monotonicity", &mono)?;
    out.series.push(Series {
        kind: "tube-norm-series".into(),
        label: String::new(),
        columns: vec!["t_j".into(), "norm_sq".into()],
        rows: series.offsets.iter().zip(&series.values).map(|(&t, &v)| vec![t as f64, v]).collect(),
    });
    out.certificates.push(Certificate::at_least("three-circles-slack", min_slack, 1.0));
    Ok(out)
}

/// Kernel element mixing exponential gauge, trace absorption and linear trace.
fn remainder_field(spec: &GridSpec) -> Result<(ModeExpansion, GridField), CliError> {
    let l = &spec.lengths;
    let d = l.len();
    let mut f1 = vec![0; d];
    f1[0] = 1;
    let mut f2 = vec![0; d];
    f2[d - 1] = 1;
    let h1 = Harmonic { freq: f1, phase: ricci_cylinder::cross_section::Phase::Cos };
    let h2 = Harmonic { freq: f2, phase: ricci_cylinder::cross_section::Phase::Sin };
    let h = KernelElement::TraceAbsorption { harmonic: h1, sign: -1 }
        .build(l)?
        .add(&KernelElement::ExactGauge { harmonic: h2, sign: 1 }.build(l)?.scale(0.2))
        .add(&KernelElement::PureTrace { linear: true }.build(l)?.scale(0.1));
    let f = sample(&h, spec)?;
    let s = f.interior_sup();
    Ok((h.scale(1.0 / s), f.scale(1.0 / s)))
}

fn validate(cfg: &JobConfig, rng: &mut ChaCha8Rng) -> Result<TaskOutput, CliError> {
    let v = &cfg.validate;
    let cs = cfg.cross_section.build()?;
    let spec = GridSpec::uniform(v.r_range, v.n_r, v.n_x, &cs.side_lengths)?;
    let st = StencilConfig { order: v.order, ..StencilConfig::default() };
    let order = i32::from(v.order);
    let gp = spec.grid_size().powi(order);
    let mut out = TaskOutput::new();
    out.put("grid", &spec)?;
    out.put("stencil", st)?;

    // operators against their exact images on a random decaying field
    let h = random_decaying_source(&cs, rng)?;
    let x = h.trace()?.gradient()?;
    let cases: [(FdOp, &ModeExpansion, ModeExpansion); 6] = [
        (FdOp::Divergence, &h, h.divergence()?),
        (FdOp::SymGrad, &x, x.sym_grad()?),
        (FdOp::RoughLaplacian, &h, h.rough_laplacian()),
        (FdOp::TraceHessian, &h, h.trace()?.hessian()?),
        (FdOp::LinearizedRicci, &h, h.linearized_ricci()?),
        (FdOp::Hodge, &x, x.hodge_operator()?),
    ];
    let mut ops = Vec::new();
    let mut worst_op = 0.0f64;
    for (op, f, want) in &cases {
        let exact = sample(want, &spec)?;
        let err = fd_operator(*op, &sample(f, &spec)?, &st)?.sub(&exact)?.interior_sup();
        let rel = err / exact.interior_sup().max(1e-300) / gp;
        worst_op = worst_op.max(rel);
        ops.push(json!({"operator": format!("{op:?}"), "interior_error": err, "relative_per_grid_power": rel}));
    }
    out.put("operators", ops)?;
    out.certificates.push(Certificate::at_most("operator-consistency", worst_op, 10.0));

    // gauge solve: (d*d + 2dd*) X = δh on this grid and its refinement
    let g = solve_gauge(&h, &DivergenceConfig::with_tau(0.01))?;
    let fine = spec.refined();
    let residual = |s: &GridSpec| -> Result<f64, CliError> {
        let lhs = fd_operator(FdOp::Hodge, &sample(&g.one_form, s)?, &st)?;
        let rhs = fd_operator(FdOp::Divergence, &sample(&h, s)?, &st)?;
        Ok(lhs.sub(&rhs)?.interior_sup())
    };
    let (ec, ef) = (residual(&spec)?, residual(&fine)?);
    let ratio = ec / ef;
    let target = 2f64.powi(order);
    out.put("green_inversion", json!({"residual": ec, "residual_per_grid_power": ec / gp, "refinement_ratio": ratio}))?;
    out.certificates.push(Certificate::at_most("green-inversion", ec / gp, 10.0));
    out.certificates.push(Certificate::at_least("refinement-ratio-low", ratio, 0.875 * target));
    out.certificates.push(Certificate::at_most("refinement-ratio-high", ratio, 1.125 * target));

    // remainder of the nonlinear Ricci map about the flat metric; second
    // order stencils leave a linear-term error comparable to the remainder
    let (hk, fk) = remainder_field(&spec)?;
    let exact = sample(&hk.linearized_ricci()?.scale(0.5), &spec)?;
    let scan = quadratic_remainder_scan(&fk, &v.epsilons, Some(&exact), &StencilConfig::order4())?;
    let smallest = scan.remainders.iter().copied().fold(f64::INFINITY, f64::min);
    out.put("remainder_scan", &scan)?;
    out.series.push(Series {
        kind: "remainder-scan".into(),
        label: String::new(),
        columns: vec!["epsilon".into(), "remainder_norm".into()],
        rows: scan.epsilons.iter().zip(&scan.remainders).map(|(&e, &r)| vec![e, r]).collect(),
    });
    out.certificates.push(Certificate::at_least("remainder-slope-low", scan.slope, 1.9));
    out.certificates.push(Certificate::at_most("remainder-slope-high", scan.slope, 2.1));
    out.certificates.push(Certificate::at_most(
        "remainder-fd-error",
        scan.fd_error.unwrap_or(f64::INFINITY) / smallest,
        0.1,
    ));

    // flat background: Lichnerowicz reduces to the rough Laplacian, Ric vanishes
    let fh = sample(&h, &spec)?;
    let a = fd_operator(FdOp::Lichnerowicz, &fh, &st)?;
    let b = fd_operator(FdOp::RoughLaplacian, &fh, &st)?;
    let lich = a.sub(&b)?.sup() / b.sup().max(1e-300);
    let ric = nonlinear_ricci(&GridField::flat_metric(&spec)?, &st)?.sup();
    out.put("flatness", json!({"lichnerowicz_minus_rough": lich, "flat_ricci": ric}))?;
    // fourth order curvature stencils of a constant metric leave roundoff
    out.certificates.push(Certificate::at_most("lichnerowicz-flat", lich, 1e-12));
    out.certificates.push(Certificate::at_most("flat-ricci", ric, 1e-11));
    Ok(out)
}

fn bound_fit(cfg: &JobConfig) -> Result<TaskOutput, CliError> {
    let c = &cfg.bound_fit;
    let cs = cfg.cross_section.build()?;
    let mu1 = cs.mu1();
    let rho: Vec<f64> = c.rho_fractions.iter().map(|f| f * mu1.sqrt()).collect();
    let mut out = TaskOutput::new();
    let mut fits = Vec::new();
    for &kind in &c.kinds {
        let fit = estimate_weighted_bound(mu1, &rho, kind)?;
        let (name, limit) = match kind {
            SourceKind::OneForm => ("one-form", 1.15),
            SourceKind::Function => ("function", 2.15),
        };
        out.certificates.push(Certificate::at_most(&format!("exponent-{name}"), fit.p, limit));
        out.series.push(Series {
            kind: "bound-fit".into(),
            label: name.into(),
            columns: vec!["rho".into(), "ratio".into(), "log_gap".into()],
            rows: fit.points.iter().map(|p| vec![p.rho, p.ratio, p.log_gap]).collect(),
        });
        fits.push(fit);
    }
    out.put("mu1", mu1)?;
    out.put("fits", fits)?;
    Ok(out)
}
