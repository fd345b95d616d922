use std::path::{Path, PathBuf};

use lasso_augment::datagen::generate;
use lasso_augment::diagnostics::{histogram, series_diagnostics, summarize_states, write_histogram_csv};
use lasso_augment::estimation::fit_elliptical_fu_auto;
use lasso_augment::importance::{replicate_pvalue, PValueReport};
use lasso_augment::rng::child_seed;
use lasso_augment::samplers::io::{chain_csv_width, read_chain_csv, write_chain_csv, ChainSidecar};
use lasso_augment::solver::{lambda_grid, lambda_max};
use lasso_augment::{
    build_problem, direct_sample, estimate_sigma2, ols_estimate, posterior_decision_sample, run_conditional_mls,
    run_mls, run_multi_pvalue, run_rdmls, solve_lasso, spectral_decompose, AugmentedState, Chain, EfficiencyReport,
    Error, ErrorModel, LassoSolution, PValueConfig, ProblemSpec, RdmlsOptions, SamplerConfig, SolverOptions,
    Statistic, SummaryStats, TrialSpec,
};
use nalgebra::DVector;
use serde::Serialize;

use crate::args::*;
use crate::io::*;

pub fn run(cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    match cmd {
        Command::GenData(a) => gen_data(a, cmd, threads),
        Command::SampleJoint(a) => sample_joint(a, cmd, threads),
        Command::SampleCond(a) => sample_cond(a, cmd, threads),
        Command::Pvalue(a) => pvalue(a, cmd, threads),
        Command::PvalueMulti(a) => pvalue_multi(a, cmd, threads),
        Command::Diagnose(a) => diagnose(a, cmd, threads),
        Command::PosteriorCheck(a) => posterior_check(a, cmd, threads),
        Command::LambdaGrid(a) => grid(a, cmd, threads),
    }
}

fn load_design(d: &DesignArgs, lambda: f64) -> CliResult<ProblemSpec> {
    let x = read_matrix(&d.x)?;
    let w = match &d.weights {
        Some(path) => read_vector(path)?,
        None => vec![1.0; x.ncols()],
    };
    Ok(build_problem(x, w, lambda)?)
}

fn statistic(s: &StatArgs, p: usize) -> CliResult<Statistic> {
    match (s.stat, s.coord) {
        (StatKind::L1, None) => Ok(Statistic::L1),
        (StatKind::Linf, None) => Ok(Statistic::Linf),
        (StatKind::AbsCoord, Some(j)) if (1..=p).contains(&j) => Ok(Statistic::AbsCoord(j - 1)),
        (StatKind::AbsCoord, Some(j)) => Err(CliError::Config(format!("--coord {j} is outside 1..={p}"))),
        (StatKind::AbsCoord, None) => Err(CliError::Config("--stat abs-coord needs --coord".into())),
        (_, Some(_)) => Err(CliError::Config("--coord only applies to --stat abs-coord".into())),
    }
}

fn need<'a, T>(v: Option<&'a T>, what: &str) -> CliResult<&'a T> {
    v.ok_or_else(|| CliError::Config(format!("{what} needs --y")))
}

fn coefficient_file(path: &str, p: usize) -> CliResult<Vec<f64>> {
    let v = read_vector(Path::new(path))?;
    if v.len() != p {
        return Err(CliError::Data(format!("{path}: {} coefficients, expected {p}", v.len())));
    }
    Ok(v)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn write_chain(chain: &Chain, out: &Path, config: serde_json::Value) -> CliResult<PathBuf> {
    with_file(out, |w| write_chain_csv(chain, w))?;
    for warning in chain.accept.warnings() {
        eprintln!("warning: {warning}");
    }
    let side = sidecar_path(out);
    write_json(&side, &ChainSidecar::new(chain, config))?;
    Ok(side)
}

/// Everything the samplers need, resolved from [`ModelArgs`].
struct Resolved {
    spec: ProblemSpec,
    beta: Vec<f64>,
    model: ErrorModel,
    sigma2: f64,
    fit: Option<LassoSolution>,
}

fn resolve_model(m: &ModelArgs) -> CliResult<Resolved> {
    let spec = load_design(&m.design, m.lambda)?;
    let p = spec.p();
    let y = m.y.as_deref().map(read_response).transpose()?;
    let fit = y.as_ref().map(|y| solve_lasso(&spec, y, &SolverOptions::default())).transpose()?;
    let ols = |what: &str| -> CliResult<Vec<f64>> { Ok(ols_estimate(&spec, need(y.as_ref(), what)?)?) };
    let beta = match m.beta.as_str() {
        "lasso" => fit.as_ref().map(|f| f.beta_hat.clone()).ok_or_else(|| CliError::Config("--beta lasso needs --y".into()))?,
        "ols" => ols("--beta ols")?,
        "zero" => vec![0.0; p],
        path => coefficient_file(path, p)?,
    };
    let sigma2 = match m.sigma2 {
        Some(s) => s,
        None => estimate_sigma2(&spec, need(y.as_ref(), "estimating sigma2")?, &ols("estimating sigma2")?)?,
    };
    let model = match m.error {
        ErrorKind::Gaussian => ErrorModel::gaussian(sigma2),
        ErrorKind::T => {
            if p >= spec.n() {
                return Err(CliError::Config("the t model has n - p degrees of freedom and needs p < n".into()));
            }
            ErrorModel::StudentT { dof: (spec.n() - p) as f64, scale: sigma2 }
        }
        ErrorKind::Elliptical => {
            let y = need(y.as_ref(), "--error elliptical")?;
            fit_elliptical_fu_auto(&spec, y, &ols("--error elliptical")?, m.boot, m.bins, child_seed(m.seed, 1))?
        }
    };
    Ok(Resolved { spec, beta, model, sigma2, fit })
}

fn sampler_config(r: &Resolved, m: &ModelArgs, c: &ChainArgs) -> CliResult<SamplerConfig> {
    let reference = r.fit.as_ref().map(|f| f.beta_hat.as_slice());
    let mut cfg = SamplerConfig::defaults(&r.spec, reference, r.sigma2, m.seed)?;
    cfg.iters = c.iters;
    cfg.burn_in = c.burnin;
    cfg.equilibrium_init = r.fit.is_none();
    Ok(cfg)
}

#[derive(Serialize)]
struct ChainRunInfo<'a> {
    method: &'a str,
    beta: &'a [f64],
    model: &'a ErrorModel,
    sampler: Option<&'a SamplerConfig>,
}

fn chain_info(method: &str, r: &Resolved, cfg: Option<&SamplerConfig>) -> serde_json::Value {
    let info = ChainRunInfo { method, beta: &r.beta, model: &r.model, sampler: cfg };
    serde_json::to_value(info).expect("plain data serializes")
}

fn gen_data(a: &GenDataArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let data = generate(a.n, a.p, a.rho, a.sigma2, a.seed)?;
    let x = a.out_dir.join("X.csv");
    let y = a.out_dir.join("y.csv");
    let b = a.out_dir.join("beta0.csv");
    write_matrix(&x, &data.x)?;
    write_column(&y, data.y.as_slice())?;
    write_column(&b, &data.beta0)?;
    write_manifest(&a.out_dir.join("manifest.json"), cmd, threads, &[&x, &y, &b])
}

fn sample_joint(a: &SampleJointArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let r = resolve_model(&a.model)?;
    let (chain, info) = match a.method {
        Method::Direct => {
            if a.chain.burnin >= a.chain.iters {
                return Err(CliError::Config("--burnin must be below --iters".into()));
            }
            let l = a.chain.iters - a.chain.burnin;
            (direct_sample(&r.spec, &r.beta, &r.model, l, a.model.seed)?, chain_info("direct", &r, None))
        }
        Method::Mls | Method::Rdmls => {
            let cfg = sampler_config(&r, &a.model, &a.chain)?;
            let init = r.fit.as_ref().map(AugmentedState::from_solution);
            let chain = if matches!(a.method, Method::Mls) {
                run_mls(&r.spec, &r.beta, &r.model, &cfg, init.as_ref())?
            } else {
                run_rdmls(&r.spec, &r.beta, &r.model, &cfg, init.as_ref(), RdmlsOptions::default())?
            };
            let name = if matches!(a.method, Method::Mls) { "mls" } else { "rdmls" };
            (chain, chain_info(name, &r, Some(&cfg)))
        }
    };
    let side = write_chain(&chain, &a.chain.out, info)?;
    let manifest = manifest_path(a.chain.manifest.as_ref(), &a.chain.out);
    write_manifest(&manifest, cmd, threads, &[&a.chain.out, &side])
}

fn sample_cond(a: &SampleCondArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let r = resolve_model(&a.model)?;
    let p = r.spec.p();
    if let Some(j) = a.active.iter().find(|&&j| j == 0 || j > p) {
        return Err(CliError::Config(format!("--active index {j} is outside 1..={p}")));
    }
    let mut a_star: Vec<usize> = a.active.iter().map(|j| j - 1).collect();
    a_star.sort_unstable();
    a_star.dedup();
    let cfg = sampler_config(&r, &a.model, &a.chain)?;
    // Start from the Lasso fit when it already has the requested active set.
    let init = r.fit.as_ref().map(AugmentedState::from_solution).filter(|s| s.active_indices() == a_star);
    let chain = run_conditional_mls(&r.spec, &r.beta, &r.model, &a_star, &cfg, init.as_ref())?;
    let side = write_chain(&chain, &a.chain.out, chain_info("conditional", &r, Some(&cfg)))?;
    let manifest = manifest_path(a.chain.manifest.as_ref(), &a.chain.out);
    write_manifest(&manifest, cmd, threads, &[&a.chain.out, &side])
}

/// Null-hypothesis pieces shared by the p-value commands.
fn null_config(n: &NullArgs, spec: &ProblemSpec) -> CliResult<PValueConfig> {
    let p = spec.p();
    let beta0 = match n.null_beta.as_str() {
        "zero" => vec![0.0; p],
        path => coefficient_file(path, p)?,
    };
    let trial = match (n.lambda_dagger, n.sigma2_dagger) {
        (Some(lambda_dagger), s) => Some(TrialSpec {
            sigma2_dagger: s.unwrap_or(n.m_dagger * n.sigma2),
            lambda_dagger,
            m_dagger: n.m_dagger,
            l_pilot: n.l_pilot,
        }),
        (None, Some(_)) => return Err(CliError::Config("--sigma2-dagger needs --lambda-dagger".into())),
        (None, None) => None,
    };
    Ok(PValueConfig {
        sigma2_0: n.sigma2,
        beta0,
        statistic: statistic(&n.stat, p)?,
        l: n.l,
        m_dagger: n.m_dagger,
        l_pilot: n.l_pilot,
        trial,
        seed: n.seed,
    })
}

/// T(β̂) for the observed response, with β̂ fitted at `lambda`.
fn observed_statistic(spec: &ProblemSpec, y: &Path, lambda: f64, stat: Statistic) -> CliResult<f64> {
    let spec = spec.with_lambda(lambda)?;
    let fit = solve_lasso(&spec, &read_response(y)?, &SolverOptions::default())?;
    Ok(stat.eval(&AugmentedState::from_solution(&fit)))
}

fn pvalue(a: &PvalueArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let spec = load_design(&a.null.design, a.lambda_star)?;
    let cfg = null_config(&a.null, &spec)?;
    let t_star = match (a.t_star, &a.y) {
        (Some(t), None) => t,
        (None, Some(y)) => observed_statistic(&spec, y, a.lambda_star, cfg.statistic)?,
        (Some(_), Some(_)) => return Err(CliError::Config("give either --t-star or --y, not both".into())),
        (None, None) => return Err(CliError::Config("the observed statistic needs --t-star or --y".into())),
    };
    let basis = spec.is_high_dim().then(|| spectral_decompose(&spec)).transpose()?;
    let report = replicate_pvalue(&spec, basis.as_ref(), &cfg, a.lambda_star, t_star, a.replicates)?;
    if report.degenerate_weights {
        eprintln!("warning: importance weights are degenerate (ess = {:.1} of {})", report.ess, report.l);
    }
    write_json(&a.null.out, &report)?;
    let manifest = manifest_path(a.null.manifest.as_ref(), &a.null.out);
    write_manifest(&manifest, cmd, threads, &[&a.null.out])
}

fn pvalue_multi(a: &PvalueMultiArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let k = a.lambda_star.len();
    let first = *a.lambda_star.first().ok_or_else(|| CliError::Config("--lambda-star is empty".into()))?;
    let spec = load_design(&a.null.design, first)?;
    let cfg = null_config(&a.null, &spec)?;
    let t_stars = match (a.t_star.is_empty(), a.y.is_empty()) {
        (false, true) if a.t_star.len() == k => a.t_star.clone(),
        (true, false) if a.y.len() == k => a
            .y
            .iter()
            .zip(&a.lambda_star)
            .map(|(y, &l)| observed_statistic(&spec, y, l, cfg.statistic))
            .collect::<CliResult<Vec<f64>>>()?,
        (false, false) => return Err(CliError::Config("give either --t-star or --y, not both".into())),
        (true, true) => return Err(CliError::Config("the observed statistics need --t-star or --y".into())),
        _ => return Err(CliError::Config(format!("expected {k} observed statistics, one per --lambda-star"))),
    };
    let basis = spec.is_high_dim().then(|| spectral_decompose(&spec)).transpose()?;
    let (results, trial) = run_multi_pvalue(&spec, basis.as_ref(), &cfg, &a.lambda_star, &t_stars)?;
    let reports: Vec<PValueReport> = results
        .into_iter()
        .zip(a.lambda_star.iter().zip(&t_stars))
        .map(|(res, (&l, &t))| PValueReport::from_runs(&[(res, trial)], cfg.l, l, t))
        .collect();
    write_json(&a.null.out, &reports)?;
    let manifest = manifest_path(a.null.manifest.as_ref(), &a.null.out);
    write_manifest(&manifest, cmd, threads, &[&a.null.out])
}

#[derive(Serialize)]
struct Diagnostics {
    statistic: Statistic,
    summary: SummaryStats,
    /// Absent for weighted samples and for constant series.
    efficiency: Option<EfficiencyReport>,
}

fn diagnose(a: &DiagnoseArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let p = chain_csv_width(read_file(&a.chain)?)?;
    let (states, _) = read_chain_csv(read_file(&a.chain)?, p)?;
    let stat = statistic(&a.stat, p)?;
    let lw = a.log_weights.as_deref().map(read_vector).transpose()?;
    if lw.as_ref().is_some_and(|w| w.len() != states.len()) {
        return Err(CliError::Data("one log weight per chain row is required".into()));
    }
    let summary = summarize_states(&states, lw.as_deref())?;
    let values: Vec<f64> = states.iter().map(|s| stat.eval(s)).collect();
    let efficiency = match &lw {
        Some(_) => None,
        None => match series_diagnostics(&values, a.cost_ratio) {
            Ok(r) => Some(r),
            Err(e @ Error::Degenerate(_)) => {
                eprintln!("warning: no autocorrelation summary: {e}");
                None
            }
            Err(e) => return Err(e.into()),
        },
    };
    let lo = a.lo.unwrap_or_else(|| values.iter().copied().fold(f64::INFINITY, f64::min));
    let mut hi = a.hi.unwrap_or_else(|| values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if a.hi.is_none() && hi <= lo {
        hi = lo + 1.0;
    }
    let hist = histogram(&values, lw.as_deref(), lo, hi, a.bins)?;
    with_file(&a.hist, |w| write_histogram_csv(w, &hist))?;
    write_json(&a.out, &Diagnostics { statistic: stat, summary, efficiency })?;
    let manifest = manifest_path(a.manifest.as_ref(), &a.out);
    write_manifest(&manifest, cmd, threads, &[&a.out, &a.hist])
}

#[derive(Serialize)]
struct PosteriorCheck {
    sigma2: f64,
    model: ErrorModel,
    /// Decisions under the posterior of β given y.
    posterior: SummaryStats,
    /// Lasso draws at the least-squares estimate.
    sampling: SummaryStats,
    max_selection_gap: f64,
}

fn posterior_check(a: &PosteriorCheckArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    let spec = load_design(&a.design, a.lambda)?;
    let y: DVector<f64> = read_response(&a.y)?;
    let ols = ols_estimate(&spec, &y)?;
    let sigma2 = match a.sigma2 {
        Some(s) => s,
        None => estimate_sigma2(&spec, &y, &ols)?,
    };
    let model = match a.error {
        ErrorKind::Gaussian => ErrorModel::gaussian(sigma2),
        ErrorKind::T => ErrorModel::StudentT { dof: (spec.n() - spec.p()) as f64, scale: sigma2 },
        ErrorKind::Elliptical => {
            return Err(CliError::Config("posterior-check supports the gaussian and t models".into()))
        }
    };
    let post = posterior_decision_sample(&spec, &y, &model, a.l, a.seed)?;
    let draws = direct_sample(&spec, &ols, &model, a.l, child_seed(a.seed, 1))?;
    let posterior = summarize_states(&post.states, None)?;
    let sampling = summarize_states(&draws.states, None)?;
    let max_selection_gap = posterior
        .selection_prob
        .iter()
        .zip(&sampling.selection_prob)
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    with_file(&a.out, |w| write_chain_csv(&post, w))?;
    write_json(&a.report, &PosteriorCheck { sigma2, model, posterior, sampling, max_selection_gap })?;
    let manifest = manifest_path(a.manifest.as_ref(), &a.report);
    write_manifest(&manifest, cmd, threads, &[&a.out, &a.report])
}

fn grid(a: &LambdaGridArgs, cmd: &Command, threads: Option<usize>) -> CliResult<()> {
    // λ does not enter λ_max; any positive value builds the problem.
    let spec = load_design(&a.design, 1.0)?;
    let y = read_response(&a.y)?;
    if y.len() != spec.n() {
        return Err(CliError::Data(format!("y has {} entries, expected {}", y.len(), spec.n())));
    }
    if !(a.ratio > 0.0 && a.ratio < 1.0) {
        return Err(CliError::Config("--ratio must lie in (0, 1)".into()));
    }
    let values = lambda_grid(lambda_max(&spec, &y), a.ratio, a.len);
    write_column(&a.out, &values)?;
    let manifest = manifest_path(a.manifest.as_ref(), &a.out);
    write_manifest(&manifest, cmd, threads, &[&a.out])
}
