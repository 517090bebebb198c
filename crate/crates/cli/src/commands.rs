//! Subcommand implementations.

use std::path::Path;
use std::time::Instant;

use clap::{Args, ValueEnum};
use gkp_core::experiments::{
    certify_energy_bound, cross_check_reduced_model, run_qunaught_noise_study, run_scaling_sweep, run_stabilization,
    CrossCheckSpec, EnergySpec, QunaughtSpec, StabilizationSpec, SweepSpec,
};
use gkp_core::lindblad::ToleranceSpec;
use gkp_core::output::{config_hash, gap_table_csv, sweep_table_csv, write_json, write_trajectory, write_wigner};
use gkp_core::spectral::{predicted_rate, spectral_gap, verify_hardy, ReducedParams, RefinementSpec};
use gkp_core::states::{build_codeword, build_logical_state, Axis, GkpParams, LogicalLabel, QuantumState};
use gkp_core::wigner::{wigner as wigner_map, PhaseGrid};
use gkp_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{load_file, CommonArgs, ConfigError, RunConfig};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: 2, message: e.0 }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidDimension { .. }
            | Error::InvalidParameter { .. }
            | Error::ShapeMismatch { .. }
            | Error::Truncation { .. }
            | Error::InvalidState(_)
            | Error::InvalidRequest(_)
            | Error::Unsupported(_) => 2,
            Error::FitFailure(_) | Error::SweepFailure { .. } | Error::UnderflowHorizon { .. } => 4,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 3,
            message: format!("output error: {e}"),
        }
    }
}

type Outcome = Result<Value, Failure>;

/// Resolved configuration plus subcommand keys taken from the config file.
struct Setup {
    cfg: RunConfig,
    extra: toml::Table,
}

fn setup(common: CommonArgs, command: &str) -> Result<Setup, Failure> {
    let (file, extra) = match &common.config {
        Some(path) => load_file(path)?,
        None => (CommonArgs::default(), toml::Table::new()),
    };
    let cfg = RunConfig::resolve(common.or(file), &format!("runs/{command}"))?;
    if let Some(n) = cfg.threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(Setup { cfg, extra })
}

impl Setup {
    fn tolerance(&self) -> Result<ToleranceSpec, Failure> {
        Ok(ToleranceSpec::new(self.cfg.rtol, self.cfg.atol)?)
    }

    fn params(&self) -> Result<GkpParams, Failure> {
        Ok(GkpParams::with_eta(self.cfg.lattice, self.cfg.eta, self.cfg.epsilon)?)
    }

    fn list(&self, flag: Option<Vec<f64>>, key: &str) -> Result<Option<Vec<f64>>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.extra.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(ConfigError(format!("config key {key} must be a list of numbers")).into()),
                })
                .collect::<Result<Vec<_>, Failure>>()
                .map(Some),
            Some(_) => Err(ConfigError(format!("config key {key} must be a list of numbers")).into()),
        }
    }

    fn number(&self, flag: Option<f64>, key: &str) -> Result<Option<f64>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.extra.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(ConfigError(format!("config key {key} must be a number")).into()),
        }
    }

    fn string(&self, flag: Option<String>, key: &str) -> Result<Option<String>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.extra.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(ConfigError(format!("config key {key} must be a string")).into()),
        }
    }

    /// Writes `manifest.json` with the resolved configuration and options.
    fn manifest(&self, command: &str, options: &impl Serialize) -> Result<Value, Failure> {
        std::fs::create_dir_all(&self.cfg.out)?;
        let config = serde_json::to_value(&self.cfg).map_err(Error::from)?;
        let options = serde_json::to_value(options).map_err(Error::from)?;
        let hash = config_hash(&json!({"command": command, "config": config, "options": options}));
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "options": options,
            "config_hash": hash,
        });
        write_json(&self.cfg.out.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }

    fn out(&self) -> &Path {
        &self.cfg.out
    }
}

fn model_echo(cfg: &RunConfig) -> Value {
    json!({
        "lattice": cfg.lattice,
        "eta": cfg.eta,
        "epsilon": cfg.epsilon,
        "kappa": cfg.kappa,
        "dim": cfg.dim,
    })
}

#[derive(Args, Debug, Default, Serialize)]
pub struct StabilizeOpts {
    /// Regularizations tried for the target state (default 0.1..=0.2 step 0.005).
    #[arg(long, value_delimiter = ',')]
    pub target_epsilons: Option<Vec<f64>>,
    /// Half-width of the final-state Wigner grid.
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

pub fn stabilize(common: CommonArgs, opts: StabilizeOpts) -> Outcome {
    let s = setup(common, "stabilize")?;
    let mut spec = StabilizationSpec::for_lattice(s.cfg.lattice);
    spec.kappa = s.cfg.kappa;
    spec.record_interval = s.cfg.record_interval;
    spec.tolerance = s.tolerance()?;
    if let Some(t) = s.cfg.tmax {
        spec.t_final = t;
    }
    if let Some(list) = s.list(opts.target_epsilons.clone(), "target-epsilons")? {
        spec.target_epsilons = list;
    }
    let extent = s.number(opts.extent, "extent")?.unwrap_or(6.0);
    let points = s.number(opts.points.map(|p| p as f64), "points")?.unwrap_or(121.0) as usize;
    s.manifest("stabilize", &json!({"spec": spec, "extent": extent, "points": points}))?;

    let params = s.params()?;
    let start = Instant::now();
    let vacuum = QuantumState::vacuum(s.cfg.dim)?;
    let report = run_stabilization(s.cfg.dim, &params, &vacuum, &spec)?;
    let mut model = model_echo(&s.cfg);
    model["target"] = json!(report.target.name());
    model["target_epsilon"] = json!(report.target_epsilon);
    write_trajectory(&s.out().join("trajectories"), "stabilize", &report.record, &model, &spec.tolerance)?;
    let final_state = QuantumState::mixed(report.record.final_state.clone())?;
    let map = wigner_map(&final_state, &PhaseGrid::square(extent, points)?)?;
    write_wigner(
        &s.out().join("wigner"),
        "final",
        &map,
        &json!({"epsilon": s.cfg.epsilon, "eta": s.cfg.eta, "time": report.record.final_time()}),
    )?;
    let summary = json!({
        "fidelity": report.final_fidelity,
        "target": report.target.name(),
        "target_epsilon": report.target_epsilon,
        "mean_number": report.final_number,
        "final_time": report.record.final_time(),
        "runtime_s": start.elapsed().as_secs_f64(),
        "scan": report.scan,
        "diagnostics": report.record.diagnostics,
    });
    write_json(&s.out().join("summary.json"), &summary)?;
    Ok(json!({
        "fidelity": report.final_fidelity,
        "target_epsilon": report.target_epsilon,
        "mean_number": report.final_number,
        "out": s.out(),
    }))
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
pub enum AxisArg {
    Z,
    X,
    Y,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Z => Axis::Z,
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
        }
    }
}

#[derive(Args, Debug, Default, Serialize)]
pub struct SweepOpts {
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
}

pub fn noise_sweep(common: CommonArgs, opts: SweepOpts) -> Outcome {
    let s = setup(common, "noise-sweep")?;
    if s.cfg.lattice != 2 {
        return Err(ConfigError("noise-sweep needs the qubit lattice".into()).into());
    }
    let mut spec = SweepSpec::desk_scale();
    spec.eta = s.cfg.eta;
    spec.dim = s.cfg.dim;
    spec.record_interval = s.cfg.record_interval;
    spec.tolerance = s.tolerance()?;
    if let Some(t) = s.cfg.tmax {
        spec.horizon = t;
    }
    if let Some(k) = s.list(opts.kappas, "kappas")? {
        spec.kappa_values = k;
    }
    if let Some(e) = s.list(opts.epsilons, "epsilons")? {
        spec.epsilon_values = e;
    }
    if let Some(a) = opts.axis {
        spec.axis = a.into();
    }
    spec.validate()?;
    s.manifest("noise-sweep", &spec)?;

    let result = run_scaling_sweep(&spec);
    // The per-cell table is useful even when the fit cannot be made.
    let (cells, fit) = match result {
        Ok(r) => (r.cells.clone(), Ok(r)),
        Err(e) => (Vec::new(), Err(e)),
    };
    if !cells.is_empty() {
        std::fs::write(s.out().join("sweep_table.csv"), sweep_table_csv(&cells))?;
    }
    let result = fit?;
    let fits = json!({
        "observable": spec.axis.name(),
        "model": "gamma = A kappa^n / epsilon^r",
        "A": result.fit.a,
        "n": result.fit.n,
        "r": result.fit.r,
        "covariance_logA_n_r": result.fit.covariance,
        "rms": result.fit.rms,
        "residuals": result.fit.residuals,
        "kappa_fits": result.kappa_fits.iter().map(|(e, l)| json!({"epsilon": e, "n": l.slope, "log_prefactor": l.intercept, "rms": l.residual})).collect::<Vec<_>>(),
        "cells": result.cells,
    });
    write_json(&s.out().join("fits.json"), &fits)?;
    Ok(json!({
        "A": result.fit.a,
        "n": result.fit.n,
        "r": result.fit.r,
        "valid_cells": result.cells.iter().filter(|c| c.is_valid()).count(),
        "total_cells": result.cells.len(),
        "out": s.out(),
    }))
}

#[derive(Args, Debug, Default, Serialize)]
pub struct SpectralOpts {
    /// Reduced-operator parameters; without them sigma follows from
    /// `--epsilons` (or `--epsilon`) and the preset eta.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Random test functions per sigma for the Hardy check.
    #[arg(long)]
    pub hardy_tests: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn spectral(common: CommonArgs, opts: SpectralOpts) -> Outcome {
    let s = setup(common, "spectral")?;
    let sigmas = s.list(opts.sigmas.clone(), "sigmas")?;
    let epsilons = s.list(opts.epsilons.clone(), "epsilons")?;
    let hardy_tests = s.number(opts.hardy_tests.map(|n| n as f64), "hardy-tests")?.unwrap_or(200.0) as usize;
    let seed = s.number(opts.seed.map(|n| n as f64), "seed")?.unwrap_or(1.0) as u64;
    // (params, source epsilon)
    let cases: Vec<(ReducedParams, Option<f64>)> = match (sigmas, epsilons) {
        (Some(list), _) => list
            .into_iter()
            .map(|sigma| ReducedParams::new(sigma).map(|p| (p, None)))
            .collect::<Result<_, _>>()?,
        (None, eps) => eps
            .unwrap_or_else(|| vec![s.cfg.epsilon])
            .into_iter()
            .map(|e| ReducedParams::from_physical(e, s.cfg.eta).map(|p| (p, Some(e))))
            .collect::<Result<_, _>>()?,
    };
    s.manifest(
        "spectral",
        &json!({"cases": cases.iter().map(|(p, e)| json!({"sigma": p.sigma, "epsilon": e})).collect::<Vec<_>>(),
                "hardy_tests": hardy_tests, "seed": seed, "refinement": RefinementSpec::default()}),
    )?;

    let mut rows = Vec::with_capacity(cases.len());
    let mut report = Vec::with_capacity(cases.len());
    for (params, eps) in &cases {
        let gap = spectral_gap(params, &RefinementSpec::default())?;
        let gamma = eps.map(|e| predicted_rate(e, s.cfg.eta, gap.lambda1));
        let hardy = verify_hardy(params, hardy_tests, seed)?;
        let violations = hardy.violations().count();
        report.push(json!({
            "sigma": params.sigma,
            "epsilon": eps,
            "eta": eps.map(|_| s.cfg.eta),
            "lambda1": gap.lambda1,
            "gamma": gamma,
            "n_grid": gap.n_grid,
            "converged": gap.converged,
            "history": gap.history,
            "hardy_constant": hardy.constant,
            "hardy_max_ratio": hardy.max_ratio,
            "hardy_violations": violations,
            "hardy_offending": hardy.violations().collect::<Vec<_>>(),
        }));
        rows.push((gap, gamma));
    }
    std::fs::write(s.out().join("gap_table.csv"), gap_table_csv(&rows))?;
    write_json(&s.out().join("spectral.json"), &report)?;
    let violations: usize = report.iter().map(|r| r["hardy_violations"].as_u64().unwrap_or(0) as usize).sum();
    Ok(json!({
        "rows": report.iter().map(|r| json!({"sigma": r["sigma"], "epsilon": r["epsilon"], "lambda1": r["lambda1"], "gamma": r["gamma"], "converged": r["converged"]})).collect::<Vec<_>>(),
        "hardy_violations": violations,
        "out": s.out(),
    }))
}

#[derive(Args, Debug, Default, Serialize)]
pub struct EnergyOpts {
    /// Fraction of the admissible rate, in (0, 1).
    #[arg(long)]
    pub r: Option<f64>,
    /// Coherent amplitude of the trajectory check.
    #[arg(long)]
    pub alpha: Option<f64>,
}

pub fn certify_energy(common: CommonArgs, opts: EnergyOpts) -> Outcome {
    let s = setup(common, "certify-energy")?;
    let r = s.number(opts.r, "r")?.unwrap_or(0.9);
    let mut spec = EnergySpec {
        tolerance: s.tolerance()?,
        coherent_amplitude: Some(s.number(opts.alpha, "alpha")?.unwrap_or(4.0)),
        record_interval: s.cfg.record_interval,
        ..EnergySpec::default()
    };
    if let Some(t) = s.cfg.tmax {
        spec.horizon = t;
    }
    s.manifest("certify-energy", &json!({"r": r, "spec": spec}))?;
    let cert = certify_energy_bound(s.cfg.dim, s.cfg.eta, s.cfg.epsilon, r, &spec)?;
    write_json(&s.out().join("certificate.json"), &cert)?;
    Ok(json!({
        "lambda": cert.lambda,
        "mu": cert.mu,
        "mu_over_lambda": cert.mu_over_lambda,
        "mu_relative_change": cert.mu_relative_change,
        "trajectory_within_bound": cert.trajectory.as_ref().map(|t| t.within_bound),
        "passed": cert.passed(),
        "out": s.out(),
    }))
}

#[derive(Args, Debug, Default, Serialize)]
pub struct QunaughtOpts {
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

pub fn qunaught(common: CommonArgs, opts: QunaughtOpts) -> Outcome {
    let mut common = common;
    common.preset = common.preset.or(Some(crate::config::Preset::Qunaught));
    let s = setup(common, "qunaught")?;
    if s.cfg.lattice != 1 {
        return Err(ConfigError("qunaught needs the qunaught preset".into()).into());
    }
    let kappas = s.list(opts.kappas, "kappas")?.unwrap_or_else(|| vec![0.0, 1e-3, 1e-2, 5e-2]);
    let mut spec = QunaughtSpec::new(s.cfg.dim, s.cfg.epsilon, kappas);
    spec.steady.solver = s.tolerance()?;
    if let Some(e) = s.number(opts.extent, "extent")? {
        spec.wigner_extent = e;
    }
    if let Some(p) = s.number(opts.points.map(|p| p as f64), "points")? {
        spec.wigner_points = p as usize;
    }
    s.manifest("qunaught", &spec)?;
    let study = run_qunaught_noise_study(&spec)?;
    let mut rows = Vec::with_capacity(study.points.len());
    for (i, p) in study.points.iter().enumerate() {
        let name = format!("kappa_{i}");
        write_wigner(
            &s.out().join("wigner"),
            &name,
            &p.wigner,
            &json!({"epsilon": s.cfg.epsilon, "eta": s.cfg.eta, "kappa": p.kappa}),
        )?;
        rows.push(json!({
            "kappa": p.kappa,
            "visibility": p.visibility,
            "spacing_q": p.spacing_q,
            "spacing_p": p.spacing_p,
            "mean_number": p.mean_number,
            "residual": p.steady.residual,
            "time": p.steady.time,
            "wigner": format!("wigner/{name}.csv"),
        }));
    }
    let monotone = study.strictly_decreasing();
    write_json(&s.out().join("qunaught.json"), &json!({"points": rows, "strictly_decreasing": monotone}))?;
    Ok(json!({
        "kappa": study.points.iter().map(|p| p.kappa).collect::<Vec<_>>(),
        "visibility": study.points.iter().map(|p| p.visibility).collect::<Vec<_>>(),
        "strictly_decreasing": monotone,
        "out": s.out(),
    }))
}

pub fn crosscheck(common: CommonArgs) -> Outcome {
    let s = setup(common, "crosscheck")?;
    if s.cfg.lattice != 2 {
        return Err(ConfigError("crosscheck needs the qubit lattice".into()).into());
    }
    let mut spec = CrossCheckSpec::new(s.cfg.dim, s.cfg.epsilon);
    spec.eta = s.cfg.eta;
    spec.displacement = s.cfg.eta / 4.0;
    spec.tolerance = s.tolerance()?;
    spec.record_interval = s.cfg.record_interval.min(0.25);
    if let Some(t) = s.cfg.tmax {
        spec.horizon = t;
    }
    s.manifest("crosscheck", &spec)?;
    let report = cross_check_reduced_model(&spec)?;
    let mut csv = String::from("t,cos\n");
    for (t, c) in report.times.iter().zip(&report.series) {
        csv.push_str(&format!("{t:.10e},{c:.10e}\n"));
    }
    std::fs::create_dir_all(s.out().join("trajectories"))?;
    std::fs::write(s.out().join("trajectories").join("crosscheck.csv"), csv)?;
    write_json(&s.out().join("crosscheck.json"), &report)?;
    Ok(json!({
        "ratio": report.ratio,
        "fitted_rate": report.fitted_rate,
        "predicted_rate": report.predicted_rate,
        "stationary_value": report.stationary_value,
        "out": s.out(),
    }))
}

#[derive(Args, Debug, Default, Serialize)]
pub struct WignerOpts {
    /// One of plus-z, minus-z, plus-x, minus-x, plus-y, minus-y, magic.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

fn parse_label(name: &str) -> Result<LogicalLabel, Failure> {
    Ok(match name {
        "plus-z" => LogicalLabel::PlusZ,
        "minus-z" => LogicalLabel::MinusZ,
        "plus-x" => LogicalLabel::PlusX,
        "minus-x" => LogicalLabel::MinusX,
        "plus-y" => LogicalLabel::PlusY,
        "minus-y" => LogicalLabel::MinusY,
        "magic" => LogicalLabel::Magic,
        other => return Err(ConfigError(format!("unknown --state {other}")).into()),
    })
}

pub fn wigner(common: CommonArgs, opts: WignerOpts) -> Outcome {
    let s = setup(common, "wigner")?;
    let state_name = s.string(opts.state, "state")?.unwrap_or_else(|| "plus-z".into());
    let label = parse_label(&state_name)?;
    let extent = s.number(opts.extent, "extent")?.unwrap_or(6.0);
    let points = s.number(opts.points.map(|p| p as f64), "points")?.unwrap_or(121.0) as usize;
    s.manifest("wigner", &json!({"state": state_name, "extent": extent, "points": points}))?;
    let params = s.params()?;
    let state = if s.cfg.lattice == 1 {
        if label != LogicalLabel::PlusZ {
            return Err(ConfigError("the qunaught lattice has a single state (plus-z)".into()).into());
        }
        build_codeword(s.cfg.dim, &params, 0)?
    } else {
        build_logical_state(s.cfg.dim, &params, label)?
    };
    let map = wigner_map(&state, &PhaseGrid::square(extent, points)?)?;
    let path = write_wigner(
        &s.out().join("wigner"),
        &state_name,
        &map,
        &json!({"epsilon": s.cfg.epsilon, "eta": s.cfg.eta, "state": state_name}),
    )?;
    Ok(json!({
        "normalization": map.meta.normalization,
        "exceeds_validity": map.meta.exceeds_validity,
        "min": map.values.iter().copied().fold(f64::INFINITY, f64::min),
        "csv": path,
        "out": s.out(),
    }))
}
