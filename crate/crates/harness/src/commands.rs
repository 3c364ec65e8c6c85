use std::path::{Path, PathBuf};

use flock_core::diagnostics::{
    fit_support_envelope, flocking_study, max_rise, meanfield_study, observed_phi_star, stability_study,
    verify_conservation, verify_decay, verify_gamma_bound_with, ConvergenceTable, DecayEnvelope, DiagnosticsError,
    Pairing, SeriesPoint, StabilityReport, VerdictReport,
};
use flock_core::dynamics::{integrate, IntegrationError, Trajectory};
use flock_core::model::{check_assumptions as sample_assumptions, cstar, AssumptionReport, ModelSpec};
use flock_core::transport::w1;
use serde::Serialize;

use crate::config::{PairingName, PhiStarSource, RunConfig};
use crate::io::{num, write_moments, write_snapshot, SnapshotMeta};
use crate::rundir::{RunDir, RunStatus};
use crate::seeds::{derive_seed, sha256_hex};
use crate::HarnessError;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const MOMENTS: &str = "moments.csv";
pub const REPORT: &str = "report.json";

/// First 16 hex digits of the SHA-256 of the model section.
pub fn model_hash(cfg: &RunConfig) -> String {
    let text = toml::to_string(&cfg.model).expect("model serializes");
    sha256_hex(text.as_bytes())[..16].to_string()
}

fn diagnostics_error(e: DiagnosticsError) -> HarnessError {
    match e {
        DiagnosticsError::Integration(e) => HarnessError::Runtime(e.to_string()),
        DiagnosticsError::Transport(e) => HarnessError::Runtime(e.to_string()),
        other => HarnessError::config(None, other.to_string()),
    }
}

fn write_run_files(run: &mut RunDir, cfg: &RunConfig, traj: &Trajectory) -> Result<(), HarnessError> {
    let d = cfg.model.dimension;
    run.write(MOMENTS, write_moments(&traj.snapshots, d).as_bytes())?;
    let meta = SnapshotMeta { model_hash: model_hash(cfg), seed: cfg.seed };
    let last = traj.len().saturating_sub(1);
    let stride = cfg.output.snapshot_stride;
    for (k, s) in traj.snapshots.iter().enumerate() {
        if k == 0 || k == last || (stride > 0 && k % stride == 0) {
            run.write(&format!("snapshots/snapshot_{k:05}.csv"), write_snapshot(&s.state, &meta).as_bytes())?;
        }
    }
    Ok(())
}

fn open_run(cfg: &RunConfig, out: &Path) -> Result<(RunDir, RunConfig), HarnessError> {
    let resolved = cfg.resolved()?;
    let mut run = RunDir::create(out)?;
    run.write(RESOLVED_CONFIG, resolved.to_toml().as_bytes())?;
    Ok((run, resolved))
}

/// Integrates the configured run, keeping the partial trajectory of a
/// failed integration together with the error.
fn run_trajectory(cfg: &RunConfig, model: &ModelSpec, extra_checkpoints: &[f64]) -> Result<Trajectory, (Option<Trajectory>, HarnessError)> {
    let state = cfg.initial_state().map_err(|e| (None, e))?;
    let mut integ = cfg.integrator_config();
    integ.checkpoints.extend_from_slice(extra_checkpoints);
    integrate(&state, model, &integ).map_err(|e: IntegrationError| {
        let partial = e.partial().cloned();
        (partial, HarnessError::Runtime(format!("integration failed: {e}")))
    })
}

pub struct SimulateOutcome {
    pub dir: PathBuf,
    pub trajectory: Trajectory,
}

/// Writes the resolved config, moments CSV, snapshots and manifest. An
/// integration failure still writes the partial trajectory, flagged as
/// such in the manifest, before the error is returned.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateOutcome, HarnessError> {
    let model = cfg.model_spec()?;
    let (mut run, resolved) = open_run(cfg, out)?;
    let hash = model_hash(&resolved);
    match run_trajectory(cfg, &model, &[]) {
        Ok(trajectory) => {
            write_run_files(&mut run, cfg, &trajectory)?;
            run.finish("simulate", RunStatus::Complete, cfg.seed, &hash, None)?;
            Ok(SimulateOutcome { dir: out.to_path_buf(), trajectory })
        }
        Err((partial, err)) => {
            let status = match &partial {
                Some(traj) => {
                    write_run_files(&mut run, cfg, traj)?;
                    RunStatus::Partial
                }
                None => RunStatus::Failed,
            };
            run.finish("simulate", status, cfg.seed, &hash, Some(&err.to_string()))?;
            Err(err)
        }
    }
}

/// W₁ between two snapshot or discrete-measure files.
pub fn w1_files(a: &Path, b: &Path, sum_metric: bool) -> Result<f64, HarnessError> {
    let (ma, mb) = (crate::io::read_measure(a)?, crate::io::read_measure(b)?);
    if ma.measure.dim() != mb.measure.dim() {
        return Err(HarnessError::Format {
            path: b.display().to_string(),
            line: 1,
            message: format!("dimension {} does not match {} of {}", mb.measure.dim(), ma.measure.dim(), a.display()),
        });
    }
    let metric = ma.metric(sum_metric);
    w1(&ma.measure, &mb.measure, metric)
        .map(|r| r.0)
        .map_err(|e| HarnessError::Runtime(e.to_string()))
}

#[derive(Debug, Serialize)]
struct CheckJson<'a> {
    name: &'a str,
    pass: bool,
    worst: f64,
    witness: &'a [f64],
    detail: &'a str,
}

#[derive(Debug, Serialize)]
struct AssumptionJson<'a> {
    pass: bool,
    radius: f64,
    samples: usize,
    phi_min: f64,
    growth_constant: f64,
    cstar: Option<f64>,
    checks: Vec<CheckJson<'a>>,
}

fn assumption_report(cfg: &RunConfig, model: &ModelSpec) -> AssumptionReport {
    sample_assumptions(model, cfg.assumptions.samples, cfg.assumption_radius(), derive_seed(cfg.seed, "assumptions"))
}

fn assumption_json(r: &AssumptionReport) -> AssumptionJson<'_> {
    AssumptionJson {
        pass: r.all_pass(),
        radius: r.radius,
        samples: r.samples,
        phi_min: r.phi_min,
        growth_constant: r.growth_constant,
        cstar: r.cstar,
        checks: r
            .checks
            .iter()
            .map(|c| CheckJson { name: c.name, pass: c.pass, worst: c.worst, witness: &c.witness, detail: &c.detail })
            .collect(),
    }
}

fn gate(report: &AssumptionReport) -> Result<(), HarnessError> {
    let failed: Vec<String> =
        report.checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Assumption(failed.join("; ")))
    }
}

/// Samples the model assumptions and writes `assumptions.json`. Fails with
/// an input error when any check fails.
pub fn check_assumptions(cfg: &RunConfig, out: &Path) -> Result<AssumptionReport, HarnessError> {
    let model = cfg.model_spec()?;
    let (mut run, resolved) = open_run(cfg, out)?;
    let report = assumption_report(cfg, &model);
    run.write_json("assumptions.json", &assumption_json(&report))?;
    let status = if report.all_pass() { RunStatus::Complete } else { RunStatus::Failed };
    run.finish("check-assumptions", status, cfg.seed, &model_hash(&resolved), None)?;
    gate(&report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Decay,
    Gamma,
    Support,
    Stability,
    Meanfield,
    Flocking,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }

    fn needs_base_run(self) -> bool {
        [Suite::Decay, Suite::Gamma, Suite::Support, Suite::Flocking].iter().any(|&s| self.includes(s))
    }
}

/// One verdict of a verify run as written to the report.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub witness_time: f64,
    pub detail: String,
    pub series: String,
}

#[derive(Debug, Serialize)]
struct ReportJson<'a> {
    suite: String,
    pass: bool,
    verdicts: &'a [VerdictSummary],
    tables: &'a [String],
}

pub struct VerifyOutcome {
    pub pass: bool,
    pub verdicts: Vec<VerdictSummary>,
    pub reports: Vec<VerdictReport>,
    pub trajectory: Option<Trajectory>,
    pub stability: Vec<StabilityReport>,
    pub meanfield: Option<ConvergenceTable>,
}

fn series_csv(series: &[SeriesPoint]) -> String {
    let mut out = String::from("t,observed,bound\n");
    for p in series {
        out.push_str(&format!("{},{},{}\n", num(p.t), num(p.observed), num(p.bound)));
    }
    out
}

struct Collector {
    run: RunDir,
    verdicts: Vec<VerdictSummary>,
    reports: Vec<VerdictReport>,
    tables: Vec<String>,
}

impl Collector {
    fn push(&mut self, report: VerdictReport) -> Result<(), HarnessError> {
        let series = format!("series/{}.csv", report.name);
        self.run.write(&series, series_csv(&report.series).as_bytes())?;
        self.verdicts.push(VerdictSummary {
            name: report.name.clone(),
            pass: report.pass,
            margin: report.worst_margin,
            tolerance: report.tolerance,
            witness_time: report.witness_time,
            detail: report.detail.clone(),
            series,
        });
        self.reports.push(report);
        Ok(())
    }

    fn table(&mut self, rel: &str, text: String) -> Result<(), HarnessError> {
        self.run.write(rel, text.as_bytes())?;
        self.tables.push(rel.to_string());
        Ok(())
    }
}

fn failed_report(name: &str, t: f64, detail: String) -> VerdictReport {
    VerdictReport {
        name: name.into(),
        pass: false,
        worst_margin: f64::NEG_INFINITY,
        tolerance: 0.0,
        witness_time: t,
        series: Vec::new(),
        detail,
    }
}

/// Decay envelope with Φ* chosen as configured.
fn envelope(cfg: &RunConfig, model: &ModelSpec, traj: &Trajectory) -> Result<DecayEnvelope, String> {
    let phi = match cfg.verify.phi_star {
        PhiStarSource::Observed => observed_phi_star(model, traj),
        PhiStarSource::Declared => model.phi_star,
    };
    DecayEnvelope::for_trajectory(&model.with_phi_star(phi), traj)
        .map_err(|e| format!("no decay envelope with Phi* = {phi}: {e}"))
}

fn flocking_report(cfg: &RunConfig, model: &ModelSpec, traj: &Trajectory) -> Result<VerdictReport, HarnessError> {
    let t_eval = cfg.flocking_time();
    let fc = &cfg.verify.flocking;
    let points: Vec<_> = flocking_study(traj, cfg.ground_metric())
        .map_err(diagnostics_error)?
        .into_iter()
        .filter(|p| p.t <= t_eval)
        .collect();
    let env = match envelope(cfg, model, traj) {
        Ok(env) => env,
        Err(msg) => return Ok(failed_report("flocking", t_eval, msg)),
    };
    let at = points.iter().find(|p| p.t == t_eval).ok_or(HarnessError::Runtime(format!("no snapshot at t = {t_eval}")))?;
    let bound_t = env.value(t_eval).sqrt();
    let dist_series: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.distance)).collect();
    let root_series: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.sqrt_gf)).collect();
    let rise_d = max_rise(&dist_series, fc.monotone_after);
    let rise_g = max_rise(&root_series, fc.monotone_after);
    let tol = cfg.verify.rel_tol;
    let rel = |bound: f64, obs: f64| if bound > 0.0 { (bound - obs) / bound } else { -obs };
    let margins = [
        rel(at.sqrt_gf, at.distance),
        rel(bound_t * (1.0 + tol), at.sqrt_gf),
        fc.slack - rise_d.max(0.0),
        fc.slack - rise_g.max(0.0),
    ];
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let series = points.iter().map(|p| SeriesPoint { t: p.t, observed: p.distance, bound: p.sqrt_gf }).collect();
    Ok(VerdictReport {
        name: "flocking".into(),
        pass: margins.iter().all(|m| *m >= 0.0),
        worst_margin: worst,
        tolerance: 0.0,
        witness_time: t_eval,
        series,
        detail: format!(
            "t = {t_eval}: distance = {}, sqrt Gf = {}, envelope = {bound_t}; max rise after t = {}: distance {rise_d:e}, sqrt Gf {rise_g:e}",
            at.distance, at.sqrt_gf, fc.monotone_after
        ),
    })
}

fn stability_reports(cfg: &RunConfig, model: &ModelSpec, c: &mut Collector) -> Result<Vec<StabilityReport>, HarnessError> {
    let spec = cfg.initial_spec()?;
    let sc = &cfg.verify.stability;
    let seed = derive_seed(cfg.seed, "perturbation");
    let integ = cfg.integrator_config();
    let run = |delta: f64| {
        stability_study(&spec, delta, seed, model, &integ, &sc.times, cfg.ground_metric()).map_err(diagnostics_error)
    };
    let reports: Vec<StabilityReport> = sc.perturbations.iter().map(|&d| run(d)).collect::<Result<_, _>>()?;
    let zero = run(0.0)?;
    let zero_max = zero.series.iter().map(|p| p.distance).fold(0.0, f64::max);
    let rate = reports.iter().map(|r| r.growth_rate).fold(0.0, f64::max);
    let mut table = String::from("perturbation,t,distance,ratio,envelope,bound\n");
    let mut series = Vec::new();
    for r in reports.iter().chain([&zero]) {
        for p in &r.series {
            let bound = (rate * p.t).exp();
            table.push_str(&format!(
                "{},{},{},{},{},{}\n",
                num(r.perturbation),
                num(p.t),
                num(p.distance),
                num(p.ratio),
                num(p.envelope),
                num(bound)
            ));
            if r.perturbation > 0.0 {
                series.push(SeriesPoint { t: p.t, observed: p.ratio, bound });
            }
        }
    }
    c.table("tables/stability.csv", table)?;
    let pass = rate.is_finite() && rate <= sc.c_cap && zero_max == 0.0 && reports.iter().all(|r| r.initial_distance > 0.0);
    c.push(VerdictReport {
        name: "stability".into(),
        pass,
        worst_margin: if zero_max == 0.0 { (sc.c_cap - rate) / sc.c_cap } else { f64::NEG_INFINITY },
        tolerance: 0.0,
        witness_time: sc.times.iter().copied().fold(0.0, f64::max),
        series,
        detail: format!(
            "shared growth rate c = {rate} (cap {}); zero perturbation max distance = {zero_max}; initial distances {:?}",
            sc.c_cap,
            reports.iter().map(|r| r.initial_distance).collect::<Vec<_>>()
        ),
    })?;
    Ok(reports)
}

fn meanfield_report(cfg: &RunConfig, model: &ModelSpec, c: &mut Collector) -> Result<ConvergenceTable, HarnessError> {
    let spec = cfg.initial_spec()?;
    let mc = &cfg.verify.meanfield;
    let pairing = match mc.pairing {
        PairingName::AgainstLargest => Pairing::AgainstLargest,
        PairingName::Consecutive => Pairing::Consecutive,
    };
    let integ = cfg.integrator_config();
    let tables: Vec<ConvergenceTable> = (0..mc.seeds)
        .map(|s| {
            let spec = spec.with_seed(derive_seed(cfg.seed, &format!("meanfield/{s}")));
            meanfield_study(&spec, &mc.ns, model, &integ, &mc.times, pairing, cfg.ground_metric())
        })
        .collect::<Result<_, _>>()
        .map_err(diagnostics_error)?;
    let avg = ConvergenceTable::average(&tables).map_err(diagnostics_error)?;
    let mut text = String::from("n,reference_n,t,distance,wall_seconds\n");
    for r in &avg.rows {
        text.push_str(&format!("{},{},{},{},{}\n", r.n, r.reference_n, num(r.t), num(r.distance), num(r.wall_seconds)));
    }
    c.table("tables/meanfield.csv", text)?;
    let t_first = mc.times[0];
    let t_last = *mc.times.last().expect("times validated non-empty");
    let first = avg.column(t_first);
    let last = avg.column(t_last);
    let decreasing = last.windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<f64> = last.iter().zip(&first).map(|(l, f)| l / f).collect();
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let series = avg
        .rows
        .iter()
        .filter(|r| r.t == t_last)
        .zip(&first)
        .map(|(r, f)| SeriesPoint { t: r.n as f64, observed: r.distance, bound: mc.max_ratio * f })
        .collect();
    c.push(VerdictReport {
        name: "meanfield".into(),
        pass: decreasing && worst_ratio <= mc.max_ratio,
        worst_margin: if decreasing { (mc.max_ratio - worst_ratio) / mc.max_ratio } else { f64::NEG_INFINITY },
        tolerance: 0.0,
        witness_time: t_last,
        series,
        detail: format!(
            "{}; t = {t_last} column {last:?} strictly decreasing: {decreasing}; ratios to t = {t_first}: {ratios:?} (max allowed {})",
            avg.reference, mc.max_ratio
        ),
    })?;
    Ok(avg)
}

/// Runs the selected suite, writes series, tables, `report.json` and the
/// manifest. Violated model assumptions stop the run before any simulation.
pub fn verify(cfg: &RunConfig, suite: Suite, out: &Path) -> Result<VerifyOutcome, HarnessError> {
    let model = cfg.model_spec()?;
    let assumptions = assumption_report(cfg, &model);
    gate(&assumptions)?;
    cstar(&model).map_err(|e| HarnessError::Assumption(e.to_string()))?;
    let (run, resolved) = open_run(cfg, out)?;
    let hash = model_hash(&resolved);
    let mut c = Collector { run, verdicts: Vec::new(), reports: Vec::new(), tables: Vec::new() };
    c.run.write_json("assumptions.json", &assumption_json(&assumptions))?;

    let mut trajectory = None;
    if suite.needs_base_run() {
        let traj = match run_trajectory(cfg, &model, &[cfg.flocking_time()]) {
            Ok(t) => t,
            Err((partial, err)) => {
                let status = match &partial {
                    Some(t) => {
                        write_run_files(&mut c.run, cfg, t)?;
                        RunStatus::Partial
                    }
                    None => RunStatus::Failed,
                };
                c.run.finish("verify", status, cfg.seed, &hash, Some(&err.to_string()))?;
                return Err(err);
            }
        };
        write_run_files(&mut c.run, cfg, &traj)?;
        if suite.includes(Suite::Decay) {
            let (vt, xt) = (cfg.verify.conservation_v_tol, cfg.verify.conservation_x_tol);
            c.push(verify_conservation(&traj, vt, xt).map_err(diagnostics_error)?)?;
            let report = match envelope(cfg, &model, &traj) {
                Ok(env) => verify_decay(&traj, &env, cfg.verify.rel_tol).map_err(diagnostics_error)?,
                Err(msg) => failed_report("decay", 0.0, msg),
            };
            c.push(report)?;
        }
        if suite.includes(Suite::Gamma) {
            let report = verify_gamma_bound_with(&traj, cfg.gamma_window(), cfg.verify.gamma_fraction)
                .map_err(diagnostics_error)?;
            c.push(report)?;
        }
        if suite.includes(Suite::Support) {
            let (_, _, report) = fit_support_envelope(&traj, cfg.verify.support_c_cap).map_err(diagnostics_error)?;
            c.push(report)?;
        }
        if suite.includes(Suite::Flocking) {
            let report = flocking_report(cfg, &model, &traj)?;
            c.push(report)?;
        }
        trajectory = Some(traj);
    }
    let stability = if suite.includes(Suite::Stability) { stability_reports(cfg, &model, &mut c)? } else { Vec::new() };
    let meanfield = if suite.includes(Suite::Meanfield) { Some(meanfield_report(cfg, &model, &mut c)?) } else { None };

    let pass = c.verdicts.iter().all(|v| v.pass);
    let suite_name = format!("{suite:?}").to_lowercase();
    c.run.write_json(REPORT, &ReportJson { suite: suite_name, pass, verdicts: &c.verdicts, tables: &c.tables })?;
    let Collector { run, verdicts, reports, .. } = c;
    run.finish("verify", RunStatus::Complete, cfg.seed, &hash, None)?;
    Ok(VerifyOutcome { pass, verdicts, reports, trajectory, stability, meanfield })
}
