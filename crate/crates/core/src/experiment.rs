//! Configuration files, sweeps and CSV output.
//!
//! A configuration is a JSON document:
//!
//! ```json
//! {
//!   "network": {
//!     "flows": [ { "distance": 25, "lambda": 0.3 }, { "src": [0, 100], "sink": [100, 100], "lambda": 0.3 } ],
//!     "n_robots": 4,
//!     "velocity": 4.0,
//!     "epoch_len": 100,
//!     "rate_model": { "r_max": 1, "c": 1, "eta": 2 },
//!     "initial_robot_positions": "first_source"
//!   },
//!   "scheduler": { "kind": "cbmf" },
//!   "horizon_epochs": 2000,
//!   "substeps": 1,
//!   "warmup_fraction": 0.1,
//!   "sweep": { "variable": "lambda_scale", "values": [0.5, 1.0, 1.5] },
//!   "output": "out.csv",
//!   "seed": 0
//! }
//! ```
//!
//! Unknown keys are rejected. See the README for every default.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{DelayCase, FerryPair};
use crate::capacity::{self, Decomposition, ScheduleProgram, SynthesisOptions};
use crate::engine::{self, Metrics, RunOptions, Verdict};
use crate::model::{default_flow_layout, FlowSpec, NetworkSpec, Point, RateModel};
use crate::scheduler::{CbmfScheduler, Scheduler, StaticScheduler};
use crate::{Error, Result};

pub const DEFAULT_HORIZON_EPOCHS: usize = 2000;
pub const DEFAULT_WARMUP: f64 = 0.1;
pub const DEFAULT_ORACLE_SLACK: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
struct Coord([f64; 2]);

impl From<Coord> for Point {
    fn from(c: Coord) -> Self {
        Point::new(c.0[0], c.0[1])
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    lambda: f64,
    #[serde(default)]
    distance: Option<f64>,
    #[serde(default)]
    src: Option<Coord>,
    #[serde(default)]
    sink: Option<Coord>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPlacement {
    Named(String),
    Explicit(Vec<Coord>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    flows: Vec<RawFlow>,
    n_robots: usize,
    velocity: f64,
    epoch_len: usize,
    #[serde(default)]
    rate_model: RawRateModel,
    #[serde(default)]
    initial_robot_positions: Option<RawPlacement>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRateModel {
    r_max: f64,
    c: f64,
    eta: f64,
    form: crate::model::RateForm,
}

impl Default for RawRateModel {
    fn default() -> Self {
        let m = RateModel::default();
        RawRateModel {
            r_max: m.r_max,
            c: m.c,
            eta: m.eta,
            form: m.form,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawScheduler {
    #[default]
    Cbmf,
    Static {
        program: PathBuf,
    },
    Oracle {
        #[serde(default)]
        lambda: Option<Vec<f64>>,
        #[serde(default)]
        slack: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "lambda_scale")]
    LambdaScale,
    #[serde(rename = "v")]
    Velocity,
    #[serde(rename = "T")]
    EpochLen,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::LambdaScale => "lambda_scale",
            SweepVariable::Velocity => "v",
            SweepVariable::EpochLen => "T",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    network: RawNetwork,
    #[serde(default)]
    scheduler: RawScheduler,
    #[serde(default = "default_horizon")]
    horizon_epochs: usize,
    #[serde(default = "default_substeps")]
    substeps: usize,
    #[serde(default)]
    sweep: Option<Sweep>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default = "default_warmup")]
    warmup_fraction: f64,
    #[serde(default)]
    seed: u64,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON_EPOCHS
}
fn default_substeps() -> usize {
    1
}
fn default_warmup() -> f64 {
    DEFAULT_WARMUP
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchedulerKind {
    Cbmf,
    Static(ScheduleProgram),
    /// Time-sharing program built for a known rate vector; `None` uses the
    /// network's own arrival rates at each sweep point.
    Oracle {
        lambda: Option<Vec<f64>>,
        slack: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    FirstSource,
    Random,
    Explicit(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    pub placement: Placement,
    pub scheduler: SchedulerKind,
    pub horizon_epochs: usize,
    pub substeps: usize,
    pub sweep: Option<Sweep>,
    pub output: Option<PathBuf>,
    pub warmup_fraction: f64,
    pub seed: u64,
}

/// Reads and validates a configuration file. Relative paths inside it are
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent())
}

pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let resolve = |p: PathBuf| match base_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    };

    let n = raw.network.n_robots;
    let mut flows = Vec::with_capacity(raw.network.flows.len());
    for (i, f) in raw.network.flows.iter().enumerate() {
        let (src, sink) = match (f.distance, f.src, f.sink) {
            (Some(d), None, None) => {
                let mut dists = vec![0.0; i + 1];
                dists[i] = d;
                default_flow_layout(&dists)[i]
            }
            (None, Some(s), Some(k)) => (s.into(), k.into()),
            _ => {
                return Err(Error::Config(format!(
                    "flow {}: give either `distance` or both `src` and `sink`",
                    i + 1
                )))
            }
        };
        flows.push(FlowSpec {
            src,
            sink,
            lambda: f.lambda,
        });
    }
    let rm = &raw.network.rate_model;
    let rate_model = RateModel {
        r_max: rm.r_max,
        c: rm.c,
        eta: rm.eta,
        form: rm.form,
    };

    let placement = match &raw.network.initial_robot_positions {
        None => Placement::FirstSource,
        Some(RawPlacement::Named(s)) if s == "first_source" => Placement::FirstSource,
        Some(RawPlacement::Named(s)) if s == "random" => Placement::Random,
        Some(RawPlacement::Named(s)) => {
            return Err(Error::Config(format!(
                "initial_robot_positions: unknown placement `{s}` (expected first_source, random or a list)"
            )))
        }
        Some(RawPlacement::Explicit(v)) => Placement::Explicit(v.iter().map(|&c| c.into()).collect()),
    };

    let mut network = NetworkSpec {
        flows,
        n_robots: n,
        velocity: raw.network.velocity,
        epoch_len: raw.network.epoch_len,
        rate_model,
        initial_robot_positions: Vec::new(),
    };
    network.initial_robot_positions = place_robots(&network, &placement, raw.seed);
    network.validate()?;

    if raw.horizon_epochs < 4 {
        return Err(Error::Config(format!(
            "horizon_epochs must be >= 4, got {}",
            raw.horizon_epochs
        )));
    }
    if raw.substeps == 0 {
        return Err(Error::Config("substeps must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&raw.warmup_fraction) {
        return Err(Error::Config(format!(
            "warmup_fraction must be in [0, 1), got {}",
            raw.warmup_fraction
        )));
    }
    if let Some(sw) = &raw.sweep {
        validate_sweep(sw)?;
    }

    let scheduler = match raw.scheduler {
        RawScheduler::Cbmf => SchedulerKind::Cbmf,
        RawScheduler::Static { program } => {
            let path = resolve(program);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("program file {}: {e}", path.display())))?;
            SchedulerKind::Static(ScheduleProgram::from_json(&text)?)
        }
        RawScheduler::Oracle { lambda, slack } => {
            if let Some(l) = &lambda {
                if l.len() != network.n_flows() {
                    return Err(Error::Config(format!(
                        "oracle lambda has {} entries for {} flows",
                        l.len(),
                        network.n_flows()
                    )));
                }
            }
            SchedulerKind::Oracle {
                lambda,
                slack: slack.unwrap_or(DEFAULT_ORACLE_SLACK),
            }
        }
    };

    Ok(ExperimentConfig {
        network,
        placement,
        scheduler,
        horizon_epochs: raw.horizon_epochs,
        substeps: raw.substeps,
        sweep: raw.sweep,
        output: raw.output.map(resolve),
        warmup_fraction: raw.warmup_fraction,
        seed: raw.seed,
    })
}

fn validate_sweep(sw: &Sweep) -> Result<()> {
    if sw.values.is_empty() {
        return Err(Error::Config("sweep values must be nonempty".into()));
    }
    for &x in &sw.values {
        let ok = match sw.variable {
            SweepVariable::LambdaScale => x.is_finite() && x >= 0.0,
            SweepVariable::Velocity => x.is_finite() && x > 0.0,
            SweepVariable::EpochLen => x.is_finite() && x >= 1.0 && x.fract() == 0.0,
        };
        if !ok {
            return Err(Error::Config(format!(
                "sweep value {x} is invalid for `{}`",
                sw.variable.name()
            )));
        }
    }
    Ok(())
}

fn place_robots(spec: &NetworkSpec, placement: &Placement, seed: u64) -> Vec<Point> {
    match placement {
        Placement::FirstSource => {
            let p = spec.flows.first().map_or(Point::new(0.0, 0.0), |f| f.src);
            vec![p; spec.n_robots]
        }
        Placement::Explicit(v) => v.clone(),
        Placement::Random => {
            let nodes: Vec<Point> = spec.flows.iter().flat_map(|f| [f.src, f.sink]).collect();
            let (x0, x1) = bounds(nodes.iter().map(|p| p.x));
            let (y0, y1) = bounds(nodes.iter().map(|p| p.y));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..spec.n_robots)
                .map(|_| {
                    Point::new(
                        x0 + rng.gen::<f64>() * (x1 - x0),
                        y0 + rng.gen::<f64>() * (y1 - y0),
                    )
                })
                .collect()
        }
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

impl ExperimentConfig {
    pub fn run_options(&self) -> RunOptions {
        RunOptions::new(self.horizon_epochs)
            .substeps(self.substeps)
            .warmup(self.warmup_fraction)
    }

    /// The network at one sweep point.
    pub fn spec_at(&self, variable: SweepVariable, value: f64) -> Result<NetworkSpec> {
        let mut s = self.network.clone();
        match variable {
            SweepVariable::LambdaScale => {
                for f in &mut s.flows {
                    f.lambda *= value;
                }
            }
            SweepVariable::Velocity => s.velocity = value,
            SweepVariable::EpochLen => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "epoch length {value} is not a positive integer"
                    )));
                }
                s.epoch_len = value as usize;
            }
        }
        s.validate()?;
        Ok(s)
    }
}

/// Scheduler instance for one run.
pub fn build_scheduler(
    kind: &SchedulerKind,
    spec: &NetworkSpec,
) -> Result<Box<dyn Scheduler + Send>> {
    Ok(match kind {
        SchedulerKind::Cbmf => Box::new(CbmfScheduler),
        SchedulerKind::Static(p) => Box::new(StaticScheduler::new(p.clone())?),
        SchedulerKind::Oracle { lambda, slack } => {
            let lam = lambda.clone().unwrap_or_else(|| spec.lambdas());
            let program =
                capacity::oracle_program(&lam, spec, *slack, &SynthesisOptions::default())?;
            Box::new(StaticScheduler::new(program)?)
        }
    })
}

/// One CSV row: a flow at a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_variable: Option<&'static str>,
    pub sweep_value: Option<f64>,
    /// 1-based flow number.
    pub flow: usize,
    pub lambda: Option<f64>,
    pub throughput: Option<f64>,
    pub avg_queue: Option<f64>,
    pub delay: Option<f64>,
    pub stable: Option<bool>,
    pub in_capacity_region: Option<bool>,
    pub in_inner_bound: Option<bool>,
    pub status: String,
}

pub const RESULT_HEADER: &str =
    "sweep_variable,sweep_value,flow,lambda,throughput,avg_queue,delay,stable,in_capacity_region,in_inner_bound,status";

/// Runs one spec and post-processes the metrics.
pub fn run_point(spec: &NetworkSpec, kind: &SchedulerKind, opts: &RunOptions) -> Result<Metrics> {
    let mut sched = build_scheduler(kind, spec)?;
    engine::run_with(spec, &mut sched, opts)
}

fn rows_for(
    spec: &NetworkSpec,
    sweep: Option<(SweepVariable, f64)>,
    outcome: Result<Metrics>,
) -> Vec<ResultRow> {
    let lam = spec.lambdas();
    let r_max = spec.rate_model.r_max;
    let in_region = capacity::in_capacity_region(&lam, spec.n_robots, r_max);
    let in_ib = capacity::spec_in_inner_bound(&lam, spec).ok();
    let base = |i: usize| ResultRow {
        sweep_variable: sweep.map(|(v, _)| v.name()),
        sweep_value: sweep.map(|(_, x)| x),
        flow: i + 1,
        lambda: Some(lam[i]),
        throughput: None,
        avg_queue: None,
        delay: None,
        stable: None,
        in_capacity_region: Some(in_region),
        in_inner_bound: in_ib,
        status: String::new(),
    };
    match outcome {
        Ok(m) => (0..lam.len())
            .map(|i| ResultRow {
                throughput: Some(m.throughput[i]),
                avg_queue: Some(m.time_avg_queue[i]),
                delay: m.delay[i],
                stable: Some(m.verdict[i] == Verdict::Stable),
                status: "ok".into(),
                ..base(i)
            })
            .collect(),
        Err(e) => (0..lam.len())
            .map(|i| ResultRow {
                status: format!("error: {e}"),
                ..base(i)
            })
            .collect(),
    }
}

/// Runs the base configuration, or every sweep point when a sweep is
/// configured. Failed points are reported in the `status` column instead of
/// aborting. Rows are ordered by sweep value position, then flow.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let opts = cfg.run_options();
    match &cfg.sweep {
        None => {
            let outcome = run_point(&cfg.network, &cfg.scheduler, &opts);
            Ok(rows_for(&cfg.network, None, outcome))
        }
        Some(sw) => {
            let rows: Vec<Vec<ResultRow>> = sw
                .values
                .par_iter()
                .map(|&x| match cfg.spec_at(sw.variable, x) {
                    Ok(spec) => {
                        let outcome = run_point(&spec, &cfg.scheduler, &opts);
                        rows_for(&spec, Some((sw.variable, x)), outcome)
                    }
                    Err(e) => {
                        let mut spec = cfg.network.clone();
                        if sw.variable == SweepVariable::LambdaScale {
                            spec.flows.iter_mut().for_each(|f| f.lambda *= x);
                        }
                        rows_for(&spec, Some((sw.variable, x)), Err(e))
                    }
                })
                .collect();
            Ok(rows.into_iter().flatten().collect())
        }
    }
}

pub fn write_csv<T: Serialize, W: std::io::Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}

/// Largest multiple `s` of `direction` (searched in `[0, hi]` to within `tol`)
/// for which CBMF keeps every flow stable.
pub fn stability_boundary(
    spec: &NetworkSpec,
    direction: &[f64],
    opts: &RunOptions,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let stable_at = |s: f64| -> Result<bool> {
        let lam: Vec<f64> = direction.iter().map(|d| d * s).collect();
        let sp = spec.with_lambdas(&lam)?;
        Ok(engine::run_with(&sp, &mut CbmfScheduler, opts)?.all_stable())
    };
    if stable_at(hi)? {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if stable_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Single flow with the source at the origin and the sink `d` away; robot 1
/// starts at the sink and robot 2 at the source.
pub fn ferry_pair_spec(
    d: f64,
    lambda: f64,
    v: f64,
    epoch_len: usize,
    rate: RateModel,
) -> Result<NetworkSpec> {
    let src = Point::new(0.0, 0.0);
    let sink = Point::new(d, 0.0);
    NetworkSpec::new(
        vec![FlowSpec { src, sink, lambda }],
        2,
        v,
        epoch_len,
        rate,
        vec![sink, src],
    )
}

/// Grid for the closed-form versus simulated delay comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTableParams {
    pub d: f64,
    pub velocities: Vec<f64>,
    pub epoch_lens: Vec<usize>,
    pub lambdas: LambdaGrid,
    pub rate_model: RateModel,
    pub horizon_epochs: usize,
    pub substeps: usize,
    pub warmup_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// Fractions of each grid point's maximum stable rate.
    FractionsOfMax(Vec<f64>),
    Absolute(Vec<f64>),
}

impl Default for DelayTableParams {
    fn default() -> Self {
        DelayTableParams {
            d: 10.0,
            velocities: vec![1.0, 2.0, 4.0],
            epoch_lens: vec![10, 20, 40],
            lambdas: LambdaGrid::FractionsOfMax(vec![0.1, 0.3, 0.5, 0.7, 0.9]),
            rate_model: RateModel::default(),
            horizon_epochs: 1000,
            substeps: 8,
            warmup_fraction: DEFAULT_WARMUP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayRow {
    pub d: f64,
    pub v: f64,
    #[serde(rename = "T")]
    pub epoch_len: usize,
    pub lambda: Option<f64>,
    pub lambda_hat_max: Option<f64>,
    pub lambda_max: Option<f64>,
    pub case: Option<DelayCase>,
    pub closed_form_delay: Option<f64>,
    pub simulated_delay: Option<f64>,
    pub rel_error: Option<f64>,
    pub status: String,
}

pub const DELAY_HEADER: &str =
    "d,v,T,lambda,lambda_hat_max,lambda_max,case,closed_form_delay,simulated_delay,rel_error,status";

/// Closed-form and simulated delay side by side for every grid point.
/// Points outside the stable range are marked `infeasible`.
pub fn delay_table(p: &DelayTableParams) -> Result<Vec<DelayRow>> {
    p.rate_model.validate()?;
    let mut points = Vec::new();
    for &v in &p.velocities {
        for &t in &p.epoch_lens {
            let lams = match &p.lambdas {
                LambdaGrid::FractionsOfMax(f) => {
                    f.iter().map(|&x| (Some(x), None)).collect::<Vec<_>>()
                }
                LambdaGrid::Absolute(l) => l.iter().map(|&x| (None, Some(x))).collect(),
            };
            for l in lams {
                points.push((v, t, l));
            }
        }
    }
    let opts = RunOptions::new(p.horizon_epochs)
        .substeps(p.substeps)
        .warmup(p.warmup_fraction);
    let rows = points
        .par_iter()
        .map(|&(v, t, (frac, abs))| delay_point(p, v, t, frac, abs, &opts))
        .collect();
    Ok(rows)
}

fn delay_point(
    p: &DelayTableParams,
    v: f64,
    t: usize,
    frac: Option<f64>,
    abs: Option<f64>,
    opts: &RunOptions,
) -> DelayRow {
    let mut row = DelayRow {
        d: p.d,
        v,
        epoch_len: t,
        lambda: abs,
        lambda_hat_max: None,
        lambda_max: None,
        case: None,
        closed_form_delay: None,
        simulated_delay: None,
        rel_error: None,
        status: String::new(),
    };
    let pair = match FerryPair::new(p.d, v, t as f64, p.rate_model) {
        Ok(pair) => pair,
        Err(_) => {
            row.status = "infeasible: d/(vT) >= 1".into();
            return row;
        }
    };
    let lmax = pair.lambda_max();
    row.lambda_hat_max = Some(pair.lambda_hat_max());
    row.lambda_max = Some(lmax);
    let lam = abs.unwrap_or_else(|| frac.unwrap_or(0.0) * lmax);
    row.lambda = Some(lam);
    let closed = match pair.closed_form_delay(lam) {
        Ok(c) => c,
        Err(_) => {
            row.status = "infeasible".into();
            return row;
        }
    };
    row.case = Some(closed.case);
    row.closed_form_delay = Some(closed.avg_delay);
    let sim = ferry_pair_spec(p.d, lam, v, t, p.rate_model)
        .and_then(|spec| engine::run_with(&spec, &mut CbmfScheduler, opts));
    match sim {
        Ok(m) => {
            let sd = m.delay[0];
            row.simulated_delay = sd;
            row.rel_error = sd.map(|s| (s - closed.avg_delay).abs() / closed.avg_delay);
            row.status = "ok".into();
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Region membership of a rate vector and, when it lies in the hull, a
/// decomposition into basis allocations.
#[derive(Debug)]
pub struct CapacityReport {
    pub in_capacity_region: bool,
    pub in_hull: bool,
    pub in_inner_bound: Option<Result<bool>>,
    pub decomposition: Option<Decomposition>,
}

pub fn capacity_report(
    lam: &[f64],
    n_robots: usize,
    r_max: f64,
    transit: Option<(f64, f64, f64)>,
) -> CapacityReport {
    CapacityReport {
        in_capacity_region: capacity::in_capacity_region(lam, n_robots, r_max),
        in_hull: capacity::in_hull(lam, n_robots, r_max),
        in_inner_bound: transit
            .map(|(d, v, t)| capacity::in_inner_bound(lam, v, t, d, n_robots, r_max)),
        decomposition: capacity::decompose(lam, n_robots, r_max),
    }
}

impl std::fmt::Display for CapacityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "capacity_region: {}", self.in_capacity_region)?;
        writeln!(f, "hull: {}", self.in_hull)?;
        match &self.in_inner_bound {
            Some(Ok(b)) => writeln!(f, "inner_bound: {b}")?,
            Some(Err(e)) => writeln!(f, "inner_bound: undefined ({e})")?,
            None => {}
        }
        if let Some(d) = &self.decomposition {
            writeln!(f, "decomposition:")?;
            for l in d.support() {
                writeln!(
                    f,
                    "  {:.6} x a={:?} rate={:?}",
                    d.alpha[l], d.basis[l].a, d.basis[l].service_rate
                )?;
            }
        }
        Ok(())
    }
}
