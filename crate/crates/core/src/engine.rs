//! Fluid-queue simulation of robots ferrying data between sources and sinks.
//!
//! Within a time step every robot first moves toward its allocated node, then
//! exchanges data at its new distance, and finally every source receives its
//! arrivals. Allocations only change at epoch boundaries.

use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::model::{distance, NetworkSpec, Point};
use crate::scheduler::Scheduler;
use crate::{Error, Result};

/// The node a robot is matched to for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    Source(usize),
    Sink(usize),
}

impl Slot {
    /// Position in the canonical order `[src(0..K), sink(0..K)]`.
    pub fn index(self, k: usize) -> usize {
        match self {
            Slot::Source(i) => i,
            Slot::Sink(i) => k + i,
        }
    }

    pub fn from_index(s: usize, k: usize) -> Slot {
        if s < k {
            Slot::Source(s)
        } else {
            Slot::Sink(s - k)
        }
    }

    pub fn flow(self) -> usize {
        match self {
            Slot::Source(i) | Slot::Sink(i) => i,
        }
    }

    pub fn position(self, spec: &NetworkSpec) -> Point {
        match self {
            Slot::Source(i) => spec.flows[i].src,
            Slot::Sink(i) => spec.flows[i].sink,
        }
    }
}

/// K x N matrix with `+1` for "robot j serves src(i)", `-1` for sink(i) and
/// `0` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i8>>", into = "Vec<Vec<i8>>")]
pub struct Allocation {
    a: Vec<Vec<i8>>,
}

impl Allocation {
    /// Validates and wraps a raw matrix.
    pub fn from_matrix(a: Vec<Vec<i8>>) -> Result<Self> {
        let alloc = Allocation { a };
        alloc.validate()?;
        Ok(alloc)
    }

    /// One slot per robot.
    pub fn from_slots(k: usize, slots: &[Slot]) -> Result<Self> {
        let mut a = vec![vec![0i8; slots.len()]; k];
        for (j, slot) in slots.iter().enumerate() {
            let i = slot.flow();
            if i >= k {
                return Err(Error::InvalidAllocation(format!(
                    "robot {j} assigned to flow {i} of {k}"
                )));
            }
            a[i][j] = match slot {
                Slot::Source(_) => 1,
                Slot::Sink(_) => -1,
            };
        }
        Allocation::from_matrix(a)
    }

    pub fn n_flows(&self) -> usize {
        self.a.len()
    }

    pub fn n_robots(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn entry(&self, flow: usize, robot: usize) -> i8 {
        self.a[flow][robot]
    }

    pub fn matrix(&self) -> &[Vec<i8>] {
        &self.a
    }

    /// Slot of robot `j`. Only meaningful on a validated allocation.
    pub fn slot(&self, j: usize) -> Slot {
        for (i, row) in self.a.iter().enumerate() {
            match row[j] {
                1 => return Slot::Source(i),
                -1 => return Slot::Sink(i),
                _ => {}
            }
        }
        unreachable!("validated allocation has a nonzero in every column")
    }

    pub fn slots(&self) -> Vec<Slot> {
        (0..self.n_robots()).map(|j| self.slot(j)).collect()
    }

    /// Checks that every robot serves exactly one node and that no source or
    /// sink has more than one robot.
    pub fn validate(&self) -> Result<()> {
        let k = self.a.len();
        if k == 0 {
            return Err(Error::InvalidAllocation("no flows".into()));
        }
        let n = self.a[0].len();
        if n == 0 {
            return Err(Error::InvalidAllocation("no robots".into()));
        }
        if self.a.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidAllocation("ragged matrix".into()));
        }
        for (i, row) in self.a.iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !matches!(v, -1..=1)) {
                return Err(Error::InvalidAllocation(format!("entry {v} in row {i}")));
            }
            if row.iter().filter(|&&v| v == 1).count() > 1 {
                return Err(Error::InvalidAllocation(format!(
                    "src({i}) has more than one robot"
                )));
            }
            if row.iter().filter(|&&v| v == -1).count() > 1 {
                return Err(Error::InvalidAllocation(format!(
                    "sink({i}) has more than one robot"
                )));
            }
        }
        for j in 0..n {
            let nz = self.a.iter().filter(|row| row[j] != 0).count();
            if nz != 1 {
                return Err(Error::InvalidAllocation(format!(
                    "robot {j} has {nz} assignments"
                )));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<i8>>> for Allocation {
    type Error = Error;
    fn try_from(a: Vec<Vec<i8>>) -> Result<Self> {
        Allocation::from_matrix(a)
    }
}

impl From<Allocation> for Vec<Vec<i8>> {
    fn from(a: Allocation) -> Self {
        a.a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: u64,
    pub robot_pos: Vec<Point>,
    pub src_q: Vec<f64>,
    /// `robot_q[j][i]`: data for flow `i` carried by robot `j`.
    pub robot_q: Vec<Vec<f64>>,
    pub delivered: Vec<f64>,
    pub arrived: Vec<f64>,
}

impl SimState {
    /// Empty queues, robots at their initial positions.
    pub fn initial(spec: &NetworkSpec) -> Self {
        let k = spec.n_flows();
        let n = spec.n_robots;
        SimState {
            t: 0,
            robot_pos: spec.initial_robot_positions.clone(),
            src_q: vec![0.0; k],
            robot_q: vec![vec![0.0; k]; n],
            delivered: vec![0.0; k],
            arrived: vec![0.0; k],
        }
    }

    pub fn n_flows(&self) -> usize {
        self.src_q.len()
    }

    pub fn n_robots(&self) -> usize {
        self.robot_pos.len()
    }

    /// Data of flow `i` held anywhere in the network.
    pub fn flow_backlog(&self, i: usize) -> f64 {
        self.src_q[i] + self.robot_q.iter().map(|q| q[i]).sum::<f64>()
    }

    /// Largest relative violation of `arrived = queued + delivered` over flows.
    pub fn conservation_error(&self) -> f64 {
        (0..self.n_flows())
            .map(|i| {
                let lhs = self.arrived[i];
                let rhs = self.flow_backlog(i) + self.delivered[i];
                (lhs - rhs).abs() / lhs.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    fn check_dims(&self, alloc: &Allocation, spec: &NetworkSpec) -> Result<()> {
        let (k, n) = (spec.n_flows(), spec.n_robots);
        if self.n_flows() != k || self.n_robots() != n || self.robot_q.iter().any(|q| q.len() != k)
        {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, spec is {k}x{n}",
                self.n_flows(),
                self.n_robots()
            )));
        }
        if alloc.n_flows() != k || alloc.n_robots() != n {
            return Err(Error::DimensionMismatch(format!(
                "allocation is {}x{}, spec is {k}x{n}",
                alloc.n_flows(),
                alloc.n_robots()
            )));
        }
        Ok(())
    }

    /// One fractional step of length `dt`; `dt = 1` is the unit step. Does not
    /// touch the clock.
    fn advance(&mut self, slots: &[Slot], spec: &NetworkSpec, dt: f64) {
        let step = spec.velocity * dt;
        for (j, &slot) in slots.iter().enumerate() {
            let target = slot.position(spec);
            let pos = self.robot_pos[j].toward(target, step);
            self.robot_pos[j] = pos;
            let rate = spec.rate_model.rate(distance(pos, target)) * dt;
            match slot {
                Slot::Source(i) => {
                    let n_p = rate.min(self.src_q[i]);
                    self.src_q[i] -= n_p;
                    self.robot_q[j][i] += n_p;
                }
                Slot::Sink(i) => {
                    let n_p = rate.min(self.robot_q[j][i]);
                    self.robot_q[j][i] -= n_p;
                    self.delivered[i] += n_p;
                }
            }
        }
        for (i, f) in spec.flows.iter().enumerate() {
            let a = f.lambda * dt;
            self.src_q[i] += a;
            self.arrived[i] += a;
        }
    }
}

/// Applies one unit time step under `alloc` and returns the new state.
pub fn step(state: &SimState, alloc: &Allocation, spec: &NetworkSpec) -> Result<SimState> {
    alloc.validate()?;
    state.check_dims(alloc, spec)?;
    let mut next = state.clone();
    next.advance(&alloc.slots(), spec, 1.0);
    next.t += 1;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
}

/// Empirical stability test on a queue trajectory: least-squares trend over
/// the second half plus an absolute cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCriterion {
    pub max_slope: f64,
    pub queue_cap: f64,
}

impl Default for StabilityCriterion {
    fn default() -> Self {
        StabilityCriterion {
            max_slope: 1e-3,
            queue_cap: 1e6,
        }
    }
}

impl StabilityCriterion {
    /// Averages the series over whole epochs and fits a least-squares line
    /// to the epoch means of the second half; the slope is reported per
    /// time step. Needs at least four epochs.
    pub fn verdict(&self, series: &[f64], epoch_len: usize) -> Result<Verdict> {
        let epoch_len = epoch_len.max(1);
        let epochs = series.len() / epoch_len;
        if epochs < 4 {
            return Err(Error::Precondition(format!(
                "series of {} steps is shorter than 4 epochs of {epoch_len}",
                series.len()
            )));
        }
        let means: Vec<f64> = series
            .chunks_exact(epoch_len)
            .map(|c| c.iter().sum::<f64>() / epoch_len as f64)
            .collect();
        let slope = ls_slope(&means[epochs / 2..]) / epoch_len as f64;
        let peak = series.iter().copied().fold(0.0, f64::max);
        if slope < self.max_slope && peak < self.queue_cap && series.iter().all(|q| q.is_finite()) {
            Ok(Verdict::Stable)
        } else {
            Ok(Verdict::Unstable)
        }
    }
}

/// Verdict with the default criterion.
pub fn stability_verdict(series: &[f64], epoch_len: usize) -> Result<Verdict> {
    StabilityCriterion::default().verdict(series, epoch_len)
}

fn ls_slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, &v) in y.iter().enumerate() {
        let dx = x as f64 - x_mean;
        sxy += dx * (v - y_mean);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon_epochs: usize,
    /// Sub-steps per unit time step. `1` applies the step equations as
    /// written; larger values integrate the same dynamics on a finer grid.
    pub substeps: usize,
    /// Leading fraction of the horizon excluded from time averages.
    pub warmup_fraction: f64,
    pub stability: StabilityCriterion,
}

impl RunOptions {
    pub fn new(horizon_epochs: usize) -> Self {
        RunOptions {
            horizon_epochs,
            ..Default::default()
        }
    }

    pub fn substeps(mut self, m: usize) -> Self {
        self.substeps = m;
        self
    }

    pub fn warmup(mut self, fraction: f64) -> Self {
        self.warmup_fraction = fraction;
        self
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            horizon_epochs: 1000,
            substeps: 1,
            warmup_fraction: 0.1,
            stability: StabilityCriterion::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub lambdas: Vec<f64>,
    /// `queue_series[i][t]`: total data of flow `i` in the network during
    /// unit step `t` (mean over its sub-steps).
    pub queue_series: Vec<Vec<f64>>,
    pub warmup_steps: usize,
    pub time_avg_queue: Vec<f64>,
    /// Little's-law delay; `None` for flows without arrivals.
    pub delay: Vec<Option<f64>>,
    pub throughput: Vec<f64>,
    pub verdict: Vec<Verdict>,
    /// Largest conservation error seen after any step.
    pub max_conservation_error: f64,
    pub final_state: SimState,
    pub allocations: Vec<Allocation>,
}

impl Metrics {
    pub fn all_stable(&self) -> bool {
        self.verdict.iter().all(|v| *v == Verdict::Stable)
    }
}

/// Runs `spec` under `scheduler` for `horizon_epochs` epochs with default
/// options.
pub fn run(
    spec: &NetworkSpec,
    scheduler: &mut dyn Scheduler,
    horizon_epochs: usize,
) -> Result<Metrics> {
    run_with(spec, scheduler, &RunOptions::new(horizon_epochs))
}

pub fn run_with(
    spec: &NetworkSpec,
    scheduler: &mut dyn Scheduler,
    opts: &RunOptions,
) -> Result<Metrics> {
    spec.validate()?;
    if opts.horizon_epochs == 0 {
        return Err(Error::Precondition(
            "horizon must be at least one epoch".into(),
        ));
    }
    if opts.substeps == 0 {
        return Err(Error::Precondition("substeps must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&opts.warmup_fraction) {
        return Err(Error::Precondition(format!(
            "warmup fraction must be in [0, 1), got {}",
            opts.warmup_fraction
        )));
    }
    let k = spec.n_flows();
    let t_len = spec.epoch_len;
    let steps = opts.horizon_epochs * t_len;
    let m = opts.substeps;
    let dt = 1.0 / m as f64;

    let mut state = SimState::initial(spec);
    let mut series = vec![Vec::with_capacity(steps); k];
    let mut allocations = Vec::with_capacity(opts.horizon_epochs);
    let mut max_err = 0.0f64;
    let mut acc = vec![0.0; k];

    for _ in 0..opts.horizon_epochs {
        let alloc = scheduler.allocate(&state, spec)?;
        alloc.validate()?;
        state.check_dims(&alloc, spec)?;
        let slots = alloc.slots();
        for _ in 0..t_len {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for _ in 0..m {
                state.advance(&slots, spec, dt);
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += state.flow_backlog(i);
                }
            }
            state.t += 1;
            for (s, a) in series.iter_mut().zip(&acc) {
                s.push(a / m as f64);
            }
            max_err = max_err.max(state.conservation_error());
        }
        allocations.push(alloc);
    }

    let warmup_steps = ((steps as f64) * opts.warmup_fraction).floor() as usize;
    let time_avg_queue: Vec<f64> = series
        .iter()
        .map(|s| {
            let tail = &s[warmup_steps..];
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect();
    let verdict = series
        .iter()
        .map(|s| opts.stability.verdict(s, t_len))
        .collect::<Result<Vec<_>>>()?;
    let throughput = state.delivered.iter().map(|d| d / steps as f64).collect();
    let lambdas = spec.lambdas();

    let mut metrics = Metrics {
        lambdas,
        queue_series: series,
        warmup_steps,
        time_avg_queue,
        delay: vec![None; k],
        throughput,
        verdict,
        max_conservation_error: max_err,
        final_state: state,
        allocations,
    };
    metrics.delay = analytics::little_delay(&metrics, &metrics.lambdas);
    Ok(metrics)
}
