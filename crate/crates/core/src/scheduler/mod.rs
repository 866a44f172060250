//! Epoch-boundary allocation policies.
//!
//! [`cbmf_allocate`] is the coarse-grained backpressure policy: at each epoch
//! boundary it matches every robot to one source or sink so that the sum of
//! queue-differential weights is maximal. It is solved exactly as a
//! rectangular assignment of the N robots to the 2K slots
//! `[src(0..K), sink(0..K)]`; N <= 2K guarantees every robot gets a slot.
//! Among optimal matchings the lexicographically smallest slot vector wins.

pub mod matching;

use crate::capacity::ScheduleProgram;
use crate::engine::{Allocation, SimState, Slot};
use crate::model::NetworkSpec;
use crate::{Error, Result};

pub trait Scheduler {
    fn allocate(&mut self, state: &SimState, spec: &NetworkSpec) -> Result<Allocation>;
}

impl<S: Scheduler + ?Sized> Scheduler for Box<S> {
    fn allocate(&mut self, state: &SimState, spec: &NetworkSpec) -> Result<Allocation> {
        (**self).allocate(state, spec)
    }
}

/// `w_src[i][j] = Q_src(i) - Q_j^i`, `w_sink[i][j] = Q_j^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub w_src: Vec<Vec<f64>>,
    pub w_sink: Vec<Vec<f64>>,
}

impl WeightTable {
    pub fn n_flows(&self) -> usize {
        self.w_src.len()
    }

    pub fn n_robots(&self) -> usize {
        self.w_src.first().map_or(0, Vec::len)
    }

    pub fn weight(&self, robot: usize, slot: Slot) -> f64 {
        match slot {
            Slot::Source(i) => self.w_src[i][robot],
            Slot::Sink(i) => self.w_sink[i][robot],
        }
    }

    /// Robot-by-slot matrix in canonical slot order.
    fn robot_slot_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.n_flows();
        (0..self.n_robots())
            .map(|j| {
                (0..2 * k)
                    .map(|s| self.weight(j, Slot::from_index(s, k)))
                    .collect()
            })
            .collect()
    }

    /// `sum_j w(j, slot_j)`, accumulated in robot order.
    pub fn objective(&self, alloc: &Allocation) -> f64 {
        alloc
            .slots()
            .into_iter()
            .enumerate()
            .map(|(j, s)| self.weight(j, s))
            .sum()
    }

    /// Slack below the optimum still treated as optimal when breaking ties.
    fn tie_tolerance(&self) -> f64 {
        let scale = self
            .w_src
            .iter()
            .chain(&self.w_sink)
            .flatten()
            .fold(1.0f64, |m, w| m.max(w.abs()));
        1e-9 * scale
    }
}

pub fn cbmf_weights(state: &SimState) -> WeightTable {
    let k = state.n_flows();
    let n = state.n_robots();
    let w_src = (0..k)
        .map(|i| {
            (0..n)
                .map(|j| state.src_q[i] - state.robot_q[j][i])
                .collect()
        })
        .collect();
    let w_sink = (0..k)
        .map(|i| (0..n).map(|j| state.robot_q[j][i]).collect())
        .collect();
    WeightTable { w_src, w_sink }
}

fn check_robot_count(k: usize, n: usize) -> Result<()> {
    if n > 2 * k {
        return Err(Error::Precondition(format!(
            "N <= 2K violated: {n} robots, {k} flows"
        )));
    }
    if n == 0 || k == 0 {
        return Err(Error::Precondition(
            "need at least one robot and one flow".into(),
        ));
    }
    Ok(())
}

/// Max-weight allocation with lexicographic tie-breaking.
pub fn cbmf_allocate(state: &SimState, spec: &NetworkSpec) -> Result<Allocation> {
    let k = spec.n_flows();
    let n = spec.n_robots;
    check_robot_count(k, n)?;
    if state.n_flows() != k || state.n_robots() != n {
        return Err(Error::DimensionMismatch("state does not match spec".into()));
    }
    let table = cbmf_weights(state);
    let slots = lexmax_assignment(&table.robot_slot_matrix(), table.tie_tolerance());
    let slots: Vec<Slot> = slots.into_iter().map(|s| Slot::from_index(s, k)).collect();
    Allocation::from_slots(k, &slots)
}

/// Optimal assignment of rows to distinct columns; among assignments within
/// `tol` of the optimum, the lexicographically smallest column vector.
fn lexmax_assignment(w: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let n = w.len();
    let m = w[0].len();
    let opt = matching::assignment_weight(w, &matching::max_weight_assignment(w));

    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; m];
    let mut fixed_sum = 0.0;
    for r in 0..n {
        let free_cols: Vec<usize> = (0..m).filter(|&c| !used[c]).collect();
        let mut chosen = None;
        for &c in &free_cols {
            let cols: Vec<usize> = free_cols.iter().copied().filter(|&x| x != c).collect();
            let rest: Vec<Vec<f64>> = w[r + 1..]
                .iter()
                .map(|row| cols.iter().map(|&x| row[x]).collect())
                .collect();
            let rest_opt = if rest.is_empty() {
                0.0
            } else {
                matching::assignment_weight(&rest, &matching::max_weight_assignment(&rest))
            };
            if fixed_sum + w[r][c] + rest_opt >= opt - tol {
                chosen = Some(c);
                break;
            }
        }
        // the optimum is always reachable from the current prefix
        let c = chosen.expect("optimal completion exists");
        fixed.push(c);
        used[c] = true;
        fixed_sum += w[r][c];
    }
    fixed
}

/// Enumeration bound for [`brute_force_allocate`].
pub const BRUTE_FORCE_MAX_ROBOTS: usize = 6;
pub const BRUTE_FORCE_MAX_FLOWS: usize = 4;

/// Exhaustive reference for [`cbmf_allocate`]: enumerates every feasible
/// allocation and applies the same tie rule.
pub fn brute_force_allocate(state: &SimState, spec: &NetworkSpec) -> Result<Allocation> {
    let k = spec.n_flows();
    let n = spec.n_robots;
    check_robot_count(k, n)?;
    if n > BRUTE_FORCE_MAX_ROBOTS || k > BRUTE_FORCE_MAX_FLOWS {
        return Err(Error::Precondition(format!(
            "brute force limited to N <= {BRUTE_FORCE_MAX_ROBOTS}, K <= {BRUTE_FORCE_MAX_FLOWS}"
        )));
    }
    let table = cbmf_weights(state);

    // enumerate in lexicographic order of the slot vector
    let mut all: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; 2 * k];
    fn go(
        table: &WeightTable,
        k: usize,
        n: usize,
        current: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if current.len() == n {
            let obj = current
                .iter()
                .enumerate()
                .map(|(j, &s)| table.weight(j, Slot::from_index(s, k)))
                .sum();
            out.push((current.clone(), obj));
            return;
        }
        for s in 0..2 * k {
            if !used[s] {
                used[s] = true;
                current.push(s);
                go(table, k, n, current, used, out);
                current.pop();
                used[s] = false;
            }
        }
    }
    go(&table, k, n, &mut current, &mut used, &mut all);

    let best = all
        .iter()
        .map(|(_, o)| *o)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = table.tie_tolerance();
    let (slots, _) = all
        .into_iter()
        .find(|(_, o)| *o >= best - tol)
        .expect("at least one allocation");
    let slots: Vec<Slot> = slots.into_iter().map(|s| Slot::from_index(s, k)).collect();
    Allocation::from_slots(k, &slots)
}

/// Coarse-grained backpressure: [`cbmf_allocate`] at every epoch.
#[derive(Debug, Clone, Copy, Default)]
pub struct CbmfScheduler;

impl Scheduler for CbmfScheduler {
    fn allocate(&mut self, state: &SimState, spec: &NetworkSpec) -> Result<Allocation> {
        cbmf_allocate(state, spec)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BruteForceScheduler;

impl Scheduler for BruteForceScheduler {
    fn allocate(&mut self, state: &SimState, spec: &NetworkSpec) -> Result<Allocation> {
        brute_force_allocate(state, spec)
    }
}

/// Plays a [`ScheduleProgram`] cyclically, ignoring queue state.
#[derive(Debug, Clone)]
pub struct StaticScheduler {
    program: ScheduleProgram,
    entry: usize,
    used: usize,
}

impl StaticScheduler {
    pub fn new(program: ScheduleProgram) -> Result<Self> {
        if program.entries().is_empty() {
            return Err(Error::InvalidSchedule("empty program".into()));
        }
        Ok(StaticScheduler {
            program,
            entry: 0,
            used: 0,
        })
    }

    pub fn program(&self) -> &ScheduleProgram {
        &self.program
    }
}

pub fn static_scheduler(program: ScheduleProgram) -> Result<StaticScheduler> {
    StaticScheduler::new(program)
}

impl Scheduler for StaticScheduler {
    fn allocate(&mut self, _state: &SimState, spec: &NetworkSpec) -> Result<Allocation> {
        let (alloc, count) = &self.program.entries()[self.entry];
        if alloc.n_flows() != spec.n_flows() || alloc.n_robots() != spec.n_robots {
            return Err(Error::DimensionMismatch(format!(
                "program allocation is {}x{}, network is {}x{}",
                alloc.n_flows(),
                alloc.n_robots(),
                spec.n_flows(),
                spec.n_robots
            )));
        }
        let out = alloc.clone();
        self.used += 1;
        if self.used == *count {
            self.used = 0;
            self.entry = (self.entry + 1) % self.program.entries().len();
        }
        Ok(out)
    }
}
