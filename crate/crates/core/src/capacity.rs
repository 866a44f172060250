//! Capacity regions and time-sharing schedules.
//!
//! With `N` robots and `K` flows, every integer vector `a` in `{0,1,2}^K`
//! with `sum(a) <= N` is a basis allocation that serves flow `i` at
//! `a_i * r_max / 2`. Their convex hull is the closed region
//! `{0 <= lambda_i <= r_max, sum(lambda) <= r_max * N / 2}`; its interior is
//! the capacity region. A rate vector in the hull is decomposed into convex
//! coefficients over basis allocations, and the coefficients are turned into
//! a cyclic program where each basis allocation is played as two mirrored
//! halves (collect, then deliver).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::{Allocation, Slot};
use crate::model::NetworkSpec;
use crate::{Error, Result};

/// Relative slack for floating-point comparisons against the hull boundary.
const HULL_EPS: f64 = 1e-12;

fn check_rates(lam: &[f64]) -> bool {
    lam.iter().all(|l| l.is_finite() && *l >= 0.0)
}

/// Open region: `0 <= lambda_i < r_max` and `sum < r_max * N / 2`.
pub fn in_capacity_region(lam: &[f64], n_robots: usize, r_max: f64) -> bool {
    check_rates(lam)
        && lam.iter().all(|&l| l < r_max)
        && lam.iter().sum::<f64>() < r_max * n_robots as f64 / 2.0
}

/// Closure of the capacity region (the convex hull of the basis rates).
pub fn in_hull(lam: &[f64], n_robots: usize, r_max: f64) -> bool {
    check_rates(lam)
        && lam.iter().all(|&l| l <= r_max)
        && lam.iter().sum::<f64>() <= r_max * n_robots as f64 / 2.0
}

/// Inner bound for finite velocity and epoch length: the capacity region
/// with `r_max` discounted by the transit fraction `d_max / (v T)`. Errors if
/// the transit fraction is not below one.
pub fn in_inner_bound(
    lam: &[f64],
    velocity: f64,
    epoch_len: f64,
    d_max: f64,
    n_robots: usize,
    r_max: f64,
) -> Result<bool> {
    let frac = d_max / (velocity * epoch_len);
    if !(frac.is_finite() && (0.0..1.0).contains(&frac)) {
        return Err(Error::Precondition(format!(
            "transit fraction d/(vT) = {frac} must be in [0, 1)"
        )));
    }
    Ok(in_capacity_region(lam, n_robots, r_max * (1.0 - frac)))
}

/// [`in_inner_bound`] with the geometry taken from `spec`.
pub fn spec_in_inner_bound(lam: &[f64], spec: &NetworkSpec) -> Result<bool> {
    in_inner_bound(
        lam,
        spec.velocity,
        spec.epoch_len as f64,
        spec.max_static_distance(),
        spec.n_robots,
        spec.rate_model.r_max,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisAllocation {
    /// Robots dedicated to each flow.
    pub a: Vec<u8>,
    pub service_rate: Vec<f64>,
}

impl BasisAllocation {
    pub fn new(a: Vec<u8>, r_max: f64) -> Self {
        let service_rate = a.iter().map(|&ai| f64::from(ai) * r_max / 2.0).collect();
        BasisAllocation { a, service_rate }
    }

    pub fn robots_used(&self) -> usize {
        self.a.iter().map(|&x| usize::from(x)).sum()
    }
}

/// All `a` in `{0,1,2}^K` with `sum(a) <= N`, in lexicographic order.
pub fn enumerate_basis(k: usize, n_robots: usize, r_max: f64) -> Vec<BasisAllocation> {
    let mut out = Vec::new();
    let mut a = vec![0u8; k];
    fn go(i: usize, left: usize, a: &mut Vec<u8>, r_max: f64, out: &mut Vec<BasisAllocation>) {
        if i == a.len() {
            out.push(BasisAllocation::new(a.clone(), r_max));
            return;
        }
        for v in 0..=2u8.min(left as u8) {
            a[i] = v;
            go(i + 1, left - usize::from(v), a, r_max, out);
        }
        a[i] = 0;
    }
    go(0, n_robots, &mut a, r_max, &mut out);
    out
}

/// Convex coefficients over [`enumerate_basis`] whose combined service rate
/// dominates a target rate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub basis: Vec<BasisAllocation>,
    pub alpha: Vec<f64>,
}

impl Decomposition {
    pub fn service_rate(&self) -> Vec<f64> {
        let k = self.basis.first().map_or(0, |b| b.a.len());
        let mut s = vec![0.0; k];
        for (b, &al) in self.basis.iter().zip(&self.alpha) {
            for (si, g) in s.iter_mut().zip(&b.service_rate) {
                *si += al * g;
            }
        }
        s
    }

    /// Indices of basis allocations with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.alpha.len())
            .filter(|&l| self.alpha[l] > 0.0)
            .collect()
    }
}

/// Decomposes `lam` into a convex combination of basis allocations, or
/// returns `None` when `lam` lies outside the hull.
///
/// Uses systematic rounding of the fractional robot counts
/// `a_i = 2 lambda_i / r_max`: writing `a = floor(a) + f`, a common offset
/// `u` in `[0, 1)` rounds flow `i` up exactly when an integer falls in
/// `(S_{i-1} + u, S_i + u]` with `S` the prefix sums of `f`. Each flow is
/// rounded up on a set of offsets of measure `f_i` and the total number of
/// round-ups never exceeds `ceil(sum f)`, so every pattern is a basis
/// allocation and the mixture reproduces `a` exactly. At most `K + 1`
/// coefficients are nonzero.
pub fn decompose(lam: &[f64], n_robots: usize, r_max: f64) -> Option<Decomposition> {
    let k = lam.len();
    if k == 0 || !check_rates(lam) {
        return None;
    }
    let cap = r_max * n_robots as f64 / 2.0;
    if lam.iter().any(|&l| l > r_max * (1.0 + HULL_EPS))
        || lam.iter().sum::<f64>() > cap * (1.0 + HULL_EPS)
    {
        return None;
    }

    let mut a: Vec<f64> = lam
        .iter()
        .map(|&l| (2.0 * l / r_max).clamp(0.0, 2.0))
        .collect();
    let total: f64 = a.iter().sum();
    if total > n_robots as f64 {
        let s = n_robots as f64 / total;
        a.iter_mut().for_each(|x| *x *= s);
    }
    let floor: Vec<u8> = a.iter().map(|&x| x.floor() as u8).collect();
    let frac: Vec<f64> = a
        .iter()
        .zip(&floor)
        .map(|(x, &f)| x - f64::from(f))
        .collect();
    let mut prefix = vec![0.0; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] + frac[i];
    }

    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &s in &prefix[1..] {
        let c = s.ceil() - s;
        if c > 0.0 && c < 1.0 {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let basis = enumerate_basis(k, n_robots, r_max);
    let index: HashMap<&[u8], usize> = basis
        .iter()
        .enumerate()
        .map(|(l, b)| (b.a.as_slice(), l))
        .collect();
    let mut alpha = vec![0.0; basis.len()];
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-15 {
            continue;
        }
        let u = 0.5 * (w[0] + w[1]);
        let pattern: Vec<u8> = (0..k)
            .map(|i| {
                let up = (prefix[i + 1] + u).floor() - (prefix[i] + u).floor() >= 1.0;
                floor[i] + u8::from(up)
            })
            .collect();
        // sliver intervals from rounding noise can produce an oversized pattern
        match index.get(pattern.as_slice()) {
            Some(&l) => alpha[l] += len,
            None => continue,
        }
    }
    let sum: f64 = alpha.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    alpha.iter_mut().for_each(|x| *x /= sum);
    Some(Decomposition { basis, alpha })
}

/// Target rate for a time-sharing program that must serve `lam` despite
/// transit: `lam * (1 + slack) / (1 - transit_fraction)`, rounded up to a
/// multiple of `grid`. Rounding to a coarse grid keeps the convex
/// coefficients, and hence the program period, small.
pub fn provisioned_rate(
    lam: &[f64],
    transit_fraction: f64,
    slack: f64,
    grid: f64,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&transit_fraction) {
        return Err(Error::Precondition(format!(
            "transit fraction {transit_fraction} must be in [0, 1)"
        )));
    }
    if !check_rates(lam) {
        return Err(Error::Precondition("rates must be finite and >= 0".into()));
    }
    let scale = (1.0 + slack) / (1.0 - transit_fraction);
    Ok(lam
        .iter()
        .map(|&l| {
            let x = l * scale;
            if grid > 0.0 {
                // tolerate representation error on values already on the grid
                (x / grid - 1e-9).ceil().max(0.0) * grid
            } else {
                x
            }
        })
        .collect())
}

/// A cyclic sequence of allocations with run lengths in epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleProgram {
    entries: Vec<(Allocation, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramEntry {
    allocation: Allocation,
    epochs: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramFile {
    entries: Vec<ProgramEntry>,
}

impl ScheduleProgram {
    pub fn new(entries: Vec<(Allocation, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSchedule("empty program".into()));
        }
        let (k, n) = (entries[0].0.n_flows(), entries[0].0.n_robots());
        for (i, (a, c)) in entries.iter().enumerate() {
            if *c == 0 {
                return Err(Error::InvalidSchedule(format!("entry {i} has zero epochs")));
            }
            a.validate()?;
            if a.n_flows() != k || a.n_robots() != n {
                return Err(Error::InvalidSchedule(format!(
                    "entry {i} has different dimensions"
                )));
            }
        }
        Ok(ScheduleProgram { entries })
    }

    pub fn entries(&self) -> &[(Allocation, usize)] {
        &self.entries
    }

    pub fn period(&self) -> usize {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// Per-flow service rate if robots moved instantly: the fraction of
    /// epochs with some robot at `src(i)`, times `r_max`.
    pub fn ideal_service_rate(&self, r_max: f64) -> Vec<f64> {
        let k = self.entries[0].0.n_flows();
        let mut epochs = vec![0usize; k];
        for (a, c) in &self.entries {
            for (i, e) in epochs.iter_mut().enumerate() {
                if a.matrix()[i].contains(&1) {
                    *e += c;
                }
            }
        }
        let p = self.period() as f64;
        epochs.into_iter().map(|e| e as f64 * r_max / p).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProgramFile {
            entries: self
                .entries
                .iter()
                .map(|(a, c)| ProgramEntry {
                    allocation: a.clone(),
                    epochs: *c,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ProgramFile = serde_json::from_str(s)?;
        ScheduleProgram::new(
            file.entries
                .into_iter()
                .map(|e| (e.allocation, e.epochs))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Largest common denominator for the epoch counts; each coefficient
    /// is approximated within `1 / denom_cap`.
    pub denom_cap: usize,
    /// Epochs appended per period with one robot at each sink (zero
    /// disables).
    pub sink_slack_epochs: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            denom_cap: 1000,
            sink_slack_epochs: 0,
        }
    }
}

/// Integer counts `n` with `sum(n) = D` for the smallest `D <= cap` such
/// that `|n_l / D - alpha_l| <= 1 / cap` for every `l`.
pub fn rational_counts(alpha: &[f64], cap: usize) -> Vec<usize> {
    let tol = 1.0 / cap as f64;
    for d in 1..=cap {
        let counts = apportion(alpha, d);
        let df = d as f64;
        if counts
            .iter()
            .zip(alpha)
            .all(|(&c, &a)| (c as f64 / df - a).abs() <= tol + 1e-12)
        {
            return counts;
        }
    }
    apportion(alpha, cap)
}

/// Largest-remainder apportionment of `d` units.
fn apportion(alpha: &[f64], d: usize) -> Vec<usize> {
    let df = d as f64;
    let mut counts: Vec<usize> = alpha.iter().map(|&a| (a * df).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by(|&x, &y| {
        let rx = alpha[x] * df - counts[x] as f64;
        let ry = alpha[y] * df - counts[y] as f64;
        ry.total_cmp(&rx).then(x.cmp(&y))
    });
    for &l in order.iter().take(d.saturating_sub(assigned)) {
        counts[l] += 1;
    }
    counts
}

fn mirror(slot: Slot) -> Slot {
    match slot {
        Slot::Source(i) => Slot::Sink(i),
        Slot::Sink(i) => Slot::Source(i),
    }
}

/// The two mirrored halves of a basis allocation. Robots are handed out in
/// flow order; idle robots take the first free sinks (then sources) in the
/// first half and the mirrored slot in the second, so that whatever a robot
/// collects in one half it can deliver in the other.
pub fn expand_basis(basis: &BasisAllocation, n_robots: usize) -> Result<(Allocation, Allocation)> {
    let k = basis.a.len();
    if basis.robots_used() > n_robots || n_robots > 2 * k {
        return Err(Error::InvalidSchedule(format!(
            "basis {:?} does not fit {n_robots} robots",
            basis.a
        )));
    }
    let mut first = Vec::with_capacity(n_robots);
    let mut second = Vec::with_capacity(n_robots);
    for (i, &ai) in basis.a.iter().enumerate() {
        if ai >= 1 {
            first.push(Slot::Source(i));
            second.push(Slot::Sink(i));
        }
        if ai == 2 {
            first.push(Slot::Sink(i));
            second.push(Slot::Source(i));
        }
    }
    let free: Vec<Slot> = (0..k)
        .map(Slot::Sink)
        .chain((0..k).map(Slot::Source))
        .filter(|s| !first.contains(s))
        .collect();
    for slot in free.into_iter().take(n_robots - first.len()) {
        first.push(slot);
        second.push(mirror(slot));
    }
    Ok((
        Allocation::from_slots(k, &first)?,
        Allocation::from_slots(k, &second)?,
    ))
}

/// Extra epochs with a robot parked at every sink; with more robots than
/// flows the remainder uses the mirrored layout in a second block.
fn sink_slack_entries(
    k: usize,
    n_robots: usize,
    epochs: usize,
) -> Result<Vec<(Allocation, usize)>> {
    let first: Vec<Slot> = (0..n_robots)
        .map(|j| {
            if j < k {
                Slot::Sink(j)
            } else {
                Slot::Source(j - k)
            }
        })
        .collect();
    let mut out = vec![(Allocation::from_slots(k, &first)?, epochs)];
    if n_robots > k {
        let second: Vec<Slot> = first.iter().map(|&s| mirror(s)).collect();
        out.push((Allocation::from_slots(k, &second)?, epochs));
    }
    Ok(out)
}

/// Turns convex coefficients into a cyclic program: basis allocation `l`
/// gets `n_l` epochs for each of its two halves, with `n_l / sum(n)`
/// approximating `alpha_l`.
pub fn synthesize_schedule(
    alpha: &[f64],
    basis: &[BasisAllocation],
    spec: &NetworkSpec,
    opts: &SynthesisOptions,
) -> Result<ScheduleProgram> {
    if alpha.len() != basis.len() {
        return Err(Error::InvalidSchedule(format!(
            "{} coefficients for {} basis allocations",
            alpha.len(),
            basis.len()
        )));
    }
    if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidSchedule(
            "coefficients must be finite and >= 0".into(),
        ));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSchedule(format!(
            "coefficients sum to {total}, not 1"
        )));
    }
    if opts.denom_cap == 0 {
        return Err(Error::InvalidSchedule(
            "denominator cap must be >= 1".into(),
        ));
    }
    let k = spec.n_flows();
    if basis.iter().any(|b| b.a.len() != k) {
        return Err(Error::DimensionMismatch(
            "basis length differs from flow count".into(),
        ));
    }

    let counts = rational_counts(alpha, opts.denom_cap);
    let g = counts.iter().fold(0usize, |g, &c| gcd(g, c)).max(1);
    let mut entries = Vec::new();
    for (b, &c) in basis.iter().zip(&counts) {
        if c == 0 {
            continue;
        }
        let (first, second) = expand_basis(b, spec.n_robots)?;
        entries.push((first, c / g));
        entries.push((second, c / g));
    }
    if opts.sink_slack_epochs > 0 {
        entries.extend(sink_slack_entries(
            k,
            spec.n_robots,
            opts.sink_slack_epochs,
        )?);
    }
    ScheduleProgram::new(entries)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Program that serves `lam` on `spec` without looking at queues:
/// provisions for transit and slack, decomposes, and synthesizes.
pub fn oracle_program(
    lam: &[f64],
    spec: &NetworkSpec,
    slack: f64,
    opts: &SynthesisOptions,
) -> Result<ScheduleProgram> {
    let r_max = spec.rate_model.r_max;
    let target = provisioned_rate(
        lam,
        spec.transit_fraction().min(1.0 - 1e-12),
        slack,
        r_max / 40.0,
    )?;
    let dec = decompose(&target, spec.n_robots, r_max).ok_or_else(|| {
        Error::Precondition(format!(
            "provisioned rate {target:?} lies outside the capacity hull"
        ))
    })?;
    synthesize_schedule(&dec.alpha, &dec.basis, spec, opts)
}
