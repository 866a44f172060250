//! Browser bindings for a handful of `ferrysim` operations. Every export
//! returns a JSON string so the page needs no generated type glue beyond the
//! functions themselves.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ferrysim::analytics::{DelayCase, FerryPair};
use ferrysim::capacity;
use ferrysim::engine::{self, RunOptions, Verdict};
use ferrysim::experiment;
use ferrysim::model::RateModel;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Membership {
    capacity_region: bool,
    hull: bool,
    inner_bound: Option<bool>,
}

#[derive(Serialize)]
struct CapacityView {
    /// Vertices of the two-flow hull, counter-clockwise from the origin.
    hull: Vec<[f64; 2]>,
    /// Factor applied to `r_max` by the inner bound; absent when the transit
    /// fraction is not below one.
    inner_scale: Option<f64>,
    point: Membership,
    /// `(weight, [rate1, rate2])` pairs of a decomposition of the point.
    decomposition: Vec<(f64, [f64; 2])>,
}

/// Two-flow capacity picture for `n_robots` robots and membership of the
/// point `(lam1, lam2)`. `d_max` is the largest distance a robot may have to
/// cover within an epoch.
#[wasm_bindgen]
pub fn capacity_view(
    n_robots: usize,
    r_max: f64,
    d_max: f64,
    velocity: f64,
    epoch_len: f64,
    lam1: f64,
    lam2: f64,
) -> Result<String, String> {
    if !(1..=4).contains(&n_robots) {
        return Err(format!("two flows take 1 to 4 robots, got {n_robots}"));
    }
    if r_max.is_nan() || r_max <= 0.0 {
        return Err("r_max must be > 0".into());
    }
    let lam = [lam1, lam2];
    let frac = d_max / (velocity * epoch_len);
    let inner_scale = (frac.is_finite() && (0.0..1.0).contains(&frac)).then_some(1.0 - frac);
    let decomposition = capacity::decompose(&lam, n_robots, r_max)
        .map(|d| {
            d.support()
                .into_iter()
                .map(|l| {
                    (
                        d.alpha[l],
                        [d.basis[l].service_rate[0], d.basis[l].service_rate[1]],
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    let view = CapacityView {
        hull: hull_polygon(n_robots, r_max),
        inner_scale,
        point: Membership {
            capacity_region: capacity::in_capacity_region(&lam, n_robots, r_max),
            hull: capacity::in_hull(&lam, n_robots, r_max),
            inner_bound: capacity::in_inner_bound(
                &lam, velocity, epoch_len, d_max, n_robots, r_max,
            )
            .ok(),
        },
        decomposition,
    };
    to_json(&view)
}

/// The region is the box `[0, r_max]^2` cut by `x + y <= n r_max / 2`.
fn hull_polygon(n_robots: usize, r_max: f64) -> Vec<[f64; 2]> {
    let s = n_robots as f64 * r_max / 2.0;
    let m = s.min(r_max);
    if s >= 2.0 * r_max {
        vec![[0.0, 0.0], [r_max, 0.0], [r_max, r_max], [0.0, r_max]]
    } else if s > r_max {
        vec![
            [0.0, 0.0],
            [r_max, 0.0],
            [r_max, s - r_max],
            [s - r_max, r_max],
            [0.0, r_max],
        ]
    } else {
        vec![[0.0, 0.0], [m, 0.0], [0.0, m]]
    }
}

#[derive(Serialize)]
struct DelayPoint {
    lambda: f64,
    delay: f64,
    case: DelayCase,
}

#[derive(Serialize)]
struct DelayCurve {
    lambda_hat_max: f64,
    lambda_max: f64,
    points: Vec<DelayPoint>,
}

/// Steady-state delay of the single ferried flow at `points` evenly spaced
/// rates in `(0, lambda_max)`.
#[wasm_bindgen]
pub fn delay_curve(
    d: f64,
    velocity: f64,
    epoch_len: f64,
    r_max: f64,
    c: f64,
    eta: f64,
    points: usize,
) -> Result<String, String> {
    let model = RateModel::new(r_max, c, eta).map_err(|e| e.to_string())?;
    let pair = FerryPair::new(d, velocity, epoch_len, model).map_err(|e| e.to_string())?;
    let lmax = pair.lambda_max();
    let n = points.clamp(2, 500);
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let lam = lmax * i as f64 / (n + 1) as f64;
        let r = pair.closed_form_delay(lam).map_err(|e| e.to_string())?;
        out.push(DelayPoint {
            lambda: lam,
            delay: r.avg_delay,
            case: r.case,
        });
    }
    to_json(&DelayCurve {
        lambda_hat_max: pair.lambda_hat_max(),
        lambda_max: lmax,
        points: out,
    })
}

#[derive(Serialize)]
struct SimulationView {
    /// Start time of each plotted sample; samples are epoch means.
    time: Vec<f64>,
    /// `queues[i][s]`: mean data of flow `i` in the network over sample `s`.
    queues: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    throughput: Vec<f64>,
    delay: Vec<Option<f64>>,
    stable: Vec<bool>,
    in_capacity_region: bool,
    in_inner_bound: Option<bool>,
}

/// Runs a configuration document (the CLI's JSON format; `sweep` and
/// `output` are ignored) for `horizon_epochs` epochs and returns queue
/// traces averaged per epoch.
#[wasm_bindgen]
pub fn simulate(config_json: &str, horizon_epochs: usize) -> Result<String, String> {
    let cfg = experiment::parse_config(config_json, None).map_err(|e| e.to_string())?;
    if !(4..=20_000).contains(&horizon_epochs) {
        return Err(format!(
            "horizon must be between 4 and 20000 epochs, got {horizon_epochs}"
        ));
    }
    let spec = &cfg.network;
    let opts = RunOptions::new(horizon_epochs)
        .substeps(cfg.substeps)
        .warmup(cfg.warmup_fraction);
    let mut sched = experiment::build_scheduler(&cfg.scheduler, spec).map_err(|e| e.to_string())?;
    let m = engine::run_with(spec, &mut sched, &opts).map_err(|e| e.to_string())?;
    let t = spec.epoch_len;
    let queues = m
        .queue_series
        .iter()
        .map(|s| {
            s.chunks(t)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect()
        })
        .collect();
    let lam = spec.lambdas();
    to_json(&SimulationView {
        time: (0..horizon_epochs).map(|e| (e * t) as f64).collect(),
        queues,
        in_capacity_region: capacity::in_capacity_region(
            &lam,
            spec.n_robots,
            spec.rate_model.r_max,
        ),
        in_inner_bound: capacity::spec_in_inner_bound(&lam, spec).ok(),
        lambda: lam,
        throughput: m.throughput,
        delay: m.delay,
        stable: m.verdict.iter().map(|v| *v == Verdict::Stable).collect(),
    })
}
