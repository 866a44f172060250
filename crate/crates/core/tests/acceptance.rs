//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line, then exits nonzero if any
//! failed.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ferrysim::analytics::{self, DelayCase, FerryPair};
use ferrysim::capacity::{self, SynthesisOptions};
use ferrysim::engine::{self, Metrics, RunOptions, SimState, Verdict};
use ferrysim::experiment::{self, DelayTableParams, LambdaGrid, SweepVariable};
use ferrysim::model::{NetworkSpec, RateModel};
use ferrysim::scheduler::{
    brute_force_allocate, cbmf_allocate, cbmf_weights, CbmfScheduler, StaticScheduler,
};

const CONSERVATION_TOL: f64 = 1e-9;

fn check_conservation(m: &Metrics) {
    assert!(
        m.max_conservation_error <= CONSERVATION_TOL,
        "conservation error {}",
        m.max_conservation_error
    );
}

fn state_with(spec: &NetworkSpec, src: &[f64], robot: &[Vec<f64>]) -> SimState {
    let mut s = SimState::initial(spec);
    s.src_q = src.to_vec();
    s.robot_q = robot.to_vec();
    s
}

fn dims_spec(k: usize, n: usize) -> NetworkSpec {
    NetworkSpec::with_default_layout(
        &vec![10.0; k],
        &vec![0.0; k],
        n,
        1.0,
        10,
        RateModel::default(),
    )
    .unwrap()
}

fn assert_same_choice(spec: &NetworkSpec, st: &SimState) {
    let fast = cbmf_allocate(st, spec).unwrap();
    let slow = brute_force_allocate(st, spec).unwrap();
    let w = cbmf_weights(st);
    assert_eq!(
        w.objective(&fast),
        w.objective(&slow),
        "objective mismatch for src {:?} robots {:?}",
        st.src_q,
        st.robot_q
    );
    assert_eq!(
        fast, slow,
        "tie-break mismatch for src {:?} robots {:?}",
        st.src_q, st.robot_q
    );
}

fn c1_matching_optimality() {
    // (a) every assignment of values from {0,1,2,3} to all queues: covers
    // every sign and ordering pattern of the weights, ties included.
    for k in 1..=2usize {
        for n in 1..=3usize.min(2 * k) {
            let spec = dims_spec(k, n);
            let vars = k + n * k;
            let total = 4usize.pow(vars as u32);
            for code in 0..total {
                let mut c = code;
                let mut digit = || {
                    let d = (c % 4) as f64;
                    c /= 4;
                    d
                };
                let src: Vec<f64> = (0..k).map(|_| digit()).collect();
                let robot: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..k).map(|_| digit()).collect()).collect();
                assert_same_choice(&spec, &state_with(&spec, &src, &robot));
            }
        }
    }
    // (b) random states up to K=4, N=6.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let k = rng.gen_range(1..=4usize);
        let n = rng.gen_range(1..=6usize.min(2 * k));
        let spec = dims_spec(k, n);
        let integral = rng.gen_bool(0.3);
        let mut q = || {
            let x: f64 = rng.gen_range(0.0..10.0);
            if integral {
                x.floor()
            } else {
                x
            }
        };
        let src: Vec<f64> = (0..k).map(|_| q()).collect();
        let robot: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| q()).collect()).collect();
        assert_same_choice(&spec, &state_with(&spec, &src, &robot));
    }
}

fn c2_capacity_instance() {
    let (k, n, r) = (2, 3, 1.0);
    assert!(!capacity::in_capacity_region(&[1.0, 1.0], n, r));
    assert!(capacity::decompose(&[1.0, 1.0], n, r).is_none());
    for b in capacity::enumerate_basis(k, n, r) {
        let d = capacity::decompose(&b.service_rate, n, r).expect("vertex decomposes");
        let rate = d.service_rate();
        for (x, y) in rate.iter().zip(&b.service_rate) {
            assert!((x - y).abs() < 1e-12, "vertex {:?} -> {:?}", b.a, rate);
        }
        let support = d.support();
        assert_eq!(
            support.len(),
            1,
            "vertex {:?} uses {} basis points",
            b.a,
            support.len()
        );
        assert_eq!(d.basis[support[0]].a, b.a);
    }
    let d = capacity::decompose(&[0.75, 0.75], n, r).expect("(0.75, 0.75) decomposes");
    let rate = d.service_rate();
    assert!(rate.iter().all(|&x| x >= 0.75 - 1e-12), "{rate:?}");
    assert!((d.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(d.alpha.iter().all(|&a| a >= 0.0));
}

fn c3_decomposition_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = 1.0;
    for (k, n) in [(1usize, 1usize), (2, 3), (3, 6)] {
        let cap = r * n as f64 / 2.0;
        let mut inside = 0;
        while inside < 1000 {
            let lam: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..r)).collect();
            if !capacity::in_capacity_region(&lam, n, r) {
                continue;
            }
            inside += 1;
            let d = capacity::decompose(&lam, n, r)
                .unwrap_or_else(|| panic!("{lam:?} should decompose"));
            for (s, l) in d.service_rate().iter().zip(&lam) {
                assert!(*s >= l - 1e-12, "{lam:?}: service {s} < {l}");
            }
        }
        let mut outside = 0;
        while outside < 1000 {
            let lam: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.5 * r)).collect();
            if lam.iter().sum::<f64>() <= cap + 1e-6 {
                continue;
            }
            outside += 1;
            assert!(
                capacity::decompose(&lam, n, r).is_none(),
                "{lam:?} should be infeasible"
            );
        }
    }
}

/// Two flows, four robots, sinks 25 and 100 away from their sources.
fn trend_spec(v: f64, t: usize) -> NetworkSpec {
    NetworkSpec::with_default_layout(&[25.0, 100.0], &[0.0, 0.0], 4, v, t, RateModel::default())
        .unwrap()
}

const C4_V: f64 = 8.0;
const C4_T: usize = 100;
const C4_HORIZON: usize = 2000;

/// Rates whose 5% inflation still lies in the inner bound.
fn c4_stable_set(spec: &NetworkSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut out = Vec::new();
    while out.len() < 20 {
        let lam: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..1.0)).collect();
        let inflated: Vec<f64> = lam.iter().map(|l| l * 1.05).collect();
        if capacity::spec_in_inner_bound(&inflated, spec).unwrap() {
            out.push(lam);
        }
    }
    out
}

fn c4_stable_inside_inner_bound() {
    let spec = trend_spec(C4_V, C4_T);
    assert!(
        spec.transit_fraction() <= 0.2,
        "transit fraction {}",
        spec.transit_fraction()
    );
    let opts = RunOptions::new(C4_HORIZON);
    let stable = c4_stable_set(&spec);
    let failures: Vec<String> = stable
        .par_iter()
        .filter_map(|lam| {
            let m = engine::run_with(&spec.with_lambdas(lam).unwrap(), &mut CbmfScheduler, &opts)
                .unwrap();
            check_conservation(&m);
            (!m.all_stable()).then(|| format!("{lam:?} -> {:?}", m.verdict))
        })
        .collect();
    assert!(
        failures.is_empty(),
        "unstable inside the inner bound: {failures:?}"
    );

    // Rates scaled to 1.1-1.5 times a point on the region boundary.
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let r = spec.rate_model.r_max;
    let n = spec.n_robots as f64;
    let over: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let u: Vec<f64> = (0..2).map(|_| rng.gen_range(0.05..1.0)).collect();
            let to_boundary = 1.0
                / (u.iter().cloned().fold(0.0, f64::max) / r)
                    .max(u.iter().sum::<f64>() / (r * n / 2.0));
            let s = to_boundary * rng.gen_range(1.1..1.5);
            u.iter().map(|x| x * s).collect()
        })
        .collect();
    let failures: Vec<String> = over
        .par_iter()
        .filter_map(|lam| {
            let m = engine::run_with(&spec.with_lambdas(lam).unwrap(), &mut CbmfScheduler, &opts)
                .unwrap();
            check_conservation(&m);
            let overloaded_ok = lam
                .iter()
                .zip(&m.verdict)
                .all(|(l, v)| *l < r || *v == Verdict::Unstable);
            (m.all_stable() || !overloaded_ok).then(|| format!("{lam:?} -> {:?}", m.verdict))
        })
        .collect();
    assert!(
        failures.is_empty(),
        "not unstable outside the region: {failures:?}"
    );
}

fn c5_oracle_schedule_stable() {
    let spec = trend_spec(C4_V, C4_T);
    let opts = RunOptions::new(C4_HORIZON);
    let failures: Vec<String> = c4_stable_set(&spec)
        .par_iter()
        .filter_map(|lam| {
            let program = capacity::oracle_program(
                lam,
                &spec,
                experiment::DEFAULT_ORACLE_SLACK,
                &SynthesisOptions::default(),
            )
            .unwrap();
            let served = program.ideal_service_rate(spec.rate_model.r_max);
            assert!(
                served.iter().zip(lam).all(|(s, l)| s >= l),
                "{lam:?}: program serves {served:?}"
            );
            let mut sched = StaticScheduler::new(program).unwrap();
            let m = engine::run_with(&spec.with_lambdas(lam).unwrap(), &mut sched, &opts).unwrap();
            check_conservation(&m);
            (!m.all_stable()).then(|| format!("{lam:?} -> {:?}", m.verdict))
        })
        .collect();
    assert!(failures.is_empty(), "oracle program unstable: {failures:?}");
}

fn c6_delay_matches_closed_form() {
    let params = DelayTableParams {
        d: 10.0,
        velocities: vec![1.0, 2.0, 4.0],
        epoch_lens: vec![10, 20, 40],
        lambdas: LambdaGrid::FractionsOfMax(vec![0.1, 0.3, 0.5, 0.7, 0.9]),
        rate_model: RateModel::default(),
        horizon_epochs: 1000,
        substeps: 8,
        warmup_fraction: 0.1,
    };
    let rows = experiment::delay_table(&params).unwrap();
    assert_eq!(rows.len(), 45);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    let mut feasible = 0;
    for r in &rows {
        if r.status != "ok" {
            assert!(r.status.starts_with("infeasible"), "{r:?}");
            continue;
        }
        feasible += 1;
        let e = r.rel_error.expect("feasible rows carry an error");
        worst = worst.max(e);
        if e >= 0.05 {
            bad.push(format!(
                "v={} T={} lambda={:.4}: rel error {e:.4}",
                r.v,
                r.epoch_len,
                r.lambda.unwrap()
            ));
        }
    }
    // d/(vT) >= 1 only at v=1, T=10.
    assert_eq!(feasible, 40, "feasible points");
    assert!(bad.is_empty(), "{bad:?}");
    println!("    worst relative delay error {worst:.4} over {feasible} points");
}

fn c7_zero_distance_reduction() {
    let model = RateModel::new(1.5, 1.0, 2.0).unwrap();
    for &(v, t) in &[(1.0, 10.0), (2.0, 37.0), (5.0, 100.0)] {
        let lmax = analytics::lambda_max(0.0, v, t, &model).unwrap();
        for i in 1..20 {
            let lam = lmax * i as f64 / 20.0;
            let got = analytics::closed_form_delay(lam, 0.0, v, t, &model)
                .unwrap()
                .avg_delay;
            let want = t / 2.0 + lam * t / (2.0 * model.r_max);
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "lambda {lam}: {got} vs {want}"
            );
        }
    }
}

fn c8_case_boundary_continuity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut n = 0;
    while n < 20 {
        let d = rng.gen_range(1.0..50.0);
        let v = rng.gen_range(0.5..8.0);
        let t = rng.gen_range(5.0..200.0);
        if d / (v * t) >= 0.9 {
            continue;
        }
        let model = RateModel::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.0..3.0),
        )
        .unwrap();
        let pair = FerryPair::new(d, v, t, model).unwrap();
        let lhat = pair.lambda_hat_max();
        let tau = d / v;
        let c1 = pair.delay_for_case(lhat, DelayCase::DepletesInTransit, tau);
        let c2 = pair.delay_for_case(lhat, DelayCase::DepletesAtSink, tau);
        assert!(
            ((c1 - c2) / c1).abs() < 1e-6,
            "d={d} v={v} T={t}: {c1} vs {c2}"
        );
        let (case, t_star) = pair.solve_t_star(lhat).unwrap();
        assert_eq!(case, DelayCase::DepletesInTransit);
        assert!(
            (t_star - tau).abs() < 1e-6 * tau.max(1.0),
            "t* {t_star} vs {tau}"
        );
        n += 1;
    }
}

const TREND_LAMBDA: f64 = 0.2;
const TREND_HORIZON: usize = 2000;

/// Stability boundary along the diagonal and the per-flow delays at a
/// common stable rate.
fn trend_point(v: f64, t: usize) -> (f64, Vec<f64>) {
    let spec = trend_spec(v, t);
    let opts = RunOptions::new(TREND_HORIZON);
    let boundary = experiment::stability_boundary(&spec, &[1.0, 1.0], &opts, 1.0, 0.005).unwrap();
    let m = engine::run_with(
        &spec.with_lambdas(&[TREND_LAMBDA, TREND_LAMBDA]).unwrap(),
        &mut CbmfScheduler,
        &opts,
    )
    .unwrap();
    check_conservation(&m);
    assert!(m.all_stable(), "v={v} T={t}: common rate not stable");
    (boundary, m.delay.iter().map(|d| d.unwrap()).collect())
}

fn c9_qualitative_trends() {
    let vs = [2.0, 4.0, 8.0];
    let ts = [50usize, 100, 200];
    let by_v: Vec<(f64, Vec<f64>)> = vs.par_iter().map(|&v| trend_point(v, 100)).collect();
    let by_t: Vec<(f64, Vec<f64>)> = ts.par_iter().map(|&t| trend_point(4.0, t)).collect();
    for w in by_v.windows(2) {
        assert!(w[1].0 > w[0].0, "boundary not increasing in v: {by_v:?}");
        for f in 0..2 {
            assert!(w[1].1[f] < w[0].1[f], "delay not decreasing in v: {by_v:?}");
        }
    }
    for w in by_t.windows(2) {
        assert!(w[1].0 > w[0].0, "boundary not increasing in T: {by_t:?}");
        for f in 0..2 {
            assert!(w[1].1[f] > w[0].1[f], "delay not increasing in T: {by_t:?}");
        }
    }
    let fmt = |rows: &[(f64, Vec<f64>)]| {
        rows.iter()
            .map(|(b, d)| format!("{b:.3}/[{:.1},{:.1}]", d[0], d[1]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("    v=2,4,8 (T=100): boundary/delay {}", fmt(&by_v));
    println!("    T=50,100,200 (v=4): boundary/delay {}", fmt(&by_t));
}

fn c10_conservation_and_determinism() {
    let text = r#"{
        "network": {
            "flows": [ { "distance": 25, "lambda": 0.3 }, { "distance": 100, "lambda": 0.3 } ],
            "n_robots": 4, "velocity": 4, "epoch_len": 50,
            "initial_robot_positions": "random"
        },
        "horizon_epochs": 200,
        "seed": 7,
        "sweep": { "variable": "lambda_scale", "values": [0.5, 1.0, 2.0, 4.0] }
    }"#;
    let cfg = experiment::parse_config(text, None).unwrap();
    let a = experiment::csv_string(&experiment::run_experiment(&cfg).unwrap()).unwrap();
    let b = experiment::csv_string(&experiment::run_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(a, b, "CSV differs between runs");
    assert_eq!(a.lines().count(), 1 + 4 * 2);
    let params = DelayTableParams {
        velocities: vec![2.0],
        epoch_lens: vec![10],
        horizon_epochs: 50,
        ..Default::default()
    };
    let a = experiment::csv_string(&experiment::delay_table(&params).unwrap()).unwrap();
    let b = experiment::csv_string(&experiment::delay_table(&params).unwrap()).unwrap();
    assert_eq!(a, b, "delay table differs between runs");

    for scale in [0.5, 1.0, 2.0, 4.0] {
        let spec = cfg.spec_at(SweepVariable::LambdaScale, scale).unwrap();
        for substeps in [1, 3] {
            let m = engine::run_with(
                &spec,
                &mut CbmfScheduler,
                &RunOptions::new(200).substeps(substeps),
            )
            .unwrap();
            check_conservation(&m);
            let s = &m.final_state;
            assert!(s.conservation_error() <= CONSERVATION_TOL);
        }
    }
}

fn main() {
    let criteria: [(&str, fn()); 10] = [
        (
            "matching optimality against brute force",
            c1_matching_optimality,
        ),
        (
            "capacity region of the K=2, N=3 instance",
            c2_capacity_instance,
        ),
        (
            "decomposition feasibility sampling",
            c3_decomposition_sampling,
        ),
        (
            "CBMF stable inside the inner bound, unstable outside",
            c4_stable_inside_inner_bound,
        ),
        (
            "synthesized time-sharing program is stable",
            c5_oracle_schedule_stable,
        ),
        (
            "simulated delay within 5% of closed form",
            c6_delay_matches_closed_form,
        ),
        ("zero-distance delay reduction", c7_zero_distance_reduction),
        (
            "delay continuity at the case boundary",
            c8_case_boundary_continuity,
        ),
        (
            "throughput and delay trends in v and T",
            c9_qualitative_trends,
        ),
        (
            "conservation and deterministic CSV",
            c10_conservation_and_determinism,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {:>2}: FAIL  {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
