//! Delay of the one-flow, two-robot ferry in steady state, plus Little's-law
//! post-processing of simulation metrics.
//!
//! In steady state the two robots alternate every epoch: one carries the
//! `lambda T` packets collected during the previous epoch toward the sink
//! while the other collects fresh arrivals at the source. Let
//! `S(t) = int_0^t R(d - v s) ds` be what the delivering robot has sent
//! after `t` steps in transit. The carried backlog empties either in
//! transit (`S(t*) = lambda T` with `t* <= d/v`) or after arrival, where
//! the robot sends at `r_max` until `t* = d/v + (lambda T - S(d/v)) / r_max`.
//! Averaging the total backlog over one epoch gives the delay formulas
//! below.

use serde::Serialize;

use crate::engine::Metrics;
use crate::model::RateModel;
use crate::quadrature::integrate;
use crate::{Error, Result};

const QUAD_TOL: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayCase {
    /// The carried backlog empties before the robot reaches the sink.
    DepletesInTransit,
    /// The robot reaches the sink and finishes at full rate.
    DepletesAtSink,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayCaseResult {
    pub case: DelayCase,
    pub t_star: f64,
    pub avg_total_queue: f64,
    pub avg_delay: f64,
}

/// Geometry of the single-flow system: pair distance, robot speed, epoch
/// length and link model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerryPair {
    pub d: f64,
    pub v: f64,
    pub epoch_len: f64,
    pub rate: RateModel,
}

impl FerryPair {
    pub fn new(d: f64, v: f64, epoch_len: f64, rate: RateModel) -> Result<Self> {
        rate.validate()?;
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::Precondition(format!(
                "distance must be >= 0, got {d}"
            )));
        }
        if !(v.is_finite() && v > 0.0 && epoch_len.is_finite() && epoch_len > 0.0) {
            return Err(Error::Precondition(
                "velocity and epoch length must be > 0".into(),
            ));
        }
        if d / (v * epoch_len) >= 1.0 {
            return Err(Error::Precondition(format!(
                "transit fraction d/(vT) = {} must be below 1",
                d / (v * epoch_len)
            )));
        }
        Ok(FerryPair {
            d,
            v,
            epoch_len,
            rate,
        })
    }

    fn transit_time(&self) -> f64 {
        self.d / self.v
    }

    fn link(&self, t: f64) -> f64 {
        self.rate.rate((self.d - self.v * t).max(0.0))
    }

    /// `S(t)`: data sent while approaching the sink, `t <= d/v`.
    pub fn sent_in_transit(&self, t: f64) -> f64 {
        integrate(|s| self.link(s), 0.0, t, QUAD_TOL)
    }

    /// `int_0^t S(tau) d tau`, evaluated as `int_0^t (t - s) R(d - v s) ds`.
    fn cumulative_sent(&self, t: f64) -> f64 {
        integrate(|s| (t - s) * self.link(s), 0.0, t, QUAD_TOL)
    }

    /// Largest arrival rate whose backlog empties in transit.
    pub fn lambda_hat_max(&self) -> f64 {
        self.sent_in_transit(self.transit_time()) / self.epoch_len
    }

    /// Largest sustainable arrival rate: everything one robot can deliver in
    /// an epoch, averaged over the epoch.
    pub fn lambda_max(&self) -> f64 {
        let tau = self.transit_time();
        (self.sent_in_transit(tau) + (self.epoch_len - tau) * self.rate.r_max) / self.epoch_len
    }

    fn check_lambda(&self, lam: f64) -> Result<()> {
        let lmax = self.lambda_max();
        if !(lam > 0.0 && lam < lmax) {
            return Err(Error::Precondition(format!(
                "arrival rate {lam} outside (0, lambda_max = {lmax})"
            )));
        }
        Ok(())
    }

    /// Which case applies at `lam` and the time the carried backlog empties.
    pub fn solve_t_star(&self, lam: f64) -> Result<(DelayCase, f64)> {
        self.check_lambda(lam)?;
        let tau = self.transit_time();
        let target = lam * self.epoch_len;
        let in_transit = self.sent_in_transit(tau);
        if target <= in_transit {
            let (mut lo, mut hi) = (0.0, tau);
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                if self.sent_in_transit(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((DelayCase::DepletesInTransit, 0.5 * (lo + hi)))
        } else {
            Ok((
                DelayCase::DepletesAtSink,
                tau + (target - in_transit) / self.rate.r_max,
            ))
        }
    }

    /// Time-averaged backlog and Little's-law delay in steady state.
    pub fn closed_form_delay(&self, lam: f64) -> Result<DelayCaseResult> {
        let (case, t_star) = self.solve_t_star(lam)?;
        let t = self.epoch_len;
        let avg_total_queue = match case {
            DelayCase::DepletesInTransit => {
                lam * t_star + lam * t / 2.0 - self.cumulative_sent(t_star) / t
            }
            DelayCase::DepletesAtSink => {
                let tau = self.transit_time();
                let extra = t_star - tau;
                lam * t_star + lam * t / 2.0
                    - self.cumulative_sent(tau) / t
                    - extra * self.sent_in_transit(tau) / t
                    - self.rate.r_max * extra * extra / (2.0 * t)
            }
        };
        Ok(DelayCaseResult {
            case,
            t_star,
            avg_total_queue,
            avg_delay: avg_total_queue / lam,
        })
    }

    /// Evaluates one case's formula at `t_star` regardless of which case
    /// `lam` actually falls in. Used to check continuity across cases.
    pub fn delay_for_case(&self, lam: f64, case: DelayCase, t_star: f64) -> f64 {
        let t = self.epoch_len;
        let tau = self.transit_time();
        match case {
            DelayCase::DepletesInTransit => {
                t_star + t / 2.0 - self.cumulative_sent(t_star) / (lam * t)
            }
            DelayCase::DepletesAtSink => {
                let extra = t_star - tau;
                t_star + t / 2.0
                    - self.cumulative_sent(tau) / (lam * t)
                    - extra * self.sent_in_transit(tau) / (lam * t)
                    - self.rate.r_max * extra * extra / (2.0 * lam * t)
            }
        }
    }
}

pub fn lambda_hat_max(d: f64, v: f64, epoch_len: f64, rate: &RateModel) -> Result<f64> {
    Ok(FerryPair::new(d, v, epoch_len, *rate)?.lambda_hat_max())
}

pub fn lambda_max(d: f64, v: f64, epoch_len: f64, rate: &RateModel) -> Result<f64> {
    Ok(FerryPair::new(d, v, epoch_len, *rate)?.lambda_max())
}

pub fn solve_t_star(
    lam: f64,
    d: f64,
    v: f64,
    epoch_len: f64,
    rate: &RateModel,
) -> Result<(DelayCase, f64)> {
    FerryPair::new(d, v, epoch_len, *rate)?.solve_t_star(lam)
}

pub fn closed_form_delay(
    lam: f64,
    d: f64,
    v: f64,
    epoch_len: f64,
    rate: &RateModel,
) -> Result<DelayCaseResult> {
    FerryPair::new(d, v, epoch_len, *rate)?.closed_form_delay(lam)
}

/// Post-warmup time-averaged backlog of each flow divided by its arrival
/// rate; `None` where the rate is zero.
pub fn little_delay(metrics: &Metrics, lam: &[f64]) -> Vec<Option<f64>> {
    metrics
        .time_avg_queue
        .iter()
        .zip(lam)
        .map(|(&q, &l)| (l > 0.0).then(|| q / l))
        .collect()
}
