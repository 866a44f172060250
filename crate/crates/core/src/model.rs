//! Geometry, the distance/rate model, and the static network description.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Moves `self` toward `target` by at most `step`, landing exactly on the
    /// target when it is within reach.
    pub fn toward(self, target: Point, step: f64) -> Point {
        let dist = distance(self, target);
        if dist <= step {
            target
        } else {
            let f = step / dist;
            Point::new(
                self.x + (target.x - self.x) * f,
                self.y + (target.y - self.y) * f,
            )
        }
    }
}

/// Euclidean distance.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateForm {
    /// `c * r_max / (c + d^eta)`
    #[default]
    InversePolynomial,
}

/// Link rate between a robot and a static node as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub r_max: f64,
    pub c: f64,
    pub eta: f64,
    #[serde(default)]
    pub form: RateForm,
}

impl Default for RateModel {
    fn default() -> Self {
        RateModel {
            r_max: 1.0,
            c: 1.0,
            eta: 2.0,
            form: RateForm::InversePolynomial,
        }
    }
}

impl RateModel {
    pub fn new(r_max: f64, c: f64, eta: f64) -> Result<Self> {
        let m = RateModel {
            r_max,
            c,
            eta,
            form: RateForm::InversePolynomial,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "r_max must be > 0, got {}",
                self.r_max
            )));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "c must be > 0, got {}",
                self.c
            )));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Rate at distance `d`. Rejects negative or non-finite distances.
    pub fn rate_at(&self, d: f64) -> Result<f64> {
        if d.is_nan() || d < 0.0 || d.is_infinite() {
            return Err(Error::Precondition(format!(
                "distance must be finite and >= 0, got {d}"
            )));
        }
        Ok(self.rate(d))
    }

    /// Unchecked variant of [`RateModel::rate_at`] for hot loops; `d` is a
    /// distance and therefore already nonnegative.
    #[inline]
    pub fn rate(&self, d: f64) -> f64 {
        if d == 0.0 {
            return self.r_max;
        }
        match self.form {
            RateForm::InversePolynomial => self.c * self.r_max / (self.c + d.powf(self.eta)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub src: Point,
    pub sink: Point,
    pub lambda: f64,
}

/// Static description of a ferrying network. Flows are indexed `0..K` by
/// their position in `flows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub flows: Vec<FlowSpec>,
    pub n_robots: usize,
    pub velocity: f64,
    pub epoch_len: usize,
    pub rate_model: RateModel,
    pub initial_robot_positions: Vec<Point>,
}

impl NetworkSpec {
    /// Builds and validates a spec.
    pub fn new(
        flows: Vec<FlowSpec>,
        n_robots: usize,
        velocity: f64,
        epoch_len: usize,
        rate_model: RateModel,
        initial_robot_positions: Vec<Point>,
    ) -> Result<Self> {
        let spec = NetworkSpec {
            flows,
            n_robots,
            velocity,
            epoch_len,
            rate_model,
            initial_robot_positions,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Flow `i` gets its source at `(0, 50(i+1))` and its sink at
    /// `(d_i, 50(i+1))`; every robot starts at the first source.
    pub fn with_default_layout(
        distances: &[f64],
        lambdas: &[f64],
        n_robots: usize,
        velocity: f64,
        epoch_len: usize,
        rate_model: RateModel,
    ) -> Result<Self> {
        if distances.len() != lambdas.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} distances but {} arrival rates",
                distances.len(),
                lambdas.len()
            )));
        }
        let flows: Vec<FlowSpec> = default_flow_layout(distances)
            .into_iter()
            .zip(lambdas)
            .map(|((src, sink), &lambda)| FlowSpec { src, sink, lambda })
            .collect();
        let start = flows.first().map(|f| f.src).unwrap_or(Point::new(0.0, 0.0));
        NetworkSpec::new(
            flows,
            n_robots,
            velocity,
            epoch_len,
            rate_model,
            vec![start; n_robots],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.flows.len();
        if k == 0 {
            return Err(Error::InvalidNetwork(
                "at least one flow is required".into(),
            ));
        }
        if self.n_robots == 0 {
            return Err(Error::InvalidNetwork(
                "at least one robot is required".into(),
            ));
        }
        if self.n_robots > 2 * k {
            return Err(Error::InvalidNetwork(format!(
                "N <= 2K violated: {} robots for {} flows",
                self.n_robots, k
            )));
        }
        if !(self.velocity.is_finite() && self.velocity > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "velocity must be > 0, got {}",
                self.velocity
            )));
        }
        if self.epoch_len == 0 {
            return Err(Error::InvalidNetwork("epoch length must be >= 1".into()));
        }
        self.rate_model.validate()?;
        for (i, f) in self.flows.iter().enumerate() {
            if !(f.lambda.is_finite() && f.lambda >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "flow {i}: arrival rate must be finite and >= 0, got {}",
                    f.lambda
                )));
            }
            if !f.src.is_finite() || !f.sink.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "flow {i}: non-finite coordinates"
                )));
            }
        }
        if self.initial_robot_positions.len() != self.n_robots {
            return Err(Error::InvalidNetwork(format!(
                "{} initial positions for {} robots",
                self.initial_robot_positions.len(),
                self.n_robots
            )));
        }
        if self.initial_robot_positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite robot position".into()));
        }
        Ok(())
    }

    pub fn n_flows(&self) -> usize {
        self.flows.len()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.lambda).collect()
    }

    /// Largest distance between any two static nodes (sources and sinks of
    /// all flows).
    pub fn max_static_distance(&self) -> f64 {
        let nodes: Vec<Point> = self.flows.iter().flat_map(|f| [f.src, f.sink]).collect();
        let mut best = 0.0f64;
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                best = best.max(distance(*a, *b));
            }
        }
        best
    }

    /// Worst-case fraction of an epoch spent in transit, `d_max / (v T)`.
    pub fn transit_fraction(&self) -> f64 {
        self.max_static_distance() / (self.velocity * self.epoch_len as f64)
    }

    /// Copy with every arrival rate replaced.
    pub fn with_lambdas(&self, lambdas: &[f64]) -> Result<Self> {
        if lambdas.len() != self.flows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} arrival rates for {} flows",
                lambdas.len(),
                self.flows.len()
            )));
        }
        let mut s = self.clone();
        for (f, &l) in s.flows.iter_mut().zip(lambdas) {
            f.lambda = l;
        }
        s.validate()?;
        Ok(s)
    }
}

/// Source/sink positions for the default layout used by
/// [`NetworkSpec::with_default_layout`].
pub fn default_flow_layout(distances: &[f64]) -> Vec<(Point, Point)> {
    distances
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let y = 50.0 * (i + 1) as f64;
            (Point::new(0.0, y), Point::new(d, y))
        })
        .collect()
}
