//! Problem instances, cost models, traces and instance transformations.
//!
//! Step `t` (0-based) moves the server from `positions[t]` to `positions[t + 1]`.
//! In the standard and moving-client models the batch of step `t` is served
//! from `positions[t + 1]`; in the answer-first model it is served from
//! `positions[t]`, before the move.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, check_dim, dist_raw, Point, DEFAULT_MEDIAN_TOL};
use crate::{Error, Result};

/// Additive slack on every movement limit check.
pub const MOVE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Move first, then serve the batch from the new position.
    Standard,
    /// Serve the batch from the current position, then move.
    AnswerFirst,
    /// A single agent issues one request per step and moves at most `m_a`.
    MovingClient,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::AnswerFirst => "answer_first",
            Variant::MovingClient => "moving_client",
        })
    }
}

/// Requests issued in one step, kept with multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestBatch {
    pub requests: Vec<Point>,
}

impl RequestBatch {
    pub fn new(requests: Vec<Point>) -> Self {
        RequestBatch { requests }
    }

    /// `r` copies of `p`.
    pub fn repeated(p: &Point, r: usize) -> Self {
        RequestBatch {
            requests: vec![p.clone(); r],
        }
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Sum of distances from `p` to every request.
    pub fn serve_cost(&self, p: &Point) -> f64 {
        self.requests
            .iter()
            .map(|v| dist_raw(v.coords(), p.coords()))
            .sum()
    }
}

/// Full problem description. Serialized field names are part of the file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub variant: Variant,
    pub dimension: usize,
    /// Server start `P_0`; also the agent start for the moving-client model.
    pub start: Point,
    /// Offline per-step movement limit (the server limit `m_s` for moving client).
    #[serde(rename = "m")]
    pub move_limit: f64,
    /// Cost per unit of server movement, at least 1.
    #[serde(rename = "D")]
    pub move_cost: f64,
    /// Agent per-step movement limit, moving client only.
    #[serde(rename = "m_a", default, skip_serializing_if = "Option::is_none")]
    pub agent_limit: Option<f64>,
    pub batches: Vec<RequestBatch>,
    /// Free-form generator metadata; ignored by every computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl Instance {
    pub fn new(
        variant: Variant,
        start: Point,
        move_limit: f64,
        move_cost: f64,
        batches: Vec<RequestBatch>,
    ) -> Self {
        Instance {
            variant,
            dimension: start.dim(),
            start,
            move_limit,
            move_cost,
            agent_limit: None,
            batches,
            meta: None,
        }
    }

    /// Moving-client instance from the agent path `A_1..A_T`.
    pub fn moving_client(
        start: Point,
        server_limit: f64,
        agent_limit: f64,
        move_cost: f64,
        agent_path: Vec<Point>,
    ) -> Self {
        let batches = agent_path
            .into_iter()
            .map(|a| RequestBatch::new(vec![a]))
            .collect();
        Instance {
            agent_limit: Some(agent_limit),
            ..Instance::new(
                Variant::MovingClient,
                start,
                server_limit,
                move_cost,
                batches,
            )
        }
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn r_min(&self) -> usize {
        self.batches
            .iter()
            .map(RequestBatch::len)
            .min()
            .unwrap_or(0)
    }

    pub fn r_max(&self) -> usize {
        self.batches
            .iter()
            .map(RequestBatch::len)
            .max()
            .unwrap_or(0)
    }

    /// Agent position after step `t` (moving client only).
    pub fn agent(&self, t: usize) -> &Point {
        &self.batches[t].requests[0]
    }

    /// Whether every batch consists of coincident requests.
    pub fn is_collapsed(&self) -> bool {
        self.batches.iter().all(|b| {
            b.requests
                .iter()
                .all(|v| dist_raw(v.coords(), b.requests[0].coords()) <= 1e-12)
        })
    }

    /// Translates every point of the instance by `w`.
    pub fn translated(&self, w: &Point) -> Instance {
        self.map_points(|p| p.translated(w))
    }

    /// Reflects every point of the instance through `center`.
    pub fn reflected(&self, center: &Point) -> Instance {
        self.map_points(|p| p.reflected(center))
    }

    fn map_points(&self, f: impl Fn(&Point) -> Point) -> Instance {
        Instance {
            start: f(&self.start),
            batches: self
                .batches
                .iter()
                .map(|b| RequestBatch::new(b.requests.iter().map(&f).collect()))
                .collect(),
            ..self.clone()
        }
    }

    pub fn from_json(s: &str) -> Result<Instance> {
        let inst: Instance = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let violations = validate(&inst);
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Cost of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub move_cost: f64,
    pub serve_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(move_cost: f64, serve_cost: f64) -> Self {
        CostBreakdown {
            move_cost,
            serve_cost,
            total: move_cost + serve_cost,
        }
    }
}

/// A server trajectory `P_0..P_T` with the per-step costs it incurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub positions: Vec<Point>,
    pub steps: Vec<CostBreakdown>,
    /// Per-step displacement the trace was allowed.
    pub move_limit: f64,
}

impl Trace {
    /// Builds a trace and computes its costs. Checks shape and feasibility.
    pub fn from_positions(
        instance: &Instance,
        positions: Vec<Point>,
        move_limit: f64,
    ) -> Result<Trace> {
        if positions.len() != instance.len() + 1 {
            return Err(Error::LengthMismatch {
                expected: instance.len() + 1,
                found: positions.len(),
            });
        }
        if positions[0] != instance.start {
            return Err(Error::InvalidParameter(
                "trace must begin at the instance start".into(),
            ));
        }
        let mut steps = Vec::with_capacity(instance.len());
        for t in 0..instance.len() {
            let step = step_cost(instance, t, &positions[t], &positions[t + 1])?;
            let moved = step.move_cost / instance.move_cost;
            if moved > move_limit + MOVE_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "step {t} moves {moved} beyond limit {move_limit}"
                )));
            }
            steps.push(step);
        }
        Ok(Trace {
            positions,
            steps,
            move_limit,
        })
    }

    /// A trace that never leaves the start.
    pub fn stationary(instance: &Instance) -> Trace {
        let positions = vec![instance.start.clone(); instance.len() + 1];
        Trace::from_positions(instance, positions, instance.move_limit)
            .expect("stationary trace is feasible")
    }

    pub fn total(&self) -> f64 {
        self.steps.iter().map(|s| s.total).sum()
    }

    /// Largest single-step displacement.
    pub fn max_displacement(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| dist_raw(w[0].coords(), w[1].coords()))
            .fold(0.0, f64::max)
    }
}

/// Cost of moving from `prev` to `next` in step `t` and serving batch `t`.
pub fn step_cost(
    instance: &Instance,
    t: usize,
    prev: &Point,
    next: &Point,
) -> Result<CostBreakdown> {
    let batch = instance.batches.get(t).ok_or(Error::IndexOutOfRange {
        index: t,
        len: instance.len(),
    })?;
    check_dim(prev, next)?;
    check_dim(&instance.start, prev)?;
    Ok(step_cost_raw(
        instance.variant,
        instance.move_cost,
        batch,
        prev,
        next,
    ))
}

pub(crate) fn step_cost_raw(
    variant: Variant,
    move_cost: f64,
    batch: &RequestBatch,
    prev: &Point,
    next: &Point,
) -> CostBreakdown {
    let moving = move_cost * dist_raw(prev.coords(), next.coords());
    let serve = match variant {
        Variant::Standard | Variant::MovingClient => batch.serve_cost(next),
        Variant::AnswerFirst => batch.serve_cost(prev),
    };
    CostBreakdown::new(moving, serve)
}

/// Total cost of `trace` on `instance`, recomputed from the positions.
pub fn total_cost(instance: &Instance, trace: &Trace) -> Result<f64> {
    if trace.positions.len() != instance.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: instance.len() + 1,
            found: trace.positions.len(),
        });
    }
    let mut total = 0.0;
    for t in 0..instance.len() {
        total += step_cost(instance, t, &trace.positions[t], &trace.positions[t + 1])?.total;
    }
    Ok(total)
}

/// Replaces every batch by `r_t` copies of its geometric median, ties broken
/// toward the anchor trace position at the start of the step.
pub fn collapse_to_centers(instance: &Instance, anchor_trace: &Trace) -> Result<Instance> {
    if instance.variant == Variant::MovingClient {
        return Err(Error::Unsupported(
            "collapsing a moving-client instance".into(),
        ));
    }
    if anchor_trace.positions.len() != instance.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: instance.len() + 1,
            found: anchor_trace.positions.len(),
        });
    }
    let batches = instance
        .batches
        .iter()
        .zip(&anchor_trace.positions)
        .map(|(b, anchor)| {
            let c = geometry::geometric_median(&b.requests, anchor, DEFAULT_MEDIAN_TOL)?;
            Ok(RequestBatch::repeated(&c.point, b.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        batches,
        ..instance.clone()
    })
}

/// Prepends a step with `r_1` requests on the start position.
pub fn prepend_dummy_requests(instance: &Instance) -> Result<Instance> {
    if instance.variant == Variant::MovingClient {
        return Err(Error::Unsupported(
            "dummy requests on a moving-client instance".into(),
        ));
    }
    let r = instance
        .batches
        .first()
        .map(RequestBatch::len)
        .ok_or(Error::Empty("instance batches"))?;
    let mut batches = Vec::with_capacity(instance.len() + 1);
    batches.push(RequestBatch::repeated(&instance.start, r));
    batches.extend(instance.batches.iter().cloned());
    Ok(Instance {
        batches,
        ..instance.clone()
    })
}

/// Lists every violated instance invariant; empty when the instance is well-formed.
pub fn validate(instance: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    if instance.dimension == 0 {
        out.push("dimension must be at least 1".to_string());
    }
    if instance.start.dim() != instance.dimension {
        out.push(format!(
            "start has dimension {} but instance dimension is {}",
            instance.start.dim(),
            instance.dimension
        ));
    }
    if instance.batches.is_empty() {
        out.push("instance has no steps (T must be at least 1)".to_string());
    }
    if !(instance.move_limit > 0.0) || !instance.move_limit.is_finite() {
        out.push(format!("m must be positive, got {}", instance.move_limit));
    }
    if !(instance.move_cost >= 1.0) || !instance.move_cost.is_finite() {
        out.push(format!("D must be at least 1, got {}", instance.move_cost));
    }
    for (t, b) in instance.batches.iter().enumerate() {
        if b.is_empty() {
            out.push(format!("step {t}: empty request batch"));
        }
        if let Some(v) = b.requests.iter().find(|v| v.dim() != instance.dimension) {
            out.push(format!(
                "step {t}: request of dimension {} in a {}-dimensional instance",
                v.dim(),
                instance.dimension
            ));
        }
    }
    match (instance.variant, instance.agent_limit) {
        (Variant::MovingClient, None) => {
            out.push("moving-client instance requires m_a".to_string());
        }
        (Variant::MovingClient, Some(ma)) => {
            if !(ma > 0.0) || !ma.is_finite() {
                out.push(format!("m_a must be positive, got {ma}"));
            }
            let mut prev = &instance.start;
            for (t, b) in instance.batches.iter().enumerate() {
                if b.len() != 1 {
                    out.push(format!(
                        "step {t}: moving-client batch must hold exactly one request, has {}",
                        b.len()
                    ));
                    continue;
                }
                let a = &b.requests[0];
                if a.dim() == prev.dim() {
                    let jump = dist_raw(a.coords(), prev.coords());
                    if jump > ma + MOVE_SLACK {
                        out.push(format!("step {t}: agent moves {jump} beyond m_a = {ma}"));
                    }
                }
                prev = a;
            }
        }
        (_, Some(_)) => {
            out.push("m_a is only valid for moving-client instances".to_string());
        }
        (_, None) => {}
    }
    out
}
