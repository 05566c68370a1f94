//! Online policies and the sequential execution loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, check_dim, clamp_move_raw, dist_raw, Point, DEFAULT_MEDIAN_TOL};
use crate::model::{self, Instance, RequestBatch, Trace, Variant};
use crate::{Error, Result};

/// Online algorithm configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Augmentation: the online server may move `(1 + delta) * m` per step.
    /// Zero is accepted for lower-bound runs even though the upper-bound
    /// analysis needs `delta > 0`.
    pub delta: f64,
    pub median_tol: f64,
}

impl PolicyConfig {
    pub fn new(delta: f64) -> Result<Self> {
        let cfg = PolicyConfig {
            delta,
            median_tol: DEFAULT_MEDIAN_TOL,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if !(self.median_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "median_tol must be positive, got {}",
                self.median_tol
            )));
        }
        Ok(())
    }

    /// Whether the upper-bound analysis covers this configuration.
    pub fn within_theory(&self) -> bool {
        self.delta > 0.0
    }
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            delta: 0.5,
            median_tol: DEFAULT_MEDIAN_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Move-to-Center: damped move toward the batch median.
    Mtc,
    /// Move-to-Center rule for the moving-client model.
    MtcMovingClient,
    /// Never moves.
    Static,
    /// Chases the batch median at full speed, without damping.
    FollowCenter,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::Mtc,
        Policy::MtcMovingClient,
        Policy::Static,
        Policy::FollowCenter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Mtc => "mtc",
            Policy::MtcMovingClient => "mtc_moving_client",
            Policy::Static => "static",
            Policy::FollowCenter => "follow_center",
        }
    }

    pub fn supports(&self, variant: Variant) -> bool {
        (*self == Policy::MtcMovingClient) == (variant == Variant::MovingClient)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown policy `{s}`")))
    }
}

/// One Move-to-Center step: move toward the median `c` of the batch by
/// `min(1, r/D) * d(current, c)`, capped at `(1 + delta) * m`.
pub fn mtc_step(
    current: &Point,
    batch: &RequestBatch,
    m: f64,
    move_cost: f64,
    cfg: &PolicyConfig,
) -> Result<Point> {
    if batch.is_empty() {
        return Err(Error::Empty("request batch"));
    }
    let c = geometry::geometric_median(&batch.requests, current, cfg.median_tol)?.point;
    let damping = (batch.len() as f64 / move_cost).min(1.0);
    let desired = damping * dist_raw(current.coords(), c.coords());
    Ok(clamp_move_raw(
        current,
        &c,
        desired.min((1.0 + cfg.delta) * m),
    ))
}

/// Moving-client rule: move toward the agent by `min(m_s, d(current, agent) / D)`.
pub fn mtc_moving_client_step(
    current: &Point,
    agent: &Point,
    server_limit: f64,
    move_cost: f64,
) -> Result<Point> {
    check_dim(current, agent)?;
    let step = (dist_raw(current.coords(), agent.coords()) / move_cost).min(server_limit);
    Ok(clamp_move_raw(current, agent, step))
}

fn follow_center_step(
    current: &Point,
    batch: &RequestBatch,
    m: f64,
    cfg: &PolicyConfig,
) -> Result<Point> {
    let c = geometry::geometric_median(&batch.requests, current, cfg.median_tol)?.point;
    Ok(clamp_move_raw(current, &c, (1.0 + cfg.delta) * m))
}

/// Per-step displacement a policy may use on an instance.
pub fn online_limit(instance: &Instance, policy: Policy, cfg: &PolicyConfig) -> f64 {
    match policy {
        Policy::MtcMovingClient => instance.move_limit,
        _ => (1.0 + cfg.delta) * instance.move_limit,
    }
}

/// Reveals the batches one at a time and records the policy's responses.
pub fn run_online(instance: &Instance, policy: Policy, cfg: &PolicyConfig) -> Result<Trace> {
    cfg.check()?;
    let violations = model::validate(instance);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    if !policy.supports(instance.variant) {
        return Err(Error::IncompatiblePolicy {
            policy: policy.to_string(),
            variant: instance.variant.to_string(),
        });
    }
    let m = instance.move_limit;
    let d = instance.move_cost;
    let mut positions = Vec::with_capacity(instance.len() + 1);
    positions.push(instance.start.clone());
    for batch in &instance.batches {
        let current = positions.last().expect("non-empty");
        let next = match policy {
            Policy::Mtc => mtc_step(current, batch, m, d, cfg)?,
            Policy::MtcMovingClient => mtc_moving_client_step(current, &batch.requests[0], m, d)?,
            Policy::Static => current.clone(),
            Policy::FollowCenter => follow_center_step(current, batch, m, cfg)?,
        };
        positions.push(next);
    }
    Trace::from_positions(instance, positions, online_limit(instance, policy, cfg))
}
