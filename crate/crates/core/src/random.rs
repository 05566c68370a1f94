//! Seeded random workloads for property sweeps and experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::model::{Instance, RequestBatch, Variant};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub variant: Variant,
    pub steps: usize,
    pub dimension: usize,
    pub r_min: usize,
    pub r_max: usize,
    /// Per-step displacement bound of the request cloud center.
    pub drift: f64,
    /// Requests scatter uniformly within this radius around the center.
    pub spread: f64,
    pub m: f64,
    pub move_cost: f64,
    /// Put all requests of a step on one point.
    pub collapsed: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            variant: Variant::Standard,
            steps: 20,
            dimension: 2,
            r_min: 1,
            r_max: 4,
            drift: 1.5,
            spread: 2.0,
            m: 1.0,
            move_cost: 2.0,
            collapsed: false,
        }
    }
}

fn random_offset(rng: &mut impl Rng, dim: usize, radius: f64) -> Vec<f64> {
    // Uniform direction, uniform length: fine for workloads, not a uniform ball sample.
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = crate::geometry::norm(&v);
    let len = rng.gen_range(0.0..=radius);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x *= len / n);
    }
    v
}

/// Requests scattered around a randomly walking center.
pub fn random_instance(spec: &RandomSpec, rng: &mut impl Rng) -> Result<Instance> {
    if spec.variant == Variant::MovingClient {
        return Err(Error::Unsupported(
            "use random_agent_path for moving-client workloads".into(),
        ));
    }
    if spec.steps == 0 || spec.dimension == 0 || spec.r_min == 0 || spec.r_max < spec.r_min {
        return Err(Error::InvalidParameter(format!(
            "need T >= 1, d >= 1, 1 <= r_min <= r_max; got T={}, d={}, r in [{}, {}]",
            spec.steps, spec.dimension, spec.r_min, spec.r_max
        )));
    }
    let dim = spec.dimension;
    let mut center = vec![0.0; dim];
    let mut batches = Vec::with_capacity(spec.steps);
    for _ in 0..spec.steps {
        let step = random_offset(rng, dim, spec.drift);
        center.iter_mut().zip(step).for_each(|(c, s)| *c += s);
        let r = rng.gen_range(spec.r_min..=spec.r_max);
        let make = |rng: &mut _| {
            let off = random_offset(rng, dim, spec.spread);
            Point::from_raw(center.iter().zip(off).map(|(c, o)| c + o).collect())
        };
        let batch = if spec.collapsed {
            RequestBatch::repeated(&make(rng), r)
        } else {
            RequestBatch::new((0..r).map(|_| make(rng)).collect())
        };
        batches.push(batch);
    }
    Ok(Instance::new(
        spec.variant,
        Point::origin(dim),
        spec.m,
        spec.move_cost,
        batches,
    ))
}

/// Moving-client instance whose agent takes random steps of length at most `m_a`.
pub fn random_agent_path(
    steps: usize,
    dimension: usize,
    server_limit: f64,
    agent_limit: f64,
    move_cost: f64,
    rng: &mut impl Rng,
) -> Result<Instance> {
    if steps == 0 || dimension == 0 {
        return Err(Error::InvalidParameter("need T >= 1 and d >= 1".into()));
    }
    let mut at = vec![0.0; dimension];
    // Persistent heading with occasional turns gives long drifts as well as dithering.
    let mut heading = random_offset(rng, dimension, 1.0);
    let mut path = Vec::with_capacity(steps);
    for _ in 0..steps {
        if rng.gen_bool(0.2) {
            heading = random_offset(rng, dimension, 1.0);
        }
        let n = crate::geometry::norm(&heading);
        let len = agent_limit * rng.gen_range(0.0..=1.0);
        if n > 0.0 {
            at.iter_mut()
                .zip(&heading)
                .for_each(|(a, h)| *a += len * h / n);
        }
        path.push(Point::from_raw(at.clone()));
    }
    Ok(Instance::moving_client(
        Point::origin(dimension),
        server_limit,
        agent_limit,
        move_cost,
        path,
    ))
}
