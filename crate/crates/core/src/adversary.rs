//! Lower-bound constructions as concrete instances.
//!
//! Every construction drifts an adversary server along the first axis in a
//! direction chosen once per phase, either by a seeded fair coin (oblivious)
//! or by simulating a deterministic reference policy and picking the side
//! that leaves it farthest behind.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algorithms::{self, Policy, PolicyConfig};
use crate::geometry::{dist_raw, Point};
use crate::model::{self, Instance, RequestBatch, Trace, Variant};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryMode {
    /// One fair coin per phase, independent of any algorithm.
    Oblivious { seed: u64 },
    /// Derandomized: play against `policy` and pick the worse side for it.
    WorstDirection { policy: Policy, cfg: PolicyConfig },
}

impl AdversaryMode {
    fn label(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("mode serializes")
    }
}

/// Drift direction along the first axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }
}

/// A generated instance together with the adversary's own feasible trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Construction {
    pub instance: Instance,
    pub adversary: Trace,
    /// Upper bound on the adversary's cost from the construction's accounting.
    pub cost_bound: f64,
    pub directions: Vec<Direction>,
}

struct Chooser<'a> {
    mode: &'a AdversaryMode,
    rng: Option<ChaCha8Rng>,
    chosen: Vec<Direction>,
}

impl<'a> Chooser<'a> {
    fn new(mode: &'a AdversaryMode) -> Result<Self> {
        let rng = match mode {
            AdversaryMode::Oblivious { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            AdversaryMode::WorstDirection { cfg, .. } => {
                PolicyConfig::new(cfg.delta)?;
                None
            }
        };
        Ok(Chooser {
            mode,
            rng,
            chosen: Vec::new(),
        })
    }

    /// Picks the direction of the next phase. `prefix` is the instance revealed
    /// so far and `anchor` the adversary position the drift departs from;
    /// the candidates are `anchor ± reach` along the first axis.
    fn choose(&mut self, prefix: &Instance, anchor: &Point, reach: f64) -> Result<Direction> {
        let dir = match self.mode {
            AdversaryMode::Oblivious { .. } => {
                let rng = self.rng.as_mut().expect("oblivious rng");
                if rng.gen_bool(0.5) {
                    Direction::Plus
                } else {
                    Direction::Minus
                }
            }
            AdversaryMode::WorstDirection { policy, cfg } => {
                let online = if prefix.is_empty() {
                    prefix.start.clone()
                } else {
                    algorithms::run_online(prefix, *policy, cfg)?
                        .positions
                        .pop()
                        .expect("non-empty trace")
                };
                let plus = shifted(anchor, reach);
                let minus = shifted(anchor, -reach);
                if dist_raw(online.coords(), plus.coords())
                    >= dist_raw(online.coords(), minus.coords())
                {
                    Direction::Plus
                } else {
                    Direction::Minus
                }
            }
        };
        self.chosen.push(dir);
        Ok(dir)
    }
}

fn shifted(p: &Point, dx: f64) -> Point {
    let mut c = p.coords().to_vec();
    c[0] += dx;
    Point::from_raw(c)
}

fn check_common(m: f64, move_cost: f64, dimension: usize) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "m must be positive, got {m}"
        )));
    }
    if !(move_cost >= 1.0) || !move_cost.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "D must be at least 1, got {move_cost}"
        )));
    }
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

fn finish(
    instance: Instance,
    positions: Vec<Point>,
    limit: f64,
    cost_bound: f64,
    directions: Vec<Direction>,
    mut meta: serde_json::Value,
) -> Result<Construction> {
    let violations = model::validate(&instance);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    let adversary = Trace::from_positions(&instance, positions, limit)?;
    let cost = adversary.total();
    meta["directions"] = json!(directions);
    meta["adversary_cost"] = json!(cost);
    meta["adversary_cost_bound"] = json!(cost_bound);
    Ok(Construction {
        instance: instance.with_meta(meta),
        adversary,
        cost_bound,
        directions,
    })
}

/// Default prefix length `floor(sqrt(T))`, at least 1.
pub fn default_thm1_x(steps: usize) -> usize {
    ((steps as f64).sqrt().floor() as usize).max(1)
}

/// Unbounded-ratio construction: `x` steps with one request at the start while
/// the adversary drifts away, then `T - x` steps with the request riding on
/// the adversary server.
pub fn gen_thm1(
    steps: usize,
    x: Option<usize>,
    m: f64,
    move_cost: f64,
    dimension: usize,
    mode: &AdversaryMode,
) -> Result<Construction> {
    check_common(m, move_cost, dimension)?;
    let x = x.unwrap_or_else(|| default_thm1_x(steps));
    if x < 1 || x >= steps {
        return Err(Error::InvalidParameter(format!(
            "thm1 needs 1 <= x < T, got x = {x}, T = {steps}"
        )));
    }
    let start = Point::origin(dimension);
    let prefix = Instance::new(
        Variant::Standard,
        start.clone(),
        m,
        move_cost,
        vec![RequestBatch::repeated(&start, 1); x],
    );
    let mut chooser = Chooser::new(mode)?;
    let dir = chooser.choose(&prefix, &start, x as f64 * m)?;
    let mut c = build_thm1(steps, x, m, move_cost, dimension, dir);
    c.directions = chooser.chosen;
    let meta = json!({
        "generator": "thm1", "T": steps, "x": x, "m": m, "D": move_cost,
        "dimension": dimension, "mode": mode.label(),
    });
    finish(
        c.instance,
        c.adversary.positions,
        m,
        c.cost_bound,
        c.directions,
        meta,
    )
}

pub(crate) fn build_thm1(
    steps: usize,
    x: usize,
    m: f64,
    move_cost: f64,
    dimension: usize,
    dir: Direction,
) -> Construction {
    let start = Point::origin(dimension);
    let positions: Vec<Point> = (0..=steps)
        .map(|t| shifted(&start, dir.sign() * t as f64 * m))
        .collect();
    let batches = (1..=steps)
        .map(|t| {
            let at = if t <= x { &start } else { &positions[t] };
            RequestBatch::repeated(at, 1)
        })
        .collect();
    let instance = Instance::new(Variant::Standard, start, m, move_cost, batches);
    let (xf, tf) = (x as f64, steps as f64);
    let cost_bound = xf * move_cost * m + m * xf * xf + (tf - xf) * move_cost * m;
    let adversary = Trace::from_positions(&instance, positions, m).expect("drift is feasible");
    Construction {
        instance,
        adversary,
        cost_bound,
        directions: vec![dir],
    }
}

/// Phase-2 length `ceil(x / delta)`.
pub fn catch_up_steps(x: usize, delta: f64) -> usize {
    (x as f64 / delta - 1e-9).ceil().max(1.0) as usize
}

/// Augmentation lower bound: repeated cycles of `x` steps with `R_min`
/// requests at the cycle start while the adversary drifts, followed by
/// `ceil(x / delta)` steps with `R_max` requests riding on the adversary.
#[allow(clippy::too_many_arguments)]
pub fn gen_thm2(
    cycles: usize,
    x: usize,
    delta: f64,
    r_min: usize,
    r_max: usize,
    m: f64,
    move_cost: f64,
    dimension: usize,
    mode: &AdversaryMode,
) -> Result<Construction> {
    check_common(m, move_cost, dimension)?;
    if cycles == 0 {
        return Err(Error::InvalidParameter(
            "thm2 needs at least one cycle".into(),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "thm2 needs delta in (0, 1], got {delta}"
        )));
    }
    if (x as f64) < 2.0 * delta || x == 0 {
        return Err(Error::InvalidParameter(format!(
            "thm2 needs x >= 2 * delta, got x = {x}, delta = {delta}"
        )));
    }
    if r_min == 0 || r_max < r_min {
        return Err(Error::InvalidParameter(format!(
            "thm2 needs 1 <= R_min <= R_max, got {r_min} and {r_max}"
        )));
    }
    let catch_up = catch_up_steps(x, delta);
    let start = Point::origin(dimension);
    let mut chooser = Chooser::new(mode)?;
    let mut inst = Instance::new(Variant::Standard, start.clone(), m, move_cost, Vec::new());
    let mut positions = vec![start.clone()];
    for _ in 0..cycles {
        let anchor = positions.last().expect("non-empty").clone();
        let phase1 = RequestBatch::repeated(&anchor, r_min);
        inst.batches.extend(std::iter::repeat_n(phase1, x));
        let dir = chooser.choose(&inst, &anchor, x as f64 * m)?;
        for _ in 0..x {
            let last = positions.last().expect("non-empty");
            positions.push(shifted(last, dir.sign() * m));
        }
        for _ in 0..catch_up {
            let next = shifted(positions.last().expect("non-empty"), dir.sign() * m);
            inst.batches.push(RequestBatch::repeated(&next, r_max));
            positions.push(next);
        }
    }
    let (xf, rmin) = (x as f64, r_min as f64);
    let per_cycle = move_cost * xf * m + rmin * m * xf * xf + catch_up as f64 * move_cost * m;
    let meta = json!({
        "generator": "thm2", "cycles": cycles, "x": x, "delta": delta,
        "R_min": r_min, "R_max": r_max, "m": m, "D": move_cost,
        "dimension": dimension, "mode": mode.label(),
        "catch_up_steps": catch_up,
        "large_x_cycle_bound": 3.0 * rmin * m * xf * xf,
    });
    let directions = chooser.chosen;
    finish(
        inst,
        positions,
        m,
        per_cycle * cycles as f64,
        directions,
        meta,
    )
}

/// Answer-first lower bound: two-step cycles. Step one puts `r` requests on
/// the adversary, which then jumps `m`; step two puts `r` requests on the
/// adversary's new position.
pub fn gen_thm3(
    cycles: usize,
    r: usize,
    m: f64,
    move_cost: f64,
    dimension: usize,
    mode: &AdversaryMode,
) -> Result<Construction> {
    check_common(m, move_cost, dimension)?;
    if cycles == 0 || r == 0 {
        return Err(Error::InvalidParameter(format!(
            "thm3 needs cycles >= 1 and r >= 1, got {cycles} and {r}"
        )));
    }
    let start = Point::origin(dimension);
    let mut chooser = Chooser::new(mode)?;
    let mut inst = Instance::new(
        Variant::AnswerFirst,
        start.clone(),
        m,
        move_cost,
        Vec::new(),
    );
    let mut positions = vec![start];
    for _ in 0..cycles {
        let anchor = positions.last().expect("non-empty").clone();
        inst.batches.push(RequestBatch::repeated(&anchor, r));
        let dir = chooser.choose(&inst, &anchor, m)?;
        let jumped = shifted(&anchor, dir.sign() * m);
        inst.batches.push(RequestBatch::repeated(&jumped, r));
        positions.push(jumped.clone());
        positions.push(jumped);
    }
    let meta = json!({
        "generator": "thm3", "cycles": cycles, "r": r, "m": m, "D": move_cost,
        "dimension": dimension, "mode": mode.label(),
    });
    let directions = chooser.chosen;
    finish(
        inst,
        positions,
        m,
        cycles as f64 * move_cost * m,
        directions,
        meta,
    )
}

/// Default agent-lead parameter `sqrt(T) * m_s / m_a`.
pub fn default_moving_client_x(steps: usize, eps: f64) -> f64 {
    (steps as f64).sqrt() / (1.0 + eps)
}

/// Moving-client lower bound with agent speed `(1 + eps) * m_s`.
///
/// Phase one lasts `ceil(x * m_a / m_s)` rounds while the adversary drifts at
/// `m_s`; the agent waits at the start and, in the last rounds of the phase,
/// sprints at no more than `m_a` onto the adversary. Afterwards agent and
/// adversary keep drifting together at `m_s`.
pub fn gen_moving_client(
    steps: usize,
    x: Option<f64>,
    eps: f64,
    server_limit: f64,
    move_cost: f64,
    dimension: usize,
    mode: &AdversaryMode,
) -> Result<Construction> {
    check_common(server_limit, move_cost, dimension)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be non-negative, got {eps}"
        )));
    }
    let ms = server_limit;
    let ma = (1.0 + eps) * ms;
    let x = x.unwrap_or_else(|| default_moving_client_x(steps, eps));
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "x must be positive, got {x}"
        )));
    }
    let phase1 = (x * ma / ms - 1e-9).ceil().max(1.0) as usize;
    if phase1 > steps {
        return Err(Error::InvalidParameter(format!(
            "phase one needs {phase1} rounds but T = {steps}"
        )));
    }
    // Rounds the agent needs to reach the adversary at speed m_a.
    let sprint = ((phase1 as f64 * ms / ma) - 1e-9).ceil().max(1.0) as usize;
    let wait = phase1 - sprint;

    let start = Point::origin(dimension);
    let mut chooser = Chooser::new(mode)?;
    let waiting =
        Instance::moving_client(start.clone(), ms, ma, move_cost, vec![start.clone(); wait]);
    let dir = chooser.choose(&waiting, &start, phase1 as f64 * ms)?;
    let s = dir.sign();

    let positions: Vec<Point> = (0..=steps)
        .map(|t| shifted(&start, s * t as f64 * ms))
        .collect();
    let lead = phase1 as f64 * ms;
    let path: Vec<Point> = (1..=steps)
        .map(|t| {
            if t <= wait {
                start.clone()
            } else if t <= phase1 {
                let j = (t - wait) as f64;
                shifted(&start, s * lead * j / sprint as f64)
            } else {
                positions[t].clone()
            }
        })
        .collect();
    let inst = Instance::moving_client(start, ms, ma, move_cost, path);

    let x_real = phase1 as f64 * ms / ma;
    let cost_bound = move_cost * x_real * ma
        + x_real * x_real * ma * ma / ms
        + move_cost * (steps - phase1) as f64 * ms;
    let meta = json!({
        "generator": "moving_client", "T": steps, "x": x, "x_realized": x_real,
        "eps": eps, "m_s": ms, "m_a": ma, "D": move_cost,
        "dimension": dimension, "mode": mode.label(),
        "phase1_rounds": phase1, "sprint_rounds": sprint,
    });
    let directions = chooser.chosen;
    finish(inst, positions, ms, cost_bound, directions, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::total_cost;

    fn worst(delta: f64) -> AdversaryMode {
        AdversaryMode::WorstDirection {
            policy: Policy::Mtc,
            cfg: PolicyConfig::new(delta).unwrap(),
        }
    }

    #[test]
    fn thm1_layout() {
        let c = gen_thm1(16, Some(4), 1.0, 2.0, 1, &worst(0.0)).unwrap();
        assert_eq!(c.directions, vec![Direction::Plus]);
        for t in 0..4 {
            assert_eq!(
                c.instance.batches[t],
                RequestBatch::repeated(&Point::origin(1), 1)
            );
        }
        for t in 5..=16 {
            assert_eq!(c.instance.batches[t - 1].requests[0].x(), t as f64);
        }
        let cost = total_cost(&c.instance, &c.adversary).unwrap();
        assert!(cost <= c.cost_bound + 1e-9);
        assert_eq!(c.adversary.max_displacement(), 1.0);
    }

    #[test]
    fn thm1_rejects_bad_x() {
        assert!(gen_thm1(16, Some(16), 1.0, 2.0, 1, &worst(0.0)).is_err());
        assert!(gen_thm1(16, Some(0), 1.0, 2.0, 1, &worst(0.0)).is_err());
        assert_eq!(default_thm1_x(100), 10);
    }

    #[test]
    fn thm1_embeds_along_first_axis() {
        let c = gen_thm1(9, None, 0.5, 2.0, 3, &AdversaryMode::Oblivious { seed: 4 }).unwrap();
        let last = &c.instance.batches[8].requests[0];
        assert_eq!(last.coords()[1..], [0.0, 0.0]);
        assert_eq!(last.x().abs(), 4.5);
    }

    #[test]
    fn oblivious_is_reproducible_and_mirrored() {
        let a = gen_thm1(
            25,
            None,
            1.0,
            2.0,
            2,
            &AdversaryMode::Oblivious { seed: 11 },
        )
        .unwrap();
        let b = gen_thm1(
            25,
            None,
            1.0,
            2.0,
            2,
            &AdversaryMode::Oblivious { seed: 11 },
        )
        .unwrap();
        assert_eq!(a, b);
        let plus = build_thm1(25, 5, 1.0, 2.0, 2, Direction::Plus);
        let minus = build_thm1(25, 5, 1.0, 2.0, 2, Direction::Minus);
        assert_eq!(plus.instance.reflected(&Point::origin(2)), minus.instance);
        // Some seed must produce each side.
        let dirs: Vec<_> = (0..16)
            .map(|seed| {
                gen_thm1(4, None, 1.0, 2.0, 1, &AdversaryMode::Oblivious { seed })
                    .unwrap()
                    .directions[0]
            })
            .collect();
        assert!(dirs.contains(&Direction::Plus) && dirs.contains(&Direction::Minus));
    }

    #[test]
    fn thm2_phase_lengths_and_sizes() {
        let c = gen_thm2(
            2,
            4,
            0.5,
            1,
            3,
            1.0,
            2.0,
            1,
            &AdversaryMode::Oblivious { seed: 0 },
        )
        .unwrap();
        assert_eq!(catch_up_steps(4, 0.5), 8);
        assert_eq!(c.instance.len(), 2 * (4 + 8));
        let sizes: Vec<usize> = c.instance.batches.iter().map(|b| b.len()).collect();
        assert_eq!(&sizes[..12], &[1, 1, 1, 1, 3, 3, 3, 3, 3, 3, 3, 3]);
        assert_eq!(c.directions.len(), 2);
        // Second cycle's phase one sits where the adversary ended cycle one.
        let end1 = &c.adversary.positions[12];
        assert_eq!(&c.instance.batches[12].requests[0], end1);
        assert!(total_cost(&c.instance, &c.adversary).unwrap() <= c.cost_bound + 1e-9);
    }

    #[test]
    fn thm2_degenerates_to_thm1_cycles() {
        let c = gen_thm2(3, 3, 1.0, 1, 1, 1.0, 2.0, 1, &worst(1.0)).unwrap();
        assert!(c.instance.batches.iter().all(|b| b.len() == 1));
        assert_eq!(c.instance.len(), 3 * 6);
    }

    #[test]
    fn thm2_parameter_checks() {
        let mode = AdversaryMode::Oblivious { seed: 0 };
        assert!(gen_thm2(1, 1, 1.0, 1, 1, 1.0, 2.0, 1, &mode).is_err());
        assert!(gen_thm2(1, 4, 0.0, 1, 1, 1.0, 2.0, 1, &mode).is_err());
        assert!(gen_thm2(1, 4, 0.5, 3, 2, 1.0, 2.0, 1, &mode).is_err());
        assert!(gen_thm2(0, 4, 0.5, 1, 2, 1.0, 2.0, 1, &mode).is_err());
    }

    #[test]
    fn thm3_cycle_layout() {
        let c = gen_thm3(10, 8, 1.0, 2.0, 1, &AdversaryMode::Oblivious { seed: 2 }).unwrap();
        assert_eq!(c.instance.variant, Variant::AnswerFirst);
        assert_eq!(c.instance.len(), 20);
        assert_eq!(
            c.instance.batches[0],
            RequestBatch::repeated(&Point::origin(1), 8)
        );
        assert_eq!(c.instance.batches[1].requests[0].x().abs(), 1.0);
        assert!(total_cost(&c.instance, &c.adversary).unwrap() <= 10.0 * 2.0 + 1e-9);
    }

    #[test]
    fn thm3_worst_direction_costs_static_r_m_per_cycle() {
        let mode = AdversaryMode::WorstDirection {
            policy: Policy::Static,
            cfg: PolicyConfig::new(0.0).unwrap(),
        };
        let (cycles, r) = (6, 4);
        let c = gen_thm3(cycles, r, 1.0, 2.0, 1, &mode).unwrap();
        let online = algorithms::run_online(
            &c.instance,
            Policy::Static,
            &PolicyConfig::new(0.0).unwrap(),
        )
        .unwrap();
        for k in 0..cycles {
            let cycle_cost = online.steps[2 * k].total + online.steps[2 * k + 1].total;
            assert!(
                cycle_cost >= (r as f64) * 1.0 - 1e-9,
                "cycle {k}: {cycle_cost}"
            );
        }
    }

    #[test]
    fn moving_client_construction() {
        let c = gen_moving_client(
            100,
            None,
            0.5,
            1.0,
            2.0,
            2,
            &AdversaryMode::WorstDirection {
                policy: Policy::MtcMovingClient,
                cfg: PolicyConfig::new(0.0).unwrap(),
            },
        )
        .unwrap();
        let inst = &c.instance;
        assert!(model::validate(inst).is_empty());
        let ma = inst.agent_limit.unwrap();
        assert_eq!(ma, 1.5);
        let mut prev = inst.start.clone();
        for t in 0..inst.len() {
            let a = inst.agent(t);
            assert!(dist_raw(a.coords(), prev.coords()) <= ma + 1e-9);
            prev = a.clone();
        }
        let meta = inst.meta.as_ref().unwrap();
        let phase1 = meta["phase1_rounds"].as_u64().unwrap() as usize;
        for t in phase1..inst.len() - 1 {
            let step = inst.agent(t + 1).x() - inst.agent(t).x();
            assert!((step - 1.0).abs() < 1e-12);
        }
        assert!(c.adversary.total() <= c.cost_bound + 1e-9);
        assert!(c.adversary.max_displacement() <= 1.0 + 1e-12);
    }

    #[test]
    fn moving_client_eps_zero_agent_rides_adversary() {
        let c = gen_moving_client(
            49,
            None,
            0.0,
            1.0,
            2.0,
            1,
            &AdversaryMode::Oblivious { seed: 5 },
        )
        .unwrap();
        for t in 0..c.instance.len() {
            assert!((c.instance.agent(t).x() - c.adversary.positions[t + 1].x()).abs() < 1e-12);
        }
        assert!(gen_moving_client(4, Some(10.0), 0.0, 1.0, 2.0, 1, &worst(0.0)).is_err());
        assert!(gen_moving_client(4, None, -0.5, 1.0, 2.0, 1, &worst(0.0)).is_err());
    }
}
