//! Browser demo for the mobile server lab.
//!
//! Three operations, each returning a JSON string for the page to draw:
//! a geometric median explorer, a 2D chase of Move-to-Center against the
//! offline optimum, and the ratio growth curve of the unbounded construction.
//! The `*_json` functions hold the logic and are tested natively; the
//! exported wrappers only adapt argument types.

use mobsrv_core::adversary::{gen_thm1, AdversaryMode};
use mobsrv_core::algorithms::{run_online, Policy, PolicyConfig};
use mobsrv_core::analysis::{competitive_ratio, growth_exponent, Ratio};
use mobsrv_core::geometry::{geometric_median, median_objective, DEFAULT_MEDIAN_TOL};
use mobsrv_core::offline::{estimate_optimum, SolverSettings};
use mobsrv_core::random::{random_instance, RandomSpec};
use mobsrv_core::{Instance, Point, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Solver iterations for the in-browser optimum; enough for the demo sizes.
const DEMO_ITERATIONS: usize = 20_000;
const DEMO_GRID_STEP: f64 = 1e-2;
pub const MAX_CHASE_STEPS: usize = 200;
pub const MAX_GROWTH_STEPS: usize = 1600;

#[derive(Debug, Serialize)]
pub struct MedianView {
    pub median: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct ChaseView {
    pub requests: Vec<Vec<[f64; 2]>>,
    pub online: Vec<[f64; 2]>,
    pub offline: Vec<[f64; 2]>,
    pub online_cost: f64,
    pub offline_cost: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GrowthPoint {
    pub steps: usize,
    pub online_cost: f64,
    pub offline_cost: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GrowthView {
    pub delta: f64,
    pub points: Vec<GrowthPoint>,
    pub exponent: Option<f64>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn xy(p: &Point) -> [f64; 2] {
    let c = p.coords();
    [c[0], c.get(1).copied().unwrap_or(0.0)]
}

fn finite(ratio: Ratio) -> Option<f64> {
    match ratio {
        Ratio::Finite(r) => Some(r),
        Ratio::Unbounded => None,
    }
}

fn settings() -> SolverSettings {
    SolverSettings {
        iterations: DEMO_ITERATIONS,
        ..SolverSettings::default()
    }
}

fn offline_trace(inst: &Instance, online: &Trace) -> Result<Trace, String> {
    let est = estimate_optimum(
        inst,
        &settings(),
        std::slice::from_ref(online),
        Some(DEMO_GRID_STEP),
    )
    .map_err(|e| e.to_string())?;
    Ok(est.best().trace.clone())
}

/// Geometric median of planar points given as `[x0, y0, x1, y1, ...]`.
pub fn median_json(coords: &[f64]) -> Result<String, String> {
    if coords.is_empty() || coords.len() % 2 != 0 {
        return Err("expected a non-empty list of x, y pairs".into());
    }
    let points = coords
        .chunks(2)
        .map(|c| Point::new(c.to_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let median =
        geometric_median(&points, &points[0], DEFAULT_MEDIAN_TOL).map_err(|e| e.to_string())?;
    to_json(&MedianView {
        objective: median_objective(&points, &median.point),
        median: median.point.coords().to_vec(),
        iterations: median.iterations,
    })
}

/// Random planar instance; Move-to-Center with augmentation `delta` against
/// the offline optimum.
pub fn chase_json(seed: u64, steps: usize, delta: f64, move_cost: f64) -> Result<String, String> {
    if steps == 0 || steps > MAX_CHASE_STEPS {
        return Err(format!("steps must be in 1..={MAX_CHASE_STEPS}"));
    }
    let spec = RandomSpec {
        steps,
        dimension: 2,
        move_cost,
        ..RandomSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = random_instance(&spec, &mut rng).map_err(|e| e.to_string())?;
    let cfg = PolicyConfig::new(delta).map_err(|e| e.to_string())?;
    let online = run_online(&inst, Policy::Mtc, &cfg).map_err(|e| e.to_string())?;
    let offline = offline_trace(&inst, &online)?;
    let ratio = competitive_ratio(online.total(), offline.total()).map_err(|e| e.to_string())?;
    to_json(&ChaseView {
        requests: inst
            .batches
            .iter()
            .map(|b| b.requests.iter().map(xy).collect())
            .collect(),
        online: online.positions.iter().map(xy).collect(),
        offline: offline.positions.iter().map(xy).collect(),
        online_cost: online.total(),
        offline_cost: offline.total(),
        ratio: finite(ratio),
    })
}

/// Ratios of Move-to-Center on the unbounded construction for
/// `T = 25, 100, 400, ...` up to `max_steps`.
pub fn growth_json(delta: f64, max_steps: usize) -> Result<String, String> {
    if !(25..=MAX_GROWTH_STEPS).contains(&max_steps) {
        return Err(format!("max_steps must be in 25..={MAX_GROWTH_STEPS}"));
    }
    let cfg = PolicyConfig::new(delta).map_err(|e| e.to_string())?;
    let mode = AdversaryMode::WorstDirection {
        policy: Policy::Mtc,
        cfg,
    };
    let mut points = Vec::new();
    let mut steps = 25;
    while steps <= max_steps {
        let inst = gen_thm1(steps, None, 1.0, 2.0, 1, &mode)
            .map_err(|e| e.to_string())?
            .instance;
        let online = run_online(&inst, Policy::Mtc, &cfg).map_err(|e| e.to_string())?;
        let offline = offline_trace(&inst, &online)?;
        let ratio =
            competitive_ratio(online.total(), offline.total()).map_err(|e| e.to_string())?;
        points.push(GrowthPoint {
            steps,
            online_cost: online.total(),
            offline_cost: offline.total(),
            ratio: finite(ratio),
        });
        steps *= 4;
    }
    let series: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.ratio.map(|r| (p.steps as f64, r)))
        .collect();
    to_json(&GrowthView {
        delta,
        exponent: growth_exponent(&series).ok(),
        points,
    })
}

#[wasm_bindgen]
pub fn median(coords: Vec<f64>) -> Result<String, String> {
    median_json(&coords)
}

#[wasm_bindgen]
pub fn chase(seed: u32, steps: u32, delta: f64, move_cost: f64) -> Result<String, String> {
    chase_json(seed as u64, steps as usize, delta, move_cost)
}

#[wasm_bindgen]
pub fn growth(delta: f64, max_steps: u32) -> Result<String, String> {
    growth_json(delta, max_steps as usize)
}
