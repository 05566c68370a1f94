//! Offline optimum: a projected subgradient solver for any dimension and an
//! exhaustive grid dynamic program for 1D instances.
//!
//! The offline cost is a sum of Euclidean norms of affine functions of the
//! stacked positions `P_1..P_T`, and the movement limits are convex, so any
//! local method that converges finds the global optimum.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::algorithms::{self, Policy, PolicyConfig};
use crate::geometry::{norm, Point};
use crate::model::{self, Instance, Trace, Variant, MOVE_SLACK};
use crate::{Error, Result};

/// Sweeps stop once every pair is within this fraction of the current step
/// length of feasibility; the forward clamp absorbs the rest.
const SWEEP_TOL: f64 = 1e-3;

const POLISH_PASSES: usize = 200;

/// Minimizing interval of `sum w_i |p - x_i|`.
fn weighted_median_interval(pts: &mut [(f64, f64)]) -> (f64, f64) {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * pts.iter().map(|p| p.1).sum::<f64>();
    let mut acc = 0.0;
    for (i, &(x, w)) in pts.iter().enumerate() {
        acc += w;
        if acc > half {
            return (x, x);
        }
        if acc == half {
            return (x, pts.get(i + 1).map_or(x, |p| p.0));
        }
    }
    let last = pts.last().map_or(0.0, |p| p.0);
    (last, last)
}

/// Cell budget (steps times grid points) for the grid oracle.
pub const MAX_GRID_CELLS: usize = 200_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub iterations: usize,
    /// Convergence tolerance, relative to `1 + cost of the stationary trace`.
    pub tol: f64,
    /// Step size scale `c` in `c / sqrt(k)`; defaults to the move limit `m`.
    pub step_scale: Option<f64>,
    /// Cap on forward/backward projection sweeps per iteration
    /// (position coordinates only).
    pub max_sweeps: usize,
    pub coordinates: Coordinates,
}

/// Variables the descent steps in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinates {
    /// Steps `u_t = P_t - P_{t-1}`; the move limits are independent balls and
    /// the projection is an exact per-step clamp.
    #[default]
    Increments,
    /// Steps the positions and projects by cyclic pair sweeps.
    Positions,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            iterations: 50_000,
            tol: 1e-3,
            step_scale: None,
            max_sweeps: 100,
            coordinates: Coordinates::Increments,
        }
    }
}

/// Grid parameters used by [`grid_dp_oracle_1d`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub grid_step: f64,
    pub radius: f64,
    pub points: usize,
    /// A priori bound on the discretization error of the reported optimum.
    pub error_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub trace: Trace,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Excess of this objective over an independent oracle, when one was run.
    pub certified_gap: Option<f64>,
    pub grid: Option<GridParams>,
}

/// Solves with default settings and the given tolerance.
pub fn solve_offline(instance: &Instance, tol: f64) -> Result<SolverReport> {
    let settings = SolverSettings {
        tol,
        ..SolverSettings::default()
    };
    solve_offline_with(instance, &settings, &[])
}

/// Projected subgradient descent on `P_1..P_T`, warm-started from the
/// un-augmented online trace. Extra feasible traces may be supplied as
/// further starting candidates; the best one seeds the descent.
pub fn solve_offline_with(
    instance: &Instance,
    settings: &SolverSettings,
    warm_starts: &[Trace],
) -> Result<SolverReport> {
    let violations = model::validate(instance);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance must be positive, got {}",
            settings.tol
        )));
    }

    let problem = Problem::new(instance);
    let m = instance.move_limit;

    let policy = match instance.variant {
        Variant::MovingClient => Policy::MtcMovingClient,
        _ => Policy::Mtc,
    };
    let seed = algorithms::run_online(instance, policy, &PolicyConfig::new(0.0)?)?;
    let mut x = problem.flatten(&seed);
    let mut f = problem.objective(&x);
    for w in warm_starts {
        if w.positions.len() != instance.len() + 1 || w.positions[0] != instance.start {
            return Err(Error::LengthMismatch {
                expected: instance.len() + 1,
                found: w.positions.len(),
            });
        }
        if w.max_displacement() > m + MOVE_SLACK {
            continue;
        }
        let wx = problem.flatten(w);
        let wf = problem.objective(&wx);
        if wf < f {
            x = wx;
            f = wf;
        }
    }
    problem.clamp_forward(&mut x);
    f = problem.objective(&x);

    let scale = 1.0 + model::total_cost(instance, &Trace::stationary(instance))?;
    let c = settings.step_scale.unwrap_or(m);
    let mut best = (x.clone(), f);
    let mut best_at_half = f;
    let half = settings.iterations / 2;
    let mut g = vec![0.0; x.len()];
    let mut scratch = vec![0.0; x.len()];

    for k in 1..=settings.iterations {
        if k == half + 1 {
            best_at_half = best.1;
        }
        problem.subgradient(&x, &mut g);
        let gmax = problem.max_block_norm(&g);
        if gmax == 0.0 {
            // Zero subgradient: optimal.
            break;
        }
        let reach = c / (k as f64).sqrt();
        match settings.coordinates {
            Coordinates::Increments => problem.increment_step(&mut x, &g, &mut scratch, reach),
            Coordinates::Positions => {
                let step = reach / gmax;
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= step * gi;
                }
                problem.project(&mut x, settings.max_sweeps, SWEEP_TOL * reach);
            }
        }
        let fx = problem.objective(&x);
        if fx < best.1 {
            best = (x.clone(), fx);
        }
    }

    let converged = best_at_half - best.1 <= settings.tol * scale;
    if problem.dim == 1 {
        problem.polish_line(&mut best.0);
    }
    let trace = problem.unflatten(instance, &best.0)?;
    let objective = model::total_cost(instance, &trace)?;
    Ok(SolverReport {
        trace,
        objective,
        iterations: settings.iterations,
        converged,
        certified_gap: None,
        grid: None,
    })
}

/// Flat view of the offline objective over `P_1..P_T`.
struct Problem<'a> {
    instance: &'a Instance,
    dim: usize,
    steps: usize,
    m: f64,
    d: f64,
}

impl<'a> Problem<'a> {
    fn new(instance: &'a Instance) -> Self {
        Problem {
            instance,
            dim: instance.dimension,
            steps: instance.len(),
            m: instance.move_limit,
            d: instance.move_cost,
        }
    }

    fn flatten(&self, trace: &Trace) -> Vec<f64> {
        trace.positions[1..]
            .iter()
            .flat_map(|p| p.coords().iter().copied())
            .collect()
    }

    fn unflatten(&self, instance: &Instance, x: &[f64]) -> Result<Trace> {
        let mut positions = Vec::with_capacity(self.steps + 1);
        positions.push(instance.start.clone());
        positions.extend(x.chunks(self.dim).map(|c| Point::from_raw(c.to_vec())));
        Trace::from_positions(instance, positions, self.m)
    }

    #[inline]
    fn pos<'b>(&'b self, x: &'b [f64], t: usize) -> &'b [f64] {
        if t == 0 {
            self.instance.start.coords()
        } else {
            &x[(t - 1) * self.dim..t * self.dim]
        }
    }

    /// Index of the batch served from position `t`, if any.
    #[inline]
    fn served_batch(&self, t: usize) -> Option<usize> {
        match self.instance.variant {
            Variant::AnswerFirst => (t < self.steps).then_some(t),
            _ => t.checked_sub(1),
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in 1..=self.steps {
            total += self.d * crate::geometry::dist_raw(self.pos(x, t - 1), self.pos(x, t));
        }
        for t in 0..=self.steps {
            if let Some(b) = self.served_batch(t) {
                let p = self.pos(x, t);
                for v in &self.instance.batches[b].requests {
                    total += crate::geometry::dist_raw(v.coords(), p);
                }
            }
        }
        total
    }

    fn subgradient(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        let dim = self.dim;
        let mut diff = vec![0.0; dim];
        let mut add_unit = |g: &mut [f64], a: &[f64], b: &[f64], w: f64| {
            for k in 0..dim {
                diff[k] = a[k] - b[k];
            }
            let n = norm(&diff);
            if n > 1e-14 {
                for k in 0..dim {
                    g[k] += w * diff[k] / n;
                }
            }
        };
        for t in 1..=self.steps {
            let gt = &mut g[(t - 1) * dim..t * dim];
            add_unit(gt, self.pos(x, t), self.pos(x, t - 1), self.d);
            if t < self.steps {
                add_unit(gt, self.pos(x, t), self.pos(x, t + 1), self.d);
            }
            if let Some(b) = self.served_batch(t) {
                for v in &self.instance.batches[b].requests {
                    add_unit(gt, self.pos(x, t), v.coords(), 1.0);
                }
            }
        }
    }

    fn max_block_norm(&self, g: &[f64]) -> f64 {
        g.chunks(self.dim).map(norm).fold(0.0, f64::max)
    }

    /// Pulls the pair `(P_{t-1}, P_t)` together if it violates the limit.
    /// `P_0` is fixed, so the first pair moves only `P_1`.
    fn project_pair(&self, x: &mut [f64], t: usize) -> f64 {
        let dim = self.dim;
        if t == 1 {
            let start = self.instance.start.coords();
            let cur = &mut x[..dim];
            let dist = crate::geometry::dist_raw(start, cur);
            let excess = dist - self.m;
            if excess <= 0.0 {
                return 0.0;
            }
            for k in 0..dim {
                cur[k] -= excess * (cur[k] - start[k]) / dist;
            }
            return excess;
        }
        let (head, tail) = x.split_at_mut((t - 1) * dim);
        let prev = &mut head[(t - 2) * dim..];
        let cur = &mut tail[..dim];
        let dist = crate::geometry::dist_raw(prev, cur);
        let excess = dist - self.m;
        if excess <= 0.0 {
            return 0.0;
        }
        let half = 0.5 * excess / dist;
        for k in 0..dim {
            let shift = half * (cur[k] - prev[k]);
            cur[k] -= shift;
            prev[k] += shift;
        }
        excess
    }

    /// Gauss-Seidel passes on the line: each position is moved to the exact
    /// minimizer of its own terms within the interval its neighbours allow.
    /// Never increases the objective.
    fn polish_line(&self, x: &mut [f64]) {
        let n = x.len();
        let start = self.instance.start.x();
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let mut f = self.objective(x);
        for _ in 0..POLISH_PASSES {
            for i in 0..n {
                let t = i + 1;
                let a = if i == 0 { start } else { x[i - 1] };
                pts.clear();
                pts.push((a, self.d));
                let (mut lo_lim, mut hi_lim) = (a - self.m, a + self.m);
                if i + 1 < n {
                    let b = x[i + 1];
                    pts.push((b, self.d));
                    lo_lim = lo_lim.max(b - self.m);
                    hi_lim = hi_lim.min(b + self.m);
                }
                if lo_lim > hi_lim {
                    continue;
                }
                if let Some(bi) = self.served_batch(t) {
                    pts.extend(
                        self.instance.batches[bi]
                            .requests
                            .iter()
                            .map(|v| (v.x(), 1.0)),
                    );
                }
                let (lo, hi) = weighted_median_interval(&mut pts);
                x[i] = x[i].clamp(lo, hi).clamp(lo_lim, hi_lim);
            }
            let next = self.objective(x);
            let gain = f - next;
            f = next;
            if gain <= 1e-12 * (1.0 + f) {
                break;
            }
        }
    }

    /// One normalized subgradient step in increment coordinates. The gradient
    /// with respect to `u_s` is the suffix sum of the position gradient.
    fn increment_step(&self, x: &mut [f64], g: &[f64], gu: &mut [f64], reach: f64) {
        let dim = self.dim;
        let n = x.len();
        gu.copy_from_slice(g);
        for i in (0..n - dim).rev() {
            gu[i] += gu[i + dim];
        }
        let gmax = self.max_block_norm(gu);
        if gmax == 0.0 {
            return;
        }
        let step = reach / gmax;
        let start = self.instance.start.coords();
        // Walk forward, rebuilding positions from clamped increments in place.
        let mut po = start.to_vec();
        let mut pn = start.to_vec();
        let mut inc = vec![0.0; dim];
        for t in 0..n / dim {
            let block = &mut x[t * dim..(t + 1) * dim];
            for j in 0..dim {
                inc[j] = block[j] - po[j] - step * gu[t * dim + j];
                po[j] = block[j];
            }
            let len = norm(&inc);
            let s = if len > self.m { self.m / len } else { 1.0 };
            for j in 0..dim {
                pn[j] += s * inc[j];
                block[j] = pn[j];
            }
        }
    }

    /// Cyclic forward/backward projections onto the chained move limits until
    /// no pair exceeds the limit by more than `tol`, finished by a one-sided
    /// forward clamp that guarantees feasibility.
    fn project(&self, x: &mut [f64], max_sweeps: usize, tol: f64) {
        if self.dim == 1 {
            self.project_line(x, max_sweeps, tol);
            self.clamp_forward(x);
            return;
        }
        for _ in 0..max_sweeps {
            let mut worst: f64 = 0.0;
            for t in 1..=self.steps {
                worst = worst.max(self.project_pair(x, t));
            }
            for t in (1..=self.steps).rev() {
                worst = worst.max(self.project_pair(x, t));
            }
            if worst <= tol {
                break;
            }
        }
        self.clamp_forward(x);
    }

    /// Same sweeps as [`Problem::project`] specialised to the line.
    fn project_line(&self, x: &mut [f64], max_sweeps: usize, tol: f64) {
        let m = self.m;
        let start = self.instance.start.x();
        let n = x.len();
        for _ in 0..max_sweeps {
            let mut worst: f64 = 0.0;
            // Forward pass with P_0 fixed, carrying the moving endpoint.
            let mut prev = start;
            for t in 0..n {
                let mut cur = x[t];
                let gap = cur - prev;
                let excess = gap.abs() - m;
                if excess > 0.0 {
                    worst = worst.max(excess);
                    if t == 0 {
                        cur -= excess * gap.signum();
                    } else {
                        let shift = 0.5 * excess * gap.signum();
                        cur -= shift;
                        x[t - 1] = prev + shift;
                    }
                }
                x[t] = cur;
                prev = cur;
            }
            // Backward pass.
            let mut next = x[n - 1];
            for t in (0..n.saturating_sub(1)).rev() {
                let mut cur = x[t];
                let gap = next - cur;
                let excess = gap.abs() - m;
                if excess > 0.0 {
                    worst = worst.max(excess);
                    let shift = 0.5 * excess * gap.signum();
                    cur += shift;
                    x[t + 1] = next - shift;
                }
                x[t] = cur;
                next = cur;
            }
            let excess = (x[0] - start).abs() - m;
            if excess > 0.0 {
                worst = worst.max(excess);
                x[0] -= excess * (x[0] - start).signum();
            }
            if worst <= tol {
                break;
            }
        }
    }

    fn clamp_forward(&self, x: &mut [f64]) {
        let dim = self.dim;
        for t in 1..=self.steps {
            let (head, tail) = x.split_at_mut((t - 1) * dim);
            let prev = if t == 1 {
                self.instance.start.coords()
            } else {
                &head[(t - 2) * dim..]
            };
            let cur = &mut tail[..dim];
            let dist = crate::geometry::dist_raw(prev, cur);
            if dist > self.m {
                let s = self.m / dist;
                for k in 0..dim {
                    cur[k] = prev[k] + s * (cur[k] - prev[k]);
                }
            }
        }
    }
}

/// Exact optimum over the positions `start + k * grid_step`, `|k * grid_step| <= radius`,
/// by dynamic programming over the steps.
pub fn grid_dp_oracle_1d(instance: &Instance, grid_step: f64, radius: f64) -> Result<SolverReport> {
    let violations = model::validate(instance);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    if instance.dimension != 1 {
        return Err(Error::Unsupported(format!(
            "grid oracle needs a 1-dimensional instance, got dimension {}",
            instance.dimension
        )));
    }
    if !(grid_step > 0.0) || !(radius >= grid_step) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < grid_step <= radius, got {grid_step} and {radius}"
        )));
    }
    let start = instance.start.x();
    for (t, b) in instance.batches.iter().enumerate() {
        if let Some(v) = b
            .requests
            .iter()
            .find(|v| (v.x() - start).abs() > radius + 1e-12)
        {
            return Err(Error::InvalidParameter(format!(
                "step {t}: request at {} lies outside radius {radius} around the start",
                v.x()
            )));
        }
    }

    let half = (radius / grid_step + 1e-9).floor() as usize;
    let n = 2 * half + 1;
    let steps = instance.len();
    if n.saturating_mul(steps) > MAX_GRID_CELLS {
        return Err(Error::InvalidParameter(format!(
            "grid of {n} points over {steps} steps exceeds the cell budget"
        )));
    }
    let xs: Vec<f64> = (0..n)
        .map(|j| start + (j as f64 - half as f64) * grid_step)
        .collect();
    let window = (instance.move_limit / grid_step + 1e-9).floor() as usize;
    let unit = instance.move_cost * grid_step;
    let serve = |t: usize| -> Vec<f64> {
        xs.iter()
            .map(|&x| {
                instance.batches[t]
                    .requests
                    .iter()
                    .map(|v| (v.x() - x).abs())
                    .sum()
            })
            .collect()
    };

    let mut value = vec![f64::INFINITY; n];
    value[half] = 0.0;
    let mut parents: Vec<Vec<u32>> = Vec::with_capacity(steps);
    let mut next = vec![0.0; n];
    for t in 0..steps {
        let cost = serve(t);
        if instance.variant == Variant::AnswerFirst {
            for (v, c) in value.iter_mut().zip(&cost) {
                *v += c;
            }
        }
        let mut parent = vec![0u32; n];
        windowed_move_min(&value, window, unit, &mut next, &mut parent);
        if instance.variant != Variant::AnswerFirst {
            for (v, c) in next.iter_mut().zip(&cost) {
                *v += c;
            }
        }
        std::mem::swap(&mut value, &mut next);
        parents.push(parent);
    }

    let mut j = (0..n)
        .min_by(|&a, &b| value[a].total_cmp(&value[b]))
        .expect("non-empty grid");
    let mut idx = vec![0usize; steps + 1];
    idx[steps] = j;
    for t in (0..steps).rev() {
        j = parents[t][j] as usize;
        idx[t] = j;
    }
    let positions = idx
        .iter()
        .enumerate()
        .map(|(t, &j)| {
            if t == 0 {
                instance.start.clone()
            } else {
                Point::from_raw(vec![xs[j]])
            }
        })
        .collect();
    let trace = Trace::from_positions(instance, positions, instance.move_limit)?;
    let objective = model::total_cost(instance, &trace)?;
    let requests: usize = instance.batches.iter().map(|b| b.len()).sum();
    Ok(SolverReport {
        trace,
        objective,
        iterations: steps,
        converged: true,
        certified_gap: None,
        grid: Some(GridParams {
            grid_step,
            radius,
            points: n,
            error_bound: grid_step * (steps as f64 * instance.move_cost + requests as f64),
        }),
    })
}

/// `out[j] = min_{|i-j| <= w} value[i] + unit * |i - j|`, with argmins.
fn windowed_move_min(value: &[f64], w: usize, unit: f64, out: &mut [f64], arg: &mut [u32]) {
    let n = value.len();
    out.iter_mut().for_each(|v| *v = f64::INFINITY);
    // Sources at or left of j: value[i] - unit * i, shifted by unit * j.
    let key_l = |i: usize| value[i] - unit * i as f64;
    let mut dq: VecDeque<usize> = VecDeque::new();
    for j in 0..n {
        while dq.back().is_some_and(|&b| key_l(b) >= key_l(j)) {
            dq.pop_back();
        }
        dq.push_back(j);
        while dq.front().is_some_and(|&f| f + w < j) {
            dq.pop_front();
        }
        let i = *dq.front().expect("non-empty");
        let v = key_l(i) + unit * j as f64;
        if v < out[j] {
            out[j] = v;
            arg[j] = i as u32;
        }
    }
    // Sources at or right of j: value[i] + unit * i, shifted by -unit * j.
    let key_r = |i: usize| value[i] + unit * i as f64;
    dq.clear();
    for j in (0..n).rev() {
        while dq.back().is_some_and(|&b| key_r(b) >= key_r(j)) {
            dq.pop_back();
        }
        dq.push_back(j);
        while dq.front().is_some_and(|&f| f > j + w) {
            dq.pop_front();
        }
        let i = *dq.front().expect("non-empty");
        let v = key_r(i) - unit * j as f64;
        if v < out[j] {
            out[j] = v;
            arg[j] = i as u32;
        }
    }
}

/// Runs the grid oracle and records `solver - oracle` (floored at 0) in the report.
pub fn certify_1d(
    report: &mut SolverReport,
    instance: &Instance,
    grid_step: f64,
    radius: f64,
) -> Result<SolverReport> {
    let oracle = grid_dp_oracle_1d(instance, grid_step, radius)?;
    report.certified_gap = Some((report.objective - oracle.objective).max(0.0));
    Ok(oracle)
}

/// Smallest radius around the start covering every request, and a grid step
/// no finer than `requested` that keeps the oracle within [`MAX_GRID_CELLS`].
/// Coarsened steps are snapped to `1 / n` so integer offsets stay on the grid.
pub fn auto_grid_1d(instance: &Instance, requested: f64) -> (f64, f64) {
    let start = instance.start.x();
    let radius = instance
        .batches
        .iter()
        .flat_map(|b| b.requests.iter())
        .map(|v| (v.x() - start).abs())
        .fold(0.0, f64::max)
        .max(instance.move_limit);
    let cells_per_unit =
        (MAX_GRID_CELLS as f64 / instance.len().max(1) as f64 - 1.0) / (2.0 * radius);
    let floor_step = 1.0 / cells_per_unit;
    let step = if requested >= floor_step {
        requested
    } else if floor_step < 1.0 {
        1.0 / (1.0 / floor_step).floor()
    } else {
        floor_step.ceil()
    };
    (step, radius)
}

/// Solver result plus, on the line, the grid oracle run against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimumEstimate {
    pub solver: SolverReport,
    pub oracle: Option<SolverReport>,
}

impl OptimumEstimate {
    /// The cheaper of the two feasible traces.
    pub fn best(&self) -> &SolverReport {
        match &self.oracle {
            Some(o) if o.objective < self.solver.objective => o,
            _ => &self.solver,
        }
    }

    pub fn objective(&self) -> f64 {
        self.best().objective
    }
}

/// Runs the solver and, for 1D instances when `grid_step` is given, the grid
/// oracle at that resolution or the finest one within budget.
pub fn estimate_optimum(
    instance: &Instance,
    settings: &SolverSettings,
    warm_starts: &[Trace],
    grid_step: Option<f64>,
) -> Result<OptimumEstimate> {
    let mut solver = solve_offline_with(instance, settings, warm_starts)?;
    let oracle = match grid_step {
        Some(h) if instance.dimension == 1 => {
            let (step, radius) = auto_grid_1d(instance, h);
            Some(certify_1d(&mut solver, instance, step, radius)?)
        }
        _ => None,
    };
    Ok(OptimumEstimate { solver, oracle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RequestBatch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p1(x: f64) -> Point {
        Point::new(vec![x]).unwrap()
    }

    fn line(start: f64, m: f64, d: f64, batches: &[&[f64]]) -> Instance {
        Instance::new(
            Variant::Standard,
            p1(start),
            m,
            d,
            batches
                .iter()
                .map(|b| RequestBatch::new(b.iter().map(|&x| p1(x)).collect()))
                .collect(),
        )
    }

    #[test]
    fn idle_instance_has_zero_optimum() {
        let inst = line(0.0, 1.0, 2.0, &[&[0.0, 0.0], &[0.0]]);
        let rep = solve_offline(&inst, 1e-6).unwrap();
        assert_eq!(rep.objective, 0.0);
        let oracle = grid_dp_oracle_1d(&inst, 1e-3, 1.0).unwrap();
        assert_eq!(oracle.objective, 0.0);
    }

    #[test]
    fn single_step_prefers_staying() {
        // Moving x toward the request costs 2x + (5 - x) = 5 + x.
        let inst = line(0.0, 1.0, 2.0, &[&[5.0]]);
        let oracle = grid_dp_oracle_1d(&inst, 1e-3, 6.0).unwrap();
        assert!((oracle.objective - 5.0).abs() < 1e-9);
        let rep = solve_offline(&inst, 1e-6).unwrap();
        assert!((rep.objective - 5.0).abs() < 1e-6, "{}", rep.objective);
    }

    #[test]
    fn three_steps_match_oracle() {
        let inst = line(0.0, 1.0, 1.0, &[&[5.0], &[5.0], &[5.0]]);
        let oracle = grid_dp_oracle_1d(&inst, 1e-3, 6.0).unwrap();
        // Moving full speed: 1+4, 1+3, 1+2 = 12.
        assert!((oracle.objective - 12.0).abs() < 1e-9);
        let rep = solve_offline(&inst, 1e-6).unwrap();
        assert!((rep.objective - oracle.objective).abs() < 1e-2);
        assert!(rep.trace.max_displacement() <= 1.0 + 1e-9);
    }

    #[test]
    fn answer_first_oracle_ignores_final_move() {
        let mut inst = line(0.0, 1.0, 1.0, &[&[3.0], &[3.0]]);
        inst.variant = Variant::AnswerFirst;
        let oracle = grid_dp_oracle_1d(&inst, 1e-3, 4.0).unwrap();
        // Serve 3 at 0, move 1 (cost 1), serve 2: total 6; staying costs 6 too.
        assert!((oracle.objective - 6.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_errors() {
        let inst = line(0.0, 1.0, 1.0, &[&[5.0]]);
        assert!(grid_dp_oracle_1d(&inst, 1e-3, 4.0).is_err());
        let two_d = Instance::new(
            Variant::Standard,
            Point::origin(2),
            1.0,
            1.0,
            vec![RequestBatch::repeated(&Point::origin(2), 1)],
        );
        assert!(matches!(
            grid_dp_oracle_1d(&two_d, 1e-3, 4.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn nested_grid_refinement_does_not_raise_optimum() {
        let inst = line(0.0, 0.7, 1.5, &[&[2.0, -1.0], &[3.0], &[3.3, 0.2]]);
        let coarse = grid_dp_oracle_1d(&inst, 1e-2, 5.0).unwrap();
        let fine = grid_dp_oracle_1d(&inst, 1e-3, 5.0).unwrap();
        assert!(fine.objective <= coarse.objective + 1e-9);
        assert!(coarse.objective - fine.objective <= coarse.grid.unwrap().error_bound);
    }

    #[test]
    fn windowed_min_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let w = rng.gen_range(0..6);
            let value: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        f64::INFINITY
                    } else {
                        rng.gen_range(0.0..10.0)
                    }
                })
                .collect();
            let mut out = vec![0.0; n];
            let mut arg = vec![0; n];
            windowed_move_min(&value, w, 0.7, &mut out, &mut arg);
            for j in 0..n {
                let lo = j.saturating_sub(w);
                let hi = (j + w).min(n - 1);
                let brute = (lo..=hi)
                    .map(|i| value[i] + 0.7 * (i as f64 - j as f64).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(out[j] == brute || (out[j] - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solver_beats_every_policy_trace() {
        let inst = line(
            0.0,
            1.0,
            2.0,
            &[&[3.0, 4.0], &[-1.0], &[2.0, 2.0, 2.0], &[5.0]],
        );
        let rep = solve_offline(&inst, 1e-6).unwrap();
        let cfg = PolicyConfig::new(0.0).unwrap();
        for pol in [Policy::Mtc, Policy::Static, Policy::FollowCenter] {
            let tr = algorithms::run_online(&inst, pol, &cfg).unwrap();
            assert!(rep.objective <= tr.total() + 1e-6);
        }
    }

    #[test]
    fn solver_translation_invariant() {
        let inst = line(0.0, 1.0, 2.0, &[&[3.0, 4.0], &[-1.0], &[2.0, 2.0, 2.0]]);
        let a = solve_offline(&inst, 1e-6).unwrap().objective;
        let b = solve_offline(&inst.translated(&p1(123.25)), 1e-6)
            .unwrap()
            .objective;
        assert!((a - b).abs() <= 1e-3 * (1.0 + a), "{a} vs {b}");
    }

    #[test]
    fn solver_handles_moving_client() {
        let path: Vec<Point> = (1..=6).map(|t| p1(t as f64)).collect();
        let inst = Instance::moving_client(p1(0.0), 1.0, 1.0, 2.0, path);
        let rep = solve_offline(&inst, 1e-6).unwrap();
        // Following the agent exactly costs D per step.
        assert!(rep.objective <= 12.0 + 1e-6);
        let oracle = grid_dp_oracle_1d(&inst, 1e-3, 7.0).unwrap();
        assert!((rep.objective - oracle.objective).abs() <= 0.01 * oracle.objective + 1e-6);
    }

    #[test]
    fn weighted_median_interval_cases() {
        let mut pts = vec![(3.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
        assert_eq!(weighted_median_interval(&mut pts), (2.0, 2.0));
        let mut pts = vec![(0.0, 1.0), (5.0, 1.0)];
        assert_eq!(weighted_median_interval(&mut pts), (0.0, 5.0));
        let mut pts = vec![(0.0, 2.0), (5.0, 1.0), (9.0, 1.0)];
        assert_eq!(weighted_median_interval(&mut pts), (0.0, 5.0));
        let mut pts = vec![(0.0, 2.5), (5.0, 1.0), (9.0, 1.0)];
        assert_eq!(weighted_median_interval(&mut pts), (0.0, 0.0));
    }

    #[test]
    fn both_coordinate_modes_reach_the_oracle() {
        let inst = line(
            0.0,
            1.0,
            2.0,
            &[&[3.0, 3.0, 3.0], &[3.0, 3.0, 3.0], &[-1.0], &[4.0, 4.0]],
        );
        let oracle = grid_dp_oracle_1d(&inst, 1e-3, 5.0).unwrap();
        for coordinates in [Coordinates::Increments, Coordinates::Positions] {
            let settings = SolverSettings {
                iterations: 5_000,
                coordinates,
                ..SolverSettings::default()
            };
            let rep = solve_offline_with(&inst, &settings, &[]).unwrap();
            assert!(
                rep.objective <= oracle.objective * 1.01 + 1e-9,
                "{coordinates:?}: {}",
                rep.objective
            );
        }
    }

    #[test]
    fn long_drift_is_solved_exactly() {
        // One request per step running away at full speed: follow it, except
        // the last move, where serving from one unit behind is cheaper than D.
        let t = 300;
        let batches: Vec<Vec<f64>> = (1..=t).map(|k| vec![k as f64]).collect();
        let refs: Vec<&[f64]> = batches.iter().map(|b| b.as_slice()).collect();
        let inst = line(0.0, 1.0, 2.0, &refs);
        let rep = solve_offline(&inst, 1e-3).unwrap();
        assert!(
            (rep.objective - (2.0 * t as f64 - 1.0)).abs() < 1e-6,
            "{}",
            rep.objective
        );
    }

    #[test]
    fn warm_start_is_never_worse() {
        let inst = line(0.0, 1.0, 1.0, &[&[2.0], &[2.0], &[2.0]]);
        let warm =
            Trace::from_positions(&inst, vec![p1(0.0), p1(1.0), p1(2.0), p1(2.0)], 1.0).unwrap();
        let rep = solve_offline_with(
            &inst,
            &SolverSettings {
                iterations: 10,
                ..SolverSettings::default()
            },
            &[warm.clone()],
        )
        .unwrap();
        assert!(rep.objective <= warm.total() + 1e-12);
    }

    #[test]
    fn auto_grid_respects_budget() {
        let inst = line(0.0, 1.0, 2.0, &[&[-4.0], &[2.5]]);
        assert_eq!(auto_grid_1d(&inst, 1e-3), (1e-3, 4.0));
        let far: Vec<Vec<f64>> = (1..=2000).map(|k| vec![k as f64]).collect();
        let refs: Vec<&[f64]> = far.iter().map(|b| b.as_slice()).collect();
        let inst = line(0.0, 1.0, 2.0, &refs);
        let (h, radius) = auto_grid_1d(&inst, 1e-3);
        assert_eq!(radius, 2000.0);
        assert!((2.0 * radius / h + 1.0) * 2000.0 <= MAX_GRID_CELLS as f64);
        assert_eq!((1.0 / h).fract(), 0.0);
    }

    #[test]
    fn estimate_keeps_the_cheaper_trace() {
        let inst = line(0.0, 1.0, 2.0, &[&[1.0, 1.0, 1.0], &[-2.0]]);
        let est = estimate_optimum(&inst, &SolverSettings::default(), &[], Some(1e-3)).unwrap();
        let oracle = est.oracle.as_ref().unwrap();
        assert_eq!(est.objective(), est.solver.objective.min(oracle.objective));
        assert!(est.solver.certified_gap.is_some());
        let plane = Instance::new(
            Variant::Standard,
            Point::origin(2),
            1.0,
            2.0,
            vec![RequestBatch::repeated(
                &Point::new(vec![1.0, 1.0]).unwrap(),
                2,
            )],
        );
        let est = estimate_optimum(&plane, &SolverSettings::default(), &[], Some(1e-3)).unwrap();
        assert!(est.oracle.is_none());
    }
}
