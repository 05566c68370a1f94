//! Euclidean primitives: points, distances, clamped moves and the geometric
//! median with tie-breaking toward an anchor.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tolerance for [`geometric_median`].
pub const DEFAULT_MEDIAN_TOL: f64 = 1e-9;

/// Weiszfeld iteration cap.
pub const MAX_WEISZFELD_ITERS: usize = 10_000;

/// Distance below which an iterate is treated as sitting on an input point.
const COINCIDENCE_EPS: f64 = 1e-12;

/// A position in d-dimensional Euclidean space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate {bad}"
            )));
        }
        Ok(Point(coords))
    }

    /// The origin of the given dimension.
    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Point(vec![0.0; dim])
    }

    /// A point on the first axis, padded with zeros to `dim` coordinates.
    pub fn on_axis(dim: usize, x: f64) -> Self {
        let mut p = Point::origin(dim);
        p.0[0] = x;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    /// `self + w`.
    pub fn translated(&self, w: &Point) -> Point {
        Point(self.0.iter().zip(&w.0).map(|(a, b)| a + b).collect())
    }

    /// Reflection through `center`.
    pub fn reflected(&self, center: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&center.0)
                .map(|(a, c)| 2.0 * c - a)
                .collect(),
        )
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Point {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

pub(crate) fn check_dim(a: &Point, b: &Point) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dist_raw(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    check_dim(a, b)?;
    Ok(dist_raw(&a.0, &b.0))
}

/// Moves from `from` toward `target` by at most `max_dist`, never overshooting.
pub fn clamp_move(from: &Point, target: &Point, max_dist: f64) -> Result<Point> {
    check_dim(from, target)?;
    if !(max_dist >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max_dist must be non-negative, got {max_dist}"
        )));
    }
    Ok(clamp_move_raw(from, target, max_dist))
}

pub(crate) fn clamp_move_raw(from: &Point, target: &Point, max_dist: f64) -> Point {
    let d = dist_raw(&from.0, &target.0);
    if d <= max_dist {
        return target.clone();
    }
    let s = max_dist / d;
    Point(
        from.0
            .iter()
            .zip(&target.0)
            .map(|(f, t)| f + s * (t - f))
            .collect(),
    )
}

/// Sum of distances from `c` to every point.
pub fn median_objective(points: &[Point], c: &Point) -> f64 {
    points.iter().map(|v| dist_raw(&v.0, &c.0)).sum()
}

/// Result of a geometric median computation.
#[derive(Clone, Debug, PartialEq)]
pub struct Median {
    pub point: Point,
    pub iterations: usize,
    /// Set when Weiszfeld hit [`MAX_WEISZFELD_ITERS`] before converging.
    pub hit_iteration_cap: bool,
}

/// Minimizer of the sum of distances to `points`; among several minimizers,
/// the one closest to `anchor`.
///
/// One-dimensional (and collinear) inputs are solved exactly by sorting.
/// Otherwise the minimizer is unique and found by Weiszfeld iteration with
/// the Vardi-Zhang correction at input points.
pub fn geometric_median(points: &[Point], anchor: &Point, tol: f64) -> Result<Median> {
    let first = points.first().ok_or(Error::Empty("median point set"))?;
    for p in points {
        check_dim(first, p)?;
    }
    check_dim(first, anchor)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "median tolerance must be positive, got {tol}"
        )));
    }

    let exact = |point| Median {
        point,
        iterations: 0,
        hit_iteration_cap: false,
    };

    if points.len() == 1 {
        return Ok(exact(first.clone()));
    }
    if first.dim() == 1 {
        let values: Vec<f64> = points.iter().map(|p| p.0[0]).collect();
        return Ok(exact(Point(vec![median_1d(&values, anchor.0[0])])));
    }
    if let Some(p) = collinear_median(points, anchor) {
        return Ok(exact(p));
    }
    Ok(weiszfeld(points, tol))
}

/// Exact 1D median; for even counts the middle interval is clamped toward `anchor`.
pub(crate) fn median_1d(values: &[f64], anchor: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        anchor.clamp(v[n / 2 - 1], v[n / 2])
    }
}

/// Handles point sets lying on a single line by reduction to 1D.
/// Returns `None` when the points span more than a line.
fn collinear_median(points: &[Point], anchor: &Point) -> Option<Point> {
    let base = &points[0];
    let (far, far_d) = points
        .iter()
        .map(|p| (p, dist_raw(&p.0, &base.0)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if far_d == 0.0 {
        return Some(base.clone());
    }
    let dir: Vec<f64> = far
        .0
        .iter()
        .zip(&base.0)
        .map(|(f, b)| (f - b) / far_d)
        .collect();
    let project = |p: &Point| -> f64 {
        p.0.iter()
            .zip(&base.0)
            .zip(&dir)
            .map(|((x, b), u)| (x - b) * u)
            .sum()
    };
    let scale = 1.0 + far_d;
    let mut ts = Vec::with_capacity(points.len());
    for p in points {
        let t = project(p);
        let off: Vec<f64> =
            p.0.iter()
                .zip(&base.0)
                .zip(&dir)
                .map(|((x, b), u)| x - b - t * u)
                .collect();
        if norm(&off) > 1e-12 * scale {
            return None;
        }
        ts.push((t, p));
    }
    ts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = ts.len();
    if n % 2 == 1 {
        return Some(ts[n / 2].1.clone());
    }
    let (lo, lo_p) = ts[n / 2 - 1];
    let (hi, hi_p) = ts[n / 2];
    let t = project(anchor);
    if t <= lo {
        Some(lo_p.clone())
    } else if t >= hi {
        Some(hi_p.clone())
    } else {
        Some(Point(
            base.0.iter().zip(&dir).map(|(b, u)| b + t * u).collect(),
        ))
    }
}

fn weiszfeld(points: &[Point], tol: f64) -> Median {
    let dim = points[0].dim();
    let n = points.len() as f64;
    let mut y = vec![0.0; dim];
    for p in points {
        for (acc, x) in y.iter_mut().zip(&p.0) {
            *acc += x / n;
        }
    }
    let objective = |y: &[f64]| -> f64 { points.iter().map(|v| dist_raw(&v.0, y)).sum() };

    let mut obj = objective(&y);
    let mut best = (y.clone(), obj);
    let mut iterations = 0;
    let mut converged = false;
    let mut num = vec![0.0; dim];
    let mut pull = vec![0.0; dim];

    while iterations < MAX_WEISZFELD_ITERS {
        iterations += 1;
        num.iter_mut().for_each(|x| *x = 0.0);
        pull.iter_mut().for_each(|x| *x = 0.0);
        let mut denom = 0.0;
        let mut multiplicity = 0usize;
        for v in points {
            let d = dist_raw(&v.0, &y);
            if d < COINCIDENCE_EPS {
                multiplicity += 1;
                continue;
            }
            let w = 1.0 / d;
            denom += w;
            for k in 0..dim {
                num[k] += w * v.0[k];
                pull[k] += w * (v.0[k] - y[k]);
            }
        }
        if denom == 0.0 {
            converged = true;
            break;
        }
        let mapped: Vec<f64> = num.iter().map(|x| x / denom).collect();
        let next = if multiplicity > 0 {
            let r = norm(&pull);
            // Subgradient optimality at an input point.
            if r <= multiplicity as f64 {
                converged = true;
                break;
            }
            let mix = multiplicity as f64 / r;
            mapped
                .iter()
                .zip(&y)
                .map(|(t, yk)| (1.0 - mix) * t + mix * yk)
                .collect()
        } else {
            mapped
        };
        let next_obj = objective(&next);
        if next_obj < best.1 {
            best = (next.clone(), next_obj);
        }
        let improvement = (obj - next_obj) / obj.max(f64::MIN_POSITIVE);
        y = next;
        obj = next_obj;
        if improvement < tol {
            converged = true;
            break;
        }
    }

    // The median is never worse than any input point.
    for p in points {
        let o = objective(&p.0);
        if o < best.1 {
            best = (p.0.clone(), o);
        }
    }

    Median {
        point: Point(best.0),
        iterations,
        hit_iteration_cap: !converged,
    }
}
