//! Potential functions, per-step amortized inequality checks, the geometric
//! lemma behind them, and competitive-ratio measurement.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize, Serializer};

use crate::geometry::{check_dim, dist_raw, Point};
use crate::model::{step_cost, Instance, Trace, Variant};
use crate::{Error, Result};

/// Potential family for the center-chasing analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// More requests per step than the move cost (`r > D`).
    HighR,
    /// `r <= D`; the potential is doubled.
    LowR,
}

impl Regime {
    /// `r == D` belongs to the low regime.
    pub fn for_requests(r_weight: usize, move_cost: f64) -> Regime {
        if r_weight as f64 > move_cost {
            Regime::HighR
        } else {
            Regime::LowR
        }
    }

    fn name(self) -> &'static str {
        match self {
            Regime::HighR => "high_r",
            Regime::LowR => "low_r",
        }
    }
}

/// Distance at which the center potential switches from linear to quadratic.
pub fn potential_threshold(r_weight: usize, delta: f64, m: f64, move_cost: f64) -> f64 {
    delta * move_cost * m / (4.0 * r_weight as f64)
}

/// Center-chasing potential of a server pair at distance `p_dist`:
/// `8 r/(delta m) d^2` above the threshold `delta D m / (4 r)`, else `2 D d`,
/// all doubled in the low regime. `r_weight` is `R_max` for variable batches.
pub fn potential(
    p_dist: f64,
    regime: Regime,
    r_weight: usize,
    delta: f64,
    m: f64,
    move_cost: f64,
) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::Unsupported(
            "potential is undefined for delta = 0".into(),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) || r_weight == 0 || !(m > 0.0) || !(move_cost >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "potential needs delta in (0, 1], r >= 1, m > 0, D >= 1; got {delta}, {r_weight}, {m}, {move_cost}"
        )));
    }
    if !(p_dist >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distance must be non-negative, got {p_dist}"
        )));
    }
    Ok(potential_raw(p_dist, regime, r_weight, delta, m, move_cost).0)
}

fn potential_raw(
    d: f64,
    regime: Regime,
    r_weight: usize,
    delta: f64,
    m: f64,
    move_cost: f64,
) -> (f64, Branch) {
    let scale = match regime {
        Regime::HighR => 1.0,
        Regime::LowR => 2.0,
    };
    let r = r_weight as f64;
    if d > potential_threshold(r_weight, delta, m, move_cost) {
        (scale * 8.0 * r / (delta * m) * d * d, Branch::Quadratic)
    } else {
        (scale * 2.0 * move_cost * d, Branch::Linear)
    }
}

/// Moving-client potential `2^{3/2} D d`.
pub fn potential_moving_client(p_dist: f64, move_cost: f64) -> f64 {
    2f64.powf(1.5) * move_cost * p_dist
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Linear,
    Quadratic,
}

/// Which potential the verifier evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Center {
        regime: Regime,
        r_weight: usize,
        delta: f64,
    },
    MovingClient,
}

impl PotentialSpec {
    /// The potential the analysis prescribes for `instance` at augmentation `delta`:
    /// `R_max` as weight, regime from `R_max` versus `D`.
    pub fn for_instance(instance: &Instance, delta: f64) -> PotentialSpec {
        match instance.variant {
            Variant::MovingClient => PotentialSpec::MovingClient,
            _ => {
                let r = instance.r_max();
                PotentialSpec::Center {
                    regime: Regime::for_requests(r, instance.move_cost),
                    r_weight: r,
                    delta,
                }
            }
        }
    }

    fn eval(&self, d: f64, m: f64, move_cost: f64) -> (f64, Option<Branch>) {
        match *self {
            PotentialSpec::Center {
                regime,
                r_weight,
                delta,
            } => {
                let (v, b) = potential_raw(d, regime, r_weight, delta, m, move_cost);
                (v, Some(b))
            }
            PotentialSpec::MovingClient => (potential_moving_client(d, move_cost), None),
        }
    }
}

/// Verifier constant: `300 / delta^{3/2}` in the plane and above, `300 / delta`
/// on the line, times `R_max / R_min`; `36` for the moving client.
pub fn default_k(instance: &Instance, delta: f64) -> f64 {
    if instance.variant == Variant::MovingClient {
        return 36.0;
    }
    let spread = (instance.r_max() as f64 / instance.r_min().max(1) as f64).max(1.0);
    let base = if instance.dimension == 1 {
        300.0 / delta
    } else {
        300.0 / delta.powf(1.5)
    };
    base * spread
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub phi_before: f64,
    pub phi_after: f64,
    pub delta_phi: f64,
    pub c_alg: f64,
    pub c_opt: f64,
    /// `K * c_opt - c_alg - delta_phi`.
    pub slack: f64,
    pub regime: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialLedger {
    pub rows: Vec<LedgerRow>,
    pub k: f64,
    pub potential: PotentialSpec,
    /// Center potentials are only proven for collapsed instances.
    pub not_collapsed: bool,
    pub tolerance: f64,
    pub min_slack: f64,
    pub violations: usize,
}

impl PotentialLedger {
    pub const CSV_HEADER: &'static str =
        "step,phi_before,phi_after,delta_phi,c_alg,c_opt,slack,regime";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.step, r.phi_before, r.phi_after, r.delta_phi, r.c_alg, r.c_opt, r.slack, r.regime
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "steps={} K={} min_slack={} violations={}{}",
            self.rows.len(),
            self.k,
            self.min_slack,
            self.violations,
            if self.not_collapsed {
                " not_collapsed"
            } else {
                ""
            }
        )
    }
}

fn check_trace(instance: &Instance, trace: &Trace, what: &str) -> Result<()> {
    if trace.positions.len() != instance.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: instance.len() + 1,
            found: trace.positions.len(),
        });
    }
    if trace.positions[0] != instance.start {
        return Err(Error::InvalidParameter(format!(
            "{what} trace does not begin at the start"
        )));
    }
    Ok(())
}

/// Checks `C_Alg + delta_phi <= K * C_Ref` step by step, where the potential is
/// evaluated on the distance between the two servers. A step counts as a
/// violation when its slack falls below `-tolerance`.
pub fn verify_step_inequality(
    instance: &Instance,
    alg_trace: &Trace,
    ref_trace: &Trace,
    k: f64,
    potential: &PotentialSpec,
    tolerance: f64,
) -> Result<PotentialLedger> {
    check_trace(instance, alg_trace, "algorithm")?;
    check_trace(instance, ref_trace, "reference")?;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "K must be positive, got {k}"
        )));
    }
    if let PotentialSpec::Center {
        delta, r_weight, ..
    } = potential
    {
        if !(*delta > 0.0 && *delta <= 1.0) || *r_weight == 0 {
            return Err(Error::Unsupported(format!(
                "center potential needs delta in (0, 1] and r >= 1, got {delta} and {r_weight}"
            )));
        }
    }
    let (m, dcost) = (instance.move_limit, instance.move_cost);
    let gap = |t: usize| {
        dist_raw(
            alg_trace.positions[t].coords(),
            ref_trace.positions[t].coords(),
        )
    };
    let family = match potential {
        PotentialSpec::Center { regime, .. } => regime.name(),
        PotentialSpec::MovingClient => "moving_client",
    };
    let branch_name = |b: Option<Branch>| match b {
        Some(Branch::Linear) => "lin",
        Some(Branch::Quadratic) => "quad",
        None => "",
    };

    let mut rows = Vec::with_capacity(instance.len());
    let (mut phi, mut branch) = potential.eval(gap(0), m, dcost);
    for t in 0..instance.len() {
        let (phi_after, branch_after) = potential.eval(gap(t + 1), m, dcost);
        let c_alg = step_cost(
            instance,
            t,
            &alg_trace.positions[t],
            &alg_trace.positions[t + 1],
        )?
        .total;
        let c_opt = step_cost(
            instance,
            t,
            &ref_trace.positions[t],
            &ref_trace.positions[t + 1],
        )?
        .total;
        let delta_phi = phi_after - phi;
        let regime = match potential {
            PotentialSpec::MovingClient => family.to_string(),
            _ => format!(
                "{family}:{}>{}",
                branch_name(branch),
                branch_name(branch_after)
            ),
        };
        rows.push(LedgerRow {
            step: t,
            phi_before: phi,
            phi_after,
            delta_phi,
            c_alg,
            c_opt,
            slack: k * c_opt - c_alg - delta_phi,
            regime,
        });
        phi = phi_after;
        branch = branch_after;
    }
    let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| r.slack < -tolerance).count();
    Ok(PotentialLedger {
        rows,
        k,
        potential: *potential,
        not_collapsed: matches!(potential, PotentialSpec::Center { .. })
            && !instance.is_collapsed(),
        tolerance,
        min_slack: if min_slack.is_finite() {
            min_slack
        } else {
            0.0
        },
        violations,
    })
}

/// Distances of one step of the two-server picture: the algorithm moves
/// `P_Alg -> P_Alg'` toward the center `c`, the reference moves `P_Opt -> P_Opt'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoConfig {
    pub a1: f64,
    pub a2: f64,
    pub s1: f64,
    pub s2: f64,
    pub p: f64,
    pub h: f64,
    pub h_prime: f64,
    pub q: f64,
}

impl GeoConfig {
    pub fn from_points(
        alg: &Point,
        alg_next: &Point,
        opt: &Point,
        opt_next: &Point,
        center: &Point,
    ) -> Result<GeoConfig> {
        for other in [alg_next, opt, opt_next, center] {
            check_dim(alg, other)?;
        }
        let d = |a: &Point, b: &Point| dist_raw(a.coords(), b.coords());
        Ok(GeoConfig {
            a1: d(alg, alg_next),
            a2: d(alg_next, center),
            s1: d(opt, opt_next),
            s2: d(opt_next, center),
            p: d(opt, alg),
            h: d(opt_next, alg),
            h_prime: d(opt, alg_next),
            q: d(opt_next, alg_next),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoCheck {
    pub premise_holds: bool,
    pub conclusion_holds: bool,
    /// `(h - q) - (1 + delta/2) / (1 + delta) * a1`.
    pub margin: f64,
}

/// If `s2 <= sqrt(delta) / (1 + delta/2) * a2` then
/// `h - q >= (1 + delta/2) / (1 + delta) * a1`. Both sides are evaluated;
/// the conclusion is accepted down to an absolute `1e-9`.
pub fn check_geo_lemma(cfg: &GeoConfig, delta: f64) -> GeoCheck {
    let premise_holds = cfg.s2 <= delta.sqrt() / (1.0 + 0.5 * delta) * cfg.a2;
    let margin = (cfg.h - cfg.q) - (1.0 + 0.5 * delta) / (1.0 + delta) * cfg.a1;
    GeoCheck {
        premise_holds,
        conclusion_holds: margin >= -1e-9,
        margin,
    }
}

/// Lower bound on `h - q` that holds for any `P_Opt'` within `s2 < a2` of the
/// center: `sqrt(1 - (s2/a2)^2) * a1`. The worst placement puts `P_Opt'` on
/// the tangent from `P_Alg'` to that circle. `None` when `s2 >= a2 > 0`.
pub fn tangent_bound(cfg: &GeoConfig) -> Option<f64> {
    if cfg.a2 == 0.0 {
        return (cfg.s2 == 0.0).then_some(cfg.a1);
    }
    let ratio = cfg.s2 / cfg.a2;
    (ratio < 1.0).then(|| (1.0 - ratio * ratio).sqrt() * cfg.a1)
}

/// Measured competitive ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// Positive algorithm cost against a zero optimum.
    Unbounded,
}

impl Ratio {
    pub fn value(self) -> f64 {
        match self {
            Ratio::Finite(v) => v,
            Ratio::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(v) => write!(f, "{v}"),
            Ratio::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(v) => s.serialize_f64(*v),
            Ratio::Unbounded => s.serialize_str("inf"),
        }
    }
}

pub fn competitive_ratio(alg_cost: f64, opt_cost: f64) -> Result<Ratio> {
    if !(alg_cost >= 0.0) || !(opt_cost >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "costs must be non-negative, got {alg_cost} and {opt_cost}"
        )));
    }
    Ok(if opt_cost == 0.0 {
        if alg_cost == 0.0 {
            Ratio::Finite(1.0)
        } else {
            Ratio::Unbounded
        }
    } else {
        Ratio::Finite(alg_cost / opt_cost)
    })
}

/// Least-squares slope of `log(ratio)` against `log(scale)`.
pub fn growth_exponent(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "growth exponent needs at least 3 points, got {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0))
        || series
            .iter()
            .any(|&(s, r)| !(s > 0.0 && r > 0.0 && r.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "scales must be positive and strictly increasing, ratios positive and finite".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(s, r)| (s.ln(), r.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
