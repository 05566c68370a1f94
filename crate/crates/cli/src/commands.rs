//! `gen`, `run`, `ratio` and `verify`.

use std::fmt::Write as _;
use std::path::Path;

use mobsrv_core::adversary::{self, AdversaryMode};
use mobsrv_core::algorithms::{run_online, Policy, PolicyConfig};
use mobsrv_core::analysis::{self, PotentialSpec, Ratio, Regime};
use mobsrv_core::offline::{estimate_optimum, GridParams, SolverSettings};
use mobsrv_core::random::{random_agent_path, random_instance, RandomSpec};
use mobsrv_core::{model, Instance, Trace, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{
    resolve_out, write_output, CliError, CliResult, GenArgs, Generator, ModeArg, RatioArgs,
    RegimeArg, RunArgs, SolverArgs, VerifyArgs,
};

fn usage(e: mobsrv_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Instance::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

fn whole(x: Option<f64>, what: &str) -> CliResult<Option<usize>> {
    match x {
        None => Ok(None),
        Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
        Some(v) => Err(CliError::Usage(format!(
            "{what} needs an integer x, got {v}"
        ))),
    }
}

pub fn policy_config(delta: f64) -> CliResult<PolicyConfig> {
    PolicyConfig::new(delta).map_err(usage)
}

fn check_pair(policy: Policy, variant: Variant) -> CliResult<()> {
    if policy.supports(variant) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "policy `{policy}` cannot run on variant `{variant}`"
        )))
    }
}

/// Builds the instance described by generator arguments.
pub fn build_instance(a: &GenArgs) -> CliResult<Instance> {
    let against = a.against.unwrap_or(match a.generator {
        Generator::MovingClient => Policy::MtcMovingClient,
        _ => Policy::Mtc,
    });
    let mode = match a.mode {
        ModeArg::Oblivious => AdversaryMode::Oblivious { seed: a.seed },
        ModeArg::Worst => AdversaryMode::WorstDirection {
            policy: against,
            cfg: policy_config(a.against_delta)?,
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let instance = match a.generator {
        Generator::Thm1 => {
            adversary::gen_thm1(
                a.steps,
                whole(a.x, "thm1")?,
                a.m,
                a.move_cost,
                a.dimension,
                &mode,
            )
            .map_err(usage)?
            .instance
        }
        Generator::Thm2 => {
            let x = whole(a.x, "thm2")?.unwrap_or(4);
            adversary::gen_thm2(
                a.cycles,
                x,
                a.delta,
                a.r_min,
                a.r_max,
                a.m,
                a.move_cost,
                a.dimension,
                &mode,
            )
            .map_err(usage)?
            .instance
        }
        Generator::Thm3 => {
            adversary::gen_thm3(a.cycles, a.r, a.m, a.move_cost, a.dimension, &mode)
                .map_err(usage)?
                .instance
        }
        Generator::MovingClient => {
            adversary::gen_moving_client(a.steps, a.x, a.eps, a.m, a.move_cost, a.dimension, &mode)
                .map_err(usage)?
                .instance
        }
        Generator::Random => {
            let spec = RandomSpec {
                variant: a.variant.into(),
                steps: a.steps,
                dimension: a.dimension,
                r_min: a.r_min,
                r_max: a.r_max,
                drift: a.drift,
                spread: a.spread,
                m: a.m,
                move_cost: a.move_cost,
                collapsed: a.collapsed,
            };
            random_instance(&spec, &mut rng).map_err(usage)?
        }
        Generator::RandomAgent => random_agent_path(
            a.steps,
            a.dimension,
            a.m,
            a.m_a.unwrap_or(a.m),
            a.move_cost,
            &mut rng,
        )
        .map_err(usage)?,
    };
    let problems = model::validate(&instance);
    if !problems.is_empty() {
        return Err(CliError::Usage(problems.join("; ")));
    }
    Ok(instance)
}

pub fn cmd_gen(a: &GenArgs) -> CliResult<String> {
    let instance = build_instance(a)?;
    let path = resolve_out(
        a.out.as_deref(),
        &format!("{}-seed{}.json", a.generator.name(), a.seed),
    );
    write_output(&path, &(instance.to_json() + "\n"))?;
    Ok(format!(
        "wrote {} ({} {} steps)",
        path.display(),
        instance.variant,
        instance.len()
    ))
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub policy: Policy,
    pub delta: f64,
    pub variant: Variant,
    pub steps: usize,
    pub total: f64,
    pub move_total: f64,
    pub serve_total: f64,
    pub trace: Trace,
}

pub fn run_policy(instance: &Instance, policy: Policy, delta: f64) -> CliResult<Trace> {
    check_pair(policy, instance.variant)?;
    Ok(run_online(instance, policy, &policy_config(delta)?)?)
}

pub fn cmd_run(a: &RunArgs) -> CliResult<String> {
    let instance = load_instance(&a.instance)?;
    let trace = run_policy(&instance, a.policy.policy, a.policy.delta)?;
    let report = RunReport {
        policy: a.policy.policy,
        delta: a.policy.delta,
        variant: instance.variant,
        steps: instance.len(),
        total: trace.total(),
        move_total: trace.steps.iter().map(|s| s.move_cost).sum(),
        serve_total: trace.steps.iter().map(|s| s.serve_cost).sum(),
        trace,
    };
    let stem = file_stem(&a.instance);
    let path = resolve_out(
        a.out.as_deref(),
        &format!("{stem}.{}.run.json", a.policy.policy),
    );
    write_output(&path, &(to_json(&report) + "\n"))?;
    if let Some(csv_path) = &a.csv {
        let mut csv = String::from("step,move_cost,serve_cost,total\n");
        for (t, s) in report.trace.steps.iter().enumerate() {
            let _ = writeln!(csv, "{t},{},{},{}", s.move_cost, s.serve_cost, s.total);
        }
        write_output(csv_path, &csv)?;
    }
    Ok(format!("total={} wrote {}", report.total, path.display()))
}

pub fn solver_settings(a: &SolverArgs) -> SolverSettings {
    SolverSettings {
        iterations: a.iterations,
        tol: a.tol,
        coordinates: a.coordinates.into(),
        ..SolverSettings::default()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Solver objective minus oracle objective, floored at 0.
    pub certified_gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub objective: f64,
    pub grid: Option<GridParams>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub policy: Policy,
    pub delta: f64,
    pub variant: Variant,
    pub dimension: usize,
    pub steps: usize,
    pub alg_cost: f64,
    /// Cheapest feasible trace found by the solver or the oracle.
    pub opt_cost: f64,
    pub ratio: Ratio,
    pub solver: SolverSummary,
    pub oracle: Option<OracleSummary>,
}

/// Online cost against the best offline estimate; the grid oracle joins on the line.
pub fn measure_ratio(
    instance: &Instance,
    policy: Policy,
    delta: f64,
    settings: &SolverSettings,
    grid_step: Option<f64>,
) -> CliResult<(RatioReport, Trace)> {
    let online = run_policy(instance, policy, delta)?;
    let est = estimate_optimum(instance, settings, &[], grid_step)?;
    let alg_cost = online.total();
    let opt_cost = est.objective();
    let report = RatioReport {
        policy,
        delta,
        variant: instance.variant,
        dimension: instance.dimension,
        steps: instance.len(),
        alg_cost,
        opt_cost,
        ratio: analysis::competitive_ratio(alg_cost, opt_cost)?,
        solver: SolverSummary {
            objective: est.solver.objective,
            iterations: est.solver.iterations,
            converged: est.solver.converged,
            certified_gap: est.solver.certified_gap,
        },
        oracle: est.oracle.as_ref().map(|o| OracleSummary {
            objective: o.objective,
            grid: o.grid,
        }),
    };
    Ok((report, est.best().trace.clone()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn grid_of(a: &SolverArgs) -> Option<f64> {
    (!a.no_certify).then_some(a.grid_step)
}

pub fn cmd_ratio(a: &RatioArgs) -> CliResult<String> {
    let instance = load_instance(&a.instance)?;
    let (report, _) = measure_ratio(
        &instance,
        a.policy.policy,
        a.policy.delta,
        &solver_settings(&a.solver),
        grid_of(&a.solver),
    )?;
    let stem = file_stem(&a.instance);
    let path = resolve_out(
        a.out.as_deref(),
        &format!("{stem}.{}.ratio.json", a.policy.policy),
    );
    write_output(&path, &(to_json(&report) + "\n"))?;
    Ok(format!(
        "ratio={} alg={} opt={} converged={} wrote {}",
        report.ratio,
        report.alg_cost,
        report.opt_cost,
        report.solver.converged,
        path.display()
    ))
}

/// Instance the verifier runs on: batches collapsed to their centers along the
/// policy's own trace unless `no_collapse` is set or nothing needs collapsing.
pub fn verification_instance(
    instance: &Instance,
    policy: Policy,
    delta: f64,
    no_collapse: bool,
) -> CliResult<Instance> {
    if no_collapse || instance.variant == Variant::MovingClient || instance.is_collapsed() {
        return Ok(instance.clone());
    }
    let anchor = run_policy(instance, policy, delta)?;
    Ok(model::collapse_to_centers(instance, &anchor)?)
}

pub fn potential_for(instance: &Instance, regime: RegimeArg, delta: f64) -> PotentialSpec {
    let r_weight = instance.r_max();
    match regime {
        RegimeArg::Auto => PotentialSpec::for_instance(instance, delta),
        RegimeArg::HighR => PotentialSpec::Center {
            regime: Regime::HighR,
            r_weight,
            delta,
        },
        RegimeArg::LowR => PotentialSpec::Center {
            regime: Regime::LowR,
            r_weight,
            delta,
        },
        RegimeArg::MovingClient => PotentialSpec::MovingClient,
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<String> {
    let original = load_instance(&a.instance)?;
    let (policy, delta) = (a.policy.policy, a.policy.delta);
    check_pair(policy, original.variant)?;
    let instance = verification_instance(&original, policy, delta, a.no_collapse)?;
    let potential = potential_for(&instance, a.regime, delta);
    if let PotentialSpec::Center { .. } = potential {
        if delta <= 0.0 {
            return Err(CliError::Usage(
                "the center potential needs delta > 0".into(),
            ));
        }
    }
    let alg = run_policy(&instance, policy, delta)?;
    let (_, reference) = measure_ratio(
        &instance,
        policy,
        delta,
        &solver_settings(&a.solver),
        grid_of(&a.solver),
    )?;
    let k = a.k.unwrap_or_else(|| analysis::default_k(&instance, delta));
    let ledger =
        analysis::verify_step_inequality(&instance, &alg, &reference, k, &potential, a.tolerance)?;
    let stem = file_stem(&a.instance);
    let path = resolve_out(a.ledger.as_deref(), &format!("{stem}.{policy}.ledger.csv"));
    write_output(&path, &ledger.to_csv())?;
    let summary = format!("{} wrote {}", ledger.summary(), path.display());
    if ledger.violations > 0 && !a.report_only {
        return Err(CliError::Violation(summary));
    }
    Ok(summary)
}
