use std::fs;

use anyhow::Result;
use pipgd::analysis::{envelope_fit, validate_gain_conditions, EnvelopeFit};
use pipgd::integrate::{simulate, AffineFlow, Method};
use pipgd::linalg::{norm2, sub};
use pipgd::problems::admm_oracle;
use pipgd::rng::SeededRng;
use pipgd::{BlockMetric, State, Trajectory};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{config, lasso_instance, lasso_params};
use crate::args::Flags;
use crate::report::{residual_map, write_columns, write_trace, Check, PointReport, Summary, TerminalReport};

const FEASIBILITY_BOUND: f64 = 1e-6;
const ORACLE_BOUND: f64 = 1e-4;
const VIOLATION_BOUND: f64 = 1e-9;

struct TrialOutcome {
    terminal: State,
    completed: bool,
    abort: Option<String>,
    feasibility: f64,
    oracle_gap: f64,
    envelope: std::result::Result<EnvelopeFit, String>,
    trajectory: Option<Trajectory>,
}

/// Initial condition of trial `t`: standard normal primal and dual blocks.
pub fn initial_state(seed: u64, trial: usize, n: usize, m: usize) -> State {
    let mut rng = SeededRng::stream(seed, trial as u64 + 1);
    let x = rng.normal_vec(n);
    State::new(x, rng.normal_vec(m))
}

pub fn run(flags: &Flags) -> Result<Summary> {
    let inst = lasso_instance(flags)?;
    let params = lasso_params(&inst, flags)?;
    let method = flags.method.unwrap_or(Method::Euler);
    let trials = flags.trials.max(1);
    let (n, m) = (inst.n, inst.m);
    let (prob, con) = inst.problem()?;
    let metric = BlockMetric::new(params.p_weight, n, m)?;

    let cert = validate_gain_conditions(inst.rho, inst.l, &params)?;
    let oracle = admm_oracle(&inst, 200_000, 1e-10)?;
    let z_star = oracle.state();

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let z0 = initial_state(inst.seed, t, n, m);
            let flow = AffineFlow {
                prob: &prob,
                con: &con,
                params: &params,
            };
            let traj = simulate(&flow, &z0, &params, method, 1)?;
            let terminal = traj.last_state().cloned().unwrap_or(z0);
            let dist = traj.distances_to(&z_star, &metric)?;
            let envelope = envelope_fit(&traj.times, &dist).map_err(|e| e.to_string());
            let abort = match &traj.status {
                pipgd::RunStatus::Completed => None,
                pipgd::RunStatus::Aborted { time, error } => Some(format!("t = {time}: {error}")),
            };
            Ok(TrialOutcome {
                feasibility: norm2(&con.residual(&terminal.x)),
                oracle_gap: norm2(&sub(&terminal.x, &z_star.x)),
                completed: traj.completed(),
                abort,
                terminal,
                envelope,
                trajectory: (t == 0).then_some(traj),
            })
        })
        .collect::<Result<_>>()?;

    let dir = flags.out_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("instance.json"), serde_json::to_string_pretty(&inst)? + "\n")?;
    let first = &outcomes[0];
    if let Some(traj) = &first.trajectory {
        write_trace(&dir, "trace.csv", traj, &metric, Some(&z_star))?;
    }
    if trials > 1 {
        let col = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<f64>>();
        let env = |f: fn(&EnvelopeFit) -> f64| col(&|o: &TrialOutcome| o.envelope.as_ref().map_or(f64::NAN, f));
        let index: Vec<f64> = (0..trials).map(|i| i as f64).collect();
        write_columns(
            &dir,
            "trials.csv",
            &[
                ("trial", &index),
                ("feasibility", &col(&|o| o.feasibility)),
                ("oracle_gap", &col(&|o| o.oracle_gap)),
                ("q", &env(|e| e.q)),
                ("c_lin", &env(|e| e.c_lin)),
                ("t_cross", &env(|e| e.t_cross)),
                ("c_exp", &env(|e| e.c_exp)),
                ("max_violation", &env(|e| e.max_violation)),
            ],
        )?;
    }

    let worst = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).fold(0.0, f64::max);
    let max_feas = worst(&|o| o.feasibility);
    let max_gap = worst(&|o| o.oracle_gap);
    let aborted: Vec<String> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.abort.as_ref().map(|a| format!("trial {i} {a}")))
        .collect();
    let envelope_failures: Vec<String> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match &o.envelope {
            Ok(e) if e.max_violation <= VIOLATION_BOUND => None,
            Ok(e) => Some(format!("trial {i}: violation {:.3e}", e.max_violation)),
            Err(e) => Some(format!("trial {i}: {e}")),
        })
        .collect();

    let resolved = json!({
        "n": n, "m": m, "alpha": inst.alpha, "seed": inst.seed, "trials": trials,
        "method": method.to_string(), "params": params, "rho": inst.rho, "L": inst.l,
    });
    let mut summary = Summary::new(config("lasso", flags, resolved));
    summary.checks = vec![
        Check::new(
            "gain_certificate",
            cert.certified,
            if cert.certified { "certified".to_string() } else { cert.failures().join("; ") },
        ),
        Check::new(
            "trajectories_completed",
            first.completed && aborted.is_empty(),
            if aborted.is_empty() { format!("{trials} completed") } else { aborted.join("; ") },
        ),
        Check::below("terminal_feasibility", max_feas, FEASIBILITY_BOUND),
        Check::below("oracle_agreement", max_gap, ORACLE_BOUND),
        Check::new(
            "envelope_domination",
            envelope_failures.is_empty(),
            if envelope_failures.is_empty() {
                format!("{trials} envelopes with max_violation <= {VIOLATION_BOUND:.0e}")
            } else {
                envelope_failures.join("; ")
            },
        ),
    ];
    summary.certificate = Some(cert);
    summary.oracle = Some(PointReport {
        x: oracle.x.clone(),
        lambda: oracle.lambda.clone(),
        cost: oracle.cost,
    });
    summary.terminal = Some(TerminalReport {
        x: first.terminal.x.clone(),
        lambda: first.terminal.lambda.clone(),
        cost: inst.objective(&first.terminal.x),
        residuals: residual_map(&[("feasibility", first.feasibility), ("oracle_gap", first.oracle_gap)]),
    });
    summary.envelope = first.envelope.as_ref().ok().copied();
    if trials > 1 {
        summary.extra.insert(
            "trials".into(),
            Value::Array(
                outcomes
                    .iter()
                    .enumerate()
                    .map(|(i, o)| {
                        json!({
                            "trial": i,
                            "feasibility": o.feasibility,
                            "oracle_gap": o.oracle_gap,
                            "envelope": o.envelope.as_ref().ok(),
                            "envelope_error": o.envelope.as_ref().err(),
                        })
                    })
                    .collect(),
            ),
        );
    }
    summary.write(&dir, "summary.json")?;
    Ok(summary)
}
