use std::fs;

use anyhow::Result;
use pipgd::dynamics::stationarity_residual;
use pipgd::integrate::{simulate, GeneralFlow, Method};
use pipgd::linalg::norm_inf;
use pipgd::problems::{augmented_lagrangian_oracle, nonlinear_lasso_instance, nonlinear_params};
use pipgd::rng::SeededRng;
use pipgd::{BlockMetric, SolverParams, State};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{config, monotone_tail, override_params, plain_gamma};
use crate::args::Flags;
use crate::report::{residual_map, write_columns, write_trace, Check, PointReport, Summary, TerminalReport};

/// `(k_p, k_i)` pairs of the gain sweep.
pub const GAIN_PAIRS: [(f64, f64); 6] = [(4.0, 4.0), (10.0, 10.0), (15.0, 10.0), (20.0, 20.0), (30.0, 30.0), (40.0, 40.0)];

const H_BOUND: f64 = 1e-4;
const FIX_BOUND: f64 = 1e-3;
const COST_BOUND: f64 = 1e-3;

pub fn initial_state(seed: u64) -> State {
    let mut rng = SeededRng::stream(seed, 1);
    let x = rng.normal_vec(3);
    State::new(x, rng.normal_vec(2))
}

pub fn run(flags: &Flags) -> Result<Summary> {
    let prob = nonlinear_lasso_instance();
    let mut params = nonlinear_params();
    if let Some(g) = plain_gamma(flags.gamma)? {
        params.gamma = g;
    }
    let params = override_params(params, flags)?;
    let method = flags.method.unwrap_or(Method::Rk4);
    let metric = BlockMetric::new(params.p_weight, 3, 2)?;

    let oracle = augmented_lagrangian_oracle(&prob, &[0.0; 3], 200)?;
    let z_star = oracle.state();
    let z0 = initial_state(flags.seed);

    let flow = GeneralFlow {
        prob: &prob,
        params: &params,
    };
    let traj = simulate(&flow, &z0, &params, method, 1)?;
    let terminal = traj.last_state().cloned().unwrap_or_else(|| z0.clone());

    let dir = flags.out_dir();
    fs::create_dir_all(&dir)?;
    write_trace(&dir, "trace.csv", &traj, &metric, Some(&z_star))?;
    let costs: Vec<f64> = traj.states.iter().map(|z| prob.objective(&z.x)).collect();
    let oracle_cost = vec![oracle.cost; costs.len()];
    write_columns(&dir, "cost.csv", &[("t", &traj.times), ("cost", &costs), ("oracle_cost", &oracle_cost)])?;

    let h = prob.constraint_value(&terminal.x)?;
    let r = stationarity_residual(&terminal, &prob, params.gamma)?;
    let cost = prob.objective(&terminal.x);

    let resolved = json!({ "method": method.to_string(), "params": params, "seed": flags.seed });
    let mut summary = Summary::new(config("nonlinear", flags, resolved));
    summary.checks = vec![
        Check::new(
            "trajectory_completed",
            traj.completed(),
            format!("{:?}", traj.status),
        ),
        Check::below("terminal_constraint_inf", norm_inf(&h), H_BOUND),
        Check::below("terminal_fixed_point_residual", r.fixed_point, FIX_BOUND),
        Check::below("cost_gap", (cost - oracle.cost).abs(), COST_BOUND),
    ];

    if flags.gain_sweep {
        let runs: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = GAIN_PAIRS
            .par_iter()
            .map(|&(kp, ki)| -> Result<_> {
                let p = SolverParams { kp, ki, ..params.clone() };
                let flow = GeneralFlow { prob: &prob, params: &p };
                let tr = simulate(&flow, &z0, &p, method, 1)?;
                let d = tr.distances_to(&z_star, &metric)?;
                Ok((kp, ki, tr.times, d))
            })
            .collect::<Result<_>>()?;
        let mut entries = Vec::new();
        let mut all_monotone = true;
        for (kp, ki, times, d) in &runs {
            write_columns(&dir, &format!("sweep_kp{kp}_ki{ki}.csv"), &[("t", times), ("dist_P", d)])?;
            let mono = monotone_tail(d);
            all_monotone &= mono;
            entries.push(json!({
                "kp": kp, "ki": ki,
                "final_distance": d.last(),
                "monotone_tail": mono,
            }));
        }
        summary.checks.push(Check::new(
            "gain_sweep_monotone_tails",
            all_monotone,
            format!("{} gain pairs", runs.len()),
        ));
        summary.extra.insert("gain_sweep".into(), Value::Array(entries));
    }

    summary.oracle = Some(PointReport {
        x: oracle.x.clone(),
        lambda: oracle.lambda.clone(),
        cost: oracle.cost,
    });
    summary.terminal = Some(TerminalReport {
        x: terminal.x.clone(),
        lambda: terminal.lambda.clone(),
        cost,
        residuals: residual_map(&[
            ("constraint_inf", norm_inf(&h)),
            ("fixed_point", r.fixed_point),
            ("distance_P", metric.distance(&terminal, &z_star)?),
        ]),
    });
    summary.write(&dir, "summary.json")?;
    Ok(summary)
}
