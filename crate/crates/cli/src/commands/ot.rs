use std::fs;

use anyhow::Result;
use pipgd::integrate::{simulate, step_count, Method};
use pipgd::linalg::Matrix;
use pipgd::problems::{make_ot_instance, sinkhorn, sinkhorn_duals, transport_cost, OtFlow, OtInstance, SinkhornStatus};
use pipgd::rng::SeededRng;
use pipgd::{BlockMetric, SolverParams, State};
use serde_json::json;

use super::{config, load_json, override_params, plain_gamma, positive, usage};
use crate::args::Flags;
use crate::report::{residual_map, write_columns, write_matrix, write_trace, Check, PointReport, Summary, TerminalReport};

pub const SINKHORN_MAX_ITER: usize = 1000;
pub const SINKHORN_TOL: f64 = 1e-9;
const FULL_SIZE: usize = 100;
const TRACE_LIMIT: usize = 400;
const FEASIBILITY_BOUND: f64 = 1e-5;
const MASS_BOUND: f64 = 1e-6;
const MARGINAL_BOUND: f64 = 1e-5;
const COST_BOUND: f64 = 1e-3;

/// Uniform marginals over random points in the unit square, Euclidean cost.
pub fn random_instance(n: usize, m: usize, eps: f64, seed: u64) -> pipgd::Result<OtInstance> {
    let mut rng = SeededRng::new(seed);
    let src: Vec<[f64; 2]> = (0..n).map(|_| [rng.uniform(), rng.uniform()]).collect();
    let dst: Vec<[f64; 2]> = (0..m).map(|_| [rng.uniform(), rng.uniform()]).collect();
    let cost = Matrix::from_fn(n, m, |i, j| {
        ((src[i][0] - dst[j][0]).powi(2) + (src[i][1] - dst[j][1]).powi(2)).sqrt()
    });
    make_ot_instance(cost, vec![1.0 / n as f64; n], vec![1.0 / m as f64; m], eps)
}

/// `γ = 0.01`, `k_p = k_i = 100`, `Δt = 0.01`, `T = 1000`.
pub fn default_params() -> SolverParams {
    SolverParams {
        gamma: 0.01,
        kp: 100.0,
        ki: 100.0,
        p_weight: 1.0,
        dt: 0.01,
        t_end: 1000.0,
        eq_tol: 1e-5,
    }
}

pub fn run(flags: &Flags) -> Result<Summary> {
    let inst = match &flags.fixture {
        Some(path) => load_json::<OtInstance>(path)?,
        None => {
            let n = if flags.full_size { FULL_SIZE } else { flags.n.unwrap_or(10) };
            let m = if flags.full_size { FULL_SIZE } else { flags.m.unwrap_or(n) };
            if n == 0 || m == 0 {
                return Err(usage("OT sizes must be positive"));
            }
            let eps = positive("eps", flags.eps.unwrap_or(0.001))?;
            random_instance(n, m, eps, flags.seed)?
        }
    };
    let mut params = default_params();
    if let Some(g) = plain_gamma(flags.gamma)? {
        params.gamma = g;
    }
    let params = override_params(params, flags)?;
    let method = flags.method.unwrap_or(Method::Euler);
    let (n, m) = (inst.n, inst.m);
    let nm = n * m;

    let z0 = State::new(vec![1.0 / nm as f64; nm], vec![0.0; n + m - 1]);
    let stride = (step_count(params.dt, params.t_end)? / 2000).max(1);
    let flow = OtFlow {
        inst: &inst,
        params: &params,
    };
    let traj = simulate(&flow, &z0, &params, method, stride)?;
    let terminal = traj.last_state().cloned().unwrap_or(z0);
    let p = &terminal.x;

    let sk = sinkhorn(&inst, SINKHORN_MAX_ITER, SINKHORN_TOL);
    let sk_p = inst.vectorize(&sk.plan);
    let sk_cost = transport_cost(&sk_p, &inst);

    let dir = flags.out_dir();
    fs::create_dir_all(&dir)?;
    write_matrix(&dir, "plan_pipgd.csv", &inst.unvectorize(p))?;
    write_matrix(&dir, "plan_sinkhorn.csv", &sk.plan)?;
    write_columns(&dir, "residual.csv", &[("t", &traj.times), ("feasibility", &traj.residuals)])?;
    if nm <= TRACE_LIMIT {
        let metric = BlockMetric::new(params.p_weight, nm, n + m - 1)?;
        write_trace(&dir, "trace.csv", &traj, &metric, None)?;
    }

    let cost = transport_cost(p, &inst);
    let feas = inst.feasibility(p);
    let mass: f64 = p.iter().sum();
    let min_p = p.iter().copied().fold(f64::INFINITY, f64::min);
    let (ea, eb) = inst.marginal_errors(p);

    let resolved = json!({
        "n": n, "m": m, "eps": inst.eps, "seed": flags.seed, "method": method.to_string(),
        "params": params, "record_stride": stride,
        "sinkhorn": { "max_iter": SINKHORN_MAX_ITER, "tol": SINKHORN_TOL },
    });
    let mut summary = Summary::new(config("ot", flags, resolved));
    summary.checks = vec![
        Check::new("trajectory_completed", traj.completed(), format!("{:?}", traj.status)),
        Check::below("feasibility", feas, FEASIBILITY_BOUND),
        Check::below("total_mass", (mass - 1.0).abs(), MASS_BOUND),
        Check::new("nonnegative", min_p >= 0.0, format!("min entry {min_p:.3e}")),
    ];
    if sk.status == SinkhornStatus::Converged {
        let rel = (cost - sk_cost).abs() / sk_cost.abs().max(f64::MIN_POSITIVE);
        summary.checks.push(Check::below("cost_agreement", rel, COST_BOUND));
        summary.checks.push(Check::below("pipgd_marginals", ea + eb, MARGINAL_BOUND));
        summary.checks.push(Check::below("sinkhorn_marginals", sk.marginal_error, MARGINAL_BOUND));
        summary.oracle = Some(PointReport {
            x: sk_p.clone(),
            lambda: sinkhorn_duals(&sk, &inst),
            cost: sk_cost,
        });
    }
    summary.extra.insert(
        "sinkhorn".into(),
        json!({
            "status": sk.status,
            "iterations": sk.iterations,
            "marginal_error": sk.marginal_error,
            "cost": sk_cost,
        }),
    );
    summary.terminal = Some(TerminalReport {
        x: p.clone(),
        lambda: terminal.lambda.clone(),
        cost,
        residuals: residual_map(&[
            ("feasibility", feas),
            ("total_mass", mass),
            ("row_marginal_l1", ea),
            ("column_marginal_l1", eb),
        ]),
    });
    if flags.fixture.is_none() {
        fs::write(dir.join("instance.json"), serde_json::to_string(&inst)? + "\n")?;
    }
    summary.write(&dir, "summary.json")?;
    Ok(summary)
}
