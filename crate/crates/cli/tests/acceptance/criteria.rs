use std::time::Instant;

use pipgd::analysis::{
    appendix_lemma_check, envelope_fit, field_jacobian, hurwitz_check, q_matrix_min_eigenvalue,
    validate_gain_conditions, weak_contraction_spot_check, EnvelopeFit,
};
use pipgd::dynamics::{field_affine, field_general, stationarity_residual};
use pipgd::integrate::{simulate, AffineFlow, GeneralFlow, Method};
use pipgd::linalg::{dot, norm2, norm_inf, sub, Matrix};
use pipgd::problems::{
    admm_oracle, augmented_lagrangian_oracle, make_constrained_lasso, nonlinear_lasso_instance, nonlinear_params,
    sinkhorn, transport_cost, EntropicCost, LassoInstance, OtFlow, SinkhornStatus,
};
use pipgd::prox::{L1Norm, NonNegative, WithNonNegativeTail, Zero};
use pipgd::rng::SeededRng;
use pipgd::{BlockMetric, ProxOperator, SmoothTerm, SolverParams, State};
use pipgd_cli::commands::certify::lemma_case;
use pipgd_cli::commands::{lasso, nonlinear, ot};
use rayon::prelude::*;

use crate::verdict;

const ORACLE_ITERS: usize = 200_000;
const ORACLE_TOL: f64 = 1e-10;

fn lasso_run(inst: &LassoInstance, z0: &State) -> (pipgd::Trajectory, SolverParams) {
    let params = inst.default_params();
    let (prob, con) = inst.problem().unwrap();
    let flow = AffineFlow {
        prob: &prob,
        con: &con,
        params: &params,
    };
    (simulate(&flow, z0, &params, Method::Euler, 1).unwrap(), params)
}

fn default_instance() -> LassoInstance {
    make_constrained_lasso(10, 5, 1.0, 0).unwrap()
}

#[test]
fn criterion_1_lasso_reproduction() {
    let start = Instant::now();
    let rows: Vec<(f64, f64, bool)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let inst = make_constrained_lasso(10, 5, 1.0, seed).unwrap();
            let star = admm_oracle(&inst, ORACLE_ITERS, ORACLE_TOL).unwrap();
            let z0 = lasso::initial_state(seed, 0, inst.n, inst.m);
            let (traj, _) = lasso_run(&inst, &z0);
            let x = &traj.last_state().unwrap().x;
            let feas = norm2(&inst.constraint().unwrap().residual(x));
            (feas, norm2(&sub(x, &star.x)), traj.completed())
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let feas = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let gap = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let completed = rows.iter().all(|r| r.2);
    let pass = completed && feas < 1e-6 && gap < 1e-4 && secs < 10.0;
    let detail = format!("20 seeds, max ‖Ax−b‖ {feas:.3e} (< 1e-6), max ‖x−x*‖ {gap:.3e} (< 1e-4), {secs:.2} s (< 10 s)");
    assert!(verdict(1, "constrained lasso terminal accuracy", pass, &detail), "{detail}");
}

#[test]
fn criterion_2_weak_contraction_monotonicity() {
    let inst = default_instance();
    let params = inst.default_params();
    let cert = validate_gain_conditions(inst.rho, inst.l, &params).unwrap();
    let metric = BlockMetric::new(params.p_weight, inst.n, inst.m).unwrap();
    let worst: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|pair| {
            let mut rng = SeededRng::stream(7, pair);
            let za = State::new(rng.normal_vec(inst.n), rng.normal_vec(inst.m));
            let zb = State::new(rng.normal_vec(inst.n), rng.normal_vec(inst.m));
            let (ta, _) = lasso_run(&inst, &za);
            let (tb, _) = lasso_run(&inst, &zb);
            assert!(ta.completed() && tb.completed());
            let d: Vec<f64> = ta
                .states
                .iter()
                .zip(&tb.states)
                .map(|(a, b)| metric.distance(a, b).unwrap())
                .collect();
            d.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let max_increase = worst.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = cert.certified && max_increase <= 1e-6;
    let detail = format!("certified {}, 10 pairs, largest step increase {max_increase:.3e} (≤ 1e-6)", cert.certified);
    assert!(verdict(2, "weak contraction monotonicity", pass, &detail), "{detail}");
}

#[test]
fn criterion_3_lognorm_certificate() {
    let inst = default_instance();
    let params = inst.default_params();
    let (prob, con) = inst.problem().unwrap();
    let metric = BlockMetric::new(params.p_weight, inst.n, inst.m).unwrap();
    let cert = validate_gain_conditions(inst.rho, inst.l, &params).unwrap();
    let spot = weak_contraction_spot_check(&prob, &con, &params, &metric, 200, 0).unwrap();
    let lmi = q_matrix_min_eigenvalue(&inst.w, &vec![1.0; inst.n], &params).unwrap();
    let spot_ok = spot <= 1e-8;
    let pass = cert.certified && spot_ok && spot_ok == (lmi >= 0.0);
    let detail = format!("max μ_P {spot:.3e} over 200 samples (≤ 1e-8), Q min eigenvalue {lmi:.3e}");
    assert!(verdict(3, "lognorm certificate", pass, &detail), "{detail}");
}

#[test]
fn criterion_4_local_exponential_stability() {
    let inst = default_instance();
    let params = inst.default_params();
    let (prob, con) = inst.problem().unwrap();
    let star = admm_oracle(&inst, ORACLE_ITERS, ORACLE_TOL).unwrap().state();
    let full = hurwitz_check(&field_jacobian(&star, &prob, &con, &params, &vec![1.0; inst.n]).unwrap().matrix).unwrap();
    let grad = prob.gradient(&star.x).unwrap();
    let at = inst.a.matvec_transpose(&star.lambda);
    let arg: Vec<f64> = (0..inst.n).map(|i| star.x[i] - params.gamma * (grad[i] + at[i])).collect();
    let g = prob.prox.derivative_diag(params.gamma, &arg);
    let active = hurwitz_check(&field_jacobian(&star, &prob, &con, &params, &g).unwrap().matrix).unwrap();
    let pass = full < -1e-6;
    let detail = format!("α(G = I) {full:.4e} (< -1e-6); active-set α {active:.4e}");
    assert!(verdict(4, "local exponential stability", pass, &detail), "{detail}");
}

#[test]
fn criterion_5_linear_exponential_envelope() {
    let fits: Vec<Result<EnvelopeFit, String>> = (0..150u64)
        .into_par_iter()
        .map(|seed| {
            let inst = make_constrained_lasso(10, 5, 1.0, seed).unwrap();
            let star = admm_oracle(&inst, ORACLE_ITERS, ORACLE_TOL).unwrap().state();
            let z0 = lasso::initial_state(seed, 0, inst.n, inst.m);
            let (traj, params) = lasso_run(&inst, &z0);
            let metric = BlockMetric::new(params.p_weight, inst.n, inst.m).unwrap();
            let d = traj.distances_to(&star, &metric).unwrap();
            envelope_fit(&traj.times, &d).map_err(|e| format!("seed {seed}: {e}"))
        })
        .collect();
    let errors: Vec<&String> = fits.iter().filter_map(|f| f.as_ref().err()).collect();
    let worst = fits
        .iter()
        .filter_map(|f| f.as_ref().ok())
        .map(|f| f.max_violation)
        .fold(0.0, f64::max);

    let (q, c_lin, t_cross, c_exp) = (5.0, 1.0, 3.0, 2.0);
    let truth = EnvelopeFit {
        q,
        c_lin,
        t_cross,
        c_exp,
        max_violation: 0.0,
    };
    let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.005).collect();
    let d: Vec<f64> = times.iter().map(|&t| truth.evaluate(t)).collect();
    let fit = envelope_fit(&times, &d).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let recovery = [
        rel(fit.q, q),
        rel(fit.c_lin, c_lin),
        rel(fit.t_cross, t_cross),
        rel(fit.c_exp, c_exp),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let pass = errors.is_empty() && worst <= 1e-9 && recovery <= 0.05;
    let detail = format!(
        "150 trajectories, {} fit errors, worst violation {worst:.3e} (≤ 1e-9); synthetic recovery rel err {recovery:.3e} (≤ 5%)",
        errors.len()
    );
    assert!(verdict(5, "linear-exponential envelope", pass, &detail), "{detail} {errors:?}");
}

#[test]
fn criterion_6_nonlinear_reproduction() {
    let prob = nonlinear_lasso_instance();
    let params = nonlinear_params();
    let metric = BlockMetric::new(params.p_weight, 3, 2).unwrap();
    let star = augmented_lagrangian_oracle(&prob, &[0.0; 3], 200).unwrap();
    let z_star = star.state();
    let z0 = nonlinear::initial_state(0);
    let run = |p: &SolverParams| {
        let flow = GeneralFlow { prob: &prob, params: p };
        simulate(&flow, &z0, p, Method::Rk4, 1).unwrap()
    };
    let traj = run(&params);
    let zt = traj.last_state().unwrap();
    let h = norm_inf(&prob.constraint_value(&zt.x).unwrap());
    let r = stationarity_residual(zt, &prob, params.gamma).unwrap().fixed_point;
    let gap = (prob.objective(&zt.x) - star.cost).abs();

    let tails: Vec<bool> = nonlinear::GAIN_PAIRS
        .par_iter()
        .map(|&(kp, ki)| {
            let p = SolverParams { kp, ki, ..params.clone() };
            let d = run(&p).distances_to(&z_star, &metric).unwrap();
            let tail = &d[d.len() - d.len() / 5..];
            tail.windows(2).all(|w| w[1] <= w[0])
        })
        .collect();
    let monotone = tails.iter().filter(|t| **t).count();

    let pass = traj.completed() && h < 1e-4 && r < 1e-3 && gap < 1e-3 && monotone == 6;
    let detail = format!(
        "‖h‖∞ {h:.3e} (< 1e-4), r_fix {r:.3e} (< 1e-3), cost gap {gap:.3e} (< 1e-3), monotone tails {monotone}/6"
    );
    assert!(verdict(6, "nonlinear equality-constrained lasso", pass, &detail), "{detail}");
}

#[test]
fn criterion_7_entropic_transport() {
    let start = Instant::now();
    let solve = |eps: f64| {
        let inst = ot::random_instance(10, 10, eps, 0).unwrap();
        let mut params = ot::default_params();
        if eps >= 0.1 {
            params.t_end = 200.0;
        }
        let z0 = State::new(vec![0.01; 100], vec![0.0; 19]);
        let flow = OtFlow {
            inst: &inst,
            params: &params,
        };
        let traj = simulate(&flow, &z0, &params, Method::Euler, 1000).unwrap();
        let p = traj.last_state().unwrap().x.clone();
        let sk = sinkhorn(&inst, ot::SINKHORN_MAX_ITER, ot::SINKHORN_TOL);
        (inst, traj.completed(), p, sk)
    };

    let (inst, done_a, p, sk) = solve(0.1);
    let sk_p = inst.vectorize(&sk.plan);
    let rel = (transport_cost(&p, &inst) - transport_cost(&sk_p, &inst)).abs() / transport_cost(&sk_p, &inst).abs();
    let (ea, eb) = inst.marginal_errors(&p);
    let (sa, sb) = inst.marginal_errors(&sk_p);
    let warm = done_a && sk.status == SinkhornStatus::Converged && rel < 1e-3 && ea.max(eb) < 1e-5 && sa.max(sb) < 1e-5;

    let (inst, done_b, p, sk) = solve(0.001);
    let feas = inst.feasibility(&p);
    let mass = (p.iter().sum::<f64>() - 1.0).abs();
    let cold_ok = done_b
        && feas < 1e-5
        && mass < 1e-6
        && matches!(sk.status, SinkhornStatus::Stagnated | SinkhornStatus::NonFinite);
    let secs = start.elapsed().as_secs_f64();

    let pass = warm && cold_ok && secs < 60.0;
    let detail = format!(
        "ε=0.1: cost rel diff {rel:.3e}, marginals {:.3e}/{:.3e}; ε=0.001: ‖Ãp−d̃‖ {feas:.3e}, |Σp−1| {mass:.3e}, sinkhorn {:?}; {secs:.1} s",
        ea.max(eb),
        sa.max(sb),
        sk.status
    );
    assert!(verdict(7, "entropic optimal transport", pass, &detail), "{detail}");
}

fn firm_nonexpansive_violations(op: &dyn ProxOperator, rng: &mut SeededRng) -> usize {
    (0..1000)
        .filter(|_| {
            let n = 3 + (rng.next_u64() % 6) as usize;
            let gamma = rng.uniform_in(0.01, 3.0);
            let u: Vec<f64> = rng.normal_vec(n).iter().map(|v| 3.0 * v).collect();
            let v: Vec<f64> = rng.normal_vec(n).iter().map(|v| 3.0 * v).collect();
            let d = sub(&op.prox(gamma, &u), &op.prox(gamma, &v));
            dot(&d, &d) > dot(&d, &sub(&u, &v)) + 1e-12
        })
        .count()
}

fn subgradient_violations(op: &dyn ProxOperator, rng: &mut SeededRng) -> usize {
    (0..200)
        .filter(|_| {
            let n = 3 + (rng.next_u64() % 6) as usize;
            let gamma = rng.uniform_in(0.01, 3.0);
            let v: Vec<f64> = rng.normal_vec(n).iter().map(|x| 2.0 * x).collect();
            let y = op.prox(gamma, &v);
            let u: Vec<f64> = sub(&v, &y).iter().map(|d| d / gamma).collect();
            (0..20).any(|_| {
                let w = rng.normal_vec(n);
                let gw = op.value(&w);
                gw.is_finite() && gw + 1e-10 < op.value(&y) + dot(&u, &sub(&w, &y))
            })
        })
        .count()
}

fn fd_gradient_error(f: &dyn SmoothTerm, x: &[f64]) -> f64 {
    let g = f.gradient(x);
    let h = 1e-6;
    let fd: Vec<f64> = (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f.value(&xp) - f.value(&xm)) / (2.0 * h)
        })
        .collect();
    norm2(&sub(&g, &fd)) / norm2(&g).max(1.0)
}

fn fd_jacobian_error(prob: &pipgd::CompositeProblem, x: &[f64]) -> f64 {
    let j = prob.constraint_jacobian(x).unwrap();
    let h = 1e-6;
    let fd = Matrix::from_fn(j.rows(), j.cols(), |r, c| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        (prob.constraint_value(&xp).unwrap()[r] - prob.constraint_value(&xm).unwrap()[r]) / (2.0 * h)
    });
    let diff = Matrix::from_fn(j.rows(), j.cols(), |r, c| j.row(r)[c] - fd.row(r)[c]);
    diff.frobenius_norm() / j.frobenius_norm().max(1.0)
}

#[test]
fn criterion_8_property_suites() {
    let mut rng = SeededRng::new(8);
    let ops: [(&str, Box<dyn ProxOperator>); 4] = [
        ("l1", Box::new(L1Norm { alpha: 0.7 })),
        ("nonneg", Box::new(NonNegative)),
        ("zero", Box::new(Zero)),
        ("l1+nonneg", Box::new(WithNonNegativeTail { head: L1Norm { alpha: 1.3 }, split: 2 })),
    ];
    let firm: usize = ops.iter().map(|(_, op)| firm_nonexpansive_violations(op.as_ref(), &mut rng)).sum();
    let subgrad: usize = ops.iter().map(|(_, op)| subgradient_violations(op.as_ref(), &mut rng)).sum();

    let mut grad_err: f64 = 0.0;
    let mut jac_err: f64 = 0.0;
    let nl = nonlinear_lasso_instance();
    for seed in 0..20u64 {
        let inst = make_constrained_lasso(10, 5, 1.0, seed).unwrap();
        let (prob, _) = inst.problem().unwrap();
        let x = rng.normal_vec(10);
        grad_err = grad_err.max(fd_gradient_error(prob.smooth.as_ref(), &x));
        let x3 = rng.normal_vec(3);
        grad_err = grad_err.max(fd_gradient_error(nl.smooth.as_ref(), &x3));
        jac_err = jac_err.max(fd_jacobian_error(&nl, &x3));
        let p: Vec<f64> = (0..25).map(|_| rng.uniform_in(0.01, 1.0)).collect();
        let ent = EntropicCost {
            c: rng.normal_vec(25),
            eps: rng.uniform_in(0.01, 1.0),
        };
        grad_err = grad_err.max(fd_gradient_error(&ent, &p));
    }

    let mut field_gap: f64 = 0.0;
    for seed in 0..50u64 {
        let inst = make_constrained_lasso(10, 5, 1.0, seed).unwrap();
        let (prob, con) = inst.problem().unwrap();
        let params = inst.default_params();
        let z = State::new(rng.normal_vec(10), rng.normal_vec(5));
        let fa = field_affine(&z, &prob, &con, &params).unwrap();
        let fg = field_general(&z, &prob, &params).unwrap();
        let a_inf = (0..inst.m).map(|r| inst.a.row(r).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let size = norm_inf(&z.x).max(norm_inf(&fa.prox_point));
        let scale = (params.kp + params.ki) * (a_inf * size + norm_inf(&inst.b)).max(1.0);
        let d = norm_inf(&sub(&fa.dx, &fg.dx)).max(norm_inf(&sub(&fa.dlambda, &fg.dlambda)));
        field_gap = field_gap.max(d / scale);
    }

    let lemma = (0..500u64)
        .filter(|&i| {
            let (x, gamma, g) = lemma_case(0, i).unwrap();
            appendix_lemma_check(&x, gamma, &g).unwrap()
        })
        .count();

    let mut triangle = 0;
    for _ in 0..1000 {
        let (n, m) = (1 + (rng.next_u64() % 6) as usize, 1 + (rng.next_u64() % 4) as usize);
        let metric = BlockMetric::new(rng.uniform_in(0.01, 100.0), n, m).unwrap();
        let mut draw = || State::new(rng.normal_vec(n), rng.normal_vec(m));
        let (a, b, c) = (draw(), draw(), draw());
        let lhs = metric.distance(&a, &c).unwrap();
        let rhs = metric.distance(&a, &b).unwrap() + metric.distance(&b, &c).unwrap();
        if lhs > rhs * (1.0 + 1e-12) {
            triangle += 1;
        }
    }

    let pass = firm == 0 && subgrad == 0 && grad_err < 1e-5 && jac_err < 1e-5 && field_gap <= 1e-14 && lemma == 500 && triangle == 0;
    let detail = format!(
        "firm nonexpansive violations {firm}/4000, subgradient violations {subgrad}/800, \
         FD gradient rel err {grad_err:.2e}, FD Jacobian rel err {jac_err:.2e}, affine vs general {field_gap:.2e}, \
         lemma {lemma}/500, triangle violations {triangle}/1000"
    );
    assert!(verdict(8, "property suites", pass, &detail), "{detail}");
}
