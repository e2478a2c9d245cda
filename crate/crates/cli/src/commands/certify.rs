use std::fs;

use anyhow::Result;
use pipgd::analysis::{
    appendix_lemma_check, field_jacobian, hurwitz_check, q_matrix_min_eigenvalue, validate_gain_conditions,
    weak_contraction_spot_check,
};
use pipgd::linalg::{symmetric_eigen, Matrix};
use pipgd::problems::admm_oracle;
use pipgd::rng::SeededRng;
use pipgd::BlockMetric;
use rayon::prelude::*;
use serde_json::json;

use super::{config, lasso_instance, lasso_params};
use crate::args::Flags;
use crate::report::{Check, PointReport, Summary};

const LOGNORM_BOUND: f64 = 1e-8;
const LMI_BOUND: f64 = -1e-10;
const HURWITZ_BOUND: f64 = -1e-6;

/// A random `(X, γ, g)` satisfying `X ≻ 0`, `γ ≤ 1/x_max`, `g ∈ [0,1]ⁿ`.
pub fn lemma_case(seed: u64, index: u64) -> pipgd::Result<(Matrix, f64, Vec<f64>)> {
    let mut rng = SeededRng::stream(seed, index);
    let n = 1 + (rng.next_u64() % 10) as usize;
    let r = Matrix::from_fn(n, n, |_, _| rng.normal());
    let shift = 1e-3 + rng.uniform();
    let x = (&r.matmul(&r.transpose()) + &Matrix::identity(n).scale(shift)).symmetric_part();
    let x_max = symmetric_eigen(&x)?.max();
    let gamma = rng.uniform_in(1e-3, 1.0) / x_max;
    let g = (0..n).map(|_| rng.uniform()).collect();
    Ok((x, gamma, g))
}

pub fn run(flags: &Flags) -> Result<Summary> {
    let inst = lasso_instance(flags)?;
    let params = lasso_params(&inst, flags)?;
    let (prob, con) = inst.problem()?;
    let metric = BlockMetric::new(params.p_weight, inst.n, inst.m)?;
    let spot_samples = flags.samples.unwrap_or(200);

    let cert = validate_gain_conditions(inst.rho, inst.l, &params)?;
    let spot = weak_contraction_spot_check(&prob, &con, &params, &metric, spot_samples.max(1), flags.seed)?;
    let lmi = q_matrix_min_eigenvalue(&inst.w, &vec![1.0; inst.n], &params)?;

    let oracle = admm_oracle(&inst, 200_000, 1e-10)?;
    let z_star = oracle.state();
    let j_full = field_jacobian(&z_star, &prob, &con, &params, &vec![1.0; inst.n])?;
    let alpha_full = hurwitz_check(&j_full.matrix)?;
    let grad = prob.gradient(&z_star.x)?;
    let at = con.matrix().matvec_transpose(&z_star.lambda);
    let arg: Vec<f64> = (0..inst.n).map(|i| z_star.x[i] - params.gamma * (grad[i] + at[i])).collect();
    let g_active = prob.prox.derivative_diag(params.gamma, &arg);
    let alpha_active = hurwitz_check(&field_jacobian(&z_star, &prob, &con, &params, &g_active)?.matrix)?;

    let resolved = json!({
        "n": inst.n, "m": inst.m, "alpha": inst.alpha, "seed": inst.seed,
        "params": params, "rho": inst.rho, "L": inst.l, "spot_samples": spot_samples,
    });
    let mut summary = Summary::new(config("certify", flags, resolved));
    let lognorm_ok = spot <= LOGNORM_BOUND;
    let lmi_ok = lmi >= LMI_BOUND;
    summary.checks = vec![
        Check::new(
            "gain_certificate",
            cert.certified,
            if cert.certified { "certified".to_string() } else { cert.failures().join("; ") },
        ),
        Check::new(
            "weak_contraction_spot_check",
            lognorm_ok,
            format!("max lognorm {spot:.6e} over {spot_samples} samples (bound {LOGNORM_BOUND:.0e})"),
        ),
        Check::new("q_matrix_lmi", lmi_ok, format!("min eigenvalue {lmi:.6e} (bound {LMI_BOUND:.0e})")),
        Check::new(
            "lmi_sign_agreement",
            lognorm_ok == lmi_ok,
            format!("spot check {lognorm_ok}, LMI {lmi_ok}"),
        ),
        Check::new(
            "hurwitz_at_equilibrium",
            alpha_full < HURWITZ_BOUND,
            format!("spectral abscissa {alpha_full:.6e} with G = I; {alpha_active:.6e} with active-set G"),
        ),
    ];

    if flags.appendix_lemma {
        let samples = flags.samples.unwrap_or(500);
        let passes = (0..samples as u64)
            .into_par_iter()
            .map(|i| -> pipgd::Result<bool> {
                let (x, gamma, g) = lemma_case(flags.seed, i)?;
                appendix_lemma_check(&x, gamma, &g)
            })
            .collect::<pipgd::Result<Vec<bool>>>()?
            .into_iter()
            .filter(|ok| *ok)
            .count();
        summary.checks.push(Check::new(
            "appendix_lemma",
            passes == samples,
            format!("{passes}/{samples} random cases"),
        ));
    }

    summary.extra.insert(
        "stability".into(),
        json!({
            "max_lognorm": spot,
            "q_min_eigenvalue": lmi,
            "spectral_abscissa_full": alpha_full,
            "spectral_abscissa_active": alpha_active,
            "active_set_size": g_active.iter().filter(|g| **g > 0.0).count(),
        }),
    );
    summary.certificate = Some(cert);
    summary.oracle = Some(PointReport {
        x: oracle.x,
        lambda: oracle.lambda,
        cost: oracle.cost,
    });
    let dir = flags.out_dir();
    fs::create_dir_all(&dir)?;
    summary.write(&dir, "certificate.json")?;
    Ok(summary)
}
