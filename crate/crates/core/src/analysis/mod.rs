//! Contraction certificates, Jacobians, stability checks and envelope fits.

mod envelope;

pub use envelope::{envelope_fit, EnvelopeFit};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{cholesky, eigenvalues, solve_lower_triangular, symmetric_eigen, Matrix};
use crate::model::{AffineConstraint, BlockMetric, CompositeProblem, SolverParams, State};
use crate::rng::SeededRng;

/// Step used for central differences of the gradient when no Hessian is available.
pub const HESSIAN_FD_STEP: f64 = 1e-6;

/// `μ_P(A)`: the largest `b` with `PA + AᵀP ⪯ 2bP`.
pub fn weighted_lognorm(a: &Matrix, p: &Matrix) -> Result<f64> {
    if !a.is_square() || !p.is_square() {
        return Err(Error::Precondition("lognorm needs square matrices".into()));
    }
    check_len("lognorm weight", a.rows(), p.rows())?;
    if !p.is_symmetric(1e-12 * p.max_abs().max(1.0)) {
        return Err(Error::NotPositiveDefinite {
            context: "lognorm weight (not symmetric)",
        });
    }
    let l = cholesky(p)?;
    let s = (&p.matmul(a) + &a.transpose().matmul(p)).scale(0.5);
    // L⁻¹ S L⁻ᵀ
    let left = solve_lower_triangular(&l, &s);
    let reduced = solve_lower_triangular(&l, &left.transpose());
    Ok(symmetric_eigen(&reduced.symmetric_part())?.max())
}

/// Spectral abscissa `max Re λ(J)`.
pub fn hurwitz_check(j: &Matrix) -> Result<f64> {
    let ev = eigenvalues(j)?;
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Outcome of checking the weak-contractivity gain conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainCertificate {
    pub gamma_ok: bool,
    /// `1/L − γ`
    pub gamma_margin: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub p_ok: bool,
    /// `(p − p_lower, p_upper − p)`
    pub p_margins: (f64, f64),
    pub kp_eq_ki: bool,
    pub rho: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub certified: bool,
}

impl GainCertificate {
    /// Human-readable reasons for a failed certificate.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.gamma_ok {
            out.push(format!("gamma outside (0, 1/L]: margin {:.3e}", self.gamma_margin));
        }
        if !self.kp_eq_ki {
            out.push("kp and ki differ".to_string());
        }
        if self.p_lower > self.p_upper {
            out.push(format!(
                "empty weight interval [{:.6e}, {:.6e}]",
                self.p_lower, self.p_upper
            ));
        } else if !self.p_ok {
            out.push(format!(
                "p_weight outside [{:.6e}, {:.6e}]",
                self.p_lower, self.p_upper
            ));
        }
        out
    }
}

pub fn validate_gain_conditions(rho: f64, l: f64, params: &SolverParams) -> Result<GainCertificate> {
    if !(rho > 0.0 && rho <= l && l.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "need 0 < rho <= L",
        });
    }
    let SolverParams { gamma, kp, ki, p_weight: p, .. } = *params;
    let gamma_margin = 1.0 / l - gamma;
    let gamma_ok = gamma > 0.0 && gamma_margin >= -1e-15 / l;
    let kp_eq_ki = (kp - ki).abs() <= 1e-12 * kp.abs().max(ki.abs());
    let p_lower = (kp * l / 3.0).max(kp * (1.0 - 2.0 * gamma * rho) / gamma);
    let p_upper = kp / gamma;
    let slack = 1e-12 * p_upper.abs();
    let p_margins = (p - p_lower, p_upper - p);
    let p_ok = p_lower <= p_upper && p_margins.0 >= -slack && p_margins.1 >= -slack;
    Ok(GainCertificate {
        gamma_ok,
        gamma_margin,
        p_lower,
        p_upper,
        p_ok,
        p_margins,
        kp_eq_ki,
        rho,
        l,
        certified: gamma_ok && kp_eq_ki && p_ok,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianSource {
    Exact,
    FiniteDifference,
}

#[derive(Clone, Debug)]
pub struct FieldJacobian {
    pub matrix: Matrix,
    pub hessian: Matrix,
    pub hessian_source: HessianSource,
}

/// `∇²f(x)`, exact when available, else central differences of `∇f`.
pub fn hessian_at(prob: &CompositeProblem, x: &[f64]) -> Result<(Matrix, HessianSource)> {
    check_len("hessian point", prob.n(), x.len())?;
    if let Some(h) = prob.smooth.hessian(x) {
        if h.rows() != prob.n() || h.cols() != prob.n() {
            return Err(Error::DimensionMismatch {
                context: "hessian",
                expected: prob.n(),
                found: h.rows(),
            });
        }
        return Ok((h, HessianSource::Exact));
    }
    let n = prob.n();
    let mut h = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + HESSIAN_FD_STEP;
        let gp = prob.gradient(&xp)?;
        xp[j] = x[j] - HESSIAN_FD_STEP;
        let gm = prob.gradient(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * HESSIAN_FD_STEP);
        }
    }
    Ok((h, HessianSource::FiniteDifference))
}

/// Jacobian of the affine-constraint field with `G = diag(g_diag)`:
///
/// ```text
/// [ −I + G(I − γB)             −γ G Aᵀ      ]
/// [ (kᵢ − kₚ)A + kₚ A G(I − γB)  −γ kₚ A G Aᵀ ]
/// ```
pub fn field_jacobian(
    z: &State,
    prob: &CompositeProblem,
    con: &AffineConstraint,
    params: &SolverParams,
    g_diag: &[f64],
) -> Result<FieldJacobian> {
    prob.check_state(z)?;
    let (hessian, hessian_source) = hessian_at(prob, &z.x)?;
    let matrix = assemble_jacobian(&hessian, con.matrix(), params, g_diag)?;
    Ok(FieldJacobian {
        matrix,
        hessian,
        hessian_source,
    })
}

fn assemble_jacobian(b: &Matrix, a: &Matrix, params: &SolverParams, g: &[f64]) -> Result<Matrix> {
    let n = b.rows();
    let m = a.rows();
    check_len("constraint columns", n, a.cols())?;
    check_len("prox derivative", n, g.len())?;
    if g.iter().any(|gi| !(0.0..=1.0).contains(gi)) {
        return Err(Error::Precondition("prox derivative entries must lie in [0, 1]".into()));
    }
    let SolverParams { gamma, kp, ki, .. } = *params;
    let gm = Matrix::from_diagonal(g);
    // G(I − γB)
    let gib = gm.matmul(&(&Matrix::identity(n) - &b.scale(gamma)));
    let gat = gm.matmul(&a.transpose());

    let mut j = Matrix::zeros(n + m, n + m);
    j.set_block(0, 0, &(&gib - &Matrix::identity(n)));
    j.set_block(0, n, &gat.scale(-gamma));
    j.set_block(n, 0, &(&a.scale(ki - kp) + &a.matmul(&gib).scale(kp)));
    j.set_block(n, n, &a.matmul(&gat).scale(-gamma * kp));
    Ok(j)
}

/// The `2n × 2n` matrix `Q` with `−(JᵀP + PJ) = T Q Tᵀ`, `T = diag(I, A)`.
pub fn q_matrix(b: &Matrix, g_diag: &[f64], params: &SolverParams) -> Result<Matrix> {
    let n = b.rows();
    check_len("prox derivative", n, g_diag.len())?;
    let SolverParams { gamma, kp, ki, p_weight: p, .. } = *params;
    let id = Matrix::identity(n);
    let g = Matrix::from_diagonal(g_diag);
    let bg = b.matmul(&g);
    let gb = g.matmul(b);

    let q11 = &(&id.scale(2.0 * p) - &g.scale(2.0 * p)) + &(&bg + &gb).scale(p * gamma);
    let q12 = &id.scale(kp - ki)
        + &(&id.scale(gamma * p - kp) + &b.scale(gamma * kp)).matmul(&g);
    let q22 = g.scale(2.0 * gamma * kp);

    let mut q = Matrix::zeros(2 * n, 2 * n);
    q.set_block(0, 0, &q11);
    q.set_block(0, n, &q12);
    q.set_block(n, 0, &q12.transpose());
    q.set_block(n, n, &q22);
    Ok(q)
}

/// Minimum eigenvalue of the symmetric part of `Q`.
pub fn q_matrix_min_eigenvalue(b: &Matrix, g_diag: &[f64], params: &SolverParams) -> Result<f64> {
    let q = q_matrix(b, g_diag, params)?;
    Ok(symmetric_eigen(&q.symmetric_part())?.min())
}

/// Largest `μ_P(J)` over random states and random `g ∈ {0,1}ⁿ`.
///
/// Sample `i` draws from its own stream of `seed`, so the result does not
/// depend on thread scheduling.
pub fn weak_contraction_spot_check(
    prob: &CompositeProblem,
    con: &AffineConstraint,
    params: &SolverParams,
    metric: &BlockMetric,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    if num_samples == 0 {
        return Err(Error::Precondition("spot check needs at least one sample".into()));
    }
    let (n, m) = (prob.n(), prob.m());
    if metric.dims() != (n, m) {
        return Err(Error::DimensionMismatch {
            context: "metric",
            expected: n + m,
            found: metric.dims().0 + metric.dims().1,
        });
    }
    let p = metric.matrix();
    let values: Vec<f64> = (0..num_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::stream(seed, i as u64);
            let z = State::new(rng.normal_vec(n), rng.normal_vec(m));
            let g: Vec<f64> = (0..n).map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 }).collect();
            let j = field_jacobian(&z, prob, con, params, &g)?;
            weighted_lognorm(&j.matrix, &p)
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Checks `γ(GX + XG) + 2(I − G) ≻ (3/2)γX` for `G = diag(g)`.
pub fn appendix_lemma_check(x: &Matrix, gamma: f64, g: &[f64]) -> Result<bool> {
    Ok(appendix_lemma_margin(x, gamma, g)? > 0.0)
}

/// Minimum eigenvalue of `γ(GX + XG) + 2(I − G) − (3/2)γX`.
pub fn appendix_lemma_margin(x: &Matrix, gamma: f64, g: &[f64]) -> Result<f64> {
    let n = x.rows();
    if !x.is_square() || !x.is_symmetric(1e-12 * x.max_abs().max(1.0)) {
        return Err(Error::Precondition("X must be square and symmetric".into()));
    }
    check_len("diagonal weights", n, g.len())?;
    if g.iter().any(|gi| !(0.0..=1.0).contains(gi)) {
        return Err(Error::Precondition("weights must lie in [0, 1]".into()));
    }
    let eig = symmetric_eigen(x)?;
    if eig.min() <= 0.0 {
        return Err(Error::Precondition(format!(
            "X must be positive definite (min eigenvalue {:.3e})",
            eig.min()
        )));
    }
    if !(gamma > 0.0 && gamma * eig.max() <= 1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "need 0 < gamma <= 1/x_max (gamma = {gamma}, x_max = {})",
            eig.max()
        )));
    }
    let gm = Matrix::from_diagonal(g);
    let id = Matrix::identity(n);
    let lhs = &(&gm.matmul(x) + &x.matmul(&gm)).scale(gamma) + &(&id - &gm).scale(2.0);
    let diff = &lhs - &x.scale(1.5 * gamma);
    Ok(symmetric_eigen(&diff.symmetric_part())?.min())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::field_affine;
    use crate::model::Quadratic;
    use crate::prox::L1Norm;

    fn params(gamma: f64, kp: f64, ki: f64, p: f64) -> SolverParams {
        SolverParams {
            gamma,
            kp,
            ki,
            p_weight: p,
            dt: 0.01,
            t_end: 1.0,
            eq_tol: 1e-8,
        }
    }

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lognorm_examples() {
        let id = Matrix::identity(2);
        assert!((weighted_lognorm(&id.scale(-1.0), &id).unwrap() + 1.0).abs() < 1e-14);
        let d = Matrix::from_diagonal(&[-3.0, 2.0]);
        assert!((weighted_lognorm(&d, &id).unwrap() - 2.0).abs() < 1e-14);
        let nil = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((weighted_lognorm(&nil, &id).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lognorm_rejects_indefinite_weight() {
        let a = Matrix::identity(2);
        assert!(weighted_lognorm(&a, &Matrix::from_diagonal(&[1.0, -1.0])).is_err());
        assert!(weighted_lognorm(&a, &mat(&[&[1.0, 0.5], &[0.0, 1.0]])).is_err());
    }

    #[test]
    fn lognorm_is_invariant_under_weight_scaling() {
        let mut rng = SeededRng::new(4);
        let a = Matrix::from_fn(4, 4, |_, _| rng.normal());
        let p = Matrix::from_diagonal(&[3.0, 3.0, 1.0, 1.0]);
        let base = weighted_lognorm(&a, &p).unwrap();
        assert!((weighted_lognorm(&a, &p.scale(7.5)).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_examples() {
        assert!((hurwitz_check(&Matrix::identity(3).scale(-1.0)).unwrap() + 1.0).abs() < 1e-14);
        let rot = mat(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!(hurwitz_check(&rot).unwrap().abs() < 1e-14);
    }

    #[test]
    fn gain_certificate_cases() {
        let (rho, l): (f64, f64) = (10.0, 40.0);
        let gamma = (1.0 / l).min(4.0 * rho / (l * l) - 1e-4);
        let cert = validate_gain_conditions(rho, l, &params(gamma, 20.0, 20.0, 20.0 / gamma)).unwrap();
        assert!(cert.certified, "{:?}", cert.failures());

        let cert = validate_gain_conditions(rho, l, &params(gamma, 20.0, 21.0, 20.0 / gamma)).unwrap();
        assert!(!cert.certified && !cert.kp_eq_ki && cert.gamma_ok);

        let cert = validate_gain_conditions(rho, l, &params(2.0 / l, 20.0, 20.0, 10.0 * l)).unwrap();
        assert!(!cert.gamma_ok && !cert.certified);
        assert!(cert.gamma_margin < 0.0);

        let cert = validate_gain_conditions(rho, l, &params(gamma, 20.0, 20.0, 1.0)).unwrap();
        assert!(!cert.p_ok && !cert.certified);
        assert!(!cert.failures().is_empty());

        assert!(validate_gain_conditions(5.0, 1.0, &params(0.1, 1.0, 1.0, 1.0)).is_err());
    }

    fn lasso(seed: u64, n: usize, m: usize) -> (CompositeProblem, AffineConstraint, Matrix) {
        let mut rng = SeededRng::new(seed);
        let wt = Matrix::from_fn(n, n, |_, _| rng.normal());
        let w = &Matrix::identity(n).scale(10.0) + &wt.matmul(&wt.transpose());
        let con = AffineConstraint::new(Matrix::from_fn(m, n, |_, _| rng.normal()), rng.normal_vec(m)).unwrap();
        let prob = CompositeProblem::new(
            n,
            Arc::new(Quadratic::new(w.clone(), vec![0.0; n]).unwrap()),
            Arc::new(L1Norm { alpha: 1.0 }),
            Arc::new(con.clone()),
        )
        .unwrap();
        (prob, con, w)
    }

    #[test]
    fn jacobian_limits() {
        let (prob, con, w) = lasso(1, 5, 2);
        let p = params(0.02, 3.0, 5.0, 100.0);
        let z = State::zeros(5, 2);
        let j = field_jacobian(&z, &prob, &con, &p, &[1.0; 5]).unwrap();
        assert_eq!(j.hessian_source, HessianSource::Exact);
        let tl = j.matrix.block(0, 0, 5, 5);
        assert!((&tl - &w.scale(-0.02)).max_abs() < 1e-13);

        let j = field_jacobian(&z, &prob, &con, &p, &[0.0; 5]).unwrap();
        let a = con.matrix();
        assert!((&j.matrix.block(0, 0, 5, 5) + &Matrix::identity(5)).max_abs() == 0.0);
        assert_eq!(j.matrix.block(0, 5, 5, 2).max_abs(), 0.0);
        assert_eq!(j.matrix.block(5, 5, 2, 2).max_abs(), 0.0);
        assert!((&j.matrix.block(5, 0, 2, 5) - &a.scale(2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences_of_field() {
        let (prob, con, _) = lasso(2, 6, 3);
        let p = params(0.02, 3.0, 5.0, 100.0);
        let mut rng = SeededRng::new(8);
        let mut checked = 0;
        while checked < 20 {
            let z = State::new(rng.normal_vec(6), rng.normal_vec(3));
            let f0 = field_affine(&z, &prob, &con, &p).unwrap();
            let grad = prob.gradient(&z.x).unwrap();
            let at = con.matrix().matvec_transpose(&z.lambda);
            let arg: Vec<f64> = (0..6).map(|i| z.x[i] - p.gamma * (grad[i] + at[i])).collect();
            let tau = p.gamma;
            if arg.iter().any(|v| (v.abs() - tau).abs() < 1e-3) {
                continue;
            }
            checked += 1;
            let _ = f0;
            let g = prob.prox.derivative_diag(p.gamma, &arg);
            let j = field_jacobian(&z, &prob, &con, &p, &g).unwrap().matrix;
            let base = z.stacked();
            let h = 1e-7;
            for k in 0..9 {
                let mut zp = base.clone();
                let mut zm = base.clone();
                zp[k] += h;
                zm[k] -= h;
                let fp = field_affine(&State::from_stacked(6, &zp).unwrap(), &prob, &con, &p).unwrap().dz;
                let fm = field_affine(&State::from_stacked(6, &zm).unwrap(), &prob, &con, &p).unwrap().dz;
                for r in 0..9 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    assert!((fd - j[(r, k)]).abs() < 1e-5 * j[(r, k)].abs().max(1.0), "({r},{k}) {fd} vs {}", j[(r, k)]);
                }
            }
        }
    }

    #[test]
    fn finite_difference_hessian_is_flagged() {
        use crate::model::SmoothFn;
        use crate::prox::Zero;
        let smooth = SmoothFn::new(
            |x: &[f64]| x[0].powi(4) + x[0] * x[1],
            |x: &[f64]| vec![4.0 * x[0].powi(3) + x[1], x[0]],
        );
        let con = AffineConstraint::new(mat(&[&[1.0, 1.0]]), vec![0.0]).unwrap();
        let prob = CompositeProblem::new(2, Arc::new(smooth), Arc::new(Zero), Arc::new(con)).unwrap();
        let (h, src) = hessian_at(&prob, &[1.5, -2.0]).unwrap();
        assert_eq!(src, HessianSource::FiniteDifference);
        assert!((h[(0, 0)] - 27.0).abs() < 1e-5);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6 && (h[(1, 0)] - 1.0).abs() < 1e-6);
        assert!(h[(1, 1)].abs() < 1e-6);
    }

    #[test]
    fn q_matrix_congruence() {
        let (prob, con, w) = lasso(3, 6, 3);
        let mut rng = SeededRng::new(21);
        for _ in 0..20 {
            let p = params(0.01 + 0.02 * rng.uniform(), 1.0 + 5.0 * rng.uniform(), 1.0 + 5.0 * rng.uniform(), 50.0 * rng.uniform() + 1.0);
            let g: Vec<f64> = (0..6).map(|_| rng.uniform()).collect();
            let j = field_jacobian(&State::zeros(6, 3), &prob, &con, &p, &g).unwrap().matrix;
            let pm = BlockMetric::new(p.p_weight, 6, 3).unwrap().matrix();
            let lhs = (&j.transpose().matmul(&pm) + &pm.matmul(&j)).scale(-1.0);
            let mut t = Matrix::zeros(9, 12);
            t.set_block(0, 0, &Matrix::identity(6));
            t.set_block(6, 6, con.matrix());
            let rhs = t.matmul(&q_matrix(&w, &g, &p).unwrap()).matmul(&t.transpose());
            assert!((&lhs - &rhs).max_abs() < 1e-9 * lhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn spot_check_on_certified_lasso() {
        let (prob, con, w) = lasso(5, 10, 5);
        let eig = symmetric_eigen(&w).unwrap();
        let (rho, l) = (eig.min(), eig.max());
        let gamma = (1.0 / l).min(4.0 * rho / (l * l) - 1e-4);
        let p = params(gamma, 20.0, 20.0, 20.0 / gamma);
        assert!(validate_gain_conditions(rho, l, &p).unwrap().certified);
        let metric = BlockMetric::new(p.p_weight, 10, 5).unwrap();
        let worst = weak_contraction_spot_check(&prob, &con, &p, &metric, 200, 7).unwrap();
        assert!(worst <= 1e-8, "{worst}");
        let again = weak_contraction_spot_check(&prob, &con, &p, &metric, 200, 7).unwrap();
        assert_eq!(worst, again);
        assert!(q_matrix_min_eigenvalue(&w, &[1.0; 10], &p).unwrap() >= -1e-10);
    }

    #[test]
    fn spot_check_detects_oversized_step() {
        let (prob, con, w) = lasso(5, 10, 5);
        let l = symmetric_eigen(&w).unwrap().max();
        let gamma = 10.0 / l;
        let p = params(gamma, 20.0, 20.0, 20.0 / gamma);
        let metric = BlockMetric::new(p.p_weight, 10, 5).unwrap();
        let worst = weak_contraction_spot_check(&prob, &con, &p, &metric, 200, 0).unwrap();
        assert!(worst > 1e-3, "{worst}");
        assert!(q_matrix_min_eigenvalue(&w, &[1.0; 10], &p).unwrap() < 0.0);
    }

    #[test]
    fn appendix_lemma_limits() {
        let x = Matrix::from_diagonal(&[1.0, 2.0, 4.0]);
        let gamma = 0.25;
        let m1 = appendix_lemma_margin(&x, gamma, &[1.0; 3]).unwrap();
        assert!((m1 - 0.5 * gamma * 1.0).abs() < 1e-14);
        let m0 = appendix_lemma_margin(&x, gamma, &[0.0; 3]).unwrap();
        assert!((m0 - (2.0 - 1.5 * gamma * 4.0)).abs() < 1e-14);
        assert!(m0 >= 0.5);
        assert!(appendix_lemma_check(&x, 0.5, &[1.0; 3]).is_err());
        assert!(appendix_lemma_check(&Matrix::from_diagonal(&[1.0, -1.0]), 0.1, &[1.0; 2]).is_err());
        assert!(appendix_lemma_check(&x, gamma, &[1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn appendix_lemma_random_cases() {
        let mut rng = SeededRng::new(500);
        for _ in 0..500 {
            let n = 1 + (rng.next_u64() % 8) as usize;
            let r = Matrix::from_fn(n, n, |_, _| rng.normal());
            let x = &r.matmul(&r.transpose()) + &Matrix::identity(n).scale(0.01 + rng.uniform());
            let x = x.symmetric_part();
            let x_max = symmetric_eigen(&x).unwrap().max();
            let gamma = rng.uniform_in(0.01, 1.0) / x_max;
            let g: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            assert!(appendix_lemma_check(&x, gamma, &g).unwrap());
        }
    }
}
