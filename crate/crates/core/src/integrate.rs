//! Fixed-step integration of the primal–dual flow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{field_affine, field_general};
use crate::error::{check_len, check_positive, Error, Result};
use crate::linalg::norm2;
use crate::model::{
    AffineConstraint, BlockMetric, CompositeProblem, RunStatus, SolverParams, State, Trajectory,
};

/// An autonomous vector field `ż = F(z)` on primal–dual states.
pub trait Flow: Sync {
    /// `(n, m)` block sizes of the state.
    fn dims(&self) -> (usize, usize);

    /// `F(z)` as a state-shaped vector.
    fn velocity(&self, z: &State) -> Result<State>;

    /// Constraint violation `‖h(x)‖₂` recorded alongside each sample.
    fn residual(&self, z: &State) -> Result<f64>;
}

/// PI–PGD on a general constraint.
pub struct GeneralFlow<'a> {
    pub prob: &'a CompositeProblem,
    pub params: &'a SolverParams,
}

impl Flow for GeneralFlow<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.prob.n(), self.prob.m())
    }

    fn velocity(&self, z: &State) -> Result<State> {
        let f = field_general(z, self.prob, self.params)?;
        Ok(State::new(f.dx, f.dlambda))
    }

    fn residual(&self, z: &State) -> Result<f64> {
        Ok(norm2(&self.prob.constraint_value(&z.x)?))
    }
}

/// PI–PGD on an affine constraint.
pub struct AffineFlow<'a> {
    pub prob: &'a CompositeProblem,
    pub con: &'a AffineConstraint,
    pub params: &'a SolverParams,
}

impl Flow for AffineFlow<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.prob.n(), self.prob.m())
    }

    fn velocity(&self, z: &State) -> Result<State> {
        let f = field_affine(z, self.prob, self.con, self.params)?;
        Ok(State::new(f.dx, f.dlambda))
    }

    fn residual(&self, z: &State) -> Result<f64> {
        Ok(norm2(&self.con.residual(&z.x)))
    }
}

/// Closure-backed flow; the recorded residual is always zero.
pub struct FnFlow<F> {
    n: usize,
    m: usize,
    f: F,
}

impl<F: Fn(&State) -> State + Sync> FnFlow<F> {
    pub fn new(n: usize, m: usize, f: F) -> Self {
        Self { n, m, f }
    }
}

impl<F: Fn(&State) -> State + Sync> Flow for FnFlow<F> {
    fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    fn velocity(&self, z: &State) -> Result<State> {
        Ok((self.f)(z))
    }

    fn residual(&self, _z: &State) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(format!("unknown integration method `{other}` (expected euler|rk4)")),
        }
    }
}

fn checked_velocity(flow: &dyn Flow, z: &State) -> Result<State> {
    let v = flow.velocity(z)?;
    check_len("field primal block", z.x.len(), v.x.len())?;
    check_len("field dual block", z.lambda.len(), v.lambda.len())?;
    v.check_finite("vector field")?;
    Ok(v)
}

/// `z + h·v`
fn shifted(z: &State, h: f64, v: &State) -> State {
    State::new(
        z.x.iter().zip(&v.x).map(|(a, b)| a + h * b).collect(),
        z.lambda.iter().zip(&v.lambda).map(|(a, b)| a + h * b).collect(),
    )
}

/// Forward Euler step `z + dt·F(z)`.
pub fn euler_step(flow: &dyn Flow, z: &State, dt: f64) -> Result<State> {
    check_positive("dt", dt)?;
    let k1 = checked_velocity(flow, z)?;
    Ok(shifted(z, dt, &k1))
}

fn euler_from(z: &State, dt: f64, k1: &State) -> Result<State> {
    let next = shifted(z, dt, k1);
    next.check_finite("state")?;
    Ok(next)
}

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step(flow: &dyn Flow, z: &State, dt: f64) -> Result<State> {
    check_positive("dt", dt)?;
    let k1 = checked_velocity(flow, z)?;
    rk4_from(flow, z, dt, &k1)
}

fn rk4_from(flow: &dyn Flow, z: &State, dt: f64, k1: &State) -> Result<State> {
    let k2 = checked_velocity(flow, &shifted(z, 0.5 * dt, k1))?;
    let k3 = checked_velocity(flow, &shifted(z, 0.5 * dt, &k2))?;
    let k4 = checked_velocity(flow, &shifted(z, dt, &k3))?;
    let combine = |a: &[f64], b1: &[f64], b2: &[f64], b3: &[f64], b4: &[f64]| -> Vec<f64> {
        (0..a.len())
            .map(|i| a[i] + dt / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i]))
            .collect()
    };
    let next = State::new(
        combine(&z.x, &k1.x, &k2.x, &k3.x, &k4.x),
        combine(&z.lambda, &k1.lambda, &k2.lambda, &k3.lambda, &k4.lambda),
    );
    next.check_finite("state")?;
    Ok(next)
}

/// Number of fixed steps covering `[0, t_end]`.
pub fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    check_positive("dt", dt)?;
    check_positive("t_end", t_end)?;
    let steps = (t_end / dt).round();
    if steps < 1.0 || (steps * dt - t_end).abs() > 1e-6 * dt {
        return Err(Error::Precondition(format!(
            "step size {dt} does not divide the horizon {t_end}"
        )));
    }
    Ok(steps as usize)
}

/// Integrates `flow` from `z0` over `[0, params.t_end]` with step `params.dt`,
/// recording every `record_stride`-th step plus the final one.
///
/// A non-finite value stops the run; the samples gathered so far are kept
/// and the failure is reported in [`Trajectory::status`].
pub fn simulate(
    flow: &dyn Flow,
    z0: &State,
    params: &SolverParams,
    method: Method,
    record_stride: usize,
) -> Result<Trajectory> {
    if record_stride == 0 {
        return Err(Error::Precondition("record stride must be positive".into()));
    }
    let steps = step_count(params.dt, params.t_end)?;
    let (n, m) = flow.dims();
    check_len("initial primal block", n, z0.x.len())?;
    check_len("initial dual block", m, z0.lambda.len())?;
    let metric = BlockMetric::new(params.p_weight, n, m)?;
    let dt = params.dt;

    let capacity = steps / record_stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        residuals: Vec::with_capacity(capacity),
        field_norms: Vec::with_capacity(capacity),
        status: RunStatus::Completed,
    };
    let mut z = z0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let step = (|| -> Result<Option<State>> {
            z.check_finite("state")?;
            let v = checked_velocity(flow, &z)?;
            if k % record_stride == 0 || k == steps {
                let residual = flow.residual(&z)?;
                traj.times.push(t);
                traj.states.push(z.clone());
                traj.residuals.push(residual);
                traj.field_norms.push(metric.norm_parts(&v.x, &v.lambda));
            }
            if k == steps {
                return Ok(None);
            }
            let next = match method {
                Method::Euler => euler_from(&z, dt, &v)?,
                Method::Rk4 => rk4_from(flow, &z, dt, &v)?,
            };
            Ok(Some(next))
        })();
        match step {
            Ok(Some(next)) => z = next,
            Ok(None) => break,
            Err(error) => {
                traj.status = RunStatus::Aborted { time: t, error };
                break;
            }
        }
    }
    Ok(traj)
}

/// Consecutive samples required below the tolerance.
pub const EQUILIBRIUM_WINDOW: usize = 10;

/// First recorded state whose `‖ż‖_P` stays below `eq_tol` for
/// [`EQUILIBRIUM_WINDOW`] consecutive samples.
pub fn detect_equilibrium(traj: &Trajectory, eq_tol: f64) -> Option<State> {
    let norms = &traj.field_norms;
    if norms.len() < EQUILIBRIUM_WINDOW {
        return None;
    }
    (0..=norms.len() - EQUILIBRIUM_WINDOW)
        .find(|&i| norms[i..i + EQUILIBRIUM_WINDOW].iter().all(|&v| v < eq_tol))
        .map(|i| traj.states[i].clone())
}
