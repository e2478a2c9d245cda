pub mod certify;
pub mod lasso;
pub mod nonlinear;
pub mod ot;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use pipgd::problems::LassoInstance;
use pipgd::SolverParams;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::args::{Flags, GammaArg};
use crate::report::BUILD_ID;
use crate::UsageError;

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading fixture {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("fixture {}: {e}", path.display())))
}

pub(crate) fn plain_gamma(g: Option<GammaArg>) -> Result<Option<f64>> {
    match g {
        None => Ok(None),
        Some(GammaArg::Value(v)) => positive("gamma", v).map(Some),
        Some(GammaArg::OverL(_)) => Err(usage("gamma as a multiple of 1/L only applies to lasso and certify")),
    }
}

/// Applies gain, step and horizon flags on top of `base`.
pub(crate) fn override_params(mut p: SolverParams, flags: &Flags) -> Result<SolverParams> {
    if let Some(v) = flags.kp {
        p.kp = positive("kp", v)?;
    }
    if let Some(v) = flags.ki {
        p.ki = positive("ki", v)?;
    }
    if let Some(v) = flags.p_weight {
        p.p_weight = positive("p-weight", v)?;
    }
    if let Some(v) = flags.dt {
        p.dt = positive("dt", v)?;
    }
    if let Some(v) = flags.t_end {
        p.t_end = positive("t-end", v)?;
    }
    pipgd::integrate::step_count(p.dt, p.t_end).map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

pub(crate) fn lasso_instance(flags: &Flags) -> Result<LassoInstance> {
    if let Some(path) = &flags.fixture {
        let inst: LassoInstance = load_json(path)?;
        inst.constraint().map_err(|e| usage(format!("fixture constraint: {e}")))?;
        return Ok(inst);
    }
    let n = flags.n.unwrap_or(10);
    let m = flags.m.unwrap_or(5);
    if m == 0 || m > n {
        return Err(usage(format!("need n >= m >= 1, got n = {n}, m = {m}")));
    }
    let alpha = flags.alpha.unwrap_or(1.0);
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(usage(format!("--alpha must be nonnegative, got {alpha}")));
    }
    Ok(pipgd::problems::make_constrained_lasso(n, m, alpha, flags.seed)?)
}

/// Reference settings for the LASSO experiment, then flag overrides.
/// `p` follows `k_p/γ` unless given.
pub(crate) fn lasso_params(inst: &LassoInstance, flags: &Flags) -> Result<SolverParams> {
    let mut p = inst.default_params();
    match flags.gamma {
        Some(GammaArg::Value(v)) => p.gamma = positive("gamma", v)?,
        Some(GammaArg::OverL(k)) => p.gamma = positive("gamma", k)? / inst.l,
        None => {}
    }
    let mut p = override_params(p, flags)?;
    if flags.p_weight.is_none() {
        p.p_weight = p.kp / p.gamma;
    }
    Ok(p)
}

pub(crate) fn config(command: &str, flags: &Flags, resolved: Value) -> Value {
    json!({
        "command": command,
        "build": BUILD_ID,
        "flags": flags,
        "resolved": resolved,
    })
}

/// Every sample in the final fifth is no larger than its predecessor.
pub(crate) fn monotone_tail(d: &[f64]) -> bool {
    let start = d.len() - (d.len() / 5).max(2).min(d.len());
    d[start..].windows(2).all(|w| w[1] <= w[0])
}
