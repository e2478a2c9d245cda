use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Relative tolerance on local log-slopes when locating the crossover.
const SLOPE_TOLERANCE: f64 = 0.05;
/// Fraction of samples used for the exponential-rate fit.
const TAIL_FRACTION: f64 = 0.2;
const Q_INFLATION: f64 = 1e-9;

/// Piecewise bound: `q − c_lin·t` up to `t_cross`, then
/// `(q − c_lin·t_cross)·exp(−c_exp·(t − t_cross))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub q: f64,
    pub c_lin: f64,
    pub t_cross: f64,
    pub c_exp: f64,
    pub max_violation: f64,
}

impl EnvelopeFit {
    pub fn evaluate(&self, t: f64) -> f64 {
        if t <= self.t_cross {
            self.q - self.c_lin * t
        } else {
            (self.q - self.c_lin * self.t_cross) * (-self.c_exp * (t - self.t_cross)).exp()
        }
    }
}

/// Least-squares slope of `y` against `t`.
fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let k = t.len() as f64;
    let tm = t.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let (mut num, mut den) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        num += (ti - tm) * (yi - ym);
        den += (ti - tm) * (ti - tm);
    }
    num / den
}

/// Fits a linear-then-exponential envelope above sampled distances.
pub fn envelope_fit(times: &[f64], distances: &[f64]) -> Result<EnvelopeFit> {
    check_len("envelope samples", times.len(), distances.len())?;
    let n = times.len();
    if n < 10 {
        return Err(Error::Precondition(format!("envelope fit needs at least 10 samples, got {n}")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("sample times must be increasing".into()));
    }
    if let Some(i) = distances.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::Precondition(format!("distance {i} is not positive and finite")));
    }

    let tail_start = n - ((n as f64 * TAIL_FRACTION).ceil() as usize).max(3);
    let tail = &distances[tail_start..];
    if let Some(k) = tail.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::Precondition(format!(
            "distance tail is not monotone at t = {}",
            times[tail_start + k + 1]
        )));
    }
    let logs: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let c_exp = -ls_slope(&times[tail_start..], &logs[tail_start..]);
    if !(c_exp > 0.0) {
        return Err(Error::Precondition(format!("no exponential decay in the tail (rate {c_exp})")));
    }

    // earliest sample after which every local slope agrees with the tail rate
    let w = (n / 100).max(1);
    let mut cross = 0;
    for k in 0..tail_start {
        let end = (k + w).min(n - 1);
        let slope = (logs[end] - logs[k]) / (times[end] - times[k]);
        if (slope + c_exp).abs() > SLOPE_TOLERANCE * c_exp {
            cross = k + 1;
        }
    }
    let cross = cross.min(tail_start);
    let t_cross = times[cross];

    let d_cross = (cross..n)
        .map(|k| distances[k] * (c_exp * (times[k] - t_cross)).exp())
        .fold(0.0, f64::max);
    let c_lin = (0..cross)
        .map(|k| (distances[k] - d_cross) / (t_cross - times[k]))
        .fold(0.0, f64::max);
    let q = d_cross + c_lin * t_cross + Q_INFLATION;

    let mut fit = EnvelopeFit {
        q,
        c_lin,
        t_cross,
        c_exp,
        max_violation: 0.0,
    };
    fit.max_violation = times
        .iter()
        .zip(distances)
        .map(|(&t, &d)| d - fit.evaluate(t))
        .fold(0.0, f64::max);
    Ok(fit)
}
