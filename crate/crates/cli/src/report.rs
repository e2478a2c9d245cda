//! Summary JSON and CSV writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use pipgd::analysis::{EnvelopeFit, GainCertificate};
use pipgd::linalg::Matrix;
use pipgd::{BlockMetric, State, Trajectory};
use serde::Serialize;
use serde_json::{Map, Value};

pub const BUILD_ID: &str = env!("PIPGD_BUILD_ID");

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }

    /// `value < bound`, with the comparison spelled out in the detail.
    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value < bound, format!("{value:.6e} < {bound:.1e}"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub cost: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TerminalReport {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub cost: f64,
    pub residuals: Map<String, Value>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub config: Value,
    pub certificate: Option<GainCertificate>,
    pub oracle: Option<PointReport>,
    pub terminal: Option<TerminalReport>,
    pub envelope: Option<EnvelopeFit>,
    pub checks: Vec<Check>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Summary {
    pub fn new(config: Value) -> Self {
        Self {
            config,
            certificate: None,
            oracle: None,
            terminal: None,
            envelope: None,
            checks: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(name), text + "\n").with_context(|| format!("writing {name}"))
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    let path = dir.join(name);
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// `t,x_0..,lambda_0..,h_residual,field_norm_P[,dist_P]`
pub fn write_trace(
    dir: &Path,
    name: &str,
    traj: &Trajectory,
    metric: &BlockMetric,
    target: Option<&State>,
) -> Result<()> {
    let (n, m) = metric.dims();
    let mut w = create(dir, name)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend((0..m).map(|i| format!("lambda_{i}")));
    header.push("h_residual".into());
    header.push("field_norm_P".into());
    if target.is_some() {
        header.push("dist_P".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for k in 0..traj.len() {
        let z = &traj.states[k];
        let mut row: Vec<String> = vec![traj.times[k].to_string()];
        row.extend(z.x.iter().map(f64::to_string));
        row.extend(z.lambda.iter().map(f64::to_string));
        row.push(traj.residuals[k].to_string());
        row.push(traj.field_norms[k].to_string());
        if let Some(t) = target {
            row.push(metric.distance(z, t)?.to_string());
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Named columns of equal length.
pub fn write_columns(dir: &Path, name: &str, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut w = create(dir, name)?;
    let header: Vec<&str> = columns.iter().map(|c| c.0).collect();
    writeln!(w, "{}", header.join(","))?;
    let rows = columns.first().map_or(0, |c| c.1.len());
    for k in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| c.1[k].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix(dir: &Path, name: &str, mat: &Matrix) -> Result<()> {
    let mut w = create(dir, name)?;
    for i in 0..mat.rows() {
        let row: Vec<String> = mat.row(i).iter().map(f64::to_string).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn residual_map(pairs: &[(&str, f64)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect()
}
