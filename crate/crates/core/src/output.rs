//! Plain-text result files: comma-separated tables with a mandatory header
//! row and flat `key=value` summaries. Numbers carry 17 significant digits;
//! line endings are LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::bellman::BellmanSolution;
use crate::Error;

/// A number with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// CSV text with a header row and numeric rows.
pub fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&x| num(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), Error>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    write(path, &csv_text(header, rows))
}

/// A value in a `key=value` summary.
#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as u64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

pub fn kv_text(entries: &[(&str, Value)]) -> String {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = match v {
            Value::Num(x) => writeln!(s, "{k}={}", num(*x)),
            Value::Int(i) => writeln!(s, "{k}={i}"),
            Value::Text(t) => writeln!(s, "{k}={t}"),
        };
    }
    s
}

pub fn write_kv(path: &Path, entries: &[(&str, Value)]) -> Result<(), Error> {
    write(path, &kv_text(entries))
}

/// `z, v, f, theta` table, preceded by a `#` line with the run parameters.
pub fn policy_text(sol: &BellmanSolution) -> String {
    let p = &sol.params;
    let mut s = format!(
        "# sigma2={},b={},p={},gamma={},residual_max={}\n",
        num(p.sigma2),
        num(p.b),
        num(p.p),
        num(sol.gamma),
        num(sol.residual_max)
    );
    let rows = (0..sol.z.len()).map(|i| [sol.z[i], sol.v[i], sol.f[i], sol.theta[i]]);
    s.push_str(&csv_text(&["z", "v", "f", "theta"], rows));
    s
}

pub fn write_policy(path: &Path, sol: &BellmanSolution) -> Result<(), Error> {
    write(path, &policy_text(sol))
}
