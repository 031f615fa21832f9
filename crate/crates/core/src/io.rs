//! CSV and key=value serialization of profiles, solutions and bound curves.
//!
//! Floats are written with 17 significant digits so that every value reads
//! back bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::bounds::{BoundResult, Branch};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::radial::{RadialGrid, RadialProfile};
use crate::solvers::{TfSolution, TfwSolution};

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("cannot read {what} from {s:?}")))
}

/// Path of the key=value sidecar that accompanies a solution CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV with the given header into columns of doubles.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_path(path)?;
    let found: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        for (j, name) in header.iter().enumerate() {
            let cell = rec.get(j).ok_or_else(|| {
                Error::Parse(format!("{}: row {} has no {name} column", path.display(), line + 2))
            })?;
            cols[j].push(parse_f64(cell, name)?);
        }
    }
    Ok(cols)
}

/// Writes a profile as `r,value`.
pub fn write_profile(path: &Path, profile: &RadialProfile) -> Result<()> {
    write_table(
        path,
        &["r", "value"],
        profile.nodes().iter().zip(profile.values()).map(|(r, v)| vec![fmt_f64(*r), fmt_f64(*v)]),
    )
}

/// Reads a profile written by [`write_profile`].
pub fn read_profile(path: &Path) -> Result<RadialProfile> {
    let mut cols = read_table(path, &["r", "value"])?;
    let values = cols.pop().unwrap_or_default();
    let grid = RadialGrid::from_nodes(cols.pop().unwrap_or_default())?;
    RadialProfile::new(Arc::new(grid), values)
}

/// Reads a `key=value` file. Blank lines and lines starting with `#` are
/// skipped.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("{}:{}: expected key=value, got {line:?}", path.display(), i + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn write_key_values(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let text: String = pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(path, text)?;
    Ok(())
}

fn lookup(map: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<f64> {
    let v = map
        .get(key)
        .ok_or_else(|| Error::Parse(format!("{}: missing key {key}", path.display())))?;
    parse_f64(v, key)
}

/// Writes a TFW solution as `r,psi,phi,rho,P` plus its sidecar.
pub fn write_solution(path: &Path, sol: &TfwSolution) -> Result<()> {
    let p_fn = sol.p_profile();
    let r = sol.psi.nodes();
    let psi = sol.psi.values();
    let phi = sol.phi.values();
    let pv = p_fn.values();
    write_table(
        path,
        &["r", "psi", "phi", "rho", "P"],
        (0..r.len()).map(|i| {
            vec![fmt_f64(r[i]), fmt_f64(psi[i]), fmt_f64(phi[i]), fmt_f64(psi[i] * psi[i]), fmt_f64(pv[i])]
        }),
    )?;
    let t = &sol.terms;
    write_key_values(
        &sidecar_path(path),
        &[
            ("p", fmt_f64(sol.params.p)),
            ("gamma", fmt_f64(sol.params.gamma)),
            ("A", fmt_f64(sol.params.big_a)),
            ("Z", fmt_f64(sol.params.z)),
            ("N", fmt_f64(sol.n_particles)),
            ("Q", fmt_f64(sol.q)),
            ("T", fmt_f64(t.kinetic)),
            ("F", fmt_f64(t.tf)),
            ("Aterm", fmt_f64(t.attraction)),
            ("D", fmt_f64(t.repulsion)),
            ("euler_residual", fmt_f64(sol.euler_residual)),
            ("iterations", sol.iterations.to_string()),
        ],
    )
}

/// Reads a TFW solution written by [`write_solution`].
///
/// Only `ψ`, `φ`, the parameters and the iteration count are taken from
/// disk; every derived quantity is recomputed.
pub fn read_solution(path: &Path) -> Result<TfwSolution> {
    let cols = read_table(path, &["r", "psi", "phi", "rho", "P"])?;
    let meta_path = sidecar_path(path);
    let meta = read_key_values(&meta_path)?;
    let params = ModelParams::atom(
        lookup(&meta, "p", &meta_path)?,
        lookup(&meta, "gamma", &meta_path)?,
        lookup(&meta, "A", &meta_path)?,
        lookup(&meta, "Z", &meta_path)?,
    )?;
    let iterations = meta
        .get("iterations")
        .map(|s| s.parse::<usize>())
        .transpose()
        .map_err(|e| Error::Parse(format!("{}: iterations: {e}", meta_path.display())))?
        .unwrap_or(0);
    let grid = Arc::new(RadialGrid::from_nodes(cols[0].clone())?);
    let psi = RadialProfile::new(grid.clone(), cols[1].clone())?;
    let phi = RadialProfile::new(grid, cols[2].clone())?;
    TfwSolution::assemble(params, psi, phi, iterations)
}

/// Writes a TF solution as `r,phi,rho` plus a sidecar with `p, gamma, Z, N,
/// slope, stages`.
pub fn write_tf_solution(path: &Path, sol: &TfSolution) -> Result<()> {
    let r = sol.phi.nodes();
    let phi = sol.phi.values();
    let rho = sol.rho.values();
    write_table(
        path,
        &["r", "phi", "rho"],
        (0..r.len()).map(|i| vec![fmt_f64(r[i]), fmt_f64(phi[i]), fmt_f64(rho[i])]),
    )?;
    write_key_values(
        &sidecar_path(path),
        &[
            ("p", fmt_f64(sol.params.p)),
            ("gamma", fmt_f64(sol.params.gamma)),
            ("Z", fmt_f64(sol.params.z)),
            ("N", fmt_f64(sol.n_particles)),
            ("slope", fmt_f64(sol.slope)),
            ("stages", sol.stages.to_string()),
        ],
    )
}

/// One row of a bound-curve CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub p: f64,
    pub b: f64,
    pub branch: Branch,
    pub lambda: f64,
    pub big_r: f64,
    pub r: f64,
}

impl From<&BoundResult> for CurveRow {
    fn from(res: &BoundResult) -> Self {
        let o = res.attained();
        Self { p: res.p, b: res.b_value, branch: res.branch, lambda: o.lambda, big_r: o.big_r, r: o.r }
    }
}

/// Writes a bound curve as `p,B,branch,lambda,R,r`, using the optimizer of
/// the attaining branch.
pub fn write_curve(path: &Path, results: &[BoundResult]) -> Result<()> {
    write_table(
        path,
        &["p", "B", "branch", "lambda", "R", "r"],
        results.iter().map(CurveRow::from).map(|c| {
            vec![
                fmt_f64(c.p),
                fmt_f64(c.b),
                c.branch.to_string(),
                fmt_f64(c.lambda),
                fmt_f64(c.big_r),
                fmt_f64(c.r),
            ]
        }),
    )
}

/// Reads a bound curve written by [`write_curve`].
pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let get = |j: usize, name: &str| parse_f64(rec.get(j).unwrap_or(""), name);
        let branch = match rec.get(2).map(str::trim) {
            Some("F") => Branch::F,
            Some("G") => Branch::G,
            other => return Err(Error::Parse(format!("unknown branch {other:?}"))),
        };
        rows.push(CurveRow {
            p: get(0, "p")?,
            b: get(1, "B")?,
            branch,
            lambda: get(3, "lambda")?,
            big_r: get(4, "R")?,
            r: get(5, "r")?,
        });
    }
    Ok(rows)
}
