//! Plain-text CSV formats. Numbers are written with 17 significant digits,
//! which reproduces every f64 exactly on reload.

use std::fmt::Write as _;
use std::path::Path;

use flock_core::dynamics::{ParticleState, Snapshot};
use flock_core::transport::{DiscreteMeasure, GroundMetric};
use flock_core::EmpiricalMeasure;

use crate::HarnessError;

pub const SNAPSHOT_HEADER: &str = "# N d time model_hash seed";
pub const DISCRETE_HEADER: &str = "# discrete";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header fields of a snapshot file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotMeta {
    pub model_hash: String,
    pub seed: u64,
}

pub fn write_snapshot(state: &ParticleState, meta: &SnapshotMeta) -> String {
    let (n, d) = (state.len(), state.dim());
    let mut out = String::with_capacity(64 + n * (1 + 2 * d) * 24);
    let _ = writeln!(out, "{SNAPSHOT_HEADER}");
    let _ = writeln!(out, "# {n} {d} {} {} {}", num(state.time), meta.model_hash, meta.seed);
    for i in 0..n {
        let _ = write!(out, "{i}");
        for k in 0..d {
            let _ = write!(out, ",{}", num(state.x(i, k)));
        }
        for k in 0..d {
            let _ = write!(out, ",{}", num(state.v(i, k)));
        }
        out.push('\n');
    }
    out
}

fn format_err(path: &str, line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Format { path: path.into(), line, message: message.into() }
}

fn parse_row(path: &str, line_no: usize, line: &str, width: usize) -> Result<Vec<f64>, HarnessError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != width {
        return Err(format_err(path, line_no, format!("expected {width} fields, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format_err(path, line_no, format!("not a finite number: {f:?}")))
        })
        .collect()
}

pub fn read_snapshot(text: &str, path: &str) -> Result<(ParticleState, SnapshotMeta), HarnessError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == SNAPSHOT_HEADER => {}
        _ => return Err(format_err(path, 1, format!("missing header {SNAPSHOT_HEADER:?}"))),
    }
    let (hl, header) = lines.next().ok_or_else(|| format_err(path, 2, "missing header values"))?;
    let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
    let bad = || format_err(path, hl, "header values must be: N d time model_hash seed");
    if fields.len() != 5 {
        return Err(bad());
    }
    let n: usize = fields[0].parse().map_err(|_| bad())?;
    let d: usize = fields[1].parse().map_err(|_| bad())?;
    let time: f64 = fields[2].parse().map_err(|_| bad())?;
    let seed: u64 = fields[4].parse().map_err(|_| bad())?;
    if n == 0 || d == 0 {
        return Err(bad());
    }
    let mut xs = Vec::with_capacity(n * d);
    let mut vs = Vec::with_capacity(n * d);
    let mut count = 0;
    for (k, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(path, k, line, 1 + 2 * d)?;
        if row[0] != count as f64 {
            return Err(format_err(path, k, format!("expected particle id {count}")));
        }
        xs.extend_from_slice(&row[1..1 + d]);
        vs.extend_from_slice(&row[1 + d..]);
        count += 1;
    }
    if count != n {
        return Err(format_err(path, hl, format!("header declares {n} particles, file has {count}")));
    }
    let state = ParticleState::from_rows(d, time, &xs, &vs).map_err(|e| format_err(path, hl, e.to_string()))?;
    Ok((state, SnapshotMeta { model_hash: fields[3].to_string(), seed }))
}

pub fn write_discrete(mu: &DiscreteMeasure) -> String {
    let mut out = format!("{DISCRETE_HEADER} {}\n", mu.dim());
    for i in 0..mu.len() {
        out.push_str(&num(mu.weight(i)));
        for c in mu.point(i) {
            let _ = write!(out, ",{}", num(*c));
        }
        out.push('\n');
    }
    out
}

/// Rows "w, p_0..p_{k−1}" after a "# discrete k" header.
pub fn read_discrete(text: &str, path: &str) -> Result<DiscreteMeasure, HarnessError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let k: usize = lines
        .next()
        .and_then(|(_, l)| l.trim().strip_prefix(DISCRETE_HEADER))
        .and_then(|r| r.trim().parse().ok())
        .filter(|&k| k > 0)
        .ok_or_else(|| format_err(path, 1, format!("missing header \"{DISCRETE_HEADER} k\"")))?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(path, ln, line, 1 + k)?;
        weights.push(row[0]);
        points.extend_from_slice(&row[1..]);
    }
    DiscreteMeasure::new(k, points, weights).map_err(|e| format_err(path, 1, e.to_string()))
}

/// A measure read by [`read_measure`], with the metric split of its
/// position and velocity blocks.
#[derive(Debug, Clone)]
pub struct LoadedMeasure {
    pub measure: DiscreteMeasure,
    pub split: usize,
}

impl LoadedMeasure {
    pub fn metric(&self, sum: bool) -> GroundMetric {
        if sum {
            GroundMetric::SumOfNorms { split: self.split }
        } else {
            GroundMetric::Euclidean
        }
    }
}

/// Reads a snapshot file as its phase-space measure or a discrete-measure
/// file as is; the format is chosen from the first line.
pub fn read_measure(path: &Path) -> Result<LoadedMeasure, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::input_io(path, e))?;
    let name = path.display().to_string();
    if text.starts_with(DISCRETE_HEADER) {
        let measure = read_discrete(&text, &name)?;
        let split = measure.dim() / 2;
        Ok(LoadedMeasure { measure, split })
    } else {
        let (state, _) = read_snapshot(&text, &name)?;
        let measure = DiscreteMeasure::from_empirical(&EmpiricalMeasure::from_particles(&state));
        Ok(LoadedMeasure { measure, split: state.dim() })
    }
}

pub fn moments_header(d: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..d).map(|k| format!("V1_{k}")));
    cols.extend((0..d).map(|k| format!("X1_{k}")));
    cols.extend(["V2", "X2", "Gf", "Gamma", "support_radius", "Lambda"].map(String::from));
    cols.join(",")
}

/// One row per snapshot; Λ = √Gf.
pub fn write_moments(snapshots: &[Snapshot], d: usize) -> String {
    let mut out = moments_header(d);
    out.push('\n');
    for s in snapshots {
        let m = &s.moments;
        let mut row = vec![num(s.time)];
        row.extend(m.v1.iter().map(|&x| num(x)));
        row.extend(m.x1.iter().map(|&x| num(x)));
        row.extend([m.v2, m.x2, m.gf, m.gamma, m.support_radius, m.gf.max(0.0).sqrt()].map(num));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns of a CSV with a header row, parsed as numbers.
pub fn read_table(text: &str, path: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), HarnessError> {
    let mut lines = text.lines().enumerate();
    let header: Vec<String> = lines
        .next()
        .map(|(_, l)| l.split(',').map(|c| c.trim().to_string()).collect())
        .ok_or_else(|| format_err(path, 1, "empty table"))?;
    let rows = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| parse_row(path, k + 1, l, header.len()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}
