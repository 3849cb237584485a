//! File formats: graph and boundary-condition JSON, complex literals, CSV.
//!
//! Complex numbers serialize as two-element arrays `[re, im]`; matrices as
//! row-major nested arrays of such pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::{CMatrix, C64};

/// Serde adapter for a single complex number as `[re, im]`.
pub mod complex {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// Serde adapter for a list of complex numbers.
pub mod complex_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Serde adapter for a dense complex matrix as row-major `[[[re, im], ...], ...]`.
pub mod cmatrix {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, String> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(format!("row {i} has {} entries, expected {m}", r.len()));
        }
        Ok(CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

/// On-disk form of a boundary condition: `{"A": [[...]], "B": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcJson {
    #[serde(rename = "A", with = "cmatrix")]
    pub a: CMatrix,
    #[serde(rename = "B", with = "cmatrix")]
    pub b: CMatrix,
}

impl BcJson {
    pub fn from_bc(bc: &BoundaryCondition) -> Self {
        Self {
            a: bc.a().clone(),
            b: bc.b().clone(),
        }
    }

    pub fn into_bc(self, graph: MetricGraph) -> Result<BoundaryCondition> {
        BoundaryCondition::new(graph, self.a, self.b)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_graph(path: &Path) -> Result<MetricGraph> {
    parse_json(path)
}

pub fn read_bc(path: &Path, graph: MetricGraph) -> Result<BoundaryCondition> {
    let raw: BcJson = parse_json(path)?;
    let d = graph.d();
    if raw.a.shape() != (d, d) || raw.b.shape() != (d, d) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!(
                "fields A {:?} and B {:?} must both be {d}x{d} to match the graph",
                raw.a.shape(),
                raw.b.shape()
            ),
        });
    }
    raw.into_bc(graph)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses a complex literal: `a+bi`, `a-bi`, `bi`, `a`, or `[a,b]`.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return Err(format!("expected [re,im], got {s}"));
        }
        let re = parts[0].parse::<f64>().map_err(|e| format!("{s}: {e}"))?;
        let im = parts[1].parse::<f64>().map_err(|e| format!("{s}: {e}"))?;
        return Ok(C64::new(re, im));
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t
            .parse::<f64>()
            .map(|re| C64::new(re, 0.0))
            .map_err(|e| format!("{s}: {e}"));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let coeff = |txt: &str| -> std::result::Result<f64, String> {
        match txt {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            other => other.parse::<f64>().map_err(|e| format!("{s}: {e}")),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|e| format!("{s}: {e}"))?;
            Ok(C64::new(re, coeff(&body[k..])?))
        }
        None => Ok(C64::new(0.0, coeff(body)?)),
    }
}

/// One row of a Rayleigh-quotient table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighRow {
    pub n: usize,
    pub re_rayleigh: f64,
    pub im_rayleigh: f64,
    pub norm: f64,
    pub bc_residual: f64,
}

pub fn write_rayleigh_csv(path: &Path, rows: &[RayleighRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a trajectory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub bound: f64,
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
