//! Worked examples: irrational ellipsoids, their lens quotients, and the
//! `(r_B, c_B)` table of spheres and unit cosphere bundles of CROSSes.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::census::OrbitDataset;
use crate::exact::{ExactError, ExactReal};
use crate::homology::PrequantSpec;
use crate::index::{IndexError, OrbitModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("axes {i} and {j} have rational ratio {ratio}")]
    RationalRatio { i: usize, j: usize, ratio: String },
    #[error("weight {weight} is not coprime to p = {p}")]
    WeightNotCoprime { weight: i64, p: u64 },
    #[error("need at least two axes, all positive")]
    BadAxes,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("p must be positive")]
    BadOrder,
    #[error("no row named {0:?}")]
    UnknownName(String),
    #[error("{0:?} ships table data only; supply a Betti profile")]
    NoProfile(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Irrational ellipsoid `E(a_0, ..., a_n)` with boundary `S^{2n+1}`.
///
/// Orbit `j` is the circle in the `j`-th coordinate plane; its rotation
/// numbers are `a_j / a_i` for `i != j`.
pub fn ellipsoid(axes: &[ExactReal]) -> Result<(PrequantSpec, OrbitDataset), CatalogError> {
    if axes.len() < 2 || axes.iter().any(|a| !a.is_positive()) {
        return Err(CatalogError::BadAxes);
    }
    let n = axes.len() - 1;
    let mut orbits = Vec::with_capacity(axes.len());
    for (j, aj) in axes.iter().enumerate() {
        let mut rotations = Vec::with_capacity(n);
        for (i, ai) in axes.iter().enumerate() {
            if i == j {
                continue;
            }
            let ratio = aj.div(ai)?;
            if ratio.is_rational() {
                return Err(CatalogError::RationalRatio { i, j, ratio: ratio.to_string() });
            }
            rotations.push(ratio);
        }
        orbits.push(OrbitModel::elliptic(format!("g{j}"), rotations, 2)?);
    }
    Ok((PrequantSpec::sphere(n), OrbitDataset { n, orbits }))
}

/// Lens space quotient `S^{2n+1} / Z_p` of an irrational ellipsoid with the given weights.
///
/// Each downstairs orbit is a `1/p` arc of an ellipsoid orbit and only its
/// multiples of `p` are contractible. Rotation numbers are chosen so that
/// the `p j`-th iterate has exactly the index of the `j`-th ellipsoid iterate:
/// the linear term 2 is folded into the first rotation and everything is
/// divided by `p`. For `p = 1` this is the ellipsoid itself.
pub fn lens(p: u64, weights: &[i64], axes: &[ExactReal]) -> Result<(PrequantSpec, OrbitDataset), CatalogError> {
    if p == 0 {
        return Err(CatalogError::BadOrder);
    }
    if weights.len() != axes.len() {
        return Err(CatalogError::WeightCount { expected: axes.len(), got: weights.len() });
    }
    if let Some(&weight) = weights.iter().find(|w| w.gcd(&(p as i64)) != 1) {
        return Err(CatalogError::WeightNotCoprime { weight, p });
    }
    let (spec, upstairs) = ellipsoid(axes)?;
    if p == 1 {
        return Ok((spec, upstairs));
    }
    let p_i = p as i128;
    let orbits = upstairs
        .orbits
        .into_iter()
        .map(|o| {
            let rotations = o
                .rotations
                .iter()
                .enumerate()
                .map(|(m, r)| {
                    let lifted = if m == 0 { r.add_int(1)? } else { *r };
                    lifted.mul_rational(1, p_i)
                })
                .collect::<Result<Vec<_>, ExactError>>()?;
            Ok(OrbitModel::new(o.name, rotations, 0, Vec::new(), p)?)
        })
        .collect::<Result<Vec<_>, CatalogError>>()?;
    Ok((spec, OrbitDataset { n: upstairs.n, orbits }))
}

/// One row of the `(r_B, c_B)` table; entries may depend on a parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossRow {
    pub name: String,
    #[serde(rename = "r_B")]
    pub r_b: String,
    #[serde(rename = "c_B")]
    pub c_b: String,
}

const TABLE: [(&str, &str, &str); 7] = [
    ("S^{2n+1}", "n+1", "n+1"),
    ("S*S^2 or S*RP^2", "2", "2"),
    ("S*S^m or S*RP^m with m>2 even", "m", "m-1"),
    ("S*S^m or S*RP^m with m odd", "m+1", "m-1"),
    ("S*CP^m", "m(m+1)", "m"),
    ("S*HP^m", "2m(m+1)", "2m+1"),
    ("S*CaP^2", "24", "11"),
];

pub fn cross_table() -> Vec<CrossRow> {
    TABLE
        .iter()
        .map(|(name, r, c)| CrossRow { name: name.to_string(), r_b: r.to_string(), c_b: c.to_string() })
        .collect()
}

/// `(r_B, c_B)` of a table row at parameter value `m` (or `n` for spheres).
pub fn cross_values(name: &str, m: u64) -> Result<(u64, u64), CatalogError> {
    let v = match name {
        "S^{2n+1}" => (m + 1, m + 1),
        "S*S^2 or S*RP^2" => (2, 2),
        "S*S^m or S*RP^m with m>2 even" if m > 2 && m % 2 == 0 => (m, m - 1),
        "S*S^m or S*RP^m with m odd" if m % 2 == 1 && m >= 3 => (m + 1, m - 1),
        "S*CP^m" => (m * (m + 1), m),
        "S*HP^m" => (2 * m * (m + 1), 2 * m + 1),
        "S*CaP^2" => (24, 11),
        _ => return Err(CatalogError::UnknownName(format!("{name} at {m}"))),
    };
    Ok(v)
}

/// Full spec for names with a shipped Betti profile: `S^{2n+1}` (over `CP^n`)
/// and `S*S^m`, `m` odd (over the quadric `G_2^+(R^{m+1})`).
pub fn cross_spec(name: &str) -> Result<PrequantSpec, CatalogError> {
    let compact: String = name.chars().filter(|c| !c.is_whitespace() && *c != '{' && *c != '}').collect();
    if let Some(dim) = compact.strip_prefix("S^").and_then(|d| d.parse::<usize>().ok()) {
        if dim >= 3 && dim % 2 == 1 {
            return Ok(PrequantSpec::sphere((dim - 1) / 2));
        }
        return Err(CatalogError::UnknownName(name.into()));
    }
    if let Some(m) = compact.strip_prefix("S*S^").and_then(|d| d.parse::<usize>().ok()) {
        if m >= 3 && m % 2 == 1 {
            let n = m - 1;
            let mut betti: Vec<u64> = (0..=2 * n).map(|k| u64::from(k % 2 == 0)).collect();
            betti[n] += 1;
            let spec = PrequantSpec::lacunary(n, n as u64, betti)
                .map_err(|e| CatalogError::UnknownName(e.to_string()))?;
            return Ok(spec);
        }
        return Err(CatalogError::NoProfile(name.into()));
    }
    if TABLE.iter().any(|(row, _, _)| *row == name) || compact.starts_with("S*") {
        return Err(CatalogError::NoProfile(name.into()));
    }
    Err(CatalogError::UnknownName(name.into()))
}
