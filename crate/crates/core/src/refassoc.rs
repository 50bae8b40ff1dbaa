//! Reference directions, objective normalization and scalarized association.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ObjectiveVector;

/// Points on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub points: Vec<Vec<f64>>,
    pub layout: ReferenceLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReferenceLayout {
    Lattice { gaps: usize },
    Layered { gaps: Vec<usize>, shrink: Vec<f64>, fill: LayerFill },
}

/// What one layer of [`layered_points`] contains before contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerFill {
    /// The full Das-Dennis lattice with the layer's gap count.
    Lattice,
    /// Vertices plus `gaps - 1` evenly spaced points on every edge of the
    /// simplex.
    Skeleton,
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Share of points with at least one zero coordinate.
    pub fn boundary_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let boundary = self.points.iter().filter(|p| p.iter().any(|v| v.abs() < 1e-12)).count();
        boundary as f64 / self.points.len() as f64
    }
}

/// Das-Dennis simplex lattice: all M-vectors of multiples of `1/p`
/// summing to one, in lexicographic order of the integer compositions.
pub fn das_dennis(m: usize, p: usize) -> Result<ReferenceSet> {
    if m < 2 || p < 1 {
        return Err(Error::contract(format!("das_dennis needs M >= 2 and p >= 1, got M={m}, p={p}")));
    }
    let mut points = Vec::new();
    let mut current = vec![0usize; m];
    compositions(p, 0, &mut current, &mut |c| {
        points.push(c.iter().map(|&v| v as f64 / p as f64).collect());
    });
    Ok(ReferenceSet {
        points,
        layout: ReferenceLayout::Lattice { gaps: p },
    })
}

fn compositions(left: usize, pos: usize, current: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    let m = current.len();
    if pos == m - 1 {
        current[pos] = left;
        emit(current);
        return;
    }
    for v in 0..=left {
        current[pos] = v;
        compositions(left - v, pos + 1, current, emit);
    }
}

fn skeleton(m: usize, p: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        pts.push(e);
    }
    for i in 0..m {
        for j in i + 1..m {
            for s in 1..p {
                let mut v = vec![0.0; m];
                v[i] = s as f64 / p as f64;
                v[j] = 1.0 - v[i];
                pts.push(v);
            }
        }
    }
    pts
}

/// Default contraction factors `1 - k/L` for `L` layers, outermost first.
pub fn default_shrink(layers: usize) -> Vec<f64> {
    (0..layers).map(|k| 1.0 - k as f64 / layers as f64).collect()
}

/// Union of layers, each contracted toward the simplex centroid by its
/// shrink factor, with duplicates removed.
pub fn layered_points(m: usize, layer_gaps: &[usize], shrink: &[f64], fill: LayerFill) -> Result<ReferenceSet> {
    if layer_gaps.is_empty() || layer_gaps.len() != shrink.len() {
        return Err(Error::contract("layer gaps and shrink factors must be non-empty and equally long"));
    }
    if shrink.iter().any(|&s| !(s > 0.0 && s <= 1.0)) || shrink.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::contract("shrink factors must lie in (0, 1] and strictly decrease"));
    }
    let centroid = 1.0 / m as f64;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (&gaps, &s) in layer_gaps.iter().zip(shrink) {
        let layer = match fill {
            LayerFill::Lattice => das_dennis(m, gaps)?.points,
            LayerFill::Skeleton => {
                if m < 2 || gaps < 1 {
                    return Err(Error::contract("skeleton layers need M >= 2 and gaps >= 1"));
                }
                skeleton(m, gaps)
            }
        };
        for p in layer {
            let q: Vec<f64> = if s == 1.0 {
                p
            } else {
                p.iter().map(|v| centroid + s * (v - centroid)).collect()
            };
            let key: Vec<i64> = q.iter().map(|v| (v * 1e10).round() as i64).collect();
            if seen.insert(key) {
                points.push(q);
            }
        }
    }
    Ok(ReferenceSet {
        points,
        layout: ReferenceLayout::Layered {
            gaps: layer_gaps.to_vec(),
            shrink: shrink.to_vec(),
            fill,
        },
    })
}

/// Ideal and nadir points of a set of objective vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationFrame {
    pub ideal: ObjectiveVector,
    pub nadir: ObjectiveVector,
}

/// Smallest denominator used when ideal and nadir coincide.
pub const MIN_SPAN: f64 = 1e-12;

impl NormalizationFrame {
    pub fn from_points(f: &[ObjectiveVector]) -> Result<Self> {
        let first = f.first().ok_or_else(|| Error::contract("cannot normalize an empty set"))?;
        let mut ideal = first.clone();
        let mut nadir = first.clone();
        for p in &f[1..] {
            for (k, &v) in p.iter().enumerate() {
                ideal[k] = ideal[k].min(v);
                nadir[k] = nadir[k].max(v);
            }
        }
        Ok(Self { ideal, nadir })
    }

    pub fn apply(&self, f: &[f64]) -> ObjectiveVector {
        f.iter()
            .zip(self.ideal.iter().zip(&self.nadir))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo).max(MIN_SPAN))
            .collect()
    }
}

/// Normalizes objective vectors by their own ideal and nadir points.
pub fn normalize(f: &[ObjectiveVector]) -> Result<(NormalizationFrame, Vec<ObjectiveVector>)> {
    let frame = NormalizationFrame::from_points(f)?;
    let fbar = f.iter().map(|p| frame.apply(p)).collect();
    Ok((frame, fbar))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalarizingMetric {
    /// `max_k (fbar_k - z_k)`, uniform weights.
    Asf,
    /// Perpendicular distance to the reference ray.
    Pdm,
    /// `d1 + theta * d2` along the reference ray.
    Pbi { theta: f64 },
}

pub const DEFAULT_PBI_THETA: f64 = 5.0;

impl ScalarizingMetric {
    pub fn pbi() -> Self {
        ScalarizingMetric::Pbi {
            theta: DEFAULT_PBI_THETA,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarizingMetric::Asf => "asf",
            ScalarizingMetric::Pdm => "pdm",
            ScalarizingMetric::Pbi { .. } => "pbi",
        }
    }
}

impl std::str::FromStr for ScalarizingMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asf" => Ok(ScalarizingMetric::Asf),
            "pdm" => Ok(ScalarizingMetric::Pdm),
            "pbi" => Ok(ScalarizingMetric::pbi()),
            other => Err(Error::config(format!("unknown association metric '{other}'"))),
        }
    }
}

/// Projection length and perpendicular residual of `f` on the ray through `z`.
pub(crate) fn ray_distances(f: &[f64], z: &[f64]) -> Result<(f64, f64)> {
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::contract("reference direction is the zero vector"));
    }
    let d1: f64 = f.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / norm;
    let d2 = f
        .iter()
        .zip(z)
        .map(|(a, b)| {
            let r = a - d1 * b / norm;
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Ok((d1, d2))
}

pub fn scalarize(metric: ScalarizingMetric, fbar: &[f64], z: &[f64]) -> Result<f64> {
    if fbar.len() != z.len() {
        return Err(Error::contract("scalarize: dimension mismatch"));
    }
    match metric {
        ScalarizingMetric::Asf => Ok(fbar.iter().zip(z).map(|(f, r)| f - r).fold(f64::NEG_INFINITY, f64::max)),
        ScalarizingMetric::Pdm => ray_distances(fbar, z).map(|(_, d2)| d2),
        ScalarizingMetric::Pbi { theta } => {
            if theta <= 0.0 {
                return Err(Error::contract("PBI penalty must be positive"));
            }
            ray_distances(fbar, z).map(|(d1, d2)| d1 + theta * d2)
        }
    }
}

/// Nearest reference point of each normalized vector under `metric`.
/// Ties go to the lowest reference index.
pub fn associate(fbar: &[ObjectiveVector], refs: &ReferenceSet, metric: ScalarizingMetric) -> Result<Vec<(usize, f64)>> {
    if refs.is_empty() {
        return Err(Error::contract("associate: empty reference set"));
    }
    fbar.iter()
        .map(|f| {
            let mut best = (0usize, f64::INFINITY);
            for (j, z) in refs.points.iter().enumerate() {
                let v = scalarize(metric, f, z)?;
                if v < best.1 {
                    best = (j, v);
                }
            }
            Ok(best)
        })
        .collect()
}
