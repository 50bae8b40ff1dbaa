//! Exact hypervolume for up to five objectives.
//!
//! Points are sorted worst-first on the last objective. Every later
//! point is at least as good there, so the limit set of point `i` shares
//! its last coordinate and its exclusive contribution factors into a
//! slab height times an (M-1)-dimensional exclusive volume. Two
//! dimensions are handled by a sweep.

use crate::error::{Error, Result};

pub const MAX_HV_OBJECTIVES: usize = 5;

/// Lebesgue measure of the region dominated by `front` and bounded by
/// `reference` (minimization). Points that do not strictly dominate the
/// reference are ignored.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let m = reference.len();
    if m == 0 {
        return Err(Error::contract("hypervolume: empty reference point"));
    }
    if m > MAX_HV_OBJECTIVES {
        return Err(Error::Unsupported(format!("exact hypervolume for M = {m} > {MAX_HV_OBJECTIVES}")));
    }
    if front.iter().any(|p| p.len() != m) {
        return Err(Error::contract("hypervolume: point/reference dimension mismatch"));
    }
    let pts: Vec<Vec<f64>> = front
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(v, r)| v < r))
        .cloned()
        .collect();
    let pts = nondominated(pts);
    Ok(wfg(pts, reference))
}

fn wfg(mut pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let m = reference.len();
    match pts.len() {
        0 => return 0.0,
        1 => return box_volume(&pts[0], reference),
        _ => {}
    }
    if m == 1 {
        return pts.iter().map(|p| reference[0] - p[0]).fold(0.0, f64::max);
    }
    if m == 2 {
        return sweep_2d(pts, reference);
    }
    let last = m - 1;
    pts.sort_by(|a, b| b[last].total_cmp(&a[last]));
    let sub_ref = &reference[..last];
    let mut total = 0.0;
    for i in 0..pts.len() {
        let p = &pts[i];
        let height = reference[last] - p[last];
        if height <= 0.0 {
            continue;
        }
        let limited: Vec<Vec<f64>> = pts[i + 1..]
            .iter()
            .map(|q| q[..last].iter().zip(&p[..last]).map(|(a, b)| a.max(*b)).collect())
            .collect();
        let incl = box_volume(&p[..last], sub_ref);
        let shadow = wfg(nondominated(limited), sub_ref);
        total += height * (incl - shadow);
    }
    total
}

fn box_volume(p: &[f64], reference: &[f64]) -> f64 {
    p.iter().zip(reference).map(|(v, r)| (r - v).max(0.0)).product()
}

fn sweep_2d(mut pts: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in &pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Removes points weakly dominated by another point (duplicates keep one copy).
pub fn nondominated(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut keep: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    'outer: for p in pts {
        // lexicographic order: only earlier points can weakly dominate later ones
        for k in &keep {
            if k.iter().zip(&p).all(|(a, b)| a <= b) {
                continue 'outer;
            }
        }
        keep.push(p);
    }
    keep
}

/// Reference point `[N/(N-1)]` repeated M times.
pub fn hv_reference(n: usize, m: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::contract("hv_reference needs N >= 2"));
    }
    Ok(vec![n as f64 / (n - 1) as f64; m])
}

/// How a run's objective vectors are turned into an HV value.
#[derive(Debug, Clone, PartialEq)]
pub struct HvProtocol {
    pub reference: Vec<f64>,
    /// Divide objective `i` (1-based) by `2i` first (WFG fronts).
    pub wfg_normalize: bool,
}

impl HvProtocol {
    pub fn new(pop_size: usize, n_obj: usize, wfg_normalize: bool) -> Result<Self> {
        Ok(Self {
            reference: hv_reference(pop_size, n_obj)?,
            wfg_normalize,
        })
    }

    pub fn prepare(&self, f: &[f64]) -> Vec<f64> {
        if self.wfg_normalize {
            f.iter().enumerate().map(|(i, v)| v / (2.0 * (i + 1) as f64)).collect()
        } else {
            f.to_vec()
        }
    }

    pub fn measure(&self, objectives: &[Vec<f64>]) -> Result<f64> {
        let pts: Vec<Vec<f64>> = objectives.iter().map(|f| self.prepare(f)).collect();
        hypervolume(&pts, &self.reference)
    }
}
