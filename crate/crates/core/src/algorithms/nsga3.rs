//! NSGA-III survival: hyperplane normalization, perpendicular-distance
//! association and niche-count based niching.

use rand::seq::SliceRandom;

use super::sorting::nondominated_fronts;
use crate::refassoc::{ray_distances, ReferenceSet};
use crate::rng::Stream;
use crate::types::{objectives_of, Individual, Population};

/// Normalization memory carried across generations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Nsga3State {
    pub ideal: Option<Vec<f64>>,
    pub worst: Option<Vec<f64>>,
    pub extremes: Option<Vec<Vec<f64>>>,
}

/// Off-axis weight used when picking extreme points.
const EXTREME_WEIGHT: f64 = 1e6;

impl Nsga3State {
    /// Updates ideal, worst and extreme points; returns `(ideal, nadir)`.
    pub fn normalization(&mut self, f: &[Vec<f64>], first_front: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let m = f[0].len();
        let mut ideal = self.ideal.clone().unwrap_or_else(|| vec![f64::INFINITY; m]);
        let mut worst = self.worst.clone().unwrap_or_else(|| vec![f64::NEG_INFINITY; m]);
        for p in f {
            for k in 0..m {
                ideal[k] = ideal[k].min(p[k]);
                worst[k] = worst[k].max(p[k]);
            }
        }

        let mut candidates: Vec<Vec<f64>> = self.extremes.clone().unwrap_or_default();
        candidates.extend(first_front.iter().map(|&i| f[i].clone()));
        let extremes: Vec<Vec<f64>> = (0..m)
            .map(|axis| {
                let asf = |p: &Vec<f64>| {
                    (0..m)
                        .map(|k| {
                            let d = p[k] - ideal[k];
                            let d = if d < 1e-3 { 0.0 } else { d };
                            if k == axis {
                                d
                            } else {
                                d * EXTREME_WEIGHT
                            }
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let mut best = 0;
                let mut best_v = f64::INFINITY;
                for (i, p) in candidates.iter().enumerate() {
                    let v = asf(p);
                    if v < best_v {
                        best_v = v;
                        best = i;
                    }
                }
                candidates[best].clone()
            })
            .collect();

        let max_over = |idx: &mut dyn Iterator<Item = &Vec<f64>>| {
            let mut w = vec![f64::NEG_INFINITY; m];
            for p in idx {
                for k in 0..m {
                    w[k] = w[k].max(p[k]);
                }
            }
            w
        };
        let worst_of_population = max_over(&mut f.iter());
        let worst_of_front = max_over(&mut first_front.iter().map(|&i| &f[i]));

        let mut nadir = hyperplane_nadir(&extremes, &ideal)
            .map(|mut n| {
                for k in 0..m {
                    if n[k] > worst[k] {
                        n[k] = worst[k];
                    }
                }
                n
            })
            .unwrap_or(worst_of_front);
        for k in 0..m {
            if nadir[k] - ideal[k] <= 1e-6 {
                nadir[k] = worst_of_population[k];
            }
        }

        self.ideal = Some(ideal.clone());
        self.worst = Some(worst);
        self.extremes = Some(extremes);
        (ideal, nadir)
    }
}

/// Intercepts of the hyperplane through the extreme points, or `None`
/// when the system is singular or the intercepts are degenerate.
fn hyperplane_nadir(extremes: &[Vec<f64>], ideal: &[f64]) -> Option<Vec<f64>> {
    let m = ideal.len();
    let a: Vec<Vec<f64>> = extremes.iter().map(|e| e.iter().zip(ideal).map(|(x, z)| x - z).collect()).collect();
    let plane = solve(a.clone(), vec![1.0; m])?;
    for row in &a {
        let dot: f64 = row.iter().zip(&plane).map(|(x, y)| x * y).sum();
        if (dot - 1.0).abs() > 1e-8 + 1e-5 {
            return None;
        }
    }
    let intercepts: Vec<f64> = plane.iter().map(|p| 1.0 / p).collect();
    if intercepts.iter().any(|&v| !(v > 1e-6) || !v.is_finite()) {
        return None;
    }
    Some(ideal.iter().zip(&intercepts).map(|(z, i)| z + i).collect())
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Niche and perpendicular distance of every point after normalization.
pub fn associate_niches(f: &[Vec<f64>], z: &ReferenceSet, ideal: &[f64], nadir: &[f64]) -> Vec<(usize, f64)> {
    f.iter()
        .map(|p| {
            let fbar: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(k, v)| (v - ideal[k]) / (nadir[k] - ideal[k]).max(1e-12))
                .collect();
            let mut best = (0, f64::INFINITY);
            for (j, dir) in z.points.iter().enumerate() {
                let (_, d) = ray_distances(&fbar, dir).expect("reference directions are non-zero");
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect()
}

/// Indices (into `f`) of the `n` survivors.
pub fn nsga3_select(f: &[Vec<f64>], z: &ReferenceSet, n: usize, state: &mut Nsga3State, rng: &mut Stream) -> Vec<usize> {
    let mut fronts = nondominated_fronts(f);
    let mut total = 0;
    let mut keep = 0;
    while keep < fronts.len() && total < n {
        total += fronts[keep].len();
        keep += 1;
    }
    fronts.truncate(keep);
    let (ideal, nadir) = state.normalization(f, &fronts[0]);
    if total == n {
        return fronts.concat();
    }
    let last = fronts.pop().expect("at least one front");
    let mut survivors: Vec<usize> = fronts.concat();
    let assoc = associate_niches(f, z, &ideal, &nadir);
    let mut niche_count = vec![0usize; z.len()];
    for &i in &survivors {
        niche_count[assoc[i].0] += 1;
    }
    let mut pending: Vec<usize> = last;
    let n_remaining = n - survivors.len();
    let mut chosen = 0;
    while chosen < n_remaining {
        let mut niches: Vec<usize> = pending.iter().map(|&i| assoc[i].0).collect();
        niches.sort_unstable();
        niches.dedup();
        let min_count = niches.iter().map(|&j| niche_count[j]).min().expect("pending candidates");
        let mut next: Vec<usize> = niches.into_iter().filter(|&j| niche_count[j] == min_count).collect();
        next.shuffle(rng);
        next.truncate(n_remaining - chosen);
        for j in next {
            let mut members: Vec<usize> = pending.iter().copied().filter(|&i| assoc[i].0 == j).collect();
            members.shuffle(rng);
            let pick = if niche_count[j] == 0 {
                *members
                    .iter()
                    .min_by(|&&a, &&b| assoc[a].1.total_cmp(&assoc[b].1))
                    .expect("niche has members")
            } else {
                members[0]
            };
            pending.retain(|&i| i != pick);
            survivors.push(pick);
            niche_count[j] += 1;
            chosen += 1;
        }
    }
    survivors
}

/// The `n` survivors of an evaluated population.
pub fn nsga3_survival(union: &[Individual], z: &ReferenceSet, n: usize, state: &mut Nsga3State, rng: &mut Stream) -> Population {
    nsga3_select(&objectives_of(union), z, n, state, rng)
        .into_iter()
        .map(|i| union[i].clone())
        .collect()
}
