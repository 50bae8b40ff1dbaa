//! MOEA/D with PBI decomposition.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refassoc::{scalarize, ReferenceSet, ScalarizingMetric};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoeadParams {
    pub neighborhood_size: usize,
    pub delta: f64,
    pub n_r: usize,
    pub theta: f64,
}

impl Default for MoeadParams {
    fn default() -> Self {
        Self {
            neighborhood_size: 20,
            delta: 0.9,
            n_r: 2,
            theta: 5.0,
        }
    }
}

/// Weight vectors, neighbourhoods and the running ideal point.
#[derive(Debug, Clone, PartialEq)]
pub struct MoeadState {
    pub weights: Vec<Vec<f64>>,
    pub neighbors: Vec<Vec<usize>>,
    pub delta: f64,
    pub n_r: usize,
    pub theta: f64,
    pub ideal: Vec<f64>,
}

impl MoeadState {
    /// Neighbourhood of `i`: the `N_S` closest weight vectors (itself
    /// first, ties by index).
    pub fn new(z: &ReferenceSet, params: &MoeadParams) -> Result<Self> {
        let n = z.len();
        if params.neighborhood_size == 0 || params.n_r == 0 || !(params.theta > 0.0) {
            return Err(Error::config("MOEA/D needs N_S >= 1, n_r >= 1 and theta > 0"));
        }
        let ns = params.neighborhood_size.min(n);
        let neighbors = z
            .points
            .iter()
            .map(|w| {
                let mut d: Vec<(f64, usize)> = z
                    .points
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d.into_iter().take(ns).map(|(_, j)| j).collect()
            })
            .collect();
        Ok(Self {
            weights: z.points.clone(),
            neighbors,
            delta: params.delta,
            n_r: params.n_r,
            theta: params.theta,
            ideal: vec![f64::INFINITY; z.dim()],
        })
    }

    pub fn update_ideal(&mut self, f: &[f64]) {
        for (z, v) in self.ideal.iter_mut().zip(f) {
            *z = z.min(*v);
        }
    }

    /// PBI value of `f` for subproblem `i`, measured from the ideal point.
    pub fn decomposition(&self, f: &[f64], i: usize) -> f64 {
        let shifted: Vec<f64> = f.iter().zip(&self.ideal).map(|(a, z)| a - z).collect();
        scalarize(ScalarizingMetric::Pbi { theta: self.theta }, &shifted, &self.weights[i])
            .expect("weight vectors are non-zero")
    }

    /// Mating pool for subproblem `i`: its neighbourhood with probability
    /// `delta`, otherwise the whole population.
    pub fn mating_pool(&self, i: usize, rng: &mut Stream) -> Vec<usize> {
        if rng.gen::<f64>() < self.delta {
            self.neighbors[i].clone()
        } else {
            (0..self.weights.len()).collect()
        }
    }

    /// Two distinct members of `pool` (the same one twice if the pool is a singleton).
    pub fn pick_parents(pool: &[usize], rng: &mut Stream) -> (usize, usize) {
        if pool.len() < 2 {
            return (pool[0], pool[0]);
        }
        let picked: Vec<usize> = pool.choose_multiple(rng, 2).copied().collect();
        (picked[0], picked[1])
    }

    /// Replaces at most `n_r` members of `pool`, visited in random order,
    /// whose subproblem value the child improves. Returns replaced slots.
    pub fn replacements(&self, child_f: &[f64], pool: &[usize], current: &[&[f64]], rng: &mut Stream) -> Vec<usize> {
        let mut order = pool.to_vec();
        order.shuffle(rng);
        let mut out = Vec::new();
        for j in order {
            if out.len() >= self.n_r {
                break;
            }
            if self.decomposition(child_f, j) < self.decomposition(current[j], j) {
                out.push(j);
            }
        }
        out
    }
}
