//! Real-coded variation: simulated binary crossover and polynomial mutation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Crossover and mutation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneticParams {
    pub p_c: f64,
    pub eta_c: f64,
    pub p_m: f64,
    /// `None` means `1 / n_var`.
    pub eta_m: Option<f64>,
}

impl Default for GeneticParams {
    fn default() -> Self {
        Self {
            p_c: 0.9,
            eta_c: 10.0,
            p_m: 0.1,
            eta_m: None,
        }
    }
}

impl GeneticParams {
    pub fn eta_m_for(&self, n_var: usize) -> f64 {
        self.eta_m.unwrap_or(1.0 / n_var as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.p_c) || !prob(self.p_m) {
            return Err(Error::config("crossover and mutation probabilities must lie in [0, 1]"));
        }
        if !(self.eta_c > 0.0) || self.eta_m.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::config("distribution indices must be positive"));
        }
        Ok(())
    }
}

/// Per-variable probability of recombining a variable once crossover fires.
pub const SBX_VARIABLE_PROB: f64 = 0.5;

/// SBX spread factor for a uniform draw `u`.
pub fn sbx_beta(u: f64, eta_c: f64) -> f64 {
    let e = 1.0 / (eta_c + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    }
}

/// Two children from two parents. Each variable is recombined with
/// probability 0.5 once crossover fires, and the pair of values is handed
/// to the children in random order. Children are clipped to bounds.
pub fn sbx_crossover(
    p1: &[f64],
    p2: &[f64],
    params: &GeneticParams,
    lower: &[f64],
    upper: &[f64],
    rng: &mut Stream,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.gen::<f64>() >= params.p_c {
        return (c1, c2);
    }
    for k in 0..p1.len() {
        if rng.gen::<f64>() >= SBX_VARIABLE_PROB || (p1[k] - p2[k]).abs() <= 1e-14 {
            continue;
        }
        let beta = sbx_beta(rng.gen::<f64>(), params.eta_c);
        let a = 0.5 * ((1.0 + beta) * p1[k] + (1.0 - beta) * p2[k]);
        let b = 0.5 * ((1.0 - beta) * p1[k] + (1.0 + beta) * p2[k]);
        (c1[k], c2[k]) = if rng.gen::<f64>() < 0.5 { (b, a) } else { (a, b) };
    }
    clip(&mut c1, lower, upper);
    clip(&mut c2, lower, upper);
    (c1, c2)
}

pub(crate) fn clip(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Bounded polynomial mutation step for one variable given the draw `u`.
pub fn polynomial_step(y: f64, lo: f64, hi: f64, u: f64, eta_m: f64) -> f64 {
    let range = hi - lo;
    let pow = 1.0 / (eta_m + 1.0);
    let dq = if u <= 0.5 {
        let xy = 1.0 - (y - lo) / range;
        (2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta_m + 1.0)).powf(pow) - 1.0
    } else {
        let xy = 1.0 - (hi - y) / range;
        1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta_m + 1.0)).powf(pow)
    };
    (y + dq * range).clamp(lo, hi)
}

/// Mutates each variable with probability `p_m`.
pub fn polynomial_mutation(x: &mut [f64], params: &GeneticParams, lower: &[f64], upper: &[f64], rng: &mut Stream) {
    let eta_m = params.eta_m_for(x.len());
    for k in 0..x.len() {
        if rng.gen::<f64>() >= params.p_m || upper[k] <= lower[k] {
            continue;
        }
        let u = rng.gen::<f64>();
        x[k] = polynomial_step(x[k], lower[k], upper[k], u, eta_m);
    }
}
