//! WFG toolkit problems WFG1..WFG9.
//!
//! Decision variable `z_i` lives in `[0, 2i]` (1-based). The first `k`
//! variables are position-related, the remaining `l` distance-related.
//! Objectives are `f_m = x_M + 2m * h_m(x_1..x_{M-1})`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// Shape/transformation parameters exposed as variant knobs.
///
/// For WFG4 they parameterize the multimodal shift of every variable;
/// for WFG7 they parameterize the parameter-dependent bias of the
/// position variables. Other WFG problems ignore them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WfgParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl WfgParams {
    pub const WFG4_DEFAULT: WfgParams = WfgParams { a: 30.0, b: 10.0, c: 0.35 };
    pub const WFG4_HARD: WfgParams = WfgParams { a: 70.0, b: 5.0, c: 0.35 };
    pub const WFG7_DEFAULT: WfgParams = WfgParams {
        a: 0.98 / 49.98,
        b: 0.02,
        c: 50.0,
    };
    pub const WFG7_HARD: WfgParams = WfgParams {
        a: 0.98 / 49.98,
        b: 0.02,
        c: 100.0,
    };
}

pub const WFG_N_VAR: usize = 24;

const BPARAM: (f64, f64, f64) = (0.98 / 49.98, 0.02, 50.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Wfg {
    pub index: u8,
    pub n_obj: usize,
    pub k: usize,
    pub params: Option<WfgParams>,
}

impl Wfg {
    pub fn new(index: u8, n_obj: usize, params: Option<WfgParams>) -> Self {
        let params = params.or(match index {
            4 => Some(WfgParams::WFG4_DEFAULT),
            7 => Some(WfgParams::WFG7_DEFAULT),
            _ => None,
        });
        Self {
            index,
            n_obj,
            k: 2 * (n_obj - 1),
            params,
        }
    }

    pub fn n_var(&self) -> usize {
        WFG_N_VAR
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        (1..=WFG_N_VAR).map(|i| 2.0 * i as f64).collect()
    }

    pub fn evaluate(&self, z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let k = self.k;
        let m = self.n_obj;
        let mut y: Vec<f64> = z.iter().enumerate().map(|(i, &v)| v / (2.0 * (i + 1) as f64)).collect();
        y.iter_mut().for_each(|v| *v = clamp01(*v));

        let t = match self.index {
            1 => {
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                for v in &mut y[k..] {
                    *v = b_flat(*v, 0.8, 0.75, 0.85);
                }
                for v in &mut y {
                    *v = b_poly(*v, 0.02);
                }
                let w: Vec<f64> = (1..=n).map(|i| 2.0 * i as f64).collect();
                reduce_sum(&y, &w, k, m)
            }
            2 | 3 => {
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                let l = n - k;
                let mut shrunk = y[..k].to_vec();
                for j in 0..l / 2 {
                    shrunk.push(r_nonsep(&y[k + 2 * j..k + 2 * j + 2], 2));
                }
                let w = vec![1.0; shrunk.len()];
                reduce_sum(&shrunk, &w, k, m)
            }
            4 => {
                let p = self.params.expect("WFG4 parameters");
                for v in &mut y {
                    *v = s_multi(*v, p.a, p.b, p.c);
                }
                reduce_sum(&y, &vec![1.0; n], k, m)
            }
            5 => {
                for v in &mut y {
                    *v = s_decept(*v, 0.35, 0.001, 0.05);
                }
                reduce_sum(&y, &vec![1.0; n], k, m)
            }
            6 => {
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                reduce_nonsep(&y, k, m)
            }
            7 => {
                let p = self.params.expect("WFG7 parameters");
                let orig = y.clone();
                for i in 0..k {
                    let u = mean(&orig[i + 1..]);
                    y[i] = b_param(orig[i], u, p.a, p.b, p.c);
                }
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                reduce_sum(&y, &vec![1.0; n], k, m)
            }
            8 => {
                let orig = y.clone();
                for i in k..n {
                    let u = mean(&orig[..i]);
                    y[i] = b_param(orig[i], u, BPARAM.0, BPARAM.1, BPARAM.2);
                }
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                reduce_sum(&y, &vec![1.0; n], k, m)
            }
            9 => {
                let orig = y.clone();
                for i in 0..n - 1 {
                    let u = mean(&orig[i + 1..]);
                    y[i] = b_param(orig[i], u, BPARAM.0, BPARAM.1, BPARAM.2);
                }
                for v in &mut y[..k] {
                    *v = s_decept(*v, 0.35, 0.001, 0.05);
                }
                for v in &mut y[k..] {
                    *v = s_multi(*v, 30.0, 95.0, 0.35);
                }
                reduce_nonsep(&y, k, m)
            }
            other => unreachable!("WFG{other} is not defined"),
        };

        // Underlying position vector; WFG3 is degenerate.
        let last = t[m - 1];
        let x: Vec<f64> = (0..m - 1)
            .map(|i| {
                let a = if self.index == 3 && i > 0 { 0.0 } else { 1.0 };
                (last.max(a) * (t[i] - 0.5) + 0.5).clamp(0.0, 1.0)
            })
            .collect();

        let h: Vec<f64> = match self.index {
            1 => {
                let mut h = convex(&x, m);
                h[m - 1] = mixed(&x, 1.0, 5.0);
                h
            }
            2 => {
                let mut h = convex(&x, m);
                h[m - 1] = disc(&x, 1.0, 1.0, 5.0);
                h
            }
            3 => linear(&x, m),
            _ => concave(&x, m),
        };
        h.iter().enumerate().map(|(i, hm)| last + 2.0 * (i + 1) as f64 * hm).collect()
    }

    /// A Pareto-optimal decision vector for WFG1..WFG7 with the given
    /// position parameters in `[0, 1]`.
    pub fn optimal_solution(&self, position: &[f64]) -> Option<Vec<f64>> {
        if self.index > 7 || position.len() != self.k {
            return None;
        }
        Some(
            (0..WFG_N_VAR)
                .map(|i| {
                    let scale = 2.0 * (i + 1) as f64;
                    if i < self.k {
                        position[i] * scale
                    } else {
                        0.35 * scale
                    }
                })
                .collect(),
        )
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn s_linear(y: f64, a: f64) -> f64 {
    // z / 2i does not always round back to exactly A
    if (y - a).abs() <= 1e-12 {
        return 0.0;
    }
    clamp01((y - a).abs() / ((a - y).floor() + a).abs())
}

fn b_flat(y: f64, a: f64, b: f64, c: f64) -> f64 {
    let v = a + (y - b).floor().min(0.0) * a * (b - y) / b - (c - y).floor().min(0.0) * (1.0 - a) * (y - c) / (1.0 - c);
    clamp01(v)
}

fn b_poly(y: f64, alpha: f64) -> f64 {
    clamp01(y.powf(alpha))
}

fn b_param(y: f64, u: f64, a: f64, b: f64, c: f64) -> f64 {
    let exponent = b + (c - b) * (a - (1.0 - 2.0 * u) * ((0.5 - u).floor() + a).abs());
    clamp01(y.powf(exponent))
}

fn s_decept(y: f64, a: f64, b: f64, c: f64) -> f64 {
    let t1 = (y - a + b).floor() * (1.0 - c + (a - b) / b) / (a - b);
    let t2 = (a + b - y).floor() * (1.0 - c + (1.0 - a - b) / b) / (1.0 - a - b);
    clamp01(1.0 + ((y - a).abs() - b) * (t1 + t2 + 1.0 / b))
}

fn s_multi(y: f64, a: f64, b: f64, c: f64) -> f64 {
    let q = (y - c).abs() / (2.0 * ((c - y).floor() + c));
    clamp01((1.0 + ((4.0 * a + 2.0) * PI * (0.5 - q)).cos() + 4.0 * b * q * q) / (b + 2.0))
}

fn r_sum(y: &[f64], w: &[f64]) -> f64 {
    let num: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum();
    clamp01(num / w.iter().sum::<f64>())
}

fn r_nonsep(y: &[f64], a: usize) -> f64 {
    let n = y.len();
    let mut num = 0.0;
    for j in 0..n {
        num += y[j];
        for k in 0..a.saturating_sub(1) {
            num += (y[j] - y[(1 + j + k) % n]).abs();
        }
    }
    let half = a.div_ceil(2) as f64;
    let af = a as f64;
    clamp01(num / ((n as f64 / af) * half * (1.0 + 2.0 * af - 2.0 * half)))
}

/// Weighted-sum reduction of `y` into `m` values: `m - 1` equal groups
/// over the first `k` entries and one group over the rest.
fn reduce_sum(y: &[f64], w: &[f64], k: usize, m: usize) -> Vec<f64> {
    let gs = k / (m - 1);
    let mut t: Vec<f64> = (0..m - 1).map(|i| r_sum(&y[i * gs..(i + 1) * gs], &w[i * gs..(i + 1) * gs])).collect();
    t.push(r_sum(&y[k..], &w[k..]));
    t
}

fn reduce_nonsep(y: &[f64], k: usize, m: usize) -> Vec<f64> {
    let gs = k / (m - 1);
    let mut t: Vec<f64> = (0..m - 1).map(|i| r_nonsep(&y[i * gs..(i + 1) * gs], gs)).collect();
    t.push(r_nonsep(&y[k..], y.len() - k));
    t
}

fn linear(x: &[f64], m: usize) -> Vec<f64> {
    (1..=m)
        .map(|j| {
            let mut v: f64 = x[..m - j].iter().product();
            if j > 1 {
                v *= 1.0 - x[m - j];
            }
            v
        })
        .collect()
}

fn convex(x: &[f64], m: usize) -> Vec<f64> {
    (1..=m)
        .map(|j| {
            let mut v: f64 = x[..m - j].iter().map(|xi| 1.0 - (xi * FRAC_PI_2).cos()).product();
            if j > 1 {
                v *= 1.0 - (x[m - j] * FRAC_PI_2).sin();
            }
            v
        })
        .collect()
}

fn concave(x: &[f64], m: usize) -> Vec<f64> {
    (1..=m)
        .map(|j| {
            let mut v: f64 = x[..m - j].iter().map(|xi| (xi * FRAC_PI_2).sin()).product();
            if j > 1 {
                v *= (x[m - j] * FRAC_PI_2).cos();
            }
            v
        })
        .collect()
}

fn mixed(x: &[f64], alpha: f64, a: f64) -> f64 {
    let t = 2.0 * a * PI;
    (1.0 - x[0] - (t * x[0] + FRAC_PI_2).cos() / t).powf(alpha)
}

fn disc(x: &[f64], alpha: f64, beta: f64, a: f64) -> f64 {
    1.0 - x[0].powf(alpha) * (a * x[0].powf(beta) * PI).cos().powi(2)
}
