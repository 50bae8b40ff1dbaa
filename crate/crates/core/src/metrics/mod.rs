//! Performance indicators and seed statistics.

mod hv;
mod stats;

pub use hv::{hv_reference, hypervolume, nondominated, HvProtocol, MAX_HV_OBJECTIVES};
pub use stats::{median, wilcoxon_ranksum, wilcoxon_ranksum_with, Alternative, EXACT_LIMIT};


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMode {
    Gd,
    Igd,
}

/// `(1/|from|) * sqrt(sum of squared nearest distances from `from` to `to`)`.
pub fn mean_root_nearest(from: &[Vec<f64>], to: &[Vec<f64>]) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::contract("distance indicator on an empty set"));
    }
    let sum: f64 = from
        .iter()
        .map(|p| {
            to.iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(sum.sqrt() / from.len() as f64)
}

/// GD of `front` against `reference_front`, or IGD with the roles swapped.
pub fn gd_igd(front: &[Vec<f64>], reference_front: &[Vec<f64>], mode: DistanceMode) -> Result<f64> {
    match mode {
        DistanceMode::Gd => mean_root_nearest(front, reference_front),
        DistanceMode::Igd => mean_root_nearest(reference_front, front),
    }
}

/// Outcome of comparing a repaired run's HV against the base series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    /// First generation at which the base series reaches the value, if any.
    pub generation: Option<usize>,
    pub t: usize,
    /// `100 * Δt / t`; when never recovered, a strict lower bound.
    pub savings_percent: f64,
}

impl Recovery {
    pub fn recovered(&self) -> bool {
        self.generation.is_some()
    }

    pub fn delta(&self) -> Option<i64> {
        self.generation.map(|g| g as i64 - self.t as i64)
    }

    /// `"37.5"` style text, `"> 150.0"` when never recovered.
    pub fn savings_label(&self) -> String {
        match self.generation {
            Some(_) => format!("{:.1}", self.savings_percent),
            None => format!("> {:.1}", self.savings_percent),
        }
    }
}

/// First crossing of `repaired_value` by the base series and the
/// resulting percentage of evaluations saved.
pub fn recovery_savings(base_series: &[f64], repaired_value: f64, t: usize) -> Result<Recovery> {
    if t == 0 {
        return Err(Error::contract("recovery_savings needs t > 0"));
    }
    if base_series.is_empty() {
        return Err(Error::contract("recovery_savings on an empty series"));
    }
    let generation = base_series.iter().position(|&h| h >= repaired_value);
    let last = match generation {
        Some(g) => g,
        None => base_series.len() - 1,
    };
    Ok(Recovery {
        generation,
        t,
        savings_percent: 100.0 * (last as f64 - t as f64) / t as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(cross_at: usize, len: usize) -> Vec<f64> {
        (0..len).map(|g| if g >= cross_at { 1.0 } else { g as f64 / 1000.0 }).collect()
    }

    #[test]
    fn savings_rows() {
        for (rec, s) in [(55, 37.5), (40, 0.0), (39, -2.5)] {
            let r = recovery_savings(&ramp(rec, 200), 0.5, 40).unwrap();
            assert_eq!(r.generation, Some(rec));
            assert_eq!(r.savings_percent, s);
        }
        let never = recovery_savings(&ramp(500, 100), 0.5, 40).unwrap();
        assert!(!never.recovered());
        assert_eq!(never.savings_label(), "> 147.5");
        assert!(recovery_savings(&[0.1], 0.0, 0).is_err());
    }

    #[test]
    fn distances() {
        let front = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(gd_igd(&front, &front, DistanceMode::Gd).unwrap(), 0.0);
        let reference: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect();
        assert_eq!(gd_igd(&front, &reference, DistanceMode::Gd).unwrap(), 0.0);
        assert_eq!(gd_igd(&reference, &reference[..3], DistanceMode::Igd).unwrap(), 0.0);
        let off = vec![vec![0.1, 1.0]];
        let r = vec![vec![0.0, 1.0], vec![5.0, 5.0]];
        assert!((gd_igd(&off, &r, DistanceMode::Gd).unwrap() - 0.1).abs() < 1e-15);
        let two = vec![vec![3.0, 0.0], vec![0.0, -4.0]];
        assert_eq!(mean_root_nearest(&two, &[vec![0.0, 0.0]]).unwrap(), 2.5);
        assert!(gd_igd(&[], &front, DistanceMode::Gd).is_err());
    }

    #[test]
    fn igd_scales_linearly() {
        let a = vec![vec![0.2, 0.9], vec![0.7, 0.4]];
        let b = vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]];
        let base = gd_igd(&a, &b, DistanceMode::Igd).unwrap();
        let s = |v: &Vec<Vec<f64>>| v.iter().map(|p| p.iter().map(|x| x * 3.0).collect()).collect::<Vec<Vec<f64>>>();
        let scaled = gd_igd(&s(&a), &s(&b), DistanceMode::Igd).unwrap();
        assert!((scaled - 3.0 * base).abs() < 1e-12);
    }
}
