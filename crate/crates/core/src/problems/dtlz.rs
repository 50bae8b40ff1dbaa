use std::f64::consts::FRAC_PI_2;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtlz {
    Dtlz1,
    Dtlz2,
    Dtlz3,
    Dtlz4,
}

pub const DTLZ_N_VAR: usize = 15;
const DTLZ4_ALPHA: i32 = 100;

impl Dtlz {
    pub fn evaluate(self, x: &[f64], n_obj: usize) -> Vec<f64> {
        let (pos, dist) = x.split_at(n_obj - 1);
        let k = dist.len() as f64;
        let g = match self {
            Dtlz::Dtlz1 | Dtlz::Dtlz3 => {
                100.0
                    * (k + dist
                        .iter()
                        .map(|&v| (v - 0.5).powi(2) - (20.0 * PI * (v - 0.5)).cos())
                        .sum::<f64>())
            }
            Dtlz::Dtlz2 | Dtlz::Dtlz4 => dist.iter().map(|&v| (v - 0.5).powi(2)).sum(),
        };
        match self {
            Dtlz::Dtlz1 => (0..n_obj)
                .map(|m| {
                    let mut f = 0.5 * (1.0 + g);
                    f *= pos[..n_obj - 1 - m].iter().product::<f64>();
                    if m > 0 {
                        f *= 1.0 - pos[n_obj - 1 - m];
                    }
                    f
                })
                .collect(),
            _ => {
                let theta: Vec<f64> = match self {
                    Dtlz::Dtlz4 => pos.iter().map(|&v| v.powi(DTLZ4_ALPHA) * FRAC_PI_2).collect(),
                    _ => pos.iter().map(|&v| v * FRAC_PI_2).collect(),
                };
                sphere(&theta, 1.0 + g, n_obj)
            }
        }
    }
}

fn sphere(theta: &[f64], radius: f64, n_obj: usize) -> Vec<f64> {
    (0..n_obj)
        .map(|m| {
            let mut f = radius;
            f *= theta[..n_obj - 1 - m].iter().map(|t| t.cos()).product::<f64>();
            if m > 0 {
                f *= theta[n_obj - 1 - m].sin();
            }
            f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_points_lie_on_fronts() {
        for m in 3..=5 {
            for probe in [0.0, 0.2, 0.7, 1.0] {
                let mut x = vec![0.5; DTLZ_N_VAR];
                x.iter_mut().take(m - 1).enumerate().for_each(|(i, v)| *v = (probe + 0.13 * i as f64).min(1.0));
                for p in [Dtlz::Dtlz2, Dtlz::Dtlz3, Dtlz::Dtlz4] {
                    let f = p.evaluate(&x, m);
                    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() < 1e-12, "{p:?} M={m}");
                }
                let f = Dtlz::Dtlz1.evaluate(&x, m);
                assert!((f.iter().sum::<f64>() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn off_optimum_is_worse() {
        let mut x = vec![0.5; DTLZ_N_VAR];
        x[10] = 0.9;
        let f = Dtlz::Dtlz2.evaluate(&x, 3);
        assert!(f.iter().map(|v| v * v).sum::<f64>().sqrt() > 1.0);
    }
}
