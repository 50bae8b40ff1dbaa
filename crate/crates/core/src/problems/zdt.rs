//! ZDT problems with the distance variables' optimum moved to 0.5.
//!
//! Every distance variable enters through `2 * |x_k - 0.5|`, which maps
//! `[0, 1]` onto `[0, 1]` with its zero at 0.5, so the original g-function
//! range is preserved. ZDT4's Rastrigin term is shifted by 0.5 instead.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zdt {
    Zdt1,
    Zdt2,
    Zdt3,
    Zdt4,
    Zdt6,
}

impl Zdt {
    pub fn n_var(self) -> usize {
        match self {
            Zdt::Zdt1 | Zdt::Zdt2 | Zdt::Zdt3 => 30,
            Zdt::Zdt4 | Zdt::Zdt6 => 10,
        }
    }

    pub fn bounds(self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_var();
        match self {
            Zdt::Zdt4 => {
                let mut lower = vec![-5.0; n];
                let mut upper = vec![5.0; n];
                lower[0] = 0.0;
                upper[0] = 1.0;
                (lower, upper)
            }
            _ => (vec![0.0; n], vec![1.0; n]),
        }
    }

    pub fn g(self, x: &[f64]) -> f64 {
        let tail = &x[1..];
        let n1 = tail.len() as f64;
        match self {
            Zdt::Zdt1 | Zdt::Zdt2 | Zdt::Zdt3 => 1.0 + 9.0 * tail.iter().map(|&v| shifted(v)).sum::<f64>() / n1,
            Zdt::Zdt4 => {
                1.0 + 10.0 * n1
                    + tail
                        .iter()
                        .map(|&v| {
                            let y = v - 0.5;
                            y * y - 10.0 * (4.0 * PI * y).cos()
                        })
                        .sum::<f64>()
            }
            Zdt::Zdt6 => 1.0 + 9.0 * (tail.iter().map(|&v| shifted(v)).sum::<f64>() / n1).powf(0.25),
        }
    }

    pub fn evaluate(self, x: &[f64]) -> Vec<f64> {
        let g = self.g(x);
        let f1 = match self {
            Zdt::Zdt6 => 1.0 - (-4.0 * x[0]).exp() * (6.0 * PI * x[0]).sin().powi(6),
            _ => x[0],
        };
        let r = f1 / g;
        let h = match self {
            Zdt::Zdt1 | Zdt::Zdt4 => 1.0 - r.sqrt(),
            Zdt::Zdt2 | Zdt::Zdt6 => 1.0 - r * r,
            Zdt::Zdt3 => 1.0 - r.sqrt() - r * (10.0 * PI * f1).sin(),
        };
        vec![f1, g * h]
    }
}

#[inline]
fn shifted(v: f64) -> f64 {
    2.0 * (v - 0.5).abs()
}

/// Disconnected f1 intervals of the ZDT3 front.
pub const ZDT3_SEGMENTS: [(f64, f64); 5] = [
    (0.0, 0.083_001_534_9),
    (0.182_228_780_1, 0.257_762_363_4),
    (0.409_313_674_8, 0.453_882_104_1),
    (0.618_396_794_4, 0.652_511_703_8),
    (0.823_331_798_3, 0.851_832_865_4),
];

/// Smallest f1 reachable on the ZDT6 front.
pub const ZDT6_F1_MIN: f64 = 0.280_775_319_1;
