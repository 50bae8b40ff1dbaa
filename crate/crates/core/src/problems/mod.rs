//! Benchmark problems and their true Pareto fronts.

mod dtlz;
mod wfg;
mod zdt;

pub use dtlz::{Dtlz, DTLZ_N_VAR};
pub use wfg::{Wfg, WfgParams, WFG_N_VAR};
pub use zdt::{Zdt, ZDT3_SEGMENTS, ZDT6_F1_MIN};

use crate::error::{Error, Result};
use crate::refassoc::das_dennis;
use crate::types::{ObjectiveVector, ProblemDefinition};

/// Benchmark family, used for the HV normalization rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Zdt,
    Dtlz,
    Wfg,
}

/// Registry entry for `problems list`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub objectives: &'static [usize],
    pub n_var: usize,
}

pub const PROBLEM_NAMES: [&str; 20] = [
    "ZDT1", "ZDT2", "ZDT3", "ZDT4", "ZDT6", "DTLZ1", "DTLZ2", "DTLZ3", "DTLZ4", "WFG1", "WFG2", "WFG3", "WFG4",
    "WFG5", "WFG6", "WFG7", "WFG8", "WFG9", "WFG4-mod", "WFG7-mod",
];

pub fn registry() -> Vec<ProblemInfo> {
    PROBLEM_NAMES
        .iter()
        .map(|&name| {
            let (objectives, n_var): (&'static [usize], usize) = match suite_of(name).expect("registered name") {
                Suite::Zdt => (&[2], parse_zdt(name).expect("registered name").n_var()),
                Suite::Dtlz => (&[3, 4, 5], DTLZ_N_VAR),
                Suite::Wfg => (&[3, 4], WFG_N_VAR),
            };
            ProblemInfo {
                name,
                objectives,
                n_var,
            }
        })
        .collect()
}

pub fn suite_of(name: &str) -> Result<Suite> {
    let upper = name.to_ascii_uppercase();
    if upper.starts_with("ZDT") {
        Ok(Suite::Zdt)
    } else if upper.starts_with("DTLZ") {
        Ok(Suite::Dtlz)
    } else if upper.starts_with("WFG") {
        Ok(Suite::Wfg)
    } else {
        Err(Error::config(format!("unknown problem '{name}'")))
    }
}

fn parse_zdt(name: &str) -> Result<Zdt> {
    match name.to_ascii_uppercase().as_str() {
        "ZDT1" => Ok(Zdt::Zdt1),
        "ZDT2" => Ok(Zdt::Zdt2),
        "ZDT3" => Ok(Zdt::Zdt3),
        "ZDT4" => Ok(Zdt::Zdt4),
        "ZDT6" => Ok(Zdt::Zdt6),
        _ => Err(Error::config(format!("unknown problem '{name}'"))),
    }
}

fn parse_dtlz(name: &str) -> Result<Dtlz> {
    match name.to_ascii_uppercase().as_str() {
        "DTLZ1" => Ok(Dtlz::Dtlz1),
        "DTLZ2" => Ok(Dtlz::Dtlz2),
        "DTLZ3" => Ok(Dtlz::Dtlz3),
        "DTLZ4" => Ok(Dtlz::Dtlz4),
        _ => Err(Error::config(format!("unknown problem '{name}'"))),
    }
}

/// `(index, is hardened variant)` for a WFG name.
fn parse_wfg(name: &str) -> Result<(u8, bool)> {
    let upper = name.to_ascii_uppercase();
    let (base, hard) = match upper.strip_suffix("-MOD") {
        Some(b) => (b, true),
        None => (upper.as_str(), false),
    };
    let index: u8 = base
        .strip_prefix("WFG")
        .and_then(|d| d.parse().ok())
        .filter(|i| (1..=9).contains(i))
        .ok_or_else(|| Error::config(format!("unknown problem '{name}'")))?;
    if hard && index != 4 && index != 7 {
        return Err(Error::config(format!("no hardened variant of WFG{index}")));
    }
    Ok((index, hard))
}

/// Builds a benchmark problem by name and objective count.
pub fn make_problem(name: &str, n_obj: usize, variant_params: Option<WfgParams>) -> Result<ProblemDefinition> {
    match suite_of(name)? {
        Suite::Zdt => {
            let z = parse_zdt(name)?;
            if n_obj != 2 {
                return Err(Error::config(format!("{name} is bi-objective, got M = {n_obj}")));
            }
            let (lower, upper) = z.bounds();
            ProblemDefinition::new(name.to_ascii_uppercase(), 2, lower, upper, move |x| z.evaluate(x))
        }
        Suite::Dtlz => {
            let d = parse_dtlz(name)?;
            if !(3..=5).contains(&n_obj) {
                return Err(Error::config(format!("{name} supports M = 3..5, got {n_obj}")));
            }
            ProblemDefinition::new(
                name.to_ascii_uppercase(),
                n_obj,
                vec![0.0; DTLZ_N_VAR],
                vec![1.0; DTLZ_N_VAR],
                move |x| d.evaluate(x, n_obj),
            )
        }
        Suite::Wfg => {
            let (index, hard) = parse_wfg(name)?;
            if !(3..=4).contains(&n_obj) {
                return Err(Error::config(format!("{name} supports M = 3..4, got {n_obj}")));
            }
            let params = variant_params.or(match (index, hard) {
                (4, true) => Some(WfgParams::WFG4_HARD),
                (7, true) => Some(WfgParams::WFG7_HARD),
                _ => None,
            });
            let wfg = Wfg::new(index, n_obj, params);
            let upper = wfg.upper_bounds();
            let display = if hard { format!("WFG{index}-mod") } else { format!("WFG{index}") };
            ProblemDefinition::new(display, n_obj, vec![0.0; WFG_N_VAR], upper, move |x| wfg.evaluate(x))
        }
    }
}

/// WFG parameters in force for a named problem, if it has any.
pub fn wfg_params_for(name: &str) -> Option<WfgParams> {
    let (index, hard) = parse_wfg(name).ok()?;
    match (index, hard) {
        (4, false) => Some(WfgParams::WFG4_DEFAULT),
        (4, true) => Some(WfgParams::WFG4_HARD),
        (7, false) => Some(WfgParams::WFG7_DEFAULT),
        (7, true) => Some(WfgParams::WFG7_HARD),
        _ => None,
    }
}

/// How the points of a [`FrontSample`] were laid out.
#[derive(Debug, Clone, PartialEq)]
pub enum FrontSpacing {
    /// Equally spaced f1 over the front's f1 range (or segments).
    EqualF1,
    /// Das-Dennis lattice with the given gap count, mapped onto the front.
    Lattice { gaps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSample {
    pub points: Vec<ObjectiveVector>,
    pub spacing: FrontSpacing,
}

/// Samples the analytic Pareto front of a benchmark problem.
///
/// Bi-objective fronts get exactly `count` points with equally spaced f1.
/// For M >= 3 the largest Das-Dennis lattice with at most `count` points
/// is mapped onto the front, so fewer than `count` points may come back.
pub fn pareto_front_sample(problem: &ProblemDefinition, count: usize) -> Result<FrontSample> {
    if count < 2 {
        return Err(Error::contract("front sample needs at least two points"));
    }
    let name = problem.name.as_str();
    match suite_of(name)? {
        Suite::Zdt => {
            let z = parse_zdt(name)?;
            let f1s = match z {
                Zdt::Zdt3 => segment_grid(&ZDT3_SEGMENTS, count),
                Zdt::Zdt6 => linspace(ZDT6_F1_MIN, 1.0, count),
                _ => linspace(0.0, 1.0, count),
            };
            let points = f1s
                .into_iter()
                .map(|f1| {
                    let f2 = match z {
                        Zdt::Zdt1 | Zdt::Zdt4 => 1.0 - f1.sqrt(),
                        Zdt::Zdt2 | Zdt::Zdt6 => 1.0 - f1 * f1,
                        Zdt::Zdt3 => 1.0 - f1.sqrt() - f1 * (10.0 * std::f64::consts::PI * f1).sin(),
                    };
                    vec![f1, f2]
                })
                .collect();
            Ok(FrontSample {
                points,
                spacing: FrontSpacing::EqualF1,
            })
        }
        Suite::Dtlz => {
            let d = parse_dtlz(name)?;
            let (lattice, gaps) = largest_lattice(problem.n_obj, count)?;
            let points = lattice
                .into_iter()
                .map(|p| match d {
                    Dtlz::Dtlz1 => p.iter().map(|v| 0.5 * v).collect(),
                    _ => unit_sphere(&p),
                })
                .collect();
            Ok(FrontSample {
                points,
                spacing: FrontSpacing::Lattice { gaps },
            })
        }
        Suite::Wfg => {
            let (index, _) = parse_wfg(name)?;
            if index < 4 {
                return Err(Error::Unsupported(format!("analytic front sampling for {name}")));
            }
            let (lattice, gaps) = largest_lattice(problem.n_obj, count)?;
            let points = lattice
                .into_iter()
                .map(|p| {
                    unit_sphere(&p)
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| v * 2.0 * (i + 1) as f64)
                        .collect()
                })
                .collect();
            Ok(FrontSample {
                points,
                spacing: FrontSpacing::Lattice { gaps },
            })
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `count` equally spaced abscissae over a union of disjoint segments.
fn segment_grid(segments: &[(f64, f64)], count: usize) -> Vec<f64> {
    let total: f64 = segments.iter().map(|(a, b)| b - a).sum();
    let step = total / (count - 1) as f64;
    (0..count)
        .map(|i| {
            let mut s = (step * i as f64).min(total);
            for &(a, b) in segments {
                if s <= b - a + 1e-15 {
                    return (a + s).min(b);
                }
                s -= b - a;
            }
            segments.last().map(|s| s.1).unwrap_or(0.0)
        })
        .collect()
}

fn unit_sphere(p: &[f64]) -> Vec<f64> {
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    p.iter().map(|v| v / norm).collect()
}

fn largest_lattice(m: usize, count: usize) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut gaps = 1;
    while binomial(gaps + 1 + m - 1, m - 1) <= count as u128 {
        gaps += 1;
    }
    Ok((das_dennis(m, gaps)?.points, gaps))
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardened_variants_carry_their_parameters() {
        assert_eq!(wfg_params_for("WFG4-mod"), Some(WfgParams { a: 70.0, b: 5.0, c: 0.35 }));
        assert_eq!(wfg_params_for("WFG7-mod").unwrap().c, 100.0);
        assert_eq!(wfg_params_for("WFG7").unwrap().c, 50.0);
        assert_eq!(wfg_params_for("WFG4"), Some(WfgParams { a: 30.0, b: 10.0, c: 0.35 }));
    }

    #[test]
    fn dimensions() {
        let p = make_problem("DTLZ2", 4, None).unwrap();
        assert_eq!((p.n_var, p.n_obj), (15, 4));
        let p = make_problem("WFG5", 3, None).unwrap();
        assert_eq!(p.n_var, 24);
        assert_eq!(p.upper[23], 48.0);
        assert_eq!(make_problem("ZDT1", 2, None).unwrap().n_var, 30);
        assert_eq!(make_problem("WFG7-mod", 3, None).unwrap().name, "WFG7-mod");
    }

    #[test]
    fn configuration_errors() {
        for (name, m) in [("ZDT5", 2), ("ZDT1", 3), ("DTLZ2", 2), ("WFG1", 5), ("WFG5-mod", 3), ("nope", 2)] {
            assert!(matches!(make_problem(name, m, None), Err(Error::Config(_))), "{name} {m}");
        }
    }

    #[test]
    fn front_samples() {
        let zdt1 = make_problem("ZDT1", 2, None).unwrap();
        let s = pareto_front_sample(&zdt1, 500).unwrap();
        assert_eq!(s.points.len(), 500);
        assert_eq!(s.points[0], vec![0.0, 1.0]);
        let step = s.points[1][0] - s.points[0][0];
        assert!(s.points.windows(2).all(|w| ((w[1][0] - w[0][0]) - step).abs() < 1e-12));
        let quarter = s.points.iter().find(|p| (p[0] - 0.25).abs() < 1e-3).unwrap();
        assert!((quarter[1] - (1.0 - quarter[0].sqrt())).abs() < 1e-15);

        let zdt2 = pareto_front_sample(&make_problem("ZDT2", 2, None).unwrap(), 500).unwrap();
        assert_eq!(zdt2.points[0], vec![0.0, 1.0]);

        let zdt3 = pareto_front_sample(&make_problem("ZDT3", 2, None).unwrap(), 500).unwrap();
        assert_eq!(zdt3.points.len(), 500);
        for p in &zdt3.points {
            assert!(ZDT3_SEGMENTS.iter().any(|(a, b)| p[0] >= a - 1e-12 && p[0] <= b + 1e-12));
        }

        let dtlz2 = pareto_front_sample(&make_problem("DTLZ2", 3, None).unwrap(), 500).unwrap();
        assert!(dtlz2.points.len() <= 500 && dtlz2.points.len() > 400);
        for p in &dtlz2.points {
            assert!((p.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            pareto_front_sample(&make_problem("WFG1", 3, None).unwrap(), 100),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn zdt_front_points_are_attainable() {
        for name in ["ZDT1", "ZDT2", "ZDT3", "ZDT4", "ZDT6"] {
            let p = make_problem(name, 2, None).unwrap();
            let s = pareto_front_sample(&p, 50).unwrap();
            // ZDT6 front is parameterized by x1 only through f1, check endpoints via evaluate.
            let mut x = vec![0.5; p.n_var];
            x[0] = if name == "ZDT6" { 0.0 } else { 1.0 };
            let f = p.evaluate(&x);
            let last = s.points.last().unwrap();
            if name != "ZDT3" && name != "ZDT6" {
                assert!((f[0] - last[0]).abs() < 1e-12 && (f[1] - last[1]).abs() < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn registry_lists_everything() {
        let reg = registry();
        assert_eq!(reg.len(), 20);
        assert!(reg.iter().any(|r| r.name == "WFG4-mod" && r.objectives == [3, 4]));
    }
}
