//! NSGA-II, NSGA-III and MOEA/D, each with an optional IR2 repair step,
//! and the run loop that drives them.

mod moead;
mod nsga2;
mod nsga3;
mod operators;
mod sorting;

pub use moead::{MoeadParams, MoeadState};
pub use nsga2::{binary_tournament, nsga2_select, nsga2_survival, Survivors};
pub use nsga3::{associate_niches, nsga3_select, nsga3_survival, Nsga3State};
pub use operators::{polynomial_mutation, polynomial_step, sbx_beta, sbx_crossover, GeneticParams, SBX_VARIABLE_PROB};
pub use sorting::{crowding_distance, nondominated_fronts, ranks_from_fronts};

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir2::{Ir2Params, Ir2State};
use crate::metrics::{gd_igd, DistanceMode, HvProtocol};
use crate::problems::{make_problem, pareto_front_sample, suite_of, Suite};
use crate::refassoc::{das_dennis, default_shrink, layered_points, LayerFill, ReferenceSet, ScalarizingMetric};
use crate::rng::{RandomSource, Stream};
use crate::types::{evaluate_all, objectives_of, EvaluationCounter, Individual, Population, ProblemDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsga2,
    Nsga3,
    Moead,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Nsga3 => "nsga3",
            Algorithm::Moead => "moead",
        }
    }

    /// Association metric IR2 uses with this host.
    pub fn default_metric(&self, moead: &MoeadParams) -> ScalarizingMetric {
        match self {
            Algorithm::Nsga2 => ScalarizingMetric::Asf,
            Algorithm::Nsga3 => ScalarizingMetric::Pdm,
            Algorithm::Moead => ScalarizingMetric::Pbi { theta: moead.theta },
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "nsga2" | "nsgaii" => Ok(Algorithm::Nsga2),
            "nsga3" | "nsgaiii" => Ok(Algorithm::Nsga3),
            "moead" => Ok(Algorithm::Moead),
            _ => Err(Error::config(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Population size and Das-Dennis gaps per objective count.
pub fn default_population(n_obj: usize) -> Result<(usize, usize)> {
    match n_obj {
        2 => Ok((100, 99)),
        3 => Ok((105, 13)),
        4 => Ok((286, 10)),
        5 => Ok((495, 8)),
        m => Err(Error::config(format!("no default population size for M = {m}"))),
    }
}

/// Layered reference directions instead of a single lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub gaps: Vec<usize>,
    #[serde(default)]
    pub shrink: Option<Vec<f64>>,
    #[serde(default = "default_fill")]
    pub fill: LayerFill,
}

fn default_fill() -> LayerFill {
    LayerFill::Skeleton
}

/// Which indicators to compute every generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSelection {
    pub hv: bool,
    pub gd: bool,
    pub igd: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self {
            hv: true,
            gd: false,
            igd: false,
        }
    }
}

/// Points requested from the analytic front for GD/IGD.
pub const FRONT_POINTS: usize = 500;

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: String,
    pub n_obj: usize,
    pub algorithm: Algorithm,
    /// Apply the IR2 operator.
    pub ir2: bool,
    pub pop_size: Option<usize>,
    pub gaps: Option<usize>,
    pub layers: Option<LayerSpec>,
    pub generations: usize,
    pub genetic: GeneticParams,
    pub ir2_params: Ir2Params,
    pub moead: MoeadParams,
    pub seed: u64,
    pub metrics: MetricSelection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "ZDT1".into(),
            n_obj: 2,
            algorithm: Algorithm::Nsga2,
            ir2: false,
            pop_size: None,
            gaps: None,
            layers: None,
            generations: 100,
            genetic: GeneticParams::default(),
            ir2_params: Ir2Params::default(),
            moead: MoeadParams::default(),
            seed: 1,
            metrics: MetricSelection::default(),
        }
    }
}

impl RunConfig {
    /// `nsga2`, `nsga2-ir2`, ...
    pub fn variant_id(&self) -> String {
        if self.ir2 {
            format!("{}-ir2", self.algorithm)
        } else {
            self.algorithm.name().to_string()
        }
    }

    /// Builds problem, reference set and indicators; every configuration
    /// error surfaces here.
    pub fn resolve(&self) -> Result<Setup> {
        let problem = make_problem(&self.problem, self.n_obj, None)?;
        self.genetic.validate()?;
        self.ir2_params.validate()?;
        let m = self.n_obj;
        let z = if let Some(layers) = &self.layers {
            let shrink = layers.shrink.clone().unwrap_or_else(|| default_shrink(layers.gaps.len()));
            layered_points(m, &layers.gaps, &shrink, layers.fill)?
        } else {
            let gaps = match (self.gaps, self.pop_size) {
                (Some(g), _) => g,
                (None, None) => default_population(m)?.1,
                (None, Some(n)) => lattice_gaps_for(m, n).ok_or_else(|| {
                    Error::config(format!("no Das-Dennis lattice with {n} points for M = {m}; set gaps explicitly"))
                })?,
            };
            das_dennis(m, gaps)?
        };
        let n = self.pop_size.unwrap_or(z.len());
        if n < 4 {
            return Err(Error::config(format!("population size {n} is too small")));
        }
        if self.algorithm != Algorithm::Nsga2 && n != z.len() {
            return Err(Error::config(format!(
                "{} needs one member per reference point ({} points, N = {n})",
                self.algorithm,
                z.len()
            )));
        }
        let suite = suite_of(&self.problem)?;
        let hv = HvProtocol::new(n, m, suite == Suite::Wfg)?;
        let front = if self.metrics.gd || self.metrics.igd {
            Some(pareto_front_sample(&problem, FRONT_POINTS)?.points)
        } else {
            None
        };
        if self.metrics.hv && m > crate::metrics::MAX_HV_OBJECTIVES {
            return Err(Error::Unsupported(format!("hypervolume for M = {m}")));
        }
        Ok(Setup {
            problem,
            z,
            pop_size: n,
            hv,
            front,
        })
    }
}

fn lattice_gaps_for(m: usize, n: usize) -> Option<usize> {
    if m == 2 {
        return n.checked_sub(1).filter(|&g| g > 0);
    }
    (1..=n).find(|&p| crate::problems::binomial(p + m - 1, m - 1) == n as u128)
}

/// Resolved pieces of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: ProblemDefinition,
    pub z: ReferenceSet,
    pub pop_size: usize,
    pub hv: HvProtocol,
    pub front: Option<Vec<Vec<f64>>>,
}

/// Per-generation measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub igd: Option<f64>,
    /// Repair was applied to the offspring that produced this population.
    pub learning: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub training_rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<GenerationRecord>,
    pub population: Population,
    pub evaluations: u64,
}

impl RunTrace {
    pub fn hv_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.hv).collect()
    }
}

/// Host-specific state.
#[derive(Debug, Clone)]
enum HostState {
    Nsga2 { rank: Vec<usize>, crowding: Vec<f64> },
    Nsga3(Nsga3State),
    Moead(MoeadState),
}

/// A run in progress: population, streams and operator state.
pub struct Engine {
    pub config: RunConfig,
    pub setup: Setup,
    pub population: Population,
    pub generation: usize,
    pub counter: EvaluationCounter,
    pub ir2: Option<Ir2State>,
    host: HostState,
    mating: Stream,
    survival: Stream,
}

impl Engine {
    /// Validates the configuration, then samples and evaluates `P_0`.
    pub fn new(config: RunConfig) -> Result<Self> {
        let setup = config.resolve()?;
        let src = RandomSource::new(config.seed);
        let (lower, upper) = setup.problem.bounds();
        let mut init = src.stream("init");
        let mut population: Population = (0..setup.pop_size)
            .map(|_| {
                let x = lower.iter().zip(upper).map(|(lo, hi)| lo + (hi - lo) * init.gen::<f64>()).collect();
                Individual::new(x, 0)
            })
            .collect();
        let mut counter = EvaluationCounter::default();
        evaluate_all(&setup.problem, &mut population, &mut counter)?;

        let f = objectives_of(&population);
        let host = match config.algorithm {
            Algorithm::Nsga2 => {
                let (rank, crowding) = rank_and_crowding(&f);
                HostState::Nsga2 { rank, crowding }
            }
            Algorithm::Nsga3 => HostState::Nsga3(Nsga3State::default()),
            Algorithm::Moead => {
                let mut s = MoeadState::new(&setup.z, &config.moead)?;
                f.iter().for_each(|v| s.update_ideal(v));
                HostState::Moead(s)
            }
        };
        let ir2 = if config.ir2 {
            let metric = config.algorithm.default_metric(&config.moead);
            Some(Ir2State::new(config.ir2_params, metric, setup.z.len(), src.derive("ir2", 0))?)
        } else {
            None
        };
        Ok(Self {
            mating: src.stream("mating"),
            survival: src.stream("survival"),
            config,
            setup,
            population,
            generation: 0,
            counter,
            ir2,
            host,
        })
    }

    /// Indicators of the current population.
    pub fn record(&self, learning: bool, training_rows: Option<usize>) -> Result<GenerationRecord> {
        let f = objectives_of(&self.population);
        let sel = self.config.metrics;
        let hv = if sel.hv { Some(self.setup.hv.measure(&f)?) } else { None };
        let (gd, igd) = match &self.setup.front {
            Some(front) => (
                sel.gd.then(|| gd_igd(&f, front, DistanceMode::Gd)).transpose()?,
                sel.igd.then(|| gd_igd(&f, front, DistanceMode::Igd)).transpose()?,
            ),
            None => (None, None),
        };
        Ok(GenerationRecord {
            generation: self.generation,
            evaluations: self.counter.get(),
            hv,
            gd,
            igd,
            learning,
            training_rows,
        })
    }

    /// Advances one generation and returns its record.
    pub fn step(&mut self) -> Result<GenerationRecord> {
        let learning = match self.config.algorithm {
            Algorithm::Nsga2 | Algorithm::Nsga3 => nsga_ir2_generation(self)?,
            Algorithm::Moead => moead_ir2_generation(self)?,
        };
        self.generation += 1;
        let rows = if learning {
            self.ir2.as_ref().and_then(|s| s.learning_events.last()).map(|e| e.1)
        } else {
            None
        };
        self.record(learning, rows)
    }
}

fn rank_and_crowding(f: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let fronts = nondominated_fronts(f);
    let rank = ranks_from_fronts(&fronts, f.len());
    let mut crowding = vec![0.0; f.len()];
    for front in &fronts {
        for (i, d) in front.iter().zip(crowding_distance(f, front)) {
            crowding[*i] = d;
        }
    }
    (rank, crowding)
}

/// IR2 preamble shared by both generation kinds: returns the repair flag.
fn ir2_begin(engine: &mut Engine) -> Result<bool> {
    let t = engine.generation;
    match engine.ir2.as_mut() {
        Some(state) => {
            let (lower, upper) = engine.setup.problem.bounds();
            state.begin_generation(t, &engine.population, &engine.setup.z, lower, upper)
        }
        None => Ok(false),
    }
}

/// One NSGA-II or NSGA-III generation with the optional repair step:
/// target update, gate, training, variation, repair, evaluation,
/// archive update and survival. Returns whether repair ran.
pub fn nsga_ir2_generation(engine: &mut Engine) -> Result<bool> {
    let t = engine.generation;
    let flag = ir2_begin(engine)?;
    let n = engine.setup.pop_size;
    let (lower, upper) = engine.setup.problem.bounds();
    let genetic = engine.config.genetic;

    let mut offspring: Population = Vec::with_capacity(n + 1);
    while offspring.len() < n {
        let (a, b) = match &engine.host {
            HostState::Nsga2 { rank, crowding } => (
                binary_tournament(rank, crowding, &mut engine.mating),
                binary_tournament(rank, crowding, &mut engine.mating),
            ),
            _ => {
                let pair = sample(&mut engine.mating, n, 2);
                (pair.index(0), pair.index(1))
            }
        };
        let (mut c1, mut c2) = sbx_crossover(
            &engine.population[a].x,
            &engine.population[b].x,
            &genetic,
            lower,
            upper,
            &mut engine.mating,
        );
        polynomial_mutation(&mut c1, &genetic, lower, upper, &mut engine.mating);
        polynomial_mutation(&mut c2, &genetic, lower, upper, &mut engine.mating);
        offspring.push(Individual::new(c1, t + 1));
        offspring.push(Individual::new(c2, t + 1));
    }
    offspring.truncate(n);

    if flag {
        let state = engine.ir2.as_mut().expect("flag implies IR2 state");
        state.repair(&mut offspring, lower, upper)?;
    }
    evaluate_all(&engine.setup.problem, &mut offspring, &mut engine.counter)?;
    if let Some(state) = engine.ir2.as_mut() {
        state.end_generation(t, &offspring);
    }

    let mut union = std::mem::take(&mut engine.population);
    union.extend(offspring);
    let f = objectives_of(&union);
    match &mut engine.host {
        HostState::Nsga2 { rank, crowding } => {
            let s = nsga2_select(&f, n);
            engine.population = s.indices.iter().map(|&i| union[i].clone()).collect();
            *rank = s.rank;
            *crowding = s.crowding;
        }
        HostState::Nsga3(state) => {
            let keep = nsga3_select(&f, &engine.setup.z, n, state, &mut engine.survival);
            engine.population = keep.into_iter().map(|i| union[i].clone()).collect();
        }
        HostState::Moead(_) => return Err(Error::contract("MOEA/D state in an NSGA generation")),
    }
    Ok(flag)
}

/// One MOEA/D generation with the optional repair step. Subproblems are
/// visited in order; each yields one child that may replace up to `n_r`
/// members of its mating pool. Returns whether repair ran.
pub fn moead_ir2_generation(engine: &mut Engine) -> Result<bool> {
    let t = engine.generation;
    let flag = ir2_begin(engine)?;
    let n = engine.setup.pop_size;
    let (lower, upper) = engine.setup.problem.bounds();
    let genetic = engine.config.genetic;
    let picked = match engine.ir2.as_mut() {
        Some(state) => state.pick_subproblems(n),
        None => Vec::new(),
    };
    let HostState::Moead(state) = &mut engine.host else {
        return Err(Error::contract("NSGA state in a MOEA/D generation"));
    };

    let mut offspring: Population = Vec::with_capacity(n);
    for i in 0..n {
        let pool = state.mating_pool(i, &mut engine.mating);
        let (j, k) = MoeadState::pick_parents(&pool, &mut engine.mating);
        let (mut child, _) = sbx_crossover(
            &engine.population[j].x,
            &engine.population[k].x,
            &genetic,
            lower,
            upper,
            &mut engine.mating,
        );
        polynomial_mutation(&mut child, &genetic, lower, upper, &mut engine.mating);
        if flag && picked.binary_search(&i).is_ok() {
            let ir2 = engine.ir2.as_mut().expect("flag implies IR2 state");
            child = ir2.repair_single(&child, lower, upper)?;
        }
        let mut one = [Individual::new(child, t + 1)];
        evaluate_all(&engine.setup.problem, &mut one, &mut engine.counter)?;
        let [child] = one;
        state.update_ideal(child.objectives());
        let current: Vec<&[f64]> = engine.population.iter().map(|m| m.objectives()).collect();
        let replaced = state.replacements(child.objectives(), &pool, &current, &mut engine.mating);
        for r in replaced {
            engine.population[r] = child.clone();
        }
        offspring.push(child);
    }
    if let Some(ir2) = engine.ir2.as_mut() {
        ir2.end_generation(t, &offspring);
    }
    Ok(flag)
}

/// Runs `config.generations` generations, handing each record and
/// population to `sink` as soon as it exists.
pub fn run_with(
    config: &RunConfig,
    mut sink: impl FnMut(&GenerationRecord, &Population) -> Result<()>,
) -> Result<RunTrace> {
    let mut engine = Engine::new(config.clone())?;
    let first = engine.record(false, None)?;
    sink(&first, &engine.population)?;
    let mut records = vec![first];
    for _ in 0..config.generations {
        let r = engine.step()?;
        sink(&r, &engine.population)?;
        records.push(r);
    }
    Ok(RunTrace {
        records,
        evaluations: engine.counter.get(),
        population: engine.population,
    })
}

pub fn run(config: &RunConfig) -> Result<RunTrace> {
    run_with(config, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithm: Algorithm, problem: &str, m: usize) -> RunConfig {
        RunConfig {
            problem: problem.into(),
            n_obj: m,
            algorithm,
            generations: 3,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn table_defaults() {
        for (m, n, p) in [(2, 100, 99), (3, 105, 13), (4, 286, 10), (5, 495, 8)] {
            assert_eq!(default_population(m).unwrap(), (n, p));
        }
        assert!(default_population(6).is_err());
        assert_eq!(lattice_gaps_for(3, 91), Some(12));
        assert_eq!(lattice_gaps_for(3, 92), None);
    }

    #[test]
    fn zero_generations() {
        let mut c = small(Algorithm::Nsga2, "ZDT1", 2);
        c.generations = 0;
        let t = run(&c).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.evaluations, 100);
    }

    #[test]
    fn budget_and_determinism() {
        for (alg, p, m) in [(Algorithm::Nsga2, "ZDT2", 2), (Algorithm::Nsga3, "DTLZ2", 3), (Algorithm::Moead, "DTLZ1", 3)] {
            let c = small(alg, p, m);
            let a = run(&c).unwrap();
            let n = c.resolve().unwrap().pop_size as u64;
            assert_eq!(a.evaluations, n * 4);
            assert_eq!(a.records.len(), 4);
            assert!(a.records.windows(2).all(|w| w[1].evaluations - w[0].evaluations == n));
            assert_eq!(a, run(&c).unwrap());
        }
    }

    #[test]
    fn configuration_errors() {
        assert!(Engine::new(small(Algorithm::Nsga2, "ZDT9", 2)).is_err());
        assert!(Engine::new(RunConfig { pop_size: Some(50), ..small(Algorithm::Nsga3, "DTLZ2", 3) }).is_err());
        let mut c = small(Algorithm::Nsga2, "WFG1", 3);
        c.metrics.igd = true;
        assert!(matches!(Engine::new(c), Err(Error::Unsupported(_))));
        assert!("moea/d".parse::<Algorithm>().is_err());
        assert_eq!("NSGA-III".parse::<Algorithm>().unwrap(), Algorithm::Nsga3);
    }

    #[test]
    fn gated_off_ir2_matches_base() {
        for (alg, p, m) in [(Algorithm::Nsga2, "ZDT1", 2), (Algorithm::Nsga3, "DTLZ2", 3), (Algorithm::Moead, "DTLZ2", 3)] {
            let mut c = small(alg, p, m);
            c.generations = 8;
            let base = run(&c).unwrap();
            c.ir2 = true;
            c.ir2_params.g_th = 100.0;
            let off = run(&c).unwrap();
            assert_eq!(base, off, "{alg}");
        }
    }

    #[test]
    fn ir2_learns_on_cadence() {
        let mut c = small(Algorithm::Nsga2, "ZDT1", 2);
        c.ir2 = true;
        c.generations = 12;
        let t = run(&c).unwrap();
        let learned: Vec<usize> = t.records.iter().filter(|r| r.learning).map(|r| r.generation - 1).collect();
        assert!(learned.iter().all(|g| g % 5 == 0 && *g > 0), "{learned:?}");
        assert!(!learned.is_empty());
        assert_eq!(t.evaluations, 100 * 13);
    }
}
