//! Innovized repair: target archive, sliding archive, training of the
//! repair model, offspring repair and the learning gate.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::distributions::Open01;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams, TrainingDataset};
use crate::metrics::mean_root_nearest;
use crate::refassoc::{associate, scalarize, NormalizationFrame, ReferenceSet, ScalarizingMetric};
use crate::rng::{RandomSource, Stream};
use crate::types::{objectives_of, DecisionVector, Individual, Population};

/// Operator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ir2Params {
    pub t_past: usize,
    pub t_freq: usize,
    pub eta: f64,
    /// Gate threshold in percent of the largest G seen so far.
    pub g_th: f64,
    pub repair_fraction: f64,
    /// `None` lets the host algorithm choose (ASF, PDM or PBI).
    pub association_metric: Option<ScalarizingMetric>,
}

impl Default for Ir2Params {
    fn default() -> Self {
        Self {
            t_past: 5,
            t_freq: 5,
            eta: 1.1,
            g_th: 10.0,
            repair_fraction: 0.5,
            association_metric: None,
        }
    }
}

impl Ir2Params {
    pub fn validate(&self) -> Result<()> {
        if self.t_past == 0 || self.t_freq == 0 {
            return Err(Error::config("t_past and t_freq must be positive"));
        }
        if !(self.eta >= 1.0) || !self.eta.is_finite() {
            return Err(Error::config(format!("eta must be >= 1, got {}", self.eta)));
        }
        if !(self.g_th >= 0.0) {
            return Err(Error::config(format!("g_th must be >= 0, got {}", self.g_th)));
        }
        if !(0.0..=1.0).contains(&self.repair_fraction) {
            return Err(Error::config("repair_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One slot per reference point; slot `i` holds the best solution seen for `Z[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetArchive {
    pub slots: Vec<Option<Individual>>,
}

impl TargetArchive {
    pub fn empty(n: usize) -> Self {
        Self { slots: vec![None; n] }
    }

    pub fn filled(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Associates each member of `p_t` with a reference point in the frame
/// of `p_t` and keeps, per slot, the member with the smallest value.
/// Incumbents are re-scored in the same frame; ties keep the incumbent.
pub fn update_target(
    p_t: &[Individual],
    prev: &TargetArchive,
    z: &ReferenceSet,
    metric: ScalarizingMetric,
) -> Result<TargetArchive> {
    if prev.slots.len() != z.len() {
        return Err(Error::contract(format!(
            "target archive has {} slots for {} reference points",
            prev.slots.len(),
            z.len()
        )));
    }
    let mut next = prev.clone();
    if p_t.is_empty() {
        return Ok(next);
    }
    let frame = NormalizationFrame::from_points(&objectives_of(p_t))?;
    let fbar: Vec<Vec<f64>> = p_t.iter().map(|ind| frame.apply(ind.objectives())).collect();
    let assoc = associate(&fbar, z, metric)?;
    for (ind, (index, value)) in p_t.iter().zip(assoc) {
        let replace = match &next.slots[index] {
            None => true,
            Some(incumbent) => {
                let current = scalarize(metric, &frame.apply(incumbent.objectives()), &z.points[index])?;
                value < current
            }
        };
        if replace {
            next.slots[index] = Some(ind.clone());
        }
    }
    Ok(next)
}

/// Offspring of the last `t_past` generations plus one lagged parent
/// population.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingArchive {
    t_past: usize,
    offspring: VecDeque<Population>,
    parent: Population,
}

impl SlidingArchive {
    pub fn new(t_past: usize) -> Self {
        Self {
            t_past,
            offspring: VecDeque::with_capacity(t_past + 1),
            parent: Vec::new(),
        }
    }

    pub fn t_past(&self) -> usize {
        self.t_past
    }

    pub fn len(&self) -> usize {
        self.parent.len() + self.offspring.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lagged parent population first, then offspring oldest first.
    pub fn members(&self) -> impl Iterator<Item = &Individual> {
        self.parent.iter().chain(self.offspring.iter().flatten())
    }

    pub fn offspring_generations(&self) -> usize {
        self.offspring.len()
    }
}

/// `A_{t+1}`: add `q_t`, drop the offspring buffer older than `t_past`
/// generations and swap in the lagged parent population.
pub fn update_archive(archive: &mut SlidingArchive, q_t: &[Individual], lagged_parent: &[Individual]) {
    archive.offspring.push_back(q_t.to_vec());
    while archive.offspring.len() > archive.t_past {
        archive.offspring.pop_front();
    }
    archive.parent = lagged_parent.to_vec();
}

/// Pairs each archive member with the target of its associated slot.
/// The archive is normalized in its own frame. Returns `None` when no
/// member lands on a filled slot.
pub fn archive_mapping(
    archive: &SlidingArchive,
    target: &TargetArchive,
    z: &ReferenceSet,
    metric: ScalarizingMetric,
) -> Result<Option<TrainingDataset>> {
    if archive.is_empty() || target.filled() == 0 {
        return Ok(None);
    }
    let members: Vec<&Individual> = archive.members().collect();
    let f: Vec<Vec<f64>> = members.iter().map(|m| m.objectives().to_vec()).collect();
    let frame = NormalizationFrame::from_points(&f)?;
    let fbar: Vec<Vec<f64>> = f.iter().map(|v| frame.apply(v)).collect();
    let assoc = associate(&fbar, z, metric)?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (m, (index, _)) in members.iter().zip(assoc) {
        if let Some(t) = &target.slots[index] {
            inputs.push(m.x.clone());
            outputs.push(t.x.clone());
        }
    }
    if inputs.is_empty() {
        return Ok(None);
    }
    TrainingDataset::new(inputs, outputs).map(Some)
}

/// Maps a normalized decision vector to a normalized decision vector.
pub trait Predictor: Send + Sync {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Predictor for Forest {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Forest::predict(self, x)
    }
}

/// Smallest dynamic-bound span.
pub const MIN_BOUND_SPAN: f64 = 1e-12;

/// A trained predictor together with the dynamic bounds it was trained in.
#[derive(Clone)]
pub struct RepairModel {
    pub predictor: Arc<dyn Predictor>,
    pub xmin: DecisionVector,
    pub xmax: DecisionVector,
}

impl std::fmt::Debug for RepairModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepairModel")
            .field("xmin", &self.xmin)
            .field("xmax", &self.xmax)
            .finish_non_exhaustive()
    }
}

impl RepairModel {
    pub fn new(predictor: Arc<dyn Predictor>, xmin: DecisionVector, xmax: DecisionVector) -> Result<Self> {
        if xmin.len() != xmax.len() {
            return Err(Error::contract("xmin/xmax length mismatch"));
        }
        Ok(Self { predictor, xmin, xmax })
    }

    fn span(&self, k: usize) -> f64 {
        (self.xmax[k] - self.xmin[k]).max(MIN_BOUND_SPAN)
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(k, v)| (v - self.xmin[k]) / self.span(k)).collect()
    }

    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(k, v)| self.xmin[k] + v * self.span(k)).collect()
    }

    /// Prediction in problem units.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.xmin.len() {
            return Err(Error::contract("repair model input length mismatch"));
        }
        Ok(self.denormalize(&self.predictor.predict(&self.normalize(x))?))
    }
}

/// Dynamic bounds halfway between the data extrema and the problem bounds.
pub fn dynamic_bounds(data: &TrainingDataset, lower: &[f64], upper: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::Training("empty training dataset".into()));
    }
    let n = lower.len();
    if data.n_inputs() != n || data.n_outputs() != n || upper.len() != n {
        return Err(Error::contract("training data does not match the problem dimension"));
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for row in data.inputs.iter().chain(&data.outputs) {
        for (k, &v) in row.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let xmin = lo.iter().zip(lower).map(|(a, b)| 0.5 * (a + b)).collect();
    let xmax = hi.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok((xmin, xmax))
}

/// Normalizes the dataset to its dynamic bounds and fits a forest with
/// one tree per row and all variables considered at each split, unless
/// `params` overrides that.
pub fn train_repair_model(
    data: &TrainingDataset,
    lower: &[f64],
    upper: &[f64],
    params: Option<ForestParams>,
    rng: &RandomSource,
) -> Result<RepairModel> {
    let (xmin, xmax) = dynamic_bounds(data, lower, upper)?;
    let shell = RepairModel {
        predictor: Arc::new(Identity),
        xmin,
        xmax,
    };
    let scaled = TrainingDataset::new(
        data.inputs.iter().map(|x| shell.normalize(x)).collect(),
        data.outputs.iter().map(|x| shell.normalize(x)).collect(),
    )?;
    let params = params.unwrap_or_else(|| ForestParams::for_dataset(data.len(), lower.len()));
    let forest = Forest::fit(&scaled, params, rng)?;
    Ok(RepairModel {
        predictor: Arc::new(forest),
        ..shell
    })
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Predictor for Identity {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

/// `x + eta * (y - x)`; `eta = 1` returns `y` exactly.
pub fn enhance(x: &[f64], y: &[f64], eta: f64) -> Vec<f64> {
    if eta == 1.0 {
        return y.to_vec();
    }
    x.iter().zip(y).map(|(a, b)| a + eta * (b - a)).collect()
}

/// Maps an out-of-bounds value strictly inside `[low, high]`.
///
/// With `v = min(1, violation / (high - low))` and `u ~ U(0, 1)` the
/// result is `low + (high - low) * v * u^2` for a violation below `low`,
/// mirrored for `high`: the density grows towards the violated bound and
/// the reach grows with the size of the violation.
pub fn boundary_repair(value: f64, low: f64, high: f64, rng: &mut Stream) -> f64 {
    if value >= low && value <= high {
        return value;
    }
    let range = high - low;
    let u: f64 = rng.sample(Open01);
    if value < low {
        let v = ((low - value) / range).min(1.0);
        (low + range * v * u * u).clamp(low, high)
    } else {
        let v = ((value - high) / range).min(1.0);
        (high - range * v * u * u).clamp(low, high)
    }
}

/// Relative vicinity to the dynamic bounds below which a variable keeps
/// its pre-repair value.
pub const NEAR_BOUND_FRACTION: f64 = 0.01;

/// Repairs a single decision vector.
pub fn repair_one(
    x: &[f64],
    model: &RepairModel,
    eta: f64,
    lower: &[f64],
    upper: &[f64],
    rng: &mut Stream,
) -> Result<DecisionVector> {
    let predicted = model.predict(x)?;
    let mut r = enhance(x, &predicted, eta);
    for k in 0..x.len() {
        let vicinity = (x[k] - model.xmin[k]).abs().min((model.xmax[k] - x[k]).abs());
        if vicinity <= NEAR_BOUND_FRACTION * (upper[k] - lower[k]) {
            r[k] = x[k];
        }
    }
    for k in 0..x.len() {
        r[k] = boundary_repair(r[k], lower[k], upper[k], rng);
    }
    Ok(r)
}

/// Number of offspring picked for repair.
pub fn repair_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).floor() as usize
}

/// Picks `repair_count(|q|, fraction)` members uniformly without
/// replacement and repairs them in index order. Repaired members lose
/// their objective values. Returns the picked indices.
pub fn repair_offspring(
    q: &mut [Individual],
    model: &RepairModel,
    eta: f64,
    fraction: f64,
    lower: &[f64],
    upper: &[f64],
    rng: &mut Stream,
) -> Result<Vec<usize>> {
    let picked = pick_indices(q.len(), fraction, rng);
    for &i in &picked {
        q[i].x = repair_one(&q[i].x, model, eta, lower, upper, rng)?;
        q[i].f = None;
    }
    Ok(picked)
}

/// Sorted uniform sample of `repair_count(n, fraction)` indices.
pub fn pick_indices(n: usize, fraction: f64, rng: &mut Stream) -> Vec<usize> {
    let mut picked = sample(rng, n, repair_count(n, fraction)).into_vec();
    picked.sort_unstable();
    picked
}

/// `(1/|P_d|) * sqrt(sum d_i^2)` with `d_i` the distance from member `i`
/// of `p_d` to its nearest neighbour in `p_t`.
pub fn g_metric(p_d: &[Vec<f64>], p_t: &[Vec<f64>]) -> Result<f64> {
    if p_d.is_empty() {
        return Err(Error::contract("G metric of an empty population"));
    }
    mean_root_nearest(p_d, p_t)
}

/// G history and the thresholds that switch learning on and off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningGate {
    pub history: Vec<f64>,
    pub g_th: f64,
    pub t_freq: usize,
    pub eta: f64,
}

impl LearningGate {
    pub fn new(params: &Ir2Params) -> Self {
        Self {
            history: Vec::new(),
            g_th: params.g_th,
            t_freq: params.t_freq,
            eta: params.eta,
        }
    }

    pub fn max(&self) -> f64 {
        self.history.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Records `g_t` and reports whether learning and repair run at `t`.
pub fn repair_gate(gate: &mut LearningGate, g_t: f64, t: usize) -> bool {
    gate.history.push(g_t);
    let threshold = gate.g_th / 100.0 * gate.max();
    g_t > threshold && t % gate.t_freq == 0
}

/// Everything the operator carries from one generation to the next.
#[derive(Debug, Clone)]
pub struct Ir2State {
    pub params: Ir2Params,
    pub metric: ScalarizingMetric,
    pub target: TargetArchive,
    pub archive: SlidingArchive,
    pub gate: LearningGate,
    /// `(generation, population)` for the last `t_past + 1` parents.
    parents: VecDeque<(usize, Population)>,
    pub model: Option<RepairModel>,
    pub forest_params: Option<ForestParams>,
    rng: RandomSource,
    repair_stream: Stream,
    /// Training rows used at each learning event: `(t, rows)`.
    pub learning_events: Vec<(usize, usize)>,
}

impl Ir2State {
    pub fn new(params: Ir2Params, metric: ScalarizingMetric, n_refs: usize, rng: RandomSource) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            metric: params.association_metric.unwrap_or(metric),
            target: TargetArchive::empty(n_refs),
            archive: SlidingArchive::new(params.t_past),
            gate: LearningGate::new(&params),
            parents: VecDeque::new(),
            model: None,
            forest_params: None,
            repair_stream: rng.stream("repair"),
            rng,
            params,
            learning_events: Vec::new(),
        })
    }

    fn parent(&self, generation: usize) -> &Population {
        let (_, p) = self
            .parents
            .iter()
            .find(|(g, _)| *g == generation)
            .expect("parent population kept for t_past generations");
        p
    }

    /// Target update, G metric, gate and (when open) training. Returns
    /// the repair flag for generation `t`.
    pub fn begin_generation(
        &mut self,
        t: usize,
        p_t: &[Individual],
        z: &ReferenceSet,
        lower: &[f64],
        upper: &[f64],
    ) -> Result<bool> {
        self.parents.push_back((t, p_t.to_vec()));
        while self.parents.len() > self.params.t_past + 1 {
            self.parents.pop_front();
        }
        self.target = update_target(p_t, &self.target, z, self.metric)?;
        let d = t.saturating_sub(self.params.t_past);
        let g_t = g_metric(&objectives_of(self.parent(d)), &objectives_of(p_t))?;
        let mut flag = repair_gate(&mut self.gate, g_t, t);
        self.model = None;
        if flag {
            match archive_mapping(&self.archive, &self.target, z, self.metric)? {
                Some(data) => {
                    let model = train_repair_model(
                        &data,
                        lower,
                        upper,
                        self.forest_params,
                        &self.rng.derive("forest", t as u64),
                    )?;
                    self.learning_events.push((t, data.len()));
                    self.model = Some(model);
                }
                None => flag = false,
            }
        }
        Ok(flag)
    }

    /// Repairs a share of `q` with the current model.
    pub fn repair(&mut self, q: &mut [Individual], lower: &[f64], upper: &[f64]) -> Result<Vec<usize>> {
        let model = self.model.as_ref().ok_or_else(|| Error::contract("repair without a trained model"))?;
        repair_offspring(
            q,
            model,
            self.params.eta,
            self.params.repair_fraction,
            lower,
            upper,
            &mut self.repair_stream,
        )
    }

    /// Draws the subproblem indices eligible for repair this generation.
    pub fn pick_subproblems(&mut self, n: usize) -> Vec<usize> {
        pick_indices(n, self.params.repair_fraction, &mut self.repair_stream)
    }

    /// Repairs one decision vector with the current model.
    pub fn repair_single(&mut self, x: &[f64], lower: &[f64], upper: &[f64]) -> Result<DecisionVector> {
        let model = self.model.as_ref().ok_or_else(|| Error::contract("repair without a trained model"))?;
        repair_one(x, model, self.params.eta, lower, upper, &mut self.repair_stream)
    }

    /// Archive update once the offspring of generation `t` are evaluated.
    pub fn end_generation(&mut self, t: usize, q_t: &[Individual]) {
        let lag = (t + 1).saturating_sub(self.params.t_past);
        let parent = self.parent(lag).clone();
        update_archive(&mut self.archive, q_t, &parent);
    }
}
