//! Shared value types: individuals, populations, problems and dominance.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision vector in problem units.
pub type DecisionVector = Vec<f64>;
/// Objective vector (minimization).
pub type ObjectiveVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: DecisionVector,
    pub f: Option<ObjectiveVector>,
    pub birth_generation: usize,
}

impl Individual {
    pub fn new(x: DecisionVector, birth_generation: usize) -> Self {
        Self {
            x,
            f: None,
            birth_generation,
        }
    }

    pub fn evaluated(x: DecisionVector, f: ObjectiveVector, birth_generation: usize) -> Self {
        Self {
            x,
            f: Some(f),
            birth_generation,
        }
    }

    /// Objective vector. Panics if the individual has not been evaluated.
    pub fn objectives(&self) -> &[f64] {
        self.f.as_deref().expect("individual has not been evaluated")
    }
}

pub type Population = Vec<Individual>;

/// Objective vectors of an evaluated population.
pub fn objectives_of(pop: &[Individual]) -> Vec<ObjectiveVector> {
    pop.iter().map(|ind| ind.objectives().to_vec()).collect()
}

type Evaluator = Arc<dyn Fn(&[f64]) -> ObjectiveVector + Send + Sync>;

/// A box-bounded minimization problem with a pure objective function.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub name: String,
    pub n_var: usize,
    pub n_obj: usize,
    pub lower: DecisionVector,
    pub upper: DecisionVector,
    evaluator: Evaluator,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("n_var", &self.n_var)
            .field("n_obj", &self.n_obj)
            .finish()
    }
}

impl ProblemDefinition {
    pub fn new(
        name: impl Into<String>,
        n_obj: usize,
        lower: DecisionVector,
        upper: DecisionVector,
        evaluator: impl Fn(&[f64]) -> ObjectiveVector + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config(format!("{name}: bound vectors must be non-empty and equally long")));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::config(format!("{name}: every lower bound must be below its upper bound")));
        }
        Ok(Self {
            name,
            n_var: lower.len(),
            n_obj,
            lower,
            upper,
            evaluator: Arc::new(evaluator),
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> ObjectiveVector {
        debug_assert_eq!(x.len(), self.n_var);
        (self.evaluator)(x)
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n_var && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }
}

/// Pareto dominance for minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "dominance between vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_unchecked(a, b))
}

/// Dominance without the length check, for inner loops that already
/// guarantee equal lengths.
#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Run-scoped count of objective-function evaluations.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationCounter(u64);

impl EvaluationCounter {
    pub fn get(&self) -> u64 {
        self.0
    }
}

/// Evaluates every member in place and adds `|pop|` to the counter.
/// Members are evaluated in parallel; results land in input order.
pub fn evaluate_all(problem: &ProblemDefinition, pop: &mut [Individual], counter: &mut EvaluationCounter) -> Result<()> {
    use rayon::prelude::*;

    let results: Vec<ObjectiveVector> = pop.par_iter().map(|ind| problem.evaluate(&ind.x)).collect();
    for (index, f) in results.iter().enumerate() {
        if f.len() != problem.n_obj || f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                index,
                values: f.clone(),
            });
        }
    }
    for (ind, f) in pop.iter_mut().zip(results) {
        ind.f = Some(f);
    }
    counter.0 += pop.len() as u64;
    Ok(())
}
