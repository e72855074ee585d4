//! The algorithm set: artificial bee colony, CMA-ES and L-SHADE, all run
//! against a [`BudgetedProblem`] that enforces the evaluation budget and
//! records the best-so-far trajectory.
//!
//! Every run is single-threaded and fully determined by its seed; callers
//! parallelize across runs. Evaluation attempts beyond the budget are
//! refused, so `used_evals <= max_evals` holds unconditionally and the
//! budget is consumed to within one generation.

mod abc;
mod cmaes;
mod lshade;

pub use abc::run_abc;
pub use cmaes::run_cmaes;
pub use lshade::run_lshade;

use crate::problems::ProblemInstance;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("budget {budget} too small for {algorithm} (needs at least {needed})")]
    BudgetTooSmall { algorithm: AlgorithmId, budget: usize, needed: usize },
    #[error("unknown algorithm code {0}")]
    UnknownAlgorithm(u8),
}

/// Closed algorithm set with stable integer codes used as labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    Abc,
    Cmaes,
    Lshade,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 3] = [AlgorithmId::Abc, AlgorithmId::Cmaes, AlgorithmId::Lshade];

    pub fn code(self) -> u8 {
        match self {
            AlgorithmId::Abc => 0,
            AlgorithmId::Cmaes => 1,
            AlgorithmId::Lshade => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, OptimizerError> {
        match code {
            0 => Ok(AlgorithmId::Abc),
            1 => Ok(AlgorithmId::Cmaes),
            2 => Ok(AlgorithmId::Lshade),
            other => Err(OptimizerError::UnknownAlgorithm(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Abc => "ABC",
            AlgorithmId::Cmaes => "CMAES",
            AlgorithmId::Lshade => "LSHADE",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ABC" => Ok(AlgorithmId::Abc),
            "CMAES" => Ok(AlgorithmId::Cmaes),
            "LSHADE" => Ok(AlgorithmId::Lshade),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// Best-error trajectory checkpoints are recorded every this many
/// evaluations, plus the final point.
pub const TRAJECTORY_STRIDE: usize = 100;

/// An instance wrapped with budget accounting and elitist bookkeeping.
pub struct BudgetedProblem<'a> {
    inst: &'a ProblemInstance,
    max_evals: usize,
    used: usize,
    best_error: f64,
    trajectory: Vec<(usize, f64)>,
    scratch: Vec<f64>,
}

impl<'a> BudgetedProblem<'a> {
    pub fn new(inst: &'a ProblemInstance, max_evals: usize) -> Self {
        BudgetedProblem {
            inst,
            max_evals,
            used: 0,
            best_error: f64::INFINITY,
            trajectory: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.inst
    }

    pub fn dim(&self) -> usize {
        self.inst.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.inst.bounds
    }

    pub fn max_evals(&self) -> usize {
        self.max_evals
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.max_evals - self.used
    }

    pub fn best_error(&self) -> f64 {
        self.best_error
    }

    /// Evaluates `x` if budget remains, returning the raw objective value.
    /// `None` means the budget is exhausted and the run must stop.
    pub fn try_evaluate(&mut self, x: &[f64]) -> Option<f64> {
        if self.used >= self.max_evals {
            return None;
        }
        debug_assert_eq!(x.len(), self.inst.dim);
        // optimizers must repair candidates before spending budget on them
        debug_assert!(
            x.iter().zip(&self.inst.bounds).all(|(v, (lo, hi))| v >= lo && v <= hi),
            "evaluated candidate outside instance bounds"
        );
        let value = self.inst.evaluate_into(x, &mut self.scratch);
        self.used += 1;
        let error = self.inst.fitness_of(value).error;
        if error < self.best_error {
            self.best_error = error;
        }
        if self.used.is_multiple_of(TRAJECTORY_STRIDE) {
            self.trajectory.push((self.used, self.best_error));
        }
        Some(value)
    }

    /// Seals the run into a [`RunResult`].
    pub fn finish(mut self, algorithm: AlgorithmId, seed: u64) -> RunResult {
        if self.trajectory.last().map(|&(e, _)| e) != Some(self.used) {
            self.trajectory.push((self.used, self.best_error));
        }
        RunResult {
            algorithm,
            seed,
            best_error: self.best_error,
            evals_used: self.used,
            trajectory: self.trajectory,
        }
    }
}

/// Outcome of a single optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: AlgorithmId,
    pub seed: u64,
    pub best_error: f64,
    pub evals_used: usize,
    /// (evaluation index, best error so far), non-increasing in error.
    pub trajectory: Vec<(usize, f64)>,
}

/// Dispatches to the chosen algorithm; all three share the result type.
pub fn run_algorithm(
    id: AlgorithmId,
    bp: BudgetedProblem<'_>,
    seed: u64,
) -> Result<RunResult, OptimizerError> {
    match id {
        AlgorithmId::Abc => run_abc(bp, seed),
        AlgorithmId::Cmaes => run_cmaes(bp, seed),
        AlgorithmId::Lshade => run_lshade(bp, seed),
    }
}

/// Uniform re-draw of coordinates that left the box; the ABC repair rule.
pub(crate) fn resample_coordinate(
    value: f64,
    lo: f64,
    hi: f64,
    rng: &mut impl rand::Rng,
) -> f64 {
    if value < lo || value > hi {
        rng.random_range(lo..=hi)
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_instance;

    #[test]
    fn codes_are_stable() {
        assert_eq!(AlgorithmId::Abc.code(), 0);
        assert_eq!(AlgorithmId::Cmaes.code(), 1);
        assert_eq!(AlgorithmId::Lshade.code(), 2);
        for id in AlgorithmId::ALL {
            assert_eq!(AlgorithmId::from_code(id.code()).unwrap(), id);
            assert_eq!(id.name().parse::<AlgorithmId>().unwrap(), id);
        }
        assert!(AlgorithmId::from_code(3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let inst = make_instance(1, 2, 1).unwrap();
        let mut bp = BudgetedProblem::new(&inst, 3);
        assert!(bp.try_evaluate(&[0.0, 0.0]).is_some());
        assert!(bp.try_evaluate(&[1.0, 0.0]).is_some());
        assert!(bp.try_evaluate(&[0.0, 1.0]).is_some());
        assert!(bp.try_evaluate(&[1.0, 1.0]).is_none());
        assert_eq!(bp.used(), 3);
        let result = bp.finish(AlgorithmId::Abc, 0);
        assert_eq!(result.evals_used, 3);
        assert_eq!(result.trajectory.last().unwrap().0, 3);
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let inst = make_instance(6, 3, 4).unwrap();
        let via_dispatch = run_algorithm(AlgorithmId::Cmaes, BudgetedProblem::new(&inst, 900), 3);
        let direct = super::run_cmaes(BudgetedProblem::new(&inst, 900), 3);
        assert_eq!(via_dispatch.unwrap(), direct.unwrap());

        // all three algorithms run under one budget with uniform accounting
        for id in AlgorithmId::ALL {
            let r = run_algorithm(id, BudgetedProblem::new(&inst, 900), 3).unwrap();
            assert_eq!(r.algorithm, id);
            assert!(r.evals_used <= 900);
            assert!(r.best_error >= 0.0);
        }
    }

    #[test]
    fn best_error_is_monotone_and_final() {
        let inst = make_instance(1, 2, 2).unwrap();
        let mut bp = BudgetedProblem::new(&inst, 500);
        let mut rng = crate::seeding::derive_rng("bp-test", &[0]);
        use rand::Rng;
        let mut best = f64::INFINITY;
        for _ in 0..500 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let v = bp.try_evaluate(&x).unwrap();
            best = best.min(inst.fitness_of(v).error);
        }
        let result = bp.finish(AlgorithmId::Cmaes, 0);
        assert_eq!(result.best_error, best);
        for pair in result.trajectory.windows(2) {
            assert!(pair[0].0 < pair[1].0);
            assert!(pair[0].1 >= pair[1].1);
        }
        // stride plus final point
        assert_eq!(result.trajectory.len(), 5);
    }
}
