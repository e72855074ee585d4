//! Canonical artificial bee colony: employed, onlooker and scout phases over
//! 125 food sources, abandonment limit `SN * D`, uniform resampling of
//! out-of-bounds coordinates.

use super::{resample_coordinate, AlgorithmId, BudgetedProblem, OptimizerError, RunResult};
use crate::seeding::derive_rng;
use rand::Rng;

const FOOD_SOURCES: usize = 125;

struct Source {
    x: Vec<f64>,
    value: f64,
    trials: usize,
}

/// Karaboga-style fitness transform used for the onlooker roulette.
fn roulette_fitness(value: f64) -> f64 {
    if value >= 0.0 {
        1.0 / (1.0 + value)
    } else {
        1.0 + value.abs()
    }
}

pub fn run_abc(mut bp: BudgetedProblem<'_>, seed: u64) -> Result<RunResult, OptimizerError> {
    if bp.max_evals() == 0 {
        return Err(OptimizerError::BudgetTooSmall {
            algorithm: AlgorithmId::Abc,
            budget: 0,
            needed: 1,
        });
    }
    let dim = bp.dim();
    let limit = FOOD_SOURCES * dim;
    let mut rng = derive_rng("abc", &[seed]);
    let bounds = bp.bounds().to_vec();

    let mut sources: Vec<Source> = Vec::with_capacity(FOOD_SOURCES);
    for _ in 0..FOOD_SOURCES {
        let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
        match bp.try_evaluate(&x) {
            Some(value) => sources.push(Source { x, value, trials: 0 }),
            None => return Ok(bp.finish(AlgorithmId::Abc, seed)),
        }
    }

    loop {
        // employed phase: one neighborhood move per source
        for i in 0..sources.len() {
            if !neighborhood_move(&mut bp, &mut sources, i, &bounds, &mut rng) {
                return Ok(bp.finish(AlgorithmId::Abc, seed));
            }
        }

        // onlooker phase: roulette-weighted exploitation
        let weights: Vec<f64> = sources.iter().map(|s| roulette_fitness(s.value)).collect();
        let total: f64 = weights.iter().sum();
        for _ in 0..sources.len() {
            let mut pick = rng.random::<f64>() * total;
            let mut chosen = sources.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                pick -= w;
                if pick <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            if !neighborhood_move(&mut bp, &mut sources, chosen, &bounds, &mut rng) {
                return Ok(bp.finish(AlgorithmId::Abc, seed));
            }
        }

        // scout phase: abandon the most exhausted source
        let worst = (0..sources.len()).max_by_key(|&i| sources[i].trials).unwrap();
        if sources[worst].trials > limit {
            let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
            match bp.try_evaluate(&x) {
                Some(value) => sources[worst] = Source { x, value, trials: 0 },
                None => return Ok(bp.finish(AlgorithmId::Abc, seed)),
            }
        }
    }
}

/// One candidate move on source `i`; false when the budget refused it.
fn neighborhood_move(
    bp: &mut BudgetedProblem<'_>,
    sources: &mut [Source],
    i: usize,
    bounds: &[(f64, f64)],
    rng: &mut impl Rng,
) -> bool {
    let dim = bounds.len();
    let coord = rng.random_range(0..dim);
    let mut partner = rng.random_range(0..sources.len());
    while partner == i && sources.len() > 1 {
        partner = rng.random_range(0..sources.len());
    }
    let phi: f64 = rng.random_range(-1.0..=1.0);
    let mut candidate = sources[i].x.clone();
    let moved = candidate[coord] + phi * (candidate[coord] - sources[partner].x[coord]);
    let (lo, hi) = bounds[coord];
    candidate[coord] = resample_coordinate(moved, lo, hi, rng);
    match bp.try_evaluate(&candidate) {
        Some(value) => {
            if value < sources[i].value {
                sources[i] = Source { x: candidate, value, trials: 0 };
            } else {
                sources[i].trials += 1;
            }
            true
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_instance;

    #[test]
    fn rejects_zero_budget() {
        let inst = make_instance(1, 2, 1).unwrap();
        let bp = BudgetedProblem::new(&inst, 0);
        assert!(matches!(run_abc(bp, 1), Err(OptimizerError::BudgetTooSmall { .. })));
    }

    #[test]
    fn is_deterministic() {
        let inst = make_instance(3, 2, 5).unwrap();
        let a = run_abc(BudgetedProblem::new(&inst, 3000), 7).unwrap();
        let b = run_abc(BudgetedProblem::new(&inst, 3000), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn respects_budget_to_within_one_generation() {
        let inst = make_instance(1, 2, 3).unwrap();
        for budget in [50usize, 125, 300, 2000] {
            let r = run_abc(BudgetedProblem::new(&inst, budget), 1).unwrap();
            assert!(r.evals_used <= budget);
            // one ABC cycle costs at most 2*SN + 1 evaluations
            assert!(r.evals_used + 2 * FOOD_SOURCES + 1 > budget);
        }
    }

    #[test]
    fn trajectory_is_monotone() {
        let inst = make_instance(5, 2, 9).unwrap();
        let r = run_abc(BudgetedProblem::new(&inst, 5000), 2).unwrap();
        for pair in r.trajectory.windows(2) {
            assert!(pair[1].1 <= pair[0].1);
        }
        assert!(r.best_error >= 0.0);
    }

    #[test]
    fn solves_sphere_2d() {
        // Pass-rate oracle: 51 seeded runs at 20000 evaluations.
        let mut passes = 0;
        for seed in 0..51 {
            let inst = make_instance(1, 2, 1000 + seed).unwrap();
            let r = run_abc(BudgetedProblem::new(&inst, 20_000), seed).unwrap();
            if r.best_error < 1e-3 {
                passes += 1;
            }
        }
        assert!(passes >= 45, "only {passes}/51 runs reached 1e-3");
    }
}
