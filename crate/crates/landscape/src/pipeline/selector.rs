//! The budget-split portfolio: spend the sampling share of the budget on a
//! landscape image, let the trained network pick an algorithm, and run it
//! with the remainder. Sampling evaluations are charged against the budget
//! but not reused by the optimizer.

use super::manifest::{DatasetManifest, Split};
use super::report::MethodObservation;
use super::PipelineError;
use crate::convnet::Network;
use crate::optimizers::{run_algorithm, AlgorithmId, BudgetedProblem, RunResult};
use crate::problems::ProblemInstance;
use crate::sampling::{fitness_vector, normalize, to_image, LandscapeImage, SampleMatrix};
use crate::seeding::derive_rng;
use rand::Rng;
use rayon::prelude::*;

/// Combined accounting of one selector run.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioResult {
    pub chosen: AlgorithmId,
    pub sampling_evals: usize,
    pub solving_evals: usize,
    pub final_error: f64,
    /// The landscape image the choice was made from.
    pub image: LandscapeImage,
    pub run: RunResult,
}

impl PortfolioResult {
    pub fn total_evals(&self) -> usize {
        self.sampling_evals + self.solving_evals
    }
}

/// Runs `chosen` with the budget that remains after `sampling_evals`.
pub fn portfolio_solve(
    inst: &ProblemInstance,
    total_budget: usize,
    sampling_evals: usize,
    chosen: AlgorithmId,
    image: LandscapeImage,
    seed: u64,
) -> Result<PortfolioResult, PipelineError> {
    if sampling_evals >= total_budget {
        return Err(PipelineError::SamplingBudget { n: sampling_evals, total: total_budget });
    }
    let run = run_algorithm(chosen, BudgetedProblem::new(inst, total_budget - sampling_evals), seed)?;
    Ok(PortfolioResult {
        chosen,
        sampling_evals,
        solving_evals: run.evals_used,
        final_error: run.best_error,
        image,
        run,
    })
}

/// Images the instance over `sm` (charged as the sampling share), asks the
/// network for an algorithm, and solves with the remaining budget.
pub fn select_and_solve(
    inst: &ProblemInstance,
    total_budget: usize,
    net: &Network,
    sm: &SampleMatrix,
    seed: u64,
) -> Result<PortfolioResult, PipelineError> {
    if sm.n >= total_budget {
        return Err(PipelineError::SamplingBudget { n: sm.n, total: total_budget });
    }
    let fv = fitness_vector(inst, sm)?;
    let image = to_image(&normalize(&fv)?)?;
    let predicted = net.predict(&image)?;
    let chosen = AlgorithmId::from_code(predicted as u8)
        .map_err(|_| PipelineError::Config(format!("network predicted class {predicted}, expected an algorithm code")))?;
    portfolio_solve(inst, total_budget, sm.n, chosen, image, seed)
}

/// Experiment-3-style comparison parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSpec {
    /// Full budget granted to each method per run.
    pub budget: usize,
    /// Independent runs per method per instance.
    pub reps: usize,
    pub seed: u64,
}

/// One run row of the comparison CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Index into [`super::report::METHOD_NAMES`].
    pub method: usize,
    pub class_id: u32,
    pub inst_seed: u64,
    pub run_seed: u64,
    pub best_error: f64,
    pub evals: usize,
}

pub fn run_records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("method,class_id,inst_seed,run_seed,best_error,evals\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            super::report::METHOD_NAMES[r.method],
            r.class_id,
            r.inst_seed,
            r.run_seed,
            super::report::sci(r.best_error),
            r.evals
        ));
    }
    out
}

/// Runs the portfolio selector and all three single algorithms on every
/// test-split instance of `manifest`, `reps` times each. Single algorithms
/// get the full budget; the selector pays for its sampling phase out of the
/// same budget. Returns per-run records and per-class observations ready
/// for [`super::rank_table`].
pub fn bench_methods(
    manifest: &DatasetManifest,
    net: &Network,
    spec: &BenchSpec,
) -> Result<(Vec<RunRecord>, Vec<MethodObservation>), PipelineError> {
    let entries: Vec<_> = manifest.entries_in(Split::Test).collect();
    if entries.is_empty() {
        return Err(PipelineError::EmptySplit { split: Split::Test, context: String::new() });
    }
    let sm = manifest.plan.build()?;

    let mut tasks = Vec::new();
    for entry in &entries {
        for rep in 0..spec.reps as u64 {
            tasks.push((entry.descriptor, rep));
        }
    }

    let per_task: Vec<Vec<RunRecord>> = tasks
        .par_iter()
        .map(|&(desc, rep)| -> Result<Vec<RunRecord>, PipelineError> {
            let inst = desc.instantiate()?;
            let mut records = Vec::with_capacity(4);
            let run_seed = |method: usize| -> u64 {
                derive_rng(
                    "bench-run",
                    &[spec.seed, desc.class_id as u64, desc.seed, method as u64, rep],
                )
                .random()
            };
            let seed0 = run_seed(0);
            let pf = select_and_solve(&inst, spec.budget, net, &sm, seed0)?;
            debug_assert!(pf.total_evals() <= spec.budget);
            records.push(RunRecord {
                method: 0,
                class_id: desc.class_id,
                inst_seed: desc.seed,
                run_seed: seed0,
                best_error: pf.final_error,
                evals: pf.total_evals(),
            });
            for alg in AlgorithmId::ALL {
                let method = alg.code() as usize + 1;
                let seed = run_seed(method);
                let run = run_algorithm(alg, BudgetedProblem::new(&inst, spec.budget), seed)?;
                records.push(RunRecord {
                    method,
                    class_id: desc.class_id,
                    inst_seed: desc.seed,
                    run_seed: seed,
                    best_error: run.best_error,
                    evals: run.evals_used,
                });
            }
            Ok(records)
        })
        .collect::<Result<_, _>>()?;

    let records: Vec<RunRecord> = per_task.into_iter().flatten().collect();
    let observations = records
        .iter()
        .map(|r| MethodObservation { class_id: r.class_id, method: r.method, error: r.best_error })
        .collect();
    Ok((records, observations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::run_cmaes;
    use crate::problems::make_instance;
    use crate::sampling::{make_sample_matrix, SampleMode};

    #[test]
    fn budget_accounting_is_exact() {
        let inst = make_instance(1, 2, 3).unwrap();
        let img = LandscapeImage { side: 2, pixels: vec![0.0; 4] };
        let pf = portfolio_solve(&inst, 2000, 200, AlgorithmId::Abc, img, 5).unwrap();
        assert_eq!(pf.sampling_evals, 200);
        assert!(pf.solving_evals <= 1800);
        assert!(pf.total_evals() <= 2000);
    }

    #[test]
    fn sampling_must_leave_solving_budget() {
        let inst = make_instance(1, 2, 3).unwrap();
        let img = LandscapeImage { side: 2, pixels: vec![0.0; 4] };
        assert!(matches!(
            portfolio_solve(&inst, 100, 100, AlgorithmId::Abc, img, 5),
            Err(PipelineError::SamplingBudget { n: 100, total: 100 })
        ));
    }

    #[test]
    fn hardwired_choice_equals_direct_run() {
        // dispatch transparency: the selector adds nothing to the solver
        let inst = make_instance(5, 2, 9).unwrap();
        let img = LandscapeImage { side: 2, pixels: vec![0.0; 4] };
        let pf = portfolio_solve(&inst, 1000, 100, AlgorithmId::Cmaes, img, 17).unwrap();
        let direct = run_cmaes(BudgetedProblem::new(&inst, 900), 17).unwrap();
        assert_eq!(pf.run, direct);
        assert_eq!(pf.final_error, direct.best_error);
    }

    #[test]
    fn select_and_solve_spends_ten_percent_on_sampling() {
        use crate::convnet::{build_network, ArchitectureConfig, Variant};
        let inst = make_instance(1, 2, 4).unwrap();
        let sm = make_sample_matrix(256, 2, &[(-5.0, 5.0); 2], SampleMode::Grid, 0).unwrap();
        let cfg = ArchitectureConfig::new(Variant::B, 16, 3, 1.0 / 16.0);
        let net = build_network(&cfg, 1).unwrap();
        let pf = select_and_solve(&inst, 2560, &net, &sm, 3).unwrap();
        assert_eq!(pf.sampling_evals, 256);
        assert!(pf.solving_evals <= 2304);
        assert!(pf.image.side == 16);

        // sampling as large as the budget is refused
        assert!(matches!(
            select_and_solve(&inst, 256, &net, &sm, 3),
            Err(PipelineError::SamplingBudget { .. })
        ));
    }
}
