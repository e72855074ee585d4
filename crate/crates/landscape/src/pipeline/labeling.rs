//! Best-algorithm labeling with undetermined-label elimination.
//!
//! Each instance is solved by all three algorithms `R` times at the full
//! budget; the label is the algorithm with the lowest mean best error. An
//! instance is undetermined (and removed from the dataset) when the minimum
//! is tied exactly or when at least two algorithms reach the optimum within
//! `epsilon` - both conditions mean the instance cannot distinguish the
//! algorithms.

use super::manifest::{DatasetManifest, LabelSemantics, Split};
use super::{generate_class_dataset, DatasetSpec, PipelineError};
use crate::optimizers::{run_algorithm, AlgorithmId, BudgetedProblem};
use crate::problems::{InstanceDescriptor, ProblemInstance};
use crate::seeding::derive_rng;
use rand::Rng;
use rayon::prelude::*;
use std::path::Path;

/// Labeling outcome for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub descriptor: InstanceDescriptor,
    /// Mean best error per algorithm, indexed by [`AlgorithmId::code`].
    pub means: [f64; 3],
    pub winner: Option<AlgorithmId>,
    pub undetermined: bool,
}

/// All labeling rows plus elimination counts per split (train, val, test).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelReport {
    pub rows: Vec<LabelRow>,
    pub eliminated_per_split: [usize; 3],
    pub epsilon: f64,
    pub runs: usize,
}

impl LabelReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("class_id,dim,inst_seed,mean_abc,mean_cmaes,mean_lshade,winner\n");
        for row in &self.rows {
            let winner = match row.winner {
                Some(a) => a.name().to_string(),
                None => "UNDETERMINED".to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.descriptor.class_id,
                row.descriptor.dim,
                row.descriptor.seed,
                super::report::sci(row.means[0]),
                super::report::sci(row.means[1]),
                super::report::sci(row.means[2]),
                winner
            ));
        }
        out.push_str(&format!(
            "# eliminated train={} val={} test={} (runs={} epsilon={:e})\n",
            self.eliminated_per_split[0],
            self.eliminated_per_split[1],
            self.eliminated_per_split[2],
            self.runs,
            self.epsilon
        ));
        out
    }
}

/// Winner slot for a mean-error triple, or `None` for undetermined.
pub fn decide_winner(means: &[f64; 3], epsilon: f64) -> Option<usize> {
    let solved = means.iter().filter(|&&m| m <= epsilon).count();
    if solved >= 2 {
        return None;
    }
    let mut best = 0;
    for i in 1..3 {
        if means[i] < means[best] {
            best = i;
        }
    }
    let tied = (0..3).any(|i| i != best && means[i] == means[best]);
    if tied {
        None
    } else {
        Some(best)
    }
}

/// Runs the three algorithms `seeds.len()` times each on `inst` at the full
/// budget and labels it with the mean-best-error winner.
pub fn label_by_best_algorithm(
    inst: &ProblemInstance,
    budget: usize,
    epsilon: f64,
    seeds: &[u64],
) -> Result<LabelRow, PipelineError> {
    if seeds.is_empty() {
        return Err(PipelineError::Config("labeling needs at least one run".into()));
    }
    let mut means = [0.0f64; 3];
    for alg in AlgorithmId::ALL {
        let mut total = 0.0;
        for &seed in seeds {
            let result = run_algorithm(alg, BudgetedProblem::new(inst, budget), seed)?;
            total += result.best_error;
        }
        means[alg.code() as usize] = total / seeds.len() as f64;
    }
    let winner = decide_winner(&means, epsilon);
    Ok(LabelRow {
        descriptor: inst.descriptor(),
        means,
        winner: winner.map(|i| AlgorithmId::from_code(i as u8).expect("slot in range")),
        undetermined: winner.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmDatasetSpec {
    pub dataset: DatasetSpec,
    /// Full optimization budget per run (the convention is 10000 * D).
    pub budget: usize,
    /// Independent labeling runs per algorithm per instance.
    pub runs: usize,
    /// Optimum-reached threshold for the undetermined rule.
    pub epsilon: f64,
}

impl AlgorithmDatasetSpec {
    /// The seed list for one instance's labeling runs; derived per
    /// (master seed, class, instance, repetition) so parallel labeling is
    /// schedule-independent.
    pub fn run_seeds(&self, desc: &InstanceDescriptor) -> Vec<u64> {
        (0..self.runs as u64)
            .map(|rep| {
                derive_rng(
                    "label-run-seed",
                    &[self.dataset.seed, desc.class_id as u64, desc.seed, rep],
                )
                .random()
            })
            .collect()
    }
}

/// Builds the algorithm-selection dataset: images as in the class dataset,
/// labels from best-algorithm runs, undetermined instances removed from all
/// splits. Fails if elimination empties any split.
pub fn generate_algorithm_dataset(
    spec: &AlgorithmDatasetSpec,
    out_dir: &Path,
) -> Result<(DatasetManifest, LabelReport), PipelineError> {
    if spec.runs == 0 {
        return Err(PipelineError::Config("labeling needs at least one run".into()));
    }
    let mut manifest = generate_class_dataset(&spec.dataset, out_dir)?;

    let rows: Vec<LabelRow> = manifest
        .entries
        .par_iter()
        .map(|entry| -> Result<LabelRow, PipelineError> {
            let inst = entry.descriptor.instantiate()?;
            let seeds = spec.run_seeds(&entry.descriptor);
            label_by_best_algorithm(&inst, spec.budget, spec.epsilon, &seeds)
        })
        .collect::<Result<_, _>>()?;

    let mut eliminated_per_split = [0usize; 3];
    let mut relabeled = Vec::new();
    for (entry, row) in manifest.entries.iter().zip(&rows) {
        match row.winner {
            Some(winner) => {
                let mut e = entry.clone();
                e.label = winner.code() as i64;
                relabeled.push(e);
            }
            None => eliminated_per_split[entry.split.index()] += 1,
        }
    }
    manifest.semantics = LabelSemantics::BestAlgorithm;
    manifest.entries = relabeled;
    for split in Split::ALL {
        if manifest.split_len(split) == 0 {
            return Err(PipelineError::EmptySplit {
                split,
                context: " after undetermined-label elimination".into(),
            });
        }
    }
    manifest.save(&out_dir.join("manifest.txt"))?;
    let report = LabelReport {
        rows,
        eliminated_per_split,
        epsilon: spec.epsilon,
        runs: spec.runs,
    };
    Ok((manifest, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_sub_epsilon_algorithm_wins() {
        assert_eq!(decide_winner(&[1e-10, 0.5, 0.3], 1e-8), Some(0));
    }

    #[test]
    fn two_sub_epsilon_algorithms_are_undetermined() {
        assert_eq!(decide_winner(&[1e-12, 1e-11, 0.3], 1e-8), None);
        assert_eq!(decide_winner(&[0.0, 0.0, 0.0], 1e-8), None);
    }

    #[test]
    fn unique_argmin_wins_even_above_epsilon() {
        assert_eq!(decide_winner(&[0.3, 0.5, 1.0], 1e-8), Some(0));
        assert_eq!(decide_winner(&[0.5, 0.3, 1.0], 1e-8), Some(1));
        assert_eq!(decide_winner(&[0.5, 0.4, 0.1], 1e-8), Some(2));
    }

    #[test]
    fn exact_mean_tie_is_undetermined() {
        assert_eq!(decide_winner(&[0.2, 0.2, 0.3], 1e-8), None);
    }

    #[test]
    fn labeling_is_deterministic_and_consistent() {
        // a tiny budget keeps this fast; determinism is the point
        let inst = crate::problems::make_instance(3, 2, 7).unwrap();
        let seeds = [1u64, 2];
        let a = label_by_best_algorithm(&inst, 600, 1e-8, &seeds).unwrap();
        let b = label_by_best_algorithm(&inst, 600, 1e-8, &seeds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.undetermined, a.winner.is_none());
        assert!(a.means.iter().all(|m| m.is_finite() && *m >= 0.0));
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        let inst = crate::problems::make_instance(1, 2, 1).unwrap();
        assert!(label_by_best_algorithm(&inst, 600, 1e-8, &[]).is_err());
    }

    #[test]
    fn all_undetermined_instances_empty_the_dataset() {
        // 2-D spheres at a full budget: at least two algorithms reach the
        // optimum on every instance, so everything is eliminated and the
        // empty-split guard fires
        let dir = tempfile::tempdir().unwrap();
        let spec = AlgorithmDatasetSpec {
            dataset: DatasetSpec {
                classes: vec![1],
                dim: 2,
                instances_per_class: 3,
                n_samples: 256,
                mode: crate::sampling::SampleMode::Grid,
                seed: 3,
            },
            budget: 20_000,
            runs: 1,
            epsilon: 1e-8,
        };
        match generate_algorithm_dataset(&spec, dir.path()) {
            Err(PipelineError::EmptySplit { .. }) => {}
            other => panic!("expected empty-split error, got {other:?}"),
        }
    }
}
