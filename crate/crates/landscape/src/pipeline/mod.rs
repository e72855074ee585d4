//! Dataset construction, best-algorithm labeling with tie elimination, the
//! 10%/90% budget-split selector, and accuracy/rank reporting.
//!
//! Everything here is deterministic under the master seed: per-task RNG
//! streams are derived from (seed, class, instance, repetition), so results
//! do not depend on worker count or scheduling.

mod labeling;
mod manifest;
mod report;
mod selector;

pub use labeling::{
    generate_algorithm_dataset, label_by_best_algorithm, AlgorithmDatasetSpec, LabelReport,
    LabelRow,
};
pub use manifest::{DatasetManifest, LabelSemantics, ManifestEntry, SamplePlan, Split};
pub use report::{
    pct, rank_table, sci, write_atomic, AccuracyTable, MethodObservation, RankTable, METHOD_NAMES,
};
pub use selector::{
    bench_methods, portfolio_solve, run_records_csv, select_and_solve, BenchSpec, PortfolioResult,
    RunRecord,
};

use crate::convnet::{NetError, Network, Sample, Tensor};
use crate::optimizers::OptimizerError;
use crate::problems::{make_instance, InstanceDescriptor, ProblemError, DEFAULT_HI, DEFAULT_LO};
use crate::sampling::{
    fitness_vector, normalize, read_image, to_image, write_image, SampleMode, SamplingError,
};
use crate::seeding::derive_rng;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("{split} split is empty{context}")]
    EmptySplit { split: Split, context: String },
    #[error("class f{class_id} has no results for method {method}")]
    MissingMethod { class_id: u32, method: &'static str },
    #[error("sampling count {n} must be below the total budget {total}")]
    SamplingBudget { n: usize, total: usize },
    #[error("manifest {path}: {reason}")]
    Manifest { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

/// Parameters of a problem-class dataset (the first experiment's shape).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub classes: Vec<u32>,
    pub dim: usize,
    pub instances_per_class: usize,
    pub n_samples: usize,
    pub mode: SampleMode,
    pub seed: u64,
}

impl DatasetSpec {
    /// Grid coordinates when the reshaped vector is a true 2-D raster;
    /// seeded uniform draws otherwise.
    pub fn default_mode(dim: usize) -> SampleMode {
        if dim == 2 {
            SampleMode::Grid
        } else {
            SampleMode::UniformRandom
        }
    }

    pub fn plan(&self) -> SamplePlan {
        SamplePlan {
            n: self.n_samples,
            dim: self.dim,
            mode: self.mode,
            seed: self.seed,
            lo: DEFAULT_LO,
            hi: DEFAULT_HI,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.classes.is_empty() {
            return Err(PipelineError::Config("no classes selected".into()));
        }
        if self.instances_per_class == 0 {
            return Err(PipelineError::Config("instances_per_class must be positive".into()));
        }
        Ok(())
    }
}

/// Instance seeds run 1..=instances_per_class within every class.
pub fn instance_seeds(instances_per_class: usize) -> impl Iterator<Item = u64> {
    1..=instances_per_class as u64
}

fn image_file_name(desc: &InstanceDescriptor) -> String {
    format!("images/c{:02}_s{:05}.lsim", desc.class_id, desc.seed)
}

/// 70/10/20 split sizes, rounded per class; never off by more than one.
fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = ((n as f64) * 0.7).round() as usize;
    let val = ((n as f64) * 0.1).round() as usize;
    let train = train.min(n);
    let val = val.min(n - train);
    (train, val, n - train - val)
}

/// Assigns splits per class with a seeded shuffle; stratification keeps the
/// 70/10/20 fractions within one instance per class.
fn assign_splits(spec: &DatasetSpec, class_id: u32) -> Vec<Split> {
    let n = spec.instances_per_class;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng("dataset-split", &[spec.seed, class_id as u64]);
    order.shuffle(&mut rng);
    let (n_train, n_val, _) = split_sizes(n);
    let mut splits = vec![Split::Test; n];
    for (pos, &idx) in order.iter().enumerate() {
        splits[idx] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    splits
}

/// Builds one landscape image per instance over a shared sample matrix and
/// writes images plus the manifest under `out_dir`. Labels are the class ids.
pub fn generate_class_dataset(
    spec: &DatasetSpec,
    out_dir: &Path,
) -> Result<DatasetManifest, PipelineError> {
    spec.validate()?;
    for &c in &spec.classes {
        crate::problems::class_by_id(c)?;
    }
    let sm = spec.plan().build()?;
    let sample_hash = sm.content_hash();

    let descriptors: Vec<InstanceDescriptor> = spec
        .classes
        .iter()
        .flat_map(|&class_id| {
            instance_seeds(spec.instances_per_class)
                .map(move |seed| InstanceDescriptor { class_id, dim: spec.dim, seed })
        })
        .collect();

    let images: Vec<_> = descriptors
        .par_iter()
        .map(|desc| -> Result<_, PipelineError> {
            let inst = make_instance(desc.class_id, desc.dim, desc.seed)?;
            let fv = fitness_vector(&inst, &sm)?;
            let img = to_image(&normalize(&fv)?)?;
            Ok(img)
        })
        .collect::<Result<_, _>>()?;

    std::fs::create_dir_all(out_dir.join("images"))
        .map_err(|source| PipelineError::Io { path: out_dir.display().to_string(), source })?;

    let mut entries = Vec::with_capacity(descriptors.len());
    let mut idx = 0;
    for &class_id in &spec.classes {
        let splits = assign_splits(spec, class_id);
        for (i, _seed) in instance_seeds(spec.instances_per_class).enumerate() {
            let desc = descriptors[idx];
            let rel = image_file_name(&desc);
            write_image(&images[idx], &out_dir.join(&rel))?;
            entries.push(ManifestEntry {
                descriptor: desc,
                image_path: rel,
                label: desc.class_id as i64,
                split: splits[i],
            });
            idx += 1;
        }
    }

    let manifest = DatasetManifest {
        semantics: LabelSemantics::ProblemClass,
        plan: spec.plan(),
        sample_hash,
        entries,
    };
    manifest.save(&out_dir.join("manifest.txt"))?;
    Ok(manifest)
}

/// Loads one split of a manifest into network-ready samples; entry order is
/// preserved and labels are mapped to contiguous class indices.
pub fn load_split(
    manifest: &DatasetManifest,
    split: Split,
    base_dir: &Path,
) -> Result<Vec<Sample>, PipelineError> {
    let entries: Vec<&ManifestEntry> = manifest.entries_in(split).collect();
    if entries.is_empty() {
        return Err(PipelineError::EmptySplit { split, context: String::new() });
    }
    entries
        .par_iter()
        .map(|e| -> Result<Sample, PipelineError> {
            let img = read_image(&base_dir.join(&e.image_path))?;
            let label_idx = manifest.label_index(e.label).ok_or_else(|| {
                PipelineError::Manifest {
                    path: e.image_path.clone(),
                    reason: format!("label {} not in manifest label set", e.label),
                }
            })?;
            Ok((Tensor::from_image(&img), label_idx))
        })
        .collect()
}

fn label_row_name(semantics: LabelSemantics, label: i64) -> String {
    match semantics {
        LabelSemantics::ProblemClass => format!("f{label}"),
        LabelSemantics::BestAlgorithm => crate::optimizers::AlgorithmId::from_code(label as u8)
            .map(|a| a.name().to_string())
            .unwrap_or_else(|_| format!("label{label}")),
    }
}

/// Per-class and overall accuracy of `net` on one manifest split.
pub fn evaluate_accuracy(
    net: &Network,
    manifest: &DatasetManifest,
    split: Split,
    base_dir: &Path,
) -> Result<AccuracyTable, PipelineError> {
    let entries: Vec<&ManifestEntry> = manifest.entries_in(split).collect();
    if entries.is_empty() {
        return Err(PipelineError::EmptySplit { split, context: String::new() });
    }
    let predictions: Vec<(i64, bool)> = entries
        .par_iter()
        .map(|e| -> Result<(i64, bool), PipelineError> {
            let img = read_image(&base_dir.join(&e.image_path))?;
            let predicted = net.predict(&img)?;
            let truth = manifest.label_index(e.label).ok_or_else(|| PipelineError::Manifest {
                path: e.image_path.clone(),
                reason: format!("label {} not in manifest label set", e.label),
            })?;
            Ok((e.label, predicted == truth))
        })
        .collect::<Result<_, _>>()?;

    let mut by_label: std::collections::BTreeMap<i64, (usize, usize)> =
        std::collections::BTreeMap::new();
    let mut correct = 0;
    for (label, hit) in &predictions {
        let cell = by_label.entry(*label).or_insert((0, 0));
        cell.1 += 1;
        if *hit {
            cell.0 += 1;
            correct += 1;
        }
    }
    Ok(AccuracyTable {
        rows: by_label
            .into_iter()
            .map(|(label, (c, t))| (label_row_name(manifest.semantics, label), c, t))
            .collect(),
        correct,
        total: predictions.len(),
    })
}

/// Resolves the manifest's base directory (images are stored relative to it).
pub fn manifest_base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}
