//! Line-oriented dataset manifest.
//!
//! ```text
//! LSMF 1
//! semantics problem-class
//! samples <n> <dim> <grid|random> <seed>
//! bounds <lo> <hi>
//! hash <sha256 of the sample matrix>
//! entry <class_id> <dim> <inst_seed> <image path> <label> <train|val|test>
//! ...
//! ```
//!
//! Shift, rotation and offsets are never serialized; instances re-derive
//! from the descriptor. The hash pins the single coordinate set every image
//! in the dataset was built from.

use super::PipelineError;
use crate::problems::InstanceDescriptor;
use crate::sampling::{make_sample_matrix, SampleMatrix, SampleMode};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// What the integer label of an entry means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSemantics {
    /// Label is the function-class id.
    ProblemClass,
    /// Label is the algorithm code (0 = ABC, 1 = CMAES, 2 = LSHADE).
    BestAlgorithm,
}

impl LabelSemantics {
    pub fn tag(self) -> &'static str {
        match self {
            LabelSemantics::ProblemClass => "problem-class",
            LabelSemantics::BestAlgorithm => "best-algorithm",
        }
    }
}

/// The sampling plan recorded in the manifest header; enough to rebuild the
/// shared coordinate set bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub n: usize,
    pub dim: usize,
    pub mode: SampleMode,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

impl SamplePlan {
    pub fn build(&self) -> Result<SampleMatrix, PipelineError> {
        let bounds = vec![(self.lo, self.hi); self.dim];
        Ok(make_sample_matrix(self.n, self.dim, &bounds, self.mode, self.seed)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub descriptor: InstanceDescriptor,
    /// Path of the image file, relative to the manifest location.
    pub image_path: String,
    pub label: i64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub semantics: LabelSemantics,
    pub plan: SamplePlan,
    pub sample_hash: String,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.entries_in(split).count()
    }

    /// Sorted distinct labels; index in this list is the class index used by
    /// the network. Algorithm labels always map to the full three-way code
    /// space so a selector can decode predictions without the dataset.
    pub fn label_values(&self) -> Vec<i64> {
        match self.semantics {
            LabelSemantics::BestAlgorithm => vec![0, 1, 2],
            LabelSemantics::ProblemClass => {
                let mut labels: Vec<i64> = self.entries.iter().map(|e| e.label).collect();
                labels.sort_unstable();
                labels.dedup();
                labels
            }
        }
    }

    pub fn label_index(&self, label: i64) -> Option<usize> {
        self.label_values().binary_search(&label).ok()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("LSMF 1\n");
        out.push_str(&format!("semantics {}\n", self.semantics.tag()));
        out.push_str(&format!(
            "samples {} {} {} {}\n",
            self.plan.n, self.plan.dim, self.plan.mode, self.plan.seed
        ));
        out.push_str(&format!("bounds {} {}\n", self.plan.lo, self.plan.hi));
        out.push_str(&format!("hash {}\n", self.sample_hash));
        for e in &self.entries {
            out.push_str(&format!(
                "entry {} {} {} {}\n",
                e.descriptor, e.image_path, e.label, e.split
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        super::report::write_atomic(path, &self.render())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|reason| PipelineError::Manifest {
            path: path.display().to_string(),
            reason,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).ok_or("empty manifest")?;
        if header.trim() != "LSMF 1" {
            return Err(format!("bad header {header:?}"));
        }
        let mut semantics = None;
        let mut plan = None;
        let mut bounds = None;
        let mut hash = None;
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| format!("line {}: bad {what}: {line:?}", idx + 1);
            let (kind, rest) = line.split_once(' ').ok_or_else(|| bad("record"))?;
            match kind {
                "semantics" => {
                    semantics = Some(match rest.trim() {
                        "problem-class" => LabelSemantics::ProblemClass,
                        "best-algorithm" => LabelSemantics::BestAlgorithm,
                        other => return Err(format!("unknown semantics {other:?}")),
                    });
                }
                "samples" => {
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() != 4 {
                        return Err(bad("samples record"));
                    }
                    plan = Some((
                        toks[0].parse::<usize>().map_err(|_| bad("sample count"))?,
                        toks[1].parse::<usize>().map_err(|_| bad("dimension"))?,
                        toks[2].parse::<SampleMode>().map_err(|e| e.to_string())?,
                        toks[3].parse::<u64>().map_err(|_| bad("seed"))?,
                    ));
                }
                "bounds" => {
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() != 2 {
                        return Err(bad("bounds record"));
                    }
                    bounds = Some((
                        toks[0].parse::<f64>().map_err(|_| bad("bound"))?,
                        toks[1].parse::<f64>().map_err(|_| bad("bound"))?,
                    ));
                }
                "hash" => hash = Some(rest.trim().to_string()),
                "entry" => {
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() != 6 {
                        return Err(bad("entry record"));
                    }
                    let descriptor: InstanceDescriptor =
                        format!("{} {} {}", toks[0], toks[1], toks[2]).parse()?;
                    entries.push(ManifestEntry {
                        descriptor,
                        image_path: toks[3].to_string(),
                        label: toks[4].parse().map_err(|_| bad("label"))?,
                        split: toks[5].parse()?,
                    });
                }
                other => return Err(format!("unknown record kind {other:?}")),
            }
        }
        let semantics = semantics.ok_or("missing semantics record")?;
        let (n, dim, mode, seed) = plan.ok_or("missing samples record")?;
        let (lo, hi) = bounds.ok_or("missing bounds record")?;
        let sample_hash = hash.ok_or("missing hash record")?;
        Ok(DatasetManifest {
            semantics,
            plan: SamplePlan { n, dim, mode, seed, lo, hi },
            sample_hash,
            entries,
        })
    }
}
