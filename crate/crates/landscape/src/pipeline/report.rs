//! Report formatting: scientific notation matching the published tables,
//! accuracy tables, rank tables, and atomic text-file writes.

use super::PipelineError;
use std::fs;
use std::io::Write;
use std::path::Path;

/// `1.76E-08` style: two fractional digits, signed two-digit exponent.
pub fn sci(x: f64) -> String {
    if x == 0.0 {
        return "0.00E+00".to_string();
    }
    let s = format!("{x:.2e}"); // e.g. "1.76e-8"
    let (mant, exp) = s.split_once('e').expect("exponent marker");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mant}E{sign}{digits:0>2}")
}

/// Percentage with two decimals, `65.27%` style.
pub fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Writes a text artifact atomically (temp file + rename), fsynced so no
/// partial file survives a crash.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), PipelineError> {
    let io_err = |source| PipelineError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let mut tmp_name = path.file_name().expect("file path").to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(content.as_bytes()).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Per-class accuracy in the style of the published accuracy tables.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    /// (row name, correct, total) per true class, in label order.
    pub rows: Vec<(String, usize, usize)>,
    pub correct: usize,
    pub total: usize,
}

impl AccuracyTable {
    pub fn overall(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,correct,total,accuracy\n");
        for (name, correct, total) in &self.rows {
            let acc = if *total == 0 { 0.0 } else { *correct as f64 / *total as f64 };
            out.push_str(&format!("{name},{correct},{total},{}\n", pct(acc)));
        }
        out.push_str(&format!("Average,{},{},{}\n", self.correct, self.total, pct(self.overall())));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let width = self
            .rows
            .iter()
            .map(|(n, _, _)| n.len())
            .chain(["Average".len()])
            .max()
            .unwrap_or(8);
        for (name, correct, total) in &self.rows {
            let acc = if *total == 0 { 0.0 } else { *correct as f64 / *total as f64 };
            out.push_str(&format!("{name:<width$}  {:>8}  ({correct}/{total})\n", pct(acc)));
        }
        out.push_str(&format!(
            "{:<width$}  {:>8}  ({}/{})\n",
            "Average",
            pct(self.overall()),
            self.correct,
            self.total
        ));
        out
    }
}

/// Column order of every rank/mean table: the selector first, then the
/// single algorithms in label order.
pub const METHOD_NAMES: [&str; 4] = ["DeepLearning", "ABC", "CMAES", "LSHADE"];

/// One (class, method) performance observation; the rank table aggregates
/// the mean error over all observations of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodObservation {
    pub class_id: u32,
    /// Index into [`METHOD_NAMES`].
    pub method: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub classes: Vec<u32>,
    /// Mean error per class per method.
    pub means: Vec<[f64; 4]>,
    /// Competition ranks 1..4; ties share the better rank.
    pub ranks: Vec<[usize; 4]>,
    pub average_ranks: [f64; 4],
}

/// Ranks the four methods per class by mean error. Every class must have at
/// least one observation for every method.
pub fn rank_table(observations: &[MethodObservation]) -> Result<RankTable, PipelineError> {
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<u32, [(f64, usize); 4]> = BTreeMap::new();
    for obs in observations {
        if obs.method >= 4 {
            return Err(PipelineError::Config(format!("method index {} out of range", obs.method)));
        }
        let entry = cells.entry(obs.class_id).or_insert([(0.0, 0); 4]);
        entry[obs.method].0 += obs.error;
        entry[obs.method].1 += 1;
    }
    if cells.is_empty() {
        return Err(PipelineError::Config("rank table needs at least one observation".into()));
    }
    let mut classes = Vec::new();
    let mut means = Vec::new();
    let mut ranks = Vec::new();
    let mut rank_sums = [0.0f64; 4];
    for (class_id, cell) in &cells {
        for (m, &(_, count)) in cell.iter().enumerate() {
            if count == 0 {
                return Err(PipelineError::MissingMethod {
                    class_id: *class_id,
                    method: METHOD_NAMES[m],
                });
            }
        }
        let mean: [f64; 4] = std::array::from_fn(|m| cell[m].0 / cell[m].1 as f64);
        let rank: [usize; 4] =
            std::array::from_fn(|m| 1 + (0..4).filter(|&o| mean[o] < mean[m]).count());
        for m in 0..4 {
            rank_sums[m] += rank[m] as f64;
        }
        classes.push(*class_id);
        means.push(mean);
        ranks.push(rank);
    }
    let n = classes.len() as f64;
    Ok(RankTable {
        classes,
        means,
        ranks,
        average_ranks: std::array::from_fn(|m| rank_sums[m] / n),
    })
}

impl RankTable {
    pub fn ranks_csv(&self) -> String {
        let mut out = String::from("class");
        for name in METHOD_NAMES {
            out.push_str(&format!(",{name}"));
        }
        out.push('\n');
        for (class, rank) in self.classes.iter().zip(&self.ranks) {
            out.push_str(&format!("f{class}"));
            for r in rank {
                out.push_str(&format!(",{r}"));
            }
            out.push('\n');
        }
        out.push_str("Average");
        for avg in self.average_ranks {
            out.push_str(&format!(",{avg:.3}"));
        }
        out.push('\n');
        out
    }

    pub fn means_csv(&self) -> String {
        let mut out = String::from("class");
        for name in METHOD_NAMES {
            out.push_str(&format!(",{name}"));
        }
        out.push('\n');
        for (class, mean) in self.classes.iter().zip(&self.means) {
            out.push_str(&format!("f{class}"));
            for m in mean {
                out.push_str(&format!(",{}", sci(*m)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<8}{:>14}{:>10}{:>10}{:>10}\n",
            "class", METHOD_NAMES[0], METHOD_NAMES[1], METHOD_NAMES[2], METHOD_NAMES[3]
        );
        for ((class, rank), mean) in self.classes.iter().zip(&self.ranks).zip(&self.means) {
            out.push_str(&format!(
                "f{:<7}{:>14}{:>10}{:>10}{:>10}   |",
                class, rank[0], rank[1], rank[2], rank[3]
            ));
            for m in mean {
                out.push_str(&format!("  {}", sci(*m)));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "{:<8}{:>14.3}{:>10.3}{:>10.3}{:>10.3}\n",
            "Average",
            self.average_ranks[0],
            self.average_ranks[1],
            self.average_ranks[2],
            self.average_ranks[3]
        ));
        out
    }
}
