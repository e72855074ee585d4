//! Command-line front end: one subcommand per pipeline stage so the long
//! stages (labeling, training) stay resumable at file granularity.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{ClassSelection, FileConfig, ResolvedDump, WidthScale};
use landscape::convnet::{
    build_network, load_checkpoint, save_checkpoint, train, ArchitectureConfig, TrainConfig,
    Variant,
};
use landscape::pipeline::{
    bench_methods, evaluate_accuracy, generate_algorithm_dataset, generate_class_dataset,
    load_split, manifest_base_dir, rank_table, run_records_csv, select_and_solve, write_atomic,
    AlgorithmDatasetSpec, BenchSpec, DatasetManifest, DatasetSpec, PipelineError, Split,
};
use landscape::problems::{make_instance, DEFAULT_HI, DEFAULT_LO};
use landscape::sampling::{make_sample_matrix, perfect_square_side, SampleMode};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser)]
#[command(
    name = "landscape",
    version,
    about = "Landscape imaging, classification and portfolio optimization"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores). Outputs do
    /// not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Optional `key = value` config file; flags override file entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the shared sample coordinate set to a text file
    GenSamples(GenSamplesArgs),
    /// Generate a problem-class image dataset
    GenDataset(GenDatasetArgs),
    /// Generate a best-algorithm-labeled image dataset (runs the optimizers)
    Label(LabelArgs),
    /// Train a classifier on a dataset manifest
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split of a manifest
    Eval(EvalArgs),
    /// Run the budget-split portfolio on a single instance
    Solve(SolveArgs),
    /// Compare the portfolio against the single algorithms on the test split
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenSamplesArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// grid | random | auto (grid for 2-D, random otherwise)
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Count (`12` = ids 1..12) or explicit ids (`1,3,4`)
    #[arg(long)]
    classes: Option<ClassSelection>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    instances_per_class: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    #[command(flatten)]
    dataset: GenDatasetArgs,
    /// Evaluations per optimizer run (default 10000 * dim)
    #[arg(long)]
    budget: Option<usize>,
    /// Labeling runs per algorithm per instance
    #[arg(long)]
    runs: Option<usize>,
    /// Optimum-reached threshold for the undetermined rule
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// a (five conv groups) | b (four) | auto by image side
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    width_scale: Option<WidthScale>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// train | val | test
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    class_id: Option<u32>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    inst_seed: Option<u64>,
    /// Total budget (default 10000 * dim); 10% goes to sampling
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    budget: Option<usize>,
    /// Runs per method per instance
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Data(m) => m,
        }
    }
}

impl From<String> for CliError {
    fn from(m: String) -> Self {
        CliError::Config(m)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        use landscape::convnet::NetError;
        use landscape::sampling::SamplingError;
        match &e {
            PipelineError::Io { .. } => CliError::Io(e.to_string()),
            PipelineError::Sampling(SamplingError::Io { .. }) => CliError::Io(e.to_string()),
            PipelineError::Net(NetError::Io { .. }) => CliError::Io(e.to_string()),
            PipelineError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: cannot configure {workers} workers: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let file_cfg = match FileConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = match cli.command {
        Command::GenSamples(args) => cmd_gen_samples(args, &file_cfg),
        Command::GenDataset(args) => cmd_gen_dataset(args, &file_cfg),
        Command::Label(args) => cmd_label(args, &file_cfg),
        Command::Train(args) => cmd_train(args, &file_cfg),
        Command::Eval(args) => cmd_eval(args, &file_cfg),
        Command::Solve(args) => cmd_solve(args, &file_cfg),
        Command::Bench(args) => cmd_bench(args, &file_cfg),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_mode(raw: &str, dim: usize) -> Result<SampleMode, String> {
    match raw {
        "auto" => Ok(DatasetSpec::default_mode(dim)),
        other => other.parse(),
    }
}

fn create_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))
}

fn write_dump(out_dir: &Path, command: &str, dump: &ResolvedDump) -> Result<(), CliError> {
    let path = out_dir.join(format!("{command}.config.txt"));
    write_atomic(&path, &dump.render(command)).map_err(CliError::from)
}

fn cmd_gen_samples(args: GenSamplesArgs, fc: &FileConfig) -> Result<(), CliError> {
    let dim = fc.resolve("dim", args.dim, 2)?;
    let n = fc.resolve("samples", args.samples, if dim == 2 { 2025 } else { 10_000 })?;
    let mode_raw = fc.resolve("mode", args.mode, "auto".to_string())?;
    let mode = parse_mode(&mode_raw, dim)?;
    let seed = fc.resolve("seed", args.seed, 0)?;

    let bounds = vec![(DEFAULT_LO, DEFAULT_HI); dim];
    let sm = make_sample_matrix(n, dim, &bounds, mode, seed).map_err(PipelineError::from)?;
    let hash = sm.content_hash();

    let mut text = String::from("LSSM 1\n");
    text.push_str(&format!("samples {n} {dim} {mode} {seed}\n"));
    text.push_str(&format!("bounds {DEFAULT_LO} {DEFAULT_HI}\n"));
    text.push_str(&format!("hash {hash}\n"));
    for row in sm.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        text.push_str(&format!("row {}\n", cells.join(" ")));
    }
    write_atomic(&args.out, &text)?;

    let mut dump = ResolvedDump::default();
    dump.put("samples", n);
    dump.put("dim", dim);
    dump.put("mode", mode);
    dump.put("seed", seed);
    dump.put("hash", &hash);
    write_atomic(&args.out.with_extension("config.txt"), &dump.render("gen-samples"))?;
    println!("wrote {} ({n} rows, hash {hash})", args.out.display());
    Ok(())
}

fn resolve_dataset_spec(args: &GenDatasetArgs, fc: &FileConfig) -> Result<DatasetSpec, CliError> {
    let ClassSelection(classes) = fc.resolve_required("classes", args.classes.clone())?;
    let dim = fc.resolve("dim", args.dim, 2)?;
    let instances_per_class = fc.resolve("instances-per-class", args.instances_per_class, 50)?;
    let n_samples = fc.resolve("samples", args.samples, if dim == 2 { 2025 } else { 10_000 })?;
    let mode_raw = fc.resolve("mode", args.mode.clone(), "auto".to_string())?;
    let mode = parse_mode(&mode_raw, dim)?;
    let seed = fc.resolve("seed", args.seed, 0)?;
    Ok(DatasetSpec { classes, dim, instances_per_class, n_samples, mode, seed })
}

fn dump_dataset_spec(dump: &mut ResolvedDump, spec: &DatasetSpec) {
    let classes: Vec<String> = spec.classes.iter().map(|c| c.to_string()).collect();
    dump.put("classes", classes.join(","));
    dump.put("dim", spec.dim);
    dump.put("instances-per-class", spec.instances_per_class);
    dump.put("samples", spec.n_samples);
    dump.put("mode", spec.mode);
    dump.put("seed", spec.seed);
}

fn cmd_gen_dataset(args: GenDatasetArgs, fc: &FileConfig) -> Result<(), CliError> {
    let spec = resolve_dataset_spec(&args, fc)?;
    let manifest = generate_class_dataset(&spec, &args.out)?;
    let mut dump = ResolvedDump::default();
    dump_dataset_spec(&mut dump, &spec);
    dump.put("sample-hash", &manifest.sample_hash);
    write_dump(&args.out, "gen-dataset", &dump)?;
    println!(
        "wrote {} entries ({} train / {} val / {} test) under {}",
        manifest.entries.len(),
        manifest.split_len(Split::Train),
        manifest.split_len(Split::Val),
        manifest.split_len(Split::Test),
        args.out.display()
    );
    Ok(())
}

fn cmd_label(args: LabelArgs, fc: &FileConfig) -> Result<(), CliError> {
    let dataset = resolve_dataset_spec(&args.dataset, fc)?;
    let budget = fc.resolve("budget", args.budget, 10_000 * dataset.dim)?;
    let runs = fc.resolve("runs", args.runs, 5)?;
    let epsilon = fc.resolve("epsilon", args.epsilon, 1e-8)?;
    let spec = AlgorithmDatasetSpec { dataset, budget, runs, epsilon };
    let (manifest, report) = generate_algorithm_dataset(&spec, &args.dataset.out)?;
    write_atomic(&args.dataset.out.join("labels.csv"), &report.to_csv())?;

    let mut dump = ResolvedDump::default();
    dump_dataset_spec(&mut dump, &spec.dataset);
    dump.put("budget", budget);
    dump.put("runs", runs);
    dump.put("epsilon", epsilon);
    dump.put("sample-hash", &manifest.sample_hash);
    write_dump(&args.dataset.out, "label", &dump)?;
    let eliminated: usize = report.eliminated_per_split.iter().sum();
    println!(
        "labeled {} instances ({eliminated} eliminated as undetermined); manifest under {}",
        report.rows.len(),
        args.dataset.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, fc: &FileConfig) -> Result<(), CliError> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let base = manifest_base_dir(&args.manifest);
    let side = perfect_square_side(manifest.plan.n).ok_or_else(|| {
        CliError::Data(format!("manifest sample count {} is not square", manifest.plan.n))
    })?;
    let arch_raw = fc.resolve("arch", args.arch, "auto".to_string())?;
    let variant = match arch_raw.as_str() {
        "a" => Variant::A,
        "b" => Variant::B,
        "auto" => {
            if side >= 64 {
                Variant::A
            } else {
                Variant::B
            }
        }
        other => return Err(CliError::Config(format!("unknown arch {other:?} (a|b|auto)"))),
    };
    let width_scale = fc.resolve("width-scale", args.width_scale, WidthScale(1.0))?;
    let epochs = fc.resolve("epochs", args.epochs, 150)?;
    let batch = fc.resolve("batch", args.batch, 60)?;
    let lr = fc.resolve("lr", args.lr, 1e-4)?;
    let seed = fc.resolve("seed", args.seed, 0)?;

    let num_classes = manifest.label_values().len();
    let net_config = ArchitectureConfig::new(variant, side, num_classes, width_scale.0);
    let mut net = build_network(&net_config, seed).map_err(PipelineError::from)?;

    let train_set = load_split(&manifest, Split::Train, &base)?;
    let val_set = load_split(&manifest, Split::Val, &base)?;
    let tc = TrainConfig {
        epochs,
        batch_size: batch,
        learning_rate: lr,
        seed,
        ..TrainConfig::default()
    };
    let (best, history) =
        train(&mut net, &train_set, &val_set, &tc).map_err(PipelineError::from)?;

    create_out_dir(&args.out)?;
    let ckpt_path = args.out.join("checkpoint.lsnn");
    save_checkpoint(&best, &ckpt_path).map_err(PipelineError::from)?;
    let mut csv = String::from("epoch,train_loss,val_acc\n");
    for h in &history {
        csv.push_str(&format!("{},{},{}\n", h.epoch, h.train_loss, h.val_accuracy));
    }
    write_atomic(&args.out.join("history.csv"), &csv)?;

    let mut dump = ResolvedDump::default();
    dump.put("manifest", args.manifest.display());
    dump.put("arch", variant.tag());
    dump.put("width-scale", width_scale);
    dump.put("epochs", epochs);
    dump.put("batch", batch);
    dump.put("lr", lr);
    dump.put("seed", seed);
    dump.put("input-side", side);
    dump.put("classes", num_classes);
    write_dump(&args.out, "train", &dump)?;

    let best_val = history.iter().map(|h| h.val_accuracy).fold(f64::NEG_INFINITY, f64::max);
    println!(
        "trained {} epochs; best validation accuracy {:.2}%; checkpoint at {}",
        history.len(),
        100.0 * best_val,
        ckpt_path.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, fc: &FileConfig) -> Result<(), CliError> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let base = manifest_base_dir(&args.manifest);
    let split = fc.resolve("split", args.split, Split::Test)?;
    let net = load_checkpoint(&args.checkpoint).map_err(PipelineError::from)?;
    let table = evaluate_accuracy(&net, &manifest, split, &base)?;
    create_out_dir(&args.out)?;
    write_atomic(&args.out.join("accuracy.csv"), &table.to_csv())?;
    write_atomic(&args.out.join("accuracy.txt"), &table.to_text())?;

    let mut dump = ResolvedDump::default();
    dump.put("manifest", args.manifest.display());
    dump.put("checkpoint", args.checkpoint.display());
    dump.put("split", split);
    write_dump(&args.out, "eval", &dump)?;
    println!("{}", table.to_text());
    Ok(())
}

fn cmd_solve(args: SolveArgs, fc: &FileConfig) -> Result<(), CliError> {
    let class_id = fc.resolve_required("class-id", args.class_id)?;
    let dim = fc.resolve("dim", args.dim, 10)?;
    let inst_seed = fc.resolve("inst-seed", args.inst_seed, 1)?;
    let budget = fc.resolve("budget", args.budget, 10_000 * dim)?;
    let samples = fc.resolve("samples", args.samples, budget / 10)?;
    let mode_raw = fc.resolve("mode", args.mode, "auto".to_string())?;
    let mode = parse_mode(&mode_raw, dim)?;
    let seed = fc.resolve("seed", args.seed, 0)?;

    let net = load_checkpoint(&args.checkpoint).map_err(PipelineError::from)?;
    let inst = make_instance(class_id, dim, inst_seed).map_err(PipelineError::from)?;
    let bounds = vec![(DEFAULT_LO, DEFAULT_HI); dim];
    let sm = make_sample_matrix(samples, dim, &bounds, mode, seed).map_err(PipelineError::from)?;
    let result = select_and_solve(&inst, budget, &net, &sm, seed)?;

    create_out_dir(&args.out)?;
    let csv = format!(
        "class_id,dim,inst_seed,chosen,sampling_evals,solving_evals,final_error\n{},{},{},{},{},{},{}\n",
        class_id,
        dim,
        inst_seed,
        result.chosen,
        result.sampling_evals,
        result.solving_evals,
        landscape::pipeline::sci(result.final_error)
    );
    write_atomic(&args.out.join("portfolio.csv"), &csv)?;

    let mut dump = ResolvedDump::default();
    dump.put("checkpoint", args.checkpoint.display());
    dump.put("class-id", class_id);
    dump.put("dim", dim);
    dump.put("inst-seed", inst_seed);
    dump.put("budget", budget);
    dump.put("samples", samples);
    dump.put("mode", mode);
    dump.put("seed", seed);
    write_dump(&args.out, "solve", &dump)?;
    println!(
        "chose {} after {} sampling evals; solved to error {} in {} evals",
        result.chosen,
        result.sampling_evals,
        landscape::pipeline::sci(result.final_error),
        result.solving_evals
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs, fc: &FileConfig) -> Result<(), CliError> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let budget = fc.resolve("budget", args.budget, 10_000 * manifest.plan.dim)?;
    let runs = fc.resolve("runs", args.runs, 3)?;
    let seed = fc.resolve("seed", args.seed, 0)?;
    let net = load_checkpoint(&args.checkpoint).map_err(PipelineError::from)?;

    let spec = BenchSpec { budget, reps: runs, seed };
    let (records, observations) = bench_methods(&manifest, &net, &spec)?;
    let table = rank_table(&observations)?;

    create_out_dir(&args.out)?;
    write_atomic(&args.out.join("runs.csv"), &run_records_csv(&records))?;
    write_atomic(&args.out.join("ranks.csv"), &table.ranks_csv())?;
    write_atomic(&args.out.join("means.csv"), &table.means_csv())?;
    write_atomic(&args.out.join("ranks.txt"), &table.to_text())?;

    let mut dump = ResolvedDump::default();
    dump.put("manifest", args.manifest.display());
    dump.put("checkpoint", args.checkpoint.display());
    dump.put("budget", budget);
    dump.put("runs", runs);
    dump.put("seed", seed);
    write_dump(&args.out, "bench", &dump)?;
    println!("{}", table.to_text());
    Ok(())
}
