use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linkdistill::data::{make_split, planetoid, synthetic, Dataset, EdgeSplit, DEFAULT_TEST_FRAC, DEFAULT_VAL_FRAC};
use linkdistill::distill::{
    all_anchors, build_guidance, edge_scores, train_student_with, ContextConfig, DistillConfig, EpochLog, GuidanceConfig,
    GuidanceSet,
};
use linkdistill::ensemble::checkpoint::{GateCheckpoint, StudentRef, GATE_MAGIC};
use linkdistill::ensemble::{train_gate_with, Ensemble, EnsembleConfig, GateEpochLog};
use linkdistill::eval::{write_key_values, write_scores_tsv, EvalReport};
use linkdistill::graph::io::{implied_num_nodes, read_edge_list, read_features, write_edge_list, write_features_binary};
use linkdistill::heuristics::score_batch;
use linkdistill::nn::checkpoint::{file_digest, read_student, write_student, MLP_MAGIC};
use linkdistill::pipeline::{run_pipeline, RunConfig};
use linkdistill::{Edge, Error, FeatureMatrix, Graph, HeuristicKind, Result};

#[derive(Parser)]
#[command(name = "linkdistill", version, about = "Distill link-prediction MLPs from graph heuristics")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "LINKDISTILL_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the edges into train / validation / test with sampled negatives.
    Split(SplitArgs),
    /// Build a teacher guidance file from a heuristic on the training graph.
    Guidance(GuidanceArgs),
    /// Train one student.
    Distill(DistillArgs),
    /// Train the gate over frozen students.
    Ensemble(EnsembleArgs),
    /// Evaluate a student, a gate or a heuristic on a split.
    Eval(EvalArgs),
    /// Run the whole pipeline from a config file.
    Run(RunArgs),
    /// Generate a synthetic citation-style dataset.
    Synth(SynthArgs),
    /// Convert Planetoid `.content` / `.cites` files to edges + features.
    ImportPlanetoid(ImportArgs),
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Feature file; fixes the node count (otherwise implied by the edges).
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VAL_FRAC)]
    val_frac: f64,
    #[arg(long, default_value_t = DEFAULT_TEST_FRAC)]
    test_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GuidanceArgs {
    /// Split directory; guidance is computed on its training edges.
    #[arg(long)]
    split: PathBuf,
    /// `cn`, `aa`, `ra`, `csp` or `csp<tau>`.
    #[arg(long)]
    heuristic: HeuristicKind,
    #[arg(long, default_value_t = 10)]
    num_nearby: usize,
    #[arg(long, default_value_t = 2)]
    walk_length: usize,
    #[arg(long, default_value_t = 10)]
    num_random: usize,
    #[arg(long, default_value_t = 4)]
    pool_rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelInputs {
    /// Full edge list; checked against the split's node count.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    split: PathBuf,
}

#[derive(Args)]
struct DistillArgs {
    #[command(flatten)]
    inputs: ModelInputs,
    #[arg(long)]
    guidance: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    temp: f64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    patience: usize,
    /// Validation cutoff for checkpoint selection.
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    inputs: ModelInputs,
    /// Comma-separated student checkpoints, in gate order.
    #[arg(long, value_delimiter = ',', required = true)]
    students: Vec<PathBuf>,
    /// Student labels (default: file stems).
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    #[arg(long, default_value_t = 0)]
    patience: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Student or gate checkpoint (detected from the file header).
    #[arg(long, conflicts_with = "heuristic", required_unless_present = "heuristic")]
    model: Option<PathBuf>,
    /// Score with a heuristic on the training graph instead of a model.
    #[arg(long)]
    heuristic: Option<HeuristicKind>,
    /// Needed for model evaluation.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    split: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "20")]
    k: Vec<usize>,
    /// Evaluate on the validation edges instead of the test edges.
    #[arg(long)]
    valid: bool,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-edge scores TSV.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// `small` or `cora_like`.
    #[arg(long, default_value = "cora_like")]
    preset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportArgs {
    /// Directory holding `<name>.content` and `<name>.cites`.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon_init(jobs) {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Split(a) => split(a),
        Command::Guidance(a) => guidance(a),
        Command::Distill(a) => distill(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Eval(a) => eval(a),
        Command::Run(a) => run(a, cli.jobs),
        Command::Synth(a) => synth(a),
        Command::ImportPlanetoid(a) => import_planetoid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn rayon_init(jobs: usize) -> Result<()> {
    linkdistill::pipeline::init_global_threads(jobs)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(p)?;
    }
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let edges = read_edge_list(&a.graph)?;
    let n = match &a.features {
        Some(f) => read_features(f)?.num_nodes(),
        None => implied_num_nodes(&edges),
    };
    let (g, stats) = Graph::from_edges(n, &edges)?;
    log::info!("graph: {} nodes, {} edges ({stats:?})", g.num_nodes(), g.num_edges());
    let s = make_split(&g, a.val_frac, a.test_frac, a.seed)?;
    s.save(&a.out)?;
    println!(
        "train={} valid={} test={} valid_neg={} test_neg={}",
        s.train.len(),
        s.valid_pos.len(),
        s.test_pos.len(),
        s.valid_neg.len(),
        s.test_neg.len()
    );
    Ok(())
}

fn guidance(a: GuidanceArgs) -> Result<()> {
    let s = EdgeSplit::load(&a.split)?;
    let g = s.train_graph()?;
    let cfg = GuidanceConfig {
        context: ContextConfig {
            num_nearby: a.num_nearby,
            walk_length: a.walk_length,
            num_random: a.num_random,
        },
        pool_rounds: a.pool_rounds,
    };
    let built = build_guidance(&g, a.heuristic, &all_anchors(&g), &cfg, a.seed)?;
    ensure_parent(&a.out)?;
    built.guidance.write(&a.out)?;
    println!(
        "records={} pairs={} skipped_anchors={}",
        built.guidance.len(),
        built.guidance.num_pairs(),
        built.skipped_anchors.len()
    );
    Ok(())
}

struct Loaded {
    split: EdgeSplit,
    g_train: Graph,
    x: FeatureMatrix,
}

fn load_inputs(i: &ModelInputs) -> Result<Loaded> {
    let split = EdgeSplit::load(&i.split)?;
    let x = read_features(&i.features)?;
    x.check_rows(split.num_nodes)?;
    if let Some(gp) = &i.graph {
        let (g, _) = Graph::from_edges(split.num_nodes, &read_edge_list(gp)?)?;
        let in_split = split.train.len() + split.valid_pos.len() + split.test_pos.len();
        if g.num_edges() != in_split {
            return Err(Error::InvalidArgument(format!(
                "graph has {} edges but the split holds {in_split}",
                g.num_edges()
            )));
        }
    }
    let g_train = split.train_graph()?;
    Ok(Loaded { split, g_train, x })
}

fn distill(a: DistillArgs) -> Result<()> {
    let inp = load_inputs(&a.inputs)?;
    let guidance = GuidanceSet::read(&a.guidance)?;
    let cfg = DistillConfig {
        alpha: a.alpha,
        beta: a.beta,
        delta: a.delta,
        temperature: a.temp,
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        hidden: a.hidden,
        layers: a.layers,
        patience: a.patience,
        eval_k: a.k,
        seed: a.seed,
        ..DistillConfig::default()
    };
    println!("{}", EpochLog::TSV_HEADER);
    let mut print = |e: &EpochLog| println!("{}", e.tsv());
    let trained = train_student_with(&inp.g_train, &inp.x, &guidance, &inp.split, &cfg, &mut print)?;
    ensure_parent(&a.out)?;
    write_student(&a.out, &trained.model)?;
    eprintln!("best epoch {} valid hits@{} {:.6}", trained.best_epoch, a.k, trained.best_valid);
    Ok(())
}

fn ensemble(a: EnsembleArgs) -> Result<()> {
    let inp = load_inputs(&a.inputs)?;
    let labels: Vec<String> = if a.labels.is_empty() {
        a.students
            .iter()
            .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect()
    } else {
        a.labels.clone()
    };
    if labels.len() != a.students.len() {
        return Err(Error::InvalidArgument("one label per student is required".into()));
    }
    let students = a.students.iter().map(read_student).collect::<Result<Vec<_>>>()?;
    let cfg = EnsembleConfig {
        lambda: a.lambda,
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        hidden: a.hidden,
        patience: a.patience,
        eval_k: a.k,
        seed: a.seed,
        ..EnsembleConfig::default()
    };
    println!("{}", GateEpochLog::TSV_HEADER);
    let mut print = |e: &GateEpochLog| println!("{}", e.tsv());
    let trained = train_gate_with(&inp.g_train, &inp.x, &students, &labels, &inp.split, &cfg, &mut print)?;
    let refs = a
        .students
        .iter()
        .zip(&labels)
        .map(|(p, l)| {
            Ok(StudentRef {
                label: l.clone(),
                path: std::fs::canonicalize(p)?,
                digest: file_digest(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ensure_parent(&a.out)?;
    GateCheckpoint {
        gate: trained.gate,
        students: refs,
    }
    .write(&a.out)?;
    eprintln!("best epoch {} valid hits@{} {:.6}", trained.best_epoch, a.k, trained.best_valid);
    Ok(())
}

fn model_scores(path: &Path, x: &FeatureMatrix, pos: &[Edge], neg: &[Edge]) -> Result<(Vec<f64>, Vec<f64>)> {
    let head = std::fs::read(path)?;
    if head.starts_with(MLP_MAGIC) {
        let emb = read_student(path)?.embed_all(x)?;
        Ok((edge_scores(&emb, pos), edge_scores(&emb, neg)))
    } else if head.starts_with(GATE_MAGIC) {
        let ck = GateCheckpoint::read(path)?;
        let students = ck.load_students(path.parent())?;
        let ens = Ensemble::new(ck.gate, &students, x)?;
        Ok((ens.score_pairs(x, pos)?, ens.score_pairs(x, neg)?))
    } else {
        Err(Error::InvalidArgument(format!(
            "{} is neither a student nor a gate checkpoint",
            path.display()
        )))
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let s = EdgeSplit::load(&a.split)?;
    let (pos, neg) = if a.valid {
        (&s.valid_pos, &s.valid_neg)
    } else {
        (&s.test_pos, &s.test_neg)
    };
    let (ps, ns) = match (&a.model, a.heuristic) {
        (Some(m), _) => {
            let f = a
                .features
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--features is required with --model".into()))?;
            let x = read_features(f)?;
            x.check_rows(s.num_nodes)?;
            model_scores(m, &x, pos, neg)?
        }
        (None, Some(h)) => {
            let g = s.train_graph()?;
            let sc = |e: &[Edge]| -> Result<Vec<f64>> { Ok(score_batch(&g, e, h)?.into_iter().map(|p| p.score).collect()) };
            (sc(pos)?, sc(neg)?)
        }
        (None, None) => unreachable!("clap requires --model or --heuristic"),
    };
    let report = EvalReport::compute(&ps, &ns, &a.k)?;
    let kv = report.key_values();
    for (k, v) in &kv {
        println!("{k}={v}");
    }
    if let Some(r) = &a.report {
        ensure_parent(r)?;
        write_key_values(r, &kv)?;
    }
    if let Some(t) = &a.scores {
        ensure_parent(t)?;
        write_scores_tsv(t, pos, &ps, neg, &ns)?;
    }
    Ok(())
}

fn run(a: RunArgs, jobs: Option<usize>) -> Result<()> {
    let mut cfg = RunConfig::from_file(&a.config)?;
    if let Some(o) = a.out {
        cfg.out = o;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    let summary = run_pipeline(&cfg)?;
    for (k, v) in summary.report() {
        println!("{k}={v}");
    }
    for (k, v) in summary.timing.key_values() {
        println!("time.{k}={v}");
    }
    Ok(())
}

fn save_dataset(d: &Dataset, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let edges: Vec<Edge> = d.graph.edges().collect();
    write_edge_list(out.join("edges.txt"), &edges)?;
    write_features_binary(out.join("features.bin"), &d.features)?;
    println!(
        "nodes={} edges={} feature_dim={}",
        d.graph.num_nodes(),
        d.graph.num_edges(),
        d.features.dim()
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = match a.preset.as_str() {
        "cora_like" => synthetic::SyntheticConfig::cora_like(a.seed),
        "small" => synthetic::SyntheticConfig::small(a.seed),
        other => return Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
    };
    save_dataset(&synthetic::generate(&cfg)?.dataset, &a.out)
}

fn import_planetoid(a: ImportArgs) -> Result<()> {
    let (content, cites) = planetoid::find_files(&a.dir)?;
    let p = planetoid::load(&content, &cites)?;
    save_dataset(&p.dataset, &a.out)?;
    std::fs::write(a.out.join("labels.txt"), p.labels.join("\n") + "\n")?;
    if p.skipped_citations > 0 {
        log::warn!("skipped {} citations to unknown papers", p.skipped_citations);
    }
    Ok(())
}
