//! Command-line driver: wires datasets, word vectors, and victims into
//! attack runs, parameter sweeps, and victim training.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

use wordflip::dataset::DatasetError;
use wordflip::metrics::{aggregate, Aggregates, SweepError};
use wordflip::oracle::TrainError;
use wordflip::similarity::SimilarityProvider;
use wordflip::store::StoreError;
use wordflip::text::{Label, TokenSequence};
use wordflip::{
    budget_sweep, load_dataset, load_vectors, run_attacks, sample_rows, train_naive_bayes,
    write_report, AttackConfig, AttackDeps, AttackError, HardLabelOracle, KernelDistance,
    LexiconVictim, MeanEmbeddingSimilarity, NaiveBayesVictim, RankingSource, RemoteSimilarity,
    RemoteVictim, ReportFormat, RunReport, SamplingRule, StopWordList, SurrogateQueryCap,
    VectorStore,
};

#[derive(Parser)]
#[command(
    name = "wordflip",
    version,
    about = "Hard-label adversarial attacks on text classifiers under a query budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack dataset rows and write a run report.
    Attack(AttackCmd),
    /// Rerun one attack setup across a list of budgets or beam sizes.
    Sweep(SweepCmd),
    /// Train a naive Bayes victim on a dataset and save it as a JSON model.
    TrainVictim(TrainVictimCmd),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset file: one `label<TAB>text` or `label,text` row per line.
    #[arg(long)]
    dataset: PathBuf,

    /// Word vectors as `word v1 .. vd` lines (optional `count dim` header).
    #[arg(long)]
    vectors: PathBuf,

    /// Victim spec: `lexicon:PATH`, `nb:PATH`, or `remote[:URL]`.
    /// A bare `remote` reads the URL from $VICTIM_ENDPOINT.
    #[arg(long)]
    victim: String,

    /// Oracle queries allowed per attacked sample.
    #[arg(long, default_value_t = 100)]
    budget: u64,

    /// Beam width.
    #[arg(long, default_value_t = 10)]
    beam: usize,

    /// Synonym candidates per attacked position.
    #[arg(long, default_value_t = 50)]
    k: usize,

    /// Kernel width for surrogate sample weights.
    #[arg(long, default_value_t = 25.0)]
    sigma: f64,

    /// Perturbation-rate ceiling; substitutions reaching it are discarded.
    #[arg(long, default_value_t = 0.10)]
    pert_max: f64,

    /// Ridge penalty on surrogate coefficients.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,

    /// Surrogate sample cap: `auto` (half the budget) or a fixed count.
    #[arg(long, default_value = "auto", value_parser = parse_cap)]
    lime_cap: SurrogateQueryCap,

    /// Distance fed to the kernel.
    #[arg(long, value_enum, default_value_t = KernelDistanceArg::Cosine)]
    kernel_distance: KernelDistanceArg,

    /// Word-importance source.
    #[arg(long, value_enum, default_value_t = RankingArg::Lime)]
    ranking: RankingArg,

    /// Beam retention rule.
    #[arg(long, value_enum, default_value_t = RuleArg::Stratified)]
    rule: RuleArg,

    /// Run seed; drives dataset sampling and every attack's random stream.
    #[arg(long, default_value_t = 1234)]
    seed: u64,

    /// Attack this many seed-sampled rows instead of the whole dataset.
    #[arg(long)]
    sample: Option<usize>,

    /// Run up to N attacks concurrently (default: sequential).
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,

    /// Sentence similarity: `builtin` (mean word vectors) or `remote:URL`.
    #[arg(long, default_value = "builtin")]
    similarity: String,

    /// Class count a remote victim distinguishes.
    #[arg(long, default_value_t = 2)]
    classes: usize,
}

#[derive(Args)]
struct AttackCmd {
    #[command(flatten)]
    run: RunArgs,

    /// Report path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,

    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Rerun with each seed in the list, writing one report per seed and a
    /// mean summary line.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Also print the success rate over all rows, skipped ones included.
    #[arg(long)]
    literal_asr: bool,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    run: RunArgs,

    /// What to sweep (`budget` or `beam`) and its comma-separated values.
    #[arg(long = "sweep", num_args = 2, value_names = ["KIND", "VALUES"])]
    sweep: Vec<String>,

    /// Sweep table output path (JSON).
    #[arg(long, default_value = "sweep.json")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainVictimCmd {
    /// Training dataset, same format as for attacks.
    #[arg(long)]
    dataset: PathBuf,

    /// Model output path (JSON).
    #[arg(long, default_value = "victim.json")]
    out: PathBuf,

    /// Additive smoothing strength.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RankingArg {
    Lime,
    Random,
    Deletion,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Stratified,
    Top,
    Bottom,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelDistanceArg {
    Cosine,
    OneMinusCosine,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<RankingArg> for RankingSource {
    fn from(arg: RankingArg) -> Self {
        match arg {
            RankingArg::Lime => RankingSource::Lime,
            RankingArg::Random => RankingSource::Random,
            RankingArg::Deletion => RankingSource::Deletion,
        }
    }
}

impl From<RuleArg> for SamplingRule {
    fn from(arg: RuleArg) -> Self {
        match arg {
            RuleArg::Stratified => SamplingRule::Stratified,
            RuleArg::Top => SamplingRule::Top,
            RuleArg::Bottom => SamplingRule::Bottom,
            RuleArg::Random => SamplingRule::Random,
        }
    }
}

impl From<KernelDistanceArg> for KernelDistance {
    fn from(arg: KernelDistanceArg) -> Self {
        match arg {
            KernelDistanceArg::Cosine => KernelDistance::Cosine,
            KernelDistanceArg::OneMinusCosine => KernelDistance::OneMinusCosine,
        }
    }
}

fn parse_cap(raw: &str) -> Result<SurrogateQueryCap, String> {
    if raw == "auto" {
        return Ok(SurrogateQueryCap::Auto);
    }
    raw.parse()
        .map(SurrogateQueryCap::Fixed)
        .map_err(|_| format!("expected `auto` or a count, got `{raw}`"))
}

enum CliError {
    /// Bad flags, bad config, or malformed user-supplied files.
    Usage(String),
    /// IO, network, or other failures outside the user's control.
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Attack(cmd) => cmd_attack(cmd),
        Command::Sweep(cmd) => cmd_sweep(cmd),
        Command::TrainVictim(cmd) => cmd_train_victim(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Everything an attack run needs, loaded and validated.
struct Session {
    rows: Vec<(TokenSequence, Label)>,
    store: VectorStore<f64>,
    stops: StopWordList,
    victim: Box<dyn HardLabelOracle>,
    similarity_spec: String,
    config: AttackConfig<f64>,
    ranking: RankingSource,
    rule: SamplingRule,
    sample: Option<usize>,
    parallel: Option<usize>,
    victim_spec: String,
    dataset_path: PathBuf,
    vectors_path: PathBuf,
}

impl Session {
    fn open(args: &RunArgs) -> Result<Self, CliError> {
        let config = AttackConfig::<f64> {
            query_budget: args.budget,
            pert_threshold: args.pert_max,
            beam_size: args.beam,
            synonym_k: args.k,
            kernel_width: args.sigma,
            ridge_lambda: args.lambda,
            surrogate_query_cap: args.lime_cap,
            kernel_distance: args.kernel_distance.into(),
            seed: args.seed,
        };
        config.validate().map_err(|e| usage(e.to_string()))?;

        let rows = load_dataset(&args.dataset).map_err(classify_dataset_error)?;
        let store = load_vectors(&args.vectors).map_err(classify_store_error)?;
        let victim = load_victim(&args.victim, args.classes)?;
        if !args.similarity.eq("builtin") && !args.similarity.starts_with("remote:") {
            return Err(usage(format!(
                "unknown similarity spec `{}`; use `builtin` or `remote:URL`",
                args.similarity
            )));
        }

        Ok(Session {
            rows,
            store,
            stops: StopWordList::default(),
            victim,
            similarity_spec: args.similarity.clone(),
            config,
            ranking: args.ranking.into(),
            rule: args.rule.into(),
            sample: args.sample,
            parallel: args.parallel,
            victim_spec: args.victim.clone(),
            dataset_path: args.dataset.clone(),
            vectors_path: args.vectors.clone(),
        })
    }

    fn print_banner(&self) {
        let c = &self.config;
        println!(
            "config: budget={} beam={} k={} sigma={} pert_max={} lambda={} lime_cap={} \
             kernel_distance={} ranking={} rule={} seed={}",
            c.query_budget,
            c.beam_size,
            c.synonym_k,
            c.kernel_width,
            c.pert_threshold,
            c.ridge_lambda,
            cap_label(c.surrogate_query_cap),
            distance_label(c.kernel_distance),
            ranking_label(self.ranking),
            rule_label(self.rule),
            c.seed,
        );
        println!(
            "victim: {}  dataset: {} ({} rows)  vectors: {} ({} words, dim {})  similarity: {}",
            self.victim_spec,
            self.dataset_path.display(),
            self.rows.len(),
            self.vectors_path.display(),
            self.store.len(),
            self.store.dim(),
            self.similarity_spec,
        );
    }

    /// Rows this run attacks: the seed-sampled subset, or everything.
    fn rows_for(&self, seed: u64) -> Vec<(TokenSequence, Label)> {
        match self.sample {
            Some(count) => {
                let mut rng = StdRng::seed_from_u64(seed);
                sample_rows(&self.rows, count, &mut rng)
            }
            None => self.rows.clone(),
        }
    }

    /// Runs the provided closure with the similarity provider and thread
    /// pool resolved.
    fn execute<T: Send>(
        &self,
        f: impl Fn(&AttackDeps<'_, f64>, bool) -> Result<T, CliError> + Sync,
    ) -> Result<T, CliError> {
        let builtin;
        let remote;
        let provider: &dyn SimilarityProvider<f64> = match self.similarity_spec.as_str() {
            "builtin" => {
                builtin = MeanEmbeddingSimilarity::new(&self.store);
                &builtin
            }
            spec => {
                let url = spec.strip_prefix("remote:").expect("spec was validated");
                remote = RemoteSimilarity::new(url);
                &remote
            }
        };
        let deps = AttackDeps {
            store: &self.store,
            stops: &self.stops,
            similarity: provider,
            ranking: self.ranking,
            rule: self.rule,
        };
        match self.parallel {
            None | Some(0) | Some(1) => f(&deps, false),
            Some(threads) => rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(runtime)?
                .install(|| f(&deps, true)),
        }
    }
}

fn cmd_attack(cmd: AttackCmd) -> Result<(), CliError> {
    let mut session = Session::open(&cmd.run)?;
    session.print_banner();

    let seeds = cmd.seeds.clone().unwrap_or_else(|| vec![cmd.run.seed]);
    if seeds.is_empty() {
        return Err(usage("--seeds needs at least one value"));
    }
    let multi = seeds.len() > 1;
    let mut per_seed: Vec<Aggregates<f64>> = Vec::new();

    for &seed in &seeds {
        session.config.seed = seed;
        let rows = session.rows_for(seed);
        let outcomes = session.execute(|deps, parallel| {
            run_attacks(&rows, &*session.victim, &session.config, deps, parallel)
                .map_err(classify_attack_error)
        })?;
        let report = RunReport::new(
            session.config.clone(),
            session.ranking,
            session.rule,
            outcomes,
        )
        .map_err(runtime)?;

        let path = if multi {
            seed_suffixed(&cmd.out, seed)
        } else {
            cmd.out.clone()
        };
        let format = match cmd.format {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        };
        write_report(&path, &report, format).map_err(runtime)?;

        let a = &report.aggregates;
        let prefix = if multi {
            format!("seed {seed}: ")
        } else {
            String::new()
        };
        println!("{prefix}{}", aggregate_line(a));
        if cmd.literal_asr {
            println!(
                "asr_literal {:.6} (over all {} rows)",
                a.asr_literal, a.total
            );
        }
        println!("report: {}", path.display());
        per_seed.push(report.aggregates);
    }

    if multi {
        let n = per_seed.len() as f64;
        let mean = |f: fn(&Aggregates<f64>) -> f64| per_seed.iter().map(f).sum::<f64>() / n;
        println!(
            "mean over {} seeds: asr {:.6}  pert {:.6}  sim {:.6}  queries {:.6}",
            per_seed.len(),
            mean(|a| a.asr),
            mean(|a| a.mean_pert),
            mean(|a| a.mean_sim),
            mean(|a| a.mean_queries),
        );
    }
    Ok(())
}

fn aggregate_line(a: &Aggregates<f64>) -> String {
    format!(
        "asr {:.6}  pert {:.6}  sim {:.6}  queries {:.6}  successes {}/{}  skipped {}",
        a.asr, a.mean_pert, a.mean_sim, a.mean_queries, a.successes, a.attacked, a.skipped,
    )
}

fn seed_suffixed(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_seed{seed}{ext}"))
}

fn cmd_sweep(cmd: SweepCmd) -> Result<(), CliError> {
    let session = Session::open(&cmd.run)?;
    session.print_banner();

    let [kind, values] = cmd.sweep.as_slice() else {
        return Err(usage(
            "--sweep takes a kind (`budget` or `beam`) and a value list",
        ));
    };
    let values: Vec<u64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| usage(format!("bad sweep value `{v}`")))
        })
        .collect::<Result<_, _>>()?;
    let rows = session.rows_for(session.config.seed);

    let points: Vec<(u64, Aggregates<f64>)> = match kind.as_str() {
        "budget" => session
            .execute(|deps, parallel| {
                budget_sweep(
                    &values,
                    &rows,
                    &*session.victim,
                    &session.config,
                    deps,
                    parallel,
                )
                .map_err(classify_sweep_error)
            })?
            .into_iter()
            .map(|point| (point.budget, point.aggregates))
            .collect(),
        "beam" => {
            let mut points = Vec::with_capacity(values.len());
            for &beam in &values {
                let mut config = session.config.clone();
                config.beam_size = beam as usize;
                config.validate().map_err(|e| usage(e.to_string()))?;
                let outcomes = session.execute(|deps, parallel| {
                    run_attacks(&rows, &*session.victim, &config, deps, parallel)
                        .map_err(classify_attack_error)
                })?;
                points.push((beam, aggregate(&outcomes).map_err(runtime)?));
            }
            points
        }
        other => {
            return Err(usage(format!(
                "unknown sweep kind `{other}`; use `budget` or `beam`"
            )))
        }
    };

    println!(
        "{:>8}  {:>8}  {:>8}  {:>8}  {:>8}",
        kind, "asr", "pert", "sim", "queries"
    );
    for (value, a) in &points {
        println!(
            "{value:>8}  {:>8.6}  {:>8.6}  {:>8.6}  {:>8.6}",
            a.asr, a.mean_pert, a.mean_sim, a.mean_queries
        );
    }

    let doc = json!({
        "kind": kind,
        "config": session.config,
        "ranking_source": session.ranking,
        "sampling_rule": session.rule,
        "rows": points
            .iter()
            .map(|(value, a)| json!({ "value": value, "aggregates": a }))
            .collect::<Vec<_>>(),
    });
    let body = serde_json::to_string_pretty(&doc).map_err(runtime)?;
    std::fs::write(&cmd.out, body + "\n").map_err(runtime)?;
    println!("sweep table: {}", cmd.out.display());
    Ok(())
}

fn cmd_train_victim(cmd: TrainVictimCmd) -> Result<(), CliError> {
    if !cmd.alpha.is_finite() || cmd.alpha <= 0.0 {
        return Err(usage("--alpha must be a positive number"));
    }
    let rows = load_dataset(&cmd.dataset).map_err(classify_dataset_error)?;
    let victim = train_naive_bayes(&rows, cmd.alpha).map_err(|e| match e {
        TrainError::EmptyCorpus | TrainError::DegenerateCorpus(_) => usage(e.to_string()),
    })?;

    let correct = rows
        .iter()
        .filter(|(text, label)| {
            victim
                .predict(text)
                .map(|p| p.same_class(label))
                .unwrap_or(false)
        })
        .count();
    let body = serde_json::to_string_pretty(&victim).map_err(runtime)?;
    std::fs::write(&cmd.out, body + "\n").map_err(runtime)?;

    println!(
        "trained {}-class model on {} rows, training accuracy {:.6}",
        victim.num_classes(),
        rows.len(),
        correct as f64 / rows.len() as f64,
    );
    println!("model: {}", cmd.out.display());
    Ok(())
}

fn load_victim(spec: &str, classes: usize) -> Result<Box<dyn HardLabelOracle>, CliError> {
    if let Some(path) = spec.strip_prefix("lexicon:") {
        let raw = std::fs::read_to_string(path).map_err(runtime)?;
        let victim: LexiconVictim = serde_json::from_str(&raw)
            .map_err(|e| usage(format!("bad lexicon model file {path}: {e}")))?;
        return Ok(Box::new(victim));
    }
    if let Some(path) = spec.strip_prefix("nb:") {
        let raw = std::fs::read_to_string(path).map_err(runtime)?;
        let victim: NaiveBayesVictim = serde_json::from_str(&raw)
            .map_err(|e| usage(format!("bad naive Bayes model file {path}: {e}")))?;
        return Ok(Box::new(victim));
    }
    if let Some(url) = spec.strip_prefix("remote:") {
        return Ok(Box::new(RemoteVictim::new(url, classes)));
    }
    if spec == "remote" {
        let url = std::env::var("VICTIM_ENDPOINT").map_err(|_| {
            usage("victim spec `remote` needs $VICTIM_ENDPOINT or an explicit remote:URL")
        })?;
        return Ok(Box::new(RemoteVictim::new(url, classes)));
    }
    Err(usage(format!(
        "unknown victim spec `{spec}`; use lexicon:PATH, nb:PATH, or remote[:URL]"
    )))
}

fn classify_dataset_error(e: DatasetError) -> CliError {
    match e {
        DatasetError::Io(e) => runtime(e),
        other => usage(other.to_string()),
    }
}

fn classify_store_error(e: StoreError) -> CliError {
    match e {
        StoreError::Io(e) => runtime(e),
        other => usage(other.to_string()),
    }
}

fn classify_attack_error(e: AttackError) -> CliError {
    match e {
        AttackError::ScoreUnavailable => usage(
            "--ranking deletion needs a victim that exposes class probabilities; \
             remote victims expose labels only",
        ),
        other => runtime(other),
    }
}

fn classify_sweep_error(e: SweepError) -> CliError {
    match e {
        SweepError::BadBudgets => usage(e.to_string()),
        SweepError::Config(e) => usage(e.to_string()),
        SweepError::Attack(e) => classify_attack_error(e),
        SweepError::Metrics(e) => runtime(e),
    }
}

fn cap_label(cap: SurrogateQueryCap) -> String {
    match cap {
        SurrogateQueryCap::Auto => "auto".to_string(),
        SurrogateQueryCap::Fixed(c) => c.to_string(),
    }
}

fn distance_label(distance: KernelDistance) -> &'static str {
    match distance {
        KernelDistance::Cosine => "cosine",
        KernelDistance::OneMinusCosine => "one-minus-cosine",
    }
}

fn ranking_label(ranking: RankingSource) -> &'static str {
    match ranking {
        RankingSource::Lime => "lime",
        RankingSource::Random => "random",
        RankingSource::Deletion => "deletion",
    }
}

fn rule_label(rule: SamplingRule) -> &'static str {
    match rule {
        SamplingRule::Stratified => "stratified",
        SamplingRule::Top => "top",
        SamplingRule::Bottom => "bottom",
        SamplingRule::Random => "random",
    }
}
