mod config;
mod run;

use clap::{ArgGroup, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use lscd_core::align::align_spaces;
use lscd_core::corpus::{build_vocabulary, read_usages, Corpus, FilterConfig, WordlistDetector};
use lscd_core::discovery::{
    discover, full_population, grade_population, read_labels, read_scores, sample_population, tune_threshold,
    write_labels, write_scores, ChangeBackend, DiscoveryConfig, GradedRanking, Measure, Population,
    PopulationSource, PopulationSpec, ThresholdSpec, TokenBackend, TokenMeasure, TypeBackend,
};
use lscd_core::metrics::{f_beta, precision_recall_fbeta, spearman_rho};
use lscd_core::static_embed::{train_sgns, SgnsConfig, VectorSpace};
use lscd_core::token_embed::ApdMode;
use lscd_core::wug::{self, change_labels, cluster_wug, layout, normalized_loss, SolverConfig, Wug};
use lscd_core::Period;
use run::Run;
use serde::Serialize;
use serde_json::json;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lscd_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config file: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_owned(), source }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Core(lscd_core::Error::Io { .. }) | CliError::Io { .. } => "io",
            CliError::Core(lscd_core::Error::Parse { .. } | lscd_core::Error::EmptyFile(_)) => "bad_input_file",
            CliError::Core(lscd_core::Error::Undefined(_)) => "undefined",
            CliError::Core(_) => "invalid_input",
            CliError::Config(_) => "config",
            CliError::Invalid(_) => "invalid_arguments",
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

/// Lexical semantic change discovery: train, align, grade, tune, discover, and validate.
#[derive(Parser)]
#[command(name = "lscd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train SGNS vectors on one corpus.
    Train(TrainArgs),
    /// Align two vector spaces with Orthogonal Procrustes and score shared words.
    Align(AlignArgs),
    /// Grade a population by change score.
    Grade(GradeArgs),
    /// Grid-search t against gold labels.
    Tune(TuneArgs),
    /// Full pipeline: population, grading, binarization, filtering.
    Discover(DiscoverArgs),
    /// Cluster a Word Usage Graph.
    Cluster(ClusterArgs),
    /// Binary and graded change labels from a clustered WUG.
    Label(LabelArgs),
    /// Spearman, precision, recall and F0.5.
    Evaluate(EvaluateArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
    /// Draw a frequency-stratified population.
    SamplePopulation(SamplePopulationArgs),
}

#[derive(Args, Serialize)]
struct SgnsArgs {
    /// Maximum context window.
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Vector dimensionality.
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    /// Negative samples per positive pair.
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    /// Subsampling threshold.
    #[arg(long, default_value_t = 0.001)]
    subsample: f64,
    /// Disable subsampling of frequent words.
    #[arg(long)]
    no_subsample: bool,
    #[arg(long, default_value_t = 39)]
    min_count: usize,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f64,
    /// Training threads; 1 is bit-reproducible.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl SgnsArgs {
    fn config(&self, seed: u64) -> SgnsConfig {
        SgnsConfig {
            window: self.window,
            dim: self.dim,
            epochs: self.epochs,
            negatives: self.negatives,
            subsample: (!self.no_subsample).then_some(self.subsample),
            min_count: self.min_count,
            learning_rate: self.learning_rate,
            seed,
            workers: self.workers,
        }
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// 1 or 2.
    #[arg(long)]
    period: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    sgns: SgnsArgs,
}

#[derive(Args, Serialize)]
struct AlignArgs {
    #[arg(long)]
    space1: PathBuf,
    #[arg(long)]
    space2: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum MeasureArg {
    Cd,
    Apd,
    Cos,
}

#[derive(Args, Serialize)]
struct ScoringArgs {
    #[arg(long, value_enum, default_value = "cd")]
    measure: MeasureArg,
    /// Aligned or unaligned C1 vectors (cd).
    #[arg(long)]
    space1: Option<PathBuf>,
    #[arg(long)]
    space2: Option<PathBuf>,
    /// Directory of `*.vec` usage-vector files (apd, cos).
    #[arg(long)]
    usage_vectors: Option<PathBuf>,
    /// Sample this many pairs for APD instead of the full cross product.
    #[arg(long)]
    apd_pairs: Option<usize>,
}

#[derive(Args, Serialize)]
struct PopulationArgs {
    /// Stratified population size.
    #[arg(long, default_value_t = 500)]
    population: usize,
    /// Use the whole shared vocabulary instead of a sample.
    #[arg(long)]
    full_vocabulary: bool,
    /// Lemmas (one per line) never drawn into the population.
    #[arg(long)]
    exclude: Option<PathBuf>,
}

impl PopulationArgs {
    fn spec(&self) -> PopulationSpec {
        if self.full_vocabulary {
            PopulationSpec::FullVocabulary
        } else {
            PopulationSpec::Sample { size: self.population }
        }
    }
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["corpus1", "targets"])))]
struct GradeArgs {
    #[arg(long, requires = "corpus2")]
    corpus1: Option<PathBuf>,
    #[arg(long, requires = "corpus1")]
    corpus2: Option<PathBuf>,
    /// Grade exactly these lemmas (one per line) instead of a corpus population.
    #[arg(long, conflicts_with_all = ["corpus1", "corpus2"])]
    targets: Option<PathBuf>,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct TuneArgs {
    /// `lemma<TAB>score` file.
    #[arg(long)]
    scores: PathBuf,
    /// `lemma<TAB>0|1` file.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct DiscoverArgs {
    #[arg(long)]
    corpus1: PathBuf,
    #[arg(long)]
    corpus2: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[command(flatten)]
    population: PopulationArgs,
    /// Fixed threshold parameter.
    #[arg(long, conflicts_with = "gold", allow_hyphen_values = true)]
    t: Option<f64>,
    /// Tune t on these gold labels.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Skip filtering of positives.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    no_pos_filter: bool,
    #[arg(long)]
    no_usage_filter: bool,
    /// Known-word list for language detection of usages.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Usages per period inspected by the filter.
    #[arg(long, default_value_t = 100)]
    filter_usages: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    sgns: SgnsArgs,
}

#[derive(Args, Serialize)]
struct SolverArgs {
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Largest component solved exhaustively.
    #[arg(long, default_value_t = 10)]
    exact_limit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { exact_limit: self.exact_limit, restarts: self.restarts, seed: self.seed, ..SolverConfig::default() }
    }
}

#[derive(Args, Serialize)]
struct WugArgs {
    #[arg(long)]
    uses: PathBuf,
    #[arg(long)]
    judgments: PathBuf,
    /// Lemma; defaults to the lemma of the first usage.
    #[arg(long)]
    lemma: Option<String>,
}

#[derive(Args, Serialize)]
struct ClusterArgs {
    #[command(flatten)]
    wug: WugArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct LabelArgs {
    #[command(flatten)]
    wug: WugArgs,
    /// Existing clustering; clustered from scratch when absent.
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
#[command(group(ArgGroup::new("input").required(true).multiple(true).args(["pr", "predictions", "scores"])))]
struct EvaluateArgs {
    /// Precision/recall pair `P,R` or `NAME=P,R`; values may be fractions like `18/27`. Repeatable.
    #[arg(long)]
    pr: Vec<String>,
    /// Binary predictions `lemma<TAB>0|1`.
    #[arg(long, requires = "gold")]
    predictions: Option<PathBuf>,
    /// Binary gold labels.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Graded predictions `lemma<TAB>score`.
    #[arg(long, requires = "graded_gold")]
    scores: Option<PathBuf>,
    /// Graded gold scores.
    #[arg(long)]
    graded_gold: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Also write evaluation.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Project snapshots and judgment logs.
    #[arg(long)]
    data_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct SamplePopulationArgs {
    #[arg(long)]
    corpus1: PathBuf,
    #[arg(long)]
    corpus2: PathBuf,
    #[command(flatten)]
    population: PopulationArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn to_json(args: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

fn tsv(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    buf
}

fn read_lines(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
}

fn load_corpora(p1: &Path, p2: &Path) -> Result<(Corpus, Corpus)> {
    Ok((Corpus::load(p1, Period::C1)?, Corpus::load(p2, Period::C2)?))
}

/// An alignment for CD or a token backend.
enum Backend {
    Type(lscd_core::align::AlignedPair),
    Token(TokenBackend),
}

impl Backend {
    fn with<R>(&self, f: impl FnOnce(&dyn ChangeBackend) -> R) -> R {
        match self {
            Backend::Type(pair) => f(&TypeBackend { pair }),
            Backend::Token(t) => f(t),
        }
    }
}

fn token_backend(scoring: &ScoringArgs, seed: u64) -> Result<TokenBackend> {
    let dir = scoring
        .usage_vectors
        .as_ref()
        .ok_or_else(|| CliError::Invalid("--usage-vectors is required for apd and cos".into()))?;
    let measure = match scoring.measure {
        MeasureArg::Apd => TokenMeasure::Apd(match scoring.apd_pairs {
            Some(pairs) => ApdMode::Sampled { pairs, seed },
            None => ApdMode::Full,
        }),
        _ => TokenMeasure::Cos,
    };
    Ok(TokenBackend::load_dir(measure, dir)?)
}

/// Build the scoring backend; for CD without vector files, train both spaces into the run.
fn backend(
    scoring: &ScoringArgs,
    corpora: Option<(&Corpus, &Corpus)>,
    sgns: Option<&SgnsArgs>,
    seed: u64,
    run: &mut Run,
) -> Result<Backend> {
    match scoring.measure {
        MeasureArg::Cd => {
            let (s1, s2) = match (&scoring.space1, &scoring.space2, corpora, sgns) {
                (Some(a), Some(b), _, _) => (VectorSpace::load(a)?, VectorSpace::load(b)?),
                (None, None, Some((c1, c2)), Some(sgns)) => {
                    let cfg = sgns.config(seed);
                    run.seed("sgns", seed);
                    let s1 = train_sgns(c1, &cfg)?.with_meta(Some(cfg.clone()), Some(Period::C1));
                    let s2 = train_sgns(c2, &cfg)?.with_meta(Some(cfg), Some(Period::C2));
                    s1.save(run.output("vectors_c1.txt"))?;
                    s2.save(run.output("vectors_c2.txt"))?;
                    (s1, s2)
                }
                _ => return Err(CliError::Invalid("cd needs --space1 and --space2".into())),
            };
            Ok(Backend::Type(align_spaces(&s1, &s2)?))
        }
        MeasureArg::Apd | MeasureArg::Cos => Ok(Backend::Token(token_backend(scoring, seed)?)),
    }
}

fn population_from(vocab_corpora: (&Corpus, &Corpus), args: &PopulationArgs, seed: u64) -> Result<Population> {
    let vocab = build_vocabulary(vocab_corpora.0, vocab_corpora.1);
    let exclude = match &args.exclude {
        Some(p) => read_lines(p)?,
        None => BTreeSet::new(),
    };
    Ok(match args.spec() {
        PopulationSpec::FullVocabulary => full_population(&vocab, &exclude),
        PopulationSpec::Sample { size } => sample_population(&vocab, size, &exclude, seed)?,
    })
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let period: Period = a.period.parse()?;
    let mut run = Run::open(&a.out_dir, "train", to_json(&a))?;
    run.seed("sgns", a.seed);
    let corpus = Corpus::load(&a.corpus, period)?;
    let cfg = a.sgns.config(a.seed);
    let space = train_sgns(&corpus, &cfg)?.with_meta(Some(cfg), Some(period));
    space.save(run.output("vectors.txt"))?;
    println!("trained {} vectors of dimension {}", space.len(), space.dim());
    run.finish()
}

fn cmd_align(a: AlignArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "align", to_json(&a))?;
    let pair = align_spaces(&VectorSpace::load(&a.space1)?, &VectorSpace::load(&a.space2)?)?;
    pair.space1.save(run.output("aligned_c1.txt"))?;
    pair.space2.save(run.output("aligned_c2.txt"))?;
    let mut scores = Vec::new();
    for w in &pair.shared_words {
        if let Some(d) = pair.distance(w) {
            scores.push((w.as_str(), d?));
        }
    }
    scores.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(y.0)));
    run.write("distances.tsv", tsv(|b| write_scores(b, scores.iter().copied())))?;
    let summary = json!({
        "shared_words": pair.shared_words.len(),
        "mean_distance": pair.mean_shared_distance()?,
        "orthogonality_defect": pair.orthogonality_defect(),
    });
    run.write("alignment.json", serde_json::to_string_pretty(&summary).expect("json"))?;
    println!("{summary}");
    run.finish()
}

fn write_graded(run: &mut Run, ranking: &GradedRanking, skipped: &BTreeMap<String, String>) -> Result<()> {
    run.write("graded.tsv", tsv(|b| write_scores(b, ranking.ranked())))?;
    run.write(
        "skipped.tsv",
        tsv(|b| {
            use std::io::Write;
            skipped.iter().try_for_each(|(l, r)| writeln!(b, "{l}\t{r}"))
        }),
    )?;
    Ok(())
}

fn cmd_grade(a: GradeArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "grade", to_json(&a))?;
    run.seed("population", a.seed);
    let corpora = match (&a.corpus1, &a.corpus2) {
        (Some(p1), Some(p2)) => Some(load_corpora(p1, p2)?),
        _ => None,
    };
    let population = match (&corpora, &a.targets) {
        (Some((c1, c2)), _) => population_from((c1, c2), &a.population, a.seed)?,
        (None, Some(t)) => Population {
            lemmas: read_lines(t)?.into_iter().collect(),
            source: PopulationSource::FullVocabulary,
            seed: a.seed,
            excluded: BTreeSet::new(),
            areas: Vec::new(),
        },
        (None, None) => unreachable!("clap requires a source"),
    };
    let backend = backend(&a.scoring, None, None, a.seed, &mut run)?;
    let graded = backend.with(|b| grade_population(&population, b))?;
    let skipped: BTreeMap<String, String> = graded.skipped.iter().map(|(l, r)| (l.clone(), r.to_string())).collect();
    write_graded(&mut run, &graded.ranking, &skipped)?;
    run.write("population.json", serde_json::to_string_pretty(&population).expect("json"))?;
    println!("graded {} lemmas, skipped {}", graded.ranking.len(), skipped.len());
    run.finish()
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "tune", to_json(&a))?;
    let ranking = GradedRanking::new(read_scores(&a.scores)?, Measure::Cd)?;
    let gold = read_labels(&a.gold)?;
    let ranking = ranking.restricted_to(gold.keys());
    let tuning = tune_threshold(&ranking, &gold)?;
    let mut table = String::from("t\tprecision\trecall\tf05\tpositives\n");
    for p in &tuning.grid {
        table.push_str(&format!("{:.1}\t{:.3}\t{:.3}\t{:.3}\t{}\n", p.t, p.precision, p.recall, p.f05, p.positives));
    }
    print!("{table}");
    println!("best t={:.1} F0.5={:.3}", tuning.t_best, tuning.f05);
    run.write("tuning.tsv", &table)?;
    run.write("tuning.json", serde_json::to_string_pretty(&tuning).expect("json"))?;
    run.finish()
}

fn cmd_discover(a: DiscoverArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "discover", to_json(&a))?;
    run.seed("population", a.seed);
    let (c1, c2) = load_corpora(&a.corpus1, &a.corpus2)?;
    let threshold = match (&a.t, &a.gold) {
        (_, Some(g)) => ThresholdSpec::Tune(read_labels(g)?),
        (Some(t), None) => ThresholdSpec::Fixed(*t),
        (None, None) => ThresholdSpec::Fixed(1.0),
    };
    let mut filter = FilterConfig::default();
    filter.pos_rule = !(a.no_filter || a.no_pos_filter);
    filter.usage_rule = !(a.no_filter || a.no_usage_filter);
    if let Some(p) = &a.wordlist {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        filter.detector = Arc::new(WordlistDetector::from_text(&text));
    }
    let config = DiscoveryConfig {
        population: a.population.spec(),
        exclude: match &a.population.exclude {
            Some(p) => read_lines(p)?,
            None => BTreeSet::new(),
        },
        seed: a.seed,
        threshold,
        filter,
        filter_usages: a.filter_usages,
    };
    let backend = backend(&a.scoring, Some((&c1, &c2)), Some(&a.sgns), a.seed, &mut run)?;
    let report = backend.with(|b| discover(&c1, &c2, b, &config))?;
    let path = run.output("discovery.tsv");
    report.write_tsv(&path)?;
    run.write("population.json", serde_json::to_string_pretty(&report.population).expect("json"))?;
    if let Some(p) = &report.prediction {
        run.write("labels.tsv", tsv(|b| write_labels(b, &p.labels)))?;
        println!("t={:.2} threshold={:.6} positives={}", p.t, p.threshold, p.positives().count());
    }
    if let Some(t) = &report.tuning {
        run.write("tuning.json", serde_json::to_string_pretty(t).expect("json"))?;
    }
    let survivors: Vec<&str> = report.survivors().map(|r| r.lemma.as_str()).collect();
    run.write("survivors.txt", survivors.iter().map(|s| format!("{s}\n")).collect::<String>())?;
    println!("{} candidates survive filtering", survivors.len());
    run.finish()
}

fn load_wug(a: &WugArgs) -> Result<Wug> {
    let nodes = read_usages(&a.uses)?;
    let file = std::fs::File::open(&a.judgments).map_err(|e| CliError::io(&a.judgments, e))?;
    let judgments = wug::read_judgments(file)?;
    let lemma = match &a.lemma {
        Some(l) => l.clone(),
        None => nodes.first().map(|n| n.lemma.clone()).ok_or_else(|| CliError::Invalid("no usages".into()))?,
    };
    let nodes = nodes.into_iter().filter(|n| n.lemma == lemma).collect();
    Ok(Wug::from_parts(lemma, nodes, judgments)?)
}

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "cluster", to_json(&a))?;
    run.seed("solver", a.solver.seed);
    let wug = load_wug(&a.wug)?;
    let (clustering, loss) = cluster_wug(&wug, &a.solver.config());
    run.write("clusters.tsv", tsv(|b| wug::write_clusters(b, &clustering).map_err(std::io::Error::other)))?;
    let l = layout(&wug, Some(&clustering), a.solver.seed);
    run.write("layout.json", serde_json::to_string_pretty(&l).expect("json"))?;
    let clusters = clustering.values().collect::<BTreeSet<_>>().len();
    let summary = json!({
        "lemma": wug.lemma,
        "loss": loss,
        "normalized_loss": normalized_loss(&wug, &clustering),
        "clusters": clusters,
        "excluded": wug.excluded,
    });
    run.write("cluster.json", serde_json::to_string_pretty(&summary).expect("json"))?;
    println!("{summary}");
    run.finish()
}

fn cmd_label(a: LabelArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "label", to_json(&a))?;
    let wug = load_wug(&a.wug)?;
    let clustering = match &a.clusters {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| CliError::io(p, e))?;
            wug::read_clusters(file)?
        }
        None => {
            run.seed("solver", a.solver.seed);
            let (c, _) = cluster_wug(&wug, &a.solver.config());
            run.write("clusters.tsv", tsv(|b| wug::write_clusters(b, &c).map_err(std::io::Error::other)))?;
            c
        }
    };
    let change = change_labels(&wug, &clustering)?;
    run.write("change.json", serde_json::to_string_pretty(&change).expect("json"))?;
    println!("{}\tbinary={}\tgraded={:.4}", wug.lemma, u8::from(change.binary), change.graded);
    run.finish()
}

#[derive(Serialize)]
struct EvalRow {
    name: String,
    rho: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    f_beta: Option<f64>,
}

fn parse_pr(s: &str, i: usize) -> Result<EvalRow> {
    let (name, values) = match s.rsplit_once('=') {
        Some((n, v)) => (n.to_owned(), v),
        None => (format!("row {}", i + 1), s),
    };
    let parts: Vec<&str> = values.split(',').collect();
    let [p, r] = parts.as_slice() else {
        return Err(CliError::Invalid(format!("--pr expects P,R, got `{s}`")));
    };
    let parse = |x: &str| {
        let x = x.trim();
        let value = match x.split_once('/') {
            Some((num, den)) => num.parse::<f64>().ok().zip(den.parse::<f64>().ok()).map(|(a, b)| a / b),
            None => x.parse::<f64>().ok(),
        };
        value
            .filter(|v| (0.0..=1.0).contains(v))
            .ok_or_else(|| CliError::Invalid(format!("`{x}` is not a value in [0, 1]")))
    };
    let (p, r) = (parse(p)?, parse(r)?);
    Ok(EvalRow { name, rho: None, precision: Some(p), recall: Some(r), f_beta: None })
}

/// Three decimals without the leading zero, as in published tables.
fn fmt3(x: Option<f64>) -> String {
    match x {
        None => "-".into(),
        Some(v) => {
            let s = format!("{v:.3}");
            match s.strip_prefix("0.") {
                Some(rest) => format!(".{rest}"),
                None => match s.strip_prefix("-0.") {
                    Some(rest) => format!("-.{rest}"),
                    None => s,
                },
            }
        }
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut rows: Vec<EvalRow> = a.pr.iter().enumerate().map(|(i, s)| parse_pr(s, i)).collect::<Result<_>>()?;
    for r in &mut rows {
        r.f_beta = Some(f_beta(r.precision.unwrap_or(0.0), r.recall.unwrap_or(0.0), a.beta));
    }
    if a.predictions.is_some() || a.scores.is_some() {
        let mut row = EvalRow { name: "predictions".into(), rho: None, precision: None, recall: None, f_beta: None };
        if let (Some(p), Some(g)) = (&a.predictions, &a.gold) {
            let e = precision_recall_fbeta(&read_labels(p)?, &read_labels(g)?, a.beta)?;
            row.precision = Some(e.precision);
            row.recall = Some(e.recall);
            row.f_beta = Some(e.f_beta);
        }
        if let (Some(s), Some(g)) = (&a.scores, &a.graded_gold) {
            let (pred, gold) = (read_scores(s)?, read_scores(g)?);
            let common: Vec<&String> = pred.keys().filter(|k| gold.contains_key(*k)).collect();
            let x: Vec<f64> = common.iter().map(|k| pred[*k]).collect();
            let y: Vec<f64> = common.iter().map(|k| gold[*k]).collect();
            row.rho = Some(spearman_rho(&x, &y)?);
        }
        rows.push(row);
    }
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
    let fcol = format!("F{}", a.beta);
    println!("{:<width$}  {:>5}  {:>5}  {:>5}  {:>5}", "", "ρ", "P", "R", fcol);
    for r in &rows {
        println!(
            "{:<width$}  {:>5}  {:>5}  {:>5}  {:>5}",
            r.name,
            fmt3(r.rho),
            fmt3(r.precision),
            fmt3(r.recall),
            fmt3(r.f_beta)
        );
    }
    if let Some(dir) = &a.out_dir {
        let mut run = Run::open(dir, "evaluate", to_json(&a))?;
        run.write("evaluation.json", serde_json::to_string_pretty(&rows).expect("json"))?;
        run.finish()?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let addr = std::net::SocketAddr::new(a.host, a.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Invalid(e.to_string()))?;
    eprintln!("serving annotation projects from {} on http://{addr}", a.data_dir.display());
    rt.block_on(lscd_service::serve(addr, a.data_dir.clone())).map_err(|e| CliError::io(&a.data_dir, e))
}

fn cmd_sample_population(a: SamplePopulationArgs) -> Result<()> {
    let mut run = Run::open(&a.out_dir, "sample-population", to_json(&a))?;
    run.seed("population", a.seed);
    let (c1, c2) = load_corpora(&a.corpus1, &a.corpus2)?;
    let vocab = build_vocabulary(&c1, &c2);
    let population = population_from((&c1, &c2), &a.population, a.seed)?;
    let mut table = String::from("lemma\tfreq_c1\tfreq_c2\n");
    for l in &population.lemmas {
        let e = vocab.get(l).expect("population lemma in vocabulary");
        table.push_str(&format!("{l}\t{}\t{}\n", e.freq_c1, e.freq_c2));
    }
    run.write("population.tsv", table)?;
    run.write("population.json", serde_json::to_string_pretty(&population).expect("json"))?;
    for (i, area) in population.areas.iter().enumerate() {
        println!("area {}: [{:.0}, {:.0}] eligible={} drawn={}", i + 1, area.lower, area.upper, area.eligible, area.drawn);
    }
    run.finish()
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Align(a) => cmd_align(a),
        Command::Grade(a) => cmd_grade(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Discover(a) => cmd_discover(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Label(a) => cmd_label(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Serve(a) => cmd_serve(a),
        Command::SamplePopulation(a) => cmd_sample_population(a),
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("{}", json!({ "error": { "code": e.code(), "message": e.to_string() } }));
    std::process::exit(1)
}

fn main() {
    let args = config::expand(std::env::args_os().collect()).unwrap_or_else(|e| fail(e));
    let command = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let matches = command.get_matches_from(args);
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    if let Err(e) = dispatch(cli.command) {
        fail(e);
    }
}
