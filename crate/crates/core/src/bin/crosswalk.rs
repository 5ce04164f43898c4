use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crosswalk::config::{ExperimentConfig, REAL_IC_PROB};
use crosswalk::diffusion::{kmedoids_seeds, InfluenceEstimate, SeedSet};
use crosswalk::embedding::{load_embedding, save_embedding, train_sgns, SgnsParams};
use crosswalk::experiment::{self, salt, stage_seed, Dataset};
use crosswalk::graph::{
    load_edge_list, load_edge_list_with_ids, load_groups, save_edge_list, save_groups,
    sbm_generate, IdMap, LoadedGraph, SbmSpec,
};
use crosswalk::metrics::{disparity, influence_fractions};
use crosswalk::reweight::{
    crosswalk_reweight, estimate_proximity, fairwalk_reweight, identity_reweight, save_proximity,
    Method, ReweightParams,
};
use crosswalk::tasks::{link_type_name, GroupEvaluation, LabelPropParams};
use crosswalk::walker::{generate_walks, load_corpus, save_corpus, WalkMode, WalkParams};

#[derive(Parser)]
#[command(
    name = "crosswalk",
    version,
    about = "Fairness-enhancing reweighting for random-walk node embeddings"
)]
struct Cli {
    /// Master seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Single-threaded, bit-reproducible embedding training.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a stochastic block model graph.
    Synth(SynthArgs),
    /// Reweight a graph's arcs for a walk method.
    Reweight(ReweightArgs),
    /// Sample random walks.
    Walk(WalkArgs),
    /// Train skip-gram embeddings on a walk corpus.
    Embed(EmbedArgs),
    /// Influence maximization by k-medoids over an embedding.
    Im(ImArgs),
    /// Greedy influence maximization, optionally with scaled probabilities.
    ImGreedy(ImGreedyArgs),
    /// Label propagation over an embedding's k-NN graph.
    Classify(ClassifyArgs),
    /// Link prediction: split, embed the reduced graph, logistic regression.
    Linkpred(LinkpredArgs),
    /// Run the configured methods and tasks over several seeds.
    Experiment(ExperimentArgs),
    /// Sweep alpha and p over k = 1..k_max.
    Sweep(ExperimentArgs),
    /// Configuration helpers.
    Config(ConfigArgs),
}

#[derive(Args)]
struct GraphInput {
    /// Edge list, `u v [w]` per line.
    #[arg(long)]
    edges: PathBuf,
    /// Treat edges without a direction pragma as directed arcs.
    #[arg(long)]
    directed: bool,
}

impl GraphInput {
    fn load(&self) -> Result<LoadedGraph> {
        load_edge_list(&self.edges, !self.directed)
            .with_context(|| format!("loading {}", self.edges.display()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    TwoGroup,
    ThreeGroup,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "two-group")]
    preset: Preset,
    /// Intra-group probability of group B in the two-group preset.
    #[arg(long, default_value_t = 0.05)]
    intra_b: f64,
    /// Custom group sizes, overriding the preset.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', requires = "sizes")]
    intra: Option<Vec<f64>>,
    /// One probability per unordered group pair: (0,1), (0,2), ..., (1,2), ...
    #[arg(long, value_delimiter = ',', requires = "sizes")]
    inter: Option<Vec<f64>>,
    #[arg(long)]
    out_edges: PathBuf,
    #[arg(long)]
    out_groups: PathBuf,
}

#[derive(Args)]
struct ReweightArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long, default_value = "crosswalk")]
    method: Method,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long = "p", default_value_t = 2.0)]
    p_exponent: f64,
    /// Proximity walks per node.
    #[arg(long, default_value_t = 1000)]
    walks_r: usize,
    /// Steps per proximity walk.
    #[arg(long, default_value_t = 5)]
    depth_d: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    proximity_out: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long, default_value_t = 20)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 40)]
    walk_length: usize,
    #[arg(long, default_value = "first_order")]
    mode: WalkMode,
    #[arg(long, default_value_t = 1.0)]
    return_param: f64,
    #[arg(long, default_value_t = 1.0)]
    inout_param: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Graph the corpus was sampled from; fixes the node set.
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalInput {
    /// Original (unweighted by any method) graph used for evaluation.
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long)]
    groups: PathBuf,
    /// Label written to the method column [default: the method for
    /// linkpred, otherwise "unspecified"].
    #[arg(long)]
    label: Option<String>,
    /// Report CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalInput {
    fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("unspecified")
    }

    fn load(&self) -> Result<Dataset> {
        let loaded = self.graph.load()?;
        let groups = load_groups(&self.groups, &loaded.ids)?;
        Ok(Dataset {
            graph: loaded.graph,
            classes: groups.clone(),
            groups,
            ids: loaded.ids,
        })
    }
}

#[derive(Args)]
struct ImArgs {
    #[command(flatten)]
    input: EvalInput,
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long, default_value_t = 40)]
    k: usize,
    /// Constant IC probability on the original graph.
    #[arg(long, default_value_t = REAL_IC_PROB)]
    ic_prob: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
}

#[derive(Args)]
struct ImGreedyArgs {
    #[command(flatten)]
    input: EvalInput,
    /// Reweighted graph whose weights scale the transmission probabilities.
    #[arg(long)]
    reweighted: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    k: usize,
    #[arg(long, default_value_t = REAL_IC_PROB)]
    ic_prob: f64,
    /// Live-edge samples used during selection.
    #[arg(long, default_value_t = 200)]
    mc_samples: usize,
    /// Cascades used for the final evaluation.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: EvalInput,
    #[arg(long)]
    embedding: PathBuf,
    /// Class labels; defaults to the group labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    knn_k: usize,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

#[derive(Args)]
struct LinkpredArgs {
    #[command(flatten)]
    input: EvalInput,
    #[arg(long, default_value = "crosswalk")]
    method: Method,
    /// Walk, embedding, reweighting and task settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides experiment.output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Print every configuration key with its default value.
    #[arg(long)]
    print_defaults: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = cli.seed.unwrap_or(0);
    let deterministic = cli.deterministic;
    match cli.command {
        Command::Synth(a) => synth(a, seed),
        Command::Reweight(a) => reweight(a, seed),
        Command::Walk(a) => walk(a, seed),
        Command::Embed(a) => embed(a, seed, deterministic),
        Command::Im(a) => im(a, seed),
        Command::ImGreedy(a) => im_greedy(a, seed),
        Command::Classify(a) => classify(a, seed),
        Command::Linkpred(a) => linkpred(a, cli.seed, deterministic),
        Command::Experiment(a) => {
            let cfg = experiment_config(&a, cli.seed, deterministic)?;
            let out = experiment::run_experiment(&cfg)?;
            eprintln!("{} rows -> {}", out.rows.len(), out.runs_csv.display());
            eprintln!("summary -> {}", out.summary_csv.display());
            Ok(())
        }
        Command::Sweep(a) => {
            let cfg = experiment_config(&a, cli.seed, deterministic)?;
            let out = experiment::run_sweep(&cfg)?;
            eprintln!("{} rows -> {}", out.rows.len(), out.runs_csv.display());
            eprintln!("summary -> {}", out.summary_csv.display());
            Ok(())
        }
        Command::Config(a) => {
            if !a.print_defaults {
                bail!("nothing to do; try `config --print-defaults`");
            }
            print!("{}", ExperimentConfig::defaults_toml());
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn experiment_config(
    a: &ExperimentArgs,
    seed: Option<u64>,
    deterministic: bool,
) -> Result<ExperimentConfig> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = seed {
        cfg.experiment.master_seed = s;
    }
    if let Some(dir) = &a.output_dir {
        cfg.experiment.output_dir = dir.clone();
    }
    cfg.embedding.deterministic |= deterministic;
    Ok(cfg)
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let spec = match a.sizes {
        Some(sizes) => SbmSpec {
            intra_probs: a.intra.context("--sizes needs --intra")?,
            inter_probs: a.inter.context("--sizes needs --inter")?,
            group_sizes: sizes,
            rng_seed: seed,
        },
        None => match a.preset {
            Preset::TwoGroup => SbmSpec::two_group(a.intra_b, seed),
            Preset::ThreeGroup => SbmSpec::three_group(seed),
        },
    };
    let (graph, groups) = sbm_generate(&spec).context("stage 'synth' failed")?;
    let ids = IdMap::numeric(graph.node_count());
    save_edge_list(&graph, &ids, &a.out_edges)?;
    save_groups(&groups, &ids, &a.out_groups)?;
    eprintln!(
        "{} nodes, {} edges, group sizes {:?}",
        graph.node_count(),
        graph.arc_count() / 2,
        groups.sizes()
    );
    Ok(())
}

fn reweight(a: ReweightArgs, seed: u64) -> Result<()> {
    let loaded = a.graph.load()?;
    let groups = load_groups(&a.groups, &loaded.ids)?;
    let params = ReweightParams {
        alpha: a.alpha,
        p_exponent: a.p_exponent,
        walk_count_r: a.walks_r,
        walk_length_d: a.depth_d,
        rng_seed: stage_seed(seed, salt::PROXIMITY),
    };
    let stage = || -> crosswalk::Result<_> {
        Ok(match a.method {
            Method::DeepWalk => (identity_reweight(&loaded.graph), None),
            Method::FairWalk => (fairwalk_reweight(&loaded.graph, &groups)?, None),
            Method::CrossWalk => {
                let prox = estimate_proximity(&loaded.graph, &groups, &params)?;
                let g = crosswalk_reweight(&loaded.graph, &groups, &prox, &params)?;
                (g, Some(prox))
            }
        })
    };
    let (graph, prox) = stage().context("stage 'reweight' failed")?;
    save_edge_list(&graph, &loaded.ids, &a.out)?;
    match (prox, &a.proximity_out) {
        (Some(p), Some(path)) => save_proximity(&p, &loaded.ids, path)?,
        (None, Some(_)) => bail!("--proximity-out is only produced by crosswalk"),
        _ => {}
    }
    Ok(())
}

fn walk(a: WalkArgs, seed: u64) -> Result<()> {
    let loaded = a.graph.load()?;
    let params = WalkParams {
        walks_per_node: a.walks_per_node,
        walk_length: a.walk_length,
        return_param: a.return_param,
        inout_param: a.inout_param,
        mode: a.mode,
        rng_seed: stage_seed(seed, salt::WALK),
    };
    let corpus = generate_walks(&loaded.graph, &params).context("stage 'walk' failed")?;
    save_corpus(&corpus, &loaded.ids, &a.out)?;
    eprintln!("{} walks, {} tokens", corpus.len(), corpus.token_count());
    Ok(())
}

fn embed(a: EmbedArgs, seed: u64, deterministic: bool) -> Result<()> {
    let loaded = a.graph.load()?;
    let corpus = load_corpus(&a.corpus, &loaded.ids)?;
    let params = SgnsParams {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        rng_seed: stage_seed(seed, salt::EMBED),
        deterministic,
    };
    let emb = train_sgns(&corpus, &params, loaded.ids.len()).context("stage 'embed' failed")?;
    save_embedding(&emb, &loaded.ids, &a.out)?;
    Ok(())
}

fn open_report(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_influence(
    input: &EvalInput,
    data: &Dataset,
    seeds: &SeedSet,
    est: &InfluenceEstimate,
) -> Result<()> {
    let mut out = open_report(&input.out)?;
    let c = data.groups.group_count();
    let groups: Vec<String> = (0..c).map(|g| format!("Q_group_{g}")).collect();
    writeln!(
        out,
        "method,k,seeds,Q,{},disparity,std_error",
        groups.join(",")
    )?;
    let names: Vec<&str> = seeds.seeds().iter().map(|&s| data.ids.name(s)).collect();
    let perf = influence_fractions(est);
    let q: Vec<String> = perf.q_by_group.iter().map(f64::to_string).collect();
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        input.label(),
        seeds.k(),
        names.join(" "),
        perf.q_total,
        q.join(","),
        disparity(&perf),
        est.std_error
    )?;
    out.flush()?;
    Ok(())
}

fn im(a: ImArgs, seed: u64) -> Result<()> {
    let data = a.input.load()?;
    let emb = load_embedding(&a.embedding, &data.ids)?;
    let seeds = kmedoids_seeds(&emb, a.k, a.restarts, stage_seed(seed, salt::KMEDOIDS))
        .context("stage 'kmedoids' failed")?;
    let est = experiment::evaluate_influence(&data, &seeds, a.ic_prob, a.samples, seed)?;
    write_influence(&a.input, &data, &seeds, &est)
}

fn im_greedy(a: ImGreedyArgs, seed: u64) -> Result<()> {
    let data = a.input.load()?;
    let order = match &a.reweighted {
        Some(path) => {
            let rw = load_edge_list_with_ids(path, &data.ids, false)?;
            experiment::greedy_selection(&data, &rw, true, a.ic_prob, a.k, a.mc_samples, seed)?
        }
        None => experiment::greedy_selection(
            &data,
            &data.graph,
            false,
            a.ic_prob,
            a.k,
            a.mc_samples,
            seed,
        )?,
    };
    let seeds = SeedSet::new(order, a.k)?;
    let est = experiment::evaluate_influence(&data, &seeds, a.ic_prob, a.samples, seed)?;
    write_influence(&a.input, &data, &seeds, &est)
}

fn write_accuracy(
    input: &EvalInput,
    task: &str,
    ev: &GroupEvaluation,
    names: &[String],
) -> Result<()> {
    let mut out = open_report(&input.out)?;
    writeln!(out, "method,task,group,n,accuracy")?;
    let perf = &ev.performance;
    for ((&g, &q), &n) in ev
        .groups
        .iter()
        .zip(&perf.q_by_group)
        .zip(&perf.group_sizes)
    {
        writeln!(out, "{},{task},{},{n},{q}", input.label(), names[g])?;
    }
    let total: usize = perf.group_sizes.iter().sum();
    writeln!(out, "{},{task},all,{total},{}", input.label(), perf.q_total)?;
    writeln!(
        out,
        "{},{task},disparity,{},{}",
        input.label(),
        ev.groups.len(),
        disparity(perf)
    )?;
    for &g in &ev.omitted {
        eprintln!("warning: no test examples for {}", names[g]);
    }
    out.flush()?;
    Ok(())
}

fn classify(a: ClassifyArgs, seed: u64) -> Result<()> {
    let mut data = a.input.load()?;
    if let Some(p) = &a.labels {
        data.classes = load_groups(p, &data.ids)?;
    }
    let emb = load_embedding(&a.embedding, &data.ids)?;
    let params = LabelPropParams {
        knn_k: a.knn_k,
        max_iters: a.max_iters,
        train_fraction: a.train_fraction,
        rng_seed: 0,
    };
    let ev = experiment::classify(&data, &emb, &params, seed)?;
    let names: Vec<String> = (0..data.groups.group_count())
        .map(|g| data.groups.group_name(g).to_string())
        .collect();
    write_accuracy(&a.input, "classify", &ev, &names)
}

fn linkpred(a: LinkpredArgs, seed: Option<u64>, deterministic: bool) -> Result<()> {
    let mut input = a.input;
    input.label.get_or_insert_with(|| a.method.to_string());
    let data = input.load()?;
    let mut cfg = load_config(a.config.as_deref())?;
    cfg.embedding.deterministic |= deterministic;
    let seed = seed.unwrap_or(cfg.experiment.master_seed);
    let lp = experiment::linkpred(&data, a.method, &cfg, &cfg.reweight, seed)?;
    let names: Vec<String> = (0..lp.evaluation.groups.len() + lp.evaluation.omitted.len())
        .map(|t| link_type_name(&data.groups, t))
        .collect();
    write_accuracy(&input, "linkpred", &lp.evaluation, &names)
}
