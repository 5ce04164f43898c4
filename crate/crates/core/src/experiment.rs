//! End-to-end experiment driver: dataset, reweighting, walks, embedding,
//! downstream task and per-group scoring, repeated over methods and seeds.
//!
//! Every stage draws its randomness from `derive_seed(run_seed, salt)`, so
//! methods compared within one run share walk, split and cascade streams.
//! Scores are always computed on the original graph.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Task};
use crate::diffusion::{
    estimate_influence, greedy_order, kmedoids_seeds, scale_transmission, ActivationProbs,
    IcParams, InfluenceEstimate, SeedSet,
};
use crate::embedding::{save_embedding, train_sgns, EmbeddingMatrix, SgnsParams};
use crate::error::{Error, Result};
use crate::graph::{load_edge_list, load_groups, sbm_generate, Graph, GroupAssignment, IdMap};
use crate::metrics::{disparity, influence_fractions, mean_std, GroupPerformance};
use crate::reweight::{reweight, Method, ReweightParams};
use crate::rng::derive_seed;
use crate::tasks::{
    edge_feature, evaluate_by_group, knn_graph, label_propagation, link_split, link_type,
    link_type_count, logreg_train, stratified_train_mask, GroupEvaluation, LabelPropParams,
};
use crate::walker::{generate_walks, WalkParams};

/// Salts for [`stage_seed`].
pub mod salt {
    pub const PROXIMITY: u64 = 1;
    pub const WALK: u64 = 2;
    pub const EMBED: u64 = 3;
    pub const KMEDOIDS: u64 = 4;
    pub const CASCADE: u64 = 5;
    pub const GREEDY: u64 = 6;
    pub const LINK_SPLIT: u64 = 7;
    pub const LABEL_MASK: u64 = 8;
}

pub fn stage_seed(run_seed: u64, salt: u64) -> u64 {
    derive_seed(run_seed, salt)
}

/// Graph, sensitive groups and class labels for one experiment.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub groups: GroupAssignment,
    pub ids: IdMap,
    /// Class label per node for classification.
    pub classes: GroupAssignment,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let d = &cfg.dataset;
    match (&d.edges, &d.groups) {
        (Some(edges), Some(groups_path)) => {
            let loaded = load_edge_list(edges, d.undirected)?;
            let groups = load_groups(groups_path, &loaded.ids)?;
            let classes = match &d.labels {
                Some(p) => load_groups(p, &loaded.ids)?,
                None => groups.clone(),
            };
            Ok(Dataset {
                graph: loaded.graph,
                groups,
                ids: loaded.ids,
                classes,
            })
        }
        _ => {
            let (graph, groups) = sbm_generate(&d.sbm)?;
            let ids = IdMap::numeric(graph.node_count());
            let classes = match &d.labels {
                Some(p) => load_groups(p, &ids)?,
                None => groups.clone(),
            };
            Ok(Dataset {
                graph,
                groups,
                ids,
                classes,
            })
        }
    }
}

/// One scored (method, task, seed, parameters) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub task: Task,
    pub run_seed: u64,
    pub alpha: f64,
    pub p_exponent: f64,
    pub k: usize,
    pub q_total: f64,
    /// Indexed by group (or link type); `None` for groups without examples.
    pub q_groups: Vec<Option<f64>>,
    pub disparity: f64,
}

const PARAM_COLUMNS: [&str; 15] = [
    "walk_mode",
    "walks_per_node",
    "walk_length",
    "return_param",
    "inout_param",
    "dim",
    "window",
    "negatives",
    "epochs",
    "r",
    "d",
    "alpha",
    "p",
    "k",
    "ic_prob",
];

impl ResultRow {
    fn from_performance(
        method: Method,
        task: Task,
        run_seed: u64,
        rw: &ReweightParams,
        k: usize,
        perf: &GroupPerformance,
        groups: &[usize],
        width: usize,
    ) -> Self {
        let mut q_groups = vec![None; width];
        for (&g, &q) in groups.iter().zip(&perf.q_by_group) {
            q_groups[g] = Some(q);
        }
        ResultRow {
            method,
            task,
            run_seed,
            alpha: rw.alpha,
            p_exponent: rw.p_exponent,
            k,
            q_total: perf.q_total,
            q_groups,
            disparity: disparity(perf),
        }
    }

    /// Parameter values in [`PARAM_COLUMNS`] order; parameters that do not
    /// affect this row are left blank.
    fn param_values(&self, cfg: &ExperimentConfig) -> Vec<String> {
        let w = &cfg.walk;
        let e = &cfg.embedding;
        let crosswalk = self.method == Method::CrossWalk;
        let influence = matches!(self.task, Task::InfluenceKmedoids | Task::InfluenceGreedy);
        let embedded = self.task != Task::InfluenceGreedy;
        let when = |cond: bool, v: String| if cond { v } else { String::new() };
        vec![
            when(embedded, w.mode.as_str().to_string()),
            when(embedded, w.walks_per_node.to_string()),
            when(embedded, w.walk_length.to_string()),
            when(embedded, w.return_param.to_string()),
            when(embedded, w.inout_param.to_string()),
            when(embedded, e.dim.to_string()),
            when(embedded, e.window.to_string()),
            when(embedded, e.negatives.to_string()),
            when(embedded, e.epochs.to_string()),
            when(crosswalk, cfg.reweight.walk_count_r.to_string()),
            when(crosswalk, cfg.reweight.walk_length_d.to_string()),
            when(crosswalk, self.alpha.to_string()),
            when(crosswalk, self.p_exponent.to_string()),
            when(influence, self.k.to_string()),
            when(influence, cfg.ic_prob().to_string()),
        ]
    }
}

/// Reweights `graph` for `method`; the result is only ever walked on.
pub fn method_graph(
    method: Method,
    graph: &Graph,
    groups: &GroupAssignment,
    params: &ReweightParams,
    run_seed: u64,
) -> Result<Graph> {
    let params = ReweightParams {
        rng_seed: stage_seed(run_seed, salt::PROXIMITY),
        ..params.clone()
    };
    reweight(method, graph, groups, &params)
        .map(|(g, _)| g)
        .map_err(|e| e.in_stage("reweight"))
}

/// Walks on `walk_graph` and trains an embedding from them.
pub fn embed(
    walk_graph: &Graph,
    walk: &WalkParams,
    sgns: &SgnsParams,
    run_seed: u64,
) -> Result<EmbeddingMatrix> {
    let walk = WalkParams {
        rng_seed: stage_seed(run_seed, salt::WALK),
        ..walk.clone()
    };
    let corpus = generate_walks(walk_graph, &walk).map_err(|e| e.in_stage("walk"))?;
    let sgns = SgnsParams {
        rng_seed: stage_seed(run_seed, salt::EMBED),
        ..sgns.clone()
    };
    train_sgns(&corpus, &sgns, walk_graph.node_count()).map_err(|e| e.in_stage("embed"))
}

/// IC spread of `seeds` on the original graph with the constant
/// experiment probability.
pub fn evaluate_influence(
    data: &Dataset,
    seeds: &SeedSet,
    ic_prob: f64,
    samples: usize,
    run_seed: u64,
) -> Result<InfluenceEstimate> {
    let params = IcParams {
        probs: ActivationProbs::Constant(ic_prob),
        samples,
        rng_seed: stage_seed(run_seed, salt::CASCADE),
    };
    estimate_influence(&data.graph, &data.groups, seeds, &params)
        .map_err(|e| e.in_stage("evaluate"))
}

/// Greedy selection order on the original graph, with transmission
/// probabilities scaled by `walk_graph`'s weights when `scaled` is set.
pub fn greedy_selection(
    data: &Dataset,
    walk_graph: &Graph,
    scaled: bool,
    ic_prob: f64,
    k: usize,
    mc_samples: usize,
    run_seed: u64,
) -> Result<Vec<usize>> {
    let probs = if scaled {
        ActivationProbs::PerArc(
            scale_transmission(&data.graph, walk_graph, ic_prob)
                .map_err(|e| e.in_stage("greedy"))?,
        )
    } else {
        ActivationProbs::Constant(ic_prob)
    };
    greedy_order(
        &data.graph,
        &probs,
        k,
        mc_samples,
        stage_seed(run_seed, salt::GREEDY),
    )
    .map_err(|e| e.in_stage("greedy"))
}

/// Label propagation over the embedding's k-NN graph, scored per
/// sensitive group on the nodes whose labels were hidden.
pub fn classify(
    data: &Dataset,
    emb: &EmbeddingMatrix,
    params: &LabelPropParams,
    run_seed: u64,
) -> Result<GroupEvaluation> {
    let run = || -> Result<GroupEvaluation> {
        let knn = knn_graph(emb, params.knn_k)?;
        let mask = stratified_train_mask(
            &data.groups,
            params.train_fraction,
            stage_seed(run_seed, salt::LABEL_MASK),
        )?;
        let truth = data.classes.labels();
        let train: Vec<Option<usize>> = mask
            .iter()
            .zip(truth)
            .map(|(&m, &c)| if m { Some(c) } else { None })
            .collect();
        let predicted = label_propagation(&knn, &train, params)?;
        let test: Vec<usize> = (0..mask.len()).filter(|&v| !mask[v]).collect();
        let pred: Vec<usize> = test.iter().map(|&v| predicted[v]).collect();
        let want: Vec<usize> = test.iter().map(|&v| truth[v]).collect();
        let group: Vec<usize> = test.iter().map(|&v| data.groups.group_of(v)).collect();
        evaluate_by_group(&pred, &want, &group, data.groups.group_count())
    };
    run().map_err(|e| e.in_stage("classify"))
}

/// Link-prediction outcome plus the embedding trained on the reduced graph.
pub struct LinkPrediction {
    pub evaluation: GroupEvaluation,
    pub embedding: EmbeddingMatrix,
}

fn standardize(train: &mut [Vec<f64>], test: &mut [Vec<f64>]) {
    let Some(dim) = train.first().map(Vec::len) else {
        return;
    };
    let n = train.len() as f64;
    for j in 0..dim {
        let mean = train.iter().map(|x| x[j]).sum::<f64>() / n;
        let var = train.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for x in train.iter_mut().chain(test.iter_mut()) {
            x[j] = (x[j] - mean) / sd;
        }
    }
}

/// Splits links, embeds the graph without test positives and scores a
/// logistic regression per link type.
pub fn linkpred(
    data: &Dataset,
    method: Method,
    cfg: &ExperimentConfig,
    rw: &ReweightParams,
    run_seed: u64,
) -> Result<LinkPrediction> {
    let split = link_split(
        &data.graph,
        &data.groups,
        cfg.task.link_test_fraction,
        stage_seed(run_seed, salt::LINK_SPLIT),
    )
    .map_err(|e| e.in_stage("link-split"))?;
    let walk_graph = method_graph(method, &split.train_graph, &data.groups, rw, run_seed)?;
    let emb = embed(&walk_graph, &cfg.walk, &cfg.embedding, run_seed)?;

    let run = || -> Result<GroupEvaluation> {
        let features = |pairs: &[(usize, usize)]| -> Result<Vec<Vec<f64>>> {
            pairs
                .iter()
                .map(|&(u, v)| edge_feature(&emb, u, v))
                .collect()
        };
        let mut x_train = features(&split.train_pos)?;
        x_train.extend(features(&split.train_neg)?);
        let mut y_train = vec![true; split.train_pos.len()];
        y_train.resize(x_train.len(), false);

        let mut x_test = features(&split.test_pos)?;
        x_test.extend(features(&split.test_neg)?);
        let mut y_test = vec![true; split.test_pos.len()];
        y_test.resize(x_test.len(), false);
        let types: Vec<usize> = split
            .test_pos
            .iter()
            .chain(&split.test_neg)
            .map(|&(u, v)| link_type(&data.groups, u, v))
            .collect();

        if cfg.task.standardize_features {
            standardize(&mut x_train, &mut x_test);
        }
        let model = logreg_train(&x_train, &y_train, &cfg.task.logreg)?;
        let pred: Vec<bool> = x_test.iter().map(|x| model.predict(x)).collect();
        evaluate_by_group(&pred, &y_test, &types, link_type_count(&data.groups))
    };
    let evaluation = run().map_err(|e| e.in_stage("linkpred"))?;
    Ok(LinkPrediction {
        evaluation,
        embedding: emb,
    })
}

/// Per-run CSV written and flushed row by row.
struct RowSink<'a> {
    out: BufWriter<File>,
    path: PathBuf,
    cfg: &'a ExperimentConfig,
}

impl<'a> RowSink<'a> {
    fn create(path: PathBuf, cfg: &'a ExperimentConfig, width: usize) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut sink = RowSink {
            out: BufWriter::new(file),
            path,
            cfg,
        };
        let mut header = vec!["method".to_string(), "task".into(), "run_seed".into()];
        header.extend(PARAM_COLUMNS.iter().map(|c| c.to_string()));
        header.push("Q".into());
        header.extend((0..width).map(|g| format!("Q_group_{g}")));
        header.push("disparity".into());
        sink.line(&header)?;
        Ok(sink)
    }

    fn line(&mut self, cells: &[String]) -> Result<()> {
        writeln!(self.out, "{}", cells.join(","))
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    fn row(&mut self, row: &ResultRow) -> Result<()> {
        let mut cells = vec![
            row.method.to_string(),
            row.task.to_string(),
            row.run_seed.to_string(),
        ];
        cells.extend(row.param_values(self.cfg));
        cells.push(row.q_total.to_string());
        cells.extend(
            row.q_groups
                .iter()
                .map(|q| q.map(|v| v.to_string()).unwrap_or_default()),
        );
        cells.push(row.disparity.to_string());
        self.line(&cells)
    }
}

/// Mean and standard deviation per (method, task, parameters), in order of
/// first appearance.
fn write_summary(path: &Path, rows: &[ResultRow], cfg: &ExperimentConfig) -> Result<()> {
    let mut order: Vec<(Method, Task, Vec<String>)> = Vec::new();
    let mut buckets: HashMap<(Method, Task, Vec<String>), (Vec<f64>, Vec<f64>)> = HashMap::new();
    for row in rows {
        let key = (row.method, row.task, row.param_values(cfg));
        let entry = buckets.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        entry.0.push(row.q_total);
        entry.1.push(row.disparity);
    }
    let mut text = format!(
        "method,task,{},Q_mean,Q_std,disparity_mean,disparity_std\n",
        PARAM_COLUMNS.join(",")
    );
    for key in &order {
        let (q, d) = &buckets[key];
        let (qm, qs) = mean_std(q);
        let (dm, ds) = mean_std(d);
        text.push_str(&format!(
            "{},{},{},{qm},{qs},{dm},{ds}\n",
            key.0,
            key.1,
            key.2.join(",")
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn group_width(cfg: &ExperimentConfig, data: &Dataset) -> usize {
    let mut width = data.groups.group_count();
    if cfg.task.tasks.contains(&Task::Linkpred) {
        width = width.max(link_type_count(&data.groups));
    }
    width
}

fn check_k(data: &Dataset, k: usize) -> Result<()> {
    let n = data.graph.node_count();
    if k > n {
        return Err(Error::InvalidParam(format!("k = {k} exceeds {n} nodes")));
    }
    Ok(())
}

/// Files produced by [`run_experiment`] or [`run_sweep`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub runs_csv: PathBuf,
    pub summary_csv: PathBuf,
}

fn prepare_output(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.experiment.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if cfg.experiment.dump_embeddings {
        let emb = dir.join("embeddings");
        fs::create_dir_all(&emb).map_err(|e| Error::io(&emb, e))?;
    }
    Ok(dir)
}

/// Runs every configured method and task `n_runs` times and writes
/// `runs.csv`, `summary.csv` and (optionally) `embeddings/*.emb`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let data = load_dataset(cfg).map_err(|e| e.in_stage("dataset"))?;
    run_experiment_on(cfg, &data)
}

/// [`run_experiment`] on an already loaded dataset.
pub fn run_experiment_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentOutput> {
    let tasks = &cfg.task.tasks;
    if tasks
        .iter()
        .any(|t| matches!(t, Task::InfluenceKmedoids | Task::InfluenceGreedy))
    {
        check_k(data, cfg.task.k)?;
    }
    let dir = prepare_output(cfg)?;
    let width = group_width(cfg, data);
    let runs_csv = dir.join("runs.csv");
    let mut sink = RowSink::create(runs_csv.clone(), cfg, width)?;
    let ic_prob = cfg.ic_prob();
    let rw = &cfg.reweight;
    let needs_embedding = tasks
        .iter()
        .any(|t| matches!(t, Task::InfluenceKmedoids | Task::Classify));
    let needs_walk_graph = needs_embedding || tasks.contains(&Task::InfluenceGreedy);

    let mut rows = Vec::new();
    for run in 0..cfg.experiment.n_runs {
        let seed = cfg.experiment.master_seed.wrapping_add(run as u64);
        for &method in &cfg.experiment.methods {
            let walk_graph = if needs_walk_graph {
                Some(method_graph(method, &data.graph, &data.groups, rw, seed)?)
            } else {
                None
            };
            let emb = match (&walk_graph, needs_embedding) {
                (Some(g), true) => {
                    let emb = embed(g, &cfg.walk, &cfg.embedding, seed)?;
                    if cfg.experiment.dump_embeddings {
                        let path = dir
                            .join("embeddings")
                            .join(format!("{method}_seed{seed}.emb"));
                        save_embedding(&emb, &data.ids, &path)?;
                    }
                    Some(emb)
                }
                _ => None,
            };

            for &task in tasks {
                let (perf, groups) = match task {
                    Task::InfluenceKmedoids => {
                        let emb = emb.as_ref().expect("embedding computed");
                        let seeds = kmedoids_seeds(
                            emb,
                            cfg.task.k,
                            cfg.task.kmedoids_restarts,
                            stage_seed(seed, salt::KMEDOIDS),
                        )
                        .map_err(|e| e.in_stage("kmedoids"))?;
                        let est =
                            evaluate_influence(data, &seeds, ic_prob, cfg.task.ic_samples, seed)?;
                        (
                            influence_fractions(&est),
                            (0..data.groups.group_count()).collect(),
                        )
                    }
                    Task::InfluenceGreedy => {
                        let g = walk_graph.as_ref().expect("walk graph computed");
                        let scaled = cfg.task.greedy_scaled && method != Method::DeepWalk;
                        let order = greedy_selection(
                            data,
                            g,
                            scaled,
                            ic_prob,
                            cfg.task.k,
                            cfg.task.greedy_mc_samples,
                            seed,
                        )?;
                        let seeds = SeedSet::new(order, cfg.task.k)?;
                        let est =
                            evaluate_influence(data, &seeds, ic_prob, cfg.task.ic_samples, seed)?;
                        (
                            influence_fractions(&est),
                            (0..data.groups.group_count()).collect(),
                        )
                    }
                    Task::Classify => {
                        let emb = emb.as_ref().expect("embedding computed");
                        let ev = classify(data, emb, &cfg.task.label_prop, seed)?;
                        (ev.performance, ev.groups)
                    }
                    Task::Linkpred => {
                        let lp = linkpred(data, method, cfg, rw, seed)?;
                        if cfg.experiment.dump_embeddings {
                            let path = dir
                                .join("embeddings")
                                .join(format!("{method}_seed{seed}_linkpred.emb"));
                            save_embedding(&lp.embedding, &data.ids, &path)?;
                        }
                        (lp.evaluation.performance, lp.evaluation.groups)
                    }
                };
                let row = ResultRow::from_performance(
                    method, task, seed, rw, cfg.task.k, &perf, &groups, width,
                );
                sink.row(&row)?;
                rows.push(row);
            }
        }
    }

    let summary_csv = dir.join("summary.csv");
    write_summary(&summary_csv, &rows, cfg)?;
    Ok(ExperimentOutput {
        rows,
        runs_csv,
        summary_csv,
    })
}

/// CrossWalk over the grid `alphas x p_values`, scoring the influence
/// tasks for every `k` in `1..=k_max`. Writes `sweep.csv` and
/// `sweep_summary.csv`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let data = load_dataset(cfg).map_err(|e| e.in_stage("dataset"))?;
    run_sweep_on(cfg, &data)
}

pub fn run_sweep_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentOutput> {
    let tasks: Vec<Task> = cfg
        .task
        .tasks
        .iter()
        .copied()
        .filter(|t| matches!(t, Task::InfluenceKmedoids | Task::InfluenceGreedy))
        .collect();
    if tasks.is_empty() {
        return Err(Error::InvalidParam(
            "sweep needs influence_kmedoids or influence_greedy in task.tasks".into(),
        ));
    }
    let k_max = cfg.sweep.k_max;
    check_k(data, k_max)?;
    let dir = prepare_output(cfg)?;
    let width = data.groups.group_count();
    let runs_csv = dir.join("sweep.csv");
    let mut sink = RowSink::create(runs_csv.clone(), cfg, width)?;
    let ic_prob = cfg.ic_prob();
    let all: Vec<usize> = (0..width).collect();

    let mut rows = Vec::new();
    for &alpha in &cfg.sweep.alphas {
        for &p_exponent in &cfg.sweep.p_values {
            let rw = ReweightParams {
                alpha,
                p_exponent,
                ..cfg.reweight.clone()
            };
            for run in 0..cfg.experiment.n_runs {
                let seed = cfg.experiment.master_seed.wrapping_add(run as u64);
                let walk_graph =
                    method_graph(Method::CrossWalk, &data.graph, &data.groups, &rw, seed)?;
                for &task in &tasks {
                    let seed_sets: Vec<SeedSet> = match task {
                        Task::InfluenceKmedoids => {
                            let emb = embed(&walk_graph, &cfg.walk, &cfg.embedding, seed)?;
                            if cfg.experiment.dump_embeddings {
                                let name =
                                    format!("crosswalk_a{alpha}_p{p_exponent}_seed{seed}.emb");
                                save_embedding(
                                    &emb,
                                    &data.ids,
                                    &dir.join("embeddings").join(name),
                                )?;
                            }
                            (1..=k_max)
                                .map(|k| {
                                    kmedoids_seeds(
                                        &emb,
                                        k,
                                        cfg.task.kmedoids_restarts,
                                        stage_seed(seed, salt::KMEDOIDS),
                                    )
                                    .map_err(|e| e.in_stage("kmedoids"))
                                })
                                .collect::<Result<_>>()?
                        }
                        _ => {
                            let order = greedy_selection(
                                data,
                                &walk_graph,
                                cfg.task.greedy_scaled,
                                ic_prob,
                                k_max,
                                cfg.task.greedy_mc_samples,
                                seed,
                            )?;
                            (1..=order.len())
                                .map(|k| SeedSet::new(order[..k].to_vec(), k))
                                .collect::<Result<_>>()?
                        }
                    };
                    for (i, seeds) in seed_sets.iter().enumerate() {
                        let est =
                            evaluate_influence(data, seeds, ic_prob, cfg.task.ic_samples, seed)?;
                        let row = ResultRow::from_performance(
                            Method::CrossWalk,
                            task,
                            seed,
                            &rw,
                            i + 1,
                            &influence_fractions(&est),
                            &all,
                            width,
                        );
                        sink.row(&row)?;
                        rows.push(row);
                    }
                }
            }
        }
    }

    let summary_csv = dir.join("sweep_summary.csv");
    write_summary(&summary_csv, &rows, cfg)?;
    Ok(ExperimentOutput {
        rows,
        runs_csv,
        summary_csv,
    })
}
