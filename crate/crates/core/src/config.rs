//! Experiment configuration, read from a TOML file with one section per
//! pipeline stage. Every key is optional; missing keys take the defaults
//! printed by `crosswalk config --print-defaults`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::SgnsParams;
use crate::error::{Error, Result};
use crate::graph::SbmSpec;
use crate::reweight::{Method, ReweightParams};
use crate::tasks::{LabelPropParams, LogRegParams};
use crate::walker::WalkParams;

/// IC activation probability used for generated graphs.
pub const SYNTHETIC_IC_PROB: f64 = 0.03;
/// IC activation probability used for graphs loaded from files.
pub const REAL_IC_PROB: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    InfluenceKmedoids,
    InfluenceGreedy,
    Classify,
    Linkpred,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::InfluenceKmedoids => "influence_kmedoids",
            Task::InfluenceGreedy => "influence_greedy",
            Task::Classify => "classify",
            Task::Linkpred => "linkpred",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "influence_kmedoids" => Ok(Task::InfluenceKmedoids),
            "influence_greedy" => Ok(Task::InfluenceGreedy),
            "classify" => Ok(Task::Classify),
            "linkpred" => Ok(Task::Linkpred),
            other => Err(Error::InvalidParam(format!("unknown task '{other}'"))),
        }
    }
}

/// Either a generated SBM (the default) or an edge list with a group file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub edges: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    /// Class labels for `classify`, in the group-file format. Without it
    /// the group labels double as class labels.
    pub labels: Option<PathBuf>,
    pub undirected: bool,
    pub sbm: SbmSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            edges: None,
            groups: None,
            labels: None,
            undirected: true,
            sbm: SbmSpec::two_group(0.05, 1),
        }
    }
}

impl DatasetConfig {
    pub fn is_synthetic(&self) -> bool {
        self.edges.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub tasks: Vec<Task>,
    /// Seed-set size for the influence tasks.
    pub k: usize,
    /// Defaults to 0.03 for generated graphs and 0.01 for loaded ones.
    pub ic_prob: Option<f64>,
    pub ic_samples: usize,
    pub kmedoids_restarts: usize,
    pub greedy_mc_samples: usize,
    /// Scale greedy transmission probabilities by the method's weights.
    pub greedy_scaled: bool,
    pub label_prop: LabelPropParams,
    pub link_test_fraction: f64,
    /// Z-score link features with training-set statistics.
    pub standardize_features: bool,
    pub logreg: LogRegParams,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            tasks: vec![Task::InfluenceKmedoids],
            k: 40,
            ic_prob: None,
            ic_samples: 1000,
            kmedoids_restarts: 5,
            greedy_mc_samples: 200,
            greedy_scaled: true,
            label_prop: LabelPropParams::default(),
            link_test_fraction: 0.1,
            standardize_features: true,
            logreg: LogRegParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub n_runs: usize,
    /// Run `i` uses seed `master_seed + i`.
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub dump_embeddings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            methods: vec![Method::DeepWalk, Method::FairWalk, Method::CrossWalk],
            n_runs: 5,
            master_seed: 0,
            output_dir: PathBuf::from("results"),
            dump_embeddings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub p_values: Vec<f64>,
    pub k_max: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alphas: vec![0.1, 0.5, 0.9],
            p_values: vec![2.0, 5.0, 8.0],
            k_max: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub reweight: ReweightParams,
    pub walk: WalkParams,
    pub embedding: SgnsParams,
    pub task: TaskConfig,
    pub experiment: RunConfig,
    pub sweep: SweepConfig,
}

const DEFAULTS_HEADER: &str = "\
# crosswalk experiment configuration (all values shown are defaults)
#
# Optional keys not shown:
#   [dataset] edges = \"graph.txt\"   load an edge list instead of the SBM
#   [dataset] groups = \"groups.txt\" required with `edges`
#   [dataset] labels = \"labels.txt\" class labels for classify
#   [task] ic_prob = 0.03           default 0.03 (SBM) or 0.01 (files)
#
# rng_seed keys inside module sections are overridden per run from
# experiment.master_seed.
";

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn defaults_toml() -> String {
        let body = toml::to_string_pretty(&ExperimentConfig::default())
            .expect("default config serializes");
        format!("{DEFAULTS_HEADER}\n{body}")
    }

    pub fn ic_prob(&self) -> f64 {
        self.task.ic_prob.unwrap_or(if self.dataset.is_synthetic() {
            SYNTHETIC_IC_PROB
        } else {
            REAL_IC_PROB
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        match (&d.edges, &d.groups) {
            (Some(_), None) => {
                return Err(Error::Validation(
                    "dataset.edges requires dataset.groups".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(Error::Validation(
                    "dataset.groups requires dataset.edges".into(),
                ))
            }
            (None, None) => d.sbm.validate()?,
            (Some(_), Some(_)) => {}
        }
        for p in [&d.edges, &d.groups, &d.labels].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Validation(format!("{} does not exist", p.display())));
            }
        }
        self.reweight.validate()?;
        self.walk.validate()?;
        self.embedding.validate()?;

        let t = &self.task;
        if t.tasks.is_empty() {
            return Err(Error::InvalidParam("task.tasks is empty".into()));
        }
        if t.k == 0 {
            return Err(Error::InvalidParam("task.k must be >= 1".into()));
        }
        let p = self.ic_prob();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParam(format!(
                "task.ic_prob {p} outside [0,1]"
            )));
        }
        if t.ic_samples == 0 || t.greedy_mc_samples == 0 || t.kmedoids_restarts == 0 {
            return Err(Error::InvalidParam(
                "ic_samples, greedy_mc_samples and kmedoids_restarts must be >= 1".into(),
            ));
        }
        if t.label_prop.knn_k == 0 {
            return Err(Error::InvalidParam(
                "task.label_prop.knn_k must be >= 1".into(),
            ));
        }
        if !(t.label_prop.train_fraction > 0.0 && t.label_prop.train_fraction < 1.0) {
            return Err(Error::InvalidParam(
                "train_fraction must lie in (0,1)".into(),
            ));
        }
        if !(t.link_test_fraction > 0.0 && t.link_test_fraction < 1.0) {
            return Err(Error::InvalidParam(
                "link_test_fraction must lie in (0,1)".into(),
            ));
        }

        let e = &self.experiment;
        if e.methods.is_empty() {
            return Err(Error::InvalidParam("experiment.methods is empty".into()));
        }
        if e.n_runs == 0 {
            return Err(Error::InvalidParam("experiment.n_runs must be >= 1".into()));
        }

        let s = &self.sweep;
        if s.alphas.is_empty() || s.p_values.is_empty() || s.k_max == 0 {
            return Err(Error::InvalidParam("sweep grid is empty".into()));
        }
        for &alpha in &s.alphas {
            ReweightParams {
                alpha,
                ..self.reweight.clone()
            }
            .validate()?;
        }
        for &p_exponent in &s.p_values {
            ReweightParams {
                p_exponent,
                ..self.reweight.clone()
            }
            .validate()?;
        }
        Ok(())
    }
}
