//! Skip-gram with negative sampling over walk corpora.
//!
//! Training follows the word2vec recipe: input vectors start uniform in
//! `[-0.5/dim, 0.5/dim]`, context vectors at zero, negatives are drawn from
//! the unigram distribution raised to 0.75, and the learning rate decays
//! linearly to 1% of its starting value. The deterministic mode runs on a
//! single thread from one random stream; the parallel mode applies
//! lock-free updates from every worker and is not reproducible.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::IdMap;
use crate::rng::{self, StreamRng};
use crate::walker::{AliasTable, WalkCorpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
    /// Single-threaded, bit-reproducible training.
    pub deterministic: bool,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams {
            dim: 32,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            rng_seed: 0,
            deterministic: false,
        }
    }
}

impl SgnsParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidParam("dim must be >= 2".into()));
        }
        if self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::InvalidParam(
                "window, negatives and epochs must be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParam("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Row-major node vectors. `context` holds the output vectors from training
/// and is empty for matrices read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    vectors: Vec<f64>,
    context: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("embedding rows differ in length".into()));
        }
        Ok(EmbeddingMatrix {
            dim,
            vectors: rows.concat(),
            context: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.vectors.len() / self.dim
        }
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.vectors[v * self.dim..(v + 1) * self.dim]
    }

    pub fn context_row(&self, v: usize) -> Option<&[f64]> {
        (!self.context.is_empty()).then(|| &self.context[v * self.dim..(v + 1) * self.dim])
    }

    pub fn check_id(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            return Err(Error::IdOutOfRange {
                id: v,
                count: self.node_count(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.vectors
            .iter()
            .chain(&self.context)
            .all(|x| x.is_finite())
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn embedding_distance(emb: &EmbeddingMatrix, u: usize, v: usize) -> Result<f64> {
    emb.check_id(u)?;
    emb.check_id(v)?;
    Ok(euclidean(emb.row(u), emb.row(v)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-ln sigmoid(x)` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    let z = -x;
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Loss of one (center, context) pair with its negatives:
/// `-ln s(c.o) - sum ln s(-c.n)`.
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    neg_log_sigmoid(dot(center, context))
        + negatives
            .iter()
            .map(|n| neg_log_sigmoid(-dot(center, n)))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`pair_loss`].
pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let mut grad_center = vec![0.0; center.len()];
    let mut grad_for = |target: &[f64], label: f64| -> Vec<f64> {
        let g = label - sigmoid(dot(center, target));
        for (gc, t) in grad_center.iter_mut().zip(target) {
            *gc -= g * t;
        }
        center.iter().map(|c| -g * c).collect()
    };
    let context_grad = grad_for(context, 1.0);
    let negative_grads = negatives.iter().map(|n| grad_for(n, 0.0)).collect();
    PairGradient {
        center: grad_center,
        context: context_grad,
        negatives: negative_grads,
    }
}

/// Shared parameter storage. Relaxed atomics make concurrent updates
/// well-defined; lost updates between workers are tolerated.
struct SharedMatrix {
    data: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn from_vec(values: Vec<f64>) -> Self {
        SharedMatrix {
            data: values
                .into_iter()
                .map(|x| AtomicU64::new(x.to_bits()))
                .collect(),
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.data[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, i: usize, delta: f64) {
        self.data[i].store((self.get(i) + delta).to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f64> {
        self.data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}

struct Trainer<'a> {
    params: &'a SgnsParams,
    input: SharedMatrix,
    output: SharedMatrix,
    noise: AliasTable,
    total_work: usize,
    done: AtomicUsize,
}

impl Trainer<'_> {
    fn learning_rate(&self) -> f64 {
        let progress = self.done.load(Ordering::Relaxed) as f64 / self.total_work as f64;
        self.params.learning_rate * (1.0 - 0.99 * progress.min(1.0))
    }

    /// One SGD step on a (center, context) pair; returns its loss.
    fn train_pair(
        &self,
        center: usize,
        context: usize,
        lr: f64,
        rng: &mut StreamRng,
        scratch: &mut Scratch,
    ) -> f64 {
        let dim = self.params.dim;
        let c0 = center * dim;
        for k in 0..dim {
            scratch.center[k] = self.input.get(c0 + k);
            scratch.grad[k] = 0.0;
        }
        let mut loss = 0.0;
        for s in 0..=self.params.negatives {
            let (target, label) = if s == 0 {
                (context, 1.0)
            } else {
                let n = self.noise.sample(rng);
                if n == context {
                    continue;
                }
                (n, 0.0)
            };
            let t0 = target * dim;
            let mut x = 0.0;
            for k in 0..dim {
                x += scratch.center[k] * self.output.get(t0 + k);
            }
            loss += if label == 1.0 {
                neg_log_sigmoid(x)
            } else {
                neg_log_sigmoid(-x)
            };
            let g = (label - sigmoid(x)) * lr;
            for k in 0..dim {
                let out = self.output.get(t0 + k);
                scratch.grad[k] += g * out;
                self.output.add(t0 + k, g * scratch.center[k]);
            }
        }
        for k in 0..dim {
            self.input.add(c0 + k, scratch.grad[k]);
        }
        loss
    }

    /// Trains over `walks`, returning (loss sum, pair count).
    fn train_walks(&self, walks: &[Vec<usize>], rng: &mut StreamRng) -> (f64, usize) {
        let mut scratch = Scratch::new(self.params.dim);
        let mut loss = 0.0;
        let mut pairs = 0;
        for walk in walks {
            let lr = self.learning_rate();
            for (i, &center) in walk.iter().enumerate() {
                let shrink = rng.gen_range(0..self.params.window);
                let reach = self.params.window - shrink;
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    loss += self.train_pair(center, context, lr, rng, &mut scratch);
                    pairs += 1;
                }
            }
            self.done.fetch_add(walk.len(), Ordering::Relaxed);
        }
        (loss, pairs)
    }
}

struct Scratch {
    center: Vec<f64>,
    grad: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            center: vec![0.0; dim],
            grad: vec![0.0; dim],
        }
    }
}

/// Embedding plus the mean pair loss of every epoch.
#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub embedding: EmbeddingMatrix,
    pub epoch_loss: Vec<f64>,
}

pub fn train_sgns(
    corpus: &WalkCorpus,
    params: &SgnsParams,
    node_count: usize,
) -> Result<EmbeddingMatrix> {
    train_sgns_with_report(corpus, params, node_count).map(|t| t.embedding)
}

pub fn train_sgns_with_report(
    corpus: &WalkCorpus,
    params: &SgnsParams,
    node_count: usize,
) -> Result<TrainedEmbedding> {
    params.validate()?;
    let tokens = corpus.token_count();
    if tokens == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = vec![0.0f64; node_count];
    for &v in corpus.walks.iter().flatten() {
        if v >= node_count {
            return Err(Error::IdOutOfRange {
                id: v,
                count: node_count,
            });
        }
        counts[v] += 1.0;
    }
    let noise_weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let noise = AliasTable::new(&noise_weights).ok_or(Error::EmptyCorpus)?;

    let dim = params.dim;
    let mut init_rng = rng::stream(params.rng_seed, u64::MAX);
    let half = 0.5 / dim as f64;
    let input: Vec<f64> = (0..node_count * dim)
        .map(|_| init_rng.gen_range(-half..half))
        .collect();

    let trainer = Trainer {
        params,
        input: SharedMatrix::from_vec(input),
        output: SharedMatrix::from_vec(vec![0.0; node_count * dim]),
        noise,
        total_work: tokens * params.epochs,
        done: AtomicUsize::new(0),
    };

    let mut epoch_loss = Vec::with_capacity(params.epochs);
    if params.deterministic {
        let mut rng = rng::stream(params.rng_seed, 0);
        for _ in 0..params.epochs {
            let (loss, pairs) = trainer.train_walks(&corpus.walks, &mut rng);
            epoch_loss.push(loss / pairs.max(1) as f64);
        }
    } else {
        let chunk = corpus
            .walks
            .len()
            .div_ceil(rayon::current_num_threads() * 4)
            .max(1);
        let chunk_count = corpus.walks.len().div_ceil(chunk) as u64;
        for epoch in 0..params.epochs as u64 {
            let (loss, pairs) = corpus
                .walks
                .par_chunks(chunk)
                .enumerate()
                .map(|(i, walks)| {
                    let mut rng = rng::stream(params.rng_seed, epoch * chunk_count + i as u64);
                    trainer.train_walks(walks, &mut rng)
                })
                .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            epoch_loss.push(loss / pairs.max(1) as f64);
        }
    }

    let embedding = EmbeddingMatrix {
        dim,
        vectors: trainer.input.into_vec(),
        context: trainer.output.into_vec(),
    };
    if !embedding.is_finite() {
        return Err(Error::Validation(
            "training diverged to non-finite values; lower the learning rate".into(),
        ));
    }
    Ok(TrainedEmbedding {
        embedding,
        epoch_loss,
    })
}

/// word2vec text format: `node_count dim` header, then `id f1 ... f_dim`.
pub fn save_embedding(emb: &EmbeddingMatrix, ids: &IdMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_embedding(emb, ids, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_embedding<W: Write>(
    emb: &EmbeddingMatrix,
    ids: &IdMap,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "{} {}", emb.node_count(), emb.dim())?;
    for v in 0..emb.node_count() {
        write!(out, "{}", ids.name(v))?;
        for x in emb.row(v) {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn load_embedding(path: &Path, ids: &IdMap) -> Result<EmbeddingMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| parse_err(1, format!("bad header '{header}'")))
        })
        .collect::<Result<_>>()?;
    let [count, dim] = dims[..] else {
        return Err(parse_err(1, format!("bad header '{header}'")));
    };
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; ids.len()];
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = i + 2;
        let mut fields = line.split_whitespace();
        let Some(name) = fields.next() else { continue };
        let v = ids
            .id(name)
            .ok_or_else(|| parse_err(line_no, format!("unknown node '{name}'")))?;
        let row: Vec<f64> = fields
            .map(|s| {
                s.parse()
                    .map_err(|_| parse_err(line_no, format!("bad value '{s}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(parse_err(
                line_no,
                format!("expected {dim} values, got {}", row.len()),
            ));
        }
        rows[v] = Some(row);
    }
    if count != ids.len() {
        return Err(Error::Validation(format!(
            "embedding has {count} rows, graph has {} nodes",
            ids.len()
        )));
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(v, r)| {
            r.ok_or_else(|| Error::Validation(format!("no embedding for node '{}'", ids.name(v))))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_vec(rng: &mut StreamRng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn loss_at_zero_is_ln2_per_term() {
        let z = vec![0.0; 4];
        for k in [0usize, 1, 5] {
            let negs: Vec<&[f64]> = (0..k).map(|_| z.as_slice()).collect();
            let loss = pair_loss(&z, &z, &negs);
            assert!((loss - (1 + k) as f64 * 2f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng::stream(3, 0);
        let h = 1e-5;
        for k in [1usize, 5] {
            for _ in 0..20 {
                let center = random_vec(&mut rng, 8);
                let context = random_vec(&mut rng, 8);
                let negs: Vec<Vec<f64>> = (0..k).map(|_| random_vec(&mut rng, 8)).collect();
                let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
                let grad = pair_gradient(&center, &context, &neg_refs);
                for i in 0..8 {
                    let mut plus = center.clone();
                    let mut minus = center.clone();
                    plus[i] += h;
                    minus[i] -= h;
                    let fd = (pair_loss(&plus, &context, &neg_refs)
                        - pair_loss(&minus, &context, &neg_refs))
                        / (2.0 * h);
                    let rel =
                        (fd - grad.center[i]).abs() / fd.abs().max(grad.center[i].abs()).max(1e-8);
                    assert!(rel < 1e-4, "center rel err {rel}");
                }
            }
        }
    }

    #[test]
    fn distances() {
        let emb =
            EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(embedding_distance(&emb, 0, 2).unwrap(), 0.0);
        assert!((embedding_distance(&emb, 0, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            embedding_distance(&emb, 0, 1).unwrap(),
            embedding_distance(&emb, 1, 0).unwrap()
        );
        assert!(matches!(
            embedding_distance(&emb, 0, 3),
            Err(Error::IdOutOfRange { id: 3, count: 3 })
        ));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = WalkCorpus::default();
        assert!(matches!(
            train_sgns(&corpus, &SgnsParams::default(), 3),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn out_of_range_corpus_id() {
        let corpus = WalkCorpus {
            walks: vec![vec![0, 5]],
        };
        assert!(train_sgns(&corpus, &SgnsParams::default(), 3).is_err());
    }

    #[test]
    fn initialization_range() {
        let corpus = WalkCorpus {
            walks: vec![vec![0, 1]],
        };
        let params = SgnsParams {
            dim: 4,
            epochs: 1,
            learning_rate: 1e-12,
            ..Default::default()
        };
        let emb = train_sgns(&corpus, &params, 3).unwrap();
        for v in 0..3 {
            assert!(emb.row(v).iter().all(|x| x.abs() <= 0.125));
        }
    }
}
