//! C ABI over the crosswalk library.
//!
//! Objects cross the boundary as opaque handles created by `cw_*` constructors
//! and released with the matching `cw_*_free`. Every fallible call returns a
//! [`CwStatus`]; on failure [`cw_last_error_message`] describes the error for
//! the calling thread. Panics are caught and reported as
//! [`CwStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use crosswalk::diffusion::{
    estimate_influence, kmedoids_seeds, ActivationProbs, IcParams, SeedSet,
};
use crosswalk::embedding::{train_sgns, EmbeddingMatrix, SgnsParams};
use crosswalk::graph::{
    load_edge_list, load_groups, sbm_generate, Graph, GroupAssignment, IdMap, SbmSpec,
};
use crosswalk::metrics::{disparity, GroupPerformance};
use crosswalk::reweight::{estimate_proximity, reweight, Method, ReweightParams};
use crosswalk::walker::{generate_walks, WalkCorpus, WalkMode, WalkParams};
use crosswalk::Error;

pub const CW_METHOD_DEEPWALK: u32 = 0;
pub const CW_METHOD_FAIRWALK: u32 = 1;
pub const CW_METHOD_CROSSWALK: u32 = 2;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    GuardExceeded = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

/// A graph with its node names and, optionally, group labels.
pub struct CwGraph {
    graph: Graph,
    ids: IdMap,
    groups: Option<GroupAssignment>,
}

/// Random-walk corpus.
pub struct CwCorpus {
    corpus: WalkCorpus,
    node_count: usize,
}

/// Node embedding matrix.
pub struct CwEmbedding {
    embedding: EmbeddingMatrix,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CwWalkParams {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Node2Vec return parameter; used when `second_order` is nonzero.
    pub return_param: f64,
    pub inout_param: f64,
    pub second_order: u8,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CwSgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Nonzero for single-threaded, bit-reproducible training.
    pub deterministic: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CwStatus {
    match err {
        Error::Io { .. } => CwStatus::Io,
        Error::Parse { .. } | Error::Config { .. } => CwStatus::Parse,
        Error::InvalidParam(_) => CwStatus::InvalidArgument,
        Error::GuardExceeded { .. } => CwStatus::GuardExceeded,
        Error::IdOutOfRange { .. } => CwStatus::OutOfRange,
        Error::Stage { source, .. } => status_of(source),
        _ => CwStatus::Validation,
    }
}

fn fail(status: CwStatus, message: impl Into<String>) -> CwStatus {
    set_error(message.into());
    status
}

fn from_error(err: Error) -> CwStatus {
    let mut message = err.to_string();
    let mut source = std::error::Error::source(&err);
    while let Some(s) = source {
        message.push_str(": ");
        message.push_str(&s.to_string());
        source = s.source();
    }
    fail(status_of(&err), message)
}

/// Runs `body`, turning panics into [`CwStatus::Internal`].
fn guard(body: impl FnOnce() -> CwStatus) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(CwStatus::Internal, format!("internal error: {what}"))
        }
    }
}

macro_rules! try_cw {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return from_error(err),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(CwStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, CwStatus> {
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(CwStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize) -> &'a [T] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(p, len)
    }
}

fn groups_of(g: &CwGraph) -> Result<&GroupAssignment, CwStatus> {
    g.groups
        .as_ref()
        .ok_or_else(|| fail(CwStatus::InvalidArgument, "graph has no group labels"))
}

fn boxed<T>(value: T, out: *mut *mut T) -> CwStatus {
    // SAFETY: callers check `out` for null first
    unsafe { *out = Box::into_raw(Box::new(value)) };
    CwStatus::Ok
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn cw_walk_params_default() -> CwWalkParams {
    let d = WalkParams::default();
    CwWalkParams {
        walks_per_node: d.walks_per_node,
        walk_length: d.walk_length,
        return_param: d.return_param,
        inout_param: d.inout_param,
        second_order: 0,
        seed: 0,
    }
}

#[no_mangle]
pub extern "C" fn cw_sgns_params_default() -> CwSgnsParams {
    let d = SgnsParams::default();
    CwSgnsParams {
        dim: d.dim,
        window: d.window,
        negatives: d.negatives,
        epochs: d.epochs,
        learning_rate: d.learning_rate,
        seed: 0,
        deterministic: 1,
    }
}

/// Loads an edge list and, when `groups_path` is not NULL, a group file.
///
/// # Safety
/// `edges_path` and a non-NULL `groups_path` must be NUL-terminated strings;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_load(
    edges_path: *const c_char,
    groups_path: *const c_char,
    directed: u8,
    out: *mut *mut CwGraph,
) -> CwStatus {
    guard(|| {
        non_null!(edges_path, out);
        let edges = match path_arg(edges_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let loaded = try_cw!(load_edge_list(&edges, directed == 0));
        let groups = if groups_path.is_null() {
            None
        } else {
            let path = match path_arg(groups_path) {
                Ok(p) => p,
                Err(s) => return s,
            };
            Some(try_cw!(load_groups(&path, &loaded.ids)))
        };
        boxed(
            CwGraph {
                graph: loaded.graph,
                ids: loaded.ids,
                groups,
            },
            out,
        )
    })
}

/// Undirected stochastic block model. `inter_probs` has one entry per
/// unordered group pair in the order (0,1), (0,2), ..., (1,2), ...
///
/// # Safety
/// `sizes` and `intra_probs` must hold `group_count` values, `inter_probs`
/// `group_count * (group_count - 1) / 2`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_sbm(
    sizes: *const usize,
    intra_probs: *const f64,
    inter_probs: *const f64,
    group_count: usize,
    seed: u64,
    out: *mut *mut CwGraph,
) -> CwStatus {
    guard(|| {
        non_null!(sizes, intra_probs, out);
        if group_count > 1 {
            non_null!(inter_probs);
        }
        let spec = SbmSpec {
            group_sizes: slice_arg(sizes, group_count).to_vec(),
            intra_probs: slice_arg(intra_probs, group_count).to_vec(),
            inter_probs: slice_arg(inter_probs, group_count * group_count.saturating_sub(1) / 2)
                .to_vec(),
            rng_seed: seed,
        };
        let (graph, groups) = try_cw!(sbm_generate(&spec));
        let ids = IdMap::numeric(graph.node_count());
        boxed(
            CwGraph {
                graph,
                ids,
                groups: Some(groups),
            },
            out,
        )
    })
}

/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_node_count(graph: *const CwGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.node_count())
}

/// Number of stored arcs (an undirected edge counts twice).
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_arc_count(graph: *const CwGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.arc_count())
}

/// Copies group labels into `out` (length `len` >= node count).
///
/// # Safety
/// `graph` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_groups(
    graph: *const CwGraph,
    out: *mut usize,
    len: usize,
) -> CwStatus {
    guard(|| {
        non_null!(graph, out);
        let g = &*graph;
        let groups = match groups_of(g) {
            Ok(gr) => gr,
            Err(s) => return s,
        };
        if len < g.graph.node_count() {
            return fail(
                CwStatus::BufferTooSmall,
                format!("need {} slots", g.graph.node_count()),
            );
        }
        std::slice::from_raw_parts_mut(out, len)[..groups.labels().len()]
            .copy_from_slice(groups.labels());
        CwStatus::Ok
    })
}

/// Walk graph for one of the `CW_METHOD_*` methods. The result keeps the
/// input's groups and is only accepted by walk generation, not by
/// evaluation.
///
/// # Safety
/// `graph` must be a live handle with groups; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_reweight(
    graph: *const CwGraph,
    method: u32,
    alpha: f64,
    p_exponent: f64,
    walk_count_r: usize,
    walk_length_d: usize,
    seed: u64,
    out: *mut *mut CwGraph,
) -> CwStatus {
    guard(|| {
        non_null!(graph, out);
        let g = &*graph;
        let method = match method {
            CW_METHOD_DEEPWALK => Method::DeepWalk,
            CW_METHOD_FAIRWALK => Method::FairWalk,
            CW_METHOD_CROSSWALK => Method::CrossWalk,
            other => return fail(CwStatus::InvalidArgument, format!("unknown method {other}")),
        };
        let groups = match groups_of(g) {
            Ok(gr) => gr,
            Err(s) => return s,
        };
        let params = ReweightParams {
            alpha,
            p_exponent,
            walk_count_r,
            walk_length_d,
            rng_seed: seed,
        };
        let (rw, _) = try_cw!(reweight(method, &g.graph, groups, &params));
        boxed(
            CwGraph {
                graph: rw,
                ids: g.ids.clone(),
                groups: g.groups.clone(),
            },
            out,
        )
    })
}

/// Monte-Carlo proximity m(v) for every node into `out` (length `len`).
///
/// # Safety
/// `graph` must be a live handle with groups; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cw_proximity(
    graph: *const CwGraph,
    walk_count_r: usize,
    walk_length_d: usize,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> CwStatus {
    guard(|| {
        non_null!(graph, out);
        let g = &*graph;
        let groups = match groups_of(g) {
            Ok(gr) => gr,
            Err(s) => return s,
        };
        let n = g.graph.node_count();
        if len < n {
            return fail(CwStatus::BufferTooSmall, format!("need {n} slots"));
        }
        let params = ReweightParams {
            walk_count_r,
            walk_length_d,
            rng_seed: seed,
            ..Default::default()
        };
        let prox = try_cw!(estimate_proximity(&g.graph, groups, &params));
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&prox.m);
        CwStatus::Ok
    })
}

/// # Safety
/// `graph` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cw_graph_free(graph: *mut CwGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_walks_generate(
    graph: *const CwGraph,
    params: *const CwWalkParams,
    out: *mut *mut CwCorpus,
) -> CwStatus {
    guard(|| {
        non_null!(graph, params, out);
        let (g, p) = (&*graph, &*params);
        let walk = WalkParams {
            walks_per_node: p.walks_per_node,
            walk_length: p.walk_length,
            return_param: p.return_param,
            inout_param: p.inout_param,
            mode: if p.second_order != 0 {
                WalkMode::SecondOrder
            } else {
                WalkMode::FirstOrder
            },
            rng_seed: p.seed,
        };
        let corpus = try_cw!(generate_walks(&g.graph, &walk));
        boxed(
            CwCorpus {
                corpus,
                node_count: g.graph.node_count(),
            },
            out,
        )
    })
}

/// Number of walks in the corpus.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_corpus_len(corpus: *const CwCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.corpus.len())
}

/// Copies walk `index` into `out`; `*written` receives its length.
///
/// # Safety
/// `corpus` must be a live handle, `out` must hold `len` values and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_corpus_walk(
    corpus: *const CwCorpus,
    index: usize,
    out: *mut usize,
    len: usize,
    written: *mut usize,
) -> CwStatus {
    guard(|| {
        non_null!(corpus, out, written);
        let c = &*corpus;
        let Some(walk) = c.corpus.walks.get(index) else {
            return fail(
                CwStatus::OutOfRange,
                format!("walk {index} of {}", c.corpus.len()),
            );
        };
        *written = walk.len();
        if len < walk.len() {
            return fail(
                CwStatus::BufferTooSmall,
                format!("need {} slots", walk.len()),
            );
        }
        std::slice::from_raw_parts_mut(out, walk.len()).copy_from_slice(walk);
        CwStatus::Ok
    })
}

/// # Safety
/// `corpus` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cw_corpus_free(corpus: *mut CwCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Trains skip-gram with negative sampling on the corpus.
///
/// # Safety
/// `corpus` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_embed(
    corpus: *const CwCorpus,
    params: *const CwSgnsParams,
    out: *mut *mut CwEmbedding,
) -> CwStatus {
    guard(|| {
        non_null!(corpus, params, out);
        let (c, p) = (&*corpus, &*params);
        let sgns = SgnsParams {
            dim: p.dim,
            window: p.window,
            negatives: p.negatives,
            epochs: p.epochs,
            learning_rate: p.learning_rate,
            rng_seed: p.seed,
            deterministic: p.deterministic != 0,
        };
        let embedding = try_cw!(train_sgns(&c.corpus, &sgns, c.node_count));
        boxed(CwEmbedding { embedding }, out)
    })
}

/// # Safety
/// `emb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_embedding_dim(emb: *const CwEmbedding) -> usize {
    emb.as_ref().map_or(0, |e| e.embedding.dim())
}

/// # Safety
/// `emb` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_embedding_node_count(emb: *const CwEmbedding) -> usize {
    emb.as_ref().map_or(0, |e| e.embedding.node_count())
}

/// Copies the vector of `node` into `out` (length `len` >= dim).
///
/// # Safety
/// `emb` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cw_embedding_row(
    emb: *const CwEmbedding,
    node: usize,
    out: *mut f64,
    len: usize,
) -> CwStatus {
    guard(|| {
        non_null!(emb, out);
        let e = &(*emb).embedding;
        try_cw!(e.check_id(node));
        if len < e.dim() {
            return fail(CwStatus::BufferTooSmall, format!("need {} slots", e.dim()));
        }
        std::slice::from_raw_parts_mut(out, e.dim()).copy_from_slice(e.row(node));
        CwStatus::Ok
    })
}

/// # Safety
/// `emb` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cw_embedding_free(emb: *mut CwEmbedding) {
    if !emb.is_null() {
        drop(Box::from_raw(emb));
    }
}

/// k-medoids seed nodes into `out` (length `len` >= k), ascending;
/// `*written` receives the count.
///
/// # Safety
/// `emb` must be a live handle, `out` must hold `len` values and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_kmedoids(
    emb: *const CwEmbedding,
    k: usize,
    restarts: usize,
    seed: u64,
    out: *mut usize,
    len: usize,
    written: *mut usize,
) -> CwStatus {
    guard(|| {
        non_null!(emb, out, written);
        if len < k {
            return fail(CwStatus::BufferTooSmall, format!("need {k} slots"));
        }
        let seeds = try_cw!(kmedoids_seeds(&(*emb).embedding, k, restarts, seed));
        std::slice::from_raw_parts_mut(out, seeds.len()).copy_from_slice(seeds.seeds());
        *written = seeds.len();
        CwStatus::Ok
    })
}

/// Monte-Carlo IC influence of `seeds` with constant probability
/// `ic_prob` on an original (not reweighted) graph. Writes the expected
/// fraction of all nodes to `*total` and per-group fractions to
/// `per_group` (length `groups_len` >= group count).
///
/// # Safety
/// `graph` must be a live handle with groups, `seeds` must hold
/// `seed_count` values, `per_group` must hold `groups_len` values and
/// `total` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_influence(
    graph: *const CwGraph,
    seeds: *const usize,
    seed_count: usize,
    ic_prob: f64,
    samples: usize,
    seed: u64,
    total: *mut f64,
    per_group: *mut f64,
    groups_len: usize,
) -> CwStatus {
    guard(|| {
        non_null!(graph, total, per_group);
        if seed_count > 0 {
            non_null!(seeds);
        }
        let g = &*graph;
        let groups = match groups_of(g) {
            Ok(gr) => gr,
            Err(s) => return s,
        };
        if groups_len < groups.group_count() {
            return fail(
                CwStatus::BufferTooSmall,
                format!("need {} slots", groups.group_count()),
            );
        }
        let set = try_cw!(SeedSet::from_nodes(slice_arg(seeds, seed_count).to_vec()));
        let params = IcParams {
            probs: ActivationProbs::Constant(ic_prob),
            samples,
            rng_seed: seed,
        };
        let est = try_cw!(estimate_influence(&g.graph, groups, &set, &params));
        *total = est.total_fraction;
        std::slice::from_raw_parts_mut(per_group, est.per_group_fraction.len())
            .copy_from_slice(&est.per_group_fraction);
        CwStatus::Ok
    })
}

/// Population variance of `scores`.
///
/// # Safety
/// `scores` must hold `len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_disparity(scores: *const f64, len: usize, out: *mut f64) -> CwStatus {
    guard(|| {
        non_null!(out);
        if len > 0 {
            non_null!(scores);
        }
        let q = slice_arg(scores, len).to_vec();
        let perf = GroupPerformance {
            q_total: 0.0,
            group_sizes: vec![1; q.len()],
            q_by_group: q,
        };
        *out = disparity(&perf);
        CwStatus::Ok
    })
}
