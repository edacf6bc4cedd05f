//! Direct simulation on the random graph: sample `G(n,p)`, run `r`-neighbour
//! bootstrap percolation to its fixpoint `A*`.
//!
//! This is the model-independent oracle for the binomial chain: the law of
//! `|A*|` produced here must coincide with the law of the chain's stopping
//! time for the same `(n, p, r, a)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::seeding::stream_rng;

/// Undirected simple graph with adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an edge list; self-loops are rejected, duplicate
    /// edges are collapsed.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { n, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbours(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Writes the edge-list text format: a `n=<n>` header, then one `u v`
    /// pair per line.
    pub fn write_edge_list<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n={}", self.n)?;
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if (v as usize) > u {
                    writeln!(out, "{u} {v}")?;
                }
            }
        }
        Ok(())
    }

    /// Parses the edge-list text format produced by [`Graph::write_edge_list`].
    pub fn read_edge_list<R: std::io::BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-list input".into()))??;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .ok_or_else(|| Error::Parse(format!("expected 'n=<n>' header, got '{header}'")))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad vertex count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut it = trimmed.split_whitespace();
            let u: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("bad edge line '{trimmed}'")))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad edge endpoint: {e}")))?;
            let v: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("bad edge line '{trimmed}'")))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad edge endpoint: {e}")))?;
            edges.push((u, v));
        }
        Self::from_edges(n, &edges)
    }
}

/// Samples `G(n,p)` in `O(n + edges)` time by geometric skipping over the
/// `n(n-1)/2` vertex pairs.
pub fn sample_gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [0,1], got {p}"
        )));
    }
    if p == 0.0 || n < 2 {
        return Graph::from_edges(n, &[]);
    }
    if p == 1.0 {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for v in 1..n {
            for w in 0..v {
                edges.push((v as u32, w as u32));
            }
        }
        return Graph::from_edges(n, &edges);
    }
    let log_q = (-p).ln_1p();
    let mut edges = Vec::new();
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let u: f64 = rng.random();
        let skip = ((-u).ln_1p() / log_q).floor() as i64;
        w += 1 + skip;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((v as u32, w as u32));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Convenience wrapper seeding the crate's stream RNG.
pub fn sample_gnp_seeded(n: usize, p: f64, seed: u64) -> Result<Graph> {
    sample_gnp(n, p, &mut stream_rng(seed, 0))
}

/// When a vertex became active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Initial,
    Round(u32),
    Never,
}

/// Result of running the bootstrap process to its fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PercolationResult {
    /// Number of synchronous rounds until nothing more activates.
    pub rounds: u32,
    /// Sorted ids of the eventually active set `A*`.
    pub active_final: Vec<u32>,
    /// Per-vertex activation round.
    pub activation_round: Vec<Activation>,
}

impl PercolationResult {
    pub fn final_size(&self) -> usize {
        self.active_final.len()
    }
}

/// Runs `r`-neighbour bootstrap percolation from `initial` to the fixpoint.
///
/// Mark-counting closure: each active vertex contributes one mark to every
/// neighbour exactly once; a vertex activates when its counter reaches `r`.
/// Total work is `O(n + edges)`.
pub fn percolate(graph: &Graph, initial: &[usize], r: u32) -> Result<PercolationResult> {
    let n = graph.n();
    let mut active = vec![false; n];
    let mut marks = vec![0u32; n];
    let mut activation = vec![Activation::Never; n];
    let mut frontier: Vec<u32> = Vec::new();
    for &v in initial {
        if v >= n {
            return Err(Error::InvalidParameter(format!(
                "initial vertex {v} out of range for n = {n}"
            )));
        }
        if !active[v] {
            active[v] = true;
            activation[v] = Activation::Initial;
            frontier.push(v as u32);
        }
    }
    let mut rounds = 0u32;
    let mut next_frontier: Vec<u32> = Vec::new();
    while !frontier.is_empty() {
        next_frontier.clear();
        for &u in &frontier {
            for &v in graph.neighbours(u as usize) {
                let v = v as usize;
                if active[v] {
                    continue;
                }
                marks[v] += 1;
                if marks[v] >= r {
                    active[v] = true;
                    next_frontier.push(v as u32);
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        rounds += 1;
        for &v in &next_frontier {
            activation[v as usize] = Activation::Round(rounds);
        }
        std::mem::swap(&mut frontier, &mut next_frontier);
    }
    let active_final: Vec<u32> = (0..n as u32).filter(|&v| active[v as usize]).collect();
    Ok(PercolationResult {
        rounds,
        active_final,
        activation_round: activation,
    })
}

/// Checks the fixpoint conditions on a percolation result: every non-initial
/// active vertex has at least `r` active neighbours, and every inactive
/// vertex has fewer than `r`.
pub fn is_bootstrap_fixpoint(graph: &Graph, result: &PercolationResult, r: u32) -> bool {
    let n = graph.n();
    let mut active = vec![false; n];
    for &v in &result.active_final {
        active[v as usize] = true;
    }
    for v in 0..n {
        let active_neighbours = graph
            .neighbours(v)
            .iter()
            .filter(|&&w| active[w as usize])
            .count() as u32;
        match (active[v], result.activation_round[v]) {
            (true, Activation::Initial) => {}
            (true, Activation::Round(_)) => {
                if active_neighbours < r {
                    return false;
                }
            }
            (true, Activation::Never) | (false, Activation::Initial | Activation::Round(_)) => {
                return false;
            }
            (false, Activation::Never) => {
                if active_neighbours >= r {
                    return false;
                }
            }
        }
    }
    true
}

/// How the initially active set is chosen in batch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialSet {
    /// `{0, ..., a-1}`; by vertex symmetry of `G(n,p)` this is equivalent to
    /// any fixed set of the same size.
    FirstVertices,
    /// A uniformly random `a`-subset, resampled per run.
    UniformRandom,
}

/// Samples `runs` independent `(graph, percolation)` pairs and records the
/// final size `|A*|` of each.
pub fn final_size_samples(
    model: &ModelParams,
    a: u64,
    runs: u64,
    seed: u64,
    initial: InitialSet,
) -> Result<Vec<u64>> {
    let n = model.n() as usize;
    if a as usize > n {
        return Err(Error::InvalidParameter(format!("a = {a} exceeds n = {n}")));
    }
    let r = model.r();
    let p = model.p();
    (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(seed, run);
            let graph = sample_gnp(n, p, &mut rng)?;
            let chosen: Vec<usize> = match initial {
                InitialSet::FirstVertices => (0..a as usize).collect(),
                InitialSet::UniformRandom => rand::seq::index::sample(&mut rng, n, a as usize)
                    .into_iter()
                    .collect(),
            };
            Ok(percolate(&graph, &chosen, r)?.final_size() as u64)
        })
        .collect()
}
