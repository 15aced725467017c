//! The Ross random graph: sampling, connected components, Monte Carlo
//! estimation, and epidemic seeding.
//!
//! Each of the n nodes i draws one target X_i ~ p independently and the
//! (undirected) edge {i, X_i} is added, so every node has degree at least
//! one. The number of undirected connected components equals the minimum
//! number of initially infected people needed to infect everyone.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::ProbVector;
use crate::error::{Error, Result};

/// Cap on the n^n exhaustive expectation.
pub const MAX_EXHAUSTIVE_N: usize = 7;

/// One sampled edge set {(i, X_i)} with 1-based targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRealization", into = "RawRealization")]
pub struct GraphRealization {
    n: usize,
    targets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawRealization {
    n: usize,
    targets: Vec<usize>,
}

impl GraphRealization {
    pub fn new(n: usize, targets: Vec<usize>) -> Result<Self> {
        if targets.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: targets.len(),
            });
        }
        for &t in &targets {
            if t < 1 || t > n {
                return Err(Error::InvalidSeed { node: t, n });
            }
        }
        Ok(Self { n, targets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based targets X_1..X_n.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

impl TryFrom<RawRealization> for GraphRealization {
    type Error = Error;
    fn try_from(raw: RawRealization) -> Result<Self> {
        Self::new(raw.n, raw.targets)
    }
}

impl From<GraphRealization> for RawRealization {
    fn from(g: GraphRealization) -> Self {
        RawRealization {
            n: g.n,
            targets: g.targets,
        }
    }
}

/// A seeded Monte Carlo estimate of the expected component count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when the union merged two distinct components.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

fn cumulative(p: &ProbVector) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &v in p.values() {
        acc += v;
        cdf.push(acc);
    }
    // Guard the top so u in [0, 1) always lands inside.
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

fn sample_targets(cdf: &[f64], rng: &mut impl Rng) -> Vec<usize> {
    (0..cdf.len())
        .map(|_| {
            let u = rng.random::<f64>();
            // First index with cdf > u; the slot width of outcome j is p_j.
            cdf.partition_point(|&c| c <= u) + 1
        })
        .collect()
}

/// Samples one realization; deterministic given the seed.
pub fn sample_graph(p: &ProbVector, rng_seed: u64) -> GraphRealization {
    sample_graph_stream(p, rng_seed, 0)
}

/// Samples the realization of one counter-derived stream, so a batch of
/// trials is reproducible independent of scheduling. Trial t of
/// [`mc_expected_components`] is exactly `sample_graph_stream(p, seed, t)`.
pub fn sample_graph_stream(p: &ProbVector, rng_seed: u64, stream: u64) -> GraphRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(stream);
    let cdf = cumulative(p);
    GraphRealization {
        n: p.len(),
        targets: sample_targets(&cdf, &mut rng),
    }
}

/// Number of connected components of the undirected graph with edges
/// {i, X_i}. Self-loops add no union.
pub fn count_components(g: &GraphRealization) -> usize {
    let mut uf = UnionFind::new(g.n);
    let mut components = g.n;
    for (i, &t) in g.targets.iter().enumerate() {
        if uf.union(i, t - 1) {
            components -= 1;
        }
    }
    components
}

fn count_components_targets(targets: &[usize]) -> usize {
    let mut uf = UnionFind::new(targets.len());
    let mut components = targets.len();
    for (i, &t) in targets.iter().enumerate() {
        if uf.union(i, t - 1) {
            components -= 1;
        }
    }
    components
}

/// Monte Carlo estimate of E[C] over independent realizations.
///
/// Trial t uses its own counter-derived RNG stream, so the estimate is
/// identical no matter how trials are scheduled. The accumulators are
/// integers, so the result is also bit-exact regardless of summation order.
pub fn mc_expected_components(p: &ProbVector, trials: u64, seed: u64) -> McEstimate {
    assert!(trials >= 1);
    let cdf = cumulative(p);
    let mut sum: u64 = 0;
    let mut sum_sq: u128 = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let c = count_components_targets(&sample_targets(&cdf, &mut rng)) as u64;
        sum += c;
        sum_sq += (c as u128) * (c as u128);
    }
    let t = trials as f64;
    let mean = sum as f64 / t;
    let std_error = if trials > 1 {
        let variance = (sum_sq as f64 - (sum as f64) * (sum as f64) / t) / (t - 1.0);
        (variance.max(0.0) / t).sqrt()
    } else {
        0.0
    };
    McEstimate {
        mean,
        std_error,
        trials,
        seed,
    }
}

/// Direct expectation over all n^n target tuples; the combinatorial oracle
/// for the closed-form expectation.
pub fn expected_components_exhaustive(p: &ProbVector) -> Result<f64> {
    let n = p.len();
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::TooLarge {
            what: "expected_components_exhaustive",
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    let v = p.values();
    let mut targets = vec![1usize; n];
    let mut total = 0.0;
    // Depth-first over tuples, pruning zero-probability branches.
    fn recurse(v: &[f64], targets: &mut Vec<usize>, depth: usize, prob: f64, total: &mut f64) {
        if prob == 0.0 {
            return;
        }
        if depth == v.len() {
            *total += prob * count_components_targets(targets) as f64;
            return;
        }
        for j in 0..v.len() {
            targets[depth] = j + 1;
            recurse(v, targets, depth + 1, prob * v[j], total);
        }
    }
    recurse(v, &mut targets, 0, 1.0, &mut total);
    Ok(total)
}

/// Nodes reachable from `seeds` along undirected edges (the two-sided
/// epidemic process). Nodes are 1-based.
pub fn epidemic_spread(g: &GraphRealization, seeds: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    for &s in seeds {
        if s < 1 || s > g.n {
            return Err(Error::InvalidSeed { node: s, n: g.n });
        }
    }
    let mut adjacency = vec![Vec::new(); g.n];
    for (i, &t) in g.targets.iter().enumerate() {
        let j = t - 1;
        adjacency[i].push(j);
        if i != j {
            adjacency[j].push(i);
        }
    }
    let mut infected = vec![false; g.n];
    let mut queue: Vec<usize> = seeds.iter().map(|&s| s - 1).collect();
    for &s in &queue {
        infected[s] = true;
    }
    while let Some(node) = queue.pop() {
        for &next in &adjacency[node] {
            if !infected[next] {
                infected[next] = true;
                queue.push(next);
            }
        }
    }
    Ok(infected
        .iter()
        .enumerate()
        .filter(|&(_, &hit)| hit)
        .map(|(i, _)| i + 1)
        .collect())
}

/// Minimum number of initially infected nodes that infects everyone:
/// one per connected component.
pub fn min_seeds(g: &GraphRealization) -> usize {
    count_components(g)
}

/// One representative node (1-based) from each connected component.
pub fn component_representatives(g: &GraphRealization) -> Vec<usize> {
    let mut uf = UnionFind::new(g.n);
    for (i, &t) in g.targets.iter().enumerate() {
        uf.union(i, t - 1);
    }
    let mut seen = BTreeSet::new();
    let mut reps = Vec::new();
    for i in 0..g.n {
        let root = uf.find(i);
        if seen.insert(root) {
            reps.push(i + 1);
        }
    }
    reps
}
