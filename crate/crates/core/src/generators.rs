//! Seeded instance generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{CoverError, DpCover};
use crate::graph::{contains_kst, Graph, GraphError, VertexId, DEFAULT_KST_BUDGET};
use crate::rng::{derive, rng, Seed};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("no simple {d}-regular graph on {n} vertices after {restarts} restarts")]
    PairingBudget { n: usize, d: usize, restarts: usize },
    #[error("girth >= 5 not reached for n={n}, d={d}: {rejections} rejected samples, {swaps} swaps tried, {short_cycles} short cycles left")]
    GirthBudget { n: usize, d: usize, rejections: usize, swaps: usize, short_cycles: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cover(#[from] Box<CoverError>),
}

/// Budgets for [`random_girth5_regular_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GirthBudget {
    /// fresh samples checked before switching to edge swaps
    pub rejections: usize,
    /// proposed swaps before giving up
    pub swap_attempts: usize,
}

impl Default for GirthBudget {
    fn default() -> Self {
        GirthBudget { rejections: 1000, swap_attempts: 200_000 }
    }
}

const PAIRING_RESTARTS: usize = 1000;

fn check_regular(n: usize, d: usize) -> Result<(), GenError> {
    if n * d % 2 == 1 {
        return Err(GenError::Params(format!("n*d = {n}*{d} is odd")));
    }
    if d >= n && !(n == 0 && d == 0) {
        return Err(GenError::Params(format!("need d < n, got d={d}, n={n}")));
    }
    Ok(())
}

/// Simple `d`-regular graph from the pairing model. Points are matched one
/// pair at a time; a pair that would form a loop or a parallel edge is
/// redrawn, and the whole pairing restarts if no admissible pair is left.
pub fn random_regular(n: usize, d: usize, seed: Seed) -> Result<Graph, GenError> {
    check_regular(n, d)?;
    let mut r = rng(seed);
    for _ in 0..PAIRING_RESTARTS {
        if let Some(adj) = try_pairing(n, d, &mut r) {
            return Ok(Graph::from_adjacency_unchecked(adj));
        }
    }
    Err(GenError::PairingBudget { n, d, restarts: PAIRING_RESTARTS })
}

fn try_pairing(n: usize, d: usize, r: &mut ChaCha8Rng) -> Option<Vec<Vec<VertexId>>> {
    let mut points: Vec<VertexId> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::with_capacity(d); n];
    let ok = |adj: &[Vec<VertexId>], u: VertexId, v: VertexId| u != v && !adj[u].contains(&v);
    while !points.is_empty() {
        let len = points.len();
        let mut found = None;
        for _ in 0..64 {
            let (i, j) = (r.gen_range(0..len), r.gen_range(0..len));
            if i != j && ok(&adj, points[i], points[j]) {
                found = Some((i, j));
                break;
            }
        }
        if found.is_none() {
            // few points left: look for any admissible pair, pick one uniformly
            let mut admissible = Vec::new();
            for i in 0..len {
                for j in i + 1..len {
                    if ok(&adj, points[i], points[j]) {
                        admissible.push((i, j));
                    }
                }
            }
            if admissible.is_empty() {
                return None;
            }
            found = Some(admissible[r.gen_range(0..admissible.len())]);
        }
        let (i, j) = found.expect("pair chosen");
        let (u, v) = (points[i], points[j]);
        adj[u].push(v);
        adj[v].push(u);
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        points.swap_remove(hi);
        points.swap_remove(lo);
    }
    Some(adj)
}

pub fn random_girth5_regular(n: usize, d: usize, seed: Seed) -> Result<Graph, GenError> {
    random_girth5_regular_with(n, d, seed, GirthBudget::default())
}

/// `d`-regular graph of girth at least 5: resample until the girth is large
/// enough, then fall back to double-edge swaps that never create a cycle of
/// length at most 4.
pub fn random_girth5_regular_with(n: usize, d: usize, seed: Seed, budget: GirthBudget) -> Result<Graph, GenError> {
    check_regular(n, d)?;
    if n <= d * d {
        return Err(GenError::Params(format!("need n > d^2 for girth 5, got n={n}, d={d}")));
    }
    let mut last = None;
    for k in 0..budget.rejections.max(1) {
        let g = random_regular(n, d, derive(seed, k as u64))?;
        if g.girth().is_none_or(|x| x >= 5) {
            return Ok(g);
        }
        last = Some(g);
    }
    let mut adj: Vec<Vec<VertexId>> = last.expect("at least one sample").adjacency().to_vec();
    let mut r = rng(derive(seed, u64::MAX));
    let mut bad: Vec<(VertexId, VertexId)> = Vec::new();
    let mut swaps = 0;
    let mut mark = vec![0u32; n];
    let mut stamp = 0u32;
    loop {
        if bad.is_empty() {
            bad = short_cycle_edges(&adj);
            if bad.is_empty() {
                return Ok(Graph::from_adjacency_unchecked(adj));
            }
            bad.shuffle(&mut r);
        }
        let (u, v) = *bad.last().expect("nonempty");
        if !adj[u].contains(&v) || far_apart(&adj, u, v, &mut mark, &mut stamp) {
            bad.pop();
            continue;
        }
        if swaps >= budget.swap_attempts {
            let left = short_cycle_edges(&adj).len();
            return Err(GenError::GirthBudget {
                n,
                d,
                rejections: budget.rejections,
                swaps,
                short_cycles: left,
            });
        }
        swaps += 1;
        let x = r.gen_range(0..n);
        let y = adj[x][r.gen_range(0..d)];
        if [x, y].iter().any(|z| *z == u || *z == v) || adj[u].contains(&x) || adj[v].contains(&y) {
            continue;
        }
        remove_edge(&mut adj, u, v);
        remove_edge(&mut adj, x, y);
        adj[u].push(x);
        adj[x].push(u);
        adj[v].push(y);
        adj[y].push(v);
        let good = far_apart(&adj, u, x, &mut mark, &mut stamp) && far_apart(&adj, v, y, &mut mark, &mut stamp);
        if good {
            bad.pop();
        } else {
            remove_edge(&mut adj, u, x);
            remove_edge(&mut adj, v, y);
            adj[u].push(v);
            adj[v].push(u);
            adj[x].push(y);
            adj[y].push(x);
        }
    }
}

fn remove_edge(adj: &mut [Vec<VertexId>], u: VertexId, v: VertexId) {
    adj[u].retain(|&w| w != v);
    adj[v].retain(|&w| w != u);
}

/// Is the edge `ab` (present in `adj`) free of cycles of length at most 4,
/// i.e. `dist(a, b) >= 4` once `ab` is removed.
fn far_apart(adj: &[Vec<VertexId>], a: VertexId, b: VertexId, mark: &mut [u32], stamp: &mut u32) -> bool {
    *stamp += 1;
    let s = *stamp;
    // ball of radius 2 around a avoiding the edge ab
    mark[a] = s;
    for &w in &adj[a] {
        if w == b {
            continue;
        }
        mark[w] = s;
        for &z in &adj[w] {
            mark[z] = s;
        }
    }
    if mark[b] == s {
        return false;
    }
    adj[b].iter().all(|&w| w == a || mark[w] != s)
}

/// Edges lying on a cycle of length 3 or 4.
fn short_cycle_edges(adj: &[Vec<VertexId>]) -> Vec<(VertexId, VertexId)> {
    let mut mark = vec![0u32; adj.len()];
    let mut stamp = 0;
    let mut out = Vec::new();
    for u in 0..adj.len() {
        for &v in &adj[u] {
            if u < v && !far_apart(adj, u, v, &mut mark, &mut stamp) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Cover with lists `{vℓ, …, vℓ+ℓ−1}`. For each base edge in lexicographic
/// order, a uniform bijection between the two lists is drawn and each of its
/// `ℓ` pairs is kept independently with probability `rho`.
pub fn random_dp_cover(g: &Graph, ell: usize, rho: f64, seed: Seed) -> Result<DpCover, GenError> {
    if ell == 0 {
        return Err(GenError::Params("ell must be positive".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(GenError::Params(format!("rho = {rho} not in [0, 1]")));
    }
    let mut r = rng(seed);
    let n = g.vertex_count();
    let mut adj = vec![Vec::new(); n * ell];
    let mut perm: Vec<usize> = (0..ell).collect();
    for (u, v) in g.edges() {
        perm.shuffle(&mut r);
        for (i, &j) in perm.iter().enumerate() {
            if r.gen::<f64>() < rho {
                let (a, b) = (u * ell + i, v * ell + j);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    let lists = (0..n).map(|v| (v * ell..(v + 1) * ell).collect()).collect();
    DpCover::from_parts(g.clone(), Graph::from_adjacency_unchecked(adj), lists).map_err(|e| Box::new(e).into())
}

/// List-coloring cover: every vertex draws `ell` distinct labels uniformly
/// from `0..palette`.
pub fn random_list_cover(g: &Graph, ell: usize, palette: usize, seed: Seed) -> Result<DpCover, GenError> {
    if ell == 0 || ell > palette {
        return Err(GenError::Params(format!("need 1 <= ell <= palette, got ell={ell}, palette={palette}")));
    }
    let mut r = rng(seed);
    let labels: Vec<Vec<usize>> =
        (0..g.vertex_count()).map(|_| rand::seq::index::sample(&mut r, palette, ell).into_vec()).collect();
    DpCover::from_list_assignment(g, &labels).map_err(|e| Box::new(e).into())
}

/// Bipartite graph on `X = 0..m`, `Y = m..m+n` with no `K_{s,t}` whose
/// `s`-side lies in `X`, grown greedily over shuffled candidate pairs.
pub fn kst_free_bipartite(m: usize, n: usize, s: usize, t: usize, seed: Seed) -> Result<Graph, GenError> {
    if m < n || n == 0 || s == 0 || t == 0 {
        return Err(GenError::Params(format!("need m >= n >= 1 and s, t >= 1 (m={m}, n={n}, s={s}, t={t})")));
    }
    let mut r = rng(seed);
    let mut pairs: Vec<(VertexId, VertexId)> = (0..m).flat_map(|x| (m..m + n).map(move |y| (x, y))).collect();
    pairs.shuffle(&mut r);
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); m + n];
    for (x, y) in pairs {
        if !creates_kst(&adj, x, y, s, t) {
            adj[x].push(y);
            adj[y].push(x);
        }
    }
    let g = Graph::from_adjacency_unchecked(adj);
    let xs: Vec<VertexId> = (0..m).collect();
    let ys: Vec<VertexId> = (m..m + n).collect();
    assert!(
        !contains_kst(&g, Some((&xs, &ys)), s, t, DEFAULT_KST_BUDGET)?,
        "greedy construction produced a K_{{s,t}}"
    );
    Ok(g)
}

/// Would adding `xy` complete a `K_{s,t}` with `x` on the `s`-side?
/// Such a copy uses `x`, `s-1` further neighbors of `y`, and `t` common
/// neighbors including `y`.
fn creates_kst(adj: &[Vec<VertexId>], x: VertexId, y: VertexId, s: usize, t: usize) -> bool {
    let mut common: Vec<VertexId> = adj[x].clone();
    common.push(y);
    if common.len() < t {
        return false;
    }
    let others: Vec<VertexId> = adj[y].iter().copied().filter(|&w| w != x).collect();
    fn grow(adj: &[Vec<VertexId>], others: &[VertexId], from: usize, common: &[VertexId], need: usize, t: usize) -> bool {
        if need == 0 {
            return true;
        }
        for k in from..others.len() {
            let w = others[k];
            // y is adjacent to w, so it survives the intersection
            let next: Vec<VertexId> = common.iter().copied().filter(|c| adj[w].contains(c)).collect();
            if next.len() >= t && grow(adj, others, k + 1, &next, need - 1, t) {
                return true;
            }
        }
        false
    }
    grow(adj, &others, 0, &common, s - 1, t)
}

/// A reproducible generator invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenSpec {
    Regular { n: usize, d: usize, seed: Seed },
    Girth5Regular { n: usize, d: usize, seed: Seed },
    /// random cover over a random `d`-regular base (girth at least 5 if `girth5`)
    DpCover {
        n: usize,
        d: usize,
        ell: usize,
        rho: f64,
        seed: Seed,
        #[serde(default)]
        girth5: bool,
    },
    ListCover {
        n: usize,
        d: usize,
        ell: usize,
        palette: usize,
        seed: Seed,
        #[serde(default)]
        girth5: bool,
    },
    KstFreeBipartite { m: usize, n: usize, s: usize, t: usize, seed: Seed },
}

#[derive(Clone, Debug)]
pub enum Generated {
    Graph(Graph),
    Cover(DpCover),
}

impl GenSpec {
    pub fn seed(&self) -> Seed {
        match *self {
            GenSpec::Regular { seed, .. }
            | GenSpec::Girth5Regular { seed, .. }
            | GenSpec::DpCover { seed, .. }
            | GenSpec::ListCover { seed, .. }
            | GenSpec::KstFreeBipartite { seed, .. } => seed,
        }
    }

    pub fn generate(&self) -> Result<Generated, GenError> {
        Ok(match *self {
            GenSpec::Regular { n, d, seed } => Generated::Graph(random_regular(n, d, seed)?),
            GenSpec::Girth5Regular { n, d, seed } => Generated::Graph(random_girth5_regular(n, d, seed)?),
            GenSpec::DpCover { n, d, ell, rho, seed, girth5 } => {
                let base = regular_base(n, d, girth5, derive(seed, 0))?;
                Generated::Cover(random_dp_cover(&base, ell, rho, derive(seed, 1))?)
            }
            GenSpec::ListCover { n, d, ell, palette, seed, girth5 } => {
                let base = regular_base(n, d, girth5, derive(seed, 0))?;
                Generated::Cover(random_list_cover(&base, ell, palette, derive(seed, 1))?)
            }
            GenSpec::KstFreeBipartite { m, n, s, t, seed } => Generated::Graph(kst_free_bipartite(m, n, s, t, seed)?),
        })
    }
}

fn regular_base(n: usize, d: usize, girth5: bool, seed: Seed) -> Result<Graph, GenError> {
    if girth5 {
        random_girth5_regular(n, d, seed)
    } else {
        random_regular(n, d, seed)
    }
}
