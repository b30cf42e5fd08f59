//! Simple undirected graphs with dense vertex ids and sorted adjacency lists.
//!
//! Both base graphs and cover graphs use this representation. Values are
//! immutable once built; every constructor re-establishes simplicity and
//! symmetry.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

pub type VertexId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("vertex id {id} out of range for {vertex_count} vertices")]
    OutOfRange { id: VertexId, vertex_count: usize },
    #[error("adjacency is not symmetric: {0} lists {1} but not vice versa")]
    Asymmetric(VertexId, VertexId),
    #[error("K_{{s,t}} search budget exceeded ({needed} > {budget}); use a smaller instance or a larger budget")]
    BudgetExceeded { needed: f64, budget: f64 },
    #[error("left and right vertex sets must be disjoint (vertex {0} in both)")]
    OverlappingSides(VertexId),
    #[error("Kővári–Sós–Turán bound needs m >= n >= 1 and s, t >= 1 (got m={m}, n={n}, s={s}, t={t})")]
    KstPrecondition { m: usize, n: usize, s: usize, t: usize },
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<VertexId>>,
}

impl Graph {
    pub fn empty(vertex_count: usize) -> Self {
        Graph { adj: vec![Vec::new(); vertex_count] }
    }

    /// Builds a graph from an edge list. Loops and repeated edges are rejected.
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut adj = vec![Vec::new(); vertex_count];
        for (u, v) in edges {
            for id in [u, v] {
                if id >= vertex_count {
                    return Err(GraphError::OutOfRange { id, vertex_count });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(u.min(w[0]), u.max(w[0])));
            }
        }
        Ok(Graph { adj })
    }

    /// Builds a graph from per-vertex neighbor lists, checking every invariant.
    pub fn from_adjacency(mut adj: Vec<Vec<VertexId>>) -> Result<Self, GraphError> {
        let n = adj.len();
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            for w in list.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateEdge(u.min(w[0]), u.max(w[0])));
                }
            }
            for &v in list.iter() {
                if v >= n {
                    return Err(GraphError::OutOfRange { id: v, vertex_count: n });
                }
                if v == u {
                    return Err(GraphError::SelfLoop(u));
                }
            }
        }
        let g = Graph { adj };
        for u in 0..n {
            for &v in &g.adj[u] {
                if !g.has_edge(v, u) {
                    return Err(GraphError::Asymmetric(u, v));
                }
            }
        }
        Ok(g)
    }

    /// Caller guarantees a simple symmetric adjacency; lists are sorted here.
    pub(crate) fn from_adjacency_unchecked(mut adj: Vec<Vec<VertexId>>) -> Self {
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Graph { adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn adjacency(&self) -> &[Vec<VertexId>] {
        &self.adj
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn is_regular(&self, d: usize) -> bool {
        self.adj.iter().all(|l| l.len() == d)
    }

    /// Length of a shortest cycle, or `None` for forests.
    ///
    /// Breadth-first search from every vertex; a search stops expanding once
    /// it can no longer beat the best cycle found so far.
    pub fn girth(&self) -> Option<usize> {
        let n = self.vertex_count();
        let mut best = usize::MAX;
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut touched = Vec::new();
        let mut queue = VecDeque::new();
        for root in 0..n {
            if best == 3 {
                break;
            }
            dist[root] = 0;
            touched.push(root);
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                if 2 * dist[u] + 1 >= best {
                    break;
                }
                for &w in &self.adj[u] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        touched.push(w);
                        queue.push_back(w);
                    } else if parent[u] != w {
                        best = best.min(dist[u] + dist[w] + 1);
                    }
                }
            }
            queue.clear();
            for &v in &touched {
                dist[v] = usize::MAX;
                parent[v] = usize::MAX;
            }
            touched.clear();
        }
        (best != usize::MAX).then_some(best)
    }

    /// Subgraph induced on `keep` (in the given order); vertex `keep[i]` becomes `i`.
    pub fn induced(&self, keep: &[VertexId]) -> Graph {
        let mut index = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in keep.iter().enumerate() {
            index[v] = i;
        }
        let adj = keep
            .iter()
            .map(|&v| {
                self.adj[v]
                    .iter()
                    .filter_map(|&w| (index[w] != usize::MAX).then_some(index[w]))
                    .collect()
            })
            .collect();
        Graph::from_adjacency_unchecked(adj)
    }

    /// Writes the `p <n>` / `e <u> <v>` text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p {}", self.vertex_count()).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "e {u} {v}").unwrap();
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut vertex_count = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| GraphError::Parse { line: i + 1, msg: msg.to_string() };
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("p") => {
                    if vertex_count.is_some() {
                        return Err(err("repeated header"));
                    }
                    let n = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| err("bad vertex count"))?;
                    vertex_count = Some(n);
                }
                Some("e") => {
                    if vertex_count.is_none() {
                        return Err(err("edge before header"));
                    }
                    let u = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| err("bad endpoint"))?;
                    let v = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| err("bad endpoint"))?;
                    edges.push((u, v));
                }
                _ => return Err(err("unknown record")),
            }
            if parts.next().is_some() {
                return Err(err("trailing tokens"));
            }
        }
        let n = vertex_count.ok_or(GraphError::Parse { line: 0, msg: "missing header".into() })?;
        Graph::from_edges(n, edges)
    }
}

/// Default enumeration budget for [`contains_kst`].
pub const DEFAULT_KST_BUDGET: f64 = 5e7;

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Searches for a (not necessarily induced) `K_{s,t}`.
///
/// With `sides = Some((left, right))` the `s` vertices must come from `left`
/// and the `t` vertices from `right`; the guard is
/// `binomial(|left|, s) * binomial(|right|, t) <= budget`. With `sides = None`
/// every vertex may play either role and the guard caps the number of
/// explored branch nodes instead.
///
/// The search branches on `s`-subsets while maintaining their common
/// neighborhood and prunes as soon as fewer than `t` candidates remain.
pub fn contains_kst(
    g: &Graph,
    sides: Option<(&[VertexId], &[VertexId])>,
    s: usize,
    t: usize,
    budget: f64,
) -> Result<bool, GraphError> {
    assert!(s >= 1 && t >= 1, "K_{{s,t}} needs s, t >= 1");
    let n = g.vertex_count();
    let mut right_mask = vec![true; n];
    let left: Vec<VertexId> = match sides {
        Some((left, right)) => {
            let needed = binomial(left.len(), s) * binomial(right.len(), t);
            if needed > budget {
                return Err(GraphError::BudgetExceeded { needed, budget });
            }
            right_mask.iter_mut().for_each(|m| *m = false);
            for &v in right {
                if v >= n {
                    return Err(GraphError::OutOfRange { id: v, vertex_count: n });
                }
                right_mask[v] = true;
            }
            for &v in left {
                if v >= n {
                    return Err(GraphError::OutOfRange { id: v, vertex_count: n });
                }
                if right_mask[v] {
                    return Err(GraphError::OverlappingSides(v));
                }
            }
            let mut l = left.to_vec();
            l.sort_unstable();
            l.dedup();
            l
        }
        None => (0..n).collect(),
    };
    let mut left_mask = vec![sides.is_none(); n];
    for &v in &left {
        left_mask[v] = true;
    }

    let mut search = KstSearch {
        g,
        left_mask: &left_mask,
        s,
        t,
        nodes: 0,
        budget: if sides.is_some() { f64::INFINITY } else { budget },
        count: vec![0; n],
    };
    for &v in &left {
        let common: Vec<VertexId> = g.neighbors(v).iter().copied().filter(|&w| right_mask[w]).collect();
        if common.len() < t {
            continue;
        }
        if search.extend(v, &common, 1)? {
            return Ok(true);
        }
    }
    Ok(false)
}

struct KstSearch<'a> {
    g: &'a Graph,
    left_mask: &'a [bool],
    s: usize,
    t: usize,
    nodes: u64,
    budget: f64,
    count: Vec<usize>,
}

impl KstSearch<'_> {
    /// `last` is the largest chosen vertex; `common` the common neighborhood
    /// (restricted to the right side) of the `size` chosen vertices.
    fn extend(&mut self, last: VertexId, common: &[VertexId], size: usize) -> Result<bool, GraphError> {
        self.nodes += 1;
        if self.nodes as f64 > self.budget {
            return Err(GraphError::BudgetExceeded { needed: self.nodes as f64, budget: self.budget });
        }
        if size == self.s {
            return Ok(common.len() >= self.t);
        }
        // A further member needs at least t neighbors inside `common`.
        let mut reached = Vec::new();
        for &x in common {
            for &w in self.g.neighbors(x) {
                if w > last && self.left_mask[w] {
                    if self.count[w] == 0 {
                        reached.push(w);
                    }
                    self.count[w] += 1;
                }
            }
        }
        let mut candidates: Vec<VertexId> = reached.iter().copied().filter(|&w| self.count[w] >= self.t).collect();
        for &w in &reached {
            self.count[w] = 0;
        }
        candidates.sort_unstable();
        for w in candidates {
            let next: Vec<VertexId> = common.iter().copied().filter(|&x| self.g.has_edge(w, x)).collect();
            if next.len() >= self.t && self.extend(w, &next, size + 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Kővári–Sós–Turán edge bound `s^{1/t} m^{1-1/t} n + t m` for a bipartite
/// graph with parts of sizes `m >= n` containing no `K_{s,t}` with the
/// `s`-side inside the `m`-part.
pub fn kst_edge_bound(m: usize, n: usize, s: usize, t: usize) -> Result<f64, GraphError> {
    if m < n || n == 0 || s == 0 || t == 0 {
        return Err(GraphError::KstPrecondition { m, n, s, t });
    }
    let (m, n, s, t) = (m as f64, n as f64, s as f64, t as f64);
    Ok(s.powf(1.0 / t) * m.powf(1.0 - 1.0 / t) * n + t * m)
}
