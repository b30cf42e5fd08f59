//! DP-covers (correspondence covers) and partial colorings.
//!
//! A cover pairs a base graph `G` with a cover graph `H` whose vertices are
//! colors. Every base vertex owns a list of colors; the lists partition the
//! colors, each list is independent in `H`, and between two lists `H` induces
//! a matching that may be nonempty only across base edges.
//!
//! Covers derived from another cover (trimmed, residual) are renumbered to
//! dense ids; `vertex_origin` / `color_origin` map them back to the root cover.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{self, GenError};
use crate::graph::{contains_kst, Graph, GraphError, VertexId, DEFAULT_KST_BUDGET};
use crate::rng::{self, Seed};

pub type ColorId = usize;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cover is invalid: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("color id {color} is out of range for a cover graph with {color_count} colors")]
    ColorOutOfRange { color: ColorId, color_count: usize },
    #[error("expected {expected} lists (one per base vertex), got {got}")]
    ListCount { expected: usize, got: usize },
    #[error("vertex {0} has an empty list")]
    EmptyList(VertexId),
    #[error("vertex {vertex} has {size} colors, fewer than the requested {ell}")]
    ListTooSmall { vertex: VertexId, size: usize, ell: usize },
    #[error("color {color} kept for vertex {vertex} is not in its list")]
    NotInList { vertex: VertexId, color: ColorId },
    #[error("partial coloring is not proper: colors {0} and {1} are adjacent")]
    Improper(ColorId, ColorId),
    #[error("cover has maximum degree {max_degree} > d = {d}")]
    DegreeTooLarge { max_degree: usize, d: usize },
    #[error("cover graph contains K_{{{s},{t}}}")]
    NotKstFree { s: usize, t: usize },
    #[error("could not build a {degree}-regular girth-5 auxiliary graph: {source}")]
    Auxiliary { degree: usize, source: GenError },
    #[error("cover file: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    let more = if v.len() > 5 { format!(" (+{} more)", v.len() - 5) } else { String::new() };
    format!("{}{more}", shown.join("; "))
}

/// One failed cover invariant, with witnessing ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A color owned by no list, or by more than one.
    NotAPartition { color: ColorId, owners: Vec<VertexId> },
    /// Two colors of the same list are adjacent.
    ListNotIndependent { vertex: VertexId, colors: (ColorId, ColorId) },
    /// A color has two or more neighbors in the list of one other vertex.
    NotAMatching { vertices: (VertexId, VertexId), color: ColorId, partners: Vec<ColorId> },
    /// A cover edge joins the lists of two non-adjacent base vertices.
    EdgeAcrossNonEdge { vertices: (VertexId, VertexId), colors: (ColorId, ColorId) },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotAPartition { color, owners } => write!(f, "color {color} owned by {owners:?}"),
            Violation::ListNotIndependent { vertex, colors } => {
                write!(f, "list of {vertex} not independent ({}~{})", colors.0, colors.1)
            }
            Violation::NotAMatching { vertices, color, partners } => write!(
                f,
                "not a matching between {} and {}: color {color} ~ {partners:?}",
                vertices.0, vertices.1
            ),
            Violation::EdgeAcrossNonEdge { vertices, colors } => write!(
                f,
                "cover edge {}~{} between non-adjacent {} and {}",
                colors.0, colors.1, vertices.0, vertices.1
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DpCover {
    base: Graph,
    cover: Graph,
    lists: Vec<Vec<ColorId>>,
    /// owner of each color; `usize::MAX` when the lists do not cover it
    list_of: Vec<VertexId>,
    vertex_origin: Vec<VertexId>,
    color_origin: Vec<ColorId>,
}

impl DpCover {
    /// Assembles a cover without checking the semantic invariants; use
    /// [`DpCover::validate`] (or [`DpCover::new`]) for that.
    pub fn from_parts(base: Graph, cover: Graph, mut lists: Vec<Vec<ColorId>>) -> Result<Self, CoverError> {
        if lists.len() != base.vertex_count() {
            return Err(CoverError::ListCount { expected: base.vertex_count(), got: lists.len() });
        }
        let color_count = cover.vertex_count();
        let mut list_of = vec![usize::MAX; color_count];
        for (v, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            for &c in list.iter() {
                if c >= color_count {
                    return Err(CoverError::ColorOutOfRange { color: c, color_count });
                }
                if list_of[c] == usize::MAX {
                    list_of[c] = v;
                }
            }
        }
        Ok(DpCover {
            vertex_origin: (0..base.vertex_count()).collect(),
            color_origin: (0..color_count).collect(),
            base,
            cover,
            lists,
            list_of,
        })
    }

    /// Assembles and validates a cover.
    pub fn new(base: Graph, cover: Graph, lists: Vec<Vec<ColorId>>) -> Result<Self, CoverError> {
        let c = DpCover::from_parts(base, cover, lists)?;
        let violations = c.validate();
        if violations.is_empty() {
            Ok(c)
        } else {
            Err(CoverError::Invalid(violations))
        }
    }

    /// The same cover with `vertex_origin`/`color_origin` reset to identity.
    pub fn as_root(&self) -> DpCover {
        DpCover {
            vertex_origin: (0..self.vertex_count()).collect(),
            color_origin: (0..self.color_count()).collect(),
            ..self.clone()
        }
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn cover(&self) -> &Graph {
        &self.cover
    }

    pub fn lists(&self) -> &[Vec<ColorId>] {
        &self.lists
    }

    pub fn list(&self, v: VertexId) -> &[ColorId] {
        &self.lists[v]
    }

    /// The base vertex owning color `c`.
    pub fn owner(&self, c: ColorId) -> VertexId {
        self.list_of[c]
    }

    pub fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }

    pub fn color_count(&self) -> usize {
        self.cover.vertex_count()
    }

    pub fn vertex_origin(&self) -> &[VertexId] {
        &self.vertex_origin
    }

    pub fn color_origin(&self) -> &[ColorId] {
        &self.color_origin
    }

    pub fn min_list_size(&self) -> usize {
        self.lists.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_list_size(&self) -> usize {
        self.lists.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_cover_degree(&self) -> usize {
        self.cover.max_degree()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut owners: Vec<Vec<VertexId>> = vec![Vec::new(); self.color_count()];
        for (v, list) in self.lists.iter().enumerate() {
            for &c in list {
                owners[c].push(v);
            }
        }
        for (c, o) in owners.iter().enumerate() {
            if o.len() != 1 {
                out.push(Violation::NotAPartition { color: c, owners: o.clone() });
            }
        }
        let owned = |c: ColorId| owners[c].len() == 1;
        for c in 0..self.color_count() {
            if !owned(c) {
                continue;
            }
            let u = self.list_of[c];
            let mut by_vertex: Vec<(VertexId, ColorId)> = self
                .cover
                .neighbors(c)
                .iter()
                .filter(|&&x| owned(x))
                .map(|&x| (self.list_of[x], x))
                .collect();
            by_vertex.sort_unstable();
            for group in by_vertex.chunk_by(|a, b| a.0 == b.0) {
                let w = group[0].0;
                if w == u {
                    for &(_, x) in group {
                        if c < x {
                            out.push(Violation::ListNotIndependent { vertex: u, colors: (c, x) });
                        }
                    }
                    continue;
                }
                if !self.base.has_edge(u, w) {
                    for &(_, x) in group {
                        if c < x {
                            out.push(Violation::EdgeAcrossNonEdge { vertices: (u, w), colors: (c, x) });
                        }
                    }
                    continue;
                }
                if group.len() > 1 {
                    out.push(Violation::NotAMatching {
                        vertices: (u, w),
                        color: c,
                        partners: group.iter().map(|g| g.1).collect(),
                    });
                }
            }
        }
        out
    }

    /// Turns a list assignment into a cover in which equal labels correspond
    /// across every base edge. Within each list, color ids follow label order.
    pub fn from_list_assignment<L: Ord + Clone>(g: &Graph, labels: &[Vec<L>]) -> Result<Self, CoverError> {
        if labels.len() != g.vertex_count() {
            return Err(CoverError::ListCount { expected: g.vertex_count(), got: labels.len() });
        }
        let mut sorted: Vec<Vec<L>> = Vec::with_capacity(labels.len());
        let mut lists = Vec::with_capacity(labels.len());
        let mut next = 0;
        for (v, l) in labels.iter().enumerate() {
            let set: Vec<L> = l.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            if set.is_empty() {
                return Err(CoverError::EmptyList(v));
            }
            lists.push((next..next + set.len()).collect::<Vec<_>>());
            next += set.len();
            sorted.push(set);
        }
        let mut adj = vec![Vec::new(); next];
        for (u, v) in g.edges() {
            let (mut i, mut j) = (0, 0);
            let (a, b) = (&sorted[u], &sorted[v]);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        let (x, y) = (lists[u][i], lists[v][j]);
                        adj[x].push(y);
                        adj[y].push(x);
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        DpCover::from_parts(g.clone(), Graph::from_adjacency_unchecked(adj), lists)
    }

    /// Keeps `vertices` (old ids, in order) with the given lists (old color
    /// ids); colors are renumbered vertex by vertex. With `drop_empty_edges`,
    /// base edges whose matching became empty are deleted.
    fn restrict(&self, vertices: &[VertexId], lists: Vec<Vec<ColorId>>, drop_empty_edges: bool) -> DpCover {
        let mut color_index = vec![usize::MAX; self.color_count()];
        let mut color_origin = Vec::new();
        let mut new_lists = Vec::with_capacity(vertices.len());
        let mut list_of = Vec::new();
        for (i, list) in lists.iter().enumerate() {
            let mut l = list.clone();
            l.sort_unstable();
            let start = color_origin.len();
            for &c in &l {
                color_index[c] = color_origin.len();
                color_origin.push(self.color_origin[c]);
                list_of.push(i);
            }
            new_lists.push((start..color_origin.len()).collect::<Vec<_>>());
        }
        let mut adj = vec![Vec::new(); color_origin.len()];
        for list in &lists {
            for &c in list {
                let nc = color_index[c];
                adj[nc].extend(self.cover.neighbors(c).iter().filter_map(|&x| {
                    let nx = color_index[x];
                    (nx != usize::MAX).then_some(nx)
                }));
            }
        }
        let cover = Graph::from_adjacency_unchecked(adj);
        let mut base = self.base.induced(vertices);
        if drop_empty_edges {
            let mut linked: Vec<Vec<VertexId>> = vec![Vec::new(); vertices.len()];
            for c in 0..cover.vertex_count() {
                for &x in cover.neighbors(c) {
                    linked[list_of[c]].push(list_of[x]);
                }
            }
            for l in linked.iter_mut() {
                l.sort_unstable();
                l.dedup();
            }
            base = Graph::from_adjacency_unchecked(linked);
        }
        DpCover {
            vertex_origin: vertices.iter().map(|&v| self.vertex_origin[v]).collect(),
            color_origin,
            base,
            cover,
            lists: new_lists,
            list_of,
        }
    }

    /// Cuts every list down to its `ell` smallest color ids and deletes base
    /// edges left without cover edges.
    pub fn trim(&self, ell: usize) -> Result<DpCover, CoverError> {
        let mut lists = Vec::with_capacity(self.vertex_count());
        for (v, l) in self.lists.iter().enumerate() {
            if l.len() < ell {
                return Err(CoverError::ListTooSmall { vertex: v, size: l.len(), ell });
            }
            lists.push(l[..ell].to_vec());
        }
        let vertices: Vec<VertexId> = (0..self.vertex_count()).collect();
        Ok(self.restrict(&vertices, lists, true))
    }

    /// The cover induced on the vertices `phi` leaves blank, each keeping the
    /// colors `kept[v]` (indexed by vertex of `self`; entries for colored
    /// vertices are ignored).
    pub fn residual(&self, phi: &PartialColoring, kept: &[Vec<ColorId>]) -> Result<DpCover, CoverError> {
        if kept.len() != self.vertex_count() || phi.len() != self.vertex_count() {
            return Err(CoverError::ListCount { expected: self.vertex_count(), got: kept.len().min(phi.len()) });
        }
        let mut vertices = Vec::new();
        let mut lists = Vec::new();
        for v in 0..self.vertex_count() {
            if let Some(c) = phi.get(v) {
                if self.list_of.get(c) != Some(&v) {
                    return Err(CoverError::NotInList { vertex: v, color: c });
                }
                continue;
            }
            for &c in &kept[v] {
                if self.list_of.get(c) != Some(&v) {
                    return Err(CoverError::NotInList { vertex: v, color: c });
                }
            }
            vertices.push(v);
            lists.push(kept[v].clone());
        }
        Ok(self.restrict(&vertices, lists, false))
    }

    /// Embeds the cover into an exactly `d`-regular cover on `k` disjoint
    /// copies, `k` being the order of an auxiliary `N`-regular graph of girth
    /// at least 5, `N = sum_c (d - deg(c))`. Copy 0 keeps the original ids.
    ///
    /// For each auxiliary edge `ij` (lexicographic order) the smallest
    /// deficient colors `c` of copy `i` and `c'` of copy `j` are joined, and
    /// so are their owners in the base graph.
    pub fn regularize(&self, d: usize, s: usize, t: usize, seed: Seed) -> Result<Regularized, CoverError> {
        let max_degree = self.max_cover_degree();
        if max_degree > d {
            return Err(CoverError::DegreeTooLarge { max_degree, d });
        }
        match contains_kst(&self.cover, None, s, t, DEFAULT_KST_BUDGET) {
            Ok(true) => return Err(CoverError::NotKstFree { s, t }),
            // too large to check here; K_{s,t}-freeness stays caller-asserted
            Ok(false) | Err(GraphError::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        let deficiency: usize = (0..self.color_count()).map(|c| d - self.cover.degree(c)).sum();
        if deficiency == 0 {
            return Ok(Regularized { cover: self.clone(), copies: 1, aux: Graph::empty(1) });
        }
        let aux = auxiliary_graph(deficiency, seed)?;
        let k = aux.vertex_count();
        let (n, m) = (self.vertex_count(), self.color_count());

        let mut base_adj: Vec<Vec<VertexId>> = Vec::with_capacity(k * n);
        let mut cover_adj: Vec<Vec<ColorId>> = Vec::with_capacity(k * m);
        let mut lists = Vec::with_capacity(k * n);
        for i in 0..k {
            base_adj.extend(self.base.adjacency().iter().map(|l| l.iter().map(|&w| i * n + w).collect::<Vec<_>>()));
            cover_adj.extend(self.cover.adjacency().iter().map(|l| l.iter().map(|&x| i * m + x).collect::<Vec<_>>()));
            lists.extend(self.lists.iter().map(|l| l.iter().map(|&c| i * m + c).collect::<Vec<_>>()));
        }
        let template: BTreeSet<ColorId> = (0..m).filter(|&c| self.cover.degree(c) < d).collect();
        let mut deficient: Vec<BTreeSet<ColorId>> = vec![template; k];
        for (i, j) in aux.edges() {
            let c = *deficient[i].first().expect("copy deficiency matches auxiliary degree");
            let c2 = *deficient[j].first().expect("copy deficiency matches auxiliary degree");
            let (gc, gc2) = (i * m + c, j * m + c2);
            cover_adj[gc].push(gc2);
            cover_adj[gc2].push(gc);
            let (u, w) = (i * n + self.list_of[c], j * n + self.list_of[c2]);
            base_adj[u].push(w);
            base_adj[w].push(u);
            if cover_adj[gc].len() == d {
                deficient[i].remove(&c);
            }
            if cover_adj[gc2].len() == d {
                deficient[j].remove(&c2);
            }
        }
        let cover = DpCover::from_parts(
            Graph::from_adjacency(base_adj)?,
            Graph::from_adjacency(cover_adj)?,
            lists,
        )?;
        Ok(Regularized { cover, copies: k, aux })
    }

    pub fn to_file(&self) -> CoverFile {
        CoverFile {
            base: BaseFile { vertex_count: self.vertex_count(), edges: self.base.edges().map(|(u, v)| [u, v]).collect() },
            lists: self.lists.clone(),
            cover_edges: self.cover.edges().map(|(a, b)| [a, b]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("cover serializes") + "\n"
    }

    /// Parses a cover document and refuses it unless it validates.
    pub fn from_json(text: &str) -> Result<Self, CoverError> {
        let file: CoverFile = serde_json::from_str(text)?;
        file.into_cover()
    }
}

/// On-disk cover document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverFile {
    pub base: BaseFile,
    pub lists: Vec<Vec<ColorId>>,
    pub cover_edges: Vec<[ColorId; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseFile {
    pub vertex_count: usize,
    pub edges: Vec<[VertexId; 2]>,
}

impl CoverFile {
    pub fn into_cover(self) -> Result<DpCover, CoverError> {
        let base = Graph::from_edges(self.base.vertex_count, self.base.edges.iter().map(|e| (e[0], e[1])))?;
        let color_count = self
            .lists
            .iter()
            .flatten()
            .chain(self.cover_edges.iter().flatten())
            .map(|&c| c + 1)
            .max()
            .unwrap_or(0);
        let cover = Graph::from_edges(color_count, self.cover_edges.iter().map(|e| (e[0], e[1])))?;
        DpCover::new(base, cover, self.lists)
    }
}

/// Output of [`DpCover::regularize`].
#[derive(Clone, Debug)]
pub struct Regularized {
    pub cover: DpCover,
    /// number of disjoint copies of the input (order of the auxiliary graph)
    pub copies: usize,
    pub aux: Graph,
}

fn auxiliary_graph(degree: usize, seed: Seed) -> Result<Graph, CoverError> {
    match degree {
        1 => return Ok(Graph::from_edges(2, [(0, 1)])?),
        2 => return Ok(Graph::from_edges(5, (0..5).map(|i| (i, (i + 1) % 5)))?),
        _ => {}
    }
    let mut order = (degree * degree + 2).max(50);
    if order * degree % 2 == 1 {
        order += 1;
    }
    let mut last = None;
    for attempt in 0..4u64 {
        match generators::random_girth5_regular(order, degree, rng::derive(seed, attempt)) {
            Ok(g) => return Ok(g),
            Err(e) => last = Some(e),
        }
        order *= 2;
    }
    Err(CoverError::Auxiliary { degree, source: last.expect("at least one attempt") })
}

/// A partial map from base vertices to colors; `None` is blank.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialColoring {
    assignment: Vec<Option<ColorId>>,
}

impl PartialColoring {
    pub fn blank(vertex_count: usize) -> Self {
        PartialColoring { assignment: vec![None; vertex_count] }
    }

    pub fn from_assignment(assignment: Vec<Option<ColorId>>) -> Self {
        PartialColoring { assignment }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn get(&self, v: VertexId) -> Option<ColorId> {
        self.assignment[v]
    }

    pub fn set(&mut self, v: VertexId, c: Option<ColorId>) {
        self.assignment[v] = c;
    }

    pub fn assignment(&self) -> &[Option<ColorId>] {
        &self.assignment
    }

    pub fn colored(&self) -> impl Iterator<Item = (VertexId, ColorId)> + '_ {
        self.assignment.iter().enumerate().filter_map(|(v, c)| c.map(|c| (v, c)))
    }

    pub fn domain_size(&self) -> usize {
        self.assignment.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.assignment.iter().all(Option::is_some)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::analysis::verify_proper;
    use crate::generators::{random_dp_cover, random_regular};
    use proptest::prelude::*;

    pub(crate) fn k2_matched(ell: usize) -> DpCover {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let labels: Vec<Vec<usize>> = vec![(0..ell).collect(), (0..ell).collect()];
        DpCover::from_list_assignment(&g, &labels).unwrap()
    }

    #[test]
    fn validate_examples() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = DpCover::from_list_assignment(&g, &[vec![1, 2], vec![1, 2], vec![2]]).unwrap();
        assert!(c.validate().is_empty());

        // edge inside one list
        let bad = DpCover::from_parts(Graph::empty(1), Graph::from_edges(2, [(0, 1)]).unwrap(), vec![vec![0, 1]]).unwrap();
        assert_eq!(bad.validate(), vec![Violation::ListNotIndependent { vertex: 0, colors: (0, 1) }]);

        // two cover edges sharing an endpoint across one base edge
        let base = Graph::from_edges(2, [(0, 1)]).unwrap();
        let cover = Graph::from_edges(4, [(0, 2), (0, 3)]).unwrap();
        let bad = DpCover::from_parts(base, cover, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(
            bad.validate(),
            vec![Violation::NotAMatching { vertices: (0, 1), color: 0, partners: vec![2, 3] }]
        );

        // cover edge across a base non-edge, and an unowned color
        let cover = Graph::from_edges(3, [(0, 1)]).unwrap();
        let bad = DpCover::from_parts(Graph::empty(2), cover, vec![vec![0], vec![1]]).unwrap();
        let v = bad.validate();
        assert!(v.contains(&Violation::EdgeAcrossNonEdge { vertices: (0, 1), colors: (0, 1) }));
        assert!(v.contains(&Violation::NotAPartition { color: 2, owners: vec![] }));
        assert!(matches!(DpCover::new(bad.base.clone(), bad.cover.clone(), bad.lists.clone()), Err(CoverError::Invalid(_))));
    }

    #[test]
    fn list_assignment_examples() {
        let c = k2_matched(2);
        assert_eq!(c.color_count(), 4);
        assert_eq!(c.cover().edge_count(), 2);
        assert!(c.cover().is_regular(1));

        let single = DpCover::from_list_assignment(&Graph::empty(1), &[vec![1, 2, 3]]).unwrap();
        assert_eq!(single.color_count(), 3);
        assert_eq!(single.cover().edge_count(), 0);

        let err = DpCover::from_list_assignment(&Graph::from_edges(2, [(0, 1)]).unwrap(), &[vec![1], Vec::<u8>::new()]);
        assert!(matches!(err, Err(CoverError::EmptyList(1))));
    }

    #[test]
    fn triangle_with_two_labels_has_no_proper_coloring() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = DpCover::from_list_assignment(&tri, &vec![vec!['a', 'b']; 3]).unwrap();
        assert_eq!(c.color_count(), 6);
        assert_eq!(c.cover().edge_count(), 6);
        // exhaustive oracle over all 8 total colorings
        let mut proper = 0;
        for mask in 0..8usize {
            let phi = PartialColoring::from_assignment((0..3).map(|v| Some(c.list(v)[(mask >> v) & 1])).collect());
            if verify_proper(&c, &phi).unwrap().is_proper() {
                proper += 1;
            }
        }
        assert_eq!(proper, 0);
        // a path with the same lists is 2-list-colorable
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = DpCover::from_list_assignment(&path, &vec![vec!['a', 'b']; 3]).unwrap();
        let found = (0..8usize).any(|mask| {
            let phi = PartialColoring::from_assignment((0..3).map(|v| Some(c.list(v)[(mask >> v) & 1])).collect());
            verify_proper(&c, &phi).unwrap().is_proper()
        });
        assert!(found);
    }

    #[test]
    fn trim_examples() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = DpCover::from_list_assignment(&g, &[vec![0, 1], vec![0, 1, 2, 3], vec![2, 3]]).unwrap();
        let t = c.trim(2).unwrap();
        // vertex 1 loses its two largest ids (labels 2, 3)
        assert_eq!(t.list(1).iter().map(|&x| t.color_origin()[x]).collect::<Vec<_>>(), vec![2, 3]);
        // edge 1-2 carried only labels 2, 3 and is deleted
        assert!(t.base().has_edge(0, 1));
        assert!(!t.base().has_edge(1, 2));
        assert!(t.validate().is_empty());
        assert!(matches!(c.trim(3), Err(CoverError::ListTooSmall { vertex: 0, .. })));

        let same = k2_matched(3).trim(3).unwrap();
        assert_eq!(same, k2_matched(3));
    }

    #[test]
    fn trim_leaves_only_carrying_edges_and_bounds_base_degree() {
        let g = random_regular(60, 6, 3).unwrap();
        let c = random_dp_cover(&g, 5, 0.3, 11).unwrap();
        let t = c.trim(3).unwrap();
        assert!(t.validate().is_empty());
        for (u, v) in t.base().edges() {
            let carries = t.list(u).iter().any(|&a| t.cover().neighbors(a).iter().any(|&b| t.owner(b) == v));
            assert!(carries, "edge {u}-{v} has an empty matching");
        }
        assert!(t.base().max_degree() <= 3 * t.max_cover_degree());
    }

    #[test]
    fn residual_examples() {
        let g = random_regular(20, 3, 1).unwrap();
        let c = random_dp_cover(&g, 3, 1.0, 2).unwrap();
        let blank = PartialColoring::blank(20);
        assert_eq!(c.residual(&blank, c.lists()).unwrap(), c);

        let all = PartialColoring::from_assignment((0..20).map(|v| Some(c.list(v)[0])).collect());
        assert_eq!(c.residual(&all, c.lists()).unwrap().vertex_count(), 0);

        let mut wrong = c.lists().to_vec();
        wrong[0].push(c.list(1)[0]);
        assert!(matches!(c.residual(&blank, &wrong), Err(CoverError::NotInList { vertex: 0, .. })));
    }

    #[test]
    fn regularize_already_regular_is_identity() {
        let c = k2_matched(3);
        let r = c.regularize(1, 2, 2, 0).unwrap();
        assert_eq!(r.copies, 1);
        assert_eq!(r.cover, c);
    }

    #[test]
    fn regularize_single_color_hand_trace() {
        let c = DpCover::new(Graph::empty(1), Graph::empty(1), vec![vec![0]]).unwrap();
        let r = c.regularize(1, 1, 1, 0).unwrap();
        // N = 1, auxiliary graph K2, two copies joined by one edge
        assert_eq!(r.copies, 2);
        assert_eq!(r.cover.color_count(), 2);
        assert_eq!(r.cover.cover().edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(r.cover.base().edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(r.cover.cover().is_regular(1));
        assert!(r.cover.validate().is_empty());
    }

    #[test]
    fn regularize_small_cover_is_regular_and_c4_free() {
        // Δ = d - 1 on a tiny cover: N = 4, auxiliary 4-regular girth-5 graph
        let c = k2_matched(2);
        let r = c.regularize(2, 2, 2, 9).unwrap();
        assert!(r.cover.cover().is_regular(2));
        assert!(r.cover.validate().is_empty());
        assert!(!contains_kst(r.cover.cover(), None, 2, 2, DEFAULT_KST_BUDGET).unwrap());
        assert_eq!(r.aux.girth().map_or(true, |g| g >= 5), true);
        assert!(matches!(c.regularize(0, 2, 2, 0), Err(CoverError::DegreeTooLarge { .. })));
    }

    #[test]
    fn json_roundtrip_and_refusal() {
        let g = random_regular(10, 3, 5).unwrap();
        let c = random_dp_cover(&g, 3, 0.5, 6).unwrap();
        let text = c.to_json();
        assert_eq!(DpCover::from_json(&text).unwrap(), c);
        let bad = r#"{"base":{"vertex_count":1,"edges":[]},"lists":[[0,1]],"cover_edges":[[0,1]]}"#;
        assert!(matches!(DpCover::from_json(bad), Err(CoverError::Invalid(v)) if v.len() == 1));
    }

    proptest! {
        #[test]
        fn list_cover_forgets_back_to_lists(seed in 0u64..500, n in 2usize..12) {
            let g = random_regular(n * 2, 1, seed).unwrap();
            let labels: Vec<Vec<u32>> = (0..2 * n).map(|v| (0..=(v as u32 % 4)).collect()).collect();
            let c = DpCover::from_list_assignment(&g, &labels).unwrap();
            prop_assert!(c.validate().is_empty());
            prop_assert_eq!(c.base(), &g);
            for v in 0..2 * n {
                prop_assert_eq!(c.list(v).len(), labels[v].len());
            }
        }

        #[test]
        fn residual_is_monotone(seed in 0u64..200) {
            let g = random_regular(16, 3, seed).unwrap();
            let c = random_dp_cover(&g, 4, 0.7, seed).unwrap();
            let phi = PartialColoring::from_assignment((0..16).map(|v| (v % 3 == 0).then(|| c.list(v)[0])).collect());
            let kept: Vec<Vec<ColorId>> = c.lists().iter().map(|l| l.iter().copied().filter(|x| x % 2 == 0).collect()).collect();
            let r = c.residual(&phi, &kept).unwrap();
            prop_assert!(r.vertex_count() <= c.vertex_count());
            for v in 0..r.vertex_count() {
                let orig = r.vertex_origin()[v];
                prop_assert!(r.list(v).len() <= c.list(orig).len());
                for &x in r.list(v) {
                    prop_assert!(c.list(orig).contains(&r.color_origin()[x]));
                }
            }
            prop_assert!(r.validate().is_empty());
        }
    }
}
