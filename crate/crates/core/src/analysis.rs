//! Verification, the second-neighborhood classifier, Monte-Carlo round
//! statistics and exact enumeration oracles.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cover::{ColorId, DpCover, PartialColoring};
use crate::graph::{Graph, VertexId};
use crate::nibble::{Draw, RoundParams};
use crate::rng::Seed;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("coloring covers {got} vertices, cover has {expected}")]
    Length { expected: usize, got: usize },
    #[error("vertex {vertex} is assigned color {color}, which is not in its list")]
    UnlistedColor { vertex: VertexId, color: ColorId },
    #[error("outcome space has {needed} points, budget is {budget}")]
    Budget { needed: f64, budget: f64 },
    #[error("anchor color {0} does not exist")]
    Anchor(ColorId),
}

/// Outcome of [`verify_proper`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Properness {
    Proper,
    Conflict { vertices: (VertexId, VertexId), colors: (ColorId, ColorId) },
}

impl Properness {
    pub fn is_proper(&self) -> bool {
        matches!(self, Properness::Proper)
    }
}

/// Checks that no cover edge joins two assigned colors. The witness is the
/// conflict with the smallest vertex pair.
pub fn verify_proper(c: &DpCover, phi: &PartialColoring) -> Result<Properness, AnalysisError> {
    if phi.len() != c.vertex_count() {
        return Err(AnalysisError::Length { expected: c.vertex_count(), got: phi.len() });
    }
    let mut chosen = vec![false; c.color_count()];
    for (v, x) in phi.colored() {
        if x >= c.color_count() || c.owner(x) != v {
            return Err(AnalysisError::UnlistedColor { vertex: v, color: x });
        }
        chosen[x] = true;
    }
    for (v, x) in phi.colored() {
        for &y in c.cover().neighbors(x) {
            if chosen[y] {
                return Ok(Properness::Conflict { vertices: (v, c.owner(y)), colors: (x, y) });
            }
        }
    }
    Ok(Properness::Proper)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub anchor: ColorId,
    pub d: usize,
    pub t: usize,
    /// `1/(3t)`
    pub delta: f64,
    /// `1/(15t)`
    pub beta2: f64,
    /// `1/(20t)`, reported only
    pub beta1: f64,
    /// `1/(10t)`, reported only
    pub delta2: f64,
    /// `4/(9t)`, reported only
    pub tau: f64,
    /// `d^{1-δ}`
    pub threshold: f64,
    pub bad: BTreeSet<ColorId>,
    pub good: BTreeSet<ColorId>,
    pub sad: BTreeSet<ColorId>,
    pub happy: BTreeSet<ColorId>,
    /// `d^{1-β₂}`
    pub sad_bound: f64,
}

impl StructureReport {
    pub fn sad_within_bound(&self) -> bool {
        self.sad.len() as f64 <= self.sad_bound
    }
}

/// Classifies the second neighborhood of `anchor` (colors `c'' ≠ anchor`
/// joined to it by a path of length 2) into bad/good by their number of
/// common neighbors with the anchor, and the neighbors of the anchor into
/// sad/happy by their number of bad neighbors.
pub fn classify_structure(cover: &Graph, anchor: ColorId, d: usize, t: usize) -> StructureReport {
    let tf = t as f64;
    let delta = 1.0 / (3.0 * tf);
    let beta2 = 1.0 / (15.0 * tf);
    let threshold = (d as f64).powf(1.0 - delta);
    let mut common = vec![0usize; cover.vertex_count()];
    let mut second = BTreeSet::new();
    for &x in cover.neighbors(anchor) {
        for &y in cover.neighbors(x) {
            if y != anchor {
                common[y] += 1;
                second.insert(y);
            }
        }
    }
    let (bad, good): (BTreeSet<ColorId>, BTreeSet<ColorId>) =
        second.iter().partition(|&&y| common[y] as f64 >= threshold);
    let (sad, happy): (BTreeSet<ColorId>, BTreeSet<ColorId>) = cover
        .neighbors(anchor)
        .iter()
        .partition(|&&x| cover.neighbors(x).iter().filter(|y| bad.contains(y)).count() as f64 >= threshold);
    StructureReport {
        anchor,
        d,
        t,
        delta,
        beta2,
        beta1: 1.0 / (20.0 * tf),
        delta2: 1.0 / (10.0 * tf),
        tau: 4.0 / (9.0 * tf),
        threshold,
        bad,
        good,
        sad,
        happy,
        sad_bound: (d as f64).powf(1.0 - beta2),
    }
}

/// Integer sample moments (exact, order-independent aggregation).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub sum: u64,
    pub sum_sq: u64,
}

impl Moments {
    fn push(&mut self, x: usize) {
        self.n += 1;
        self.sum += x as u64;
        self.sum_sq += (x * x) as u64;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum as f64 / self.n as f64
    }

    /// Unbiased sample variance; 0 for a single sample.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum as f64 / n;
        ((self.sum_sq as f64 - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Which colors get the `𝒰`/`𝒦` decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Anchors {
    None,
    One(ColorId),
    All,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AnchorStats {
    pub anchor: ColorId,
    /// `|𝒰|`: neighbors whose owner stays blank
    pub uncolored: Moments,
    /// `|𝒰 \ 𝒦|`: those among them blocked by `col(A)`
    pub uncolored_blocked: Moments,
    /// samples where `d'(c) = |𝒰| − |𝒰 \ 𝒦|` failed
    pub identity_failures: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundStats {
    pub trials: u64,
    pub seed: Seed,
    pub params: RoundParams,
    /// per vertex, `ℓ'(v) = |K(v)|`
    pub kept: Vec<Moments>,
    /// per color, `d'(c) = |N_H(c) ∩ V(H')|`
    pub degree: Vec<Moments>,
    /// per vertex, samples with `|ℓ'(v) − keep·|L(v)|| > |L(v)|^{1−β}`
    pub kept_tail: Vec<u64>,
    /// per color, samples with `d'(c) > keep·uncolor·d + d^{1−β}`
    pub degree_tail: Vec<u64>,
    /// per trial, number of blank vertices
    pub blank: Moments,
    pub anchors: Vec<AnchorStats>,
}

#[derive(Clone)]
struct Acc {
    kept: Vec<Moments>,
    degree: Vec<Moments>,
    kept_tail: Vec<u64>,
    degree_tail: Vec<u64>,
    blank: Moments,
    anchors: Vec<AnchorStats>,
}

impl Acc {
    fn new(c: &DpCover, anchors: &[ColorId]) -> Acc {
        Acc {
            kept: vec![Moments::default(); c.vertex_count()],
            degree: vec![Moments::default(); c.color_count()],
            kept_tail: vec![0; c.vertex_count()],
            degree_tail: vec![0; c.color_count()],
            blank: Moments::default(),
            anchors: anchors.iter().map(|&a| AnchorStats { anchor: a, ..Default::default() }).collect(),
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.kept.iter_mut().zip(o.kept) {
            *a = a.merge(b);
        }
        for (a, b) in self.degree.iter_mut().zip(o.degree) {
            *a = a.merge(b);
        }
        for (a, b) in self.kept_tail.iter_mut().zip(o.kept_tail) {
            *a += b;
        }
        for (a, b) in self.degree_tail.iter_mut().zip(o.degree_tail) {
            *a += b;
        }
        self.blank = self.blank.merge(o.blank);
        for (a, b) in self.anchors.iter_mut().zip(o.anchors) {
            a.uncolored = a.uncolored.merge(b.uncolored);
            a.uncolored_blocked = a.uncolored_blocked.merge(b.uncolored_blocked);
            a.identity_failures += b.identity_failures;
        }
        self
    }
}

/// Runs `trials` independent rounds with seeds `seed, seed+1, …` and
/// aggregates per-vertex, per-color and per-anchor statistics.
pub fn round_stats(
    c: &DpCover,
    p: &RoundParams,
    anchors: Anchors,
    trials: u64,
    seed: Seed,
) -> Result<RoundStats, AnalysisError> {
    let anchor_ids: Vec<ColorId> = match anchors {
        Anchors::None => Vec::new(),
        Anchors::One(a) if a >= c.color_count() => return Err(AnalysisError::Anchor(a)),
        Anchors::One(a) => vec![a],
        Anchors::All => (0..c.color_count()).collect(),
    };
    let keep = p.keep();
    let beta = p.beta;
    let kept_dev: Vec<(f64, f64)> = c
        .lists()
        .iter()
        .map(|l| {
            let ell = l.len() as f64;
            (keep * ell, ell.powf(1.0 - beta))
        })
        .collect();
    let degree_threshold = p.d_next();
    let acc = (0..trials)
        .into_par_iter()
        .fold(
            || Acc::new(c, &anchor_ids),
            |mut acc, k| {
                let draw = Draw::sample(c, p.eta, seed.wrapping_add(k));
                let survivors = draw.survivors(c);
                let mut blank = 0;
                for v in 0..c.vertex_count() {
                    let kl = draw.kept_len(c, v);
                    acc.kept[v].push(kl);
                    let (mean, dev) = kept_dev[v];
                    if (kl as f64 - mean).abs() > dev {
                        acc.kept_tail[v] += 1;
                    }
                    if !draw.is_colored(v) {
                        blank += 1;
                    }
                }
                acc.blank.push(blank);
                let mut deg = vec![0usize; c.color_count()];
                for x in 0..c.color_count() {
                    deg[x] = draw.residual_degree(c, &survivors, x);
                    acc.degree[x].push(deg[x]);
                    if deg[x] as f64 > degree_threshold {
                        acc.degree_tail[x] += 1;
                    }
                }
                for a in acc.anchors.iter_mut() {
                    let mut u = 0;
                    let mut u_not_k = 0;
                    for &y in c.cover().neighbors(a.anchor) {
                        if !draw.is_colored(c.owner(y)) {
                            u += 1;
                            if draw.blocked[y] {
                                u_not_k += 1;
                            }
                        }
                    }
                    a.uncolored.push(u);
                    a.uncolored_blocked.push(u_not_k);
                    if deg[a.anchor] != u - u_not_k {
                        a.identity_failures += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| Acc::new(c, &anchor_ids), Acc::merge);
    Ok(RoundStats {
        trials,
        seed,
        params: *p,
        kept: acc.kept,
        degree: acc.degree,
        kept_tail: acc.kept_tail,
        degree_tail: acc.degree_tail,
        blank: acc.blank,
        anchors: acc.anchors,
    })
}

/// Default cap on the number of enumerated outcomes.
pub const DEFAULT_OUTCOME_BUDGET: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactExpectation {
    /// per vertex, `E[|K(v)|]`
    pub kept: Vec<f64>,
    /// per color, `E[d'(c)]`
    pub degree: Vec<f64>,
    pub outcomes: u64,
}

/// Exact expectations by enumerating every activation/color outcome: vertex
/// `v` is inactive with probability `1 − η` and picks each list color with
/// probability `η/|L(v)|`.
pub fn exact_round_expectation(c: &DpCover, eta: f64, budget: f64) -> Result<ExactExpectation, AnalysisError> {
    let n = c.vertex_count();
    let radix: Vec<usize> = c.lists().iter().map(|l| l.len() + 1).collect();
    let needed: f64 = radix.iter().map(|&r| r as f64).product();
    if needed > budget {
        return Err(AnalysisError::Budget { needed, budget });
    }
    let weight_of = |v: usize, digit: usize| if digit == 0 { 1.0 - eta } else { eta / (radix[v] - 1) as f64 };
    let mut digits = vec![0usize; n];
    let mut kept = vec![0.0; n];
    let mut degree = vec![0.0; c.color_count()];
    let mut blocked = vec![0u32; c.color_count()];
    let mut outcomes = 0u64;
    loop {
        outcomes += 1;
        let w: f64 = (0..n).map(|v| weight_of(v, digits[v])).product();
        if w > 0.0 {
            blocked.iter_mut().for_each(|b| *b = 0);
            for v in 0..n {
                if digits[v] > 0 {
                    for &y in c.cover().neighbors(c.list(v)[digits[v] - 1]) {
                        blocked[y] += 1;
                    }
                }
            }
            let colored = |v: usize| digits[v] > 0 && blocked[c.list(v)[digits[v] - 1]] == 0;
            for v in 0..n {
                kept[v] += w * c.list(v).iter().filter(|&&x| blocked[x] == 0).count() as f64;
            }
            for x in 0..c.color_count() {
                let dx = c
                    .cover()
                    .neighbors(x)
                    .iter()
                    .filter(|&&y| blocked[y] == 0 && !colored(c.owner(y)))
                    .count();
                degree[x] += w * dx as f64;
            }
        }
        // next mixed-radix digit vector
        let mut v = 0;
        while v < n {
            digits[v] += 1;
            if digits[v] < radix[v] {
                break;
            }
            digits[v] = 0;
            v += 1;
        }
        if v == n {
            break;
        }
    }
    Ok(ExactExpectation { kept, degree, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::tests::k2_matched;
    use crate::generators::{random_dp_cover, random_regular};
    use crate::nibble::keep_fn;
    use proptest::prelude::*;

    #[test]
    fn verify_examples() {
        let c = k2_matched(2);
        assert!(verify_proper(&c, &PartialColoring::blank(2)).unwrap().is_proper());
        let a = c.list(0)[0];
        let b = c.cover().neighbors(a)[0];
        let phi = PartialColoring::from_assignment(vec![Some(a), Some(b)]);
        assert_eq!(
            verify_proper(&c, &phi).unwrap(),
            Properness::Conflict { vertices: (0, 1), colors: (a, b) }
        );
        let wrong = PartialColoring::from_assignment(vec![Some(c.list(1)[0]), None]);
        assert!(matches!(verify_proper(&c, &wrong), Err(AnalysisError::UnlistedColor { vertex: 0, .. })));
        assert!(matches!(verify_proper(&c, &PartialColoring::blank(3)), Err(AnalysisError::Length { .. })));
    }

    #[test]
    fn star_has_empty_second_neighborhood() {
        let star = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        let r = classify_structure(&star, 1, 5, 1);
        // from a leaf, the other leaves are at distance 2
        assert_eq!(r.bad.len() + r.good.len(), 4);
        let r = classify_structure(&star, 0, 5, 1);
        assert!(r.bad.is_empty() && r.good.is_empty() && r.sad.is_empty());
        assert_eq!(r.happy.len(), 5);
    }

    #[test]
    fn three_common_neighbors_make_a_bad_color() {
        // anchor 0, neighbors 1..=4, color 5 adjacent to 1, 2, 3
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (0, 3), (0, 4), (5, 1), (5, 2), (5, 3)]).unwrap();
        let r = classify_structure(&g, 0, 4, 1);
        assert!((r.threshold - 4f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(r.bad, BTreeSet::from([5]));
        // each of 1, 2, 3 has one bad neighbor < 2.52: all happy
        assert!(r.sad.is_empty());
        assert_eq!(r.happy.len(), 4);
        assert!((r.delta - 1.0 / 3.0).abs() < 1e-15 && (r.beta2 - 1.0 / 15.0).abs() < 1e-15);
        assert!((r.tau - 4.0 / 9.0).abs() < 1e-15);
    }

    /// Second implementation: double loop over all color pairs.
    fn classify_by_pairs(g: &Graph, anchor: ColorId, d: usize, t: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let thr = (d as f64).powf(1.0 - 1.0 / (3.0 * t as f64));
        let nbrs: Vec<usize> = g.neighbors(anchor).to_vec();
        let mut bad = BTreeSet::new();
        for y in 0..g.vertex_count() {
            if y == anchor {
                continue;
            }
            let common = nbrs.iter().filter(|&&x| g.has_edge(x, y)).count();
            if common > 0 && common as f64 >= thr {
                bad.insert(y);
            }
        }
        let mut sad = BTreeSet::new();
        for &x in &nbrs {
            let k = bad.iter().filter(|&&y| g.has_edge(x, y)).count();
            if k as f64 >= thr {
                sad.insert(x);
            }
        }
        (bad, sad)
    }

    proptest! {
        #[test]
        fn classifier_matches_pair_count(seed in 0u64..300, t in 1usize..3) {
            let g = random_regular(40, 6, seed).unwrap();
            let c = random_dp_cover(&g, 3, 0.8, seed).unwrap();
            for anchor in [0, 7, 33] {
                let r = classify_structure(c.cover(), anchor, 6, t);
                let (bad, sad) = classify_by_pairs(c.cover(), anchor, 6, t);
                prop_assert_eq!(&r.bad, &bad);
                prop_assert_eq!(&r.sad, &sad);
                prop_assert!(r.bad.is_disjoint(&r.good) && r.sad.is_disjoint(&r.happy));
                let nb: BTreeSet<usize> = c.cover().neighbors(anchor).iter().copied().collect();
                prop_assert_eq!(r.sad.union(&r.happy).copied().collect::<BTreeSet<_>>(), nb);
            }
        }
    }

    #[test]
    fn moments_arithmetic() {
        let mut m = Moments::default();
        for x in [1, 2, 3, 4] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        let mut one = Moments::default();
        one.push(7);
        assert_eq!(one.variance(), 0.0);
    }

    #[test]
    fn edgeless_cover_keeps_everything() {
        let c = DpCover::from_list_assignment(&Graph::empty(4), &vec![vec![1, 2, 3]; 4]).unwrap();
        let p = RoundParams::new(0.7, 1, 3, 0.2).unwrap();
        let s = round_stats(&c, &p, Anchors::All, 200, 5).unwrap();
        for m in &s.kept {
            assert_eq!(m.mean(), 3.0);
            assert_eq!(m.variance(), 0.0);
        }
        let e = exact_round_expectation(&c, 0.7, DEFAULT_OUTCOME_BUDGET).unwrap();
        assert!(e.kept.iter().all(|&k| (k - 3.0).abs() < 1e-12));
    }

    #[test]
    fn single_vertex_exact() {
        let c = DpCover::from_list_assignment(&Graph::empty(1), &[vec![0, 1, 2]]).unwrap();
        let e = exact_round_expectation(&c, 0.37, 10.0).unwrap();
        assert!((e.kept[0] - 3.0).abs() < 1e-15);
        assert_eq!(e.outcomes, 4);
        assert!(matches!(exact_round_expectation(&c, 0.37, 3.0), Err(AnalysisError::Budget { .. })));
    }

    #[test]
    fn k2_exact_equals_closed_form() {
        let c = k2_matched(2);
        let e = exact_round_expectation(&c, 1.0, 100.0).unwrap();
        assert!((e.kept[0] - 1.0).abs() < 1e-15);
        assert!((e.kept[0] - keep_fn(1.0, 2.0, 1.0) * 2.0).abs() < 1e-15);
        let s = round_stats(&c, &RoundParams::new(1.0, 1, 2, 0.5).unwrap(), Anchors::None, 500, 0).unwrap();
        assert_eq!(s.kept[0].mean(), 1.0);
    }

    #[test]
    fn anchor_identity_holds_every_sample() {
        let g = random_regular(30, 4, 2).unwrap();
        let c = random_dp_cover(&g, 4, 1.0, 3).unwrap();
        let p = RoundParams::new(0.5, 4, 4, 0.1).unwrap();
        let s = round_stats(&c, &p, Anchors::All, 300, 9).unwrap();
        assert!(s.anchors.iter().all(|a| a.identity_failures == 0));
        assert_eq!(s.anchors.len(), c.color_count());
        // aggregation does not depend on scheduling
        let again = round_stats(&c, &p, Anchors::All, 300, 9).unwrap();
        assert_eq!(s, again);
        assert!(matches!(round_stats(&c, &p, Anchors::One(10_000), 1, 0), Err(AnalysisError::Anchor(10_000))));
    }

    #[test]
    fn path_exact_matches_monte_carlo() {
        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let c = random_dp_cover(&p3, 2, 1.0, 4).unwrap();
        let e = exact_round_expectation(&c, 0.5, DEFAULT_OUTCOME_BUDGET).unwrap();
        let p = RoundParams::new(0.5, 2, 2, 0.1).unwrap();
        let s = round_stats(&c, &p, Anchors::None, 100_000, 77).unwrap();
        for v in 0..3 {
            let m = &s.kept[v];
            assert!((m.mean() - e.kept[v]).abs() <= 4.0 * m.std_error().max(1e-12), "vertex {v}");
        }
        for x in 0..c.color_count() {
            let m = &s.degree[x];
            assert!((m.mean() - e.degree[x]).abs() <= 4.0 * m.std_error().max(1e-12), "color {x}");
        }
    }
}
