//! One round of the wasteful coloring procedure and its acceptance test.
//!
//! Every vertex draws from its own ChaCha stream keyed by `(seed, vertex)`:
//! first a uniform `f64` for activation, then a uniform index into its list.
//! Both draws are always made, so an outcome does not depend on visiting order.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cover::{ColorId, DpCover, PartialColoring};
use crate::graph::VertexId;
use crate::rng::{stream_rng, Seed};

const NONE: usize = usize::MAX;

#[derive(Debug, Error)]
pub enum NibbleError {
    #[error("invalid round parameters: {0}")]
    Params(String),
    #[error("no good round in {attempts} attempts (best had {} list and {} degree violations)", .best_events.0, .best_events.1)]
    RetriesExhausted {
        attempts: usize,
        /// (violated list events, violated degree events) of the best attempt
        best_events: (usize, usize),
        best: Box<RoundOutcome>,
        /// per attempt, in seed order
        history: Vec<(usize, usize)>,
    },
}

/// `(1 - eta/ell)^d`.
pub fn keep_fn(d: f64, ell: f64, eta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    (d * (-eta / ell).ln_1p()).exp()
}

/// `1 - eta * keep`.
pub fn uncolor_fn(d: f64, ell: f64, eta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    // 1 - exp(ln eta + d ln(1 - eta/ell)) without cancellation when eta*keep is near 1
    -(eta.ln() + d * (-eta / ell).ln_1p()).exp_m1()
}

/// `keep * ell - ell^(1 - beta)`.
pub fn ell_next(d: f64, ell: f64, eta: f64, beta: f64) -> f64 {
    let log_keep = if eta == 0.0 { 0.0 } else { d * (-eta / ell).ln_1p() };
    let log_tail = -beta * ell.ln();
    // ell * (e^a - e^b) = ell * e^b * expm1(a - b)
    ell * log_tail.exp() * (log_keep - log_tail).exp_m1()
}

/// `keep * uncolor * d + d^(1 - beta)`.
pub fn d_next(d: f64, ell: f64, eta: f64, beta: f64) -> f64 {
    keep_fn(d, ell, eta) * uncolor_fn(d, ell, eta) * d + d.powf(1.0 - beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundParams {
    pub eta: f64,
    pub d: usize,
    pub ell: usize,
    pub beta: f64,
}

impl RoundParams {
    pub fn new(eta: f64, d: usize, ell: usize, beta: f64) -> Result<Self, NibbleError> {
        let p = RoundParams { eta, d, ell, beta };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), NibbleError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(NibbleError::Params(format!("eta = {} not in (0, 1]", self.eta)));
        }
        if self.d == 0 || self.ell == 0 {
            return Err(NibbleError::Params("d and ell must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(NibbleError::Params(format!("beta = {} not in (0, 1)", self.beta)));
        }
        Ok(())
    }

    pub fn keep(&self) -> f64 {
        keep_fn(self.d as f64, self.ell as f64, self.eta)
    }

    pub fn uncolor(&self) -> f64 {
        uncolor_fn(self.d as f64, self.ell as f64, self.eta)
    }

    pub fn ell_next(&self) -> f64 {
        ell_next(self.d as f64, self.ell as f64, self.eta, self.beta)
    }

    pub fn d_next(&self) -> f64 {
        d_next(self.d as f64, self.ell as f64, self.eta, self.beta)
    }
}

/// Raw randomness of one round plus the blocked-color marks it induces.
#[derive(Clone, Debug)]
pub(crate) struct Draw {
    /// color chosen by each activated vertex, `NONE` otherwise
    pub assigned: Vec<ColorId>,
    /// colors with a cover-neighbor in `col(A)`
    pub blocked: Vec<bool>,
}

impl Draw {
    pub fn sample(c: &DpCover, eta: f64, seed: Seed) -> Draw {
        let mut assigned = vec![NONE; c.vertex_count()];
        for (v, slot) in assigned.iter_mut().enumerate() {
            let list = c.list(v);
            let mut rng = stream_rng(seed, v as u64);
            let x: f64 = rng.gen();
            let idx = rng.gen_range(0..list.len());
            if x < eta {
                *slot = list[idx];
            }
        }
        let mut blocked = vec![false; c.color_count()];
        for &a in assigned.iter().filter(|&&a| a != NONE) {
            for &x in c.cover().neighbors(a) {
                blocked[x] = true;
            }
        }
        Draw { assigned, blocked }
    }

    pub fn is_colored(&self, v: VertexId) -> bool {
        let a = self.assigned[v];
        a != NONE && !self.blocked[a]
    }

    pub fn kept_len(&self, c: &DpCover, v: VertexId) -> usize {
        c.list(v).iter().filter(|&&x| !self.blocked[x]).count()
    }

    /// Per color: does it survive into the residual cover.
    pub fn survivors(&self, c: &DpCover) -> Vec<bool> {
        (0..c.color_count()).map(|x| !self.blocked[x] && !self.is_colored(c.owner(x))).collect()
    }

    /// `|N_H(x) ∩ V(H')|`.
    pub fn residual_degree(&self, c: &DpCover, survivors: &[bool], x: ColorId) -> usize {
        c.cover().neighbors(x).iter().filter(|&&y| survivors[y]).count()
    }

    /// Number of violated list events and degree events.
    pub fn events(&self, c: &DpCover, ell_target: f64, d_target: f64) -> (usize, usize) {
        let a = (0..c.vertex_count()).filter(|&v| self.kept_len(c, v) as f64 <= ell_target).count();
        let survivors = self.survivors(c);
        let b = (0..c.color_count())
            .filter(|&x| survivors[x] && self.residual_degree(c, &survivors, x) as f64 >= d_target)
            .count();
        (a, b)
    }

    pub fn into_outcome(self, c: &DpCover, seed: Seed) -> RoundOutcome {
        let n = c.vertex_count();
        let kept: Vec<Vec<ColorId>> =
            (0..n).map(|v| c.list(v).iter().copied().filter(|&x| !self.blocked[x]).collect()).collect();
        let coloring = PartialColoring::from_assignment(
            (0..n).map(|v| self.is_colored(v).then_some(self.assigned[v])).collect(),
        );
        let residual = c.residual(&coloring, &kept).expect("kept sets are sublists of the cover");
        RoundOutcome {
            seed,
            activated: (0..n).filter(|&v| self.assigned[v] != NONE).collect(),
            assigned: self.assigned.iter().map(|&a| (a != NONE).then_some(a)).collect(),
            kept,
            coloring,
            residual,
        }
    }
}

/// One execution of the procedure. `residual` is renumbered; its
/// `vertex_origin`/`color_origin` refer back to the input cover's root ids.
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub seed: Seed,
    pub activated: Vec<VertexId>,
    pub assigned: Vec<Option<ColorId>>,
    pub kept: Vec<Vec<ColorId>>,
    pub coloring: PartialColoring,
    pub residual: DpCover,
}

impl RoundOutcome {
    /// Number of violated (list, degree) events for the given targets.
    pub fn events(&self, ell_target: f64, d_target: f64) -> (usize, usize) {
        let a = self.kept.iter().filter(|k| k.len() as f64 <= ell_target).count();
        let r = &self.residual;
        let b = (0..r.color_count()).filter(|&x| r.cover().degree(x) as f64 >= d_target).count();
        (a, b)
    }
}

pub fn run_round(c: &DpCover, p: &RoundParams, seed: Seed) -> RoundOutcome {
    Draw::sample(c, p.eta, seed).into_outcome(c, seed)
}

/// True iff no vertex keeps at most `ell_target` colors and no surviving
/// color has residual degree at least `d_target`.
pub fn round_is_good(o: &RoundOutcome, ell_target: f64, d_target: f64) -> bool {
    o.events(ell_target, d_target) == (0, 0)
}

/// Tries seeds `seed, seed+1, ...` until a round is good.
pub fn run_round_until_good(
    c: &DpCover,
    p: &RoundParams,
    ell_target: f64,
    d_target: f64,
    max_retries: usize,
    seed: Seed,
) -> Result<(RoundOutcome, usize), NibbleError> {
    let mut best: Option<(usize, Seed, Draw)> = None;
    let mut history = Vec::new();
    for k in 0..max_retries.max(1) {
        let s = seed.wrapping_add(k as u64);
        let draw = Draw::sample(c, p.eta, s);
        let ev = draw.events(c, ell_target, d_target);
        history.push(ev);
        if ev == (0, 0) {
            return Ok((draw.into_outcome(c, s), k));
        }
        let total = ev.0 + ev.1;
        if best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, s, draw));
        }
    }
    let (_, s, draw) = best.expect("at least one attempt");
    let best_idx = (s.wrapping_sub(seed)) as usize;
    Err(NibbleError::RetriesExhausted {
        attempts: history.len(),
        best_events: history[best_idx],
        best: Box::new(draw.into_outcome(c, s)),
        history,
    })
}
