//! End-to-end coloring: optionally regularize, trim to the smallest list, run good nibble rounds
//! until lists are at least eight times the cover degree, then finish with
//! Moser–Tardos resampling.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{verify_proper, AnalysisError, Properness};
use crate::cover::{ColorId, CoverError, DpCover, PartialColoring, Violation};
use crate::nibble::{run_round_until_good, NibbleError, RoundParams};
use crate::rng::{derive, rng, Seed};
use crate::schedule::{derive_constants, ScheduleError, ScheduleInput};

const FINISH_TAG: u64 = 0xF1_5E;
const REGULARIZE_TAG: u64 = 0x5E_6A;

/// How the activation probability is chosen for each round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaPolicy {
    /// `κ/ln d` from the schedule constants
    #[default]
    Schedule,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub schedule_input: ScheduleInput,
    /// multiplier loosening the good-round targets; 1.0 is exact
    pub slack: f64,
    pub max_round_retries: usize,
    pub max_finish_resamples: usize,
    pub seed: Seed,
    pub regularize_first: bool,
    #[serde(default)]
    pub eta: EtaPolicy,
    /// cap on the number of nibble rounds
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
}

fn default_max_rounds() -> usize {
    1000
}

impl PipelineConfig {
    pub fn new(schedule_input: ScheduleInput, seed: Seed) -> Self {
        PipelineConfig {
            schedule_input,
            slack: 1.0,
            max_round_retries: 50,
            max_finish_resamples: 100_000,
            seed,
            regularize_first: false,
            eta: EtaPolicy::Schedule,
            max_rounds: default_max_rounds(),
        }
    }

    fn check(&self) -> Result<(), PipelineError> {
        if !(self.slack >= 1.0) {
            return Err(PipelineError::Config(format!("slack = {} must be >= 1", self.slack)));
        }
        if let EtaPolicy::Fixed(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(PipelineError::Config(format!("eta = {eta} not in (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTelemetry {
    pub iteration: usize,
    /// failed attempts before the accepted one
    pub retries: usize,
    pub eta: f64,
    pub ell: usize,
    pub d: usize,
    pub ell_target: f64,
    pub d_target: f64,
    pub vertices: usize,
    pub colored: usize,
    pub min_kept: usize,
    pub max_residual_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColoringResult {
    pub coloring: PartialColoring,
    pub rounds: Vec<RoundTelemetry>,
    pub finish_resamples: usize,
}

#[derive(Debug, Error)]
pub enum FinishError {
    #[error("list of vertex {vertex} has {size} colors, fewer than 8 * max cover degree = {needed}")]
    Precondition { vertex: usize, size: usize, needed: usize },
    #[error("{} conflicts remain after {resamples} resamples", .trajectory.last().copied().unwrap_or(0))]
    Budget {
        resamples: usize,
        /// number of violated cover edges after each resample (index 0: initial)
        trajectory: Vec<usize>,
    },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cover is invalid ({} violations)", .0.len())]
    InvalidCover(Vec<Violation>),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("smallest list has {min} colors, the schedule starts at {ell_1}")]
    ListsTooSmall { min: usize, ell_1: u64 },
    #[error("regularization failed: {0}")]
    Regularize(#[source] CoverError),
    #[error("round {iteration}: no good round in {attempts} attempts (best: {} list, {} degree events)", .best_events.0, .best_events.1)]
    RoundBudget { iteration: usize, attempts: usize, best_events: (usize, usize), rounds: Vec<RoundTelemetry> },
    #[error("lists never reached 8x the cover degree within {} rounds", .rounds.len())]
    MaxRounds { rounds: Vec<RoundTelemetry> },
    #[error("finish failed: {source}")]
    Finish { source: FinishError, rounds: Vec<RoundTelemetry> },
    #[error("final coloring failed verification: {0:?}")]
    Verification(Properness),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl PipelineError {
    /// Telemetry of the rounds completed before the failure.
    pub fn rounds(&self) -> &[RoundTelemetry] {
        match self {
            PipelineError::RoundBudget { rounds, .. }
            | PipelineError::MaxRounds { rounds }
            | PipelineError::Finish { rounds, .. } => rounds,
            _ => &[],
        }
    }
}

/// Completes a coloring by resampling: every vertex takes a uniform color;
/// while a cover edge joins two chosen colors, the two endpoints of the
/// lowest such edge draw again.
pub fn finish(c: &DpCover, max_resamples: usize, seed: Seed) -> Result<(PartialColoring, usize), FinishError> {
    let needed = 8 * c.max_cover_degree();
    for (v, l) in c.lists().iter().enumerate() {
        if l.len() < needed || l.is_empty() {
            return Err(FinishError::Precondition { vertex: v, size: l.len(), needed: needed.max(1) });
        }
    }
    let mut r = rng(seed);
    let n = c.vertex_count();
    let mut chosen: Vec<ColorId> = (0..n).map(|v| c.list(v)[r.gen_range(0..c.list(v).len())]).collect();
    let mut is_chosen = vec![false; c.color_count()];
    for &x in &chosen {
        is_chosen[x] = true;
    }
    let mut violated: BTreeSet<(ColorId, ColorId)> = BTreeSet::new();
    for &x in &chosen {
        for &y in c.cover().neighbors(x) {
            if is_chosen[y] && x < y {
                violated.insert((x, y));
            }
        }
    }
    let mut trajectory = vec![violated.len()];
    let mut resamples = 0;
    while let Some(&(a, b)) = violated.first() {
        if resamples >= max_resamples {
            return Err(FinishError::Budget { resamples, trajectory });
        }
        resamples += 1;
        for v in [c.owner(a), c.owner(b)] {
            let old = chosen[v];
            is_chosen[old] = false;
            for &y in c.cover().neighbors(old) {
                violated.remove(&(old.min(y), old.max(y)));
            }
            let new = c.list(v)[r.gen_range(0..c.list(v).len())];
            chosen[v] = new;
            is_chosen[new] = true;
            for &y in c.cover().neighbors(new) {
                if is_chosen[y] {
                    violated.insert((new.min(y), new.max(y)));
                }
            }
        }
        trajectory.push(violated.len());
    }
    Ok((PartialColoring::from_assignment(chosen.into_iter().map(Some).collect()), resamples))
}

pub fn color_graph(c: &DpCover, cfg: &PipelineConfig) -> Result<ColoringResult, PipelineError> {
    cfg.check()?;
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(PipelineError::InvalidCover(violations));
    }
    let root = c.as_root();
    let n = root.vertex_count();
    let constants = derive_constants(&cfg.schedule_input)?;

    let working_root = if cfg.regularize_first {
        let si = &cfg.schedule_input;
        root.regularize(si.d as usize, si.s as usize, si.t as usize, derive(cfg.seed, REGULARIZE_TAG))
            .map_err(PipelineError::Regularize)?
            .cover
    } else {
        root.clone()
    };
    let min = working_root.min_list_size();
    let needs_rounds = min < 8 * working_root.max_cover_degree();
    if needs_rounds && (min as u64) < constants.ell_1 {
        return Err(PipelineError::ListsTooSmall { min, ell_1: constants.ell_1 });
    }
    let mut work = if working_root.vertex_count() > 0 {
        working_root.trim(min).map_err(PipelineError::Regularize)?
    } else {
        working_root.clone()
    };

    let mut assignment: Vec<Option<ColorId>> = vec![None; working_root.vertex_count()];
    let mut rounds: Vec<RoundTelemetry> = Vec::new();
    let mut scheduled_d = cfg.schedule_input.d as f64;
    loop {
        let observed_d = work.max_cover_degree();
        let ell = work.min_list_size();
        if observed_d == 0 || ell >= 8 * observed_d {
            break;
        }
        if rounds.len() >= cfg.max_rounds {
            return Err(PipelineError::MaxRounds { rounds });
        }
        let iteration = rounds.len() + 1;
        let d = (scheduled_d.floor() as usize).clamp(1, observed_d);
        let eta = match cfg.eta {
            EtaPolicy::Schedule => constants.eta,
            EtaPolicy::Fixed(x) => x,
        };
        let params = RoundParams { eta, d, ell, beta: constants.beta };
        let ell_target = (params.ell_next() / cfg.slack).max(0.0);
        let d_target = params.d_next() * cfg.slack;
        let (outcome, retries) = match run_round_until_good(
            &work,
            &params,
            ell_target,
            d_target,
            cfg.max_round_retries,
            derive(cfg.seed, iteration as u64),
        ) {
            Ok(x) => x,
            Err(NibbleError::RetriesExhausted { attempts, best_events, .. }) => {
                return Err(PipelineError::RoundBudget { iteration, attempts, best_events, rounds })
            }
            Err(e @ NibbleError::Params(_)) => return Err(PipelineError::Config(e.to_string())),
        };
        for (v, x) in outcome.coloring.colored() {
            assignment[work.vertex_origin()[v]] = Some(work.color_origin()[x]);
        }
        let residual = outcome.residual;
        if cfg!(debug_assertions) {
            check_composition(&working_root, &assignment, &residual);
        }
        let min_kept = residual.min_list_size();
        rounds.push(RoundTelemetry {
            iteration,
            retries,
            eta,
            ell,
            d,
            ell_target,
            d_target,
            vertices: work.vertex_count(),
            colored: outcome.coloring.domain_size(),
            min_kept,
            max_residual_degree: residual.max_cover_degree(),
        });
        scheduled_d = params.d_next().floor();
        // lists are not re-trimmed: one unlucky vertex would otherwise
        // shrink every list to its size
        work = residual;
    }

    let (tail, finish_resamples) = finish(&work, cfg.max_finish_resamples, derive(cfg.seed, FINISH_TAG))
        .map_err(|source| PipelineError::Finish { source, rounds: rounds.clone() })?;
    for (v, x) in tail.colored() {
        assignment[work.vertex_origin()[v]] = Some(work.color_origin()[x]);
    }
    // copy 0 of a regularized cover carries the original ids
    assignment.truncate(n);
    let coloring = PartialColoring::from_assignment(assignment);
    let verdict = verify_proper(&root, &coloring)?;
    if !verdict.is_proper() || !coloring.is_total() {
        return Err(PipelineError::Verification(verdict));
    }
    Ok(ColoringResult { coloring, rounds, finish_resamples })
}

/// Every color still in play avoids all colors fixed so far.
fn check_composition(root: &DpCover, assignment: &[Option<ColorId>], residual: &DpCover) {
    let mut fixed = vec![false; root.color_count()];
    for x in assignment.iter().flatten() {
        fixed[*x] = true;
    }
    for x in 0..residual.color_count() {
        let orig = residual.color_origin()[x];
        assert!(
            root.cover().neighbors(orig).iter().all(|&y| !fixed[y]),
            "surviving color {orig} is adjacent to a fixed color"
        );
    }
}
