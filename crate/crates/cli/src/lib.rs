//! Batch front end: instance generation, schedules, pipeline runs and
//! round statistics, all reproducible from a seed.
//!
//! Exit codes: 0 success, 1 verification or feasibility failure, 2 usage or
//! validation error, 3 budget exhausted.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use dpcolor::analysis::AnchorStats;
use dpcolor::cover::CoverFile;
use dpcolor::pipeline::FinishError;
use dpcolor::{
    color_graph, compute_schedule, round_stats, schedule::schedule_csv, AnalysisError, Anchors, ColoringResult,
    CoverError, DpCover, EtaPolicy, GenError, GenSpec, Generated, Moments, PipelineConfig, PipelineError,
    RoundParams, RoundStats, RoundTelemetry, ScheduleError, ScheduleInput, Seed,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "dpcolor", version, about = "DP-coloring by iterated wasteful nibble rounds")]
pub struct Cli {
    /// seed for every random choice; required by generate, color and stats
    #[arg(long, global = true)]
    pub seed: Option<Seed>,
    /// worker threads for trial-parallel work
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON run configuration; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a random graph or cover and print its sha256 digest
    Generate(GenerateArgs),
    /// Print the parameter schedule as CSV
    Schedule(ScheduleArgs),
    /// Color a cover file; the result file is written even on failure
    Color(ColorArgs),
    /// Aggregate statistics of independent single rounds as CSV
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Regular,
    Girth5Regular,
    DpCover,
    ListCover,
    KstFreeBipartite,
}

#[derive(Args, Debug, Default)]
pub struct GenerateArgs {
    /// JSON generator spec (tagged by "kind")
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub palette: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    /// use a girth-5 base for dp_cover and list_cover
    #[arg(long)]
    pub girth5: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// write to a file instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ColorArgs {
    /// cover file as written by `generate`
    pub cover: Option<PathBuf>,
    /// degree bound fed to the schedule (default: max cover degree, at least 3)
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub slack: Option<f64>,
    /// failed attempts allowed per round
    #[arg(long)]
    pub max_retries: Option<usize>,
    #[arg(long)]
    pub max_resamples: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// fixed activation probability instead of the scheduled one
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub regularize_first: bool,
    /// result JSON path
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct StatsArgs {
    pub cover: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// `d` of the round parameters (default: max cover degree)
    #[arg(long)]
    pub d: Option<usize>,
    /// `ℓ` of the round parameters (default: smallest list)
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// `none`, `all`, or a color id
    #[arg(long)]
    pub anchor: Option<String>,
    /// CSV path (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// summary JSON path
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Everything a config file may set. Command-line flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<Seed>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub cover: Option<PathBuf>,
    pub spec: Option<GenSpec>,
    pub d: Option<u64>,
    pub epsilon: Option<f64>,
    pub s: Option<u64>,
    pub t: Option<u64>,
    pub d_tilde: Option<f64>,
    pub alpha_tilde: Option<f64>,
    pub max_iters: Option<usize>,
    pub slack: Option<f64>,
    pub max_retries: Option<usize>,
    pub max_resamples: Option<usize>,
    pub max_rounds: Option<usize>,
    pub eta: Option<f64>,
    pub regularize_first: Option<bool>,
    pub ell: Option<usize>,
    pub trials: Option<u64>,
    pub anchor: Option<String>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Generate(GenError::PairingBudget { .. } | GenError::GirthBudget { .. }) => EXIT_BUDGET,
            CliError::Pipeline(e) => pipeline_exit_code(e),
            _ => EXIT_USAGE,
        }
    }
}

fn pipeline_exit_code(e: &PipelineError) -> i32 {
    match e {
        PipelineError::RoundBudget { .. }
        | PipelineError::MaxRounds { .. }
        | PipelineError::Finish { source: FinishError::Budget { .. }, .. } => EXIT_BUDGET,
        PipelineError::Regularize(CoverError::Auxiliary { .. }) => EXIT_BUDGET,
        PipelineError::ListsTooSmall { .. }
        | PipelineError::Finish { .. }
        | PipelineError::Verification(_)
        | PipelineError::Regularize(_) => EXIT_FAILURE,
        PipelineError::Config(_)
        | PipelineError::InvalidCover(_)
        | PipelineError::Schedule(_)
        | PipelineError::Analysis(_) => EXIT_USAGE,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Json { path: path.to_owned(), source })
}

pub fn load_cover(path: &Path) -> Result<DpCover, CliError> {
    Ok(DpCover::from_json(&read(path)?)?)
}

fn need<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{what}")))
}

/// Cover file plus the spec that produced it.
#[derive(Serialize)]
struct GeneratedCover<'a> {
    spec: &'a GenSpec,
    #[serde(flatten)]
    cover: CoverFile,
}

/// Output of a `generate` run.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerateOutput {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn gen_spec(args: &GenerateArgs, seed: Option<Seed>, cfg: &RunConfig) -> Result<GenSpec, CliError> {
    let from_file = match &args.spec {
        Some(p) => Some(
            serde_json::from_str::<GenSpec>(&read(p)?).map_err(|source| CliError::Json { path: p.clone(), source })?,
        ),
        None => cfg.spec.clone(),
    };
    let Some(kind) = args.kind else {
        let mut spec = from_file.ok_or_else(|| CliError::Usage("need --kind or --spec".into()))?;
        if let Some(s) = seed {
            set_seed(&mut spec, s);
        }
        return Ok(spec);
    };
    let seed = need(seed, "seed")?;
    let n = || need(args.n, "n");
    let d = || need(args.d, "d");
    let ell = || need(args.ell, "ell");
    Ok(match kind {
        Kind::Regular => GenSpec::Regular { n: n()?, d: d()?, seed },
        Kind::Girth5Regular => GenSpec::Girth5Regular { n: n()?, d: d()?, seed },
        Kind::DpCover => GenSpec::DpCover {
            n: n()?,
            d: d()?,
            ell: ell()?,
            rho: args.rho.unwrap_or(1.0),
            seed,
            girth5: args.girth5,
        },
        Kind::ListCover => GenSpec::ListCover {
            n: n()?,
            d: d()?,
            ell: ell()?,
            palette: need(args.palette, "palette")?,
            seed,
            girth5: args.girth5,
        },
        Kind::KstFreeBipartite => GenSpec::KstFreeBipartite {
            m: need(args.m, "m")?,
            n: n()?,
            s: need(args.s, "s")?,
            t: need(args.t, "t")?,
            seed,
        },
    })
}

fn set_seed(spec: &mut GenSpec, s: Seed) {
    match spec {
        GenSpec::Regular { seed, .. }
        | GenSpec::Girth5Regular { seed, .. }
        | GenSpec::DpCover { seed, .. }
        | GenSpec::ListCover { seed, .. }
        | GenSpec::KstFreeBipartite { seed, .. } => *seed = s,
    }
}

/// Bytes of a generated instance: edge-list text for graphs, JSON for covers.
pub fn render_generated(spec: &GenSpec) -> Result<Vec<u8>, CliError> {
    let header = serde_json::to_string(spec).expect("spec serializes");
    Ok(match spec.generate()? {
        Generated::Graph(g) => format!("# {header}\n{}", g.to_edge_list()).into_bytes(),
        Generated::Cover(c) => {
            let mut s = serde_json::to_string(&GeneratedCover { spec, cover: c.to_file() }).expect("cover serializes");
            s.push('\n');
            s.into_bytes()
        }
    })
}

pub fn cmd_generate(args: &GenerateArgs, seed: Option<Seed>, cfg: &RunConfig) -> Result<GenerateOutput, CliError> {
    let spec = gen_spec(args, seed, cfg)?;
    let out = need(args.out.clone().or_else(|| cfg.out.clone()), "out")?;
    let bytes = render_generated(&spec)?;
    write(&out, &bytes)?;
    Ok(GenerateOutput { path: out, sha256: sha256_hex(&bytes) })
}

pub fn schedule_input(
    d: Option<u64>,
    epsilon: Option<f64>,
    s: Option<u64>,
    t: Option<u64>,
    cfg: &RunConfig,
) -> Result<ScheduleInput, CliError> {
    let mut input = ScheduleInput::new(
        need(d.or(cfg.d), "d")?,
        epsilon.or(cfg.epsilon).unwrap_or(0.1),
        s.or(cfg.s).unwrap_or(2),
        t.or(cfg.t).unwrap_or(2),
    );
    if let Some(x) = cfg.d_tilde {
        input.d_tilde = x;
    }
    if let Some(x) = cfg.alpha_tilde {
        input.alpha_tilde = x;
    }
    Ok(input)
}

pub fn cmd_schedule(args: &ScheduleArgs, cfg: &RunConfig) -> Result<String, CliError> {
    let input = schedule_input(args.d, args.epsilon, args.s, args.t, cfg)?;
    let max_iters = args.max_iters.or(cfg.max_iters).unwrap_or(1_000_000);
    let schedule = compute_schedule(&input, max_iters)?;
    let csv = schedule_csv(&schedule);
    if let Some(out) = args.out.as_ref().or(cfg.out.as_ref()) {
        write(out, csv.as_bytes())?;
    }
    Ok(csv)
}

/// Contents of the `color` result file.
#[derive(Debug, Serialize)]
pub struct ColorReport {
    pub seed: Seed,
    pub cover_sha256: String,
    pub config: PipelineConfig,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub result: Option<ColoringResult>,
    pub failed_rounds: Vec<RoundTelemetry>,
}

pub fn pipeline_config(args: &ColorArgs, cover: &DpCover, seed: Seed, cfg: &RunConfig) -> Result<PipelineConfig, CliError> {
    let observed = cover.max_cover_degree().max(3) as u64;
    let input = schedule_input(Some(args.d.or(cfg.d).unwrap_or(observed)), args.epsilon, args.s, args.t, cfg)?;
    let mut pc = PipelineConfig::new(input, seed);
    if let Some(x) = args.slack.or(cfg.slack) {
        pc.slack = x;
    }
    if let Some(x) = args.max_retries.or(cfg.max_retries) {
        pc.max_round_retries = x;
    }
    if let Some(x) = args.max_resamples.or(cfg.max_resamples) {
        pc.max_finish_resamples = x;
    }
    if let Some(x) = args.max_rounds.or(cfg.max_rounds) {
        pc.max_rounds = x;
    }
    if let Some(x) = args.eta.or(cfg.eta) {
        pc.eta = EtaPolicy::Fixed(x);
    }
    pc.regularize_first = args.regularize_first || cfg.regularize_first.unwrap_or(false);
    Ok(pc)
}

/// Runs the pipeline and writes the report; returns the report and exit code.
pub fn cmd_color(args: &ColorArgs, seed: Option<Seed>, cfg: &RunConfig) -> Result<ColorReport, CliError> {
    let seed = need(seed, "seed")?;
    let path = need(args.cover.clone().or_else(|| cfg.cover.clone()), "cover")?;
    let out = need(args.out.clone().or_else(|| cfg.out.clone()), "out")?;
    let text = read(&path)?;
    let cover = DpCover::from_json(&text)?;
    let config = pipeline_config(args, &cover, seed, cfg)?;
    let cover_sha256 = sha256_hex(text.as_bytes());
    let report = match color_graph(&cover, &config) {
        Ok(r) => ColorReport {
            seed,
            cover_sha256,
            config,
            status: "proper",
            exit_code: EXIT_OK,
            error: None,
            result: Some(r),
            failed_rounds: Vec::new(),
        },
        Err(e) => ColorReport {
            seed,
            cover_sha256,
            config,
            status: "failed",
            exit_code: pipeline_exit_code(&e),
            error: Some(e.to_string()),
            result: None,
            failed_rounds: e.rounds().to_vec(),
        },
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write(&out, json.as_bytes())?;
    Ok(report)
}

pub fn parse_anchor(s: &str) -> Result<Anchors, CliError> {
    match s {
        "none" => Ok(Anchors::None),
        "all" => Ok(Anchors::All),
        _ => s.parse().map(Anchors::One).map_err(|_| CliError::Usage(format!("bad --anchor {s:?}"))),
    }
}

/// Pooled comparison of kept-list sizes with `keep·|L(v)|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsSummary {
    pub seed: Seed,
    pub trials: u64,
    pub params: RoundParams,
    pub keep: f64,
    pub uncolor: f64,
    pub kept_mean: f64,
    pub kept_reference: f64,
    /// `Σ_v se_v / n`, which bounds the standard error of the pooled mean
    /// whatever the correlation between vertices
    pub kept_std_error: f64,
    pub kept_within_3se: bool,
    pub vertices_within_3se: usize,
    pub colors_within_bound: usize,
    pub blank_mean: f64,
    pub anchor_identity_failures: u64,
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

fn within(m: &Moments, reference: f64) -> bool {
    (m.mean() - reference).abs() <= 3.0 * m.std_error()
}

/// CSV with one row per vertex, color and anchor plus a summary row.
///
/// Vertex rows compare the mean kept-list size with `keep·|L(v)|` at three
/// standard errors; color rows check the mean residual degree against
/// `keep·uncolor·d + d/ℓ` with the same allowance. Anchor rows carry
/// `|𝒰|` and `|𝒰∖𝒦|`, whose mean difference equals the mean degree.
pub fn stats_csv(c: &DpCover, st: &RoundStats) -> (String, StatsSummary) {
    let p = &st.params;
    let (keep, uncolor) = (p.keep(), p.uncolor());
    let degree_bound = keep * uncolor * p.d as f64 + p.d as f64 / p.ell as f64;
    let mut out = String::from(
        "kind,id,trials,mean,std_error,reference,tail,check,uncolored_mean,uncolored_blocked_mean,identity_failures\n",
    );
    let mut vertices_ok = 0;
    let (mut pooled, mut pooled_ref, mut se_sum) = (0.0, 0.0, 0.0);
    for (v, m) in st.kept.iter().enumerate() {
        let reference = keep * c.list(v).len() as f64;
        let ok = within(m, reference);
        vertices_ok += ok as usize;
        pooled += m.mean();
        pooled_ref += reference;
        se_sum += m.std_error();
        writeln!(
            out,
            "vertex,{v},{},{},{},{},{},{},,,",
            m.n,
            fmt_f(m.mean()),
            fmt_f(m.std_error()),
            reference,
            st.kept_tail[v],
            pass(ok)
        )
        .unwrap();
    }
    let mut colors_ok = 0;
    for (x, m) in st.degree.iter().enumerate() {
        let ok = m.mean() <= degree_bound + 3.0 * m.std_error();
        colors_ok += ok as usize;
        writeln!(
            out,
            "color,{x},{},{},{},{},{},{},,,",
            m.n,
            fmt_f(m.mean()),
            fmt_f(m.std_error()),
            degree_bound,
            st.degree_tail[x],
            pass(ok)
        )
        .unwrap();
    }
    let mut identity_failures = 0;
    for AnchorStats { anchor, uncolored, uncolored_blocked, identity_failures: f } in &st.anchors {
        identity_failures += f;
        let m = &st.degree[*anchor];
        writeln!(
            out,
            "anchor,{anchor},{},{},{},{},{},{},{},{},{f}",
            m.n,
            fmt_f(m.mean()),
            fmt_f(m.std_error()),
            degree_bound,
            st.degree_tail[*anchor],
            pass(*f == 0),
            fmt_f(uncolored.mean()),
            fmt_f(uncolored_blocked.mean()),
        )
        .unwrap();
    }
    let n = c.vertex_count().max(1) as f64;
    let (kept_mean, kept_reference, kept_std_error) = (pooled / n, pooled_ref / n, se_sum / n);
    let kept_within_3se = (kept_mean - kept_reference).abs() <= 3.0 * kept_std_error;
    writeln!(
        out,
        "summary,kept,{},{},{},{},{},{},,,{identity_failures}",
        st.trials,
        fmt_f(kept_mean),
        fmt_f(kept_std_error),
        kept_reference,
        st.kept_tail.iter().sum::<u64>(),
        pass(kept_within_3se)
    )
    .unwrap();
    let summary = StatsSummary {
        seed: st.seed,
        trials: st.trials,
        params: *p,
        keep,
        uncolor,
        kept_mean,
        kept_reference,
        kept_std_error,
        kept_within_3se,
        vertices_within_3se: vertices_ok,
        colors_within_bound: colors_ok,
        blank_mean: st.blank.mean(),
        anchor_identity_failures: identity_failures,
    };
    (out, summary)
}

pub fn cmd_stats(args: &StatsArgs, seed: Option<Seed>, cfg: &RunConfig) -> Result<(String, StatsSummary), CliError> {
    let seed = need(seed, "seed")?;
    let cover = load_cover(&need(args.cover.clone().or_else(|| cfg.cover.clone()), "cover")?)?;
    let t = args.t.or(cfg.t).unwrap_or(2);
    if t == 0 {
        return Err(CliError::Usage("--t must be positive".into()));
    }
    let params = RoundParams::new(
        args.eta.or(cfg.eta).unwrap_or(0.1),
        args.d.or(cfg.d.map(|d| d as usize)).unwrap_or(cover.max_cover_degree()).max(1),
        args.ell.or(cfg.ell).unwrap_or(cover.min_list_size()).max(1),
        1.0 / (25.0 * t as f64),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let anchors = parse_anchor(args.anchor.as_deref().or(cfg.anchor.as_deref()).unwrap_or("none"))?;
    let trials = args.trials.or(cfg.trials).unwrap_or(1000);
    let st = round_stats(&cover, &params, anchors, trials, seed)?;
    let (csv, summary) = stats_csv(&cover, &st);
    if let Some(out) = args.out.as_ref().or(cfg.out.as_ref()) {
        write(out, csv.as_bytes())?;
    }
    if let Some(path) = args.summary.as_ref().or(cfg.summary.as_ref()) {
        let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        json.push('\n');
        write(path, json.as_bytes())?;
    }
    Ok((csv, summary))
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<i32, CliError> {
    let seed = cli.seed.or(cfg.seed);
    match &cli.command {
        Command::Generate(a) => {
            let g = cmd_generate(a, seed, cfg)?;
            println!("sha256:{}  {}", g.sha256, g.path.display());
            Ok(EXIT_OK)
        }
        Command::Schedule(a) => {
            let csv = cmd_schedule(a, cfg)?;
            if a.out.is_none() && cfg.out.is_none() {
                print!("{csv}");
            }
            Ok(EXIT_OK)
        }
        Command::Color(a) => {
            let r = cmd_color(a, seed, cfg)?;
            match &r.error {
                None => println!("proper coloring, {} rounds", r.result.as_ref().map_or(0, |x| x.rounds.len())),
                Some(e) => eprintln!("error: {e}"),
            }
            Ok(r.exit_code)
        }
        Command::Stats(a) => {
            let (csv, s) = cmd_stats(a, seed, cfg)?;
            if a.out.is_none() && cfg.out.is_none() {
                print!("{csv}");
            } else {
                println!("kept mean {} vs {}: {}", s.kept_mean, s.kept_reference, pass(s.kept_within_3se));
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = (|| {
        let cfg = match &cli.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        match cli.jobs.or(cfg.jobs) {
            Some(0) => Err(CliError::Usage("--jobs must be positive".into())),
            Some(j) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                pool.install(|| dispatch(&cli, &cfg))
            }
            None => dispatch(&cli, &cfg),
        }
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
