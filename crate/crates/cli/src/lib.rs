//! Command-line surface: ingestion → decision variable → energies → sub-community → pivots.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | output could not be written, or internal schema failure |
//! | 2 | input validation failure (unreadable file, malformed CSV, bad flag value) |
//! | 3 | degenerate matrix: `--dv-method klt` with a single actor |
//! | 4 | degenerate community: every energy is zero (`pivots` only) |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use copivot::{
    community, decision_variable, dense_subgroups, discover_in, energy_to_probability, isolated, klt,
    overlap_tsv, pair_overlap_table, parse_probabilities, pivot_centered_groups, rank_subcommunities,
    DecisionVariable, DvMethod, EnergyAnalysis, IngestError, KltError, Matrix64, PivotError, PivotReport,
    SubCommunity,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const SCHEMA: &str = include_str!("../schema/detect.schema.json");

#[derive(Debug, Parser)]
#[command(name = "copivot", version, about = "Sub-community and pivot detection over actor x event participation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the thresholded co-energy graph and write it as JSON (and optionally DOT).
    Detect(RunArgs),
    /// Probability / possibility / pivot table as TSV.
    Pivots(RunArgs),
    /// Human-readable summary of energies, links, dense groups, pivots and ranking.
    Report(RunArgs),
    /// Write a random participation matrix (for tests and demos).
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Participation matrix CSV (header `actor,e1,...,eK`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Probability vector CSV (single row or column) instead of a matrix; `pivots` only.
    #[arg(long)]
    pub probabilities: Option<PathBuf>,
    /// Link threshold on co-energy.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Possibility degree a node needs to be a pivot.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Decision variable: `klt` or `column-mean`
    #[arg(long, default_value = "klt")]
    pub dv_method: DvMethod,
    /// Cumulative variance fraction retained by the KLT reconstruction.
    #[arg(long, default_value_t = 0.95)]
    pub beta: f64,
    /// Tolerance on link weights inside a dense subgroup.
    #[arg(long, default_value_t = 1e-9)]
    pub eps_dense: f64,
    /// Absolute slack on the participation >= decision variable comparison.
    #[arg(long, default_value_t = 0.0)]
    pub compare_eps: f64,
    /// Two actors (ids or 1-based ordinals) whose per-event overlap is exported, e.g. `1,3`.
    #[arg(long)]
    pub pair: Option<String>,
    /// Write the detect JSON here instead of stdout
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write the graph as Graphviz DOT
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Write the pivot table, or the `--pair` overlap table, here
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// Eigenvalue / cumulative variance table of the KLT fit.
    #[arg(long)]
    pub klt_tsv: Option<PathBuf>,
}

impl Default for RunArgs {
    fn default() -> Self {
        Self {
            input: None,
            probabilities: None,
            alpha: 0.5,
            delta: 1.0,
            dv_method: DvMethod::Klt,
            beta: klt::DEFAULT_BETA,
            eps_dense: community::DEFAULT_DENSE_EPS,
            compare_eps: 0.0,
            pair: None,
            json: None,
            dot: None,
            tsv: None,
            klt_tsv: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub actors: usize,
    #[arg(long, default_value_t = 10)]
    pub events: usize,
    /// Largest participation count.
    #[arg(long, default_value_t = 5)]
    pub max: u32,
    /// Output path; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}; use --dv-method column-mean for a single actor")]
    Degenerate(KltError),
    #[error(transparent)]
    Klt(KltError),
    #[error(transparent)]
    Pivot(PivotError),
    #[error("output failed schema validation: {0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest(_) | CliError::Usage(_) | CliError::Read { .. } | CliError::Klt(_) => 2,
            CliError::Pivot(PivotError::DegenerateCommunity) => 4,
            CliError::Pivot(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Write { .. } | CliError::Schema(_) => 1,
        }
    }
}

impl From<KltError> for CliError {
    fn from(e: KltError) -> Self {
        match e {
            KltError::DegenerateMatrix(_) => CliError::Degenerate(e),
            other => CliError::Klt(other),
        }
    }
}

impl From<PivotError> for CliError {
    fn from(e: PivotError) -> Self {
        CliError::Pivot(e)
    }
}

/// Runs a parsed command, writing primary output to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Detect(a) => cmd_detect(a, out),
        Command::Pivots(a) => cmd_pivots(a, out, err),
        Command::Report(a) => cmd_report(a, out),
        Command::Fixture(a) => cmd_fixture(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "copivot: {e}");
            e.exit_code()
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

fn validate(a: &RunArgs) -> Result<(), CliError> {
    check_unit("alpha", a.alpha)?;
    check_unit("beta", a.beta)?;
    if !(a.delta > 0.0 && a.delta <= 1.0) {
        return Err(CliError::Usage(format!("--delta must lie in (0, 1], got {}", a.delta)));
    }
    if !(a.eps_dense >= 0.0) || !(a.compare_eps >= 0.0) {
        return Err(CliError::Usage("tolerances must be nonnegative".into()));
    }
    Ok(())
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

/// Everything derived from a participation matrix for one set of flags.
pub struct Analysis {
    pub matrix: Matrix64,
    pub dv: DecisionVariable<f64>,
    pub energies: EnergyAnalysis<f64>,
    pub graph: SubCommunity<f64>,
    pub dense: Vec<Vec<usize>>,
    /// `None` when every energy is zero.
    pub pivots: Option<PivotReport<f64>>,
    pub klt_tsv: Option<String>,
}

pub fn analyze(a: &RunArgs) -> Result<Analysis, CliError> {
    validate(a)?;
    let input = a
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let matrix: Matrix64 = copivot::load_csv(input)?;
    let dv = decision_variable(&matrix, a.dv_method, a.beta)?;
    let klt_tsv = match (a.dv_method, &a.klt_tsv) {
        (DvMethod::Klt, Some(_)) => Some(klt::fit(&matrix)?.to_tsv()),
        _ => None,
    };
    let energies = EnergyAnalysis::compute_eps(&matrix, &dv.dv, a.compare_eps)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let graph = discover_in(&energies, a.alpha, None).map_err(|e| CliError::Usage(e.to_string()))?;
    let dense = dense_subgroups(&graph, a.eps_dense);
    let pivots = match energy_to_probability(&energies.energies()) {
        Ok(p) => Some(PivotReport::build(
            matrix.actor_ids(),
            Some(&matrix.row_sums()),
            &p,
            a.delta,
        )?),
        Err(PivotError::DegenerateCommunity) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Analysis {
        matrix,
        dv,
        energies,
        graph,
        dense,
        pivots,
        klt_tsv,
    })
}

#[derive(Debug, Serialize)]
pub struct DetectParams {
    pub alpha: f64,
    pub delta: f64,
    pub dv_method: &'static str,
    pub beta: f64,
    pub retained: usize,
    pub eps_dense: f64,
    pub compare_eps: f64,
    pub actors: usize,
    pub events: usize,
}

#[derive(Debug, Serialize)]
pub struct JsonNode {
    pub id: String,
    pub energy: f64,
    pub p: Option<f64>,
    pub pi: Option<f64>,
    pub pivot: bool,
}

#[derive(Debug, Serialize)]
pub struct JsonLink {
    pub source: String,
    pub target: String,
    pub weight: f64,
    pub bounds: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct DetectOutput {
    pub params: DetectParams,
    pub nodes: Vec<JsonNode>,
    pub links: Vec<JsonLink>,
    pub dense_subgroups: Vec<Vec<String>>,
    pub isolated: Vec<String>,
}

impl DetectOutput {
    pub fn from_analysis(an: &Analysis, a: &RunArgs) -> Self {
        let ids = an.matrix.actor_ids();
        let nodes = an
            .energies
            .profiles
            .iter()
            .enumerate()
            .map(|(i, prof)| {
                let row = an.pivots.as_ref().map(|r| &r.rows[i]);
                JsonNode {
                    id: ids[i].clone(),
                    energy: prof.energy,
                    p: row.map(|r| r.p),
                    pi: row.map(|r| r.pi),
                    pivot: row.is_some_and(|r| r.is_pivot),
                }
            })
            .collect();
        let links = an
            .graph
            .links
            .iter()
            .map(|l| JsonLink {
                source: ids[l.i].clone(),
                target: ids[l.j].clone(),
                weight: l.weight,
                bounds: [l.lo, l.hi],
            })
            .collect();
        Self {
            params: DetectParams {
                alpha: a.alpha,
                delta: a.delta,
                dv_method: an.dv.method.as_str(),
                beta: a.beta,
                retained: an.dv.retained,
                eps_dense: a.eps_dense,
                compare_eps: a.compare_eps,
                actors: an.matrix.n_actors(),
                events: an.matrix.n_events(),
            },
            nodes,
            links,
            dense_subgroups: an
                .dense
                .iter()
                .map(|g| g.iter().map(|&i| ids[i].clone()).collect())
                .collect(),
            isolated: isolated(&an.graph, an.matrix.n_actors())
                .into_iter()
                .map(|i| ids[i].clone())
                .collect(),
        }
    }
}

/// Checks a JSON document against the shipped schema.
pub fn validate_json(value: &serde_json::Value) -> Result<(), CliError> {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).map_err(|e| CliError::Schema(e.to_string()))?;
    let validator = jsonschema::validator_for(&schema).map_err(|e| CliError::Schema(e.to_string()))?;
    if let Some(e) = validator.iter_errors(value).next() {
        return Err(CliError::Schema(format!("{} at {}", e, e.instance_path())));
    }
    Ok(())
}

pub fn detect_json(a: &RunArgs) -> Result<(Analysis, String), CliError> {
    let an = analyze(a)?;
    let doc = DetectOutput::from_analysis(&an, a);
    let value = serde_json::to_value(&doc).map_err(|e| CliError::Schema(e.to_string()))?;
    validate_json(&value)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Schema(e.to_string()))?;
    text.push('\n');
    Ok((an, text))
}

pub fn cmd_detect(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (an, json) = detect_json(a)?;
    if let Some(path) = &a.dot {
        let dot = an.graph.to_dot(an.matrix.actor_ids(), &an.energies.energies());
        emit(Some(path), &dot, out)?;
    }
    if let (Some(path), Some(tsv)) = (&a.klt_tsv, &an.klt_tsv) {
        emit(Some(path), tsv, out)?;
    }
    if let Some(pair) = &a.pair {
        // stdout carries the JSON document, so the overlap table needs its own file
        let path = a.tsv.as_deref().ok_or_else(|| CliError::Usage("detect --pair requires --tsv".into()))?;
        emit(Some(path), &pair_table(&an, pair)?, out)?;
    }
    emit(a.json.as_deref(), &json, out)
}

pub fn pivot_table(a: &RunArgs, err: &mut dyn Write) -> Result<PivotReport<f64>, CliError> {
    match (&a.input, &a.probabilities) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --input or --probabilities, not both".into())),
        (None, None) => Err(CliError::Usage("--input or --probabilities is required".into())),
        (None, Some(path)) => {
            validate(a)?;
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            let parsed = parse_probabilities::<f64>(&text)?;
            if let Some(sum) = parsed.renormalized_from {
                let _ = writeln!(err, "copivot: warning: probabilities sum to {sum}; renormalized");
            }
            let ids: Vec<String> = (1..=parsed.distribution.len()).map(|i| format!("a{i}")).collect();
            Ok(PivotReport::build(&ids, None, &parsed.distribution, a.delta)?)
        }
        (Some(_), None) => {
            let an = analyze(a)?;
            an.pivots.ok_or(CliError::Pivot(PivotError::DegenerateCommunity))
        }
    }
}

pub fn cmd_pivots(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let report = pivot_table(a, err)?;
    emit(a.tsv.as_deref(), &report.to_tsv(), out)
}

fn resolve_actor(m: &Matrix64, token: &str) -> Result<usize, CliError> {
    let token = token.trim();
    if let Some(i) = m.actor_ids().iter().position(|id| id == token) {
        return Ok(i);
    }
    match token.parse::<usize>() {
        Ok(n) if n >= 1 && n <= m.n_actors() => Ok(n - 1),
        _ => Err(CliError::Usage(format!("--pair: unknown actor `{token}`"))),
    }
}

fn pair_table(an: &Analysis, pair: &str) -> Result<String, CliError> {
    let parts: Vec<&str> = pair.split(',').collect();
    let [i, j] = parts.as_slice() else {
        return Err(CliError::Usage(format!("--pair expects two actors like `1,3`, got `{pair}`")));
    };
    let (i, j) = (resolve_actor(&an.matrix, i)?, resolve_actor(&an.matrix, j)?);
    let records = pair_overlap_table(&an.matrix, &an.dv.dv, i, j).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(overlap_tsv(&records))
}

fn fmt_ids(ids: &[String], nodes: impl IntoIterator<Item = usize>) -> String {
    let names: Vec<&str> = nodes.into_iter().map(|i| ids[i].as_str()).collect();
    format!("{{{}}}", names.join(", "))
}

pub fn report_text(an: &Analysis, a: &RunArgs) -> String {
    let ids = an.matrix.actor_ids();
    let k = an.matrix.n_events();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "actors {}  events {}  dv {} (retained {}, beta {})",
        an.matrix.n_actors(),
        k,
        an.dv.method.as_str(),
        an.dv.retained,
        a.beta
    );
    let nbe: Vec<String> = an.matrix.row_sums().iter().map(f64::to_string).collect();
    let _ = writeln!(s, "NBE: {}", nbe.join(" "));

    s.push_str("\nenergies:\n");
    for (id, prof) in ids.iter().zip(&an.energies.profiles) {
        let _ = writeln!(s, "  {id:<12} {:.4}  ({}/{k})", prof.energy, prof.ed_set.len());
    }

    let _ = writeln!(s, "\nlinks (alpha {}):", a.alpha);
    if an.graph.links.is_empty() {
        s.push_str("  no links\n");
    }
    for l in &an.graph.links {
        let _ = writeln!(
            s,
            "  {} -- {}  weight {:.4}  bounds [{:.4}, {:.4}]",
            ids[l.i], ids[l.j], l.weight, l.lo, l.hi
        );
    }
    let iso = isolated(&an.graph, an.matrix.n_actors());
    let _ = writeln!(s, "isolated: {}", fmt_ids(ids, iso));

    let _ = writeln!(s, "\ndense subgroups (eps {:e}):", a.eps_dense);
    if an.dense.is_empty() {
        s.push_str("  none\n");
    }
    for g in &an.dense {
        let _ = writeln!(s, "  {}", fmt_ids(ids, g.iter().copied()));
    }

    let Some(report) = &an.pivots else {
        s.push_str("\npivots: none (every energy is zero)\n");
        return s;
    };
    let pivots = report.pivots();
    let _ = writeln!(s, "\npivots (delta {}): {}", a.delta, fmt_ids(ids, pivots.iter().copied()));

    let comps = an.graph.components();
    if !comps.is_empty() {
        let counts: Vec<usize> = comps
            .iter()
            .map(|c| c.nodes.iter().filter(|n| pivots.contains(n)).count())
            .collect();
        s.push_str("\nsub-communities by pivot count:\n");
        if let Ok(order) = rank_subcommunities(&comps, &counts) {
            for (rank, &c) in order.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  {}. {}  pivots {}",
                    rank + 1,
                    fmt_ids(ids, comps[c].nodes.iter().copied()),
                    counts[c]
                );
            }
        }
        let inside: BTreeSet<usize> = pivots.intersection(&an.graph.nodes).copied().collect();
        if !inside.is_empty() {
            let pg = pivot_centered_groups(&an.graph, &inside);
            if pg.pivots_linked {
                s.push_str("pivot-centred groups: pivots are linked to each other\n");
            } else {
                s.push_str("pivot-centred groups:\n");
                for (p, g) in &pg.groups {
                    let _ = writeln!(s, "  {}: {}", ids[*p], fmt_ids(ids, g.iter().copied()));
                }
            }
        }
    }
    s
}

pub fn cmd_report(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let an = analyze(a)?;
    let mut text = report_text(&an, a);
    if let Some(pair) = &a.pair {
        let tsv = pair_table(&an, pair)?;
        match &a.tsv {
            Some(path) => emit(Some(path), &tsv, out)?,
            None => {
                text.push_str("\npair overlap:\n");
                text.push_str(&tsv);
            }
        }
    }
    emit(None, &text, out)
}

/// Random integer participation matrix `a1..aR × e1..eK` with cells in `0..=max`.
pub fn fixture_csv(f: &FixtureArgs) -> Result<String, CliError> {
    if f.actors == 0 || f.events == 0 {
        return Err(CliError::Usage("--actors and --events must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    let rows = (0..f.actors)
        .map(|_| (0..f.events).map(|_| f64::from(rng.gen_range(0..=f.max))).collect())
        .collect();
    Ok(Matrix64::from_rows(rows)?.to_csv())
}

pub fn cmd_fixture(f: &FixtureArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = fixture_csv(f)?;
    emit(f.output.as_deref(), &text, out)
}
