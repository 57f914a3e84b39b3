//! `resassign`: simulate datasets, assign them, score the result.

mod config;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::Settings;
use resassign::data::{default_priors, reference_40, reference_60};
use resassign::domain::io::{read_peak_list, read_spin_systems, write_peak_list, write_spin_systems};
use resassign::domain::ExperimentSet;
use resassign::evaluate::{score, Assignment};
use resassign::grouping::GroupingConfig;
use resassign::lp::{Backend, Method};
use resassign::pipeline::{self, AssignConfig, Input, PipelineError};
use resassign::simulate::{matching_priors, simulate_cisa, simulate_flya, CisaNoise, GroundTruth, Protocol, Reference, SimulationSpec};
use resassign::{PriorTable, Tolerances};

#[derive(Parser)]
#[command(name = "resassign", version, about = "Backbone resonance assignment by LP-relaxed constrained shortest path")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a spin-system or peak-list dataset with its ground truth.
    Simulate(Settings),
    /// Assign a dataset to the sequence.
    Assign(AssignArgs),
    /// Score an assignment against ground truth.
    Evaluate(EvaluateArgs),
    /// Build the assignment graph and report its size.
    GraphStats(AssignArgs),
}

#[derive(Args)]
struct AssignArgs {
    /// Spin-system file.
    #[arg(long, conflicts_with = "peaks", required_unless_present = "peaks")]
    spins: Option<PathBuf>,
    /// Peak list.
    #[arg(long)]
    peaks: Option<PathBuf>,
    /// File holding the one-letter sequence.
    #[arg(long)]
    sequence: PathBuf,
    /// Prior table JSON (default: bundled).
    #[arg(long)]
    priors: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct EvaluateArgs {
    /// assignment.json written by `assign`.
    #[arg(long)]
    assignment: PathBuf,
    /// ground_truth.json written by `simulate`.
    #[arg(long)]
    truth: PathBuf,
    /// Directory for score.json and score.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if matches!(e, PipelineError::Solver(_)) { 4 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(s) => cmd_simulate(s),
        Command::Assign(a) => cmd_assign(a),
        Command::Evaluate(e) => cmd_evaluate(e),
        Command::GraphStats(a) => cmd_graph_stats(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::input)?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

fn out_dir(s: &Settings) -> Result<PathBuf> {
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn set_threads(s: &Settings) -> Result<()> {
    if let Some(n) = s.threads {
        if n == 0 {
            return Err(Failure::input("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn cmd_simulate(s: Settings) -> Result<u8> {
    let s = s.resolve().map_err(Failure::input)?;
    set_threads(&s)?;
    let protocol: Protocol = s.protocol.as_deref().unwrap_or("cisa").parse().map_err(Failure::input)?;
    let cisa = match s.noise.as_deref().unwrap_or("low") {
        "low" => CisaNoise::LOW,
        "high" if protocol == Protocol::Cisa => CisaNoise::HIGH,
        "high" => return Err(Failure::input("--noise high applies to the cisa protocol only")),
        other => return Err(Failure::input(format!("unknown noise level {other:?} (expected low or high)"))),
    };
    let spec = SimulationSpec { seed: s.seed.unwrap_or(0), cisa, deletion_rate: s.deletion_rate.unwrap_or(0.0), ..Default::default() };
    let reference: Reference = match &s.reference {
        Some(p) => read_json(p)?,
        None if protocol == Protocol::Cisa => reference_60(),
        None => reference_40(),
    };
    let base = default_priors();
    reference.check(&base).map_err(Failure::input)?;
    let exps = match &s.experiments {
        Some(list) => ExperimentSet::parse_list(list).map_err(Failure::input)?,
        None if protocol == Protocol::Cisa => ExperimentSet::standard(),
        None => ExperimentSet::extended(),
    };
    let dir = out_dir(&s)?;

    let mut data = Vec::new();
    let (records, truth) = match protocol {
        Protocol::Cisa => {
            let (spins, truth) = simulate_cisa(&spec, &reference).map_err(Failure::input)?;
            write_spin_systems(&mut data, &spins).map_err(Failure::input)?;
            write_file(&dir, "spins.tsv", &data)?;
            (spins.len(), truth)
        }
        Protocol::Flya => {
            let (peaks, truth) = simulate_flya(&spec, &reference, &exps).map_err(Failure::input)?;
            write_peak_list(&mut data, &peaks).map_err(Failure::input)?;
            write_file(&dir, "peaks.tsv", &data)?;
            (peaks.len(), truth)
        }
    };
    write_file(&dir, "sequence.txt", format!("{}\n", reference.sequence).as_bytes())?;
    write_json(&dir, "ground_truth.json", &truth)?;
    write_json(&dir, "priors.json", &matching_priors(&base, &spec, protocol, &exps))?;
    write_json(&dir, "simulation.json", &spec)?;
    let kind = if protocol == Protocol::Cisa { "spin systems" } else { "peaks" };
    println!("{} residues, {records} {kind}, {} assignable", reference.sequence.len(), truth.assignable());
    Ok(0)
}

struct Prepared {
    input: Input,
    sequence: String,
    priors: PriorTable,
    cfg: AssignConfig,
    settings: Settings,
}

fn prepare(a: AssignArgs) -> Result<Prepared> {
    let s = a.settings.resolve().map_err(Failure::input)?;
    set_threads(&s)?;
    let d = Tolerances::default();
    let tolerances = Tolerances {
        delta1: s.delta1.unwrap_or(d.delta1),
        delta2: s.delta2.unwrap_or(d.delta2),
        delta3: s.delta3.unwrap_or(d.delta3),
        delta: s.delta.unwrap_or(d.delta),
        lambda: s.lambda.unwrap_or(d.lambda),
        round_eps: d.round_eps,
    };
    tolerances.check().map_err(Failure::input)?;
    let method: Method = s.variant.as_deref().unwrap_or("lian1").parse().map_err(Failure::input)?;
    let backend: Backend = s.backend.as_deref().unwrap_or("bundled").parse().map_err(Failure::input)?;
    let mut grouping = GroupingConfig::default();
    match s.top_k.as_deref() {
        None => {}
        Some("all") => grouping.top_k = None,
        Some(k) => {
            let k: usize = k.parse().map_err(|_| Failure::input(format!("bad --top-k {k:?}")))?;
            if k == 0 {
                return Err(Failure::input("--top-k must be at least 1"));
            }
            grouping.top_k = Some(k);
        }
    }
    let experiments = match &s.experiments {
        Some(list) => Some(ExperimentSet::parse_list(list).map_err(Failure::input)?),
        None => None,
    };

    let open = |p: &Path| fs::File::open(p).map(BufReader::new).map_err(|e| Failure::input(format!("{}: {e}", p.display())));
    let input = match (&a.spins, &a.peaks) {
        (Some(p), _) => Input::Spins(read_spin_systems(open(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?),
        (None, Some(p)) => Input::Peaks(read_peak_list(open(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?),
        (None, None) => return Err(Failure::input("one of --spins or --peaks is required")),
    };
    let sequence = read_text(&a.sequence)?.trim().to_string();
    let priors = match &a.priors {
        Some(p) => read_json(p)?,
        None => default_priors(),
    };
    let cfg = AssignConfig { tolerances, method, backend, grouping, experiments };
    Ok(Prepared { input, sequence, priors, cfg, settings: s })
}

#[derive(Serialize)]
struct AssignReport<'a> {
    validation: &'a resassign::domain::ValidationReport,
    groupings: usize,
    graph: &'a resassign::graph::GraphStats,
    solve: &'a resassign::lp::Solved,
}

fn cmd_assign(a: AssignArgs) -> Result<u8> {
    let p = prepare(a)?;
    let dir = out_dir(&p.settings)?;
    let out = pipeline::assign(&p.input, &p.sequence, &p.priors, &p.cfg)?;
    write_json(&dir, "assignment.json", &out.assignment)?;
    let report = AssignReport { validation: &out.validation, groupings: out.groupings, graph: &out.stats, solve: &out.solved };
    write_json(&dir, "report.json", &report)?;
    write_json(&dir, "timings.json", &out.timings)?;
    let assigned = out.assignment.residues.iter().filter(|r| r.grouping.is_some()).count();
    println!(
        "{assigned}/{} residues assigned, objective {:.6}, {} reused peaks",
        out.assignment.residues.len(),
        out.solved.objective,
        out.solved.reused.len()
    );
    if out.solved.report.optimal {
        Ok(0)
    } else {
        eprintln!("warning: node limit reached, assignment is the best incumbent");
        Ok(3)
    }
}

fn cmd_graph_stats(a: AssignArgs) -> Result<u8> {
    let p = prepare(a)?;
    let dir = out_dir(&p.settings)?;
    p.cfg.tolerances.check().map_err(Failure::input)?;
    let (groups, evidence) = pipeline::groupings(&p.input, &p.priors, &p.cfg)?;
    let seq = resassign::ProteinSequence::parse(&p.sequence).map_err(Failure::input)?;
    let g = resassign::graph::build_graph(groups, &seq, &p.priors, &p.cfg.tolerances, &evidence)
        .map_err(|e| Failure::from(PipelineError::from(e)))?;
    let stats = resassign::graph::graph_stats(&g);
    write_json(&dir, "graph_stats.json", &stats)?;
    println!("{:>5} {:>6} {:>7} {:>8}", "layer", "nodes", "edges", "density");
    for (k, &size) in stats.layer_sizes.iter().enumerate() {
        match stats.edge_counts.get(k) {
            Some(&e) => println!("{k:>5} {size:>6} {e:>7} {:>8.4}", stats.densities[k]),
            None => println!("{k:>5} {size:>6}"),
        }
    }
    println!("total edges {}, regular nodes {}", stats.total_edges, stats.regular_nodes);
    Ok(0)
}

fn cmd_evaluate(e: EvaluateArgs) -> Result<u8> {
    let assignment: Assignment = read_json(&e.assignment)?;
    let truth: GroundTruth = read_json(&e.truth)?;
    if assignment.sequence != truth.sequence {
        return Err(Failure::input("assignment and ground truth are for different sequences"));
    }
    let report = score(&assignment, &truth).map_err(Failure::input)?;
    if let Some(dir) = &e.out {
        fs::create_dir_all(dir).map_err(|err| Failure::input(format!("{}: {err}", dir.display())))?;
        write_json(dir, "score.json", &report)?;
        write_file(dir, "score.txt", report.to_text().as_bytes())?;
    }
    println!("{:.3} {:.3}", report.precision, report.recall);
    Ok(0)
}
