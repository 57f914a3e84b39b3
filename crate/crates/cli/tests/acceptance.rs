//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Oracles are written here, apart from
//! the library, so that the two can disagree.

#[path = "../../core/tests/support/quadrature.rs"]
#[allow(dead_code)]
mod quadrature;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resassign::costmodel::atom_cost_points;
use resassign::data::{default_priors, reference_40, reference_60};
use resassign::domain::{Experiment, ExperimentSet, Gaussian, Peak, Phase, Role, SlotKind, Tolerances};
use resassign::evaluate::score;
use resassign::graph::{conflict_fixture, AssignmentGraph, GraphBuilder};
use resassign::grouping::{build_compatibility_graph, enumerate_groupings, GroupingConfig};
use resassign::lp::{self, formulate, round_and_resolve, solve_relaxation, Backend, Method, Variant, DEFAULT_NODE_LIMIT};
use resassign::pipeline::{assign, AssignConfig, Input};
use resassign::shortest_path::dp_shortest_path;
use resassign::simulate::{matching_priors, simulate_cisa, simulate_flya, CisaNoise, Protocol, SimulationSpec};

// Tolerances and budgets.
const COST_ABS_TOL: f64 = 1e-8;
const COST_DRAWS: usize = 1000;
const COST_BUDGET: Duration = Duration::from_secs(10);

const FLOW_GRAPHS: usize = 100;
const FLOW_OBJ_TOL: f64 = 1e-6;
const FLOW_INT_TOL: f64 = 1e-6;
const FLOW_BUDGET: Duration = Duration::from_secs(30);

const ROUNDING_INSTANCES: usize = 30;
const ROUNDING_BUDGET: Duration = Duration::from_secs(60);

const CISA_SEEDS: u64 = 20;
const CISA_LOW_MIN: f64 = 0.90;
const CISA_HIGH_MIN: f64 = 0.80;
const CISA_DELTA3_LOW: f64 = 0.7;
const CISA_DELTA3_HIGH: f64 = 1.4;
const CISA_BUDGET: Duration = Duration::from_secs(600);

const FLYA_SEEDS: u64 = 5;
const FLYA_ATOM_MIN: f64 = 0.85;
const FLYA_BUDGET: Duration = Duration::from_secs(900);

const GROUPING_INSTANCES: usize = 20;
const GROUPING_MAX_PEAKS: usize = 12;
const GROUPING_BUDGET: Duration = Duration::from_secs(30);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("cost model matches quadrature", cost_model, COST_BUDGET),
        ("flow polytope is integral", flow_integrality, FLOW_BUDGET),
        ("exact rounding equals exhaustive search", exact_rounding, ROUNDING_BUDGET),
        ("soft utilization penalty semantics", penalty_semantics, Duration::from_secs(10)),
        ("spin-system benchmark accuracy", cisa_benchmark, CISA_BUDGET),
        ("peak-list benchmark atom correctness", flya_benchmark, FLYA_BUDGET),
        ("grouping completeness", grouping_completeness, GROUPING_BUDGET),
        ("determinism of the command-line pipeline", determinism, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > *budget => Err(format!("{detail}; took {took:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({took:.2?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({took:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- oracles

/// Every Start-to-End path, with its cost and the number of extra peak uses.
fn all_paths(g: &AssignmentGraph) -> Vec<(Vec<usize>, f64, usize)> {
    fn rec(g: &AssignmentGraph, path: &mut Vec<usize>, cost: f64, out: &mut Vec<(Vec<usize>, f64, usize)>) {
        let k = path.len() - 1;
        if k + 1 == g.layers.len() {
            let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
            for (layer, &i) in path.iter().enumerate() {
                for p in g.usage(layer, i) {
                    *uses.entry(p.as_str()).or_default() += 1;
                }
            }
            let extra = uses.values().map(|&u| u - 1).sum();
            out.push((path.clone(), cost, extra));
            return;
        }
        let here = path[k];
        for e in g.edges[k].iter().filter(|e| e.from == here) {
            path.push(e.to);
            rec(g, path, cost + e.cost, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, &mut vec![0], 0.0, &mut out);
    out
}

fn best_penalized(g: &AssignmentGraph, lambda: Option<f64>) -> Option<(f64, usize)> {
    all_paths(g)
        .into_iter()
        .filter_map(|(_, c, extra)| match lambda {
            None if extra > 0 => None,
            None => Some((c, extra)),
            Some(l) => Some((c + l * extra as f64, extra)),
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

fn plain_dp(g: &AssignmentGraph) -> f64 {
    let mut best: Vec<f64> = vec![0.0];
    for (k, es) in g.edges.iter().enumerate() {
        let mut next = vec![f64::INFINITY; g.layers[k + 1].len()];
        for e in es {
            next[e.to] = next[e.to].min(best[e.from] + e.cost);
        }
        best = next;
    }
    best[0]
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, width: usize, pool: Option<usize>, integer: bool) -> AssignmentGraph {
    let mut b = GraphBuilder::new(n);
    let cost = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let c = rng.random_range(lo..hi);
        if integer {
            c.round()
        } else {
            c
        }
    };
    let mut nodes = vec![Vec::new(); n + 2];
    for (k, layer) in nodes.iter_mut().enumerate().take(n + 1).skip(1) {
        let g = rng.random_range(0..=width);
        for _ in 0..g {
            let members: Vec<String> = match pool {
                Some(m) => {
                    let count = rng.random_range(1..=3);
                    (0..count).map(|_| format!("p{}", rng.random_range(0..m))).collect::<BTreeSet<_>>().into_iter().collect()
                }
                None => Vec::new(),
            };
            let refs: Vec<&str> = members.iter().map(String::as_str).collect();
            layer.push(b.node(k, &refs));
        }
        let t = cost(rng, 5.0, 15.0);
        b.threshold(k, t);
    }
    for k in 1..n {
        for &u in &nodes[k] {
            for &v in &nodes[k + 1] {
                if rng.random_bool(0.6) {
                    let c = cost(rng, -5.0, 10.0);
                    b.edge(k, u, v, c);
                }
            }
        }
    }
    // costs out of Start and into End vary too
    for &v in &nodes[1] {
        let c = cost(rng, 0.0, 5.0);
        b.edge(0, 0, v, c);
    }
    for &u in &nodes[n] {
        let c = cost(rng, 0.0, 5.0);
        b.edge(n, u, 0, c);
    }
    b.finish()
}

// ---------------------------------------------------------------- criteria

fn cost_model() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..COST_DRAWS {
        let mu = rng.random_range(-10.0..10.0);
        let sa = rng.random_range(0.01..5.0);
        let count = rng.random_range(1..=6);
        let obs: Vec<(f64, f64)> = (0..count).map(|_| (mu + rng.random_range(-3.0..3.0) * sa, rng.random_range(0.01..5.0))).collect();
        let closed = atom_cost_points(Gaussian { mu, sigma: sa }, obs.iter().copied()).map_err(|e| e.to_string())?.cost;
        let numeric = quadrature::numeric_cost(mu, sa, &obs);
        worst = worst.max((closed - numeric).abs());
    }
    check(worst <= COST_ABS_TOL, format!("{COST_DRAWS} draws, max |closed - quadrature| = {worst:.2e}"))
}

fn flow_integrality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let backend = Backend::default();
    let (mut worst_gap, mut fractional) = (0.0f64, 0usize);
    for _ in 0..FLOW_GRAPHS {
        let n = rng.random_range(1..=20);
        let g = random_graph(&mut rng, n, 10, None, false);
        let f = formulate(&g, Variant::Flow);
        let sol = backend.solve(&f.lp).map_err(|e| e.to_string())?;
        if sol.values[..f.edge_vars()].iter().any(|&x| x > FLOW_INT_TOL && x < 1.0 - FLOW_INT_TOL) {
            fractional += 1;
        }
        let dp = dp_shortest_path(&g).total_cost;
        worst_gap = worst_gap.max((sol.objective - dp).abs()).max((plain_dp(&g) - dp).abs());
    }
    check(
        fractional == 0 && worst_gap <= FLOW_OBJ_TOL,
        format!("{FLOW_GRAPHS} graphs, {fractional} fractional, max |LP - DP| = {worst_gap:.2e}"),
    )
}

fn exact_rounding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let backend = Backend::default();
    let tol = Tolerances::default();
    let (mut mismatches, mut conflicted) = (0, 0);
    for _ in 0..ROUNDING_INSTANCES {
        let n = rng.random_range(2..=6);
        let m2 = rng.random_range(3..=15);
        let g = random_graph(&mut rng, n, 4, Some(m2), true);
        let (oracle, _) = best_penalized(&g, None).ok_or("no feasible path")?;
        conflicted += (dp_shortest_path(&g).total_cost < oracle) as usize;
        let p = solve_relaxation(&g, Variant::Hard, &backend, None).map_err(|e| e.to_string())?;
        let (r, _) =
            round_and_resolve(&g, &p.formulation, &p.solution, p.reduced.as_deref(), None, tol.round_eps, &backend, DEFAULT_NODE_LIMIT)
                .map_err(|e| e.to_string())?;
        let full = lp::solve(&g, Method::Lian1, &tol, &backend).map_err(|e| e.to_string())?;
        if r.objective != oracle || full.objective != oracle {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0 && conflicted > 0,
        format!("{ROUNDING_INSTANCES} instances ({conflicted} where the shortest path reuses a peak), {mismatches} mismatches"),
    )
}

fn penalty_semantics() -> Outcome {
    let g = conflict_fixture();
    let backend = Backend::default();
    let mut parts = Vec::new();
    for (lambda, want_obj, want_reuse) in [(5.0, 5.0, 1usize), (100.0, 10.0, 0)] {
        let tol = Tolerances { lambda, ..Default::default() };
        let s = lp::solve(&g, Method::Lian2, &tol, &backend).map_err(|e| e.to_string())?;
        let reuse: usize = s.reused.iter().map(|r| r.uses - 1).sum();
        let oracle = best_penalized(&g, Some(lambda)).expect("paths exist");
        if s.objective != want_obj || reuse != want_reuse || oracle != (want_obj, want_reuse) {
            return Err(format!("lambda {lambda}: objective {} with {reuse} reuse, oracle {oracle:?}", s.objective));
        }
        parts.push(format!("lambda {lambda}: objective {} reuse {reuse}", s.objective));
    }
    Ok(parts.join(", "))
}

fn cisa_run(noise: CisaNoise, delta3: f64) -> Result<(f64, f64), String> {
    let r = reference_60();
    let (mut p, mut q) = (0.0, 0.0);
    for seed in 1..=CISA_SEEDS {
        let spec = SimulationSpec { seed, cisa: noise, ..Default::default() };
        let (spins, truth) = simulate_cisa(&spec, &r).map_err(|e| e.to_string())?;
        let priors = matching_priors(&default_priors(), &spec, Protocol::Cisa, &ExperimentSet::standard());
        let cfg = AssignConfig { tolerances: Tolerances { delta3, ..Default::default() }, ..Default::default() };
        let out = assign(&Input::Spins(spins), &r.sequence.to_string(), &priors, &cfg).map_err(|e| e.to_string())?;
        let s = score(&out.assignment, &truth).map_err(|e| e.to_string())?;
        p += s.precision;
        q += s.recall;
    }
    Ok((p / CISA_SEEDS as f64, q / CISA_SEEDS as f64))
}

fn cisa_benchmark() -> Outcome {
    let (lp, lr) = cisa_run(CisaNoise::LOW, CISA_DELTA3_LOW)?;
    let (hp, hr) = cisa_run(CisaNoise::HIGH, CISA_DELTA3_HIGH)?;
    check(
        lp.min(lr) >= CISA_LOW_MIN && hp.min(hr) >= CISA_HIGH_MIN,
        format!("low noise precision {lp:.3} recall {lr:.3}; high noise precision {hp:.3} recall {hr:.3}"),
    )
}

fn flya_benchmark() -> Outcome {
    let r = reference_40();
    let exps = ExperimentSet::extended();
    let mut scores = Vec::new();
    for seed in 1..=FLYA_SEEDS {
        let spec = SimulationSpec { seed, ..Default::default() };
        let (peaks, truth) = simulate_flya(&spec, &r, &exps).map_err(|e| e.to_string())?;
        let priors = matching_priors(&default_priors(), &spec, Protocol::Flya, &exps);
        let cfg = AssignConfig {
            tolerances: Tolerances { delta1: 0.05, delta2: 0.5, delta3: 0.5, ..Default::default() },
            experiments: Some(exps.clone()),
            ..Default::default()
        };
        let out = assign(&Input::Peaks(peaks), &r.sequence.to_string(), &priors, &cfg).map_err(|e| e.to_string())?;
        scores.push(score(&out.assignment, &truth).map_err(|e| e.to_string())?.atom_correctness);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let min = scores.iter().copied().fold(1.0, f64::min);
    check(mean >= FLYA_ATOM_MIN, format!("{FLYA_SEEDS} runs, mean atom correctness {mean:.3}, min {min:.3}"))
}

/// Random peaks around a few amide positions, in random slots.
fn random_peaks(rng: &mut ChaCha8Rng, count: usize) -> Vec<Peak> {
    let centers: Vec<(f64, f64)> =
        (0..rng.random_range(1..=3)).map(|_| (8.0 + rng.random_range(0.0..0.06), 120.0 + rng.random_range(0.0..0.6))).collect();
    (0..count)
        .map(|i| {
            let exp = Experiment::ALL[rng.random_range(0..Experiment::ALL.len())];
            let slot = exp.slots()[rng.random_range(0..exp.slots().len())];
            let (h, n) = centers[rng.random_range(0..centers.len())];
            let phase = if rng.random_bool(0.3) { Phase::Unknown } else { slot.phase };
            let c = match slot.kind {
                SlotKind::Amide => None,
                SlotKind::Carbon(_) => Some(50.0 + rng.random_range(0.0..0.8)),
            };
            Peak {
                peak_id: format!("k{i:02}"),
                spectrum_id: exp.id().to_string(),
                h: h + rng.random_range(-0.02..0.02),
                n: n + rng.random_range(-0.2..0.2),
                c,
                phase,
            }
        })
        .collect()
}

type Labelling = Vec<(String, Option<Role>)>;

/// Every labelled peak subset that is consistent, keeping those whose peak
/// set no consistent set strictly contains.
fn brute_force_groupings(peaks: &[Peak], tol: &Tolerances) -> BTreeSet<Labelling> {
    let exps: Vec<Experiment> = peaks.iter().map(|p| p.spectrum_id.parse().unwrap()).collect();
    let roles: Vec<Vec<Option<Role>>> = peaks
        .iter()
        .zip(&exps)
        .map(|(p, e)| {
            e.slots()
                .iter()
                .filter(|s| s.phase == Phase::Unknown || p.phase == Phase::Unknown || s.phase == p.phase)
                .filter_map(|s| match (s.kind, p.c) {
                    (SlotKind::Amide, None) => Some(None),
                    (SlotKind::Carbon(r), Some(_)) => Some(Some(r)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let ok_pair = |a: usize, ra: Option<Role>, b: usize, rb: Option<Role>| {
        let (pa, pb) = (&peaks[a], &peaks[b]);
        if (pa.h - pb.h).abs() > tol.delta1 || (pa.n - pb.n).abs() > tol.delta2 {
            return false;
        }
        if ra == rb && exps[a] == exps[b] {
            return false;
        }
        !(ra.is_some() && ra == rb && (pa.c.unwrap() - pb.c.unwrap()).abs() > tol.delta3)
    };
    let mut valid: Vec<(u32, Vec<Option<Role>>)> = Vec::new();
    for mask in 1u32..(1 << peaks.len()) {
        let members: Vec<usize> = (0..peaks.len()).filter(|&i| mask >> i & 1 == 1).collect();
        // all role choices for these members
        let mut partial: Vec<Vec<Option<Role>>> = vec![Vec::new()];
        for (depth, &m) in members.iter().enumerate() {
            let mut next = Vec::new();
            for pre in &partial {
                for &r in &roles[m] {
                    if members[..depth].iter().zip(pre).all(|(&o, &ro)| ok_pair(o, ro, m, r)) {
                        let mut v = pre.clone();
                        v.push(r);
                        next.push(v);
                    }
                }
            }
            partial = next;
        }
        for labels in partial {
            valid.push((mask, labels));
        }
    }
    let sets: BTreeSet<u32> = valid.iter().map(|v| v.0).collect();
    valid
        .into_iter()
        .filter(|(m, _)| !sets.iter().any(|&o| o != *m && o & m == *m))
        .map(|(m, labels)| (0..peaks.len()).filter(|&i| m >> i & 1 == 1).map(|i| peaks[i].peak_id.clone()).zip(labels).collect())
        .collect()
}

fn grouping_completeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = Tolerances::default();
    let exps = ExperimentSet::extended();
    let priors = matching_priors(&default_priors(), &SimulationSpec::default(), Protocol::Flya, &exps);
    let config = GroupingConfig { top_k: None, ..Default::default() };
    let mut total = 0;
    for i in 0..GROUPING_INSTANCES {
        let count = rng.random_range(1..=GROUPING_MAX_PEAKS);
        let peaks = random_peaks(&mut rng, count);
        let cg = build_compatibility_graph(&peaks, &tol).map_err(|e| e.to_string())?;
        let found: BTreeSet<Labelling> = enumerate_groupings(&cg, &peaks, &exps, &priors, &tol, &config)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|g| g.labels.into_iter().map(|l| (l.peak_id, l.role)).collect())
            .collect();
        let oracle = brute_force_groupings(&peaks, &tol);
        if found != oracle {
            return Err(format!("instance {i}: {} groupings, brute force {}", found.len(), oracle.len()));
        }
        total += found.len();
    }
    Ok(format!("{GROUPING_INSTANCES} instances, {total} groupings, all equal to brute force"))
}

fn run(args: &[String], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_resassign")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr)));
    }
    std::fs::write(dir.join(format!("{}.stdout", args[0])), &out.stdout).map_err(|e| e.to_string())
}

/// Spin-system simulate, assign and evaluate, plus a peak-list simulation.
fn run_pipeline(dir: &Path) -> Result<(), String> {
    let d = |s: &str| dir.join(s).to_string_lossy().into_owned();
    let args = |a: &[&str]| a.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    run(&args(&["simulate", "--protocol", "cisa", "--noise", "high", "--seed", "11", "--out", &d("sim")]), dir)?;
    run(
        &args(&[
            "assign",
            "--spins",
            &d("sim/spins.tsv"),
            "--sequence",
            &d("sim/sequence.txt"),
            "--priors",
            &d("sim/priors.json"),
            "--delta3",
            "1.4",
            "--out",
            &d("assign"),
        ]),
        dir,
    )?;
    run(
        &args(&["evaluate", "--assignment", &d("assign/assignment.json"), "--truth", &d("sim/ground_truth.json"), "--out", &d("eval")]),
        dir,
    )?;
    std::fs::create_dir_all(d("peaks")).map_err(|e| e.to_string())?;
    run(&args(&["simulate", "--protocol", "flya", "--seed", "11", "--out", &d("peaks")]), &dir.join("peaks"))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "timings.json") {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    check(
        fa.len() == fb.len() && differing.is_empty() && fa.len() >= 8,
        format!("{} output files compared, differing: {differing:?}", fa.len()),
    )
}
