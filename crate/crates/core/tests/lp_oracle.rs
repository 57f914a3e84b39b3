//! Solver properties on small random graphs, checked against brute-force
//! path enumeration written here.

use std::collections::BTreeMap;

use proptest::prelude::*;

use resassign::graph::{AssignmentGraph, GraphBuilder};
use resassign::lp::{self, formulate, Backend, Method, Variant};
use resassign::shortest_path::{dp_shortest_path, exhaustive_constrained};
use resassign::Tolerances;

/// Peaks consumed by each node, edge flags and costs, thresholds.
#[derive(Debug, Clone)]
struct Spec {
    nodes: Vec<Vec<Vec<u8>>>,
    edges: Vec<Vec<(bool, i8)>>,
    thresholds: Vec<u8>,
}

fn spec() -> impl Strategy<Value = Spec> {
    (2usize..=5, 0usize..=3, 3u8..=8).prop_flat_map(|(n, width, pool)| {
        let node = proptest::collection::vec(0..pool, 1..=2);
        let layer = proptest::collection::vec(node, 0..=width);
        (
            proptest::collection::vec(layer, n),
            proptest::collection::vec(proptest::collection::vec((any::<bool>(), -4i8..8), width * width), n),
            proptest::collection::vec(4u8..12, n),
        )
            .prop_map(|(nodes, edges, thresholds)| Spec { nodes, edges, thresholds })
    })
}

fn build(s: &Spec) -> AssignmentGraph {
    let n = s.nodes.len();
    let mut b = GraphBuilder::new(n);
    let mut ids = Vec::new();
    for (k, layer) in s.nodes.iter().enumerate() {
        let mut here = Vec::new();
        for members in layer {
            let mut names: Vec<String> = members.iter().map(|m| format!("p{m}")).collect();
            names.sort();
            names.dedup();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            here.push(b.node(k + 1, &refs));
        }
        b.threshold(k + 1, s.thresholds[k] as f64);
        ids.push(here);
    }
    for k in 1..n {
        let width = (s.edges[k].len() as f64).sqrt() as usize;
        for (a, &u) in ids[k - 1].iter().enumerate() {
            for (c, &v) in ids[k].iter().enumerate() {
                let (keep, cost) = s.edges[k][a * width + c];
                if keep {
                    b.edge(k, u, v, cost as f64);
                }
            }
        }
    }
    b.finish()
}

/// (cost, extra uses) of every path.
fn enumerate(g: &AssignmentGraph) -> Vec<(Vec<usize>, f64, usize)> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![0usize], 0.0)];
    while let Some((path, cost)) = stack.pop() {
        let k = path.len() - 1;
        if k + 1 == g.layers.len() {
            let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
            for (layer, &i) in path.iter().enumerate() {
                for m in g.usage(layer, i) {
                    *uses.entry(m).or_default() += 1;
                }
            }
            out.push((path, cost, uses.values().map(|u| u - 1).sum()));
            continue;
        }
        for e in g.edges[k].iter().filter(|e| e.from == path[k]) {
            let mut p = path.clone();
            p.push(e.to);
            stack.push((p, cost + e.cost));
        }
    }
    out
}

fn best(g: &AssignmentGraph, lambda: Option<f64>) -> f64 {
    enumerate(g)
        .into_iter()
        .filter_map(|(_, c, extra)| match lambda {
            None => (extra == 0).then_some(c),
            Some(l) => Some(c + l * extra as f64),
        })
        .fold(f64::INFINITY, f64::min)
}

/// Independent checker: one node per layer, existing edges, and the
/// reported cost and reuse count.
fn check_path(g: &AssignmentGraph, nodes: &[usize], hard: bool) -> Result<(f64, usize), String> {
    if nodes.len() != g.layers.len() || nodes[0] != 0 || nodes[nodes.len() - 1] != 0 {
        return Err("wrong shape".into());
    }
    let mut cost = 0.0;
    for k in 0..nodes.len() - 1 {
        let e = g.edges[k].iter().find(|e| e.from == nodes[k] && e.to == nodes[k + 1]).ok_or("missing edge")?;
        cost += e.cost;
    }
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for (k, &i) in nodes.iter().enumerate() {
        for m in g.usage(k, i) {
            *uses.entry(m).or_default() += 1;
        }
    }
    let extra: usize = uses.values().map(|u| u - 1).sum();
    if hard && extra > 0 {
        return Err(format!("{extra} reuses under the hard constraint"));
    }
    Ok((cost, extra))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lian1_is_exact_and_bounded_by_its_relaxation(s in spec()) {
        let g = build(&s);
        let oracle = best(&g, None);
        let backend = Backend::default();
        let solved = lp::solve(&g, Method::Lian1, &Tolerances::default(), &backend).unwrap();
        prop_assert_eq!(solved.objective, oracle);
        let (cost, _) = check_path(&g, &solved.path.nodes, true).map_err(TestCaseError::fail)?;
        prop_assert_eq!(cost, solved.objective);
        prop_assert!(solved.report.lp_objective <= oracle + 1e-7);
        let full = backend.solve(&formulate(&g, Variant::Hard).lp).unwrap();
        prop_assert!(full.objective <= oracle + 1e-7);
        prop_assert_eq!(exhaustive_constrained(&g).unwrap().total_cost, oracle);
        prop_assert!(dp_shortest_path(&g).total_cost <= oracle);
    }

    #[test]
    fn ilp_matches_the_oracle(s in spec()) {
        let g = build(&s);
        let solved = lp::solve(&g, Method::Ilp, &Tolerances::default(), &Backend::default()).unwrap();
        prop_assert_eq!(solved.objective, best(&g, None));
        check_path(&g, &solved.path.nodes, true).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn lian2_matches_the_penalized_oracle(s in spec(), lambda in 1u8..20) {
        let g = build(&s);
        let lambda = lambda as f64;
        let tol = Tolerances { lambda, ..Default::default() };
        let solved = lp::solve(&g, Method::Lian2, &tol, &Backend::default()).unwrap();
        let (cost, extra) = check_path(&g, &solved.path.nodes, false).map_err(TestCaseError::fail)?;
        prop_assert_eq!(cost + lambda * extra as f64, solved.objective);
        prop_assert_eq!(solved.objective, best(&g, Some(lambda)));
    }

    #[test]
    fn large_penalty_behaves_like_the_hard_constraint(s in spec()) {
        // the dummy chain always exists, so a zero-reuse path does too; any
        // reuse then costs more than the whole spread of path costs
        let g = build(&s);
        let spread: f64 = g.edges.iter().map(|es| es.iter().map(|e| e.cost.abs()).fold(0.0, f64::max)).sum::<f64>() * 2.0;
        let tol = Tolerances { lambda: spread + 1.0, ..Default::default() };
        let solved = lp::solve(&g, Method::Lian2, &tol, &Backend::default()).unwrap();
        let (_, extra) = check_path(&g, &solved.path.nodes, false).map_err(TestCaseError::fail)?;
        prop_assert_eq!(extra, 0);
        prop_assert_eq!(solved.objective, best(&g, None));
    }

    #[test]
    fn flow_relaxation_is_integral(s in spec()) {
        let g = build(&s);
        let f = formulate(&g, Variant::Flow);
        let sol = Backend::default().solve(&f.lp).unwrap();
        prop_assert!(sol.values[..f.edge_vars()].iter().all(|&x| x <= 1e-9 || x >= 1.0 - 1e-9));
        prop_assert!((sol.objective - best(&g, Some(0.0))).abs() <= 1e-6);
    }
}
