//! Seeded random cross-checks: fast solvers against exhaustive search, and
//! bound orderings at random channel parameters.

use qnetcap::bounds::{ad_rci, ad_squashed, tl_rci, tl_ree};
use qnetcap::network::{BoundedGraph, Selector};
use qnetcap::routing::{brute_force_min_cut, brute_force_widest_path, capacity_report, max_flow, widest_path};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{emit, Failure};

const TOL: f64 = 1e-9;

fn random_graph(rng: &mut ChaCha8Rng) -> BoundedGraph {
    let n = rng.gen_range(2..=10);
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i, rng.gen_range(0..i))).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if !pairs.iter().any(|&(a, b)| (a, b) == (j, i) || (a, b) == (i, j)) && rng.gen_bool(0.3) {
                pairs.push((i, j));
            }
        }
    }
    let edges: Vec<(String, String, f64, f64)> = pairs
        .into_iter()
        .map(|(a, b)| {
            let lo: f64 = rng.gen();
            let hi = lo + rng.gen::<f64>() * (1.0 - lo);
            (ids[a].clone(), ids[b].clone(), lo, hi)
        })
        .collect();
    let beta = rng.gen_range(1..n);
    BoundedGraph::from_values(&ids, &edges, &ids[0], &ids[beta]).expect("random graph is well formed")
}

fn check_graph(bg: &BoundedGraph) -> Result<Vec<String>, Failure> {
    let mut problems = capacity_report(bg).ordering_violations(TOL);
    for sel in Selector::BOTH {
        let flow = max_flow(bg, sel).value;
        let (cut, _) = brute_force_min_cut(bg, sel)?;
        if (flow - cut).abs() > TOL {
            problems.push(format!("{sel:?} max flow {flow} differs from exhaustive min cut {cut}"));
        }
        let wide = widest_path(bg, sel).value;
        let exhaustive = brute_force_widest_path(bg, sel)?;
        if wide != exhaustive {
            problems.push(format!("{sel:?} widest path {wide} differs from exhaustive {exhaustive}"));
        }
    }
    Ok(problems)
}

fn check_bounds(rng: &mut ChaCha8Rng) -> Result<Vec<String>, Failure> {
    let mut problems = Vec::new();
    let p: f64 = rng.gen();
    let (lo, hi) = (ad_rci(p)?, ad_squashed(p)?);
    if lo > hi + TOL {
        problems.push(format!("damping {p}: reverse coherent information {lo} above squashed {hi}"));
    }
    let eta = rng.gen_range(1e-3..0.999);
    let nbar = rng.gen_range(0.0..2.0);
    let (lo, hi) = (tl_rci(eta, nbar)?, tl_ree(eta, nbar)?);
    if lo > hi + TOL {
        problems.push(format!("eta {eta}, nbar {nbar}: reverse coherent information {lo} above REE {hi}"));
    }
    Ok(problems)
}

#[derive(Serialize)]
struct Summary {
    seed: u64,
    cases: usize,
    failures: Vec<String>,
}

pub fn run(seed: u64, cases: usize) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for case in 0..cases {
        let bg = random_graph(&mut rng);
        for p in check_graph(&bg)?.into_iter().chain(check_bounds(&mut rng)?) {
            failures.push(format!("case {case}: {p}"));
        }
    }
    let ok = failures.is_empty();
    let summary = Summary { seed, cases, failures };
    emit(None, &(serde_json::to_string_pretty(&summary).expect("plain data serializes") + "\n"))?;
    if ok {
        Ok(())
    } else {
        Err(Failure::numeric(format!("{} self-test check(s) failed", summary.failures.len())))
    }
}
