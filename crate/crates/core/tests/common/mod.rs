#![allow(dead_code)]

use qnetcap::network::BoundedGraph;
use rand::Rng;

/// Random connected graph on `n` nodes: a random spanning tree plus each
/// remaining pair with probability `extra`. Edge values are uniform in [0, 1).
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, extra: f64) -> BoundedGraph {
    let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for i in 1..n {
        let j = rng.gen_range(0..i);
        present[i][j] = true;
        present[j][i] = true;
        edges.push((i, j));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !present[i][j] && rng.gen_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    let edges: Vec<(String, String, f64, f64)> = edges
        .into_iter()
        .map(|(a, b)| {
            let lo: f64 = rng.gen();
            let hi = lo + rng.gen::<f64>() * (1.0 - lo);
            (ids[a].clone(), ids[b].clone(), lo, hi)
        })
        .collect();
    let beta = ids[rng.gen_range(1..n)].clone();
    BoundedGraph::from_values(&ids, &edges, &ids[0], &beta).expect("well-formed random graph")
}
