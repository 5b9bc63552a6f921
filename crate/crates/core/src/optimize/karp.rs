//! Karp's maximum mean cycle, one strongly connected component at a time.
//!
//! Rows `D_k` are never stored in full. The forward pass keeps every
//! `s`-th row (`s ≈ √n`) so a witness walk can be recovered block by block.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::ulam::UlamGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CycleError {
    #[error("graph has no directed cycle")]
    NoCycle,
}

/// Value of the best cycle mean and one cycle attaining it, as node indices
/// in walk order starting from the smallest index.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCycle {
    pub mean: f64,
    pub cycle: Vec<usize>,
}

const NEG: f64 = f64::NEG_INFINITY;

struct Component<'a> {
    nodes: &'a [usize],
    /// Predecessors in local indices, with the source weight of each edge.
    preds: Vec<Vec<(usize, f64)>>,
}

impl Component<'_> {
    fn step(&self, prev: &[f64], next: &mut [f64], arg: Option<&mut [usize]>) {
        let mut arg = arg;
        for (v, ps) in self.preds.iter().enumerate() {
            let mut best = NEG;
            let mut who = usize::MAX;
            for &(u, w) in ps {
                if prev[u] > NEG {
                    let cand = prev[u] + w;
                    if cand > best {
                        best = cand;
                        who = u;
                    }
                }
            }
            next[v] = best;
            if let Some(a) = arg.as_deref_mut() {
                a[v] = who;
            }
        }
    }

    fn solve(&self) -> Option<MeanCycle> {
        let n = self.nodes.len();
        let stride = (n as f64).sqrt().ceil().max(1.0) as usize;
        let mut checkpoints: Vec<Vec<f64>> = Vec::new();
        let mut row = vec![0.0; n];
        let mut next = vec![NEG; n];
        for k in 0..n {
            if k % stride == 0 {
                checkpoints.push(row.clone());
            }
            self.step(&row, &mut next, None);
            std::mem::swap(&mut row, &mut next);
        }
        let last = row;

        // second pass: min_k (D_n − D_k)/(n − k) for each v
        let mut ratio = vec![f64::INFINITY; n];
        let mut row = vec![0.0; n];
        for k in 0..n {
            for v in 0..n {
                if last[v] > NEG && row[v] > NEG {
                    let r = (last[v] - row[v]) / (n - k) as f64;
                    if r < ratio[v] {
                        ratio[v] = r;
                    }
                }
            }
            self.step(&row, &mut next, None);
            std::mem::swap(&mut row, &mut next);
        }
        let mut best_v = None;
        let mut best = NEG;
        for v in 0..n {
            if last[v] > NEG && ratio[v] > best {
                best = ratio[v];
                best_v = Some(v);
            }
        }
        let v_star = best_v?;

        // walk back along an optimal n-step walk ending at v*
        let mut walk = vec![v_star];
        let mut cur = v_star;
        let mut k = n;
        let mut arg = vec![usize::MAX; n];
        while k > 0 {
            let block = (k - 1) / stride;
            let base = block * stride;
            let mut rows = vec![checkpoints[block].clone()];
            let mut args: Vec<Vec<usize>> = Vec::new();
            for _ in base..k {
                let mut nxt = vec![NEG; n];
                self.step(rows.last().expect("nonempty"), &mut nxt, Some(&mut arg));
                rows.push(nxt);
                args.push(arg.clone());
            }
            for j in (base..k).rev() {
                cur = args[j - base][cur];
                walk.push(cur);
            }
            k = base;
        }
        walk.reverse();
        let cycle = first_cycle(&walk)?;
        let global: Vec<usize> = cycle.iter().map(|&v| self.nodes[v]).collect();
        Some(MeanCycle { mean: best, cycle: rotate_to_min(global) })
    }
}

fn first_cycle(walk: &[usize]) -> Option<Vec<usize>> {
    let mut seen = std::collections::HashMap::new();
    for (i, &v) in walk.iter().enumerate() {
        if let Some(&j) = seen.get(&v) {
            return Some(walk[j..i].to_vec());
        }
        seen.insert(v, i);
    }
    None
}

fn rotate_to_min(mut c: Vec<usize>) -> Vec<usize> {
    if let Some(pos) = c.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i) {
        c.rotate_left(pos);
    }
    c
}

/// Mean of a node cycle under node weights.
pub fn cycle_mean(g: &UlamGraph, cycle: &[usize]) -> f64 {
    cycle.iter().map(|&v| g.weights[v]).sum::<f64>() / cycle.len() as f64
}

/// Maximum over directed cycles of the mean node weight.
pub fn max_mean_cycle(g: &UlamGraph) -> Result<MeanCycle, CycleError> {
    let n = g.n_cells();
    let mut pg = DiGraph::<(), ()>::with_capacity(n, g.edge_count());
    let idx: Vec<_> = (0..n).map(|_| pg.add_node(())).collect();
    for (u, out) in g.edges.iter().enumerate() {
        for &v in out {
            pg.add_edge(idx[u], idx[v], ());
        }
    }
    let mut sccs: Vec<Vec<usize>> =
        tarjan_scc(&pg).into_iter().map(|c| c.into_iter().map(|i| i.index()).collect()).collect();
    for c in &mut sccs {
        c.sort_unstable();
    }
    sccs.sort();

    let mut local = vec![usize::MAX; n];
    let mut best: Option<MeanCycle> = None;
    for comp in &sccs {
        if comp.len() == 1 && !g.has_edge(comp[0], comp[0]) {
            continue;
        }
        for (i, &v) in comp.iter().enumerate() {
            local[v] = i;
        }
        let mut preds = vec![Vec::new(); comp.len()];
        for (i, &u) in comp.iter().enumerate() {
            for &v in &g.edges[u] {
                if local[v] != usize::MAX {
                    preds[local[v]].push((i, g.weights[u]));
                }
            }
        }
        let found = Component { nodes: comp, preds }.solve();
        for &v in comp {
            local[v] = usize::MAX;
        }
        if let Some(mc) = found {
            if best.as_ref().is_none_or(|b| mc.mean > b.mean) {
                best = Some(mc);
            }
        }
    }
    best.ok_or(CycleError::NoCycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_self_loop() {
        let g = UlamGraph::from_edges(vec![1.0], vec![vec![0]]);
        let mc = max_mean_cycle(&g).unwrap();
        assert_eq!((mc.mean, mc.cycle), (1.0, vec![0]));
    }

    #[test]
    fn self_loop_beats_two_cycle() {
        let g = UlamGraph::from_edges(vec![1.0, -0.5], vec![vec![0, 1], vec![0]]);
        let mc = max_mean_cycle(&g).unwrap();
        assert_eq!((mc.mean, mc.cycle), (1.0, vec![0]));
    }

    #[test]
    fn three_cycle_beats_loop() {
        // 0 -> 1 -> 2 -> 0 with weights 0, 3, 0, and a loop at 3 with 0.9
        let g = UlamGraph::from_edges(vec![0.0, 3.0, 0.0, 0.9], vec![vec![1], vec![2], vec![0, 3], vec![3]]);
        let mc = max_mean_cycle(&g).unwrap();
        assert!((mc.mean - 1.0).abs() < 1e-15);
        assert_eq!(mc.cycle, vec![0, 1, 2]);
    }

    #[test]
    fn acyclic_graph_errors() {
        let g = UlamGraph::from_edges(vec![1.0, 2.0], vec![vec![1], vec![]]);
        assert_eq!(max_mean_cycle(&g), Err(CycleError::NoCycle));
    }

    /// Brute force over simple cycles by DFS from each start node.
    fn brute(g: &UlamGraph) -> Option<f64> {
        let n = g.n_cells();
        let mut best: Option<f64> = None;
        fn dfs(g: &UlamGraph, start: usize, v: usize, path: &mut Vec<usize>, best: &mut Option<f64>) {
            for &w in &g.edges[v] {
                if w == start {
                    let m = cycle_mean(g, path);
                    if best.is_none_or(|b| m > b) {
                        *best = Some(m);
                    }
                } else if w > start && !path.contains(&w) {
                    path.push(w);
                    dfs(g, start, w, path, best);
                    path.pop();
                }
            }
        }
        for s in 0..n {
            dfs(g, s, s, &mut vec![s], &mut best);
        }
        best
    }

    fn graph_strategy() -> impl Strategy<Value = UlamGraph> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(prop::collection::vec(0..n, 0..4), n),
            )
                .prop_map(|(w, e)| UlamGraph::from_edges(w, e))
        })
    }

    proptest! {
        #[test]
        fn karp_matches_brute_force(g in graph_strategy()) {
            let fast = max_mean_cycle(&g).ok();
            let slow = brute(&g);
            prop_assert_eq!(fast.is_some(), slow.is_some());
            if let (Some(f), Some(s)) = (fast, slow) {
                prop_assert!((f.mean - s).abs() < 1e-9);
                prop_assert!((cycle_mean(&g, &f.cycle) - s).abs() < 1e-9);
                for k in 0..f.cycle.len() {
                    prop_assert!(g.has_edge(f.cycle[k], f.cycle[(k + 1) % f.cycle.len()]));
                }
            }
        }
    }
}
