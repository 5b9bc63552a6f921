//! Uniform-cell discretization of a map as a weighted directed graph.

use rayon::prelude::*;

use crate::dynamics::MapSpec;
use crate::potential::Potential;

/// Cells of a uniform partition, edges `i → j` whenever the image of cell
/// `i` meets the interior of cell `j`, and node weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamGraph {
    pub lo: f64,
    pub hi: f64,
    /// Outgoing adjacency, sorted ascending per node.
    pub edges: Vec<Vec<usize>>,
    /// `w_i = φ(midpoint of cell i)`.
    pub weights: Vec<f64>,
}

impl UlamGraph {
    /// A bare weighted digraph; cell geometry is set to `[0, n]`.
    pub fn from_edges(weights: Vec<f64>, mut edges: Vec<Vec<usize>>) -> Self {
        assert_eq!(weights.len(), edges.len(), "one adjacency list per node");
        for out in &mut edges {
            out.sort_unstable();
            out.dedup();
        }
        UlamGraph { lo: 0.0, hi: weights.len() as f64, edges, weights }
    }

    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        let h = (self.hi - self.lo) / self.n_cells() as f64;
        (self.lo + i as f64 * h, if i + 1 == self.n_cells() { self.hi } else { self.lo + (i + 1) as f64 * h })
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        let (a, b) = self.cell(i);
        0.5 * (a + b)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i].binary_search(&j).is_ok()
    }
}

/// Cells `j` whose interior meets `[a, b]` (in cell coordinates, i.e. the
/// domain rescaled to `[0, n]`). A degenerate image hits the cell holding it.
fn hit_range(a: f64, b: f64, n: usize, wrap: bool) -> Vec<usize> {
    if b - a >= n as f64 && wrap {
        return (0..n).collect();
    }
    let first = a.floor();
    let last = if b > a { b.ceil() - 1.0 } else { first };
    let mut out = Vec::new();
    let mut k = first;
    while k <= last {
        let j = k as i64;
        if wrap {
            out.push(j.rem_euclid(n as i64) as usize);
        } else if (0..n as i64).contains(&j) {
            out.push(j as usize);
        }
        k += 1.0;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Build the Ulam graph of `map` with `n_cells ≥ 2` uniform cells.
pub fn build_ulam<P: Potential + ?Sized>(map: &MapSpec, phi: &P, n_cells: usize) -> UlamGraph {
    assert!(n_cells >= 2, "n_cells must be at least 2");
    let (lo, hi) = map.space().bounds();
    let mut g = UlamGraph { lo, hi, edges: Vec::new(), weights: Vec::new() };
    let n = n_cells as f64;
    let scale = n / (hi - lo);
    let (edges, weights): (Vec<_>, Vec<_>) = (0..n_cells)
        .into_par_iter()
        .map(|i| {
            let h = (hi - lo) / n;
            let (l, r) = (lo + i as f64 * h, if i + 1 == n_cells { hi } else { lo + (i + 1) as f64 * h });
            let out = if map.is_circle() {
                let (a, b) = (map.lift_f64(l), map.lift_f64(r));
                hit_range(a * scale, b * scale, n_cells, true)
            } else {
                let (a, b) = map.interval_image_f64(l, r);
                hit_range((a - lo) * scale, (b - lo) * scale, n_cells, false)
            };
            (out, phi.value(0.5 * (l + r)))
        })
        .unzip();
    g.edges = edges;
    g.weights = weights;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Observable;

    fn zero(map: &MapSpec) -> Observable {
        Observable::parse("0", map.space()).unwrap()
    }

    #[test]
    fn doubling_two_cells_is_complete() {
        let m = MapSpec::doubling();
        let g = build_ulam(&m, &zero(&m), 2);
        assert_eq!(g.edges, vec![vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn tent_two_cells() {
        let m: MapSpec = "tent:a=2".parse().unwrap();
        let g = build_ulam(&m, &zero(&m), 2);
        assert_eq!(g.edges, vec![vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn tent_three_halves_four_cells() {
        let m: MapSpec = "tent:a=3/2".parse().unwrap();
        let g = build_ulam(&m, &zero(&m), 4);
        // cells of width 1/2; images: [0,.75], [.75,1.5], [.75,1.5], [0,.75]
        assert_eq!(g.edges, vec![vec![0, 1], vec![1, 2], vec![1, 2], vec![0, 1]]);
    }

    #[test]
    fn edges_match_interval_intersection() {
        for desc in ["tent:a=1.7", "quad:a=3.8", "doubling", "cover:d=3,alpha=0.4"] {
            let m: MapSpec = desc.parse().unwrap();
            let n = 64;
            let g = build_ulam(&m, &zero(&m), n);
            for i in 0..n {
                assert!(!g.edges[i].is_empty());
                // every sampled image point lands in a target cell
                let (l, r) = g.cell(i);
                for s in 1..20 {
                    let x = l + (r - l) * s as f64 / 20.0;
                    let y = m.eval_f64(x);
                    let j = (((y - g.lo) / (g.hi - g.lo) * n as f64).floor() as usize).min(n - 1);
                    assert!(g.has_edge(i, j), "{desc}: {i} -> {j}");
                }
            }
        }
    }

    #[test]
    fn hit_range_wraps_on_circle() {
        assert_eq!(hit_range(3.5, 5.2, 4, true), vec![0, 1, 3]);
        assert_eq!(hit_range(1.0, 2.0, 4, false), vec![1]);
        assert_eq!(hit_range(2.0, 2.0, 4, false), vec![2]);
    }
}
