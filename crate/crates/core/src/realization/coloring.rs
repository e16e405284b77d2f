//! Proper edge coloring of bipartite multigraphs with the minimum number of
//! colors (the maximum degree), via alternating-path recoloring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A two-qubit gate between ancilla `ancilla` and data qubit `data`,
/// scheduled in time slot `color`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledEdge {
    pub ancilla: usize,
    pub data: usize,
    pub color: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredSchedule {
    pub edges: Vec<ScheduledEdge>,
    pub depth: usize,
    pub ancilla_count: usize,
}

impl ColoredSchedule {
    /// True when no qubit takes part in two gates of one time slot.
    pub fn is_proper(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.edges.iter().all(|e| {
            e.color < self.depth && seen.insert((0u8, e.ancilla, e.color)) && seen.insert((1u8, e.data, e.color))
        })
    }
}

/// Colors the edges `(left, right)` with exactly `max degree` colors.
pub fn color_bipartite(left: usize, right: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let nv = left + right;
    let mut deg = vec![0usize; nv];
    for &(a, b) in edges {
        deg[a] += 1;
        deg[left + b] += 1;
    }
    let colors = deg.iter().copied().max().unwrap_or(0);
    // at[v][c] = edge using color c at vertex v.
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; colors]; nv];
    let mut color = vec![usize::MAX; edges.len()];
    let ends = |e: usize| (edges[e].0, left + edges[e].1);

    for (e, &(a, b)) in edges.iter().enumerate() {
        let (u, v) = (a, left + b);
        let free = |at: &Vec<Vec<Option<usize>>>, x: usize| (0..colors).find(|&c| at[x][c].is_none()).unwrap();
        let cu = free(&at, u);
        let cv = free(&at, v);
        if at[v][cu].is_some() {
            // Flip the cu/cv alternating path leaving v; in a bipartite
            // graph it cannot reach u, so cu becomes free at v.
            let mut path = Vec::new();
            let mut x = v;
            let mut want = cu;
            while let Some(f) = at[x][want] {
                path.push(f);
                let (p, q) = ends(f);
                x = if p == x { q } else { p };
                want = if want == cu { cv } else { cu };
            }
            for &f in &path {
                let (p, q) = ends(f);
                at[p][color[f]] = None;
                at[q][color[f]] = None;
            }
            for &f in &path {
                let (p, q) = ends(f);
                color[f] = if color[f] == cu { cv } else { cu };
                at[p][color[f]] = Some(f);
                at[q][color[f]] = Some(f);
            }
        }
        color[e] = cu;
        at[u][cu] = Some(e);
        at[v][cu] = Some(e);
    }
    color
}

/// Schedules the gates of an ancilla-per-row measurement graph.
/// `rows[a]` lists the data qubits touched by ancilla `a`.
pub fn edge_color_schedule(rows: &[Vec<usize>], data_count: usize, target_depth: usize) -> Result<ColoredSchedule> {
    let edges: Vec<(usize, usize)> = rows.iter().enumerate().flat_map(|(a, r)| r.iter().map(move |&d| (a, d))).collect();
    let colors = color_bipartite(rows.len(), data_count, &edges);
    let depth = colors.iter().map(|c| c + 1).max().unwrap_or(0);
    let schedule = ColoredSchedule {
        edges: edges.iter().zip(&colors).map(|(&(ancilla, data), &color)| ScheduledEdge { ancilla, data, color }).collect(),
        depth,
        ancilla_count: rows.len(),
    };
    if depth > target_depth {
        return Err(Error::DepthExceeded { achieved: depth, target: target_depth });
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_row_needs_four_slots() {
        let s = edge_color_schedule(&[vec![0, 1, 2, 3]], 4, 4).unwrap();
        assert_eq!(s.depth, 4);
        assert!(s.is_proper());
    }

    #[test]
    fn depth_above_target_is_reported() {
        let rows = vec![vec![0, 1, 2, 3, 4]];
        assert!(matches!(edge_color_schedule(&rows, 5, 4), Err(Error::DepthExceeded { achieved: 5, target: 4 })));
    }

    #[test]
    fn parallel_edges_get_distinct_colors() {
        let c = color_bipartite(1, 1, &[(0, 0), (0, 0), (0, 0)]);
        let mut s = c.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn coloring_is_proper_and_optimal(
            edges in prop::collection::vec((0usize..8, 0usize..10), 0..60)
        ) {
            let colors = color_bipartite(8, 10, &edges);
            let mut deg = [0usize; 18];
            for &(a, b) in &edges {
                deg[a] += 1;
                deg[8 + b] += 1;
            }
            let max_deg = deg.iter().copied().max().unwrap();
            let mut used = std::collections::HashSet::new();
            for (&(a, b), &c) in edges.iter().zip(&colors) {
                prop_assert!(c < max_deg);
                prop_assert!(used.insert((a, c)));
                prop_assert!(used.insert((8 + b, c)));
            }
        }
    }
}
