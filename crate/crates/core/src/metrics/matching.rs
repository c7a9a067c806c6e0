//! Minimum-cost bipartite assignment.
//!
//! A shortest-augmenting-path Hungarian solver yields optimal dual potentials.
//! Every optimal assignment uses only zero-slack ("tight") edges under those
//! potentials, so the lexicographically smallest optimal assignment is found
//! by a greedy walk over the tight graph that keeps a perfect matching alive
//! through alternating-path repairs.

use serde::{Deserialize, Serialize};

use crate::scene::Vec3;

/// Costs are clamped here so one absurd prediction cannot wreck the
/// precision of the dual potentials for every other pair.
pub const COST_CAP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub pred_index: usize,
    pub gt_index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchResult {
    /// Sorted by `pred_index`.
    pub pairs: Vec<MatchPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

impl MatchResult {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.distance).sum()
    }
}

fn sanitize(c: f64) -> f64 {
    if c.is_nan() {
        COST_CAP
    } else {
        c.clamp(-COST_CAP, COST_CAP)
    }
}

/// Square solver. Returns the row-to-column assignment and the potentials
/// `(u, v)` with `u[i] + v[j] <= c[i][j]` and equality on assigned edges.
fn solve_square(c: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = c.len();
    // 1-based internal indexing with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[p[j] - 1] = j - 1;
    }
    (col_of, u[1..].to_vec(), v[1..].to_vec())
}

/// Reroutes the matching so row `i` takes column `j`, using only tight edges
/// among rows and columns not yet fixed. Returns false if impossible.
fn force(
    i: usize,
    j: usize,
    tight: &[Vec<bool>],
    col_of: &mut [usize],
    row_of: &mut [usize],
    row_fixed: &[bool],
    col_fixed: &[bool],
) -> bool {
    let n = col_of.len();
    let r = row_of[j];
    let target = col_of[i];
    // parent[row] = (previous row, column that row held) along the BFS tree
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[r] = true;
    seen[i] = true;
    let mut queue = std::collections::VecDeque::from([r]);
    let mut end = None;
    'search: while let Some(row) = queue.pop_front() {
        for c in 0..n {
            if c == j || col_fixed[c] || !tight[row][c] {
                continue;
            }
            if c == target {
                end = Some(row);
                break 'search;
            }
            let next = row_of[c];
            if !seen[next] && !row_fixed[next] {
                seen[next] = true;
                parent[next] = Some((row, c));
                queue.push_back(next);
            }
        }
    }
    let Some(mut row) = end else { return false };
    let mut c = target;
    loop {
        col_of[row] = c;
        row_of[c] = row;
        match parent[row] {
            Some((p, held)) => {
                c = held;
                row = p;
            }
            None => break,
        }
    }
    col_of[i] = j;
    row_of[j] = i;
    true
}

/// Lexicographically smallest optimal assignment of a square matrix.
fn lexicographic(c: &[Vec<f64>]) -> Vec<usize> {
    let n = c.len();
    if n == 0 {
        return Vec::new();
    }
    let (mut col_of, u, v) = solve_square(c);
    let scale = c.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-11 * scale;
    let mut tight: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| c[i][j] - u[i] - v[j] <= tol).collect())
        .collect();
    for (i, &j) in col_of.iter().enumerate() {
        tight[i][j] = true;
    }
    let mut row_of = vec![0usize; n];
    for (i, &j) in col_of.iter().enumerate() {
        row_of[j] = i;
    }
    let mut row_fixed = vec![false; n];
    let mut col_fixed = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if col_fixed[j] || !tight[i][j] {
                continue;
            }
            if col_of[i] == j
                || force(
                    i,
                    j,
                    &tight,
                    &mut col_of,
                    &mut row_of,
                    &row_fixed,
                    &col_fixed,
                )
            {
                break;
            }
        }
        row_fixed[i] = true;
        col_fixed[col_of[i]] = true;
    }
    col_of
}

/// Minimum-cost assignment for a rectangular cost matrix (rows x columns).
/// Returns, per row, the assigned column or `None` for surplus rows. Ties are
/// broken toward the lexicographically smallest (row, column) sequence.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    // padding cells share one constant, so they shift every full assignment
    // by the same amount and never change which real pairs are optimal
    let padded: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < rows && j < cols {
                        sanitize(cost[i].get(j).copied().unwrap_or(f64::NAN))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let col_of = lexicographic(&padded);
    (0..rows)
        .map(|i| (col_of[i] < cols).then_some(col_of[i]))
        .collect()
}

/// Hungarian matching on Euclidean center distances.
pub fn hungarian_match(pred: &[Vec3], gt: &[Vec3]) -> MatchResult {
    let cost: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| gt.iter().map(|g| p.distance(*g)).collect())
        .collect();
    let assignment = solve_assignment(&cost);
    let mut result = MatchResult::default();
    let mut gt_used = vec![false; gt.len()];
    for (i, a) in assignment.iter().enumerate() {
        match a {
            Some(j) => {
                gt_used[*j] = true;
                result.pairs.push(MatchPair {
                    pred_index: i,
                    gt_index: *j,
                    distance: cost[i][*j],
                });
            }
            None => result.unmatched_pred.push(i),
        }
    }
    result.unmatched_gt = (0..gt.len()).filter(|&j| !gt_used[j]).collect();
    result
}
