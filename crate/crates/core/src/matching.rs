//! Min-max (bottleneck) assignment of UAVs to relay-leg start vertices:
//! binary search over the distinct cost values with a maximum-bipartite-
//! matching feasibility test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{TimeStep, UavId};

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("cost matrix has {rows} rows but only {cols} columns")]
    RowsExceedCols { rows: usize, cols: usize },
    #[error("oracle guard: {rows}x{cols} exceeds the 7x7 limit")]
    OracleGuard { rows: usize, cols: usize },
}

/// Earliest-arrival costs: one row per relay leg, one column per candidate
/// UAV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// `entries[leg][col]`, all finite.
    pub entries: Vec<Vec<TimeStep>>,
    /// UAV id behind each column, strictly increasing.
    pub uav_ids: Vec<UavId>,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.uav_ids.len()
    }
}

/// An injective leg-to-UAV assignment and its bottleneck value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// UAV id per leg, in leg order.
    pub leg_to_uav: Vec<UavId>,
    /// Maximum selected cost entry.
    pub bottleneck: TimeStep,
}

/// Finds an injective assignment of legs to UAVs minimizing the largest
/// selected entry. Ties among optimal assignments are broken toward the
/// lexicographically smallest leg-ordered UAV-id sequence.
pub fn minmax_matching(matrix: &CostMatrix) -> Result<Assignment, MatchingError> {
    let rows = matrix.rows();
    let cols = matrix.cols();
    if rows > cols {
        return Err(MatchingError::RowsExceedCols { rows, cols });
    }
    if rows == 0 {
        return Ok(Assignment { leg_to_uav: Vec::new(), bottleneck: 0 });
    }

    let mut values: Vec<TimeStep> = matrix.entries.iter().flatten().copied().collect();
    values.sort_unstable();
    values.dedup();
    // Smallest threshold admitting a perfect matching on the rows.
    let mut lo = 0usize;
    let mut hi = values.len() - 1;
    debug_assert!(feasible(matrix, values[hi], &[]));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(matrix, values[mid], &[]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let bottleneck = values[lo];

    // Fix legs one by one to the smallest UAV id that keeps the remaining
    // legs matchable under the bottleneck threshold.
    let mut fixed: Vec<usize> = Vec::with_capacity(rows);
    for leg in 0..rows {
        let mut chosen = None;
        for col in 0..cols {
            if fixed.contains(&col) || matrix.entries[leg][col] > bottleneck {
                continue;
            }
            fixed.push(col);
            if feasible(matrix, bottleneck, &fixed) {
                chosen = Some(col);
                break;
            }
            fixed.pop();
        }
        chosen.expect("bottleneck threshold admits a perfect matching");
    }
    Ok(Assignment {
        leg_to_uav: fixed.iter().map(|&c| matrix.uav_ids[c]).collect(),
        bottleneck,
    })
}

/// Can all rows be matched using entries `<= threshold`, with the first
/// `fixed.len()` rows pinned to the given columns?
fn feasible(matrix: &CostMatrix, threshold: TimeStep, fixed: &[usize]) -> bool {
    let rows = matrix.rows();
    let cols = matrix.cols();
    let mut col_of_row: Vec<Option<usize>> = vec![None; rows];
    let mut row_of_col: Vec<Option<usize>> = vec![None; cols];
    for (row, &col) in fixed.iter().enumerate() {
        if matrix.entries[row][col] > threshold || row_of_col[col].is_some() {
            return false;
        }
        col_of_row[row] = Some(col);
        row_of_col[col] = Some(row);
    }
    for row in fixed.len()..rows {
        let mut seen = vec![false; cols];
        if !augment(matrix, threshold, fixed.len(), row, &mut seen, &mut row_of_col) {
            return false;
        }
    }
    true
}

/// Kuhn's augmenting path search, never displacing pinned rows.
fn augment(
    matrix: &CostMatrix,
    threshold: TimeStep,
    pinned: usize,
    row: usize,
    seen: &mut [bool],
    row_of_col: &mut [Option<usize>],
) -> bool {
    for col in 0..matrix.cols() {
        if seen[col] || matrix.entries[row][col] > threshold {
            continue;
        }
        seen[col] = true;
        match row_of_col[col] {
            None => {
                row_of_col[col] = Some(row);
                return true;
            }
            Some(other) if other >= pinned => {
                if augment(matrix, threshold, pinned, other, seen, row_of_col) {
                    row_of_col[col] = Some(row);
                    return true;
                }
            }
            Some(_) => {}
        }
    }
    false
}

/// Exhaustive bottleneck oracle: minimum over all injections of rows into
/// columns. Guarded to 7x7.
pub fn matching_oracle(matrix: &CostMatrix) -> Result<TimeStep, MatchingError> {
    let rows = matrix.rows();
    let cols = matrix.cols();
    if rows > cols {
        return Err(MatchingError::RowsExceedCols { rows, cols });
    }
    if rows > 7 || cols > 7 {
        return Err(MatchingError::OracleGuard { rows, cols });
    }
    if rows == 0 {
        return Ok(0);
    }
    let mut best = TimeStep::MAX;
    let mut used = vec![false; cols];
    fn recurse(
        matrix: &CostMatrix,
        row: usize,
        current_max: TimeStep,
        used: &mut [bool],
        best: &mut TimeStep,
    ) {
        if row == matrix.rows() {
            *best = (*best).min(current_max);
            return;
        }
        for col in 0..matrix.cols() {
            if used[col] {
                continue;
            }
            used[col] = true;
            recurse(matrix, row + 1, current_max.max(matrix.entries[row][col]), used, best);
            used[col] = false;
        }
    }
    recurse(matrix, 0, 0, &mut used, &mut best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn matrix(entries: Vec<Vec<TimeStep>>) -> CostMatrix {
        let cols = entries.first().map_or(0, Vec::len);
        CostMatrix { entries, uav_ids: (0..cols).collect() }
    }

    #[test]
    fn two_by_two_bottleneck() {
        // Both injections by hand: (0,1) -> max(3,5) = 5, (1,0) -> max(9,7) = 9.
        let m = matrix(vec![vec![3, 9], vec![7, 5]]);
        let asg = minmax_matching(&m).unwrap();
        assert_eq!(asg.bottleneck, 5);
        assert_eq!(asg.leg_to_uav, vec![0, 1]);
        assert_eq!(matching_oracle(&m).unwrap(), 5);
    }

    #[test]
    fn all_zero_matrix() {
        let m = matrix(vec![vec![0, 0, 0], vec![0, 0, 0]]);
        let asg = minmax_matching(&m).unwrap();
        assert_eq!(asg.bottleneck, 0);
        // Lex-smallest tie-break.
        assert_eq!(asg.leg_to_uav, vec![0, 1]);
    }

    #[test]
    fn single_row_takes_smallest_entry() {
        let m = matrix(vec![vec![4, 2, 2, 7]]);
        let asg = minmax_matching(&m).unwrap();
        assert_eq!(asg.bottleneck, 2);
        assert_eq!(asg.leg_to_uav, vec![1], "lowest id on ties");
    }

    #[test]
    fn rectangular_matrices_leave_uavs_idle() {
        let m = CostMatrix {
            entries: vec![vec![9, 1, 5], vec![8, 7, 2]],
            uav_ids: vec![10, 11, 12],
        };
        let asg = minmax_matching(&m).unwrap();
        assert_eq!(asg.bottleneck, 2);
        assert_eq!(asg.leg_to_uav, vec![11, 12]);
    }

    #[test]
    fn rows_exceeding_cols_is_an_error() {
        let m = CostMatrix { entries: vec![vec![1], vec![2]], uav_ids: vec![0] };
        assert!(matches!(minmax_matching(&m), Err(MatchingError::RowsExceedCols { .. })));
    }

    #[test]
    fn oracle_guard() {
        let m = matrix(vec![vec![0; 8]; 8]);
        assert!(matches!(matching_oracle(&m), Err(MatchingError::OracleGuard { .. })));
    }

    #[test]
    fn oracle_equivalence_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..500 {
            let cols = rng.gen_range(1..=7usize);
            let rows = rng.gen_range(1..=cols);
            let entries: Vec<Vec<TimeStep>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(0..50)).collect())
                .collect();
            let m = matrix(entries);
            let asg = minmax_matching(&m).unwrap();
            let oracle = matching_oracle(&m).unwrap();
            assert_eq!(asg.bottleneck, oracle, "case {case}");
            // The reported assignment realizes the reported bottleneck.
            let realized = asg
                .leg_to_uav
                .iter()
                .enumerate()
                .map(|(leg, &uav)| m.entries[leg][uav])
                .max()
                .unwrap();
            assert_eq!(realized, asg.bottleneck, "case {case}");
        }
    }

    #[test]
    fn scaling_preserves_assignment_and_scales_bottleneck() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let cols = rng.gen_range(1..=6usize);
            let rows = rng.gen_range(1..=cols);
            let entries: Vec<Vec<TimeStep>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(0..30)).collect())
                .collect();
            let m = matrix(entries.clone());
            let scaled = matrix(
                entries.iter().map(|row| row.iter().map(|&e| e * 3).collect()).collect(),
            );
            let a = minmax_matching(&m).unwrap();
            let b = minmax_matching(&scaled).unwrap();
            assert_eq!(b.bottleneck, a.bottleneck * 3);
            assert_eq!(b.leg_to_uav, a.leg_to_uav);
        }
    }
}
