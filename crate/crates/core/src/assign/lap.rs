//! Rectangular linear assignment with forbidden pairs.
//!
//! Shortest-augmenting-path Hungarian method, O(n²m) for an `n × m` cost
//! matrix with `n ≤ m`. Forbidden pairs carry a penalty larger than any
//! complete finite assignment, so a solution that still uses one proves no
//! finite assignment exists.

/// Cost matrix entry; `None` marks a forbidden pair.
pub type Cost = Option<f64>;

/// Minimum-cost assignment of every row to a distinct column.
///
/// Returns the column chosen for each row, or `None` when rows outnumber
/// columns or every complete assignment uses a forbidden pair.
pub fn solve(costs: &[Vec<Cost>]) -> Option<Vec<usize>> {
    let n = costs.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let m = costs[0].len();
    debug_assert!(costs.iter().all(|r| r.len() == m));
    if n > m {
        return None;
    }

    let max_finite = costs
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |acc, &c| acc.max(c.abs()));
    let penalty = (max_finite + 1.0) * (n as f64 + 1.0);
    let at = |i: usize, j: usize| costs[i][j].unwrap_or(penalty);

    // 1-based potentials and matching, column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![usize::MAX; n];
    for j in 1..=m {
        if row_of[j] > 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    let feasible = col_of
        .iter()
        .enumerate()
        .all(|(i, &j)| j != usize::MAX && costs[i][j].is_some());
    feasible.then_some(col_of)
}

pub fn total_cost(costs: &[Vec<Cost>], cols: &[usize]) -> f64 {
    cols.iter()
        .enumerate()
        .map(|(i, &j)| costs[i][j].expect("assignment uses an allowed pair"))
        .sum()
}

/// Like [`solve`], but among optimal assignments returns the one that is
/// lexicographically smallest by (row, column). Two costs count as equal
/// when they differ by less than `1e-9` relative.
pub fn solve_lexicographic(costs: &[Vec<Cost>]) -> Option<Vec<usize>> {
    let n = costs.len();
    let best = solve(costs)?;
    if n <= 1 {
        return Some(best);
    }
    let optimum = total_cost(costs, &best);
    let tol = 1e-9 * (1.0 + optimum.abs());
    let m = costs[0].len();

    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut fixed_cost = 0.0;
    for r in 0..n {
        let mut chosen = None;
        for c in 0..m {
            let Some(cost) = costs[r][c] else { continue };
            if fixed.contains(&c) {
                continue;
            }
            let free_cols: Vec<usize> = (0..m).filter(|j| *j != c && !fixed.contains(j)).collect();
            let sub: Vec<Vec<Cost>> = costs[r + 1..]
                .iter()
                .map(|row| free_cols.iter().map(|&j| row[j]).collect())
                .collect();
            let rest = match solve(&sub) {
                Some(cols) => total_cost(&sub, &cols),
                None => continue,
            };
            if fixed_cost + cost + rest <= optimum + tol {
                chosen = Some((c, cost));
                break;
            }
        }
        // the optimum itself is always a candidate, so this only trips on
        // pathological rounding
        let (c, cost) = chosen.unwrap_or((best[r], costs[r][best[r]].unwrap_or(0.0)));
        fixed.push(c);
        fixed_cost += cost;
    }
    Some(fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(costs: &[Vec<Cost>]) -> Option<f64> {
        fn go(costs: &[Vec<Cost>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut Option<f64>) {
            if row == costs.len() {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for j in 0..used.len() {
                if used[j] {
                    continue;
                }
                if let Some(c) = costs[row][j] {
                    used[j] = true;
                    go(costs, row + 1, used, acc + c, best);
                    used[j] = false;
                }
            }
        }
        let mut best = None;
        let m = costs.first().map_or(0, Vec::len);
        go(costs, 0, &mut vec![false; m], 0.0, &mut best);
        best
    }

    fn dense(rows: &[&[f64]]) -> Vec<Vec<Cost>> {
        rows.iter().map(|r| r.iter().map(|&c| Some(c)).collect()).collect()
    }

    #[test]
    fn small_square() {
        let c = dense(&[&[4.0, 1.0, 3.0], &[2.0, 0.0, 5.0], &[3.0, 2.0, 2.0]]);
        let cols = solve(&c).unwrap();
        assert_eq!(total_cost(&c, &cols), 5.0);
    }

    #[test]
    fn rectangular_picks_cheapest_columns() {
        let c = dense(&[&[9.0, 1.0, 8.0, 7.0], &[9.0, 2.0, 8.0, 0.5]]);
        assert_eq!(solve(&c).unwrap(), vec![1, 3]);
    }

    #[test]
    fn forbidden_pairs_are_avoided() {
        let mut c = dense(&[&[1.0, 5.0], &[1.0, 5.0]]);
        c[0][0] = None;
        assert_eq!(solve(&c).unwrap(), vec![1, 0]);
        c[1][0] = None;
        assert_eq!(solve(&c), None);
    }

    #[test]
    fn more_rows_than_columns_is_infeasible() {
        assert_eq!(solve(&dense(&[&[1.0], &[2.0]])), None);
    }

    #[test]
    fn ties_resolve_to_lexicographic_first() {
        let c = dense(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]);
        assert_eq!(solve_lexicographic(&c).unwrap(), vec![0, 1]);
        let c = dense(&[&[2.0, 1.0, 1.0], &[1.0, 2.0, 2.0]]);
        assert_eq!(solve_lexicographic(&c).unwrap(), vec![1, 0]);
    }

    fn arb_costs() -> impl Strategy<Value = Vec<Vec<Cost>>> {
        (1usize..6, 0usize..3).prop_flat_map(|(n, extra)| {
            let m = n + extra;
            prop::collection::vec(
                prop::collection::vec(prop::option::weighted(0.85, 0.0..10.0f64), m),
                n,
            )
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(c in arb_costs()) {
            let oracle = brute(&c);
            let got = solve(&c);
            prop_assert_eq!(oracle.is_some(), got.is_some());
            if let (Some(o), Some(cols)) = (oracle, got) {
                prop_assert!((total_cost(&c, &cols) - o).abs() < 1e-9);
                let lex = solve_lexicographic(&c).unwrap();
                prop_assert!((total_cost(&c, &lex) - o).abs() < 1e-8);
                let mut seen = lex.clone();
                seen.sort_unstable();
                seen.dedup();
                prop_assert_eq!(seen.len(), lex.len());
            }
        }
    }
}
