//! Dense linear assignment on small square cost matrices.
//!
//! Shortest-augmenting-path Hungarian method with row/column potentials,
//! O(n^3). Costs are `f64`; the matrix is row-major `n × n`.

/// Minimum-cost perfect matching. Returns `assignment[row] = col`.
pub fn solve(cost: &[f64], n: usize) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    // 1-based potentials, column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Total cost of an assignment, summed in row order.
pub fn total(cost: &[f64], n: usize, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

fn sub_optimum(cost: &[f64], n: usize, rows: &[usize], cols: &[usize]) -> f64 {
    let m = rows.len();
    if m == 0 {
        return 0.0;
    }
    let mut sub = Vec::with_capacity(m * m);
    for &r in rows {
        for &c in cols {
            sub.push(cost[r * n + c]);
        }
    }
    let a = solve(&sub, m);
    total(&sub, m, &a)
}

/// Lexicographically smallest assignment among those whose cost is within
/// `tol` of the optimum.
///
/// Rows are fixed greedily in order; a column is accepted for the current row
/// when the best completion of the remaining rows still reaches the optimum.
pub fn solve_lex_smallest(cost: &[f64], n: usize, tol: f64) -> Vec<usize> {
    if n <= 1 {
        return (0..n).collect();
    }
    let first = solve(cost, n);
    let best = total(cost, n, &first);
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    let mut prefix = 0.0;
    for i in 0..n {
        let rest_rows: Vec<usize> = (i + 1..n).collect();
        let mut chosen = None;
        for (pos, &j) in free_cols.iter().enumerate() {
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            let completion = sub_optimum(cost, n, &rest_rows, &rest_cols);
            if prefix + cost[i * n + j] + completion <= best + tol {
                chosen = Some(pos);
                break;
            }
        }
        // Rounding can in principle reject every column; fall back to the
        // Hungarian choice for this row.
        let pos = chosen.unwrap_or_else(|| {
            free_cols
                .iter()
                .position(|&c| c == first[i])
                .unwrap_or(0)
        });
        let j = free_cols.remove(pos);
        prefix += cost[i * n + j];
        out.push(j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if i == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, i + 1, used, acc + cost[i * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn small_known_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(&cost, 3);
        assert_eq!(total(&cost, 3, &a), 5.0);
    }

    #[test]
    fn matches_enumeration_on_pseudorandom_matrices() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..50 {
                let cost: Vec<f64> = (0..n * n).map(|_| next()).collect();
                let a = solve(&cost, n);
                assert!((total(&cost, n, &a) - brute(&cost, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lex_smallest_breaks_ties() {
        // every assignment costs 0
        let cost = vec![0.0; 9];
        assert_eq!(solve_lex_smallest(&cost, 3, 0.0), vec![0, 1, 2]);
        // rows 0 and 1 are identical, so swapping them is free
        let cost = [1.0, 0.0, 5.0, 1.0, 0.0, 5.0, 9.0, 9.0, 0.0];
        assert_eq!(solve_lex_smallest(&cost, 3, 1e-12), vec![0, 1, 2]);
    }
}
