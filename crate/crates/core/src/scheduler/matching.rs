//! Rectangular assignment by the Hungarian method with potentials.

/// Minimum-cost assignment of every row of `cost` (n rows, m >= n columns)
/// to a distinct column. Returns the column of each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows ({n}) than columns ({m})");

    // 1-based internally; column 0 is the virtual root of each search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum-weight assignment of every row to a distinct column.
pub fn max_weight_assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = weight
        .iter()
        .map(|r| r.iter().map(|w| -w).collect())
        .collect();
    min_cost_assignment(&cost)
}

pub fn assignment_weight(weight: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| weight[r][c])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(weight: &[Vec<f64>]) -> f64 {
        fn go(w: &[Vec<f64>], r: usize, used: &mut Vec<bool>) -> f64 {
            if r == w.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    best = best.max(w[r][c] + go(w, r + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        go(weight, 0, &mut vec![false; weight[0].len()])
    }

    #[test]
    fn square_and_rectangular() {
        let w = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![3.0, 6.0, 9.0],
        ];
        let a = max_weight_assignment(&w);
        assert_eq!(assignment_weight(&w, &a), brute(&w));

        let w = vec![vec![-5.0, -1.0, -3.0, -2.0], vec![-1.0, -7.0, 0.0, -4.0]];
        let a = max_weight_assignment(&w);
        assert_eq!(assignment_weight(&w, &a), -1.0);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn matches_enumeration_on_pseudo_random_matrices() {
        let mut x: u64 = 0x9e3779b97f4a7c15;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % 2001) as f64 / 10.0 - 100.0
        };
        for n in 1..=5 {
            for m in n..=6 {
                for _ in 0..20 {
                    let w: Vec<Vec<f64>> =
                        (0..n).map(|_| (0..m).map(|_| next()).collect()).collect();
                    let a = max_weight_assignment(&w);
                    assert!((assignment_weight(&w, &a) - brute(&w)).abs() < 1e-9);
                }
            }
        }
    }
}
