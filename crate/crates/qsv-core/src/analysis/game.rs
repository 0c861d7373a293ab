//! Exact solver for small zero-sum matrix games, used as the inner step of
//! the probability optimizer.
//!
//! The game `min_p max_mu mu^T Q p` (columns chosen by the probability
//! vector `p`, rows by `mu`) is reduced to the classic linear program
//! `maximize 1.x : Q' x <= 1, x >= 0` after shifting `Q` to be strictly
//! positive, and solved by tableau simplex with Bland's rule, so it
//! terminates without cycling. Sizes here are tiny (tens to a few hundred
//! rows/columns), so dense simplex is more than enough.

use crate::{QsvError, Result};

/// Solution of the matrix game: the value, the column player's optimal
/// mixed strategy `p`, and the row player's optimal mixed strategy `mu`.
#[derive(Debug, Clone)]
pub struct GameSolution {
    pub value: f64,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Solve `min_p max_j (Q p)_j` over probability vectors `p` (length =
/// number of columns). `q[j][m]` is the payoff of column `m` against row
/// `j`.
pub fn solve_matrix_game(q: &[Vec<f64>]) -> Result<GameSolution> {
    let rows = q.len();
    if rows == 0 {
        return Err(QsvError::InvalidArgument("empty game matrix".into()));
    }
    let cols = q[0].len();
    if cols == 0 || q.iter().any(|r| r.len() != cols) {
        return Err(QsvError::InvalidArgument("ragged or empty game matrix".into()));
    }
    let min_entry = q.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    if !min_entry.is_finite() {
        return Err(QsvError::InvalidArgument("non-finite game entry".into()));
    }
    let shift = 1.0 - min_entry; // makes every entry >= 1
    let shifted: Vec<Vec<f64>> =
        q.iter().map(|r| r.iter().map(|&x| x + shift).collect()).collect();

    // LP: maximize sum(x) subject to Q' x <= 1, x >= 0. At the optimum
    // the game value is V' = 1/sum(x), p = V' x; the dual prices of the row
    // constraints give mu.
    let (x, y) = simplex_max_sum(&shifted)?;
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return Err(QsvError::SimplexViolation("degenerate game solution".into()));
    }
    let value = 1.0 / total;
    let p: Vec<f64> = x.iter().map(|&xi| (xi * value).max(0.0)).collect();
    let mu: Vec<f64> = y.iter().map(|&yi| (yi * value).max(0.0)).collect();
    Ok(GameSolution { value: value - shift, p: renormalize(p), mu: renormalize(mu) })
}

fn renormalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// Tableau simplex for `maximize 1.x : A x <= 1, x >= 0` with `A > 0`.
/// Returns the primal solution and the dual prices of the constraints.
fn simplex_max_sum(a: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = a.len();
    let cols = a[0].len();
    let width = cols + rows + 1; // structural + slack + rhs
    // tableau[r] = constraint row r; tableau[rows] = reduced-cost row (c - z).
    let mut t = vec![vec![0.0f64; width]; rows + 1];
    for (r, row) in a.iter().enumerate() {
        t[r][..cols].copy_from_slice(row);
        t[r][cols + r] = 1.0;
        t[r][width - 1] = 1.0;
    }
    for c in 0..cols {
        t[rows][c] = 1.0;
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let max_pivots = 50_000 + 200 * (rows + cols);
    for _ in 0..max_pivots {
        // Bland's rule: entering column = lowest index with positive
        // reduced cost.
        let enter = match (0..width - 1).find(|&c| t[rows][c] > 1e-11) {
            Some(c) => c,
            None => {
                // Optimal: read off primal and dual solutions.
                let mut x = vec![0.0; cols];
                for (r, &b) in basis.iter().enumerate() {
                    if b < cols {
                        x[b] = t[r][width - 1];
                    }
                }
                let y: Vec<f64> = (0..rows).map(|r| -t[rows][cols + r]).collect();
                return Ok((x, y));
            }
        };
        // Minimum ratio; ties broken by lowest basis index (Bland).
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            if t[r][enter] > 1e-11 {
                let ratio = t[r][width - 1] / t[r][enter];
                if ratio < best - 1e-12
                    || (ratio < best + 1e-12
                        && leave.map(|l| basis[r] < basis[l]).unwrap_or(false))
                {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let leave = leave.ok_or_else(|| {
            QsvError::SimplexViolation("unbounded game LP (non-positive matrix?)".into())
        })?;
        // Pivot.
        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for r in 0..rows + 1 {
            if r != leave && t[r][enter].abs() > 0.0 {
                let f = t[r][enter];
                let (src, dst) = {
                    let (lo, hi) = t.split_at_mut(r.max(leave));
                    if r < leave {
                        (&hi[0], &mut lo[r])
                    } else {
                        (&lo[leave], &mut hi[0])
                    }
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= f * s;
                }
            }
        }
        basis[leave] = enter;
    }
    Err(QsvError::SimplexViolation("simplex pivot cap exceeded".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn check_equilibrium(q: &[Vec<f64>], sol: &GameSolution, tol: f64) {
        // Column player guarantees max_j (Q p)_j <= value.
        for row in q {
            let payoff: f64 = row.iter().zip(&sol.p).map(|(a, b)| a * b).sum();
            assert!(payoff <= sol.value + tol, "row payoff {payoff} > {}", sol.value);
        }
        // Row player guarantees min_m (Q^T mu)_m >= value.
        for m in 0..q[0].len() {
            let payoff: f64 = q.iter().zip(&sol.mu).map(|(r, &u)| r[m] * u).sum();
            assert!(payoff >= sol.value - tol, "col payoff {payoff} < {}", sol.value);
        }
    }

    #[test]
    fn matching_pennies() {
        let q = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let sol = solve_matrix_game(&q).unwrap();
        assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.mu[0], 0.5, epsilon = 1e-12);
        check_equilibrium(&q, &sol, 1e-10);
    }

    #[test]
    fn dominant_column() {
        // Column 1 is strictly better for the minimizer everywhere.
        let q = vec![vec![0.9, 0.2], vec![0.8, 0.3]];
        let sol = solve_matrix_game(&q).unwrap();
        assert_abs_diff_eq!(sol.value, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.p[1], 1.0, epsilon = 1e-12);
        check_equilibrium(&q, &sol, 1e-10);
    }

    #[test]
    fn ghz_like_two_test_game() {
        // Two projector-style tests seen by two witnesses; the optimum mixes
        // them equally with value 1/2.
        let q = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let sol = solve_matrix_game(&q).unwrap();
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.p[0], 0.5, epsilon = 1e-12);
        check_equilibrium(&q, &sol, 1e-10);
    }

    #[test]
    fn rectangular_games_match_grid_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows = rng.gen_range(1..5);
            let q: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..2).map(|_| rng.gen_range(0.0..1.0)).collect())
                .collect();
            let sol = solve_matrix_game(&q).unwrap();
            check_equilibrium(&q, &sol, 1e-9);
            // Two columns: dense grid search over p = (t, 1-t).
            let mut best = f64::INFINITY;
            for i in 0..=2000 {
                let p0 = i as f64 / 2000.0;
                let worst = q
                    .iter()
                    .map(|r| r[0] * p0 + r[1] * (1.0 - p0))
                    .fold(f64::NEG_INFINITY, f64::max);
                best = best.min(worst);
            }
            // The grid has resolution 5e-4, so only compare to that scale.
            assert_abs_diff_eq!(sol.value, best, epsilon = 5e-4);
            assert!(sol.value <= best + 1e-9);
        }
    }

    #[test]
    fn strategies_lie_on_simplex() {
        let q = vec![vec![0.3, 0.7, 0.1], vec![0.6, 0.2, 0.9], vec![0.5, 0.5, 0.4]];
        let sol = solve_matrix_game(&q).unwrap();
        assert_abs_diff_eq!(sol.p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.mu.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(sol.p.iter().all(|&x| x >= 0.0));
        assert!(sol.mu.iter().all(|&x| x >= 0.0));
        check_equilibrium(&q, &sol, 1e-10);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(solve_matrix_game(&[]).is_err());
        assert!(solve_matrix_game(&[vec![1.0], vec![]]).is_err());
        assert!(solve_matrix_game(&[vec![f64::NAN]]).is_err());
    }
}
