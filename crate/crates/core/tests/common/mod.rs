//! Independent dense oracles shared by the integration tests. Nothing here
//! calls the solvers under test.
#![allow(dead_code)]

use conlab::StochasticMatrix;
use rand::Rng;

/// Random row-stochastic matrix: each row keeps each column with probability
/// `density` (at least one entry) and gets random positive weights.
pub fn random_stochastic(rng: &mut impl Rng, n: usize, density: f64) -> StochasticMatrix {
    let rows = (0..n)
        .map(|_| {
            let mut cols: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < density).collect();
            if cols.is_empty() {
                cols.push(rng.random_range(0..n));
            }
            let w: Vec<f64> = cols.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            cols.into_iter().zip(w).map(|(c, x)| (c, x / s)).collect()
        })
        .collect();
    StochasticMatrix::from_rows(n, rows).expect("random matrix is stochastic")
}

/// Random irreducible chain: a random Hamiltonian cycle plus random extra
/// edges, so every state reaches every other.
pub fn random_irreducible(rng: &mut impl Rng, n: usize, extra: f64) -> StochasticMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut succ = vec![0; n];
    for k in 0..n {
        succ[perm[k]] = perm[(k + 1) % n];
    }
    let rows = (0..n)
        .map(|i| {
            let mut cols: Vec<usize> = (0..n).filter(|&j| j == succ[i] || rng.random::<f64>() < extra).collect();
            cols.dedup();
            let w: Vec<f64> = cols.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            cols.into_iter().zip(w).map(|(c, x)| (c, x / s)).collect()
        })
        .collect();
    StochasticMatrix::from_rows(n, rows).expect("random matrix is stochastic")
}

pub fn support(p: &StochasticMatrix) -> Vec<Vec<bool>> {
    p.to_dense().iter().map(|r| r.iter().map(|&x| x > 0.0).collect()).collect()
}

/// Reflexive-transitive closure by Warshall's algorithm.
pub fn closure(a: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut r = a.to_vec();
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

pub fn brute_irreducible(p: &StochasticMatrix) -> bool {
    closure(&support(p)).iter().all(|row| row.iter().all(|&x| x))
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Every class that carries a cycle has period one. The period of a class
/// is the gcd of the lengths `k ≤ |class|` of its closed walks, since every
/// simple cycle is that short.
pub fn brute_aperiodic(p: &StochasticMatrix) -> bool {
    let a = support(p);
    let n = a.len();
    let reach = closure(&a);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&t| reach[s][t] && reach[t][s]).collect();
        for &t in &class {
            seen[t] = true;
        }
        let sub: Vec<Vec<bool>> = class.iter().map(|&i| class.iter().map(|&j| a[i][j]).collect()).collect();
        let mut power = sub.clone();
        let mut period = 0;
        for k in 1..=class.len() {
            if (0..class.len()).any(|i| power[i][i]) {
                period = gcd(period, k);
            }
            power = bool_mul(&power, &sub);
        }
        if period > 1 {
            return false;
        }
    }
    true
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] != 0.0 {
                for j in 0..m {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

/// Stationary vector as a row of `((P + I)/2)^(2^60)`.
pub fn stationary_by_squaring(p: &StochasticMatrix) -> Vec<f64> {
    let mut m = p.to_dense();
    for (i, row) in m.iter_mut().enumerate() {
        for x in row.iter_mut() {
            *x *= 0.5;
        }
        row[i] += 0.5;
    }
    for _ in 0..60 {
        m = mat_mul(&m, &m);
    }
    let row = m[0].clone();
    let s: f64 = row.iter().sum();
    row.into_iter().map(|x| x / s).collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `E_i(τ_S)` from the dense system `(I − Q)h = 1` over the complement of
/// `S`. Assumes `S` is hit almost surely from everywhere.
pub fn dense_hitting(p: &StochasticMatrix, targets: &[usize]) -> Vec<f64> {
    let d = p.to_dense();
    let free: Vec<usize> = (0..d.len()).filter(|i| !targets.contains(i)).collect();
    let a: Vec<Vec<f64>> = free
        .iter()
        .map(|&i| free.iter().map(|&j| if i == j { 1.0 } else { 0.0 } - d[i][j]).collect())
        .collect();
    let h = dense_solve(a, vec![1.0; free.len()]);
    let mut out = vec![0.0; d.len()];
    for (k, &i) in free.iter().enumerate() {
        out[i] = h[k];
    }
    out
}

/// `π_i = r^{i−1}(1 − r)/(1 − r^n)` with `r = δ/(1 − δ)`.
pub fn drift_line_pi(n: usize, delta: f64) -> Vec<f64> {
    let r = delta / (1.0 - delta);
    (0..n)
        .map(|i| r.powi(i as i32) * (1.0 - r) / (1.0 - r.powi(n as i32)))
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
