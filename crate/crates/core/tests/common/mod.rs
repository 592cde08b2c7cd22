#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ucbmg::lp::{LinearProgram, Relation};
use ucbmg::market::{MarketInstance, Matching, StrategyProfile};
use ucbmg::zerosum::{MixedStrategy, PayoffMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One left agent; pennies with the first right agent, a dominant-row game with the second.
pub fn example_market() -> MarketInstance {
    let g1 = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let g2 = PayoffMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
    MarketInstance::new(vec![vec![g1, g2]], vec![-1.0], vec![-1.0, -1.0]).unwrap()
}

pub fn uniform_game(rng: &mut ChaCha8Rng, m: usize, k: usize) -> PayoffMatrix {
    let entries = (0..m * k).map(|_| rng.random_range(-1.0..=1.0)).collect();
    PayoffMatrix::new(m, k, entries).unwrap()
}

pub fn random_strategy(rng: &mut ChaCha8Rng, n: usize) -> MixedStrategy {
    // sometimes pure, sometimes with a zero, otherwise fully mixed
    match rng.random_range(0..4) {
        0 => MixedStrategy::pure(n, rng.random_range(0..n)),
        _ => {
            let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            if n > 1 && rng.random_bool(0.3) {
                w[rng.random_range(0..n)] = 0.0;
            }
            let s: f64 = w.iter().sum();
            if s == 0.0 {
                return MixedStrategy::uniform(n);
            }
            let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
            let fix: f64 = 1.0 - p.iter().sum::<f64>();
            let last = p.iter().rposition(|v| *v > 0.0).unwrap();
            p[last] += fix;
            MixedStrategy::new(p).unwrap()
        }
    }
}

pub fn random_matching(rng: &mut ChaCha8Rng, p: usize, a: usize) -> Matching {
    let mut rights: Vec<usize> = (0..a).collect();
    rights.shuffle(rng);
    let pairs: Vec<(usize, usize)> = (0..p)
        .zip(rights)
        .filter(|_| rng.random_bool(0.75))
        .collect();
    Matching::from_pairs(p, a, pairs).unwrap()
}

pub fn random_strategies(
    rng: &mut ChaCha8Rng,
    instance: &MarketInstance,
    matching: &Matching,
) -> StrategyProfile {
    let mut s = StrategyProfile::empty(instance.left_count(), instance.right_count());
    for (l, r) in matching.pairs() {
        s.left[l] = Some(random_strategy(rng, instance.left_actions()));
        s.right[r] = Some(random_strategy(rng, instance.right_actions()));
    }
    s
}

/// Gaussian elimination with partial pivoting; `None` when (numerically) singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of a bounded LP with non-negative variables by enumerating basic solutions:
/// every choice of `n` linearly independent tight hyperplanes (constraints or `x_j = 0`),
/// kept when it satisfies every row. `None` when no vertex is feasible.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraint_matrix
        .iter()
        .cloned()
        .zip(lp.constraint_rhs.iter().copied())
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    for subset in combinations(planes.len(), n) {
        let a = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b = subset.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_linear(a, b) else { continue };
        if x.iter().any(|v| *v < -1e-9) || !satisfies_rows(lp, &x, 1e-9) {
            continue;
        }
        let value: f64 = x.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
        best = Some(best.map_or(value, |b: f64| b.min(value)));
    }
    best
}

/// Row-wise check of `A x (relation) b` within `tol`.
pub fn satisfies_rows(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    (0..lp.constraint_matrix.len()).all(|i| {
        let lhs: f64 = lp.constraint_matrix[i].iter().zip(x).map(|(a, v)| a * v).sum();
        let b = lp.constraint_rhs[i];
        match lp.constraint_kinds[i] {
            Relation::LessEq => lhs <= b + tol,
            Relation::GreaterEq => lhs >= b - tol,
            Relation::Eq => (lhs - b).abs() <= tol,
        }
    })
}
