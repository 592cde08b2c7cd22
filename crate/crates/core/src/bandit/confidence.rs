use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketInstance;
use crate::zerosum::PayoffMatrix;

/// Play counts and empirical means for every pair and action pair, in the left
/// agent's sign convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceState {
    left_count: usize,
    right_count: usize,
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    means: Vec<f64>,
    delta: f64,
}

impl ConfidenceState {
    pub fn new(
        left_count: usize,
        right_count: usize,
        rows: usize,
        cols: usize,
        delta: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Input(format!("delta must lie in (0, 1), got {delta}")));
        }
        let cells = left_count * right_count * rows * cols;
        Ok(ConfidenceState {
            left_count,
            right_count,
            rows,
            cols,
            counts: vec![0; cells],
            means: vec![0.0; cells],
            delta,
        })
    }

    pub fn for_instance(instance: &MarketInstance, delta: f64) -> Result<Self> {
        Self::new(
            instance.left_count(),
            instance.right_count(),
            instance.left_actions(),
            instance.right_actions(),
            delta,
        )
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn cell(&self, l: usize, r: usize, i: usize, j: usize) -> usize {
        assert!(l < self.left_count && r < self.right_count && i < self.rows && j < self.cols);
        ((l * self.right_count + r) * self.rows + i) * self.cols + j
    }

    pub fn count(&self, l: usize, r: usize, i: usize, j: usize) -> u64 {
        self.counts[self.cell(l, r, i, j)]
    }

    pub fn mean(&self, l: usize, r: usize, i: usize, j: usize) -> f64 {
        self.means[self.cell(l, r, i, j)]
    }

    /// `sqrt(2 ln(1/δ) / max(1, n))`
    pub fn width(&self, l: usize, r: usize, i: usize, j: usize) -> f64 {
        let n = self.count(l, r, i, j).max(1) as f64;
        (2.0 * (1.0 / self.delta).ln() / n).sqrt()
    }

    /// Records one reward, as seen by the left agent, for actions `(i, j)`.
    pub fn observe(&mut self, l: usize, r: usize, i: usize, j: usize, reward: f64) {
        let c = self.cell(l, r, i, j);
        self.counts[c] += 1;
        self.means[c] += (reward - self.means[c]) / self.counts[c] as f64;
    }

    fn left_view(&self, l: usize, r: usize, f: impl Fn(f64, f64) -> f64) -> PayoffMatrix {
        PayoffMatrix::from_fn(self.rows, self.cols, |i, j| {
            f(self.mean(l, r, i, j), self.width(l, r, i, j))
        })
        .expect("finite by construction")
    }

    fn right_view(&self, l: usize, r: usize, f: impl Fn(f64, f64) -> f64) -> PayoffMatrix {
        PayoffMatrix::from_fn(self.cols, self.rows, |j, i| {
            f(-self.mean(l, r, i, j), self.width(l, r, i, j))
        })
        .expect("finite by construction")
    }

    /// `Â_{l,r}`
    pub fn empirical_matrix(&self, l: usize, r: usize) -> PayoffMatrix {
        self.left_view(l, r, |m, _| m)
    }

    /// The right agent's empirical view, `−Â_{l,r}ᵀ`.
    pub fn empirical_matrix_right(&self, l: usize, r: usize) -> PayoffMatrix {
        self.right_view(l, r, |m, _| m)
    }

    /// `Â + width` for the left agent.
    pub fn ucb_matrix(&self, l: usize, r: usize) -> PayoffMatrix {
        self.left_view(l, r, |m, w| m + w)
    }

    /// `−Âᵀ + width` for the right agent.
    pub fn ucb_matrix_right(&self, l: usize, r: usize) -> PayoffMatrix {
        self.right_view(l, r, |m, w| m + w)
    }

    pub fn lcb_matrix(&self, l: usize, r: usize) -> PayoffMatrix {
        self.left_view(l, r, |m, w| m - w)
    }

    pub fn lcb_matrix_right(&self, l: usize, r: usize) -> PayoffMatrix {
        self.right_view(l, r, |m, w| m - w)
    }

    /// Full interval width `2 · width`, left orientation.
    pub fn interval_width(&self, l: usize, r: usize) -> PayoffMatrix {
        self.left_view(l, r, |_, w| 2.0 * w)
    }

    /// Whether every true payoff lies inside its current confidence interval.
    pub fn contains(&self, instance: &MarketInstance) -> bool {
        (0..self.left_count).all(|l| {
            (0..self.right_count).all(|r| {
                let game = instance.game(l, r);
                (0..self.rows).all(|i| {
                    (0..self.cols).all(|j| {
                        let (m, w) = (self.mean(l, r, i, j), self.width(l, r, i, j));
                        let v = game.get(i, j);
                        m - w <= v && v <= m + w
                    })
                })
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_start_width() {
        let s = ConfidenceState::new(1, 1, 2, 2, 0.25).unwrap();
        let expected = (2.0 * 4f64.ln()).sqrt();
        assert!((expected - 1.665109).abs() < 1e-6);
        for v in s.ucb_matrix(0, 0).entries() {
            assert_eq!(*v, expected);
        }
        for v in s.lcb_matrix(0, 0).entries() {
            assert_eq!(*v, -expected);
        }
    }

    #[test]
    fn width_shrinks_with_counts() {
        let mut s = ConfidenceState::new(1, 1, 1, 1, 0.25).unwrap();
        for _ in 0..1_000_000 {
            s.observe(0, 0, 0, 0, 0.3);
        }
        assert!(s.width(0, 0, 0, 0) < 0.01);
        assert!((s.mean(0, 0, 0, 0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn running_average_and_views() {
        let mut s = ConfidenceState::new(1, 2, 2, 3, 0.1).unwrap();
        s.observe(0, 1, 1, 2, 1.0);
        s.observe(0, 1, 1, 2, 0.0);
        s.observe(0, 1, 1, 2, 0.5);
        assert_eq!(s.count(0, 1, 1, 2), 3);
        assert!((s.mean(0, 1, 1, 2) - 0.5).abs() < 1e-15);
        assert_eq!(s.count(0, 0, 1, 2), 0);

        let left = s.empirical_matrix(0, 1);
        let right = s.empirical_matrix_right(0, 1);
        assert_eq!(right, left.opponent_view());
        let (ucb, lcb, width) = (s.ucb_matrix_right(0, 1), s.lcb_matrix_right(0, 1), s.interval_width(0, 1));
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(ucb.get(j, i), -s.mean(0, 1, i, j) + s.width(0, 1, i, j));
                assert!((s.ucb_matrix(0, 1).get(i, j) - s.lcb_matrix(0, 1).get(i, j) - width.get(i, j)).abs() < 1e-15);
                assert!((ucb.get(j, i) - lcb.get(j, i) - width.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn containment_on_forced_means() {
        let g = PayoffMatrix::from_rows(&[vec![0.2]]).unwrap();
        let inst = MarketInstance::new(vec![vec![g]], vec![-1.0], vec![-1.0]).unwrap();
        let mut s = ConfidenceState::for_instance(&inst, 0.25).unwrap();
        for _ in 0..100 {
            s.observe(0, 0, 0, 0, 0.2);
        }
        assert!(s.contains(&inst));
        for _ in 0..100 {
            s.observe(0, 0, 0, 0, 1.2);
        }
        // mean 0.7, width ≈ 0.118
        assert!(!s.contains(&inst));
    }

    #[test]
    fn invalid_delta() {
        for d in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(ConfidenceState::new(1, 1, 1, 1, d), Err(Error::Input(_))));
        }
    }
}
