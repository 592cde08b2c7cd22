use super::{ActivePair, Binding, InstabilityReport, SubsidyVector, FEASIBILITY_TOL};
use crate::market::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FloorTerm {
    None,
    IndividualRationality,
    NashValue,
}

/// Gaps of a pair outside the matching: how far each member is below the pair's
/// utility at zero subsidy.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CrossGap {
    pub left: usize,
    pub right: usize,
    pub left_gap: f64,
    pub right_gap: f64,
}

/// `min Σ s` subject to `s ≥ floor` per agent and, for every cross pair,
/// `s_l ≥ g_l` or `s_r ≥ g_r`.
pub(crate) struct CoverProgram {
    pub left_floor: Vec<(f64, FloorTerm)>,
    pub right_floor: Vec<(f64, FloorTerm)>,
    pub cross: Vec<CrossGap>,
}

struct Search<'a> {
    active: &'a [CrossGap],
    left: Vec<f64>,
    right: Vec<f64>,
    best_total: f64,
    best: Option<(Vec<f64>, Vec<f64>)>,
}

fn satisfied(gap: f64, subsidy: f64) -> bool {
    gap <= subsidy + FEASIBILITY_TOL
}

impl Search<'_> {
    fn run(&mut self, idx: usize, total: f64) {
        if total >= self.best_total {
            return;
        }
        let Some(pair) = self.active.get(idx) else {
            self.best_total = total;
            self.best = Some((self.left.clone(), self.right.clone()));
            return;
        };
        let (l, r) = (pair.left, pair.right);
        if satisfied(pair.left_gap, self.left[l]) || satisfied(pair.right_gap, self.right[r]) {
            self.run(idx + 1, total);
            return;
        }
        let old = self.left[l];
        self.left[l] = pair.left_gap;
        self.run(idx + 1, total + pair.left_gap - old);
        self.left[l] = old;

        let old = self.right[r];
        self.right[r] = pair.right_gap;
        self.run(idx + 1, total + pair.right_gap - old);
        self.right[r] = old;
    }
}

impl CoverProgram {
    pub fn solve(self) -> InstabilityReport {
        let left: Vec<f64> = self.left_floor.iter().map(|f| f.0).collect();
        let right: Vec<f64> = self.right_floor.iter().map(|f| f.0).collect();
        let active: Vec<CrossGap> = self
            .cross
            .iter()
            .filter(|c| !satisfied(c.left_gap, left[c.left]) && !satisfied(c.right_gap, right[c.right]))
            .copied()
            .collect();
        let floor_total: f64 = left.iter().chain(&right).sum();
        let mut search = Search {
            active: &active,
            left,
            right,
            best_total: f64::INFINITY,
            best: None,
        };
        search.run(0, floor_total);
        let (left, right) = search.best.expect("raising every agent always covers");

        let active_pairs = active
            .iter()
            .map(|c| ActivePair {
                left: c.left,
                right: c.right,
                left_gap: c.left_gap,
                right_gap: c.right_gap,
                covered_by: if satisfied(c.left_gap, left[c.left]) {
                    Side::Left
                } else {
                    Side::Right
                },
            })
            .collect();
        let binding = |s: &[f64], floors: &[(f64, FloorTerm)]| -> Vec<Binding> {
            s.iter()
                .zip(floors)
                .map(|(&s, &(floor, term))| {
                    if s <= 0.0 {
                        Binding::None
                    } else if s > floor + FEASIBILITY_TOL {
                        Binding::BlockingCover
                    } else {
                        match term {
                            FloorTerm::None => Binding::None,
                            FloorTerm::IndividualRationality => Binding::IndividualRationality,
                            FloorTerm::NashValue => Binding::NashValue,
                        }
                    }
                })
                .collect()
        };
        let left_binding = binding(&left, &self.left_floor);
        let right_binding = binding(&right, &self.right_floor);
        let total = left.iter().chain(&right).sum();
        InstabilityReport {
            value: total,
            subsidies: SubsidyVector { left, right, total },
            active_pairs,
            left_binding,
            right_binding,
        }
    }
}
