use std::collections::VecDeque;

use super::{Matching, PreferenceProfile, Side};

/// Deferred acceptance with `proposing_side` proposing down its (truncated) lists.
///
/// A receiver only ever holds proposers that appear on its own list, so the result is
/// individually rational for both sides and proposer-optimal among stable matchings.
pub fn deferred_acceptance(prefs: &PreferenceProfile, proposing_side: Side) -> Matching {
    let (proposer_lists, receiver_lists) = match proposing_side {
        Side::Left => (&prefs.left, &prefs.right),
        Side::Right => (&prefs.right, &prefs.left),
    };
    let proposers = proposer_lists.len();
    let receivers = receiver_lists.len();

    // rank[r][q]: position of proposer q on receiver r's list, None if unacceptable.
    let rank: Vec<Vec<Option<usize>>> = receiver_lists
        .iter()
        .map(|list| {
            let mut pos = vec![None; proposers];
            for (rank, &q) in list.iter().enumerate() {
                if q < proposers {
                    pos[q] = Some(rank);
                }
            }
            pos
        })
        .collect();

    let mut next_choice = vec![0usize; proposers];
    let mut held: Vec<Option<usize>> = vec![None; receivers];
    let mut free: VecDeque<usize> = (0..proposers).collect();

    while let Some(q) = free.pop_front() {
        let Some(&r) = proposer_lists[q].get(next_choice[q]) else {
            continue;
        };
        next_choice[q] += 1;
        let Some(q_rank) = rank[r][q] else {
            free.push_back(q);
            continue;
        };
        match held[r] {
            None => held[r] = Some(q),
            Some(current) => {
                // current is acceptable, otherwise it would never have been held
                let current_rank = rank[r][current].unwrap_or(usize::MAX);
                if q_rank < current_rank {
                    held[r] = Some(q);
                    free.push_back(current);
                } else {
                    free.push_back(q);
                }
            }
        }
    }

    let pairs = held
        .iter()
        .enumerate()
        .filter_map(|(r, q)| q.map(|q| (q, r)));
    let (left_count, right_count) = (prefs.left.len(), prefs.right.len());
    let pairs: Vec<(usize, usize)> = match proposing_side {
        Side::Left => pairs.collect(),
        Side::Right => pairs.map(|(q, r)| (r, q)).collect(),
    };
    Matching::from_pairs(left_count, right_count, pairs)
        .expect("deferred acceptance holds at most one proposer per receiver")
}
