//! Weighted majority graphs and Condorcet winner detection.

use std::fmt;

use crate::profile::Histogram;
use crate::ranking::RankingTable;

/// Antisymmetric pairwise-margin matrix: `margin(a,b)` = (#votes preferring
/// `a` to `b`) − (#votes preferring `b` to `a`). Every entry has the parity
/// of `n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Wmg {
    m: usize,
    /// Full m×m matrix, row-major; diagonal zero.
    margin: Vec<i64>,
}

impl Wmg {
    pub fn from_histogram(h: &Histogram) -> Wmg {
        let m = h.m();
        let table = RankingTable::get(m);
        let pc = table.pair_count();
        let mut pair = vec![0i64; pc];
        for (idx, c) in h.support() {
            let signs = table.pair_signs(idx);
            let c = c as i64;
            for p in 0..pc {
                pair[p] += signs[p] as i64 * c;
            }
        }
        let mut margin = vec![0i64; m * m];
        for a in 1..=m as u8 {
            for b in (a + 1)..=m as u8 {
                let w = pair[table.pair_index(a, b)];
                margin[(a as usize - 1) * m + b as usize - 1] = w;
                margin[(b as usize - 1) * m + a as usize - 1] = -w;
            }
        }
        Wmg { m, margin }
    }

    pub fn zero(m: usize) -> Wmg {
        Wmg { m, margin: vec![0; m * m] }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn margin(&self, a: u8, b: u8) -> i64 {
        self.margin[(a as usize - 1) * self.m + b as usize - 1]
    }

    pub fn set_margin(&mut self, a: u8, b: u8, w: i64) {
        self.margin[(a as usize - 1) * self.m + b as usize - 1] = w;
        self.margin[(b as usize - 1) * self.m + a as usize - 1] = -w;
    }

    /// Adds `by` to `margin(a,b)` (and `-by` to the mirror entry).
    pub fn add_margin(&mut self, a: u8, b: u8, by: i64) {
        self.set_margin(a, b, self.margin(a, b) + by);
    }

    /// Adds the pairwise contribution of `count` votes of ranking `idx`.
    pub fn add_ranking(&mut self, table: &RankingTable, idx: usize, count: i64) {
        let signs = table.pair_signs(idx);
        let mut p = 0;
        for a in 1..=self.m as u8 {
            for b in (a + 1)..=self.m as u8 {
                self.add_margin(a, b, signs[p] as i64 * count);
                p += 1;
            }
        }
    }

    /// The unique alternative whose outgoing margins are all strictly
    /// positive, if one exists.
    pub fn condorcet_winner(&self) -> Option<u8> {
        'outer: for a in 1..=self.m as u8 {
            for b in 1..=self.m as u8 {
                if a != b && self.margin(a, b) <= 0 {
                    continue 'outer;
                }
            }
            return Some(a);
        }
        None
    }
}

impl fmt::Debug for Wmg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Wmg(m={})", self.m)?;
        for a in 1..=self.m as u8 {
            for b in (a + 1)..=self.m as u8 {
                let w = self.margin(a, b);
                if w != 0 {
                    writeln!(f, "  {}->{}: {}", if w > 0 { a } else { b }, if w > 0 { b } else { a }, w.abs())?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Histogram, Profile};
    use crate::ranking::Ranking;
    use proptest::prelude::*;

    #[test]
    fn unanimous_margins() {
        let h = Histogram::unanimous(&Ranking::from_slice(&[1, 2, 3]), 7);
        let g = Wmg::from_histogram(&h);
        assert_eq!(g.margin(1, 2), 7);
        assert_eq!(g.margin(1, 3), 7);
        assert_eq!(g.margin(2, 3), 7);
        assert_eq!(g.condorcet_winner(), Some(1));
    }

    #[test]
    fn uniform_histogram_all_zero() {
        let h = Histogram::uniform(4, 3);
        let g = Wmg::from_histogram(&h);
        for a in 1..=4 {
            for b in 1..=4 {
                if a != b {
                    assert_eq!(g.margin(a, b), 0);
                }
            }
        }
        assert_eq!(g.condorcet_winner(), None);
    }

    #[test]
    fn hand_counted_three_votes() {
        // {2x[123], 1x[231]}: margin(1,2)=1, margin(2,3)=3, margin(1,3)=1.
        let p = Profile::parse("1>2>3\n1>2>3\n2>3>1\n").unwrap();
        let g = Wmg::from_histogram(&p.histogram());
        assert_eq!(g.margin(1, 2), 1);
        assert_eq!(g.margin(2, 3), 3);
        assert_eq!(g.margin(1, 3), 1);
        assert_eq!(g.condorcet_winner(), Some(1));
    }

    #[test]
    fn perfect_cycle_has_no_winner() {
        let mut g = Wmg::zero(3);
        g.set_margin(1, 2, 5);
        g.set_margin(2, 3, 5);
        g.set_margin(3, 1, 5);
        assert_eq!(g.condorcet_winner(), None);
    }

    proptest! {
        /// Antisymmetry, n-parity of every entry, and uniqueness of the winner
        /// by exhaustive pairwise check.
        #[test]
        fn wmg_invariants(seed in proptest::collection::vec(0usize..24, 1..30)) {
            let t = RankingTable::get(4);
            let votes: Vec<Ranking> = seed.iter().map(|&i| t.ranking(i).clone()).collect();
            let n = votes.len() as i64;
            let h = Profile::new(votes).unwrap().histogram();
            let g = Wmg::from_histogram(&h);
            let mut winners = vec![];
            for a in 1..=4u8 {
                for b in 1..=4u8 {
                    if a == b {
                        prop_assert_eq!(g.margin(a, b), 0);
                    } else {
                        prop_assert_eq!(g.margin(a, b), -g.margin(b, a));
                        prop_assert_eq!((g.margin(a, b) - n).rem_euclid(2), 0);
                    }
                }
                if (1..=4u8).all(|b| b == a || g.margin(a, b) > 0) {
                    winners.push(a);
                }
            }
            prop_assert!(winners.len() <= 1);
            prop_assert_eq!(g.condorcet_winner(), winners.first().copied());
        }
    }
}
