//! Linear orders over alternatives and the per-`m` lookup tables.
//!
//! Alternatives are 1-based indices `1..=m`, rankings are stored
//! most-preferred first, matching the bracket notation `[1234]` for
//! `1 ≻ 2 ≻ 3 ≻ 4`. The global enumeration order of the `m!` rankings is
//! lexicographic on the order sequence; every histogram in this crate is
//! indexed by that order.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Maximum number of alternatives supported by histogram-indexed code paths
/// (`8! = 40320` count slots).
pub const MAX_ALTERNATIVES: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RankingError {
    #[error("rankings have mismatched alternative counts: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid alternative index {alt} for m={m}")]
    InvalidAlternative { alt: u8, m: usize },
    #[error("sequence is not a permutation of 1..={m}")]
    NotAPermutation { m: usize },
    #[error("m={0} is out of the supported range 1..={MAX_ALTERNATIVES}")]
    UnsupportedM(usize),
    #[error("cannot parse ranking from {0:?}")]
    Parse(String),
}

/// A strict total order over `m` alternatives, most-preferred first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    order: Vec<u8>,
}

impl Ranking {
    /// Builds a ranking from a most-preferred-first sequence, validating that
    /// it is a permutation of `1..=m`.
    pub fn new(order: Vec<u8>) -> Result<Self, RankingError> {
        let m = order.len();
        if m == 0 || m > MAX_ALTERNATIVES {
            return Err(RankingError::UnsupportedM(m));
        }
        let mut seen = [false; MAX_ALTERNATIVES + 1];
        for &a in &order {
            if a == 0 || a as usize > m {
                return Err(RankingError::InvalidAlternative { alt: a, m });
            }
            if seen[a as usize] {
                return Err(RankingError::NotAPermutation { m });
            }
            seen[a as usize] = true;
        }
        Ok(Ranking { order })
    }

    /// Shorthand used all over the tests: `Ranking::from_slice(&[2,3,1])`.
    pub fn from_slice(order: &[u8]) -> Self {
        Ranking::new(order.to_vec()).expect("valid ranking literal")
    }

    pub fn m(&self) -> usize {
        self.order.len()
    }

    /// Most-preferred-first sequence.
    pub fn order(&self) -> &[u8] {
        &self.order
    }

    pub fn top(&self) -> u8 {
        self.order[0]
    }

    pub fn last(&self) -> u8 {
        *self.order.last().unwrap()
    }

    /// Position of alternative `a`, 0 = most preferred.
    pub fn position(&self, a: u8) -> usize {
        self.order.iter().position(|&x| x == a).expect("alternative in ranking")
    }

    /// True iff `a` is preferred to `b`.
    pub fn prefers(&self, a: u8, b: u8) -> bool {
        self.position(a) < self.position(b)
    }

    /// The reverse ranking: least-preferred becomes most-preferred.
    pub fn reversed(&self) -> Ranking {
        let mut order = self.order.clone();
        order.reverse();
        Ranking { order }
    }

    /// Parses `"1>2>3"`.
    pub fn parse(s: &str) -> Result<Self, RankingError> {
        let order: Result<Vec<u8>, _> = s
            .split('>')
            .map(|t| t.trim().parse::<u8>().map_err(|_| RankingError::Parse(s.to_string())))
            .collect();
        Ranking::new(order?)
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in &self.order {
            if !first {
                write!(f, ">")?;
            }
            write!(f, "{a}")?;
            first = false;
        }
        Ok(())
    }
}

// Rankings read better as [2>3>1] than as a struct dump in test output.
impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// Kendall tau distance: the number of unordered pairs ranked oppositely.
///
/// Symmetric, between 0 and `m(m-1)/2`.
pub fn kendall_tau(r: &Ranking, w: &Ranking) -> Result<u32, RankingError> {
    if r.m() != w.m() {
        return Err(RankingError::DimensionMismatch(r.m(), w.m()));
    }
    let m = r.m();
    let mut count = 0u32;
    for i in 0..m {
        for j in (i + 1)..m {
            let (a, b) = (r.order[i], r.order[j]);
            // r prefers a to b; discordant iff w prefers b to a.
            if w.prefers(b, a) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// True iff the position of `a` is weakly raised from `r1` to `r2`: the set of
/// alternatives `a` beats in `r1` is a subset of the set it beats in `r2`.
/// The inclusion does not need to be strict.
pub fn raises(r1: &Ranking, r2: &Ranking, a: u8) -> Result<bool, RankingError> {
    if r1.m() != r2.m() {
        return Err(RankingError::DimensionMismatch(r1.m(), r2.m()));
    }
    if a == 0 || a as usize > r1.m() {
        return Err(RankingError::InvalidAlternative { alt: a, m: r1.m() });
    }
    for b in 1..=r1.m() as u8 {
        if b != a && r1.prefers(a, b) && !r2.prefers(a, b) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Precomputed per-`m` data shared by every histogram-indexed code path:
/// the lexicographic enumeration of all `m!` rankings, reverse indices,
/// pairwise comparison signs and positional score vectors.
pub struct RankingTable {
    m: usize,
    fact: usize,
    rankings: Vec<Ranking>,
    reverse: Vec<u32>,
    /// `pair_sign[r * pair_count + pair(a,b)] = +1` iff ranking `r` prefers
    /// `a` to `b` (pairs enumerated `a < b`).
    pair_sign: Vec<i8>,
    /// `positions[r][a-1]` = position of alternative `a` in ranking `r`.
    positions: Vec<[u8; MAX_ALTERNATIVES]>,
    tops: Vec<u8>,
    lasts: Vec<u8>,
}

impl RankingTable {
    /// The shared table for `m` alternatives. Built once per process.
    pub fn get(m: usize) -> &'static RankingTable {
        static TABLES: OnceLock<Vec<OnceLock<RankingTable>>> = OnceLock::new();
        assert!(
            (1..=MAX_ALTERNATIVES).contains(&m),
            "m={m} outside supported range 1..={MAX_ALTERNATIVES}"
        );
        let all = TABLES.get_or_init(|| (0..=MAX_ALTERNATIVES).map(|_| OnceLock::new()).collect());
        all[m].get_or_init(|| RankingTable::build(m))
    }

    fn build(m: usize) -> RankingTable {
        let fact: usize = (1..=m).product();
        let mut rankings = Vec::with_capacity(fact);
        let mut current: Vec<u8> = (1..=m as u8).collect();
        // Lexicographic enumeration via repeated next-permutation.
        loop {
            rankings.push(Ranking { order: current.clone() });
            if !next_permutation(&mut current) {
                break;
            }
        }
        debug_assert_eq!(rankings.len(), fact);

        let pair_count = m * (m - 1) / 2;
        let mut pair_sign = vec![0i8; fact * pair_count];
        let mut positions = vec![[0u8; MAX_ALTERNATIVES]; fact];
        let mut reverse = vec![0u32; fact];
        let mut tops = vec![0u8; fact];
        let mut lasts = vec![0u8; fact];
        for (idx, r) in rankings.iter().enumerate() {
            for (pos, &a) in r.order.iter().enumerate() {
                positions[idx][a as usize - 1] = pos as u8;
            }
            tops[idx] = r.top();
            lasts[idx] = r.last();
            let mut p = 0;
            for a in 1..=m as u8 {
                for b in (a + 1)..=m as u8 {
                    pair_sign[idx * pair_count + p] =
                        if positions[idx][a as usize - 1] < positions[idx][b as usize - 1] {
                            1
                        } else {
                            -1
                        };
                    p += 1;
                }
            }
        }
        // Reverse indices via a second pass (lexicographic rank of reversal).
        let index_of = |r: &Ranking| -> u32 { lex_rank(&r.order) as u32 };
        for (idx, r) in rankings.iter().enumerate() {
            reverse[idx] = index_of(&r.reversed());
        }
        RankingTable { m, fact, rankings, reverse, pair_sign, positions, tops, lasts }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `m!`.
    pub fn count(&self) -> usize {
        self.fact
    }

    pub fn pair_count(&self) -> usize {
        self.m * (self.m - 1) / 2
    }

    pub fn ranking(&self, idx: usize) -> &Ranking {
        &self.rankings[idx]
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    /// Lexicographic index of a ranking.
    pub fn index_of(&self, r: &Ranking) -> usize {
        debug_assert_eq!(r.m(), self.m);
        lex_rank(&r.order)
    }

    /// Index of the reverse of ranking `idx`.
    pub fn reverse_of(&self, idx: usize) -> usize {
        self.reverse[idx] as usize
    }

    pub fn top_of(&self, idx: usize) -> u8 {
        self.tops[idx]
    }

    pub fn last_of(&self, idx: usize) -> u8 {
        self.lasts[idx]
    }

    pub fn position(&self, idx: usize, a: u8) -> usize {
        self.positions[idx][a as usize - 1] as usize
    }

    pub fn prefers(&self, idx: usize, a: u8, b: u8) -> bool {
        self.positions[idx][a as usize - 1] < self.positions[idx][b as usize - 1]
    }

    /// Flat pair index for `a < b`.
    pub fn pair_index(&self, a: u8, b: u8) -> usize {
        debug_assert!(a < b);
        let (a, b, m) = (a as usize - 1, b as usize - 1, self.m);
        // offset of row a in the upper-triangular enumeration
        a * m - a * (a + 1) / 2 + (b - a - 1)
    }

    /// +1 iff ranking `idx` prefers `a` to `b` (for `a < b`), else -1.
    pub fn pair_sign(&self, idx: usize, pair: usize) -> i8 {
        self.pair_sign[idx * self.pair_count() + pair]
    }

    /// Signed comparison row of a ranking over all pairs `a < b`.
    pub fn pair_signs(&self, idx: usize) -> &[i8] {
        let pc = self.pair_count();
        &self.pair_sign[idx * pc..(idx + 1) * pc]
    }
}

/// Lexicographic rank of a permutation of `1..=m` (Lehmer code).
fn lex_rank(order: &[u8]) -> usize {
    let m = order.len();
    let mut rank = 0usize;
    for i in 0..m {
        let smaller_later =
            order[i + 1..].iter().filter(|&&x| x < order[i]).count();
        rank = rank * (m - i) + smaller_later;
    }
    rank
}

fn next_permutation(arr: &mut [u8]) -> bool {
    let n = arr.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && arr[i - 1] >= arr[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while arr[j] <= arr[i - 1] {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &[u8]) -> Ranking {
        Ranking::from_slice(s)
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![1, 2, 3]).is_ok());
        assert_eq!(Ranking::new(vec![1, 1, 3]), Err(RankingError::NotAPermutation { m: 3 }));
        assert_eq!(
            Ranking::new(vec![1, 2, 4]),
            Err(RankingError::InvalidAlternative { alt: 4, m: 3 })
        );
        assert!(Ranking::new(vec![]).is_err());
    }

    #[test]
    fn reverse_is_involution() {
        let x = r(&[2, 4, 3, 1]);
        assert_eq!(x.reversed().reversed(), x);
        assert_eq!(x.reversed(), r(&[1, 3, 4, 2]));
    }

    #[test]
    fn kendall_tau_identity_and_reversal() {
        for m in 1..=5usize {
            let table = RankingTable::get(m);
            let x = table.ranking(table.count() / 2).clone();
            assert_eq!(kendall_tau(&x, &x).unwrap(), 0);
            assert_eq!(
                kendall_tau(&x, &x.reversed()).unwrap() as usize,
                m * (m - 1) / 2
            );
        }
    }

    #[test]
    fn kendall_tau_single_swap() {
        // The 3 pairs of {1,2,3}: only (1,2) is discordant.
        assert_eq!(kendall_tau(&r(&[1, 2, 3]), &r(&[2, 1, 3])).unwrap(), 1);
        assert_eq!(kendall_tau(&r(&[2, 1, 3]), &r(&[1, 2, 3])).unwrap(), 1);
    }

    #[test]
    fn kendall_tau_dimension_error() {
        assert!(kendall_tau(&r(&[1, 2, 3]), &r(&[1, 2])).is_err());
    }

    #[test]
    fn raises_examples() {
        // Reflexive.
        let x = r(&[2, 3, 1]);
        assert!(raises(&x, &x, 1).unwrap());
        // 1 is last in both [231] and [321]: beaten set empty in both.
        assert!(raises(&r(&[2, 3, 1]), &r(&[3, 2, 1]), 1).unwrap());
        // Beaten set of 1 shrinks from {2,3} to {}: not a raise.
        assert!(!raises(&r(&[1, 2, 3]), &r(&[2, 3, 1]), 1).unwrap());
        assert!(raises(&r(&[1, 2, 3]), &r(&[1, 2, 3]), 9).is_err());
    }

    #[test]
    fn table_lexicographic_order_m3() {
        let t = RankingTable::get(3);
        let expected = [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ];
        assert_eq!(t.count(), 6);
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(t.ranking(i).order(), e);
            assert_eq!(t.index_of(t.ranking(i)), i);
        }
        // reverse of [123] (index 0) is [321] (index 5)
        assert_eq!(t.reverse_of(0), 5);
        // rev([213]) = [312], which sits at index 4
        assert_eq!(t.reverse_of(2), 4);
    }

    #[test]
    fn table_reverse_indices() {
        for m in 2..=5 {
            let t = RankingTable::get(m);
            for i in 0..t.count() {
                let rev = t.ranking(t.reverse_of(i));
                assert_eq!(*rev, t.ranking(i).reversed());
                assert_eq!(t.reverse_of(t.reverse_of(i)), i);
            }
        }
    }

    #[test]
    fn pair_indexing_roundtrip() {
        let t = RankingTable::get(4);
        let mut seen = vec![false; t.pair_count()];
        for a in 1..=4u8 {
            for b in (a + 1)..=4u8 {
                let p = t.pair_index(a, b);
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
        assert!(seen.iter().all(|&x| x));
        // [2431] prefers 2 to 4 and 4 to 1.
        let idx = t.index_of(&r(&[2, 4, 3, 1]));
        assert_eq!(t.pair_sign(idx, t.pair_index(2, 4)), 1);
        assert_eq!(t.pair_sign(idx, t.pair_index(1, 4)), -1);
    }

    proptest! {
        #[test]
        fn kt_symmetric_and_bounded(a in 0usize..24, b in 0usize..24) {
            let t = RankingTable::get(4);
            let (x, y) = (t.ranking(a), t.ranking(b));
            let d1 = kendall_tau(x, y).unwrap();
            let d2 = kendall_tau(y, x).unwrap();
            prop_assert_eq!(d1, d2);
            prop_assert!(d1 <= 6);
        }

        #[test]
        fn raises_transitive_m4(a in 0usize..24, b in 0usize..24, c in 0usize..24, alt in 1u8..=4) {
            let t = RankingTable::get(4);
            let (x, y, z) = (t.ranking(a), t.ranking(b), t.ranking(c));
            if raises(x, y, alt).unwrap() && raises(y, z, alt).unwrap() {
                prop_assert!(raises(x, z, alt).unwrap());
            }
        }
    }
}
