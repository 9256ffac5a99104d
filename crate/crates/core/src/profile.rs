//! Profiles (ordered voter lists) and their anonymized histograms.
//!
//! Text formats:
//! - profile: one vote per line, `1>2>3>4`
//! - histogram: lines `count: 1>2>3>4`
//!
//! Blank lines and `#` comments are ignored in both.

use std::fmt;

use thiserror::Error;

use crate::ranking::{Ranking, RankingError, RankingTable};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile must contain at least one vote")]
    Empty,
    #[error("vote {0} has {1} alternatives, expected {2}")]
    MixedM(usize, usize, usize),
    #[error("line {line}: {source}")]
    BadRanking {
        line: usize,
        #[source]
        source: RankingError,
    },
    #[error("line {line}: cannot parse {text:?}")]
    BadLine { line: usize, text: String },
    #[error("line {line}: negative or malformed count")]
    BadCount { line: usize },
}

/// An ordered sequence of votes; voter index matters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    votes: Vec<Ranking>,
}

impl Profile {
    pub fn new(votes: Vec<Ranking>) -> Result<Self, ProfileError> {
        if votes.is_empty() {
            return Err(ProfileError::Empty);
        }
        let m = votes[0].m();
        for (i, v) in votes.iter().enumerate() {
            if v.m() != m {
                return Err(ProfileError::MixedM(i, v.m(), m));
            }
        }
        Ok(Profile { votes })
    }

    pub fn n(&self) -> usize {
        self.votes.len()
    }

    pub fn m(&self) -> usize {
        self.votes[0].m()
    }

    pub fn votes(&self) -> &[Ranking] {
        &self.votes
    }

    /// The anonymized count vector over all `m!` rankings.
    pub fn histogram(&self) -> Histogram {
        let table = RankingTable::get(self.m());
        let mut counts = vec![0u32; table.count()];
        for v in &self.votes {
            counts[table.index_of(v)] += 1;
        }
        Histogram { m: self.m(), counts }
    }

    /// Parses the one-vote-per-line text format.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut votes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let r = Ranking::parse(line)
                .map_err(|source| ProfileError::BadRanking { line: lineno + 1, source })?;
            votes.push(r);
        }
        Profile::new(votes)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.votes {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Anonymized profile: a nonnegative count per ranking type, indexed in the
/// global lexicographic ranking order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Histogram {
    m: usize,
    counts: Vec<u32>,
}

impl Histogram {
    pub fn new(m: usize, counts: Vec<u32>) -> Self {
        let table = RankingTable::get(m);
        assert_eq!(counts.len(), table.count(), "histogram length must be m!");
        Histogram { m, counts }
    }

    pub fn zero(m: usize) -> Self {
        Histogram { m, counts: vec![0; RankingTable::get(m).count()] }
    }

    /// Histogram with `count` votes on every ranking type.
    pub fn uniform(m: usize, count: u32) -> Self {
        Histogram { m, counts: vec![count; RankingTable::get(m).count()] }
    }

    /// Unanimous histogram: `n` copies of one ranking.
    pub fn unanimous(r: &Ranking, n: u32) -> Self {
        let table = RankingTable::get(r.m());
        let mut h = Histogram::zero(r.m());
        h.counts[table.index_of(r)] = n;
        h
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of voters.
    pub fn n(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, ranking_idx: usize) -> u32 {
        self.counts[ranking_idx]
    }

    pub fn count_mut(&mut self, ranking_idx: usize) -> &mut u32 {
        &mut self.counts[ranking_idx]
    }

    /// Ranking types present, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }

    /// Expands to the canonical profile: rankings in lexicographic order with
    /// multiplicities. Any profile with this histogram is a voter permutation
    /// of the result.
    pub fn canonical_profile(&self) -> Profile {
        let table = RankingTable::get(self.m);
        let mut votes = Vec::with_capacity(self.n() as usize);
        for (idx, &c) in self.counts.iter().enumerate() {
            for _ in 0..c {
                votes.push(table.ranking(idx).clone());
            }
        }
        Profile::new(votes).expect("nonempty histogram")
    }

    /// Parses the `count: 1>2>3` text format.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut entries: Vec<(u32, Ranking)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let (count_part, ranking_part) = line
                .split_once(':')
                .ok_or_else(|| ProfileError::BadLine { line: lineno + 1, text: line.to_string() })?;
            let count: u32 = count_part
                .trim()
                .parse()
                .map_err(|_| ProfileError::BadCount { line: lineno + 1 })?;
            let r = Ranking::parse(ranking_part.trim())
                .map_err(|source| ProfileError::BadRanking { line: lineno + 1, source })?;
            entries.push((count, r));
        }
        if entries.is_empty() {
            return Err(ProfileError::Empty);
        }
        let m = entries[0].1.m();
        let table = RankingTable::get(m);
        let mut counts = vec![0u32; table.count()];
        for (i, (c, r)) in entries.iter().enumerate() {
            if r.m() != m {
                return Err(ProfileError::MixedM(i, r.m(), m));
            }
            counts[table.index_of(r)] += c;
        }
        Ok(Histogram { m, counts })
    }
}

impl fmt::Display for Histogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let table = RankingTable::get(self.m);
        for (idx, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                writeln!(f, "{c}: {}", table.ranking(idx))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Histogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Histogram(m={}, n={}) {{ ", self.m, self.n())?;
        let table = RankingTable::get(self.m);
        for (idx, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                write!(f, "{c}x[{}] ", table.ranking(idx))?;
            }
        }
        write!(f, "}}")
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::Ranking;
    use proptest::prelude::*;

    #[test]
    fn histogram_counts_votes() {
        let p = Profile::parse("1>2>3\n2>3>1\n1>2>3\n").unwrap();
        assert_eq!(p.n(), 3);
        let h = p.histogram();
        assert_eq!(h.n(), 3);
        let t = RankingTable::get(3);
        assert_eq!(h.count(t.index_of(&Ranking::from_slice(&[1, 2, 3]))), 2);
        assert_eq!(h.count(t.index_of(&Ranking::from_slice(&[2, 3, 1]))), 1);
    }

    #[test]
    fn parse_ignores_comments_and_blanks() {
        let p = Profile::parse("# header\n\n 1>2>3  # trailing\n3>2>1\n").unwrap();
        assert_eq!(p.n(), 2);
        let h = Histogram::parse("# hist\n2: 1>2>3\n\n1: 3>2>1 # three\n").unwrap();
        assert_eq!(h.n(), 3);
    }

    #[test]
    fn histogram_roundtrip_text() {
        let h = Histogram::parse("2: 1>2>3\n5: 2>1>3\n").unwrap();
        let redisplayed = Histogram::parse(&h.to_string()).unwrap();
        assert_eq!(h, redisplayed);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Profile::parse("1>2>3\n1>1>3\n").unwrap_err();
        match err {
            ProfileError::BadRanking { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(Histogram::parse("x: 1>2>3").is_err());
        assert!(Profile::parse("# only comments\n").is_err());
    }

    proptest! {
        /// Histogram is invariant under any reordering of voters.
        #[test]
        fn histogram_permutation_invariant(seed in proptest::collection::vec(0usize..6, 1..20)) {
            let t = RankingTable::get(3);
            let votes: Vec<Ranking> = seed.iter().map(|&i| t.ranking(i).clone()).collect();
            let mut shuffled = votes.clone();
            shuffled.reverse();
            let mid = shuffled.len() / 2;
            if shuffled.len() > 2 {
                shuffled.swap(0, mid);
            }
            let h1 = Profile::new(votes).unwrap().histogram();
            let h2 = Profile::new(shuffled).unwrap().histogram();
            prop_assert_eq!(h1, h2);
        }

        /// Canonical expansion inverts the histogram map.
        #[test]
        fn canonical_profile_roundtrip(seed in proptest::collection::vec(0usize..24, 1..15)) {
            let t = RankingTable::get(4);
            let votes: Vec<Ranking> = seed.iter().map(|&i| t.ranking(i).clone()).collect();
            let h = Profile::new(votes).unwrap().histogram();
            prop_assert_eq!(h.canonical_profile().histogram(), h);
        }
    }
}
