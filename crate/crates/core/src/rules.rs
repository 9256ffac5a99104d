//! A registry of resolute, anonymous voting rules mapping histograms to a
//! single winner.
//!
//! Global tie-breaking: the lexicographically smallest alternative index wins
//! every tie — final winner ties, Copeland score ties, maximin score ties,
//! ranked-pairs margin ties (on `(winner, loser)`), Schulze path-strength
//! ties. STV elimination ties drop the largest alternative index.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::profile::Histogram;
use crate::ranking::RankingTable;
use crate::wmg::Wmg;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("unknown rule name {0:?}")]
    UnknownName(String),
    #[error("rule parameter out of range: {0}")]
    BadParameter(String),
    #[error("election has no voters")]
    EmptyElection,
}

/// Identifier of a voting rule, possibly parameterized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleId {
    Plurality,
    Borda,
    Veto,
    Copeland,
    Maximin,
    Stv,
    RankedPairs,
    Schulze,
    /// Always elects alternative `k`.
    Constant(u8),
    /// Elects the top choice of the `j`-th vote (1-based) of the canonical
    /// profile expansion (rankings in lexicographic order, multiplicities
    /// kept). `j` is clamped to the number of voters, so the rule stays
    /// well-defined when voters abstain.
    Dictator(u32),
}

impl RuleId {
    /// All ten registry entries with default parameters, for sweeps.
    pub fn registry() -> Vec<RuleId> {
        vec![
            RuleId::Plurality,
            RuleId::Borda,
            RuleId::Veto,
            RuleId::Copeland,
            RuleId::Maximin,
            RuleId::Stv,
            RuleId::RankedPairs,
            RuleId::Schulze,
            RuleId::Constant(1),
            RuleId::Dictator(1),
        ]
    }

    /// Rules whose winner is a function of the weighted majority graph alone
    /// (given `n`).
    pub fn wmg_based(&self) -> bool {
        matches!(
            self,
            RuleId::Copeland | RuleId::Maximin | RuleId::RankedPairs | RuleId::Schulze | RuleId::Borda
        )
    }

    /// Rules that satisfy the Condorcet criterion on every profile.
    pub fn condorcet_consistent(&self) -> bool {
        matches!(
            self,
            RuleId::Copeland | RuleId::Maximin | RuleId::RankedPairs | RuleId::Schulze
        )
    }

    /// The single winner on histogram `h`.
    pub fn winner(&self, h: &Histogram) -> Result<u8, RuleError> {
        if h.n() == 0 {
            return Err(RuleError::EmptyElection);
        }
        if self.wmg_based() {
            Ok(self.winner_given(h, &Wmg::from_histogram(h)))
        } else {
            Ok(self.winner_hist_only(h))
        }
    }

    /// Winner when the caller already maintains the WMG of `h`. For
    /// WMG-based rules `h` is only used for `n`.
    pub fn winner_given(&self, h: &Histogram, g: &Wmg) -> u8 {
        debug_assert!(h.n() > 0);
        match self {
            RuleId::Copeland => copeland(g),
            RuleId::Maximin => maximin(g),
            RuleId::RankedPairs => ranked_pairs(g),
            RuleId::Schulze => schulze(g),
            RuleId::Borda => borda_from_wmg(g),
            _ => self.winner_hist_only(h),
        }
    }

    fn winner_hist_only(&self, h: &Histogram) -> u8 {
        let m = h.m();
        let table = RankingTable::get(m);
        match *self {
            RuleId::Plurality => {
                let mut score = vec![0u64; m];
                for (idx, c) in h.support() {
                    score[table.top_of(idx) as usize - 1] += c as u64;
                }
                argmax_lex(&score)
            }
            RuleId::Veto => {
                // Fewest last places; maximize n - lastcount.
                let mut last = vec![0i64; m];
                for (idx, c) in h.support() {
                    last[table.last_of(idx) as usize - 1] += c as i64;
                }
                let score: Vec<i64> = last.iter().map(|&c| -c).collect();
                argmax_lex(&score)
            }
            RuleId::Borda => {
                let mut score = vec![0u64; m];
                for (idx, c) in h.support() {
                    for a in 1..=m as u8 {
                        score[a as usize - 1] +=
                            (m - 1 - table.position(idx, a)) as u64 * c as u64;
                    }
                }
                argmax_lex(&score)
            }
            RuleId::Stv => stv(h),
            RuleId::Constant(k) => {
                assert!(k >= 1 && k as usize <= m, "constant rule target out of range");
                k
            }
            RuleId::Dictator(j) => {
                let n = h.n();
                let j = (j as u64).clamp(1, n);
                let mut cum = 0u64;
                for (idx, c) in h.support() {
                    cum += c as u64;
                    if cum >= j {
                        return table.top_of(idx);
                    }
                }
                unreachable!("j clamped to n")
            }
            _ => unreachable!("wmg-based rules handled in winner_given"),
        }
    }

    /// Validates instance parameters against `m`.
    pub fn validate(&self, m: usize) -> Result<(), RuleError> {
        match *self {
            RuleId::Constant(k) if k == 0 || k as usize > m => {
                Err(RuleError::BadParameter(format!("constant_{k} with m={m}")))
            }
            RuleId::Dictator(0) => Err(RuleError::BadParameter("dictator_0".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleId::Plurality => write!(f, "plurality"),
            RuleId::Borda => write!(f, "borda"),
            RuleId::Veto => write!(f, "veto"),
            RuleId::Copeland => write!(f, "copeland"),
            RuleId::Maximin => write!(f, "maximin"),
            RuleId::Stv => write!(f, "stv"),
            RuleId::RankedPairs => write!(f, "ranked_pairs"),
            RuleId::Schulze => write!(f, "schulze"),
            RuleId::Constant(k) => write!(f, "constant_{k}"),
            RuleId::Dictator(j) => write!(f, "dictator_{j}"),
        }
    }
}

impl FromStr for RuleId {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plurality" => Ok(RuleId::Plurality),
            "borda" => Ok(RuleId::Borda),
            "veto" => Ok(RuleId::Veto),
            "copeland" => Ok(RuleId::Copeland),
            "maximin" => Ok(RuleId::Maximin),
            "stv" => Ok(RuleId::Stv),
            "ranked_pairs" => Ok(RuleId::RankedPairs),
            "schulze" => Ok(RuleId::Schulze),
            _ => {
                if let Some(k) = s.strip_prefix("constant_") {
                    let k: u8 = k
                        .parse()
                        .map_err(|_| RuleError::UnknownName(s.to_string()))?;
                    if k == 0 {
                        return Err(RuleError::BadParameter(s.to_string()));
                    }
                    Ok(RuleId::Constant(k))
                } else if let Some(j) = s.strip_prefix("dictator_") {
                    let j: u32 = j
                        .parse()
                        .map_err(|_| RuleError::UnknownName(s.to_string()))?;
                    if j == 0 {
                        return Err(RuleError::BadParameter(s.to_string()));
                    }
                    Ok(RuleId::Dictator(j))
                } else {
                    Err(RuleError::UnknownName(s.to_string()))
                }
            }
        }
    }
}

fn argmax_lex<T: PartialOrd + Copy>(scores: &[T]) -> u8 {
    let mut best = 0usize;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    best as u8 + 1
}

/// Copeland with alpha = 1/2, via doubled integer scores: 2 per strict
/// pairwise win, 1 per pairwise tie.
fn copeland(g: &Wmg) -> u8 {
    let m = g.m();
    let mut score = vec![0i64; m];
    for a in 1..=m as u8 {
        for b in 1..=m as u8 {
            if a == b {
                continue;
            }
            let w = g.margin(a, b);
            score[a as usize - 1] += if w > 0 { 2 } else if w == 0 { 1 } else { 0 };
        }
    }
    argmax_lex(&score)
}

fn maximin(g: &Wmg) -> u8 {
    let m = g.m();
    let mut score = vec![i64::MAX; m];
    for a in 1..=m as u8 {
        for b in 1..=m as u8 {
            if a != b {
                let w = g.margin(a, b);
                let s = &mut score[a as usize - 1];
                if w < *s {
                    *s = w;
                }
            }
        }
    }
    argmax_lex(&score)
}

fn borda_from_wmg(g: &Wmg) -> u8 {
    // Borda score = (n(m-1) + sum of outgoing margins) / 2; the shift and
    // scale do not change the argmax.
    let m = g.m();
    let mut score = vec![0i64; m];
    for a in 1..=m as u8 {
        for b in 1..=m as u8 {
            if a != b {
                score[a as usize - 1] += g.margin(a, b);
            }
        }
    }
    argmax_lex(&score)
}

/// Ranked pairs: sort pairs by descending margin, ties lexicographic on
/// (winner, loser); lock unless a cycle would form; the winner is the
/// lexicographically smallest source of the locked digraph.
fn ranked_pairs(g: &Wmg) -> u8 {
    let m = g.m();
    let mut pairs: Vec<(i64, u8, u8)> = Vec::new();
    for a in 1..=m as u8 {
        for b in 1..=m as u8 {
            if a != b && g.margin(a, b) > 0 {
                pairs.push((g.margin(a, b), a, b));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut locked = vec![false; m * m]; // locked[a][b]: a -> b
    let reaches = |locked: &[bool], from: u8, to: u8| -> bool {
        // DFS over at most 8 nodes.
        let mut stack = vec![from];
        let mut seen = [false; 8];
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            for y in 1..=m as u8 {
                if locked[(x as usize - 1) * m + y as usize - 1] && !seen[y as usize - 1] {
                    seen[y as usize - 1] = true;
                    stack.push(y);
                }
            }
        }
        false
    };
    for (_, a, b) in pairs {
        if !reaches(&locked, b, a) {
            locked[(a as usize - 1) * m + b as usize - 1] = true;
        }
    }
    for a in 1..=m as u8 {
        let has_incoming = (1..=m as u8)
            .any(|b| b != a && locked[(b as usize - 1) * m + a as usize - 1]);
        if !has_incoming {
            return a;
        }
    }
    unreachable!("locked digraph is acyclic, so a source exists")
}

/// Schulze with margin strengths: widest-path relaxation over positive
/// margins; the winner is the lexicographically smallest alternative not
/// beaten in path strength by any other.
fn schulze(g: &Wmg) -> u8 {
    let m = g.m();
    let mut p = vec![0i64; m * m];
    for a in 0..m {
        for b in 0..m {
            if a != b {
                let w = g.margin(a as u8 + 1, b as u8 + 1);
                p[a * m + b] = if w > 0 { w } else { 0 };
            }
        }
    }
    for k in 0..m {
        for i in 0..m {
            if i == k {
                continue;
            }
            for j in 0..m {
                if j == i || j == k {
                    continue;
                }
                let via = p[i * m + k].min(p[k * m + j]);
                if via > p[i * m + j] {
                    p[i * m + j] = via;
                }
            }
        }
    }
    for a in 0..m {
        if (0..m).all(|b| b == a || p[b * m + a] <= p[a * m + b]) {
            return a as u8 + 1;
        }
    }
    unreachable!("schulze relation always has a maximal element")
}

/// STV: repeatedly eliminate the plurality-loser among survivors; elimination
/// ties drop the largest alternative index; votes transfer to the next
/// surviving alternative.
fn stv(h: &Histogram) -> u8 {
    let m = h.m();
    let table = RankingTable::get(m);
    let mut alive: u16 = (1 << m) - 1;
    loop {
        if alive.count_ones() == 1 {
            return alive.trailing_zeros() as u8 + 1;
        }
        let mut counts = vec![0u64; m];
        for (idx, c) in h.support() {
            let r = table.ranking(idx);
            for &a in r.order() {
                if alive & (1 << (a - 1)) != 0 {
                    counts[a as usize - 1] += c as u64;
                    break;
                }
            }
        }
        // Lowest count; ties eliminate the largest index.
        let mut victim = 0u8;
        let mut best = u64::MAX;
        for a in (1..=m as u8).rev() {
            if alive & (1 << (a - 1)) != 0 && counts[a as usize - 1] < best {
                best = counts[a as usize - 1];
                victim = a;
            }
        }
        alive &= !(1 << (victim - 1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Histogram, Profile};
    use crate::ranking::Ranking;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hist(text: &str) -> Histogram {
        Histogram::parse(text).unwrap()
    }

    #[test]
    fn constant_rule() {
        let h = hist("3: 2>1>3");
        assert_eq!(RuleId::Constant(1).winner(&h).unwrap(), 1);
        assert_eq!(RuleId::Constant(3).winner(&h).unwrap(), 3);
    }

    #[test]
    fn unanimity_winners() {
        let h = Histogram::unanimous(&Ranking::from_slice(&[1, 2, 3]), 9);
        for rule in RuleId::registry() {
            assert_eq!(rule.winner(&h).unwrap(), 1, "{rule}");
        }
    }

    #[test]
    fn maximin_hand_computed() {
        // {2x[123], 2x[231], 1x[312]}: margins (1,2)=+1, (1,3)=-1, (2,3)=+3.
        // Maximin scores: 1 -> -1, 2 -> -1, 3 -> -3; lexicographic tie-break
        // between 1 and 2 elects 1.
        let h = hist("2: 1>2>3\n2: 2>3>1\n1: 3>1>2");
        let g = Wmg::from_histogram(&h);
        assert_eq!(g.margin(1, 2), 1);
        assert_eq!(g.margin(1, 3), -1);
        assert_eq!(g.margin(2, 3), 3);
        assert_eq!(RuleId::Maximin.winner(&h).unwrap(), 1);
    }

    #[test]
    fn stv_transfers() {
        // 4x[1..], 3x[2..], 2x[3>2..]: 3 eliminated first, transfers make 2 win 5-4.
        let h = hist("4: 1>2>3\n3: 2>1>3\n2: 3>2>1");
        assert_eq!(RuleId::Stv.winner(&h).unwrap(), 2);
        assert_eq!(RuleId::Plurality.winner(&h).unwrap(), 1);
    }

    #[test]
    fn veto_counts_last_places() {
        let h = hist("2: 1>2>3\n1: 2>1>3\n1: 3>2>1");
        // last places: 3 has 3, 1 has 1, 2 has 0 -> veto winner 2.
        assert_eq!(RuleId::Veto.winner(&h).unwrap(), 2);
    }

    #[test]
    fn borda_wmg_route_agrees_with_positional() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = *[3usize, 4, 5].choose(&mut rng).unwrap();
            let t = RankingTable::get(m);
            let mut h = Histogram::zero(m);
            for _ in 0..rng.random_range(1..40) {
                *h.count_mut(rng.random_range(0..t.count())) += rng.random_range(1..4);
            }
            let g = Wmg::from_histogram(&h);
            let via_wmg = RuleId::Borda.winner_given(&h, &g);
            // independent positional computation
            let mut score = vec![0u64; m];
            for (idx, c) in h.support() {
                for a in 1..=m as u8 {
                    score[a as usize - 1] += (m - 1 - t.position(idx, a)) as u64 * c as u64;
                }
            }
            let direct = super::argmax_lex(&score);
            assert_eq!(via_wmg, direct);
        }
    }

    #[test]
    fn dictator_follows_canonical_expansion() {
        let h = hist("1: 2>1>3\n1: 3>1>2");
        // canonical order: [213] then [312]
        assert_eq!(RuleId::Dictator(1).winner(&h).unwrap(), 2);
        assert_eq!(RuleId::Dictator(2).winner(&h).unwrap(), 3);
        // j beyond n clamps to the last voter
        assert_eq!(RuleId::Dictator(9).winner(&h).unwrap(), 3);
    }

    #[test]
    fn rule_names_roundtrip() {
        for rule in RuleId::registry() {
            let name = rule.to_string();
            assert_eq!(name.parse::<RuleId>().unwrap(), rule);
        }
        assert!("borda2".parse::<RuleId>().is_err());
        assert!("constant_0".parse::<RuleId>().is_err());
        assert!("dictator_x".parse::<RuleId>().is_err());
    }

    #[test]
    fn anonymity_profile_paths_agree() {
        let p1 = Profile::parse("1>2>3\n2>3>1\n3>1>2\n2>3>1\n").unwrap();
        let mut votes = p1.votes().to_vec();
        votes.rotate_left(2);
        let p2 = Profile::new(votes).unwrap();
        for rule in RuleId::registry() {
            assert_eq!(
                rule.winner(&p1.histogram()).unwrap(),
                rule.winner(&p2.histogram()).unwrap()
            );
        }
    }

    /// Condorcet-consistent rules elect the Condorcet winner whenever one
    /// exists. 10^5 random histograms per m in {3,4,5}.
    #[test]
    fn condorcet_consistency_property() {
        let cc_rules = [RuleId::Copeland, RuleId::Maximin, RuleId::RankedPairs, RuleId::Schulze];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for m in [3usize, 4, 5] {
            let t = RankingTable::get(m);
            let mut with_cw = 0u64;
            for _ in 0..100_000 {
                let mut h = Histogram::zero(m);
                let voters = rng.random_range(1..=30u32);
                for _ in 0..voters {
                    *h.count_mut(rng.random_range(0..t.count())) += 1;
                }
                let g = Wmg::from_histogram(&h);
                if let Some(cw) = g.condorcet_winner() {
                    with_cw += 1;
                    for rule in cc_rules {
                        assert_eq!(
                            rule.winner_given(&h, &g),
                            cw,
                            "{rule} missed the Condorcet winner on {h:?}"
                        );
                    }
                }
            }
            assert!(with_cw > 0);
        }
    }

    #[test]
    fn determinism() {
        let h = hist("2: 1>2>3>4\n3: 4>2>1>3\n1: 3>4>2>1");
        for rule in RuleId::registry() {
            assert_eq!(rule.winner(&h).unwrap(), rule.winner(&h).unwrap());
        }
    }
}
