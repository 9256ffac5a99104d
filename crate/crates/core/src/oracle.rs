//! Brute-force reference checkers that enumerate voter index subsets and
//! per-voter replacement votes directly on explicit profiles.
//!
//! Exponential in `B` and `n`; these exist to cross-verify the
//! histogram-level checkers in [`crate::axioms`] and are kept deliberately
//! independent of their enumeration strategy: everything here works on
//! `Profile` with voter identities.

use crate::profile::Profile;
use crate::ranking::{raises, Ranking, RankingTable};
use crate::rules::RuleId;
use crate::wmg::Wmg;

fn winner(rule: RuleId, votes: &[Ranking]) -> u8 {
    let p = Profile::new(votes.to_vec()).expect("nonempty profile");
    rule.winner(&p.histogram()).expect("rule applies")
}

/// Condorcet criterion at a profile: satisfied iff there is no Condorcet
/// winner or the rule elects it.
pub fn cc_satisfied(rule: RuleId, profile: &Profile) -> bool {
    let h = profile.histogram();
    match Wmg::from_histogram(&h).condorcet_winner() {
        None => true,
        Some(cw) => rule.winner(&h).expect("rule applies") == cw,
    }
}

/// Enumerates all voter index subsets of size `1..=max` and calls `f`;
/// stops early when `f` returns true.
fn any_subset(n: usize, max: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        start: usize,
        n: usize,
        left: usize,
        current: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if !current.is_empty() && f(current) {
            return true;
        }
        if left == 0 {
            return false;
        }
        for i in start..n {
            current.push(i);
            if rec(i + 1, n, left - 1, current, f) {
                return true;
            }
            current.pop();
        }
        false
    }
    let mut current = Vec::new();
    rec(0, n, max, &mut current, f)
}

/// Participation: is there a group of at most `b` voters who all strictly
/// prefer the winner after they abstain?
pub fn par_satisfied(rule: RuleId, profile: &Profile, b: u32) -> bool {
    let n = profile.n();
    let votes = profile.votes();
    let old = winner(rule, votes);
    let max = (b as usize).min(n - 1);
    if max == 0 {
        return true;
    }
    !any_subset(n, max, &mut |subset| {
        let remaining: Vec<Ranking> = votes
            .iter()
            .enumerate()
            .filter(|(i, _)| !subset.contains(i))
            .map(|(_, v)| v.clone())
            .collect();
        let new = winner(rule, &remaining);
        new != old && subset.iter().all(|&i| votes[i].prefers(new, old))
    })
}

/// Half-way monotonicity: is there a group of at most `b` voters who all
/// strictly prefer the winner after reversing their own votes?
pub fn hm_satisfied(rule: RuleId, profile: &Profile, b: u32) -> bool {
    let n = profile.n();
    let votes = profile.votes();
    let old = winner(rule, votes);
    let max = (b as usize).min(n);
    !any_subset(n, max, &mut |subset| {
        let mut flipped = votes.to_vec();
        for &i in subset {
            flipped[i] = votes[i].reversed();
        }
        let new = winner(rule, &flipped);
        new != old && subset.iter().all(|&i| votes[i].prefers(new, old))
    })
}

/// Enumerates per-voter replacement choices (odometer over `options[i]`),
/// calling `f` on each assignment; stops early on true.
fn any_assignment(options: &[Vec<usize>], f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if options.iter().any(|o| o.is_empty()) {
        return false;
    }
    let k = options.len();
    let mut digits = vec![0usize; k];
    loop {
        let pick: Vec<usize> = digits.iter().enumerate().map(|(i, &d)| options[i][d]).collect();
        if f(&pick) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == k {
                return false;
            }
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Maskin monotonicity: does some group of at most `b` voters, each weakly
/// raising the current winner, change the winner?
pub fn mm_satisfied(rule: RuleId, profile: &Profile, b: u32) -> bool {
    let n = profile.n();
    let votes = profile.votes();
    let old = winner(rule, votes);
    let table = RankingTable::get(profile.m());
    let max = (b as usize).min(n);
    !any_subset(n, max, &mut |subset| {
        // Raising replacements per chosen voter (identity excluded: a no-op
        // never helps change the winner).
        let options: Vec<Vec<usize>> = subset
            .iter()
            .map(|&i| {
                (0..table.count())
                    .filter(|&r| {
                        table.ranking(r) != &votes[i]
                            && raises(&votes[i], table.ranking(r), old).unwrap()
                    })
                    .collect()
            })
            .collect();
        any_assignment(&options, &mut |pick| {
            let mut changed = votes.to_vec();
            for (slot, &i) in subset.iter().enumerate() {
                changed[i] = table.ranking(pick[slot]).clone();
            }
            winner(rule, &changed) != old
        })
    })
}

/// Strategy-proofness: is there a group of at most `b` voters and arbitrary
/// replacement votes making every group member strictly better off?
pub fn sp_satisfied(rule: RuleId, profile: &Profile, b: u32) -> bool {
    let n = profile.n();
    let votes = profile.votes();
    let old = winner(rule, votes);
    let table = RankingTable::get(profile.m());
    let max = (b as usize).min(n);
    !any_subset(n, max, &mut |subset| {
        let options: Vec<Vec<usize>> = subset
            .iter()
            .map(|&i| (0..table.count()).filter(|&r| table.ranking(r) != &votes[i]).collect())
            .collect();
        any_assignment(&options, &mut |pick| {
            let mut changed = votes.to_vec();
            for (slot, &i) in subset.iter().enumerate() {
                changed[i] = table.ranking(pick[slot]).clone();
            }
            let new = winner(rule, &changed);
            new != old && subset.iter().all(|&i| votes[i].prefers(new, old))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    #[test]
    fn constant_rule_immune_to_group_action() {
        let p = Profile::parse("1>2>3\n2>3>1\n3>1>2\n").unwrap();
        for b in 1..=2 {
            assert!(par_satisfied(RuleId::Constant(1), &p, b));
            assert!(hm_satisfied(RuleId::Constant(1), &p, b));
            assert!(mm_satisfied(RuleId::Constant(1), &p, b));
            assert!(sp_satisfied(RuleId::Constant(1), &p, b));
        }
    }

    #[test]
    fn cc_for_constant_rule() {
        let p = Profile::parse("2>1>3\n2>1>3\n").unwrap();
        assert!(!cc_satisfied(RuleId::Constant(1), &p));
        assert!(cc_satisfied(RuleId::Constant(2), &p));
    }

    /// A positional-scoring classic: under Borda a single voter can profit
    /// from misreporting; the oracle must find it.
    #[test]
    fn borda_is_manipulable_somewhere() {
        let p = Profile::parse("1>2>3\n2>1>3\n3>2>1\n").unwrap();
        // Borda scores: 1 -> 3, 2 -> 4, 3 -> 2; winner 2.
        // Voter 0 prefers 1 to 2; by reporting 1>3>2 they make 1 win.
        assert!(!sp_satisfied(RuleId::Borda, &p, 1));
    }

    /// An index-based dictatorship over an explicit profile is immune to
    /// group misreports: the dictator cannot improve on their own top choice
    /// and everyone else cannot move the outcome.
    #[test]
    fn fixed_index_dictatorship_is_strategyproof() {
        let table = RankingTable::get(3);
        // Rule: the winner is voter 0's top choice, independent of order in
        // the histogram. We exercise the oracle's internals against it by
        // checking all 1- and 2-voter manipulations on every 3-voter profile.
        for a in 0..6 {
            for bb in 0..6 {
                for c in 0..6 {
                    let votes = vec![
                        table.ranking(a).clone(),
                        table.ranking(bb).clone(),
                        table.ranking(c).clone(),
                    ];
                    let old = votes[0].top();
                    let n = votes.len();
                    let violated = super::any_subset(n, 2, &mut |subset| {
                        let options: Vec<Vec<usize>> =
                            subset.iter().map(|_| (0..6).collect()).collect();
                        super::any_assignment(&options, &mut |pick| {
                            let mut changed = votes.clone();
                            for (slot, &i) in subset.iter().enumerate() {
                                changed[i] = table.ranking(pick[slot]).clone();
                            }
                            let new = changed[0].top();
                            new != old && subset.iter().all(|&i| votes[i].prefers(new, old))
                        })
                    });
                    assert!(!violated);
                }
            }
        }
    }
}
