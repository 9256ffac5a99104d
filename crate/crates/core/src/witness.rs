//! Machine-checkable violation witnesses.
//!
//! A witness records the election before the coalition acts, the action
//! itself (a multiset of per-ranking-type moves), the election after, and the
//! two winners. [`validate`] replays the action and re-checks the axiom's
//! defining condition, so any witness that validates is self-contained
//! evidence of a violation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::profile::Histogram;
use crate::ranking::{raises, Ranking, RankingTable};
use crate::rules::RuleId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxiomId {
    /// Condorcet criterion.
    Cc,
    /// Participation (no profitable group abstention).
    Par,
    /// Half-way monotonicity (no profitable group vote reversal).
    Hm,
    /// Maskin monotonicity (raising the winner never changes it).
    Mm,
    /// Strategy-proofness (no profitable group misreport).
    Sp,
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AxiomId::Cc => "cc",
            AxiomId::Par => "par",
            AxiomId::Hm => "hm",
            AxiomId::Mm => "mm",
            AxiomId::Sp => "sp",
        };
        write!(f, "{s}")
    }
}

impl FromStr for AxiomId {
    type Err = WitnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cc" => Ok(AxiomId::Cc),
            "par" => Ok(AxiomId::Par),
            "hm" => Ok(AxiomId::Hm),
            "mm" => Ok(AxiomId::Mm),
            "sp" => Ok(AxiomId::Sp),
            _ => Err(WitnessError::Parse(format!("unknown axiom {s:?}"))),
        }
    }
}

/// What kind of move the coalition performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    /// Voters leave the election.
    Abstain,
    /// Voters replace their vote by its reverse.
    FlipToReverse,
    /// Voters replace their vote by an arbitrary other vote.
    Change,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ActionKind::Abstain => "abstain",
            ActionKind::FlipToReverse => "flip",
            ActionKind::Change => "change",
        };
        write!(f, "{s}")
    }
}

/// `count` voters whose current vote is `from` move to `to`
/// (`None` = abstain).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub from: Ranking,
    pub to: Option<Ranking>,
    pub count: u32,
}

/// A multiset of moves executed jointly by a coalition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalitionAction {
    pub kind: ActionKind,
    pub moves: Vec<Move>,
}

impl CoalitionAction {
    pub fn empty() -> Self {
        CoalitionAction { kind: ActionKind::Change, moves: vec![] }
    }

    pub fn total(&self) -> u64 {
        self.moves.iter().map(|m| m.count as u64).sum()
    }

    /// Applies the action to a histogram. Fails if a move's source count is
    /// insufficient or shapes disagree with the kind.
    pub fn apply(&self, h: &Histogram) -> Result<Histogram, WitnessError> {
        let table = RankingTable::get(h.m());
        let mut out = h.clone();
        for mv in &self.moves {
            if mv.count == 0 {
                return Err(WitnessError::Malformed("zero-count move".into()));
            }
            let from_idx = table.index_of(&mv.from);
            let have = out.count(from_idx);
            if have < mv.count {
                return Err(WitnessError::InsufficientVotes {
                    ranking: mv.from.clone(),
                    have,
                    need: mv.count,
                });
            }
            *out.count_mut(from_idx) -= mv.count;
            match (&mv.to, self.kind) {
                (None, ActionKind::Abstain) => {}
                (Some(to), ActionKind::FlipToReverse) => {
                    if *to != mv.from.reversed() {
                        return Err(WitnessError::Malformed(format!(
                            "flip move {} -> {} is not a reversal",
                            mv.from, to
                        )));
                    }
                    *out.count_mut(table.index_of(to)) += mv.count;
                }
                (Some(to), ActionKind::Change) => {
                    *out.count_mut(table.index_of(to)) += mv.count;
                }
                _ => {
                    return Err(WitnessError::Malformed(
                        "move shape disagrees with action kind".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Evidence that `rule` violates `axiom` at `before` with a coalition of at
/// most `b` voters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationWitness {
    pub axiom: AxiomId,
    pub rule: RuleId,
    pub b: u32,
    pub before: Histogram,
    pub action: CoalitionAction,
    pub after: Histogram,
    pub winner_before: u8,
    pub winner_after: u8,
}

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("witness malformed: {0}")]
    Malformed(String),
    #[error("move needs {need} votes of [{ranking}] but only {have} exist")]
    InsufficientVotes { ranking: Ranking, have: u32, need: u32 },
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error("axiom condition fails: {0}")]
    ConditionFails(String),
    #[error("cannot parse witness: {0}")]
    Parse(String),
}

/// Replays the witness and re-checks every defining condition of its axiom.
pub fn validate(w: &ViolationWitness) -> Result<(), WitnessError> {
    let rule = w.rule;
    let wb = rule
        .winner(&w.before)
        .map_err(|e| WitnessError::Malformed(format!("rule on before: {e}")))?;
    if wb != w.winner_before {
        return Err(WitnessError::ReplayMismatch(format!(
            "winner_before recorded {} but rule elects {wb}",
            w.winner_before
        )));
    }

    if w.axiom == AxiomId::Cc {
        if !w.action.moves.is_empty() || w.after != w.before {
            return Err(WitnessError::Malformed(
                "condorcet witnesses carry no action".into(),
            ));
        }
        let cw = crate::wmg::Wmg::from_histogram(&w.before)
            .condorcet_winner()
            .ok_or_else(|| WitnessError::ConditionFails("no Condorcet winner".into()))?;
        if cw != w.winner_after {
            return Err(WitnessError::ReplayMismatch(format!(
                "winner_after should be the Condorcet winner {cw}"
            )));
        }
        if cw == w.winner_before {
            return Err(WitnessError::ConditionFails(
                "rule elected the Condorcet winner".into(),
            ));
        }
        return Ok(());
    }

    // Group axioms: replay the action.
    let total = w.action.total();
    if total == 0 {
        return Err(WitnessError::Malformed("empty coalition".into()));
    }
    if total > w.b as u64 {
        return Err(WitnessError::ConditionFails(format!(
            "coalition of {total} exceeds B={}",
            w.b
        )));
    }
    let expected_kind = match w.axiom {
        AxiomId::Par => ActionKind::Abstain,
        AxiomId::Hm => ActionKind::FlipToReverse,
        AxiomId::Mm | AxiomId::Sp => ActionKind::Change,
        AxiomId::Cc => unreachable!(),
    };
    if w.action.kind != expected_kind {
        return Err(WitnessError::Malformed(format!(
            "axiom {} expects {} moves",
            w.axiom, expected_kind
        )));
    }
    if w.axiom == AxiomId::Par && total >= w.before.n() {
        return Err(WitnessError::ConditionFails(
            "abstention may not empty the profile".into(),
        ));
    }
    let replayed = w.action.apply(&w.before)?;
    if replayed != w.after {
        return Err(WitnessError::ReplayMismatch(
            "action applied to before does not give after".into(),
        ));
    }
    let wa = rule
        .winner(&w.after)
        .map_err(|e| WitnessError::Malformed(format!("rule on after: {e}")))?;
    if wa != w.winner_after {
        return Err(WitnessError::ReplayMismatch(format!(
            "winner_after recorded {} but rule elects {wa}",
            w.winner_after
        )));
    }

    match w.axiom {
        AxiomId::Par | AxiomId::Hm | AxiomId::Sp => {
            // Every participant strictly prefers the new winner, judged by
            // their true (pre-move) ranking.
            if w.winner_after == w.winner_before {
                return Err(WitnessError::ConditionFails("winner unchanged".into()));
            }
            for mv in &w.action.moves {
                if !mv.from.prefers(w.winner_after, w.winner_before) {
                    return Err(WitnessError::ConditionFails(format!(
                        "voter [{}] does not strictly prefer {} to {}",
                        mv.from, w.winner_after, w.winner_before
                    )));
                }
            }
        }
        AxiomId::Mm => {
            // Raising the winner must never change it.
            if w.winner_after == w.winner_before {
                return Err(WitnessError::ConditionFails("winner unchanged".into()));
            }
            for mv in &w.action.moves {
                let to = mv.to.as_ref().expect("change move");
                let ok = raises(&mv.from, to, w.winner_before)
                    .map_err(|e| WitnessError::Malformed(e.to_string()))?;
                if !ok {
                    return Err(WitnessError::ConditionFails(format!(
                        "move [{}] -> [{}] does not raise {}",
                        mv.from, to, w.winner_before
                    )));
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Structured text encoding, one record per file.
pub fn to_text(w: &ViolationWitness) -> String {
    let mut s = String::new();
    s.push_str(&format!("axiom: {}\n", w.axiom));
    s.push_str(&format!("rule: {}\n", w.rule));
    s.push_str(&format!("B: {}\n", w.b));
    s.push_str(&format!("winner_before: {}\n", w.winner_before));
    s.push_str(&format!("winner_after: {}\n", w.winner_after));
    s.push_str("[before]\n");
    s.push_str(&w.before.to_string());
    s.push_str("[moves]\n");
    for mv in &w.action.moves {
        match &mv.to {
            None => s.push_str(&format!("abstain {} x {}\n", mv.count, mv.from)),
            Some(to) => {
                let verb = match w.action.kind {
                    ActionKind::FlipToReverse => "flip",
                    _ => "change",
                };
                s.push_str(&format!("{verb} {} x {} -> {}\n", mv.count, mv.from, to));
            }
        }
    }
    s.push_str("[after]\n");
    s.push_str(&w.after.to_string());
    s
}

pub fn from_text(text: &str) -> Result<ViolationWitness, WitnessError> {
    let mut axiom = None;
    let mut rule = None;
    let mut b = None;
    let mut winner_before = None;
    let mut winner_after = None;
    let mut before_lines = String::new();
    let mut after_lines = String::new();
    let mut moves: Vec<Move> = Vec::new();
    let mut kind: Option<ActionKind> = None;
    let mut section = "";

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line {
            "[before]" => {
                section = "before";
                continue;
            }
            "[moves]" => {
                section = "moves";
                continue;
            }
            "[after]" => {
                section = "after";
                continue;
            }
            _ => {}
        }
        match section {
            "" => {
                let (key, value) = line
                    .split_once(':')
                    .ok_or_else(|| WitnessError::Parse(format!("bad header line {line:?}")))?;
                let value = value.trim();
                match key.trim() {
                    "axiom" => axiom = Some(value.parse::<AxiomId>()?),
                    "rule" => {
                        rule = Some(
                            value
                                .parse::<RuleId>()
                                .map_err(|e| WitnessError::Parse(format!("bad rule: {e}")))?,
                        )
                    }
                    "B" => {
                        b = Some(
                            value
                                .parse::<u32>()
                                .map_err(|_| WitnessError::Parse(format!("bad B {value:?}")))?,
                        )
                    }
                    "winner_before" => {
                        winner_before = Some(value.parse::<u8>().map_err(|_| {
                            WitnessError::Parse(format!("bad winner {value:?}"))
                        })?)
                    }
                    "winner_after" => {
                        winner_after = Some(value.parse::<u8>().map_err(|_| {
                            WitnessError::Parse(format!("bad winner {value:?}"))
                        })?)
                    }
                    other => return Err(WitnessError::Parse(format!("unknown key {other:?}"))),
                }
            }
            "before" => {
                before_lines.push_str(line);
                before_lines.push('\n');
            }
            "after" => {
                after_lines.push_str(line);
                after_lines.push('\n');
            }
            "moves" => {
                let mut parts = line.split_whitespace();
                let verb = parts.next().unwrap_or("");
                let count: u32 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| WitnessError::Parse(format!("bad move line {line:?}")))?;
                if parts.next() != Some("x") {
                    return Err(WitnessError::Parse(format!("bad move line {line:?}")));
                }
                let from = parts
                    .next()
                    .ok_or_else(|| WitnessError::Parse(format!("bad move line {line:?}")))
                    .and_then(|t| {
                        Ranking::parse(t).map_err(|e| WitnessError::Parse(e.to_string()))
                    })?;
                let mv_kind;
                let to = match verb {
                    "abstain" => {
                        mv_kind = ActionKind::Abstain;
                        None
                    }
                    "flip" | "change" => {
                        mv_kind = if verb == "flip" {
                            ActionKind::FlipToReverse
                        } else {
                            ActionKind::Change
                        };
                        if parts.next() != Some("->") {
                            return Err(WitnessError::Parse(format!("bad move line {line:?}")));
                        }
                        let to = parts
                            .next()
                            .ok_or_else(|| WitnessError::Parse(format!("bad move line {line:?}")))
                            .and_then(|t| {
                                Ranking::parse(t).map_err(|e| WitnessError::Parse(e.to_string()))
                            })?;
                        Some(to)
                    }
                    other => {
                        return Err(WitnessError::Parse(format!("unknown move verb {other:?}")))
                    }
                };
                match kind {
                    None => kind = Some(mv_kind),
                    Some(k) if k == mv_kind => {}
                    Some(_) => return Err(WitnessError::Parse("mixed move kinds".into())),
                }
                moves.push(Move { from, to, count });
            }
            _ => unreachable!(),
        }
    }

    let axiom = axiom.ok_or_else(|| WitnessError::Parse("missing axiom".into()))?;
    let action_kind = kind.unwrap_or(match axiom {
        AxiomId::Par => ActionKind::Abstain,
        AxiomId::Hm => ActionKind::FlipToReverse,
        _ => ActionKind::Change,
    });
    let before = Histogram::parse(&before_lines)
        .map_err(|e| WitnessError::Parse(format!("before: {e}")))?;
    let after = Histogram::parse(&after_lines)
        .map_err(|e| WitnessError::Parse(format!("after: {e}")))?;
    Ok(ViolationWitness {
        axiom,
        rule: rule.ok_or_else(|| WitnessError::Parse("missing rule".into()))?,
        b: b.ok_or_else(|| WitnessError::Parse("missing B".into()))?,
        before,
        action: CoalitionAction { kind: action_kind, moves },
        after,
        winner_before: winner_before
            .ok_or_else(|| WitnessError::Parse("missing winner_before".into()))?,
        winner_after: winner_after
            .ok_or_else(|| WitnessError::Parse("missing winner_after".into()))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_witness() -> ViolationWitness {
        // constant_1 on unanimous 4x[213]: Condorcet winner 2, rule winner 1.
        let before = Histogram::parse("4: 2>1>3").unwrap();
        ViolationWitness {
            axiom: AxiomId::Cc,
            rule: RuleId::Constant(1),
            b: 1,
            after: before.clone(),
            before,
            action: CoalitionAction { kind: ActionKind::Change, moves: vec![] },
            winner_before: 1,
            winner_after: 2,
        }
    }

    #[test]
    fn cc_witness_validates() {
        validate(&sample_witness()).unwrap();
    }

    #[test]
    fn text_roundtrip() {
        let w = sample_witness();
        let text = to_text(&w);
        let back = from_text(&text).unwrap();
        assert_eq!(w, back);
        validate(&back).unwrap();
    }

    #[test]
    fn mutated_witness_rejected() {
        let w = sample_witness();
        let mut bad = w.clone();
        bad.winner_before = 2;
        assert!(validate(&bad).is_err());
        let mut bad = w.clone();
        bad.winner_after = 3;
        assert!(validate(&bad).is_err());
        let mut bad = w;
        bad.before = Histogram::parse("4: 1>2>3").unwrap();
        bad.after = bad.before.clone();
        assert!(validate(&bad).is_err());
    }

    #[test]
    fn apply_checks_supplies() {
        let h = Histogram::parse("2: 1>2>3").unwrap();
        let action = CoalitionAction {
            kind: ActionKind::Abstain,
            moves: vec![Move { from: Ranking::from_slice(&[1, 2, 3]), to: None, count: 3 }],
        };
        assert!(action.apply(&h).is_err());
    }
}
