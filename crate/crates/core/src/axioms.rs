//! Exact per-profile group-axiom satisfaction checkers with extractable
//! witnesses.
//!
//! All checkers work on histograms: voters of the same ranking type are
//! interchangeable for every axiom here, so coalitions are enumerated as
//! multisets of per-type moves instead of `C(n,B)` voter subsets. The
//! searches for participation, half-way monotonicity and strategy-proofness
//! are further decomposed by the prospective new winner `c`: every coalition
//! member must strictly prefer `c` to the current winner, so only ranking
//! types with `c` above the current winner can move.
//!
//! Exact mode refuses to run when the candidate-action space exceeds a
//! configurable cap; sampled mode draws random actions instead and reports a
//! violation only with a verified witness.

use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::profile::Histogram;
use crate::ranking::RankingTable;
use crate::rules::{RuleError, RuleId};
use crate::witness::{
    validate, ActionKind, AxiomId, CoalitionAction, Move, ViolationWitness,
};
use crate::wmg::Wmg;

#[derive(Debug, Error)]
pub enum AxiomError {
    #[error("coalition bound B={b} outside 1..=n ({n} voters)")]
    BadB { b: u32, n: u64 },
    #[error("exact enumeration needs ~{candidates:.3e} candidate actions, over the cap {cap:.3e}")]
    BudgetExceeded { candidates: f64, cap: f64 },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("unknown axiom/combo label {0:?}")]
    UnknownCombo(String),
}

/// How a checker explores the candidate-action space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckMode {
    /// Enumerate every candidate action; error out if the space exceeds the
    /// budget cap.
    Exact,
    /// Draw `samples` uniform random actions with the given seed. A reported
    /// violation always carries a verified witness; a pass is only a failure
    /// to find one.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub mode: CheckMode,
    /// Cap on the exact-mode candidate-action count (default 1e8).
    pub max_candidates: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { mode: CheckMode::Exact, max_candidates: 1e8 }
    }
}

/// Result of one satisfaction check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    /// `true` = the axiom holds at this histogram (sat = 1).
    pub sat: bool,
    pub witness: Option<ViolationWitness>,
    /// `false` when a pass comes from sampled mode and is therefore not
    /// exhaustively verified.
    pub exhaustive: bool,
}

impl CheckOutcome {
    fn pass(exhaustive: bool) -> Self {
        CheckOutcome { sat: true, witness: None, exhaustive }
    }
    fn fail(witness: ViolationWitness) -> Self {
        CheckOutcome { sat: false, witness: Some(witness), exhaustive: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupAxiom {
    Par,
    Hm,
    Mm,
    Sp,
}

impl GroupAxiom {
    pub fn axiom_id(&self) -> AxiomId {
        match self {
            GroupAxiom::Par => AxiomId::Par,
            GroupAxiom::Hm => AxiomId::Hm,
            GroupAxiom::Mm => AxiomId::Mm,
            GroupAxiom::Sp => AxiomId::Sp,
        }
    }

    fn action_kind(&self) -> ActionKind {
        match self {
            GroupAxiom::Par => ActionKind::Abstain,
            GroupAxiom::Hm => ActionKind::FlipToReverse,
            GroupAxiom::Mm | GroupAxiom::Sp => ActionKind::Change,
        }
    }
}

/// An axiom or conjunction selectable by label: `cc`, `par`, `hm`, `mm`,
/// `sp`, and the four studied combinations `cp`, `ch`, `cm`, `cs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Combo {
    pub cc: bool,
    pub group: Option<GroupAxiom>,
}

impl Combo {
    pub const CP: Combo = Combo { cc: true, group: Some(GroupAxiom::Par) };
    pub const CH: Combo = Combo { cc: true, group: Some(GroupAxiom::Hm) };
    pub const CM: Combo = Combo { cc: true, group: Some(GroupAxiom::Mm) };
    pub const CS: Combo = Combo { cc: true, group: Some(GroupAxiom::Sp) };
}

impl FromStr for Combo {
    type Err = AxiomError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let combo = match s {
            "cc" => Combo { cc: true, group: None },
            "par" => Combo { cc: false, group: Some(GroupAxiom::Par) },
            "hm" => Combo { cc: false, group: Some(GroupAxiom::Hm) },
            "mm" => Combo { cc: false, group: Some(GroupAxiom::Mm) },
            "sp" => Combo { cc: false, group: Some(GroupAxiom::Sp) },
            "cp" => Combo::CP,
            "ch" => Combo::CH,
            "cm" => Combo::CM,
            "cs" => Combo::CS,
            _ => return Err(AxiomError::UnknownCombo(s.to_string())),
        };
        Ok(combo)
    }
}

impl std::fmt::Display for Combo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match (self.cc, self.group) {
            (true, None) => "cc",
            (false, Some(GroupAxiom::Par)) => "par",
            (false, Some(GroupAxiom::Hm)) => "hm",
            (false, Some(GroupAxiom::Mm)) => "mm",
            (false, Some(GroupAxiom::Sp)) => "sp",
            (true, Some(GroupAxiom::Par)) => "cp",
            (true, Some(GroupAxiom::Hm)) => "ch",
            (true, Some(GroupAxiom::Mm)) => "cm",
            (true, Some(GroupAxiom::Sp)) => "cs",
            (false, None) => "none",
        };
        write!(f, "{s}")
    }
}

/// Condorcet criterion: satisfied iff no Condorcet winner exists or the rule
/// elects it.
pub fn check_cc(rule: RuleId, h: &Histogram) -> Result<CheckOutcome, AxiomError> {
    let g = Wmg::from_histogram(h);
    check_cc_prepared(rule, h, &g)
}

pub fn check_cc_prepared(
    rule: RuleId,
    h: &Histogram,
    g: &Wmg,
) -> Result<CheckOutcome, AxiomError> {
    if h.n() == 0 {
        return Err(RuleError::EmptyElection.into());
    }
    match g.condorcet_winner() {
        None => Ok(CheckOutcome::pass(true)),
        Some(cw) => {
            let winner = rule.winner_given(h, g);
            if winner == cw {
                Ok(CheckOutcome::pass(true))
            } else {
                let w = ViolationWitness {
                    axiom: AxiomId::Cc,
                    rule,
                    b: 0,
                    before: h.clone(),
                    action: CoalitionAction { kind: ActionKind::Change, moves: vec![] },
                    after: h.clone(),
                    winner_before: winner,
                    winner_after: cw,
                };
                debug_assert!(validate(&w).is_ok());
                Ok(CheckOutcome::fail(w))
            }
        }
    }
}

pub fn check_par(
    rule: RuleId,
    h: &Histogram,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    check_group(GroupAxiom::Par, rule, h, b, opts)
}

pub fn check_hm(
    rule: RuleId,
    h: &Histogram,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    check_group(GroupAxiom::Hm, rule, h, b, opts)
}

pub fn check_mm(
    rule: RuleId,
    h: &Histogram,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    check_group(GroupAxiom::Mm, rule, h, b, opts)
}

pub fn check_sp(
    rule: RuleId,
    h: &Histogram,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    check_group(GroupAxiom::Sp, rule, h, b, opts)
}

/// Outcome of a conjunction check. The satisfaction bit is the AND of the
/// parts; on failure, the witnesses of the parts that failed (the check
/// short-circuits after the first failing part).
#[derive(Clone, Debug)]
pub struct ComboOutcome {
    pub sat: bool,
    pub witnesses: Vec<ViolationWitness>,
    pub exhaustive: bool,
}

pub fn check_combo(
    combo: Combo,
    rule: RuleId,
    h: &Histogram,
    b: u32,
    opts: &CheckOptions,
) -> Result<ComboOutcome, AxiomError> {
    let g = Wmg::from_histogram(h);
    check_combo_prepared(combo, rule, h, &g, b, opts)
}

/// As [`check_combo`] but reusing a caller-maintained WMG of `h`.
pub fn check_combo_prepared(
    combo: Combo,
    rule: RuleId,
    h: &Histogram,
    g: &Wmg,
    b: u32,
    opts: &CheckOptions,
) -> Result<ComboOutcome, AxiomError> {
    if combo.cc {
        let cc = check_cc_prepared(rule, h, g)?;
        if !cc.sat {
            return Ok(ComboOutcome {
                sat: false,
                witnesses: cc.witness.into_iter().collect(),
                exhaustive: true,
            });
        }
    }
    if let Some(axiom) = combo.group {
        let out = check_group_prepared(axiom, rule, h, g, b, opts)?;
        return Ok(ComboOutcome {
            sat: out.sat,
            witnesses: out.witness.into_iter().collect(),
            exhaustive: out.exhaustive,
        });
    }
    Ok(ComboOutcome { sat: true, witnesses: vec![], exhaustive: true })
}

pub fn check_group(
    axiom: GroupAxiom,
    rule: RuleId,
    h: &Histogram,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    let g = Wmg::from_histogram(h);
    check_group_prepared(axiom, rule, h, &g, b, opts)
}

/// A candidate unit move: one voter of type `from` acts.
#[derive(Clone, Debug)]
struct MoveType {
    from: usize,
    to: Option<usize>,
    /// Margin delta of a single such move, full m*m matrix layout.
    delta: Vec<i64>,
    /// Capacity group (types sharing a `from` share its vote supply).
    group: usize,
}

struct SearchCtx<'a> {
    axiom: GroupAxiom,
    rule: RuleId,
    table: &'a RankingTable,
    h: &'a Histogram,
    bmax: u32,
    current_winner: u8,
    /// For Par/Hm/Sp: the target new winner. For Mm: unused (any change).
    target: Option<u8>,
    types: Vec<MoveType>,
    /// Remaining capacity per group id.
    caps: Vec<u32>,
    /// Suffix per-pair maxima/minima of per-unit deltas (for pruning).
    suffix_hi: Vec<Vec<i64>>,
    suffix_lo: Vec<Vec<i64>>,
}

fn margin_delta(table: &RankingTable, m: usize, from: usize, to: Option<usize>, remove: bool) -> Vec<i64> {
    let mut d = vec![0i64; m * m];
    let mut apply = |idx: usize, sign: i64| {
        let signs = table.pair_signs(idx);
        let mut p = 0;
        for a in 1..=m as u8 {
            for bb in (a + 1)..=m as u8 {
                let v = signs[p] as i64 * sign;
                d[(a as usize - 1) * m + bb as usize - 1] += v;
                d[(bb as usize - 1) * m + a as usize - 1] -= v;
                p += 1;
            }
        }
    };
    if remove {
        apply(from, -1);
    }
    if let Some(t) = to {
        apply(t, 1);
    }
    d
}

/// Builds the move-type list for one search. For Par/Hm/Sp the `target`
/// restricts sources to rankings preferring the target to the current
/// winner; for Mm the moves are all winner-raising replacements.
fn build_types(
    axiom: GroupAxiom,
    table: &RankingTable,
    h: &Histogram,
    winner: u8,
    target: Option<u8>,
) -> Vec<MoveType> {
    let m = table.m();
    let mut types = Vec::new();
    let mut group_of = vec![usize::MAX; table.count()];
    let mut next_group = 0usize;
    let mut group = |from: usize, group_of: &mut Vec<usize>| {
        if group_of[from] == usize::MAX {
            group_of[from] = next_group;
            next_group += 1;
        }
        group_of[from]
    };
    for (from, _count) in h.support() {
        match axiom {
            GroupAxiom::Par | GroupAxiom::Hm => {
                let c = target.unwrap();
                if !table.prefers(from, c, winner) {
                    continue;
                }
                let to = match axiom {
                    GroupAxiom::Par => None,
                    _ => Some(table.reverse_of(from)),
                };
                let delta = margin_delta(table, m, from, to, true);
                let gid = group(from, &mut group_of);
                types.push(MoveType { from, to, delta, group: gid });
            }
            GroupAxiom::Sp => {
                let c = target.unwrap();
                if !table.prefers(from, c, winner) {
                    continue;
                }
                let gid = group(from, &mut group_of);
                for to in 0..table.count() {
                    if to == from {
                        continue;
                    }
                    let delta = margin_delta(table, m, from, Some(to), true);
                    types.push(MoveType { from, to: Some(to), delta, group: gid });
                }
            }
            GroupAxiom::Mm => {
                let gid = group(from, &mut group_of);
                for to in 0..table.count() {
                    if to == from {
                        continue;
                    }
                    if !raising(table, from, to, winner) {
                        continue;
                    }
                    let delta = margin_delta(table, m, from, Some(to), true);
                    types.push(MoveType { from, to: Some(to), delta, group: gid });
                }
            }
        }
    }
    types
}

fn raising(table: &RankingTable, r1: usize, r2: usize, a: u8) -> bool {
    // beaten set of a in r1 must be a subset of its beaten set in r2
    let m = table.m();
    for b in 1..=m as u8 {
        if b != a && table.prefers(r1, a, b) && !table.prefers(r2, a, b) {
            return false;
        }
    }
    true
}

/// Conservative per-unit margin-delta ranges by axiom, used by the
/// root-level feasibility filter before any type list is built. Entry for
/// the ordered pair (x,y); `special` marks pairs with a forced direction.
fn generic_delta_range(axiom: GroupAxiom, x: u8, y: u8, target: u8, winner: u8) -> (i64, i64) {
    match axiom {
        GroupAxiom::Par => {
            // removal of a vote preferring target to winner
            if x == target && y == winner {
                (-1, -1)
            } else if x == winner && y == target {
                (1, 1)
            } else {
                (-1, 1)
            }
        }
        GroupAxiom::Hm => {
            if x == target && y == winner {
                (-2, -2)
            } else if x == winner && y == target {
                (2, 2)
            } else {
                (-2, 2)
            }
        }
        GroupAxiom::Sp => {
            // source prefers target to winner; replacement arbitrary
            if x == target && y == winner {
                (-2, 0)
            } else if x == winner && y == target {
                (0, 2)
            } else {
                (-2, 2)
            }
        }
        GroupAxiom::Mm => {
            // replacements weakly raise the winner
            if x == winner {
                (0, 2)
            } else if y == winner {
                (-2, 0)
            } else {
                (-2, 2)
            }
        }
    }
}

/// Maximin-specific feasibility: can alternative `c` be made the (lex
/// tie-broken) maximin winner by `1..=bmax` unit moves whose per-pair deltas
/// lie in the given ranges? Sound: `false` certifies impossibility.
fn maximin_target_possible(
    g: &Wmg,
    c: u8,
    bmax: u32,
    range: &dyn Fn(u8, u8) -> (i64, i64),
) -> bool {
    let m = g.m() as u8;
    for k in 1..=bmax as i64 {
        // Best reachable maximin score of c.
        let mut ub_c = i64::MAX;
        for x in 1..=m {
            if x != c {
                let (_, hi) = range(c, x);
                ub_c = ub_c.min(g.margin(c, x) + k * hi.max(0));
            }
        }
        // Worst reachable score of every rival.
        let mut ok = true;
        for d in 1..=m {
            if d == c {
                continue;
            }
            let mut lb_d = i64::MAX;
            for x in 1..=m {
                if x != d {
                    let (lo, _) = range(d, x);
                    lb_d = lb_d.min(g.margin(d, x) + k * lo.min(0));
                }
            }
            let beats = if c < d { ub_c >= lb_d } else { ub_c > lb_d };
            if !beats {
                ok = false;
                break;
            }
        }
        if ok {
            return true;
        }
    }
    false
}

/// Root filter: certifies sat = 1 for maximin when no target is reachable
/// within the generic delta ranges. Returns `false` when inconclusive.
fn maximin_root_filter(axiom: GroupAxiom, g: &Wmg, winner: u8, bmax: u32) -> bool {
    let m = g.m() as u8;
    for c in 1..=m {
        if c == winner {
            continue;
        }
        let range = |x: u8, y: u8| generic_delta_range(axiom, x, y, c, winner);
        if maximin_target_possible(g, c, bmax, &range) {
            return false;
        }
    }
    true
}

fn multiset_count(t: f64, b: u32) -> f64 {
    // sum over sizes 1..=b of C(t+s-1, s) = C(t+b, b) - 1
    let mut total = 0f64;
    let mut term = 1f64; // C(t-1+0, 0)
    for s in 1..=b as u64 {
        term *= (t + s as f64 - 1.0) / s as f64;
        total += term;
        if !total.is_finite() {
            return f64::INFINITY;
        }
    }
    total
}

/// As [`check_group`] but reusing a caller-maintained WMG of `h`.
pub fn check_group_prepared(
    axiom: GroupAxiom,
    rule: RuleId,
    h: &Histogram,
    g: &Wmg,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    let n = h.n();
    if b == 0 || b as u64 > n {
        return Err(AxiomError::BadB { b, n });
    }
    let bmax = match axiom {
        // Abstention may not empty the profile.
        GroupAxiom::Par => b.min((n - 1) as u32),
        _ => b,
    };
    if bmax == 0 {
        return Ok(CheckOutcome::pass(true));
    }
    let table = RankingTable::get(h.m());
    let winner = rule.winner_given(h, g);

    if rule == RuleId::Maximin && maximin_root_filter(axiom, g, winner, bmax) {
        return Ok(CheckOutcome::pass(true));
    }

    match opts.mode {
        CheckMode::Exact => {
            exact_search(axiom, rule, h, g, table, winner, bmax, b, opts)
        }
        CheckMode::Sampled { samples, seed } => {
            sampled_search(axiom, rule, h, g, table, winner, bmax, b, samples, seed)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn exact_search(
    axiom: GroupAxiom,
    rule: RuleId,
    h: &Histogram,
    g: &Wmg,
    table: &RankingTable,
    winner: u8,
    bmax: u32,
    b: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, AxiomError> {
    let m = h.m() as u8;

    // Budget precheck over the target-decomposed spaces actually enumerated.
    let mut candidates = 0f64;
    match axiom {
        GroupAxiom::Mm => {
            let t = build_types(axiom, table, h, winner, None).len() as f64;
            candidates = multiset_count(t, bmax);
        }
        _ => {
            for c in 1..=m {
                if c != winner {
                    let t = build_types(axiom, table, h, winner, Some(c)).len() as f64;
                    candidates += multiset_count(t, bmax);
                }
            }
        }
    }
    if candidates > opts.max_candidates {
        return Err(AxiomError::BudgetExceeded { candidates, cap: opts.max_candidates });
    }

    let run = |target: Option<u8>| -> Option<ViolationWitness> {
        let types = build_types(axiom, table, h, winner, target);
        if types.is_empty() {
            return None;
        }
        let mut ctx = SearchCtx::new(axiom, rule, table, h, bmax, winner, target, types, g);
        ctx.dfs().map(|counts| ctx.witness(b, &counts))
    };

    let found = match axiom {
        GroupAxiom::Mm => run(None),
        _ => (1..=m).filter(|&c| c != winner).find_map(|c| run(Some(c))),
    };
    match found {
        Some(w) => {
            debug_assert!(validate(&w).is_ok(), "{:?}", validate(&w));
            Ok(CheckOutcome::fail(w))
        }
        None => Ok(CheckOutcome::pass(true)),
    }
}

impl<'a> SearchCtx<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        axiom: GroupAxiom,
        rule: RuleId,
        table: &'a RankingTable,
        h: &'a Histogram,
        bmax: u32,
        current_winner: u8,
        target: Option<u8>,
        types: Vec<MoveType>,
        _g: &Wmg,
    ) -> SearchCtx<'a> {
        let m = table.m();
        let ngroups = types.iter().map(|t| t.group + 1).max().unwrap_or(0);
        let mut caps = vec![0u32; ngroups];
        for t in &types {
            caps[t.group] = h.count(t.from);
        }
        // Suffix per-pair delta envelopes for pruning.
        let nt = types.len();
        let mut suffix_hi = vec![vec![i64::MIN; m * m]; nt + 1];
        let mut suffix_lo = vec![vec![i64::MAX; m * m]; nt + 1];
        for i in (0..nt).rev() {
            for p in 0..m * m {
                suffix_hi[i][p] = suffix_hi[i + 1][p].max(types[i].delta[p]);
                suffix_lo[i][p] = suffix_lo[i + 1][p].min(types[i].delta[p]);
            }
        }
        SearchCtx {
            axiom,
            rule,
            table,
            h,
            bmax,
            current_winner,
            target,
            types,
            caps,
            suffix_hi,
            suffix_lo,
        }
    }

    /// Depth-first multiset enumeration; returns the per-type counts of the
    /// first violating action in the fixed order, if any.
    fn dfs(&mut self) -> Option<Vec<u32>> {
        let mut scratch_h = self.h.clone();
        let mut g = Wmg::from_histogram(self.h);
        let mut counts = vec![0u32; self.types.len()];
        let mut result = None;
        self.rec(0, 0, &mut scratch_h, &mut g, &mut counts, &mut result);
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &mut self,
        i: usize,
        used: u32,
        h: &mut Histogram,
        g: &mut Wmg,
        counts: &mut Vec<u32>,
        result: &mut Option<Vec<u32>>,
    ) {
        if result.is_some() || i == self.types.len() || used == self.bmax {
            return;
        }
        // Maximin prune: no completion from the remaining types can make the
        // target win (or, for Mm, change the winner).
        if self.rule == RuleId::Maximin && self.prune(i, self.bmax - used, g) {
            return;
        }
        // zero of this type
        self.rec(i + 1, used, h, g, counts, result);
        if result.is_some() {
            return;
        }
        let ty = self.types[i].clone();
        let cap = self.caps[ty.group].min(self.bmax - used);
        let mut applied = 0u32;
        for k in 1..=cap {
            self.apply(&ty, h, g, 1);
            self.caps[ty.group] -= 1;
            applied = k;
            counts[i] = k;
            if self.hit(h, g) {
                *result = Some(counts.clone());
                break;
            }
            self.rec(i + 1, used + k, h, g, counts, result);
            if result.is_some() {
                break;
            }
        }
        counts[i] = 0;
        self.apply(&ty, h, g, -(applied as i64));
        self.caps[ty.group] += applied;
    }

    fn apply(&self, ty: &MoveType, h: &mut Histogram, g: &mut Wmg, times: i64) {
        if times == 0 {
            return;
        }
        let m = self.h.m();
        for a in 1..=m as u8 {
            for bb in (a + 1)..=m as u8 {
                let d = ty.delta[(a as usize - 1) * m + bb as usize - 1];
                if d != 0 {
                    g.add_margin(a, bb, d * times);
                }
            }
        }
        let cnt = h.count_mut(ty.from);
        *cnt = (*cnt as i64 - times) as u32;
        if let Some(to) = ty.to {
            let cnt = h.count_mut(to);
            *cnt = (*cnt as i64 + times) as u32;
        }
    }

    fn hit(&self, h: &Histogram, g: &Wmg) -> bool {
        let w = self.rule.winner_given(h, g);
        match self.target {
            Some(c) => w == c,
            None => w != self.current_winner,
        }
    }

    fn prune(&self, i: usize, remaining: u32, g: &Wmg) -> bool {
        let m = self.h.m() as u8;
        let hi = &self.suffix_hi[i];
        let lo = &self.suffix_lo[i];
        let range = |x: u8, y: u8| -> (i64, i64) {
            let p = (x as usize - 1) * m as usize + y as usize - 1;
            (lo[p], hi[p])
        };
        match self.target {
            Some(c) => !maximin_target_possible(g, c, remaining.max(1), &range),
            None => {
                // Mm: prune when no alternative can displace the winner.
                for c in 1..=m {
                    if c != self.current_winner
                        && maximin_target_possible(g, c, remaining.max(1), &range)
                    {
                        return false;
                    }
                }
                true
            }
        }
    }

    fn witness(&self, b: u32, counts: &[u32]) -> ViolationWitness {
        let moves: Vec<Move> = self
            .types
            .iter()
            .zip(counts.iter())
            .filter(|(_, &k)| k > 0)
            .map(|(ty, &k)| Move {
                from: self.table.ranking(ty.from).clone(),
                to: ty.to.map(|t| self.table.ranking(t).clone()),
                count: k,
            })
            .collect();
        let action = CoalitionAction { kind: self.axiom.action_kind(), moves };
        let after = action.apply(self.h).expect("witness action feasible");
        let winner_after = self.rule.winner(&after).expect("rule applies");
        ViolationWitness {
            axiom: self.axiom.axiom_id(),
            rule: self.rule,
            b,
            before: self.h.clone(),
            action,
            after,
            winner_before: self.current_winner,
            winner_after,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sampled_search(
    axiom: GroupAxiom,
    rule: RuleId,
    h: &Histogram,
    _g: &Wmg,
    table: &RankingTable,
    winner: u8,
    bmax: u32,
    b: u32,
    samples: u64,
    seed: u64,
) -> Result<CheckOutcome, AxiomError> {
    let m = h.m() as u8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Pre-build type lists per target (None key for Mm).
    let targets: Vec<Option<u8>> = match axiom {
        GroupAxiom::Mm => vec![None],
        _ => (1..=m).filter(|&c| c != winner).map(Some).collect(),
    };
    let lists: Vec<(Option<u8>, Vec<MoveType>)> = targets
        .into_iter()
        .map(|t| (t, build_types(axiom, table, h, winner, t)))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lists.is_empty() {
        return Ok(CheckOutcome::pass(true));
    }
    // Per-group vote capacities (types sharing a source share its supply).
    let group_caps: Vec<Vec<u32>> = lists
        .iter()
        .map(|(_, types)| {
            let ngroups = types.iter().map(|t| t.group + 1).max().unwrap_or(0);
            let mut caps = vec![0u32; ngroups];
            for t in types {
                caps[t.group] = h.count(t.from);
            }
            caps
        })
        .collect();
    let mut scratch = h.clone();
    let mut gsc = Wmg::from_histogram(h);
    for _ in 0..samples {
        let which = rng.random_range(0..lists.len());
        let (target, types) = &lists[which];
        let size = rng.random_range(1..=bmax);
        let mut counts = vec![0u32; types.len()];
        let mut used = vec![0u32; group_caps[which].len()];
        let mut ok = true;
        for _ in 0..size {
            let pick = rng.random_range(0..types.len());
            let gid = types[pick].group;
            if used[gid] >= group_caps[which][gid] {
                ok = false;
                break;
            }
            used[gid] += 1;
            counts[pick] += 1;
        }
        if !ok {
            continue;
        }
        // apply
        for (ty, &k) in types.iter().zip(counts.iter()) {
            if k > 0 {
                apply_delta(&mut scratch, &mut gsc, table, ty, k as i64);
            }
        }
        let w = rule.winner_given(&scratch, &gsc);
        let hit = match target {
            Some(c) => w == *c,
            None => w != winner,
        };
        if hit {
            let moves: Vec<Move> = types
                .iter()
                .zip(counts.iter())
                .filter(|(_, &k)| k > 0)
                .map(|(ty, &k)| Move {
                    from: table.ranking(ty.from).clone(),
                    to: ty.to.map(|t| table.ranking(t).clone()),
                    count: k,
                })
                .collect();
            let action = CoalitionAction { kind: axiom.action_kind(), moves };
            let after = action.apply(h).expect("sampled action feasible");
            let winner_after = rule.winner(&after).expect("rule applies");
            let witness = ViolationWitness {
                axiom: axiom.axiom_id(),
                rule,
                b,
                before: h.clone(),
                action,
                after,
                winner_before: winner,
                winner_after,
            };
            if validate(&witness).is_ok() {
                return Ok(CheckOutcome::fail(witness));
            }
        }
        // undo
        for (ty, &k) in types.iter().zip(counts.iter()) {
            if k > 0 {
                apply_delta(&mut scratch, &mut gsc, table, ty, -(k as i64));
            }
        }
    }
    Ok(CheckOutcome { sat: true, witness: None, exhaustive: false })
}

fn apply_delta(h: &mut Histogram, g: &mut Wmg, table: &RankingTable, ty: &MoveType, times: i64) {
    let m = table.m();
    for a in 1..=m as u8 {
        for bb in (a + 1)..=m as u8 {
            let d = ty.delta[(a as usize - 1) * m + bb as usize - 1];
            if d != 0 {
                g.add_margin(a, bb, d * times);
            }
        }
    }
    let cnt = h.count_mut(ty.from);
    *cnt = (*cnt as i64 - times) as u32;
    if let Some(to) = ty.to {
        let cnt = h.count_mut(to);
        *cnt = (*cnt as i64 + times) as u32;
    }
}
