//! Violation templates: tree-shaped flip/change scripts that, walked from a
//! suitable root election, provably run into an axiom violation against any
//! voting rule.
//!
//! A template is stored abstractly: each edge op carries a *unit* count, one
//! unit meaning "square-root-of-n votes". [`Template::instantiate`] scales a
//! template to a concrete election size `n` and coalition bound `B`, turning
//! every unit into a run of coalition-sized operations. [`walk`] then drives
//! a rule along the tree, extracts a witness the moment the rule slips, and
//! asserts the labeled Condorcet winner at the leaves.
//!
//! [`walk`]: crate::templates::walk::walk

mod builtins;
mod rootgen;
mod text;
pub mod walk;

pub use builtins::{builtin, builtin_names};
pub use rootgen::generate_root_profile;
pub use text::{parse_template, template_to_text};

use std::collections::HashMap;

use thiserror::Error;

use crate::axioms::GroupAxiom;
use crate::profile::Histogram;
use crate::ranking::{Ranking, RankingTable};
use crate::wmg::Wmg;

/// Per-branch budget: no root-to-leaf path may flip more than this many
/// units (of `ceil(sqrt n)` votes each).
pub const PATH_UNIT_BUDGET: u32 = 7;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("template invalid: {0}")]
    Invalid(String),
    #[error("unknown builtin template {0:?}")]
    UnknownBuiltin(String),
    #[error("coalition bound B={b} outside 1..=sqrt(n) for n={n}")]
    BadScale { n: u64, b: u32 },
    #[error("template is not instantiated; call instantiate(n, B) first")]
    NotInstantiated,
    #[error("template is already instantiated")]
    AlreadyInstantiated,
    #[error("n={n} too small: type [{ranking}] needs {need} votes but at most {available} fit the root")]
    NTooSmall { n: u64, ranking: Ranking, need: u64, available: u64 },
    #[error("root fails the membership predicate")]
    RootOutsideMembership,
    #[error("walk ran out of votes: op needs {need} x [{ranking}], {have} available")]
    InsufficientVotes { ranking: Ranking, need: u32, have: u32 },
    #[error("leaf declares Condorcet winner {expected} but the election has {actual:?}")]
    LeafConditionFailed { expected: u8, actual: Option<u8> },
    #[error("walk reached a leaf without a violation (root outside the guarantee region)")]
    NoViolationFound,
    #[error(transparent)]
    Witness(#[from] crate::witness::WitnessError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    /// Replace votes by their reverses.
    Flip,
    /// Replace votes by a designated other ranking.
    Change,
}

/// One scripted operation. In an abstract template `count` is in units of
/// `ceil(sqrt n)` votes; after instantiation it is a concrete vote count of
/// at most the coalition bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Op {
    pub kind: OpKind,
    pub count: u32,
    pub from: Ranking,
    /// `None` for flips (the reverse is implied).
    pub to: Option<Ranking>,
}

impl Op {
    pub fn target(&self) -> Ranking {
        match self.kind {
            OpKind::Flip => self.from.reversed(),
            OpKind::Change => self.to.clone().expect("change ops carry targets"),
        }
    }
}

/// A winner-conditioned edge: taken when the current winner is in `winners`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub winners: Vec<u8>,
    pub ops: Vec<Op>,
    pub child: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Internal { name: String, branches: Vec<Branch> },
    Leaf { name: String, condorcet_winner: u8 },
}

impl Node {
    pub fn name(&self) -> &str {
        match self {
            Node::Internal { name, .. } => name,
            Node::Leaf { name, .. } => name,
        }
    }
}

/// Which root elections a template applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootPredicate {
    /// m=3: the three cycle margins `1->2`, `2->3`, `3->1` lie in
    /// `[0, sqrt n]`.
    CmM3,
    /// m=4: every pairwise margin within `sqrt n` of `sqrt n` times the
    /// designed root weight, and the histogram within `4 sqrt n` of uniform.
    CpM4,
    /// m>=5: the CpM4 conditions on alternatives 1..4 plus margin at least
    /// `20 sqrt n` on every edge from {1..4} to {5..m}.
    GeneralM,
}

impl RootPredicate {
    pub fn name(&self) -> &'static str {
        match self {
            RootPredicate::CmM3 => "cm_m3",
            RootPredicate::CpM4 => "cp_m4",
            RootPredicate::GeneralM => "general_m",
        }
    }

    pub fn parse(s: &str) -> Option<RootPredicate> {
        match s {
            "cm_m3" => Some(RootPredicate::CmM3),
            "cp_m4" => Some(RootPredicate::CpM4),
            "general_m" => Some(RootPredicate::GeneralM),
            _ => None,
        }
    }
}

/// Designed root pairwise weights for the four-alternative tree, in units of
/// `sqrt n`: `1->2` by 8, `3->1` by 12, `2->4` by 12, `4->3` by 8, the pairs
/// (1,4) and (2,3) balanced.
pub fn cp_root_weights() -> [((u8, u8), i64); 6] {
    [
        ((1, 2), 8),
        ((1, 3), -12),
        ((1, 4), 0),
        ((2, 3), 0),
        ((2, 4), 12),
        ((3, 4), -8),
    ]
}

/// Tests root membership. `b` is validated against `1..=sqrt(n)`.
pub fn check_root_membership(
    pred: RootPredicate,
    h: &Histogram,
    b: u32,
) -> Result<bool, TemplateError> {
    let n = h.n();
    if b == 0 || (b as u64) * (b as u64) > n {
        return Err(TemplateError::BadScale { n, b });
    }
    let s = (n as f64).sqrt();
    let g = Wmg::from_histogram(h);
    let ok = match pred {
        RootPredicate::CmM3 => {
            h.m() == 3 && {
                let cycle = [g.margin(1, 2), g.margin(2, 3), g.margin(3, 1)];
                cycle.iter().all(|&w| w >= 0 && (w as f64) <= s)
            }
        }
        RootPredicate::CpM4 => h.m() == 4 && cp_block_ok(h, &g, s),
        RootPredicate::GeneralM => {
            h.m() >= 5 && cp_block_ok(h, &g, s) && {
                let m = h.m() as u8;
                (1..=4u8).all(|a| (5..=m).all(|x| g.margin(a, x) as f64 >= 20.0 * s))
            }
        }
    };
    Ok(ok)
}

fn cp_block_ok(h: &Histogram, g: &Wmg, s: f64) -> bool {
    for ((a, b), w) in cp_root_weights() {
        if (g.margin(a, b) as f64 - s * w as f64).abs() > s {
            return false;
        }
    }
    let table = RankingTable::get(h.m());
    let target = h.n() as f64 / table.count() as f64;
    h.counts().iter().all(|&c| (c as f64 - target).abs() <= 4.0 * s)
}

/// A violation template: a winner-conditioned tree of flip/change scripts
/// with Condorcet-labeled leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub m: usize,
    /// Which group axiom the walker's stopping rule extracts (the Condorcet
    /// criterion is always checked at the leaves).
    pub axiom: GroupAxiom,
    pub predicate: RootPredicate,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    /// `Some((n, b))` once instantiated.
    pub scale: Option<(u64, u32)>,
}

impl Template {
    /// Structural validation: full and disjoint winner coverage at every
    /// internal node, tree-shaped children, flip/change shape checks, and
    /// the per-branch unit budget.
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.nodes.is_empty() {
            return Err(TemplateError::Invalid("no nodes".into()));
        }
        let mut indegree = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Internal { name, branches } = node {
                let mut covered = vec![false; self.m];
                if branches.is_empty() {
                    return Err(TemplateError::Invalid(format!("node {name} has no branches")));
                }
                let mut children_seen = Vec::new();
                for br in branches {
                    for &w in &br.winners {
                        if w == 0 || w as usize > self.m {
                            return Err(TemplateError::Invalid(format!(
                                "node {name}: winner {w} out of range"
                            )));
                        }
                        if covered[w as usize - 1] {
                            return Err(TemplateError::Invalid(format!(
                                "node {name}: winner {w} appears in two conditions"
                            )));
                        }
                        covered[w as usize - 1] = true;
                    }
                    if br.child >= self.nodes.len() || br.child == i {
                        return Err(TemplateError::Invalid(format!(
                            "node {name}: branch child out of range"
                        )));
                    }
                    if !children_seen.contains(&br.child) {
                        children_seen.push(br.child);
                        indegree[br.child] += 1;
                    }
                    if br.ops.is_empty() {
                        return Err(TemplateError::Invalid(format!(
                            "node {name}: branch with no operations"
                        )));
                    }
                    for op in &br.ops {
                        if op.from.m() != self.m {
                            return Err(TemplateError::Invalid(format!(
                                "node {name}: op ranking has wrong m"
                            )));
                        }
                        if op.count == 0 {
                            return Err(TemplateError::Invalid(format!(
                                "node {name}: zero-count op"
                            )));
                        }
                        match op.kind {
                            OpKind::Flip => {
                                if let Some(to) = &op.to {
                                    if *to != op.from.reversed() {
                                        return Err(TemplateError::Invalid(format!(
                                            "node {name}: flip target must be the reverse"
                                        )));
                                    }
                                }
                            }
                            OpKind::Change => {
                                let to = op.to.as_ref().ok_or_else(|| {
                                    TemplateError::Invalid(format!(
                                        "node {name}: change op without target"
                                    ))
                                })?;
                                if to.m() != self.m || *to == op.from {
                                    return Err(TemplateError::Invalid(format!(
                                        "node {name}: bad change target"
                                    )));
                                }
                            }
                        }
                    }
                }
                if let Some(missing) = covered.iter().position(|&c| !c) {
                    return Err(TemplateError::Invalid(format!(
                        "node {name}: winner-conditions do not cover alternative {}",
                        missing + 1
                    )));
                }
            } else if let Node::Leaf { name, condorcet_winner } = node {
                if *condorcet_winner == 0 || *condorcet_winner as usize > self.m {
                    return Err(TemplateError::Invalid(format!(
                        "leaf {name}: Condorcet label out of range"
                    )));
                }
            }
        }
        if indegree[0] != 0 {
            return Err(TemplateError::Invalid("root has a parent".into()));
        }
        for (i, d) in indegree.iter().enumerate().skip(1) {
            if *d == 0 {
                return Err(TemplateError::Invalid(format!(
                    "node {} unreachable",
                    self.nodes[i].name()
                )));
            }
            if *d > 1 {
                return Err(TemplateError::Invalid(format!(
                    "node {} has several parents",
                    self.nodes[i].name()
                )));
            }
        }
        if self.scale.is_none() {
            for (path_units, _) in self.leaf_paths() {
                if path_units > PATH_UNIT_BUDGET {
                    return Err(TemplateError::Invalid(format!(
                        "a branch flips {path_units} units, over the budget {PATH_UNIT_BUDGET}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total abstract units across all distinct edges of the tree.
    pub fn total_units(&self) -> u32 {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Internal { branches, .. } => {
                    let mut seen = Vec::new();
                    let mut sum = 0;
                    for br in branches {
                        if !seen.contains(&br.child) {
                            seen.push(br.child);
                            sum += br.ops.iter().map(|o| o.count).sum::<u32>();
                        }
                    }
                    sum
                }
                Node::Leaf { .. } => 0,
            })
            .sum()
    }

    /// Unit totals along every root-to-leaf path, with per-type consumption.
    fn leaf_paths(&self) -> Vec<(u32, HashMap<Ranking, u32>)> {
        let mut out = Vec::new();
        let mut consumption: HashMap<Ranking, u32> = HashMap::new();
        self.walk_paths(0, 0, &mut consumption, &mut out);
        out
    }

    fn walk_paths(
        &self,
        node: usize,
        units: u32,
        consumption: &mut HashMap<Ranking, u32>,
        out: &mut Vec<(u32, HashMap<Ranking, u32>)>,
    ) {
        match &self.nodes[node] {
            Node::Leaf { .. } => out.push((units, consumption.clone())),
            Node::Internal { branches, .. } => {
                let mut seen = Vec::new();
                for br in branches {
                    if seen.contains(&br.child) {
                        continue;
                    }
                    seen.push(br.child);
                    let added: u32 = br.ops.iter().map(|o| o.count).sum();
                    for op in &br.ops {
                        *consumption.entry(op.from.clone()).or_insert(0) += op.count;
                    }
                    self.walk_paths(br.child, units + added, consumption, out);
                    for op in &br.ops {
                        *consumption.get_mut(&op.from).unwrap() -= op.count;
                    }
                }
            }
        }
    }

    /// Worst-case per-type unit consumption over all root-to-leaf paths.
    pub fn max_type_consumption(&self) -> HashMap<Ranking, u32> {
        let mut max: HashMap<Ranking, u32> = HashMap::new();
        for (_, per_path) in self.leaf_paths() {
            for (r, units) in per_path {
                let e = max.entry(r).or_insert(0);
                *e = (*e).max(units);
            }
        }
        max
    }

    /// Scales the abstract template to election size `n` and coalition bound
    /// `b`: each unit becomes `ceil(ceil(sqrt n)/b)` operations, the first
    /// ones of size `b` and the last of the remainder, so a unit moves
    /// exactly `ceil(sqrt n)` votes.
    pub fn instantiate(&self, n: u64, b: u32) -> Result<Template, TemplateError> {
        if self.scale.is_some() {
            return Err(TemplateError::AlreadyInstantiated);
        }
        if b == 0 || (b as u64) * (b as u64) > n {
            return Err(TemplateError::BadScale { n, b });
        }
        self.validate()?;
        let s = (n as f64).sqrt().ceil() as u32;
        let per_unit_ops = s.div_ceil(b);
        let last = s - b * (per_unit_ops - 1);
        let expand = |op: &Op| -> Vec<Op> {
            let mut run = Vec::with_capacity((op.count * per_unit_ops) as usize);
            for _ in 0..op.count {
                for i in 0..per_unit_ops {
                    let size = if i + 1 == per_unit_ops { last } else { b };
                    run.push(Op {
                        kind: op.kind,
                        count: size,
                        from: op.from.clone(),
                        to: op.to.clone(),
                    });
                }
            }
            run
        };
        let nodes = self
            .nodes
            .iter()
            .map(|node| match node {
                Node::Leaf { .. } => node.clone(),
                Node::Internal { name, branches } => Node::Internal {
                    name: name.clone(),
                    branches: branches
                        .iter()
                        .map(|br| Branch {
                            winners: br.winners.clone(),
                            ops: br.ops.iter().flat_map(|o| expand(o)).collect(),
                            child: br.child,
                        })
                        .collect(),
                },
            })
            .collect();
        Ok(Template { nodes, scale: Some((n, b)), ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_cm_m3_shape() {
        let t = builtin("cm_m3", None).unwrap();
        t.validate().unwrap();
        assert_eq!(t.m, 3);
        assert_eq!(t.total_units(), 3);
        // Three branches: [231]->[321], [312]->[132], [123]->[213].
        match &t.nodes[0] {
            Node::Internal { branches, .. } => {
                assert_eq!(branches.len(), 3);
                let ops: Vec<(&Ranking, &Ranking)> = branches
                    .iter()
                    .map(|b| (&b.ops[0].from, b.ops[0].to.as_ref().unwrap()))
                    .collect();
                assert_eq!(ops[0].0.order(), &[2, 3, 1]);
                assert_eq!(ops[0].1.order(), &[3, 2, 1]);
                assert_eq!(ops[1].0.order(), &[3, 1, 2]);
                assert_eq!(ops[1].1.order(), &[1, 3, 2]);
                assert_eq!(ops[2].0.order(), &[1, 2, 3]);
                assert_eq!(ops[2].1.order(), &[2, 1, 3]);
            }
            _ => panic!("root must be internal"),
        }
    }

    #[test]
    fn builtin_cp_m4_unit_count() {
        let t = builtin("cp_m4", None).unwrap();
        t.validate().unwrap();
        assert_eq!(t.total_units(), 20);
        for (units, _) in t.leaf_paths() {
            assert!(units <= PATH_UNIT_BUDGET);
        }
    }

    #[test]
    fn uncovered_conditions_rejected() {
        let mut t = builtin("cm_m3", None).unwrap();
        if let Node::Internal { branches, .. } = &mut t.nodes[0] {
            branches[0].winners = vec![]; // drop coverage of alternative 1
        }
        assert!(matches!(t.validate(), Err(TemplateError::Invalid(_))));
    }

    #[test]
    fn instantiate_sizes_exact_division() {
        // one abstract unit at n=400, B=4: 5 operations of size 4.
        let t = builtin("cm_m3", None).unwrap();
        let inst = t.instantiate(400, 4).unwrap();
        match &inst.nodes[0] {
            Node::Internal { branches, .. } => {
                let sizes: Vec<u32> = branches[0].ops.iter().map(|o| o.count).collect();
                assert_eq!(sizes, vec![4, 4, 4, 4, 4]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn instantiate_sizes_with_remainder() {
        // n=401: ceil(sqrt 401) = 21, B=4: sizes 4,4,4,4,4,1.
        let t = builtin("cm_m3", None).unwrap();
        let inst = t.instantiate(401, 4).unwrap();
        match &inst.nodes[0] {
            Node::Internal { branches, .. } => {
                let sizes: Vec<u32> = branches[0].ops.iter().map(|o| o.count).collect();
                assert_eq!(sizes, vec![4, 4, 4, 4, 4, 1]);
                assert_eq!(sizes.iter().sum::<u32>(), 21);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn instantiated_op_total_matches_scale() {
        // Total operations = 20 units * per-unit run length.
        let t = builtin("cp_m4", None).unwrap();
        for (n, b) in [(400u64, 1u32), (400, 4), (900, 5), (2500, 7)] {
            let inst = t.instantiate(n, b).unwrap();
            let s = (n as f64).sqrt().ceil() as u32;
            let per_unit = s.div_ceil(b);
            let total: u32 = inst
                .nodes
                .iter()
                .map(|node| match node {
                    Node::Internal { branches, .. } => {
                        let mut seen = Vec::new();
                        let mut sum = 0;
                        for br in branches {
                            if !seen.contains(&br.child) {
                                seen.push(br.child);
                                sum += br.ops.len() as u32;
                            }
                        }
                        sum
                    }
                    _ => 0,
                })
                .sum();
            assert_eq!(total, 20 * per_unit);
        }
    }

    #[test]
    fn instantiate_rejects_bad_scale() {
        let t = builtin("cm_m3", None).unwrap();
        assert!(matches!(t.instantiate(100, 11), Err(TemplateError::BadScale { .. })));
        assert!(matches!(t.instantiate(100, 0), Err(TemplateError::BadScale { .. })));
        let inst = t.instantiate(100, 10).unwrap();
        assert!(matches!(inst.instantiate(100, 1), Err(TemplateError::AlreadyInstantiated)));
    }

    #[test]
    fn membership_examples() {
        // Exactly uniform histogram: all cycle margins 0, inside [0, sqrt n].
        let h = Histogram::uniform(3, 100); // n = 600
        assert!(check_root_membership(RootPredicate::CmM3, &h, 5).unwrap());
        // Uniform m=4 fails CpM4: zero margins sit 8*sqrt(n) away from the
        // designed 1->2 weight.
        let h4 = Histogram::uniform(4, 25); // n = 600
        assert!(!check_root_membership(RootPredicate::CpM4, &h4, 5).unwrap());
        // b outside 1..=sqrt(n) is an argument error.
        assert!(check_root_membership(RootPredicate::CmM3, &h, 30).is_err());
    }

    #[test]
    fn consumption_accounts_for_worst_path() {
        let t = builtin("cp_m4", None).unwrap();
        let c = t.max_type_consumption();
        assert_eq!(c[&Ranking::from_slice(&[4, 3, 2, 1])], 2);
        assert_eq!(c[&Ranking::from_slice(&[2, 4, 3, 1])], 3);
        assert_eq!(c[&Ranking::from_slice(&[4, 3, 1, 2])], 5);
        assert_eq!(c[&Ranking::from_slice(&[1, 2, 3, 4])], 2);
        assert_eq!(c[&Ranking::from_slice(&[3, 1, 2, 4])], 3);
        assert_eq!(c[&Ranking::from_slice(&[1, 2, 4, 3])], 5);
    }
}
