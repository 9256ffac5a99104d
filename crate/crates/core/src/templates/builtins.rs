//! The shipped violation templates.
//!
//! The three-alternative tree (`cm_m3`, `cs_m3`) has three one-unit change
//! branches, one per possible root winner, each demoting a neighbor of the
//! winner so that a third alternative becomes the Condorcet winner at the
//! leaf.
//!
//! The four-alternative tree (`cp_m4`, `ch_m4`) pairs root winners {1,2} and
//! {3,4}. Each side first flips two units that add votes ranking the pair on
//! top, then splits: a three-unit leg demotes the first member of the pair,
//! a five-unit leg the second. The root weights in [`cp_root_weights`] make
//! every leaf's Condorcet winner certain as long as the root margins sit
//! within one `sqrt n` band of them, with the winner-trapping property that
//! any off-script winner move fires the walker's stopping rule first.
//!
//! `general_m` extends the four-alternative tree to m >= 5: every flipped
//! ranking gets the suffix `5 > ... > m`, and a seventh-unit branch from the
//! root handles winners outside {1..4}, ending in a leaf where 4 is the
//! Condorcet winner.

use crate::axioms::GroupAxiom;
use crate::ranking::Ranking;

use super::{Branch, Node, Op, OpKind, RootPredicate, Template, TemplateError};

pub fn builtin_names() -> &'static [&'static str] {
    &["cm_m3", "cs_m3", "cp_m4", "ch_m4", "general_m"]
}

/// Returns a builtin template by name. `general_m` needs the number of
/// alternatives (at least 5); the others ignore it.
pub fn builtin(name: &str, m: Option<usize>) -> Result<Template, TemplateError> {
    match name {
        "cm_m3" => Ok(m3_tree("cm_m3", GroupAxiom::Mm)),
        "cs_m3" => Ok(m3_tree("cs_m3", GroupAxiom::Sp)),
        "cp_m4" => Ok(m4_tree("cp_m4", GroupAxiom::Par, 4)),
        "ch_m4" => Ok(m4_tree("ch_m4", GroupAxiom::Hm, 4)),
        "general_m" => {
            let m = m.ok_or_else(|| {
                TemplateError::Invalid("general_m needs --m (at least 5)".into())
            })?;
            if m < 5 {
                return Err(TemplateError::Invalid(format!(
                    "general_m needs m >= 5, got {m}"
                )));
            }
            Ok(general_tree(m))
        }
        other => Err(TemplateError::UnknownBuiltin(other.to_string())),
    }
}

fn r(head: &[u8], m: usize) -> Ranking {
    let mut order = head.to_vec();
    order.extend(head.len() as u8 + 1..=m as u8);
    Ranking::new(order).expect("builtin ranking")
}

fn change(units: u32, from: &Ranking, to: &Ranking) -> Op {
    Op { kind: OpKind::Change, count: units, from: from.clone(), to: Some(to.clone()) }
}

fn flip(units: u32, from: &Ranking) -> Op {
    Op { kind: OpKind::Flip, count: units, from: from.clone(), to: None }
}

fn m3_tree(name: &str, axiom: GroupAxiom) -> Template {
    let rk = |o: &[u8]| Ranking::from_slice(o);
    let nodes = vec![
        Node::Internal {
            name: "root".into(),
            branches: vec![
                Branch {
                    winners: vec![1],
                    ops: vec![change(1, &rk(&[2, 3, 1]), &rk(&[3, 2, 1]))],
                    child: 1,
                },
                Branch {
                    winners: vec![2],
                    ops: vec![change(1, &rk(&[3, 1, 2]), &rk(&[1, 3, 2]))],
                    child: 2,
                },
                Branch {
                    winners: vec![3],
                    ops: vec![change(1, &rk(&[1, 2, 3]), &rk(&[2, 1, 3]))],
                    child: 3,
                },
            ],
        },
        Node::Leaf { name: "leaf1".into(), condorcet_winner: 3 },
        Node::Leaf { name: "leaf2".into(), condorcet_winner: 1 },
        Node::Leaf { name: "leaf3".into(), condorcet_winner: 2 },
    ];
    Template {
        name: name.into(),
        m: 3,
        axiom,
        predicate: RootPredicate::CmM3,
        nodes,
        scale: None,
    }
}

/// The four-alternative tree, generalized to m alternatives by suffixing
/// every scripted ranking with `5 > ... > m` (a no-op for m = 4).
fn m4_tree(name: &str, axiom: GroupAxiom, m: usize) -> Template {
    let nodes = vec![
        Node::Internal {
            name: "root".into(),
            branches: vec![
                // Two units that add [1234...]-votes while 1 or 2 leads.
                Branch { winners: vec![1, 2], ops: vec![flip(2, &r(&[4, 3, 2, 1], m))], child: 1 },
                // Mirror side: two units adding [4321...]-votes.
                Branch { winners: vec![3, 4], ops: vec![flip(2, &r(&[1, 2, 3, 4], m))], child: 2 },
            ],
        },
        Node::Internal {
            name: "left".into(),
            branches: vec![
                // Winner 1: subtract three units ranking 1 last; 3 takes over.
                // (Winners 3 and 4 cannot reach this node; they are folded in
                // to keep the conditions total.)
                Branch {
                    winners: vec![1, 3, 4],
                    ops: vec![flip(3, &r(&[2, 4, 3, 1], m))],
                    child: 3,
                },
                // Winner 2: subtract five units ranking 2 last; 1 takes over.
                Branch { winners: vec![2], ops: vec![flip(5, &r(&[4, 3, 1, 2], m))], child: 4 },
            ],
        },
        Node::Internal {
            name: "right".into(),
            branches: vec![
                Branch {
                    winners: vec![4, 1, 2],
                    ops: vec![flip(3, &r(&[3, 1, 2, 4], m))],
                    child: 5,
                },
                Branch { winners: vec![3], ops: vec![flip(5, &r(&[1, 2, 4, 3], m))], child: 6 },
            ],
        },
        Node::Leaf { name: "leaf_l1".into(), condorcet_winner: 3 },
        Node::Leaf { name: "leaf_l2".into(), condorcet_winner: 1 },
        Node::Leaf { name: "leaf_r4".into(), condorcet_winner: 2 },
        Node::Leaf { name: "leaf_r3".into(), condorcet_winner: 4 },
    ];
    Template {
        name: name.into(),
        m,
        axiom,
        predicate: RootPredicate::CpM4,
        nodes,
        scale: None,
    }
}

fn general_tree(m: usize) -> Template {
    let mut t = m4_tree("general_m", GroupAxiom::Par, m);
    t.predicate = RootPredicate::GeneralM;
    // Extra branch from the root for winners outside {1..4}: seven units
    // flipping votes that rank 1..4 on top, after which 4 beats everything.
    let leaf = t.nodes.len();
    if let Node::Internal { branches, .. } = &mut t.nodes[0] {
        branches.push(Branch {
            winners: (5..=m as u8).collect(),
            ops: vec![flip(7, &r(&[1, 2, 3, 4], m))],
            child: leaf,
        });
    }
    // The mirror side of the root uses the same source type [1,2,3,4,...];
    // the extra branch must therefore not collide with it: it does not —
    // branches are alternatives, only one is ever walked.
    t.nodes.push(Node::Leaf { name: "leaf_tail".into(), condorcet_winner: 4 });
    t
}
