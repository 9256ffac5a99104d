//! Structured text format for templates.
//!
//! ```text
//! name: cm_m3
//! m: 3
//! axiom: mm
//! predicate: cm_m3
//!
//! [node] root
//! on {1} goto leaf1
//! on {2} goto leaf2
//! on {3} goto leaf3
//!
//! [edge] root -> leaf1
//! change 1 2>3>1 3>2>1
//!
//! [leaf] leaf1
//! condorcet_winner: 3
//! ```
//!
//! Edges list ops as `flip COUNT FROM` or `change COUNT FROM TO`, with
//! counts in abstract units. Blank lines and `#` comments are ignored. The
//! first `[node]` section is the root.

use std::collections::HashMap;

use crate::axioms::GroupAxiom;
use crate::ranking::Ranking;

use super::{Branch, Node, Op, OpKind, RootPredicate, Template, TemplateError};

pub fn template_to_text(t: &Template) -> String {
    let axiom = match t.axiom {
        GroupAxiom::Par => "par",
        GroupAxiom::Hm => "hm",
        GroupAxiom::Mm => "mm",
        GroupAxiom::Sp => "sp",
    };
    let mut s = String::new();
    s.push_str(&format!("name: {}\n", t.name));
    s.push_str(&format!("m: {}\n", t.m));
    s.push_str(&format!("axiom: {axiom}\n"));
    s.push_str(&format!("predicate: {}\n", t.predicate.name()));
    for node in &t.nodes {
        s.push('\n');
        match node {
            Node::Internal { name, branches } => {
                s.push_str(&format!("[node] {name}\n"));
                for br in branches {
                    let winners: Vec<String> =
                        br.winners.iter().map(|w| w.to_string()).collect();
                    s.push_str(&format!(
                        "on {{{}}} goto {}\n",
                        winners.join(","),
                        t.nodes[br.child].name()
                    ));
                }
            }
            Node::Leaf { name, condorcet_winner } => {
                s.push_str(&format!("[leaf] {name}\ncondorcet_winner: {condorcet_winner}\n"));
            }
        }
    }
    // Edges after all nodes, in node order; folded conditions share an edge.
    for node in &t.nodes {
        if let Node::Internal { name, branches } = node {
            let mut written = Vec::new();
            for br in branches {
                if written.contains(&br.child) {
                    continue;
                }
                written.push(br.child);
                s.push('\n');
                s.push_str(&format!("[edge] {name} -> {}\n", t.nodes[br.child].name()));
                for op in &br.ops {
                    match op.kind {
                        OpKind::Flip => {
                            s.push_str(&format!("flip {} {}\n", op.count, op.from));
                        }
                        OpKind::Change => {
                            s.push_str(&format!(
                                "change {} {} {}\n",
                                op.count,
                                op.from,
                                op.to.as_ref().unwrap()
                            ));
                        }
                    }
                }
            }
        }
    }
    s
}

/// Parses and validates the text format. Only abstract templates are
/// serialized; the result carries no scale.
pub fn parse_template(text: &str) -> Result<Template, TemplateError> {
    let mut name = None;
    let mut m: Option<usize> = None;
    let mut axiom = None;
    let mut predicate = None;

    struct RawNode {
        name: String,
        conditions: Vec<(Vec<u8>, String)>,
        leaf_cw: Option<u8>,
        is_leaf: bool,
    }
    let mut raw_nodes: Vec<RawNode> = Vec::new();
    let mut edges: HashMap<(String, String), Vec<Op>> = HashMap::new();

    enum Section {
        Header,
        Node(usize),
        Leaf(usize),
        Edge(String, String),
    }
    let mut section = Section::Header;

    let err = |line: usize, msg: String| TemplateError::Parse { line: line + 1, msg };

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => raw[..p].trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("[node]") {
            let nm = rest.trim().to_string();
            if nm.is_empty() {
                return Err(err(lineno, "node needs a name".into()));
            }
            raw_nodes.push(RawNode { name: nm, conditions: vec![], leaf_cw: None, is_leaf: false });
            section = Section::Node(raw_nodes.len() - 1);
            continue;
        }
        if let Some(rest) = line.strip_prefix("[leaf]") {
            let nm = rest.trim().to_string();
            if nm.is_empty() {
                return Err(err(lineno, "leaf needs a name".into()));
            }
            raw_nodes.push(RawNode { name: nm, conditions: vec![], leaf_cw: None, is_leaf: true });
            section = Section::Leaf(raw_nodes.len() - 1);
            continue;
        }
        if let Some(rest) = line.strip_prefix("[edge]") {
            let (from, to) = rest
                .split_once("->")
                .ok_or_else(|| err(lineno, "edge header must be `FROM -> TO`".into()))?;
            let key = (from.trim().to_string(), to.trim().to_string());
            edges.entry(key.clone()).or_default();
            section = Section::Edge(key.0, key.1);
            continue;
        }
        match &section {
            Section::Header => {
                let (key, value) = line
                    .split_once(':')
                    .ok_or_else(|| err(lineno, format!("bad header line {line:?}")))?;
                let value = value.trim();
                match key.trim() {
                    "name" => name = Some(value.to_string()),
                    "m" => {
                        m = Some(
                            value
                                .parse()
                                .map_err(|_| err(lineno, format!("bad m {value:?}")))?,
                        )
                    }
                    "axiom" => {
                        axiom = Some(match value {
                            "par" => GroupAxiom::Par,
                            "hm" => GroupAxiom::Hm,
                            "mm" => GroupAxiom::Mm,
                            "sp" => GroupAxiom::Sp,
                            other => {
                                return Err(err(lineno, format!("unknown axiom {other:?}")))
                            }
                        })
                    }
                    "predicate" => {
                        predicate = Some(RootPredicate::parse(value).ok_or_else(|| {
                            err(lineno, format!("unknown predicate {value:?}"))
                        })?)
                    }
                    other => return Err(err(lineno, format!("unknown header key {other:?}"))),
                }
            }
            Section::Node(idx) => {
                // on {1,2} goto nodeX
                let rest = line
                    .strip_prefix("on")
                    .ok_or_else(|| err(lineno, format!("expected `on {{..}} goto ..`, got {line:?}")))?
                    .trim();
                let (set_part, goto_part) = rest
                    .split_once("goto")
                    .ok_or_else(|| err(lineno, "condition needs `goto`".into()))?;
                let set_part = set_part.trim();
                if !set_part.starts_with('{') || !set_part.ends_with('}') {
                    return Err(err(lineno, "winner set must be braced".into()));
                }
                let winners: Result<Vec<u8>, _> = set_part[1..set_part.len() - 1]
                    .split(',')
                    .map(|t| t.trim().parse::<u8>())
                    .collect();
                let winners =
                    winners.map_err(|_| err(lineno, format!("bad winner set {set_part:?}")))?;
                raw_nodes[*idx].conditions.push((winners, goto_part.trim().to_string()));
            }
            Section::Leaf(idx) => {
                let value = line
                    .strip_prefix("condorcet_winner:")
                    .ok_or_else(|| err(lineno, format!("expected condorcet_winner, got {line:?}")))?;
                raw_nodes[*idx].leaf_cw = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|_| err(lineno, "bad condorcet winner".into()))?,
                );
            }
            Section::Edge(from, to) => {
                let mut parts = line.split_whitespace();
                let verb = parts.next().unwrap();
                let count: u32 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lineno, format!("bad op line {line:?}")))?;
                let from_r = parts
                    .next()
                    .ok_or_else(|| err(lineno, "op missing source ranking".into()))
                    .and_then(|t| {
                        Ranking::parse(t).map_err(|e| err(lineno, e.to_string()))
                    })?;
                let op = match verb {
                    "flip" => Op { kind: OpKind::Flip, count, from: from_r, to: None },
                    "change" => {
                        let to_r = parts
                            .next()
                            .ok_or_else(|| err(lineno, "change op missing target".into()))
                            .and_then(|t| {
                                Ranking::parse(t).map_err(|e| err(lineno, e.to_string()))
                            })?;
                        Op { kind: OpKind::Change, count, from: from_r, to: Some(to_r) }
                    }
                    other => return Err(err(lineno, format!("unknown op verb {other:?}"))),
                };
                edges.get_mut(&(from.clone(), to.clone())).unwrap().push(op);
            }
        }
    }

    let m = m.ok_or_else(|| TemplateError::Invalid("missing m".into()))?;
    let name = name.ok_or_else(|| TemplateError::Invalid("missing name".into()))?;
    let axiom = axiom.ok_or_else(|| TemplateError::Invalid("missing axiom".into()))?;
    let predicate = predicate.ok_or_else(|| TemplateError::Invalid("missing predicate".into()))?;

    let index: HashMap<String, usize> =
        raw_nodes.iter().enumerate().map(|(i, n)| (n.name.clone(), i)).collect();
    if index.len() != raw_nodes.len() {
        return Err(TemplateError::Invalid("duplicate node names".into()));
    }
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for rn in &raw_nodes {
        if rn.is_leaf {
            let cw = rn
                .leaf_cw
                .ok_or_else(|| TemplateError::Invalid(format!("leaf {} has no label", rn.name)))?;
            nodes.push(Node::Leaf { name: rn.name.clone(), condorcet_winner: cw });
        } else {
            let mut branches = Vec::new();
            for (winners, target) in &rn.conditions {
                let child = *index.get(target).ok_or_else(|| {
                    TemplateError::Invalid(format!("goto to unknown node {target:?}"))
                })?;
                let ops = edges
                    .get(&(rn.name.clone(), target.clone()))
                    .cloned()
                    .ok_or_else(|| {
                        TemplateError::Invalid(format!(
                            "no [edge] {} -> {target} for a declared condition",
                            rn.name
                        ))
                    })?;
                branches.push(Branch { winners: winners.clone(), ops, child });
            }
            nodes.push(Node::Internal { name: rn.name.clone(), branches });
        }
    }
    let t = Template { name, m, axiom, predicate, nodes, scale: None };
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::super::builtin;
    use super::*;

    #[test]
    fn builtin_roundtrip() {
        for name in super::super::builtin_names() {
            let m = if *name == "general_m" { Some(5) } else { None };
            let t = builtin(name, m).unwrap();
            let text = template_to_text(&t);
            let back = parse_template(&text).unwrap();
            assert_eq!(t, back, "{name} does not round-trip");
        }
    }

    #[test]
    fn parse_rejects_coverage_hole() {
        let t = builtin("cm_m3", None).unwrap();
        let text = template_to_text(&t);
        // Drop the {3} condition line.
        let broken: String =
            text.lines().filter(|l| !l.contains("on {3}")).collect::<Vec<_>>().join("\n");
        match parse_template(&broken) {
            Err(TemplateError::Invalid(msg)) => assert!(msg.contains("cover")),
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn parse_reports_line_numbers() {
        let bad = "name: x\nm: 3\naxiom: mm\npredicate: cm_m3\n\n[node] root\nbogus line\n";
        match parse_template(bad) {
            Err(TemplateError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
