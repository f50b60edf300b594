//! Graphviz DOT exports of MAIDs, game trees and belief trees.

use std::fmt::Write;

use crate::efg::{Efg, EfgNodeKind};
use crate::ii_maid::IiMaid;
use crate::maid::{Maid, NodeKind};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Node and edge statements of `m`, with node ids prefixed by `prefix`.
fn maid_body(m: &Maid, prefix: &str, out: &mut String) {
    for v in m.variables() {
        let kind = m.kind(&v.name).unwrap();
        let (shape, owner) = match kind {
            NodeKind::Chance => ("ellipse", String::new()),
            NodeKind::Decision(a) => ("box", format!("\\n({a})")),
            NodeKind::Utility(a) => ("diamond", format!("\\n({a})")),
        };
        let id = quote(&format!("{prefix}{}", v.name));
        let label = quote(&format!("{}{owner}", v.name)).replace("\\\\n", "\\n");
        writeln!(out, "    {id} [shape={shape}, label={label}];").unwrap();
    }
    for v in m.variables() {
        let dashed = m.kind(&v.name).unwrap().is_decision();
        for p in m.parents(&v.name).unwrap() {
            let style = if dashed { " [style=dashed]" } else { "" };
            writeln!(out, "    {} -> {}{style};", quote(&format!("{prefix}{p}")), quote(&format!("{prefix}{}", v.name)))
                .unwrap();
        }
    }
}

/// A MAID with information links dashed.
pub fn maid_dot(m: &Maid, name: &str) -> String {
    let mut out = format!("digraph {} {{\n", quote(name));
    maid_body(m, "", &mut out);
    out.push_str("}\n");
    out
}

/// A game tree; each information set is a dashed cluster labelled by its
/// owner.
pub fn efg_dot(efg: &Efg, name: &str) -> String {
    let mut out = format!("digraph {} {{\n", quote(name));
    for (i, node) in efg.nodes().iter().enumerate() {
        let (shape, label) = match &node.kind {
            EfgNodeKind::Chance { .. } => ("circle", "chance".to_string()),
            EfgNodeKind::Decision { agent, .. } => ("box", agent.clone()),
            EfgNodeKind::Leaf { payoffs } => {
                let p: Vec<String> = payoffs.iter().map(|x| format!("{x}")).collect();
                ("plaintext", format!("({})", p.join(", ")))
            }
        };
        writeln!(out, "    n{i} [shape={shape}, label={}];", quote(&label)).unwrap();
    }
    for (k, set) in efg.info_sets().iter().enumerate() {
        writeln!(out, "    subgraph cluster_infoset_{k} {{").unwrap();
        writeln!(out, "        style=dashed; label={};", quote(&format!("{}:I{k}", set.agent))).unwrap();
        for n in &set.nodes {
            writeln!(out, "        n{n};").unwrap();
        }
        out.push_str("    }\n");
    }
    for (i, node) in efg.nodes().iter().enumerate() {
        for (k, c) in node.children.iter().enumerate() {
            let mut label = node.labels[k].clone();
            if let EfgNodeKind::Chance { probabilities } = &node.kind {
                label = format!("{label} ({})", probabilities[k]);
            }
            writeln!(out, "    n{i} -> n{c} [label={}];", quote(&label)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// The belief hierarchy unrolled to `depth`: one cluster per tree node,
/// edges labelled by the believing agent and its probability.
pub fn belief_tree_dot(x: &IiMaid, depth: usize) -> String {
    let mut out = "digraph belief_tree {\n    compound=true;\n".to_string();
    let mut queue = vec![(x.objective().to_string(), 0usize, None::<(usize, String, f64)>)];
    let mut next = 0usize;
    let mut anchors: Vec<String> = Vec::new();
    while !queue.is_empty() {
        let mut following = Vec::new();
        for (id, level, parent) in queue {
            let k = next;
            next += 1;
            let s = x.model(&id).unwrap();
            let prefix = format!("t{k}_");
            writeln!(out, "  subgraph cluster_t{k} {{").unwrap();
            writeln!(out, "    label={};", quote(&id)).unwrap();
            maid_body(s.maid(), &prefix, &mut out);
            out.push_str("  }\n");
            let anchor = quote(&format!("{prefix}{}", s.maid().variables()[0].name));
            if let Some((p, agent, prob)) = parent {
                writeln!(
                    out,
                    "  {} -> {anchor} [ltail=cluster_t{p}, lhead=cluster_t{k}, label={}];",
                    anchors[p],
                    quote(&format!("{agent}: {prob}"))
                )
                .unwrap();
            }
            anchors.push(anchor);
            if level < depth {
                for (agent, belief) in &s.beliefs {
                    for (t, prob) in belief {
                        if *prob > 0.0 {
                            following.push((t.clone(), level + 1, Some((k, agent.clone(), *prob))));
                        }
                    }
                }
            }
        }
        queue = following;
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::maid2efg;
    use crate::evaluation_game as eg;

    #[test]
    fn belief_tree_sizes() {
        let x = eg::ii_maid();
        let count = |d| belief_tree_dot(&x, d).matches("subgraph cluster_t").count();
        assert_eq!(count(0), 1);
        assert_eq!(count(1), 3);
        assert_eq!(count(2), 7);
    }

    #[test]
    fn capability_tree_has_two_dashed_h_groupings() {
        let tree = maid2efg(&eg::capability_maid(), None).unwrap();
        let dot = efg_dot(&tree.efg, "M_A");
        let h = dot.matches("label=\"H:I").count();
        assert_eq!(h, 2);
        let mut two_member = 0;
        for set in tree.efg.info_sets() {
            if set.agent == eg::H {
                two_member += usize::from(set.nodes.len() == 2);
            }
        }
        assert_eq!(two_member, 2);
    }

    #[test]
    fn information_links_are_dashed() {
        let dot = maid_dot(&eg::honesty_maid(), "M_H");
        assert!(dot.contains("\"C\" -> \"D_A\" [style=dashed]"));
        assert!(dot.contains("\"D_H\" -> \"U_A\";"));
    }
}
