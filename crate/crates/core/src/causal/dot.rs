use super::ic_star::{EdgeMark, MarkedPdag};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering. Genuine edges are solid arrows, potential edges
/// dashed arrows, spurious edges double-headed and undetermined edges
/// plain lines.
pub fn export_dot(graph: &MarkedPdag) -> String {
    let mut out = String::from("digraph ic_star {\n  node [shape=circle];\n");
    for n in &graph.nodes {
        out.push_str(&format!("  {};\n", quote(n)));
    }
    for e in graph.edges() {
        let attrs = match e.mark {
            EdgeMark::Genuine => "style=solid",
            EdgeMark::Potential => "style=dashed",
            EdgeMark::Spurious => "dir=both, style=dashed",
            EdgeMark::Undetermined => "dir=none",
        };
        out.push_str(&format!(
            "  {} -> {} [{attrs}, label=\"{}\"];\n",
            quote(&graph.nodes[e.from]),
            quote(&graph.nodes[e.to]),
            e.mark.as_str()
        ));
    }
    out.push_str("}\n");
    out
}
