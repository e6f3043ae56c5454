//! Text renderings of trees: catalog table rows, LaTeX rows and JSON records.

use exotic_core::canon::{canonical_form, symmetry_coefficient};
use exotic_core::notation::{index_expression, symbolic_form};
use exotic_core::tree::Node;
use exotic_core::ExoticAromaticTree;
use serde_json::{json, Value};

fn tuple(v: &[u32]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn trimmed(mut v: Vec<u32>) -> Vec<u32> {
    while v.last() == Some(&0) {
        v.pop();
    }
    if v.is_empty() {
        v.push(0);
    }
    v
}

fn sigma_with(t: &ExoticAromaticTree, arrow: impl Fn(u32) -> String) -> String {
    let node = |n: Node| match n {
        Node::Vertex(v) => v.to_string(),
        Node::Arrow(a) => arrow(a),
    };
    t.sigma_pairs().into_iter().map(|(a, b)| format!("({},{})", node(a), node(b))).collect()
}

fn tau_string(t: &ExoticAromaticTree) -> String {
    if t.num_arrows() == 0 {
        String::new()
    } else {
        tuple(&t.tau())
    }
}

pub const TABLE_HEADER: &str = "order\tkappa\tkappa'\ttau\tsigma\tF";

/// One tab-separated catalog row: order, κ, κ′, τ, σ, index form.
pub fn table_row(t: &ExoticAromaticTree) -> String {
    let k = t.composition();
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        t.order(),
        tuple(&trimmed(k.counts().to_vec())),
        tuple(&trimmed(k.derived())),
        tau_string(t),
        sigma_with(t, |a| format!("◯{a}")),
        symbolic_form(t)
    )
}

pub fn latex_row(t: &ExoticAromaticTree) -> String {
    let k = t.composition();
    let latex = index_expression(t).map(|e| e.to_latex()).unwrap_or_default();
    let tau = tau_string(t);
    let tau = if tau.is_empty() { String::new() } else { format!("${tau}$") };
    format!(
        "${}$ & ${}$ & ${}$ & {} & ${}$ & ${}$ \\\\",
        t.order(),
        tuple(&trimmed(k.counts().to_vec())),
        tuple(&trimmed(k.derived())),
        tau,
        sigma_with(t, |a| format!("\\Circled{{{a}}}")),
        latex
    )
}

pub fn tree_record(t: &ExoticAromaticTree) -> Value {
    let f = t.classify();
    json!({
        "tree": t.to_json(),
        "order": t.order(),
        "kappa": trimmed(t.composition().counts().to_vec()),
        "kappa_prime": trimmed(t.composition().derived()),
        "symbolic": symbolic_form(t),
        "canonical": canonical_form(t).to_hex(),
        "symmetry": symmetry_coefficient(t),
        "flags": f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use exotic_core::notation::parse_tree;

    #[test]
    fn table_row_for_the_laplacian() {
        let t = parse_tree("f^i_jj ∂_i").unwrap();
        let row = table_row(&t);
        assert!(row.starts_with("2\t(0,0,1)\t(0,0,2)\t(1,1)\t"));
        assert!(row.ends_with("f^i_jj ∂_i"));
    }

    #[test]
    fn latex_row_uses_circled_arrows() {
        let row = latex_row(&ExoticAromaticTree::single_node());
        assert_eq!(row, r"$1$ & $(1)$ & $(0)$ &  & $(\Circled{0},1)$ & $f^i \partial_i$ \\");
    }
}
