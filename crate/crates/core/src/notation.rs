//! Index notation such as `f^i_j f^j ∂_i`.
//!
//! Rendering works on the canonical representative, so isomorphic trees
//! print identically. Parsing accepts both the plain form and LaTeX
//! (`f_{jj}^i\partial_i`).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::canon::canonicalize;
use crate::tree::{ExoticAromaticTree, Node};

const LETTERS: &str = "jklmnpqrstuvwabcdeghyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotationError {
    #[error("unexpected `{0}` at position {1}")]
    Unexpected(char, usize),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("index `{0}` appears {1} times; every index must appear exactly twice")]
    IndexCount(char, usize),
    #[error("expression has no factors")]
    Empty,
    #[error("too many indices to name")]
    TooManyIndices,
    #[error(transparent)]
    Tree(#[from] crate::tree::TreeError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFactor {
    pub upper: char,
    pub lower: Vec<char>,
}

/// A product of jet entries with one output index (or none for aromas).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexExpression {
    pub factors: Vec<IndexFactor>,
    pub output: Option<char>,
}

impl IndexExpression {
    pub fn to_latex(&self) -> String {
        let mut parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| {
                let low: String = f.lower.iter().collect();
                match f.lower.len() {
                    0 => format!("f^{}", f.upper),
                    1 => format!("f^{}_{}", f.upper, low),
                    _ => format!("f^{}_{{{}}}", f.upper, low),
                }
            })
            .collect();
        if let Some(o) = self.output {
            parts.push(format!("\\partial_{o}"));
        }
        parts.join(" ")
    }

    pub fn to_tree(&self) -> Result<ExoticAromaticTree, NotationError> {
        if self.factors.is_empty() {
            return Err(NotationError::Empty);
        }
        let mut occurrences: BTreeMap<char, Vec<Node>> = BTreeMap::new();
        let mut tau = Vec::new();
        for (v, f) in self.factors.iter().enumerate() {
            occurrences.entry(f.upper).or_default().push(Node::Vertex(v as u32 + 1));
        }
        for (v, f) in self.factors.iter().enumerate() {
            for &s in &f.lower {
                tau.push(v as u32 + 1);
                occurrences.entry(s).or_default().push(Node::Arrow(tau.len() as u32));
            }
        }
        if let Some(o) = self.output {
            occurrences.entry(o).or_default().push(Node::Arrow(0));
        }
        let mut pairs = Vec::new();
        for (s, occ) in occurrences {
            if occ.len() != 2 {
                return Err(NotationError::IndexCount(s, occ.len()));
            }
            pairs.push((occ[0], occ[1]));
        }
        let n = self.factors.len();
        Ok(if self.output.is_some() {
            ExoticAromaticTree::new(n, &tau, &pairs)?
        } else {
            ExoticAromaticTree::aroma(n, &tau, &pairs)?
        })
    }
}

impl fmt::Display for IndexExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .factors
            .iter()
            .map(|fa| {
                let low: String = fa.lower.iter().collect();
                if low.is_empty() {
                    format!("f^{}", fa.upper)
                } else {
                    format!("f^{}_{}", fa.upper, low)
                }
            })
            .collect();
        if let Some(o) = self.output {
            parts.push(format!("∂_{o}"));
        }
        write!(f, "{}", parts.join(" "))
    }
}

/// Index expression of a tree. Factors follow a depth-first walk from the
/// root (stolon partners next to each other), then the aromas; the output
/// index is `i` and the others are named by first appearance.
pub fn index_expression(t: &ExoticAromaticTree) -> Result<IndexExpression, NotationError> {
    let t = canonicalize(t);
    let mut visited = vec![false; t.num_vertices()];
    let mut order = Vec::new();
    fn visit(t: &ExoticAromaticTree, v: usize, visited: &mut [bool], order: &mut Vec<usize>) {
        if visited[v] {
            return;
        }
        visited[v] = true;
        order.push(v);
        let p = t.partner(v);
        if t.is_vertex(p) {
            visit(t, p, visited, order);
        }
        for a in t.in_arrows(v).collect::<Vec<_>>() {
            let s = t.partner(a);
            if t.is_vertex(s) {
                visit(t, s, visited, order);
            } else if let Some(u) = t.target(s) {
                visit(t, u, visited, order);
            }
        }
    }
    if let Some(r) = t.root_arrow() {
        let p = t.partner(r);
        let start = if t.is_vertex(p) { Some(p) } else { t.target(p) };
        if let Some(s) = start {
            visit(&t, s, &mut visited, &mut order);
        }
    }
    for v in 0..t.num_vertices() {
        visit(&t, v, &mut visited, &mut order);
    }

    let mut class_of = vec![usize::MAX; t.len()];
    for (c, (a, b)) in t.pairs().into_iter().enumerate() {
        class_of[a] = c;
        class_of[b] = c;
    }
    let mut names: BTreeMap<usize, char> = BTreeMap::new();
    let mut letters = LETTERS.chars();
    if let Some(r) = t.root_arrow() {
        names.insert(class_of[r], 'i');
    }
    let mut name = |c: usize, names: &mut BTreeMap<usize, char>| -> Result<char, NotationError> {
        if let Some(&s) = names.get(&c) {
            return Ok(s);
        }
        let s = letters.next().ok_or(NotationError::TooManyIndices)?;
        names.insert(c, s);
        Ok(s)
    };
    let mut factors = Vec::new();
    for &v in &order {
        let upper = name(class_of[v], &mut names)?;
        let mut lower = Vec::new();
        for a in t.in_arrows(v) {
            lower.push(name(class_of[a], &mut names)?);
        }
        factors.push(IndexFactor { upper, lower });
    }
    let rank = |c: char| if c == 'i' { 0 } else { 1 + LETTERS.find(c).unwrap_or(0) };
    for f in &mut factors {
        f.lower.sort_by_key(|&c| rank(c));
    }
    Ok(IndexExpression { factors, output: t.root_arrow().map(|_| 'i') })
}

/// Plain-text index notation, e.g. `f^i_j f^j ∂_i`.
pub fn symbolic_form(t: &ExoticAromaticTree) -> String {
    index_expression(t).map(|e| e.to_string()).unwrap_or_else(|e| format!("<{e}>"))
}

/// Parses index notation into an expression.
pub fn parse_index_expression(s: &str) -> Result<IndexExpression, NotationError> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let mut factors = Vec::new();
    let mut output = None;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && (chars[*pos].is_whitespace() || chars[*pos] == '$') {
            *pos += 1;
        }
    };
    let group = |pos: &mut usize| -> Result<Vec<char>, NotationError> {
        match chars.get(*pos) {
            Some('{') => {
                *pos += 1;
                let mut out = Vec::new();
                while let Some(&c) = chars.get(*pos) {
                    *pos += 1;
                    if c == '}' {
                        return Ok(out);
                    }
                    if !c.is_whitespace() {
                        out.push(c);
                    }
                }
                Err(NotationError::UnexpectedEnd)
            }
            Some(&c) if c.is_alphabetic() => {
                let mut out = Vec::new();
                while let Some(&c) = chars.get(*pos) {
                    if !c.is_ascii_alphabetic() {
                        break;
                    }
                    out.push(c);
                    *pos += 1;
                }
                Ok(out)
            }
            Some(&c) => Err(NotationError::Unexpected(c, *pos)),
            None => Err(NotationError::UnexpectedEnd),
        }
    };
    loop {
        skip_ws(&mut pos);
        let Some(&c) = chars.get(pos) else { break };
        if c == 'f' {
            pos += 1;
            let mut upper = None;
            let mut lower = Vec::new();
            while let Some(&m @ ('^' | '_')) = chars.get(pos) {
                pos += 1;
                let g = group(&mut pos)?;
                if m == '^' {
                    if g.len() != 1 {
                        return Err(NotationError::Unexpected('^', pos));
                    }
                    upper = Some(g[0]);
                } else {
                    lower.extend(g);
                }
            }
            let upper = upper.ok_or(NotationError::Unexpected('f', pos))?;
            factors.push(IndexFactor { upper, lower });
        } else if c == '∂' || c == '\\' {
            if c == '\\' {
                let word: String = chars[pos + 1..].iter().take_while(|c| c.is_ascii_alphabetic()).collect();
                if word != "partial" {
                    return Err(NotationError::Unexpected(c, pos));
                }
                pos += 1 + word.len();
            } else {
                pos += 1;
            }
            if chars.get(pos) != Some(&'_') {
                return Err(NotationError::Unexpected(chars.get(pos).copied().unwrap_or(' '), pos));
            }
            pos += 1;
            let g = group(&mut pos)?;
            if g.len() != 1 {
                return Err(NotationError::Unexpected('_', pos));
            }
            output = Some(g[0]);
        } else {
            return Err(NotationError::Unexpected(c, pos));
        }
    }
    Ok(IndexExpression { factors, output })
}

/// Parses index notation straight into a tree.
pub fn parse_tree(s: &str) -> Result<ExoticAromaticTree, NotationError> {
    parse_index_expression(s)?.to_tree()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_form;

    fn tree(nv: usize, tau: &[u32], sigma: &str) -> ExoticAromaticTree {
        ExoticAromaticTree::from_notation(nv, tau, sigma).unwrap()
    }

    #[test]
    fn renders_basic_shapes() {
        assert_eq!(symbolic_form(&tree(2, &[1], "(a0,1)(a1,2)")), "f^i_j f^j ∂_i");
        assert_eq!(symbolic_form(&tree(1, &[1, 1], "(a0,a1)(a2,1)")), "f^j_ij ∂_i");
        assert_eq!(symbolic_form(&tree(5, &[], "(a0,1)(2,3)(4,5)")), "f^i f^j f^j f^k f^k ∂_i");
        assert_eq!(symbolic_form(&tree(1, &[1, 1], "(a0,1)(a1,a2)")), "f^i_jj ∂_i");
    }

    #[test]
    fn rendering_ignores_labels() {
        let a = tree(3, &[1, 2], "(a0,1)(a1,2)(a2,3)");
        let b = tree(3, &[3, 2], "(a0,3)(a1,2)(a2,1)");
        assert_eq!(symbolic_form(&a), symbolic_form(&b));
    }

    #[test]
    fn parses_plain_and_latex() {
        let t = parse_tree("f^i_j f^j ∂_i").unwrap();
        assert_eq!(canonical_form(&t), canonical_form(&tree(2, &[1], "(a0,1)(a1,2)")));
        let l = parse_tree("f_{jj}^i\\partial_i").unwrap();
        assert_eq!(canonical_form(&l), canonical_form(&tree(1, &[1, 1], "(a0,1)(a1,a2)")));
        let aroma = parse_tree("f^j_j").unwrap();
        assert!(!aroma.is_rooted());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_tree("f^i_j ∂_i"), Err(NotationError::IndexCount('j', 1)));
        assert_eq!(parse_tree(""), Err(NotationError::Empty));
        assert!(parse_tree("g^i").is_err());
    }

    #[test]
    fn latex_output_reparses() {
        for t in crate::enumerate::enumerate_up_to_order(3) {
            let e = index_expression(&t).unwrap();
            let back = parse_tree(&e.to_latex()).unwrap();
            assert_eq!(canonical_form(&back), canonical_form(&t));
            let back = parse_tree(&e.to_string()).unwrap();
            assert_eq!(canonical_form(&back), canonical_form(&t));
        }
    }
}
