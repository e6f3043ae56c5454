//! Exotic aromatic trees as `(V, A₀, σ, τ)` graphs.
//!
//! Vertices are numbered from 1, arrows from 0; arrow 0 is the ghost root
//! arrow. The source map σ is a fixed-point-free involution on vertices and
//! arrows together, stored as a perfect matching. A graph without arrow 0 is
//! a multi-aroma; it shares this type and is distinguished by
//! [`ExoticAromaticTree::is_rooted`].
//!
//! Internally every element has a *flat* index: vertices first, then the root
//! arrow (when present), then arrows `1..=|A|`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A vertex (1-based) or an arrow (0-based, arrow 0 is the root arrow).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Vertex(u32),
    Arrow(u32),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Vertex(v) => write!(f, "{v}"),
            Node::Arrow(a) => write!(f, "a{a}"),
        }
    }
}

impl FromStr for Node {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || TreeError::Parse(format!("bad element `{s}`"));
        let arrow = s
            .strip_prefix('a')
            .or_else(|| s.strip_prefix('o'))
            .or_else(|| s.strip_prefix('◯'));
        match arrow {
            Some(rest) => rest.trim().parse().map(Node::Arrow).map_err(|_| bad()),
            None => s.parse().map(Node::Vertex).map_err(|_| bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("sigma maps {0} to itself")]
    FixedPointInSigma(Node),
    #[error("{0} appears in more than one sigma pair")]
    NonInvolutiveSigma(Node),
    #[error("{0} is not covered by sigma")]
    UncoveredElement(Node),
    #[error("arrow a{arrow} targets vertex {target}, outside 1..={vertices}")]
    TauOutOfRange { arrow: u32, target: u32, vertices: usize },
    #[error("tau must not be defined on the root arrow a0")]
    TauDefinedOnArrowZero,
    #[error("tau has {found} entries, expected {expected}")]
    TauLengthMismatch { expected: usize, found: usize },
    #[error("sigma references unknown element {0}")]
    UnknownElement(Node),
    #[error("a rooted tree needs at least the root arrow a0")]
    NoRootArrow,
    #[error("graph with {0} elements is too large")]
    TooLarge(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Composition κ: `κ(j)` counts the vertices that are the target of exactly
/// `j` arrows. Trailing zeros are trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Composition(Vec<u32>);

impl Composition {
    pub fn new(mut counts: Vec<u32>) -> Self {
        while counts.last() == Some(&0) {
            counts.pop();
        }
        Composition(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0.get(j).copied().unwrap_or(0)
    }

    /// `|κ|`, the number of vertices.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    /// The derived composition `κ′(j) = j·κ(j)`.
    pub fn derived(&self) -> Vec<u32> {
        self.0.iter().enumerate().map(|(j, &c)| j as u32 * c).collect()
    }

    /// `|κ′|`, the number of non-root arrows.
    pub fn derived_size(&self) -> u32 {
        self.derived().iter().sum()
    }

    /// `|κ|+|κ′|+1`, which equals `|V|+|A₀|`.
    pub fn element_count(&self) -> u32 {
        self.size() + self.derived_size() + 1
    }

    /// The order of any tree with this composition, or `None` when the
    /// element count is odd and no tree exists.
    pub fn order(&self) -> Option<u32> {
        let n = self.element_count();
        (n % 2 == 0).then_some(n / 2)
    }

    pub fn max_in_degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        if self.0.is_empty() {
            write!(f, "0")?;
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Composition {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let counts = inner
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| TreeError::Parse(format!("bad composition `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Composition::new(counts))
    }
}

/// Structural flags of a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationFlags {
    pub is_aromatic: bool,
    pub is_connected: bool,
    pub is_exotic_tree: bool,
    pub is_butcher_tree: bool,
    pub has_liana: bool,
    pub has_stolon: bool,
    pub has_loop: bool,
}

/// Kind of a σ-pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    /// A vertex matched with an arrow: a standard edge (or the ghost arrow).
    Edge,
    /// Two vertices.
    Stolon,
    /// Two arrows.
    Liana,
}

/// Maximum number of elements supported; canonical encodings use one byte
/// per position.
pub const MAX_ELEMENTS: usize = 255;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExoticAromaticTree {
    vertices: usize,
    arrows: usize,
    rooted: bool,
    tau: Vec<usize>,
    sigma: Vec<usize>,
}

impl ExoticAromaticTree {
    /// Builds and validates a rooted tree. `tau[k-1]` is the (1-based)
    /// target of arrow `k`; `sigma` lists the pairs of the matching.
    pub fn new(vertices: usize, tau: &[u32], sigma: &[(Node, Node)]) -> Result<Self, TreeError> {
        Self::build(vertices, tau, sigma, true)
    }

    /// Builds and validates a multi-aroma (no root arrow).
    pub fn aroma(vertices: usize, tau: &[u32], sigma: &[(Node, Node)]) -> Result<Self, TreeError> {
        Self::build(vertices, tau, sigma, false)
    }

    /// Parses the cycle notation used in the literature, e.g.
    /// `"(a0,1)(a1,a2)(2,3)"`, with `tau` listing targets of arrows `1..`.
    pub fn from_notation(vertices: usize, tau: &[u32], sigma: &str) -> Result<Self, TreeError> {
        Self::new(vertices, tau, &parse_pairs(sigma)?)
    }

    pub fn aroma_from_notation(vertices: usize, tau: &[u32], sigma: &str) -> Result<Self, TreeError> {
        Self::aroma(vertices, tau, &parse_pairs(sigma)?)
    }

    /// The tree with a single vertex.
    pub fn single_node() -> Self {
        Self::new(1, &[], &[(Node::Arrow(0), Node::Vertex(1))]).expect("valid")
    }

    fn build(vertices: usize, tau: &[u32], sigma: &[(Node, Node)], rooted: bool) -> Result<Self, TreeError> {
        let arrows = tau.len();
        let len = vertices + arrows + rooted as usize;
        if len > MAX_ELEMENTS {
            return Err(TreeError::TooLarge(len));
        }
        let mut tau_flat = Vec::with_capacity(arrows);
        for (k, &t) in tau.iter().enumerate() {
            if t == 0 || t as usize > vertices {
                return Err(TreeError::TauOutOfRange { arrow: k as u32 + 1, target: t, vertices });
            }
            tau_flat.push(t as usize - 1);
        }
        let mut tree = ExoticAromaticTree { vertices, arrows, rooted, tau: tau_flat, sigma: vec![usize::MAX; len] };
        for &(a, b) in sigma {
            let fa = tree.flat(a).ok_or(TreeError::UnknownElement(a))?;
            let fb = tree.flat(b).ok_or(TreeError::UnknownElement(b))?;
            if fa == fb {
                return Err(TreeError::FixedPointInSigma(a));
            }
            for (x, node) in [(fa, a), (fb, b)] {
                if tree.sigma[x] != usize::MAX {
                    return Err(TreeError::NonInvolutiveSigma(node));
                }
            }
            tree.sigma[fa] = fb;
            tree.sigma[fb] = fa;
        }
        if let Some(x) = tree.sigma.iter().position(|&s| s == usize::MAX) {
            return Err(TreeError::UncoveredElement(tree.node(x)));
        }
        Ok(tree)
    }

    /// Builds a tree directly from flat arrays; used by internal surgery that
    /// preserves validity by construction.
    pub(crate) fn from_flat(vertices: usize, rooted: bool, tau: Vec<usize>, sigma: Vec<usize>) -> Self {
        let t = ExoticAromaticTree { vertices, arrows: tau.len(), rooted, tau, sigma };
        debug_assert!(t.check_flat());
        t
    }

    fn check_flat(&self) -> bool {
        self.sigma.len() == self.len()
            && self.tau.iter().all(|&v| v < self.vertices)
            && self
                .sigma
                .iter()
                .enumerate()
                .all(|(x, &s)| s < self.len() && s != x && self.sigma[s] == x)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices
    }

    /// `|A|`: arrows other than the root arrow.
    pub fn num_arrows(&self) -> usize {
        self.arrows
    }

    pub fn is_rooted(&self) -> bool {
        self.rooted
    }

    /// Number of flat elements, `|V| + |A₀|` (or `|V| + |A|` for aromas).
    pub fn len(&self) -> usize {
        self.vertices + self.arrows + self.rooted as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_vertex(&self, x: usize) -> bool {
        x < self.vertices
    }

    pub fn root_arrow(&self) -> Option<usize> {
        self.rooted.then_some(self.vertices)
    }

    fn arrow_offset(&self) -> usize {
        self.vertices + self.rooted as usize
    }

    /// Flat index of arrow `k ≥ 1`.
    pub fn arrow(&self, k: usize) -> usize {
        self.arrow_offset() + k - 1
    }

    /// Target of a flat element, defined for non-root arrows.
    pub fn target(&self, x: usize) -> Option<usize> {
        (x >= self.arrow_offset() && x < self.len()).then(|| self.tau[x - self.arrow_offset()])
    }

    pub fn partner(&self, x: usize) -> usize {
        self.sigma[x]
    }

    /// Flat indices of arrows targeting vertex `v`, in increasing order.
    pub fn in_arrows(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let off = self.arrow_offset();
        self.tau.iter().enumerate().filter(move |(_, &t)| t == v).map(move |(k, _)| off + k)
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.tau.iter().filter(|&&t| t == v).count()
    }

    pub fn flat(&self, node: Node) -> Option<usize> {
        match node {
            Node::Vertex(v) => (v >= 1 && (v as usize) <= self.vertices).then(|| v as usize - 1),
            Node::Arrow(0) => self.root_arrow(),
            Node::Arrow(a) => ((a as usize) <= self.arrows).then(|| self.arrow(a as usize)),
        }
    }

    pub fn node(&self, x: usize) -> Node {
        if x < self.vertices {
            Node::Vertex(x as u32 + 1)
        } else if Some(x) == self.root_arrow() {
            Node::Arrow(0)
        } else {
            Node::Arrow((x - self.arrow_offset() + 1) as u32)
        }
    }

    /// Targets of arrows `1..=|A|`, 1-based.
    pub fn tau(&self) -> Vec<u32> {
        self.tau.iter().map(|&v| v as u32 + 1).collect()
    }

    /// σ-pairs `(x, σ(x))` with `x < σ(x)` in flat indices.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter(|&x| x < self.sigma[x]).map(|x| (x, self.sigma[x])).collect()
    }

    pub fn pair_kind(&self, x: usize) -> PairKind {
        match (self.is_vertex(x), self.is_vertex(self.sigma[x])) {
            (true, true) => PairKind::Stolon,
            (false, false) => PairKind::Liana,
            _ => PairKind::Edge,
        }
    }

    /// σ as a list of node pairs, arrows listed first inside mixed pairs and
    /// the pair holding the root arrow first.
    pub fn sigma_pairs(&self) -> Vec<(Node, Node)> {
        let mut out: Vec<(Node, Node)> = self
            .pairs()
            .into_iter()
            .map(|(a, b)| {
                let (na, nb) = (self.node(a), self.node(b));
                match (na, nb) {
                    (Node::Vertex(_), Node::Arrow(_)) => (nb, na),
                    _ => (na, nb),
                }
            })
            .collect();
        out.sort_by_key(|&(a, b)| {
            let key = |n: Node| match n {
                Node::Arrow(k) => (0, k),
                Node::Vertex(v) => (1, v),
            };
            (key(a), key(b))
        });
        out
    }

    pub fn composition(&self) -> Composition {
        let mut counts = vec![0u32; self.arrows + 1];
        for v in 0..self.vertices {
            counts[self.in_degree(v)] += 1;
        }
        Composition::new(counts)
    }

    pub fn lianas(&self) -> usize {
        self.pairs().iter().filter(|(a, _)| self.pair_kind(*a) == PairKind::Liana).count()
    }

    pub fn stolons(&self) -> usize {
        self.pairs().iter().filter(|(a, _)| self.pair_kind(*a) == PairKind::Stolon).count()
    }

    /// `|γ| = |V| + |L| − |S|`.
    pub fn order(&self) -> usize {
        self.vertices + self.lianas() - self.stolons()
    }

    /// The root vertex when the root arrow is a ghost arrow.
    pub fn root_vertex(&self) -> Option<usize> {
        self.root_arrow().map(|r| self.sigma[r]).filter(|&x| self.is_vertex(x))
    }

    /// Successor of a vertex along its outgoing standard edge.
    fn next_vertex(&self, v: usize) -> Option<usize> {
        self.target(self.sigma[v])
    }

    pub fn has_loop(&self) -> bool {
        !self.loop_vertices().is_empty()
    }

    /// Vertices lying on a directed cycle `v → τ(σ(v))`.
    pub fn loop_vertices(&self) -> Vec<usize> {
        let mut on_loop = vec![false; self.vertices];
        // 0 = unvisited, 1 = on the current walk, 2 = done
        let mut state = vec![0u8; self.vertices];
        for start in 0..self.vertices {
            if state[start] != 0 {
                continue;
            }
            let mut walk = Vec::new();
            let mut cur = Some(start);
            while let Some(v) = cur {
                match state[v] {
                    0 => {
                        state[v] = 1;
                        walk.push(v);
                        cur = self.next_vertex(v);
                    }
                    1 => {
                        let pos = walk.iter().position(|&w| w == v).expect("on walk");
                        for &w in &walk[pos..] {
                            on_loop[w] = true;
                        }
                        break;
                    }
                    _ => break,
                }
            }
            for v in walk {
                state[v] = 2;
            }
        }
        (0..self.vertices).filter(|&v| on_loop[v]).collect()
    }

    /// Union-find labels of the connected components over the neighbour
    /// relation `x ~ σ(x)`, `x ~ τ(x)`.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let union = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra.max(rb)] = ra.min(rb);
            }
        };
        for x in 0..self.len() {
            union(&mut parent, x, self.sigma[x]);
            if let Some(t) = self.target(x) {
                union(&mut parent, x, t);
            }
        }
        (0..self.len()).map(|x| find(&mut parent, x)).collect()
    }

    pub fn is_connected(&self) -> bool {
        let labels = self.component_labels();
        labels.iter().all(|&l| l == labels[0])
    }

    pub fn classify(&self) -> ClassificationFlags {
        let has_liana = self.lianas() > 0;
        let has_stolon = self.stolons() > 0;
        let has_loop = self.has_loop();
        // Without stolons or loops every vertex walks to the root vertex, so
        // the liana-free remainder is a rooted tree.
        let is_exotic_tree = self.rooted && self.root_vertex().is_some() && !has_stolon && !has_loop;
        ClassificationFlags {
            is_aromatic: !has_liana && !has_stolon,
            is_connected: self.is_connected(),
            is_exotic_tree,
            is_butcher_tree: is_exotic_tree && !has_liana,
            has_liana,
            has_stolon,
            has_loop,
        }
    }

    /// Splits the graph into its rooted component and its aromas. For a
    /// multi-aroma the first entry is `None`. Aromas are returned in
    /// canonical order.
    pub fn connected_components(&self) -> (Option<ExoticAromaticTree>, Vec<ExoticAromaticTree>) {
        let labels = self.component_labels();
        let mut reps: Vec<usize> = labels.clone();
        reps.sort_unstable();
        reps.dedup();
        let root_label = self.root_arrow().map(|r| labels[r]);
        let mut rooted = None;
        let mut aromas = Vec::new();
        for rep in reps {
            let members: Vec<usize> = (0..self.len()).filter(|&x| labels[x] == rep).collect();
            let sub = self.induced(&members);
            if Some(rep) == root_label {
                rooted = Some(sub);
            } else {
                aromas.push(sub);
            }
        }
        aromas.sort_by_cached_key(|a| crate::canon::canonical_form(a));
        (rooted, aromas)
    }

    /// Restriction to a σ- and τ-closed set of flat elements, keeping the
    /// relative order of vertices and arrows.
    pub(crate) fn induced(&self, members: &[usize]) -> ExoticAromaticTree {
        let verts: Vec<usize> = members.iter().copied().filter(|&x| self.is_vertex(x)).collect();
        let rooted = self.root_arrow().is_some_and(|r| members.contains(&r));
        let arrows: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&x| !self.is_vertex(x) && Some(x) != self.root_arrow())
            .collect();
        let mut new_index = vec![usize::MAX; self.len()];
        for (i, &v) in verts.iter().enumerate() {
            new_index[v] = i;
        }
        let off = verts.len() + rooted as usize;
        if rooted {
            new_index[self.vertices] = verts.len();
        }
        for (i, &a) in arrows.iter().enumerate() {
            new_index[a] = off + i;
        }
        let tau = arrows.iter().map(|&a| new_index[self.target(a).expect("arrow")]).collect();
        let mut sigma = vec![0; verts.len() + arrows.len() + rooted as usize];
        for &x in members {
            sigma[new_index[x]] = new_index[self.sigma[x]];
        }
        ExoticAromaticTree::from_flat(verts.len(), rooted, tau, sigma)
    }

    /// Relabels by a permutation given as `order[new] = old` flat index. The
    /// permutation must keep vertices, the root arrow and other arrows in
    /// their respective blocks.
    pub fn relabel(&self, order: &[usize]) -> ExoticAromaticTree {
        let mut pos = vec![0; self.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let off = self.arrow_offset();
        let tau = (0..self.arrows).map(|k| pos[self.tau[order[off + k] - off]]).collect();
        let sigma = order.iter().map(|&old| pos[self.sigma[old]]).collect();
        ExoticAromaticTree::from_flat(self.vertices, self.rooted, tau, sigma)
    }

    /// Disjoint union: `self` keeps the root (if any), `other` must be a
    /// multi-aroma.
    pub fn attach_aroma(&self, other: &ExoticAromaticTree) -> ExoticAromaticTree {
        assert!(!other.rooted, "only multi-aromas can be attached");
        let nv = self.vertices + other.vertices;
        let rooted = self.rooted;
        let map_self = |x: usize| -> usize {
            if x < self.vertices {
                x
            } else {
                x + other.vertices
            }
        };
        let self_len_arrows = self.arrows + rooted as usize;
        let map_other = |x: usize| -> usize {
            if x < other.vertices {
                self.vertices + x
            } else {
                nv + self_len_arrows + (x - other.vertices)
            }
        };
        let mut sigma = vec![0; nv + self_len_arrows + other.arrows];
        for x in 0..self.len() {
            sigma[map_self(x)] = map_self(self.sigma[x]);
        }
        for x in 0..other.len() {
            sigma[map_other(x)] = map_other(other.sigma[x]);
        }
        let mut tau: Vec<usize> = self.tau.clone();
        tau.extend(other.tau.iter().map(|&v| self.vertices + v));
        ExoticAromaticTree::from_flat(nv, rooted, tau, sigma)
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            vertices: self.vertices,
            arrows: self.arrows + self.rooted as usize,
            tau: self.tau(),
            sigma: self
                .sigma_pairs()
                .into_iter()
                .map(|(a, b)| [JsonNode::from(a), JsonNode::from(b)])
                .collect(),
            aroma: !self.rooted,
        }
    }

    /// Graphviz rendering: solid directed edges for standard arrows, dashed
    /// edges for lianas, doubled edges for stolons and a dangling edge for
    /// the root.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n  node [shape=circle, label=\"\"];\n");
        for v in 0..self.vertices {
            out.push_str(&format!("  v{} [xlabel=\"{}\"];\n", v + 1, v + 1));
        }
        let root_arrow = self.root_arrow();
        for (a, b) in self.pairs() {
            match self.pair_kind(a) {
                PairKind::Stolon => out.push_str(&format!(
                    "  v{} -> v{} [dir=none, color=\"black:black\"];\n",
                    a + 1,
                    b + 1
                )),
                PairKind::Liana => {
                    let ends: Vec<Option<usize>> = vec![self.target(a), self.target(b)];
                    match (ends[0], ends[1]) {
                        (Some(x), Some(y)) => out.push_str(&format!(
                            "  v{} -> v{} [dir=none, style=dashed, label=\"{}\"];\n",
                            x + 1,
                            y + 1,
                            self.node(b)
                        )),
                        (None, Some(y)) | (Some(y), None) => {
                            out.push_str("  root [shape=point, style=invis];\n");
                            out.push_str(&format!("  v{} -> root [dir=none, style=dashed];\n", y + 1));
                        }
                        (None, None) => {}
                    }
                }
                PairKind::Edge => {
                    let (v, arrow) = if self.is_vertex(a) { (a, b) } else { (b, a) };
                    if Some(arrow) == root_arrow {
                        out.push_str("  root [shape=point, style=invis];\n");
                        out.push_str(&format!("  v{} -> root;\n", v + 1));
                    } else {
                        let t = self.target(arrow).expect("arrow");
                        out.push_str(&format!(
                            "  v{} -> v{} [label=\"{}\"];\n",
                            v + 1,
                            t + 1,
                            self.node(arrow)
                        ));
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for ExoticAromaticTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tau: Vec<String> = self.tau().iter().map(|t| t.to_string()).collect();
        write!(f, "tau=({}) sigma=", tau.join(","))?;
        for (a, b) in self.sigma_pairs() {
            write!(f, "({a},{b})")?;
        }
        Ok(())
    }
}

/// Parses `"(a0,1)(a1,a2)(2,3)"` into node pairs.
pub fn parse_pairs(s: &str) -> Result<Vec<(Node, Node)>, TreeError> {
    let mut out = Vec::new();
    for chunk in s.split(')') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let inner = chunk
            .strip_prefix('(')
            .ok_or_else(|| TreeError::Parse(format!("expected `(` in `{chunk}`")))?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return Err(TreeError::Parse(format!("pair `{inner}` must have two entries")));
        }
        out.push((parts[0].parse()?, parts[1].parse()?));
    }
    Ok(out)
}

/// JSON element: vertices are positive integers, arrows are strings `"aK"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonNode {
    Vertex(u32),
    Arrow(String),
}

impl From<Node> for JsonNode {
    fn from(n: Node) -> Self {
        match n {
            Node::Vertex(v) => JsonNode::Vertex(v),
            Node::Arrow(a) => JsonNode::Arrow(format!("a{a}")),
        }
    }
}

impl TryFrom<&JsonNode> for Node {
    type Error = TreeError;

    fn try_from(n: &JsonNode) -> Result<Self, Self::Error> {
        match n {
            JsonNode::Vertex(v) => Ok(Node::Vertex(*v)),
            JsonNode::Arrow(s) => match s.parse()? {
                a @ Node::Arrow(_) => Ok(a),
                Node::Vertex(_) => Err(TreeError::Parse(format!("arrow `{s}` must start with `a`"))),
            },
        }
    }
}

/// Wire format of a tree. `arrows` counts `A₀` (including the root arrow)
/// for rooted trees and `A` for multi-aromas; `tau` lists the targets of the
/// non-root arrows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub vertices: usize,
    pub arrows: usize,
    pub tau: Vec<u32>,
    pub sigma: Vec<[JsonNode; 2]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub aroma: bool,
}

impl TreeJson {
    pub fn validate(&self) -> Result<ExoticAromaticTree, TreeError> {
        let expected = if self.aroma {
            self.arrows
        } else {
            if self.arrows == 0 {
                return Err(TreeError::NoRootArrow);
            }
            self.arrows - 1
        };
        if !self.aroma && self.tau.len() == self.arrows {
            return Err(TreeError::TauDefinedOnArrowZero);
        }
        if self.tau.len() != expected {
            return Err(TreeError::TauLengthMismatch { expected, found: self.tau.len() });
        }
        let pairs = self
            .sigma
            .iter()
            .map(|[a, b]| Ok((Node::try_from(a)?, Node::try_from(b)?)))
            .collect::<Result<Vec<_>, TreeError>>()?;
        if self.aroma {
            ExoticAromaticTree::aroma(self.vertices, &self.tau, &pairs)
        } else {
            ExoticAromaticTree::new(self.vertices, &self.tau, &pairs)
        }
    }
}

/// Parses and validates the JSON tree encoding.
pub fn tree_from_json(s: &str) -> Result<ExoticAromaticTree, TreeError> {
    let raw: TreeJson = serde_json::from_str(s).map_err(|e| TreeError::Parse(e.to_string()))?;
    raw.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> ExoticAromaticTree {
        ExoticAromaticTree::from_notation(4, &[2, 3, 4], "(a0,1)(a1,a2)(2,3)(a3,4)").unwrap()
    }

    #[test]
    fn validates_single_node() {
        let t = ExoticAromaticTree::from_notation(1, &[], "(a0,1)").unwrap();
        assert_eq!(t.order(), 1);
        assert_eq!(t.composition(), Composition::new(vec![1]));
    }

    #[test]
    fn rejects_fixed_point() {
        let err = ExoticAromaticTree::from_notation(1, &[], "(1,1)").unwrap_err();
        assert_eq!(err, TreeError::FixedPointInSigma(Node::Vertex(1)));
    }

    #[test]
    fn rejects_bad_sigma_and_tau() {
        assert_eq!(
            ExoticAromaticTree::from_notation(2, &[1], "(a0,1)(a1,1)").unwrap_err(),
            TreeError::NonInvolutiveSigma(Node::Vertex(1))
        );
        assert_eq!(
            ExoticAromaticTree::from_notation(2, &[1], "(a0,1)").unwrap_err(),
            TreeError::UncoveredElement(Node::Vertex(2))
        );
        assert!(matches!(
            ExoticAromaticTree::from_notation(1, &[3], "(a0,1)(a1,1)"),
            Err(TreeError::TauOutOfRange { target: 3, .. })
        ));
        assert_eq!(
            ExoticAromaticTree::from_notation(1, &[], "(a0,a1)").unwrap_err(),
            TreeError::UnknownElement(Node::Arrow(1))
        );
    }

    #[test]
    fn vertex_free_liana_graph_is_rejected() {
        // tau(a1) has to land in an empty vertex set
        let json = r#"{"vertices":0,"arrows":2,"tau":[1],"sigma":[["a0","a1"]]}"#;
        assert!(matches!(tree_from_json(json), Err(TreeError::TauOutOfRange { .. })));
    }

    #[test]
    fn tau_on_arrow_zero_is_rejected() {
        let json = r#"{"vertices":1,"arrows":1,"tau":[1],"sigma":[["a0",1]]}"#;
        assert_eq!(tree_from_json(json).unwrap_err(), TreeError::TauDefinedOnArrowZero);
    }

    #[test]
    fn worked_example_statistics() {
        let t = worked_example();
        assert_eq!(t.lianas(), 1);
        assert_eq!(t.stolons(), 1);
        assert_eq!(t.loop_vertices(), vec![3]);
        // in-degrees: vertex 1 → 0, vertices 2,3,4 → 1
        assert_eq!(t.composition(), Composition::new(vec![1, 3]));
        assert_eq!(t.order(), 4);
        let k = t.composition();
        assert_eq!(k.size() + k.derived_size() + 1, 2 * t.order() as u32);
    }

    #[test]
    fn composition_and_order_of_table_rows() {
        let lap = ExoticAromaticTree::from_notation(1, &[1, 1], "(a0,1)(a1,a2)").unwrap();
        assert_eq!(lap.composition(), Composition::new(vec![0, 0, 1]));
        assert_eq!(lap.order(), 2);
        let chain = ExoticAromaticTree::from_notation(3, &[1, 2], "(a0,1)(a1,2)(a2,3)").unwrap();
        assert_eq!(chain.composition(), Composition::new(vec![1, 2]));
        assert_eq!(chain.order(), 3);
    }

    #[test]
    fn classification_of_the_three_examples() {
        // one aroma: f^j_j f^i
        let g1 = ExoticAromaticTree::from_notation(2, &[1], "(a0,2)(a1,1)").unwrap();
        let f1 = g1.classify();
        assert!(f1.is_aromatic && !f1.is_connected && f1.has_loop);
        // connected, with a ghost liana and a loop
        let g2 = ExoticAromaticTree::from_notation(1, &[1, 1], "(a0,a1)(a2,1)").unwrap();
        let f2 = g2.classify();
        assert!(f2.is_connected && !f2.is_exotic_tree);
        let g3 = ExoticAromaticTree::from_notation(2, &[1, 1, 2], "(a0,2)(a1,a2)(a3,1)").unwrap();
        let f3 = g3.classify();
        assert!(f3.is_exotic_tree && f3.is_connected && !f3.is_butcher_tree);
    }

    #[test]
    fn components_split_rooted_part_and_aromas() {
        let t = ExoticAromaticTree::from_notation(4, &[1], "(a0,2)(a1,1)(3,4)").unwrap();
        let (rooted, aromas) = t.connected_components();
        let rooted = rooted.unwrap();
        assert_eq!(rooted.num_vertices(), 1);
        assert_eq!(rooted.order(), 1);
        assert_eq!(aromas.len(), 2);
        let mut shapes: Vec<(usize, usize)> = aromas.iter().map(|a| (a.num_vertices(), a.num_arrows())).collect();
        shapes.sort();
        assert_eq!(shapes, vec![(1, 1), (2, 0)]);
        assert!(aromas.iter().all(|a| !a.is_rooted()));
    }

    #[test]
    fn json_round_trip() {
        let t = worked_example();
        let json = serde_json::to_string(&t.to_json()).unwrap();
        assert_eq!(tree_from_json(&json).unwrap(), t);
        assert!(json.contains("\"a0\""));
    }

    #[test]
    fn attach_aroma_recovers_disconnected_tree() {
        let root = ExoticAromaticTree::single_node();
        let loop1 = ExoticAromaticTree::aroma_from_notation(1, &[1], "(a1,1)").unwrap();
        let joined = root.attach_aroma(&loop1);
        assert_eq!(joined.num_vertices(), 2);
        assert!(!joined.is_connected());
        assert_eq!(joined.composition(), Composition::new(vec![1, 1]));
    }

    #[test]
    fn dot_marks_edge_kinds() {
        let dot = worked_example().to_dot();
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("black:black"));
        assert!(dot.contains("-> root"));
    }
}
