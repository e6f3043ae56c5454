//! Canonical labeling by colour refinement with individualization.
//!
//! Every leaf of the search tree yields a discrete colouring, hence a
//! labeling and an encoding; the least encoding is the canonical form. The
//! leaves attaining it are in bijection with the automorphism group, which
//! gives the symmetry coefficient for free.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::tree::ExoticAromaticTree;

/// Canonical encoding: `[rooted, |V|, |A|]`, then the canonical position of
/// σ of each element, then the canonical position of τ of each non-root
/// arrow. Equal encodings ⇔ isomorphic graphs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(Vec<u8>);

impl CanonicalForm {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Rebuilds the canonically labelled representative.
    pub fn to_tree(&self) -> ExoticAromaticTree {
        let b = &self.0;
        let rooted = b[0] == 1;
        let (nv, na) = (b[1] as usize, b[2] as usize);
        let len = nv + na + rooted as usize;
        let sigma = b[3..3 + len].iter().map(|&x| x as usize).collect();
        let tau = b[3 + len..3 + len + na].iter().map(|&x| x as usize).collect();
        ExoticAromaticTree::from_flat(nv, rooted, tau, sigma)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Result of the canonical search.
#[derive(Clone, Debug)]
pub struct Labeling {
    pub form: CanonicalForm,
    /// `order[p]` is the flat element placed at canonical position `p`.
    pub order: Vec<usize>,
    /// `|Aut(γ)|`.
    pub automorphisms: u64,
}

impl Labeling {
    /// Canonical position of each flat element.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &x) in self.order.iter().enumerate() {
            pos[x] = p;
        }
        pos
    }
}

pub fn canonical_form(t: &ExoticAromaticTree) -> CanonicalForm {
    canonical_labeling(t).form
}

pub fn symmetry_coefficient(t: &ExoticAromaticTree) -> u64 {
    canonical_labeling(t).automorphisms
}

/// The canonically relabelled copy of `t`.
pub fn canonicalize(t: &ExoticAromaticTree) -> ExoticAromaticTree {
    canonical_form(t).to_tree()
}

pub fn is_isomorphic(a: &ExoticAromaticTree, b: &ExoticAromaticTree) -> bool {
    canonical_form(a) == canonical_form(b)
}

pub fn canonical_labeling(t: &ExoticAromaticTree) -> Labeling {
    let mut colors = initial_colors(t);
    refine(t, &mut colors);
    let mut search = Search { t, best: None, count: 0 };
    search.run(colors);
    let (form, order) = search.best.expect("at least one leaf");
    Labeling { form: CanonicalForm(form), order, automorphisms: search.count }
}

fn initial_colors(t: &ExoticAromaticTree) -> Vec<u32> {
    let kind = |x: usize| -> u32 {
        if t.is_vertex(x) {
            0
        } else if Some(x) == t.root_arrow() {
            1
        } else {
            2
        }
    };
    let keys: Vec<(u32, usize, u32)> = (0..t.len())
        .map(|x| {
            let deg = if t.is_vertex(x) { t.in_degree(x) } else { 0 };
            (kind(x), deg, kind(t.partner(x)))
        })
        .collect();
    rank(&keys)
}

/// Dense ranks preserving the order of the keys.
fn rank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("present") as u32).collect()
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn refine(t: &ExoticAromaticTree, colors: &mut Vec<u32>) {
    let mut in_arrows: Vec<Vec<usize>> = vec![Vec::new(); t.num_vertices()];
    for v in 0..t.num_vertices() {
        in_arrows[v] = t.in_arrows(v).collect();
    }
    let mut count = distinct(colors);
    loop {
        let keys: Vec<(u32, u32, u32, Vec<u32>)> = (0..t.len())
            .map(|x| {
                let target = t.target(x).map_or(u32::MAX, |v| colors[v]);
                let mut ins: Vec<u32> = if t.is_vertex(x) {
                    in_arrows[x].iter().map(|&a| colors[a]).collect()
                } else {
                    Vec::new()
                };
                ins.sort_unstable();
                (colors[x], colors[t.partner(x)], target, ins)
            })
            .collect();
        *colors = rank(&keys);
        let next = distinct(colors);
        if next == count {
            return;
        }
        count = next;
    }
}

struct Search<'a> {
    t: &'a ExoticAromaticTree,
    best: Option<(Vec<u8>, Vec<usize>)>,
    count: u64,
}

impl Search<'_> {
    fn run(&mut self, colors: Vec<u32>) {
        let n = self.t.len();
        if distinct(&colors) == n {
            let (enc, order) = encode(self.t, &colors);
            match self.best.as_ref().map(|(b, _)| enc.cmp(b)) {
                None | Some(Ordering::Less) => {
                    self.best = Some((enc, order));
                    self.count = 1;
                }
                Some(Ordering::Equal) => self.count += 1,
                Some(Ordering::Greater) => {}
            }
            return;
        }
        let mut sizes: HashMap<u32, usize> = HashMap::new();
        for &c in &colors {
            *sizes.entry(c).or_default() += 1;
        }
        let cell = *sizes.iter().filter(|(_, &s)| s > 1).map(|(c, _)| c).min().expect("non-discrete");
        for x in (0..n).filter(|&x| colors[x] == cell) {
            let keys: Vec<u32> = (0..n)
                .map(|y| 2 * colors[y] + u32::from(colors[y] == cell && y != x))
                .collect();
            let mut next = rank(&keys);
            refine(self.t, &mut next);
            self.run(next);
        }
    }
}

fn encode(t: &ExoticAromaticTree, colors: &[u32]) -> (Vec<u8>, Vec<usize>) {
    let n = t.len();
    let mut order = vec![0; n];
    for x in 0..n {
        order[colors[x] as usize] = x;
    }
    let mut enc = Vec::with_capacity(3 + n + t.num_arrows());
    enc.push(t.is_rooted() as u8);
    enc.push(t.num_vertices() as u8);
    enc.push(t.num_arrows() as u8);
    for &x in &order {
        enc.push(colors[t.partner(x)] as u8);
    }
    for &x in &order {
        if let Some(v) = t.target(x) {
            enc.push(colors[v] as u8);
        }
    }
    (enc, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Node;

    /// Counts automorphisms by trying every permutation of vertices and of
    /// non-root arrows.
    pub(crate) fn brute_force_automorphisms(t: &ExoticAromaticTree) -> u64 {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for i in 0..n {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let nv = t.num_vertices();
        let na = t.num_arrows();
        let mut count = 0;
        for pv in perms(nv) {
            for pa in perms(na) {
                let map = |x: usize| -> usize {
                    match t.node(x) {
                        Node::Vertex(v) => pv[v as usize - 1],
                        Node::Arrow(0) => x,
                        Node::Arrow(k) => t.arrow(pa[k as usize - 1] + 1),
                    }
                };
                let ok = (0..t.len()).all(|x| {
                    map(t.partner(x)) == t.partner(map(x))
                        && t.target(x).map(map) == t.target(map(x))
                });
                if ok {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn laplacian_tree_has_two_automorphisms() {
        let t = ExoticAromaticTree::from_notation(1, &[1, 1], "(a0,1)(a1,a2)").unwrap();
        assert_eq!(symmetry_coefficient(&t), 2);
        assert_eq!(brute_force_automorphisms(&t), 2);
    }

    #[test]
    fn isomorphic_relabelings_share_a_form() {
        let a = ExoticAromaticTree::from_notation(3, &[1, 2], "(a0,1)(a1,2)(a2,3)").unwrap();
        let b = ExoticAromaticTree::from_notation(3, &[3, 2], "(a0,3)(a1,2)(a2,1)").unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
        let c = ExoticAromaticTree::from_notation(3, &[1, 1], "(a0,1)(a1,2)(a2,3)").unwrap();
        assert_ne!(canonical_form(&a), canonical_form(&c));
    }

    #[test]
    fn form_decodes_to_isomorphic_tree() {
        let t = ExoticAromaticTree::from_notation(4, &[2, 3, 4], "(a0,1)(a1,a2)(2,3)(a3,4)").unwrap();
        let form = canonical_form(&t);
        let back = form.to_tree();
        assert_eq!(canonical_form(&back), form);
        assert_eq!(back.composition(), t.composition());
    }

    #[test]
    fn stolon_pairs_are_swappable() {
        // f^i f^j f^j f^k f^k: two stolons, each flippable, and swappable
        let t = ExoticAromaticTree::from_notation(5, &[], "(a0,1)(2,3)(4,5)").unwrap();
        assert_eq!(symmetry_coefficient(&t), 8);
        assert_eq!(brute_force_automorphisms(&t), 8);
    }
}
