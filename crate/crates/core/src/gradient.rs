//! Rewrite rules valid on gradient fields and the exotic normal form.
//!
//! On `f = ∇V` every derivative `f^i_{j…}` is symmetric in all its indices,
//! so the upper index of a vertex may be exchanged with the index of any of
//! its in-arrows. On the graph this swaps the σ-partners of a vertex `v`
//! and an arrow `a` with `τ(a) = v`. Depending on the pair kinds involved
//! the swap is an edge-liana inversion, an edge-stolon inversion, or a
//! stolon-liana simplification (or its inverse).

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::canon::{canonical_form, canonicalize, CanonicalForm};
use crate::elementary::elementary_differential;
use crate::enumerate::enumerate_up_to_order;
use crate::field::{gradient_field, random_potential, PolyVectorField};
use crate::poly::{q, Poly, Q};
use crate::tree::ExoticAromaticTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradientError {
    #[error("{0} is not connected")]
    NotConnected(String),
    #[error("no exotic tree in the class of {0}")]
    NoExoticRepresentative(String),
    #[error("{count} exotic trees in the class of {tree}")]
    NonUniqueRepresentative { tree: String, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteKind {
    EdgeLianaInversion,
    EdgeStolonInversion,
    StolonLianaSimplification,
}

impl fmt::Display for RewriteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewriteKind::EdgeLianaInversion => "edge-liana inversion",
            RewriteKind::EdgeStolonInversion => "edge-stolon inversion",
            RewriteKind::StolonLianaSimplification => "stolon-liana simplification",
        })
    }
}

/// A rewrite site: vertex `v`, in-arrow `a` of `v`, and their partners
/// before the swap (flat indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RewriteRule {
    pub kind: RewriteKind,
    pub vertex: usize,
    pub arrow: usize,
    pub vertex_partner: usize,
    pub arrow_partner: usize,
}

impl RewriteRule {
    pub fn apply(&self, t: &ExoticAromaticTree) -> ExoticAromaticTree {
        let mut sigma: Vec<usize> = (0..t.len()).map(|x| t.partner(x)).collect();
        let (v, a, p, r) = (self.vertex, self.arrow, self.vertex_partner, self.arrow_partner);
        sigma[v] = r;
        sigma[r] = v;
        sigma[a] = p;
        sigma[p] = a;
        let tau = (1..=t.num_arrows()).map(|k| t.target(t.arrow(k)).expect("real arrow")).collect();
        ExoticAromaticTree::from_flat(t.num_vertices(), t.is_rooted(), tau, sigma)
    }
}

/// Every applicable swap of `t`.
pub fn rewrite_moves(t: &ExoticAromaticTree) -> Vec<RewriteRule> {
    let mut out = Vec::new();
    for v in 0..t.num_vertices() {
        let p = t.partner(v);
        for a in t.in_arrows(v) {
            let r = t.partner(a);
            if p == a {
                continue;
            }
            let kind = match (t.is_vertex(p), t.is_vertex(r)) {
                (false, false) => RewriteKind::EdgeLianaInversion,
                (true, true) => RewriteKind::EdgeStolonInversion,
                _ => RewriteKind::StolonLianaSimplification,
            };
            out.push(RewriteRule { kind, vertex: v, arrow: a, vertex_partner: p, arrow_partner: r });
        }
    }
    out
}

/// Canonical trees reachable by one rewrite, excluding `t` itself.
pub fn rewrite_neighbors(t: &ExoticAromaticTree) -> Vec<ExoticAromaticTree> {
    let own = canonical_form(t);
    let mut seen: BTreeMap<CanonicalForm, ExoticAromaticTree> = BTreeMap::new();
    for rule in rewrite_moves(t) {
        let n = rule.apply(t);
        let form = canonical_form(&n);
        if form != own {
            seen.entry(form).or_insert_with(|| canonicalize(&n));
        }
    }
    seen.into_values().collect()
}

/// Closure of [`rewrite_neighbors`], canonical trees ordered by canonical form.
pub fn equivalence_class(t: &ExoticAromaticTree) -> Vec<ExoticAromaticTree> {
    let mut seen: BTreeMap<CanonicalForm, ExoticAromaticTree> = BTreeMap::new();
    let start = canonicalize(t);
    seen.insert(canonical_form(&start), start.clone());
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for n in rewrite_neighbors(&cur) {
            let form = canonical_form(&n);
            if !seen.contains_key(&form) {
                seen.insert(form, n.clone());
                queue.push_back(n);
            }
        }
    }
    seen.into_values().collect()
}

pub fn exotic_normal_form(t: &ExoticAromaticTree) -> Result<ExoticAromaticTree, GradientError> {
    if !t.is_connected() {
        return Err(GradientError::NotConnected(t.to_string()));
    }
    let exotic: Vec<_> = equivalence_class(t).into_iter().filter(|m| m.classify().is_exotic_tree).collect();
    match exotic.len() {
        0 => Err(GradientError::NoExoticRepresentative(t.to_string())),
        1 => Ok(exotic.into_iter().next().expect("one")),
        count => Err(GradientError::NonUniqueRepresentative { tree: t.to_string(), count }),
    }
}

/// All equivalence classes among the trees of order `1..=n`.
pub fn gradient_classes(n: u32) -> Vec<Vec<ExoticAromaticTree>> {
    let mut done: BTreeMap<CanonicalForm, ()> = BTreeMap::new();
    let mut classes = Vec::new();
    for t in enumerate_up_to_order(n) {
        if done.contains_key(&canonical_form(&t)) {
            continue;
        }
        let class = equivalence_class(&t);
        for m in &class {
            done.insert(canonical_form(m), ());
        }
        classes.push(class);
    }
    classes
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientReport {
    pub trials: usize,
    pub agreed: usize,
    /// Whether the pair differs on the non-gradient field `(x₂, 0, …)`.
    pub non_gradient_differs: bool,
}

impl GradientReport {
    pub fn all_agree(&self) -> bool {
        self.agreed == self.trials
    }
}

/// `(x₂, 0, …, 0)` on `ℝ^d`, whose Jacobian is not symmetric.
pub fn shear_field(d: usize) -> PolyVectorField {
    let mut comps = vec![Poly::zero(); d];
    comps[0] = Poly::var(1);
    PolyVectorField::new(comps).expect("d ≥ 2")
}

/// Compares `F(γ₁)` and `F(γ₂)` exactly on random gradient fields in
/// dimensions 2 and 3, and on [`shear_field`] plus a random non-gradient
/// field.
pub fn check_gradient_agreement(a: &ExoticAromaticTree, b: &ExoticAromaticTree, trials: usize, seed: u64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = (a.order() + 1) as u32;
    let mut agreed = 0;
    for k in 0..trials {
        let d = 2 + k % 2;
        let v = random_potential(d, degree.max(3), 0.6, &mut rng);
        let f = gradient_field(&v, d).expect("in range");
        let x: Vec<Q> = (0..d).map(|i| q(i as i64 - 1)).collect();
        let fa = elementary_differential(a, &f, &x).expect("dimensions agree");
        let fb = elementary_differential(b, &f, &x).expect("dimensions agree");
        agreed += (fa == fb) as usize;
    }
    let mut non_gradient_differs = false;
    for d in [2, 3] {
        let fields = [shear_field(d), PolyVectorField::random(d, degree.max(3), 0.6, &mut rng)];
        for f in fields {
            let x: Vec<Q> = (0..d).map(|i| q(i as i64 + 1)).collect();
            if elementary_differential(a, &f, &x).expect("ok") != elementary_differential(b, &f, &x).expect("ok") {
                non_gradient_differs = true;
            }
        }
    }
    GradientReport { trials, agreed, non_gradient_differs }
}
