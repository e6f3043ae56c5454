//! θ-parametrised dual vector fields and the duality pairing.
//!
//! The dual field of `γ̂` lives on `ℝ^{|γ̂|}` with one coordinate per
//! σ-class. Pairing `γ` against `γ̂` evaluates `F(γ)` on that field at the
//! origin and extracts the coefficient of the multilinear θ-monomial
//! attached to `γ`.

use std::fmt;

use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::canon::{canonical_form, canonicalize, symmetry_coefficient};
use crate::elementary::elementary_differential_parametric;
use crate::field::PolyVectorField;
use crate::linalg;
use crate::poly::{Monomial, Poly, Q};
use crate::tree::{ExoticAromaticTree, PairKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ThetaKind {
    /// One per vertex matched with an arrow.
    Node,
    /// One per stolon endpoint.
    Stolon,
    /// One per liana arrow other than the root arrow.
    Liana,
}

impl ThetaKind {
    fn symbol(self) -> &'static str {
        match self {
            ThetaKind::Node => "θV",
            ThetaKind::Stolon => "θS",
            ThetaKind::Liana => "θL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaIndex {
    pub kind: ThetaKind,
    /// 1-based number within its kind.
    pub number: usize,
    /// Host component and flat element in its canonical labeling.
    pub component: usize,
    pub element: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoordinateKind {
    Root,
    Node,
    Stolon,
    Liana,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coordinate {
    pub kind: CoordinateKind,
    pub component: usize,
    pub pair: (usize, usize),
}

/// Dual field `f_γ^{(θ)}`. Variables `0..dim` are coordinates, the next
/// ones are the θ parameters in the order of [`DualField::thetas`].
#[derive(Clone, Debug)]
pub struct DualField {
    pub field: PolyVectorField,
    pub parts: Vec<ExoticAromaticTree>,
    pub rooted: bool,
    pub coordinates: Vec<Coordinate>,
    pub thetas: Vec<ThetaIndex>,
}

impl DualField {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn count(&self, kind: ThetaKind) -> usize {
        self.thetas.iter().filter(|t| t.kind == kind).count()
    }

    /// Parameter position (0-based, after the coordinates) of a θ.
    pub fn theta_position(&self, kind: ThetaKind, number: usize) -> Option<usize> {
        self.thetas.iter().position(|t| t.kind == kind && t.number == number)
    }

    /// The field with every θ replaced by the given values.
    pub fn specialize(&self, values: &[Q]) -> PolyVectorField {
        self.field.specialize(values)
    }

    pub fn with_unit_theta(&self) -> PolyVectorField {
        self.specialize(&vec![Q::one(); self.thetas.len()])
    }

    pub fn variable_name(&self, var: usize) -> String {
        if var < self.dim() {
            format!("x{}", var + 1)
        } else {
            let t = &self.thetas[var - self.dim()];
            format!("{}{}", t.kind.symbol(), t.number)
        }
    }
}

impl fmt::Display for DualField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.field.components().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "f{} = {}", i + 1, p.display_with(&|v| self.variable_name(v)))?;
        }
        Ok(())
    }
}

/// Dual field of a tree or multi-aroma; the rooted part comes first, aromas
/// follow in canonical order.
pub fn dual_field(host: &ExoticAromaticTree) -> DualField {
    let (rooted, aromas) = host.connected_components();
    dual_field_ordered(rooted.as_ref(), &aromas)
}

/// Dual field with an explicit aroma order; θ numbering runs through the
/// rooted part, then the aromas in the given order.
pub fn dual_field_ordered(rooted: Option<&ExoticAromaticTree>, aromas: &[ExoticAromaticTree]) -> DualField {
    let mut parts: Vec<ExoticAromaticTree> = Vec::new();
    if let Some(r) = rooted {
        parts.push(canonicalize(r));
    }
    parts.extend(aromas.iter().map(canonicalize));

    let mut coordinates = Vec::new();
    for (ci, part) in parts.iter().enumerate() {
        let mut local: Vec<Coordinate> = part
            .pairs()
            .into_iter()
            .map(|(a, b)| {
                let kind = if Some(a) == part.root_arrow() || Some(b) == part.root_arrow() {
                    CoordinateKind::Root
                } else {
                    match part.pair_kind(a) {
                        PairKind::Edge => CoordinateKind::Node,
                        PairKind::Stolon => CoordinateKind::Stolon,
                        PairKind::Liana => CoordinateKind::Liana,
                    }
                };
                Coordinate { kind, component: ci, pair: (a, b) }
            })
            .collect();
        local.sort_by_key(|c| (c.kind, c.pair.0));
        coordinates.extend(local);
    }
    let dim = coordinates.len();
    let coord_of = |ci: usize, x: usize| -> usize {
        coordinates
            .iter()
            .position(|c| c.component == ci && (c.pair.0 == x || c.pair.1 == x))
            .expect("every element lies in a class")
    };

    // θ parameters, numbered per kind in component order.
    let mut thetas: Vec<ThetaIndex> = Vec::new();
    let mut next = [0usize; 3];
    let mut push = |kind: ThetaKind, component: usize, element: usize, thetas: &mut Vec<ThetaIndex>| {
        let k = kind as usize;
        next[k] += 1;
        thetas.push(ThetaIndex { kind, number: next[k], component, element });
    };
    for (ci, part) in parts.iter().enumerate() {
        for v in 0..part.num_vertices() {
            if !part.is_vertex(part.partner(v)) {
                push(ThetaKind::Node, ci, v, &mut thetas);
            }
        }
        for v in 0..part.num_vertices() {
            if part.is_vertex(part.partner(v)) {
                push(ThetaKind::Stolon, ci, v, &mut thetas);
            }
        }
        for a in part.num_vertices()..part.len() {
            if Some(a) != part.root_arrow() && !part.is_vertex(part.partner(a)) {
                push(ThetaKind::Liana, ci, a, &mut thetas);
            }
        }
    }
    // stable layout: all θV, then θS, then θL
    thetas.sort_by_key(|t| (t.kind, t.number));
    let theta_var = |kind: ThetaKind, ci: usize, x: usize| -> Option<usize> {
        thetas
            .iter()
            .position(|t| t.kind == kind && t.component == ci && t.element == x)
            .map(|p| dim + p)
    };

    let vertex_term = |ci: usize, v: usize, lead: ThetaKind| -> Poly<Q> {
        let part = &parts[ci];
        let mut vars = vec![theta_var(lead, ci, v).expect("θ for vertex")];
        for a in part.in_arrows(v) {
            if !part.is_vertex(part.partner(a)) {
                vars.push(theta_var(ThetaKind::Liana, ci, a).expect("θ for liana arrow"));
            }
            vars.push(coord_of(ci, a));
        }
        Poly::monomial(Monomial::product_of(&vars), Q::one())
    };

    let components = coordinates
        .iter()
        .map(|c| {
            let part = &parts[c.component];
            let (a, b) = c.pair;
            match part.pair_kind(a) {
                PairKind::Edge => {
                    let v = if part.is_vertex(a) { a } else { b };
                    vertex_term(c.component, v, ThetaKind::Node)
                }
                PairKind::Stolon => {
                    &vertex_term(c.component, a, ThetaKind::Stolon) + &vertex_term(c.component, b, ThetaKind::Stolon)
                }
                PairKind::Liana => Poly::zero(),
            }
        })
        .collect();

    DualField {
        field: PolyVectorField::with_parameters(components),
        rooted: rooted.is_some(),
        parts,
        coordinates,
        thetas,
    }
}

/// θ-counts `(|V◇|, 2|S|, #liana arrows)` of a tree; the root arrow never
/// carries a parameter.
pub fn theta_counts(t: &ExoticAromaticTree) -> [usize; 3] {
    let nodes = (0..t.num_vertices()).filter(|&v| !t.is_vertex(t.partner(v))).count();
    let stolon_ends = (0..t.num_vertices()).filter(|&v| t.is_vertex(t.partner(v))).count();
    let liana_arrows = (t.num_vertices()..t.len())
        .filter(|&a| Some(a) != t.root_arrow() && !t.is_vertex(t.partner(a)))
        .count();
    [nodes, stolon_ends, liana_arrows]
}

/// `F_{|γ̂|}(γ)(f_γ̂)` at the origin as a polynomial in the θ of `γ̂`
/// (first component for a rooted `γ`, the scalar for a multi-aroma).
pub fn pairing_polynomial(gamma: &ExoticAromaticTree, dual: &DualField) -> Poly<Q> {
    let zeros = vec![Q::zero(); dual.dim()];
    elementary_differential_parametric(gamma, &dual.field, &zeros)
        .into_iter()
        .next()
        .unwrap_or_else(Poly::zero)
}

/// Pairing against a prepared dual field. Returns 0 when `γ` needs more θ
/// of some kind than the field provides.
pub fn pairing_with(gamma: &ExoticAromaticTree, dual: &DualField) -> Q {
    let counts = theta_counts(gamma);
    let kinds = [ThetaKind::Node, ThetaKind::Stolon, ThetaKind::Liana];
    let mut vars = Vec::new();
    for (kind, &n) in kinds.iter().zip(&counts) {
        if n > dual.count(*kind) {
            return Q::zero();
        }
        for k in 1..=n {
            vars.push(dual.theta_position(*kind, k).expect("present"));
        }
    }
    pairing_polynomial(gamma, dual).coefficient(&Monomial::product_of(&vars))
}

pub fn pairing(gamma: &ExoticAromaticTree, gamma_hat: &ExoticAromaticTree) -> Q {
    pairing_with(gamma, &dual_field(gamma_hat))
}

/// `F_{|γ̂|}(γ)(f_γ̂^{(1)})(0)`: the same evaluation with every θ set to 1
/// and no coefficient extraction.
pub fn pairing_theta_free(gamma: &ExoticAromaticTree, gamma_hat: &ExoticAromaticTree) -> Q {
    let dual = dual_field(gamma_hat);
    let f = dual.with_unit_theta();
    let zeros = vec![Q::zero(); f.dim()];
    crate::elementary::elementary_differential(gamma, &f, &zeros)
        .expect("dimension matches")
        .into_iter()
        .next()
        .unwrap_or_else(Q::zero)
}

/// `M[i][j] = pairing(tᵢ, tⱼ)`, computed in parallel.
pub fn pairing_matrix(trees: &[ExoticAromaticTree]) -> Vec<Vec<Q>> {
    let duals: Vec<DualField> = trees.par_iter().map(dual_field).collect();
    trees
        .par_iter()
        .map(|g| duals.iter().map(|d| pairing_with(g, d)).collect())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceCertificate {
    pub size: usize,
    #[serde(serialize_with = "ser_matrix")]
    pub matrix: Vec<Vec<Q>>,
    pub rank: usize,
    /// Indices of connected trees whose pairing diagonal equals their
    /// symmetry coefficient with zero off-diagonal entries among connected
    /// trees.
    pub connected_diagonal: bool,
    /// An ordering making the matrix lower triangular with nonzero
    /// diagonal, when one exists.
    pub triangular_order: Option<Vec<usize>>,
    pub independent: bool,
}

fn ser_matrix<S: serde::Serializer>(m: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
    let strings: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
    strings.serialize(s)
}

pub fn independence_certificate(trees: &[ExoticAromaticTree]) -> IndependenceCertificate {
    let n = trees.len();
    let matrix = pairing_matrix(trees);
    let rank = linalg::rank(&matrix);
    let connected: Vec<usize> = (0..n).filter(|&i| trees[i].is_connected()).collect();
    let connected_diagonal = connected.iter().all(|&i| {
        connected.iter().all(|&j| {
            if i == j {
                matrix[i][i] == Q::from_integer(symmetry_coefficient(&trees[i]).into())
            } else {
                matrix[i][j].is_zero()
            }
        })
    });
    let triangular_order = triangular_ordering(&matrix);
    IndependenceCertificate { size: n, independent: rank == n, matrix, rank, connected_diagonal, triangular_order }
}

/// Topological order of the relation `i → j` for `M[i][j] ≠ 0, i ≠ j`,
/// provided the diagonal is nonzero and the relation is acyclic.
fn triangular_ordering(m: &[Vec<Q>]) -> Option<Vec<usize>> {
    let n = m.len();
    if (0..n).any(|i| m[i][i].is_zero()) {
        return None;
    }
    let mut indeg = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && !m[i][j].is_zero() {
                indeg[j] += 1;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(i) = ready.pop() {
        order.push(i);
        for j in 0..n {
            if i != j && !m[i][j].is_zero() {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(j);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Whether `γ̂` is `γ` with extra aromas attached.
pub fn is_aroma_extension(gamma: &ExoticAromaticTree, gamma_hat: &ExoticAromaticTree) -> bool {
    let (r1, a1) = gamma.connected_components();
    let (r2, a2) = gamma_hat.connected_components();
    let same_root = match (r1, r2) {
        (Some(x), Some(y)) => canonical_form(&x) == canonical_form(&y),
        (None, None) => true,
        _ => false,
    };
    if !same_root {
        return false;
    }
    let mut rest: Vec<_> = a2.iter().map(canonical_form).collect();
    for a in &a1 {
        let f = canonical_form(a);
        match rest.iter().position(|g| *g == f) {
            Some(p) => {
                rest.remove(p);
            }
            None => return false,
        }
    }
    true
}
