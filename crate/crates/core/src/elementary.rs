//! Elementary differentials `F_d(γ)(f)`.
//!
//! Each σ-pair is a summation index; each vertex `v` contributes the jet
//! entry `∂_{i_a : τ(a)=v} f^{i_v}`. For a rooted tree the root pair gives
//! the output component, a multi-aroma evaluates to a scalar.

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::canon::{canonical_form, CanonicalForm};
use crate::field::{FieldError, Jet, PolyVectorField};
use crate::linalg;
use crate::poly::{q, Poly, Scalar, Q};
use crate::tree::ExoticAromaticTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("point has {found} coordinates, field dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Summation structure of a tree: σ-classes and the per-vertex factors.
struct Contraction {
    num_classes: usize,
    root_class: Option<usize>,
    /// Classes in assignment order.
    class_order: Vec<usize>,
    /// `factors_at[k]`: vertices whose classes are all assigned once the
    /// first `k+1` classes of `class_order` are.
    factors_at: Vec<Vec<(usize, Vec<usize>)>>,
}

impl Contraction {
    fn new(t: &ExoticAromaticTree) -> Self {
        let mut class_of = vec![usize::MAX; t.len()];
        for (c, (a, b)) in t.pairs().into_iter().enumerate() {
            class_of[a] = c;
            class_of[b] = c;
        }
        let num_classes = t.len() / 2;
        let root_class = t.root_arrow().map(|r| class_of[r]);
        // vertex factors: (output class, input classes)
        let factors: Vec<(usize, Vec<usize>)> = (0..t.num_vertices())
            .map(|v| (class_of[v], t.in_arrows(v).map(|a| class_of[a]).collect()))
            .collect();
        let mut class_order: Vec<usize> = root_class.into_iter().collect();
        let mut seen = vec![false; num_classes];
        if let Some(r) = root_class {
            seen[r] = true;
        }
        for (out, ins) in &factors {
            for &c in std::iter::once(out).chain(ins) {
                if !seen[c] {
                    seen[c] = true;
                    class_order.push(c);
                }
            }
        }
        let mut pos = vec![0; num_classes];
        for (i, &c) in class_order.iter().enumerate() {
            pos[c] = i;
        }
        let mut factors_at = vec![Vec::new(); num_classes];
        for (out, ins) in factors {
            let ready = ins.iter().chain(std::iter::once(&out)).map(|&c| pos[c]).max().expect("nonempty");
            factors_at[ready].push((out, ins));
        }
        Contraction { num_classes, root_class, class_order, factors_at }
    }
}

/// Evaluates `F_d(γ)` from a jet. Returns `d` entries for a rooted tree and
/// a single scalar for a multi-aroma.
pub fn evaluate_with_jet<R: Scalar>(t: &ExoticAromaticTree, jet: &Jet<R>) -> Vec<R> {
    let d = jet.dim();
    let c = Contraction::new(t);
    let mut out = vec![R::zero(); if c.root_class.is_some() { d } else { 1 }];
    if c.num_classes == 0 {
        out[0] = R::one();
        return out;
    }
    let mut assign = vec![0usize; c.num_classes];
    let mut idx = Vec::new();
    recurse(&c, jet, 0, &mut assign, R::one(), &mut out, &mut idx);
    out
}

fn recurse<R: Scalar>(
    c: &Contraction,
    jet: &Jet<R>,
    depth: usize,
    assign: &mut [usize],
    acc: R,
    out: &mut [R],
    idx: &mut Vec<usize>,
) {
    if depth == c.num_classes {
        let slot = c.root_class.map_or(0, |r| assign[r]);
        out[slot] = out[slot].clone() + acc;
        return;
    }
    let class = c.class_order[depth];
    for value in 0..jet.dim() {
        assign[class] = value;
        let mut prod = acc.clone();
        let mut zero = false;
        for (outc, ins) in &c.factors_at[depth] {
            idx.clear();
            idx.extend(ins.iter().map(|&k| assign[k]));
            idx.sort_unstable();
            match jet.lookup(assign[*outc], idx) {
                Some(v) if !v.is_zero() => prod = prod * v.clone(),
                _ => {
                    zero = true;
                    break;
                }
            }
        }
        if !zero {
            recurse(c, jet, depth + 1, assign, prod, out, idx);
        }
    }
}

fn max_in_degree(t: &ExoticAromaticTree) -> usize {
    (0..t.num_vertices()).map(|v| t.in_degree(v)).max().unwrap_or(0)
}

/// `F_d(γ)(f)(x)` for a rational polynomial field.
pub fn elementary_differential(t: &ExoticAromaticTree, f: &PolyVectorField, x: &[Q]) -> Result<Vec<Q>, EvalError> {
    if x.len() != f.dim() {
        return Err(EvalError::DimensionMismatch { expected: f.dim(), found: x.len() });
    }
    let jet = f.jet(x, max_in_degree(t))?;
    Ok(evaluate_with_jet(t, &jet))
}

/// `F_d(γ)(f)` as polynomials in `x` (and in any parameters of `f`).
pub fn elementary_differential_poly(t: &ExoticAromaticTree, f: &PolyVectorField) -> Vec<Poly<Q>> {
    let jet = f.jet_with(max_in_degree(t), |p| p.clone());
    evaluate_with_jet(t, &jet)
}

/// Floating-point evaluation.
pub fn elementary_differential_f64(t: &ExoticAromaticTree, f: &PolyVectorField<f64>, x: &[f64]) -> Vec<f64> {
    let jet = f.jet_with(max_in_degree(t), |p| p.eval(x));
    evaluate_with_jet(t, &jet)
}

/// Evaluates with parameters of `f` left symbolic; `x` fixes the spatial
/// variables.
pub fn elementary_differential_parametric(t: &ExoticAromaticTree, f: &PolyVectorField, x: &[Q]) -> Vec<Poly<Q>> {
    let jet = f.parametric_jet(x, max_in_degree(t));
    evaluate_with_jet(t, &jet)
}

/// A finite linear combination of trees.
#[derive(Clone, Debug, Default)]
pub struct TruncatedSeries {
    terms: Vec<(ExoticAromaticTree, Q)>,
}

impl TruncatedSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coeff·γ`, merging isomorphic trees.
    pub fn add(&mut self, t: ExoticAromaticTree, coeff: Q) {
        let form = canonical_form(&t);
        if let Some((_, c)) = self.terms.iter_mut().find(|(s, _)| canonical_form(s) == form) {
            *c = c.clone() + coeff;
        } else {
            self.terms.push((t, coeff));
        }
        self.terms.retain(|(_, c)| !c.is_zero());
    }

    pub fn terms(&self) -> &[(ExoticAromaticTree, Q)] {
        &self.terms
    }

    pub fn forms(&self) -> Vec<(CanonicalForm, Q)> {
        let mut v: Vec<_> = self.terms.iter().map(|(t, c)| (canonical_form(t), c.clone())).collect();
        v.sort();
        v
    }

    /// `Σ c_γ h^{|γ|} F(γ)(f)(x)`; with `h = None` no step-size weight is
    /// applied.
    pub fn evaluate(&self, f: &PolyVectorField, x: &[Q], h: Option<&Q>) -> Result<Vec<Q>, EvalError> {
        let mut out = vec![Q::zero(); f.dim()];
        for (t, c) in &self.terms {
            let mut w = c.clone();
            if let Some(h) = h {
                for _ in 0..t.order() {
                    w = &w * h;
                }
            }
            for (o, v) in out.iter_mut().zip(elementary_differential(t, f, x)?) {
                *o = &*o + &(&w * &v);
            }
        }
        Ok(out)
    }
}

/// Rank of the linear map `(c_γ) ↦ Σ c_γ F_d(γ)` restricted to the given
/// trees, estimated by sampling random fields and points in dimension `d`.
/// The estimate never exceeds the true rank.
pub fn sampled_rank(trees: &[ExoticAromaticTree], d: usize, samples: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = trees.iter().map(max_in_degree).max().unwrap_or(0) as u32 + 1;
    let mut rows: linalg::Matrix = Vec::new();
    for _ in 0..samples {
        let f = PolyVectorField::random(d, degree, 0.7, &mut rng);
        let x: Vec<Q> = (0..d).map(|_| q(rng.random_range(-2..=2))).collect();
        let jet = f.jet(&x, degree as usize).expect("dimension");
        let cols: Vec<Vec<Q>> = trees.iter().map(|t| evaluate_with_jet(t, &jet)).collect();
        for i in 0..d {
            rows.push(cols.iter().map(|c| c[i].clone()).collect());
        }
    }
    linalg::rank(&rows)
}
