//! Equivariance and decoupling checks with exact witnesses.
//!
//! Passing verdicts come from randomised exact trials. Refutations combine
//! random trials with constructive recipes built from dual fields and
//! coordinate projections/embeddings. Every refutation carries a
//! [`Witness`] that can be re-verified independently.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::duality::{dual_field, dual_field_ordered, CoordinateKind, DualField};
use crate::elementary::{elementary_differential, elementary_differential_f64};
use crate::enumerate::enumerate_up_to_order;
use crate::field::{AffineMap, PolyVectorField};
use crate::linalg::{self, Matrix};
use crate::poly::{q, qr, Monomial, Poly, Q};
use crate::tree::{ClassificationFlags, ExoticAromaticTree, PairKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivarianceError {
    #[error("bad dimensions for {kind}: {d1} → {d2}")]
    BadDimensions { kind: &'static str, d1: usize, d2: usize },
    #[error("{tree}: {property} verdict {verdict} disagrees with the class predicate {expected}")]
    Disagreement { tree: String, property: Property, verdict: bool, expected: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Orthogonal,
    GeneralLinear,
    Stiefel,
    Grassmann,
    Affine,
    Decoupling,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::Orthogonal,
        Property::GeneralLinear,
        Property::Stiefel,
        Property::Grassmann,
        Property::Affine,
        Property::Decoupling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Orthogonal => "orthogonal",
            Property::GeneralLinear => "gl",
            Property::Stiefel => "stiefel",
            Property::Grassmann => "grassmann",
            Property::Affine => "affine",
            Property::Decoupling => "decoupling",
        }
    }

    /// The structural class expected to have this property.
    pub fn predicate(self, f: &ClassificationFlags) -> bool {
        match self {
            Property::Orthogonal => true,
            Property::GeneralLinear => f.is_aromatic,
            Property::Stiefel => !f.has_liana && !f.has_loop,
            Property::Grassmann => f.is_exotic_tree,
            Property::Affine => f.is_butcher_tree,
            Property::Decoupling => f.is_connected,
        }
    }

    pub fn class_name(self) -> &'static str {
        match self {
            Property::Orthogonal => "all",
            Property::GeneralLinear => "aromatic",
            Property::Stiefel => "no liana, no loop",
            Property::Grassmann => "exotic tree",
            Property::Affine => "Butcher tree",
            Property::Decoupling => "connected",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s || (s == "general_linear" && *p == Property::GeneralLinear))
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

// ---- transforms ---------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    SignedPermutation(usize),
    GeneralLinear(usize),
    /// `d₁ ≤ d₂`, columns are signed standard basis vectors.
    Stiefel(usize, usize),
    /// `d₁ ≥ d₂`, rows are signed standard basis vectors.
    Grassmann(usize, usize),
    /// Random full-rank rational matrix `d₂ × d₁`.
    Affine(usize, usize),
}

fn random_q(rng: &mut impl Rng) -> Q {
    qr(rng.random_range(-3..=3), rng.random_range(1..=3))
}

fn random_point(d: usize, rng: &mut impl Rng) -> Vec<Q> {
    (0..d).map(|_| random_q(rng)).collect()
}

fn signed_basis(rows: usize, cols: usize, picks: &[usize], signs: &[i64], as_columns: bool) -> Matrix {
    let mut m = linalg::zeros(rows, cols);
    for (k, (&p, &s)) in picks.iter().zip(signs).enumerate() {
        if as_columns {
            m[p][k] = q(s);
        } else {
            m[k][p] = q(s);
        }
    }
    m
}

fn random_signs(n: usize, rng: &mut impl Rng) -> Vec<i64> {
    (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()
}

/// Builds an exact transform with a random rational offset.
pub fn make_transform(kind: TransformKind, rng: &mut impl Rng) -> Result<AffineMap, EquivarianceError> {
    let (matrix, cols) = match kind {
        TransformKind::SignedPermutation(d) => {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(rng);
            (signed_basis(d, d, &perm, &random_signs(d, rng), true), d)
        }
        TransformKind::GeneralLinear(d) => (random_invertible(d, rng), d),
        TransformKind::Stiefel(d1, d2) => {
            if d1 > d2 {
                return Err(EquivarianceError::BadDimensions { kind: "stiefel", d1, d2 });
            }
            let mut rows: Vec<usize> = (0..d2).collect();
            rows.shuffle(rng);
            (signed_basis(d2, d1, &rows[..d1], &random_signs(d1, rng), true), d1)
        }
        TransformKind::Grassmann(d1, d2) => {
            if d1 < d2 {
                return Err(EquivarianceError::BadDimensions { kind: "grassmann", d1, d2 });
            }
            let mut cols: Vec<usize> = (0..d1).collect();
            cols.shuffle(rng);
            (signed_basis(d2, d1, &cols[..d2], &random_signs(d2, rng), false), d1)
        }
        TransformKind::Affine(d1, d2) => loop {
            let m: Matrix = (0..d2).map(|_| (0..d1).map(|_| q(rng.random_range(-2..=2))).collect()).collect();
            if linalg::rank(&m) == d1.min(d2) {
                break (m, d1);
            }
        },
    };
    let offset = random_point(matrix.len(), rng);
    Ok(AffineMap::new(matrix, offset, cols))
}

fn random_invertible(d: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let m: Matrix = (0..d).map(|_| (0..d).map(|_| q(rng.random_range(-2..=2))).collect()).collect();
        if !linalg::determinant(&m).is_zero() {
            return m;
        }
    }
}

/// Every signed permutation matrix of size `d`.
pub fn signed_permutations(d: usize) -> Vec<Matrix> {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..n {
                let mut v = p.clone();
                v.insert(i, n - 1);
                out.push(v);
            }
        }
        out
    }
    let mut out = Vec::new();
    for p in perms(d) {
        for mask in 0..(1u32 << d) {
            let signs: Vec<i64> = (0..d).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
            out.push(signed_basis(d, d, &p, &signs, true));
        }
    }
    out
}

/// Generic orthogonal matrix from the QR factorisation of a Gaussian matrix.
pub fn generic_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

// ---- witnesses ----------------------------------------------------------------

/// Data from which both sides of a failed identity can be recomputed.
#[derive(Clone, Debug)]
pub enum WitnessData {
    /// `F(g·f)(g(y))` against `A F(f)(y)`.
    Pushforward { g: AffineMap, f: PolyVectorField, y: Vec<Q> },
    /// `F(f₂)(a(x))` against `A F(f₁)(x)`, premise `f₂∘a = A f₁`.
    Related { a: AffineMap, f1: PolyVectorField, f2: PolyVectorField, x: Vec<Q> },
    /// `F(f₁⊕f₂)(x⊕y)` against `F(f₁)(x) ⊕ F(f₂)(y)`.
    Decoupling { f1: PolyVectorField, f2: PolyVectorField, x: Vec<Q>, y: Vec<Q> },
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub recipe: String,
    pub data: WitnessData,
    pub lhs: Vec<Q>,
    pub rhs: Vec<Q>,
}

fn strings(v: &[Q]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

impl Witness {
    /// Recomputes both sides from scratch and checks the premise and the
    /// transform class for `property`. True when the witness is valid.
    pub fn recheck(&self, t: &ExoticAromaticTree, property: Property) -> bool {
        let Ok((lhs, rhs)) = sides(t, &self.data) else {
            return false;
        };
        if lhs != self.lhs || rhs != self.rhs || lhs == rhs {
            return false;
        }
        match (&self.data, property) {
            (WitnessData::Pushforward { g, .. }, Property::Orthogonal) => g.is_stiefel() && g.rows() == g.cols(),
            (WitnessData::Pushforward { g, .. }, Property::GeneralLinear | Property::Affine) => g.inverse().is_some(),
            (WitnessData::Related { a, f1, f2, .. }, p) => {
                let class_ok = match p {
                    Property::Stiefel => a.is_stiefel(),
                    Property::Grassmann => a.is_grassmann(),
                    Property::Affine => true,
                    _ => false,
                };
                class_ok && premise_holds(a, f1, f2)
            }
            (WitnessData::Decoupling { .. }, Property::Decoupling) => true,
            _ => false,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let data = match &self.data {
            WitnessData::Pushforward { g, f, y } => json!({
                "transform": g.to_string(), "field": f.to_string(), "point": strings(y),
            }),
            WitnessData::Related { a, f1, f2, x } => json!({
                "transform": a.to_string(), "f1": f1.to_string(), "f2": f2.to_string(), "point": strings(x),
            }),
            WitnessData::Decoupling { f1, f2, x, y } => json!({
                "f1": f1.to_string(), "f2": f2.to_string(), "x": strings(x), "y": strings(y),
            }),
        };
        json!({ "recipe": self.recipe, "data": data, "lhs": strings(&self.lhs), "rhs": strings(&self.rhs) })
    }
}

fn scalar_or_vector(t: &ExoticAromaticTree, a: &AffineMap, v: Vec<Q>) -> Vec<Q> {
    if t.is_rooted() {
        a.apply_linear(&v)
    } else {
        v
    }
}

fn sides(t: &ExoticAromaticTree, data: &WitnessData) -> Result<(Vec<Q>, Vec<Q>), crate::elementary::EvalError> {
    match data {
        WitnessData::Pushforward { g, f, y } => {
            let gf = f.pushforward(g)?;
            let lhs = elementary_differential(t, &gf, &g.apply(y))?;
            let rhs = scalar_or_vector(t, g, elementary_differential(t, f, y)?);
            Ok((lhs, rhs))
        }
        WitnessData::Related { a, f1, f2, x } => {
            let lhs = elementary_differential(t, f2, &a.apply(x))?;
            let rhs = scalar_or_vector(t, a, elementary_differential(t, f1, x)?);
            Ok((lhs, rhs))
        }
        WitnessData::Decoupling { f1, f2, x, y } => {
            let h = f1.direct_sum(f2);
            let xy: Vec<Q> = x.iter().chain(y).cloned().collect();
            let lhs = elementary_differential(t, &h, &xy)?;
            let mut rhs = elementary_differential(t, f1, x)?;
            rhs.extend(elementary_differential(t, f2, y)?);
            Ok((lhs, rhs))
        }
    }
}

/// `f₂(a(x)) = A f₁(x)` as a polynomial identity.
pub fn premise_holds(a: &AffineMap, f1: &PolyVectorField, f2: &PolyVectorField) -> bool {
    let left = f2.compose_affine(a);
    let right = f1.transform(&a.matrix);
    left.components() == right.as_slice()
}

fn run(t: &ExoticAromaticTree, recipe: &str, data: WitnessData) -> Result<(), Box<Witness>> {
    let (lhs, rhs) = sides(t, &data).expect("dimensions are consistent by construction");
    if lhs == rhs {
        Ok(())
    } else {
        Err(Box::new(Witness { recipe: recipe.to_string(), data, lhs, rhs }))
    }
}

// ---- reports ------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct CheckConfig {
    /// Random exact trials per check.
    pub trials: usize,
    /// Floating-point trials with generic orthogonal matrices (advisory).
    pub float_trials: usize,
    pub seed: u64,
}

impl CheckConfig {
    pub fn new(trials: usize, float_trials: usize, seed: u64) -> Self {
        CheckConfig { trials, float_trials, seed }
    }
}

#[derive(Clone, Debug)]
pub struct EquivarianceReport {
    pub property: Property,
    pub tree: ExoticAromaticTree,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub float_trials: usize,
    pub float_max_residual: Option<f64>,
    pub witness: Option<Witness>,
}

impl EquivarianceReport {
    fn new(property: Property, tree: &ExoticAromaticTree) -> Self {
        EquivarianceReport {
            property,
            tree: tree.clone(),
            trials: 0,
            passed: 0,
            failed: 0,
            float_trials: 0,
            float_max_residual: None,
            witness: None,
        }
    }

    pub fn holds(&self) -> bool {
        self.failed == 0
    }

    fn record(&mut self, outcome: Result<(), Box<Witness>>) {
        self.trials += 1;
        match outcome {
            Ok(()) => self.passed += 1,
            Err(w) => {
                self.failed += 1;
                if self.witness.is_none() {
                    self.witness = Some(*w);
                }
            }
        }
    }

    fn merge(&mut self, other: EquivarianceReport) {
        self.trials += other.trials;
        self.passed += other.passed;
        self.failed += other.failed;
        self.float_trials += other.float_trials;
        self.float_max_residual = match (self.float_max_residual, other.float_max_residual) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        if self.witness.is_none() {
            self.witness = other.witness;
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "property": self.property.name(),
            "tree": self.tree.to_string(),
            "holds": self.holds(),
            "trials": self.trials,
            "passed": self.passed,
            "failed": self.failed,
            "float_trials": self.float_trials,
            "float_max_residual": self.float_max_residual,
            "witness": self.witness.as_ref().map(Witness::to_json),
        })
    }
}

fn max_in_degree(t: &ExoticAromaticTree) -> usize {
    (0..t.num_vertices()).map(|v| t.in_degree(v)).max().unwrap_or(0)
}

fn field_degree(t: &ExoticAromaticTree) -> u32 {
    max_in_degree(t).max(2) as u32
}

fn random_field(t: &ExoticAromaticTree, d: usize, rng: &mut impl Rng) -> PolyVectorField {
    PolyVectorField::random(d, field_degree(t), 0.5, rng)
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Dual field with θ replaced by random positive integers.
fn dual_instance(dual: &DualField, rng: &mut impl Rng) -> PolyVectorField {
    let theta: Vec<Q> = (0..dual.thetas.len()).map(|_| q(rng.random_range(1..=5))).collect();
    dual.specialize(&theta)
}

// ---- orthogonal ---------------------------------------------------------------

pub fn check_orthogonal_equivariance(t: &ExoticAromaticTree, cfg: &CheckConfig) -> EquivarianceReport {
    let mut rng = rng_for(cfg.seed, 1);
    let mut report = EquivarianceReport::new(Property::Orthogonal, t);
    for k in 0..cfg.trials {
        let d = 2 + k % 2;
        let g = make_transform(TransformKind::SignedPermutation(d), &mut rng).expect("valid");
        let f = random_field(t, d, &mut rng);
        let y = random_point(d, &mut rng);
        report.record(run(t, "signed permutation", WitnessData::Pushforward { g, f, y }));
    }
    if cfg.float_trials > 0 {
        let residual = float_orthogonal_residual(t, cfg.float_trials, &[2, 3, 4, 5], &mut rng);
        report.float_trials = cfg.float_trials;
        report.float_max_residual = Some(residual);
    }
    report
}

/// Exact check over the whole signed-permutation group in dimension `d`,
/// one random field and offset per group element.
pub fn check_orthogonal_group(t: &ExoticAromaticTree, d: usize, seed: u64) -> EquivarianceReport {
    let mut rng = rng_for(seed, 11 + d as u64);
    let mut report = EquivarianceReport::new(Property::Orthogonal, t);
    let f = random_field(t, d, &mut rng);
    for m in signed_permutations(d) {
        let g = AffineMap::new(m, random_point(d, &mut rng), d);
        let y = random_point(d, &mut rng);
        report.record(run(t, "signed permutation group", WitnessData::Pushforward { g, f: f.clone(), y }));
    }
    report
}

/// Largest relative residual of `F(g·f)(g(y)) − A F(f)(y)` over generic
/// orthogonal `g` in floating point.
pub fn float_orthogonal_residual(t: &ExoticAromaticTree, trials: usize, dims: &[usize], rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let d = dims[k % dims.len()];
        let a = generic_orthogonal(d, rng);
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = PolyVectorField::random(d, max_in_degree(t).max(1) as u32, 0.4, rng)
            .map_coeffs(|c| c.to_f64().expect("finite"));
        // (g·f)(x) = A f(Aᵀ(x − b))
        let inner: Vec<Poly<f64>> = (0..d)
            .map(|i| {
                let mut p = Poly::constant(-(0..d).map(|j| a[(j, i)] * b[j]).sum::<f64>());
                for j in 0..d {
                    p.add_term(Monomial::var(j), a[(j, i)]);
                }
                p
            })
            .collect();
        let composed: Vec<Poly<f64>> = f.components().iter().map(|p| p.substitute(&inner)).collect();
        let gf_comps: Vec<Poly<f64>> = (0..d)
            .map(|i| {
                composed
                    .iter()
                    .enumerate()
                    .fold(Poly::zero(), |acc, (j, p)| &acc + &p.scale(&a[(i, j)]))
            })
            .collect();
        let gf = PolyVectorField::with_parameters(gf_comps);
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[(i, j)] * y[j]).sum::<f64>() + b[i]).collect();
        let lhs = elementary_differential_f64(t, &gf, &x);
        let base = elementary_differential_f64(t, &f, &y);
        let rhs: Vec<f64> = if t.is_rooted() {
            (0..d).map(|i| (0..d).map(|j| a[(i, j)] * base[j]).sum()).collect()
        } else {
            base
        };
        let scale = rhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let res = lhs.iter().zip(&rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(res);
    }
    worst
}

// ---- general linear -------------------------------------------------------------

pub fn check_general_linear_equivariance(t: &ExoticAromaticTree, cfg: &CheckConfig) -> EquivarianceReport {
    let mut rng = rng_for(cfg.seed, 2);
    let mut report = EquivarianceReport::new(Property::GeneralLinear, t);
    // fixed candidates: scaling and shear
    for d in 1..=2 {
        let mut scale = linalg::identity(d);
        for (i, row) in scale.iter_mut().enumerate() {
            row[i] = q(2);
        }
        let g = AffineMap::linear(scale, d);
        let f = random_field(t, d, &mut rng);
        let y = random_point(d, &mut rng);
        report.record(run(t, "scaling by 2", WitnessData::Pushforward { g, f, y }));
    }
    let shear = AffineMap::linear(linalg::from_ints(&[&[1, 1], &[0, 1]]), 2);
    let f = random_field(t, 2, &mut rng);
    let y = random_point(2, &mut rng);
    report.record(run(t, "shear", WitnessData::Pushforward { g: shear, f, y }));
    // dual field under a random linear map
    let dual = dual_field(t);
    if dual.dim() > 0 {
        let f = dual_instance(&dual, &mut rng);
        let g = make_transform(TransformKind::GeneralLinear(dual.dim()), &mut rng).expect("valid");
        let y = vec![Q::zero(); dual.dim()];
        report.record(run(t, "dual field, random linear map", WitnessData::Pushforward { g, f, y }));
    }
    for k in 0..cfg.trials {
        let d = 2 + k % 2;
        let g = make_transform(TransformKind::GeneralLinear(d), &mut rng).expect("valid");
        let f = random_field(t, d, &mut rng);
        let y = random_point(d, &mut rng);
        report.record(run(t, "random linear map", WitnessData::Pushforward { g, f, y }));
    }
    report
}

// ---- semi-orthogonal --------------------------------------------------------------

/// Coordinates of the dual field whose class is a liana (or the ghost-liana
/// root), or a node on a loop.
fn coordinates_where(dual: &DualField, pick: impl Fn(&ExoticAromaticTree, &crate::duality::Coordinate) -> bool) -> Vec<usize> {
    dual.coordinates
        .iter()
        .enumerate()
        .filter(|(_, c)| pick(&dual.parts[c.component], c))
        .map(|(i, _)| i)
        .collect()
}

fn on_loop(part: &ExoticAromaticTree, c: &crate::duality::Coordinate) -> bool {
    let loops = part.loop_vertices();
    loops.contains(&c.pair.0) || loops.contains(&c.pair.1)
}

/// `d₂ × d₁` matrix embedding the kept coordinates `keep` of `ℝ^{d₂}`.
fn embedding(keep: &[usize], d2: usize) -> AffineMap {
    let mut m = linalg::zeros(d2, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        m[i][k] = q(1);
    }
    AffineMap::linear(m, keep.len())
}

fn transpose_map(a: &AffineMap) -> AffineMap {
    AffineMap::linear(a.transpose_matrix(), a.rows())
}

/// Stiefel refutation: `f₂` is the dual field on `ℝ^{|γ|}`, `f₁ = Aᵀ f₂ ∘ A`
/// on the coordinates that are neither lianas nor loop nodes.
fn stiefel_recipe(t: &ExoticAromaticTree, rng: &mut impl Rng) -> Option<WitnessData> {
    let dual = dual_field(t);
    let z = coordinates_where(&dual, |part, c| {
        part.pair_kind(c.pair.0) == PairKind::Liana || (c.kind == CoordinateKind::Node && on_loop(part, c))
    });
    if z.is_empty() {
        return None;
    }
    let d2 = dual.dim();
    let keep: Vec<usize> = (0..d2).filter(|i| !z.contains(i)).collect();
    let a = embedding(&keep, d2);
    let f2 = dual_instance(&dual, rng);
    let f1 = PolyVectorField::with_parameters(f2.compose_affine(&a).transform(&a.transpose_matrix()));
    let f1 = PolyVectorField::new(f1.components().to_vec()).ok()?;
    premise_holds(&a, &f1, &f2).then(|| WitnessData::Related { a, f1, f2, x: vec![Q::zero(); keep.len()] })
}

/// Grassmann refutation: `f₁` is the dual field, `A` projects away stolons
/// and loop nodes, `f₂ = A f₁ ∘ Aᵀ`.
fn grassmann_recipe(t: &ExoticAromaticTree, rng: &mut impl Rng) -> Option<WitnessData> {
    let dual = dual_field(t);
    let z = coordinates_where(&dual, |part, c| {
        part.pair_kind(c.pair.0) == PairKind::Stolon || (c.kind == CoordinateKind::Node && on_loop(part, c))
    });
    if z.is_empty() {
        return None;
    }
    let d1 = dual.dim();
    let keep: Vec<usize> = (0..d1).filter(|i| !z.contains(i)).collect();
    let a = transpose_map(&embedding(&keep, d1));
    let f1 = dual_instance(&dual, rng);
    let f2 = PolyVectorField::new(f1.compose_affine(&transpose_map(&a)).transform(&a.matrix)).ok()?;
    premise_holds(&a, &f1, &f2).then(|| WitnessData::Related { a, f1, f2, x: vec![Q::zero(); d1] })
}

/// `f₂ = A f₁ ∘ Aᵀ(· − b)` plus a term vanishing on the image of `a`.
fn stiefel_pair(t: &ExoticAromaticTree, d1: usize, d2: usize, perturb: bool, rng: &mut impl Rng) -> WitnessData {
    let a = make_transform(TransformKind::Stiefel(d1, d2), rng).expect("d1 ≤ d2");
    let f1 = random_field(t, d1, rng);
    let at = a.transpose_matrix();
    let shift: Vec<Q> = linalg::mat_vec(&at, &a.offset).into_iter().map(|v| -v).collect();
    let back = AffineMap::new(at, shift, d2);
    let mut comps = f1.compose_affine(&back).transform(&a.matrix);
    if perturb {
        let image_rows: Vec<usize> = (0..d2).filter(|&i| a.matrix[i].iter().any(|v| !v.is_zero())).collect();
        for comp in comps.iter_mut() {
            for k in (0..d2).filter(|k| !image_rows.contains(k)) {
                let mut vanish = Poly::var(k);
                vanish.add_term(Monomial::one(), -a.offset[k].clone());
                let coeff = crate::field::random_potential(d2, 1, 0.7, rng);
                *comp = &*comp + &(&vanish * &coeff);
            }
        }
    }
    let f2 = PolyVectorField::new(comps).expect("variables in range");
    WitnessData::Related { a, f1, f2, x: random_point(d1, rng) }
}

/// `f₁ = Aᵀ f₂ ∘ a` plus a term in the kernel of `A`.
fn grassmann_pair(t: &ExoticAromaticTree, d1: usize, d2: usize, perturb: bool, rng: &mut impl Rng) -> WitnessData {
    let a = make_transform(TransformKind::Grassmann(d1, d2), rng).expect("d1 ≥ d2");
    let f2 = random_field(t, d2, rng);
    let mut comps = f2.compose_affine(&a).transform(&a.transpose_matrix());
    if perturb {
        for (i, comp) in comps.iter_mut().enumerate() {
            if (0..d2).all(|r| a.matrix[r][i].is_zero()) {
                *comp = &*comp + &crate::field::random_potential(d1, 2, 0.5, rng);
            }
        }
    }
    let f1 = PolyVectorField::new(comps).expect("variables in range");
    WitnessData::Related { a, f1, f2, x: random_point(d1, rng) }
}

pub fn check_stiefel_equivariance(t: &ExoticAromaticTree, cfg: &CheckConfig) -> EquivarianceReport {
    let mut rng = rng_for(cfg.seed, 3);
    let mut report = EquivarianceReport::new(Property::Stiefel, t);
    if let Some(data) = stiefel_recipe(t, &mut rng) {
        report.record(run(t, "dual field with liana and loop coordinates dropped", data));
    }
    const DIMS: [(usize, usize); 4] = [(1, 2), (2, 3), (1, 3), (2, 2)];
    for k in 0..cfg.trials {
        let (d1, d2) = DIMS[k % DIMS.len()];
        let perturb = k % 2 == 1;
        let recipe = if perturb { "extension vanishing on the image" } else { "zero extension" };
        report.record(run(t, recipe, stiefel_pair(t, d1, d2, perturb, &mut rng)));
    }
    report
}

pub fn check_grassmann_equivariance(t: &ExoticAromaticTree, cfg: &CheckConfig) -> EquivarianceReport {
    let mut rng = rng_for(cfg.seed, 4);
    let mut report = EquivarianceReport::new(Property::Grassmann, t);
    if let Some(data) = grassmann_recipe(t, &mut rng) {
        report.record(run(t, "dual field projected away from stolon and loop coordinates", data));
    }
    const DIMS: [(usize, usize); 4] = [(2, 1), (3, 2), (3, 1), (2, 2)];
    for k in 0..cfg.trials {
        let (d1, d2) = DIMS[k % DIMS.len()];
        let perturb = k % 2 == 1;
        let recipe = if perturb { "pullback plus kernel term" } else { "pullback" };
        report.record(run(t, recipe, grassmann_pair(t, d1, d2, perturb, &mut rng)));
    }
    report
}

/// Injective or surjective affine maps that are not semi-orthogonal.
fn general_affine_pair(t: &ExoticAromaticTree, d1: usize, d2: usize, rng: &mut impl Rng) -> WitnessData {
    let a = make_transform(TransformKind::Affine(d1, d2), rng).expect("valid");
    let at = a.transpose_matrix();
    if d1 <= d2 {
        // left inverse L = (AᵀA)⁻¹Aᵀ, f₂(y) = A f₁(L(y − b))
        let ata = linalg::mat_mul(&at, &a.matrix, d2, d1);
        let l = linalg::mat_mul(&linalg::inverse(&ata).expect("full column rank"), &at, d1, d2);
        let shift: Vec<Q> = linalg::mat_vec(&l, &a.offset).into_iter().map(|v| -v).collect();
        let back = AffineMap::new(l, shift, d2);
        let f1 = random_field(t, d1, rng);
        let f2 = PolyVectorField::new(f1.compose_affine(&back).transform(&a.matrix)).expect("in range");
        WitnessData::Related { a, f1, f2, x: random_point(d1, rng) }
    } else {
        // right inverse R = Aᵀ(AAᵀ)⁻¹, f₁(x) = R f₂(a(x)) + (I − RA) k(x)
        let aat = linalg::mat_mul(&a.matrix, &at, d1, d2);
        let r = linalg::mat_mul(&at, &linalg::inverse(&aat).expect("full row rank"), d2, d2);
        let f2 = random_field(t, d2, rng);
        let main = f2.compose_affine(&a).transform(&r);
        let ra = linalg::mat_mul(&r, &a.matrix, d2, d1);
        let proj: Matrix = (0..d1)
            .map(|i| (0..d1).map(|j| if i == j { q(1) } else { Q::zero() } - &ra[i][j]).collect())
            .collect();
        let k = random_field(t, d1, rng);
        let kernel = k.transform(&proj);
        let comps = main.iter().zip(kernel).map(|(m, k)| m + &k).collect();
        let f1 = PolyVectorField::new(comps).expect("in range");
        WitnessData::Related { a, f1, f2, x: random_point(d1, rng) }
    }
}

pub fn check_affine_equivariance(t: &ExoticAromaticTree, cfg: &CheckConfig) -> EquivarianceReport {
    let mut rng = rng_for(cfg.seed, 5);
    let mut report = EquivarianceReport::new(Property::Affine, t);
    if let Some(data) = stiefel_recipe(t, &mut rng) {
        report.record(run(t, "dual field with liana and loop coordinates dropped", data));
    }
    if let Some(data) = grassmann_recipe(t, &mut rng) {
        report.record(run(t, "dual field projected away from stolon and loop coordinates", data));
    }
    const DIMS: [(usize, usize); 4] = [(1, 2), (2, 1), (2, 3), (3, 2)];
    for k in 0..cfg.trials {
        let (d1, d2) = DIMS[k % DIMS.len()];
        let data = match k % 4 {
            0 => stiefel_pair(t, d1.min(d2), d1.max(d2), true, &mut rng),
            1 => grassmann_pair(t, d1.max(d2), d1.min(d2), true, &mut rng),
            _ => general_affine_pair(t, d1, d2, &mut rng),
        };
        report.record(run(t, "affine map", data));
    }
    let gl = check_general_linear_equivariance(t, &CheckConfig { trials: cfg.trials.div_ceil(2), ..cfg.clone() });
    let mut gl = gl;
    gl.property = Property::Affine;
    report.merge(gl);
    report
}

// ---- decoupling -----------------------------------------------------------------

pub fn check_decoupling(t: &ExoticAromaticTree, trivially: bool, cfg: &CheckConfig) -> EquivarianceReport {
    let mut rng = rng_for(cfg.seed, 6 + trivially as u64);
    let mut report = EquivarianceReport::new(Property::Decoupling, t);
    if !trivially && t.is_rooted() {
        let (rooted, aromas) = t.connected_components();
        if !aromas.is_empty() {
            let f1 = dual_instance(&dual_field_ordered(rooted.as_ref(), &[]), &mut rng);
            let f2 = dual_instance(&dual_field_ordered(None, &aromas), &mut rng);
            let (x, y) = (vec![Q::zero(); f1.dim()], vec![Q::zero(); f2.dim()]);
            report.record(run(t, "dual fields of the rooted part and the aromas", WitnessData::Decoupling { f1, f2, x, y }));
        }
    }
    for k in 0..cfg.trials {
        let (d1, d2) = [(1, 1), (2, 1), (1, 2), (2, 2)][k % 4];
        let f1 = random_field(t, d1, &mut rng);
        let f2 = if trivially { PolyVectorField::zero(d2) } else { random_field(t, d2, &mut rng) };
        let (x, y) = (random_point(d1, &mut rng), random_point(d2, &mut rng));
        let recipe = if trivially { "zero second block" } else { "random blocks" };
        report.record(run(t, recipe, WitnessData::Decoupling { f1, f2, x, y }));
    }
    report
}

pub fn check_property(t: &ExoticAromaticTree, p: Property, cfg: &CheckConfig) -> EquivarianceReport {
    match p {
        Property::Orthogonal => check_orthogonal_equivariance(t, cfg),
        Property::GeneralLinear => check_general_linear_equivariance(t, cfg),
        Property::Stiefel => check_stiefel_equivariance(t, cfg),
        Property::Grassmann => check_grassmann_equivariance(t, cfg),
        Property::Affine => check_affine_equivariance(t, cfg),
        Property::Decoupling => check_decoupling(t, false, cfg),
    }
}

// ---- classification ---------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ClassificationRow {
    pub tree: ExoticAromaticTree,
    pub flags: ClassificationFlags,
    pub reports: Vec<EquivarianceReport>,
}

impl ClassificationRow {
    pub fn disagreements(&self) -> Vec<Property> {
        self.reports
            .iter()
            .filter(|r| r.holds() != r.property.predicate(&self.flags))
            .map(|r| r.property)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ClassificationTable {
    pub properties: Vec<Property>,
    pub rows: Vec<ClassificationRow>,
}

impl ClassificationTable {
    pub fn first_disagreement(&self) -> Option<EquivarianceError> {
        self.rows.iter().find_map(|row| {
            row.disagreements().first().map(|&p| EquivarianceError::Disagreement {
                tree: row.tree.to_string(),
                property: p,
                verdict: row.reports.iter().find(|r| r.property == p).is_some_and(|r| r.holds()),
                expected: p.predicate(&row.flags),
            })
        })
    }

    /// Every failed verdict has a witness that re-verifies.
    pub fn witnesses_valid(&self) -> bool {
        self.rows.iter().all(|row| {
            row.reports.iter().all(|r| {
                r.holds() || r.witness.as_ref().is_some_and(|w| w.recheck(&row.tree, r.property))
            })
        })
    }

    /// Per-property summary: class, number of trees in the class, number
    /// passing, number agreeing.
    pub fn summary(&self) -> Vec<(Property, usize, usize, usize)> {
        self.properties
            .iter()
            .map(|&p| {
                let mut in_class = 0;
                let mut passing = 0;
                let mut agree = 0;
                for row in &self.rows {
                    let r = row.reports.iter().find(|r| r.property == p).expect("checked");
                    let expected = p.predicate(&row.flags);
                    in_class += expected as usize;
                    passing += r.holds() as usize;
                    agree += (r.holds() == expected) as usize;
                }
                (p, in_class, passing, agree)
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<34} {:>5}", "tree", "class"));
        for p in &self.properties {
            out.push_str(&format!(" {:>10}", p.name()));
        }
        out.push('\n');
        for row in &self.rows {
            let f = &row.flags;
            let class = if f.is_butcher_tree {
                "B"
            } else if f.is_exotic_tree {
                "E"
            } else if f.is_aromatic {
                "A"
            } else {
                "-"
            };
            out.push_str(&format!("{:<34} {:>5}", crate::notation::symbolic_form(&row.tree), class));
            for r in &row.reports {
                let mark = match (r.holds(), r.property.predicate(f)) {
                    (true, true) => "yes",
                    (false, false) => "no",
                    _ => "MISMATCH",
                };
                out.push_str(&format!(" {mark:>10}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the given checks on the given trees (in parallel over trees).
pub fn classify_trees(trees: &[ExoticAromaticTree], properties: &[Property], cfg: &CheckConfig) -> ClassificationTable {
    let rows = trees
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let tree_cfg = CheckConfig { seed: cfg.seed.wrapping_add(1_000 * i as u64), ..cfg.clone() };
            ClassificationRow {
                tree: t.clone(),
                flags: t.classify(),
                reports: properties.iter().map(|&p| check_property(t, p, &tree_cfg)).collect(),
            }
        })
        .collect();
    ClassificationTable { properties: properties.to_vec(), rows }
}

/// Checks all six properties for every tree of order `1..=n` and fails on
/// the first verdict that disagrees with its class predicate.
pub fn classification_matrix(n: u32, cfg: &CheckConfig) -> Result<ClassificationTable, EquivarianceError> {
    let table = classify_trees(&enumerate_up_to_order(n), &Property::ALL, cfg);
    match table.first_disagreement() {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse_tree;

    fn cfg() -> CheckConfig {
        CheckConfig::new(6, 0, 42)
    }

    #[test]
    fn transforms_have_their_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(make_transform(TransformKind::Stiefel(1, 2), &mut rng).unwrap().is_stiefel());
        assert!(make_transform(TransformKind::Grassmann(2, 1), &mut rng).unwrap().is_grassmann());
        assert!(make_transform(TransformKind::Stiefel(3, 2), &mut rng).is_err());
        let sp = make_transform(TransformKind::SignedPermutation(2), &mut rng).unwrap();
        assert!(sp.is_stiefel() && sp.is_grassmann());
        assert_eq!(signed_permutations(2).len(), 8);
        assert_eq!(signed_permutations(3).len(), 48);
    }

    #[test]
    fn laplacian_scaling_ratio() {
        // d = 1, A = 2: (g·f)″(2y) = f″(y)/2 while g·F(f) = 2 f″(y)
        let lap = parse_tree("f^i_jj ∂_i").unwrap();
        let f = PolyVectorField::parse("x1^3").unwrap();
        let g = AffineMap::linear(vec![vec![q(2)]], 1);
        let err = run(&lap, "scaling", WitnessData::Pushforward { g, f, y: vec![q(1)] }).unwrap_err();
        assert_eq!(&err.lhs[0] / &err.rhs[0], qr(1, 4));
        assert!(err.recheck(&lap, Property::GeneralLinear));
    }

    #[test]
    fn stolon_tree_is_stiefel_not_grassmann() {
        let t = parse_tree("f^i f^j f^j ∂_i").unwrap();
        assert!(check_stiefel_equivariance(&t, &cfg()).holds());
        let g = check_grassmann_equivariance(&t, &cfg());
        assert!(!g.holds());
        assert!(g.witness.unwrap().recheck(&t, Property::Grassmann));
    }

    #[test]
    fn laplacian_is_grassmann_not_stiefel() {
        let t = parse_tree("f^i_jj ∂_i").unwrap();
        assert!(check_grassmann_equivariance(&t, &cfg()).holds());
        let s = check_stiefel_equivariance(&t, &cfg());
        assert!(!s.holds());
        assert!(s.witness.unwrap().recheck(&t, Property::Stiefel));
    }

    #[test]
    fn aroma_breaks_decoupling() {
        let t = parse_tree("f^i f^j_j ∂_i").unwrap();
        assert!(check_decoupling(&t, true, &cfg()).holds());
        let d = check_decoupling(&t, false, &cfg());
        assert!(!d.holds());
        assert!(d.witness.unwrap().recheck(&t, Property::Decoupling));
    }

    #[test]
    fn order_two_matrix_agrees() {
        let table = classification_matrix(2, &CheckConfig::new(4, 2, 9)).unwrap();
        assert_eq!(table.rows.len(), 7);
        assert!(table.witnesses_valid());
    }

    #[test]
    fn single_node_has_every_property() {
        let table = classification_matrix(1, &cfg()).unwrap();
        assert!(table.rows[0].reports.iter().all(|r| r.holds()));
    }
}
