//! Polynomial vector fields, affine maps and jets.

use std::collections::HashMap;
use std::fmt;

use num::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::poly::{q, Monomial, Poly, Scalar, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("component uses variable x{var} but the dimension is {dim}")]
    VariableOutOfRange { var: usize, dim: usize },
    #[error("point has {found} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("parse error: {0}")]
    Parse(String),
}

/// A polynomial map `ℝ^d → ℝ^d`. Fields built by the dual construction
/// carry parameters as extra variables numbered from `d`; for those,
/// [`PolyVectorField::width`] exceeds the dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVectorField<T = Q> {
    dim: usize,
    components: Vec<Poly<T>>,
}

impl<T: Scalar> PolyVectorField<T> {
    pub fn new(components: Vec<Poly<T>>) -> Result<Self, FieldError> {
        let dim = components.len();
        if let Some(p) = components.iter().find(|p| p.width() > dim) {
            return Err(FieldError::VariableOutOfRange { var: p.width(), dim });
        }
        Ok(PolyVectorField { dim, components })
    }

    /// A field whose components may involve parameter variables `x_{d+1}, …`.
    pub fn with_parameters(components: Vec<Poly<T>>) -> Self {
        PolyVectorField { dim: components.len(), components }
    }

    pub fn zero(dim: usize) -> Self {
        PolyVectorField { dim, components: vec![Poly::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Poly<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Poly<T> {
        &self.components[i]
    }

    /// Number of variables including parameters.
    pub fn width(&self) -> usize {
        self.components.iter().map(Poly::width).max().unwrap_or(0).max(self.dim)
    }

    pub fn max_degree(&self) -> u32 {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn partial_derivative(&self, comp: usize, multi_index: &[usize]) -> Poly<T> {
        self.components[comp].derivative_multi(multi_index)
    }

    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>, FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(self.components.iter().map(|p| p.eval(x)).collect())
    }

    /// `f ⊕ g` on `ℝ^{d₁+d₂}`; parameters are not allowed here.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut comps = self.components.clone();
        comps.extend(other.components.iter().map(|p| p.shift_vars(self.dim)));
        PolyVectorField { dim: self.dim + other.dim, components: comps }
    }

    /// Substitutes parameter values, keeping the spatial variables.
    pub fn specialize(&self, params: &[T]) -> Self {
        let zeros: Vec<Poly<T>> = (0..self.dim).map(Poly::var).collect();
        let mut images = zeros;
        images.extend(params.iter().cloned().map(Poly::constant));
        PolyVectorField { dim: self.dim, components: self.components.iter().map(|p| p.substitute(&images)).collect() }
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> PolyVectorField<U> {
        PolyVectorField { dim: self.dim, components: self.components.iter().map(|p| p.map_coeffs(f)).collect() }
    }

    /// Left multiplication of the values by a `rows × dim` matrix.
    pub fn transform(&self, a: &[Vec<T>]) -> Vec<Poly<T>> {
        a.iter()
            .map(|row| {
                row.iter()
                    .zip(&self.components)
                    .fold(Poly::zero(), |acc, (c, p)| &acc + &p.scale(c))
            })
            .collect()
    }

    /// Builds the jet at `x` up to the given derivative order, mapping each
    /// derivative polynomial through `eval`.
    pub fn jet_with<R: Scalar>(&self, order: usize, eval: impl Fn(&Poly<T>) -> R) -> Jet<R> {
        let mut values = HashMap::new();
        for (c, p) in self.components.iter().enumerate() {
            let mut frontier: Vec<(Vec<usize>, Poly<T>)> = vec![(Vec::new(), p.clone())];
            for depth in 0..=order {
                let mut next = Vec::new();
                for (idx, poly) in &frontier {
                    values.insert((c, idx.clone()), eval(poly));
                    if depth == order || poly.is_zero() {
                        continue;
                    }
                    let start = idx.last().copied().unwrap_or(0);
                    for k in start..self.dim {
                        let mut j = idx.clone();
                        j.push(k);
                        next.push((j, poly.derivative(k)));
                    }
                }
                frontier = next;
            }
        }
        Jet { dim: self.dim, order, values }
    }
}

impl PolyVectorField<Q> {
    pub fn jet(&self, x: &[Q], order: usize) -> Result<Jet<Q>, FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(self.jet_with(order, |p| p.eval(x)))
    }

    /// Jet at `x` whose entries are polynomials in the parameters
    /// (renumbered from 0).
    pub fn parametric_jet(&self, x: &[Q], order: usize) -> Jet<Poly<Q>> {
        self.jet_with(order, |p| p.partial_eval(x))
    }

    /// `(g·f)(x) = A f(A⁻¹(x − b))` for an invertible affine map.
    pub fn pushforward(&self, g: &AffineMap) -> Result<Self, FieldError> {
        assert_eq!(g.rows(), self.dim);
        assert_eq!(g.cols(), self.dim);
        let inv = g.inverse().ok_or(FieldError::Singular)?;
        Ok(PolyVectorField { dim: self.dim, components: self.compose_affine(&inv).transform(&g.matrix) })
    }

    /// `f ∘ g` for an affine `g: ℝ^m → ℝ^d`.
    pub fn compose_affine(&self, g: &AffineMap) -> Self {
        assert_eq!(g.rows(), self.dim);
        let images = g.as_polys();
        PolyVectorField { dim: g.cols(), components: self.components.iter().map(|p| p.substitute(&images)).collect() }
    }

    pub fn parse(text: &str) -> Result<Self, FieldError> {
        parse_field(text)
    }

    pub fn random(dim: usize, degree: u32, density: f64, rng: &mut impl Rng) -> Self {
        let monos = monomials_up_to(dim, degree);
        let comps = (0..dim)
            .map(|_| {
                let mut p = Poly::zero();
                for m in &monos {
                    if rng.random_bool(density) {
                        p.add_term(m.clone(), q(rng.random_range(-3..=3)));
                    }
                }
                p
            })
            .collect();
        PolyVectorField { dim, components: comps }
    }
}

impl fmt::Display for PolyVectorField<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.components.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "f{} = {}", i + 1, p)?;
        }
        Ok(())
    }
}

/// All monomials in `dim` variables of total degree at most `degree`.
pub fn monomials_up_to(dim: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut e = vec![0u32; dim];
    fn go(i: usize, left: u32, e: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == e.len() {
            out.push(Monomial::from_exponents(e.clone()));
            return;
        }
        for k in 0..=left {
            e[i] = k;
            go(i + 1, left - k, e, out);
        }
        e[i] = 0;
    }
    go(0, degree, &mut e, &mut out);
    out
}

/// Random polynomial potential of degree at most `degree`.
pub fn random_potential(dim: usize, degree: u32, density: f64, rng: &mut impl Rng) -> Poly<Q> {
    let mut p = Poly::zero();
    for m in monomials_up_to(dim, degree) {
        if rng.random_bool(density) {
            p.add_term(m, q(rng.random_range(-3..=3)));
        }
    }
    p
}

/// `∇V` on `ℝ^d`.
pub fn gradient_field(potential: &Poly<Q>, dim: usize) -> Result<PolyVectorField<Q>, FieldError> {
    PolyVectorField::new((0..dim).map(|i| potential.derivative(i)).collect())
}

/// `x ↦ A x + b` with `A` of size `rows × cols`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Vec<Q>,
    rows: usize,
    cols: usize,
}

impl AffineMap {
    pub fn new(matrix: Matrix, offset: Vec<Q>, cols: usize) -> Self {
        let rows = matrix.len();
        assert!(matrix.iter().all(|r| r.len() == cols), "ragged matrix");
        assert_eq!(offset.len(), rows);
        AffineMap { matrix, offset, rows, cols }
    }

    pub fn linear(matrix: Matrix, cols: usize) -> Self {
        let rows = matrix.len();
        Self::new(matrix, vec![Q::zero(); rows], cols)
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(linalg::identity(n), n)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        linalg::mat_vec(&self.matrix, x).into_iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    pub fn apply_linear(&self, x: &[Q]) -> Vec<Q> {
        linalg::mat_vec(&self.matrix, x)
    }

    pub fn as_polys(&self) -> Vec<Poly<Q>> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| {
                let mut p = Poly::constant(b.clone());
                for (j, a) in row.iter().enumerate() {
                    p.add_term(Monomial::var(j), a.clone());
                }
                p
            })
            .collect()
    }

    pub fn transpose_matrix(&self) -> Matrix {
        linalg::transpose(&self.matrix, self.rows, self.cols)
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        if self.rows != self.cols {
            return None;
        }
        let inv = linalg::inverse(&self.matrix)?;
        let shift: Vec<Q> = linalg::mat_vec(&inv, &self.offset).into_iter().map(|v| -v).collect();
        Some(AffineMap::new(inv, shift, self.rows))
    }

    /// Whether `AᵀA = I`.
    pub fn is_stiefel(&self) -> bool {
        let at = self.transpose_matrix();
        linalg::mat_mul(&at, &self.matrix, self.rows, self.cols) == linalg::identity(self.cols)
    }

    /// Whether `AAᵀ = I`.
    pub fn is_grassmann(&self) -> bool {
        let at = self.transpose_matrix();
        linalg::mat_mul(&self.matrix, &at, self.cols, self.rows) == linalg::identity(self.rows)
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        let b: Vec<String> = self.offset.iter().map(|v| v.to_string()).collect();
        write!(f, "A=[{}] b=[{}]", rows.join("; "), b.join(" "))
    }
}

/// Partial derivatives of a field at a point, keyed by component and sorted
/// multi-index.
#[derive(Clone, Debug)]
pub struct Jet<R> {
    dim: usize,
    order: usize,
    values: HashMap<(usize, Vec<usize>), R>,
}

impl<R: Scalar> Jet<R> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `∂_{idx} f^{comp}`; `idx` must be sorted. Entries beyond the stored
    /// order or below a vanishing derivative are zero.
    pub fn get(&self, comp: usize, idx: &[usize]) -> R {
        debug_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        self.values.get(&(comp, idx.to_vec())).cloned().unwrap_or_else(R::zero)
    }

    pub fn lookup(&self, comp: usize, idx: &[usize]) -> Option<&R> {
        self.values.get(&(comp, idx.to_vec()))
    }
}

// ---- text format ------------------------------------------------------------

fn parse_field(text: &str) -> Result<PolyVectorField<Q>, FieldError> {
    let mut comps = Vec::new();
    for raw in text.split(['\n', ';']) {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let expr = match line.split_once('=') {
            Some((lhs, rhs)) => {
                let lhs = lhs.trim();
                let k: usize = lhs
                    .strip_prefix('f')
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| FieldError::Parse(format!("bad component name `{lhs}`")))?;
                if k != comps.len() + 1 {
                    return Err(FieldError::Parse(format!("expected f{} but found {lhs}", comps.len() + 1)));
                }
                rhs
            }
            None => line,
        };
        comps.push(parse_polynomial(expr)?);
    }
    PolyVectorField::new(comps)
}

/// Parses expressions such as `2*x2^2 - x1*x3 + 3/4`.
pub fn parse_polynomial(s: &str) -> Result<Poly<Q>, FieldError> {
    let mut p = Parser { chars: s.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0 };
    let out = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(FieldError::Parse(format!("unexpected `{}` in `{s}`", p.chars[p.pos])));
    }
    Ok(out)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn err<T>(&self, what: &str) -> Result<T, FieldError> {
        Err(FieldError::Parse(format!("{what} at position {}", self.pos)))
    }

    fn expr(&mut self) -> Result<Poly<Q>, FieldError> {
        let mut acc = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            acc = if c == '+' { &acc + &t } else { &acc - &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly<Q>, FieldError> {
        let mut acc = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let f = self.unary()?;
            if c == '*' {
                acc = &acc * &f;
            } else {
                if f.degree() > 0 || f.is_zero() {
                    return self.err("division by a non-constant or zero");
                }
                acc = acc.scale(&(Q::one() / f.constant_term()));
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly<Q>, FieldError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly<Q>, FieldError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let e = self.integer()?;
            let mut out = Poly::one();
            for _ in 0..e {
                out = &out * &base;
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64, FieldError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().or_else(|_| self.err("number too large"))
    }

    fn atom(&mut self) -> Result<Poly<Q>, FieldError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Some('x') => {
                self.pos += 1;
                if self.peek() == Some('_') {
                    self.pos += 1;
                }
                let i = self.integer()? as usize;
                if i == 0 {
                    return self.err("variables are numbered from x1");
                }
                Ok(Poly::var(i - 1))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(Poly::constant(Q::from_integer(n.into())))
            }
            _ => self.err("expected a number, variable or `(`"),
        }
    }
}
