//! Sparse multivariate polynomials with generic coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, Zero};

/// Exact rational numbers.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Commutative ring operations needed by evaluation and composition.
pub trait Scalar:
    Clone + fmt::Debug + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_int(n: i64) -> Self;
}

impl Scalar for Q {
    fn from_int(n: i64) -> Self {
        q(n)
    }
}

impl Scalar for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }
}

impl<T: Scalar> Scalar for Poly<T> {
    fn from_int(n: i64) -> Self {
        Poly::constant(T::from_int(n))
    }
}

/// Exponent vector with trailing zeros trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(mut e: Vec<u32>) -> Self {
        while e.last() == Some(&0) {
            e.pop();
        }
        Monomial(e)
    }

    /// Product of the given variables (with repetition).
    pub fn product_of(vars: &[usize]) -> Self {
        let mut e = Vec::new();
        for &v in vars {
            if e.len() <= v {
                e.resize(v + 1, 0);
            }
            e[v] += 1;
        }
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        Monomial((0..n).map(|i| self.exponent(i) + other.exponent(i)).collect())
    }

    /// Number of variables this monomial may involve.
    pub fn width(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly<T> {
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Default for Poly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> Poly<T> {
    pub fn constant(c: T) -> Self {
        let mut p = Poly { terms: BTreeMap::new() };
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(i: usize) -> Self {
        Self::monomial(Monomial::var(i), T::one())
    }

    pub fn monomial(m: Monomial, c: T) -> Self {
        let mut p = Poly { terms: BTreeMap::new() };
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, T)>) -> Self {
        let mut p = Poly { terms: BTreeMap::new() };
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: T) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> T {
        self.terms.get(m).cloned().unwrap_or_else(T::zero)
    }

    pub fn constant_term(&self) -> T {
        self.coefficient(&Monomial::one())
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// One more than the largest variable index that occurs.
    pub fn width(&self) -> usize {
        self.terms.keys().map(Monomial::width).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, a)| (m.clone(), a.clone() * c.clone())))
    }

    pub fn derivative(&self, var: usize) -> Self {
        Self::from_terms(self.terms.iter().filter(|(m, _)| m.exponent(var) > 0).map(|(m, a)| {
            let mut e = m.0.clone();
            let k = e[var];
            e[var] -= 1;
            (Monomial::from_exponents(e), a.clone() * T::from_int(k as i64))
        }))
    }

    /// Derivative along a multi-index (order of entries is irrelevant).
    pub fn derivative_multi(&self, vars: &[usize]) -> Self {
        vars.iter().fold(self.clone(), |p, &v| p.derivative(v))
    }

    /// Substitutes `values[i]` for variable `i` where `i < values.len()`;
    /// the remaining variables are renumbered down by `values.len()`.
    pub fn partial_eval(&self, values: &[T]) -> Self {
        let k = values.len();
        let mut out = Self::zero();
        for (m, a) in &self.terms {
            let mut c = a.clone();
            for (i, &e) in m.0.iter().enumerate().take(k) {
                for _ in 0..e {
                    c = c * values[i].clone();
                }
            }
            let rest = if m.0.len() > k { m.0[k..].to_vec() } else { Vec::new() };
            out.add_term(Monomial::from_exponents(rest), c);
        }
        out
    }

    /// Full evaluation; variables beyond `point` are an error of the caller.
    pub fn eval(&self, point: &[T]) -> T {
        assert!(self.width() <= point.len(), "polynomial uses {} variables, point has {}", self.width(), point.len());
        self.partial_eval(point).constant_term()
    }

    /// Substitutes polynomial `images[i]` for variable `i`. Variables without
    /// an image are kept.
    pub fn substitute(&self, images: &[Poly<T>]) -> Self {
        let mut powers: Vec<Vec<Poly<T>>> = images.iter().map(|p| vec![Poly::one(), p.clone()]).collect();
        let mut out = Self::zero();
        for (m, a) in &self.terms {
            let mut term = Poly::constant(a.clone());
            let mut kept = Vec::new();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if i < images.len() {
                    while powers[i].len() <= e as usize {
                        let next = &powers[i][powers[i].len() - 1] * &powers[i][1];
                        powers[i].push(next);
                    }
                    term = &term * &powers[i][e as usize];
                } else {
                    if kept.len() <= i {
                        kept.resize(i + 1, 0);
                    }
                    kept[i] = e;
                }
            }
            if !kept.is_empty() {
                term = &term * &Poly::monomial(Monomial::from_exponents(kept), T::one());
            }
            out = out + term;
        }
        out
    }

    /// Renumbers variable `i` to `i + offset`.
    pub fn shift_vars(&self, offset: usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, a)| {
            let mut e = if m.0.is_empty() { Vec::new() } else { vec![0; offset] };
            e.extend_from_slice(&m.0);
            (Monomial::from_exponents(e), a.clone())
        }))
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly::from_terms(self.terms.iter().map(|(m, a)| (m.clone(), f(a))))
    }

    /// Renders with the given variable names.
    pub fn display_with(&self, name: &dyn Fn(usize) -> String) -> String
    where
        T: fmt::Display + Signed,
    {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        // higher degree first, then lexicographically larger exponents first
        let mut terms: Vec<(&Monomial, &T)> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.cmp(a.0)));
        for (idx, (m, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            if !abs.is_one() || m.degree() == 0 {
                factors.push(abs.to_string());
            }
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(name(i)),
                    _ => factors.push(format!("{}^{e}", name(i))),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl<T: Scalar> Zero for Poly<T> {
    fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<T: Scalar> One for Poly<T> {
    fn one() -> Self {
        Poly::constant(T::one())
    }
}

impl<T: Scalar> Add<&Poly<T>> for &Poly<T> {
    type Output = Poly<T>;

    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<T: Scalar> AddAssign<&Poly<T>> for Poly<T> {
    fn add_assign(&mut self, rhs: &Poly<T>) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl<T: Scalar> Add for Poly<T> {
    type Output = Poly<T>;

    fn add(mut self, rhs: Poly<T>) -> Poly<T> {
        self += &rhs;
        self
    }
}

impl<T: Scalar> Sub<&Poly<T>> for &Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: Poly<T>) -> Poly<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Mul<&Poly<T>> for &Poly<T> {
    type Output = Poly<T>;

    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero();
        for (ma, a) in &self.terms {
            for (mb, b) in &rhs.terms {
                out.add_term(ma.mul(mb), a.clone() * b.clone());
            }
        }
        out
    }
}

impl<T: Scalar> Mul for Poly<T> {
    type Output = Poly<T>;

    fn mul(self, rhs: Poly<T>) -> Poly<T> {
        &self * &rhs
    }
}

impl<T: Scalar> Neg for Poly<T> {
    type Output = Poly<T>;

    fn neg(self) -> Poly<T> {
        Poly::from_terms(self.terms.into_iter().map(|(m, c)| (m, -c)))
    }
}

impl<T: Scalar + fmt::Display + Signed> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&|i| format!("x{}", i + 1)))
    }
}
