//! Exact arithmetic in `F_q` for prime-power `q`, and dense linear algebra
//! over it.
//!
//! Elements are stored as their canonical index in `[0, q)`. For an extension
//! field `F_{p^k}` the index of `c_0 + c_1 x + ... + c_{k-1} x^{k-1}` is
//! `c_0 + c_1 p + ... + c_{k-1} p^{k-1}`, where `x` is a root of the field's
//! modulus. The modulus is the first monic primitive polynomial of degree `k`
//! when the lower coefficients `(c_0, ..., c_{k-1})` are read as a base-`p`
//! number with `c_0` least significant. Because the modulus is primitive, `x`
//! generates the multiplicative group and the exp/log tables are simply its
//! powers. For `k = 1` this picks the smallest primitive root and the index
//! of an element is its integer value.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field order accepted by [`Field::new`].
pub const DEFAULT_CEILING: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{k} exceeds the ceiling {ceiling}")]
    TooLarge { p: u32, k: u32, ceiling: u32 },
    #[error("element index {value} is out of range for a field of order {q}")]
    OutOfRange { value: u32, q: u32 },
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
}

/// A field element, stored as its canonical index.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Wraps a raw index. The range is not checked here; use
    /// [`Field::element`] at input boundaries.
    pub const fn new(value: u32) -> Self {
        FieldElement(value)
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug)]
struct Tables {
    p: u32,
    k: u32,
    q: u32,
    // lower coefficients c_0..c_{k-1} of the monic modulus
    modulus: Vec<u32>,
    // exp[i] = x^i for i in 0..q-1
    exp: Vec<u32>,
    // log[exp[i]] = i; log[0] is unused
    log: Vec<u32>,
}

/// The finite field `F_q`, `q = p^k`. Cheap to clone.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.t.q)?;
        if self.t.k > 1 {
            write!(
                f,
                " (= F_{}^{}, modulus {:?})",
                self.t.p, self.t.k, self.t.modulus
            )?;
        }
        Ok(())
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t) || (self.t.p == other.t.p && self.t.k == other.t.k)
    }
}

impl Eq for Field {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn new(p: u32, k: u32) -> Result<Self, GfError> {
        Self::with_ceiling(p, k, DEFAULT_CEILING)
    }

    pub fn with_ceiling(p: u32, k: u32, ceiling: u32) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if k == 0 {
            return Err(GfError::ZeroDegree);
        }
        let q = (p as u64)
            .checked_pow(k)
            .filter(|&q| q <= ceiling as u64)
            .ok_or(GfError::TooLarge { p, k, ceiling })? as u32;

        let (modulus, exp) = primitive_modulus(p, k, q);
        let mut log = vec![0u32; q as usize];
        for (i, &e) in exp.iter().enumerate() {
            log[e as usize] = i as u32;
        }
        Ok(Field {
            t: Arc::new(Tables {
                p,
                k,
                q,
                modulus,
                exp,
                log,
            }),
        })
    }

    /// Convenience constructor for a prime field.
    pub fn prime(p: u32) -> Result<Self, GfError> {
        Self::new(p, 1)
    }

    /// Field of order `q`, which must be a prime power.
    pub fn of_order(q: u32) -> Result<Self, GfError> {
        let p = (2..=q).find(|&d| q.is_multiple_of(d)).ok_or(GfError::NotPrime(q))?;
        let mut k = 0;
        let mut rest = q;
        while rest.is_multiple_of(p) {
            rest /= p;
            k += 1;
        }
        if rest != 1 {
            return Err(GfError::NotPrime(q));
        }
        Self::new(p, k)
    }

    pub fn order(&self) -> u32 {
        self.t.q
    }

    pub fn characteristic(&self) -> u32 {
        self.t.p
    }

    pub fn degree(&self) -> u32 {
        self.t.k
    }

    /// Lower coefficients `c_0..c_{k-1}` of the monic modulus.
    pub fn modulus(&self) -> &[u32] {
        &self.t.modulus
    }

    /// The primitive element `x` whose powers fill the exp table.
    pub fn generator(&self) -> FieldElement {
        FieldElement(self.t.exp[1 % self.t.exp.len()])
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, GfError> {
        if value < self.t.q {
            Ok(FieldElement(value))
        } else {
            Err(GfError::OutOfRange { value, q: self.t.q })
        }
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        a.0 < self.t.q
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.t.q).map(FieldElement)
    }

    /// Image of an integer under `Z -> F_q`.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.t.p as i64) as u32)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(self.contains(a) && self.contains(b));
        let p = self.t.p;
        if self.t.k == 1 {
            return FieldElement((a.0 + b.0) % p);
        }
        let (mut a, mut b) = (a.0, b.0);
        let (mut out, mut place) = (0, 1);
        for _ in 0..self.t.k {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        debug_assert!(self.contains(a));
        let p = self.t.p;
        if self.t.k == 1 {
            return FieldElement((p - a.0) % p);
        }
        let mut a = a.0;
        let (mut out, mut place) = (0, 1);
        for _ in 0..self.t.k {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(self.contains(a) && self.contains(b));
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let t = &*self.t;
        let order = t.q - 1;
        let e = (t.log[a.0 as usize] + t.log[b.0 as usize]) % order;
        FieldElement(t.exp[e as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.is_zero() {
            return None;
        }
        let t = &*self.t;
        let order = t.q - 1;
        let e = (order - t.log[a.0 as usize]) % order;
        Some(FieldElement(t.exp[e as usize]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Option<FieldElement> {
        self.inv(b).map(|b| self.mul(a, b))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let t = &*self.t;
        let order = (t.q - 1) as u64;
        let l = (t.log[a.0 as usize] as u64 * (e % order)) % order;
        FieldElement(t.exp[l as usize])
    }

    pub fn sum<I: IntoIterator<Item = FieldElement>>(&self, it: I) -> FieldElement {
        it.into_iter()
            .fold(FieldElement::ZERO, |acc, x| self.add(acc, x))
    }

    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).fold(FieldElement::ZERO, |acc, (&x, &y)| {
            self.add(acc, self.mul(x, y))
        })
    }
}

/// Multiply the residue with base-`p` digits `state` by `x` modulo the monic
/// polynomial `x^k + modulus`.
fn mul_by_x(p: u32, modulus: &[u32], state: u32) -> u32 {
    let k = modulus.len();
    let mut digits = vec![0u32; k];
    let mut s = state;
    for d in digits.iter_mut() {
        *d = s % p;
        s /= p;
    }
    let lead = digits[k - 1];
    let mut out = 0;
    let mut place = 1;
    for j in 0..k {
        let shifted = if j == 0 { 0 } else { digits[j - 1] };
        let reduce = (lead * modulus[j]) % p;
        out += ((shifted + p - reduce) % p) * place;
        place *= p;
    }
    out
}

fn primitive_modulus(p: u32, k: u32, q: u32) -> (Vec<u32>, Vec<u32>) {
    let order = (q - 1) as usize;
    'candidates: for code in 0..q {
        let mut modulus = Vec::with_capacity(k as usize);
        let mut c = code;
        for _ in 0..k {
            modulus.push(c % p);
            c /= p;
        }
        if modulus[0] == 0 {
            continue;
        }
        let mut exp = Vec::with_capacity(order);
        let mut cur = 1u32;
        for i in 0..order {
            if i > 0 && cur == 1 {
                continue 'candidates;
            }
            exp.push(cur);
            cur = mul_by_x(p, &modulus, cur);
        }
        if cur == 1 {
            return (modulus, exp);
        }
    }
    unreachable!("every finite field has a primitive polynomial")
}

/// Dense row-major matrix of field elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    /// Builds a matrix from rows. `cols` is needed for the zero-row case.
    pub fn from_rows(cols: usize, rows: &[Vec<FieldElement>]) -> Result<Self, GfError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(GfError::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[FieldElement]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &Matrix) -> Result<Self, GfError> {
        if self.cols != other.cols {
            return Err(GfError::Shape(format!(
                "cannot stack {} columns on {}",
                other.cols, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    pub form: Matrix,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    NotRequested,
    /// One solution; free variables are set to zero.
    Found(Vec<FieldElement>),
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankSolve {
    pub rank: usize,
    pub solution: Solution,
    pub echelon: Echelon,
}

/// Gauss-Jordan elimination restricted to the first `pivot_cols` columns.
fn reduce_in_place(field: &Field, m: &mut Matrix, pivot_cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == m.rows {
            break;
        }
        let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
            continue;
        };
        m.swap_rows(r, pr);
        let inv = field.inv(m.get(r, c)).expect("pivot is nonzero");
        for j in 0..m.cols {
            let v = field.mul(m.get(r, j), inv);
            m.set(r, j, v);
        }
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let factor = m.get(i, c);
            if factor.is_zero() {
                continue;
            }
            for j in 0..m.cols {
                let v = field.sub(m.get(i, j), field.mul(factor, m.get(r, j)));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn row_reduce(field: &Field, m: &Matrix) -> Echelon {
    let mut form = m.clone();
    let pivots = reduce_in_place(field, &mut form, m.cols);
    Echelon { form, pivots }
}

pub fn rank(field: &Field, m: &Matrix) -> usize {
    row_reduce(field, m).rank()
}

/// Rank, reduced echelon form and, when `rhs` is given, one solution of
/// `m * x = rhs`.
pub fn rank_and_solve(
    field: &Field,
    m: &Matrix,
    rhs: Option<&[FieldElement]>,
) -> Result<RankSolve, GfError> {
    let echelon = row_reduce(field, m);
    let Some(rhs) = rhs else {
        return Ok(RankSolve {
            rank: echelon.rank(),
            solution: Solution::NotRequested,
            echelon,
        });
    };
    if rhs.len() != m.rows {
        return Err(GfError::Shape(format!(
            "right-hand side has {} entries for {} rows",
            rhs.len(),
            m.rows
        )));
    }
    let mut aug = Matrix::zeros(m.rows, m.cols + 1);
    for (r, &b) in rhs.iter().enumerate() {
        for c in 0..m.cols {
            aug.set(r, c, m.get(r, c));
        }
        aug.set(r, m.cols, b);
    }
    let pivots = reduce_in_place(field, &mut aug, m.cols);
    let consistent = (pivots.len()..m.rows).all(|r| aug.get(r, m.cols).is_zero());
    let solution = if consistent {
        let mut x = vec![FieldElement::ZERO; m.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, m.cols);
        }
        Solution::Found(x)
    } else {
        Solution::Inconsistent
    };
    Ok(RankSolve {
        rank: echelon.rank(),
        solution,
        echelon,
    })
}
