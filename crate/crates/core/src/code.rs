//! Evaluation domains `X = A_1 × ... × A_μ` and the affine Cartesian code
//! `C_X(ρ)`: evaluations of all polynomials of total degree at most `ρ` at
//! the points of `X`.
//!
//! Points are enumerated in lexicographic order of their positions inside
//! the subsets, first coordinate most significant. The position of a point
//! in that enumeration is its codeword coordinate.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::gf::{self, Field, FieldElement, Matrix};

/// A point of the ambient space `F_q^μ`.
pub type Point = Vec<FieldElement>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("a domain needs at least one coordinate")]
    NoCoordinates,
    #[error("subset A_{0} is empty")]
    EmptySubset(usize),
    #[error("subset A_{coordinate} lists element {element} twice")]
    DuplicateElement { coordinate: usize, element: u32 },
    #[error("subset A_{coordinate} contains {element}, which is not in F_{q}")]
    NotInField {
        coordinate: usize,
        element: u32,
        q: u32,
    },
    #[error("polynomial has {got} variables, the code has {expected}")]
    Arity { expected: usize, got: usize },
    #[error("polynomial of degree {degree} is not in a code of degree bound {rho}")]
    DegreeTooLarge { degree: u32, rho: u32 },
    #[error("message has {got} coefficients, the code has dimension {expected}")]
    MessageLength { expected: usize, got: usize },
}

#[derive(Debug)]
pub struct EvaluationDomain {
    field: Field,
    subsets: Vec<Vec<FieldElement>>,
    points: Vec<Point>,
    // position[c][element] = index of element inside A_c
    position: Vec<Vec<Option<usize>>>,
    strides: Vec<usize>,
}

impl PartialEq for EvaluationDomain {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.subsets == other.subsets
    }
}

impl Eq for EvaluationDomain {}

impl EvaluationDomain {
    pub fn build(field: &Field, subsets: Vec<Vec<FieldElement>>) -> Result<Self, CodeError> {
        if subsets.is_empty() {
            return Err(CodeError::NoCoordinates);
        }
        let q = field.order();
        let mut position = Vec::with_capacity(subsets.len());
        for (c, subset) in subsets.iter().enumerate() {
            if subset.is_empty() {
                return Err(CodeError::EmptySubset(c + 1));
            }
            let mut pos = vec![None; q as usize];
            for (j, &a) in subset.iter().enumerate() {
                if !field.contains(a) {
                    return Err(CodeError::NotInField {
                        coordinate: c + 1,
                        element: a.value(),
                        q,
                    });
                }
                if pos[a.value() as usize].replace(j).is_some() {
                    return Err(CodeError::DuplicateElement {
                        coordinate: c + 1,
                        element: a.value(),
                    });
                }
            }
            position.push(pos);
        }

        let mu = subsets.len();
        let mut strides = vec![1usize; mu];
        for c in (0..mu - 1).rev() {
            strides[c] = strides[c + 1] * subsets[c + 1].len();
        }
        let n = strides[0] * subsets[0].len();
        let points = (0..n)
            .map(|j| {
                (0..mu)
                    .map(|c| subsets[c][(j / strides[c]) % subsets[c].len()])
                    .collect()
            })
            .collect();

        Ok(EvaluationDomain {
            field: field.clone(),
            subsets,
            points,
            position,
            strides,
        })
    }

    /// `X = F_q^μ`.
    pub fn full(field: &Field, mu: usize) -> Result<Self, CodeError> {
        let all: Vec<FieldElement> = field.elements().collect();
        Self::build(field, vec![all; mu])
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn mu(&self) -> usize {
        self.subsets.len()
    }

    /// Code length `n = |X|`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn subsets(&self) -> &[Vec<FieldElement>] {
        &self.subsets
    }

    /// `A_i` for a 1-based coordinate `i`.
    pub fn subset(&self, i: usize) -> &[FieldElement] {
        &self.subsets[i - 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(Vec::len).collect()
    }

    /// True when every `A_i` is the whole field.
    pub fn is_full_space(&self) -> bool {
        let q = self.field.order() as usize;
        self.subsets.iter().all(|a| a.len() == q)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, j: usize) -> &Point {
        &self.points[j]
    }

    /// Codeword coordinate of `p`, or `None` when `p ∉ X`.
    pub fn point_index(&self, p: &[FieldElement]) -> Option<usize> {
        if p.len() != self.mu() {
            return None;
        }
        let mut j = 0;
        for (c, a) in p.iter().enumerate() {
            let pos = (*self.position[c].get(a.value() as usize)?)?;
            j += pos * self.strides[c];
        }
        Some(j)
    }

    pub fn contains(&self, p: &[FieldElement]) -> bool {
        self.point_index(p).is_some()
    }

    /// Indices of the points agreeing with point `j` off the 1-based
    /// coordinate `i`, including `j` itself, in point order.
    pub fn axis_line(&self, j: usize, i: usize) -> impl Iterator<Item = usize> + '_ {
        let c = i - 1;
        let size = self.subsets[c].len();
        let stride = self.strides[c];
        let base = j - ((j / stride) % size) * stride;
        (0..size).map(move |s| base + s * stride)
    }
}

/// Map between a polynomial's exponent vectors and its coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Polynomial {
    mu: usize,
    terms: BTreeMap<Vec<u32>, FieldElement>,
}

impl Polynomial {
    pub fn zero(mu: usize) -> Self {
        Polynomial {
            mu,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(mu: usize, c: FieldElement) -> Self {
        Self::monomial(vec![0; mu], c)
    }

    pub fn monomial(exponents: Vec<u32>, c: FieldElement) -> Self {
        let mut p = Self::zero(exponents.len());
        if !c.is_zero() {
            p.terms.insert(exponents, c);
        }
        p
    }

    /// `x_i` for a 1-based variable index.
    pub fn variable(mu: usize, i: usize) -> Self {
        let mut e = vec![0; mu];
        e[i - 1] = 1;
        Self::monomial(e, FieldElement::ONE)
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], FieldElement)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn add_term(&mut self, field: &Field, exponents: Vec<u32>, c: FieldElement) {
        assert_eq!(exponents.len(), self.mu, "exponent vector arity");
        let entry = self.terms.entry(exponents).or_insert(FieldElement::ZERO);
        *entry = field.add(*entry, c);
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn add(&self, field: &Field, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(field, e.to_vec(), c);
        }
        out
    }

    pub fn scale(&self, field: &Field, c: FieldElement) -> Polynomial {
        let mut out = Polynomial::zero(self.mu);
        for (e, v) in self.terms() {
            out.add_term(field, e.to_vec(), field.mul(c, v));
        }
        out
    }

    /// Total degree; zero for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, field: &Field, p: &[FieldElement]) -> FieldElement {
        field.sum(self.terms().map(|(e, c)| {
            e.iter()
                .zip(p)
                .fold(c, |acc, (&k, &a)| field.mul(acc, field.pow(a, k as u64)))
        }))
    }
}

/// `C_X(ρ)` with its reduced monomial basis and generator matrix.
#[derive(Debug, Clone)]
pub struct CartesianCode {
    domain: Arc<EvaluationDomain>,
    rho: u32,
    basis: Vec<Vec<u32>>,
    generator: Matrix,
    dimension: usize,
}

impl CartesianCode {
    /// Builds the code. The basis is every exponent vector `e` with
    /// `e_i < |A_i|` and `Σ e_i ≤ ρ`, ordered by total degree and then
    /// with `x_1` before `x_2` and so on.
    pub fn build(domain: Arc<EvaluationDomain>, rho: u32) -> Self {
        let caps: Vec<u32> = domain.sizes().iter().map(|&s| s as u32 - 1).collect();
        let boxes: usize = caps.iter().map(|&c| c as usize + 1).product();
        let mut basis: Vec<Vec<u32>> = (0..boxes)
            .map(|mut idx| {
                caps.iter()
                    .map(|&c| {
                        let e = (idx % (c as usize + 1)) as u32;
                        idx /= c as usize + 1;
                        e
                    })
                    .collect::<Vec<u32>>()
            })
            .filter(|e| e.iter().sum::<u32>() <= rho)
            .collect();
        basis.sort_by(|a, b| {
            let (da, db) = (a.iter().sum::<u32>(), b.iter().sum::<u32>());
            da.cmp(&db).then_with(|| b.cmp(a))
        });

        let field = domain.field().clone();
        let rows: Vec<Vec<FieldElement>> = basis
            .iter()
            .map(|e| {
                let m = Polynomial::monomial(e.clone(), FieldElement::ONE);
                domain
                    .points()
                    .iter()
                    .map(|p| m.evaluate(&field, p))
                    .collect()
            })
            .collect();
        let generator = Matrix::from_rows(domain.len(), &rows).expect("rows have length n");
        let dimension = gf::rank(&field, &generator);
        CartesianCode {
            domain,
            rho,
            basis,
            generator,
            dimension,
        }
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn field(&self) -> &Field {
        self.domain.field()
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// `k`, computed as the rank of the generator matrix.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn encode(&self, f: &Polynomial) -> Result<Vec<FieldElement>, CodeError> {
        if f.mu() != self.domain.mu() {
            return Err(CodeError::Arity {
                expected: self.domain.mu(),
                got: f.mu(),
            });
        }
        let degree = f.total_degree();
        if degree > self.rho {
            return Err(CodeError::DegreeTooLarge {
                degree,
                rho: self.rho,
            });
        }
        let field = self.field();
        Ok(self
            .domain
            .points()
            .iter()
            .map(|p| f.evaluate(field, p))
            .collect())
    }

    /// Codeword for coefficients on the monomial basis.
    pub fn encode_message(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if message.len() != self.basis.len() {
            return Err(CodeError::MessageLength {
                expected: self.basis.len(),
                got: message.len(),
            });
        }
        let field = self.field();
        Ok((0..self.len())
            .map(|j| {
                field.sum(
                    message
                        .iter()
                        .enumerate()
                        .map(|(r, &m)| field.mul(m, self.generator.get(r, j))),
                )
            })
            .collect())
    }

    /// The polynomial with the given coefficients on the monomial basis.
    pub fn polynomial(&self, message: &[FieldElement]) -> Polynomial {
        let mut f = Polynomial::zero(self.domain.mu());
        for (e, &c) in self.basis.iter().zip(message) {
            f.add_term(self.field(), e.clone(), c);
        }
        f
    }

    /// `ν(ρ)` and the 1-based coordinates `i` with `ρ + 1 < |A_i|`.
    pub fn nu(&self) -> Nu {
        let directions: Vec<usize> = self
            .domain
            .sizes()
            .iter()
            .enumerate()
            .filter(|(_, &s)| (self.rho as usize) + 1 < s)
            .map(|(c, _)| c + 1)
            .collect();
        Nu {
            count: directions.len(),
            directions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nu {
    pub count: usize,
    pub directions: Vec<usize>,
}
