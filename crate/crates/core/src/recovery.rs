//! Recovery sets along coordinate lines.
//!
//! For a point `p ∈ X` and a coordinate `i`, `R_{p,i}` is the set of points of
//! `X` that agree with `p` everywhere except coordinate `i`, with `p` itself
//! removed. Restricting a polynomial of total degree `ρ` to that line leaves
//! a univariate polynomial of degree at most `ρ`, so when `ρ + 1 < |A_i|`
//! the `|A_i| - 1` values on `R_{p,i}` determine `f(p)` by interpolation.
//! Direction `0` is direct access, `R_{p,0} = {p}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::QueryRecoverySet;
use crate::code::{CartesianCode, EvaluationDomain};
use crate::gf::FieldElement;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecoveryError {
    #[error("point is not in the evaluation domain")]
    PointNotInDomain,
    #[error("point index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("direction {direction} exceeds the number of coordinates {mu}")]
    DirectionOutOfRange { direction: usize, mu: usize },
    #[error(
        "degree too large for this direction: rho + 1 = {} is not below |A_{direction}| = {size}",
        rho + 1
    )]
    DegreeTooLarge {
        direction: usize,
        rho: u32,
        size: usize,
    },
    #[error("interpolation needs an indirect direction")]
    DirectAccess,
    #[error("no value supplied for point {0} of the recovery set")]
    MissingValue(usize),
    #[error("value supplied for point {0}, which is not in the recovery set")]
    ExtraValue(usize),
    #[error("codeword has length {got}, the code has length {expected}")]
    CodewordLength { expected: usize, got: usize },
}

/// Index `i ∈ {0, ..., μ}` naming `R_{p,i}`; `0` is direct access.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct RecoveryDirection(usize);

impl RecoveryDirection {
    pub const DIRECT: RecoveryDirection = RecoveryDirection(0);

    pub const fn new(i: usize) -> Self {
        RecoveryDirection(i)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    pub const fn is_direct(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for RecoveryDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One materialized `R_{p,i}`. Points are referred to by codeword coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecoverySetInstance {
    pub anchor: usize,
    pub direction: RecoveryDirection,
    pub members: Vec<usize>,
}

impl RecoverySetInstance {
    pub fn is_direct(&self) -> bool {
        self.direction.is_direct()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }
}

/// `R_{p,i}` for the point with codeword coordinate `anchor`.
pub fn recovery_set_at(
    domain: &EvaluationDomain,
    anchor: usize,
    direction: RecoveryDirection,
) -> Result<RecoverySetInstance, RecoveryError> {
    if anchor >= domain.len() {
        return Err(RecoveryError::IndexOutOfRange(anchor));
    }
    let i = direction.index();
    if i > domain.mu() {
        return Err(RecoveryError::DirectionOutOfRange {
            direction: i,
            mu: domain.mu(),
        });
    }
    let members = if direction.is_direct() {
        vec![anchor]
    } else {
        domain
            .axis_line(anchor, i)
            .filter(|&j| j != anchor)
            .collect()
    };
    Ok(RecoverySetInstance {
        anchor,
        direction,
        members,
    })
}

pub fn recovery_set(
    domain: &EvaluationDomain,
    p: &[FieldElement],
    direction: RecoveryDirection,
) -> Result<RecoverySetInstance, RecoveryError> {
    let anchor = domain
        .point_index(p)
        .ok_or(RecoveryError::PointNotInDomain)?;
    recovery_set_at(domain, anchor, direction)
}

/// Recovers `f(p)` from the values of `f` on `R_{p,i}`, `i ≥ 1`.
///
/// The values are interpolated by the unique polynomial of degree at most
/// `|A_i| - 2` through the points `A_i ∖ {a_i}`, which is then evaluated at
/// `a_i`. Requires `ρ + 1 < |A_i|`.
pub fn lagrange_recover(
    domain: &EvaluationDomain,
    anchor: usize,
    direction: RecoveryDirection,
    values: &BTreeMap<usize, FieldElement>,
    rho: u32,
) -> Result<FieldElement, RecoveryError> {
    if direction.is_direct() {
        return Err(RecoveryError::DirectAccess);
    }
    let set = recovery_set_at(domain, anchor, direction)?;
    let i = direction.index();
    let size = domain.subset(i).len();
    if rho as usize + 1 >= size {
        return Err(RecoveryError::DegreeTooLarge {
            direction: i,
            rho,
            size,
        });
    }
    if let Some(&extra) = values.keys().find(|j| !set.contains(**j)) {
        return Err(RecoveryError::ExtraValue(extra));
    }
    let field = domain.field();
    let c = i - 1;
    let mut nodes = Vec::with_capacity(set.members.len());
    for &j in &set.members {
        let y = *values.get(&j).ok_or(RecoveryError::MissingValue(j))?;
        nodes.push((domain.point(j)[c], y));
    }
    let target = domain.point(anchor)[c];

    let mut acc = FieldElement::ZERO;
    for (k, &(xk, yk)) in nodes.iter().enumerate() {
        let mut num = FieldElement::ONE;
        let mut den = FieldElement::ONE;
        for (l, &(xl, _)) in nodes.iter().enumerate() {
            if l != k {
                num = field.mul(num, field.sub(target, xl));
                den = field.mul(den, field.sub(xk, xl));
            }
        }
        let basis = field.div(num, den).expect("nodes are distinct");
        acc = field.add(acc, field.mul(yk, basis));
    }
    Ok(acc)
}

/// Reads the query values out of a codeword using the recovery sets of `qrs`:
/// direct reads for direction `0`, interpolation otherwise.
pub fn recover_query_values(
    code: &CartesianCode,
    codeword: &[FieldElement],
    qrs: &QueryRecoverySet,
) -> Result<Vec<FieldElement>, RecoveryError> {
    if codeword.len() != code.len() {
        return Err(RecoveryError::CodewordLength {
            expected: code.len(),
            got: codeword.len(),
        });
    }
    let domain = code.domain();
    qrs.sets()
        .iter()
        .map(|set| {
            if set.is_direct() {
                return Ok(codeword[set.anchor]);
            }
            let values = set.members.iter().map(|&j| (j, codeword[j])).collect();
            lagrange_recover(domain, set.anchor, set.direction, &values, code.rho())
        })
        .collect()
}
