//! Constructive query recovery with load one per bucket.
//!
//! The solver works in the ambient space `F_q^ν` with buckets given by the
//! cosets of the diagonal `⟨(1, ..., 1)⟩`:
//!
//! * `ν = 3`: the query is reduced to one representative per bucket and
//!   settled by a case analysis on how its four points fall into buckets.
//! * `ν > 3`: the first `ν` points are punctured to `F_q^{ν-1}` by dropping
//!   the last coordinate and solved recursively. The directions carry over
//!   unchanged, and the last point is read directly unless its bucket is
//!   already used, in which case it is recovered along coordinate `ν`.
//!
//! For a general `X = A_1 × ... × A_μ` the query is first projected onto the
//! coordinates with `ρ + 1 < |A_i|`, solved there, and the resulting
//! directions are applied to the original points inside `X`.
//!
//! Every recovery set handed out is anchored at the requested point itself,
//! so the values it yields are the ones asked for. When the case analysis
//! replaces a point by a bucket-equivalent representative, only the chosen
//! direction is kept; the sets along that direction touch the same buckets
//! for every point of a bucket when `X = F_q^ν`.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buckets::{
    merge_buckets, subspace_condition, BucketConfig, BucketError, BucketId, Subspace,
};
use crate::code::{CartesianCode, EvaluationDomain, Point};
use crate::gf::{Field, FieldElement};
use crate::recovery::{recovery_set_at, RecoveryDirection, RecoveryError, RecoverySetInstance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BatchError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("query has {got} points but at most {t} can be served")]
    QueryTooLong { got: usize, t: usize },
    #[error("query position {0} does not name a point of the domain")]
    PointNotInDomain(usize),
    #[error("invalid configuration: the subspace meets a coordinate plane")]
    InvalidConfiguration,
    #[error("the construction needs the diagonal subspace ⟨(1,...,1)⟩")]
    NotDiagonal,
    #[error("the construction needs the full space F_q^mu as domain")]
    NotFullSpace,
    #[error("expected {expected} coordinates, found {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("field of order {q} is too small, the construction needs q >= 3")]
    FieldTooSmall { q: u32 },
    #[error("degree bound {rho} must be below q - 1 = {}", q - 1)]
    DegreeTooLarge { rho: u32, q: u32 },
    #[error("insufficient recoverable directions: nu = {nu}, at least 3 are needed")]
    InsufficientDirections { nu: usize },
    #[error("code and bucket configuration are over different domains")]
    DomainMismatch,
    #[error("lower query recovery set is not usable: {0}")]
    InvalidLower(String),
    #[error("recovery set count {got} does not match the query length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Bucket(#[from] BucketError),
}

/// A multiset of requested codeword coordinates, in request order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Query(Vec<usize>);

impl Query {
    pub fn new(points: Vec<usize>) -> Self {
        Query(points)
    }

    pub fn from_points(domain: &EvaluationDomain, points: &[Point]) -> Result<Self, BatchError> {
        points
            .iter()
            .enumerate()
            .map(|(s, p)| domain.point_index(p).ok_or(BatchError::PointNotInDomain(s)))
            .collect::<Result<_, _>>()
            .map(Query)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn t(&self) -> usize {
        self.0.len()
    }

    fn check(&self, domain: &EvaluationDomain, t: usize) -> Result<(), BatchError> {
        if self.0.is_empty() {
            return Err(BatchError::EmptyQuery);
        }
        if self.0.len() > t {
            return Err(BatchError::QueryTooLong {
                got: self.0.len(),
                t,
            });
        }
        if let Some(s) = self.0.iter().position(|&j| j >= domain.len()) {
            return Err(BatchError::PointNotInDomain(s));
        }
        Ok(())
    }

    /// Pads to length `t` by repeating the last point.
    fn padded(&self, t: usize) -> Vec<usize> {
        let mut out = self.0.clone();
        let last = *out.last().expect("query is nonempty");
        out.resize(t.max(out.len()), last);
        out
    }
}

/// One recovery set per query position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryRecoverySet {
    sets: Vec<RecoverySetInstance>,
}

impl QueryRecoverySet {
    pub fn new(sets: Vec<RecoverySetInstance>) -> Self {
        QueryRecoverySet { sets }
    }

    /// Materializes `R_{p_s, i_s}` for each position.
    pub fn materialize(
        domain: &EvaluationDomain,
        anchors: &[usize],
        directions: &[RecoveryDirection],
    ) -> Result<Self, BatchError> {
        if anchors.len() != directions.len() {
            return Err(BatchError::LengthMismatch {
                expected: anchors.len(),
                got: directions.len(),
            });
        }
        let sets = anchors
            .iter()
            .zip(directions)
            .map(|(&a, &d)| recovery_set_at(domain, a, d))
            .collect::<Result<_, _>>()?;
        Ok(QueryRecoverySet { sets })
    }

    pub fn sets(&self) -> &[RecoverySetInstance] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn anchors(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.anchor).collect()
    }

    pub fn directions(&self) -> Vec<RecoveryDirection> {
        self.sets.iter().map(|s| s.direction).collect()
    }

    pub fn union(&self) -> BTreeSet<usize> {
        self.sets
            .iter()
            .flat_map(|s| s.members.iter().copied())
            .collect()
    }

    /// True when no two member points, within a set or across sets, share a
    /// coset of the configuration's subspace. This is the `τ = 1` form of
    /// both query conditions and implies them for any merged configuration.
    pub fn uses_distinct_cosets(&self, config: &BucketConfig) -> bool {
        let mut used = vec![false; config.cosets().len()];
        for j in self.sets.iter().flat_map(|s| &s.members) {
            let c = config.coset_of(*j);
            if std::mem::replace(&mut used[c], true) {
                return false;
            }
        }
        true
    }

    fn truncate(mut self, t: usize) -> Self {
        self.sets.truncate(t);
        self
    }
}

/// All `μ + 1` recovery sets of a point and their union `E_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Star {
    pub sets: Vec<RecoverySetInstance>,
    pub union: Vec<usize>,
}

pub fn full_star(domain: &EvaluationDomain, p: usize) -> Result<Star, BatchError> {
    let sets: Vec<RecoverySetInstance> = (0..=domain.mu())
        .map(|i| recovery_set_at(domain, p, RecoveryDirection::new(i)))
        .collect::<Result<_, _>>()?;
    let union: BTreeSet<usize> = sets
        .iter()
        .flat_map(|s| s.members.iter().copied())
        .collect();
    Ok(Star {
        sets,
        union: union.into_iter().collect(),
    })
}

/// `t_count` recovery sets of the same point, directions `0, 1, ...`.
pub fn satisfy_same_point(
    config: &BucketConfig,
    p: usize,
    t_count: usize,
) -> Result<QueryRecoverySet, BatchError> {
    let domain = config.domain();
    if !subspace_condition(config.subspace()) {
        return Err(BatchError::InvalidConfiguration);
    }
    let query = Query(vec![p; t_count]);
    query.check(domain, domain.mu() + 1)?;
    let dirs: Vec<_> = (0..t_count).map(RecoveryDirection::new).collect();
    let qrs = QueryRecoverySet::materialize(domain, query.indices(), &dirs)?;
    ensure_distinct_cosets(&qrs, config)?;
    Ok(qrs)
}

/// The four-point case analysis over `F_q^3` with diagonal buckets.
pub fn satisfy_diagonal_mu3(
    config: &BucketConfig,
    query: &Query,
) -> Result<QueryRecoverySet, BatchError> {
    let domain = config.domain();
    require_full_diagonal(config, Some(3))?;
    query.check(domain, 4)?;
    let anchors = query.padded(4);
    let points: Vec<Point> = anchors.iter().map(|&j| domain.point(j).clone()).collect();
    let dirs = base_case(domain.field(), &points)?;
    finish(config, &anchors, &dirs, query.t())
}

/// Extends a solution for the punctured first `μ` points to `μ + 1` points
/// of `F_q^μ`.
///
/// `lower_qrs` must be a query recovery set for `(φ(p_1), ..., φ(p_μ))` in
/// `lower_config`, where `φ` drops the last coordinate and `lower_config`'s
/// subspace is `φ(V)`.
pub fn lift_recovery(
    config: &BucketConfig,
    lower_config: &BucketConfig,
    query: &Query,
    lower_qrs: &QueryRecoverySet,
) -> Result<QueryRecoverySet, BatchError> {
    let domain = config.domain();
    let lower = lower_config.domain();
    let mu = domain.mu();
    if !domain.is_full_space() || !lower.is_full_space() {
        return Err(BatchError::NotFullSpace);
    }
    if lower.mu() + 1 != mu {
        return Err(BatchError::WrongDimension {
            expected: mu - 1,
            got: lower.mu(),
        });
    }
    if domain.field() != lower.field() {
        return Err(BatchError::Bucket(BucketError::FieldMismatch));
    }
    let prefix: Vec<usize> = (0..mu - 1).collect();
    if config.subspace().project(&prefix) != *lower_config.subspace() {
        return Err(BatchError::InvalidLower(
            "the lower subspace is not the projection of the upper one".into(),
        ));
    }
    if !subspace_condition(config.subspace()) {
        return Err(BatchError::InvalidConfiguration);
    }
    if query.t() != mu + 1 {
        return Err(BatchError::LengthMismatch {
            expected: mu + 1,
            got: query.t(),
        });
    }
    query.check(domain, mu + 1)?;
    if lower_qrs.len() != mu {
        return Err(BatchError::InvalidLower(format!(
            "{} sets for {mu} punctured points",
            lower_qrs.len()
        )));
    }
    for (s, set) in lower_qrs.sets().iter().enumerate() {
        let p = domain.point(query.indices()[s]);
        if lower.point_index(&p[..mu - 1]) != Some(set.anchor) {
            return Err(BatchError::InvalidLower(format!(
                "set {s} is not anchored at the punctured query point"
            )));
        }
        if recovery_set_at(lower, set.anchor, set.direction)? != *set {
            return Err(BatchError::InvalidLower(format!(
                "set {s} has the wrong members"
            )));
        }
    }
    if !lower_qrs.uses_distinct_cosets(lower_config) {
        return Err(BatchError::InvalidLower(
            "two members share a bucket or a point".into(),
        ));
    }

    let ambient = Ambient::new(config.subspace().clone());
    let points: Vec<Point> = query
        .indices()
        .iter()
        .map(|&j| domain.point(j).clone())
        .collect();
    let mut dirs: Vec<usize> = lower_qrs.directions().iter().map(|d| d.index()).collect();
    dirs.push(ambient.lift_direction(&points, &dirs));
    finish(config, query.indices(), &dirs, mu + 1)
}

/// Serves `μ + 1` requests on the Reed-Muller code `C_{F_q^μ}(ρ)` with
/// diagonal buckets.
pub fn satisfy_query_reed_muller(
    code: &CartesianCode,
    config: &BucketConfig,
    query: &Query,
) -> Result<QueryRecoverySet, BatchError> {
    check_same_domain(code, config)?;
    require_full_diagonal(config, None)?;
    let mu = code.domain().mu();
    if mu < 3 {
        return Err(BatchError::InsufficientDirections { nu: mu });
    }
    let q = code.field().order();
    if code.rho() + 1 >= q {
        return Err(BatchError::DegreeTooLarge { rho: code.rho(), q });
    }
    satisfy_query_cartesian(code, config, query)
}

/// Serves `ν(ρ) + 1` requests on `C_X(ρ)` with buckets `(p + V) ∩ X` for the
/// diagonal `V`.
pub fn satisfy_query_cartesian(
    code: &CartesianCode,
    config: &BucketConfig,
    query: &Query,
) -> Result<QueryRecoverySet, BatchError> {
    check_same_domain(code, config)?;
    if !config.subspace().is_diagonal() {
        return Err(BatchError::NotDiagonal);
    }
    let q = code.field().order();
    if q < 3 {
        return Err(BatchError::FieldTooSmall { q });
    }
    let good = code.nu().directions;
    if good.len() < 3 {
        return Err(BatchError::InsufficientDirections { nu: good.len() });
    }
    let domain = code.domain();
    let t = good.len() + 1;
    query.check(domain, t)?;
    let anchors = query.padded(t);
    let punctured: Vec<Point> = anchors
        .iter()
        .map(|&j| good.iter().map(|&i| domain.point(j)[i - 1]).collect())
        .collect();
    let dirs: Vec<usize> = solve_diagonal(domain.field(), &punctured)?
        .into_iter()
        .map(|d| if d == 0 { 0 } else { good[d - 1] })
        .collect();
    if let Some(&bad) = dirs.iter().find(|&&d| d != 0 && !good.contains(&d)) {
        return Err(BatchError::Internal(format!(
            "direction {bad} is not recoverable at degree {}",
            code.rho()
        )));
    }
    finish(config, &anchors, &dirs, query.t())
}

/// A code together with a bucket configuration on its coordinates.
#[derive(Clone, Debug)]
pub struct BatchCode {
    code: CartesianCode,
    config: BucketConfig,
}

impl BatchCode {
    pub fn new(code: CartesianCode, config: BucketConfig) -> Result<Self, BatchError> {
        check_same_domain(&code, &config)?;
        Ok(BatchCode { code, config })
    }

    /// `C_X(ρ)` with the diagonal coset buckets.
    pub fn diagonal(domain: Arc<EvaluationDomain>, rho: u32) -> Self {
        let v = Subspace::diagonal(domain.field(), domain.mu());
        let config = BucketConfig::build(domain.clone(), v).expect("matching dimensions");
        BatchCode {
            code: CartesianCode::build(domain, rho),
            config,
        }
    }

    pub fn code(&self) -> &CartesianCode {
        &self.code
    }

    pub fn config(&self) -> &BucketConfig {
        &self.config
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        self.code.domain()
    }

    /// Directions whose sets are recovery sets for this code: direct access
    /// and every coordinate with `ρ + 1 < |A_i|`.
    pub fn admissible_directions(&self) -> Vec<RecoveryDirection> {
        std::iter::once(0)
            .chain(self.code.nu().directions)
            .map(RecoveryDirection::new)
            .collect()
    }

    /// Why the constructive solver cannot be used, if it cannot.
    pub fn solver_precondition(&self) -> Result<(), BatchError> {
        if !self.config.subspace().is_diagonal() {
            return Err(BatchError::NotDiagonal);
        }
        let q = self.code.field().order();
        if q < 3 {
            return Err(BatchError::FieldTooSmall { q });
        }
        let nu = self.code.nu().count;
        if nu < 3 {
            return Err(BatchError::InsufficientDirections { nu });
        }
        Ok(())
    }

    /// Query size the constructive solver guarantees, `ν(ρ) + 1`.
    pub fn t(&self) -> Option<usize> {
        self.solver_precondition()
            .ok()
            .map(|_| self.code.nu().count + 1)
    }

    pub fn solve(&self, query: &Query) -> Result<QueryRecoverySet, BatchError> {
        satisfy_query_cartesian(&self.code, &self.config, query)
    }

    /// Same code, buckets merged `tau` at a time.
    pub fn merged(&self, tau: usize) -> Result<Self, BatchError> {
        Ok(BatchCode {
            code: self.code.clone(),
            config: merge_buckets(&self.config, tau)?,
        })
    }
}

fn check_same_domain(code: &CartesianCode, config: &BucketConfig) -> Result<(), BatchError> {
    if Arc::ptr_eq(code.domain(), config.domain()) || **code.domain() == **config.domain() {
        Ok(())
    } else {
        Err(BatchError::DomainMismatch)
    }
}

fn require_full_diagonal(config: &BucketConfig, mu: Option<usize>) -> Result<(), BatchError> {
    let domain = config.domain();
    if let Some(mu) = mu {
        if domain.mu() != mu {
            return Err(BatchError::WrongDimension {
                expected: mu,
                got: domain.mu(),
            });
        }
    }
    if !domain.is_full_space() {
        return Err(BatchError::NotFullSpace);
    }
    if !config.subspace().is_diagonal() {
        return Err(BatchError::NotDiagonal);
    }
    let q = domain.field().order();
    if q < 3 {
        return Err(BatchError::FieldTooSmall { q });
    }
    Ok(())
}

fn ensure_distinct_cosets(qrs: &QueryRecoverySet, config: &BucketConfig) -> Result<(), BatchError> {
    if qrs.uses_distinct_cosets(config) {
        Ok(())
    } else {
        Err(BatchError::Internal(format!(
            "constructed recovery sets share a bucket: directions {:?}",
            qrs.directions()
        )))
    }
}

fn finish(
    config: &BucketConfig,
    anchors: &[usize],
    dirs: &[usize],
    keep: usize,
) -> Result<QueryRecoverySet, BatchError> {
    let dirs: Vec<_> = dirs.iter().copied().map(RecoveryDirection::new).collect();
    let qrs = QueryRecoverySet::materialize(config.domain(), anchors, &dirs)?;
    ensure_distinct_cosets(&qrs, config)?;
    Ok(qrs.truncate(keep))
}

/// `F_q^μ` with coset buckets of a subspace; points are raw coordinates.
struct Ambient {
    v: Subspace,
}

impl Ambient {
    fn new(v: Subspace) -> Self {
        Ambient { v }
    }

    fn field(&self) -> &Field {
        self.v.field()
    }

    fn bucket(&self, p: &[FieldElement]) -> BucketId {
        self.v.bucket_id(p)
    }

    /// `R_{p,i}` in the full space.
    fn line(&self, p: &[FieldElement], i: usize) -> Vec<Point> {
        if i == 0 {
            return vec![p.to_vec()];
        }
        let f = self.field();
        f.elements()
            .filter(|&a| a != p[i - 1])
            .map(|a| {
                let mut x = p.to_vec();
                x[i - 1] = a;
                x
            })
            .collect()
    }

    fn line_buckets(&self, p: &[FieldElement], i: usize) -> BTreeSet<BucketId> {
        self.line(p, i).iter().map(|x| self.bucket(x)).collect()
    }

    /// Direction for the last of `μ + 1` points once the first `μ` carry
    /// `dirs`: `μ` if its bucket already meets their union, else `0`.
    fn lift_direction(&self, points: &[Point], dirs: &[usize]) -> usize {
        let mu = self.v.mu();
        let target = self.bucket(&points[mu]);
        let hit = points[..mu]
            .iter()
            .zip(dirs)
            .any(|(p, &d)| self.line(p, d).iter().any(|z| self.bucket(z) == target));
        if hit {
            mu
        } else {
            0
        }
    }
}

/// Directions for `μ + 1` points of `F_q^μ`, diagonal buckets, `μ ≥ 3`.
fn solve_diagonal(field: &Field, points: &[Point]) -> Result<Vec<usize>, BatchError> {
    let mu = points[0].len();
    debug_assert_eq!(points.len(), mu + 1);
    if mu == 3 {
        return base_case(field, points);
    }
    let lower: Vec<Point> = points[..mu].iter().map(|p| p[..mu - 1].to_vec()).collect();
    let mut dirs = solve_diagonal(field, &lower)?;
    let ambient = Ambient::new(Subspace::diagonal(field, mu));
    dirs.push(ambient.lift_direction(points, &dirs));
    Ok(dirs)
}

/// Four points of `F_q^3` with diagonal buckets.
fn base_case(field: &Field, points: &[Point]) -> Result<Vec<usize>, BatchError> {
    debug_assert_eq!(points.len(), 4);
    let ambient = Ambient::new(Subspace::diagonal(field, 3));

    // buckets in order of first appearance; the first point seen stands in
    // for the whole bucket
    struct Group {
        bucket: BucketId,
        rep: usize,
        positions: Vec<usize>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (s, p) in points.iter().enumerate() {
        let b = ambient.bucket(p);
        match groups.iter_mut().find(|g| g.bucket == b) {
            Some(g) => g.positions.push(s),
            None => groups.push(Group {
                bucket: b,
                rep: s,
                positions: vec![s],
            }),
        }
    }

    let mut dirs = vec![0usize; 4];
    let mut assign = |g: &Group, ds: &[usize]| {
        for (&s, &d) in g.positions.iter().zip(ds) {
            dirs[s] = d;
        }
    };
    let image = |g: &Group, i: usize| ambient.line_buckets(&points[g.rep], i);
    let no_direction = || BatchError::Internal("no admissible direction in the base case".into());

    let mut sizes: Vec<usize> = groups.iter().map(|g| g.positions.len()).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    match sizes.as_slice() {
        [1, 1, 1, 1] => {}
        [4] => assign(&groups[0], &[0, 1, 2, 3]),
        [3, 1] => {
            let (a, b) = if groups[0].positions.len() == 3 {
                (&groups[0], &groups[1])
            } else {
                (&groups[1], &groups[0])
            };
            let blocked = (1..=3).find(|&i| image(a, i).contains(&b.bucket));
            let free: Vec<usize> = (1..=3).filter(|&i| Some(i) != blocked).take(2).collect();
            assign(a, &[0, free[0], free[1]]);
        }
        [2, 1, 1] => {
            let a = groups
                .iter()
                .find(|g| g.positions.len() == 2)
                .expect("pattern");
            let others: Vec<&BucketId> = groups
                .iter()
                .filter(|g| g.positions.len() == 1)
                .map(|g| &g.bucket)
                .collect();
            let j = (1..=3)
                .find(|&i| {
                    let img = image(a, i);
                    others.iter().all(|b| !img.contains(b))
                })
                .ok_or_else(no_direction)?;
            assign(a, &[0, j]);
        }
        [2, 2] => {
            let (a, b) = (&groups[0], &groups[1]);
            let j = (1..=3)
                .find(|&i| !image(a, i).contains(&b.bucket))
                .ok_or_else(no_direction)?;
            assign(a, &[0, j]);
            assign(b, &[0, j]);
        }
        other => {
            return Err(BatchError::Internal(format!(
                "unexpected bucket pattern {other:?}"
            )))
        }
    }
    Ok(dirs)
}
