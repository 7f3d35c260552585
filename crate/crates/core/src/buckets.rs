//! Quotient-space bucket configurations.
//!
//! A subspace `V ⊆ F_q^μ` splits the ambient space into cosets `p + V`. A
//! configuration on `X` takes the nonempty intersections of those cosets with
//! `X` as its buckets. Cosets are labelled by their unique representative
//! that vanishes on the pivot columns of `V`'s reduced echelon basis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::EvaluationDomain;
use crate::gf::{self, Field, FieldElement, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BucketError {
    #[error("generator {index} has {got} entries, the ambient space has dimension {mu}")]
    GeneratorLength { index: usize, got: usize, mu: usize },
    #[error("generator {index} has an entry outside the field")]
    NotInField { index: usize },
    #[error("subspace lives in F_q^{subspace}, the domain has {domain} coordinates")]
    DimensionMismatch { subspace: usize, domain: usize },
    #[error("subspace and domain are over different fields")]
    FieldMismatch,
    #[error("load threshold tau must be at least 1")]
    ZeroTau,
}

/// A subspace of `F_q^μ` held by its reduced echelon basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    field: Field,
    mu: usize,
    basis: Matrix,
    pivots: Vec<usize>,
}

impl Subspace {
    /// The span of `generators`, which need not be independent.
    pub fn span(
        field: &Field,
        mu: usize,
        generators: &[Vec<FieldElement>],
    ) -> Result<Self, BucketError> {
        for (index, g) in generators.iter().enumerate() {
            if g.len() != mu {
                return Err(BucketError::GeneratorLength {
                    index,
                    got: g.len(),
                    mu,
                });
            }
            if !g.iter().all(|&a| field.contains(a)) {
                return Err(BucketError::NotInField { index });
            }
        }
        let m = Matrix::from_rows(mu, generators).expect("lengths checked");
        let echelon = gf::row_reduce(field, &m);
        let rows: Vec<Vec<FieldElement>> = (0..echelon.rank())
            .map(|r| echelon.form.row(r).to_vec())
            .collect();
        Ok(Subspace {
            field: field.clone(),
            mu,
            basis: Matrix::from_rows(mu, &rows).expect("lengths checked"),
            pivots: echelon.pivots,
        })
    }

    pub fn zero(field: &Field, mu: usize) -> Self {
        Self::span(field, mu, &[]).expect("empty generator list")
    }

    /// `⟨(1, ..., 1)⟩`.
    pub fn diagonal(field: &Field, mu: usize) -> Self {
        Self::span(field, mu, &[vec![FieldElement::ONE; mu]]).expect("valid generator")
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Dimension of the ambient space.
    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    /// Reduced echelon basis, one row per basis vector.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn is_diagonal(&self) -> bool {
        *self == Self::diagonal(&self.field, self.mu)
    }

    /// Canonical representative of `p + V`.
    pub fn bucket_id(&self, p: &[FieldElement]) -> BucketId {
        debug_assert_eq!(p.len(), self.mu);
        let f = &self.field;
        let mut rep = p.to_vec();
        for (r, &c) in self.pivots.iter().enumerate() {
            let factor = rep[c];
            if factor.is_zero() {
                continue;
            }
            for (x, &b) in rep.iter_mut().zip(self.basis.row(r)) {
                *x = f.sub(*x, f.mul(factor, b));
            }
        }
        BucketId(rep)
    }

    pub fn contains(&self, v: &[FieldElement]) -> bool {
        self.bucket_id(v).0.iter().all(|x| x.is_zero())
    }

    /// Image under the projection onto the given 0-based coordinates, in
    /// that order.
    pub fn project(&self, coords: &[usize]) -> Subspace {
        let rows: Vec<Vec<FieldElement>> = self
            .basis
            .row_iter()
            .map(|r| coords.iter().map(|&c| r[c]).collect())
            .collect();
        Self::span(&self.field, coords.len(), &rows).expect("projected rows are well formed")
    }

    /// Basis rows as raw element indices.
    pub fn basis_values(&self) -> Vec<Vec<u32>> {
        self.basis
            .row_iter()
            .map(|r| r.iter().map(|a| a.value()).collect())
            .collect()
    }
}

/// True when `V ∩ ⟨e_i, e_j⟩ = {0}` for every pair of coordinates.
pub fn subspace_condition(v: &Subspace) -> bool {
    let mu = v.mu();
    let dim = v.dim();
    for i in 0..mu {
        for j in i + 1..mu {
            let mut plane = Matrix::zeros(2, mu);
            plane.set(0, i, FieldElement::ONE);
            plane.set(1, j, FieldElement::ONE);
            let stacked = v.basis().stack(&plane).expect("same width");
            if gf::rank(v.field(), &stacked) != dim + 2 {
                return false;
            }
        }
    }
    true
}

/// Every subspace of `F_q^μ`, ordered by dimension and then basis.
pub fn enumerate_subspaces(field: &Field, mu: usize) -> Vec<Subspace> {
    let vectors = all_vectors(field, mu);
    let mut found: BTreeMap<(usize, Vec<Vec<u32>>), Subspace> = BTreeMap::new();
    let zero = Subspace::zero(field, mu);
    found.insert((0, Vec::new()), zero.clone());
    let mut frontier = vec![zero];
    while let Some(s) = frontier.pop() {
        for v in &vectors {
            if s.contains(v) {
                continue;
            }
            let mut gens: Vec<Vec<FieldElement>> =
                s.basis().row_iter().map(<[_]>::to_vec).collect();
            gens.push(v.clone());
            let bigger = Subspace::span(field, mu, &gens).expect("well formed");
            let key = (bigger.dim(), bigger.basis_values());
            if let std::collections::btree_map::Entry::Vacant(e) = found.entry(key) {
                e.insert(bigger.clone());
                frontier.push(bigger);
            }
        }
    }
    found.into_values().collect()
}

/// All of `F_q^μ` in lexicographic order.
pub fn all_vectors(field: &Field, mu: usize) -> Vec<Vec<FieldElement>> {
    let q = field.order() as usize;
    let total = q.pow(mu as u32);
    (0..total)
        .map(|mut j| {
            let mut v = vec![FieldElement::ZERO; mu];
            for c in (0..mu).rev() {
                v[c] = FieldElement::new((j % q) as u32);
                j /= q;
            }
            v
        })
        .collect()
}

/// Canonical label of a coset `p + V`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BucketId(Vec<FieldElement>);

impl BucketId {
    pub fn representative(&self) -> &[FieldElement] {
        &self.0
    }
}

impl fmt::Display for BucketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// A partition of the codeword coordinates into buckets, derived from the
/// cosets of a subspace and possibly merged afterwards.
///
/// Buckets are numbered `0..m`. Before merging, bucket numbers follow the
/// sorted order of the coset labels.
#[derive(Clone, Debug)]
pub struct BucketConfig {
    domain: Arc<EvaluationDomain>,
    subspace: Subspace,
    cosets: Vec<BucketId>,
    coset_of_point: Vec<usize>,
    bucket_of_coset: Vec<usize>,
    buckets: Vec<Vec<usize>>,
    bucket_of_point: Vec<usize>,
    tau: usize,
}

impl BucketConfig {
    pub fn build(domain: Arc<EvaluationDomain>, subspace: Subspace) -> Result<Self, BucketError> {
        if subspace.mu() != domain.mu() {
            return Err(BucketError::DimensionMismatch {
                subspace: subspace.mu(),
                domain: domain.mu(),
            });
        }
        if subspace.field() != domain.field() {
            return Err(BucketError::FieldMismatch);
        }
        let labels: Vec<BucketId> = domain
            .points()
            .iter()
            .map(|p| subspace.bucket_id(p))
            .collect();
        let cosets: Vec<BucketId> = labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let number: BTreeMap<&BucketId, usize> =
            cosets.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let coset_of_point: Vec<usize> = labels.iter().map(|l| number[l]).collect();
        let mut buckets = vec![Vec::new(); cosets.len()];
        for (j, &c) in coset_of_point.iter().enumerate() {
            buckets[c].push(j);
        }
        Ok(BucketConfig {
            bucket_of_coset: (0..cosets.len()).collect(),
            bucket_of_point: coset_of_point.clone(),
            domain,
            subspace,
            cosets,
            coset_of_point,
            buckets,
            tau: 1,
        })
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// Number of buckets `m`.
    pub fn m(&self) -> usize {
        self.buckets.len()
    }

    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    pub fn bucket_of(&self, j: usize) -> usize {
        self.bucket_of_point[j]
    }

    /// Load threshold this partition was built for: `1` for coset buckets,
    /// the merge factor after [`merge_buckets`].
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn is_merged(&self) -> bool {
        self.cosets.len() != self.buckets.len()
    }

    /// Labels of the nonempty cosets meeting `X`, sorted.
    pub fn cosets(&self) -> &[BucketId] {
        &self.cosets
    }

    pub fn coset_of(&self, j: usize) -> usize {
        self.coset_of_point[j]
    }

    /// The bucket that coset number `c` was merged into.
    pub fn bucket_of_coset(&self, c: usize) -> usize {
        self.bucket_of_coset[c]
    }

    /// Bucket numbers touched by a set of points.
    pub fn bucket_image<I: IntoIterator<Item = usize>>(&self, points: I) -> BTreeSet<usize> {
        points
            .into_iter()
            .map(|j| self.bucket_of_point[j])
            .collect()
    }
}

pub fn build_bucket_config(
    domain: Arc<EvaluationDomain>,
    subspace: Subspace,
) -> Result<BucketConfig, BucketError> {
    BucketConfig::build(domain, subspace)
}

/// Groups consecutive buckets, `tau` at a time, into `⌈m / τ⌉` buckets.
///
/// A query recovery set touching each original bucket at most once touches
/// each merged bucket at most `τ` times.
pub fn merge_buckets(config: &BucketConfig, tau: usize) -> Result<BucketConfig, BucketError> {
    if tau == 0 {
        return Err(BucketError::ZeroTau);
    }
    let m = config.m();
    let merged_count = m.div_ceil(tau);
    let mut buckets = vec![Vec::new(); merged_count];
    let mut group_of = vec![0; m];
    for (b, members) in config.buckets.iter().enumerate() {
        group_of[b] = b / tau;
        buckets[b / tau].extend_from_slice(members);
    }
    for b in &mut buckets {
        b.sort_unstable();
    }
    let bucket_of_point = config
        .bucket_of_point
        .iter()
        .map(|&b| group_of[b])
        .collect();
    let bucket_of_coset = config
        .bucket_of_coset
        .iter()
        .map(|&b| group_of[b])
        .collect();
    Ok(BucketConfig {
        domain: config.domain.clone(),
        subspace: config.subspace.clone(),
        cosets: config.cosets.clone(),
        coset_of_point: config.coset_of_point.clone(),
        bucket_of_coset,
        buckets,
        bucket_of_point,
        tau: config.tau * tau,
    })
}

/// Writes `point_index,x_1,...,x_μ,bucket,coset` rows.
pub fn write_csv<W: Write>(config: &BucketConfig, mut out: W) -> io::Result<()> {
    let mu = config.domain.mu();
    write!(out, "point_index")?;
    for i in 1..=mu {
        write!(out, ",x{i}")?;
    }
    writeln!(out, ",bucket,coset")?;
    for (j, p) in config.domain.points().iter().enumerate() {
        write!(out, "{j}")?;
        for a in p {
            write!(out, ",{a}")?;
        }
        let coset = &config.cosets[config.coset_of_point[j]];
        writeln!(out, ",{},\"{}\"", config.bucket_of_point[j], coset)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::{recovery_set_at, RecoveryDirection};

    fn fe(v: u32) -> FieldElement {
        FieldElement::new(v)
    }

    fn pt(v: &[u32]) -> Vec<FieldElement> {
        v.iter().copied().map(fe).collect()
    }

    fn span(field: &Field, gens: &[&[u32]]) -> Subspace {
        let mu = gens[0].len();
        let rows: Vec<_> = gens.iter().map(|g| pt(g)).collect();
        Subspace::span(field, mu, &rows).unwrap()
    }

    #[test]
    fn subspace_condition_examples() {
        let f3 = Field::prime(3).unwrap();
        assert!(subspace_condition(&span(&f3, &[&[1, 1, 1]])));
        assert!(!subspace_condition(&span(&f3, &[&[1, 0, 0]])));
        assert!(!subspace_condition(&span(&f3, &[&[1, 1, 0]])));
        assert!(subspace_condition(&Subspace::zero(&f3, 3)));
    }

    #[test]
    fn subspace_condition_matches_definition() {
        // V ∩ ⟨e_i, e_j⟩ = {0} iff no nonzero vector of V has support in {i, j}
        for q in [3, 4] {
            let f = Field::of_order(q).unwrap();
            let vectors = all_vectors(&f, 3);
            for v in enumerate_subspaces(&f, 3) {
                let meets_plane = vectors.iter().any(|x| {
                    let support = x.iter().filter(|a| !a.is_zero()).count();
                    support > 0 && support <= 2 && v.contains(x)
                });
                assert_eq!(
                    subspace_condition(&v),
                    !meets_plane,
                    "{:?}",
                    v.basis_values()
                );
            }
        }
    }

    #[test]
    fn subspace_counts() {
        // Gaussian binomials: F_3^3 has 1 + 13 + 13 + 1, F_4^3 has 1 + 21 + 21 + 1
        let count = |q: u32, mu: usize| {
            let f = Field::of_order(q).unwrap();
            let mut by_dim = vec![0; mu + 1];
            for v in enumerate_subspaces(&f, mu) {
                by_dim[v.dim()] += 1;
            }
            by_dim
        };
        assert_eq!(count(3, 3), vec![1, 13, 13, 1]);
        assert_eq!(count(4, 3), vec![1, 21, 21, 1]);
        assert_eq!(count(2, 4), vec![1, 15, 35, 15, 1]);
    }

    #[test]
    fn bucket_id_examples() {
        let f3 = Field::prime(3).unwrap();
        let v = Subspace::diagonal(&f3, 3);
        let a = v.bucket_id(&pt(&[0, 0, 0]));
        assert_eq!(v.bucket_id(&pt(&[1, 1, 1])), a);
        assert_eq!(v.bucket_id(&pt(&[2, 2, 2])), a);
        assert_ne!(v.bucket_id(&pt(&[1, 0, 0])), a);

        let zero = Subspace::zero(&f3, 3);
        assert_eq!(
            zero.bucket_id(&pt(&[2, 0, 1])).representative(),
            &pt(&[2, 0, 1])[..]
        );
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        assert_eq!(BucketConfig::build(d, zero).unwrap().m(), 27);
    }

    #[test]
    fn bucket_id_agrees_with_difference_test() {
        let f4 = Field::of_order(4).unwrap();
        let vectors = all_vectors(&f4, 3);
        for v in enumerate_subspaces(&f4, 3).into_iter().step_by(5) {
            for a in vectors.iter().step_by(7) {
                for b in &vectors {
                    let diff: Vec<_> = a.iter().zip(b).map(|(&x, &y)| f4.sub(x, y)).collect();
                    assert_eq!(v.bucket_id(a) == v.bucket_id(b), v.contains(&diff));
                }
            }
        }
    }

    #[test]
    fn diagonal_bucket_counts() {
        for (q, mu, m) in [(3u32, 3usize, 9usize), (3, 4, 27), (4, 3, 16), (5, 3, 25)] {
            let f = Field::of_order(q).unwrap();
            let d = Arc::new(EvaluationDomain::full(&f, mu).unwrap());
            let cfg = BucketConfig::build(d, Subspace::diagonal(&f, mu)).unwrap();
            assert_eq!(cfg.m(), m);
            assert!(cfg.buckets().iter().all(|b| b.len() == q as usize));
        }
    }

    #[test]
    fn cartesian_buckets_partition_x() {
        let f5 = Field::prime(5).unwrap();
        let x = Arc::new(
            EvaluationDomain::build(
                &f5,
                vec![pt(&[0, 1, 2]), pt(&[0, 1, 2]), pt(&[0, 1, 2]), pt(&[0, 1])],
            )
            .unwrap(),
        );
        let v = Subspace::diagonal(&f5, 4);
        let cfg = BucketConfig::build(x.clone(), v.clone()).unwrap();
        // enumerate the cosets of F_5^4 directly and intersect with X
        let mut sizes = Vec::new();
        let mut seen = BTreeSet::new();
        for p in all_vectors(&f5, 4) {
            let label = v.bucket_id(&p);
            if !seen.insert(label) {
                continue;
            }
            let count = (0..5)
                .map(|s| p.iter().map(|&a| f5.add(a, fe(s))).collect::<Vec<_>>())
                .filter(|r| x.contains(r))
                .count();
            if count > 0 {
                sizes.push(count);
            }
        }
        sizes.sort_unstable();
        let mut got: Vec<usize> = cfg.buckets().iter().map(Vec::len).collect();
        got.sort_unstable();
        assert_eq!(got, sizes);
        assert_eq!(got.iter().sum::<usize>(), 54);
        let mut all: Vec<usize> = cfg.buckets().concat();
        all.sort_unstable();
        assert_eq!(all, (0..54).collect::<Vec<_>>());
    }

    #[test]
    fn config_errors() {
        let f3 = Field::prime(3).unwrap();
        let f5 = Field::prime(5).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        assert!(matches!(
            BucketConfig::build(d.clone(), Subspace::diagonal(&f3, 4)),
            Err(BucketError::DimensionMismatch { .. })
        ));
        assert_eq!(
            BucketConfig::build(d, Subspace::diagonal(&f5, 3)).unwrap_err(),
            BucketError::FieldMismatch
        );
        assert!(matches!(
            Subspace::span(&f3, 3, &[pt(&[1, 1])]),
            Err(BucketError::GeneratorLength { .. })
        ));
    }

    #[test]
    fn bucket_image_examples() {
        let f3 = Field::prime(3).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        let cfg = BucketConfig::build(d.clone(), Subspace::diagonal(&f3, 3)).unwrap();
        assert_eq!(cfg.bucket_image(cfg.buckets()[4].clone()).len(), 1);
        assert!(cfg.bucket_image(std::iter::empty()).is_empty());

        let p = d.point_index(&pt(&[0, 0, 0])).unwrap();
        let mut e_p = vec![p];
        for i in 1..=3 {
            e_p.extend(
                recovery_set_at(&d, p, RecoveryDirection::new(i))
                    .unwrap()
                    .members,
            );
        }
        assert_eq!(e_p.len(), 7);
        assert_eq!(cfg.bucket_image(e_p).len(), 7);
    }

    #[test]
    fn collapsible_buckets_on_full_space() {
        let f3 = Field::prime(3).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        let cfg = BucketConfig::build(d.clone(), Subspace::diagonal(&f3, 3)).unwrap();
        for bucket in cfg.buckets() {
            for &a in bucket {
                for &b in bucket {
                    for i in 1..=3 {
                        let dir = RecoveryDirection::new(i);
                        let ra = recovery_set_at(&d, a, dir).unwrap().members;
                        let rb = recovery_set_at(&d, b, dir).unwrap().members;
                        assert_eq!(cfg.bucket_image(ra), cfg.bucket_image(rb));
                    }
                }
            }
        }
    }

    #[test]
    fn condition_equivalent_to_distinct_star_buckets() {
        let f3 = Field::prime(3).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        let lines: Vec<_> = enumerate_subspaces(&f3, 3)
            .into_iter()
            .filter(|v| v.dim() == 1)
            .collect();
        assert_eq!(lines.len(), 13);
        for v in lines {
            let cfg = BucketConfig::build(d.clone(), v.clone()).unwrap();
            let all_distinct = (0..d.len()).all(|p| {
                let mut e_p = vec![p];
                for i in 1..=3 {
                    e_p.extend(
                        recovery_set_at(&d, p, RecoveryDirection::new(i))
                            .unwrap()
                            .members,
                    );
                }
                cfg.bucket_image(e_p.iter().copied()).len() == e_p.len()
            });
            assert_eq!(subspace_condition(&v), all_distinct);
        }
    }

    #[test]
    fn merge_examples() {
        let f3 = Field::prime(3).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        let cfg = BucketConfig::build(d, Subspace::diagonal(&f3, 3)).unwrap();
        assert_eq!(merge_buckets(&cfg, 1).unwrap().m(), 9);
        assert_eq!(merge_buckets(&cfg, 1).unwrap().buckets(), cfg.buckets());
        let two = merge_buckets(&cfg, 2).unwrap();
        assert_eq!(two.m(), 5);
        assert_eq!(two.tau(), 2);
        assert!(two.is_merged());
        assert_eq!(merge_buckets(&cfg, 9).unwrap().m(), 1);
        assert_eq!(merge_buckets(&cfg, 0).unwrap_err(), BucketError::ZeroTau);
        // every merged bucket holds at most tau cosets
        for b in 0..two.m() {
            let cosets: BTreeSet<_> = two.buckets()[b].iter().map(|&j| two.coset_of(j)).collect();
            assert!(cosets.len() <= 2);
        }
    }

    #[test]
    fn csv_export() {
        let f3 = Field::prime(3).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f3, 3).unwrap());
        let cfg = BucketConfig::build(d, Subspace::diagonal(&f3, 3)).unwrap();
        let mut out = Vec::new();
        write_csv(&cfg, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 28);
        assert_eq!(lines[0], "point_index,x1,x2,x3,bucket,coset");
        assert_eq!(lines[1], "0,0,0,0,0,\"(0,0,0)\"");
    }
}
