use std::collections::BTreeMap;
use std::sync::Arc;

use cartesian_batch::batch::{lift_recovery, satisfy_diagonal_mu3, satisfy_same_point};
use cartesian_batch::gf::{rank, rank_and_solve, Solution};
use cartesian_batch::recovery::{lagrange_recover, recover_query_values, recovery_set_at};
use cartesian_batch::validator::{admissible_directions, verify_qrs};
use cartesian_batch::{
    BatchCode, BucketConfig, CartesianCode, EvaluationDomain, Field, FieldElement, Matrix,
    Polynomial, Query, QueryRecoverySet, RecoveryDirection, Subspace,
};
use proptest::prelude::*;

const ORDERS: [u32; 9] = [2, 3, 4, 5, 7, 8, 9, 16, 27];

fn fe(v: u32) -> FieldElement {
    FieldElement::new(v)
}

fn diagonal(q: u32, mu: usize, rho: u32) -> BatchCode {
    let f = Field::of_order(q).unwrap();
    BatchCode::diagonal(Arc::new(EvaluationDomain::full(&f, mu).unwrap()), rho)
}

fn cartesian_f5() -> BatchCode {
    let f = Field::prime(5).unwrap();
    let sub = |s: u32| (0..s).map(fe).collect::<Vec<_>>();
    let d = EvaluationDomain::build(&f, vec![sub(3), sub(3), sub(3), sub(2)]).unwrap();
    BatchCode::diagonal(Arc::new(d), 1)
}

fn random_poly(field: &Field, code: &CartesianCode, coeffs: &[u32]) -> Polynomial {
    let mut f = Polynomial::zero(code.domain().mu());
    for (e, &c) in code.basis().iter().zip(coeffs.iter().cycle()) {
        f.add_term(field, e.clone(), fe(c % field.order()));
    }
    f
}

/// Determinant by cofactor expansion, for the rank oracle.
fn det(field: &Field, m: &[Vec<FieldElement>]) -> FieldElement {
    let n = m.len();
    if n == 0 {
        return field.one();
    }
    let mut acc = field.zero();
    for c in 0..n {
        let minor: Vec<Vec<FieldElement>> = m[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != c)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect();
        let term = field.mul(m[0][c], det(field, &minor));
        acc = if c % 2 == 0 {
            field.add(acc, term)
        } else {
            field.sub(acc, term)
        };
    }
    acc
}

/// Largest k with a nonzero k×k minor.
fn rank_by_minors(field: &Field, m: &Matrix) -> usize {
    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|s| s.count_ones() as usize == k)
            .map(|s| (0..n).filter(|&i| s >> i & 1 == 1).collect())
            .collect()
    }
    (1..=m.rows().min(m.cols()))
        .rev()
        .find(|&k| {
            subsets(m.rows(), k).iter().any(|rs| {
                subsets(m.cols(), k).iter().any(|cs| {
                    let sub: Vec<Vec<FieldElement>> = rs
                        .iter()
                        .map(|&r| cs.iter().map(|&c| m.get(r, c)).collect())
                        .collect();
                    !det(field, &sub).is_zero()
                })
            })
        })
        .unwrap_or(0)
}

fn matrix_strategy() -> impl Strategy<Value = (u32, usize, usize, Vec<u32>)> {
    (
        prop::sample::select(vec![2u32, 3, 4, 5, 7]),
        1usize..=4,
        1usize..=4,
    )
        .prop_flat_map(|(q, r, c)| {
            (
                Just(q),
                Just(r),
                Just(c),
                prop::collection::vec(0..q, r * c),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn field_axioms_on_random_triples(q in prop::sample::select(ORDERS.to_vec()), a in 0u32..1000, b in 0u32..1000, c in 0u32..1000) {
        let f = Field::of_order(q).unwrap();
        let (a, b, c) = (fe(a % q), fe(b % q), fe(c % q));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
        }
    }

    #[test]
    fn rank_matches_transpose_and_minors((q, r, c, vals) in matrix_strategy()) {
        let f = Field::of_order(q).unwrap();
        let rows: Vec<Vec<FieldElement>> = vals.chunks(c).map(|ch| ch.iter().copied().map(fe).collect()).collect();
        let m = Matrix::from_rows(c, &rows).unwrap();
        let k = rank(&f, &m);
        prop_assert!(k <= r.min(c));
        prop_assert_eq!(k, rank(&f, &m.transpose()));
        prop_assert_eq!(k, rank_by_minors(&f, &m));
    }

    #[test]
    fn solve_returns_a_solution((q, _r, c, vals) in matrix_strategy(), x in prop::collection::vec(0u32..100, 4)) {
        let f = Field::of_order(q).unwrap();
        let rows: Vec<Vec<FieldElement>> = vals.chunks(c).map(|ch| ch.iter().copied().map(fe).collect()).collect();
        let m = Matrix::from_rows(c, &rows).unwrap();
        let x: Vec<FieldElement> = x.iter().take(c).map(|&v| fe(v % q)).collect();
        let rhs: Vec<FieldElement> = rows.iter().map(|row| f.dot(row, &x)).collect();
        let rs = rank_and_solve(&f, &m, Some(&rhs)).unwrap();
        match rs.solution {
            Solution::Found(y) => {
                for row in &rows {
                    prop_assert_eq!(f.dot(row, &y), f.dot(row, &x));
                }
            }
            other => prop_assert!(false, "consistent system reported {:?}", other),
        }
    }

    #[test]
    fn encode_is_linear(q in prop::sample::select(vec![3u32, 4, 5]), rho in 0u32..3, a in prop::collection::vec(0u32..100, 10), b in prop::collection::vec(0u32..100, 10), c in 0u32..100) {
        let f = Field::of_order(q).unwrap();
        let code = CartesianCode::build(Arc::new(EvaluationDomain::full(&f, 3).unwrap()), rho);
        let g = random_poly(&f, &code, &a);
        let h = random_poly(&f, &code, &b);
        let c = fe(c % q);
        let eg = code.encode(&g).unwrap();
        let eh = code.encode(&h).unwrap();
        let sum: Vec<_> = eg.iter().zip(&eh).map(|(&x, &y)| f.add(x, y)).collect();
        prop_assert_eq!(code.encode(&g.add(&f, &h)).unwrap(), sum);
        let scaled: Vec<_> = eg.iter().map(|&x| f.mul(c, x)).collect();
        prop_assert_eq!(code.encode(&g.scale(&f, c)).unwrap(), scaled);
    }

    #[test]
    fn lagrange_recovers_random_polynomials(q in prop::sample::select(vec![3u32, 4, 5, 7]), seed in prop::collection::vec(0u32..1000, 20), p in 0usize..343, i in 1usize..=3) {
        let f = Field::of_order(q).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f, 3).unwrap());
        let p = p % d.len();
        for rho in 0..q - 1 {
            let code = CartesianCode::build(d.clone(), rho);
            let g = random_poly(&f, &code, &seed);
            let set = recovery_set_at(&d, p, RecoveryDirection::new(i)).unwrap();
            let values: BTreeMap<usize, FieldElement> =
                set.members.iter().map(|&j| (j, g.evaluate(&f, d.point(j)))).collect();
            let got = lagrange_recover(&d, p, RecoveryDirection::new(i), &values, rho).unwrap();
            prop_assert_eq!(got, g.evaluate(&f, d.point(p)));
        }
    }

    #[test]
    fn reed_muller_solver_is_sound(q in prop::sample::select(vec![3u32, 4, 5]), mu in 3usize..=5, raw in prop::collection::vec(0usize..10_000, 6)) {
        let bc = diagonal(q, mu, 1);
        let n = bc.domain().len();
        let q_idx: Vec<usize> = raw.iter().take(mu + 1).map(|&r| r % n).collect();
        let query = Query::new(q_idx);
        let qrs = bc.solve(&query).unwrap();
        prop_assert!(verify_qrs(bc.config(), &query, &qrs, 1).is_ok());
    }

    #[test]
    fn solver_values_match_codeword(q in prop::sample::select(vec![3u32, 4, 5]), msg in prop::collection::vec(0u32..100, 4), raw in prop::collection::vec(0usize..10_000, 4)) {
        let bc = diagonal(q, 3, 1);
        let msg: Vec<_> = msg.iter().map(|&m| fe(m % q)).collect();
        let cw = bc.code().encode_message(&msg).unwrap();
        let n = bc.domain().len();
        let query = Query::new(raw.iter().map(|&r| r % n).collect());
        let qrs = bc.solve(&query).unwrap();
        let want: Vec<_> = query.indices().iter().map(|&j| cw[j]).collect();
        prop_assert_eq!(recover_query_values(bc.code(), &cw, &qrs).unwrap(), want);
    }

    #[test]
    fn cartesian_solver_is_sound(raw in prop::collection::vec(0usize..54, 1..=4)) {
        let bc = cartesian_f5();
        let query = Query::new(raw);
        let qrs = bc.solve(&query).unwrap();
        prop_assert!(verify_qrs(bc.config(), &query, &qrs, 1).is_ok());
        let allowed = admissible_directions(bc.domain(), 1);
        prop_assert!(qrs.directions().iter().all(|d| allowed.contains(&d.index())));
    }

    /// Swapping query points for equivalent ones leaves a fixed set of
    /// directions valid in the full space.
    #[test]
    fn equivalent_points_share_validity(raw in prop::collection::vec(0usize..81, 5), shifts in prop::collection::vec(0u32..3, 5)) {
        let bc = diagonal(3, 4, 1);
        let d = bc.domain();
        let f = d.field();
        let query = Query::new(raw.clone());
        let qrs = bc.solve(&query).unwrap();
        let moved: Vec<usize> = raw
            .iter()
            .zip(&shifts)
            .map(|(&j, &s)| {
                let p: Vec<FieldElement> = d.point(j).iter().map(|&x| f.add(x, fe(s))).collect();
                d.point_index(&p).unwrap()
            })
            .collect();
        let moved_qrs = QueryRecoverySet::materialize(d, &moved, &qrs.directions()).unwrap();
        prop_assert!(verify_qrs(bc.config(), &Query::new(moved), &moved_qrs, 1).is_ok());
    }

    #[test]
    fn lifting_preserves_validity(raw in prop::collection::vec(0usize..81, 5)) {
        let upper = diagonal(3, 4, 1);
        let lower = diagonal(3, 3, 1);
        let lower_pts: Vec<Vec<FieldElement>> =
            raw[..4].iter().map(|&j| upper.domain().point(j)[..3].to_vec()).collect();
        let lower_q = Query::from_points(lower.domain(), &lower_pts).unwrap();
        let lower_qrs = satisfy_diagonal_mu3(lower.config(), &lower_q).unwrap();
        let query = Query::new(raw);
        let lifted = lift_recovery(upper.config(), lower.config(), &query, &lower_qrs).unwrap();
        prop_assert!(verify_qrs(upper.config(), &query, &lifted, 1).is_ok());
        prop_assert_eq!(&lifted.directions()[..4], &lower_qrs.directions()[..]);
    }

    #[test]
    fn merging_keeps_solutions_valid(tau in 1usize..=9, raw in prop::collection::vec(0usize..27, 4)) {
        let bc = diagonal(3, 3, 1);
        let merged = bc.merged(tau).unwrap();
        prop_assert_eq!(merged.config().m(), 9usize.div_ceil(tau));
        let query = Query::new(raw);
        let qrs = merged.solve(&query).unwrap();
        prop_assert!(verify_qrs(merged.config(), &query, &qrs, tau).is_ok());
    }
}

#[test]
fn same_point_sets_are_disjoint_for_every_valid_line() {
    let f = Field::prime(3).unwrap();
    let d = Arc::new(EvaluationDomain::full(&f, 3).unwrap());
    for v in cartesian_batch::buckets::enumerate_subspaces(&f, 3) {
        let config = BucketConfig::build(d.clone(), v.clone()).unwrap();
        for p in 0..d.len() {
            let r = satisfy_same_point(&config, p, 4);
            assert_eq!(r.is_ok(), cartesian_batch::buckets::subspace_condition(&v));
            if let Ok(qrs) = r {
                assert!(verify_qrs(&config, &Query::new(vec![p; 4]), &qrs, 1).is_ok());
            }
        }
    }
}

#[test]
fn diagonal_is_detected_from_any_spanning_vector() {
    let f = Field::prime(5).unwrap();
    let v = Subspace::span(&f, 4, &[vec![fe(3); 4]]).unwrap();
    assert!(v.is_diagonal());
}
