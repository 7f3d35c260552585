//! Brute-force checks of query recovery sets and bucket configurations.
//!
//! Recovery set members are recomputed here from the point coordinates; the
//! only shared machinery with the solver is field arithmetic and bucket ids.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{BatchCode, Query, QueryRecoverySet};
use crate::buckets::{subspace_condition, BucketConfig, Subspace};
use crate::code::EvaluationDomain;
use crate::gf::Field;
use crate::recovery::{RecoveryDirection, RecoverySetInstance};

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;
pub const DEFAULT_MAX_WITNESSES: usize = 20;

/// One reason a query recovery set is rejected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Length {
        expected: usize,
        got: usize,
    },
    Anchor {
        position: usize,
        expected: usize,
        got: usize,
    },
    DirectionOutOfRange {
        position: usize,
        direction: usize,
    },
    Members {
        position: usize,
    },
    /// Condition (1): a bucket holds more than `tau` member indices.
    BucketLoad {
        bucket: usize,
        load: usize,
        tau: usize,
    },
    /// Condition (2): two sets share a point.
    Overlap {
        first: usize,
        second: usize,
        point: usize,
    },
    /// The direction is not a recovery set at this degree bound.
    NotRecoverable {
        position: usize,
        direction: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { expected, got } => {
                write!(f, "{got} recovery sets for {expected} query positions")
            }
            Violation::Anchor {
                position,
                expected,
                got,
            } => {
                write!(
                    f,
                    "position {position}: anchored at {got}, query asks for {expected}"
                )
            }
            Violation::DirectionOutOfRange {
                position,
                direction,
            } => {
                write!(f, "position {position}: direction {direction} out of range")
            }
            Violation::Members { position } => {
                write!(f, "position {position}: members differ from the definition")
            }
            Violation::BucketLoad { bucket, load, tau } => {
                write!(f, "bucket {bucket} holds {load} members, limit {tau}")
            }
            Violation::Overlap {
                first,
                second,
                point,
            } => {
                write!(f, "sets {first} and {second} share point {point}")
            }
            Violation::NotRecoverable {
                position,
                direction,
            } => {
                write!(
                    f,
                    "position {position}: direction {direction} is not recoverable"
                )
            }
        }
    }
}

/// Outcome of [`verify_qrs`]; empty means both conditions hold.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub violations: Vec<Violation>,
}

impl Verification {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `R_{p,i}` straight from coordinates: the points of `X` differing from `p`
/// exactly in coordinate `i`, or `{p}` for `i = 0`.
pub fn members_by_definition(domain: &EvaluationDomain, anchor: usize, dir: usize) -> Vec<usize> {
    if dir == 0 {
        return vec![anchor];
    }
    let p = domain.point(anchor);
    let mut out: Vec<usize> = domain
        .points()
        .iter()
        .enumerate()
        .filter(|(_, x)| (0..p.len()).all(|c| (c == dir - 1) != (x[c] == p[c])))
        .map(|(j, _)| j)
        .collect();
    out.sort_unstable();
    out
}

/// Checks conditions (1) and (2) with threshold `tau`, after rebuilding each
/// set from its anchor and direction.
pub fn verify_qrs(
    config: &BucketConfig,
    query: &Query,
    qrs: &QueryRecoverySet,
    tau: usize,
) -> Verification {
    let domain = config.domain();
    let mut violations = Vec::new();
    if qrs.len() != query.t() {
        violations.push(Violation::Length {
            expected: query.t(),
            got: qrs.len(),
        });
    }
    for (s, (set, &want)) in qrs.sets().iter().zip(query.indices()).enumerate() {
        if set.anchor != want {
            violations.push(Violation::Anchor {
                position: s,
                expected: want,
                got: set.anchor,
            });
        }
        let d = set.direction.index();
        if d > domain.mu() || set.anchor >= domain.len() {
            violations.push(Violation::DirectionOutOfRange {
                position: s,
                direction: d,
            });
            continue;
        }
        let mut members = set.members.clone();
        members.sort_unstable();
        if members != members_by_definition(domain, set.anchor, d) {
            violations.push(Violation::Members { position: s });
        }
    }

    let mut owner = vec![None; domain.len()];
    let mut load = vec![0usize; config.m()];
    for (s, set) in qrs.sets().iter().enumerate() {
        for &j in set.members.iter().filter(|&&j| j < domain.len()) {
            match owner[j] {
                Some(r) if r != s => violations.push(Violation::Overlap {
                    first: r,
                    second: s,
                    point: j,
                }),
                Some(_) => {}
                None => {
                    owner[j] = Some(s);
                    load[config.bucket_of(j)] += 1;
                }
            }
        }
    }
    for (b, &l) in load.iter().enumerate() {
        if l > tau {
            violations.push(Violation::BucketLoad {
                bucket: b,
                load: l,
                tau,
            });
        }
    }
    Verification { violations }
}

/// Directions `i` for which `R_{p,i}` recovers `f(p)` at degree `rho`:
/// direct access and every coordinate with `rho + 1 < |A_i|`.
pub fn admissible_directions(domain: &EvaluationDomain, rho: u32) -> Vec<usize> {
    std::iter::once(0)
        .chain((1..=domain.mu()).filter(|&i| (rho as usize) + 1 < domain.subset(i).len()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(QueryRecoverySet),
    NoneExists,
    Truncated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Search {
    pub outcome: SearchOutcome,
    pub nodes: u64,
}

// (direction, members, bucket of each member)
type Candidate = (usize, Vec<usize>, Vec<usize>);

/// Depth-first search over all assignments of `directions` to the query
/// positions, returning the first one passing both conditions.
pub fn brute_force_qrs(
    config: &BucketConfig,
    query: &Query,
    tau: usize,
    directions: &[usize],
    node_budget: u64,
) -> Search {
    let domain = config.domain();
    let candidates: Vec<Vec<Candidate>> = query
        .indices()
        .iter()
        .map(|&a| {
            directions
                .iter()
                .map(|&d| {
                    let m = members_by_definition(domain, a, d);
                    let b = m.iter().map(|&j| config.bucket_of(j)).collect();
                    (d, m, b)
                })
                .collect()
        })
        .collect();

    struct State<'a> {
        candidates: &'a [Vec<Candidate>],
        tau: usize,
        used: Vec<bool>,
        load: Vec<usize>,
        choice: Vec<usize>,
        nodes: u64,
        budget: u64,
    }

    // Some(true) found, Some(false) exhausted, None out of budget
    fn dfs(st: &mut State<'_>, s: usize) -> Option<bool> {
        if s == st.candidates.len() {
            return Some(true);
        }
        for c in 0..st.candidates[s].len() {
            st.nodes += 1;
            if st.nodes > st.budget {
                return None;
            }
            let (_, members, buckets) = &st.candidates[s][c];
            let fits = members.iter().all(|&j| !st.used[j]) && {
                let mut extra: Vec<usize> = buckets.clone();
                extra.sort_unstable();
                extra
                    .chunk_by(|a, b| a == b)
                    .all(|run| st.load[run[0]] + run.len() <= st.tau)
            };
            if !fits {
                continue;
            }
            for (&j, &b) in members.iter().zip(buckets) {
                st.used[j] = true;
                st.load[b] += 1;
            }
            st.choice.push(c);
            match dfs(st, s + 1) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            st.choice.pop();
            let (_, members, buckets) = &st.candidates[s][c];
            for (&j, &b) in members.iter().zip(buckets) {
                st.used[j] = false;
                st.load[b] -= 1;
            }
        }
        Some(false)
    }

    let mut st = State {
        candidates: &candidates,
        tau,
        used: vec![false; domain.len()],
        load: vec![0; config.m()],
        choice: Vec::with_capacity(query.t()),
        nodes: 0,
        budget: node_budget,
    };
    let outcome = match dfs(&mut st, 0) {
        Some(true) => {
            let sets = st
                .choice
                .iter()
                .zip(query.indices())
                .zip(&candidates)
                .map(|((&c, &a), cands)| RecoverySetInstance {
                    anchor: a,
                    direction: RecoveryDirection::new(cands[c].0),
                    members: cands[c].1.clone(),
                })
                .collect();
            SearchOutcome::Found(QueryRecoverySet::new(sets))
        }
        Some(false) => SearchOutcome::NoneExists,
        None => SearchOutcome::Truncated,
    };
    Search {
        outcome,
        nodes: st.nodes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    /// Every multiset of `t` points.
    Full,
    /// Every multiset of `t` cosets, each represented by its lowest-index point.
    BucketClasses,
    /// `samples` uniform queries drawn from a seeded generator.
    Sample { samples: u64, seed: u64 },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::BucketClasses => "classes",
            Mode::Sample { .. } => "sample",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub node_budget: u64,
    pub max_witnesses: usize,
    pub timing: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            max_witnesses: DEFAULT_MAX_WITNESSES,
            timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameters {
    pub q: u32,
    pub p: u32,
    pub k: u32,
    pub mu: usize,
    pub sizes: Vec<usize>,
    pub rho: u32,
    pub subspace: Vec<Vec<u32>>,
    pub m: usize,
    pub t: usize,
    pub tau: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub queries: u64,
    pub classes: u64,
    pub failures: u64,
    pub agreements: u64,
    pub truncated: u64,
    pub solver_checked: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// No assignment of directions works.
    Unsatisfiable,
    /// The solver emitted a set that fails verification.
    SolverInvalid,
    /// The solver refused a query the search could satisfy.
    SolverMissed,
    /// The solver succeeded where the search found nothing.
    OracleMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Witness {
    pub query: Vec<usize>,
    pub points: Vec<Vec<u32>>,
    pub kind: FailureKind,
    pub detail: String,
    pub search_nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub parameters: Parameters,
    pub mode: String,
    pub seed: Option<u64>,
    pub totals: Totals,
    pub witnesses: Vec<Witness>,
    pub wall_ms: Option<u64>,
}

impl ValidationReport {
    /// Zero failures and a complete search on every query.
    pub fn passed(&self) -> bool {
        self.totals.failures == 0 && self.totals.truncated == 0
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.parameters;
        let t = &self.totals;
        writeln!(
            f,
            "{:<14} {}",
            "field",
            format_args!("F_{} (p={}, k={})", p.q, p.p, p.k)
        )?;
        writeln!(f, "{:<14} {:?}", "sizes", p.sizes)?;
        writeln!(f, "{:<14} {}", "rho", p.rho)?;
        writeln!(f, "{:<14} {:?}", "subspace", p.subspace)?;
        writeln!(f, "{:<14} m={} t={} tau={}", "buckets", p.m, p.t, p.tau)?;
        match self.seed {
            Some(s) => writeln!(f, "{:<14} {} (seed {s})", "mode", self.mode)?,
            None => writeln!(f, "{:<14} {}", "mode", self.mode)?,
        }
        writeln!(f, "{:<14} {}", "queries", t.queries)?;
        writeln!(f, "{:<14} {}", "classes", t.classes)?;
        writeln!(f, "{:<14} {}", "solver checked", t.solver_checked)?;
        writeln!(f, "{:<14} {}", "agreements", t.agreements)?;
        writeln!(f, "{:<14} {}", "truncated", t.truncated)?;
        writeln!(f, "{:<14} {}", "failures", t.failures)?;
        for w in &self.witnesses {
            writeln!(f, "  {:?} {:?}: {}", w.kind, w.points, w.detail)?;
        }
        if let Some(ms) = self.wall_ms {
            writeln!(f, "{:<14} {ms}", "wall ms")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Outcome {
    failure: Option<(FailureKind, String)>,
    truncated: bool,
    agreement: bool,
    solver_checked: bool,
    nodes: u64,
}

fn check_query(
    bc: &BatchCode,
    query: &Query,
    tau: usize,
    dirs: &[usize],
    solver_t: Option<usize>,
    budget: u64,
) -> Outcome {
    let config = bc.config();
    let search = brute_force_qrs(config, query, tau, dirs, budget);
    let mut out = Outcome {
        nodes: search.nodes,
        ..Outcome::default()
    };
    let found = match &search.outcome {
        SearchOutcome::Found(qrs) => {
            let v = verify_qrs(config, query, qrs, tau);
            if !v.is_ok() {
                out.failure = Some((
                    FailureKind::OracleMismatch,
                    format!("search result rejected: {}", v.violations[0]),
                ));
                return out;
            }
            Some(true)
        }
        SearchOutcome::NoneExists => Some(false),
        SearchOutcome::Truncated => {
            out.truncated = true;
            None
        }
    };

    let solver = match solver_t {
        Some(t) if query.t() <= t => Some(bc.solve(query)),
        _ => None,
    };
    match solver {
        None => {
            if found == Some(false) {
                out.failure = Some((
                    FailureKind::Unsatisfiable,
                    "no assignment of directions".into(),
                ));
            }
        }
        Some(result) => {
            out.solver_checked = true;
            match result {
                Ok(qrs) => {
                    let mut v = verify_qrs(config, query, &qrs, tau);
                    for (s, set) in qrs.sets().iter().enumerate() {
                        if !dirs.contains(&set.direction.index()) {
                            v.violations.push(Violation::NotRecoverable {
                                position: s,
                                direction: set.direction.index(),
                            });
                        }
                    }
                    if !v.is_ok() {
                        out.failure =
                            Some((FailureKind::SolverInvalid, v.violations[0].to_string()));
                    } else if found == Some(false) {
                        out.failure = Some((
                            FailureKind::OracleMismatch,
                            "solver succeeded, search found nothing".into(),
                        ));
                    } else if found == Some(true) {
                        out.agreement = true;
                    }
                }
                Err(e) => {
                    out.failure = Some(match found {
                        Some(false) => (
                            FailureKind::Unsatisfiable,
                            format!("no assignment of directions; solver: {e}"),
                        ),
                        _ => (FailureKind::SolverMissed, e.to_string()),
                    });
                }
            }
        }
    }
    out
}

/// Nondecreasing sequences of length `t` over `0..n`, in lexicographic order.
struct Multisets {
    n: usize,
    next: Option<Vec<usize>>,
}

impl Multisets {
    fn new(n: usize, t: usize) -> Self {
        Multisets {
            n,
            next: (n > 0 || t == 0).then(|| vec![0; t]),
        }
    }
}

impl Iterator for Multisets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if let Some(pos) = succ.iter().rposition(|&x| x + 1 < self.n) {
            let v = succ[pos] + 1;
            succ[pos..].iter_mut().for_each(|x| *x = v);
            self.next = Some(succ);
        }
        Some(cur)
    }
}

const CHUNK: usize = 1 << 15;

/// Checks every query produced by `mode` with both the brute-force search
/// and, when it applies, the constructive solver.
pub fn exhaustive_validate(
    bc: &BatchCode,
    t: usize,
    tau: usize,
    mode: Mode,
    opts: &ValidateOptions,
) -> ValidationReport {
    let start = Instant::now();
    let config = bc.config();
    let domain = config.domain();
    let dirs = admissible_directions(domain, bc.code().rho());
    let solver_t = bc.t();

    let queries: Box<dyn Iterator<Item = Vec<usize>> + Send> = match mode {
        Mode::Full => Box::new(Multisets::new(domain.len(), t)),
        Mode::BucketClasses => {
            let mut lowest = vec![usize::MAX; config.cosets().len()];
            for j in (0..domain.len()).rev() {
                lowest[config.coset_of(j)] = j;
            }
            Box::new(
                Multisets::new(lowest.len(), t)
                    .map(move |cs| cs.iter().map(|&c| lowest[c]).collect()),
            )
        }
        Mode::Sample { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = domain.len();
            Box::new((0..samples).map(move |_| (0..t).map(|_| rng.gen_range(0..n)).collect()))
        }
    };

    let mut totals = Totals::default();
    let mut witnesses: Vec<Witness> = Vec::new();
    let mut queries = queries.peekable();
    while queries.peek().is_some() {
        let chunk: Vec<Vec<usize>> = queries.by_ref().take(CHUNK).collect();
        let results: Vec<Outcome> = chunk
            .par_iter()
            .map(|q| {
                check_query(
                    bc,
                    &Query::new(q.clone()),
                    tau,
                    &dirs,
                    solver_t,
                    opts.node_budget,
                )
            })
            .collect();
        for (q, r) in chunk.into_iter().zip(results) {
            totals.queries += 1;
            totals.truncated += r.truncated as u64;
            totals.agreements += r.agreement as u64;
            totals.solver_checked += r.solver_checked as u64;
            if let Some((kind, detail)) = r.failure {
                totals.failures += 1;
                witnesses.push(Witness {
                    points: q
                        .iter()
                        .map(|&j| domain.point(j).iter().map(|a| a.value()).collect())
                        .collect(),
                    query: q,
                    kind,
                    detail,
                    search_nodes: r.nodes,
                });
                witnesses.sort();
                witnesses.truncate(opts.max_witnesses);
            }
        }
    }
    totals.classes = match mode {
        Mode::BucketClasses => totals.queries,
        _ => count_classes(config, t, mode, totals.queries),
    };

    let f = domain.field();
    ValidationReport {
        parameters: Parameters {
            q: f.order(),
            p: f.characteristic(),
            k: f.degree(),
            mu: domain.mu(),
            sizes: domain.sizes(),
            rho: bc.code().rho(),
            subspace: config.subspace().basis_values(),
            m: config.m(),
            t,
            tau,
        },
        mode: mode.name().to_string(),
        seed: match mode {
            Mode::Sample { seed, .. } => Some(seed),
            _ => None,
        },
        totals,
        witnesses,
        wall_ms: opts.timing.then(|| start.elapsed().as_millis() as u64),
    }
}

/// Number of coset multisets `C(c + t - 1, t)`; for full mode every query
/// is its own class.
fn count_classes(config: &BucketConfig, t: usize, mode: Mode, queries: u64) -> u64 {
    match mode {
        Mode::Full => queries,
        _ => {
            let c = config.cosets().len() as u64;
            (0..t as u64).fold(1u64, |acc, i| acc * (c + i) / (i + 1))
        }
    }
}

/// Three characterizations of a usable subspace, computed separately; they
/// must agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivCheck {
    /// `V ∩ ⟨e_i, e_j⟩ = {0}` for all `i < j`, by rank.
    pub plane_condition: bool,
    /// The points of every `E_p` lie in pairwise distinct buckets.
    pub stars_separated: bool,
    /// `(p, ..., p)` with `t = μ + 1` has a query recovery set for every `p`.
    pub same_point_served: bool,
}

impl EquivCheck {
    pub fn agree(&self) -> bool {
        self.plane_condition == self.stars_separated
            && self.stars_separated == self.same_point_served
    }
}

pub fn check_equiv_theorem(field: &Field, mu: usize, v: &Subspace) -> EquivCheck {
    let plane_condition = subspace_condition(v);

    let domain = std::sync::Arc::new(EvaluationDomain::full(field, mu).expect("mu >= 1"));
    let stars_separated = domain.points().iter().enumerate().all(|(j, _)| {
        let star: BTreeSet<usize> = (0..=mu)
            .flat_map(|i| members_by_definition(&domain, j, i))
            .collect();
        let ids: Vec<_> = star.iter().map(|&x| v.bucket_id(domain.point(x))).collect();
        (0..ids.len()).all(|a| (a + 1..ids.len()).all(|b| ids[a] != ids[b]))
    });

    let config = BucketConfig::build(domain.clone(), v.clone()).expect("matching dimensions");
    let dirs: Vec<usize> = (0..=mu).collect();
    let same_point_served = (0..domain.len()).into_par_iter().all(|j| {
        let q = Query::new(vec![j; mu + 1]);
        matches!(
            brute_force_qrs(&config, &q, 1, &dirs, u64::MAX).outcome,
            SearchOutcome::Found(_)
        )
    });

    EquivCheck {
        plane_condition,
        stars_separated,
        same_point_served,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::buckets::enumerate_subspaces;
    use crate::gf::FieldElement;

    fn fe(v: u32) -> FieldElement {
        FieldElement::new(v)
    }

    fn rm(q: u32, mu: usize) -> BatchCode {
        let f = Field::of_order(q).unwrap();
        BatchCode::diagonal(Arc::new(EvaluationDomain::full(&f, mu).unwrap()), 1)
    }

    fn idx(bc: &BatchCode, p: &[u32]) -> usize {
        let p: Vec<_> = p.iter().copied().map(fe).collect();
        bc.domain().point_index(&p).unwrap()
    }

    fn set(bc: &BatchCode, anchor: usize, dir: usize) -> RecoverySetInstance {
        RecoverySetInstance {
            anchor,
            direction: RecoveryDirection::new(dir),
            members: members_by_definition(bc.domain(), anchor, dir),
        }
    }

    #[test]
    fn direct_reads_in_distinct_buckets_verify() {
        let bc = rm(3, 3);
        let q: Vec<usize> = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
            .iter()
            .map(|p| idx(&bc, p))
            .collect();
        let qrs = QueryRecoverySet::new(q.iter().map(|&a| set(&bc, a, 0)).collect());
        assert!(verify_qrs(bc.config(), &Query::new(q), &qrs, 1).is_ok());
    }

    #[test]
    fn identical_indirect_sets_overlap() {
        let bc = rm(3, 3);
        let a = idx(&bc, &[0, 0, 0]);
        let qrs = QueryRecoverySet::new(vec![set(&bc, a, 1), set(&bc, a, 1)]);
        let v = verify_qrs(bc.config(), &Query::new(vec![a, a]), &qrs, 1);
        assert!(v
            .violations
            .iter()
            .any(|x| matches!(x, Violation::Overlap { .. })));
        assert!(!v.is_ok());
    }

    #[test]
    fn verify_reports_each_condition() {
        let bc = rm(3, 3);
        let a = idx(&bc, &[0, 0, 0]);
        let b = idx(&bc, &[1, 1, 1]);
        let qrs = QueryRecoverySet::new(vec![set(&bc, a, 0), set(&bc, b, 0)]);
        let q = Query::new(vec![a, b]);
        let v = verify_qrs(bc.config(), &q, &qrs, 1);
        assert_eq!(v.violations.len(), 1);
        assert!(matches!(
            v.violations[0],
            Violation::BucketLoad {
                load: 2,
                tau: 1,
                ..
            }
        ));
        assert!(verify_qrs(bc.config(), &q, &qrs, 2).is_ok());

        let mut bad = set(&bc, a, 1);
        bad.members.pop();
        let v = verify_qrs(
            bc.config(),
            &Query::new(vec![a]),
            &QueryRecoverySet::new(vec![bad]),
            1,
        );
        assert_eq!(v.violations, vec![Violation::Members { position: 0 }]);

        let v = verify_qrs(
            bc.config(),
            &Query::new(vec![b]),
            &QueryRecoverySet::new(vec![set(&bc, a, 0)]),
            1,
        );
        assert!(matches!(v.violations[0], Violation::Anchor { .. }));
    }

    #[test]
    fn members_match_line_definition() {
        let bc = rm(3, 3);
        let a = idx(&bc, &[0, 0, 0]);
        let want: Vec<usize> = [[1, 0, 0], [2, 0, 0]].iter().map(|p| idx(&bc, p)).collect();
        assert_eq!(members_by_definition(bc.domain(), a, 1), want);
        assert_eq!(members_by_definition(bc.domain(), a, 0), vec![a]);
    }

    #[test]
    fn search_single_point_is_direct() {
        let bc = rm(3, 3);
        let s = brute_force_qrs(bc.config(), &Query::new(vec![7]), 1, &[0, 1, 2, 3], 100);
        match s.outcome {
            SearchOutcome::Found(qrs) => assert!(qrs.sets()[0].is_direct()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn search_fails_on_axis_subspace() {
        let f = Field::prime(3).unwrap();
        let d = Arc::new(EvaluationDomain::full(&f, 3).unwrap());
        let v = Subspace::span(&f, 3, &[vec![fe(1), fe(0), fe(0)]]).unwrap();
        let config = BucketConfig::build(d.clone(), v).unwrap();
        let bc = BatchCode::new(crate::code::CartesianCode::build(d, 1), config).unwrap();
        let s = brute_force_qrs(
            bc.config(),
            &Query::new(vec![0; 4]),
            1,
            &[0, 1, 2, 3],
            u64::MAX,
        );
        assert_eq!(s.outcome, SearchOutcome::NoneExists);
    }

    #[test]
    fn search_budget_is_reported() {
        let bc = rm(3, 4);
        let q = Query::new(vec![0; 5]);
        let s = brute_force_qrs(bc.config(), &q, 1, &[0, 1, 2, 3, 4], 3);
        assert_eq!(s.outcome, SearchOutcome::Truncated);
        assert_eq!(s.nodes, 4);
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(Multisets::new(27, 4).count(), 27_405);
        assert_eq!(
            Multisets::new(3, 2).collect::<Vec<_>>(),
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 1],
                vec![1, 2],
                vec![2, 2]
            ]
        );
        assert_eq!(Multisets::new(0, 2).count(), 0);
    }

    #[test]
    fn classes_mode_on_base_case() {
        let bc = rm(3, 3);
        let r = exhaustive_validate(&bc, 4, 1, Mode::BucketClasses, &ValidateOptions::default());
        assert!(r.passed(), "{r}");
        assert_eq!(r.totals.queries, 495);
        assert_eq!(r.totals.agreements, 495);
    }

    #[test]
    fn sample_reports_are_reproducible() {
        let bc = rm(4, 3);
        let opts = ValidateOptions {
            timing: false,
            ..ValidateOptions::default()
        };
        let mode = Mode::Sample {
            samples: 300,
            seed: 9,
        };
        let a = exhaustive_validate(&bc, 4, 1, mode, &opts);
        let b = exhaustive_validate(&bc, 4, 1, mode, &opts);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.seed, Some(9));
        assert!(a.wall_ms.is_none());
        assert!(a.passed());
    }

    #[test]
    fn merged_config_validates_at_tau_two() {
        let bc = rm(3, 3).merged(2).unwrap();
        assert_eq!(bc.config().m(), 5);
        let r = exhaustive_validate(&bc, 4, 2, Mode::BucketClasses, &ValidateOptions::default());
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn beyond_guarantee_is_exploration_only() {
        let bc = rm(3, 3);
        let r = exhaustive_validate(&bc, 5, 1, Mode::BucketClasses, &ValidateOptions::default());
        assert_eq!(r.totals.solver_checked, 0);
        assert!(r.totals.failures > 0);
        assert!(r
            .witnesses
            .iter()
            .all(|w| w.kind == FailureKind::Unsatisfiable));
    }

    #[test]
    fn equiv_examples() {
        let f = Field::prime(3).unwrap();
        let diag = Subspace::diagonal(&f, 3);
        let c = check_equiv_theorem(&f, 3, &diag);
        assert!(c.plane_condition && c.stars_separated && c.same_point_served);
        let v = Subspace::span(&f, 3, &[vec![fe(1), fe(1), fe(0)]]).unwrap();
        let c = check_equiv_theorem(&f, 3, &v);
        assert!(!c.plane_condition && !c.stars_separated && !c.same_point_served);
    }

    #[test]
    fn equiv_agrees_on_lines_of_f3_cubed() {
        let f = Field::prime(3).unwrap();
        let lines: Vec<_> = enumerate_subspaces(&f, 3)
            .into_iter()
            .filter(|v| v.dim() == 1)
            .collect();
        assert_eq!(lines.len(), 13);
        for v in &lines {
            assert!(
                check_equiv_theorem(&f, 3, v).agree(),
                "{:?}",
                v.basis_values()
            );
        }
    }
}
