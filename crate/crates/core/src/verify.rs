//! Invariant suites run by `upx verify --n N`.
//!
//! Each check recomputes a claim on the chain `Cₙ` (or on a seeded corpus)
//! and records pass/fail plus up to a handful of witnesses.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{
    adjoin_identity, enumerate_end, enumerate_in, generated_subsemigroup, is_right_ideal,
    is_submonoid, kernel, max_right_ideal_in, ChainEndo, EndoSet,
};
use crate::corpus::{class_stream, function_corpus};
use crate::metric::{dplus_space, truncate, FiniteSpace};
use crate::piecewise::{
    classify, compose_fn, endomorphism_check, extensionally_equal, preserving_oracle,
    sample_points, Category, OracleMode, PiecewiseFn,
};
use crate::px::{
    all_tables, build_class_from, compute_px, conjecture_instance, nonempty_subsets,
    preserving_tables, verify_px_is_submonoid, verify_theorem_equivalence, InstanceKind, PxError,
    EVIDENCE_LABEL, MAX_PX_CHAIN,
};
use crate::rational::NonNegRational;

pub const MAX_VERIFY_CHAIN: usize = MAX_PX_CHAIN;

const MAX_WITNESSES: usize = 5;
const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub evidence: &'static str,
    pub n: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\nverify n = {}\n", self.evidence, self.n);
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {}::{} ({} cases)\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.cases
            ));
            for w in &c.witnesses {
                out.push_str(&format!("    witness: {w}\n"));
            }
        }
        out
    }
}

struct Check {
    suite: &'static str,
    name: &'static str,
    cases: usize,
    witnesses: Vec<String>,
    failed: bool,
}

impl Check {
    fn new(suite: &'static str, name: &'static str) -> Self {
        Self {
            suite,
            name,
            cases: 0,
            witnesses: Vec::new(),
            failed: false,
        }
    }

    fn case(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed = true;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            suite: self.suite,
            name: self.name,
            passed: !self.failed,
            cases: self.cases,
            witnesses: self.witnesses,
        }
    }
}

fn int(k: usize) -> NonNegRational {
    NonNegRational::from_integer(k as u64)
}

fn spaces_over(n: usize, points: usize) -> Vec<FiniteSpace> {
    let pairs = points * (points - 1) / 2;
    let mut out = Vec::new();
    let base = n + 1;
    for mut code in 0..base.pow(pairs as u32) {
        let mut upper = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            upper.push(int(code % base));
            code /= base;
        }
        out.push(FiniteSpace::from_upper_indexed(&upper).expect("well formed"));
    }
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn is_weakly_increasing(t: &[u8]) -> bool {
    t.windows(2).all(|w| w[0] <= w[1])
}

/// Runs every suite at chain size `n`.
pub fn run_suites(n: usize) -> Result<VerifyReport, PxError> {
    if n == 0 || n > MAX_VERIFY_CHAIN {
        return Err(PxError::BoundExceeded {
            n,
            max: MAX_VERIFY_CHAIN as u64,
        });
    }
    let mut checks = Vec::new();
    checks.extend(metric_suite(n));
    checks.extend(function_suite(n));
    checks.extend(monoid_suite(n)?);
    checks.extend(px_suite(n)?);
    Ok(VerifyReport {
        evidence: EVIDENCE_LABEL,
        n,
        checks,
    })
}

fn metric_suite(n: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut c = Check::new("metric_core", "dplus_is_ultrametric");
    let values: Vec<NonNegRational> = (0..=2 * n as u64)
        .map(|k| NonNegRational::from_ratio(k, 2).expect("nonzero"))
        .collect();
    for mask in 1u32..(1 << values.len()) {
        let vs: Vec<_> = values
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, v)| v.clone())
            .collect();
        let ok = dplus_space(&vs).is_ok_and(|s| s.is_ultrametric());
        c.case(ok, || format!("values {vs:?}"));
    }
    out.push(c.finish());

    let triples = spaces_over(n, 3);
    let mut c = Check::new("metric_core", "truncation_stays_pseudoultrametric");
    for s in triples.iter().filter(|s| s.is_pseudoultrametric()) {
        for k in 0..=n {
            let ok = truncate(s, &int(k)).is_ok_and(|t| t.is_pseudoultrametric());
            c.case(ok, || format!("{:?} k={k}", s.matrix()));
        }
    }
    out.push(c.finish());

    let mut c = Check::new("metric_core", "ultrametric_implies_metric_and_pseudo");
    for s in &triples {
        c.case(
            !s.is_ultrametric() || (s.is_metric() && s.is_pseudoultrametric()),
            || format!("{:?}", s.matrix()),
        );
    }
    out.push(c.finish());

    let mut c = Check::new("metric_core", "strong_triangle_is_three_point");
    for s in spaces_over(n.min(3), 4) {
        let local = (0..4).all(|a| {
            ((a + 1)..4).all(|b| {
                ((b + 1)..4).all(|d| {
                    s.subspace(&[a, b, d])
                        .is_ok_and(|t| t.is_pseudoultrametric())
                })
            })
        });
        c.case(local == s.is_pseudoultrametric(), || {
            format!("{:?}", s.matrix())
        });
    }
    out.push(c.finish());

    let mut c = Check::new("metric_core", "join_order_law");
    for a in &values {
        for b in &values {
            c.case((a <= b) == (a.join(b) == *b), || format!("a={a} b={b}"));
        }
    }
    out.push(c.finish());
    out
}

fn oracle_grid(f: &PiecewiseFn, witness_points: &[NonNegRational]) -> Vec<NonNegRational> {
    let mut grid: BTreeSet<NonNegRational> = f.breakpoints().iter().cloned().collect();
    grid.extend(witness_points.iter().cloned());
    grid.extend([int(0), int(1), int(2)]);
    let top = grid.iter().next_back().cloned().expect("nonempty");
    grid.insert(&top + &int(1));
    grid.into_iter().collect()
}

fn function_suite(n: usize) -> Vec<CheckResult> {
    let corpus = function_corpus(SEED, 60);
    let mut out = Vec::new();

    let mut c = Check::new("preserving_fn", "classifier_matches_oracle");
    for f in &corpus {
        let verdict = classify(f);
        let coords = verdict
            .witness
            .as_ref()
            .map(|w| w.coordinates())
            .unwrap_or_default();
        let grid = oracle_grid(f, &coords);
        let ultra = preserving_oracle(f, &grid, OracleMode::Ultra).map(|r| r.is_none());
        let pseudo = preserving_oracle(f, &grid, OracleMode::Pseudo).map(|r| r.is_none());
        let want_ultra = verdict.category == Category::UltrametricPreserving;
        let want_pseudo = verdict.category != Category::NotPreserving;
        c.case(ultra == Ok(want_ultra) && pseudo == Ok(want_pseudo), || {
            format!(
                "{} vs oracle ultra={ultra:?} pseudo={pseudo:?}: {f:?}",
                verdict.category
            )
        });
    }
    out.push(c.finish());

    let mut c = Check::new("preserving_fn", "endomorphism_check_on_samples");
    let samples: Vec<NonNegRational> = (0..=2 * n as u64)
        .map(|k| NonNegRational::from_ratio(k, 2).expect("nonzero"))
        .collect();
    for f in &corpus {
        let vals: Vec<NonNegRational> = samples.iter().map(|x| f.evaluate(x)).collect();
        let shadow = vals[0].is_zero() && vals.windows(2).all(|w| w[0] <= w[1]);
        let hom = endomorphism_check(f, &samples).is_none();
        c.case(hom == shadow, || {
            format!("hom={hom} increasing&unital={shadow}: {f:?}")
        });
    }
    out.push(c.finish());

    let ups: Vec<&PiecewiseFn> = corpus
        .iter()
        .filter(|f| classify(f).category == Category::UltrametricPreserving)
        .take(8)
        .collect();
    let mut c = Check::new(
        "preserving_fn",
        "composition_closed_on_ultrametric_preserving",
    );
    for f in &ups {
        for g in &ups {
            let h = compose_fn(f, g);
            c.case(
                classify(&h).category == Category::UltrametricPreserving,
                || format!("{f:?} ∘ {g:?}"),
            );
        }
    }
    out.push(c.finish());

    let mut c = Check::new("preserving_fn", "composition_associative");
    let some: Vec<&PiecewiseFn> = corpus.iter().step_by(7).take(6).collect();
    for f in &some {
        for g in &some {
            for h in &some {
                let left = compose_fn(&compose_fn(f, g), h);
                let right = compose_fn(f, &compose_fn(g, h));
                c.case(extensionally_equal(&left, &right), || {
                    format!("{f:?} {g:?} {h:?}")
                });
                let pts = sample_points(&[f, g, h]);
                let pointwise = pts
                    .iter()
                    .all(|x| left.evaluate(x) == f.evaluate(&g.evaluate(&h.evaluate(x))));
                c.case(pointwise, || format!("pointwise {f:?} {g:?} {h:?}"));
            }
        }
    }
    out.push(c.finish());
    out
}

fn endo_table_set(a: &EndoSet) -> BTreeSet<Vec<u8>> {
    a.iter().map(|f| f.table().to_vec()).collect()
}

fn monoid_suite(n: usize) -> Result<Vec<CheckResult>, PxError> {
    let mut out = Vec::new();
    let end = enumerate_end(n)?;
    let end_tables = endo_table_set(&end);
    let brute: BTreeSet<Vec<u8>> = all_tables(n)
        .filter(|t| {
            let t: Vec<usize> = t.iter().map(|&v| v as usize).collect();
            crate::chain::make_endo(n, &t).is_ok()
        })
        .collect();

    let mut c = Check::new("lattice_monoid", "endomorphism_count");
    c.case(end.len() == brute.len(), || {
        format!("{} vs brute {}", end.len(), brute.len())
    });
    c.case(end.len() as u64 == binomial(2 * n as u64, n as u64), || {
        format!("{} vs C(2n,n)", end.len())
    });
    out.push(c.finish());

    let mut c = Check::new("lattice_monoid", "end_equals_pseudoultrametric_preserving");
    let increasing: BTreeSet<Vec<u8>> = all_tables(n)
        .filter(|t| t[0] == 0 && is_weakly_increasing(t))
        .collect();
    let preserving = preserving_tables(n, false)?;
    c.case(end_tables == brute, || {
        "enumerate_end differs from brute force".into()
    });
    c.case(end_tables == increasing, || {
        "differs from increasing tables fixing 0".into()
    });
    c.case(end_tables == preserving, || {
        format!(
            "differs from preserving tables: {:?}",
            end_tables
                .symmetric_difference(&preserving)
                .collect::<Vec<_>>()
        )
    });
    out.push(c.finish());

    let mut c = Check::new("lattice_monoid", "in_equals_ultrametric_preserving");
    let inj = endo_table_set(&enumerate_in(n)?);
    let positive: BTreeSet<Vec<u8>> = end_tables
        .iter()
        .filter(|t| t[1..].iter().all(|&v| v > 0))
        .cloned()
        .collect();
    let ultra = preserving_tables(n, true)?;
    c.case(inj == positive, || {
        "differs from positive-off-zero endomorphisms".into()
    });
    c.case(inj == ultra, || {
        format!(
            "differs from ultrametric preserving: {:?}",
            inj.symmetric_difference(&ultra).collect::<Vec<_>>()
        )
    });
    out.push(c.finish());

    let mut c = Check::new("lattice_monoid", "kernel_is_submonoid_downset");
    for f in end.iter() {
        let k = kernel(f);
        let downset = k.iter().all(|&a| (0..a).all(|b| k.contains(&b)));
        let closed = k.iter().all(|&a| k.iter().all(|&b| k.contains(&a.max(b))));
        c.case(k.contains(&0) && downset && closed, || {
            format!("{f} kernel {k:?}")
        });
    }
    out.push(c.finish());

    let mut c = Check::new("lattice_monoid", "in_is_submonoid");
    let in_set = enumerate_in(n)?;
    c.case(is_submonoid(&in_set)?, || format!("{in_set}"));
    out.push(c.finish());

    let mut c = Check::new("lattice_monoid", "max_right_ideal_matches_subset_union");
    let small = enumerate_end(n.min(2))?;
    for a in nonempty_subsets(&small)
        .into_iter()
        .filter(|a| a.len() <= 5)
    {
        let generated = generated_subsemigroup(&a)?;
        let mut union = EndoSet::empty(a.n());
        for r in nonempty_subsets(&a) {
            if is_right_ideal(&r, &generated)? {
                for x in r.iter() {
                    union.insert(x.clone())?;
                }
            }
        }
        let rbar = max_right_ideal_in(&a)?;
        let ideal_ok = rbar.is_empty() || is_right_ideal(&rbar, &generated)?;
        c.case(rbar == union && ideal_ok, || {
            format!("A = {a}: fixpoint {rbar} vs union {union}")
        });
    }
    out.push(c.finish());
    Ok(out)
}

/// Random submonoid: identity adjoined to the subsemigroup generated by a
/// random subset.
fn random_submonoid(rng: &mut impl Rng, end: &EndoSet) -> Result<EndoSet, PxError> {
    let members: Vec<&ChainEndo> = end.iter().collect();
    let k = rng.random_range(1..=members.len().min(4));
    let picked = index::sample(rng, members.len(), k);
    let a = EndoSet::new(end.n(), picked.iter().map(|i| members[i].clone()))?;
    Ok(adjoin_identity(&generated_subsemigroup(&a)?)?)
}

fn random_subset_with_identity(rng: &mut impl Rng, end: &EndoSet) -> Result<EndoSet, PxError> {
    let members: Vec<&ChainEndo> = end.iter().filter(|f| !f.is_identity()).collect();
    let k = rng.random_range(0..=members.len().min(5));
    let picked = index::sample(rng, members.len(), k);
    let mut a = EndoSet::new(end.n(), picked.iter().map(|i| members[i].clone()))?;
    a.insert(ChainEndo::identity(end.n()))?;
    Ok(a)
}

fn px_suite(n: usize) -> Result<Vec<CheckResult>, PxError> {
    let mut out = Vec::new();
    let end = enumerate_end(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ n as u64);

    let mut c = Check::new("px_engine", "dplus_construction_is_injective");
    let class = build_class_from(&end)?;
    c.case(class.len() == end.len(), || {
        format!("{} spaces for {} maps", class.len(), end.len())
    });
    out.push(c.finish());

    let mut c = Check::new("px_engine", "px_is_monoid");
    for x in class_stream(SEED, n, 200) {
        let r = verify_px_is_submonoid(&x)?;
        c.case(r.passed(), || format!("{r:?} for {x:?}"));
    }
    out.push(c.finish());

    let mut c = Check::new("px_engine", "px_equals_a_iff_submonoid");
    let mut members_ok = Check::new("px_engine", "px_members_are_endomorphisms");
    let instances: Vec<EndoSet> = if n <= 2 {
        nonempty_subsets(&end)
    } else {
        let mut v = Vec::new();
        for _ in 0..60 {
            v.push(random_submonoid(&mut rng, &end)?);
            v.push(random_subset_with_identity(&mut rng, &end)?);
        }
        v
    };
    for a in &instances {
        let r = verify_theorem_equivalence(a)?;
        c.case(r.consistent(), || {
            format!(
                "A = {a}: submonoid={} equal={} missing={:?} extra={:?}",
                r.is_submonoid, r.equal, r.missing, r.extra
            )
        });
        for f in &r.px {
            let ok =
                f.table()[0] == 0 && (!a.contains_identity() || is_weakly_increasing(f.table()));
            members_ok.case(ok, || format!("{f:?} in P_X for A = {a}"));
        }
    }
    out.push(c.finish());
    out.push(members_ok.finish());

    let mut c = Check::new("px_engine", "prop311_when_identity_in_rbar");
    let with_id: Vec<EndoSet> = if n <= 2 {
        instances
            .into_iter()
            .filter(|a| a.contains_identity())
            .collect()
    } else {
        (0..100)
            .map(|_| random_subset_with_identity(&mut rng, &end))
            .collect::<Result<_, _>>()?
    };
    for a in &with_id {
        let v = conjecture_instance(a, false)?;
        if v.instance_kind == InstanceKind::Prop311 {
            c.case(v.holds, || {
                format!("A = {a}: R̄¹ = {} vs P_X = {:?}", v.rbar_adjoined, v.px)
            });
        }
    }
    out.push(c.finish());

    let mut c = Check::new("px_engine", "submonoid_px_round_trip");
    for _ in 0..20 {
        let a = random_submonoid(&mut rng, &end)?;
        let px = compute_px(&build_class_from(&a)?)?;
        let want: BTreeSet<Vec<u8>> = endo_table_set(&a);
        let got: BTreeSet<Vec<u8>> = px.iter().map(|f| f.table().to_vec()).collect();
        c.case(got == want, || format!("A = {a}"));
    }
    out.push(c.finish());
    Ok(out)
}
