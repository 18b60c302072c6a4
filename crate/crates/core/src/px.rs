//! `P_X` over finite chains and the search harness for the right-ideal
//! description of `P_X`.
//!
//! A [`SpaceClass`] is a finite set of pseudoultrametric spaces whose distances
//! lie in `{0, …, n}`. [`compute_px`] returns every map `{0,…,n} → {0,…,n}`
//! (monotone or not) that sends each member of the class back into the class,
//! membership being exact equality of labeled spaces.
//!
//! Everything here is about the finite chain `Cₙ`; reports say so explicitly.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::chain::{
    adjoin_identity, all_right_ideals_union, enumerate_end, generated_subsemigroup, is_submonoid,
    max_right_ideal_in, ChainEndo, EndoSet, MonoidError,
};
use crate::metric::{apply_fn, dplus_space, FiniteSpace, MetricError};
use crate::rational::NonNegRational;

/// Largest chain size for which `P_X` is computed (`(n+1)^(n+1)` candidates).
pub const MAX_PX_CHAIN: usize = 4;

/// Largest number of candidate subsets an exhaustive search may visit.
pub const MAX_EXHAUSTIVE_SUBSETS: u64 = 1 << 20;

pub const EVIDENCE_LABEL: &str =
    "finite-chain evidence: C_n = {0..n} under max; not a statement about (R+, max)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PxError {
    #[error(transparent)]
    Monoid(#[from] MonoidError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("a space class must be nonempty")]
    EmptyClass,
    #[error("space {0} of the class is not pseudoultrametric")]
    NotPseudoultrametric(usize),
    #[error("space {space} has distance {value}, outside 0..={n}")]
    ValueOutOfRange {
        space: usize,
        value: NonNegRational,
        n: usize,
    },
    #[error("n = {n} exceeds the configured bound {max}")]
    BoundExceeded { n: usize, max: u64 },
    #[error("the identity map must belong to A")]
    IdentityMissing,
    #[error("random mode requires a seed")]
    MissingSeed,
    #[error("caps must be positive")]
    ZeroCap,
}

/// The class `X`: a nonempty, canonically ordered set of pseudoultrametric
/// spaces with integer distances in `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceClass {
    n: usize,
    spaces: Vec<FiniteSpace>,
}

#[derive(Serialize, Deserialize)]
struct RawClass {
    n: usize,
    spaces: Vec<FiniteSpace>,
}

impl Serialize for SpaceClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawClass {
            n: self.n,
            spaces: self.spaces.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpaceClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawClass::deserialize(deserializer)?;
        SpaceClass::new(raw.n, raw.spaces).map_err(serde::de::Error::custom)
    }
}

impl SpaceClass {
    pub fn new(n: usize, spaces: impl IntoIterator<Item = FiniteSpace>) -> Result<Self, PxError> {
        let spaces: BTreeSet<FiniteSpace> = spaces.into_iter().collect();
        if spaces.is_empty() {
            return Err(PxError::EmptyClass);
        }
        for (i, s) in spaces.iter().enumerate() {
            if !s.is_pseudoultrametric() {
                return Err(PxError::NotPseudoultrametric(i));
            }
            if let Some(v) = s.values().into_iter().find(|v| to_level(v, n).is_none()) {
                return Err(PxError::ValueOutOfRange {
                    space: i,
                    value: v,
                    n,
                });
            }
        }
        Ok(Self {
            n,
            spaces: spaces.into_iter().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spaces(&self) -> &[FiniteSpace] {
        &self.spaces
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn contains(&self, s: &FiniteSpace) -> bool {
        self.spaces.binary_search(s).is_ok()
    }
}

fn to_level(v: &NonNegRational, n: usize) -> Option<u8> {
    v.to_u64().filter(|&k| k <= n as u64).map(|k| k as u8)
}

/// An unconstrained map `{0,…,n} → {0,…,n}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateMap {
    table: Vec<u8>,
}

impl CandidateMap {
    pub fn new(n: usize, table: Vec<u8>) -> Option<Self> {
        (table.len() == n + 1 && table.iter().all(|&v| v as usize <= n)).then_some(Self { table })
    }

    pub fn n(&self) -> usize {
        self.table.len() - 1
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn identity(n: usize) -> Self {
        Self {
            table: (0..=n as u8).collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &CandidateMap) -> CandidateMap {
        CandidateMap {
            table: other
                .table
                .iter()
                .map(|&a| self.table[a as usize])
                .collect(),
        }
    }

    fn apply(&self, v: &NonNegRational) -> NonNegRational {
        let k = v.to_u64().expect("class distances are integers") as usize;
        NonNegRational::from_integer(self.table[k] as u64)
    }
}

impl From<&ChainEndo> for CandidateMap {
    fn from(f: &ChainEndo) -> Self {
        Self {
            table: f.table().to_vec(),
        }
    }
}

impl fmt::Debug for CandidateMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.table)
    }
}

impl Serialize for CandidateMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.table.serialize(serializer)
    }
}

pub fn endo_tables(a: &EndoSet) -> BTreeSet<CandidateMap> {
    a.iter().map(CandidateMap::from).collect()
}

/// `X = {({0..n}, g ∘ d⁺) : g ∈ A}` with `d⁺(p, q) = max{p, q}` for `p ≠ q`.
pub fn build_class_from(a: &EndoSet) -> Result<SpaceClass, PxError> {
    if a.is_empty() {
        return Err(MonoidError::EmptySet.into());
    }
    let dplus = dplus_on_chain(a.n());
    let spaces = a.iter().map(|g| {
        apply_fn(&dplus, |v| {
            let k = v.to_u64().expect("integer distances") as u8;
            NonNegRational::from_integer(g.apply(k) as u64)
        })
        .into_space()
        .expect("endomorphisms fix 0")
    });
    SpaceClass::new(a.n(), spaces)
}

/// `({0,…,n}, d⁺)`.
pub fn dplus_on_chain(n: usize) -> FiniteSpace {
    let values: Vec<NonNegRational> = (0..=n as u64).map(NonNegRational::from_integer).collect();
    dplus_space(&values).expect("distinct values")
}

/// Integer image of a class used for fast membership tests.
struct Lookup {
    /// Member matrices (flattened), one set per distinct label list.
    by_labels: Vec<HashSet<Vec<u8>>>,
    spaces: Vec<(usize, Vec<u8>)>,
}

impl Lookup {
    fn new(class: &SpaceClass) -> Self {
        let mut groups: HashMap<&[String], usize> = HashMap::new();
        let mut by_labels: Vec<HashSet<Vec<u8>>> = Vec::new();
        let spaces = class
            .spaces
            .iter()
            .map(|s| {
                let g = *groups.entry(s.points()).or_insert_with(|| {
                    by_labels.push(HashSet::new());
                    by_labels.len() - 1
                });
                let flat: Vec<u8> = s
                    .matrix()
                    .iter()
                    .flatten()
                    .map(|v| to_level(v, class.n).expect("validated"))
                    .collect();
                by_labels[g].insert(flat.clone());
                (g, flat)
            })
            .collect();
        Self { by_labels, spaces }
    }

    fn preserves(&self, table: &[u8], scratch: &mut Vec<u8>) -> bool {
        self.spaces.iter().all(|(g, flat)| {
            scratch.clear();
            scratch.extend(flat.iter().map(|&v| table[v as usize]));
            self.by_labels[*g].contains(scratch.as_slice())
        })
    }
}

fn check_px_bound(n: usize) -> Result<(), PxError> {
    if n == 0 || n > MAX_PX_CHAIN {
        return Err(PxError::BoundExceeded {
            n,
            max: MAX_PX_CHAIN as u64,
        });
    }
    Ok(())
}

/// Every `(n+1)^(n+1)` table in lexicographic order.
pub fn all_tables(n: usize) -> impl Iterator<Item = Vec<u8>> {
    let base = n as u64 + 1;
    let total = base.pow(base as u32);
    (0..total).map(move |mut code| {
        let mut t = vec![0u8; n + 1];
        for slot in t.iter_mut().rev() {
            *slot = (code % base) as u8;
            code /= base;
        }
        t
    })
}

/// `P_X`: all maps `f` with `(Y, f ∘ ρ) ∈ X` whenever `(Y, ρ) ∈ X`.
pub fn compute_px(class: &SpaceClass) -> Result<BTreeSet<CandidateMap>, PxError> {
    check_px_bound(class.n)?;
    let lookup = Lookup::new(class);
    let mut scratch = Vec::new();
    Ok(all_tables(class.n)
        .filter(|t| lookup.preserves(t, &mut scratch))
        .map(|table| CandidateMap { table })
        .collect())
}

/// Reference implementation of [`compute_px`] that goes through
/// [`apply_fn`] and [`SpaceClass::contains`] on exact rationals.
pub fn compute_px_exact(class: &SpaceClass) -> Result<BTreeSet<CandidateMap>, PxError> {
    check_px_bound(class.n)?;
    Ok(all_tables(class.n)
        .map(|table| CandidateMap { table })
        .filter(|f| {
            class.spaces.iter().all(|s| {
                apply_fn(s, |v| f.apply(v))
                    .into_space()
                    .is_some_and(|img| class.contains(&img))
            })
        })
        .collect())
}

/// Outcome of checking that `P_X` is a submonoid of the maps on `Cₙ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PxMonoidReport {
    pub px_size: usize,
    pub identity_present: bool,
    /// `(f, g)` with `f, g ∈ P_X` but `f ∘ g ∉ P_X`.
    pub closure_failure: Option<(CandidateMap, CandidateMap)>,
}

impl PxMonoidReport {
    pub fn passed(&self) -> bool {
        self.identity_present && self.closure_failure.is_none()
    }
}

pub fn verify_px_is_submonoid(class: &SpaceClass) -> Result<PxMonoidReport, PxError> {
    let px = compute_px(class)?;
    let closure_failure = px
        .iter()
        .flat_map(|f| px.iter().map(move |g| (f, g)))
        .find(|(f, g)| !px.contains(&f.compose(g)))
        .map(|(f, g)| (f.clone(), g.clone()));
    Ok(PxMonoidReport {
        px_size: px.len(),
        identity_present: px.contains(&CandidateMap::identity(class.n)),
        closure_failure,
    })
}

/// `P_X = A` is expected exactly when `A` is a submonoid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub a: EndoSet,
    pub is_submonoid: bool,
    pub px: BTreeSet<CandidateMap>,
    pub equal: bool,
    /// In `A` but not in `P_X`.
    pub missing: Vec<CandidateMap>,
    /// In `P_X` but not in `A`.
    pub extra: Vec<CandidateMap>,
}

impl EquivalenceReport {
    pub fn consistent(&self) -> bool {
        self.is_submonoid == self.equal
    }
}

pub fn verify_theorem_equivalence(a: &EndoSet) -> Result<EquivalenceReport, PxError> {
    let is_sub = is_submonoid(a)?;
    let px = compute_px(&build_class_from(a)?)?;
    let want = endo_tables(a);
    Ok(EquivalenceReport {
        a: a.clone(),
        is_submonoid: is_sub,
        equal: px == want,
        missing: want.difference(&px).cloned().collect(),
        extra: px.difference(&want).cloned().collect(),
        px,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    /// The identity lies in `R̄`, the hypothesis of the proven case.
    Prop311,
    /// The identity lies in `A` but not in `R̄`.
    Conjecture,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Prop311 => "prop311",
            InstanceKind::Conjecture => "conjecture",
        })
    }
}

/// `R̄` taken as the union of every right ideal of `[A]` (no `R ⊆ A`
/// restriction), reported next to the default reading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiteralReading {
    pub rbar: EndoSet,
    pub rbar_adjoined: EndoSet,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjectureVerdict {
    pub a: EndoSet,
    pub generated: EndoSet,
    pub rbar: EndoSet,
    pub rbar_adjoined: EndoSet,
    pub px: BTreeSet<CandidateMap>,
    pub instance_kind: InstanceKind,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal: Option<LiteralReading>,
}

/// Compares `R̄` with the identity adjoined against `P_X` for
/// `X = {g ∘ d⁺ : g ∈ A}`.
pub fn conjecture_instance(a: &EndoSet, literal: bool) -> Result<ConjectureVerdict, PxError> {
    if !a.contains_identity() {
        return Err(PxError::IdentityMissing);
    }
    let generated = generated_subsemigroup(a)?;
    let rbar = max_right_ideal_in(a)?;
    let rbar_adjoined = adjoin_identity(&rbar)?;
    let px = compute_px(&build_class_from(a)?)?;
    let holds = endo_tables(&rbar_adjoined) == px;
    let instance_kind = if rbar.contains_identity() {
        InstanceKind::Prop311
    } else {
        InstanceKind::Conjecture
    };
    let literal = if literal {
        let rbar = all_right_ideals_union(a)?;
        let rbar_adjoined = adjoin_identity(&rbar)?;
        let holds = endo_tables(&rbar_adjoined) == px;
        Some(LiteralReading {
            rbar,
            rbar_adjoined,
            holds,
        })
    } else {
        None
    };
    Ok(ConjectureVerdict {
        a: a.clone(),
        generated,
        rbar,
        rbar_adjoined,
        px,
        instance_kind,
        holds,
        literal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub mode: SearchMode,
    /// Largest `|A|` considered, identity included. `None` means no cap.
    pub max_subset_size: Option<usize>,
    /// Number of random draws (random mode only).
    pub samples: usize,
    pub seed: Option<u64>,
    pub rbar_literal: bool,
}

impl SearchConfig {
    pub fn exhaustive(n: usize) -> Self {
        Self {
            n,
            mode: SearchMode::Exhaustive,
            max_subset_size: None,
            samples: 0,
            seed: None,
            rbar_literal: false,
        }
    }

    pub fn random(n: usize, samples: usize, seed: u64) -> Self {
        Self {
            n,
            mode: SearchMode::Random,
            max_subset_size: None,
            samples,
            seed: Some(seed),
            rbar_literal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSummary {
    pub a: EndoSet,
    pub kind: InstanceKind,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchSummary {
    pub instances: usize,
    pub prop311: usize,
    pub conjecture: usize,
    pub holding: usize,
    pub failing: usize,
    pub prop311_failing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_holding: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchReport {
    pub evidence: &'static str,
    pub config: SearchConfig,
    pub endomorphisms: usize,
    pub summary: SearchSummary,
    pub failures: Vec<ConjectureVerdict>,
    pub instances: Vec<InstanceSummary>,
}

impl SearchReport {
    pub fn found_counterexample(&self) -> bool {
        self.summary.failing > 0
    }

    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let c = &self.config;
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.evidence));
        out.push_str(&format!(
            "n = {}, mode = {:?}, |End(C_n)| = {}, seed = {}, max subset size = {}\n",
            c.n,
            c.mode,
            self.endomorphisms,
            c.seed.map_or("-".to_string(), |s| s.to_string()),
            c.max_subset_size.map_or("-".to_string(), |s| s.to_string()),
        ));
        out.push_str(&format!(
            "instances: {} (prop311: {}, conjecture: {})\n",
            s.instances, s.prop311, s.conjecture
        ));
        out.push_str(&format!("holding: {}, failing: {}\n", s.holding, s.failing));
        if let Some(l) = s.literal_holding {
            out.push_str(&format!("literal reading holding: {l}\n"));
        }
        for f in &self.failures {
            out.push_str(&format!(
                "counterexample candidate: A = {} [A] = {} R = {} R^1 = {} P_X = {:?}\n",
                f.a, f.generated, f.rbar, f.rbar_adjoined, f.px
            ));
        }
        out
    }
}

/// Subsets of `End(Cₙ)` containing the identity, in canonical order.
fn candidate_subsets(config: &SearchConfig, end: &EndoSet) -> Result<Vec<EndoSet>, PxError> {
    let n = config.n;
    let id = ChainEndo::identity(n);
    let others: Vec<ChainEndo> = end.iter().filter(|f| **f != id).cloned().collect();
    let cap = config.max_subset_size.unwrap_or(others.len() + 1);
    if cap == 0 {
        return Err(PxError::ZeroCap);
    }
    let build = |chosen: &mut dyn Iterator<Item = &ChainEndo>| {
        EndoSet::new(n, std::iter::once(id.clone()).chain(chosen.cloned()))
            .expect("same chain size")
    };
    match config.mode {
        SearchMode::Exhaustive => {
            let count = 1u64.checked_shl(others.len() as u32).unwrap_or(u64::MAX);
            if count > MAX_EXHAUSTIVE_SUBSETS {
                return Err(PxError::BoundExceeded {
                    n,
                    max: MAX_EXHAUSTIVE_SUBSETS,
                });
            }
            Ok((0..count)
                .filter(|mask| (mask.count_ones() as usize) < cap)
                .map(|mask| {
                    let mut it = others
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, f)| f);
                    build(&mut it)
                })
                .collect())
        }
        SearchMode::Random => {
            let seed = config.seed.ok_or(PxError::MissingSeed)?;
            if config.samples == 0 {
                return Err(PxError::ZeroCap);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let max_extra = (cap - 1).min(others.len());
            Ok((0..config.samples)
                .map(|_| {
                    let extra = rng.random_range(0..=max_extra);
                    let picked = index::sample(&mut rng, others.len(), extra).into_vec();
                    let mut it = picked.iter().map(|&i| &others[i]);
                    build(&mut it)
                })
                .collect())
        }
    }
}

/// Runs [`conjecture_instance`] over many subsets `A ∋ id` of `End(Cₙ)`.
///
/// Instances are evaluated in parallel; the report lists them in the order the
/// subsets were generated, so it only depends on the configuration.
pub fn conjecture_search(config: &SearchConfig) -> Result<SearchReport, PxError> {
    check_px_bound(config.n)?;
    let end = enumerate_end(config.n)?;
    let subsets = candidate_subsets(config, &end)?;
    let verdicts: Vec<ConjectureVerdict> = subsets
        .par_iter()
        .map(|a| conjecture_instance(a, config.rbar_literal))
        .collect::<Result<_, _>>()?;

    let count = |p: &dyn Fn(&ConjectureVerdict) -> bool| verdicts.iter().filter(|v| p(v)).count();
    let summary = SearchSummary {
        instances: verdicts.len(),
        prop311: count(&|v| v.instance_kind == InstanceKind::Prop311),
        conjecture: count(&|v| v.instance_kind == InstanceKind::Conjecture),
        holding: count(&|v| v.holds),
        failing: count(&|v| !v.holds),
        prop311_failing: count(&|v| v.instance_kind == InstanceKind::Prop311 && !v.holds),
        literal_holding: config
            .rbar_literal
            .then(|| count(&|v| v.literal.as_ref().is_some_and(|l| l.holds))),
    };
    let instances = verdicts
        .iter()
        .map(|v| InstanceSummary {
            a: v.a.clone(),
            kind: v.instance_kind,
            holds: v.holds,
            literal_holds: v.literal.as_ref().map(|l| l.holds),
        })
        .collect();
    let failures = verdicts.into_iter().filter(|v| !v.holds).collect();
    Ok(SearchReport {
        evidence: EVIDENCE_LABEL,
        config: config.clone(),
        endomorphisms: end.len(),
        summary,
        failures,
        instances,
    })
}

/// Tables `f` such that `f ∘ d` stays in the class for every 2- and 3-point
/// space with distances in `0..=n` (pseudoultrametric or ultrametric
/// according to `ultra`). Candidates range over all `(n+1)^(n+1)` tables.
pub fn preserving_tables(n: usize, ultra: bool) -> Result<BTreeSet<Vec<u8>>, PxError> {
    check_px_bound(n)?;
    let admits = |s: &FiniteSpace| {
        if ultra {
            s.is_ultrametric()
        } else {
            s.is_pseudoultrametric()
        }
    };
    let levels: Vec<NonNegRational> = (0..=n as u64).map(NonNegRational::from_integer).collect();
    let mut spaces = Vec::new();
    for d in &levels {
        spaces.push(FiniteSpace::from_upper_indexed(std::slice::from_ref(d))?);
    }
    for a in &levels {
        for b in &levels {
            for c in &levels {
                spaces.push(FiniteSpace::from_upper_indexed(&[
                    a.clone(),
                    b.clone(),
                    c.clone(),
                ])?);
            }
        }
    }
    spaces.retain(|s| admits(s));
    Ok(all_tables(n)
        .filter(|t| {
            let f = CandidateMap { table: t.clone() };
            spaces.iter().all(|s| {
                apply_fn(s, |v| f.apply(v))
                    .into_space()
                    .is_some_and(|img| admits(&img))
            })
        })
        .collect())
}

/// Every nonempty subset of `set`, ordered by bitmask over its members.
pub fn nonempty_subsets(set: &EndoSet) -> Vec<EndoSet> {
    let members: Vec<&ChainEndo> = set.iter().collect();
    let total = 1u64 << members.len();
    (1..total)
        .map(|mask| {
            EndoSet::new(
                set.n(),
                members
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, f)| (*f).clone()),
            )
            .expect("same chain size")
        })
        .collect()
}
