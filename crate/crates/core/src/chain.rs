//! The finite chain monoid `Cₙ = ({0, …, n}, max, 0)` and its endomorphisms.
//!
//! Endomorphisms are stored as lookup tables. Composition follows the usual
//! function convention: `compose_endo(f, g)` applies `g` first, and every
//! semigroup product below (generated subsemigroups, right ideals) uses that
//! orientation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest chain size accepted by the enumeration routines.
pub const MAX_CHAIN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonoidError {
    #[error("chain size must be at least 1")]
    EmptyChain,
    #[error("table {table:?} is not a map on 0..={n}")]
    InvalidTable { n: usize, table: Vec<usize> },
    #[error("f(0) = {0}, an endomorphism must fix 0")]
    NotUnital(u8),
    #[error("f(max({a}, {b})) != max(f({a}), f({b}))")]
    NotHomomorphism { a: u8, b: u8 },
    #[error("n = {n} exceeds the configured bound {max}")]
    BoundExceeded { n: usize, max: usize },
    #[error("chain sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("the set is empty")]
    EmptySet,
    #[error("{0:?} is not a member of the ambient set")]
    NotSubset(Vec<u8>),
    #[error("not closed under composition: {f:?} ∘ {g:?} is missing")]
    NotClosed { f: Vec<u8>, g: Vec<u8> },
}

/// The chain `{0, …, n}` under `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Chain {
    n: u8,
}

impl Chain {
    pub fn new(n: usize) -> Result<Self, MonoidError> {
        if n == 0 {
            return Err(MonoidError::EmptyChain);
        }
        if n > MAX_CHAIN {
            return Err(MonoidError::BoundExceeded { n, max: MAX_CHAIN });
        }
        Ok(Self { n: n as u8 })
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    pub fn elements(self) -> impl Iterator<Item = u8> {
        0..=self.n
    }

    pub fn identity(self) -> u8 {
        0
    }

    pub fn join(self, a: u8, b: u8) -> u8 {
        a.max(b)
    }
}

/// A validated endomorphism of `(Cₙ, max, 0)`: `table[a] = f(a)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainEndo {
    table: Vec<u8>,
}

impl ChainEndo {
    pub fn n(&self) -> usize {
        self.table.len() - 1
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn apply(&self, a: u8) -> u8 {
        self.table[a as usize]
    }

    pub fn identity(n: usize) -> Self {
        Self {
            table: (0..=n as u8).collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            table: vec![0; n + 1],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &v)| i == v as usize)
    }

    /// `self ∘ g`; the caller guarantees equal sizes.
    fn after(&self, g: &ChainEndo) -> ChainEndo {
        ChainEndo {
            table: g.table.iter().map(|&a| self.table[a as usize]).collect(),
        }
    }
}

impl fmt::Debug for ChainEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.table)
    }
}

impl fmt::Display for ChainEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.table.iter().map(u8::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn check_table(n: usize, table: &[usize]) -> Result<Vec<u8>, MonoidError> {
    if n == 0 {
        return Err(MonoidError::EmptyChain);
    }
    if n > u8::MAX as usize - 1 || table.len() != n + 1 || table.iter().any(|&v| v > n) {
        return Err(MonoidError::InvalidTable {
            n,
            table: table.to_vec(),
        });
    }
    Ok(table.iter().map(|&v| v as u8).collect())
}

/// Validates `table` as an endomorphism of `Cₙ`.
///
/// Pairs `(a, b)` with `a < b` are scanned lexicographically and the first
/// failure of `f(max(a,b)) = max(f(a), f(b))` is reported.
pub fn make_endo(n: usize, table: &[usize]) -> Result<ChainEndo, MonoidError> {
    let table = check_table(n, table)?;
    if table[0] != 0 {
        return Err(MonoidError::NotUnital(table[0]));
    }
    for a in 0..=n {
        for b in (a + 1)..=n {
            if table[b] != table[a].max(table[b]) {
                return Err(MonoidError::NotHomomorphism {
                    a: a as u8,
                    b: b as u8,
                });
            }
        }
    }
    Ok(ChainEndo { table })
}

/// `f ∘ g` (apply `g` first).
pub fn compose_endo(f: &ChainEndo, g: &ChainEndo) -> Result<ChainEndo, MonoidError> {
    if f.n() != g.n() {
        return Err(MonoidError::SizeMismatch(f.n(), g.n()));
    }
    Ok(f.after(g))
}

/// `Ker(f) = {a : f(a) = 0}`.
pub fn kernel(f: &ChainEndo) -> BTreeSet<u8> {
    (0..=f.n() as u8).filter(|&a| f.apply(a) == 0).collect()
}

/// A duplicate-free set of endomorphisms of one chain, ordered
/// lexicographically by table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndoSet {
    n: usize,
    members: BTreeSet<ChainEndo>,
}

impl fmt::Debug for EndoSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl fmt::Display for EndoSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl EndoSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn new(
        n: usize,
        members: impl IntoIterator<Item = ChainEndo>,
    ) -> Result<Self, MonoidError> {
        let mut set = Self::empty(n);
        for m in members {
            set.insert(m)?;
        }
        Ok(set)
    }

    /// Validates each table with [`make_endo`].
    pub fn from_tables<T: AsRef<[usize]>>(
        n: usize,
        tables: impl IntoIterator<Item = T>,
    ) -> Result<Self, MonoidError> {
        let mut set = Self::empty(n);
        for t in tables {
            set.members.insert(make_endo(n, t.as_ref())?);
        }
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, f: ChainEndo) -> Result<bool, MonoidError> {
        if f.n() != self.n {
            return Err(MonoidError::SizeMismatch(self.n, f.n()));
        }
        Ok(self.members.insert(f))
    }

    pub fn contains(&self, f: &ChainEndo) -> bool {
        self.members.contains(f)
    }

    pub fn contains_identity(&self) -> bool {
        self.members.iter().any(ChainEndo::is_identity)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChainEndo> {
        self.members.iter()
    }

    pub fn members(&self) -> &BTreeSet<ChainEndo> {
        &self.members
    }

    pub fn is_subset(&self, other: &EndoSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn tables(&self) -> Vec<Vec<u8>> {
        self.members.iter().map(|m| m.table.clone()).collect()
    }

    /// First product `f ∘ g` of members that falls outside the set.
    pub fn closure_failure(&self) -> Option<(ChainEndo, ChainEndo)> {
        for f in &self.members {
            for g in &self.members {
                if !self.members.contains(&f.after(g)) {
                    return Some((f.clone(), g.clone()));
                }
            }
        }
        None
    }

    pub fn is_closed(&self) -> bool {
        self.closure_failure().is_none()
    }

    fn require_closed(&self) -> Result<(), MonoidError> {
        match self.closure_failure() {
            Some((f, g)) => Err(MonoidError::NotClosed {
                f: f.table,
                g: g.table,
            }),
            None => Ok(()),
        }
    }
}

impl Serialize for EndoSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.members.iter().map(|m| &m.table))
    }
}

impl<'de> Deserialize<'de> for EndoSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tables = Vec::<Vec<usize>>::deserialize(deserializer)?;
        let n = tables
            .first()
            .map(|t| t.len().saturating_sub(1))
            .ok_or_else(|| serde::de::Error::custom("an endo-set file needs at least one table"))?;
        EndoSet::from_tables(n, &tables).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RawEndo {
    n: usize,
    table: Vec<usize>,
}

impl Serialize for ChainEndo {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawEndo {
            n: self.n(),
            table: self.table.iter().map(|&v| v as usize).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChainEndo {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawEndo::deserialize(deserializer)?;
        make_endo(raw.n, &raw.table).map_err(serde::de::Error::custom)
    }
}

fn check_bound(n: usize) -> Result<(), MonoidError> {
    Chain::new(n).map(|_| ())
}

/// Every endomorphism of `Cₙ`, in lexicographic order.
///
/// Endomorphisms are exactly the weakly increasing tables with `f(0) = 0`,
/// so they are generated directly rather than filtered.
pub fn enumerate_end(n: usize) -> Result<EndoSet, MonoidError> {
    check_bound(n)?;
    fn extend(n: u8, table: &mut Vec<u8>, out: &mut BTreeSet<ChainEndo>) {
        if table.len() == n as usize + 1 {
            out.insert(ChainEndo {
                table: table.clone(),
            });
            return;
        }
        let last = *table.last().expect("starts with f(0)");
        for v in last..=n {
            table.push(v);
            extend(n, table, out);
            table.pop();
        }
    }
    let mut members = BTreeSet::new();
    extend(n as u8, &mut vec![0], &mut members);
    Ok(EndoSet { n, members })
}

/// Endomorphisms with trivial kernel `{0}`.
pub fn enumerate_in(n: usize) -> Result<EndoSet, MonoidError> {
    let all = enumerate_end(n)?;
    Ok(EndoSet {
        n,
        members: all
            .members
            .into_iter()
            .filter(|f| kernel(f).len() == 1)
            .collect(),
    })
}

/// Contains the identity and is closed under composition.
pub fn is_submonoid(a: &EndoSet) -> Result<bool, MonoidError> {
    if a.is_empty() {
        return Err(MonoidError::EmptySet);
    }
    Ok(a.contains_identity() && a.is_closed())
}

/// `[A]`: all finite products of members of `A`.
pub fn generated_subsemigroup(a: &EndoSet) -> Result<EndoSet, MonoidError> {
    if a.is_empty() {
        return Err(MonoidError::EmptySet);
    }
    let gens: Vec<&ChainEndo> = a.members.iter().collect();
    let mut closed = a.members.clone();
    let mut frontier: Vec<ChainEndo> = a.members.iter().cloned().collect();
    // Every product is x ∘ (generator), so extending on the right suffices.
    while let Some(x) = frontier.pop() {
        for g in &gens {
            let p = x.after(g);
            if closed.insert(p.clone()) {
                frontier.push(p);
            }
        }
    }
    Ok(EndoSet {
        n: a.n,
        members: closed,
    })
}

/// `r ∘ s ∈ R` for every `r ∈ R`, `s ∈ S`.
pub fn is_right_ideal(r: &EndoSet, s: &EndoSet) -> Result<bool, MonoidError> {
    if r.is_empty() || s.is_empty() {
        return Err(MonoidError::EmptySet);
    }
    if r.n != s.n {
        return Err(MonoidError::SizeMismatch(r.n, s.n));
    }
    if let Some(x) = r.members.iter().find(|x| !s.contains(x)) {
        return Err(MonoidError::NotSubset(x.table.clone()));
    }
    s.require_closed()?;
    Ok(r.members
        .iter()
        .all(|x| s.members.iter().all(|y| r.contains(&x.after(y)))))
}

/// The largest right ideal of `[A]` contained in `A` (the union of all such
/// ideals), or the empty set when there is none.
///
/// Computed as the greatest fixpoint of `T ↦ {r ∈ T : r ∘ [A] ⊆ T}` from `A`.
pub fn max_right_ideal_in(a: &EndoSet) -> Result<EndoSet, MonoidError> {
    let generated = generated_subsemigroup(a)?;
    let mut current: BTreeSet<ChainEndo> = a.members.clone();
    loop {
        let next: BTreeSet<ChainEndo> = current
            .iter()
            .filter(|r| {
                generated
                    .members
                    .iter()
                    .all(|s| current.contains(&r.after(s)))
            })
            .cloned()
            .collect();
        if next.len() == current.len() {
            return Ok(EndoSet {
                n: a.n,
                members: next,
            });
        }
        current = next;
    }
}

/// The union of *all* right ideals of `[A]`, without the `R ⊆ A` restriction.
///
/// Every semigroup is a right ideal of itself, so this is `[A]`.
pub fn all_right_ideals_union(a: &EndoSet) -> Result<EndoSet, MonoidError> {
    generated_subsemigroup(a)
}

/// `S` with the identity adjoined when missing.
pub fn adjoin_identity(s: &EndoSet) -> Result<EndoSet, MonoidError> {
    s.require_closed()?;
    let mut out = s.clone();
    out.members.insert(ChainEndo::identity(s.n));
    Ok(out)
}

/// Chain-level analogue of [`adjoin_identity`]: add 0 when missing.
pub fn chain_adjoin_identity(a: &BTreeSet<u8>) -> BTreeSet<u8> {
    let mut out = a.clone();
    out.insert(0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(t: &[usize]) -> ChainEndo {
        make_endo(t.len() - 1, t).unwrap()
    }

    fn set(ts: &[&[usize]]) -> EndoSet {
        EndoSet::from_tables(ts[0].len() - 1, ts.iter()).unwrap()
    }

    fn id2() -> ChainEndo {
        ChainEndo::identity(2)
    }

    #[test]
    fn make_endo_examples() {
        assert_eq!(e(&[0, 1, 1]).table(), &[0, 1, 1]);
        assert_eq!(make_endo(2, &[1, 1, 1]), Err(MonoidError::NotUnital(1)));
        assert_eq!(
            make_endo(2, &[0, 2, 1]),
            Err(MonoidError::NotHomomorphism { a: 1, b: 2 })
        );
        assert!(matches!(
            make_endo(2, &[0, 1]),
            Err(MonoidError::InvalidTable { .. })
        ));
        assert!(matches!(
            make_endo(2, &[0, 1, 3]),
            Err(MonoidError::InvalidTable { .. })
        ));
        assert_eq!(make_endo(0, &[0]), Err(MonoidError::EmptyChain));
    }

    #[test]
    fn enumerate_end_examples() {
        let one = enumerate_end(1).unwrap();
        assert_eq!(one.tables(), vec![vec![0, 0], vec![0, 1]]);
        assert_eq!(enumerate_end(2).unwrap().len(), 6);
        assert_eq!(enumerate_end(3).unwrap().len(), 20);
        assert_eq!(
            enumerate_end(MAX_CHAIN + 1),
            Err(MonoidError::BoundExceeded {
                n: MAX_CHAIN + 1,
                max: MAX_CHAIN
            })
        );
        assert_eq!(enumerate_end(0), Err(MonoidError::EmptyChain));
    }

    #[test]
    fn compose_examples() {
        let g = e(&[0, 0, 2]);
        assert_eq!(compose_endo(&id2(), &g).unwrap(), g);
        let h = e(&[0, 0, 1]);
        assert_eq!(compose_endo(&h, &h).unwrap(), ChainEndo::zero(2));
        let p = e(&[0, 1, 1]);
        assert_eq!(compose_endo(&p, &p).unwrap(), p);
        // orientation: (f ∘ g)(a) = f(g(a))
        let f = e(&[0, 1, 1]);
        let g = e(&[0, 0, 2]);
        assert_eq!(compose_endo(&f, &g).unwrap().table(), &[0, 0, 1]);
        assert_eq!(compose_endo(&g, &f).unwrap().table(), &[0, 0, 0]);
        assert_eq!(
            compose_endo(&id2(), &ChainEndo::identity(3)),
            Err(MonoidError::SizeMismatch(2, 3))
        );
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&id2()), BTreeSet::from([0]));
        assert_eq!(kernel(&ChainEndo::zero(2)), BTreeSet::from([0, 1, 2]));
        assert_eq!(kernel(&e(&[0, 0, 2])), BTreeSet::from([0, 1]));
    }

    #[test]
    fn enumerate_in_examples() {
        assert_eq!(enumerate_in(1).unwrap().tables(), vec![vec![0, 1]]);
        assert_eq!(
            enumerate_in(2).unwrap().tables(),
            vec![vec![0, 1, 1], vec![0, 1, 2], vec![0, 2, 2]]
        );
        assert!(!enumerate_in(3).unwrap().contains(&ChainEndo::zero(3)));
    }

    #[test]
    fn submonoid_examples() {
        assert_eq!(is_submonoid(&set(&[&[0, 1, 2]])), Ok(true));
        assert_eq!(is_submonoid(&set(&[&[0, 1, 2], &[0, 0, 0]])), Ok(true));
        assert_eq!(is_submonoid(&set(&[&[0, 1, 2], &[0, 0, 1]])), Ok(false));
        assert_eq!(is_submonoid(&EndoSet::empty(2)), Err(MonoidError::EmptySet));
    }

    #[test]
    fn generated_examples() {
        let p = set(&[&[0, 1, 1]]);
        assert_eq!(generated_subsemigroup(&p).unwrap(), p);
        assert_eq!(
            generated_subsemigroup(&set(&[&[0, 0, 1]])).unwrap(),
            set(&[&[0, 0, 1], &[0, 0, 0]])
        );
        let m = set(&[&[0, 1, 2], &[0, 0, 0], &[0, 1, 1]]);
        assert!(is_submonoid(&m).unwrap());
        assert_eq!(generated_subsemigroup(&m).unwrap(), m);
        assert_eq!(
            generated_subsemigroup(&EndoSet::empty(2)),
            Err(MonoidError::EmptySet)
        );
    }

    #[test]
    fn right_ideal_examples() {
        let s = set(&[&[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(is_right_ideal(&s, &s), Ok(true));
        assert_eq!(is_right_ideal(&set(&[&[0, 0, 0]]), &s), Ok(true));
        let s = set(&[&[0, 1, 2], &[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(is_right_ideal(&set(&[&[0, 1, 2]]), &s), Ok(false));
        assert_eq!(
            is_right_ideal(&set(&[&[0, 1, 1]]), &s),
            Err(MonoidError::NotSubset(vec![0, 1, 1]))
        );
        let open = set(&[&[0, 1, 2], &[0, 0, 1]]);
        assert!(matches!(
            is_right_ideal(&set(&[&[0, 1, 2]]), &open),
            Err(MonoidError::NotClosed { .. })
        ));
    }

    #[test]
    fn max_right_ideal_examples() {
        let a = set(&[&[0, 0, 1], &[0, 0, 0]]);
        let rbar = max_right_ideal_in(&a).unwrap();
        assert_eq!(rbar, a);
        assert_eq!(
            is_right_ideal(&rbar, &generated_subsemigroup(&a).unwrap()),
            Ok(true)
        );

        let a = set(&[&[0, 1, 2], &[0, 0, 1]]);
        assert_eq!(
            generated_subsemigroup(&a).unwrap(),
            set(&[&[0, 1, 2], &[0, 0, 1], &[0, 0, 0]])
        );
        assert!(max_right_ideal_in(&a).unwrap().is_empty());

        let z = set(&[&[0, 0, 0]]);
        assert_eq!(max_right_ideal_in(&z).unwrap(), z);
        assert_eq!(
            max_right_ideal_in(&EndoSet::empty(2)),
            Err(MonoidError::EmptySet)
        );

        assert_eq!(
            all_right_ideals_union(&a).unwrap(),
            generated_subsemigroup(&a).unwrap()
        );
    }

    #[test]
    fn adjoin_identity_examples() {
        let i = set(&[&[0, 1, 2]]);
        assert_eq!(adjoin_identity(&i).unwrap(), i);
        assert_eq!(adjoin_identity(&EndoSet::empty(2)).unwrap(), i);
        let p = set(&[&[0, 1, 1]]);
        let out = adjoin_identity(&p).unwrap();
        assert_eq!(out, set(&[&[0, 1, 1], &[0, 1, 2]]));
        assert_eq!(is_submonoid(&out), Ok(true));
        assert!(matches!(
            adjoin_identity(&set(&[&[0, 0, 1]])),
            Err(MonoidError::NotClosed { .. })
        ));
    }

    #[test]
    fn chain_adjoin_examples() {
        assert_eq!(
            chain_adjoin_identity(&BTreeSet::from([3])),
            BTreeSet::from([0, 3])
        );
        assert_eq!(
            chain_adjoin_identity(&BTreeSet::from([0])),
            BTreeSet::from([0])
        );
        assert_eq!(chain_adjoin_identity(&BTreeSet::new()), BTreeSet::from([0]));
    }

    #[test]
    fn chain_join_law() {
        let c = Chain::new(4).unwrap();
        for a in c.elements() {
            assert_eq!(c.join(a, c.identity()), a);
            for b in c.elements() {
                assert_eq!(a <= b, c.join(a, b) == b);
                assert_eq!(c.join(a, b), c.join(b, a));
                assert_eq!(c.join(a, a), a);
                for d in c.elements() {
                    assert_eq!(c.join(c.join(a, b), d), c.join(a, c.join(b, d)));
                }
            }
        }
    }

    #[test]
    fn json_formats() {
        let f: ChainEndo = serde_json::from_str(r#"{"n": 2, "table": [0,0,1]}"#).unwrap();
        assert_eq!(f, e(&[0, 0, 1]));
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"n":2,"table":[0,0,1]}"#
        );
        assert!(serde_json::from_str::<ChainEndo>(r#"{"n": 2, "table": [0,2,1]}"#).is_err());

        let s: EndoSet = serde_json::from_str("[[0,1,2],[0,0,1]]").unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[0,0,1],[0,1,2]]");
        assert!(serde_json::from_str::<EndoSet>("[]").is_err());
        assert!(serde_json::from_str::<EndoSet>("[[0,1],[0,1,2]]").is_err());
    }
}
