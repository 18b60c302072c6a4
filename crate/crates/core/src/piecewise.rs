//! Piecewise affine functions `R+ -> R+` and the preservation classifier.
//!
//! A [`PiecewiseFn`] is given by breakpoints `0 = b_0 < b_1 < … < b_m`, an
//! explicit value at every breakpoint, and one [`Segment`] for each open
//! interval `(b_i, b_{i+1})` plus the final `(b_m, ∞)`. Discontinuous steps are
//! therefore representable, and monotonicity and zero sets are decidable
//! segment by segment.
//!
//! [`classify`] decides membership in the ultrametric-preserving and
//! pseudoultrametric-preserving classes via the "increasing and amenable"
//! characterization. [`preserving_oracle`] checks the same property from the
//! definition, by pushing every small space over a grid through `f`.

use std::collections::BTreeSet;
use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{apply_fn, index_labels, FiniteSpace, MappedMatrix};
use crate::rational::{serde_rational, NonNegRational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FnError {
    #[error("a function needs at least the breakpoint 0")]
    NoBreakpoints,
    #[error("the first breakpoint must be 0, found {0}")]
    FirstBreakpointNotZero(NonNegRational),
    #[error("breakpoints must be strictly increasing (index {0})")]
    BreakpointsNotIncreasing(usize),
    #[error(
        "expected {breakpoints} values and segments, found {values} values and {segments} segments"
    )]
    LengthMismatch {
        breakpoints: usize,
        values: usize,
        segments: usize,
    },
    #[error("segment {0} takes negative values")]
    NegativeSegment(usize),
    #[error("oracle grid needs 0 and at least two positive values")]
    GridTooSmall,
}

/// The function on one open interval between breakpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment {
    Const {
        c: NonNegRational,
    },
    /// `a·x + b`.
    Affine {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
    },
}

impl Segment {
    pub fn constant(c: NonNegRational) -> Self {
        Segment::Const { c }
    }

    pub fn affine(a: Rational, b: Rational) -> Self {
        Segment::Affine { a, b }
    }

    fn eval(&self, x: &Rational) -> Rational {
        match self {
            Segment::Const { c } => c.as_rational().clone(),
            Segment::Affine { a, b } => a * x + b,
        }
    }

    fn slope(&self) -> Rational {
        match self {
            Segment::Const { .. } => Rational::zero(),
            Segment::Affine { a, .. } => a.clone(),
        }
    }

    fn intercept(&self) -> Rational {
        match self {
            Segment::Const { c } => c.as_rational().clone(),
            Segment::Affine { b, .. } => b.clone(),
        }
    }

    /// `self ∘ (x ↦ a·x + b)`, with zero slopes folded into constants.
    fn after_affine(&self, a: &Rational, b: &Rational) -> Segment {
        let slope = self.slope() * a;
        let intercept = self.slope() * b + self.intercept();
        normalized(slope, intercept)
    }
}

fn normalized(a: Rational, b: Rational) -> Segment {
    if a.is_zero() {
        Segment::Const {
            c: NonNegRational::new(b).expect("constant piece of a nonnegative function"),
        }
    } else {
        Segment::Affine { a, b }
    }
}

/// A finitely presented function `R+ -> R+`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFn", into = "RawFn")]
pub struct PiecewiseFn {
    breakpoints: Vec<NonNegRational>,
    values_at: Vec<NonNegRational>,
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct RawFn {
    breakpoints: Vec<NonNegRational>,
    values_at: Vec<NonNegRational>,
    segments: Vec<Segment>,
}

impl TryFrom<RawFn> for PiecewiseFn {
    type Error = FnError;

    fn try_from(raw: RawFn) -> Result<Self, FnError> {
        PiecewiseFn::new(raw.breakpoints, raw.values_at, raw.segments)
    }
}

impl From<PiecewiseFn> for RawFn {
    fn from(f: PiecewiseFn) -> Self {
        RawFn {
            breakpoints: f.breakpoints,
            values_at: f.values_at,
            segments: f.segments,
        }
    }
}

impl PiecewiseFn {
    pub fn new(
        breakpoints: Vec<NonNegRational>,
        values_at: Vec<NonNegRational>,
        segments: Vec<Segment>,
    ) -> Result<Self, FnError> {
        let first = breakpoints.first().ok_or(FnError::NoBreakpoints)?;
        if !first.is_zero() {
            return Err(FnError::FirstBreakpointNotZero(first.clone()));
        }
        if let Some(i) = (1..breakpoints.len()).find(|&i| breakpoints[i - 1] >= breakpoints[i]) {
            return Err(FnError::BreakpointsNotIncreasing(i));
        }
        if values_at.len() != breakpoints.len() || segments.len() != breakpoints.len() {
            return Err(FnError::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: values_at.len(),
                segments: segments.len(),
            });
        }
        let f = Self {
            breakpoints,
            values_at,
            segments,
        };
        for i in 0..f.segments.len() {
            let (l, r) = f.interval(i);
            let seg = &f.segments[i];
            let ok = !seg.eval(l).is_negative()
                && match r {
                    Some(r) => !seg.eval(r).is_negative(),
                    None => !seg.slope().is_negative(),
                };
            if !ok {
                return Err(FnError::NegativeSegment(i));
            }
        }
        Ok(f)
    }

    pub fn identity() -> Self {
        Self::scale(NonNegRational::from_integer(1))
    }

    /// `x ↦ a·x`.
    pub fn scale(a: NonNegRational) -> Self {
        Self {
            breakpoints: vec![NonNegRational::zero()],
            values_at: vec![NonNegRational::zero()],
            segments: vec![normalized(a.into_rational(), Rational::zero())],
        }
    }

    pub fn constant(c: NonNegRational) -> Self {
        Self {
            breakpoints: vec![NonNegRational::zero()],
            values_at: vec![c.clone()],
            segments: vec![Segment::constant(c)],
        }
    }

    pub fn breakpoints(&self) -> &[NonNegRational] {
        &self.breakpoints
    }

    pub fn values_at(&self) -> &[NonNegRational] {
        &self.values_at
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Endpoints of segment `i`; `None` on the right means unbounded.
    fn interval(&self, i: usize) -> (&Rational, Option<&Rational>) {
        (
            self.breakpoints[i].as_rational(),
            self.breakpoints.get(i + 1).map(NonNegRational::as_rational),
        )
    }

    fn width(&self, i: usize) -> Rational {
        match self.interval(i) {
            (l, Some(r)) => r - l,
            (_, None) => Rational::one(),
        }
    }

    /// A point strictly inside segment `i`.
    fn interior(&self, i: usize) -> Rational {
        let (l, _) = self.interval(i);
        match self.interval(i).1 {
            Some(_) => l + self.width(i) / Rational::from_integer(2.into()),
            None => l + Rational::one(),
        }
    }

    pub fn evaluate(&self, x: &NonNegRational) -> NonNegRational {
        match self.breakpoints.binary_search(x) {
            Ok(i) => self.values_at[i].clone(),
            Err(i) => {
                let v = self.segments[i - 1].eval(x.as_rational());
                NonNegRational::new(v).expect("segments are nonnegative on their interval")
            }
        }
    }
}

fn nn(r: Rational) -> NonNegRational {
    NonNegRational::new(r).expect("nonnegative by construction")
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// `f ∘ g`: apply `g` first.
///
/// Breakpoints of the result are those of `g` plus the preimages under `g` of
/// the breakpoints of `f` that fall inside an affine piece of `g`.
pub fn compose_fn(f: &PiecewiseFn, g: &PiecewiseFn) -> PiecewiseFn {
    let mut breakpoints = Vec::new();
    let mut values_at = Vec::new();
    let mut segments = Vec::new();

    for i in 0..g.segments.len() {
        breakpoints.push(g.breakpoints[i].clone());
        values_at.push(f.evaluate(&g.values_at[i]));

        let seg = &g.segments[i];
        let (l, r) = g.interval(i);
        let a = seg.slope();
        if a.is_zero() {
            let c = nn(seg.intercept());
            segments.push(Segment::constant(f.evaluate(&c)));
            continue;
        }
        let b = seg.intercept();
        let y_l = seg.eval(l);
        let y_r = r.map(|r| seg.eval(r));
        let (lo, hi) = match &y_r {
            Some(y_r) if y_r < &y_l => (y_r.clone(), Some(y_l.clone())),
            Some(y_r) => (y_l.clone(), Some(y_r.clone())),
            None => (y_l.clone(), None),
        };
        let mut cuts: Vec<(Rational, NonNegRational)> = f
            .breakpoints
            .iter()
            .filter(|beta| {
                let beta = beta.as_rational();
                beta > &lo && hi.as_ref().is_none_or(|hi| beta < hi)
            })
            .map(|beta| ((beta.as_rational() - &b) / &a, f.evaluate(beta)))
            .collect();
        cuts.sort_by(|x, y| x.0.cmp(&y.0));

        let mut left = l.clone();
        for k in 0..=cuts.len() {
            let right = cuts.get(k).map(|c| c.0.clone()).or_else(|| r.cloned());
            let mid = match &right {
                Some(right) => (&left + right) * half(),
                None => &left + Rational::one(),
            };
            let y = nn(seg.eval(&mid));
            let piece = match f.breakpoints.binary_search(&y) {
                Err(j) => &f.segments[j - 1],
                Ok(_) => unreachable!("no breakpoint of f inside the image of a sub-interval"),
            };
            segments.push(piece.after_affine(&a, &b));
            if let Some((x, v)) = cuts.get(k) {
                breakpoints.push(nn(x.clone()));
                values_at.push(v.clone());
                left = x.clone();
            }
        }
    }
    PiecewiseFn::new(breakpoints, values_at, segments).expect("composition of valid functions")
}

/// Points on which two piecewise affine functions can be compared
/// extensionally: every breakpoint, every midpoint between consecutive
/// breakpoints, and one point past the last.
pub fn sample_points(fs: &[&PiecewiseFn]) -> Vec<NonNegRational> {
    let bps: BTreeSet<NonNegRational> = fs
        .iter()
        .flat_map(|f| f.breakpoints.iter().cloned())
        .collect();
    let bps: Vec<_> = bps.into_iter().collect();
    let mut out: BTreeSet<NonNegRational> = bps.iter().cloned().collect();
    for w in bps.windows(2) {
        out.insert(nn((w[0].as_rational() + w[1].as_rational()) * half()));
    }
    if let Some(last) = bps.last() {
        out.insert(nn(last.as_rational() + Rational::one()));
    }
    out.into_iter().collect()
}

pub fn extensionally_equal(f: &PiecewiseFn, g: &PiecewiseFn) -> bool {
    sample_points(&[f, g])
        .iter()
        .all(|x| f.evaluate(x) == g.evaluate(x))
}

/// `a < b` with `f(a) > f(b)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecreasingPair {
    pub a: NonNegRational,
    pub b: NonNegRational,
}

/// Decides weak monotonicity. `None` means increasing.
///
/// Checks run in a fixed order (consecutive breakpoint values, segment
/// slopes, then one-sided limits at each breakpoint) and the first failure
/// produces the witness.
pub fn is_increasing(f: &PiecewiseFn) -> Option<DecreasingPair> {
    let pair = |a: Rational, b: Rational| Some(DecreasingPair { a: nn(a), b: nn(b) });

    for i in 1..f.breakpoints.len() {
        if f.values_at[i - 1] > f.values_at[i] {
            return pair(
                f.breakpoints[i - 1].as_rational().clone(),
                f.breakpoints[i].as_rational().clone(),
            );
        }
    }

    for (i, seg) in f.segments.iter().enumerate() {
        if seg.slope().is_negative() {
            let (l, _) = f.interval(i);
            let third = f.width(i) / Rational::from_integer(3.into());
            return pair(l + &third, l + &third + &third);
        }
    }

    for (i, seg) in f.segments.iter().enumerate() {
        let (l, r) = f.interval(i);
        let a = seg.slope();
        let step = |gap: Rational| -> Rational {
            let w = f.width(i) * half();
            if a.is_zero() {
                w
            } else {
                w.min(gap / (&a * Rational::from_integer(2.into())))
            }
        };

        let right_limit = seg.eval(l);
        let v = f.values_at[i].as_rational();
        if v > &right_limit {
            let d = step(v - &right_limit);
            return pair(l.clone(), l + d);
        }
        if let Some(r) = r {
            let left_limit = seg.eval(r);
            let v = f.values_at[i + 1].as_rational();
            if &left_limit > v {
                let d = step(&left_limit - v);
                return pair(r - d, r.clone());
            }
        }
    }
    None
}

/// Why `f⁻¹(0) ≠ {0}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmenabilityWitness {
    NonzeroAtZero { value: NonNegRational },
    ZeroAt { c: NonNegRational },
}

/// Decides `f⁻¹(0) = {0}`. `None` means amenable.
pub fn is_amenable(f: &PiecewiseFn) -> Option<AmenabilityWitness> {
    if !f.values_at[0].is_zero() {
        return Some(AmenabilityWitness::NonzeroAtZero {
            value: f.values_at[0].clone(),
        });
    }
    if let Some(i) = (1..f.breakpoints.len()).find(|&i| f.values_at[i].is_zero()) {
        return Some(AmenabilityWitness::ZeroAt {
            c: f.breakpoints[i].clone(),
        });
    }
    for (i, seg) in f.segments.iter().enumerate() {
        let (l, r) = f.interval(i);
        let a = seg.slope();
        let b = seg.intercept();
        let root = if a.is_zero() {
            b.is_zero().then(|| f.interior(i))
        } else {
            let x = -b / a;
            (&x > l && r.is_none_or(|r| &x < r)).then_some(x)
        };
        if let Some(c) = root {
            return Some(AmenabilityWitness::ZeroAt { c: nn(c) });
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    UltrametricPreserving,
    PseudoultrametricPreservingOnly,
    NotPreserving,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::UltrametricPreserving => "UltrametricPreserving",
            Category::PseudoultrametricPreservingOnly => "PseudoultrametricPreservingOnly",
            Category::NotPreserving => "NotPreserving",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    DecreasingPair {
        a: NonNegRational,
        b: NonNegRational,
    },
    ZeroAt {
        c: NonNegRational,
    },
    NonzeroAtZero {
        value: NonNegRational,
    },
}

impl Witness {
    /// The points of `R+` the witness talks about.
    pub fn coordinates(&self) -> Vec<NonNegRational> {
        match self {
            Witness::DecreasingPair { a, b } => vec![a.clone(), b.clone()],
            Witness::ZeroAt { c } => vec![c.clone()],
            Witness::NonzeroAtZero { .. } => vec![NonNegRational::zero()],
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::DecreasingPair { a, b } => write!(f, "{a} < {b} but f({a}) > f({b})"),
            Witness::ZeroAt { c } => write!(f, "f({c}) = 0 with {c} > 0"),
            Witness::NonzeroAtZero { value } => write!(f, "f(0) = {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreservationVerdict {
    pub category: Category,
    pub witness: Option<Witness>,
}

/// Ultrametric-preserving iff increasing and amenable; pseudoultrametric
/// preserving iff increasing and `f(0) = 0`.
///
/// A failed monotonicity check takes precedence over `f(0) ≠ 0` when choosing
/// the `NotPreserving` witness.
pub fn classify(f: &PiecewiseFn) -> PreservationVerdict {
    let increasing = is_increasing(f);
    let amenable = is_amenable(f);
    let (category, witness) = match (increasing, amenable) {
        (None, None) => (Category::UltrametricPreserving, None),
        (None, Some(AmenabilityWitness::ZeroAt { c })) => (
            Category::PseudoultrametricPreservingOnly,
            Some(Witness::ZeroAt { c }),
        ),
        (Some(DecreasingPair { a, b }), _) => (
            Category::NotPreserving,
            Some(Witness::DecreasingPair { a, b }),
        ),
        (None, Some(AmenabilityWitness::NonzeroAtZero { value })) => (
            Category::NotPreserving,
            Some(Witness::NonzeroAtZero { value }),
        ),
    };
    PreservationVerdict { category, witness }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Ultra,
    Pseudo,
}

impl OracleMode {
    fn admits(self, s: &FiniteSpace) -> bool {
        match self {
            OracleMode::Ultra => s.is_ultrametric(),
            OracleMode::Pseudo => s.is_pseudoultrametric(),
        }
    }
}

/// A test space and its image `f ∘ d` that left the class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCounterexample {
    pub space: FiniteSpace,
    pub image: MappedMatrix,
}

/// Every 2-point space, then every 3-point space, with distances from `grid`
/// admitted by `mode`. Distances are ordered numerically, triples
/// lexicographically as `(d01, d02, d12)`.
pub fn oracle_spaces(
    grid: &[NonNegRational],
    mode: OracleMode,
) -> Result<Vec<FiniteSpace>, FnError> {
    let grid: Vec<NonNegRational> = grid
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let positives = grid.iter().filter(|v| v.is_positive()).count();
    if grid.first().is_none_or(|z| !z.is_zero()) || positives < 2 {
        return Err(FnError::GridTooSmall);
    }
    let mut out = Vec::new();
    for d in &grid {
        let s = FiniteSpace::from_upper(index_labels(2), std::slice::from_ref(d))
            .expect("2-point spaces are well formed");
        if mode.admits(&s) {
            out.push(s);
        }
    }
    for a in &grid {
        for b in &grid {
            for c in &grid {
                let s =
                    FiniteSpace::from_upper(index_labels(3), &[a.clone(), b.clone(), c.clone()])
                        .expect("3-point spaces are well formed");
                if mode.admits(&s) {
                    out.push(s);
                }
            }
        }
    }
    Ok(out)
}

/// All oracle spaces whose image under `f` leaves the class, in canonical
/// order.
pub fn oracle_counterexamples(
    f: &PiecewiseFn,
    grid: &[NonNegRational],
    mode: OracleMode,
) -> Result<Vec<OracleCounterexample>, FnError> {
    Ok(oracle_spaces(grid, mode)?
        .into_iter()
        .filter_map(|space| counterexample(f, space, mode))
        .collect())
}

fn counterexample(
    f: &PiecewiseFn,
    space: FiniteSpace,
    mode: OracleMode,
) -> Option<OracleCounterexample> {
    let image = apply_fn(&space, |x| f.evaluate(x));
    let stays = image.clone().into_space().is_some_and(|s| mode.admits(&s));
    (!stays).then_some(OracleCounterexample { space, image })
}

/// Brute-force preservation check over all 2- and 3-point spaces on `grid`.
///
/// `Ok(None)` means every admitted space maps back into the class; otherwise
/// the least failing space in canonical order is returned.
pub fn preserving_oracle(
    f: &PiecewiseFn,
    grid: &[NonNegRational],
    mode: OracleMode,
) -> Result<Option<OracleCounterexample>, FnError> {
    Ok(oracle_spaces(grid, mode)?
        .into_iter()
        .find_map(|space| counterexample(f, space, mode)))
}

/// Reason `f` is not a `(R+, max)` endomorphism on the sample set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndomorphismWitness {
    /// `f(max(a, b)) ≠ max(f(a), f(b))`.
    Pair {
        a: NonNegRational,
        b: NonNegRational,
    },
    NonzeroAtZero {
        value: NonNegRational,
    },
}

/// Checks `f(max(a,b)) = max(f(a), f(b))` on all sample pairs and `f(0) = 0`.
///
/// Pairs are scanned with `a` ascending and, for each `a`, `b` descending, so
/// the widest violating span from the smallest left end is reported. The unit
/// condition is checked against `f(0)` directly, whether or not 0 is sampled.
pub fn endomorphism_check(
    f: &PiecewiseFn,
    samples: &[NonNegRational],
) -> Option<EndomorphismWitness> {
    let xs: Vec<NonNegRational> = samples
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let fx: Vec<NonNegRational> = xs.iter().map(|x| f.evaluate(x)).collect();
    for i in 0..xs.len() {
        for j in ((i + 1)..xs.len()).rev() {
            // xs[j] = max(xs[i], xs[j])
            if fx[j] != fx[i].join(&fx[j]) {
                return Some(EndomorphismWitness::Pair {
                    a: xs[i].clone(),
                    b: xs[j].clone(),
                });
            }
        }
    }
    let f0 = f.evaluate(&NonNegRational::zero());
    (!f0.is_zero()).then_some(EndomorphismWitness::NonzeroAtZero { value: f0 })
}
