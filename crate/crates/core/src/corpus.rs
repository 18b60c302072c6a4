//! Deterministic generators for test inputs: piecewise functions that cover
//! every preservation verdict, and random valid space classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::metric::FiniteSpace;
use crate::piecewise::{PiecewiseFn, Segment};
use crate::px::SpaceClass;
use crate::rational::{NonNegRational, Rational};

fn half_units(k: u64) -> NonNegRational {
    NonNegRational::from_ratio(k, 2).expect("nonzero denominator")
}

/// Affine piece through `(l, yl)` and `(r, yr)`.
fn through(
    l: &NonNegRational,
    yl: &NonNegRational,
    r: &NonNegRational,
    yr: &NonNegRational,
) -> Segment {
    let (l, yl, r, yr) = (
        l.as_rational(),
        yl.as_rational(),
        r.as_rational(),
        yr.as_rational(),
    );
    let a: Rational = (yr - yl) / (r - l);
    let b = yl - &a * l;
    Segment::affine(a, b)
}

/// Hand-written functions, one or more per verdict and shape.
pub fn named_functions() -> Vec<(&'static str, PiecewiseFn)> {
    let q = |s: &str| s.parse::<NonNegRational>().expect("literal");
    let r = |s: &str| crate::rational::parse_rational(s).expect("literal");
    let f = |bps: &[&str], vals: &[&str], segs: Vec<Segment>| {
        PiecewiseFn::new(
            bps.iter().map(|s| q(s)).collect(),
            vals.iter().map(|s| q(s)).collect(),
            segs,
        )
        .expect("valid literal function")
    };
    vec![
        ("identity", PiecewiseFn::identity()),
        ("doubling", PiecewiseFn::scale(q("2"))),
        ("zero", PiecewiseFn::constant(q("0"))),
        ("one", PiecewiseFn::constant(q("1"))),
        (
            "step_0_2",
            f(
                &["0", "1"],
                &["0", "0"],
                vec![Segment::constant(q("0")), Segment::constant(q("2"))],
            ),
        ),
        (
            "truncate_1",
            f(
                &["0", "1"],
                &["0", "0"],
                vec![Segment::constant(q("0")), Segment::affine(r("1"), r("0"))],
            ),
        ),
        (
            "clamped_2_minus_x",
            f(
                &["0", "2"],
                &["2", "0"],
                vec![Segment::affine(r("-1"), r("2")), Segment::constant(q("0"))],
            ),
        ),
        (
            "x_plus_1",
            f(&["0"], &["1"], vec![Segment::affine(r("1"), r("1"))]),
        ),
        (
            "indicator_positive",
            f(&["0"], &["0"], vec![Segment::constant(q("1"))]),
        ),
        (
            "saturate_at_1",
            f(
                &["0", "1"],
                &["0", "1"],
                vec![Segment::affine(r("1"), r("0")), Segment::constant(q("1"))],
            ),
        ),
        (
            "tent",
            f(
                &["0", "1"],
                &["0", "1"],
                vec![Segment::affine(r("1"), r("0")), Segment::constant(q("1/2"))],
            ),
        ),
        (
            "dip_at_breakpoint",
            f(
                &["0", "1"],
                &["0", "1/2"],
                vec![
                    Segment::affine(r("1"), r("0")),
                    Segment::affine(r("1"), r("0")),
                ],
            ),
        ),
        (
            "spike_at_breakpoint",
            f(
                &["0", "1"],
                &["0", "3"],
                vec![
                    Segment::affine(r("1"), r("0")),
                    Segment::affine(r("1"), r("0")),
                ],
            ),
        ),
        (
            "zero_at_isolated_point",
            f(
                &["0", "1"],
                &["0", "0"],
                vec![
                    Segment::affine(r("1"), r("0")),
                    Segment::affine(r("1"), r("0")),
                ],
            ),
        ),
        (
            "x_minus_1_clamped",
            f(
                &["0", "1"],
                &["0", "0"],
                vec![Segment::constant(q("0")), Segment::affine(r("1"), r("-1"))],
            ),
        ),
    ]
}

/// A random valid piecewise function. With `monotone`, breakpoint values
/// and one-sided limits are drawn in nondecreasing order so most draws are
/// increasing; `pin_zero` forces `f(0) = 0`.
pub fn random_function(rng: &mut impl Rng, monotone: bool, pin_zero: bool) -> PiecewiseFn {
    let extra = rng.random_range(0..=3usize);
    let mut ks: Vec<u64> = (1..=8).collect();
    // pick `extra` distinct breakpoints in half units
    for i in 0..extra {
        let j = rng.random_range(i..ks.len());
        ks.swap(i, j);
    }
    let mut cuts: Vec<u64> = ks[..extra].to_vec();
    cuts.sort_unstable();
    let mut bps = vec![NonNegRational::zero()];
    bps.extend(cuts.into_iter().map(half_units));

    // Values in the order: f(b_0), lim+(b_0), lim-(b_1), f(b_1), lim+(b_1), …, lim+(b_m)
    let slots = 3 * bps.len() - 1;
    let mut levels: Vec<u64> = (0..slots).map(|_| rng.random_range(0..=6u64)).collect();
    if monotone {
        levels.sort_unstable();
        // occasional flat zero stretch so pseudo-only verdicts show up
        if rng.random_bool(0.3) {
            let z = rng.random_range(1..slots.min(4));
            for v in levels.iter_mut().take(z) {
                *v = 0;
            }
        }
    }
    if pin_zero {
        levels[0] = 0;
    }
    let lv: Vec<NonNegRational> = levels.into_iter().map(half_units).collect();

    let m = bps.len();
    let mut values_at = Vec::with_capacity(m);
    let mut segments = Vec::with_capacity(m);
    for i in 0..m {
        values_at.push(lv[3 * i].clone());
        let right_of_bp = &lv[3 * i + 1];
        if i + 1 < m {
            let left_of_next = &lv[3 * i + 2];
            let seg = if right_of_bp == left_of_next {
                Segment::constant(right_of_bp.clone())
            } else {
                through(&bps[i], right_of_bp, &bps[i + 1], left_of_next)
            };
            segments.push(seg);
        } else {
            // unbounded tail: constant or slope in {1/2, 1, 2}
            let seg = match rng.random_range(0..4u32) {
                0 => Segment::constant(right_of_bp.clone()),
                k => {
                    let a = Rational::new((1i64 << (k - 1)).into(), 2.into());
                    let b = right_of_bp.as_rational() - &a * bps[i].as_rational();
                    Segment::affine(a, b)
                }
            };
            segments.push(seg);
        }
    }
    PiecewiseFn::new(bps, values_at, segments).expect("generated function is valid")
}

/// `named_functions()` followed by seeded random draws, `count` in total
/// (at least the named ones).
pub fn function_corpus(seed: u64, count: usize) -> Vec<PiecewiseFn> {
    let mut out: Vec<PiecewiseFn> = named_functions().into_iter().map(|(_, f)| f).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut i = 0usize;
    while out.len() < count {
        let f = match i % 4 {
            0 | 1 => random_function(&mut rng, true, true),
            2 => random_function(&mut rng, false, true),
            _ => {
                let monotone = rng.random_bool(0.5);
                random_function(&mut rng, monotone, false)
            }
        };
        out.push(f);
        i += 1;
    }
    out
}

/// A random pseudoultrametric space with integer distances in `0..=n` on
/// 1 to 4 points labeled `p0, p1, …` (spaces of equal size share labels).
pub fn random_space(rng: &mut impl Rng, n: usize) -> FiniteSpace {
    let size = rng.random_range(1..=4usize);
    let labels: Vec<String> = (0..size).map(|i| format!("p{i}")).collect();
    loop {
        let upper: Vec<NonNegRational> = (0..size * (size - 1) / 2)
            .map(|_| NonNegRational::from_integer(rng.random_range(0..=n as u64)))
            .collect();
        let s = FiniteSpace::from_upper(labels.clone(), &upper).expect("well formed");
        if s.is_pseudoultrametric() {
            return s;
        }
    }
}

/// A random valid class of 1 to 5 spaces over `Cₙ`.
pub fn random_class(rng: &mut impl Rng, n: usize) -> SpaceClass {
    let count = rng.random_range(1..=5usize);
    SpaceClass::new(n, (0..count).map(|_| random_space(rng, n))).expect("valid by construction")
}

pub fn class_stream(seed: u64, n: usize, count: usize) -> Vec<SpaceClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_class(&mut rng, n)).collect()
}
