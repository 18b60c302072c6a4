//! Finite (pseudo)ultrametric spaces with exact distances.
//!
//! A [`FiniteSpace`] is a labeled point list plus a symmetric, zero-diagonal
//! distance matrix. The predicates [`FiniteSpace::is_metric`],
//! [`FiniteSpace::is_ultrametric`] and [`FiniteSpace::is_pseudoultrametric`]
//! decide the usual axioms exhaustively over point triples; the `*_violation`
//! variants return the first offending pair or triple.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::NonNegRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("a space needs at least one point")]
    NoPoints,
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("matrix must be {expected}x{expected}")]
    NotSquare { expected: usize },
    #[error("matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("diagonal entry ({0}, {0}) is not zero")]
    NonzeroDiagonal(usize),
    #[error("duplicate value {0}")]
    DuplicateValue(NonNegRational),
    #[error("space is not pseudoultrametric: {0}")]
    NotPseudoultrametric(TripleViolation),
}

/// Indices `(x, y, z)` of a triple where `d(x, y)` exceeds the bound taken
/// over the detour through `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleViolation {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl fmt::Display for TripleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "triple (x={}, y={}, z={})", self.x, self.y, self.z)
    }
}

/// Two distinct points at distance zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositivityViolation {
    pub x: usize,
    pub y: usize,
}

/// A finite space `(X, d)`.
///
/// Construction rejects asymmetric matrices and nonzero diagonals; equality is
/// label-list equality plus entrywise matrix equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct FiniteSpace {
    points: Vec<String>,
    matrix: Vec<Vec<NonNegRational>>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    points: Vec<String>,
    matrix: Vec<Vec<NonNegRational>>,
}

impl TryFrom<RawSpace> for FiniteSpace {
    type Error = MetricError;

    fn try_from(raw: RawSpace) -> Result<Self, Self::Error> {
        FiniteSpace::new(raw.points, raw.matrix)
    }
}

impl From<FiniteSpace> for RawSpace {
    fn from(s: FiniteSpace) -> Self {
        RawSpace {
            points: s.points,
            matrix: s.matrix,
        }
    }
}

impl FiniteSpace {
    pub fn new(points: Vec<String>, matrix: Vec<Vec<NonNegRational>>) -> Result<Self, MetricError> {
        check_shape(&points, &matrix)?;
        for (i, row) in matrix.iter().enumerate() {
            if !row[i].is_zero() {
                return Err(MetricError::NonzeroDiagonal(i));
            }
            for j in (i + 1)..row.len() {
                if row[j] != matrix[j][i] {
                    return Err(MetricError::Asymmetric(i, j));
                }
            }
        }
        Ok(Self { points, matrix })
    }

    /// Builds a space from the strict upper triangle, row by row:
    /// `d(0,1), d(0,2), …, d(1,2), …`.
    pub fn from_upper(points: Vec<String>, upper: &[NonNegRational]) -> Result<Self, MetricError> {
        let n = points.len();
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(MetricError::NotSquare { expected: n });
        }
        let mut matrix = vec![vec![NonNegRational::zero(); n]; n];
        let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        for ((i, j), v) in pairs.zip(upper) {
            matrix[i][j] = v.clone();
            matrix[j][i] = v.clone();
        }
        Self::new(points, matrix)
    }

    /// Points labeled `"0"`, `"1"`, … with the given strict upper triangle.
    pub fn from_upper_indexed(upper: &[NonNegRational]) -> Result<Self, MetricError> {
        // n(n-1)/2 = len
        let mut n = 1;
        while n * (n - 1) / 2 < upper.len() {
            n += 1;
        }
        Self::from_upper(index_labels(n), upper)
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn matrix(&self) -> &[Vec<NonNegRational>] {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, x: usize, y: usize) -> &NonNegRational {
        &self.matrix[x][y]
    }

    /// The first triple with `d(x,y) > max{d(x,z), d(z,y)}`, if any.
    pub fn strong_triangle_violation(&self) -> Option<TripleViolation> {
        self.first_triple(|dxy, dxz, dzy| dxy > &dxz.join(dzy))
    }

    /// The first triple with `d(x,y) > d(x,z) + d(z,y)`, if any.
    pub fn triangle_violation(&self) -> Option<TripleViolation> {
        self.first_triple(|dxy, dxz, dzy| dxy > &(dxz + dzy))
    }

    /// The first pair of distinct points at distance zero, if any.
    pub fn positivity_violation(&self) -> Option<PositivityViolation> {
        let n = self.len();
        (0..n)
            .flat_map(|x| ((x + 1)..n).map(move |y| (x, y)))
            .find(|&(x, y)| self.matrix[x][y].is_zero())
            .map(|(x, y)| PositivityViolation { x, y })
    }

    pub fn is_pseudoultrametric(&self) -> bool {
        self.strong_triangle_violation().is_none()
    }

    pub fn is_ultrametric(&self) -> bool {
        self.positivity_violation().is_none() && self.is_pseudoultrametric()
    }

    pub fn is_metric(&self) -> bool {
        self.positivity_violation().is_none() && self.triangle_violation().is_none()
    }

    /// Restriction to the given point indices, in the given order.
    pub fn subspace(&self, idx: &[usize]) -> Result<Self, MetricError> {
        let points = idx.iter().map(|&i| self.points[i].clone()).collect();
        let matrix = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.matrix[i][j].clone()).collect())
            .collect();
        Self::new(points, matrix)
    }

    /// Every distinct value occurring in the matrix (including 0).
    pub fn values(&self) -> BTreeSet<NonNegRational> {
        self.matrix.iter().flatten().cloned().collect()
    }

    fn first_triple(
        &self,
        violates: impl Fn(&NonNegRational, &NonNegRational, &NonNegRational) -> bool,
    ) -> Option<TripleViolation> {
        let n = self.len();
        for x in 0..n {
            for y in (x + 1)..n {
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let d = &self.matrix;
                    if violates(&d[x][y], &d[x][z], &d[z][y]) {
                        return Some(TripleViolation { x, y, z });
                    }
                }
            }
        }
        None
    }
}

fn check_shape(points: &[String], matrix: &[Vec<NonNegRational>]) -> Result<(), MetricError> {
    if points.is_empty() {
        return Err(MetricError::NoPoints);
    }
    let mut seen = BTreeSet::new();
    for p in points {
        if !seen.insert(p.as_str()) {
            return Err(MetricError::DuplicateLabel(p.clone()));
        }
    }
    let n = points.len();
    if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
        return Err(MetricError::NotSquare { expected: n });
    }
    Ok(())
}

pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// The space `({values}, d⁺)` with `d⁺(p, q) = max{p, q}` for `p ≠ q`.
///
/// Points are labeled by the canonical text of each value, in input order.
pub fn dplus_space(values: &[NonNegRational]) -> Result<FiniteSpace, MetricError> {
    let mut seen = BTreeSet::new();
    for v in values {
        if !seen.insert(v) {
            return Err(MetricError::DuplicateValue(v.clone()));
        }
    }
    let matrix = values
        .iter()
        .enumerate()
        .map(|(i, p)| {
            values
                .iter()
                .enumerate()
                .map(|(j, q)| {
                    if i == j {
                        NonNegRational::zero()
                    } else {
                        p.join(q)
                    }
                })
                .collect()
        })
        .collect();
    let points = values.iter().map(|v| v.to_string()).collect();
    FiniteSpace::new(points, matrix)
}

/// Truncation `d_k`: distances `<= k` collapse to zero, larger ones are kept.
pub fn truncate(space: &FiniteSpace, k: &NonNegRational) -> Result<FiniteSpace, MetricError> {
    if let Some(v) = space.strong_triangle_violation() {
        return Err(MetricError::NotPseudoultrametric(v));
    }
    let matrix = space
        .matrix
        .iter()
        .map(|row| {
            row.iter()
                .map(|d| {
                    if d <= k {
                        NonNegRational::zero()
                    } else {
                        d.clone()
                    }
                })
                .collect()
        })
        .collect();
    Ok(FiniteSpace {
        points: space.points.clone(),
        matrix,
    })
}

/// Result of applying a function entrywise to a distance matrix.
///
/// `f ∘ d` is only a space again when `f(0) = 0`; otherwise the image is kept
/// as a raw matrix and flagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedMatrix {
    pub points: Vec<String>,
    pub matrix: Vec<Vec<NonNegRational>>,
}

impl MappedMatrix {
    pub fn is_space(&self) -> bool {
        self.matrix
            .iter()
            .enumerate()
            .all(|(i, row)| row[i].is_zero())
    }

    pub fn into_space(self) -> Option<FiniteSpace> {
        // symmetry survives any entrywise map, only the diagonal can break
        self.is_space().then_some(FiniteSpace {
            points: self.points,
            matrix: self.matrix,
        })
    }
}

/// `f ∘ d`, entrywise.
pub fn apply_fn<F>(space: &FiniteSpace, f: F) -> MappedMatrix
where
    F: Fn(&NonNegRational) -> NonNegRational,
{
    MappedMatrix {
        points: space.points.clone(),
        matrix: space
            .matrix
            .iter()
            .map(|row| row.iter().map(&f).collect())
            .collect(),
    }
}
