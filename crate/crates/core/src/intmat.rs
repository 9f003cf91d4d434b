//! Exact square integer matrices.
//!
//! Everything here is arbitrary precision: hyperbolic monodromies overflow
//! fixed-width integers after a handful of powers, and the order and Smith
//! normal form computations must never round.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default iteration cap for [`IntMatrix::order`].
///
/// 24 is a common multiple of every finite order that occurs in `GL(2, Z)`.
pub const DEFAULT_ORDER_CAP: u64 = 24;

/// A `k x k` matrix over the integers, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<BigInt>,
}

/// Multiplicative order of a matrix, as far as iteration up to a cap can tell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatrixOrder {
    Finite(u64),
    Infinite,
}

impl MatrixOrder {
    pub fn period(self) -> Option<u64> {
        match self {
            MatrixOrder::Finite(m) => Some(m),
            MatrixOrder::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, MatrixOrder::Finite(_))
    }
}

impl fmt::Display for MatrixOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixOrder::Finite(m) => write!(f, "{m}"),
            MatrixOrder::Infinite => f.write_str("infinite"),
        }
    }
}

/// Serialized as a bare integer, or the string `"infinite"`.
impl Serialize for MatrixOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MatrixOrder::Finite(m) => serializer.serialize_u64(*m),
            MatrixOrder::Infinite => serializer.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for MatrixOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::Number(n) => match n.as_u64() {
                Some(m) if m > 0 => Ok(MatrixOrder::Finite(m)),
                _ => Err(de::Error::custom("order must be a positive integer")),
            },
            serde_json::Value::String(s) if s == "infinite" => Ok(MatrixOrder::Infinite),
            other => Err(de::Error::custom(format!("invalid order {other}"))),
        }
    }
}

/// Result of [`IntMatrix::smith_normal_form`]: `left * A * right = diag(diagonal)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithNormalForm {
    /// Nonnegative invariant factors, each dividing the next; zeros trail.
    pub diagonal: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
}

impl SmithNormalForm {
    pub fn diagonal_matrix(&self) -> IntMatrix {
        let k = self.diagonal.len();
        let mut d = IntMatrix::zeros(k);
        for (i, v) in self.diagonal.iter().enumerate() {
            d[(i, i)] = v.clone();
        }
        d
    }

    /// Number of `Z` summands in the cokernel.
    pub fn free_rank(&self) -> usize {
        self.diagonal.iter().filter(|d| d.is_zero()).count()
    }

    /// Torsion coefficients of the cokernel, ascending, with units dropped.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal
            .iter()
            .filter(|d| !d.is_zero() && !d.is_one())
            .cloned()
            .collect()
    }
}

impl IntMatrix {
    /// Builds a matrix from its rows. Rows must form a nonempty square.
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidMatrix("matrix has no rows".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {dim} (matrices must be square)",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Ok(IntMatrix { dim, entries })
    }

    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        IntMatrix {
            dim,
            entries: vec![BigInt::zero(); dim * dim],
        }
    }

    /// `diag(1, ..., 1, -1)`-style sign matrix with `-1` at the given slot.
    pub fn flip(dim: usize, slot: usize) -> Self {
        let mut m = Self::identity(dim);
        m[(slot, slot)] = -BigInt::one();
        m
    }

    /// Block-diagonal concatenation in the given order.
    pub fn block_diag(blocks: &[&IntMatrix]) -> Self {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut out = Self::zeros(dim);
        let mut offset = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    out[(offset + i, offset + j)] = b[(i, j)].clone();
                }
            }
            offset += b.dim;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn rows(&self) -> impl Iterator<Item = &[BigInt]> {
        self.entries.chunks(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Entries as `i64`, if they all fit.
    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        self.rows()
            .map(|r| r.iter().map(|v| v.to_i64()).collect())
            .collect()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, v)| if i == j { v.is_one() } else { v.is_zero() })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| &self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn neg(&self) -> Self {
        IntMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|v| -v).collect(),
        }
    }

    fn check_dim(&self, other: &IntMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &IntMatrix) -> IntMatrix {
        let k = self.dim;
        let mut out = Self::zeros(k);
        for i in 0..k {
            for l in 0..k {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..k {
                    out.entries[i * k + j] += a * &other[(l, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &IntMatrix) -> Result<IntMatrix> {
        self.check_dim(other)?;
        Ok(IntMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `A - I`, the matrix whose cokernel is the fiber part of `H_1`.
    pub fn minus_identity(&self) -> IntMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] -= 1;
        }
        m
    }

    /// Exact determinant by Bareiss fraction-free elimination.
    pub fn det(&self) -> BigInt {
        let k = self.dim;
        let mut a = self.to_rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for p in 0..k {
            if a[p][p].is_zero() {
                match (p + 1..k).find(|&r| !a[r][p].is_zero()) {
                    Some(r) => {
                        a.swap(p, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in p + 1..k {
                for j in p + 1..k {
                    let v = &a[i][j] * &a[p][p] - &a[i][p] * &a[p][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[p][p].clone();
        }
        sign * &a[k - 1][k - 1]
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    /// Adjugate matrix, so that `A * adj(A) = det(A) * I`.
    pub fn adjugate(&self) -> IntMatrix {
        let k = self.dim;
        if k == 1 {
            return Self::identity(1);
        }
        let mut adj = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                let minor = self.minor(i, j).det();
                adj[(j, i)] = if (i + j) % 2 == 0 { minor } else { -minor };
            }
        }
        adj
    }

    fn minor(&self, row: usize, col: usize) -> IntMatrix {
        let rows = self
            .rows()
            .enumerate()
            .filter(|&(i, _)| i != row)
            .map(|(_, r)| {
                r.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        IntMatrix::from_rows(rows).expect("minor of a square matrix is square")
    }

    /// Exact inverse; only unimodular matrices have one over `Z`.
    pub fn inverse(&self) -> Result<IntMatrix> {
        let det = self.det();
        if !det.abs().is_one() {
            return Err(Error::NonInvertible { det });
        }
        let adj = self.adjugate();
        Ok(if det.is_one() { adj } else { adj.neg() })
    }

    /// `A^e` by repeated squaring; negative exponents need a unimodular `A`.
    pub fn power(&self, e: i64) -> Result<IntMatrix> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        Ok(base.pow_unsigned(e.unsigned_abs()))
    }

    fn pow_unsigned(&self, mut e: u64) -> IntMatrix {
        let mut acc = Self::identity(self.dim);
        let mut sq = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_unchecked(&sq);
            }
        }
        acc
    }

    /// Least `m <= cap` with `A^m = I`, found by exact iteration.
    ///
    /// In dimension at most two the finite/infinite verdict is also fixed by
    /// trace and determinant. An `Infinite` result that contradicts that
    /// classification means the cap was too small and is reported as
    /// [`Error::OrderCapTooSmall`] instead.
    pub fn order(&self, cap: u64) -> Result<MatrixOrder> {
        if cap == 0 {
            return Err(Error::InvalidArgument("order cap must be positive".into()));
        }
        let det = self.det();
        if !det.abs().is_one() {
            return Err(Error::NonInvertible { det });
        }
        let mut p = self.clone();
        for m in 1..=cap {
            if p.is_identity() {
                return Ok(MatrixOrder::Finite(m));
            }
            if m < cap {
                p = p.mul_unchecked(self);
            }
        }
        if self.dim <= 2 && self.low_dim_has_finite_order(&det) {
            return Err(Error::OrderCapTooSmall { cap });
        }
        Ok(MatrixOrder::Infinite)
    }

    /// Closed-form finite-order test for unimodular matrices of size 1 or 2.
    ///
    /// det +1: elliptic (|tr| < 2) or `+-I`. det -1: exactly the trace-zero
    /// reflections, which square to the identity by Cayley-Hamilton.
    fn low_dim_has_finite_order(&self, det: &BigInt) -> bool {
        if self.dim == 1 {
            return true;
        }
        let tr = self.trace();
        if det.is_one() {
            tr.abs() < BigInt::from(2) || self.is_identity() || self.neg().is_identity()
        } else {
            tr.is_zero()
        }
    }

    /// Coefficients `[c_0, c_1, ..., c_k]` of `det(xI - A) = sum c_i x^i`,
    /// by Faddeev-LeVerrier with exact integer division.
    pub fn charpoly(&self) -> Vec<BigInt> {
        let k = self.dim;
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = BigInt::one();
        let mut m = Self::zeros(k);
        for step in 1..=k {
            // M_step = A * M_{step-1} + c_{k-step+1} I
            let mut next = self.mul_unchecked(&m);
            for i in 0..k {
                next[(i, i)] += &coeffs[k - step + 1];
            }
            m = next;
            let tr = self.mul_unchecked(&m).trace();
            coeffs[k - step] = -tr / BigInt::from(step);
        }
        coeffs
    }

    /// Smith normal form with transforms.
    ///
    /// Diagonal entries are nonnegative; signs are absorbed into `left`.
    pub fn smith_normal_form(&self) -> SmithNormalForm {
        let k = self.dim;
        let mut a = self.clone();
        let mut left = Self::identity(k);
        let mut right = Self::identity(k);

        for t in 0..k {
            let Some((pi, pj)) = smallest_nonzero(&a, t) else {
                break;
            };
            a.swap_rows(t, pi);
            left.swap_rows(t, pi);
            a.swap_cols(t, pj);
            right.swap_cols(t, pj);

            loop {
                let mut dirty = false;
                // clear column t below the pivot
                for i in t + 1..k {
                    if a[(i, t)].is_zero() {
                        continue;
                    }
                    let q = a[(i, t)].div_floor(&a[(t, t)]);
                    a.add_row_multiple(i, t, &-&q);
                    left.add_row_multiple(i, t, &-&q);
                    if !a[(i, t)].is_zero() {
                        a.swap_rows(t, i);
                        left.swap_rows(t, i);
                        dirty = true;
                    }
                }
                // clear row t right of the pivot
                for j in t + 1..k {
                    if a[(t, j)].is_zero() {
                        continue;
                    }
                    let q = a[(t, j)].div_floor(&a[(t, t)]);
                    a.add_col_multiple(j, t, &-&q);
                    right.add_col_multiple(j, t, &-&q);
                    if !a[(t, j)].is_zero() {
                        a.swap_cols(t, j);
                        right.swap_cols(t, j);
                        dirty = true;
                    }
                }
                if dirty {
                    continue;
                }
                // pivot must divide the remaining block; otherwise fold in an offending row
                let offender = (t + 1..k).find_map(|i| {
                    (t + 1..k)
                        .find(|&j| !a[(i, j)].is_multiple_of(&a[(t, t)]))
                        .map(|_| i)
                });
                match offender {
                    Some(i) => {
                        a.add_row_multiple(t, i, &BigInt::one());
                        left.add_row_multiple(t, i, &BigInt::one());
                    }
                    None => break,
                }
            }

            if a[(t, t)].is_negative() {
                a.negate_row(t);
                left.negate_row(t);
            }
        }

        let diagonal = (0..k).map(|i| a[(i, i)].clone()).collect();
        SmithNormalForm {
            diagonal,
            left,
            right,
        }
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        if r1 == r2 {
            return;
        }
        for j in 0..self.dim {
            self.entries.swap(r1 * self.dim + j, r2 * self.dim + j);
        }
    }

    fn swap_cols(&mut self, c1: usize, c2: usize) {
        if c1 == c2 {
            return;
        }
        for i in 0..self.dim {
            self.entries.swap(i * self.dim + c1, i * self.dim + c2);
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: &BigInt) {
        for j in 0..self.dim {
            let v = factor * &self[(src, j)];
            self[(dst, j)] += v;
        }
    }

    /// col[dst] += factor * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, factor: &BigInt) {
        for i in 0..self.dim {
            let v = factor * &self[(i, src)];
            self[(i, dst)] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.dim {
            let v = -&self[(r, j)];
            self[(r, j)] = v;
        }
    }
}

fn smallest_nonzero(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let k = a.dim;
    (t..k)
        .flat_map(|i| (t..k).map(move |j| (i, j)))
        .filter(|&(i, j)| !a[(i, j)].is_zero())
        .min_by(|&(i1, j1), &(i2, j2)| a[(i1, j1)].abs().cmp(&a[(i2, j2)].abs()))
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.dim + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Same shape as the JSON literal, e.g. `[[0,1],[-1,-1]]`.
impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Parses either a JSON array of integer rows (`[[0,1],[-1,-1]]`) or the
/// text form with whitespace-separated entries and `;`-separated rows
/// (`0 1; -1 -1`).
impl FromStr for IntMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            let value: serde_json::Value =
                serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
            return Self::from_json_value(&value);
        }
        let rows = s
            .split(';')
            .map(|row| {
                row.split_whitespace()
                    .map(|tok| {
                        tok.parse::<BigInt>()
                            .map_err(|_| Error::Parse(format!("not an integer: {tok:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.iter().any(Vec::is_empty) {
            return Err(Error::Parse(format!("empty row in matrix literal {s:?}")));
        }
        Self::from_rows(rows)
    }
}

impl IntMatrix {
    fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let rows = value
            .as_array()
            .ok_or_else(|| Error::Parse("matrix must be a JSON array of rows".into()))?;
        let rows = rows
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::Parse("each matrix row must be a JSON array".into()))?
                    .iter()
                    .map(json_to_bigint)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }
}

fn json_to_bigint(v: &serde_json::Value) -> Result<BigInt> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(Error::Parse(format!("not an integer: {n}")))
            }
        }
        serde_json::Value::String(s) => s
            .parse()
            .map_err(|_| Error::Parse(format!("not an integer: {s:?}"))),
        other => Err(Error::Parse(format!("not an integer: {other}"))),
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for row in self.rows() {
            seq.serialize_element(&BigIntRow(row))?;
        }
        seq.end()
    }
}

struct BigIntRow<'a>(&'a [BigInt]);

impl Serialize for BigIntRow<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(JsonInt))
    }
}

/// A big integer rendered as a JSON number when it fits in `i64`, and as a
/// decimal string otherwise.
pub(crate) struct JsonInt<'a>(pub &'a BigInt);

impl Serialize for JsonInt<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => serializer.serialize_i64(v),
            None => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

pub(crate) fn serialize_bigints<S: Serializer>(
    values: &[BigInt],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(JsonInt))
}

pub(crate) fn deserialize_bigints<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<Vec<BigInt>, D::Error> {
    let values = Vec::<serde_json::Value>::deserialize(deserializer)?;
    values
        .iter()
        .map(|v| json_to_bigint(v).map_err(de::Error::custom))
        .collect()
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        IntMatrix::from_json_value(&value).map_err(de::Error::custom)
    }
}
