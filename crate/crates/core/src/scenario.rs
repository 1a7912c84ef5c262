//! Finite probability space, random vectors, and the bilinear pairing.
//!
//! Random variables are plain slices of length `n`, one value per scenario.
//! A [`RandomVector`] stores `d` of them row by row, so `x.get(i, w)` is the
//! position of institution `i` in scenario `w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loads whose probabilities miss 1 by more than this are rejected.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Tolerance on the unit-expectation constraints of the dual simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpace {
    probs: Vec<f64>,
}

impl ScenarioSpace {
    /// Builds a space from strictly positive weights summing to one.
    ///
    /// The weights are renormalized after the check, so the stored vector sums
    /// to one up to rounding.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation(
                "nonempty",
                "at least one scenario is required",
            ));
        }
        for (w, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::validation(
                    "strictly positive probabilities",
                    format!("scenario {w} has probability {p}"),
                ));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::validation(
                "probabilities sum to one",
                format!("sum is {total}, off by {:e}", total - 1.0),
            ));
        }
        Ok(ScenarioSpace {
            probs: probs.iter().map(|p| p / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        ScenarioSpace {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, w: usize) -> f64 {
        self.probs[w]
    }

    pub fn expectation(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.len());
        self.probs.iter().zip(u).map(|(p, v)| p * v).sum()
    }

    /// `E[UV]`.
    pub fn expectation_product(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.len());
        debug_assert_eq!(v.len(), self.len());
        self.probs
            .iter()
            .zip(u.iter().zip(v))
            .map(|(p, (a, b))| p * a * b)
            .sum()
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::dimension(format!(
                "{what} has {len} scenarios, space has {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// A `d x n` matrix of finite reals: institutions by scenarios.
///
/// Serialized as its list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct RandomVector {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

impl From<RandomVector> for Vec<Vec<f64>> {
    fn from(x: RandomVector) -> Self {
        x.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for RandomVector {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        RandomVector::from_rows(rows)
    }
}

/// Dual variables share the layout of positions.
pub type DualVector = RandomVector;

impl RandomVector {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::dimension(
                "a random vector needs at least one component",
            ));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::dimension(
                "a random vector needs at least one scenario",
            ));
        }
        let d = rows.len();
        let mut data = Vec::with_capacity(d * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::dimension(format!(
                    "row {i} has {} scenarios, row 0 has {n}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::validation(
                    "finite entries",
                    format!("row {i} contains {v}"),
                ));
            }
            data.extend(row);
        }
        Ok(RandomVector { d, n, data })
    }

    pub fn zeros(d: usize, n: usize) -> Self {
        RandomVector {
            d,
            n,
            data: vec![0.0; d * n],
        }
    }

    pub fn constant(d: usize, n: usize, value: f64) -> Self {
        RandomVector {
            d,
            n,
            data: vec![value; d * n],
        }
    }

    /// The deterministic vector `m`, repeated in every scenario.
    pub fn deterministic(m: &[f64], n: usize) -> Self {
        let mut x = RandomVector::zeros(m.len(), n);
        for (i, &mi) in m.iter().enumerate() {
            x.row_mut(i).fill(mi);
        }
        x
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, w: usize) -> f64 {
        self.data[i * self.n + w]
    }

    pub fn set(&mut self, i: usize, w: usize, value: f64) {
        self.data[i * self.n + w] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|i| self.row(i).to_vec()).collect()
    }

    /// The `d` positions in scenario `w`.
    pub fn scenario(&self, w: usize) -> Vec<f64> {
        (0..self.d).map(|i| self.get(i, w)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `X + m` for a deterministic allocation `m`.
    pub fn shifted(&self, m: &[f64]) -> Self {
        assert_eq!(m.len(), self.d);
        let mut out = self.clone();
        for (i, &mi) in m.iter().enumerate() {
            out.row_mut(i).iter_mut().for_each(|v| *v += mi);
        }
        out
    }

    pub fn scaled(&self, t: f64) -> Self {
        RandomVector {
            d: self.d,
            n: self.n,
            data: self.data.iter().map(|v| v * t).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &RandomVector, b: f64) -> Self {
        assert_eq!((self.d, self.n), (other.d, other.n));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        RandomVector {
            d: self.d,
            n: self.n,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Permutes scenarios: column `w` of the result is column `perm[w]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.d {
            for (w, &src) in perm.iter().enumerate() {
                out.set(i, w, self.get(i, src));
            }
        }
        out
    }

    pub(crate) fn check_shape(&self, d: usize, space: &ScenarioSpace) -> Result<()> {
        if self.d != d {
            return Err(Error::dimension(format!(
                "expected {d} components, found {}",
                self.d
            )));
        }
        space.check_len(self.n, "random vector")
    }
}

/// `E[<X, Z>] = sum_i sum_w p_w X_iw Z_iw`.
pub fn pairing(x: &RandomVector, z: &DualVector, space: &ScenarioSpace) -> Result<f64> {
    if x.d != z.d || x.n != z.n {
        return Err(Error::dimension(format!(
            "pairing of a {}x{} position with a {}x{} dual vector",
            x.d, x.n, z.d, z.n
        )));
    }
    space.check_len(x.n, "pairing operands")?;
    Ok((0..x.d)
        .map(|i| space.expectation_product(x.row(i), z.row(i)))
        .sum())
}

/// Membership in the product of density simplices: `Z >= 0` and `E[Z_i] = 1` for every `i`.
pub fn in_dual_simplex(z: &DualVector, space: &ScenarioSpace) -> bool {
    if z.n != space.len() {
        return false;
    }
    if z.data.iter().any(|&v| v < 0.0) {
        return false;
    }
    (0..z.d).all(|i| (space.expectation(z.row(i)) - 1.0).abs() <= SIMPLEX_TOL)
}

pub fn essential_sup(u: &[f64]) -> f64 {
    assert!(!u.is_empty());
    u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

pub fn essential_inf(u: &[f64]) -> f64 {
    assert!(!u.is_empty());
    u.iter().cloned().fold(f64::INFINITY, f64::min)
}
