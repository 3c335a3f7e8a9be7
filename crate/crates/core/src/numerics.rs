//! Dense symmetric positive-definite factorization.
//!
//! [`SpdFactor`] stores a lower-triangular Cholesky factor packed row by row,
//! so appending a row (a new query point) is a plain `extend` of the buffer.

use crate::error::{Error, Result};

/// Default base of the diagonal jitter schedule.
pub const DEFAULT_JITTER: f64 = 1e-10;

/// Jitter levels tried are `base * 10^j` for `j` in `0..=JITTER_STEPS`.
pub const JITTER_STEPS: i32 = 6;

/// Corner pivots at or below this value trigger a full refactorization.
pub const PIVOT_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular factor `L` with `L Lᵀ = M + jitter_applied · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    dim: usize,
    // Row i occupies entries[i(i+1)/2 .. i(i+1)/2 + i + 1].
    entries: Vec<f64>,
    jitter_applied: f64,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl SpdFactor {
    /// The factor of the 0×0 matrix.
    pub fn empty() -> Self {
        Self {
            dim: 0,
            entries: Vec::new(),
            jitter_applied: 0.0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; row_start(dim)];
        for i in 0..dim {
            entries[row_start(i) + i] = 1.0;
        }
        Self {
            dim,
            entries,
            jitter_applied: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// Row `i` of `L`, columns `0..=i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let s = row_start(i);
        &self.entries[s..s + i + 1]
    }

    /// `L[i][j]`, zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.entries[row_start(i) + j]
        }
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).map(move |i| self.entries[row_start(i) + i])
    }

    /// `ln det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.diagonal().map(f64::ln).sum::<f64>()
    }

    /// Dense `L Lᵀ` (includes the applied jitter).
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..=i {
                let rj = self.row(j);
                let v: f64 = ri[..=j].iter().zip(rj).map(|(a, b)| a * b).sum();
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    /// Solves `L z = b`.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(Error::dims(self.dim, b.len()));
        }
        let mut z = Vec::with_capacity(self.dim);
        for (i, &bi) in b.iter().enumerate() {
            let row = self.row(i);
            let partial: f64 = row[..i].iter().zip(&z).map(|(l, zj)| l * zj).sum();
            z.push((bi - partial) / row[i]);
        }
        Ok(z)
    }

    /// Solves `Lᵀ x = z`.
    pub fn backward_solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::dims(self.dim, z.len()));
        }
        let mut x = z.to_vec();
        for i in (0..self.dim).rev() {
            x[i] /= self.get(i, i);
            let xi = x[i];
            let row = self.row(i);
            for j in 0..i {
                x[j] -= row[j] * xi;
            }
        }
        Ok(x)
    }
}

/// Plain Cholesky on a square matrix with `jitter` added to the diagonal.
/// Returns `None` when a pivot is not strictly positive.
fn try_cholesky(matrix: &[Vec<f64>], jitter: f64) -> Option<Vec<f64>> {
    let n = matrix.len();
    let mut entries = vec![0.0; row_start(n)];
    for i in 0..n {
        let si = row_start(i);
        for j in 0..=i {
            let sj = row_start(j);
            let mut s = matrix[i][j];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= entries[si + k] * entries[sj + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                entries[si + i] = s.sqrt();
            } else {
                entries[si + j] = s / entries[sj + j];
            }
        }
    }
    Some(entries)
}

fn check_square_symmetric(matrix: &[Vec<f64>]) -> Result<()> {
    let n = matrix.len();
    for row in matrix {
        if row.len() != n {
            return Err(Error::dims(n, row.len()));
        }
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (matrix[i][j], matrix[j][i]);
            let scale = a.abs().max(b.abs()).max(1.0);
            if (a - b).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(
                    "matrix",
                    format!("asymmetric at ({i}, {j}): {a} vs {b}"),
                ));
            }
        }
    }
    Ok(())
}

/// Cholesky factorization with a jitter rescue schedule.
///
/// The plain factorization is tried first; on failure the diagonal is
/// inflated by `base_jitter * 10^j` for `j = 0..=6` until one succeeds.
pub fn cholesky_factor(matrix: &[Vec<f64>], base_jitter: f64) -> Result<SpdFactor> {
    check_square_symmetric(matrix)?;
    if !(base_jitter >= 0.0) {
        return Err(Error::invalid("base_jitter", "must be nonnegative"));
    }
    let dim = matrix.len();
    if let Some(entries) = try_cholesky(matrix, 0.0) {
        return Ok(SpdFactor {
            dim,
            entries,
            jitter_applied: 0.0,
        });
    }
    for j in 0..=JITTER_STEPS {
        let jitter = base_jitter * 10f64.powi(j);
        if jitter == 0.0 {
            continue;
        }
        if let Some(entries) = try_cholesky(matrix, jitter) {
            return Ok(SpdFactor {
                dim,
                entries,
                jitter_applied: jitter,
            });
        }
    }
    Err(Error::NotFactorizable {
        max_jitter: base_jitter * 10f64.powi(JITTER_STEPS),
    })
}

/// Solves `(L Lᵀ) v = rhs`.
pub fn solve_spd(factor: &SpdFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    let z = factor.forward_solve(rhs)?;
    factor.backward_solve(&z)
}

/// Factor of `[[M, c], [cᵀ, corner]]` given the factor of `M`.
///
/// One forward solve plus a square root. Any jitter already carried by
/// `factor` is applied to the new corner too, so the result stays the factor
/// of the extended matrix plus the same `jitter · I`. A corner pivot at or
/// below [`PIVOT_FLOOR`] falls back to refactorizing the whole extended
/// matrix with the jitter schedule.
pub fn extend_factor(factor: &SpdFactor, cross_column: &[f64], corner: f64) -> Result<SpdFactor> {
    let mut out = factor.clone();
    out.extend_in_place(cross_column, corner)?;
    Ok(out)
}

impl SpdFactor {
    /// In-place variant of [`extend_factor`].
    pub fn extend_in_place(&mut self, cross_column: &[f64], corner: f64) -> Result<()> {
        let l = self.forward_solve(cross_column)?;
        let pivot = corner + self.jitter_applied - l.iter().map(|v| v * v).sum::<f64>();
        if pivot > PIVOT_FLOOR && pivot.is_finite() {
            self.entries.extend_from_slice(&l);
            self.entries.push(pivot.sqrt());
            self.dim += 1;
            return Ok(());
        }
        let jitter = self.jitter_applied;
        let mut full = self.reconstruct();
        for (i, row) in full.iter_mut().enumerate() {
            row[i] -= jitter;
            row.push(cross_column[i]);
        }
        let mut last = cross_column.to_vec();
        last.push(corner);
        full.push(last);
        *self = cholesky_factor(&full, DEFAULT_JITTER.max(jitter))?;
        Ok(())
    }
}
