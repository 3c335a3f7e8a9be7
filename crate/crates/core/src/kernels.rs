//! Kernels normalized to `k(x, x) <= 1`, finite action domains, and Gram
//! matrices.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-integer Matérn smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaternNu {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[serde(rename = "5/2")]
    FiveHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }

    pub fn from_value(nu: f64) -> Result<Self> {
        match nu {
            0.5 => Ok(MaternNu::Half),
            1.5 => Ok(MaternNu::ThreeHalves),
            2.5 => Ok(MaternNu::FiveHalves),
            _ => Err(Error::invalid("smoothness", format!("{nu} not in {{1/2, 3/2, 5/2}}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    SquaredExponential { lengthscale: f64 },
    Matern { lengthscale: f64, smoothness: MaternNu },
}

impl KernelSpec {
    pub fn squared_exponential(lengthscale: f64) -> Result<Self> {
        let k = KernelSpec::SquaredExponential { lengthscale };
        k.validate()?;
        Ok(k)
    }

    pub fn matern(lengthscale: f64, smoothness: MaternNu) -> Result<Self> {
        let k = KernelSpec::Matern {
            lengthscale,
            smoothness,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::SquaredExponential { lengthscale } | KernelSpec::Matern { lengthscale, .. } => {
                if lengthscale > 0.0 && lengthscale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("lengthscale", format!("{lengthscale} must be positive")))
                }
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, KernelSpec::Linear)
    }

    /// Evaluates the kernel. Symmetric bit-for-bit in its arguments:
    /// `(a - b)^2` and `a * b` are both invariant under swapping operands.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::SquaredExponential { lengthscale } => {
                let r2 = squared_distance(x, y);
                (-r2 / (2.0 * lengthscale * lengthscale)).exp()
            }
            KernelSpec::Matern {
                lengthscale,
                smoothness,
            } => {
                let r = squared_distance(x, y).sqrt();
                matern_half_integer(r / lengthscale, smoothness)
            }
        }
    }
}

#[inline]
fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
fn matern_half_integer(s: f64, nu: MaternNu) -> f64 {
    match nu {
        MaternNu::Half => (-s).exp(),
        MaternNu::ThreeHalves => {
            let a = 3f64.sqrt() * s;
            (1.0 + a) * (-a).exp()
        }
        MaternNu::FiveHalves => {
            let a = 5f64.sqrt() * s;
            (1.0 + a + 5.0 * s * s / 3.0) * (-a).exp()
        }
    }
}

/// `k(x, y)` with a dimension check.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dims(x.len(), y.len()));
    }
    Ok(spec.eval(x, y))
}

/// Gram matrix `[k(p_i, p_j)]`; the lower triangle is computed and mirrored.
pub fn gram_matrix(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    if let Some(first) = points.first() {
        let d = first.len();
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::dims(d, bad.len()));
        }
    }
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval(&points[i], &points[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

/// Minimum max-norm gap between two distinct domain points.
pub const MIN_POINT_GAP: f64 = 1e-12;

/// A finite, ordered set of actions; the index of a point is its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDomain {
    dimension: usize,
    points: Vec<Vec<f64>>,
}

impl ActionDomain {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidDomain("no points".into()))?;
        if dimension == 0 {
            return Err(Error::InvalidDomain("zero-dimensional points".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::dims(dimension, p.len()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDomain(format!("point {i} has a non-finite coordinate")));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if max_norm_gap(&points[i], &points[j]) < MIN_POINT_GAP {
                    return Err(Error::InvalidDomain(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { dimension, points })
    }

    /// Regular grid with `resolution` points per axis on `[lower, upper]^d`,
    /// enumerated with the last axis varying fastest.
    pub fn grid(dimension: usize, resolution: usize, lower: f64, upper: f64) -> Result<Self> {
        if dimension == 0 || resolution == 0 {
            return Err(Error::InvalidDomain("grid needs dimension and resolution >= 1".into()));
        }
        if !(upper >= lower) {
            return Err(Error::InvalidDomain(format!("bounds [{lower}, {upper}] are empty")));
        }
        let axis: Vec<f64> = if resolution == 1 {
            vec![0.5 * (lower + upper)]
        } else {
            (0..resolution)
                .map(|i| lower + (upper - lower) * i as f64 / (resolution - 1) as f64)
                .collect()
        };
        let total = resolution
            .checked_pow(dimension as u32)
            .ok_or_else(|| Error::InvalidDomain("grid too large".into()))?;
        let mut points = Vec::with_capacity(total);
        for flat in 0..total {
            let mut p = vec![0.0; dimension];
            let mut rest = flat;
            for coord in p.iter_mut().rev() {
                *coord = axis[rest % resolution];
                rest /= resolution;
            }
            points.push(p);
        }
        Self::new(points)
    }

    /// Reads one point per CSV row. A first row that does not parse as
    /// numbers is treated as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut points = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(p) => points.push(p),
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(Error::InvalidDomain(format!(
                        "{} row {}: {e}",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    /// Checks `k(x, x) <= 1` on every point; for the linear kernel this
    /// means every point lies in the closed unit ball.
    pub fn validate_for(&self, kernel: &KernelSpec) -> Result<()> {
        if kernel.is_linear() {
            for (i, p) in self.points.iter().enumerate() {
                let norm2: f64 = p.iter().map(|v| v * v).sum();
                if norm2 > 1.0 + 1e-12 {
                    return Err(Error::InvalidDomain(format!(
                        "point {i} has norm {} > 1 under a linear kernel",
                        norm2.sqrt()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Index of a point equal to `x` within [`MIN_POINT_GAP`], if any.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.len() == x.len() && max_norm_gap(p, x) < MIN_POINT_GAP)
    }

    /// Sub-domain made of the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.points[i].clone()).collect())
    }
}

fn max_norm_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_at_zero_distance_is_one() {
        let k = KernelSpec::squared_exponential(1.0).unwrap();
        assert_eq!(kernel_eval(&k, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
    }

    #[test]
    fn matern_half_at_unit_distance() {
        let k = KernelSpec::matern(1.0, MaternNu::Half).unwrap();
        let v = kernel_eval(&k, &[0.0], &[1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn linear_is_dot_product() {
        let v = kernel_eval(&KernelSpec::Linear, &[0.3], &[0.5]).unwrap();
        assert!((v - 0.15).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            kernel_eval(&KernelSpec::Linear, &[0.3], &[0.5, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(gram_matrix(&KernelSpec::Linear, &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(KernelSpec::squared_exponential(0.0).is_err());
        assert!(KernelSpec::matern(-1.0, MaternNu::FiveHalves).is_err());
        assert!(MaternNu::from_value(2.0).is_err());
        assert_eq!(MaternNu::from_value(1.5).unwrap(), MaternNu::ThreeHalves);
    }

    #[test]
    fn small_gram_matrices() {
        let se = KernelSpec::squared_exponential(0.5).unwrap();
        assert_eq!(gram_matrix(&se, &[vec![0.2]]).unwrap(), vec![vec![1.0]]);
        assert_eq!(
            gram_matrix(&se, &[vec![0.2], vec![0.2]]).unwrap(),
            vec![vec![1.0, 1.0], vec![1.0, 1.0]]
        );
        assert_eq!(
            gram_matrix(&KernelSpec::Linear, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        );
    }

    #[test]
    fn matern_closed_forms_are_normalized() {
        for nu in [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves] {
            let k = KernelSpec::matern(0.7, nu).unwrap();
            assert_eq!(k.eval(&[0.1, 0.2], &[0.1, 0.2]), 1.0);
            assert!(k.eval(&[0.0, 0.0], &[1.0, 1.0]) < 1.0);
        }
    }

    #[test]
    fn grid_layout() {
        let g = ActionDomain::grid(2, 3, 0.0, 1.0).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(0), &[0.0, 0.0]);
        assert_eq!(g.point(1), &[0.0, 0.5]);
        assert_eq!(g.point(8), &[1.0, 1.0]);
        assert_eq!(g.index_of(&[0.5, 1.0]), Some(5));
        assert_eq!(g.index_of(&[0.25, 1.0]), None);
    }

    #[test]
    fn duplicate_points_rejected() {
        assert!(ActionDomain::new(vec![vec![0.0], vec![1.0], vec![0.0]]).is_err());
        assert!(ActionDomain::new(vec![]).is_err());
    }

    #[test]
    fn linear_domain_must_fit_unit_ball() {
        let inside = ActionDomain::new(vec![vec![0.6, 0.8], vec![0.0, 0.5]]).unwrap();
        assert!(inside.validate_for(&KernelSpec::Linear).is_ok());
        let outside = ActionDomain::new(vec![vec![0.9, 0.9]]).unwrap();
        assert!(outside.validate_for(&KernelSpec::Linear).is_err());
        let se = KernelSpec::squared_exponential(1.0).unwrap();
        assert!(outside.validate_for(&se).is_ok());
    }

    #[test]
    fn csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let with = dir.path().join("with.csv");
        std::fs::write(&with, "x,y\n0.0,0.1\n0.5,0.5\n").unwrap();
        let d = ActionDomain::from_csv(&with).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.point(1), &[0.5, 0.5]);

        let without = dir.path().join("without.csv");
        std::fs::write(&without, "0.0,0.1\n0.5,0.5\n1,1\n").unwrap();
        assert_eq!(ActionDomain::from_csv(&without).unwrap().len(), 3);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "0.0,0.1\nfoo,0.5\n").unwrap();
        assert!(ActionDomain::from_csv(&bad).is_err());
    }

    #[test]
    fn kernel_spec_json() {
        let k: KernelSpec =
            serde_json::from_str(r#"{"family":"matern","lengthscale":0.3,"smoothness":"5/2"}"#).unwrap();
        assert_eq!(k, KernelSpec::matern(0.3, MaternNu::FiveHalves).unwrap());
        let se: KernelSpec = serde_json::from_str(r#"{"family":"squared_exponential","lengthscale":0.2}"#).unwrap();
        assert_eq!(se, KernelSpec::squared_exponential(0.2).unwrap());
    }
}
