use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::Point;

/// The norm |x|_θ = (xᵀ M⁻¹ x)^{1/2} for a positive definite covariance M,
/// with M factored once.
#[derive(Clone, Debug)]
pub struct ThetaNorm {
    d: usize,
    chol_l: DMatrix<f64>,
    det: f64,
}

impl ThetaNorm {
    /// `covariance` is row-major d×d.
    pub fn new(covariance: &[f64], d: usize) -> Result<Self> {
        if covariance.len() != d * d {
            return Err(Error::validation("covariance must be d×d"));
        }
        let m = DMatrix::from_row_slice(d, d, covariance);
        if (&m - m.transpose()).amax() > 1e-12 {
            return Err(Error::validation("covariance is not symmetric"));
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("covariance is singular or not positive definite"))?;
        let l = chol.l();
        let det = l.diagonal().iter().map(|v| v * v).product();
        Ok(ThetaNorm { d, chol_l: l, det })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn norm_f64(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(&x[..self.d]);
        let y = self
            .chol_l
            .solve_lower_triangular(&v)
            .expect("Cholesky factor has a nonzero diagonal");
        y.norm()
    }

    pub fn norm(&self, x: &Point) -> f64 {
        let v: Vec<f64> = x[..self.d].iter().map(|&c| c as f64).collect();
        self.norm_f64(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::from_slice;

    #[test]
    fn srw_and_identity_norms() {
        let mut m = vec![0.0; 25];
        for i in 0..5 {
            m[i * 5 + i] = 0.2;
        }
        let n = ThetaNorm::new(&m, 5).unwrap();
        assert!((n.norm(&from_slice(&[1, 0, 0, 0, 0])) - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(n.norm(&from_slice(&[0, 0, 0, 0, 0])), 0.0);
        let mut id = vec![0.0; 25];
        for i in 0..5 {
            id[i * 5 + i] = 1.0;
        }
        let e = ThetaNorm::new(&id, 5).unwrap();
        assert!((e.norm(&from_slice(&[3, 4, 0, 0, 0])) - 5.0).abs() < 1e-12);
        assert!(ThetaNorm::new(&[1.0, 1.0, 1.0, 1.0], 2).is_err());
    }
}
