//! Full singular value decompositions of nalgebra matrices, computed by
//! faer. nalgebra's own SVD can return factors that do not recompose the
//! input when a singular value is close to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `m = u · diag(s) · vᵀ` with square orthogonal `u`, `v` and `s`
/// nonincreasing.
#[derive(Clone, Debug)]
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let (r, c) = m.shape();
        let f = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
        let svd = f.svd().map_err(|e| Error::Degenerate(format!("SVD did not converge: {e:?}")))?;
        let (u, v) = (svd.U(), svd.V());
        let s = svd.S().column_vector();
        Ok(Svd {
            u: DMatrix::from_fn(r, r, |i, j| u[(i, j)]),
            s: (0..r.min(c)).map(|i| s[i]).collect(),
            v: DMatrix::from_fn(c, c, |i, j| v[(i, j)]),
        })
    }

    pub fn max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `t`.
    pub fn rank(&self, t: f64) -> usize {
        self.s.iter().filter(|&&s| s > t && s > 0.0).count()
    }

    /// Projection of `x` onto the column space, with singular values at or
    /// below `t` treated as zero.
    pub fn project_range(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.u.nrows());
        for i in 0..self.rank(t) {
            let col = self.u.column(i);
            out += col * col.dot(x);
        }
        out
    }

    /// Projection of `x` onto the kernel.
    pub fn project_kernel(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.v.nrows());
        for i in self.rank(t)..self.v.ncols() {
            let col = self.v.column(i);
            out += col * col.dot(x);
        }
        out
    }

    /// Minimum-norm least-squares solution of `m y = b`.
    pub fn solve(&self, b: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.v.nrows());
        for i in 0..self.rank(t) {
            out += self.v.column(i) * (self.u.column(i).dot(b) / self.s[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recomposes_with_a_zero_singular_value() {
        // δ₀ of a gauge-transformed ∂Δ³, on which nalgebra's SVD is off by 2e-3.
        let m = DMatrix::from_column_slice(6, 4, &[
            -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.5446656285520901, 0.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.5446656285520901,
            0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.49799432226694124, 0.0, 0.9143120038449694, 0.9143120038449694,
        ]);
        let svd = Svd::new(&m).unwrap();
        let mut sigma = DMatrix::zeros(6, 4);
        for (i, s) in svd.s.iter().enumerate() {
            sigma[(i, i)] = *s;
        }
        assert!((&svd.u * sigma * svd.v.transpose() - &m).amax() < 1e-14);
        assert_eq!(svd.rank(1e-9 * svd.max()), 3);
        let ones = DVector::from_element(4, 1.0);
        assert!((&m * svd.project_kernel(&ones, 1e-9)).amax() < 1e-14);
    }

    #[test]
    fn least_squares() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let y = Svd::new(&m).unwrap().solve(&b, 1e-12);
        assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 2.0).abs() < 1e-14);
    }
}
