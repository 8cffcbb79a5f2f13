use crate::error::{Error, Result};

/// Power sums over a fixed set of coordinates: `sum x_i`, `sum x_i x_j` and
/// `sum (x_i x_j)^2` for every `i <= j`.
///
/// Merging is plain addition, so two accumulators over disjoint samples merge
/// to the accumulator of the union up to floating-point reassociation.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMoments {
    dim: usize,
    count: u64,
    sum: Vec<f64>,
    prod: Vec<f64>,
    prod_sq: Vec<f64>,
}

fn packed(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl CrossMoments {
    pub fn new(dim: usize) -> Self {
        let pairs = dim * (dim + 1) / 2;
        Self {
            dim,
            count: 0,
            sum: vec![0.0; dim],
            prod: vec![0.0; pairs],
            prod_sq: vec![0.0; pairs],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "observation has wrong dimension");
        self.count += 1;
        let mut p = 0;
        for i in 0..self.dim {
            self.sum[i] += x[i];
            for j in i..self.dim {
                let y = x[i] * x[j];
                self.prod[p] += y;
                self.prod_sq[p] += y * y;
                p += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &CrossMoments) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::IncompatibleMerge);
        }
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.prod.iter_mut().zip(&other.prod) {
            *a += b;
        }
        for (a, b) in self.prod_sq.iter_mut().zip(&other.prod_sq) {
            *a += b;
        }
        Ok(())
    }

    fn need_two(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(Error::TooFew {
                what: "observations",
                min: 2,
                got: self.count,
            });
        }
        Ok(self.count as f64)
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.count as f64
    }

    /// Unbiased sample covariance of coordinates `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.need_two()?;
        let p = packed(self.dim, i, j);
        Ok((self.prod[p] - self.sum[i] * self.sum[j] / n) / (n - 1.0))
    }

    /// Standard error of [`covariance`](Self::covariance), estimated from the
    /// sample variance of the products `x_i x_j`.
    pub fn covariance_stderr(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.need_two()?;
        let p = packed(self.dim, i, j);
        let var = (self.prod_sq[p] - self.prod[p] * self.prod[p] / n) / (n - 1.0);
        Ok((var.max(0.0) / n).sqrt())
    }

    pub fn variance(&self, i: usize) -> Result<f64> {
        self.covariance(i, i)
    }

    pub fn mean_stderr(&self, i: usize) -> Result<f64> {
        let n = self.need_two()?;
        Ok((self.variance(i)?.max(0.0) / n).sqrt())
    }
}
