//! Small dense symmetric linear algebra: Cholesky and cyclic Jacobi.

use crate::error::{Error, Result};

/// Symmetric matrix stored as its packed lower triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    lower: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("matrix dimension must be at least 1"));
        }
        Ok(Self {
            n,
            lower: vec![0.0; n * (n + 1) / 2],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(d.len())?;
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        Ok(m)
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle (`j <= i`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..=i {
                m.lower[idx(i, j)] = f(i, j);
            }
        }
        Ok(m)
    }

    /// From a dense row-major square matrix; the upper triangle must mirror the lower one.
    pub fn from_dense(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::arg("dense matrix has the wrong number of entries"));
        }
        for i in 0..n {
            for j in 0..i {
                let (x, y) = (a[i * n + j], a[j * n + i]);
                if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                    return Err(Error::arg(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Self::from_fn(n, |i, j| a[i * n + j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.lower[idx(i, j)]
        } else {
            self.lower[idx(j, i)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if j <= i {
            self.lower[idx(i, j)] = v;
        } else {
            self.lower[idx(j, i)] = v;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`, stored dense row-major.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

pub fn cholesky(a: &SymMatrix) -> Result<Cholesky> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Decomposition { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(Cholesky { n, l })
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..=i).map(|k| self.l[i * n + k] * z[k]).sum())
            .collect()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| (0..=j).map(|k| self.l[i * n + k] * self.l[j * n + k]).sum())
            .expect("dimension is at least 1")
    }

    /// Dense inverse of `A`.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cols.push(self.solve(&e));
        }
        SymMatrix::from_fn(n, |i, j| 0.5 * (cols[j][i] + cols[i][j])).expect("n >= 1")
    }
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted ascending.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below `1e-12` times
/// the matrix norm (absolute `1e-12` for the zero matrix).
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut m = a.to_dense();
    let scale = a.frobenius().max(1.0);
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = off(&m) <= JACOBI_TOL * scale;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
        sweep += 1;
        converged = off(&m) <= JACOBI_TOL * scale;
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi eigenvalue iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
