//! Dense symmetric matrices and a cyclic Jacobi eigensolver.

use crate::error::{Error, Result};
use crate::Real;

/// Square symmetric matrix stored in full row-major form.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Fails if `rows` is not square or not symmetric to within `1e-12` relative.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        let mut m = Self::zeros(n);
        let scale = rows.iter().flatten().fold(T::one(), |acc, x| acc.max(x.abs()));
        let tol = T::from_f64_lossy(1e-12).max(T::epsilon() * T::from_f64_lossy(8.0)) * scale;
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if (x - rows[j][i]).abs() > tol {
                    return Err(Error::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
                }
                m.data[i * n + j] = x;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[T]>::to_vec).collect()
    }

    pub fn frobenius_distance(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)).sqrt()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &a| acc + a * a).sqrt()
    }

    fn off_diagonal_norm(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let x = self.get(i, j);
                acc += x * x;
            }
        }
        (acc + acc).sqrt()
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        let e = jacobi_eigen(self, JacobiOptions::default())?;
        Ok(e.values.iter().copied().fold(T::infinity(), T::min))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct JacobiOptions<T> {
    /// Stop once the off-diagonal Frobenius norm is below `tol` times the matrix norm.
    pub tol: T,
    pub max_sweeps: usize,
}

impl<T: Real> Default for JacobiOptions<T> {
    fn default() -> Self {
        Self { tol: T::from_f64_lossy(1e-12).max(T::epsilon() * T::from_f64_lossy(4.0)), max_sweeps: 60 }
    }
}

/// Eigenpairs `A = V diag(values) V^T`; column `k` of `vectors` pairs with `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    /// Row-major `n x n`; columns are eigenvectors.
    pub vectors: Vec<T>,
    pub sweeps: usize,
}

impl<T: Real> Eigen<T> {
    pub fn vector_entry(&self, row: usize, k: usize) -> T {
        self.vectors[row * self.values.len() + k]
    }

    /// `V diag(f(values)) V^T`.
    pub fn reconstruct(&self, f: impl Fn(T) -> T) -> SymMatrix<T> {
        let n = self.values.len();
        let scaled: Vec<(usize, T)> =
            self.values.iter().enumerate().map(|(k, &l)| (k, f(l))).filter(|&(_, w)| w != T::zero()).collect();
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            let vi = &self.vectors[i * n..(i + 1) * n];
            for j in i..n {
                let vj = &self.vectors[j * n..(j + 1) * n];
                let mut acc = T::zero();
                for &(k, w) in &scaled {
                    acc += w * vi[k] * vj[k];
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

pub fn jacobi_eigen<T: Real>(a: &SymMatrix<T>, opts: JacobiOptions<T>) -> Result<Eigen<T>> {
    let n = a.n;
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    run_jacobi(a.clone(), v, opts)
}

/// Jacobi started in a previous eigenbasis `basis` (row-major, orthonormal columns).
/// When `a` is close to the matrix that produced `basis`, `basis^T a basis` is
/// nearly diagonal and few sweeps are needed.
pub fn jacobi_eigen_warm<T: Real>(a: &SymMatrix<T>, basis: &[T], opts: JacobiOptions<T>) -> Result<Eigen<T>> {
    let n = a.n;
    if basis.len() != n * n {
        return Err(Error::InvalidInput("warm-start basis has the wrong size".into()));
    }
    // b = basis^T a basis
    let mut av = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a.data[i * n + k];
            if aik == T::zero() {
                continue;
            }
            let row = &basis[k * n..(k + 1) * n];
            let out = &mut av[i * n..(i + 1) * n];
            for (o, &b) in out.iter_mut().zip(row) {
                *o += aik * b;
            }
        }
    }
    let mut b = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = T::zero();
            for k in 0..n {
                acc += basis[k * n + i] * av[k * n + j];
            }
            b.set(i, j, acc);
        }
    }
    run_jacobi(b, basis.to_vec(), opts)
}

fn run_jacobi<T: Real>(mut a: SymMatrix<T>, mut v: Vec<T>, opts: JacobiOptions<T>) -> Result<Eigen<T>> {
    let n = a.n;
    let scale = a.frobenius_norm().max(T::min_positive_value());
    let two = T::one() + T::one();
    let mut sweeps = 0;
    loop {
        if a.off_diagonal_norm() <= opts.tol * scale {
            break;
        }
        if sweeps == opts.max_sweeps {
            return Err(Error::ResourceLimit(format!("Jacobi did not converge in {sweeps} sweeps")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.data[p * n + q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let (app, aqq) = (a.data[p * n + p], a.data[q * n + q]);
                let theta = (aqq - app) / (two * apq);
                let t = {
                    let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.data[k * n + p];
                    let akq = a.data[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a.data[k * n + p] = new_kp;
                    a.data[p * n + k] = new_kp;
                    a.data[k * n + q] = new_kq;
                    a.data[q * n + k] = new_kq;
                }
                a.data[p * n + p] = app - t * apq;
                a.data[q * n + q] = aqq + t * apq;
                a.data[p * n + q] = T::zero();
                a.data[q * n + p] = T::zero();
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a.data[i * n + i]).collect();
    Ok(Eigen { values, vectors: v, sweeps })
}

/// Nearest positive semidefinite matrix in Frobenius norm, plus the eigenbasis used.
pub fn project_psd<T: Real>(a: &SymMatrix<T>, warm: Option<&[T]>) -> Result<(SymMatrix<T>, Eigen<T>)> {
    let opts = JacobiOptions::default();
    let e = match warm {
        Some(basis) => jacobi_eigen_warm(a, basis, opts)?,
        None => jacobi_eigen(a, opts)?,
    };
    Ok((e.reconstruct(|l| l.max(T::zero())), e))
}
