//! Dense solver for the theta program with pairwise nonnegativity:
//!
//! ```text
//! max  sum_i M[0,i]
//! s.t. M PSD, M[0,0] = 1, M[i,i] = M[0,i], M[i,j] = 0 on edges, M[i,j] >= 0
//! ```
//!
//! over the `(N+1) x (N+1)` Gram matrix of `v0, v1, ..., vN`.
//!
//! The solver is ADMM on the split `X in P` (the polyhedral constraints, which have a
//! closed-form Euclidean projection) and `Z in PSD` (eigenvalue clipping), with
//! over-relaxation and residual-balanced penalty updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{project_psd, SymMatrix};
use crate::reduction::CloudGraph;
use crate::Real;

#[derive(Clone, Copy, Debug)]
pub struct ThetaOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Largest vertex count accepted.
    pub dense_limit: usize,
    /// Initial ADMM penalty.
    pub rho: T,
    /// Over-relaxation factor in `(0, 2)`.
    pub relax: T,
    /// Iterations over which the objective must be stable before stopping.
    pub window: usize,
}

impl<T: Real> Default for ThetaOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::from_f64_lossy(1e-6),
            max_iter: 200_000,
            dense_limit: 512,
            rho: T::one(),
            relax: T::from_f64_lossy(1.6),
            window: 50,
        }
    }
}

impl<T: Real> ThetaOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals<T> {
    /// `max(0, -lambda_min(M))`.
    pub psd: T,
    /// Largest violation among `M[0,0] = 1`, `M[i,i] = M[0,i]` and edge zeros.
    pub equality: T,
    /// Largest `max(0, -M[i,j])`.
    pub negativity: T,
}

impl<T: Real> Residuals<T> {
    pub fn max(&self) -> T {
        self.psd.max(self.equality).max(self.negativity)
    }
}

#[derive(Clone, Debug)]
pub struct ThetaSolution<T> {
    pub value: T,
    pub gram: SymMatrix<T>,
    pub residuals: Residuals<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real + Serialize> ThetaSolution<T> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value": self.value,
            "residuals": self.residuals,
            "iterations": self.iterations,
            "converged": self.converged,
        })
    }
}

/// Objective `sum_i M[0,i]` of a candidate Gram matrix.
pub fn objective<T: Real>(m: &SymMatrix<T>) -> T {
    (1..m.n()).fold(T::zero(), |acc, i| acc + m.get(0, i))
}

/// Constraint violations of a candidate Gram matrix for graph `g`.
pub fn residuals<T: Real>(m: &SymMatrix<T>, g: &Graph) -> Result<Residuals<T>> {
    let n = g.vertex_count();
    if m.n() != n + 1 {
        return Err(Error::InvalidInput(format!("Gram matrix is {0}x{0}, graph needs {1}", m.n(), n + 1)));
    }
    let mut equality = (m.get(0, 0) - T::one()).abs();
    let mut negativity = T::zero();
    for i in 1..=n {
        equality = equality.max((m.get(i, i) - m.get(0, i)).abs());
        negativity = negativity.max(-m.get(0, i));
        for j in i + 1..=n {
            let x = m.get(i, j);
            if g.has_edge(i - 1, j - 1) {
                equality = equality.max(x.abs());
            } else {
                negativity = negativity.max(-x);
            }
        }
    }
    let psd = (-m.min_eigenvalue()?).max(T::zero());
    Ok(Residuals { psd, equality, negativity: negativity.max(T::zero()) })
}

/// Euclidean projection onto the polyhedral constraints.
fn project_polyhedral<T: Real>(v: &SymMatrix<T>, g: &Graph) -> SymMatrix<T> {
    let n = v.n();
    let three = T::from_f64_lossy(3.0);
    let two = T::one() + T::one();
    let mut x = SymMatrix::zeros(n);
    x.set(0, 0, T::one());
    for i in 1..n {
        // M[i,i] counts once and M[0,i] twice in the Frobenius norm
        let t = ((v.get(i, i) + two * v.get(0, i)) / three).max(T::zero());
        x.set(i, i, t);
        x.set(0, i, t);
        for j in i + 1..n {
            let val = if g.has_edge(i - 1, j - 1) { T::zero() } else { v.get(i, j).max(T::zero()) };
            x.set(i, j, val);
        }
    }
    x
}

fn combine<T: Real>(a: &SymMatrix<T>, wa: T, b: &SymMatrix<T>, wb: T) -> SymMatrix<T> {
    let n = a.n();
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            out.set(i, j, wa * a.get(i, j) + wb * b.get(i, j));
        }
    }
    out
}

pub fn solve_theta<T: Real>(g: &Graph, opts: &ThetaOptions<T>) -> Result<ThetaSolution<T>> {
    let n = g.vertex_count();
    if n > opts.dense_limit {
        return Err(Error::TooLarge { size: n, limit: opts.dense_limit });
    }
    let dim = n + 1;
    let half = T::from_f64_lossy(0.5);
    let mut cost = SymMatrix::zeros(dim);
    for i in 1..dim {
        cost.set(0, i, half);
    }

    let mut rho = opts.rho;
    let mut z = SymMatrix::<T>::zeros(dim);
    let mut u = SymMatrix::<T>::zeros(dim);
    let mut basis: Option<Vec<T>> = None;
    let mut history: Vec<T> = Vec::new();
    let mut best: Option<(SymMatrix<T>, Residuals<T>)> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let target = combine(&combine(&z, T::one(), &u, -T::one()), T::one(), &cost, T::one() / rho);
        let x = project_polyhedral(&target, g);
        let x_hat = combine(&x, opts.relax, &z, T::one() - opts.relax);
        let (z_new, eig) = project_psd(&combine(&x_hat, T::one(), &u, T::one()), basis.as_deref())?;
        basis = Some(eig.vectors);
        u = combine(&combine(&u, T::one(), &x_hat, T::one()), T::one(), &z_new, -T::one());
        let primal = x.frobenius_distance(&z_new);
        let dual = rho * z_new.frobenius_distance(&z);
        z = z_new;
        history.push(objective(&x));

        let stable = history.len() > opts.window && {
            let recent = &history[history.len() - opts.window - 1..];
            let (lo, hi) =
                recent.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            hi - lo < opts.tol
        };
        if primal < opts.tol && dual < opts.tol && stable {
            let repaired = project_polyhedral(&z, g);
            let res = residuals(&repaired, g)?;
            let ok = res.max() < opts.tol;
            best = Some((repaired, res));
            if ok {
                converged = true;
                break;
            }
        }

        if iterations % 50 == 0 {
            let ten = T::from_f64_lossy(10.0);
            let two = T::one() + T::one();
            if primal > ten * dual {
                rho *= two;
                u = combine(&u, half, &u, T::zero());
            } else if dual > ten * primal {
                rho *= half;
                u = combine(&u, two, &u, T::zero());
            }
        }
    }

    let (gram, res) = match best {
        Some(b) if converged => b,
        _ => {
            let repaired = project_polyhedral(&z, g);
            let res = residuals(&repaired, g)?;
            (repaired, res)
        }
    };
    Ok(ThetaSolution { value: objective(&gram), gram, residuals: res, iterations, converged })
}

/// Trivial clique-cover bound: one clique per cloud.
pub fn clique_cover_upper_bound(g: &CloudGraph) -> usize {
    g.cloud_count()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// For a unit `v0` and pairwise orthogonal `vs` with `<v,v> = <v,v0>`, checks
/// `sum <v0,v> <= 1 + tol`. Hypothesis violations beyond `tol` are an error.
pub fn check_clique_bound<T: Real>(v0: &[T], vs: &[Vec<T>], tol: T) -> Result<bool> {
    if vs.iter().any(|v| v.len() != v0.len()) {
        return Err(Error::InvalidInput("vectors have different dimensions".into()));
    }
    if (dot(v0, v0) - T::one()).abs() > tol {
        return Err(Error::InvalidInput("v0 is not a unit vector".into()));
    }
    for (i, v) in vs.iter().enumerate() {
        if (dot(v, v) - dot(v, v0)).abs() > tol {
            return Err(Error::InvalidInput(format!("vector {i} violates <v,v> = <v,v0>")));
        }
        for w in &vs[i + 1..] {
            if dot(v, w).abs() > tol {
                return Err(Error::InvalidInput("vectors are not pairwise orthogonal".into()));
            }
        }
    }
    let total = vs.iter().fold(T::zero(), |acc, v| acc + dot(v0, v));
    Ok(total <= T::one() + tol)
}
