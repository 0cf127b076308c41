//! Eigen-decomposition of dense unitary matrices.
//!
//! A unitary `U` with eigenvalues `e^{iθ}` is diagonalized through the
//! Hermitian pencil `H(φ) = (e^{-iφ} U + e^{iφ} U†)/2`, whose eigenvalues are
//! `cos(θ - φ)` on the same eigenvectors. Clusters of nearly equal `cos` values
//! (two phases mirrored about `φ`, or phases near `φ` / `φ + π`) are split by
//! a second pencil on the projected block with `φ + π/2`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const PENCIL_ANGLE: f64 = 0.723_606_797_749_979;
const CLUSTER_GAP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Rayleigh quotients `v† U v`.
    pub eigenvalues: Vec<C64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: DMatrix<C64>,
    /// `max_i ‖U v_i - λ_i v_i‖`.
    pub residual: f64,
}

/// `‖U†U - 1‖_max`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

fn pencil(u: &DMatrix<C64>, angle: f64) -> DMatrix<C64> {
    let a = C64::from_polar(0.5, -angle);
    let mut h = u * a;
    h += u.adjoint() * a.conj();
    // Exact Hermitian symmetry for the symmetric solver.
    let n = h.nrows();
    for i in 0..n {
        h[(i, i)].im = 0.0;
        for j in 0..i {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Eigenvectors of `H(angle)` sorted by eigenvalue, with the sorted values.
fn sorted_hermitian_eigen(h: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn unitary_eigen(u: &DMatrix<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::invalid(format!("matrix is {} x {}, not square", n, u.ncols())));
    }
    if n == 0 {
        return Ok(UnitaryEigen { eigenvalues: Vec::new(), vectors: DMatrix::zeros(0, 0), residual: 0.0 });
    }
    let (h_values, mut vectors) = sorted_hermitian_eigen(pencil(u, PENCIL_ANGLE));

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && h_values[end] - h_values[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        if end - start > 1 {
            let basis = vectors.columns(start, end - start).into_owned();
            let projected = basis.adjoint() * u * &basis;
            let (_, rot) = sorted_hermitian_eigen(pencil(&projected, PENCIL_ANGLE + std::f64::consts::FRAC_PI_2));
            let refined = basis * rot;
            vectors.columns_mut(start, end - start).copy_from(&refined);
        }
        start = end;
    }

    let uv = u * &vectors;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    for i in 0..n {
        let v = vectors.column(i);
        let lambda = v.dotc(&uv.column(i));
        residual = residual.max((uv.column(i) - v * lambda).norm());
        eigenvalues.push(lambda);
    }
    Ok(UnitaryEigen { eigenvalues, vectors, residual })
}
