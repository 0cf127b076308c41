//! Pure-state density matrices and their coarse grainings over `Δx`
//! intervals (position) or over `Q = 2πl/Δx` (momentum).
//!
//! Fine matrices are indexed by `α N_x + x` (or `α N_x + (k mod N_x)`), coarse
//! ones by `α N̄_x + j̄` (or `α N̄_x + (k̄ mod N̄_x)`) where `x̄ = j̄ Δx`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::spectral::to_momentum;
use crate::wave::WaveField;

/// Largest chain for which the fine density matrix is materialized.
pub const DENSE_DENSITY_CAP: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Position,
    Momentum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub basis: Basis,
    pub n_sites: usize,
    pub data: DMatrix<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseDensity {
    pub basis: Basis,
    pub n_coarse: usize,
    pub data: DMatrix<C64>,
}

fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn purity_defect(m: &DMatrix<C64>) -> f64 {
    (m * m - m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl DensityMatrix {
    pub fn trace(&self) -> C64 {
        trace(&self.data)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    /// `‖ρ² - ρ‖_max`.
    pub fn purity_defect(&self) -> f64 {
        purity_defect(&self.data)
    }

    pub fn get(&self, alpha: usize, a: usize, beta: usize, b: usize) -> C64 {
        self.data[(alpha * self.n_sites + a, beta * self.n_sites + b)]
    }
}

impl CoarseDensity {
    pub fn trace(&self) -> C64 {
        trace(&self.data)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    pub fn purity_defect(&self) -> f64 {
        purity_defect(&self.data)
    }

    pub fn get(&self, alpha: usize, a: usize, beta: usize, b: usize) -> C64 {
        self.data[(alpha * self.n_coarse + a, beta * self.n_coarse + b)]
    }

    /// `Tr ρ(a, a)` summed over the internal index, for every coarse point.
    pub fn diagonal_weights(&self) -> Vec<f64> {
        (0..self.n_coarse).map(|a| (self.get(0, a, 0, a) + self.get(1, a, 1, a)).re).collect()
    }
}

fn outer(v: &[C64]) -> DMatrix<C64> {
    let col = nalgebra::DVector::from_column_slice(v);
    &col * col.adjoint()
}

/// `ρ = ψψ†` in the requested basis. Refuses chains longer than
/// [`DENSE_DENSITY_CAP`]; use the `*_from_field` functions there.
pub fn density_from_field(field: &WaveField, basis: Basis) -> Result<DensityMatrix> {
    let n = field.n_sites();
    if n > DENSE_DENSITY_CAP {
        return Err(Error::validation(format!(
            "a {0} x {0} density matrix exceeds the cap of {DENSE_DENSITY_CAP} sites; \
             use the direct coarse-graining functions",
            2 * n
        )));
    }
    let stacked: Vec<C64> = match basis {
        Basis::Position => field.right().iter().chain(field.left()).copied().collect(),
        Basis::Momentum => {
            let m = to_momentum(field);
            m.right.into_iter().chain(m.left).collect()
        }
    };
    Ok(DensityMatrix { basis, n_sites: n, data: outer(&stacked) })
}

fn check_grid(n_sites: usize, spec: &ModelSpec) -> Result<()> {
    if n_sites != spec.n_sites() {
        return Err(Error::invalid(format!(
            "density matrix has {n_sites} sites, model has {}",
            spec.n_sites()
        )));
    }
    Ok(())
}

/// `ρ̄(x̄, x̄') = Σ_ξ ρ(x̄ + ξ, x̄' + ξ)`.
pub fn coarse_position(rho: &DensityMatrix, spec: &ModelSpec) -> Result<CoarseDensity> {
    if rho.basis != Basis::Position {
        return Err(Error::invalid("coarse_position needs a position-basis density matrix"));
    }
    check_grid(rho.n_sites, spec)?;
    let (m_x, nb) = (spec.m_x(), spec.n_coarse());
    let data = DMatrix::from_fn(2 * nb, 2 * nb, |r, c| {
        let (alpha, j, beta, jp) = (r / nb, r % nb, c / nb, c % nb);
        (0..m_x).map(|h| rho.get(alpha, j * m_x + h, beta, jp * m_x + h)).sum()
    });
    Ok(CoarseDensity { basis: Basis::Position, n_coarse: nb, data })
}

/// [`coarse_position`] of `ψψ†` without forming the fine matrix.
pub fn coarse_position_from_field(field: &WaveField, spec: &ModelSpec) -> Result<CoarseDensity> {
    check_grid(field.n_sites(), spec)?;
    let (m_x, nb) = (spec.m_x(), spec.n_coarse());
    let data = DMatrix::from_fn(2 * nb, 2 * nb, |r, c| {
        let (alpha, j, beta, jp) = (r / nb, r % nb, c / nb, c % nb);
        (0..m_x).map(|h| field.get(j * m_x + h, alpha) * field.get(jp * m_x + h, beta).conj()).sum()
    });
    Ok(CoarseDensity { basis: Basis::Position, n_coarse: nb, data })
}

/// Unitary `N̄_x`-point DFT matrix, block diagonal in the internal index.
fn coarse_dft(nb: usize) -> DMatrix<C64> {
    let norm = 1.0 / (nb as f64).sqrt();
    DMatrix::from_fn(2 * nb, 2 * nb, |r, c| {
        if r / nb != c / nb {
            return C64::new(0.0, 0.0);
        }
        let phase = -std::f64::consts::TAU * ((r % nb) * (c % nb)) as f64 / nb as f64;
        C64::from_polar(norm, phase)
    })
}

/// `ρ̄(q̄, q̄') = N̄_x^{-1} Σ_{x̄,x̄'} e^{-i(q̄x̄ - q̄'x̄')} ρ̄(x̄, x̄')`.
pub fn coarse_momentum_fourier(rho_bar: &CoarseDensity) -> Result<CoarseDensity> {
    if rho_bar.basis != Basis::Position {
        return Err(Error::invalid("coarse_momentum_fourier needs a position-basis coarse density"));
    }
    let f = coarse_dft(rho_bar.n_coarse);
    let data = &f * &rho_bar.data * f.adjoint();
    Ok(CoarseDensity { basis: Basis::Momentum, n_coarse: rho_bar.n_coarse, data })
}

/// Inverse of [`coarse_momentum_fourier`].
pub fn coarse_position_fourier(rho_bar: &CoarseDensity) -> Result<CoarseDensity> {
    if rho_bar.basis != Basis::Momentum {
        return Err(Error::invalid("coarse_position_fourier needs a momentum-basis coarse density"));
    }
    let f = coarse_dft(rho_bar.n_coarse);
    let data = f.adjoint() * &rho_bar.data * &f;
    Ok(CoarseDensity { basis: Basis::Position, n_coarse: rho_bar.n_coarse, data })
}

/// `ρ̂(q̄, q̄') = Σ_Q ρ(q̄ + Q, q̄' + Q)`.
pub fn coarse_in_momentum(rho: &DensityMatrix, spec: &ModelSpec) -> Result<CoarseDensity> {
    if rho.basis != Basis::Momentum {
        return Err(Error::invalid("coarse_in_momentum needs a momentum-basis density matrix"));
    }
    check_grid(rho.n_sites, spec)?;
    let (m_x, nb) = (spec.m_x(), spec.n_coarse());
    let data = DMatrix::from_fn(2 * nb, 2 * nb, |r, c| {
        let (alpha, k, beta, kp) = (r / nb, r % nb, c / nb, c % nb);
        (0..m_x).map(|l| rho.get(alpha, k + l * nb, beta, kp + l * nb)).sum()
    });
    Ok(CoarseDensity { basis: Basis::Momentum, n_coarse: nb, data })
}

/// [`coarse_in_momentum`] of `ψψ†` without forming the fine matrix.
pub fn coarse_in_momentum_from_field(field: &WaveField, spec: &ModelSpec) -> Result<CoarseDensity> {
    check_grid(field.n_sites(), spec)?;
    let (m_x, nb) = (spec.m_x(), spec.n_coarse());
    let m = to_momentum(field);
    let amp = |alpha: usize, k: usize| if alpha == 0 { m.right[k] } else { m.left[k] };
    let data = DMatrix::from_fn(2 * nb, 2 * nb, |r, c| {
        let (alpha, k, beta, kp) = (r / nb, r % nb, c / nb, c % nb);
        (0..m_x).map(|l| amp(alpha, k + l * nb) * amp(beta, kp + l * nb).conj()).sum()
    });
    Ok(CoarseDensity { basis: Basis::Momentum, n_coarse: nb, data })
}

/// Mean occupations `w̄_R(x̄)`, `w̄_L(x̄)` of each `Δx` interval.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseOccupations {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl CoarseOccupations {
    pub fn total(&self) -> f64 {
        self.right.iter().chain(&self.left).sum()
    }
}

pub fn coarse_occupations(cd: &CoarseDensity) -> Result<CoarseOccupations> {
    if cd.basis != Basis::Position {
        return Err(Error::invalid("occupations need a position-basis coarse density"));
    }
    let nb = cd.n_coarse;
    Ok(CoarseOccupations {
        right: (0..nb).map(|j| cd.get(0, j, 0, j).re).collect(),
        left: (0..nb).map(|j| cd.get(1, j, 1, j).re).collect(),
    })
}

/// `N_x / (4 M_x M_t)`; a low-energy description of the coarse degrees of
/// freedom needs this ratio to be large.
pub fn scale_separation(spec: &ModelSpec) -> f64 {
    spec.n_sites() as f64 / (4 * spec.m_x() * spec.m_t()) as f64
}
