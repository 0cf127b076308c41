//! The meso-step operator restricted to one coarse-momentum sector, its
//! spectrum, dispersion scans and the naive continuum limit.
//!
//! Within sector `k̄` the basis is `(α, l)` for `α ∈ {R, L}` and
//! `l ∈ [-M_x/2, M_x/2)`, carrying momentum `k = k̄ + l N̄_x`; the flat index is
//! `α M_x + (l + M_x/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::automaton::wrap_index;
use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, unitary_eigen};
use crate::model::ModelSpec;
use crate::spectral::{MomentumField, energy_stats_forward, to_momentum, to_position};
use crate::wave::{WaveField, dirac_dispersion, meso_evolve, micro_step, momentum, plane_wave};

/// Largest `M_x` (sites per block) diagonalized densely by default.
pub const DEFAULT_DENSE_CAP: usize = 1024;

#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    /// `E_λ ∈ (-π/Δt, π/Δt]`, ascending, in units `1/ε`.
    pub energies: Vec<f64>,
    pub eigenvalues: Vec<C64>,
    /// Column `λ` is the eigenvector of `energies[λ]`.
    pub eigvecs: DMatrix<C64>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct MomentumBlock {
    pub k_bar: i64,
    pub n_sites: usize,
    pub m_x: usize,
    pub m_t: usize,
    pub matrix: DMatrix<C64>,
    /// Largest probability found outside the sector over all columns.
    pub leakage: f64,
    pub spectrum: Option<BlockSpectrum>,
}

impl MomentumBlock {
    pub fn dim(&self) -> usize {
        2 * self.m_x
    }

    pub fn n_coarse(&self) -> usize {
        self.n_sites / self.m_x
    }

    /// Offset `l ∈ [-M_x/2, M_x/2)` of flat position `pos` within one component.
    pub fn offset(&self, pos: usize) -> i64 {
        pos as i64 - (self.m_x / 2) as i64
    }

    /// Fine momentum index `k̄ + l N̄_x` for offset `l`.
    pub fn fine_momentum(&self, l: i64) -> i64 {
        self.k_bar + l * self.n_coarse() as i64
    }

    pub fn basis_index(&self, alpha: usize, l: i64) -> usize {
        alpha * self.m_x + (l + (self.m_x / 2) as i64) as usize
    }

    pub fn dt(&self) -> f64 {
        self.m_t as f64
    }

    pub fn spectrum(&self) -> Result<&BlockSpectrum> {
        self.spectrum.as_ref().ok_or_else(|| Error::invalid("block has not been diagonalized"))
    }
}

/// Assembles `W(q̄; Q, Q')` column by column: each basis plane wave is evolved
/// one meso step on the full lattice and read off in momentum space.
pub fn build_block(spec: &ModelSpec, k_bar: i64) -> Result<MomentumBlock> {
    let n = spec.n_sites();
    let m_x = spec.m_x();
    let n_coarse = spec.n_coarse();
    if n % m_x != 0 {
        return Err(Error::validation("N_x is not a multiple of M_x"));
    }
    let k_bar = wrap_index(k_bar, n_coarse);
    let mut block = MomentumBlock {
        k_bar,
        n_sites: n,
        m_x,
        m_t: spec.m_t(),
        matrix: DMatrix::zeros(2 * m_x, 2 * m_x),
        leakage: 0.0,
        spectrum: None,
    };
    let columns: Vec<(Vec<C64>, f64)> = (0..2 * m_x)
        .into_par_iter()
        .map(|col| {
            let (beta, pos) = (col / m_x, col % m_x);
            let k = block.fine_momentum(block.offset(pos));
            let mut m = MomentumField { right: vec![C64::new(0.0, 0.0); n], left: vec![C64::new(0.0, 0.0); n] };
            let slot = k.rem_euclid(n as i64) as usize;
            if beta == 0 {
                m.right[slot] = C64::new(1.0, 0.0);
            } else {
                m.left[slot] = C64::new(1.0, 0.0);
            }
            let mut field = to_position(&m, 0);
            meso_evolve(spec, &mut field, 1);
            let out = to_momentum(&field);
            let mut column = vec![C64::new(0.0, 0.0); 2 * m_x];
            for alpha in 0..2 {
                for p in 0..m_x {
                    column[alpha * m_x + p] = out.amp(block.fine_momentum(block.offset(p)), alpha);
                }
            }
            let outside: f64 = (0..n)
                .filter(|&q| (q as i64 - k_bar).rem_euclid(n_coarse as i64) != 0)
                .map(|q| out.right[q].norm_sqr() + out.left[q].norm_sqr())
                .sum();
            (column, outside)
        })
        .collect();
    for (col, (values, leak)) in columns.into_iter().enumerate() {
        block.matrix.column_mut(col).copy_from_slice(&values);
        block.leakage = block.leakage.max(leak);
    }
    Ok(block)
}

pub fn diagonalize_block(block: MomentumBlock) -> Result<MomentumBlock> {
    diagonalize_block_with_cap(block, DEFAULT_DENSE_CAP)
}

fn check_dense_cap(m_x: usize, cap: usize) -> Result<()> {
    if m_x > cap {
        return Err(Error::validation(format!(
            "dense diagonalization of a {}-dimensional block exceeds the cap of {cap} sites; \
             raise the cap or use the mean-energy dispersion mode",
            2 * m_x
        )));
    }
    Ok(())
}

/// Diagonalizes the block, refusing blocks with more than `cap` sites per component.
pub fn diagonalize_block_with_cap(mut block: MomentumBlock, cap: usize) -> Result<MomentumBlock> {
    check_dense_cap(block.m_x, cap)?;
    let defect = unitarity_defect(&block.matrix);
    if defect > 1e-8 {
        return Err(Error::Numerical(format!("block is not unitary: ‖W†W - 1‖ = {defect:e}")));
    }
    let eig = unitary_eigen(&block.matrix)?;
    if eig.residual > 1e-9 {
        return Err(Error::Numerical(format!("eigenvector residual {:e} exceeds 1e-9", eig.residual)));
    }
    let dt = block.dt();
    let energy = |z: &C64| {
        let e = -z.arg();
        if e <= -std::f64::consts::PI { std::f64::consts::PI / dt } else { e / dt }
    };
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| energy(&eig.eigenvalues[a]).total_cmp(&energy(&eig.eigenvalues[b])));
    let dim = block.dim();
    block.spectrum = Some(BlockSpectrum {
        energies: order.iter().map(|&i| energy(&eig.eigenvalues[i])).collect(),
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigvecs: DMatrix::from_fn(dim, dim, |r, c| eig.vectors[(r, order[c])]),
        residual: eig.residual,
    });
    Ok(block)
}

/// Position-space field `Σ_{α,Q} c_λ(α, Q) e^{i(q̄+Q)x}/√N_x` of eigenvector `lambda`.
pub fn eigenstate_field(block: &MomentumBlock, lambda: usize) -> Result<WaveField> {
    let spectrum = block.spectrum()?;
    if lambda >= block.dim() {
        return Err(Error::invalid(format!("eigenvector index {lambda} out of range 0..{}", block.dim())));
    }
    sector_field(block, &spectrum.eigvecs.column(lambda).iter().copied().collect::<Vec<_>>())
}

/// Field with sector coefficients `coeffs` in the block basis.
pub fn sector_field(block: &MomentumBlock, coeffs: &[C64]) -> Result<WaveField> {
    let n = block.n_sites;
    if coeffs.len() != block.dim() {
        return Err(Error::invalid("coefficient vector does not match the block dimension"));
    }
    let mut m = MomentumField { right: vec![C64::new(0.0, 0.0); n], left: vec![C64::new(0.0, 0.0); n] };
    for (i, c) in coeffs.iter().enumerate() {
        let slot = block.fine_momentum(block.offset(i % block.m_x)).rem_euclid(n as i64) as usize;
        if i < block.m_x {
            m.right[slot] = *c;
        } else {
            m.left[slot] = *c;
        }
    }
    Ok(to_position(&m, 0))
}

/// Sector coefficients of `field` in the block basis.
pub fn sector_coefficients(block: &MomentumBlock, field: &WaveField) -> Vec<C64> {
    let m = to_momentum(field);
    (0..block.dim())
        .map(|i| m.amp(block.fine_momentum(block.offset(i % block.m_x)), i / block.m_x))
        .collect()
}

/// Weights `|⟨v_λ|ψ⟩|²` of the field's sector component on each eigenvector.
pub fn energy_distribution(block: &MomentumBlock, field: &WaveField) -> Result<Vec<f64>> {
    let spectrum = block.spectrum()?;
    let c = nalgebra::DVector::from_vec(sector_coefficients(block, field));
    Ok((0..block.dim()).map(|l| spectrum.eigvecs.column(l).dotc(&c).norm_sqr()).collect())
}

/// Builds and diagonalizes the blocks for every listed `k̄` in parallel.
pub fn block_sweep(spec: &ModelSpec, k_bars: &[i64], cap: usize) -> Result<Vec<MomentumBlock>> {
    check_dense_cap(spec.m_x(), cap)?;
    k_bars
        .par_iter()
        .map(|&k| diagonalize_block_with_cap(build_block(spec, k)?, cap))
        .collect()
}

/// Naive continuum mass `m = π n̄ / 2` in units `1/ε`.
pub fn naive_mass(spec: &ModelSpec) -> f64 {
    std::f64::consts::FRAC_PI_2 * spec.mean_density()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DispersionSource {
    BlockEig,
    MeanEnergy,
    DiracReference,
}

impl DispersionSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DispersionSource::BlockEig => "block_eig",
            DispersionSource::MeanEnergy => "mean_energy",
            DispersionSource::DiracReference => "dirac_reference",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionPoint {
    /// Integer momentum: `k̄` for block points, `k` otherwise.
    pub k: i64,
    /// Momentum in units `1/ε`.
    pub momentum: f64,
    /// Energy in units `1/ε`.
    pub energy: f64,
    pub source: DispersionSource,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DispersionCurve {
    pub points: Vec<DispersionPoint>,
    pub mass: f64,
}

impl DispersionCurve {
    pub fn of(&self, source: DispersionSource) -> impl Iterator<Item = &DispersionPoint> {
        self.points.iter().filter(move |p| p.source == source)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    /// Smallest `|E|` of the block at each `k̄`.
    BlockLowest,
    /// `⟨H̃⟩` of the plane wave with the naive mass at each `k`.
    MeanEnergy,
}

pub fn dispersion_scan(spec: &ModelSpec, mode: ScanMode, momenta: &[i64]) -> Result<DispersionCurve> {
    dispersion_scan_with_cap(spec, mode, momenta, DEFAULT_DENSE_CAP)
}

pub fn dispersion_scan_with_cap(spec: &ModelSpec, mode: ScanMode, momenta: &[i64], cap: usize) -> Result<DispersionCurve> {
    let n = spec.n_sites();
    let mass = naive_mass(spec);
    let mut points: Vec<DispersionPoint> = match mode {
        ScanMode::BlockLowest => {
            let blocks = block_sweep(spec, momenta, cap)?;
            blocks
                .iter()
                .map(|b| {
                    let s = b.spectrum()?;
                    let e = s.energies.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
                    Ok(DispersionPoint {
                        k: b.k_bar,
                        momentum: momentum(n, b.k_bar),
                        energy: e,
                        source: DispersionSource::BlockEig,
                    })
                })
                .collect::<Result<_>>()?
        }
        ScanMode::MeanEnergy => momenta
            .par_iter()
            .map(|&k| {
                let stats = energy_stats_forward(spec, &plane_wave(n, k, mass))?;
                Ok(DispersionPoint {
                    k,
                    momentum: momentum(n, k),
                    energy: stats.h_tilde_mean,
                    source: DispersionSource::MeanEnergy,
                })
            })
            .collect::<Result<_>>()?,
    };
    let reference: Vec<DispersionPoint> = points
        .iter()
        .map(|p| DispersionPoint {
            energy: dirac_dispersion(p.momentum, mass),
            source: DispersionSource::DiracReference,
            ..*p
        })
        .collect();
    points.extend(reference);
    Ok(DispersionCurve { points, mass })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationReport {
    pub momentum: f64,
    pub mass: f64,
    /// `max_x |U(0)ψ_p - ψ_p - δψ_p|`.
    pub max_residual: f64,
    /// `‖U(0)ψ_p - ψ_p - δψ_p‖_2`.
    pub l2_residual: f64,
    /// `‖δψ_p‖_2`, the size of the leading correction itself.
    pub correction_norm: f64,
}

/// Compares one micro step at `t = 0` on the plane wave `ψ_p` with the
/// leading small-`p` expansion `ψ_p + δψ_p`.
pub fn perturbation_check(spec: &ModelSpec, k: i64, mass: f64) -> Result<PerturbationReport> {
    if mass == 0.0 {
        return Err(Error::invalid("the small-momentum expansion needs a nonzero mass"));
    }
    let n = spec.n_sites();
    let p = momentum(n, k);
    let psi = plane_wave(n, k, mass);
    let mut stepped = psi.clone();
    micro_step(spec, &mut stepped);

    let i = C64::new(0.0, 1.0);
    let spinor = [C64::new(1.0, 0.0), -i];
    let pref = 1.0 / (2.0 * n as f64).sqrt();
    let mut delta = psi.clone();
    delta.scale(-i * p * p / (2.0 * mass));
    let mut local = vec![false; n];
    for &x_sub in spec.scatter_columns(0) {
        for x in (x_sub..n).step_by(spec.m_x()) {
            local[x] = true;
        }
    }
    for x in 0..n {
        let e = C64::from_polar(1.0, p * x as f64);
        let mut bracket = i * p * e;
        if local[x] {
            bracket += (p / mass) * (1.0 - 2.0 * i * mass) * e;
        }
        delta.right_mut()[x] -= pref * bracket * spinor[0];
        delta.left_mut()[x] -= pref * bracket * spinor[1];
    }

    let mut residual = stepped.with_time_step(0);
    residual.add_scaled(C64::new(-1.0, 0.0), &psi);
    residual.add_scaled(C64::new(-1.0, 0.0), &delta);
    let max_residual = residual.right().iter().chain(residual.left()).map(|z| z.norm()).fold(0.0, f64::max);
    Ok(PerturbationReport {
        momentum: p,
        mass,
        max_residual,
        l2_residual: residual.norm_sqr().sqrt(),
        correction_norm: delta.norm_sqr().sqrt(),
    })
}

/// Least-squares slope of `log r` against `log p`.
pub fn convergence_order(reports: &[PerturbationReport]) -> f64 {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.momentum.abs().ln(), r.max_residual.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Eta, ScatterPattern, generate_pattern};
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_block_is_diagonal() {
        let spec = ModelSpec::free(48, 8, 3, Eta::PlusOne).unwrap();
        let block = build_block(&spec, 2).unwrap();
        assert!(block.leakage < 1e-24);
        for alpha in 0..2 {
            for l in -4..4 {
                let idx = block.basis_index(alpha, l);
                let q = momentum(48, block.fine_momentum(l));
                let sign = if alpha == 0 { -1.0 } else { 1.0 };
                let expect = C64::from_polar(1.0, sign * q * 3.0);
                assert_abs_diff_eq!((block.matrix[(idx, idx)] - expect).norm(), 0.0, epsilon = 1e-12);
            }
        }
        let off: f64 = block.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>() - 16.0;
        assert_abs_diff_eq!(off, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn saturated_pattern_has_zero_spectrum() {
        let pattern = generate_pattern(4, 2, 8, 0).unwrap();
        let spec = ModelSpec::new(16, 4, 2, Eta::PlusOne, pattern, "").unwrap();
        for k in -1..=2 {
            let b = diagonalize_block(build_block(&spec, k).unwrap()).unwrap();
            for e in &b.spectrum.unwrap().energies {
                assert_abs_diff_eq!(*e, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigenstates_evolve_by_phase() {
        let pattern = generate_pattern(8, 5, 9, 4).unwrap();
        let spec = ModelSpec::new(32, 8, 5, Eta::PlusOne, pattern, "").unwrap();
        let b = diagonalize_block(build_block(&spec, 1).unwrap()).unwrap();
        let s = b.spectrum().unwrap();
        for lambda in 0..b.dim() {
            let f0 = eigenstate_field(&b, lambda).unwrap();
            assert_abs_diff_eq!(f0.norm_sqr(), 1.0, epsilon = 1e-12);
            let mut f = f0.clone();
            meso_evolve(&spec, &mut f, 1);
            let mut expect = f0.clone();
            expect.scale(C64::from_polar(1.0, -s.energies[lambda] * 5.0));
            assert!(f.with_time_step(0).max_diff(&expect) < 1e-10);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let spec = ModelSpec::free(16, 16, 1, Eta::PlusOne).unwrap();
        let block = build_block(&spec, 0).unwrap();
        assert!(matches!(diagonalize_block_with_cap(block, 8), Err(Error::Validation(_))));
    }

    #[test]
    fn naive_mass_values() {
        assert_eq!(naive_mass(&ModelSpec::free(16, 16, 4, Eta::PlusOne).unwrap()), 0.0);
        let b = crate::model::preset_model_b().unwrap();
        assert_abs_diff_eq!(naive_mass(&b), std::f64::consts::PI / 34.0, epsilon = 1e-15);
    }

    #[test]
    fn block_lowest_free_is_massless() {
        let spec = ModelSpec::free(64, 8, 1, Eta::PlusOne).unwrap();
        let curve = dispersion_scan(&spec, ScanMode::BlockLowest, &[0, 1, 2, 3]).unwrap();
        for p in curve.of(DispersionSource::BlockEig) {
            assert_abs_diff_eq!(p.energy.abs(), p.momentum.abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_momentum_mean_energy_vanishes() {
        let spec = crate::model::preset_model_b().unwrap();
        let curve = dispersion_scan(&spec, ScanMode::MeanEnergy, &[0]).unwrap();
        let p = curve.of(DispersionSource::MeanEnergy).next().unwrap();
        assert_abs_diff_eq!(p.energy, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_mass_rejected() {
        let spec = ModelSpec::free(16, 16, 1, Eta::PlusOne).unwrap();
        assert!(matches!(perturbation_check(&spec, 1, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unscattered_residual_is_transport_error() {
        let pattern = ScatterPattern::from_points(vec![(1, 3)], 0).unwrap();
        let spec = ModelSpec::new(1024, 8, 2, Eta::PlusOne, pattern, "").unwrap();
        let r1 = perturbation_check(&spec, 4, 0.3).unwrap();
        let r2 = perturbation_check(&spec, 2, 0.3).unwrap();
        let order = (r1.max_residual / r2.max_residual).log2();
        assert!(order > 1.7, "order {order}");
    }
}
