//! Discrete Fourier analysis, momentum distributions, transition elements
//! and their frequency spectra, and `H̃ = sin(HΔt)/Δt` statistics.

use std::cell::RefCell;

use num_complex::Complex64 as C64;
use rustfft::{FftDirection, FftPlanner};

use crate::automaton::wrap_index;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::wave::WaveField;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform(data: &mut [C64], direction: FftDirection) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(data.len(), direction));
    fft.process(data);
    let scale = 1.0 / (data.len() as f64).sqrt();
    data.iter_mut().for_each(|z| *z *= scale);
}

/// Unitary DFT `ψ(k) = N^{-1/2} Σ_j e^{-2πijk/N} ψ(j)`.
pub fn dft(input: &[C64]) -> Vec<C64> {
    let mut v = input.to_vec();
    transform(&mut v, FftDirection::Forward);
    v
}

/// Inverse of [`dft`].
pub fn idft(input: &[C64]) -> Vec<C64> {
    let mut v = input.to_vec();
    transform(&mut v, FftDirection::Inverse);
    v
}

/// Momentum-space amplitudes stored at index `k mod N_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumField {
    pub right: Vec<C64>,
    pub left: Vec<C64>,
}

impl MomentumField {
    pub fn n_sites(&self) -> usize {
        self.right.len()
    }

    /// Amplitude of component `alpha` (0 = R, 1 = L) at integer momentum `k`.
    pub fn amp(&self, k: i64, alpha: usize) -> C64 {
        let i = k.rem_euclid(self.n_sites() as i64) as usize;
        if alpha == 0 {
            self.right[i]
        } else {
            self.left[i]
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.right.iter().chain(&self.left).map(|z| z.norm_sqr()).sum()
    }
}

pub fn to_momentum(field: &WaveField) -> MomentumField {
    MomentumField { right: dft(field.right()), left: dft(field.left()) }
}

pub fn to_position(m: &MomentumField, time_step: u64) -> WaveField {
    WaveField::new(idft(&m.right), idft(&m.left), time_step).expect("matching component lengths")
}

/// Integer momenta `k ∈ (-N/2, N/2]` in ascending order.
pub fn signed_momenta(n: usize) -> Vec<i64> {
    let n = n as i64;
    (-(n - 1) / 2..=n / 2).collect()
}

/// `w(k) = Σ_α |ψ_α(k)|²`, indexed by `k mod N_x`.
pub fn momentum_distribution(field: &WaveField) -> Vec<f64> {
    let m = to_momentum(field);
    m.right.iter().zip(&m.left).map(|(r, l)| r.norm_sqr() + l.norm_sqr()).collect()
}

/// `w̄(k̄) = Σ_l w(k̄ + l N̄_x)`, indexed by `k̄ mod N̄_x`.
pub fn coarse_momentum_distribution(field: &WaveField, spec: &ModelSpec) -> Vec<f64> {
    fold_momentum(&momentum_distribution(field), spec.n_coarse())
}

/// Folds a distribution indexed by `k mod N` onto `k mod n_coarse`.
pub fn fold_momentum(w: &[f64], n_coarse: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_coarse];
    for (k, v) in w.iter().enumerate() {
        out[k % n_coarse] += v;
    }
    out
}

/// Probability outside the momenta `k ≡ k0 (mod n_coarse)`.
pub fn leakage_outside(w: &[f64], k0: i64, n_coarse: usize) -> f64 {
    let target = k0.rem_euclid(n_coarse as i64) as usize;
    w.iter().enumerate().filter(|(k, _)| k % n_coarse != target).map(|(_, v)| v).sum()
}

/// Keeps the Fourier modes with `|k| ≤ k_max` in each component.
pub fn low_pass(field: &WaveField, k_max: usize) -> WaveField {
    let n = field.n_sites();
    let mut m = to_momentum(field);
    for k in 0..n {
        if wrap_index(k as i64, n).unsigned_abs() as usize > k_max {
            m.right[k] = C64::new(0.0, 0.0);
            m.left[k] = C64::new(0.0, 0.0);
        }
    }
    to_position(&m, field.time_step())
}

fn snapshot_spacing(history: &[WaveField]) -> Result<u64> {
    let n = history.first().ok_or_else(|| Error::invalid("empty snapshot history"))?.n_sites();
    if history.iter().any(|f| f.n_sites() != n) {
        return Err(Error::invalid("snapshots live on different lattices"));
    }
    if history.len() < 2 {
        return Ok(1);
    }
    let dt = history[1].time_step().checked_sub(history[0].time_step()).unwrap_or(0);
    if dt == 0 || history.windows(2).any(|w| w[1].time_step() != w[0].time_step() + dt) {
        return Err(Error::invalid("snapshots are not uniformly spaced in time"));
    }
    Ok(dt)
}

/// `B(t; t̄)` over a window of snapshots at `t̄ + nΔt`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionSeries {
    /// `n` for each sample, so the time is `n Δt`.
    pub offsets: Vec<i64>,
    pub values: Vec<C64>,
    /// Snapshot spacing in micro steps.
    pub dt: f64,
}

impl TransitionSeries {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.offsets.iter().map(move |&n| n as f64 * self.dt)
    }
}

/// `B(t; t̄) = Σ_x ψ†(t̄, x) ψ(t̄ + t, x)` with `t̄` the snapshot at `center`.
pub fn transition_elements(history: &[WaveField], center: usize) -> Result<TransitionSeries> {
    let dt = snapshot_spacing(history)?;
    let reference = history
        .get(center)
        .ok_or_else(|| Error::invalid(format!("center {center} outside history of {}", history.len())))?;
    Ok(TransitionSeries {
        offsets: (0..history.len()).map(|i| i as i64 - center as i64).collect(),
        values: history.iter().map(|f| reference.inner(f)).collect(),
        dt: dt as f64,
    })
}

/// Frequencies `ω = 2πk_ω / ((N̄_t + 1) Δt)` with `k_ω ∈ (-(N̄_t+1)/2, (N̄_t+1)/2]`.
pub fn frequency_grid(n_samples: usize, dt: f64) -> Vec<f64> {
    signed_momenta(n_samples)
        .into_iter()
        .map(|k| std::f64::consts::TAU * k as f64 / (n_samples as f64 * dt))
        .collect()
}

/// `B(ω) = (N̄_t+1)^{-1} Σ_t e^{iωt} B(t; t̄)` on the frequency grid.
pub fn frequency_spectrum(series: &TransitionSeries) -> Vec<(f64, C64)> {
    let n = series.values.len();
    frequency_grid(n, series.dt)
        .into_iter()
        .map(|w| {
            let s: C64 = series
                .times()
                .zip(&series.values)
                .map(|(t, b)| C64::from_polar(1.0, w * t) * b)
                .sum();
            (w, s / n as f64)
        })
        .collect()
}

/// Smearing kernel `δ(ω, E) = (N̄_t+1)^{-1} Σ_t e^{i(ω-E)t}` over the
/// window's times; real when the window is symmetric.
pub fn delta_kernel(omega: f64, energy: f64, series: &TransitionSeries) -> C64 {
    let s: C64 = series.times().map(|t| C64::from_polar(1.0, (omega - energy) * t)).sum();
    s / series.offsets.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyStats {
    /// `⟨H̃⟩` in units `1/ε`.
    pub h_tilde_mean: f64,
    /// `⟨H̃²⟩` in units `1/ε²`.
    pub h_tilde_sq: f64,
    /// `D = ⟨H̃²⟩ - ⟨H̃⟩²`.
    pub variance: f64,
}

/// Statistics of `H̃` from snapshots at `t - 2Δt, t - Δt, t, t + Δt, t + 2Δt`.
pub fn energy_stats(snapshots: &[WaveField]) -> Result<EnergyStats> {
    if snapshots.len() != 5 {
        return Err(Error::invalid(format!("need 5 snapshots, got {}", snapshots.len())));
    }
    let dt = snapshot_spacing(snapshots)? as f64;
    let psi = &snapshots[2];
    let fwd = psi.inner(&snapshots[3]);
    let bwd = psi.inner(&snapshots[1]);
    let mean = (C64::new(0.0, 0.5 / dt) * (fwd - bwd)).re;
    let second = psi.inner(&snapshots[4]) - 2.0 * psi.norm_sqr() + psi.inner(&snapshots[0]);
    let sq = -(second.re) / (4.0 * dt * dt);
    Ok(EnergyStats { h_tilde_mean: mean, h_tilde_sq: sq, variance: sq - mean * mean })
}

/// [`energy_stats`] on the five meso snapshots starting at `field`, i.e. with
/// base time two meso steps later. Both moments are conserved, so this equals
/// the statistic at the field's own time.
pub fn energy_stats_forward(spec: &ModelSpec, field: &WaveField) -> Result<EnergyStats> {
    let step = spec.m_t() as u64;
    let mut f = field.clone();
    let mut snaps = Vec::with_capacity(5);
    snaps.push(f.clone());
    for _ in 0..4 {
        crate::wave::evolve(spec, &mut f, step);
        snaps.push(f.clone());
    }
    energy_stats(&snaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::plane_wave;
    use approx::assert_abs_diff_eq;

    fn direct_dft(v: &[C64]) -> Vec<C64> {
        let n = v.len();
        (0..n)
            .map(|k| {
                v.iter()
                    .enumerate()
                    .map(|(j, z)| z * C64::from_polar(1.0, -std::f64::consts::TAU * (j * k) as f64 / n as f64))
                    .sum::<C64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let v: Vec<C64> = (0..24).map(|j| C64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos())).collect();
        let a = dft(&v);
        let b = direct_dft(&v);
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-13);
        }
        let back = idft(&a);
        for (x, y) in back.iter().zip(&v) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn plane_wave_is_delta() {
        let f = plane_wave(32, -5, 0.0);
        let w = momentum_distribution(&f);
        assert_abs_diff_eq!(w[27], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn signed_range() {
        assert_eq!(signed_momenta(4), vec![-1, 0, 1, 2]);
        assert_eq!(signed_momenta(5), vec![-2, -1, 0, 1, 2]);
        assert_eq!(signed_momenta(1), vec![0]);
    }

    #[test]
    fn fold_uniform() {
        let w = vec![1.0 / 12.0; 12];
        for v in fold_momentum(&w, 4) {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn low_pass_keeps_smooth_field() {
        let f = plane_wave(64, 3, 0.2);
        let g = low_pass(&f, 8);
        assert!(f.max_diff(&g) < 1e-13);
        let h = low_pass(&plane_wave(64, 12, 0.2), 8);
        assert!(h.norm_sqr() < 1e-24);
    }

    #[test]
    fn kernel_peak_and_bound() {
        let series = TransitionSeries { offsets: (-5..=5).collect(), values: vec![C64::new(1.0, 0.0); 11], dt: 17.0 };
        assert_eq!(delta_kernel(0.3, 0.3, &series), C64::new(1.0, 0.0));
        for w in frequency_grid(11, 17.0) {
            let d = delta_kernel(w, 0.01, &series);
            assert!(d.norm() <= 1.0 + 1e-15);
            assert!(d.im.abs() < 1e-14);
        }
    }

    #[test]
    fn nonuniform_spacing_rejected() {
        let f = plane_wave(8, 1, 0.0);
        let snaps = vec![
            f.clone().with_time_step(0),
            f.clone().with_time_step(2),
            f.clone().with_time_step(4),
            f.clone().with_time_step(7),
            f.clone().with_time_step(8),
        ];
        assert!(matches!(energy_stats(&snaps), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mismatched_lattices_rejected() {
        let h = vec![plane_wave(8, 1, 0.0), plane_wave(16, 1, 0.0).with_time_step(1)];
        assert!(matches!(transition_elements(&h, 0), Err(Error::InvalidArgument(_))));
    }
}
