//! Sharp single-particle configurations under the unique-jump map, orbit
//! decomposition, and states built from orbits.

use std::fmt;

use num_complex::Complex64 as C64;
use num_integer::Integer;
use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::model::{Eta, ModelSpec};
use crate::wave::WaveField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mover {
    R,
    L,
}

impl Mover {
    pub fn flipped(self) -> Self {
        match self {
            Mover::R => Mover::L,
            Mover::L => Mover::R,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn direction(self) -> i64 {
        match self {
            Mover::R => 1,
            Mover::L => -1,
        }
    }
}

impl fmt::Display for Mover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mover::R => "R",
            Mover::L => "L",
        })
    }
}

/// One particle at site `x` of type `alpha`. In the real picture
/// `ψ_R = q_1 + i q_2` and `ψ_L = q_3 + i q_4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteConfig {
    pub x: usize,
    pub alpha: Mover,
}

impl SiteConfig {
    pub fn new(x: usize, alpha: Mover) -> Self {
        SiteConfig { x, alpha }
    }

    /// Dense index `2x + alpha`, lexicographic in `(x, alpha)`.
    pub fn index(self) -> usize {
        2 * self.x + self.alpha.index()
    }

    pub fn from_index(i: usize) -> Self {
        let alpha = if i % 2 == 0 { Mover::R } else { Mover::L };
        SiteConfig { x: i / 2, alpha }
    }
}

/// A power of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Argument in `(-π, π]`.
    pub fn angle(self) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        [0.0, FRAC_PI_2, PI, -FRAC_PI_2][self.0 as usize]
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhasedConfig {
    pub config: SiteConfig,
    pub phase: Phase,
}

impl PhasedConfig {
    pub fn new(config: SiteConfig, phase: Phase) -> Self {
        PhasedConfig { config, phase }
    }

    pub fn sharp(x: usize, alpha: Mover) -> Self {
        PhasedConfig { config: SiteConfig::new(x, alpha), phase: Phase::ONE }
    }
}

/// Phase picked up when a particle is scattered out of `from`.
fn scatter_phase(eta: Eta, from: Mover) -> Phase {
    match (eta, from) {
        (Eta::PlusOne, Mover::R) => Phase::I,
        (Eta::PlusOne, Mover::L) => Phase::MINUS_I,
        (Eta::MinusI, Mover::R) => Phase::ONE,
        (Eta::MinusI, Mover::L) => Phase::MINUS_ONE,
    }
}

fn shift(x: usize, by: i64, n: usize) -> usize {
    (x as i64 + by).rem_euclid(n as i64) as usize
}

/// Transport one site, then scatter if the arrival site is a scattering point
/// at `t_step`.
pub fn micro_step_config(spec: &ModelSpec, t_step: u64, c: PhasedConfig) -> PhasedConfig {
    let SiteConfig { x, alpha } = c.config;
    let x = shift(x, alpha.direction(), spec.n_sites());
    if spec.is_scatter(t_step, x) {
        PhasedConfig::new(SiteConfig::new(x, alpha.flipped()), c.phase * scatter_phase(spec.eta(), alpha))
    } else {
        PhasedConfig::new(SiteConfig::new(x, alpha), c.phase)
    }
}

/// Inverse of [`micro_step_config`] at the same `t_step`.
pub fn micro_step_config_inverse(spec: &ModelSpec, t_step: u64, c: PhasedConfig) -> PhasedConfig {
    let SiteConfig { x, mut alpha } = c.config;
    let mut phase = c.phase;
    if spec.is_scatter(t_step, x) {
        alpha = alpha.flipped();
        phase = phase * scatter_phase(spec.eta(), alpha).conj();
    }
    PhasedConfig::new(SiteConfig::new(shift(x, -alpha.direction(), spec.n_sites()), alpha), phase)
}

/// Composition of the `M_t` micro steps `t_step = 0 … M_t - 1`.
pub fn meso_step_config(spec: &ModelSpec, c: PhasedConfig) -> PhasedConfig {
    (0..spec.m_t() as u64).fold(c, |c, t| micro_step_config(spec, t, c))
}

/// Meso step that also returns the signed (unwrapped) displacement.
fn meso_step_tracked(spec: &ModelSpec, c: PhasedConfig) -> (PhasedConfig, i64) {
    let mut disp = 0;
    let mut c = c;
    for t in 0..spec.m_t() as u64 {
        disp += c.config.alpha.direction();
        c = micro_step_config(spec, t, c);
    }
    (c, disp)
}

/// Configurations after each of `n_steps` micro steps starting at time 0.
pub fn trajectory(spec: &ModelSpec, c: SiteConfig, n_steps: u64) -> Vec<SiteConfig> {
    trajectory_from(spec, 0, c, n_steps)
}

pub fn trajectory_from(spec: &ModelSpec, t0: u64, c: SiteConfig, n_steps: u64) -> Vec<SiteConfig> {
    let mut pc = PhasedConfig::new(c, Phase::ONE);
    (t0..t0 + n_steps)
        .map(|t| {
            pc = micro_step_config(spec, t, pc);
            pc.config
        })
        .collect()
}

/// Replays the inverse map from time `t_end` back `n_steps` micro steps.
pub fn trajectory_backward(spec: &ModelSpec, t_end: u64, c: SiteConfig, n_steps: u64) -> Vec<SiteConfig> {
    assert!(n_steps <= t_end, "cannot replay before time zero");
    let mut pc = PhasedConfig::new(c, Phase::ONE);
    (0..n_steps)
        .map(|i| {
            pc = micro_step_config_inverse(spec, t_end - 1 - i, pc);
            pc.config
        })
        .collect()
}

/// A closed cycle of the meso-step map.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    /// `τ_j` for `j = 0 … N_m - 1`, starting at the smallest configuration.
    pub members: Vec<SiteConfig>,
    /// Phase of `τ_j` in the canonical orbit state; each meso step maps the
    /// amplitude `c_j` on `τ_j` to `c_{j+1}` on `τ_{j+1}`.
    pub phases: Vec<Phase>,
    /// Total phase picked up around the orbit.
    pub net_phase: Phase,
    /// First return to the same type shifted by `s Δx` happens after `n_s` meso steps.
    pub stride: i64,
    pub reduced_length: usize,
    /// Signed number of times the orbit winds around the chain.
    pub winding: i64,
    /// Mean velocity `s Δx / (n_s Δt)` in lattice units.
    pub velocity: Rational64,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Whether every site of the chain hosts some member.
    pub fn covers_all_positions(&self, n_sites: usize) -> bool {
        let mut seen = vec![false; n_sites];
        self.members.iter().for_each(|m| seen[m.x] = true);
        seen.into_iter().all(|s| s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSet {
    pub orbits: Vec<Orbit>,
    n_sites: usize,
    m_t: usize,
    // config index -> (orbit id, position in orbit)
    location: Vec<(usize, usize)>,
}

impl OrbitSet {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn locate(&self, c: SiteConfig) -> (usize, usize) {
        self.location[c.index()]
    }

    pub fn total_length(&self) -> usize {
        self.orbits.iter().map(Orbit::len).sum()
    }
}

/// Partitions all `2 N_x` configurations into meso-step orbits.
///
/// Enumeration starts from the lexicographically smallest unvisited
/// `(x, alpha)` with `R < L`.
pub fn decompose_orbits(spec: &ModelSpec) -> OrbitSet {
    let n = spec.n_sites();
    let m_x = spec.m_x() as i64;
    let n_coarse = spec.n_coarse();
    let mut location = vec![(usize::MAX, 0); 2 * n];
    let mut orbits = Vec::new();

    for start in 0..2 * n {
        if location[start].0 != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let first = SiteConfig::from_index(start);
        let base = if spec.eta() == Eta::PlusOne && first.alpha == Mover::L {
            Phase::I
        } else {
            Phase::ONE
        };
        let mut members = vec![first];
        let mut phases = vec![base];
        let mut disp = 0i64;
        let mut reduced: Option<(usize, i64)> = None;
        let mut c = PhasedConfig::new(first, base);
        loop {
            let (next, d) = meso_step_tracked(spec, c);
            disp += d;
            if reduced.is_none()
                && next.config.alpha == first.alpha
                && (next.config.x as i64 - first.x as i64).rem_euclid(m_x) == 0
            {
                reduced = Some((members.len(), disp / m_x));
            }
            if next.config == first {
                let net_phase = next.phase * base.conj();
                let (reduced_length, stride) = reduced.expect("orbit returns to its start");
                let winding = disp / n as i64;
                let velocity = Rational64::new(stride * m_x, (reduced_length * spec.m_t()) as i64);
                debug_assert_eq!(full_orbit_length(reduced_length, stride, n_coarse), members.len());
                for (j, m) in members.iter().enumerate() {
                    location[m.index()] = (id, j);
                }
                orbits.push(Orbit { members, phases, net_phase, stride, reduced_length, winding, velocity });
                break;
            }
            members.push(next.config);
            phases.push(next.phase);
            c = next;
        }
    }
    OrbitSet { orbits, n_sites: n, m_t: spec.m_t(), location }
}

/// Full orbit length from the reduced orbit: `n_s · ν` with `ν` the smallest
/// positive integer such that `ν s ≡ 0 (mod N̄_x)`.
pub fn full_orbit_length(reduced_length: usize, stride: i64, n_coarse: usize) -> usize {
    let n_coarse = n_coarse as i64;
    let nu = n_coarse / stride.gcd(&n_coarse);
    reduced_length * nu as usize
}

/// Field with amplitude `w_m c_j` on every member of orbit `m`.
///
/// Requires `Σ_m N_m w_m² = 1`; every orbit with nonzero weight must close
/// with net phase `+1`.
pub fn static_state(orbits: &OrbitSet, weights: &[f64]) -> Result<WaveField> {
    if weights.len() != orbits.orbits.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} orbits",
            weights.len(),
            orbits.orbits.len()
        )));
    }
    let norm: f64 = orbits.orbits.iter().zip(weights).map(|(o, w)| o.len() as f64 * w * w).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!("weights give norm {norm}, expected 1")));
    }
    let mut field = WaveField::zeros(orbits.n_sites);
    for (orbit, &w) in orbits.orbits.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        if orbit.net_phase != Phase::ONE {
            return Err(Error::validation("orbit with net phase other than +1 cannot carry a static state"));
        }
        place(&mut field, orbit, |j| orbit.phases[j].to_complex() * w);
    }
    Ok(field)
}

fn place(field: &mut WaveField, orbit: &Orbit, amp: impl Fn(usize) -> C64) {
    for (j, m) in orbit.members.iter().enumerate() {
        let a = amp(j);
        match m.alpha {
            Mover::R => field.right_mut()[m.x] = a,
            Mover::L => field.left_mut()[m.x] = a,
        }
    }
}

/// Wraps `k` into `(-N/2, N/2]`.
pub fn wrap_index(k: i64, n: usize) -> i64 {
    let n = n as i64;
    let r = k.rem_euclid(n);
    if 2 * r > n { r - n } else { r }
}

/// Energy of the single-orbit eigenstate with index `k`:
/// `(2πk - θ)/(N_m Δt)` where `e^{iθ}` is the orbit's net phase.
pub fn single_orbit_energy(orbit: &Orbit, m_t: usize, k: i64) -> f64 {
    let n = orbit.len() as f64;
    (std::f64::consts::TAU * k as f64 - orbit.net_phase.angle()) / (n * m_t as f64)
}

/// Eigenstate `φ_0 e^{2πikj/N_m} c_j` on orbit `m`, `|φ_0|² = 1/N_m`, and its
/// energy. One meso step multiplies it by `e^{-iEΔt}`.
pub fn single_orbit_eigenstate(orbits: &OrbitSet, m: usize, k: i64) -> Result<(WaveField, f64)> {
    let orbit = orbits
        .orbits
        .get(m)
        .ok_or_else(|| Error::invalid(format!("orbit index {m} out of range")))?;
    let n = orbit.len();
    if 2 * k.unsigned_abs() as usize > n {
        return Err(Error::invalid(format!("|k| = {} exceeds N_m/2 = {}", k.abs(), n as f64 / 2.0)));
    }
    let k = wrap_index(k, n);
    let energy = single_orbit_energy(orbit, orbits.m_t, k);
    let beta = energy * orbits.m_t as f64;
    let amp0 = 1.0 / (n as f64).sqrt();
    let mut field = WaveField::zeros(orbits.n_sites);
    place(&mut field, orbit, |j| orbit.phases[j].to_complex() * C64::from_polar(amp0, beta * j as f64));
    Ok((field, energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ScatterPattern, generate_pattern};
    use crate::wave::meso_evolve;

    #[test]
    fn pure_transport() {
        let spec = ModelSpec::free(8, 8, 1, Eta::PlusOne).unwrap();
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(0, Mover::R));
        assert_eq!(c, PhasedConfig::sharp(1, Mover::R));
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(7, Mover::R));
        assert_eq!(c, PhasedConfig::sharp(0, Mover::R));
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(0, Mover::L));
        assert_eq!(c, PhasedConfig::sharp(7, Mover::L));
    }

    #[test]
    fn scattering_phase() {
        let pattern = ScatterPattern::from_points(vec![(0, 3)], 0).unwrap();
        let spec = ModelSpec::new(8, 8, 2, Eta::PlusOne, pattern.clone(), "").unwrap();
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(2, Mover::R));
        assert_eq!(c, PhasedConfig::new(SiteConfig::new(3, Mover::L), Phase::I));
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(4, Mover::L));
        assert_eq!(c, PhasedConfig::new(SiteConfig::new(3, Mover::R), Phase::MINUS_I));

        let spec = ModelSpec::new(8, 8, 2, Eta::MinusI, pattern, "").unwrap();
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(2, Mover::R));
        assert_eq!(c.phase, Phase::ONE);
        let c = micro_step_config(&spec, 0, PhasedConfig::sharp(4, Mover::L));
        assert_eq!(c.phase, Phase::MINUS_ONE);
    }

    #[test]
    fn inverse_undoes_step() {
        let spec = ModelSpec::new(32, 8, 5, Eta::PlusOne, generate_pattern(8, 5, 12, 3).unwrap(), "").unwrap();
        for i in 0..64 {
            for t in 0..5 {
                let c = PhasedConfig::new(SiteConfig::from_index(i), Phase::MINUS_ONE);
                let d = micro_step_config(&spec, t, c);
                assert_eq!(micro_step_config_inverse(&spec, t, d), c);
            }
        }
    }

    #[test]
    fn free_meso_step() {
        let spec = ModelSpec::free(20, 4, 3, Eta::PlusOne).unwrap();
        let c = meso_step_config(&spec, PhasedConfig::sharp(18, Mover::R));
        assert_eq!(c, PhasedConfig::sharp(1, Mover::R));
    }

    #[test]
    fn saturated_pattern_returns_after_even_steps() {
        let pattern = generate_pattern(2, 4, 8, 0).unwrap();
        let spec = ModelSpec::new(8, 2, 4, Eta::PlusOne, pattern, "").unwrap();
        for i in 0..16 {
            let c = PhasedConfig::sharp(i / 2, if i % 2 == 0 { Mover::R } else { Mover::L });
            assert_eq!(meso_step_config(&spec, c).config, c.config);
        }
    }

    #[test]
    fn free_trajectory() {
        let spec = ModelSpec::free(16, 16, 1, Eta::PlusOne).unwrap();
        let xs: Vec<usize> = trajectory(&spec, SiteConfig::new(0, Mover::R), 5).iter().map(|c| c.x).collect();
        assert_eq!(xs, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn free_orbits() {
        let spec = ModelSpec::free(15, 5, 4, Eta::PlusOne).unwrap();
        let orbits = decompose_orbits(&spec);
        assert_eq!(orbits.orbits.len(), 2);
        for o in &orbits.orbits {
            assert_eq!(o.len(), 15);
            assert_eq!(o.velocity * o.velocity, Rational64::from_integer(1));
        }
    }

    #[test]
    fn static_and_eigen_states() {
        let spec = ModelSpec::new(64, 8, 5, Eta::PlusOne, generate_pattern(8, 5, 7, 11).unwrap(), "").unwrap();
        let orbits = decompose_orbits(&spec);
        let o = &orbits.orbits[0];
        let mut w = vec![0.0; orbits.orbits.len()];
        w[0] = 1.0 / (o.len() as f64).sqrt();
        let f0 = static_state(&orbits, &w).unwrap();
        let mut f = f0.clone();
        meso_evolve(&spec, &mut f, 1);
        assert!(f.max_diff(&f0) < 1e-15);

        let (e0, energy) = single_orbit_eigenstate(&orbits, 0, 1).unwrap();
        let mut e = e0.clone();
        meso_evolve(&spec, &mut e, 1);
        let mut expect = e0.clone();
        expect.scale(C64::from_polar(1.0, -energy * 5.0));
        assert!(e.max_diff(&expect) < 1e-12);
    }

    #[test]
    fn bad_weights_rejected() {
        let spec = ModelSpec::free(8, 8, 1, Eta::PlusOne).unwrap();
        let orbits = decompose_orbits(&spec);
        assert!(matches!(static_state(&orbits, &[1.0, 1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn k_out_of_range() {
        let spec = ModelSpec::free(8, 8, 1, Eta::PlusOne).unwrap();
        let orbits = decompose_orbits(&spec);
        assert!(matches!(single_orbit_eigenstate(&orbits, 0, 5), Err(Error::InvalidArgument(_))));
        assert!(single_orbit_eigenstate(&orbits, 0, 4).is_ok());
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_index(4, 8), 4);
        assert_eq!(wrap_index(-4, 8), 4);
        assert_eq!(wrap_index(5, 8), -3);
        assert_eq!(wrap_index(-3, 7), -3);
        assert_eq!(wrap_index(4, 7), -3);
    }
}
