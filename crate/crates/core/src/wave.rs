//! Two-component wave fields and their evolution under the automaton step
//! operator `U(t) = U_s(t) U_f` and under the discrete Dirac reference.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{Eta, ModelSpec};

/// Normalized amplitudes `ψ_R(x)`, `ψ_L(x)` on a periodic chain, together
/// with the number of micro steps already applied.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    right: Vec<C64>,
    left: Vec<C64>,
    time_step: u64,
}

impl WaveField {
    pub fn new(right: Vec<C64>, left: Vec<C64>, time_step: u64) -> Result<Self> {
        if right.len() != left.len() || right.is_empty() {
            return Err(Error::invalid(format!(
                "component lengths {} and {} must be equal and nonzero",
                right.len(),
                left.len()
            )));
        }
        Ok(WaveField { right, left, time_step })
    }

    pub fn zeros(n_sites: usize) -> Self {
        WaveField {
            right: vec![C64::new(0.0, 0.0); n_sites],
            left: vec![C64::new(0.0, 0.0); n_sites],
            time_step: 0,
        }
    }

    pub fn from_fn(n_sites: usize, mut f: impl FnMut(usize) -> (C64, C64)) -> Self {
        let (right, left) = (0..n_sites).map(&mut f).unzip();
        WaveField { right, left, time_step: 0 }
    }

    pub fn n_sites(&self) -> usize {
        self.right.len()
    }

    pub fn right(&self) -> &[C64] {
        &self.right
    }

    pub fn left(&self) -> &[C64] {
        &self.left
    }

    pub fn right_mut(&mut self) -> &mut [C64] {
        &mut self.right
    }

    pub fn left_mut(&mut self) -> &mut [C64] {
        &mut self.left
    }

    pub fn time_step(&self) -> u64 {
        self.time_step
    }

    pub fn with_time_step(mut self, time_step: u64) -> Self {
        self.time_step = time_step;
        self
    }

    /// Amplitude of component `alpha` (0 = R, 1 = L) at site `x`.
    pub fn get(&self, x: usize, alpha: usize) -> C64 {
        if alpha == 0 {
            self.right[x]
        } else {
            self.left[x]
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.right.iter().chain(&self.left).map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite field"));
        }
        self.scale(C64::new(1.0 / n, 0.0));
        Ok(self)
    }

    /// `Σ_x ψ†(x) φ(x)` with `self` conjugated.
    pub fn inner(&self, other: &WaveField) -> C64 {
        let r: C64 = self.right.iter().zip(&other.right).map(|(a, b)| a.conj() * b).sum();
        let l: C64 = self.left.iter().zip(&other.left).map(|(a, b)| a.conj() * b).sum();
        r + l
    }

    pub fn scale(&mut self, c: C64) {
        self.right.iter_mut().chain(self.left.iter_mut()).for_each(|z| *z *= c);
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: C64, other: &WaveField) {
        for (a, b) in self.right.iter_mut().zip(&other.right) {
            *a += c * b;
        }
        for (a, b) in self.left.iter_mut().zip(&other.left) {
            *a += c * b;
        }
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_diff(&self, other: &WaveField) -> f64 {
        self.right
            .iter()
            .zip(&other.right)
            .chain(self.left.iter().zip(&other.left))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Transport: right-movers one site up, left-movers one site down.
pub fn apply_free(field: &mut WaveField) {
    field.right.rotate_right(1);
    field.left.rotate_left(1);
}

/// `W = η τ_2` at every scattering site of micro step `t_step`.
///
/// Multiplication by `±i` is done by swapping real and imaginary parts so
/// that evolution stays an exact signed permutation of the amplitudes.
pub fn apply_scatter(spec: &ModelSpec, t_step: u64, field: &mut WaveField) {
    let n = field.n_sites();
    let eta = spec.eta();
    for &x_sub in spec.scatter_columns(t_step) {
        for x in (x_sub..n).step_by(spec.m_x()) {
            let (r, l) = (field.right[x], field.left[x]);
            let (r2, l2) = match eta {
                Eta::PlusOne => (C64::new(l.im, -l.re), C64::new(-r.im, r.re)),
                Eta::MinusI => (-l, r),
            };
            field.right[x] = r2;
            field.left[x] = l2;
        }
    }
}

/// One micro step `U_s(t) U_f` at the field's current time.
pub fn micro_step(spec: &ModelSpec, field: &mut WaveField) {
    apply_free(field);
    apply_scatter(spec, field.time_step, field);
    field.time_step += 1;
}

pub fn evolve(spec: &ModelSpec, field: &mut WaveField, n_steps: u64) {
    for _ in 0..n_steps {
        micro_step(spec, field);
    }
}

/// Evolves `n_steps` micro steps, returning the initial field and a copy every
/// `every` steps (and the final field if it is not on the cadence).
pub fn evolve_snapshots(spec: &ModelSpec, field: &WaveField, n_steps: u64, every: u64) -> Result<Vec<WaveField>> {
    if every == 0 {
        return Err(Error::invalid("snapshot cadence must be positive"));
    }
    let mut f = field.clone();
    let mut out = vec![f.clone()];
    for step in 1..=n_steps {
        micro_step(spec, &mut f);
        if step % every == 0 || step == n_steps {
            out.push(f.clone());
        }
    }
    Ok(out)
}

/// Evolves by whole meso steps `Δt = M_t ε`.
pub fn meso_evolve(spec: &ModelSpec, field: &mut WaveField, n_meso: u64) {
    evolve(spec, field, n_meso * spec.m_t() as u64);
}

/// Occupation probabilities of the four real components.
#[derive(Clone, Debug, PartialEq)]
pub struct Probabilities {
    /// `(Re ψ_R)²`, `(Im ψ_R)²`, `(Re ψ_L)²`, `(Im ψ_L)²` per site.
    pub w: [Vec<f64>; 4],
}

impl Probabilities {
    pub fn total(&self) -> f64 {
        self.w.iter().flatten().sum()
    }

    /// `w_1 - w_3`: real-part right-mover minus real-part left-mover.
    pub fn red_difference(&self) -> Vec<f64> {
        self.w[0].iter().zip(&self.w[2]).map(|(a, b)| a - b).collect()
    }
}

pub fn probabilities(field: &WaveField) -> Probabilities {
    let sq = |v: &[C64], re: bool| v.iter().map(|z| if re { z.re * z.re } else { z.im * z.im }).collect();
    Probabilities {
        w: [
            sq(&field.right, true),
            sq(&field.right, false),
            sq(&field.left, true),
            sq(&field.left, false),
        ],
    }
}

/// Momentum `2πk/N_x` in lattice units.
pub fn momentum(n_sites: usize, k: i64) -> f64 {
    std::f64::consts::TAU * k as f64 / n_sites as f64
}

/// `f(p) = sqrt((1 + p/sqrt(p² + m²))/2)`, with the symmetric limit at `p = m = 0`.
pub fn chirality_weight(p: f64, mass: f64) -> f64 {
    let e = p.hypot(mass);
    if e == 0.0 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        ((1.0 + p / e) / 2.0).sqrt()
    }
}

/// Plane wave `N_x^{-1/2} e^{ipx} (f(p), i f(-p))` with `p = 2πk/N_x`.
pub fn plane_wave(n_sites: usize, k: i64, mass: f64) -> WaveField {
    let p = momentum(n_sites, k);
    let norm = 1.0 / (n_sites as f64).sqrt();
    let (fr, fl) = (chirality_weight(p, mass), chirality_weight(-p, mass));
    WaveField::from_fn(n_sites, |x| {
        let e = C64::from_polar(norm, p * x as f64);
        (e * fr, e * C64::new(0.0, fl))
    })
}

/// Spatially constant `(1, i)/sqrt(2 N_x)`.
pub fn homogeneous_state(n_sites: usize) -> WaveField {
    let a = 1.0 / (2.0 * n_sites as f64).sqrt();
    WaveField::from_fn(n_sites, |_| (C64::new(a, 0.0), C64::new(0.0, a)))
}

/// Discrete Dirac reference step parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracParams {
    /// Mass in units `1/ε`.
    pub mass: f64,
    /// Multiply the mass rotation by `e^{iεm}`.
    pub phase_shifted: bool,
}

impl DiracParams {
    pub fn new(mass: f64, phase_shifted: bool) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&mass) {
            return Err(Error::invalid(format!("mass {mass} outside [0, π/2)")));
        }
        Ok(DiracParams { mass, phase_shifted })
    }
}

/// One step `Ũ_m U_f`: transport, then the rotation
/// `[[cos m, -sin m], [sin m, cos m]]` on `(ψ_R, ψ_L)`.
pub fn dirac_step(params: &DiracParams, field: &mut WaveField) {
    apply_free(field);
    let (s, c) = params.mass.sin_cos();
    let phase = if params.phase_shifted {
        C64::from_polar(1.0, params.mass)
    } else {
        C64::new(1.0, 0.0)
    };
    for (r, l) in field.right.iter_mut().zip(field.left.iter_mut()) {
        let (a, b) = (*r, *l);
        *r = phase * (a * c - b * s);
        *l = phase * (a * s + b * c);
    }
    field.time_step += 1;
}

/// `E(p) = sqrt(p² + m²) - m`.
pub fn dirac_dispersion(p: f64, mass: f64) -> f64 {
    p.hypot(mass) - mass
}
