//! Automaton parameters and the scattering pattern inside one `(Δt, Δx)` cell.
//!
//! Lengths and times are integers in lattice units (`ε = 1`). A site `(t, x)`
//! scatters iff `(t mod M_t, x mod M_x)` is one of the pattern points, so the
//! pattern tiles the whole space-time lattice.

use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Error, Result};

/// Scattering matrix variant `W = η τ_2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Eta {
    /// `η = 1`: purely imaginary `W`, mixes real and imaginary parts and
    /// admits the homogeneous zero-energy state.
    PlusOne,
    /// `η = -i`: real `W`, real and imaginary parts evolve independently.
    MinusI,
}

impl Eta {
    pub fn as_str(self) -> &'static str {
        match self {
            Eta::PlusOne => "PlusOne",
            Eta::MinusI => "MinusI",
        }
    }
}

impl fmt::Display for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Eta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PlusOne" | "plus-one" | "1" | "+1" => Ok(Eta::PlusOne),
            "MinusI" | "minus-i" | "-i" => Ok(Eta::MinusI),
            other => Err(Error::invalid(format!(
                "unknown eta `{other}` (expected PlusOne or MinusI)"
            ))),
        }
    }
}

/// Scattering points `(t_sub, x_sub)` inside one `M_t × M_x` cell, kept
/// lexicographically sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScatterPattern {
    points: Vec<(usize, usize)>,
    seed: u64,
}

impl ScatterPattern {
    /// A hand-specified pattern. Points are sorted; duplicates are rejected.
    pub fn from_points(mut points: Vec<(usize, usize)>, seed: u64) -> Result<Self> {
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!(
                "duplicate scattering point ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(ScatterPattern { points, seed })
    }

    pub fn empty() -> Self {
        ScatterPattern { points: Vec::new(), seed: 0 }
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn n_tot(&self) -> usize {
        self.points.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean number of scattering points per site and micro step, `n̄`.
    pub fn mean_density(&self, m_x: usize, m_t: usize) -> f64 {
        self.points.len() as f64 / (m_x * m_t) as f64
    }
}

/// Draws `n_tot` distinct cells uniformly without replacement from the
/// `m_t × m_x` grid. Identical inputs always give the identical pattern.
pub fn generate_pattern(m_x: usize, m_t: usize, n_tot: usize, seed: u64) -> Result<ScatterPattern> {
    if m_x == 0 || m_t == 0 {
        return Err(Error::invalid("m_x and m_t must be positive"));
    }
    let cells = m_x * m_t;
    if n_tot > cells {
        return Err(Error::invalid(format!(
            "n_tot = {n_tot} exceeds the {cells} cells of a {m_t} x {m_x} pattern"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = rand::seq::index::sample(&mut rng, cells, n_tot)
        .into_iter()
        .map(|c| (c / m_x, c % m_x))
        .collect();
    ScatterPattern::from_points(points, seed)
}

/// One automaton: chain geometry, mesoscopic periods, `η` and the pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    n_sites: usize,
    m_x: usize,
    m_t: usize,
    eta: Eta,
    pattern: ScatterPattern,
    label: String,
    // scatter[t_sub] = x_sub values scattering at that sub-step
    scatter: Vec<Vec<usize>>,
}

impl ModelSpec {
    pub fn new(
        n_sites: usize,
        m_x: usize,
        m_t: usize,
        eta: Eta,
        pattern: ScatterPattern,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::validation("n_sites must be positive"));
        }
        if m_x == 0 || m_t == 0 {
            return Err(Error::validation("m_x and m_t must be positive"));
        }
        if n_sites % m_x != 0 {
            return Err(Error::validation(format!(
                "n_sites = {n_sites} is not a multiple of m_x = {m_x}"
            )));
        }
        let mut scatter = vec![Vec::new(); m_t];
        for &(t, x) in pattern.points() {
            if t >= m_t || x >= m_x {
                return Err(Error::validation(format!(
                    "scattering point ({t}, {x}) outside the {m_t} x {m_x} cell"
                )));
            }
            scatter[t].push(x);
        }
        Ok(ModelSpec { n_sites, m_x, m_t, eta, pattern, label: label.into(), scatter })
    }

    /// Free massless model: no scattering points at all.
    pub fn free(n_sites: usize, m_x: usize, m_t: usize, eta: Eta) -> Result<Self> {
        Self::new(n_sites, m_x, m_t, eta, ScatterPattern::empty(), "free")
    }

    /// Same geometry, new random pattern with the same `n_tot`.
    pub fn reseeded(&self, seed: u64) -> Result<Self> {
        let pattern = generate_pattern(self.m_x, self.m_t, self.pattern.n_tot(), seed)?;
        Self::new(self.n_sites, self.m_x, self.m_t, self.eta, pattern, self.label.clone())
    }

    pub fn with_eta(&self, eta: Eta) -> Self {
        ModelSpec { eta, ..self.clone() }
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        ModelSpec { label: label.into(), ..self.clone() }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn m_x(&self) -> usize {
        self.m_x
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn eta(&self) -> Eta {
        self.eta
    }

    pub fn pattern(&self) -> &ScatterPattern {
        &self.pattern
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of `Δx` intervals on the chain, `N̄_x = N_x / M_x`.
    pub fn n_coarse(&self) -> usize {
        self.n_sites / self.m_x
    }

    /// `Δx = L`: no spatial periodicity beyond the chain itself.
    pub fn is_brownian(&self) -> bool {
        self.m_x == self.n_sites
    }

    pub fn mean_density(&self) -> f64 {
        self.pattern.mean_density(self.m_x, self.m_t)
    }

    /// Momentum quantum `2π/L` in lattice units.
    pub fn momentum_unit(&self) -> f64 {
        std::f64::consts::TAU / self.n_sites as f64
    }

    pub fn is_scatter(&self, t: u64, x: usize) -> bool {
        let t_sub = (t % self.m_t as u64) as usize;
        self.scatter[t_sub].contains(&(x % self.m_x))
    }

    /// Pattern columns `x_sub` that scatter at micro step `t`.
    pub fn scatter_columns(&self, t: u64) -> &[usize] {
        &self.scatter[(t % self.m_t as u64) as usize]
    }

    /// Canonical JSON form; points listed explicitly in sorted order.
    pub fn to_json(&self) -> String {
        let label = serde_json::to_string(&self.label).expect("string serialization");
        let points = self
            .pattern
            .points()
            .iter()
            .map(|(t, x)| format!("[{t}, {x}]"))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "{{\n  \"label\": {label},\n  \"n_sites\": {},\n  \"m_x\": {},\n  \"m_t\": {},\n  \"eta\": \"{}\",\n  \"seed\": {},\n  \"points\": [{points}]\n}}\n",
            self.n_sites, self.m_x, self.m_t, self.eta, self.pattern.seed()
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::parse("<document>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("<document>", "expected a JSON object"))?;
        let get = |name: &str| obj.get(name).ok_or_else(|| Error::parse(name, "missing"));
        let uint = |name: &str| -> Result<u64> {
            get(name)?
                .as_u64()
                .ok_or_else(|| Error::parse(name, "expected a non-negative integer"))
        };

        let label = get("label")?
            .as_str()
            .ok_or_else(|| Error::parse("label", "expected a string"))?
            .to_string();
        let n_sites = uint("n_sites")? as usize;
        let m_x = uint("m_x")? as usize;
        let m_t = uint("m_t")? as usize;
        let eta = get("eta")?
            .as_str()
            .ok_or_else(|| Error::parse("eta", "expected a string"))?
            .parse::<Eta>()
            .map_err(|e| Error::parse("eta", e.to_string()))?;
        let seed = uint("seed")?;
        let raw_points = get("points")?
            .as_array()
            .ok_or_else(|| Error::parse("points", "expected an array"))?;
        let mut points = Vec::with_capacity(raw_points.len());
        for (i, p) in raw_points.iter().enumerate() {
            let pair = p
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?)))
                .ok_or_else(|| {
                    Error::parse("points", format!("entry {i} is not a [t_sub, x_sub] integer pair"))
                })?;
            points.push((pair.0 as usize, pair.1 as usize));
        }
        let pattern = ScatterPattern::from_points(points, seed)?;
        Self::new(n_sites, m_x, m_t, eta, pattern, label)
    }
}

pub fn save_model(spec: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, spec.to_json())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path)?;
    ModelSpec::from_json(&text)
}

/// Seed of the shipped periodic model B pattern (see `fixtures/model_b.json`).
pub const MODEL_B_SEED: u64 = 93;

/// Brownian model A: `N_x = M_x = 512`, `M_t = 16`, with `n̄` chosen so the
/// naive continuum mass is `m = 2.5 · 2π/L`.
pub fn preset_model_a(seed: u64) -> Result<ModelSpec> {
    brownian_preset(512, 2.5, seed, "model-a")
}

/// Brownian chain of `n_sites` with `M_t = 16` and `n_tot` chosen to realize
/// mass `mass_units · 2π/512` (the model A mass, fixed in lattice units).
pub fn brownian_preset(n_sites: usize, mass_units_512: f64, seed: u64, label: &str) -> Result<ModelSpec> {
    let m_t = 16;
    let m_eps = mass_units_512 * std::f64::consts::TAU / 512.0;
    let density = 2.0 * m_eps / std::f64::consts::PI;
    let n_tot = (density * (n_sites * m_t) as f64).round() as usize;
    let pattern = generate_pattern(n_sites, m_t, n_tot, seed)?;
    ModelSpec::new(n_sites, n_sites, m_t, Eta::PlusOne, pattern, label)
}

/// Periodic model B: `N̄_x = 32`, `M_x = 16`, `M_t = 17`, `n_tot = 16`.
pub fn preset_model_b() -> Result<ModelSpec> {
    let pattern = generate_pattern(16, 17, 16, MODEL_B_SEED)?;
    ModelSpec::new(512, 16, 17, Eta::PlusOne, pattern, "model-b")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_pattern() {
        let p = generate_pattern(16, 17, 0, 42).unwrap();
        assert_eq!(p.n_tot(), 0);
        assert_eq!(p.mean_density(16, 17), 0.0);
    }

    #[test]
    fn model_b_density() {
        let p = generate_pattern(16, 17, 16, 7).unwrap();
        assert_eq!(p.n_tot(), 16);
        assert!((p.mean_density(16, 17) - 1.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn saturated_grid() {
        let p = generate_pattern(2, 2, 4, 3).unwrap();
        assert_eq!(p.points(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(p.mean_density(2, 2), 1.0);
    }

    #[test]
    fn too_many_points() {
        assert!(matches!(generate_pattern(2, 2, 5, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn deterministic_generation() {
        let a = generate_pattern(16, 17, 16, 99).unwrap();
        let b = generate_pattern(16, 17, 16, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_pattern(16, 17, 16, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_indivisible_chain() {
        let err = ModelSpec::free(10, 4, 1, Eta::PlusOne).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn pattern_tiles() {
        let pattern = ScatterPattern::from_points(vec![(1, 2)], 0).unwrap();
        let spec = ModelSpec::new(12, 4, 3, Eta::PlusOne, pattern, "t").unwrap();
        assert!(spec.is_scatter(1, 2));
        assert!(spec.is_scatter(4, 6));
        assert!(spec.is_scatter(7, 10));
        assert!(!spec.is_scatter(2, 2));
        assert!(!spec.is_scatter(1, 3));
    }

    #[test]
    fn json_round_trip() {
        let spec = preset_model_b().unwrap();
        let back = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn out_of_range_point_rejected() {
        let text = r#"{"label": "x", "n_sites": 32, "m_x": 16, "m_t": 17, "eta": "PlusOne",
                       "seed": 0, "points": [[17, 3]]}"#;
        assert!(matches!(ModelSpec::from_json(text), Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_point_rejected() {
        let text = r#"{"label": "x", "n_sites": 32, "m_x": 16, "m_t": 17, "eta": "PlusOne",
                       "seed": 0, "points": [[1, 3], [1, 3]]}"#;
        assert!(matches!(ModelSpec::from_json(text), Err(Error::Validation(_))));
    }

    #[test]
    fn parse_error_names_field() {
        let text = r#"{"label": "x", "n_sites": 32, "m_x": "sixteen", "m_t": 17,
                       "eta": "PlusOne", "seed": 0, "points": []}"#;
        match ModelSpec::from_json(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "m_x"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"label": "x", "n_sites": 32, "m_x": 16, "eta": "PlusOne", "seed": 0, "points": []}"#;
        match ModelSpec::from_json(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "m_t"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn model_a_density_matches_mass() {
        let spec = preset_model_a(1).unwrap();
        assert_eq!(spec.pattern().n_tot(), 160);
        assert_eq!(spec.n_sites(), 512);
        assert_eq!(spec.m_t(), 16);
        assert!(spec.is_brownian());
    }
}
