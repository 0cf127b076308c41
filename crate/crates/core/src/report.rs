//! CSV reports. Every file starts with one `# {json}` metadata line followed
//! by a header row; floats use the shortest round-trip representation.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde_json::{Map, Value, json};

use crate::automaton::{Mover, OrbitSet, SiteConfig};
use crate::blocks::{DispersionCurve, MomentumBlock};
use crate::coarse::{Basis, CoarseDensity};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::spectral::{EnergyStats, TransitionSeries, signed_momenta};
use crate::wave::{WaveField, probabilities};

/// Reporting units for momenta and energies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Units {
    /// `1/ε`.
    Lattice,
    /// Multiples of `2π/L`.
    #[default]
    TwoPiOverL,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Lattice => "lattice",
            Units::TwoPiOverL => "2pi_over_L",
        }
    }

    /// Converts a momentum or energy in `1/ε` on a chain of `n_sites`.
    pub fn convert(self, value: f64, n_sites: usize) -> f64 {
        match self {
            Units::Lattice => value,
            Units::TwoPiOverL => value * n_sites as f64 / std::f64::consts::TAU,
        }
    }
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice" => Ok(Units::Lattice),
            "2pi-over-L" | "2pi_over_L" => Ok(Units::TwoPiOverL),
            other => Err(Error::invalid(format!("unknown units `{other}`"))),
        }
    }
}

/// Metadata common to every report on a given model.
pub fn model_meta(spec: &ModelSpec) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("model".into(), json!(spec.label()));
    m.insert("n_sites".into(), json!(spec.n_sites()));
    m.insert("m_x".into(), json!(spec.m_x()));
    m.insert("m_t".into(), json!(spec.m_t()));
    m.insert("eta".into(), json!(spec.eta().as_str()));
    m.insert("seed".into(), json!(spec.pattern().seed()));
    m
}

fn with(mut meta: Map<String, Value>, extra: &[(&str, Value)]) -> Map<String, Value> {
    for (k, v) in extra {
        meta.insert((*k).to_string(), v.clone());
    }
    meta
}

struct Csv(String);

impl Csv {
    fn new(meta: &Map<String, Value>, header: &str) -> Self {
        let meta = serde_json::to_string(meta).expect("metadata serializes");
        Csv(format!("# {meta}\n{header}\n"))
    }

    fn row(&mut self, fields: &[&dyn Cell]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.0.push(',');
            }
            f.write_cell(&mut self.0);
        }
        self.0.push('\n');
    }
}

/// A CSV cell. Floats use the shortest round-trip form, with an exponent for
/// very small or very large magnitudes.
trait Cell {
    fn write_cell(&self, out: &mut String);
}

impl Cell for f64 {
    fn write_cell(&self, out: &mut String) {
        write!(out, "{self:?}").expect("writing to a String");
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn write_cell(&self, out: &mut String) {
                write!(out, "{self}").expect("writing to a String");
            }
        }
    )*};
}

display_cell!(i64, u64, usize, u8, i32, u32, str, String, Mover);

impl<T: Cell + ?Sized> Cell for &T {
    fn write_cell(&self, out: &mut String) {
        (**self).write_cell(out)
    }
}

pub fn orbits_csv(spec: &ModelSpec, orbits: &OrbitSet) -> String {
    let mut csv = Csv::new(
        &model_meta(spec),
        "orbit_id,N_m,s,n_s,v_num,v_den,first_member_x,first_member_alpha,winding,net_phase_power",
    );
    for (id, o) in orbits.orbits.iter().enumerate() {
        let first = o.members[0];
        csv.row(&[
            &id,
            &o.len(),
            &o.stride,
            &o.reduced_length,
            o.velocity.numer(),
            o.velocity.denom(),
            &first.x,
            &first.alpha,
            &o.winding,
            &o.net_phase.power(),
        ]);
    }
    csv.0
}

/// Every orbit member with its position along the orbit and canonical phase.
pub fn orbit_members_csv(spec: &ModelSpec, orbits: &OrbitSet) -> String {
    let mut csv = Csv::new(&model_meta(spec), "orbit_id,j,x,alpha,phase_power");
    for (id, o) in orbits.orbits.iter().enumerate() {
        for (j, (m, p)) in o.members.iter().zip(&o.phases).enumerate() {
            csv.row(&[&id, &j, &m.x, &m.alpha, &p.power()]);
        }
    }
    csv.0
}

pub fn field_csv(spec: &ModelSpec, field: &WaveField, extra: &[(&str, Value)]) -> String {
    let meta = with(model_meta(spec), &[("time_step", json!(field.time_step()))]);
    let mut csv = Csv::new(&with(meta, extra), "x,re_R,im_R,re_L,im_L");
    for x in 0..field.n_sites() {
        let (r, l) = (field.right()[x], field.left()[x]);
        csv.row(&[&x, &r.re, &r.im, &l.re, &l.im]);
    }
    csv.0
}

/// Occupations `w_1 … w_4` of each snapshot, with `w_1 - w_3` of the field and
/// of its low-pass companion.
pub fn occupations_csv(spec: &ModelSpec, snapshots: &[(WaveField, WaveField)], k_smooth: usize) -> String {
    let meta = with(model_meta(spec), &[("smoothing_modes", json!(k_smooth))]);
    let mut csv = Csv::new(&meta, "time_step,x,w1,w2,w3,w4,w1_minus_w3,smooth_w1_minus_w3");
    for (field, smooth) in snapshots {
        let p = probabilities(field);
        let s = probabilities(smooth);
        for x in 0..field.n_sites() {
            csv.row(&[
                &field.time_step(),
                &x,
                &p.w[0][x],
                &p.w[1][x],
                &p.w[2][x],
                &p.w[3][x],
                &(p.w[0][x] - p.w[2][x]),
                &(s.w[0][x] - s.w[2][x]),
            ]);
        }
    }
    csv.0
}

/// Momentum distribution `w(k)` for each snapshot, `k ∈ (-N_x/2, N_x/2]`.
pub fn momentum_csv(spec: &ModelSpec, series: &[(u64, Vec<f64>)], units: Units) -> String {
    let n = spec.n_sites();
    let meta = with(model_meta(spec), &[("units", json!(units.as_str()))]);
    let mut csv = Csv::new(&meta, "time_step,k,momentum,w");
    for (t, w) in series {
        for k in signed_momenta(n) {
            let p = units.convert(crate::wave::momentum(n, k), n);
            csv.row(&[t, &k, &p, &w[k.rem_euclid(n as i64) as usize]]);
        }
    }
    csv.0
}

/// Coarse momentum distribution `w̄(k̄)` for each snapshot.
pub fn coarse_momentum_csv(spec: &ModelSpec, series: &[(u64, Vec<f64>)]) -> String {
    let nb = spec.n_coarse();
    let mut csv = Csv::new(&model_meta(spec), "time_step,k_bar,w_bar");
    for (t, w) in series {
        for k in signed_momenta(nb) {
            csv.row(&[t, &k, &w[k.rem_euclid(nb as i64) as usize]]);
        }
    }
    csv.0
}

pub fn spectrum_csv(spec: &ModelSpec, blocks: &[MomentumBlock]) -> Result<String> {
    let n = spec.n_sites();
    let meta = with(model_meta(spec), &[("energy_units", json!(["lattice", "2pi_over_L"]))]);
    let mut csv = Csv::new(&meta, "k_bar,lambda,energy,energy_2pi_over_L,re_eigenvalue,im_eigenvalue");
    for b in blocks {
        let s = b.spectrum()?;
        for (l, (e, z)) in s.energies.iter().zip(&s.eigenvalues).enumerate() {
            csv.row(&[&b.k_bar, &l, e, &Units::TwoPiOverL.convert(*e, n), &z.re, &z.im]);
        }
    }
    Ok(csv.0)
}

/// Dense dump of `W(q̄; Q, Q')` indexed by `(α, l)` pairs.
pub fn block_matrix_csv(spec: &ModelSpec, block: &MomentumBlock) -> String {
    let meta = with(model_meta(spec), &[("k_bar", json!(block.k_bar))]);
    let mut csv = Csv::new(&meta, "row_alpha,row_l,col_alpha,col_l,re,im");
    let name = |a: usize| if a == 0 { "R" } else { "L" };
    for r in 0..block.dim() {
        for c in 0..block.dim() {
            let z = block.matrix[(r, c)];
            let (ra, rl) = (r / block.m_x, block.offset(r % block.m_x));
            let (ca, cl) = (c / block.m_x, block.offset(c % block.m_x));
            csv.row(&[&name(ra), &rl, &name(ca), &cl, &z.re, &z.im]);
        }
    }
    csv.0
}

pub fn transition_csv(spec: &ModelSpec, series: &TransitionSeries) -> String {
    let meta = with(model_meta(spec), &[("dt", json!(series.dt))]);
    let mut csv = Csv::new(&meta, "n,t,re,im");
    for ((n, t), b) in series.offsets.iter().zip(series.times()).zip(&series.values) {
        csv.row(&[n, &t, &b.re, &b.im]);
    }
    csv.0
}

/// `B(ω)` with the smearing kernel centered at `kernel_energy` for overlay.
pub fn frequency_csv(
    spec: &ModelSpec,
    spectrum: &[(f64, C64)],
    kernel: &[C64],
    kernel_energy: f64,
    units: Units,
) -> String {
    let n = spec.n_sites();
    let meta = with(
        model_meta(spec),
        &[("units", json!(units.as_str())), ("kernel_energy", json!(units.convert(kernel_energy, n)))],
    );
    let mut csv = Csv::new(&meta, "k_omega,omega,value_re,value_im,kernel_re,kernel_im");
    let half = (spectrum.len() as i64 - 1) / 2;
    for (i, ((w, b), d)) in spectrum.iter().zip(kernel).enumerate() {
        csv.row(&[&(i as i64 - half), &units.convert(*w, n), &b.re, &b.im, &d.re, &d.im]);
    }
    csv.0
}

pub fn energy_stats_csv(spec: &ModelSpec, rows: &[(u64, EnergyStats)], units: Units) -> String {
    let n = spec.n_sites();
    let meta = with(model_meta(spec), &[("units", json!(units.as_str()))]);
    let mut csv = Csv::new(&meta, "base_time_step,h_tilde_mean,h_tilde_sq,variance");
    let u = units.convert(1.0, n);
    for (t, s) in rows {
        csv.row(&[t, &(s.h_tilde_mean * u), &(s.h_tilde_sq * u * u), &(s.variance * u * u)]);
    }
    csv.0
}

pub fn dispersion_csv(spec: &ModelSpec, curves: &[(u64, DispersionCurve)], units: Units) -> String {
    let n = spec.n_sites();
    let meta = with(model_meta(spec), &[("units", json!(units.as_str()))]);
    let mut csv = Csv::new(&meta, "seed,k,momentum,energy,source,mass");
    for (seed, curve) in curves {
        for p in &curve.points {
            csv.row(&[
                seed,
                &p.k,
                &units.convert(p.momentum, n),
                &units.convert(p.energy, n),
                &p.source.as_str(),
                &units.convert(curve.mass, n),
            ]);
        }
    }
    csv.0
}

/// Diagonal of a coarse density, one row per `(x̄ or k̄, α)`.
pub fn coarse_csv(spec: &ModelSpec, cd: &CoarseDensity, extra: &[(&str, Value)]) -> String {
    let key = match cd.basis {
        Basis::Position => "x_bar",
        Basis::Momentum => "k_bar",
    };
    let mut csv = Csv::new(&with(model_meta(spec), extra), &format!("{key},alpha,value"));
    let nb = cd.n_coarse;
    let idx: Vec<i64> = match cd.basis {
        Basis::Position => (0..nb as i64).collect(),
        Basis::Momentum => signed_momenta(nb),
    };
    for i in idx {
        let j = i.rem_euclid(nb as i64) as usize;
        for (a, name) in ["R", "L"].iter().enumerate() {
            csv.row(&[&i, name, &cd.get(a, j, a, j).re]);
        }
    }
    csv.0
}

/// Full coarse matrix with row/column labels `α:index`.
pub fn coarse_matrix_csv(spec: &ModelSpec, cd: &CoarseDensity) -> String {
    let mut csv = Csv::new(&model_meta(spec), "row,col,re,im");
    let nb = cd.n_coarse;
    let label = |i: usize| format!("{}:{}", if i < nb { "R" } else { "L" }, i % nb);
    for r in 0..2 * nb {
        for c in 0..2 * nb {
            let z = cd.data[(r, c)];
            csv.row(&[&label(r), &label(c), &z.re, &z.im]);
        }
    }
    csv.0
}

/// Scattering points `(t, x)` of the elementary cell.
pub fn pattern_csv(spec: &ModelSpec) -> String {
    let mut csv = Csv::new(&model_meta(spec), "t,x");
    for (t, x) in spec.pattern().points() {
        csv.row(&[t, x]);
    }
    csv.0
}

/// Configurations along each trajectory, one row per micro step including the start.
pub fn trajectories_csv(spec: &ModelSpec, paths: &[(SiteConfig, Vec<SiteConfig>)]) -> String {
    let mut csv = Csv::new(&model_meta(spec), "trajectory_id,step,x,alpha");
    for (id, (start, path)) in paths.iter().enumerate() {
        for (step, c) in std::iter::once(start).chain(path).enumerate() {
            csv.row(&[&id, &step, &c.x, &c.alpha]);
        }
    }
    csv.0
}

/// Reads a field written by [`field_csv`].
pub fn parse_field_csv(text: &str) -> Result<WaveField> {
    let mut time_step = 0;
    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut header_seen = false;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta: Value = serde_json::from_str(meta.trim())
                .map_err(|e| Error::parse("metadata", e.to_string()))?;
            time_step = meta.get("time_step").and_then(Value::as_u64).unwrap_or(0);
            continue;
        }
        if !header_seen {
            if line != "x,re_R,im_R,re_L,im_L" {
                return Err(Error::parse("header", format!("unexpected field header `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::parse("row", format!("line {}: expected 5 columns", line_no + 1)));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i].parse().map_err(|_| Error::parse("row", format!("line {}: bad number `{}`", line_no + 1, cols[i])))
        };
        let x: usize = cols[0].parse().map_err(|_| Error::parse("x", format!("line {}", line_no + 1)))?;
        if x != right.len() {
            return Err(Error::parse("x", format!("line {}: sites must be listed in order", line_no + 1)));
        }
        right.push(C64::new(num(1)?, num(2)?));
        left.push(C64::new(num(3)?, num(4)?));
    }
    WaveField::new(right, left, time_step)
}
