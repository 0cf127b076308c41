use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rpca::automaton::{Mover, SiteConfig, decompose_orbits, trajectory};
use rpca::blocks::{
    ScanMode, block_sweep, build_block, diagonalize_block, dispersion_scan_with_cap, eigenstate_field,
};
use rpca::coarse::{
    Basis, coarse_in_momentum_from_field, coarse_momentum_fourier, coarse_position_from_field, scale_separation,
};
use rpca::model::{Eta, ModelSpec, generate_pattern, load_model, preset_model_a, preset_model_b};
use rpca::report::{self, Units};
use rpca::spectral::{
    coarse_momentum_distribution, delta_kernel, energy_stats_forward, frequency_spectrum, low_pass,
    momentum_distribution, signed_momenta, transition_elements,
};
use rpca::wave::{DiracParams, WaveField, dirac_step, evolve, meso_evolve, plane_wave};
use rpca::{Error, Result};
use serde_json::json;

use crate::args::*;
use crate::output::{Manifest, Outputs, write_atomic};

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Loads a model and prints the scale-separation advisory when it applies.
fn load(path: &Path, manifest: &mut Manifest) -> Result<ModelSpec> {
    let spec = load_model(path)?;
    let ratio = scale_separation(&spec);
    manifest.note("scale_separation", json!(ratio));
    if ratio < 10.0 {
        eprintln!(
            "advisory: N_x / (4 M_x M_t) = {ratio:.3}; coarse quantities are not expected to follow a \
             low-energy continuum description unless this ratio is large"
        );
    }
    Ok(spec)
}

struct Initial {
    field: WaveField,
    /// Mass of a plane-wave start in units `1/ε`.
    plane_mass: Option<f64>,
    energy: Option<f64>,
}

fn initial_field(spec: &ModelSpec, init: &InitSpec) -> Result<Initial> {
    let n = spec.n_sites();
    match init {
        InitSpec::Plane { k, mass_units } => {
            let mass = mass_units * TAU / n as f64;
            Ok(Initial { field: plane_wave(n, *k, mass), plane_mass: Some(mass), energy: None })
        }
        InitSpec::Eigen { k_bar, lambda } => {
            let block = diagonalize_block(build_block(spec, *k_bar)?)?;
            let energy = block
                .spectrum()?
                .energies
                .get(*lambda)
                .copied()
                .ok_or_else(|| usage(format!("λ = {lambda} out of range 0..{}", block.dim())))?;
            Ok(Initial { field: eigenstate_field(&block, *lambda)?, plane_mass: None, energy: Some(energy) })
        }
        InitSpec::File(path) => {
            let field = report::parse_field_csv(&fs::read_to_string(path)?)?.with_time_step(0);
            if field.n_sites() != n {
                return Err(Error::Validation(format!(
                    "field has {} sites but the model has {n}",
                    field.n_sites()
                )));
            }
            Ok(Initial { field, plane_mass: None, energy: None })
        }
    }
}

fn init_meta(init: &InitSpec, initial: &Initial) -> Vec<(&'static str, serde_json::Value)> {
    let mut meta = vec![("init", json!(format!("{init:?}")))];
    if let Some(m) = initial.plane_mass {
        meta.push(("mass", json!(m)));
    }
    if let Some(e) = initial.energy {
        meta.push(("energy", json!(e)));
    }
    meta
}

pub fn gen_model(args: &GenModelArgs) -> Result<()> {
    let mut manifest = Manifest::new("gen-model");
    let spec = match args.preset {
        Some(Preset::ModelA) => preset_model_a(args.seed.unwrap_or(1))?,
        Some(Preset::ModelB) => match args.seed {
            Some(seed) => preset_model_b()?.reseeded(seed)?,
            None => preset_model_b()?,
        },
        None => {
            let (nx, mx, mt, ntot) = (
                args.nx.expect("required by clap"),
                args.mx.expect("required by clap"),
                args.mt.expect("required by clap"),
                args.ntot.expect("required by clap"),
            );
            let eta = match args.eta {
                Some(EtaArg::MinusI) => Eta::MinusI,
                _ => Eta::PlusOne,
            };
            let pattern = generate_pattern(mx, mt, ntot, args.seed.unwrap_or(0))?;
            ModelSpec::new(nx, mx, mt, eta, pattern, args.label.clone().unwrap_or_else(|| "custom".into()))?
        }
    };
    let spec = match &args.label {
        Some(label) => spec.with_label(label.clone()),
        None => spec,
    };
    write_atomic(&args.out, spec.to_json().as_bytes())?;
    manifest.note("scale_separation", json!(scale_separation(&spec)));
    let manifest = manifest.model(&args.out, spec.pattern().seed());
    let name = args.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let manifest_path = args.out.with_file_name(format!("{name}.manifest.json"));
    write_atomic(&manifest_path, manifest.finish(std::slice::from_ref(&args.out)).as_bytes())
}

fn snapshot_times(args: &EvolveArgs) -> Result<Vec<u64>> {
    let mut times = BTreeSet::from([0, args.steps]);
    if let Some(every) = args.snap_every {
        if every == 0 {
            return Err(usage("--snap-every must be positive"));
        }
        times.extend((0..=args.steps).step_by(every as usize));
    }
    for &t in &args.snap_at {
        if t > args.steps {
            return Err(usage(format!("snapshot time {t} is beyond --steps {}", args.steps)));
        }
        times.insert(t);
    }
    Ok(times.into_iter().collect())
}

pub fn evolve_cmd(args: &EvolveArgs) -> Result<()> {
    let mut manifest = Manifest::new("evolve");
    let spec = load(&args.model, &mut manifest)?;
    let units: Units = args.units.units.into();
    let initial = initial_field(&spec, &args.init)?;
    let times = snapshot_times(args)?;
    let meta = init_meta(&args.init, &initial);

    let free = ModelSpec::free(spec.n_sites(), spec.m_x(), spec.m_t(), spec.eta())?;
    let dirac = initial.plane_mass.map(|m| DiracParams::new(m, true)).transpose()?;
    let mut out = Outputs::new(&args.out);
    let (mut f, mut f_free, mut f_dirac) = (initial.field.clone(), initial.field.clone(), initial.field.clone());
    let mut snaps = Vec::new();
    let (mut momenta, mut coarse) = (Vec::new(), Vec::new());
    let mut now = 0;
    for &t in &times {
        evolve(&spec, &mut f, t - now);
        let smooth = low_pass(&f, args.smooth);
        out.add(format!("field_t{t:06}.csv"), report::field_csv(&spec, &f, &meta));
        out.add(format!("smooth_t{t:06}.csv"), report::field_csv(&spec, &smooth, &[("smoothing_modes", json!(args.smooth))]));
        if let Some(params) = &dirac {
            evolve(&free, &mut f_free, t - now);
            for _ in now..t {
                dirac_step(params, &mut f_dirac);
            }
            out.add(format!("reference_free_t{t:06}.csv"), report::field_csv(&spec, &f_free, &[("reference", json!("free"))]));
            out.add(
                format!("reference_dirac_t{t:06}.csv"),
                report::field_csv(&spec, &f_dirac, &[("reference", json!("dirac")), ("mass", json!(params.mass))]),
            );
        }
        momenta.push((t, momentum_distribution(&f)));
        coarse.push((t, coarse_momentum_distribution(&f, &spec)));
        snaps.push((f.clone(), smooth));
        now = t;
    }
    out.add("occupations.csv", report::occupations_csv(&spec, &snaps, args.smooth));
    out.add("momentum.csv", report::momentum_csv(&spec, &momenta, units));
    out.add("coarse_momentum.csv", report::coarse_momentum_csv(&spec, &coarse));
    out.commit(manifest.model(&args.model, spec.pattern().seed()))?;
    Ok(())
}

fn parse_config(s: &str) -> Result<SiteConfig> {
    let bad = || usage(format!("bad configuration `{s}`: expected x:R or x:L"));
    let (x, a) = s.split_once(':').ok_or_else(bad)?;
    let x = x.trim().parse().map_err(|_| bad())?;
    let alpha = match a.trim() {
        "R" => Mover::R,
        "L" => Mover::L,
        _ => return Err(bad()),
    };
    Ok(SiteConfig::new(x, alpha))
}

pub fn orbits_cmd(args: &OrbitsArgs) -> Result<()> {
    let mut manifest = Manifest::new("orbits");
    let spec = load(&args.model, &mut manifest)?;
    let orbits = decompose_orbits(&spec);
    let mut out = Outputs::new(&args.out);
    out.add("orbits.csv", report::orbits_csv(&spec, &orbits));
    out.add("orbit_members.csv", report::orbit_members_csv(&spec, &orbits));
    out.add("pattern.csv", report::pattern_csv(&spec));
    if !args.trajectory.is_empty() {
        let paths = args
            .trajectory
            .iter()
            .map(|s| {
                let c = parse_config(s)?;
                if c.x >= spec.n_sites() {
                    return Err(usage(format!("site {} outside the chain of {}", c.x, spec.n_sites())));
                }
                Ok((c, trajectory(&spec, c, args.steps)))
            })
            .collect::<Result<Vec<_>>>()?;
        out.add("trajectories.csv", report::trajectories_csv(&spec, &paths));
    }
    out.commit(manifest.model(&args.model, spec.pattern().seed()))?;
    Ok(())
}

pub fn spectrum_cmd(args: &SpectrumArgs) -> Result<()> {
    let mut manifest = Manifest::new("spectrum");
    let spec = load(&args.model, &mut manifest)?;
    let units: Units = args.units.units.into();
    if args.window == 0 || args.center > args.window {
        return Err(usage("need --window ≥ 1 and --center ≤ --window"));
    }
    let initial = initial_field(&spec, &args.init)?;
    let mut history = Vec::with_capacity(args.window as usize + 1);
    let mut f = initial.field.clone();
    history.push(f.clone());
    for _ in 0..args.window {
        meso_evolve(&spec, &mut f, 1);
        history.push(f.clone());
    }
    let series = transition_elements(&history, args.center as usize)?;
    let spectrum = frequency_spectrum(&series);

    let stats_at = [0, args.window as usize / 2, args.window as usize];
    let stats = stats_at
        .iter()
        .map(|&i| Ok((history[i].time_step() + 2 * spec.m_t() as u64, energy_stats_forward(&spec, &history[i])?)))
        .collect::<Result<Vec<_>>>()?;
    let n = spec.n_sites();
    let kernel_energy = match args.kernel_energy {
        Some(e) => e / units.convert(1.0, n),
        None => stats[0].1.h_tilde_mean,
    };
    let kernel: Vec<_> = spectrum.iter().map(|(w, _)| delta_kernel(*w, kernel_energy, &series)).collect();

    let mut out = Outputs::new(&args.out);
    out.add("transition.csv", report::transition_csv(&spec, &series));
    out.add("frequency.csv", report::frequency_csv(&spec, &spectrum, &kernel, kernel_energy, units));
    out.add("energy_stats.csv", report::energy_stats_csv(&spec, &stats, units));
    manifest.note("init", json!(format!("{:?}", args.init)));
    out.commit(manifest.model(&args.model, spec.pattern().seed()))?;
    Ok(())
}

pub fn blocks_cmd(args: &BlocksArgs) -> Result<()> {
    let mut manifest = Manifest::new("blocks");
    let spec = load(&args.model, &mut manifest)?;
    let k_bars = match &args.kbar {
        Some(s) => parse_index_list(s).map_err(usage)?,
        None => signed_momenta(spec.n_coarse()),
    };
    let blocks = block_sweep(&spec, &k_bars, args.cap).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!(
            "{msg}. The mean-energy mode of `rpca dispersion` works without dense diagonalization."
        )),
        other => other,
    })?;
    let mut out = Outputs::new(&args.out);
    out.add("spectrum.csv", report::spectrum_csv(&spec, &blocks)?);
    let mut worst = (0.0f64, 0.0f64);
    for b in &blocks {
        worst.0 = worst.0.max(b.leakage);
        worst.1 = worst.1.max(b.spectrum()?.residual);
        if args.dump_matrix {
            out.add(format!("block_k{}.csv", b.k_bar), report::block_matrix_csv(&spec, b));
        }
        if args.dump_eigvecs {
            for (lambda, e) in b.spectrum()?.energies.iter().enumerate() {
                let meta = [("k_bar", json!(b.k_bar)), ("lambda", json!(lambda)), ("energy", json!(e))];
                out.add(
                    format!("eigvec_k{}_l{lambda:04}.csv", b.k_bar),
                    report::field_csv(&spec, &eigenstate_field(b, lambda)?, &meta),
                );
            }
        }
    }
    manifest.note("max_leakage", json!(worst.0));
    manifest.note("max_eigen_residual", json!(worst.1));
    out.commit(manifest.model(&args.model, spec.pattern().seed()))?;
    Ok(())
}

pub fn dispersion_cmd(args: &DispersionArgs) -> Result<()> {
    let mut manifest = Manifest::new("dispersion");
    let spec = load(&args.model, &mut manifest)?;
    let units: Units = args.units.units.into();
    let momenta = parse_index_list(&args.momenta).map_err(usage)?;
    let mode = match args.mode {
        ScanModeArg::BlockLowest => ScanMode::BlockLowest,
        ScanModeArg::MeanEnergy => ScanMode::MeanEnergy,
    };
    let seeds = if args.seeds.is_empty() { vec![spec.pattern().seed()] } else { args.seeds.clone() };
    let curves = seeds
        .iter()
        .map(|&seed| {
            let s = if args.seeds.is_empty() { spec.clone() } else { spec.reseeded(seed)? };
            Ok((seed, dispersion_scan_with_cap(&s, mode, &momenta, args.cap)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outputs::new(&args.out);
    out.add("dispersion.csv", report::dispersion_csv(&spec, &curves, units));
    manifest.note("seeds", json!(seeds));
    out.commit(manifest.model(&args.model, spec.pattern().seed()))?;
    Ok(())
}

pub fn coarse_cmd(args: &CoarseArgs) -> Result<()> {
    let mut manifest = Manifest::new("coarse");
    let spec = load(&args.model, &mut manifest)?;
    let initial = initial_field(&spec, &args.init)?;
    let times: BTreeSet<u64> = args.times.iter().copied().collect();
    let mut out = Outputs::new(&args.out);
    let mut f = initial.field.clone();
    let mut now = 0;
    let mut series = Vec::new();
    for &t in &times {
        meso_evolve(&spec, &mut f, t - now);
        now = t;
        let bar = coarse_position_from_field(&f, &spec)?;
        let bar_q = coarse_momentum_fourier(&bar)?;
        let hat = coarse_in_momentum_from_field(&f, &spec)?;
        let meta = |name: &str, cd: &rpca::coarse::CoarseDensity| {
            vec![
                ("meso_step", json!(t)),
                ("quantity", json!(name)),
                ("purity_defect", json!(cd.purity_defect())),
                ("hermiticity_defect", json!(cd.hermiticity_defect())),
            ]
        };
        out.add(format!("coarse_position_t{t:05}.csv"), report::coarse_csv(&spec, &bar, &meta("rho_bar", &bar)));
        out.add(format!("coarse_momentum_bar_t{t:05}.csv"), report::coarse_csv(&spec, &bar_q, &meta("rho_bar", &bar_q)));
        out.add(format!("coarse_momentum_hat_t{t:05}.csv"), report::coarse_csv(&spec, &hat, &meta("rho_hat", &hat)));
        if args.dump_matrix {
            debug_assert_eq!(bar.basis, Basis::Position);
            out.add(format!("rho_bar_position_t{t:05}.csv"), report::coarse_matrix_csv(&spec, &bar));
            out.add(format!("rho_bar_momentum_t{t:05}.csv"), report::coarse_matrix_csv(&spec, &bar_q));
            out.add(format!("rho_hat_momentum_t{t:05}.csv"), report::coarse_matrix_csv(&spec, &hat));
        }
        series.push((f.time_step(), coarse_momentum_distribution(&f, &spec)));
    }
    out.add("coarse_momentum_series.csv", report::coarse_momentum_csv(&spec, &series));
    manifest.note("init", json!(format!("{:?}", args.init)));
    out.commit(manifest.model(&args.model, spec.pattern().seed()))?;
    Ok(())
}
