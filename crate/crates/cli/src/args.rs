use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rpca::report::Units;

#[derive(Debug, Parser)]
#[command(name = "rpca", version, about = "Random probabilistic cellular automata: evolution, orbits, spectra, coarse graining")]
pub struct Cli {
    /// Worker threads for block sweeps and seed sweeps (default: all cores).
    #[arg(long, global = true, env = "RPCA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a canonical model file.
    GenModel(GenModelArgs),
    /// Evolve a field and write snapshots, occupations and momentum distributions.
    Evolve(EvolveArgs),
    /// Decompose the meso-step map into orbits; optionally replay trajectories.
    Orbits(OrbitsArgs),
    /// Transition elements B(t), their frequency transform B(ω) and H̃ statistics.
    Spectrum(SpectrumArgs),
    /// Build and diagonalize coarse-momentum blocks.
    Blocks(BlocksArgs),
    /// Dispersion relation from block spectra or mean energies.
    Dispersion(DispersionArgs),
    /// Coarse-grained density matrices and occupations over time.
    Coarse(CoarseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Lattice,
    #[value(name = "2pi-over-L")]
    TwoPiOverL,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Lattice => Units::Lattice,
            UnitsArg::TwoPiOverL => Units::TwoPiOverL,
        }
    }
}

#[derive(Debug, Args)]
pub struct UnitsOpt {
    /// Units for reported momenta and energies.
    #[arg(long, value_enum, default_value = "2pi-over-L")]
    pub units: UnitsArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    ModelA,
    ModelB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EtaArg {
    #[value(name = "plus-one")]
    PlusOne,
    #[value(name = "minus-i")]
    MinusI,
}

#[derive(Debug, Args)]
pub struct GenModelArgs {
    /// Named preset; conflicts with explicit geometry flags.
    #[arg(long, value_enum, conflicts_with_all = ["nx", "mx", "mt", "ntot", "eta"])]
    pub preset: Option<Preset>,
    /// Number of sites N_x.
    #[arg(long, required_unless_present = "preset")]
    pub nx: Option<usize>,
    /// Cell width M_x (N_x must be a multiple).
    #[arg(long, required_unless_present = "preset")]
    pub mx: Option<usize>,
    /// Cell duration M_t.
    #[arg(long, required_unless_present = "preset")]
    pub mt: Option<usize>,
    /// Number of scattering points per cell.
    #[arg(long, required_unless_present = "preset")]
    pub ntot: Option<usize>,
    #[arg(long, value_enum)]
    pub eta: Option<EtaArg>,
    /// Pattern seed (presets: overrides the default seed).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub label: Option<String>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Initial field: `plane:K:M` (momentum index K, mass M in units 2π/L),
/// `eigen:KBAR:LAMBDA` (block eigenstate), or `file:PATH` (field CSV).
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Plane { k: i64, mass_units: f64 },
    Eigen { k_bar: i64, lambda: usize },
    File(PathBuf),
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.splitn(3, ':').collect();
        let bad = |what: &str| format!("bad init spec `{s}`: {what}");
        match parts.as_slice() {
            ["plane", k, m] => {
                let k = k.parse().map_err(|_| bad("momentum index must be an integer"))?;
                let mass_units: f64 = m.parse().map_err(|_| bad("mass must be a number"))?;
                if !mass_units.is_finite() || mass_units < 0.0 {
                    return Err(bad("mass must be finite and nonnegative"));
                }
                Ok(InitSpec::Plane { k, mass_units })
            }
            ["eigen", k, l] => Ok(InitSpec::Eigen {
                k_bar: k.parse().map_err(|_| bad("k̄ must be an integer"))?,
                lambda: l.parse().map_err(|_| bad("λ must be a nonnegative integer"))?,
            }),
            ["file", rest @ ..] if !rest.is_empty() => Ok(InitSpec::File(PathBuf::from(rest.join(":")))),
            _ => Err(bad("expected plane:K:M, eigen:KBAR:LAMBDA or file:PATH")),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub init: InitSpec,
    /// Micro steps to evolve.
    #[arg(long)]
    pub steps: u64,
    /// Snapshot cadence in micro steps (the final step is always kept).
    #[arg(long, conflicts_with = "snap_at")]
    pub snap_every: Option<u64>,
    /// Explicit snapshot times in micro steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub snap_at: Vec<u64>,
    /// Fourier modes |k| ≤ K kept in the smoothed companion series.
    #[arg(long, default_value_t = 8)]
    pub smooth: usize,
    #[command(flatten)]
    pub units: UnitsOpt,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OrbitsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Start configurations `x:R` or `x:L` to replay, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub trajectory: Vec<String>,
    /// Micro steps per replayed trajectory.
    #[arg(long, default_value_t = 64)]
    pub steps: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub init: InitSpec,
    /// Window length N̄_t in meso steps; N̄_t + 1 samples are used.
    #[arg(long, default_value_t = 64)]
    pub window: u64,
    /// Position of t̄ within the window (0 = first sample, N̄_t/2 = symmetric).
    #[arg(long, default_value_t = 0)]
    pub center: u64,
    /// Energy at which to centre the overlay kernel, in the chosen units
    /// (default: the measured ⟨H̃⟩).
    #[arg(long, allow_hyphen_values = true)]
    pub kernel_energy: Option<f64>,
    #[command(flatten)]
    pub units: UnitsOpt,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BlocksArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Coarse momenta, e.g. `1`, `0,3,5` or `-4..4` (inclusive); default: all.
    #[arg(long, allow_hyphen_values = true)]
    pub kbar: Option<String>,
    /// Largest N_x diagonalized densely.
    #[arg(long, default_value_t = rpca::blocks::DEFAULT_DENSE_CAP)]
    pub cap: usize,
    /// Also write each block matrix W(q̄; Q, Q').
    #[arg(long)]
    pub dump_matrix: bool,
    /// Also write each eigenvector as a field CSV.
    #[arg(long)]
    pub dump_eigvecs: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScanModeArg {
    BlockLowest,
    MeanEnergy,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ScanModeArg,
    /// Momentum indices (k for mean-energy, k̄ for block-lowest), e.g. `1..8`.
    #[arg(long, allow_hyphen_values = true)]
    pub momenta: String,
    /// Regenerate the pattern with each seed (same n_tot); default: the model's own pattern.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = rpca::blocks::DEFAULT_DENSE_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub units: UnitsOpt,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoarseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub init: InitSpec,
    /// Meso steps at which to report, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub times: Vec<u64>,
    /// Also write the full coarse matrices.
    #[arg(long)]
    pub dump_matrix: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `a`, `a,b,c` or `a..b` (inclusive).
pub fn parse_index_list(s: &str) -> Result<Vec<i64>, String> {
    let bad = || format!("bad index list `{s}`: expected `a`, `a,b,c` or `a..b`");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}
