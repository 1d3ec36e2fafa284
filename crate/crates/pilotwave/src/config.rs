//! Declarative run configuration (TOML).
//!
//! A file names one experiment and carries the block of the same name:
//!
//! ```toml
//! experiment = "gaussian-linear"
//!
//! [gaussian_linear]
//! hbar = 1.0
//! ...
//! ```
//!
//! Every block rejects unknown keys. Angles accept numbers (radians) or
//! strings such as `"pi/4"` and `"3pi/4"`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pilotwave_core::classical_hj::{Potential, PotentialSpec};
use pilotwave_core::eprb::Order;
use pilotwave_core::pilot::jonsson::JonssonConfig;
use pilotwave_core::semiclassical::{CoherentSweep, DoubleSlitSweep, GaussianLinearSweep, DEFAULT_DIVISORS};
use pilotwave_core::spin_dynamics::MagnetConfig;
use pilotwave_core::wavefields::GaussianPacketSpec;
use pilotwave_core::{Axis, Boundary, Grid, Position};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_error, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    HopfLax,
    GaussianLinear,
    Jonsson,
    SternGerlach,
    Eprb,
    Coherent,
    Sweep,
}

pub const EXPERIMENTS: [ExperimentKind; 7] = [
    ExperimentKind::HopfLax,
    ExperimentKind::GaussianLinear,
    ExperimentKind::Jonsson,
    ExperimentKind::SternGerlach,
    ExperimentKind::Eprb,
    ExperimentKind::Coherent,
    ExperimentKind::Sweep,
];

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::HopfLax => "hopf-lax",
            Self::GaussianLinear => "gaussian-linear",
            Self::Jonsson => "jonsson",
            Self::SternGerlach => "stern-gerlach",
            Self::Eprb => "eprb",
            Self::Coherent => "coherent",
            Self::Sweep => "sweep",
        }
    }

    /// TOML block holding the experiment's parameters.
    pub fn block(self) -> &'static str {
        match self {
            Self::HopfLax => "hopf_lax",
            Self::GaussianLinear => "gaussian_linear",
            Self::Jonsson => "jonsson",
            Self::SternGerlach => "stern_gerlach",
            Self::Eprb => "eprb",
            Self::Coherent => "coherent",
            Self::Sweep => "sweep",
        }
    }

    /// Sub-blocks that have no defaults.
    pub fn required_blocks(self) -> &'static [&'static str] {
        match self {
            Self::HopfLax => &["grid", "potential", "initial"],
            Self::GaussianLinear => &["grid", "potential", "packet", "integrator", "sampling"],
            Self::Jonsson | Self::SternGerlach | Self::Eprb | Self::Coherent | Self::Sweep => &[],
        }
    }

    pub fn default_config(self) -> &'static str {
        match self {
            Self::HopfLax => include_str!("../configs/hopf-lax.toml"),
            Self::GaussianLinear => include_str!("../configs/gaussian-linear.toml"),
            Self::Jonsson => include_str!("../configs/jonsson.toml"),
            Self::SternGerlach => include_str!("../configs/stern-gerlach.toml"),
            Self::Eprb => include_str!("../configs/eprb.toml"),
            Self::Coherent => include_str!("../configs/coherent.toml"),
            Self::Sweep => include_str!("../configs/sweep.toml"),
        }
    }

    pub fn from_name(name: &str) -> Result<Self, CliError> {
        EXPERIMENTS.iter().copied().find(|k| k.name() == name).ok_or_else(|| CliError::UnknownExperiment {
            name: name.to_string(),
            suggestion: nearest(name, EXPERIMENTS.iter().map(|k| k.name())),
        })
    }
}

/// Closest candidate by Jaro-Winkler similarity, if any is plausible.
pub fn nearest<'a>(name: &str, candidates: impl Iterator<Item = &'a str>) -> Option<String> {
    candidates
        .map(|c| (strsim::jaro_winkler(name, c), c))
        .filter(|(s, _)| *s > 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.to_string())
}

/// An angle in radians; in TOML either a number or a multiple of pi.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Angle(pub f64);

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Angle(v)),
            Raw::Int(v) => Ok(Angle(v as f64)),
            Raw::Text(s) => parse_angle(&s).map(Angle).ok_or_else(|| serde::de::Error::custom(format!("cannot read angle `{s}`"))),
        }
    }
}

/// `"pi"`, `"-pi/2"`, `"3pi/4"`, `"3*pi/8"` or a plain number.
pub fn parse_angle(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let Some(at) = t.find("pi") else {
        return t.parse().ok();
    };
    let (head, tail) = (&t[..at], &t[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let num: f64 = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse().ok()?,
    };
    let den: f64 = match tail {
        "" => 1.0,
        d => d.strip_prefix('/')?.parse().ok()?,
    };
    (den != 0.0).then(|| num * PI / den)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

/// Axes spanning `[-half_width, half_width]` with `nodes` points; one entry
/// per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub half_width: Vec<f64>,
    pub nodes: Vec<usize>,
    /// Width of the absorbing edge layer; periodic when absent.
    pub absorbing_width: Option<f64>,
}

impl GridBlock {
    pub fn line(half_width: f64, nodes: usize, absorbing_width: Option<f64>) -> Self {
        Self { half_width: vec![half_width], nodes: vec![nodes], absorbing_width }
    }

    pub fn build(&self, block: &str) -> Result<Grid, CliError> {
        let field = format!("{block}.grid");
        if self.half_width.is_empty() || self.half_width.len() > 2 {
            return Err(CliError::invalid(format!("{field}.half_width"), "needs one or two axes"));
        }
        if self.nodes.len() != self.half_width.len() {
            return Err(CliError::invalid(format!("{field}.nodes"), "needs one entry per axis"));
        }
        let axes = self
            .half_width
            .iter()
            .zip(&self.nodes)
            .map(|(&h, &n)| {
                if !(h.is_finite() && h > 0.0) {
                    return Err(CliError::invalid(format!("{field}.half_width"), "must be positive"));
                }
                Axis::centered(h, n).map_err(|e| CliError::invalid(format!("{field}.nodes"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let boundary = match self.absorbing_width {
            None => Boundary::Periodic,
            Some(w) => Boundary::Absorbing { width: w },
        };
        let grid = if axes.len() == 1 { Grid::line(axes[0], boundary) } else { Grid::plane(axes[0], axes[1], boundary) };
        grid.map_err(|e| CliError::invalid(field, e.to_string()))
    }
}

fn position(v: &[f64], dims: usize, field: &str) -> Result<Position, CliError> {
    match v.len() {
        0 => Ok([0.0, 0.0]),
        n if n == dims => Ok([v[0], if n == 2 { v[1] } else { 0.0 }]),
        _ => Err(CliError::invalid(field, format!("needs {dims} components"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialBlock {
    Free,
    /// `V = -force . x`.
    Linear { force: Vec<f64> },
    Harmonic { omega: f64 },
}

impl PotentialBlock {
    pub fn build(&self, block: &str, mass: f64, dims: usize) -> Result<PotentialSpec, CliError> {
        let kind = match self {
            PotentialBlock::Free => Potential::Free,
            PotentialBlock::Linear { force } => Potential::Linear { force: position(force, dims, &format!("{block}.potential.force"))? },
            PotentialBlock::Harmonic { omega } => Potential::Harmonic { omega: *omega },
        };
        PotentialSpec::new(kind, mass).map_err(|e| config_error(block, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketBlock {
    pub sigma0: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default)]
    pub velocity: Vec<f64>,
}

impl PacketBlock {
    pub fn build(&self, block: &str, dims: usize) -> Result<GaussianPacketSpec, CliError> {
        let spec = GaussianPacketSpec {
            dims,
            sigma0: self.sigma0,
            center: position(&self.center, dims, &format!("{block}.packet.center"))?,
            velocity: position(&self.velocity, dims, &format!("{block}.packet.velocity"))?,
        };
        spec.validate().map_err(|e| config_error(&format!("{block}.packet"), e))?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    pub dt: f64,
    pub steps: usize,
    /// Steps between stored snapshots.
    pub snapshot_every: usize,
}

impl IntegratorBlock {
    pub fn validate(&self, block: &str) -> Result<(), CliError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CliError::invalid(format!("{block}.integrator.dt"), "must be positive"));
        }
        if self.steps == 0 {
            return Err(CliError::invalid(format!("{block}.integrator.steps"), "must be at least 1"));
        }
        if self.snapshot_every == 0 || self.snapshot_every > self.steps {
            return Err(CliError::invalid(format!("{block}.integrator.snapshot_every"), "must lie in 1..=steps"));
        }
        Ok(())
    }
}

fn default_bins() -> usize {
    100
}

fn default_bundle() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    /// Equilibrium particles.
    pub n: usize,
    pub seed: u64,
    /// Histogram bins per axis for the equivariance test.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Quantile trajectories recorded at every step.
    #[serde(default = "default_bundle")]
    pub bundle: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfLaxMethod {
    /// Minimum over every grid node.
    #[default]
    Exhaustive,
    /// Monotone argmin sweep (1D, convex kernels).
    Monotone,
    /// Closed form for a linear initial action.
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialAction {
    /// `S0 = m v . x`.
    Linear { velocity: Vec<f64> },
    /// Min-plus Dirac at `x0`.
    DeltaMin { x0: Vec<f64> },
}

/// Gaussian density carried along the characteristics of a linear `S0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportBlock {
    pub sigma0: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    pub steps: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfLaxBlock {
    #[serde(default = "one")]
    pub mass: f64,
    pub time: f64,
    #[serde(default)]
    pub method: HopfLaxMethod,
    pub grid: GridBlock,
    pub potential: PotentialBlock,
    pub initial: InitialAction,
    pub transport: Option<TransportBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianLinearBlock {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub grid: GridBlock,
    pub potential: PotentialBlock,
    pub packet: PacketBlock,
    pub integrator: IntegratorBlock,
    pub sampling: SamplingBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SternGerlachBlock {
    pub theta0: Angle,
    pub phi0: Angle,
    pub n_atoms: usize,
    pub seed: u64,
    pub sigma0: f64,
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    pub record_every: usize,
    pub bins: usize,
    /// `(x, z)` plane or a z line; z is the last axis.
    pub grid: GridBlock,
    pub magnet: MagnetConfig,
}

impl Default for SternGerlachBlock {
    fn default() -> Self {
        Self {
            theta0: Angle(PI / 3.0),
            phi0: Angle(0.0),
            n_atoms: 10_000,
            seed: 1922,
            sigma0: 1.0,
            hbar: 1.0,
            mass: 1.0,
            dt: 0.025,
            record_every: 8,
            bins: 100,
            grid: GridBlock { half_width: vec![8.0, 64.0], nodes: vec![32, 1024], absorbing_width: Some(1.5) },
            magnet: MagnetConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EprbBlock {
    /// Analyzer offsets for the correlation curve.
    pub deltas: Vec<Angle>,
    /// Pairs per offset.
    pub n_pairs: usize,
    pub seed: u64,
    pub order: Order,
    /// `(a, a', b, b')`; omitted to skip the CHSH run.
    pub chsh: Option<[Angle; 4]>,
    pub sigma0: f64,
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    /// z line shared by both devices.
    pub grid: GridBlock,
    pub magnet: MagnetConfig,
}

impl Default for EprbBlock {
    fn default() -> Self {
        Self {
            deltas: (0..=8).map(|k| Angle(k as f64 * PI / 8.0)).collect(),
            n_pairs: 10_000,
            seed: 1964,
            order: Order::AFirst,
            chsh: Some([Angle(0.0), Angle(PI / 2.0), Angle(PI / 4.0), Angle(3.0 * PI / 4.0)]),
            sigma0: 1.0,
            hbar: 1.0,
            mass: 1.0,
            dt: 0.05,
            grid: GridBlock::line(64.0, 1024, Some(1.5)),
            magnet: MagnetConfig { flight_time: 4.0, ..MagnetConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherentBlock {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    /// Initial center; its length sets the dimension.
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub periods: f64,
    pub steps: usize,
    pub record_every: usize,
    /// Envelope grid half-width in packet widths, and its node count per axis.
    pub half_width_sigmas: f64,
    pub nodes: usize,
    /// Quantile trajectories.
    pub n_traj: usize,
}

impl Default for CoherentBlock {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
            x0: vec![4.0],
            v0: vec![0.0],
            periods: 2.0,
            steps: 8000,
            record_every: 40,
            half_width_sigmas: 10.0,
            nodes: 128,
            n_traj: 26,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    #[default]
    DoubleSlit,
    GaussianLinear,
    CoherentOscillator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub kind: SweepKind,
    /// hbar is divided by each entry in turn; strictly ascending.
    pub divisors: Vec<f64>,
    pub gaussian_linear: GaussianLinearSweep,
    pub double_slit: DoubleSlitSweep,
    pub coherent_oscillator: CoherentSweep,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            kind: SweepKind::DoubleSlit,
            divisors: DEFAULT_DIVISORS.to_vec(),
            gaussian_linear: GaussianLinearSweep::default(),
            double_slit: DoubleSlitSweep::default(),
            coherent_oscillator: CoherentSweep::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hopf_lax: Option<HopfLaxBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_linear: Option<GaussianLinearBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jonsson: Option<JonssonConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stern_gerlach: Option<SternGerlachBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eprb: Option<EprbBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherent: Option<CoherentBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        // Name the experiment before complaining about its block.
        #[derive(Deserialize)]
        struct Head {
            experiment: Option<String>,
        }
        let head: Head = toml::from_str(text).map_err(|e| CliError::ConfigParse(e.message().to_string()))?;
        let name = head.experiment.ok_or_else(|| CliError::ConfigParse("missing field `experiment`".into()))?;
        ExperimentKind::from_name(&name)?;
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().message().to_string();
            CliError::ConfigParse(if path == "." { msg } else { format!("{path}: {msg}") })
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind, CliError> {
        let kind = ExperimentKind::from_name(&self.experiment)?;
        let present = [
            ("hopf_lax", self.hopf_lax.is_some()),
            ("gaussian_linear", self.gaussian_linear.is_some()),
            ("jonsson", self.jonsson.is_some()),
            ("stern_gerlach", self.stern_gerlach.is_some()),
            ("eprb", self.eprb.is_some()),
            ("coherent", self.coherent.is_some()),
            ("sweep", self.sweep.is_some()),
        ];
        for (block, here) in present {
            if block == kind.block() && !here {
                return Err(CliError::invalid(block, format!("missing block `[{block}]` for experiment `{}`", kind.name())));
            }
            if block != kind.block() && here {
                return Err(CliError::invalid(block, format!("block does not belong to experiment `{}`", kind.name())));
            }
        }
        Ok(kind)
    }

    /// SHA-256 of the parsed config in canonical JSON form, so comments,
    /// key order and the output directory do not matter.
    pub fn hash(&self) -> String {
        let physics = Self { output: OutputBlock::default(), ..self.clone() };
        let canonical = serde_json::to_vec(&physics).expect("config serializes");
        format!("{:x}", Sha256::digest(&canonical))
    }
}
