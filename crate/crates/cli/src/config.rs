//! Run configuration: command-line flags layered over an optional
//! `key=value` file layered over built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use clusterloop::growth::{GrowthMode, MeasurementBasis};
use clusterloop::metrics::DEFAULT_LENGTH_CAP;
use clusterloop::noise::NoiseConfig;
use clusterloop::optics::PbsAmplitudes;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Sim(clusterloop::Error),
    Io(std::io::Error),
    /// Output was written but at least one search stopped at the cap.
    CapReached,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Sim(clusterloop::Error::Capacity { .. }) | CliError::CapReached => 3,
            CliError::Sim(clusterloop::Error::ZeroProbability { .. }) => 4,
            CliError::Sim(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Sim(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::CapReached => write!(f, "length search reached the cap"),
        }
    }
}

impl From<clusterloop::Error> for CliError {
    fn from(e: clusterloop::Error) -> Self {
        CliError::Sim(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

const FILE_KEYS: &[&str] = &[
    "modes",
    "depol",
    "pbs",
    "cnot-eps",
    "two-photon",
    "phase",
    "basis",
    "mode",
    "threshold",
    "cap",
    "seed",
    "shots",
];

/// Parsed `key=value` configuration file. Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the file value, else `None`.
    pub fn layer<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse::<T>().map_err(|_| {
                    CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))
                })
            })
            .transpose()
    }

    pub fn layer_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                T::from_str(raw, true)
                    .map_err(|_| CliError::Usage(format!("config key `{key}`: bad value `{raw}`")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Y,
    Pm,
}

impl From<BasisArg> for MeasurementBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Y => MeasurementBasis::YUp,
            BasisArg::Pm => MeasurementBasis::PM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cluster,
    Ghz,
}

impl From<ModeArg> for GrowthMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cluster => GrowthMode::Cluster,
            ModeArg::Ghz => GrowthMode::Ghz,
        }
    }
}

/// Imperfection flags shared by the simulation commands.
#[derive(Debug, Clone, Default, Args)]
pub struct NoiseArgs {
    /// Noiseless configuration; ignores the config file's noise keys.
    #[arg(long, conflicts_with_all = ["modes", "depol", "pbs", "cnot_eps", "two_photon", "phase"])]
    pub ideal: bool,
    /// Number of distinguishable modes N_m (>= 1, `inf` allowed).
    #[arg(long)]
    pub modes: Option<f64>,
    /// Depolarizing probability of each fresh photon.
    #[arg(long)]
    pub depol: Option<f64>,
    /// Beam splitter as `TH2,RV2` intensities, or `ideal`, `typical`, `high`.
    #[arg(long, value_name = "TH2,RV2")]
    pub pbs: Option<String>,
    /// Use the faulty CNOT with this error angle instead of the beam splitter.
    #[arg(long, allow_hyphen_values = true)]
    pub cnot_eps: Option<f64>,
    /// Two-photon emission probability (success bound only).
    #[arg(long)]
    pub two_photon: Option<f64>,
    /// Loop phase in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
}

pub fn parse_pbs(raw: &str) -> CliResult<PbsAmplitudes> {
    match raw.trim() {
        "ideal" => return Ok(PbsAmplitudes::ideal()),
        "typical" => return Ok(PbsAmplitudes::typical()),
        "high" => return Ok(PbsAmplitudes::high_performance()),
        _ => {}
    }
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("--pbs expects TH2,RV2, got `{raw}`"));
    let [th2, rv2] = parts.as_slice() else {
        return Err(bad());
    };
    let th2: f64 = th2.parse().map_err(|_| bad())?;
    let rv2: f64 = rv2.parse().map_err(|_| bad())?;
    Ok(PbsAmplitudes::from_intensities(th2, rv2)?)
}

impl NoiseArgs {
    pub fn resolve(&self, file: &FileConfig) -> CliResult<NoiseConfig> {
        if self.ideal {
            return Ok(NoiseConfig::ideal());
        }
        let mut cfg = NoiseConfig::ideal();
        if let Some(m) = file.layer(self.modes, "modes")? {
            cfg.num_modes = m;
        }
        if let Some(p) = file.layer(self.depol, "depol")? {
            cfg.depolarizing_p = p;
        }
        if let Some(raw) = file.layer(self.pbs.clone(), "pbs")? {
            cfg.pbs = parse_pbs(&raw)?;
        }
        cfg.cnot_epsilon = file.layer(self.cnot_eps, "cnot-eps")?;
        if let Some(p) = file.layer(self.two_photon, "two-photon")? {
            cfg.two_photon_p = p;
        }
        if let Some(deg) = file.layer(self.phase, "phase")? {
            cfg.loop_phase = deg.to_radians();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Length-search flags.
#[derive(Debug, Clone, Default, Args)]
pub struct SearchArgs {
    /// Basis the middle photons are conditioned in.
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    /// Concurrence threshold; defaults to 1e-2 when the beam splitter is the
    /// only imperfection and 0 otherwise.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Largest chain length tried.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct Search {
    pub basis: MeasurementBasis,
    pub threshold: Option<f64>,
    pub cap: usize,
}

impl SearchArgs {
    pub fn resolve(&self, file: &FileConfig) -> CliResult<Search> {
        let basis = file
            .layer_enum(self.basis, "basis")?
            .unwrap_or(BasisArg::Y)
            .into();
        let threshold = file.layer(self.threshold, "threshold")?;
        if let Some(t) = threshold {
            if t.is_nan() || t < 0.0 {
                return Err(CliError::Usage(format!(
                    "--threshold must be >= 0, got {t}"
                )));
            }
        }
        let cap = file.layer(self.cap, "cap")?.unwrap_or(DEFAULT_LENGTH_CAP);
        if cap < 2 {
            return Err(CliError::Usage("--cap must be at least 2".into()));
        }
        Ok(Search {
            basis,
            threshold,
            cap,
        })
    }
}

impl Search {
    pub fn threshold_for(&self, cfg: &NoiseConfig) -> f64 {
        self.threshold.unwrap_or_else(|| cfg.default_threshold())
    }
}
