//! Scenario configuration: array geometry, channel statistics, power/SNR
//! bookkeeping, scheme selection, and the TOML file format the CLI consumes.
//!
//! SNR convention: `snr_db = 10*log10(P_t / (N_c * sigma_n^2))` — average
//! per-subcarrier transmit power over noise power, with channels normalized
//! to unit average per-antenna gain. The noise variance is derived from
//! `snr_db` with the total power fixed by `P_t`.

use serde::{Deserialize, Serialize};

use crate::beamforming::WmmseConfig;
use crate::channel::{ArrayGeometry, CsiErrorModel, MultipathSpec};
use crate::error::{Error, Result};
use crate::tensor::CMat;

/// Beamforming scheme identifiers, ordered lexicographically by label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "rzf")]
    Rzf,
    #[serde(rename = "wmmse_naive")]
    WmmseNaive,
    #[serde(rename = "wmmse_robust")]
    WmmseRobust,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Rzf => "rzf",
            Scheme::WmmseNaive => "wmmse_naive",
            Scheme::WmmseRobust => "wmmse_robust",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rzf" => Ok(Scheme::Rzf),
            "wmmse_naive" => Ok(Scheme::WmmseNaive),
            "wmmse_robust" => Ok(Scheme::WmmseRobust),
            other => Err(Error::Config(format!(
                "unknown scheme \"{other}\" (expected rzf, wmmse_naive, or wmmse_robust)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Symbol constellation for the transmitted payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolKind {
    /// i.i.d. CN(0, 1) symbols.
    #[serde(rename = "gaussian")]
    UnitGaussian,
    /// Unit-modulus QPSK points {1, j, -1, -j}.
    #[serde(rename = "qpsk")]
    Qpsk,
}

/// Pilot-length to channel-estimate NMSE map (measured estimator quality at
/// L = 4, 8, 16, 32, 64 pilot symbols).
pub fn pilot_nmse_table() -> &'static [(u32, f64)] {
    &[
        (4, 0.205),
        (8, 0.063),
        (16, 0.020),
        (32, 0.011),
        (64, 0.006),
    ]
}

fn default_n_y() -> usize {
    8
}
fn default_n_z() -> usize {
    8
}
fn default_subcarriers() -> usize {
    64
}
fn default_frames() -> usize {
    128
}
fn default_total_power() -> f64 {
    1.0
}
fn default_snr_db() -> f64 {
    10.0
}
fn default_paths() -> usize {
    2
}
fn default_seed() -> u64 {
    0
}
fn default_trials() -> u64 {
    1
}
fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::WmmseRobust]
}
fn default_iterations() -> usize {
    10
}
fn default_sampling_interval() -> f64 {
    1.0
}
fn default_spacing() -> f64 {
    0.5
}
fn default_symbols() -> SymbolKind {
    SymbolKind::UnitGaussian
}

/// Complete description of one simulation scenario. Field names match the
/// TOML keys.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of users (single-antenna receivers).
    #[serde(rename = "K")]
    pub users: usize,
    /// Horizontal antennas of the planar array.
    #[serde(default = "default_n_y")]
    pub n_y: usize,
    /// Vertical antennas of the planar array.
    #[serde(default = "default_n_z")]
    pub n_z: usize,
    /// OFDM subcarriers.
    #[serde(rename = "N_c", default = "default_subcarriers")]
    pub subcarriers: usize,
    /// Symbols per trial (frames), the empirical-metric sample count.
    #[serde(rename = "Q", default = "default_frames")]
    pub frames: usize,
    /// Total transmit power budget (linear).
    #[serde(rename = "P_t", default = "default_total_power")]
    pub total_power: f64,
    /// SNR in dB per the convention in the module docs.
    #[serde(default = "default_snr_db")]
    pub snr_db: f64,
    /// Multipath components per user.
    #[serde(default = "default_paths")]
    pub paths_per_user: usize,
    /// Channel-estimate NMSE to inject (mutually exclusive with
    /// `pilot_symbols`; omitting both means perfect CSI).
    #[serde(default)]
    pub target_nmse: Option<f64>,
    /// Pilot length whose measured NMSE is taken from [`pilot_nmse_table`].
    #[serde(default)]
    pub pilot_symbols: Option<u32>,
    /// Base RNG seed; trial t uses stream index t.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of Monte Carlo trials.
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Schemes to simulate.
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    /// Outer iterations of the beamforming solver.
    #[serde(alias = "I_1", default = "default_iterations")]
    pub iterations: usize,
    /// Delay-domain sampling interval T_s (arbitrary unit).
    #[serde(rename = "t_s", default = "default_sampling_interval")]
    pub sampling_interval: f64,
    /// Maximum path delay; defaults to 16 * t_s.
    #[serde(default)]
    pub max_delay: Option<f64>,
    /// Antenna spacing over wavelength.
    #[serde(default = "default_spacing")]
    pub spacing_over_wavelength: f64,
    /// Payload constellation.
    #[serde(default = "default_symbols")]
    pub symbols: SymbolKind,
}

impl ScenarioConfig {
    /// The reference scenario: 4 users, 8x8 planar array (64 antennas),
    /// 64 subcarriers, 2 paths per user, 128 symbols per trial, unit power.
    pub fn baseline() -> Self {
        Self {
            users: 4,
            n_y: 8,
            n_z: 8,
            subcarriers: 64,
            frames: 128,
            total_power: 1.0,
            snr_db: 10.0,
            paths_per_user: 2,
            target_nmse: None,
            pilot_symbols: None,
            seed: 0,
            trials: 1,
            schemes: default_schemes(),
            iterations: 10,
            sampling_interval: 1.0,
            max_delay: None,
            spacing_over_wavelength: 0.5,
            symbols: SymbolKind::UnitGaussian,
        }
    }

    pub fn antennas(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Noise variance implied by the SNR convention:
    /// `sigma_n^2 = P_t / (N_c * 10^(snr_db/10))`.
    pub fn noise_variance(&self) -> f64 {
        self.total_power / (self.subcarriers as f64 * 10f64.powf(self.snr_db / 10.0))
    }

    /// Maximum path delay with the 16 * t_s default applied.
    pub fn resolved_max_delay(&self) -> f64 {
        self.max_delay
            .unwrap_or(16.0 * self.sampling_interval)
    }

    /// The channel-estimate NMSE in effect: explicit target, pilot-table
    /// lookup, or 0 (perfect CSI) when neither is given.
    pub fn resolved_nmse(&self) -> Result<f64> {
        match (self.target_nmse, self.pilot_symbols) {
            (Some(_), Some(_)) => Err(Error::Config(
                "target_nmse and pilot_symbols are mutually exclusive; set only one".into(),
            )),
            (Some(v), None) => Ok(v),
            (None, Some(l)) => pilot_nmse_table()
                .iter()
                .find(|&&(pl, _)| pl == l)
                .map(|&(_, nmse)| nmse)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "pilot_symbols: no calibration for L={l} (available: 4, 8, 16, 32, 64)"
                    ))
                }),
            (None, None) => Ok(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive_count(name: &str, v: usize) -> Result<()> {
            if v == 0 {
                Err(Error::Config(format!("{name}: must be at least 1, got 0")))
            } else {
                Ok(())
            }
        }
        positive_count("K", self.users)?;
        positive_count("n_y", self.n_y)?;
        positive_count("n_z", self.n_z)?;
        positive_count("N_c", self.subcarriers)?;
        positive_count("Q", self.frames)?;
        positive_count("paths_per_user", self.paths_per_user)?;
        positive_count("iterations", self.iterations)?;
        if self.trials == 0 {
            return Err(Error::Config("trials: must be at least 1, got 0".into()));
        }
        if self.users > self.antennas() {
            return Err(Error::Config(format!(
                "K: {} users exceed the {} antennas of the {}x{} array",
                self.users,
                self.antennas(),
                self.n_y,
                self.n_z
            )));
        }
        if !(self.total_power > 0.0) || !self.total_power.is_finite() {
            return Err(Error::Config(format!(
                "P_t: must be positive and finite, got {}",
                self.total_power
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config(format!(
                "snr_db: must be finite, got {}",
                self.snr_db
            )));
        }
        if !(self.sampling_interval > 0.0) || !self.sampling_interval.is_finite() {
            return Err(Error::Config(format!(
                "t_s: must be positive and finite, got {}",
                self.sampling_interval
            )));
        }
        let max_delay = self.resolved_max_delay();
        let span = self.subcarriers as f64 * self.sampling_interval;
        if !(max_delay >= 0.0) || max_delay >= span {
            return Err(Error::Config(format!(
                "max_delay: must lie in [0, N_c*t_s) = [0, {span}), got {max_delay}"
            )));
        }
        if !(self.spacing_over_wavelength > 0.0) || !self.spacing_over_wavelength.is_finite() {
            return Err(Error::Config(format!(
                "spacing_over_wavelength: must be positive and finite, got {}",
                self.spacing_over_wavelength
            )));
        }
        let nmse = self.resolved_nmse()?;
        if !(nmse >= 0.0) || !nmse.is_finite() {
            return Err(Error::Config(format!(
                "target_nmse: must be nonnegative and finite, got {nmse}"
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes: must list at least one scheme".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.n_y, self.n_z, self.spacing_over_wavelength)
    }

    pub fn multipath_spec(&self) -> Result<MultipathSpec> {
        MultipathSpec::uniform(
            self.users,
            self.paths_per_user,
            self.sampling_interval,
            self.subcarriers,
            self.resolved_max_delay(),
        )
    }

    pub fn error_model(&self) -> Result<CsiErrorModel> {
        CsiErrorModel::scaled_identity(self.antennas(), self.resolved_nmse()?)
    }

    /// Solver configuration; `error_aware` selects whether the modeled error
    /// covariance enters the statistics or is zeroed out.
    pub fn wmmse_config(&self, error_aware: bool) -> Result<WmmseConfig> {
        let antennas = self.antennas();
        let error_covariance = if error_aware {
            let mut m = CMat::identity(antennas);
            m.scale(self.resolved_nmse()?);
            m
        } else {
            CMat::zeros(antennas, antennas)
        };
        Ok(WmmseConfig {
            iterations: self.iterations,
            noise_variance: self.noise_variance(),
            total_power: self.total_power,
            error_covariance,
        })
    }

    /// Stable 64-bit fingerprint of every scenario field (FNV-1a over a
    /// canonical text rendering), recorded in reports so results can be
    /// traced back to their exact configuration.
    pub fn scenario_hash(&self) -> u64 {
        let schemes: Vec<&str> = self.schemes.iter().map(|s| s.label()).collect();
        let canonical = format!(
            "K={};n_y={};n_z={};N_c={};Q={};P_t={:e};snr_db={:e};paths={};nmse={:?};pilots={:?};\
             seed={};trials={};schemes={};iters={};t_s={:e};max_delay={:?};spacing={:e};symbols={:?}",
            self.users,
            self.n_y,
            self.n_z,
            self.subcarriers,
            self.frames,
            self.total_power,
            self.snr_db,
            self.paths_per_user,
            self.target_nmse,
            self.pilot_symbols,
            self.seed,
            self.trials,
            schemes.join(","),
            self.iterations,
            self.sampling_interval,
            self.max_delay,
            self.spacing_over_wavelength,
            self.symbols,
        );
        fnv1a(canonical.as_bytes())
    }
}

/// FNV-1a 64-bit hash.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Reads and validates a scenario file. Malformed content (including
/// unknown keys, which the parser rejects by name) is a configuration
/// error; an unreadable path is an I/O error.
pub fn parse_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ScenarioConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}
