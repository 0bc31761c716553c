use serde::{Deserialize, Serialize};

use crate::channel::{TdlProfile, TdlSpec, DEFAULT_SINUSOIDS};
use crate::error::{config_err, Error, Result};
use crate::hann::MrcWeighting;
use crate::rx_baseline::RxWindowSpec;
use crate::waveform::{FrameSchedule, Numerology};

fn default_sinusoids() -> usize {
    DEFAULT_SINUSOIDS
}

/// Fading channel of one link. `profile` is `tdl-a`, `tdl-c`, `flat` or a
/// path to a two-column `delay_ns power_db` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub profile: String,
    #[serde(default)]
    pub rms_delay_spread_ns: f64,
    /// Maximum Doppler shift.
    pub doppler_hz: f64,
    #[serde(default = "default_sinusoids")]
    pub num_sinusoids: usize,
}

impl ChannelConfig {
    pub fn to_spec(&self, seed: u64) -> Result<TdlSpec> {
        if self.profile == "flat" {
            let mut spec = TdlSpec::flat(self.doppler_hz, seed);
            spec.num_sinusoids = self.num_sinusoids;
            spec.validate()?;
            return Ok(spec);
        }
        let profile = TdlProfile::lookup(&self.profile)?;
        TdlSpec::from_profile(
            &profile,
            self.rms_delay_spread_ns * 1e-9,
            self.doppler_hz,
            seed,
            self.num_sinusoids,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesiredConfig {
    pub numerology: Numerology,
    pub channel: ChannelConfig,
    pub snr_grid_db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandSide {
    Upper,
    Lower,
}

/// An adjacent user. Its band position follows from `side` and `guard_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    pub fft_size: usize,
    pub cp_len: usize,
    pub data_width: usize,
    pub scs_hz: f64,
    pub side: BandSide,
    pub guard_hz: f64,
    pub channel: ChannelConfig,
    pub snr_db: f64,
    /// Delay of this user's stream relative to the desired frame.
    pub sample_offset: usize,
    /// Transmit WOLA taper length.
    #[serde(default)]
    pub taper_len: usize,
}

impl InterfererConfig {
    /// Band placement on the interferer's own grid.
    ///
    /// The two grids share the sample rate, so desired bin `k` sits at
    /// interferer bin `k·r` with `r = N'/N`. With zero guard the nearest
    /// interferer subcarrier lies half an interferer spacing beyond the
    /// desired band edge; the guard shifts it by `round(guard/scs')` more
    /// bins.
    pub fn numerology(&self, desired: &Numerology) -> Result<Numerology> {
        let ratio = self.fft_size / desired.fft_size;
        if ratio == 0 || ratio * desired.fft_size != self.fft_size {
            return Err(Error::InvalidInput(format!(
                "interferer FFT size {} is not a multiple of {}",
                self.fft_size, desired.fft_size
            )));
        }
        let rate = self.fft_size as f64 * self.scs_hz;
        if (rate - desired.sample_rate()).abs() > 1e-6 * rate {
            return Err(Error::InvalidInput(
                "interferer and desired user must share the sample rate".into(),
            ));
        }
        let g = (self.guard_hz / self.scs_hz).round() as isize;
        let r = ratio as isize;
        let lo = desired.first_data_bin as isize;
        let hi = lo + desired.data_width as isize;
        // edges sit at r·lo − r/2 and r·hi − r/2; doubled to stay integral
        let first = match self.side {
            BandSide::Upper => (2 * r * hi - r + 2).div_euclid(2) + g,
            BandSide::Lower => {
                (2 * r * lo - r - 1).div_euclid(2) - g - self.data_width as isize + 1
            }
        };
        if first < 1 {
            return Err(Error::InvalidInput(format!(
                "interferer band starts at bin {first}"
            )));
        }
        Numerology::new(
            self.fft_size,
            self.cp_len,
            self.data_width,
            first as usize,
            self.scs_hz,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// From pilot fit residuals.
    #[default]
    Estimated,
    /// Frame-averaged power of the true disturbance.
    Genie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReceiverConfig {
    Rect {
        #[serde(default)]
        variance_mode: VarianceMode,
    },
    Taper {
        tail_len: usize,
        #[serde(default)]
        variance_mode: VarianceMode,
    },
    Hann {
        iterations: usize,
        #[serde(default)]
        variance_mode: VarianceMode,
        #[serde(default)]
        theory_bound: bool,
        #[serde(default = "default_combiner")]
        combiner: MrcWeighting,
    },
}

fn default_combiner() -> MrcWeighting {
    MrcWeighting::GammaScaled
}

impl ReceiverConfig {
    pub fn id(&self) -> String {
        let (base, mode) = match self {
            ReceiverConfig::Rect { variance_mode } => ("rect".to_string(), variance_mode),
            ReceiverConfig::Taper {
                tail_len,
                variance_mode,
            } => (format!("taper-{tail_len}"), variance_mode),
            ReceiverConfig::Hann {
                variance_mode,
                combiner,
                ..
            } => match combiner {
                MrcWeighting::GammaScaled => ("hann".to_string(), variance_mode),
                MrcWeighting::MaxSinr => ("hann-max-sinr".to_string(), variance_mode),
            },
        };
        match mode {
            VarianceMode::Estimated => base,
            VarianceMode::Genie => format!("{base}-genie"),
        }
    }

    pub fn window_spec(&self) -> Option<RxWindowSpec> {
        match self {
            ReceiverConfig::Rect { .. } => Some(RxWindowSpec::rectangular()),
            ReceiverConfig::Taper { tail_len, .. } => Some(RxWindowSpec::raised_cosine(*tail_len)),
            ReceiverConfig::Hann { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    /// Number of CIR taps fitted.
    pub support_len: usize,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdConfig {
    /// In-band subcarrier index counted from the lower band edge.
    pub subcarrier: usize,
    pub resolution: usize,
    pub symbols: usize,
    /// Half-width of the emitted curve, in subcarrier spacings.
    pub span_scs: f64,
}

impl Default for PsdConfig {
    fn default() -> Self {
        PsdConfig {
            subcarrier: 5,
            resolution: 16,
            symbols: 200,
            span_scs: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario id, part of every derived seed.
    pub name: String,
    pub master_seed: u64,
    pub trials: usize,
    pub desired: DesiredConfig,
    #[serde(default)]
    pub interferers: Vec<InterfererConfig>,
    pub frame: FrameSchedule,
    pub receivers: Vec<ReceiverConfig>,
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub psd: PsdConfig,
}

fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => config_err(path, other.to_string()),
    })
}

fn check(cond: bool, path: &str, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(path, msg))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        check(!self.name.is_empty(), "name", "must not be empty")?;
        check(self.trials >= 1, "trials", "must be at least 1")?;
        let nm = &self.desired.numerology;
        at("desired.numerology", nm.validate())?;
        check(!self.desired.snr_grid_db.is_empty(), "desired.snr_grid_db", "must not be empty")?;
        check(
            self.desired.snr_grid_db.iter().all(|s| s.is_finite()),
            "desired.snr_grid_db",
            "values must be finite",
        )?;
        at("desired.channel", self.desired.channel.to_spec(0).map(|_| ()))?;

        for (j, i) in self.interferers.iter().enumerate() {
            let p = format!("interferers[{j}]");
            check(i.guard_hz >= 0.0, &format!("{p}.guard_hz"), "must be nonnegative")?;
            check(i.snr_db.is_finite(), &format!("{p}.snr_db"), "must be finite")?;
            check(i.taper_len <= i.cp_len, &format!("{p}.taper_len"), "must not exceed cp_len")?;
            at(&format!("{p}.channel"), i.channel.to_spec(0).map(|_| ()))?;
            at(&p, i.numerology(nm).map(|_| ()))?;
        }

        at("frame", self.frame.validate())?;
        check(!self.frame.pilot_symbols.is_empty(), "frame.pilot_symbols", "need at least one pilot symbol")?;
        check(
            self.frame.pilot_symbols.len() < self.frame.symbols_per_frame,
            "frame.pilot_symbols",
            "frame has no data symbols",
        )?;

        check(!self.receivers.is_empty(), "receivers", "need at least one receiver")?;
        let mut ids = Vec::new();
        for (k, r) in self.receivers.iter().enumerate() {
            let p = format!("receivers[{k}]");
            if let Some(spec) = r.window_spec() {
                at(&format!("{p}.tail_len"), spec.validate(nm))?;
            }
            let id = r.id();
            check(!ids.contains(&id), &p, format!("duplicate receiver `{id}`"))?;
            ids.push(id);
        }

        let e = &self.estimation;
        check(
            e.support_len >= 1 && e.support_len < nm.data_width,
            "estimation.support_len",
            format!("must be in [1, {})", nm.data_width),
        )?;
        check(e.ridge >= 0.0 && e.ridge.is_finite(), "estimation.ridge", "must be finite and nonnegative")?;

        check(self.psd.subcarrier < nm.data_width, "psd.subcarrier", "outside the band")?;
        check(self.psd.resolution >= 4, "psd.resolution", "must be at least 4")?;
        check(self.psd.symbols >= 1, "psd.symbols", "must be at least 1")?;
        check(self.psd.span_scs > 0.0, "psd.span_scs", "must be positive")?;
        Ok(())
    }

    /// Largest Hann iteration count among the receivers.
    pub fn max_iterations(&self) -> usize {
        self.receivers
            .iter()
            .filter_map(|r| match r {
                ReceiverConfig::Hann { iterations, .. } => Some(*iterations),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn frame_len(&self) -> usize {
        self.frame.symbols_per_frame * self.desired.numerology.symbol_len()
    }
}
