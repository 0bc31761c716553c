//! Built-in scenarios.
//!
//! Speeds are converted to Doppler at a 2.593 GHz carrier (band n41):
//! 120 km/h gives 288 Hz and 3 km/h gives 7.2 Hz.

use super::config::{
    BandSide, ChannelConfig, DesiredConfig, EstimationConfig, InterfererConfig, PsdConfig,
    ReceiverConfig, ScenarioConfig, VarianceMode,
};
use crate::channel::DEFAULT_SINUSOIDS;
use crate::error::{Error, Result};
use crate::hann::MrcWeighting;
use crate::waveform::{FrameSchedule, Numerology};

pub const CARRIER_HZ: f64 = 2.593e9;
pub const PRESETS: [&str; 2] = ["paper-shape", "paper-full"];

/// Maximum Doppler shift of a receiver moving at `kmh`.
pub fn doppler_hz(kmh: f64) -> f64 {
    let c = 299_792_458.0;
    kmh / 3.6 * CARRIER_HZ / c
}

/// Doppler rounded to 0.1 Hz, as written into presets.
fn preset_doppler(kmh: f64) -> f64 {
    (doppler_hz(kmh) * 10.0).round() / 10.0
}

/// The full-size scenario scaled down by `factor` in every sample count.
fn scaled(name: &str, factor: usize, trials: usize) -> Result<ScenarioConfig> {
    let n = 1024 / factor;
    let d = 12;
    let desired = Numerology::new(n, 72 / factor, d, n / 2 - d - 4, 60e3)?;
    let interferer = |side| InterfererConfig {
        fft_size: 4 * n,
        cp_len: 4 * desired.cp_len,
        data_width: 1632 / factor,
        scs_hz: 15e3,
        side,
        guard_hz: 30e3,
        channel: ChannelConfig {
            profile: "tdl-c".into(),
            rms_delay_spread_ns: 300.0,
            doppler_hz: preset_doppler(3.0),
            num_sinusoids: DEFAULT_SINUSOIDS,
        },
        snr_db: 20.0,
        sample_offset: 128 / factor,
        taper_len: 128 / factor,
    };
    Ok(ScenarioConfig {
        name: name.into(),
        master_seed: 2024,
        trials,
        desired: DesiredConfig {
            numerology: desired,
            channel: ChannelConfig {
                profile: "tdl-a".into(),
                rms_delay_spread_ns: 30.0,
                doppler_hz: preset_doppler(120.0),
                num_sinusoids: DEFAULT_SINUSOIDS,
            },
            snr_grid_db: vec![10.0, 15.0, 20.0, 25.0, 30.0],
        },
        interferers: vec![interferer(BandSide::Lower), interferer(BandSide::Upper)],
        frame: FrameSchedule::periodic(14, 3, 7, 0x5eed),
        receivers: vec![
            ReceiverConfig::Rect {
                variance_mode: VarianceMode::Estimated,
            },
            ReceiverConfig::Taper {
                tail_len: 48 / factor,
                variance_mode: VarianceMode::Estimated,
            },
            ReceiverConfig::Hann {
                iterations: 6,
                variance_mode: VarianceMode::Estimated,
                theory_bound: true,
                combiner: MrcWeighting::GammaScaled,
            },
        ],
        estimation: EstimationConfig {
            support_len: 4,
            ridge: 1e-3,
        },
        psd: PsdConfig::default(),
    })
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "paper-shape" => scaled(name, 4, 700),
        "paper-full" => scaled(name, 1, 700),
        other => Err(Error::InvalidInput(format!(
            "unknown preset `{other}`, expected one of {PRESETS:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doppler_constant() {
        assert!((doppler_hz(120.0) - 288.3).abs() < 0.1);
        assert!((doppler_hz(3.0) - 7.21).abs() < 0.01);
    }

    #[test]
    fn full_preset() {
        let p = preset("paper-full").unwrap();
        p.validate().unwrap();
        assert_eq!(p.desired.numerology.fft_size, 1024);
        assert_eq!(p.desired.numerology.data_width, 12);
        assert_eq!(p.interferers.len(), 2);
        for i in &p.interferers {
            assert_eq!(i.snr_db, 20.0);
            assert_eq!(i.fft_size, 4096);
            assert_eq!(i.data_width, 1632);
            assert_eq!(i.sample_offset, 128);
        }
        assert_eq!(p.frame.pilot_symbols, vec![3, 10]);
        assert_eq!(p.max_iterations(), 6);
    }

    #[test]
    fn shape_preset_keeps_ratios() {
        let f = preset("paper-full").unwrap();
        let s = preset("paper-shape").unwrap();
        s.validate().unwrap();
        let (nf, ns) = (&f.desired.numerology, &s.desired.numerology);
        assert_eq!(ns.fft_size, 256);
        assert_eq!(ns.data_width, nf.data_width);
        assert_eq!(ns.cp_len * nf.fft_size, nf.cp_len * ns.fft_size);
        for (a, b) in f.interferers.iter().zip(&s.interferers) {
            assert_eq!(a.sample_offset * ns.fft_size, b.sample_offset * nf.fft_size);
            assert_eq!(a.guard_hz, b.guard_hz);
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn interferer_bands_flank_the_desired_band() {
        let s = preset("paper-full").unwrap();
        let nm = s.desired.numerology;
        let lower = s.interferers[0].numerology(&nm).unwrap();
        let upper = s.interferers[1].numerology(&nm).unwrap();
        // edges in units of interferer bins: desired band is [1982, 2030]
        assert_eq!(lower.first_data_bin + lower.data_width - 1, 1981 - 2);
        assert_eq!(upper.first_data_bin, 2031 + 2);
        let gap_hz = |bins: f64| bins * 15e3;
        // half-bin from the desired edge to the first interferer bin edge
        assert!((gap_hz(2033.0 - 0.5 - 2030.0) - 37.5e3).abs() < 1e-6);
        assert!((gap_hz(1982.0 - (1979.0 + 0.5)) - 37.5e3).abs() < 1e-6);
    }
}
