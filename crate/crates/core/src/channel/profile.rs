//! Tapped-delay-line power delay profiles stored as text tables.
//!
//! File format: one tap per row, `delay_ns power_db`, whitespace separated.
//! Lines starting with `#` and blank lines are ignored.

use std::path::Path;

use crate::error::{Error, Result};

const TDL_A: &str = include_str!("../../data/tdl_a.txt");
const TDL_C: &str = include_str!("../../data/tdl_c.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct TdlProfile {
    pub name: String,
    /// Tap delays in seconds, ascending.
    pub delays_s: Vec<f64>,
    /// Linear tap powers summing to one.
    pub powers: Vec<f64>,
}

impl TdlProfile {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut taps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let mut next = |what: &str| -> Result<f64> {
                let tok = cols.next().ok_or_else(|| {
                    Error::Parse(format!("{name}:{}: missing {what}", lineno + 1))
                })?;
                tok.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{name}:{}: bad {what} `{tok}`: {e}", lineno + 1))
                })
            };
            let delay_ns = next("delay")?;
            let power_db = next("power")?;
            if delay_ns < 0.0 || !delay_ns.is_finite() || !power_db.is_finite() {
                return Err(Error::Parse(format!(
                    "{name}:{}: delay must be finite and nonnegative",
                    lineno + 1
                )));
            }
            taps.push((delay_ns * 1e-9, 10f64.powf(power_db / 10.0)));
        }
        if taps.is_empty() {
            return Err(Error::Parse(format!("{name}: no taps")));
        }
        taps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = taps.iter().map(|t| t.1).sum();
        Ok(TdlProfile {
            name: name.to_string(),
            delays_s: taps.iter().map(|t| t.0).collect(),
            powers: taps.iter().map(|t| t.1 / total).collect(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn tdl_a() -> Self {
        Self::parse("tdl-a", TDL_A).expect("embedded TDL-A table parses")
    }

    pub fn tdl_c() -> Self {
        Self::parse("tdl-c", TDL_C).expect("embedded TDL-C table parses")
    }

    /// Built-in profile by name, or a table file path.
    pub fn lookup(name_or_path: &str) -> Result<Self> {
        match name_or_path.to_ascii_lowercase().as_str() {
            "tdl-a" | "tdla" => Ok(Self::tdl_a()),
            "tdl-c" | "tdlc" => Ok(Self::tdl_c()),
            _ => Self::from_file(Path::new(name_or_path)),
        }
    }

    pub fn rms_delay_spread(&self) -> f64 {
        rms_delay_spread(&self.delays_s, &self.powers)
    }
}

/// Power-weighted RMS delay spread.
pub fn rms_delay_spread(delays: &[f64], powers: &[f64]) -> f64 {
    let total: f64 = powers.iter().sum();
    let mean: f64 = delays.iter().zip(powers).map(|(d, p)| d * p).sum::<f64>() / total;
    let second: f64 = delays.iter().zip(powers).map(|(d, p)| d * d * p).sum::<f64>() / total;
    (second - mean * mean).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_tables_are_normalized_and_sorted() {
        for p in [TdlProfile::tdl_a(), TdlProfile::tdl_c()] {
            let sum: f64 = p.powers.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.delays_s.windows(2).all(|w| w[0] <= w[1]));
            // tables are stored around a 100 ns nominal spread
            let ds = p.rms_delay_spread();
            assert!(ds > 50e-9 && ds < 150e-9, "{} rms {ds}", p.name);
        }
        assert_eq!(TdlProfile::tdl_a().delays_s.len(), 23);
        assert_eq!(TdlProfile::tdl_c().delays_s.len(), 24);
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(TdlProfile::parse("x", "# nothing\n").is_err());
        assert!(TdlProfile::parse("x", "1.0\n").is_err());
        assert!(TdlProfile::parse("x", "abc 0\n").is_err());
        assert!(TdlProfile::parse("x", "-1 0\n").is_err());
        let p = TdlProfile::parse("x", "10 0\n0 0\n").unwrap();
        assert_eq!(p.delays_s, vec![0.0, 10e-9]);
        assert_eq!(p.powers, vec![0.5, 0.5]);
    }

    #[test]
    fn two_tap_rms_is_half_spacing() {
        let ds = rms_delay_spread(&[0.0, 100e-9], &[0.5, 0.5]);
        assert!((ds - 50e-9).abs() < 1e-15);
    }
}
