use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::waveform::{ofdm_modulate, qpsk_modulate, random_bits, Numerology};

/// Rising raised-cosine ramp `½(1 − cos(π(i + ½)/K))`, `i = 0..K`.
pub fn raised_cosine_ramp(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 * (1.0 - (PI * (i as f64 + 0.5) / len as f64).cos()))
        .collect()
}

/// Random-QPSK CP-OFDM stream of an adjacent user on its own grid.
///
/// With `taper_len > 0` each symbol is extended by a cyclic suffix of
/// `taper_len` samples, the first `taper_len` CP samples ramp up and the
/// suffix ramps down, and the suffix overlaps the next symbol's CP
/// (transmit windowing with overlap-add). The symbol period is unchanged.
pub fn interferer_stream(
    numerology: &Numerology,
    taper_len: usize,
    seed: u64,
    num_symbols: usize,
) -> Result<Vec<Complex64>> {
    numerology.validate()?;
    if taper_len > numerology.cp_len {
        return invalid(format!(
            "taper of {taper_len} samples exceeds the {}-sample CP",
            numerology.cp_len
        ));
    }
    let n = numerology.fft_size;
    let l = numerology.cp_len;
    let period = n + l;
    let ramp = raised_cosine_ramp(taper_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Complex64::new(0.0, 0.0); num_symbols * period + taper_len];
    for s in 0..num_symbols {
        let d = qpsk_modulate(&random_bits(&mut rng, 2 * numerology.data_width))?;
        let sym = ofdm_modulate(numerology, &d)?;
        let base = s * period;
        for (i, v) in sym.iter().enumerate() {
            let w = if i < taper_len { ramp[i] } else { 1.0 };
            out[base + i] += w * v;
        }
        // cyclic suffix continues the body past its end
        for (i, r) in ramp.iter().enumerate() {
            out[base + period + i] += (1.0 - r) * sym[l + i];
        }
    }
    out.truncate(num_symbols * period);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dft_in_place;

    fn num() -> Numerology {
        Numerology::new(256, 18, 60, 40, 15e3).unwrap()
    }

    fn psd(stream: &[Complex64], seg: usize) -> Vec<f64> {
        let mut acc = vec![0.0; seg];
        for chunk in stream.chunks_exact(seg) {
            let mut buf = chunk.to_vec();
            dft_in_place(&mut buf, false);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
        }
        acc
    }

    #[test]
    fn zero_taper_is_plain_cp_ofdm() {
        let nm = num();
        let s = interferer_stream(&nm, 0, 3, 4).unwrap();
        assert_eq!(s.len(), 4 * 274);
        for k in 0..4 {
            let sym = &s[k * 274..(k + 1) * 274];
            assert_eq!(&sym[..18], &sym[256..]);
        }
        assert!(interferer_stream(&nm, 19, 3, 4).is_err());
    }

    #[test]
    fn taper_lowers_out_of_band_power() {
        let nm = num();
        let plain = interferer_stream(&nm, 0, 9, 400).unwrap();
        let taper = interferer_stream(&nm, 16, 9, 400).unwrap();
        // analysis with 4x finer bins than the subcarrier grid
        let seg = 1024;
        let (pp, pt) = (psd(&plain, seg), psd(&taper, seg));
        let band_hi = (nm.first_data_bin + nm.data_width) * 4;
        let oob = |p: &[f64]| p[band_hi + 24..band_hi + 200].iter().sum::<f64>();
        let inband = |p: &[f64]| p[nm.first_data_bin * 4..band_hi].iter().sum::<f64>();
        let rel_plain = oob(&pp) / inband(&pp);
        let rel_taper = oob(&pt) / inband(&pt);
        assert!(rel_taper < 0.5 * rel_plain, "{rel_taper} vs {rel_plain}");
    }

    #[test]
    fn ramp_is_rising_and_complementary() {
        let r = raised_cosine_ramp(8);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        for i in 0..8 {
            assert!((r[i] + r[7 - i] - 1.0).abs() < 1e-15);
        }
    }
}
