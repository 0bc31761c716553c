//! Per-subcarrier banded kernels of the combiner and of the cancellation
//! loop, generic over the real scalar so the audit can count operations.
//!
//! The extended channel has three nonzeros per column: rows `m`, `m+1`,
//! `m+2` of column `m` hold `−½θ_m`, `θ_m`, `−½θ_m`. Every subcarrier runs
//! the same straight-line code; out-of-band neighbours are zero-padded so
//! edge subcarriers cost exactly as much as interior ones.

use num_complex::Complex;

use crate::scalar::Real;

/// Band form of the extended channel for one OFDM symbol.
#[derive(Debug, Clone)]
pub struct BandChannel<S> {
    /// `θ` with two zeros of padding on each side.
    theta: Vec<Complex<S>>,
    /// `|θ|²`, padded the same way.
    power: Vec<S>,
    width: usize,
}

impl<S: Real> BandChannel<S> {
    /// `|θ|²` is treated as given, as it comes with the channel estimate.
    pub fn new(theta: &[Complex<S>]) -> Self {
        let zero = Complex::new(S::zero(), S::zero());
        let mut padded = vec![zero; theta.len() + 4];
        padded[2..2 + theta.len()].copy_from_slice(theta);
        let power = padded
            .iter()
            .map(|t| S::from_f64(t.re.to_f64().powi(2) + t.im.to_f64().powi(2)))
            .collect();
        BandChannel {
            theta: padded,
            power,
            width: theta.len(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `H̃[e, m]` for extended row `e` and (possibly out-of-band) column `m`.
    #[inline]
    pub fn entry(&self, e: isize, m: isize) -> Complex<S> {
        let t = self.theta[(m + 2) as usize];
        match e - m {
            1 => t,
            0 | 2 => -Complex::new(t.re.half(), t.im.half()),
            _ => Complex::new(S::zero(), S::zero()),
        }
    }

    /// `|H̃[e, m]|²`.
    #[inline]
    pub fn power(&self, e: isize, m: isize) -> S {
        let p = self.power[(m + 2) as usize];
        match e - m {
            1 => p,
            0 | 2 => p.half().half(),
            _ => S::zero(),
        }
    }
}

/// Per-branch SINR `γ̃[d][j]` and disruption `Σ̂[d][j]` of subcarrier `d`
/// observed on extended bin `d + j`.
///
/// 3 mults and 6 adds per subcarrier.
pub fn sinr_step<S: Real>(band: &BandChannel<S>, sigma2: &[S]) -> (Vec<[S; 3]>, Vec<[S; 3]>) {
    let floor = S::from_f64(crate::EPS);
    let mut gamma = Vec::with_capacity(band.width);
    let mut disrupt = Vec::with_capacity(band.width);
    for d in 0..band.width as isize {
        let mut g = [S::zero(); 3];
        let mut s = [S::zero(); 3];
        for j in 0..3 {
            let e = d + j as isize;
            let mut others = (e - 2..=e).filter(|&t| t != d);
            let (t1, t2) = (others.next().unwrap(), others.next().unwrap());
            let den = sigma2[e as usize] + band.power(e, t1) + band.power(e, t2);
            let den = den.max_of(floor);
            s[j] = den;
            g[j] = band.power(e, d) / den;
        }
        gamma.push(g);
        disrupt.push(s);
    }
    (gamma, disrupt)
}

/// Branch weighting of the combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MrcWeighting {
    /// `C[d][j] = conj(H̃) / (Σ̂·Σ_j γ̃)`, the SINR maximiser when the branch
    /// disturbances are independent.
    #[default]
    MaxSinr,
    /// `C[d][j] = γ̃·conj(H̃) / Σ_j γ̃|H̃|²`. Gives smaller neighbour gains and
    /// lower true noise when the branch disturbances are correlated.
    GammaScaled,
}

/// Equalized combining weights for the chosen branch weighting.
///
/// 10 mults and 2 adds per subcarrier, one more mult for
/// [`MrcWeighting::GammaScaled`]. Returns the weights and whether any
/// subcarrier had no usable branch.
pub fn combiner_step<S: Real>(
    band: &BandChannel<S>,
    gamma: &[[S; 3]],
    disrupt: &[[S; 3]],
    weighting: MrcWeighting,
) -> (Vec<[Complex<S>; 3]>, bool) {
    let floor = S::from_f64(crate::EPS);
    let mut degenerate = false;
    let weights = (0..band.width)
        .map(|d| {
            let g = gamma[d];
            let di = d as isize;
            let mut total = match weighting {
                MrcWeighting::MaxSinr => g[0] + g[1] + g[2],
                MrcWeighting::GammaScaled => (g[1] + (g[0] + g[2]).half().half()) * band.power(di + 1, di),
            };
            if total < floor {
                degenerate = true;
                total = floor;
            }
            let inv = S::one() / total;
            let mut c = [Complex::new(S::zero(), S::zero()); 3];
            for j in 0..3 {
                let t = match weighting {
                    MrcWeighting::MaxSinr => inv / disrupt[d][j],
                    MrcWeighting::GammaScaled => inv * g[j],
                };
                c[j] = band.entry(di + j as isize, di).conj() * t;
            }
            c
        })
        .collect();
    (weights, degenerate)
}

/// `d̆_d = Σ_j C[d][j]·ď_{d+j}`.
///
/// 12 mults and 10 adds per subcarrier.
pub fn combine_step<S: Real>(weights: &[[Complex<S>; 3]], dcheck: &[Complex<S>]) -> Vec<Complex<S>> {
    weights
        .iter()
        .enumerate()
        .map(|(d, c)| c[0] * dcheck[d] + c[1] * dcheck[d + 1] + c[2] * dcheck[d + 2])
        .collect()
}

/// Off-diagonal post-combining ICI gains `G[d][d+o]`, `o ∈ {−2,−1,1,2}`
/// stored at index `o + 2`; index 2 stays zero.
///
/// 24 mults and 16 adds per subcarrier.
pub fn gains_step<S: Real>(band: &BandChannel<S>, weights: &[[Complex<S>; 3]]) -> Vec<[Complex<S>; 5]> {
    weights
        .iter()
        .enumerate()
        .map(|(d, c)| {
            let d = d as isize;
            let zero = Complex::new(S::zero(), S::zero());
            [
                c[0] * band.entry(d, d - 2),
                c[0] * band.entry(d, d - 1) + c[1] * band.entry(d + 1, d - 1),
                zero,
                c[1] * band.entry(d + 1, d + 1) + c[2] * band.entry(d + 2, d + 1),
                c[2] * band.entry(d + 2, d + 2),
            ]
        })
        .collect()
}

/// Post-combining disruption `ρ_d = Σ_j |C[d][j]|²·σ²_{d+j}`.
///
/// 9 mults and 5 adds per subcarrier.
pub fn disruption_step<S: Real>(weights: &[[Complex<S>; 3]], sigma2: &[S]) -> Vec<S> {
    weights
        .iter()
        .enumerate()
        .map(|(d, c)| {
            c[0].norm_sqr() * sigma2[d] + c[1].norm_sqr() * sigma2[d + 1] + c[2].norm_sqr() * sigma2[d + 2]
        })
        .collect()
}

/// Real window times complex samples: 2 mults per sample.
pub fn window_step<S: Real>(window: &[S], samples: &[Complex<S>]) -> Vec<Complex<S>> {
    samples.iter().zip(window).map(|(&x, &w)| x * w).collect()
}

#[inline]
fn padded<T: Copy>(v: &[T], i: isize, zero: T) -> T {
    if i >= 0 && (i as usize) < v.len() {
        v[i as usize]
    } else {
        zero
    }
}

/// Soft cancellation `ž_d = d̆_d − Σ_{o≠0} G[d][d+o]·μ_{d+o}`.
///
/// 16 mults and 16 adds per subcarrier.
pub fn cancel_step<S: Real>(
    dbreve: &[Complex<S>],
    gains: &[[Complex<S>; 5]],
    mean: &[Complex<S>],
) -> Vec<Complex<S>> {
    let zero = Complex::new(S::zero(), S::zero());
    dbreve
        .iter()
        .zip(gains)
        .enumerate()
        .map(|(d, (&y, g))| {
            let d = d as isize;
            let ici = g[0] * padded(mean, d - 2, zero)
                + g[1] * padded(mean, d - 1, zero)
                + g[3] * padded(mean, d + 1, zero)
                + g[4] * padded(mean, d + 2, zero);
            y - ici
        })
        .collect()
}

/// Residual variance `ρ_d + Σ_{o≠0} |G[d][d+o]|²·v_{d+o}`, with `|G|²`
/// computed once per symbol.
///
/// 4 mults and 4 adds per subcarrier.
pub fn residual_var_step<S: Real>(rho: &[S], gain_power: &[[S; 5]], var: &[S]) -> Vec<S> {
    rho.iter()
        .zip(gain_power)
        .enumerate()
        .map(|(d, (&r, g))| {
            let d = d as isize;
            r + g[0] * padded(var, d - 2, S::zero())
                + g[1] * padded(var, d - 1, S::zero())
                + g[3] * padded(var, d + 1, S::zero())
                + g[4] * padded(var, d + 2, S::zero())
        })
        .collect()
}

/// Symbol probabilities and soft mean `μ = Σ p(s)·s` from per-bit
/// probabilities `bit_probs[b] = [P(b=0), P(b=1)]`.
///
/// `(k−1)·M + 2M` mults and `2(M−1)` adds for `M` points of `k` bits.
pub fn soft_mean_step<S: Real>(
    bit_probs: &[[S; 2]],
    points: &[Complex<S>],
    labels: &[Vec<u8>],
) -> (Vec<S>, Complex<S>) {
    let probs: Vec<S> = labels
        .iter()
        .map(|lab| {
            let mut p = bit_probs[0][lab[0] as usize];
            for (b, &bit) in lab.iter().enumerate().skip(1) {
                p = p * bit_probs[b][bit as usize];
            }
            p
        })
        .collect();
    let mut mean = points[0] * probs[0];
    for (s, &p) in points.iter().zip(&probs).skip(1) {
        mean = mean + *s * p;
    }
    (probs, mean)
}

/// Soft variance `Σ p(s)|s|² − |μ|²`, clamped at zero.
///
/// `M + 2` mults and `M + 1` adds.
pub fn soft_var_step<S: Real>(probs: &[S], point_energy: &[S], mean: Complex<S>) -> S {
    let mut second = probs[0] * point_energy[0];
    for (&p, &e) in probs.iter().zip(point_energy).skip(1) {
        second = second + p * e;
    }
    (second - mean.norm_sqr()).max_of(S::zero())
}
