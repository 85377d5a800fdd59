//! Power/outage maps for the supported fading distributions.
//!
//! With no channel state information at the transmitter, every transmit
//! power `P` carries an outage probability: the chance that the block's
//! fading realization cannot support the target rate. For Rayleigh fading
//! the map and its inverse are closed form; for d-branch diversity the
//! outage is a regularized incomplete gamma and the inverse is found by
//! bracketed bisection on the (strictly monotone) forward map.
//!
//! Powers are linear watts throughout; dB conversions belong to callers.

use crate::error::{Error, Result};

/// Fading family of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    /// Single-branch Rayleigh fading: unit-mean exponential power gain.
    Rayleigh,
    /// d-fold diversity combining. `Diversity { branches: 1 }` coincides
    /// with `Rayleigh` to within numerical accuracy.
    Diversity {
        /// Number of diversity branches, >= 1.
        branches: u32,
    },
}

/// A fading channel: family, spectral efficiency and noise power.
///
/// Validated at construction so the power/outage maps never see bad
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    kind: FadingKind,
    rate: f64,
    noise: f64,
}

impl ChannelModel {
    /// Build a model. `rate` is the spectral efficiency in bits/s/Hz,
    /// `noise` the noise power in linear watts; both must be positive.
    pub fn new(kind: FadingKind, rate: f64, noise: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::Parameter(format!(
                "spectral efficiency must be positive and finite, got {rate}"
            )));
        }
        if !noise.is_finite() || noise <= 0.0 {
            return Err(Error::Parameter(format!(
                "noise power must be positive and finite, got {noise}"
            )));
        }
        if let FadingKind::Diversity { branches } = kind {
            if branches < 1 {
                return Err(Error::Parameter(
                    "diversity branch count must be >= 1".to_string(),
                ));
            }
        }
        Ok(Self { kind, rate, noise })
    }

    /// Rayleigh model shorthand.
    pub fn rayleigh(rate: f64, noise: f64) -> Result<Self> {
        Self::new(FadingKind::Rayleigh, rate, noise)
    }

    /// Diversity model shorthand.
    pub fn diversity(branches: u32, rate: f64, noise: f64) -> Result<Self> {
        Self::new(FadingKind::Diversity { branches }, rate, noise)
    }

    pub fn kind(&self) -> FadingKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// SNR threshold `(2^R - 1) * N0`: the received gain below which a
    /// block at unit power cannot carry rate R.
    pub fn snr_gap(&self) -> f64 {
        (2f64.powf(self.rate) - 1.0) * self.noise
    }

    /// Outage probability of a transmission at `power` watts.
    ///
    /// Strictly decreasing in power; tends to 1 as power tends to 0 and
    /// to 0 as power grows without bound.
    pub fn outage_from_power(&self, power: f64) -> Result<f64> {
        if !power.is_finite() || power <= 0.0 {
            return Err(Error::Parameter(format!(
                "transmit power must be positive and finite, got {power}"
            )));
        }
        let x = self.snr_gap() / power;
        match self.kind {
            // 1 - exp(-x), computed via exp_m1 so tiny outages keep precision.
            FadingKind::Rayleigh => Ok(-((-x).exp_m1())),
            FadingKind::Diversity { branches } => {
                let d = f64::from(branches);
                regularized_lower_gamma(d, d * x)
            }
        }
    }

    /// Transmit power achieving outage probability `eps`.
    ///
    /// Rayleigh is inverted in closed form. Diversity has no closed-form
    /// inverse, so the monotone forward map is bisected to a relative
    /// tolerance well below 1e-10; the round trip through
    /// [`ChannelModel::outage_from_power`] holds to 1e-9.
    pub fn power_from_outage(&self, eps: f64) -> Result<f64> {
        if eps.is_nan() || eps <= 0.0 || eps >= 1.0 {
            return Err(Error::Parameter(format!(
                "outage probability must lie in (0,1), got {eps}"
            )));
        }
        let rayleigh_inverse = self.noise * (1.0 - 2f64.powf(self.rate)) / (-eps).ln_1p();
        match self.kind {
            FadingKind::Rayleigh => Ok(rayleigh_inverse),
            FadingKind::Diversity { .. } => self.invert_outage(eps, rayleigh_inverse),
        }
    }

    /// Bracketed bisection of `outage_from_power` around an initial guess.
    fn invert_outage(&self, eps: f64, guess: f64) -> Result<f64> {
        // Expand the bracket from the Rayleigh inverse: outage decreases in
        // power, so lo must sit at outage >= eps and hi at outage <= eps.
        let mut lo = guess;
        let mut hi = guess;
        let mut tries = 0usize;
        while self.outage_from_power(lo)? < eps {
            lo *= 0.5;
            tries += 1;
            if tries > 1100 || lo == 0.0 {
                return Err(Error::Numeric(format!(
                    "failed to bracket outage inversion from below (eps={eps})"
                )));
            }
        }
        tries = 0;
        while self.outage_from_power(hi)? > eps {
            hi *= 2.0;
            tries += 1;
            if tries > 1100 || !hi.is_finite() {
                return Err(Error::Numeric(format!(
                    "failed to bracket outage inversion from above (eps={eps})"
                )));
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-13 * mid {
                break;
            }
            if self.outage_from_power(mid)? > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }
}

/// Regularized lower incomplete gamma function P(a, x) = γ(a, x) / Γ(a).
///
/// Monotone nondecreasing in x with P(a, 0) = 0 and P(a, ∞) = 1; for
/// a = 1 it reduces to 1 − e^{−x}. Series expansion for x < a + 1,
/// Lentz continued fraction for the complement otherwise.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Parameter(format!(
            "gamma shape must be positive and finite, got {a}"
        )));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Parameter(format!(
            "gamma argument must be nonnegative and finite, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // exp(-x + a ln x - ln Γ(a)), the prefactor of both expansions.
    let prefactor = (-x + a * x.ln() - ln_gamma(a)).exp();
    if x < a + 1.0 {
        lower_series(a, x, prefactor)
    } else {
        Ok(1.0 - upper_continued_fraction(a, x, prefactor)?)
    }
}

const MAX_ITER: usize = 500;

/// P(a,x) = prefactor · Σ_{n>=0} x^n / (a (a+1) ... (a+n)).
fn lower_series(a: f64, x: f64, prefactor: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(prefactor * sum);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete gamma series did not converge (a={a}, x={x})"
    )))
}

/// Q(a,x) = prefactor / (x+1−a + K_{n>=1}(n(a−n) / (x+2n+1−a))), evaluated
/// with the modified Lentz algorithm.
fn upper_continued_fraction(a: f64, x: f64, prefactor: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let b0 = x + 1.0 - a;
    let mut f = if b0.abs() < TINY { TINY } else { b0 };
    let mut c = f;
    let mut d = 0.0;
    for n in 1..=MAX_ITER {
        let nf = n as f64;
        let an = nf * (a - nf);
        let bn = x + 2.0 * nf + 1.0 - a;
        d = bn + an * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = bn + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(prefactor / f);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete gamma continued fraction did not converge (a={a}, x={x})"
    )))
}

/// ln Γ(x) by the Lanczos approximation (g = 7, 9 coefficients), with the
/// reflection formula below 0.5.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)] // published table values, digits kept
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // ln Γ(x) = ln(π / sin(πx)) − ln Γ(1 − x)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}
