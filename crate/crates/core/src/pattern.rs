//! Directional element pattern, sub-array response vectors, array factors
//! (direct sum and Bessel series) and beam diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::bessel::bessel_j_upto;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, SubArray};

const LN10: f64 = std::f64::consts::LN_10;

/// Parabolic-in-dB directional element pattern with a floor.
///
/// Defaults reproduce the standard 3GPP single-element pattern:
/// 65 degree half-power width, rolloff coefficient 12, 30 dB floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    /// Half-power beamwidth reference, degrees.
    pub half_power_width_deg: f64,
    /// Quadratic rolloff coefficient (dimensionless).
    pub rolloff_coefficient: f64,
    /// Maximum attenuation, dB.
    pub floor_attenuation_db: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        Self {
            half_power_width_deg: 65.0,
            rolloff_coefficient: 12.0,
            floor_attenuation_db: 30.0,
        }
    }
}

impl ElementPattern {
    pub fn validate(&self) -> Result<()> {
        if self.half_power_width_deg > 0.0
            && self.rolloff_coefficient > 0.0
            && self.floor_attenuation_db > 0.0
        {
            Ok(())
        } else {
            Err(Error::invalid(
                "element pattern parameters must be strictly positive",
            ))
        }
    }

    /// Single-cut attenuation in dB (nonnegative), `min(ro * (x/hp)^2, floor)`.
    #[inline]
    fn attenuation_db(&self, angle: f64) -> f64 {
        let hp = self.half_power_width_deg.to_radians();
        let a = self.rolloff_coefficient * (angle / hp) * (angle / hp);
        a.min(self.floor_attenuation_db)
    }

    /// Gain in dB at azimuth offset `xi` and elevation offset `psi`,
    /// in `[-floor, 0]`. Angles are wrapped to the principal range first.
    #[inline]
    pub fn gain_db(&self, xi: f64, psi: f64) -> f64 {
        let total = self.attenuation_db(wrap_angle(xi)) + self.attenuation_db(wrap_angle(psi));
        -total.min(self.floor_attenuation_db)
    }

    /// Linear power gain, `10^(gain_db/10)`.
    #[inline]
    pub fn gain(&self, xi: f64, psi: f64) -> f64 {
        (self.gain_db(xi, psi) * (LN10 / 10.0)).exp()
    }

    /// Linear amplitude, `10^(gain_db/20)`.
    #[inline]
    pub fn amplitude(&self, xi: f64, psi: f64) -> f64 {
        (self.gain_db(xi, psi) * (LN10 / 20.0)).exp()
    }

    /// Amplitude with the elevation attenuation already evaluated
    /// (hoisted out of per-element loops).
    #[inline]
    fn amplitude_with_av(&self, xi: f64, av_db: f64) -> f64 {
        let total = (self.attenuation_db(wrap_angle(xi)) + av_db).min(self.floor_attenuation_db);
        (-total * (LN10 / 20.0)).exp()
    }
}

/// Linear element gain at azimuth offset `xi` and elevation offset `psi`.
pub fn element_gain(pattern: &ElementPattern, xi: f64, psi: f64) -> f64 {
    pattern.gain(xi, psi)
}

/// One exported grid point of an array-factor cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSample {
    pub phi: f64,
    pub theta: f64,
    pub value: Complex64,
}

/// Sub-array response vector for a plane wave from `(phi, theta)`.
///
/// Entry `m` is `exp(-j 2pi/lambda * (a sin(theta) cos(xi_m) + z cos(theta)))
/// * sqrt(G(xi_m, psi))` with `xi_m = phi - gamma_m` and `psi = theta - pi/2`.
/// The `z cos(theta)` term comes from the element's full 3D position and
/// vanishes both in the horizontal plane and for sub-arrays at zero height.
pub fn response_vector(
    sub: &SubArray,
    pattern: &ElementPattern,
    phi: f64,
    theta: f64,
) -> Vec<Complex64> {
    response_vector_at_height(sub, pattern, phi, theta, sub.height_z)
}

pub(crate) fn response_vector_at_height(
    sub: &SubArray,
    pattern: &ElementPattern,
    phi: f64,
    theta: f64,
    z: f64,
) -> Vec<Complex64> {
    let k0 = 2.0 * PI / sub.config.lambda;
    let c1 = k0 * sub.config.radius * theta.sin();
    let zph = k0 * z * theta.cos();
    let av = pattern.attenuation_db(wrap_angle(theta - FRAC_PI_2));
    sub.gamma
        .iter()
        .map(|&g| {
            let xi = phi - g;
            let amp = pattern.amplitude_with_av(xi, av);
            Complex64::from_polar(amp, -(c1 * xi.cos() + zph))
        })
        .collect()
}

/// Array factor of a sub-array: the response vector contracted with the
/// delay-line phase vector (a plain transpose product, no conjugation).
pub fn array_factor(sub: &SubArray, pattern: &ElementPattern, phi: f64, theta: f64) -> Complex64 {
    array_factor_at_height(sub, pattern, phi, theta, sub.height_z)
}

pub(crate) fn array_factor_at_height(
    sub: &SubArray,
    pattern: &ElementPattern,
    phi: f64,
    theta: f64,
    z: f64,
) -> Complex64 {
    let k0 = 2.0 * PI / sub.config.lambda;
    let c1 = k0 * sub.config.radius * theta.sin();
    let zph = k0 * z * theta.cos();
    let av = pattern.attenuation_db(wrap_angle(theta - FRAC_PI_2));
    let mut acc = Complex64::new(0.0, 0.0);
    for (&g, &dp) in sub.gamma.iter().zip(&sub.phase_shifts) {
        let xi = phi - g;
        let amp = pattern.amplitude_with_av(xi, av);
        // entry * delta_m = amp * exp(-j (c1 cos(xi) + zph - delta_phi_m))
        let (s, c) = (-(c1 * xi.cos() + zph - dp)).sin_cos();
        acc += Complex64::new(amp * c, amp * s);
    }
    acc
}

/// Array factor via the Jacobi-Anger expansion, truncated at `n_max`:
/// `sum_n j^n e^{j n (phi-eta)/2} J_n(4pi a/lambda sin(theta) sin((phi-eta)/2)) S_n`.
///
/// The expansion models delay phases that rescale with `sin(theta)`, so it
/// reproduces [`array_factor`] exactly in the horizontal plane
/// (`theta = pi/2`, where the fixed delay lines are designed); away from it
/// the two deliberately differ. Converges rapidly once `n_max` exceeds the
/// Bessel argument magnitude.
pub fn array_factor_series(
    sub: &SubArray,
    pattern: &ElementPattern,
    phi: f64,
    theta: f64,
    n_max: usize,
) -> Result<Complex64> {
    if n_max < 1 {
        return Err(Error::invalid("series truncation n_max must be >= 1"));
    }
    let half = (phi - sub.eta) / 2.0;
    let x = 4.0 * PI / sub.config.lambda * sub.config.radius * theta.sin() * half.sin();
    let js = bessel_j_upto(n_max, x);

    let av = pattern.attenuation_db(wrap_angle(theta - FRAC_PI_2));
    let amps: Vec<f64> = sub
        .gamma
        .iter()
        .map(|&g| pattern.amplitude_with_av(phi - g, av))
        .collect();
    // S_n = sum_m amp_m e^{-j n pi (m-1)/(M-1)}; S_{-n} = conj(S_n).
    let m_count = sub.config.m;
    let mut s_n = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for (i, &amp) in amps.iter().enumerate() {
        let arc = sub.config.element_arc(i);
        for (n, s) in s_n.iter_mut().enumerate() {
            *s += Complex64::from_polar(amp, -(n as f64) * arc);
        }
    }
    debug_assert_eq!(amps.len(), m_count);

    // n = 0 term, then paired +-n terms:
    // j^n J_n(x) (e^{j n half} S_n + e^{-j n half} conj(S_n)).
    let mut total = s_n[0] * js[0];
    let mut j_pow = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        j_pow *= Complex64::new(0.0, 1.0);
        let e = Complex64::from_polar(1.0, n as f64 * half);
        total += j_pow * js[n] * (e * s_n[n] + e.conj() * s_n[n].conj());
    }
    Ok(total)
}

/// Default series truncation: the Bessel argument bound plus decay margin.
pub fn default_series_terms(sub: &SubArray) -> usize {
    (4.0 * PI * sub.config.radius / sub.config.lambda).ceil() as usize + 40
}

/// First-valley offset approximation `2 asin(3.83 / (2M))`, radians.
pub fn valley_approx(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("valley approximation needs M >= 2"));
    }
    Ok(2.0 * (3.83 / (2.0 * m as f64)).asin())
}

/// Main-lobe beamwidth approximation `4 asin(3.83 / (2M))`, radians.
pub fn beamwidth(m: usize) -> Result<f64> {
    Ok(2.0 * valley_approx(m)?)
}

/// Numerically locate the first local minimum of `|AF(eta, eta+off, pi/2)|`
/// for `off > 0`: grid scan at `grid_step`, then golden-section refinement
/// to `grid_step / 100`.
pub fn find_first_valley(sub: &SubArray, pattern: &ElementPattern, grid_step: f64) -> Result<f64> {
    let approx = valley_approx(sub.config.m)?;
    let in_range = grid_step.partial_cmp(&0.0) == Some(std::cmp::Ordering::Greater)
        && grid_step <= approx / 10.0;
    if !in_range {
        return Err(Error::invalid(format!(
            "grid_step {grid_step} outside (0, {}]",
            approx / 10.0
        )));
    }
    let f = |off: f64| array_factor(sub, pattern, sub.eta + off, FRAC_PI_2).norm();

    let mut prev2 = f(0.0);
    let mut prev = f(grid_step);
    let mut k = 2usize;
    loop {
        let off = k as f64 * grid_step;
        if off > FRAC_PI_2 {
            return Err(Error::numerical(
                "no local minimum of |AF| within pi/2 of the boresight",
            ));
        }
        let cur = f(off);
        if prev < prev2 && prev <= cur {
            let lo = (k as f64 - 2.0) * grid_step;
            let hi = off;
            return Ok(golden_min(&f, lo, hi, grid_step / 100.0));
        }
        prev2 = prev;
        prev = cur;
        k += 1;
    }
}

/// Golden-section minimization on a unimodal bracket.
fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Sample `|AF|` over a phi grid at fixed theta.
pub fn pattern_cut(
    sub: &SubArray,
    pattern: &ElementPattern,
    phi_grid: impl IntoIterator<Item = f64>,
    theta: f64,
) -> Vec<PatternSample> {
    phi_grid
        .into_iter()
        .map(|phi| PatternSample {
            phi,
            theta,
            value: array_factor(sub, pattern, phi, theta),
        })
        .collect()
}

/// Write samples as CSV: `phi_rad,theta_rad,af_abs,af_db` (UTF-8, '.' decimals).
pub fn write_pattern_csv<W: std::io::Write>(
    samples: &[PatternSample],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "phi_rad,theta_rad,af_abs,af_db")?;
    for s in samples {
        let abs = s.value.norm();
        writeln!(out, "{},{},{},{}", s.phi, s.theta, abs, 20.0 * abs.log10())?;
    }
    Ok(())
}
