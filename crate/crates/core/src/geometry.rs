//! Semi-circular sub-array geometry and the variable-length delay-line
//! phase design.
//!
//! A sub-array is one half of a uniform circular ring: `M` directional
//! elements spanning 180 degrees, all hard-wired to a single port through
//! passive micro-strip delay lines whose lengths are chosen so that the
//! combined main lobe points along the sub-array's physical orientation.
//! All angles are radians; degrees appear only at configuration boundaries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s, fixed for reproducibility of derived lengths.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wrap an angle to the principal range `(-pi, pi]`.
///
/// Values already in range pass through unchanged, so boundary comparisons
/// stay exact; only out-of-range inputs pay the reduction rounding.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x > -PI && x <= PI {
        return x;
    }
    // rem_euclid maps to [0, 2pi); shift so that pi stays pi and -pi maps to pi.
    let y = (-x + PI).rem_euclid(2.0 * PI);
    PI - y
}

/// Physical constants of one sub-array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Elements per sub-array (M >= 2).
    pub m: usize,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Wavelength in meters (c / f_c).
    pub lambda: f64,
    /// Ring radius in meters, (M-1) * lambda / (2 pi).
    pub radius: f64,
}

impl ArrayConfig {
    /// Build a configuration from element count and carrier frequency.
    pub fn new(m: usize, f_c: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("element count M={m} must be >= 2")));
        }
        if f_c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::invalid(format!(
                "carrier frequency {f_c} Hz must be positive"
            )));
        }
        let lambda = SPEED_OF_LIGHT / f_c;
        let radius = (m as f64 - 1.0) * lambda / (2.0 * std::f64::consts::PI);
        Ok(Self {
            m,
            f_c,
            lambda,
            radius,
        })
    }

    /// Angular position of element `m` (0-based) within a sub-array,
    /// measured from the sub-array orientation minus pi/2.
    #[inline]
    pub(crate) fn element_arc(&self, m_idx: usize) -> f64 {
        std::f64::consts::PI * m_idx as f64 / (self.m as f64 - 1.0)
    }
}

/// Delay-line lengths in meters, one per element.
///
/// `l_m = -a sin(pi (m-1)/(M-1)) + k_m lambda` with
/// `k_m = ceil(a/lambda * sin(pi (m-1)/(M-1)))`, which keeps every length in
/// `[0, lambda)`. The first element gets a zero-length line; a zero delay is
/// phase-equivalent (mod 2 pi) to a full-wavelength line.
pub fn delay_line_lengths(config: &ArrayConfig) -> Vec<f64> {
    let a = config.radius;
    let lambda = config.lambda;
    (0..config.m)
        .map(|i| {
            // sin(pi i/(M-1)) evaluated from the shorter arc so the list is
            // exactly palindromic and the end elements get exactly zero.
            let s = config.element_arc(i.min(config.m - 1 - i)).sin();
            let k = (a / lambda * s).ceil();
            -a * s + k * lambda
        })
        .collect()
}

/// Unit-modulus phase shifts applied by the delay lines,
/// `delta_m = exp(-j 2 pi l_m / lambda)`.
///
/// Independent of the sub-array orientation: the same vector serves every
/// sub-array of a given configuration.
pub fn phase_shift_vector(config: &ArrayConfig) -> Vec<Complex64> {
    delay_line_lengths(config)
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * l / config.lambda))
        .collect()
}

/// One oriented semi-circular sub-array.
#[derive(Debug, Clone, PartialEq)]
pub struct SubArray {
    pub config: ArrayConfig,
    /// Orientation of the central element relative to +x, in `(-pi, pi]`.
    pub eta: f64,
    /// Height of the ring plane above z = 0, in meters.
    pub height_z: f64,
    /// Per-element orientation angles `gamma_m(eta)`.
    pub gamma: Vec<f64>,
    /// Per-element 3D positions in meters.
    pub positions: Vec<[f64; 3]>,
    /// Per-element delay-line lengths in meters.
    pub delay_lengths: Vec<f64>,
    /// Per-element delay phases `-2 pi l_m / lambda`, radians.
    pub phase_shifts: Vec<f64>,
}

impl SubArray {
    /// Construct a sub-array with the given orientation and height.
    /// Orientations outside `(-pi, pi]` are wrapped, not rejected.
    pub fn new(config: ArrayConfig, eta: f64, height_z: f64) -> Self {
        use std::f64::consts::FRAC_PI_2;
        let eta = wrap_angle(eta);
        let gamma: Vec<f64> = (0..config.m)
            .map(|i| eta - FRAC_PI_2 + config.element_arc(i))
            .collect();
        let positions = gamma
            .iter()
            .map(|&g| [config.radius * g.cos(), config.radius * g.sin(), height_z])
            .collect();
        let delay_lengths = delay_line_lengths(&config);
        let phase_shifts = delay_lengths
            .iter()
            .map(|&l| -2.0 * std::f64::consts::PI * l / config.lambda)
            .collect();
        Self {
            config,
            eta,
            height_z,
            gamma,
            positions,
            delay_lengths,
            phase_shifts,
        }
    }

    /// Delay phase factors `exp(j * phase_shifts[m])`.
    pub fn delta(&self) -> Vec<Complex64> {
        self.phase_shifts
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const F_C: f64 = 47.2e9;

    #[test]
    fn config_values_match_direct_evaluation() {
        // Independent high-precision references (mpmath, 30 digits).
        let c = ArrayConfig::new(64, F_C).unwrap();
        assert!((c.lambda - 0.0063515351271186441).abs() < 1e-18);
        assert!((c.radius - 0.063685327337272746).abs() < 1e-15);

        let c = ArrayConfig::new(128, 37e9).unwrap();
        assert!((c.radius - 0.16377319870894369).abs() < 1e-15);

        // M = 2: radius collapses to lambda / (2 pi).
        let c = ArrayConfig::new(2, F_C).unwrap();
        assert!((c.radius - c.lambda / (2.0 * PI)).abs() < 1e-18);
    }

    #[test]
    fn config_rejects_bad_inputs() {
        assert!(ArrayConfig::new(1, F_C).is_err());
        assert!(ArrayConfig::new(0, F_C).is_err());
        assert!(ArrayConfig::new(4, 0.0).is_err());
        assert!(ArrayConfig::new(4, -1.0).is_err());
    }

    #[test]
    fn delay_lengths_match_hand_computed_m16() {
        let c = ArrayConfig::new(16, F_C).unwrap();
        let l = delay_line_lengths(&c);
        // m=1: sin term 0 -> zero-length line.
        assert_eq!(l[0], 0.0);
        // m=8 (index 7): k_8 = 3, l_8 = 0.62575386508527854 * lambda.
        assert!((l[7] / c.lambda - 0.62575386508527854).abs() < 1e-12);
        // m=8 and m=9 share the minimum length.
        assert!((l[7] - l[8]).abs() < 1e-18);
    }

    #[test]
    fn delay_lengths_palindromic_and_bounded() {
        for m in [2, 16, 64, 128, 97] {
            let c = ArrayConfig::new(m, F_C).unwrap();
            let l = delay_line_lengths(&c);
            for i in 0..m {
                assert!(l[i] >= 0.0 && l[i] < c.lambda, "M={m} l[{i}]={}", l[i]);
                assert!(
                    (l[i] - l[m - 1 - i]).abs() < 1e-15 * c.lambda,
                    "palindrome broken at M={m}, i={i}"
                );
            }
        }
    }

    #[test]
    fn phase_residual_is_multiple_of_two_pi() {
        // delta_phi_m must be congruent to +2pi/lambda * a * sin(arc_m)
        // modulo 2pi, so their difference is an integer multiple of 2pi.
        for m in [2, 16, 64, 128] {
            let c = ArrayConfig::new(m, F_C).unwrap();
            let l = delay_line_lengths(&c);
            for i in 0..m {
                let delta_phi = -2.0 * PI * l[i] / c.lambda;
                let residual = delta_phi - 2.0 * PI / c.lambda * c.radius * c.element_arc(i).sin();
                let frac = residual / (2.0 * PI);
                assert!(
                    (frac - frac.round()).abs() * 2.0 * PI < 1e-9,
                    "M={m} i={i}: residual {residual} not a 2pi multiple"
                );
            }
        }
    }

    #[test]
    fn phase_vector_is_unit_modulus_with_expected_entries() {
        let c = ArrayConfig::new(16, F_C).unwrap();
        let d = phase_shift_vector(&c);
        assert_eq!(d[0], Complex64::new(1.0, 0.0));
        for z in &d {
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
        // m=8: delta = exp(-j * 2 pi * 0.62575386508527854)
        let want = Complex64::from_polar(1.0, -3.9317274910146594);
        assert!((d[7] - want).norm() < 1e-12);
    }

    #[test]
    fn subarray_orientation_and_positions() {
        let c = ArrayConfig::new(16, F_C).unwrap();
        let s = SubArray::new(c, 0.0, 0.25);
        assert!((s.gamma[0] + PI / 2.0).abs() < 1e-15);
        assert!((s.gamma[15] - PI / 2.0).abs() < 1e-15);
        // eta = 0, m = 1 -> position (0, -a, z); m = M -> (0, +a, z).
        assert!(s.positions[0][0].abs() < 1e-15);
        assert!((s.positions[0][1] + c.radius).abs() < 1e-15);
        assert_eq!(s.positions[0][2], 0.25);
        assert!((s.positions[15][1] - c.radius).abs() < 1e-15);

        let c3 = ArrayConfig::new(3, F_C).unwrap();
        let s3 = SubArray::new(c3, PI / 4.0, 0.0);
        for (got, want) in s3.gamma.iter().zip([-PI / 4.0, PI / 4.0, 3.0 * PI / 4.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn subarray_wraps_orientation() {
        let c = ArrayConfig::new(8, F_C).unwrap();
        let s1 = SubArray::new(c, 0.3, 0.0);
        let s2 = SubArray::new(c, 0.3 + 2.0 * PI, 0.0);
        assert!((s1.eta - s2.eta).abs() < 1e-12);
        for (p, q) in s1.positions.iter().zip(&s2.positions) {
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-12);
            }
        }
        // -pi maps into the principal range as +pi.
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
    }

    #[test]
    fn positions_lie_on_ring() {
        let c = ArrayConfig::new(32, F_C).unwrap();
        let s = SubArray::new(c, 1.234, 0.05);
        for p in &s.positions {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - c.radius).abs() < 1e-12 * c.radius);
            assert_eq!(p[2], 0.05);
        }
    }
}
