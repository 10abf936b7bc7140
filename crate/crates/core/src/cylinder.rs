//! The full cylinder array: vertically stacked rings of paired sub-arrays
//! with orientations spaced one valley offset apart, and its combined
//! 2N-port response.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{wrap_angle, ArrayConfig, SubArray};
use crate::linalg::CMatrix;
use crate::pattern::{response_vector_at_height, ElementPattern};
use crate::pattern::valley_approx;

/// Which half of its ring a sub-array occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubArraySign {
    Plus,
    Minus,
}

/// A stack of `N` rings, each split into two complementary sub-arrays,
/// forming `2N` selectable ports.
///
/// Sub-arrays are ordered `[plus_0 .. plus_{N-1}, minus_0 .. minus_{N-1}]`;
/// `plus_n` and `minus_n` share ring `n` at height `n * layer_spacing`.
#[derive(Debug, Clone)]
pub struct CylinderArray {
    pub config: ArrayConfig,
    /// Number of rings.
    pub n_rings: usize,
    /// Vertical distance between adjacent rings, meters.
    pub layer_spacing: f64,
    /// All `2N` sub-arrays, plus block first.
    pub subarrays: Vec<SubArray>,
    /// Total stack height `(N-1) * layer_spacing`, meters.
    pub total_height: f64,
    /// Include the `z cos(theta)` inter-ring phase when evaluating
    /// responses. Defaults to true; disable to reproduce a purely planar
    /// composition of ring patterns.
    pub layer_phase: bool,
}

/// Design the cylinder for a given sub-array size and carrier:
/// `N = floor(pi M / 3.83)` rings, plus-orientations at multiples of the
/// valley offset, minus-orientations opposite, rings half a wavelength apart.
pub fn design_cylinder(m: usize, f_c: f64) -> Result<CylinderArray> {
    let config = ArrayConfig::new(m, f_c)?;
    let n = ring_count(m);
    let layer_spacing = config.lambda / 2.0;
    let step = valley_approx(m)?;
    let mut subarrays = Vec::with_capacity(2 * n);
    for ring in 0..n {
        let eta = wrap_angle(ring as f64 * step);
        subarrays.push(SubArray::new(config, eta, ring as f64 * layer_spacing));
    }
    for ring in 0..n {
        let eta = wrap_angle(ring as f64 * step - std::f64::consts::PI);
        subarrays.push(SubArray::new(config, eta, ring as f64 * layer_spacing));
    }
    Ok(CylinderArray {
        config,
        n_rings: n,
        layer_spacing,
        subarrays,
        total_height: (n as f64 - 1.0) * layer_spacing,
        layer_phase: true,
    })
}

/// `N = floor(pi M / 3.83)`.
pub fn ring_count(m: usize) -> usize {
    (std::f64::consts::PI * m as f64 / 3.83).floor() as usize
}

impl CylinderArray {
    /// Number of selectable ports (2N).
    pub fn n_ports(&self) -> usize {
        self.subarrays.len()
    }

    pub fn with_layer_phase(mut self, enabled: bool) -> Self {
        self.layer_phase = enabled;
        self
    }

    fn eval_height(&self, sub: &SubArray) -> f64 {
        if self.layer_phase {
            sub.height_z
        } else {
            0.0
        }
    }

    /// Response matrix `A(phi, theta)`: column `n` is the response vector of
    /// sub-array `n`, plus block first.
    pub fn response_matrix(&self, pattern: &ElementPattern, phi: f64, theta: f64) -> CMatrix {
        let m = self.config.m;
        let mut a = CMatrix::zeros(m, self.n_ports());
        for (j, sub) in self.subarrays.iter().enumerate() {
            let col = response_vector_at_height(sub, pattern, phi, theta, self.eval_height(sub));
            for (i, v) in col.into_iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// Combined port outputs `r(phi, theta)`: entry `n` is the array factor
    /// of sub-array `n`, equal to `A^T(phi, theta) * delta`.
    ///
    /// Evaluated ring by ring: the minus port of a ring sees element angles
    /// shifted by pi, so its propagation phases are the conjugates of the
    /// plus port's and one sin/cos serves both. Element gains follow a
    /// Gaussian-in-dB profile along the uniform element grid and are
    /// advanced by a multiplicative recurrence instead of per-element
    /// exponentials. Agrees with the per-port [`array_factor`] route to
    /// ~1e-13 relative (pinned by tests).
    ///
    /// [`array_factor`]: crate::pattern::array_factor
    pub fn subarray_outputs(&self, pattern: &ElementPattern, phi: f64, theta: f64) -> Vec<Complex64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        const LN10_20: f64 = std::f64::consts::LN_10 / 20.0;

        let m = self.config.m;
        let n_rings = self.n_rings;
        let k0 = 2.0 * PI / self.config.lambda;
        let c1 = k0 * self.config.radius * theta.sin();
        let d = PI / (m as f64 - 1.0);

        // Vertical cut of the element gain: a scalar per call.
        let hp = pattern.half_power_width_deg.to_radians();
        let floor_db = pattern.floor_attenuation_db;
        let psi = wrap_angle(theta - FRAC_PI_2);
        let av = (pattern.rolloff_coefficient * (psi / hp) * (psi / hp)).min(floor_db);
        let g_v = (-av * LN10_20).exp();
        let amp_floor = (-floor_db * LN10_20).exp();
        // Horizontal gain: amp(xi) = max(exp(-c2 xi^2) * g_v, amp_floor).
        let c2 = pattern.rolloff_coefficient * LN10_20 / (hp * hp);
        let ratio = (-2.0 * c2 * d * d).exp();

        let delta = self.subarrays[0].delta();
        let (sin_d, cos_d) = d.sin_cos();

        let mut out = vec![Complex64::new(0.0, 0.0); 2 * n_rings];
        for ring in 0..n_rings {
            let sub = &self.subarrays[ring];
            let xi0_plus = wrap_angle(phi - sub.eta + FRAC_PI_2);
            let xi0_minus = wrap_angle(xi0_plus + PI);

            // Gain recurrences, one per port. Advancing across the -pi
            // boundary reseeds from the wrapped angle.
            let seed = |xi: f64| ((-c2 * xi * xi).exp(), ((2.0 * xi - d) * c2 * d).exp());
            let (mut g_p, mut t_p) = seed(xi0_plus);
            let (mut g_m, mut t_m) = seed(xi0_minus);
            let mut xi_p = xi0_plus;
            let mut xi_m = xi0_minus;

            // Propagation phase via rotation: (cos, sin) of xi_plus.
            let (mut s_xi, mut c_xi) = xi0_plus.sin_cos();

            let mut acc_p = Complex64::new(0.0, 0.0);
            let mut acc_m = Complex64::new(0.0, 0.0);
            for i in 0..m {
                let amp_p = (g_p * g_v).max(amp_floor);
                let amp_m = (g_m * g_v).max(amp_floor);
                // x = c1 cos(xi_plus); the minus port sees cos(xi + pi) = -cos(xi).
                let (s_x, c_x) = (-c1 * c_xi).sin_cos();
                let e = Complex64::new(c_x, s_x); // exp(-j c1 cos xi)
                let u = delta[i];
                acc_p += amp_p * e * u;
                acc_m += amp_m * e.conj() * u;

                if i + 1 < m {
                    // Advance the plus gain.
                    xi_p -= d;
                    if xi_p <= -PI {
                        xi_p += 2.0 * PI;
                        let (g, t) = seed(xi_p);
                        g_p = g;
                        t_p = t;
                    } else {
                        g_p *= t_p;
                        t_p *= ratio;
                    }
                    // Advance the minus gain.
                    xi_m -= d;
                    if xi_m <= -PI {
                        xi_m += 2.0 * PI;
                        let (g, t) = seed(xi_m);
                        g_m = g;
                        t_m = t;
                    } else {
                        g_m *= t_m;
                        t_m *= ratio;
                    }
                    // Rotate (cos, sin) by -d.
                    let c_new = c_xi * cos_d + s_xi * sin_d;
                    let s_new = s_xi * cos_d - c_xi * sin_d;
                    c_xi = c_new;
                    s_xi = s_new;
                }
            }

            let zfac = if self.layer_phase {
                Complex64::from_polar(1.0, -k0 * sub.height_z * theta.cos())
            } else {
                Complex64::new(1.0, 0.0)
            };
            out[ring] = acc_p * zfac;
            out[n_rings + ring] = acc_m * zfac;
        }
        out
    }

    /// Per-sub-array roster for export.
    pub fn roster(&self) -> Vec<RosterEntry> {
        self.subarrays
            .iter()
            .enumerate()
            .map(|(index, sub)| RosterEntry {
                index,
                sign: if index < self.n_rings {
                    SubArraySign::Plus
                } else {
                    SubArraySign::Minus
                },
                eta_rad: sub.eta,
                height_m: sub.height_z,
            })
            .collect()
    }
}

/// One roster row: `{index, sign, eta_rad, height_m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub index: usize,
    pub sign: SubArraySign,
    pub eta_rad: f64,
    pub height_m: f64,
}

/// Serialize the roster as a JSON document.
pub fn write_roster_json<W: std::io::Write>(
    cyl: &CylinderArray,
    out: &mut W,
) -> std::io::Result<()> {
    let roster = cyl.roster();
    serde_json::to_writer_pretty(&mut *out, &roster)?;
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_dot_t;
    use crate::pattern::{array_factor, array_factor_at_height};
    use std::f64::consts::{FRAC_PI_2, PI};

    const F_C: f64 = 47.2e9;

    #[test]
    fn ring_counts_match_reference_pairs() {
        assert_eq!(ring_count(16), 13);
        assert_eq!(ring_count(32), 26);
        assert_eq!(ring_count(64), 52);
        assert_eq!(ring_count(128), 104);
    }

    #[test]
    fn design_rejects_tiny_arrays() {
        assert!(design_cylinder(1, F_C).is_err());
    }

    #[test]
    fn orientations_follow_valley_spacing() {
        let cyl = design_cylinder(16, F_C).unwrap();
        assert_eq!(cyl.n_ports(), 26);
        // plus_1 = 2 asin(3.83/32)
        assert!((cyl.subarrays[1].eta - 0.23995022756458932).abs() < 1e-14);
        // plus_0 = 0; minus_0 = -pi wrapped to +pi.
        assert_eq!(cyl.subarrays[0].eta, 0.0);
        assert_eq!(cyl.subarrays[13].eta, PI);
        let step = valley_approx(16).unwrap();
        for n in 0..13 {
            let plus = cyl.subarrays[n].eta;
            let minus = cyl.subarrays[13 + n].eta;
            assert!((wrap_angle(plus - n as f64 * step)).abs() < 1e-12);
            assert!((wrap_angle(minus - (plus - PI))).abs() < 1e-12);
            assert!(plus > -PI && plus <= PI);
            assert!(minus > -PI && minus <= PI);
        }
    }

    #[test]
    fn heights_increase_by_half_wavelength() {
        let cyl = design_cylinder(32, F_C).unwrap();
        let h = cyl.config.lambda / 2.0;
        assert_eq!(cyl.layer_spacing, h);
        for n in 0..cyl.n_rings {
            assert!((cyl.subarrays[n].height_z - n as f64 * h).abs() < 1e-15);
            assert_eq!(
                cyl.subarrays[n].height_z,
                cyl.subarrays[cyl.n_rings + n].height_z
            );
        }
        assert!((cyl.total_height - (cyl.n_rings as f64 - 1.0) * h).abs() < 1e-15);
    }

    #[test]
    fn coverage_of_full_azimuth_domain() {
        for m in [16, 64] {
            let cyl = design_cylinder(m, F_C).unwrap();
            let half = valley_approx(m).unwrap();
            let mut etas: Vec<f64> = cyl.subarrays.iter().map(|s| s.eta).collect();
            etas.sort_by(f64::total_cmp);
            // Circular union of [eta - half, eta + half] covers (-pi, pi]
            // iff no circular gap between consecutive orientations exceeds 2*half.
            for w in etas.windows(2) {
                assert!(w[1] - w[0] <= 2.0 * half + 1e-12, "gap {}", w[1] - w[0]);
            }
            let wraparound = (etas[0] + 2.0 * PI) - etas[etas.len() - 1];
            assert!(wraparound <= 2.0 * half + 1e-12);
        }
    }

    #[test]
    fn response_matrix_columns_are_response_vectors() {
        let cyl = design_cylinder(8, F_C).unwrap();
        let pat = ElementPattern::default();
        let (phi, theta) = (0.7, 1.2);
        let a = cyl.response_matrix(&pat, phi, theta);
        assert_eq!(a.rows, 8);
        assert_eq!(a.cols, cyl.n_ports());
        for (j, sub) in cyl.subarrays.iter().enumerate() {
            let v = response_vector_at_height(sub, &pat, phi, theta, sub.height_z);
            for i in 0..8 {
                assert_eq!(a[(i, j)], v[i]);
            }
        }
    }

    #[test]
    fn outputs_equal_transpose_times_delta() {
        let cyl = design_cylinder(8, F_C).unwrap();
        let pat = ElementPattern::default();
        for &(phi, theta) in &[(0.0, FRAC_PI_2), (1.9, 0.6), (-2.4, 2.8)] {
            let a = cyl.response_matrix(&pat, phi, theta);
            let delta = cyl.subarrays[0].delta();
            let want = a.transpose_matvec(&delta);
            let got = cyl.subarray_outputs(&pat, phi, theta);
            assert_eq!(got.len(), cyl.n_ports());
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() < 1e-12 * w.norm().max(1.0));
                assert!(g.is_finite());
            }
        }
    }

    #[test]
    fn zenith_cut_has_flat_phase_per_column() {
        let cyl = design_cylinder(8, F_C).unwrap();
        let pat = ElementPattern::default();
        // theta = 0: sin(theta) = 0, so within a column only the common
        // ring-height phase remains.
        let a = cyl.response_matrix(&pat, 0.3, 0.0);
        for j in 0..a.cols {
            let ph0 = a[(0, j)].arg();
            for i in 1..a.rows {
                let d = wrap_angle(a[(i, j)].arg() - ph0);
                assert!(d.abs() < 1e-10, "column {j} phase spread {d}");
            }
        }
        // With the ring phase disabled the columns are real amplitudes.
        let flat = design_cylinder(8, F_C).unwrap().with_layer_phase(false);
        let a0 = flat.response_matrix(&pat, 0.3, 0.0);
        for j in 0..a0.cols {
            for i in 0..a0.rows {
                assert!(a0[(i, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boresight_port_dominates() {
        let cyl = design_cylinder(16, F_C).unwrap();
        let pat = ElementPattern::default();
        let r = cyl.subarray_outputs(&pat, cyl.subarrays[0].eta, FRAC_PI_2);
        let peak = r[0].norm();
        for (n, v) in r.iter().enumerate().skip(1) {
            assert!(v.norm() < peak, "port {n} beats the boresight port");
        }
        // Equivariance across the plus block: each port at its own
        // boresight sees the same peak value.
        for n in 1..cyl.n_rings {
            let rn = cyl.subarray_outputs(&pat, cyl.subarrays[n].eta, FRAC_PI_2);
            assert!((rn[n].norm() - peak).abs() < 1e-9 * peak);
        }
    }

    #[test]
    fn adjacent_lobe_suppression() {
        let pat = ElementPattern::default();
        for m in [16, 64] {
            let cyl = design_cylinder(m, F_C).unwrap();
            let sub0 = &cyl.subarrays[0];
            let peak = array_factor(sub0, &pat, sub0.eta, FRAC_PI_2).norm();
            // First sidelobe of a single sub-array: scan past the first
            // valley for the next local maximum.
            let f = |off: f64| array_factor(sub0, &pat, sub0.eta + off, FRAC_PI_2).norm();
            let step = valley_approx(m).unwrap() / 200.0;
            let mut k = 1;
            let mut in_sidelobe = false;
            let sidelobe = loop {
                let (a, b, c) = (
                    f((k - 1) as f64 * step),
                    f(k as f64 * step),
                    f((k + 1) as f64 * step),
                );
                if !in_sidelobe && b < a && b <= c {
                    in_sidelobe = true; // passed the first valley
                } else if in_sidelobe && b > a && b >= c {
                    break b;
                }
                k += 1;
            };
            let ratio = sidelobe / peak;
            for n in 0..(cyl.n_rings - 1).min(4) {
                let here = &cyl.subarrays[n];
                let neighbor = &cyl.subarrays[n + 1];
                let leak = array_factor(here, &pat, neighbor.eta, FRAC_PI_2).norm();
                assert!(
                    leak / peak <= ratio,
                    "M={m}, n={n}: leak ratio {} > sidelobe ratio {}",
                    leak / peak,
                    ratio
                );
            }
        }
    }

    #[test]
    fn fused_outputs_match_per_port_route() {
        // The ring-fused evaluation must track the per-port array factor,
        // including angles that cross the wrap boundary and off-plane cuts.
        let pat = ElementPattern::default();
        for m in [8, 33, 64] {
            let cyl = design_cylinder(m, F_C).unwrap();
            for &(phi, theta) in &[
                (0.7, 1.2),
                (-3.1, FRAC_PI_2),
                (PI - 0.002, 0.05),
                (-0.4, 3.0),
                (2.2, FRAC_PI_2),
                (0.0, 0.0),
            ] {
                let fused = cyl.subarray_outputs(&pat, phi, theta);
                for (n, sub) in cyl.subarrays.iter().enumerate() {
                    let reference = array_factor_at_height(sub, &pat, phi, theta, sub.height_z);
                    assert!(
                        (fused[n] - reference).norm() <= 1e-12 * reference.norm().max(1e-9),
                        "M={m} port {n} at ({phi}, {theta}): {fused:?} vs {reference}",
                        fused = fused[n],
                    );
                }
            }
        }
    }

    #[test]
    fn roster_export_layout() {
        let cyl = design_cylinder(16, F_C).unwrap();
        let mut buf = Vec::new();
        write_roster_json(&cyl, &mut buf).unwrap();
        let parsed: Vec<RosterEntry> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(parsed.len(), 26);
        assert_eq!(parsed[0].sign, SubArraySign::Plus);
        assert_eq!(parsed[13].sign, SubArraySign::Minus);
        assert_eq!(parsed[5].index, 5);
        assert_eq!(parsed[5].height_m, cyl.subarrays[5].height_z);
    }

    #[test]
    fn vec_dot_t_consistency_of_outputs() {
        // r[n] literally equals response_vector(sub_n)^T delta.
        let cyl = design_cylinder(8, F_C).unwrap();
        let pat = ElementPattern::default();
        let r = cyl.subarray_outputs(&pat, -1.1, 1.4);
        let delta = cyl.subarrays[3].delta();
        let v = response_vector_at_height(&cyl.subarrays[3], &pat, -1.1, 1.4, cyl.subarrays[3].height_z);
        assert!((r[3] - vec_dot_t(&v, &delta)).norm() < 1e-12 * r[3].norm().max(1.0));
    }
}
