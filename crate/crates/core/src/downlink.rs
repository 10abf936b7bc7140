//! Downlink processing: duality-based MMSE precoding behind the selection
//! network, waterfilling power allocation, and the alternating
//! precoder/power iteration with a selection computed once at
//! initialization.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{normalize, vec_dot_h, CMatrix, Cholesky};
use crate::uplink::{greedy_select, LinkReport, SelectionMatrix, UplinkScenario};

/// One downlink problem instance.
#[derive(Debug, Clone)]
pub struct DownlinkScenario {
    /// K effective channel vectors, each of length `n_ports`.
    pub channels: Vec<Vec<Complex64>>,
    /// Total transmit power `P_DL` shared by all users.
    pub total_power: f64,
    /// Receiver noise power.
    pub sigma2: f64,
    /// Antenna elements per port (splitter factor `1/M`).
    pub m: usize,
    /// Iteration cap for the alternating optimization.
    pub t_max: usize,
    /// Convergence threshold on the L1 power-vector change.
    pub eps_th: f64,
}

impl DownlinkScenario {
    pub fn new(channels: Vec<Vec<Complex64>>, total_power: f64, m: usize) -> Result<Self> {
        if channels.is_empty() || channels[0].is_empty() {
            return Err(Error::invalid("need K >= 1 nonempty channels"));
        }
        let n = channels[0].len();
        if channels.iter().any(|h| h.len() != n) {
            return Err(Error::invalid("channel vectors must share one length"));
        }
        if total_power.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::invalid("total power must be positive"));
        }
        Ok(Self {
            channels,
            total_power,
            sigma2: 1.0,
            m,
            t_max: 50,
            eps_th: 0.01,
        })
    }

    pub fn n_users(&self) -> usize {
        self.channels.len()
    }
}

/// Per-user transmit powers summing to the scenario total.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
}

impl PowerAllocation {
    pub fn uniform(total: f64, k: usize) -> Self {
        Self {
            p: vec![total / k as f64; k],
        }
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// How the per-iteration waterfilling restores the total-power constraint
/// after the nonnegativity clamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaterfillMode {
    /// Single water-level formula over all users, clamped at zero, then the
    /// positive entries rescaled so the powers sum to the budget.
    #[default]
    RescaleSum,
    /// Classic active-set recursion: drop users whose power hits zero and
    /// recompute the water level over the remainder.
    ActiveSet,
}

/// Options for [`optimize_downlink`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DownlinkOptions {
    /// Re-run the port selection each iteration with the current powers
    /// instead of keeping the initialization-phase selection.
    pub update_selection: bool,
    pub waterfill_mode: WaterfillMode,
}

/// `S * conj(h_k)`, the selected dual-uplink channel of user `k`.
fn dual_channel(s: &SelectionMatrix, h: &[Complex64]) -> Vec<Complex64> {
    s.omega.iter().map(|&n| h[n].conj()).collect()
}

/// MMSE precoder for user `k` at power allocation `p`:
/// `C_k^{-1} S conj(h_k)` scaled to unit norm, with
/// `C_k = S (sum_{i != k} p_i conj(h_i) h_i^T + M sigma^2 I) S^T`.
pub fn mmse_precoder(
    s: &SelectionMatrix,
    scen: &DownlinkScenario,
    p: &PowerAllocation,
    k: usize,
) -> Result<Vec<Complex64>> {
    let d = s.n_rf();
    let mut c = CMatrix::zeros(d, d);
    for i in 0..d {
        c[(i, i)] = Complex64::new(scen.m as f64 * scen.sigma2, 0.0);
    }
    for (i, h) in scen.channels.iter().enumerate() {
        if i == k {
            continue;
        }
        c.add_outer(p.p[i], &dual_channel(s, h));
    }
    let mut w = Cholesky::new(&c)?.solve(&dual_channel(s, &scen.channels[k]));
    normalize(&mut w);
    Ok(w)
}

/// Effective link amplitude `h_k^T S^T w_i` for every user/precoder pair.
fn link_gains(
    s: &SelectionMatrix,
    scen: &DownlinkScenario,
    precoders: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    scen.channels
        .iter()
        .map(|h| {
            let v = dual_channel(s, h);
            precoders.iter().map(|w| vec_dot_h(&v, w)).collect()
        })
        .collect()
}

/// Downlink SINR of user `k`:
/// `(p_k/M) |h_k^T S^T w_k|^2 / ((1/M) sum_{i!=k} p_i |h_k^T S^T w_i|^2 + sigma^2)`.
pub fn sinr_downlink(
    s: &SelectionMatrix,
    precoders: &[Vec<Complex64>],
    scen: &DownlinkScenario,
    p: &PowerAllocation,
    k: usize,
) -> f64 {
    let v = dual_channel(s, &scen.channels[k]);
    let m = scen.m as f64;
    let mut interference = 0.0;
    let mut signal = 0.0;
    for (i, w) in precoders.iter().enumerate() {
        let t = vec_dot_h(&v, w).norm_sqr();
        if i == k {
            signal = p.p[k] * t / m;
        } else {
            interference += p.p[i] * t / m;
        }
    }
    if signal == 0.0 {
        return 0.0;
    }
    signal / (interference + scen.sigma2)
}

fn sum_rate(
    s: &SelectionMatrix,
    precoders: &[Vec<Complex64>],
    scen: &DownlinkScenario,
    p: &PowerAllocation,
) -> (Vec<f64>, f64) {
    let sinrs: Vec<f64> = (0..scen.n_users())
        .map(|k| sinr_downlink(s, precoders, scen, p, k))
        .collect();
    let rate = sinrs.iter().map(|&x| (1.0 + x).log2()).sum();
    (sinrs, rate)
}

/// One waterfilling update: equivalent interference-plus-noise `Z_k`
/// evaluated at `p_prev`, water level `mu = P/K + mean(Z_k/g_k)`, powers
/// `max(mu - Z_k/g_k, 0)` restored to the budget per the selected mode.
pub fn waterfill(
    s: &SelectionMatrix,
    precoders: &[Vec<Complex64>],
    scen: &DownlinkScenario,
    p_prev: &PowerAllocation,
    mode: WaterfillMode,
) -> Result<PowerAllocation> {
    let gains = link_gains(s, scen, precoders);
    let k = scen.n_users();
    let own: Vec<f64> = (0..k).map(|i| gains[i][i].norm_sqr()).collect();
    let z: Vec<f64> = (0..k)
        .map(|i| {
            let interference: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| p_prev.p[j] * gains[i][j].norm_sqr())
                .sum();
            interference + scen.m as f64 * scen.sigma2
        })
        .collect();
    waterfill_from_gains(&own, &z, scen.total_power, mode).map(|p| PowerAllocation { p })
}

/// Waterfilling on explicit per-user gains and frozen interference-plus-noise
/// terms; shared by the cylinder and the sector-ULA downlink paths.
pub fn waterfill_from_gains(
    gains: &[f64],
    z: &[f64],
    total: f64,
    mode: WaterfillMode,
) -> Result<Vec<f64>> {
    let k = gains.len();
    debug_assert_eq!(z.len(), k);
    // Zero-gain users receive no power; they are the limit Z/g -> inf of the
    // clamp and must not poison the water level.
    let active: Vec<usize> = (0..k).filter(|&i| gains[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::numerical(
            "degenerate channel: all effective gains are zero",
        ));
    }
    let mut p = vec![0.0; k];
    if active.len() == 1 {
        // A single active user takes the whole budget, exactly.
        p[active[0]] = total;
        return Ok(p);
    }
    match mode {
        WaterfillMode::RescaleSum => {
            let offsets: Vec<f64> = active.iter().map(|&i| z[i] / gains[i]).collect();
            let mu = total / active.len() as f64
                + offsets.iter().sum::<f64>() / active.len() as f64;
            let mut sum = 0.0;
            for (&i, &off) in active.iter().zip(&offsets) {
                p[i] = (mu - off).max(0.0);
                sum += p[i];
            }
            // sum >= total by construction; rescale restores the budget.
            let scale = total / sum;
            for v in p.iter_mut() {
                *v *= scale;
            }
        }
        WaterfillMode::ActiveSet => {
            let mut set = active;
            loop {
                let mu = (total
                    + set.iter().map(|&i| z[i] / gains[i]).sum::<f64>())
                    / set.len() as f64;
                let mut all_positive = true;
                for &i in &set {
                    let v = mu - z[i] / gains[i];
                    p[i] = v;
                    if v <= 0.0 {
                        all_positive = false;
                    }
                }
                if all_positive {
                    break;
                }
                let before = set.len();
                set.retain(|&i| {
                    let keep = p[i] > 0.0;
                    if !keep {
                        p[i] = 0.0;
                    }
                    keep
                });
                if set.is_empty() || set.len() == before {
                    return Err(Error::numerical("active-set waterfilling failed to settle"));
                }
            }
        }
    }
    Ok(p)
}

/// Alternating downlink optimization: port selection obtained once from the
/// dual-uplink greedy at uniform power, then precoder and waterfilling
/// updates until the L1 power change drops below `eps_th` or `t_max` is
/// reached. The best iterate seen is reported; `converged` is false when the
/// cap was hit first.
pub fn optimize_downlink(
    scen: &DownlinkScenario,
    n_rf: usize,
    opts: &DownlinkOptions,
) -> Result<LinkReport> {
    let k = scen.n_users();
    let p0 = PowerAllocation::uniform(scen.total_power, k);
    let dual = |p: &PowerAllocation| -> Result<UplinkScenario> {
        UplinkScenario::new(
            scen.channels
                .iter()
                .map(|h| h.iter().map(Complex64::conj).collect())
                .collect(),
            p.p.iter().map(|&x| x / scen.sigma2).collect(),
            scen.m,
        )
    };
    let mut selection_updates = 1usize;
    let mut s = greedy_select(&dual(&p0)?, n_rf)?
        .selection
        .expect("greedy always emits a selection");

    let precoders0: Vec<Vec<Complex64>> = (0..k)
        .map(|u| mmse_precoder(&s, scen, &p0, u))
        .collect::<Result<_>>()?;
    let (sinrs0, rate0) = sum_rate(&s, &precoders0, scen, &p0);

    let mut trace = vec![rate0];
    let mut power_change_trace = Vec::new();
    let mut best = (rate0, sinrs0, precoders0, p0.clone());
    let mut p_prev = p0;
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=scen.t_max {
        iterations = t;
        if opts.update_selection && t > 1 {
            s = greedy_select(&dual(&p_prev)?, n_rf)?
                .selection
                .expect("greedy always emits a selection");
            selection_updates += 1;
        }
        let precoders: Vec<Vec<Complex64>> = (0..k)
            .map(|u| mmse_precoder(&s, scen, &p_prev, u))
            .collect::<Result<_>>()?;
        let p_next = waterfill(&s, &precoders, scen, &p_prev, opts.waterfill_mode)?;
        let change: f64 = p_next
            .p
            .iter()
            .zip(&p_prev.p)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let (sinrs, rate) = sum_rate(&s, &precoders, scen, &p_next);
        trace.push(rate);
        power_change_trace.push(change);
        if rate > best.0 {
            best = (rate, sinrs, precoders, p_next.clone());
        }
        p_prev = p_next;
        if change < scen.eps_th {
            converged = true;
            break;
        }
    }

    let (_, sinrs, precoders, p) = best;
    let mut report = LinkReport::from_sinrs(sinrs);
    report.selection = Some(s);
    report.combiners = precoders;
    report.trace = trace;
    report.power_change_trace = power_change_trace;
    report.power_allocation = Some(p.p);
    report.iterations = iterations;
    report.converged = converged;
    report.selection_updates = Some(selection_updates);
    Ok(report)
}

/// Symbol-level downlink simulation: transmit CSCG symbols at powers `p`
/// through the splitter, selection and channel, and estimate each user's
/// SINR from the sample powers of the signal, interference and noise parts.
/// Interference-and-noise-free users report `f64::INFINITY`.
pub fn simulate_downlink_symbols(
    s: &SelectionMatrix,
    precoders: &[Vec<Complex64>],
    scen: &DownlinkScenario,
    p: &PowerAllocation,
    n_symbols: usize,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let k = scen.n_users();
    let gains = link_gains(s, scen, precoders);
    let split = (1.0 / scen.m as f64).sqrt();
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let noise_sd = scen.sigma2.sqrt();
    let mut ps = vec![0.0; k];
    let mut pi = vec![0.0; k];
    let mut pn = vec![0.0; k];
    for _ in 0..n_symbols {
        let symbols: Vec<Complex64> = (0..k)
            .map(|i| {
                Complex64::new(normal.sample(rng), normal.sample(rng)) * p.p[i].sqrt()
            })
            .collect();
        for u in 0..k {
            let mut interf = Complex64::new(0.0, 0.0);
            for i in 0..k {
                let term = split * gains[u][i] * symbols[i];
                if i == u {
                    ps[u] += term.norm_sqr();
                } else {
                    interf += term;
                }
            }
            pi[u] += interf.norm_sqr();
            let z = Complex64::new(normal.sample(rng), normal.sample(rng)) * noise_sd;
            pn[u] += z.norm_sqr();
        }
    }
    (0..k)
        .map(|u| {
            let den = pi[u] + pn[u];
            if den == 0.0 {
                f64::INFINITY
            } else {
                ps[u] / den
            }
        })
        .collect()
}
