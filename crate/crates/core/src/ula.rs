//! Cell-sectoring benchmark: three 120-degree sectors, each served by a
//! half-wavelength ULA with a DFT-codebook analog stage and digital MMSE
//! baseband processing. Inter-sector interference is neglected by
//! construction (the model zeroes it, it does not emerge).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::linalg::{normalize, vec_dot_h, vec_dot_t, CMatrix, Cholesky};
use crate::pattern::ElementPattern;
use crate::uplink::LinkReport;
use crate::downlink::{waterfill_from_gains, WaterfillMode};

/// One of the three 120-degree cell sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    One,
    Two,
    Three,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::One, Sector::Two, Sector::Three];

    /// 1, 2 or 3.
    pub fn number(self) -> usize {
        match self {
            Sector::One => 1,
            Sector::Two => 2,
            Sector::Three => 3,
        }
    }

    /// 0-based index for table lookups.
    pub fn index(self) -> usize {
        self.number() - 1
    }

    /// Boresight azimuth of the sector's ULA: `(p - 2) * 2pi/3`.
    pub fn boresight(self) -> f64 {
        (self.number() as f64 - 2.0) * 2.0 * PI / 3.0
    }
}

/// Sector containing azimuth `phi`: 1 on `(-pi, -pi/3]`, 2 on
/// `(-pi/3, pi/3]`, 3 on `(pi/3, pi]`. The input is wrapped first.
pub fn sector_of(phi: f64) -> Sector {
    let phi = wrap_angle(phi);
    if phi <= -PI / 3.0 {
        Sector::One
    } else if phi <= PI / 3.0 {
        Sector::Two
    } else {
        Sector::Three
    }
}

/// Elevation argument of the benchmark element gain: the sector-ULA
/// steering evaluates the pattern at a fixed quarter-turn elevation
/// offset, `sqrt(G(xi, pi/2))`.
pub const ULA_ELEVATION_ARG: f64 = PI / 2.0;

/// Steering vector of the sector ULA toward azimuth `phi`:
/// `sqrt(G(xi, pi/2)) * [1, e^{-j pi sin xi}, ..., e^{-j pi (M-1) sin xi}]`
/// with `xi = phi - boresight`.
pub fn ula_steering(
    pattern: &ElementPattern,
    m: usize,
    sector: Sector,
    phi: f64,
) -> Vec<Complex64> {
    let xi = wrap_angle(phi - sector.boresight());
    let amp = pattern.amplitude(xi, ULA_ELEVATION_ARG);
    let step = Complex64::from_polar(1.0, -PI * xi.sin());
    let mut v = Vec::with_capacity(m);
    let mut cur = Complex64::new(amp, 0.0);
    for _ in 0..m {
        v.push(cur);
        cur *= step;
    }
    v
}

/// Analog stage of one sector: a subset of DFT rows, each scaled by
/// `1/sqrt(M)` so the rows are orthonormal.
#[derive(Debug, Clone)]
pub struct DftCodebook {
    pub m: usize,
    /// Selected DFT row indices, all distinct, in selection order.
    pub selected_beams: Vec<usize>,
    /// The explicit `n_beams x M` analog matrix.
    pub f: CMatrix,
}

impl DftCodebook {
    pub fn new(m: usize, selected_beams: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; m];
        for &b in &selected_beams {
            if b >= m {
                return Err(Error::invalid(format!("beam index {b} out of range")));
            }
            if seen[b] {
                return Err(Error::invalid(format!("beam {b} selected twice")));
            }
            seen[b] = true;
        }
        let mut f = CMatrix::zeros(selected_beams.len(), m);
        let scale = 1.0 / (m as f64).sqrt();
        for (i, &l) in selected_beams.iter().enumerate() {
            for col in 0..m {
                let phase = -2.0 * PI * (l * col) as f64 / m as f64;
                f[(i, col)] = Complex64::from_polar(scale, phase);
            }
        }
        Ok(Self {
            m,
            selected_beams,
            f,
        })
    }

    pub fn n_beams(&self) -> usize {
        self.selected_beams.len()
    }

    /// `F v` (the beamspace projection of an element-space vector).
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.f.matvec(v)
    }
}

/// One multi-user instance for the sectored benchmark. Channels are in
/// element space of each user's own sector ULA.
#[derive(Debug, Clone)]
pub struct UlaScenario {
    pub m: usize,
    pub sigma2: f64,
    /// K effective channels, each of length M.
    pub channels: Vec<Vec<Complex64>>,
    /// Per-user transmit power (uplink) or allocated power (downlink).
    pub powers: Vec<f64>,
    pub sectors: Vec<Sector>,
}

impl UlaScenario {
    pub fn new(
        m: usize,
        channels: Vec<Vec<Complex64>>,
        powers: Vec<f64>,
        sectors: Vec<Sector>,
    ) -> Result<Self> {
        if channels.is_empty()
            || channels.len() != powers.len()
            || channels.len() != sectors.len()
        {
            return Err(Error::invalid("channels, powers and sectors must align"));
        }
        if channels.iter().any(|h| h.len() != m) {
            return Err(Error::invalid("each channel must have M entries"));
        }
        Ok(Self {
            m,
            sigma2: 1.0,
            channels,
            powers,
            sectors,
        })
    }

    pub fn n_users(&self) -> usize {
        self.channels.len()
    }

    /// Users resident in `sector`.
    pub fn users_in(&self, sector: Sector) -> Vec<usize> {
        (0..self.n_users())
            .filter(|&k| self.sectors[k] == sector)
            .collect()
    }
}

/// Beamspace interference-plus-noise covariance for one sector's user set:
/// `F (sum_{i != exclude} P_i h_i h_i^H + sigma^2 I) F^H`.
fn beamspace_covariance(
    codebook: &DftCodebook,
    scen: &UlaScenario,
    users: &[usize],
    exclude: Option<usize>,
) -> CMatrix {
    let d = codebook.n_beams();
    let mut c = CMatrix::zeros(d, d);
    // F F^H = I for distinct DFT rows, so the noise term is diagonal.
    for i in 0..d {
        c[(i, i)] = Complex64::new(scen.sigma2, 0.0);
    }
    for &u in users {
        if Some(u) == exclude {
            continue;
        }
        c.add_outer(scen.powers[u], &codebook.apply(&scen.channels[u]));
    }
    c
}

/// Digital MMSE combiner of user `k` (uplink): `P_k C_k^{-1} F h_k`.
/// Deliberately unnormalized; the SINR ratio is scale invariant.
pub fn mmse_ula_uplink(
    codebook: &DftCodebook,
    scen: &UlaScenario,
    k: usize,
) -> Result<Vec<Complex64>> {
    let users = scen.users_in(scen.sectors[k]);
    let c = beamspace_covariance(codebook, scen, &users, Some(k));
    let v = codebook.apply(&scen.channels[k]);
    let mut w = Cholesky::new(&c)?.solve(&v);
    for z in w.iter_mut() {
        *z *= scen.powers[k];
    }
    Ok(w)
}

/// Uplink SINR of user `k` behind the sector codebook:
/// `P_k |w^H F h_k|^2 / (sum same-sector P_i |w^H F h_i|^2 + sigma^2 ||F^H w||^2)`.
pub fn sinr_ula_uplink(
    codebook: &DftCodebook,
    w: &[Complex64],
    scen: &UlaScenario,
    k: usize,
) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for &u in &scen.users_in(scen.sectors[k]) {
        let gain = scen.powers[u] * vec_dot_h(w, &codebook.apply(&scen.channels[u])).norm_sqr();
        if u == k {
            signal = gain;
        } else {
            interference += gain;
        }
    }
    let fhw = codebook.f.hermitian_matvec(w);
    let noise = scen.sigma2 * fhw.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if signal == 0.0 {
        return 0.0;
    }
    signal / (interference + noise)
}

/// Sector sum rate at the MMSE combiners, via the shared-covariance
/// downdate (`-log2(1 - P_k q_k)` form).
fn sector_rate(codebook: &DftCodebook, scen: &UlaScenario, users: &[usize]) -> Result<f64> {
    if users.is_empty() {
        return Ok(0.0);
    }
    let b = beamspace_covariance(codebook, scen, users, None);
    let chol = Cholesky::new(&b)?;
    let mut rate = 0.0;
    for &u in users {
        let v = codebook.apply(&scen.channels[u]);
        let q = scen.powers[u] * chol.quadratic_form(&v);
        rate -= (1.0 - q).max(f64::MIN_POSITIVE).log2();
    }
    Ok(rate)
}

/// Greedy DFT beam selection for one sector: repeatedly add the beam index
/// that maximizes the sector MMSE sum rate. Returns the codebook and the
/// per-step rate trace.
pub fn select_dft_beams(
    scen: &UlaScenario,
    sector: Sector,
    n_beams: usize,
) -> Result<(DftCodebook, Vec<f64>)> {
    if n_beams > scen.m {
        return Err(Error::infeasible(format!(
            "cannot select {n_beams} beams from an M={} codebook",
            scen.m
        )));
    }
    let users = scen.users_in(sector);
    let mut beams: Vec<usize> = Vec::with_capacity(n_beams);
    let mut trace = Vec::with_capacity(n_beams);
    for _ in 0..n_beams {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for cand in 0..scen.m {
            if beams.contains(&cand) {
                continue;
            }
            let mut trial = beams.clone();
            trial.push(cand);
            let rate = sector_rate(&DftCodebook::new(scen.m, trial)?, scen, &users)?;
            if rate > best.1 {
                best = (cand, rate);
            }
        }
        beams.push(best.0);
        trace.push(best.1);
    }
    Ok((DftCodebook::new(scen.m, beams)?, trace))
}

/// Per-sector RF-chain budget: each sector receives the chains of its
/// resident users.
pub fn default_chain_split(scen: &UlaScenario) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for s in &scen.sectors {
        counts[s.index()] += 1;
    }
    counts
}

/// Build the per-sector codebooks with the default chain split; empty
/// sectors get no codebook.
pub fn build_sector_codebooks(scen: &UlaScenario) -> Result<[Option<DftCodebook>; 3]> {
    let split = default_chain_split(scen);
    let mut out: [Option<DftCodebook>; 3] = [None, None, None];
    for sector in Sector::ALL {
        let n = split[sector.index()].min(scen.m);
        if n > 0 {
            out[sector.index()] = Some(select_dft_beams(scen, sector, n)?.0);
        }
    }
    Ok(out)
}

/// Uplink sum rate of the benchmark: per-user MMSE SINR with interference
/// restricted to same-sector users, summed over all users.
pub fn sum_rate_ula_uplink(
    scen: &UlaScenario,
    codebooks: &[Option<DftCodebook>; 3],
) -> Result<f64> {
    let mut rate = 0.0;
    for k in 0..scen.n_users() {
        let cb = codebooks[scen.sectors[k].index()]
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("user {k} has no sector codebook")))?;
        let w = mmse_ula_uplink(cb, scen, k)?;
        rate += (1.0 + sinr_ula_uplink(cb, &w, scen, k)).log2();
    }
    Ok(rate)
}

/// Full uplink benchmark report (codebooks built internally).
pub fn uplink_ula_report(scen: &UlaScenario) -> Result<LinkReport> {
    let codebooks = build_sector_codebooks(scen)?;
    let mut sinrs = Vec::with_capacity(scen.n_users());
    let mut combiners = Vec::with_capacity(scen.n_users());
    for k in 0..scen.n_users() {
        let cb = codebooks[scen.sectors[k].index()]
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("user {k} has no sector codebook")))?;
        let w = mmse_ula_uplink(cb, scen, k)?;
        sinrs.push(sinr_ula_uplink(cb, &w, scen, k));
        combiners.push(w);
    }
    let mut report = LinkReport::from_sinrs(sinrs);
    report.combiners = combiners;
    report.sector_beams = Some(
        codebooks
            .iter()
            .map(|cb| cb.as_ref().map_or(Vec::new(), |c| c.selected_beams.clone()))
            .collect(),
    );
    report.selection_updates = Some(1);
    Ok(report)
}

/// Downlink benchmark instance.
#[derive(Debug, Clone)]
pub struct UlaDownlinkScenario {
    pub m: usize,
    pub sigma2: f64,
    pub channels: Vec<Vec<Complex64>>,
    pub sectors: Vec<Sector>,
    /// Total transmit power shared across all sectors.
    pub total_power: f64,
    pub t_max: usize,
    pub eps_th: f64,
}

/// Downlink precoder of user `k` from uplink-downlink duality:
/// `C^{-1} F conj(h_k)` at unit norm, `C = F (sum same-sector p_i conj(h_i)
/// h_i^T + sigma^2 I) F^H`.
fn ula_precoder(
    codebook: &DftCodebook,
    scen: &UlaDownlinkScenario,
    p: &[f64],
    users: &[usize],
    k: usize,
) -> Result<Vec<Complex64>> {
    let d = codebook.n_beams();
    let mut c = CMatrix::zeros(d, d);
    for i in 0..d {
        c[(i, i)] = Complex64::new(scen.sigma2, 0.0);
    }
    for &u in users {
        if u == k {
            continue;
        }
        let dual: Vec<Complex64> = scen.channels[u].iter().map(Complex64::conj).collect();
        c.add_outer(p[u], &codebook.apply(&dual));
    }
    let dual_k: Vec<Complex64> = scen.channels[k].iter().map(Complex64::conj).collect();
    let mut w = Cholesky::new(&c)?.solve(&codebook.apply(&dual_k));
    normalize(&mut w);
    Ok(w)
}

/// `h_k^T F^H w`, the downlink link amplitude through the analog stage
/// (the `1/sqrt(M)` splitter is carried inside the DFT row scaling).
fn ula_link_gain(codebook: &DftCodebook, h: &[Complex64], w: &[Complex64]) -> Complex64 {
    vec_dot_t(h, &codebook.f.hermitian_matvec(w))
}

/// Downlink of the benchmark: duality MMSE precoding per sector, global
/// waterfilling over all users, iterated exactly like the cylinder
/// downlink but with the DFT analog stage in place of the selection.
pub fn downlink_ula(scen: &UlaDownlinkScenario) -> Result<LinkReport> {
    let k_total = scen.channels.len();
    if k_total == 0 {
        return Err(Error::invalid("need at least one user"));
    }
    // Beam selection once, on the dual uplink channels at uniform power.
    let uniform = vec![scen.total_power / k_total as f64; k_total];
    let dual_scen = UlaScenario {
        m: scen.m,
        sigma2: scen.sigma2,
        channels: scen
            .channels
            .iter()
            .map(|h| h.iter().map(Complex64::conj).collect())
            .collect(),
        powers: uniform.clone(),
        sectors: scen.sectors.clone(),
    };
    let codebooks = build_sector_codebooks(&dual_scen)?;
    let sector_users: Vec<Vec<usize>> = Sector::ALL
        .iter()
        .map(|&s| dual_scen.users_in(s))
        .collect();

    let eval = |p: &[f64]| -> Result<(Vec<Vec<Complex64>>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut precoders = vec![Vec::new(); k_total];
        for sector in Sector::ALL {
            let users = &sector_users[sector.index()];
            if users.is_empty() {
                continue;
            }
            let cb = codebooks[sector.index()].as_ref().unwrap();
            for &u in users {
                precoders[u] = ula_precoder(cb, scen, p, users, u)?;
            }
        }
        let mut gains = vec![0.0; k_total];
        let mut z = vec![0.0; k_total];
        let mut sinrs = vec![0.0; k_total];
        for sector in Sector::ALL {
            let users = &sector_users[sector.index()];
            if users.is_empty() {
                continue;
            }
            let cb = codebooks[sector.index()].as_ref().unwrap();
            for &u in users {
                let mut interference = 0.0;
                for &j in users {
                    let t = ula_link_gain(cb, &scen.channels[u], &precoders[j]).norm_sqr();
                    if j == u {
                        gains[u] = t;
                    } else {
                        interference += p[j] * t;
                    }
                }
                z[u] = interference + scen.sigma2;
                sinrs[u] = p[u] * gains[u] / z[u];
            }
        }
        Ok((precoders, gains, z, sinrs))
    };

    let mut p_prev = uniform;
    let (precoders0, _, _, sinrs0) = eval(&p_prev)?;
    let rate0: f64 = sinrs0.iter().map(|&s| (1.0 + s).log2()).sum();
    let mut trace = vec![rate0];
    let mut power_change_trace = Vec::new();
    let mut best = (rate0, sinrs0, precoders0, p_prev.clone());
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=scen.t_max {
        iterations = t;
        let (precoders, gains, z, _) = eval(&p_prev)?;
        let p_next = waterfill_from_gains(&gains, &z, scen.total_power, WaterfillMode::RescaleSum)?;
        let change: f64 = p_next
            .iter()
            .zip(&p_prev)
            .map(|(a, b)| (a - b).abs())
            .sum();
        // SINRs at the new powers with the current precoders.
        let sinrs: Vec<f64> = (0..k_total)
            .map(|u| {
                let users = &sector_users[scen.sectors[u].index()];
                let cb = codebooks[scen.sectors[u].index()].as_ref().unwrap();
                let mut interference = 0.0;
                let mut own = 0.0;
                for &j in users {
                    let tt = ula_link_gain(cb, &scen.channels[u], &precoders[j]).norm_sqr();
                    if j == u {
                        own = p_next[u] * tt;
                    } else {
                        interference += p_next[j] * tt;
                    }
                }
                own / (interference + scen.sigma2)
            })
            .collect();
        let rate: f64 = sinrs.iter().map(|&s| (1.0 + s).log2()).sum();
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
    report.combiners = precoders;
    report.sector_beams = Some(
        codebooks
            .iter()
            .map(|cb| cb.as_ref().map_or(Vec::new(), |c| c.selected_beams.clone()))
            .collect(),
    );
    report.trace = trace;
    report.power_change_trace = power_change_trace;
    report.power_allocation = Some(p);
    report.iterations = iterations;
    report.converged = converged;
    report.selection_updates = Some(1);
    Ok(report)
}
