//! The four harness commands: pattern export, Monte-Carlo sum-rate sweep,
//! convergence trace, and the hardware-cost report.

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::path::Path;

use dcaa_core::channel::{
    effective_channel_dcaa, effective_channel_ula, generate_path_set, write_channel_dump,
};
use dcaa_core::cost::{cost_report, CostInputs, Money};
use dcaa_core::cylinder::{ring_count, write_roster_json, CylinderArray};
use dcaa_core::downlink::{optimize_downlink, DownlinkOptions};
use dcaa_core::pattern::{pattern_cut, write_pattern_csv, PatternSample};
use dcaa_core::ula::{downlink_ula, sector_of, uplink_ula_report, Sector, UlaDownlinkScenario, UlaScenario};
use dcaa_core::uplink::{greedy_select, LinkReport};
use dcaa_core::{
    design_cylinder, ChannelParams, DownlinkScenario, ElementPattern, PathSet, RngStream,
    UplinkScenario,
};

use crate::config::{ExperimentConfig, SubArraySelection};
use crate::output::{
    sha256_hex, write_convergence_csv, write_sweep_csv, ResultRow, RunManifest,
};

/// Shared context: resolved dimensions, array, pattern and channel model.
struct Setup {
    m: usize,
    k: usize,
    n_rf: usize,
    cyl: CylinderArray,
    pattern: ElementPattern,
    params: ChannelParams,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let (m, k, n_rf) = cfg.scenario.dimensions();
    let cyl = design_cylinder(m, cfg.f_c_hz)?;
    ensure!(
        n_rf <= cyl.n_ports(),
        "N_RF = {n_rf} exceeds the {} selectable ports",
        cyl.n_ports()
    );
    Ok(Setup {
        m,
        k,
        n_rf,
        cyl,
        pattern: cfg.element_pattern(),
        params: cfg.channel_params(),
    })
}

/// Channels one trial consumes, shared verbatim by both architectures.
struct TrialChannels {
    paths: Vec<PathSet>,
    dcaa: Vec<Vec<Complex64>>,
    ula: Vec<Vec<Complex64>>,
    sectors: Vec<Sector>,
    /// Digest of the consumed ray sets.
    hash: String,
}

fn draw_trial(setup: &Setup, cfg: &ExperimentConfig, seed: u64, trial: u32) -> Result<TrialChannels> {
    let paths: Vec<PathSet> = (0..setup.k as u32)
        .map(|u| generate_path_set(RngStream::for_trial_user(seed, trial, u), &setup.params))
        .collect::<dcaa_core::Result<_>>()?;

    // Fair-comparison contract: both front ends consume the very same ray
    // sets; digest each consumption and compare.
    let hash_for_dcaa = sha256_hex(&serde_json::to_vec(&paths)?);
    let dcaa: Vec<Vec<Complex64>> = if cfg.architecture.runs_dcaa() {
        paths
            .iter()
            .map(|p| effective_channel_dcaa(&setup.cyl, &setup.pattern, p))
            .collect()
    } else {
        Vec::new()
    };
    let hash_for_ula = sha256_hex(&serde_json::to_vec(&paths)?);
    let sectors: Vec<Sector> = paths.iter().map(|p| sector_of(p.user_los.0)).collect();
    let ula: Vec<Vec<Complex64>> = if cfg.architecture.runs_ula() {
        paths
            .iter()
            .zip(&sectors)
            .map(|(p, &s)| effective_channel_ula(&setup.pattern, setup.m, s, p))
            .collect()
    } else {
        Vec::new()
    };
    ensure!(
        hash_for_dcaa == hash_for_ula,
        "ray sets changed between architecture consumptions"
    );
    Ok(TrialChannels {
        paths,
        dcaa,
        ula,
        sectors,
        hash: hash_for_dcaa,
    })
}

fn downlink_report_dcaa(
    setup: &Setup,
    cfg: &ExperimentConfig,
    channels: Vec<Vec<Complex64>>,
    total_power: f64,
) -> Result<LinkReport> {
    let mut scen = DownlinkScenario::new(channels, total_power, setup.m)?;
    scen.t_max = cfg.algorithm.t_max;
    scen.eps_th = cfg.algorithm.eps_th;
    let opts = DownlinkOptions {
        update_selection: cfg.algorithm.update_selection,
        ..Default::default()
    };
    Ok(optimize_downlink(&scen, setup.n_rf, &opts)?)
}

fn downlink_report_ula(
    setup: &Setup,
    cfg: &ExperimentConfig,
    channels: Vec<Vec<Complex64>>,
    sectors: Vec<Sector>,
    total_power: f64,
) -> Result<LinkReport> {
    let scen = UlaDownlinkScenario {
        m: setup.m,
        sigma2: 1.0,
        channels,
        sectors,
        total_power,
        t_max: cfg.algorithm.t_max,
        eps_th: cfg.algorithm.eps_th,
    };
    Ok(downlink_ula(&scen)?)
}

/// Monte-Carlo sum-rate sweep over the SNR grid.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<RunManifest> {
    let setup = setup(cfg)?;
    if cfg.dump_channels {
        std::fs::create_dir_all(out_dir.join("channels"))?;
    }

    let trial_results: Vec<(u32, Result<(Vec<ResultRow>, String)>)> = (0..cfg.n_trials as u32)
        .into_par_iter()
        .map(|trial| (trial, run_trial(&setup, cfg, out_dir, seed, trial)))
        .collect();

    let mut rows = Vec::new();
    let mut trial_hashes = Vec::new();
    let mut failed = 0usize;
    for (trial, result) in trial_results {
        match result {
            Ok((mut trial_rows, hash)) => {
                rows.append(&mut trial_rows);
                trial_hashes.push(hash);
            }
            Err(e) => {
                // Partial-failure isolation: log and continue.
                eprintln!("trial {trial} failed and was skipped: {e:#}");
                failed += 1;
            }
        }
    }
    if failed == cfg.n_trials {
        bail!("every trial failed");
    }
    rows.sort_by(|a, b| {
        (a.trial, a.architecture, a.direction)
            .cmp(&(b.trial, b.architecture, b.direction))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    let csv_path = out_dir.join("sweep_results.csv");
    write_sweep_csv(&rows, &csv_path)?;

    Ok(RunManifest {
        command: "sweep".into(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_sha256: String::new(),
        wall_time_ms: 0,
        outputs: vec!["sweep_results.csv".into()],
        channel_sha256: Some(sha256_hex(trial_hashes.join(",").as_bytes())),
    })
}

fn run_trial(
    setup: &Setup,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
    trial: u32,
) -> Result<(Vec<ResultRow>, String)> {
    let channels = draw_trial(setup, cfg, seed, trial)?;
    if cfg.dump_channels {
        for (u, paths) in channels.paths.iter().enumerate() {
            let path = out_dir.join(format!("channels/trial{trial}_user{u}.json"));
            let mut file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_channel_dump(paths, &mut file)?;
        }
    }

    let k = setup.k;
    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_grid_db {
        let snr = 10f64.powf(snr_db / 10.0);
        if cfg.direction.runs_uplink() {
            if cfg.architecture.runs_dcaa() {
                let scen = UplinkScenario::new(channels.dcaa.clone(), vec![snr; k], setup.m)?;
                let report = greedy_select(&scen, setup.n_rf)?;
                rows.push(row(trial, "dcaa", "uplink", snr_db, &report));
            }
            if cfg.architecture.runs_ula() {
                let scen = UlaScenario::new(
                    setup.m,
                    channels.ula.clone(),
                    vec![snr; k],
                    channels.sectors.clone(),
                )?;
                let report = uplink_ula_report(&scen)?;
                rows.push(row(trial, "ula", "uplink", snr_db, &report));
            }
        }
        if cfg.direction.runs_downlink() {
            // The downlink grid point is the average transmit SNR
            // P_DL / (K sigma^2).
            let total_power = k as f64 * snr;
            if cfg.architecture.runs_dcaa() {
                let report =
                    downlink_report_dcaa(setup, cfg, channels.dcaa.clone(), total_power)?;
                rows.push(row(trial, "dcaa", "downlink", snr_db, &report));
            }
            if cfg.architecture.runs_ula() {
                let report = downlink_report_ula(
                    setup,
                    cfg,
                    channels.ula.clone(),
                    channels.sectors.clone(),
                    total_power,
                )?;
                rows.push(row(trial, "ula", "downlink", snr_db, &report));
            }
        }
    }
    Ok((rows, channels.hash))
}

fn row(
    trial: u32,
    architecture: &'static str,
    direction: &'static str,
    snr_db: f64,
    report: &LinkReport,
) -> ResultRow {
    ResultRow {
        trial,
        architecture,
        direction,
        snr_db,
        sum_rate_bps_hz: report.sum_rate,
        per_user_sinr: report.per_user_sinr.clone(),
        iterations: report.iterations,
        converged: report.converged,
    }
}

/// Downlink convergence traces for both architectures at one SNR point.
pub fn run_converge(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<RunManifest> {
    ensure!(
        cfg.direction.runs_downlink(),
        "the convergence trace is a downlink experiment; set direction to \"downlink\" or \"both\""
    );
    let setup = setup(cfg)?;
    let snr_db = cfg.snr_grid_db[0];
    let total_power = setup.k as f64 * 10f64.powf(snr_db / 10.0);
    let channels = draw_trial(&setup, cfg, seed, 0)?;

    let mut outputs = Vec::new();
    if cfg.architecture.runs_dcaa() {
        let report = downlink_report_dcaa(&setup, cfg, channels.dcaa.clone(), total_power)?;
        let path = out_dir.join("converge_dcaa.csv");
        write_convergence_csv(&report.trace, &report.power_change_trace, &path)?;
        outputs.push("converge_dcaa.csv".to_string());
    }
    if cfg.architecture.runs_ula() {
        let report = downlink_report_ula(
            &setup,
            cfg,
            channels.ula.clone(),
            channels.sectors.clone(),
            total_power,
        )?;
        let path = out_dir.join("converge_ula.csv");
        write_convergence_csv(&report.trace, &report.power_change_trace, &path)?;
        outputs.push("converge_ula.csv".to_string());
    }
    Ok(RunManifest {
        command: "converge".into(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_sha256: String::new(),
        wall_time_ms: 0,
        outputs,
        channel_sha256: Some(sha256_hex(channels.hash.as_bytes())),
    })
}

/// Per-sub-array pattern cuts, the all-port envelope, and the roster.
pub fn run_pattern(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<RunManifest> {
    let setup = setup(cfg)?;
    let grid = &cfg.pattern_grid;
    let n_grid = (2.0 * std::f64::consts::PI / grid.phi_step_rad).ceil() as usize;
    ensure!(n_grid > 0, "empty pattern grid");
    let phis: Vec<f64> = (0..n_grid)
        .map(|i| -std::f64::consts::PI + (i as f64 + 1.0) * grid.phi_step_rad)
        .take_while(|&p| p <= std::f64::consts::PI)
        .collect();

    let mut outputs = Vec::new();
    let roster_path = out_dir.join("array_roster.json");
    let mut file = std::fs::File::create(&roster_path)?;
    write_roster_json(&setup.cyl, &mut file)?;
    outputs.push("array_roster.json".to_string());

    let indices: Vec<usize> = match &grid.subarrays {
        SubArraySelection::All(_) => (0..setup.cyl.n_ports()).collect(),
        SubArraySelection::Indices(list) => {
            for &i in list {
                ensure!(i < setup.cyl.n_ports(), "sub-array index {i} out of range");
            }
            list.clone()
        }
    };
    for &i in &indices {
        let cut = pattern_cut(
            &setup.cyl.subarrays[i],
            &setup.pattern,
            phis.iter().copied(),
            grid.theta_rad,
        );
        let name = format!("pattern_sub_{i:03}.csv");
        let mut file = std::fs::File::create(out_dir.join(&name))?;
        write_pattern_csv(&cut, &mut file)?;
        outputs.push(name);
    }

    // Envelope: the strongest port response per grid point.
    let envelope: Vec<PatternSample> = phis
        .par_iter()
        .map(|&phi| {
            let r = setup.cyl.subarray_outputs(&setup.pattern, phi, grid.theta_rad);
            let best = r
                .into_iter()
                .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
                .unwrap();
            PatternSample {
                phi,
                theta: grid.theta_rad,
                value: best,
            }
        })
        .collect();
    let mut file = std::fs::File::create(out_dir.join("pattern_envelope.csv"))?;
    write_pattern_csv(&envelope, &mut file)?;
    outputs.push("pattern_envelope.csv".to_string());

    Ok(RunManifest {
        command: "pattern".into(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_sha256: String::new(),
        wall_time_ms: 0,
        outputs,
        channel_sha256: None,
    })
}

/// Hardware-cost report.
pub fn run_cost(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<RunManifest> {
    let prices = cfg
        .cost
        .context("the cost command needs a \"cost\" section with c_an, c_ps and c_sw")?;
    let (m, _, n_rf) = cfg.scenario.dimensions();
    let inputs = CostInputs {
        c_an: Money::from_dollars(prices.c_an),
        c_ps: Money::from_dollars(prices.c_ps),
        c_sw: Money::from_dollars(prices.c_sw),
        m,
        n: ring_count(m),
        n_rf,
    };
    let report = cost_report(&inputs)?;
    let path = out_dir.join("cost_report.json");
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes)?;
    Ok(RunManifest {
        command: "cost".into(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_sha256: String::new(),
        wall_time_ms: 0,
        outputs: vec!["cost_report.json".into()],
        channel_sha256: None,
    })
}
