use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use squint_core::ambiguity::{common_peaks, max_unambiguous_distance};
use squint_core::baseline::{baseline_sweep, prominence};
use squint_core::beamformer::{squint_map, SquintDesign};
use squint_core::config::Config;
use squint_core::harness::{run as run_experiment, sweep, RmseReport};
use squint_core::io::{
    fmt_f64, read_spectrum, spectrum_file_name, write_records, write_spectrum, write_table,
};
use squint_core::pipeline::{add_acquisition_noise, locate, synthesize, Spectra, TargetEstimate};
use squint_core::Acquisition;

use crate::manifest::Manifest;
use crate::{Command, Common};

fn name(command: &Command) -> &'static str {
    match command {
        Command::Simulate => "simulate",
        Command::Locate { .. } => "locate",
        Command::DesignExport => "design-export",
        Command::BaselineSweep => "baseline-sweep",
        Command::RmseSweep => "rmse-sweep",
        Command::Resolve { .. } => "resolve",
    }
}

/// Runs one subcommand and always leaves a manifest in the output directory.
pub fn run(common: &Common, command: &Command) -> anyhow::Result<()> {
    let mut manifest = Manifest::new(name(command));
    manifest.config_path = common.config.clone();
    let result = load(common).and_then(|cfg| {
        manifest.seed = Some(cfg.noise.seed);
        manifest.config = Some(cfg.to_toml());
        std::fs::create_dir_all(&common.out)
            .with_context(|| format!("creating output directory {}", common.out.display()))?;
        dispatch(&cfg, common, command, &mut manifest.outputs)
    });
    match &result {
        Ok(()) => manifest.status = "ok".into(),
        Err(e) => {
            manifest.status = "error".into();
            manifest.error = Some(format!("{e:#}"));
        }
    }
    let written = manifest.write(&common.out);
    result?;
    written.with_context(|| format!("writing manifest in {}", common.out.display()))?;
    Ok(())
}

fn load(common: &Common) -> anyhow::Result<Config> {
    let Some(path) = &common.config else {
        bail!("--config is required");
    };
    let mut cfg = Config::from_path(path)?;
    if let Some(seed) = common.seed {
        cfg.noise.seed = seed;
    }
    if let Some(snr) = common.snr_db {
        cfg.noise.snr_db = Some(snr);
    }
    if common.no_noise {
        cfg.noise.snr_db = None;
    }
    if let Some(kind) = common.estimator {
        cfg.estimator.kind = kind;
    }
    if let Some(m) = common.msidelobe {
        cfg.estimator.msidelobe = m;
    }
    if let Some(step) = common.grid_step {
        cfg.estimator.grid_step_m = Some(step);
    }
    Ok(cfg)
}

fn dispatch(
    cfg: &Config,
    common: &Common,
    command: &Command,
    outputs: &mut Vec<PathBuf>,
) -> anyhow::Result<()> {
    let out = common.out.as_path();
    match command {
        Command::Simulate => simulate(cfg, out, outputs),
        Command::Locate { spectra, curves } => {
            locate_cmd(cfg, out, spectra.as_deref(), *curves, outputs)
        }
        Command::DesignExport => design_export(cfg, out, outputs),
        Command::BaselineSweep => baseline(cfg, out, outputs),
        Command::RmseSweep => rmse(cfg, out, outputs),
        Command::Resolve {
            spectra,
            full_curve,
        } => resolve_cmd(cfg, out, spectra.as_deref(), *full_curve, outputs),
    }
}

/// Noiseless synthesis plus the configured noise, trial 0.
fn acquire(cfg: &Config, designs: &[Vec<SquintDesign>]) -> anyhow::Result<Spectra> {
    let targets = cfg.targets()?;
    let clean = synthesize(designs, &targets);
    let noise = cfg.noise()?;
    let n = designs[0][0].n_antennas();
    Ok(add_acquisition_noise(
        &clean,
        n,
        &targets,
        &noise,
        cfg.noise.reference,
        0,
    ))
}

fn read_all(acq: &Acquisition, dir: &Path) -> anyhow::Result<Spectra> {
    acq.groups
        .iter()
        .enumerate()
        .map(|(q, plan)| {
            (0..acq.sweeps.len())
                .map(|p| {
                    let path = dir.join(spectrum_file_name(q, p));
                    read_spectrum(&path, *plan)
                        .with_context(|| format!("reading {}", path.display()))
                })
                .collect()
        })
        .collect()
}

fn spectra_for(
    cfg: &Config,
    acq: &Acquisition,
    designs: &[Vec<SquintDesign>],
    dir: Option<&Path>,
) -> anyhow::Result<Spectra> {
    match dir {
        Some(d) => read_all(acq, d),
        None => acquire(cfg, designs),
    }
}

fn simulate(cfg: &Config, out: &Path, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let acq = cfg.acquisition()?;
    let designs = acq.designs();
    let spectra = acquire(cfg, &designs)?;
    for (q, row) in spectra.iter().enumerate() {
        for (p, s) in row.iter().enumerate() {
            let path = out.join(spectrum_file_name(q, p));
            write_spectrum(&path, s)?;
            outputs.push(path);
        }
    }
    println!("wrote {} spectra to {}", outputs.len(), out.display());
    Ok(())
}

const TARGET_HEADER: [&str; 9] = [
    "target",
    "angle_deg",
    "range_m",
    "peak_m",
    "score",
    "max_score",
    "principal_m",
    "clipped",
    "note",
];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn target_rows(est: &[TargetEstimate]) -> Vec<Vec<String>> {
    est.iter()
        .enumerate()
        .map(|(k, e)| {
            let g = &e.groups[0];
            vec![
                k.to_string(),
                fmt_f64(e.angle.to_degrees()),
                opt(e.range),
                g.peak_index.to_string(),
                fmt_f64(g.score),
                fmt_f64(g.max_score),
                opt(g.principal),
                g.clipped.to_string(),
                e.note.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

fn print_targets(est: &[TargetEstimate]) {
    println!(
        "{:>6} {:>10} {:>12} {:>7} {:>8}",
        "target", "angle_deg", "range_m", "peak_m", "score"
    );
    for (k, e) in est.iter().enumerate() {
        let g = &e.groups[0];
        let range = e
            .range
            .map_or_else(|| "-".to_string(), |r| format!("{r:.4}"));
        println!(
            "{k:>6} {:>10.4} {range:>12} {:>7} {:>8.3}{}",
            e.angle.to_degrees(),
            g.peak_index,
            g.score,
            e.note
                .as_deref()
                .map(|n| format!("  ({n})"))
                .unwrap_or_default()
        );
    }
}

fn estimate(
    cfg: &Config,
    spectra_dir: Option<&Path>,
    keep_curve: bool,
) -> anyhow::Result<(Acquisition, Vec<TargetEstimate>)> {
    let acq = cfg.acquisition()?;
    let designs = acq.designs();
    let spectra = spectra_for(cfg, &acq, &designs, spectra_dir)?;
    let mut settings = cfg.locator();
    settings.search.keep_curve = keep_curve;
    let est = locate(&acq, &designs, &spectra, &settings)?;
    Ok((acq, est))
}

fn locate_cmd(
    cfg: &Config,
    out: &Path,
    spectra: Option<&Path>,
    curves: bool,
    outputs: &mut Vec<PathBuf>,
) -> anyhow::Result<()> {
    let (_, est) = estimate(cfg, spectra, curves)?;
    let path = out.join("targets.csv");
    write_records(&path, &TARGET_HEADER, target_rows(&est))?;
    outputs.push(path);
    if curves {
        for (k, e) in est.iter().enumerate() {
            for (q, g) in e.groups.iter().enumerate() {
                if let Some(c) = &g.curve {
                    let path = out.join(format!("curve_t{k}_g{q}.csv"));
                    write_table(
                        &path,
                        &["range_m", "score"],
                        c.iter().map(|&(r, s)| vec![r, s]),
                    )?;
                    outputs.push(path);
                }
            }
        }
    }
    print_targets(&est);
    Ok(())
}

fn design_export(cfg: &Config, out: &Path, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let acq = cfg.acquisition()?;
    for (q, row) in acq.designs().iter().enumerate() {
        for (p, d) in row.iter().enumerate() {
            let path = out.join(format!("design_g{q}_s{p}.csv"));
            let rows = d
                .array
                .indices()
                .zip(d.ps_phases.iter().zip(&d.ttd_delays))
                .map(|(n, (phi, t))| vec![n, phi * 360.0, t * 1e12]);
            write_table(&path, &["n", "phase_deg", "delay_ps"], rows)?;
            outputs.push(path);

            let map = squint_map(d)?;
            let path = out.join(format!("squint_map_g{q}_s{p}.csv"));
            let rows = map
                .angles
                .iter()
                .enumerate()
                .map(|(m, a)| vec![m as f64, d.plan.frequency(m), a.to_degrees()]);
            write_table(&path, &["m", "frequency_hz", "angle_deg"], rows)?;
            outputs.push(path);
        }
    }
    println!("wrote {} files to {}", outputs.len(), out.display());
    Ok(())
}

fn baseline(cfg: &Config, out: &Path, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let plan = cfg.groups()?[0];
    let array = cfg.array()?;
    let angles = cfg.baseline_angles()?;
    let curve = baseline_sweep(&cfg.targets()?, &plan, &array, &angles);
    let path = out.join("baseline.csv");
    write_table(
        &path,
        &["angle_deg", "power"],
        angles
            .iter()
            .zip(&curve)
            .map(|(a, g)| vec![a.to_degrees(), *g]),
    )?;
    outputs.push(path);
    let imax = (0..curve.len()).max_by(|&a, &b| curve[a].total_cmp(&curve[b]));
    if let Some(i) = imax {
        println!(
            "peak at {:.2} deg, prominence {:.3}",
            angles[i].to_degrees(),
            prominence(&curve)
        );
    }
    Ok(())
}

const RMSE_HEADER: [&str; 11] = [
    "axis",
    "axis_value",
    "snr_db",
    "trials",
    "misses",
    "false_alarms",
    "avg_rmse_angle_deg",
    "max_rmse_angle_deg",
    "avg_rmse_range_m",
    "max_rmse_range_m",
    "miss_rate",
];

fn rmse(cfg: &Config, out: &Path, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let (spec, axis) = cfg.experiment()?;
    let reports: Vec<RmseReport> = match &axis {
        Some((a, values)) => sweep(&spec, *a, values)?,
        None => run_experiment(&spec)?,
    };
    let label = |r: &RmseReport| match r.axis {
        Some((a, v)) => (format!("{a:?}").to_lowercase(), fmt_f64(v)),
        None => (String::new(), String::new()),
    };
    let rows = reports.iter().map(|r| {
        let (a, v) = label(r);
        vec![
            a,
            v,
            fmt_f64(r.snr_db),
            r.trials.to_string(),
            r.misses.to_string(),
            r.false_alarms.to_string(),
            fmt_f64(r.avg_angle_deg),
            fmt_f64(r.max_angle_deg),
            fmt_f64(r.avg_range_m),
            fmt_f64(r.max_range_m),
            fmt_f64(r.miss_rate()),
        ]
    });
    let path = out.join("rmse.csv");
    write_records(&path, &RMSE_HEADER, rows)?;
    outputs.push(path);

    let per_target = reports.iter().flat_map(|r| {
        let (a, v) = label(r);
        r.per_target.iter().enumerate().map(move |(k, t)| {
            vec![
                a.clone(),
                v.clone(),
                fmt_f64(r.snr_db),
                k.to_string(),
                fmt_f64(t.range),
                fmt_f64(t.angle_deg),
                fmt_f64(t.rmse_angle_deg),
                fmt_f64(t.rmse_range_m),
            ]
        })
    });
    let path = out.join("rmse_targets.csv");
    let header = [
        "axis",
        "axis_value",
        "snr_db",
        "target",
        "range_m",
        "angle_deg",
        "rmse_angle_deg",
        "rmse_range_m",
    ];
    write_records(&path, &header, per_target)?;
    outputs.push(path);

    println!(
        "{:>12} {:>8} {:>7} {:>12} {:>12}",
        "axis_value", "snr_db", "misses", "rmse_deg", "rmse_m"
    );
    for r in &reports {
        let v = r
            .axis
            .map_or_else(|| "-".to_string(), |(_, v)| format!("{v}"));
        println!(
            "{v:>12} {:>8} {:>7} {:>12.5} {:>12.5}",
            r.snr_db, r.misses, r.avg_angle_deg, r.avg_range_m
        );
    }
    Ok(())
}

/// The coarse score repeated over `[0, r_max]`.
fn tile(curve: &[(f64, f64)], period: f64, r_max: f64) -> Vec<(f64, f64)> {
    (0..)
        .map(|l| l as f64 * period)
        .take_while(|offset| *offset <= r_max)
        .flat_map(|offset| curve.iter().map(move |&(r, s)| (r + offset, s)))
        .take_while(|&(r, _)| r <= r_max)
        .collect()
}

fn resolve_cmd(
    cfg: &Config,
    out: &Path,
    spectra: Option<&Path>,
    full_curve: bool,
    outputs: &mut Vec<PathBuf>,
) -> anyhow::Result<()> {
    let (acq, est) = estimate(cfg, spectra, full_curve)?;
    let header = [
        "target",
        "angle_deg",
        "range_m",
        "group",
        "unambiguous_m",
        "principal_m",
        "branch",
        "candidate_m",
        "residual_m",
    ];
    let mut rows = Vec::new();
    for (k, e) in est.iter().enumerate() {
        match &e.resolution {
            Some(sol) => {
                for (q, g) in sol.groups.iter().enumerate() {
                    rows.push(vec![
                        k.to_string(),
                        fmt_f64(e.angle.to_degrees()),
                        fmt_f64(sol.range),
                        q.to_string(),
                        fmt_f64(g.unambiguous),
                        fmt_f64(g.principal),
                        g.branch.to_string(),
                        fmt_f64(g.candidate),
                        fmt_f64(g.residual),
                    ]);
                }
            }
            None => {
                for (q, g) in e.groups.iter().enumerate() {
                    rows.push(vec![
                        k.to_string(),
                        fmt_f64(e.angle.to_degrees()),
                        opt(e.range),
                        q.to_string(),
                        fmt_f64(g.period),
                        opt(g.principal),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
            }
        }
    }
    let path = out.join("resolution.csv");
    write_records(&path, &header, rows)?;
    outputs.push(path);

    let longest = acq
        .groups
        .iter()
        .map(max_unambiguous_distance)
        .fold(0.0, f64::max);
    let r_max = acq.resolution.map_or(longest, |r| r.r_sense_max);
    let tol = acq.resolution.map_or(0.5, |r| r.tolerance);
    for (k, e) in est.iter().enumerate() {
        let range = e
            .range
            .map_or_else(|| "unresolved".to_string(), |r| format!("{r:.4} m"));
        print!("target {k}: {:.4} deg, {range}", e.angle.to_degrees());
        if full_curve && e.groups.iter().all(|g| g.curve.is_some()) {
            let tiled: Vec<Vec<(f64, f64)>> = e
                .groups
                .iter()
                .map(|g| tile(g.curve.as_deref().unwrap_or_default(), g.period, r_max))
                .collect();
            for (q, c) in tiled.iter().enumerate() {
                let path = out.join(format!("full_curve_t{k}_g{q}.csv"));
                write_table(
                    &path,
                    &["range_m", "score"],
                    c.iter().map(|&(r, s)| vec![r, s]),
                )?;
                outputs.push(path);
            }
            let common = common_peaks(&tiled, 0.5, tol);
            print!(", common peaks {common:.3?}");
        }
        println!(
            "{}",
            e.note
                .as_deref()
                .map(|n| format!("  ({n})"))
                .unwrap_or_default()
        );
    }
    Ok(())
}
