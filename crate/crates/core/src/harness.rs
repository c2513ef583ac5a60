//! Monte-Carlo RMSE experiments.
//!
//! Each trial draws (or reuses) a scene, synthesizes the noiseless spectra
//! once and then adds noise for every SNR point from the same seeded stream,
//! so SNR points see common random numbers. Estimates are paired with the
//! true targets by nearest angle; trials that do not find every target are
//! counted as misses and left out of the RMSE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::echo::{NoiseModel, SnrReference};
use crate::error::{invalid, Result};
use crate::pipeline::{
    add_acquisition_noise, locate, match_by_angle, synthesize, Acquisition, LocatorSettings,
};
use crate::scene::{ArrayConfig, MyoloPlan, Target};

const SCENE_SEED_SALT: u64 = 0x5eed_5ce7_e000_0001;

/// Ground-truth generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneSpec {
    /// The same `(range m, angle rad)` targets in every trial.
    Fixed(Vec<(f64, f64)>),
    /// `count` targets uniform over a range/angle box, redrawn per trial.
    Random {
        count: usize,
        range: (f64, f64),
        angle: (f64, f64),
        /// Minimum angular separation in radians; `None` uses two squint bins.
        min_separation: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub acquisition: Acquisition,
    pub settings: LocatorSettings,
    pub scene: SceneSpec,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub sigma2: f64,
    pub snr_reference: SnrReference,
    /// Largest angle error for an estimate to count as a target, radians.
    pub match_gate: f64,
    /// Give the detector the true target count of each trial.
    pub known_count: bool,
}

impl ExperimentSpec {
    pub fn new(
        acquisition: Acquisition,
        settings: LocatorSettings,
        scene: SceneSpec,
        snr_db: Vec<f64>,
    ) -> Self {
        Self {
            acquisition,
            settings,
            scene,
            snr_db,
            trials: 100,
            seed: 1,
            sigma2: 1.0,
            snr_reference: SnrReference::default(),
            match_gate: 1f64.to_radians(),
            known_count: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trial count must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(invalid("SNR list is empty"));
        }
        if !(self.sigma2 > 0.0) {
            return Err(invalid("noise variance must be positive"));
        }
        if let SceneSpec::Random {
            count,
            range,
            angle,
            ..
        } = &self.scene
        {
            if *count == 0 || !(range.0 < range.1) || !(angle.0 < angle.1) {
                return Err(invalid(
                    "random scene needs a positive count and non-empty range/angle box",
                ));
            }
        }
        Ok(())
    }

    fn default_separation(&self) -> f64 {
        let s = &self.acquisition.sweeps[0];
        2.0 * (s.upper() - s.lower()) / self.acquisition.groups[0].m() as f64
    }

    /// Targets for one trial, in decreasing angle.
    pub fn targets(&self, trial: u64) -> Result<Vec<Target>> {
        let array = &self.acquisition.array;
        let mut pts = match &self.scene {
            SceneSpec::Fixed(v) => v.clone(),
            SceneSpec::Random {
                count,
                range,
                angle,
                min_separation,
            } => {
                let sep = min_separation.unwrap_or_else(|| self.default_separation());
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ SCENE_SEED_SALT);
                rng.set_stream(trial);
                let mut pts: Vec<(f64, f64)> = Vec::with_capacity(*count);
                let mut attempts = 0;
                while pts.len() < *count {
                    attempts += 1;
                    if attempts > 100_000 {
                        return Err(invalid(format!(
                            "cannot place {count} targets {sep} rad apart"
                        )));
                    }
                    let th = rng.random_range(angle.0..angle.1);
                    if pts.iter().all(|p| (p.1 - th).abs() >= sep) {
                        pts.push((rng.random_range(range.0..range.1), th));
                    }
                }
                pts
            }
        };
        pts.sort_by(|a, b| b.1.total_cmp(&a.1));
        pts.iter()
            .map(|&(r, th)| Target::new(r, th, array))
            .collect()
    }
}

/// Squared errors of one target slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRmse {
    pub range: f64,
    pub angle_deg: f64,
    pub rmse_angle_deg: f64,
    pub rmse_range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    /// Swept parameter and its value, if any.
    pub axis: Option<(Axis, f64)>,
    pub snr_db: f64,
    pub trials: usize,
    pub misses: usize,
    pub false_alarms: usize,
    /// Per target slot; ground truth of the last trial for random scenes.
    pub per_target: Vec<TargetRmse>,
    pub avg_angle_deg: f64,
    pub max_angle_deg: f64,
    pub avg_range_m: f64,
    pub max_range_m: f64,
}

impl RmseReport {
    pub fn miss_rate(&self) -> f64 {
        self.misses as f64 / self.trials as f64
    }
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Result of one trial at one SNR.
#[derive(Debug, Clone)]
struct Outcome {
    /// `(angle error deg, range error m)` per target, or `None` for a miss.
    errors: Option<Vec<(f64, f64)>>,
    false_alarms: usize,
}

fn wrapped(err: f64, period: Option<f64>) -> f64 {
    match period {
        Some(p) => {
            let e = err.rem_euclid(p);
            e.min(p - e)
        }
        None => err.abs(),
    }
}

fn score_trial(
    spec: &ExperimentSpec,
    truth: &[Target],
    est: &[crate::pipeline::TargetEstimate],
) -> Outcome {
    let true_angles: Vec<f64> = truth.iter().map(|t| t.angle).collect();
    let est_angles: Vec<f64> = est.iter().map(|e| e.angle).collect();
    let pairs = match_by_angle(&true_angles, &est_angles, spec.match_gate);
    let matched = pairs.iter().filter(|p| p.is_some()).count();
    let false_alarms = est.len() - matched;
    // without resolution only the principal range is claimed
    let wrap = spec.acquisition.resolution.is_none();
    let errors = truth
        .iter()
        .zip(&pairs)
        .map(|(t, p)| {
            let e = &est[(*p)?];
            let r = e.range?;
            let period = wrap.then(|| e.groups[0].period);
            Some((
                (e.angle - t.angle).to_degrees().abs(),
                wrapped(r - t.range, period),
            ))
        })
        .collect::<Option<Vec<_>>>();
    Outcome {
        errors,
        false_alarms,
    }
}

fn run_trial(
    spec: &ExperimentSpec,
    designs: &[Vec<crate::beamformer::SquintDesign>],
    trial: u64,
) -> Result<(Vec<Target>, Vec<Outcome>)> {
    let truth = spec.targets(trial)?;
    let clean = synthesize(designs, &truth);
    let mut settings = spec.settings;
    if spec.known_count {
        settings.detection.expected = Some(truth.len());
    }
    let mut outcomes = Vec::with_capacity(spec.snr_db.len());
    for &snr in &spec.snr_db {
        let noise = NoiseModel::new(spec.sigma2, spec.seed, Some(snr))?;
        let noisy = add_acquisition_noise(
            &clean,
            spec.acquisition.array.n_antennas,
            &truth,
            &noise,
            spec.snr_reference,
            trial,
        );
        let est = locate(&spec.acquisition, designs, &noisy, &settings)?;
        outcomes.push(score_trial(spec, &truth, &est));
    }
    Ok((truth, outcomes))
}

/// Runs every trial at every SNR point; one report per SNR.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<RmseReport>> {
    spec.validate()?;
    let designs = spec.acquisition.designs();
    let results = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, &designs, t))
        .collect::<Result<Vec<_>>>()?;

    let slots = results[0].0.len();
    let last_truth = &results[results.len() - 1].0;
    let reports = spec
        .snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let mut sq_angle = vec![Compensated::default(); slots];
            let mut sq_range = vec![Compensated::default(); slots];
            let (mut hits, mut misses, mut false_alarms) = (0usize, 0usize, 0usize);
            for (_, outcomes) in &results {
                let o = &outcomes[i];
                false_alarms += o.false_alarms;
                match &o.errors {
                    Some(errs) => {
                        hits += 1;
                        for (k, (ea, er)) in errs.iter().enumerate() {
                            sq_angle[k].add(ea * ea);
                            sq_range[k].add(er * er);
                        }
                    }
                    None => misses += 1,
                }
            }
            let per_target: Vec<TargetRmse> = (0..slots)
                .map(|k| TargetRmse {
                    range: last_truth[k].range,
                    angle_deg: last_truth[k].angle.to_degrees(),
                    rmse_angle_deg: (sq_angle[k].value() / hits as f64).sqrt(),
                    rmse_range_m: (sq_range[k].value() / hits as f64).sqrt(),
                })
                .collect();
            let avg =
                |f: fn(&TargetRmse) -> f64| per_target.iter().map(f).sum::<f64>() / slots as f64;
            let max = |f: fn(&TargetRmse) -> f64| {
                if hits == 0 {
                    f64::NAN
                } else {
                    per_target.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
                }
            };
            RmseReport {
                axis: None,
                snr_db: snr,
                trials: spec.trials,
                misses,
                false_alarms,
                avg_angle_deg: avg(|t| t.rmse_angle_deg),
                max_angle_deg: max(|t| t.rmse_angle_deg),
                avg_range_m: avg(|t| t.rmse_range_m),
                max_range_m: max(|t| t.rmse_range_m),
                per_target,
            }
        })
        .collect();
    Ok(reports)
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Bandwidth `W` in Hz, applied to every group.
    Bandwidth,
    /// MYOLO sweep count `P`; sweeps widen the first one by the spacing of
    /// the first two (1° if there is only one).
    Sweeps,
    /// Antenna count `N`.
    Antennas,
    /// Subcarrier count `M` of the first group.
    Subcarriers,
    /// Target count `K` of a random scene.
    Targets,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "w" | "bandwidth" => Ok(Axis::Bandwidth),
            "p" | "sweeps" => Ok(Axis::Sweeps),
            "n" | "antennas" => Ok(Axis::Antennas),
            "m" | "subcarriers" => Ok(Axis::Subcarriers),
            "k" | "targets" => Ok(Axis::Targets),
            other => Err(format!("unknown axis '{other}'")),
        }
    }
}

/// A copy of `spec` with one parameter replaced.
pub fn with_axis(spec: &ExperimentSpec, axis: Axis, value: f64) -> Result<ExperimentSpec> {
    let mut s = spec.clone();
    let acq = &spec.acquisition;
    let count = value.round() as usize;
    let rebuild = |array: ArrayConfig, groups, sweeps| {
        Acquisition::new(array, groups, sweeps, acq.resolution)
    };
    match axis {
        Axis::Bandwidth => {
            let groups = acq
                .groups
                .iter()
                .map(|g| crate::scene::BandPlan::new(g.f0, value, g.m()))
                .collect::<Result<Vec<_>>>()?;
            let array =
                ArrayConfig::new(acq.array.n_antennas, acq.array.spacing, groups[0].center())?;
            s.acquisition = rebuild(array, groups, acq.sweeps.clone())?;
        }
        Axis::Sweeps => {
            let step = match acq.sweeps.as_slice() {
                [a, b, ..] => (b.start - a.start).abs(),
                _ => 1f64.to_radians(),
            };
            let plan = MyoloPlan::widening(&acq.sweeps[0], count, step)?;
            s.acquisition = rebuild(acq.array, acq.groups.clone(), plan.sweeps)?;
        }
        Axis::Antennas => {
            let array = ArrayConfig::new(count, acq.array.spacing, acq.array.carrier_ref)?;
            s.acquisition = rebuild(array, acq.groups.clone(), acq.sweeps.clone())?;
        }
        Axis::Subcarriers => {
            let mut groups = acq.groups.clone();
            groups[0] = groups[0].with_subcarriers(count)?;
            s.acquisition = rebuild(acq.array, groups, acq.sweeps.clone())?;
        }
        Axis::Targets => match &mut s.scene {
            SceneSpec::Random { count: k, .. } => *k = count,
            SceneSpec::Fixed(_) => return Err(invalid("target-count axis needs a random scene")),
        },
    }
    Ok(s)
}

/// Runs [`run`] for every axis value; reports are tagged with the value.
pub fn sweep(spec: &ExperimentSpec, axis: Axis, values: &[f64]) -> Result<Vec<RmseReport>> {
    let mut out = Vec::new();
    for &v in values {
        let s = with_axis(spec, axis, v)?;
        for mut r in run(&s)? {
            r.axis = Some((axis, v));
            out.push(r);
        }
    }
    Ok(out)
}
