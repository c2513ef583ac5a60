//! TOML scene and experiment files.
//!
//! Angles are written in degrees, frequencies in GHz and distances in
//! meters; everything is converted to radians and Hz here. A minimal file:
//!
//! ```toml
//! [array]
//! antennas = 128
//!
//! [band]
//! f0_ghz = 220.0
//! bandwidth_ghz = 1.0
//! subcarriers = [2048]
//!
//! [sweep]
//! start_deg = 60.0
//! end_deg = -60.0
//!
//! [[targets]]
//! range_m = 50.0
//! angle_deg = 50.0
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::echo::{NoiseModel, SnrReference};
use crate::error::{invalid, Error, Result};
use crate::estimator::{AngleAveraging, DetectionSettings, RangeSearch};
use crate::harness::{Axis, ExperimentSpec, SceneSpec};
use crate::pipeline::{Acquisition, Estimator, LocatorSettings, Resolution};
use crate::scene::{ArrayConfig, BandPlan, MyoloPlan, SweepPlan, Target};

const GHZ: f64 = 1e9;

/// Swept parameter and its values.
pub type AxisValues = (Axis, Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub antennas: usize,
    /// Element spacing in meters; defaults to half a wavelength at `spacing_freq_ghz`.
    pub spacing_m: Option<f64>,
    /// Defaults to `f0`.
    pub spacing_freq_ghz: Option<f64>,
    /// Carrier for the path gain and baseline weights; defaults to the band center.
    pub carrier_ref_ghz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub f0_ghz: f64,
    pub bandwidth_ghz: f64,
    /// `M` of every band-plan group; one entry for a single group.
    pub subcarriers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start_deg: f64,
    pub end_deg: f64,
    /// Number of MYOLO sweeps, each widened by `step_deg` on both ends.
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default = "one_f")]
    pub step_deg: f64,
    /// Explicit `[start, end]` pairs in degrees; overrides the fields above.
    pub explicit: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguitySection {
    pub r_sense_max_m: f64,
    #[serde(default = "half")]
    pub tolerance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub range_m: f64,
    pub angle_deg: f64,
    /// Complex gain; defaults to free-space `λ_c/(8πr)`.
    pub gain: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default)]
    pub kind: Estimator,
    #[serde(default = "twenty")]
    pub msidelobe: usize,
    #[serde(default = "five")]
    pub kappa: f64,
    pub expected: Option<usize>,
    #[serde(default = "tenth")]
    pub rel_floor: f64,
    pub grid_step_m: Option<f64>,
    #[serde(default = "refine")]
    pub refine_tol_m: f64,
    #[serde(default = "one_f")]
    pub max_gate_deg: f64,
    #[serde(default = "half")]
    pub group_gate_deg: f64,
    #[serde(default)]
    pub averaging: AngleAveraging,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            kind: Estimator::Yolo,
            msidelobe: 20,
            kappa: 5.0,
            expected: None,
            rel_floor: 0.1,
            grid_step_m: None,
            refine_tol_m: 1e-4,
            max_gate_deg: 1.0,
            group_gate_deg: 0.5,
            averaging: AngleAveraging::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "one_u")]
    pub seed: u64,
    /// Omit for a noiseless run.
    pub snr_db: Option<f64>,
    #[serde(default = "one_f")]
    pub sigma2: f64,
    #[serde(default)]
    pub reference: SnrReference,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            seed: 1,
            snr_db: None,
            sigma2: 1.0,
            reference: SnrReference::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomScene {
    pub count: usize,
    pub range_m: [f64; 2],
    pub angle_deg: [f64; 2],
    pub min_separation_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "hundred")]
    pub trials: usize,
    pub snr_db: Vec<f64>,
    /// One of `w`, `p`, `n`, `m`, `k`.
    pub axis: Option<String>,
    /// Axis values; bandwidths in GHz.
    #[serde(default)]
    pub values: Vec<f64>,
    /// Redraw targets per trial instead of using `[[targets]]`.
    pub random: Option<RandomScene>,
    #[serde(default = "one_f")]
    pub match_gate_deg: f64,
    /// Tell the detector how many targets each trial holds.
    #[serde(default = "yes")]
    pub known_count: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    #[serde(default = "minus_ninety")]
    pub start_deg: f64,
    #[serde(default = "ninety")]
    pub end_deg: f64,
    #[serde(default = "half")]
    pub step_deg: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            start_deg: -90.0,
            end_deg: 90.0,
            step_deg: 0.5,
        }
    }
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn one_u() -> u64 {
    1
}
fn one_f() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn twenty() -> usize {
    20
}
fn five() -> f64 {
    5.0
}
fn tenth() -> f64 {
    0.1
}
fn refine() -> f64 {
    1e-4
}
fn hundred() -> usize {
    100
}
fn ninety() -> f64 {
    90.0
}
fn minus_ninety() -> f64 {
    -90.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub array: ArraySection,
    pub band: BandSection,
    pub sweep: SweepSection,
    pub ambiguity: Option<AmbiguitySection>,
    #[serde(default)]
    pub targets: Vec<TargetEntry>,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub baseline: BaselineSection,
}

impl std::str::FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        text.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn groups(&self) -> Result<Vec<BandPlan>> {
        if self.band.subcarriers.is_empty() {
            return Err(invalid("band.subcarriers is empty"));
        }
        self.band
            .subcarriers
            .iter()
            .map(|&m| BandPlan::new(self.band.f0_ghz * GHZ, self.band.bandwidth_ghz * GHZ, m))
            .collect()
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        let groups = self.groups()?;
        let carrier = self
            .array
            .carrier_ref_ghz
            .map_or(groups[0].center(), |f| f * GHZ);
        match self.array.spacing_m {
            Some(d) => ArrayConfig::new(self.array.antennas, d, carrier),
            None => {
                let f = self
                    .array
                    .spacing_freq_ghz
                    .map_or(groups[0].f0, |f| f * GHZ);
                ArrayConfig::half_wavelength(self.array.antennas, f, carrier)
            }
        }
    }

    pub fn sweeps(&self) -> Result<Vec<SweepPlan>> {
        let s = &self.sweep;
        match &s.explicit {
            Some(list) => {
                let sweeps = list
                    .iter()
                    .map(|[a, b]| SweepPlan::from_degrees(*a, *b))
                    .collect::<Result<Vec<_>>>()?;
                Ok(MyoloPlan::new(sweeps)?.sweeps)
            }
            None => {
                let base = SweepPlan::from_degrees(s.start_deg, s.end_deg)?;
                Ok(MyoloPlan::widening(&base, s.count, s.step_deg.to_radians())?.sweeps)
            }
        }
    }

    pub fn acquisition(&self) -> Result<Acquisition> {
        let resolution = self.ambiguity.map(|a| Resolution {
            r_sense_max: a.r_sense_max_m,
            tolerance: a.tolerance_m,
        });
        Acquisition::new(self.array()?, self.groups()?, self.sweeps()?, resolution)
    }

    pub fn targets(&self) -> Result<Vec<Target>> {
        let array = self.array()?;
        self.targets
            .iter()
            .map(|t| match t.gain {
                Some([re, im]) => {
                    Target::with_gain(t.range_m, t.angle_deg.to_radians(), Complex64::new(re, im))
                }
                None => Target::new(t.range_m, t.angle_deg.to_radians(), &array),
            })
            .collect()
    }

    pub fn locator(&self) -> LocatorSettings {
        let e = &self.estimator;
        LocatorSettings {
            estimator: e.kind,
            half_window: e.msidelobe,
            detection: DetectionSettings {
                kappa: e.kappa,
                exclusion: 2 * e.msidelobe,
                expected: e.expected,
                rel_floor: e.rel_floor,
            },
            search: RangeSearch {
                step: e.grid_step_m,
                tol: e.refine_tol_m,
                keep_curve: false,
            },
            max_gate: e.max_gate_deg.to_radians(),
            averaging: e.averaging,
            group_gate: e.group_gate_deg.to_radians(),
        }
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise.sigma2, self.noise.seed, self.noise.snr_db)
    }

    /// Experiment spec plus the axis to sweep, if any. Bandwidth values are
    /// converted from GHz.
    pub fn experiment(&self) -> Result<(ExperimentSpec, Option<AxisValues>)> {
        let x = self
            .experiment
            .as_ref()
            .ok_or_else(|| invalid("missing [experiment] section"))?;
        let scene = match x.random {
            Some(r) => SceneSpec::Random {
                count: r.count,
                range: (r.range_m[0], r.range_m[1]),
                angle: (r.angle_deg[0].to_radians(), r.angle_deg[1].to_radians()),
                min_separation: r.min_separation_deg.map(f64::to_radians),
            },
            None => SceneSpec::Fixed(
                self.targets
                    .iter()
                    .map(|t| (t.range_m, t.angle_deg.to_radians()))
                    .collect(),
            ),
        };
        let mut spec =
            ExperimentSpec::new(self.acquisition()?, self.locator(), scene, x.snr_db.clone());
        spec.trials = x.trials;
        spec.seed = self.noise.seed;
        spec.sigma2 = self.noise.sigma2;
        spec.snr_reference = self.noise.reference;
        spec.match_gate = x.match_gate_deg.to_radians();
        spec.known_count = x.known_count;
        let axis = match &x.axis {
            Some(name) => {
                let axis: Axis = name.parse().map_err(Error::InvalidConfig)?;
                let scale = if axis == Axis::Bandwidth { GHZ } else { 1.0 };
                Some((axis, x.values.iter().map(|v| v * scale).collect()))
            }
            None => None,
        };
        spec.validate()?;
        Ok((spec, axis))
    }

    pub fn baseline_angles(&self) -> Result<Vec<f64>> {
        let b = &self.baseline;
        if !(b.step_deg > 0.0) || b.end_deg < b.start_deg {
            return Err(invalid(
                "baseline angle grid needs start <= end and a positive step",
            ));
        }
        let n = ((b.end_deg - b.start_deg) / b.step_deg + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| (b.start_deg + i as f64 * b.step_deg).to_radians())
            .collect())
    }
}
