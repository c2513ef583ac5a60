//! End-to-end localization: synthesize or accept echo spectra for every
//! band-plan group and sweep, estimate per group, then merge the groups by
//! angle and resolve range ambiguity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{resolve, AmbiguitySolution};
use crate::beamformer::{design, SquintDesign};
use crate::echo::{
    add_noise, echo_closed_form, noise_stream, EchoSpectrum, NoiseModel, SnrReference,
};
use crate::error::{invalid, Error, Result};
use crate::estimator::{
    myolo_angle, myolo_associate, myolo_range, yolo, yolo_range, AngleAveraging, DetectionSettings,
    RangeSearch,
};
use crate::scene::{AmbiguityPlan, ArrayConfig, BandPlan, SweepPlan, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    Yolo,
    Myolo,
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "yolo" => Ok(Estimator::Yolo),
            "myolo" => Ok(Estimator::Myolo),
            other => Err(format!(
                "unknown estimator '{other}', expected yolo or myolo"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatorSettings {
    pub estimator: Estimator,
    /// Sidelobe half-window `M̈`.
    pub half_window: usize,
    pub detection: DetectionSettings,
    pub search: RangeSearch,
    /// Cap on the MYOLO association gate, radians.
    pub max_gate: f64,
    pub averaging: AngleAveraging,
    /// Largest angle difference when pairing detections across groups, radians.
    pub group_gate: f64,
}

impl LocatorSettings {
    pub fn new(estimator: Estimator) -> Self {
        Self::with_window(estimator, 20)
    }

    pub fn with_window(estimator: Estimator, half_window: usize) -> Self {
        Self {
            estimator,
            half_window,
            detection: DetectionSettings::for_window(half_window),
            search: RangeSearch::default(),
            max_gate: 1f64.to_radians(),
            averaging: AngleAveraging::Mean,
            group_gate: 0.5f64.to_radians(),
        }
    }
}

/// Range window and tolerance for combining groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub r_sense_max: f64,
    pub tolerance: f64,
}

/// Everything the transmitter does: array, band-plan groups and the sweeps
/// run on every group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub array: ArrayConfig,
    pub groups: Vec<BandPlan>,
    pub sweeps: Vec<SweepPlan>,
    /// Required with more than one group; without it ranges stay principal.
    pub resolution: Option<Resolution>,
}

impl Acquisition {
    pub fn new(
        array: ArrayConfig,
        groups: Vec<BandPlan>,
        sweeps: Vec<SweepPlan>,
        resolution: Option<Resolution>,
    ) -> Result<Self> {
        if groups.is_empty() || sweeps.is_empty() {
            return Err(invalid(
                "acquisition needs at least one band plan and one sweep",
            ));
        }
        for g in &groups {
            array.validate_for(g)?;
        }
        match resolution {
            Some(r) => {
                AmbiguityPlan::new(groups.clone(), r.r_sense_max, r.tolerance)?;
            }
            None if groups.len() > 1 => {
                return Err(invalid(
                    "several band-plan groups need a sensing range and tolerance",
                ));
            }
            None => {}
        }
        Ok(Self {
            array,
            groups,
            sweeps,
            resolution,
        })
    }

    /// Beamformer designs indexed `[group][sweep]`.
    pub fn designs(&self) -> Vec<Vec<SquintDesign>> {
        self.groups
            .iter()
            .map(|g| {
                self.sweeps
                    .iter()
                    .map(|s| design(s, g, &self.array))
                    .collect()
            })
            .collect()
    }
}

/// Echo spectra indexed `[group][sweep]`.
pub type Spectra = Vec<Vec<EchoSpectrum>>;

pub fn synthesize(designs: &[Vec<SquintDesign>], targets: &[Target]) -> Spectra {
    designs
        .par_iter()
        .map(|row| {
            row.par_iter()
                .map(|d| echo_closed_form(targets, d))
                .collect()
        })
        .collect()
}

/// Adds independent noise to every spectrum of one trial. The signal scale
/// is shared by the whole acquisition.
pub fn add_acquisition_noise(
    clean: &Spectra,
    n_antennas: usize,
    targets: &[Target],
    noise: &NoiseModel,
    reference: SnrReference,
    trial: u64,
) -> Spectra {
    let all: Vec<&EchoSpectrum> = clean.iter().flatten().collect();
    let power = reference.reference_power(targets, n_antennas, &all);
    clean
        .iter()
        .enumerate()
        .map(|(q, row)| {
            row.iter()
                .enumerate()
                .map(|(p, s)| add_noise(s, noise, power, noise_stream(trial, q, p)))
                .collect()
        })
        .collect()
}

/// One group's estimate for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimate {
    pub angle: f64,
    /// Principal range in `[0, R_u)`; `None` if ranging failed.
    pub principal: Option<f64>,
    pub period: f64,
    pub score: f64,
    pub max_score: f64,
    pub peak_index: usize,
    pub clipped: bool,
    pub curve: Option<Vec<(f64, f64)>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub angle: f64,
    /// Final range; `None` when ranging or resolution failed (see `note`).
    pub range: Option<f64>,
    pub groups: Vec<GroupEstimate>,
    pub resolution: Option<AmbiguitySolution>,
    pub note: Option<String>,
}

fn estimate_group(
    spectra: &[EchoSpectrum],
    designs: &[SquintDesign],
    settings: &LocatorSettings,
) -> Result<Vec<GroupEstimate>> {
    match settings.estimator {
        Estimator::Yolo => {
            let locs = yolo(
                &spectra[0],
                &designs[0],
                &settings.detection,
                settings.half_window,
                &settings.search,
            )?;
            Ok(locs
                .into_iter()
                .map(|l| GroupEstimate {
                    angle: l.angle,
                    principal: Some(l.range.range),
                    period: l.range.period,
                    score: l.range.score,
                    max_score: l.range.max_score,
                    peak_index: l.peak.index,
                    clipped: l.range.clipped,
                    curve: l.range.curve,
                    note: None,
                })
                .collect())
        }
        Estimator::Myolo => {
            let pairs: Vec<(EchoSpectrum, SquintDesign)> = spectra
                .iter()
                .cloned()
                .zip(designs.iter().cloned())
                .collect();
            let set = myolo_associate(&pairs, &settings.detection, settings.max_gate)?;
            let plan = spectra[0].plan;
            Ok(set
                .tracks
                .par_iter()
                .map(|t| {
                    let angle = myolo_angle(t, settings.averaging);
                    let peak_index = t.points[0].peak.index;
                    match myolo_range(t, plan.spacing(), &settings.search, plan.bandwidth) {
                        Ok(r) => GroupEstimate {
                            angle,
                            principal: Some(r.range),
                            period: r.period,
                            score: r.score,
                            max_score: r.max_score,
                            peak_index,
                            clipped: false,
                            curve: r.curve,
                            note: None,
                        },
                        // every sweep peaked on one subcarrier: range from
                        // that sweep's sidelobes instead
                        Err(Error::NoFrequencyDiversity { .. }) => {
                            let first = &t.points[0];
                            let r = yolo_range(&spectra[first.sweep], &first.peak, settings.half_window, &settings.search);
                            GroupEstimate {
                                angle,
                                principal: Some(r.range),
                                period: r.period,
                                score: r.score,
                                max_score: r.max_score,
                                peak_index,
                                clipped: r.clipped,
                                curve: r.curve,
                                note: Some("ranged from sidelobes: peak subcarrier identical in every sweep".into()),
                            }
                        }
                        Err(e) => GroupEstimate {
                            angle,
                            principal: None,
                            period: crate::ambiguity::max_unambiguous_distance(&plan),
                            score: 0.0,
                            max_score: t.len() as f64,
                            peak_index,
                            clipped: false,
                            curve: None,
                            note: Some(e.to_string()),
                        },
                    }
                })
                .collect())
        }
    }
}

/// Greedy one-to-one pairing by nearest angle within `gate`.
pub fn match_by_angle(reference: &[f64], other: &[f64], gate: f64) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in reference.iter().enumerate() {
        for (j, b) in other.iter().enumerate() {
            let d = (a - b).abs();
            if d <= gate {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; reference.len()];
    let mut used = vec![false; other.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

/// Localizes every target seen by the first group.
///
/// Angles come from the first group. Other groups contribute the principal
/// range of their detection nearest in angle.
pub fn locate(
    acquisition: &Acquisition,
    designs: &[Vec<SquintDesign>],
    spectra: &Spectra,
    settings: &LocatorSettings,
) -> Result<Vec<TargetEstimate>> {
    if spectra.len() != acquisition.groups.len()
        || spectra
            .iter()
            .any(|row| row.len() != acquisition.sweeps.len())
    {
        return Err(invalid(
            "spectra do not match the acquisition's groups and sweeps",
        ));
    }
    let per_group = spectra
        .iter()
        .zip(designs)
        .map(|(s, d)| estimate_group(s, d, settings))
        .collect::<Result<Vec<_>>>()?;

    let reference: Vec<f64> = per_group[0].iter().map(|g| g.angle).collect();
    let matches: Vec<Vec<Option<usize>>> = per_group[1..]
        .iter()
        .map(|g| {
            match_by_angle(
                &reference,
                &g.iter().map(|e| e.angle).collect::<Vec<_>>(),
                settings.group_gate,
            )
        })
        .collect();

    let mut out = Vec::with_capacity(reference.len());
    for (i, first) in per_group[0].iter().enumerate() {
        let mut groups = vec![first.clone()];
        let mut note = None;
        for (q, m) in matches.iter().enumerate() {
            match m[i] {
                Some(j) => groups.push(per_group[q + 1][j].clone()),
                None => {
                    note = Some(format!(
                        "no detection in group {} near {:.4} deg",
                        q + 1,
                        first.angle.to_degrees()
                    ))
                }
            }
        }
        let principals: Option<Vec<(f64, f64)>> = groups
            .iter()
            .map(|g| g.principal.map(|p| (p, g.period)))
            .collect();
        let (range, resolution) = match (note.is_none(), principals, acquisition.resolution) {
            (true, Some(p), Some(res)) => match resolve(&p, res.r_sense_max, res.tolerance) {
                Ok(sol) => (Some(sol.range), Some(sol)),
                Err(e) => {
                    note = Some(e.to_string());
                    (None, None)
                }
            },
            (true, Some(p), None) => (Some(p[0].0), None),
            (true, None, _) => {
                note = groups.iter().find_map(|g| g.note.clone());
                (None, None)
            }
            (false, _, _) => (None, None),
        };
        out.push(TargetEstimate {
            angle: first.angle,
            range,
            groups,
            resolution,
            note,
        });
    }
    Ok(out)
}

/// Designs, noiseless synthesis and localization in one call.
pub fn run_noiseless(
    acquisition: &Acquisition,
    targets: &[Target],
    settings: &LocatorSettings,
) -> Result<(Spectra, Vec<TargetEstimate>)> {
    let designs = acquisition.designs();
    let spectra = synthesize(&designs, targets);
    let est = locate(acquisition, &designs, &spectra, settings)?;
    Ok((spectra, est))
}
