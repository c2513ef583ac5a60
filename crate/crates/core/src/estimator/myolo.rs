use serde::{Deserialize, Serialize};

use super::peaks::{detect_peaks, DetectionSettings, Peak};
use super::yolo::{angle_from_peak, PhaseScore, RangeEstimate, RangeSearch};
use crate::beamformer::SquintDesign;
use crate::echo::EchoSpectrum;
use crate::error::{invalid, Error, Result};
use crate::SPEED_OF_LIGHT;

/// One sweep's contribution to a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    /// Position of the sweep in the input list.
    pub sweep: usize,
    pub peak: Peak,
    /// Measured phase `arg y` at the peak subcarrier.
    pub phase: f64,
    pub angle: f64,
}

/// A target followed across sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    /// Detections in increasing sweep order.
    pub points: Vec<TrackPoint>,
    /// Sweeps where no peak was associated to this track.
    pub missing: Vec<usize>,
}

impl Track {
    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.peak.frequency).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phase).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.angle).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    /// Tracks in decreasing angle.
    pub tracks: Vec<Track>,
    pub n_sweeps: usize,
    /// Power spectrum of every sweep, one row per sweep.
    pub power_map: Vec<Vec<f64>>,
}

/// How per-sweep angles are combined into one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleAveraging {
    #[default]
    Mean,
    PowerWeighted,
}

/// Follows each target across sweeps by nearest estimated angle.
///
/// Tracks start from the first sweep's peaks. The gate is half the smallest
/// angular separation among them, capped at `max_gate` radians.
pub fn myolo_associate(
    sweeps: &[(EchoSpectrum, SquintDesign)],
    detection: &DetectionSettings,
    max_gate: f64,
) -> Result<TrackSet> {
    if sweeps.is_empty() {
        return Err(invalid("MYOLO needs at least one sweep"));
    }
    let mut detections = Vec::with_capacity(sweeps.len());
    for (spectrum, design) in sweeps {
        let peaks = detect_peaks(spectrum, detection)?;
        let points = peaks
            .peaks
            .iter()
            .map(|p| {
                Ok((
                    *p,
                    spectrum.values[p.index].arg(),
                    angle_from_peak(p.frequency, design)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        detections.push(points);
    }

    let seeds = &detections[0];
    let mut min_sep = f64::INFINITY;
    for (i, a) in seeds.iter().enumerate() {
        for b in &seeds[i + 1..] {
            min_sep = min_sep.min((a.2 - b.2).abs());
        }
    }
    let gate = (0.5 * min_sep).min(max_gate);

    let mut tracks: Vec<Track> = seeds
        .iter()
        .map(|&(peak, phase, angle)| Track {
            points: vec![TrackPoint {
                sweep: 0,
                peak,
                phase,
                angle,
            }],
            missing: Vec::new(),
        })
        .collect();
    let anchors: Vec<f64> = seeds.iter().map(|s| s.2).collect();

    for (p, found) in detections.iter().enumerate().skip(1) {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (t, anchor) in anchors.iter().enumerate() {
            for (k, det) in found.iter().enumerate() {
                let dist = (det.2 - anchor).abs();
                if dist <= gate {
                    pairs.push((dist, t, k));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; tracks.len()];
        let mut det_used = vec![false; found.len()];
        for (_, t, k) in pairs {
            if track_used[t] || det_used[k] {
                continue;
            }
            track_used[t] = true;
            det_used[k] = true;
            let (peak, phase, angle) = found[k];
            tracks[t].points.push(TrackPoint {
                sweep: p,
                peak,
                phase,
                angle,
            });
        }
        for (t, used) in track_used.iter().enumerate() {
            if !used {
                tracks[t].missing.push(p);
            }
        }
    }

    let n = sweeps.len();
    tracks.retain(|t| 2 * t.points.len() >= n);
    tracks.sort_by(|a, b| b.points[0].angle.total_cmp(&a.points[0].angle));
    let power_map = sweeps.iter().map(|(s, _)| s.power()).collect();
    Ok(TrackSet {
        tracks,
        n_sweeps: n,
        power_map,
    })
}

/// Range from the peak-subcarrier phases of one track.
///
/// All sweeps must share one band plan, so the score repeats with the
/// plan's unambiguous distance.
fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Range from the peak subcarriers of one track. The score repeats every
/// `c / (2·g·Δf)`, `g` being the gcd of the peak index offsets, so the
/// principal range is reported modulo that period.
pub fn myolo_range(
    track: &Track,
    spacing: f64,
    search: &RangeSearch,
    bandwidth: f64,
) -> Result<RangeEstimate> {
    let freqs = track.frequencies();
    let first = track.points.first().map_or(0, |p| p.peak.index);
    let g = track
        .points
        .iter()
        .fold(0, |g, p| gcd(g, p.peak.index.abs_diff(first)));
    if g == 0 {
        return Err(Error::NoFrequencyDiversity { count: freqs.len() });
    }
    let score = PhaseScore::new(&freqs, &track.phases());
    let period = SPEED_OF_LIGHT / (2.0 * g as f64 * spacing);
    let (range, value, curve) = score.maximize(
        period,
        search.step_for(bandwidth),
        search.tol,
        search.keep_curve,
    );
    Ok(RangeEstimate {
        range,
        score: value,
        max_score: freqs.len() as f64,
        period,
        clipped: false,
        curve,
    })
}

pub fn myolo_angle(track: &Track, averaging: AngleAveraging) -> f64 {
    match averaging {
        AngleAveraging::Mean => {
            track.points.iter().map(|p| p.angle).sum::<f64>() / track.len() as f64
        }
        AngleAveraging::PowerWeighted => {
            let total: f64 = track.points.iter().map(|p| p.peak.power).sum();
            track
                .points
                .iter()
                .map(|p| p.angle * p.peak.power)
                .sum::<f64>()
                / total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::design;
    use crate::echo::echo_closed_form;
    use crate::scene::{ArrayConfig, BandPlan, MyoloPlan, SweepPlan, Target};

    const FOUR_TARGETS: [(f64, f64); 4] = [(50.0, 50.0), (120.0, 30.0), (200.0, -10.0), (80.0, -45.0)];

    fn sweeps(
        w: f64,
        m: usize,
        p: usize,
        targets: &[(f64, f64)],
    ) -> Vec<(EchoSpectrum, SquintDesign)> {
        let plan = BandPlan::new(220e9, w, m).unwrap();
        let array = ArrayConfig::half_wavelength(128, 220e9, plan.center()).unwrap();
        let base = SweepPlan::from_degrees(60.0, -60.0).unwrap();
        let myolo = MyoloPlan::widening(&base, p, 1f64.to_radians()).unwrap();
        let ts: Vec<Target> = targets
            .iter()
            .map(|&(r, th)| Target::new(r, th.to_radians(), &array).unwrap())
            .collect();
        myolo
            .sweeps
            .iter()
            .map(|s| {
                let d = design(s, &plan, &array);
                (echo_closed_form(&ts, &d), d)
            })
            .collect()
    }

    fn wrapped_err(a: f64, b: f64, period: f64) -> f64 {
        let e = (a - b).rem_euclid(period);
        e.min(period - e)
    }

    #[test]
    fn four_tracks_of_full_length() {
        let s = sweeps(10e9, 2048, 16, &FOUR_TARGETS);
        let set =
            myolo_associate(&s, &DetectionSettings::for_window(20), 1f64.to_radians()).unwrap();
        assert_eq!(set.tracks.len(), 4);
        assert_eq!(set.power_map.len(), 16);
        for t in &set.tracks {
            assert_eq!(t.len(), 16);
            assert!(t.missing.is_empty());
        }
    }

    #[test]
    fn ranges_and_angles_match_truth() {
        let s = sweeps(10e9, 2048, 16, &FOUR_TARGETS);
        let plan = s[0].0.plan;
        let set =
            myolo_associate(&s, &DetectionSettings::for_window(20), 1f64.to_radians()).unwrap();
        for (t, &(r, th)) in set.tracks.iter().zip(FOUR_TARGETS.iter()) {
            let est =
                myolo_range(t, plan.spacing(), &RangeSearch::default(), plan.bandwidth).unwrap();
            assert!(
                wrapped_err(est.range, r, est.period) < 0.05,
                "{} vs {r}",
                est.range
            );
            assert!(est.score <= 16.0 + 1e-9);
            let ang = myolo_angle(t, AngleAveraging::Mean).to_degrees();
            assert!((ang - th).abs() < 0.05, "{ang} vs {th}");
        }
    }

    #[test]
    fn single_sweep_matches_yolo_peaks() {
        let s = sweeps(1e9, 2048, 1, &FOUR_TARGETS);
        let det = DetectionSettings::for_window(20);
        let set = myolo_associate(&s, &det, 1f64.to_radians()).unwrap();
        let peaks = detect_peaks(&s[0].0, &det).unwrap();
        let mut idx: Vec<usize> = set.tracks.iter().map(|t| t.points[0].peak.index).collect();
        idx.sort_unstable();
        assert_eq!(idx, peaks.peaks.iter().map(|p| p.index).collect::<Vec<_>>());
        for t in &set.tracks {
            assert_eq!(myolo_angle(t, AngleAveraging::Mean), t.points[0].angle);
        }
    }

    #[test]
    fn shuffled_sweeps_same_tracks() {
        let s = sweeps(10e9, 2048, 8, &FOUR_TARGETS);
        let det = DetectionSettings::for_window(20);
        let a = myolo_associate(&s, &det, 1f64.to_radians()).unwrap();
        let order = [5usize, 2, 7, 0, 3, 6, 1, 4];
        let shuffled: Vec<_> = order.iter().map(|&i| s[i].clone()).collect();
        let b = myolo_associate(&shuffled, &det, 1f64.to_radians()).unwrap();
        assert_eq!(a.tracks.len(), b.tracks.len());
        for (ta, tb) in a.tracks.iter().zip(&b.tracks) {
            let mut pa: Vec<(usize, f64, f64)> = ta
                .points
                .iter()
                .map(|p| (p.sweep, p.phase, p.angle))
                .collect();
            let mut pb: Vec<(usize, f64, f64)> = tb
                .points
                .iter()
                .map(|p| (order[p.sweep], p.phase, p.angle))
                .collect();
            pa.sort_by_key(|x| x.0);
            pb.sort_by_key(|x| x.0);
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn identical_frequencies_rejected() {
        let peak = Peak {
            index: 10,
            frequency: 221e9,
            power: 1.0,
        };
        let t = Track {
            points: (0..3)
                .map(|p| TrackPoint {
                    sweep: p,
                    peak,
                    phase: 0.1,
                    angle: 0.2,
                })
                .collect(),
            missing: vec![],
        };
        let r = myolo_range(&t, 1e6, &RangeSearch::default(), 1e9);
        assert!(matches!(r, Err(Error::NoFrequencyDiversity { count: 3 })));
    }

    #[test]
    fn two_tone_closed_form() {
        // phases of a noiseless target at r: φ = -4πf r / c
        let r = 7.3;
        let spacing = 10e9 / 2048.0;
        let f1 = 220e9 + 100.0 * spacing;
        let f2 = 220e9 + 137.0 * spacing;
        let mk = |f: f64, p: usize| TrackPoint {
            sweep: p,
            peak: Peak {
                index: ((f - 220e9) / spacing).round() as usize,
                frequency: f,
                power: 1.0,
            },
            phase: (-4.0 * std::f64::consts::PI * f * r / SPEED_OF_LIGHT)
                .rem_euclid(std::f64::consts::TAU),
            angle: 0.0,
        };
        let t = Track {
            points: vec![mk(f1, 0), mk(f2, 1)],
            missing: vec![],
        };
        let est = myolo_range(&t, spacing, &RangeSearch::default(), 10e9).unwrap();
        let two_tone_period = SPEED_OF_LIGHT / (2.0 * (f2 - f1));
        assert!((est.period - two_tone_period).abs() < 1e-9);
        assert!(wrapped_err(est.range, r, two_tone_period) < 1e-4);
        assert!((est.score - 2.0).abs() < 1e-9);
    }

    #[test]
    fn evenly_spaced_peaks_shorten_period() {
        let r = 26.4;
        let spacing = 10e9 / 2048.0;
        let points = [797usize, 799, 801, 803]
            .iter()
            .enumerate()
            .map(|(p, &m)| {
                let f = 220e9 + m as f64 * spacing;
                TrackPoint {
                    sweep: p,
                    peak: Peak {
                        index: m,
                        frequency: f,
                        power: 1.0,
                    },
                    phase: (-4.0 * std::f64::consts::PI * f * r / SPEED_OF_LIGHT)
                        .rem_euclid(std::f64::consts::TAU),
                    angle: 0.0,
                }
            })
            .collect();
        let t = Track {
            points,
            missing: vec![],
        };
        let est = myolo_range(&t, spacing, &RangeSearch::default(), 10e9).unwrap();
        assert!((est.period - 15.36).abs() < 1e-9);
        assert!(wrapped_err(est.range, r, est.period) < 1e-4);
    }

    #[test]
    fn constant_phase_periodic_score() {
        let spacing = 4e9 / 4096.0;
        let delta = 3.0 * spacing;
        let pts: Vec<TrackPoint> = (0..4)
            .map(|p| TrackPoint {
                sweep: p,
                peak: Peak {
                    index: 0,
                    frequency: 225e9 + p as f64 * delta,
                    power: 1.0,
                },
                phase: 0.4,
                angle: 0.0,
            })
            .collect();
        let score = PhaseScore::new(
            &pts.iter().map(|p| p.peak.frequency).collect::<Vec<_>>(),
            &pts.iter().map(|p| p.phase).collect::<Vec<_>>(),
        );
        let period = SPEED_OF_LIGHT / (2.0 * delta);
        for r in [0.0, 1.3, 17.0, 40.2] {
            assert!((score.eval(r) - score.eval(r + period)).abs() < 1e-9);
        }
    }

    #[test]
    fn global_phase_shift_keeps_argmax() {
        let s = sweeps(10e9, 2048, 8, &[(13.0, 20.0)]);
        let plan = s[0].0.plan;
        let set =
            myolo_associate(&s, &DetectionSettings::for_window(20), 1f64.to_radians()).unwrap();
        let t = &set.tracks[0];
        let base = myolo_range(t, plan.spacing(), &RangeSearch::default(), plan.bandwidth).unwrap();
        let mut shifted = t.clone();
        for p in &mut shifted.points {
            p.phase += 1.234;
        }
        let moved = myolo_range(
            &shifted,
            plan.spacing(),
            &RangeSearch::default(),
            plan.bandwidth,
        )
        .unwrap();
        assert!(wrapped_err(base.range, moved.range, base.period) < 1e-4);
        assert!((base.score - moved.score).abs() < 1e-9);
    }

    #[test]
    fn weighted_mean_of_equal_entries() {
        let peak = Peak {
            index: 1,
            frequency: 1.0,
            power: 3.0,
        };
        let t = Track {
            points: (0..4)
                .map(|p| TrackPoint {
                    sweep: p,
                    peak,
                    phase: 0.0,
                    angle: 0.25,
                })
                .collect(),
            missing: vec![],
        };
        assert!((myolo_angle(&t, AngleAveraging::Mean) - 0.25).abs() < 1e-15);
        assert!((myolo_angle(&t, AngleAveraging::PowerWeighted) - 0.25).abs() < 1e-15);
    }
}
