use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::peaks::{detect_peaks, DetectionSettings, Peak};
use crate::beamformer::{checked_asin, SquintDesign};
use crate::echo::EchoSpectrum;
use crate::error::Result;
use crate::search::golden_max;
use crate::SPEED_OF_LIGHT;

/// Range grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSearch {
    /// Coarse grid step in meters; `None` uses `c/(2W)/20`.
    pub step: Option<f64>,
    /// Golden-section stopping width in meters.
    pub tol: f64,
    /// Keep the coarse `F(r)` samples in the result.
    pub keep_curve: bool,
}

impl Default for RangeSearch {
    fn default() -> Self {
        Self {
            step: None,
            tol: 1e-4,
            keep_curve: false,
        }
    }
}

impl RangeSearch {
    pub fn with_curve(mut self) -> Self {
        self.keep_curve = true;
        self
    }

    pub fn step_for(&self, bandwidth: f64) -> f64 {
        self.step
            .unwrap_or(SPEED_OF_LIGHT / (2.0 * bandwidth) / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    /// Principal range in `[0, period)`.
    pub range: f64,
    pub score: f64,
    /// Largest attainable score, the number of phase terms.
    pub max_score: f64,
    /// Period of the score in range.
    pub period: f64,
    /// The sidelobe window was cut short by the band edge.
    pub clipped: bool,
    /// Coarse `(r, F(r))` samples when requested.
    pub curve: Option<Vec<(f64, f64)>>,
}

/// Angle of the squint beam that peaks at `f_peak`.
pub fn angle_from_peak(f_peak: f64, design: &SquintDesign) -> Result<f64> {
    checked_asin(design.squint_sine_at(f_peak), || {
        format!("peak frequency {f_peak} Hz")
    })
}

/// Phase-matching score `|Σ_i exp(j(φ_i + 4π f_i r / c))|` against a set of
/// measured phases.
#[derive(Debug, Clone)]
pub struct PhaseScore {
    phases: Vec<f64>,
    slopes: Vec<f64>,
}

impl PhaseScore {
    /// Frequencies are taken relative to the first one; the common phase
    /// drops out of the modulus and the slopes stay small.
    pub fn new(frequencies: &[f64], phases: &[f64]) -> Self {
        let f_ref = frequencies.first().copied().unwrap_or(0.0);
        let slopes = frequencies
            .iter()
            .map(|f| 4.0 * PI * (f - f_ref) / SPEED_OF_LIGHT)
            .collect();
        Self {
            phases: phases.to_vec(),
            slopes,
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.phases
            .iter()
            .zip(&self.slopes)
            .map(|(p, k)| Complex64::cis(p + k * r))
            .sum::<Complex64>()
            .norm()
    }

    /// Scores at `0, step, 2·step, ...` strictly below `end`. Each term is
    /// advanced by a fixed rotation and recomputed exactly every
    /// `RESYNC` samples.
    pub fn grid(&self, end: f64, step: f64) -> Vec<(f64, f64)> {
        const RESYNC: usize = 1024;
        let count = ((end / step).ceil() as usize).max(1);
        let rot: Vec<Complex64> = self
            .slopes
            .iter()
            .map(|k| Complex64::cis(k * step))
            .collect();
        let mut terms: Vec<Complex64> = Vec::with_capacity(self.len());
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let r = i as f64 * step;
            if r >= end && i > 0 {
                break;
            }
            if i % RESYNC == 0 {
                terms.clear();
                terms.extend(
                    self.phases
                        .iter()
                        .zip(&self.slopes)
                        .map(|(p, k)| Complex64::cis(p + k * r)),
                );
            } else {
                terms.iter_mut().zip(&rot).for_each(|(z, w)| *z *= w);
            }
            out.push((r, terms.iter().sum::<Complex64>().norm()));
        }
        out
    }

    /// Coarse grid over `[0, period)` then golden refinement of the best cell.
    pub fn maximize(
        &self,
        period: f64,
        step: f64,
        tol: f64,
        keep_curve: bool,
    ) -> (f64, f64, Option<Vec<(f64, f64)>>) {
        let step = step.min(period);
        let samples = self.grid(period, step);
        let (r0, s0) =
            samples.iter().copied().fold(
                (0.0, f64::NEG_INFINITY),
                |b, s| if s.1 > b.1 { s } else { b },
            );
        let (r, s) = golden_max(|r| self.eval(r), r0 - step, r0 + step, tol);
        let (r, s) = if s >= s0 { (r, s) } else { (r0, s0) };
        (r.rem_euclid(period), s, keep_curve.then_some(samples))
    }
}

/// Phase score over the `2M̈+1` subcarriers around one peak, and whether the
/// window was cut short by a band edge.
pub fn sidelobe_score(
    spectrum: &EchoSpectrum,
    peak: &Peak,
    half_window: usize,
) -> (PhaseScore, bool) {
    let plan = &spectrum.plan;
    let lo = peak.index.saturating_sub(half_window);
    let hi = (peak.index + half_window).min(plan.m());
    let clipped = hi - lo < 2 * half_window;
    let freqs: Vec<f64> = (lo..=hi).map(|m| plan.frequency(m)).collect();
    let phases: Vec<f64> = spectrum.values[lo..=hi].iter().map(|y| y.arg()).collect();
    (PhaseScore::new(&freqs, &phases), clipped)
}

/// Range from the `2M̈+1` subcarriers around one peak.
pub fn yolo_range(
    spectrum: &EchoSpectrum,
    peak: &Peak,
    half_window: usize,
    search: &RangeSearch,
) -> RangeEstimate {
    let plan = &spectrum.plan;
    let (score, clipped) = sidelobe_score(spectrum, peak, half_window);
    let period = SPEED_OF_LIGHT / (2.0 * plan.spacing());
    let (range, value, curve) = score.maximize(
        period,
        search.step_for(plan.bandwidth),
        search.tol,
        search.keep_curve,
    );
    RangeEstimate {
        range,
        score: value,
        max_score: score.len() as f64,
        period,
        clipped,
        curve,
    }
}

/// One YOLO target: the detected peak, its angle and its principal range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub angle: f64,
    pub range: RangeEstimate,
    pub peak: Peak,
}

/// Single-sweep localization of every detected target.
pub fn yolo(
    spectrum: &EchoSpectrum,
    design: &SquintDesign,
    detection: &DetectionSettings,
    half_window: usize,
    search: &RangeSearch,
) -> Result<Vec<Localization>> {
    use rayon::prelude::*;
    let peaks = detect_peaks(spectrum, detection)?;
    peaks
        .peaks
        .par_iter()
        .map(|p| {
            let angle = angle_from_peak(p.frequency, design)?;
            let range = yolo_range(spectrum, p, half_window, search);
            Ok(Localization {
                angle,
                range,
                peak: *p,
            })
        })
        .collect()
}
