use serde::{Deserialize, Serialize};

use crate::echo::EchoSpectrum;
use crate::error::{invalid, Result};

/// Settings for picking peak power subcarriers out of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSettings {
    /// Threshold multiplier on the median power.
    pub kappa: f64,
    /// Minimum index distance between two kept peaks is `exclusion + 1`.
    pub exclusion: usize,
    /// Known target count. When set, the strongest `K` separated local maxima
    /// are kept and neither `kappa` nor `rel_floor` applies.
    pub expected: Option<usize>,
    /// In threshold mode, peaks below this fraction of the strongest one are
    /// dropped. Dirichlet sidelobes of strong targets otherwise pass `kappa`.
    pub rel_floor: f64,
}

impl DetectionSettings {
    /// Defaults for a sidelobe half-window `M̈`: exclusion `2M̈`, `κ = 5`.
    pub fn for_window(half_window: usize) -> Self {
        Self {
            kappa: 5.0,
            exclusion: 2 * half_window,
            expected: None,
            rel_floor: 0.1,
        }
    }

    pub fn expecting(mut self, k: usize) -> Self {
        self.expected = Some(k);
        self
    }
}

/// A peak power subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub frequency: f64,
    pub power: f64,
}

/// Detected peaks in increasing subcarrier order.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub exclusion: usize,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn detect_peaks(spectrum: &EchoSpectrum, settings: &DetectionSettings) -> Result<PeakSet> {
    let g = spectrum.power();
    let min_len = settings.exclusion + 3;
    if g.len() < min_len {
        return Err(invalid(format!(
            "spectrum of {} subcarriers is shorter than the detection window {min_len}",
            g.len()
        )));
    }
    let (threshold, floor) = match settings.expected {
        Some(_) => (f64::NEG_INFINITY, 0.0),
        None => {
            let strongest = g.iter().cloned().fold(0.0, f64::max);
            (settings.kappa * median(&g), settings.rel_floor * strongest)
        }
    };

    let last = g.len() - 1;
    let mut candidates: Vec<usize> = (0..g.len())
        .filter(|&m| {
            let left = m == 0 || g[m] > g[m - 1];
            let right = m == last || g[m] > g[m + 1];
            left && right && g[m] > threshold && g[m] >= floor
        })
        .collect();
    candidates.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));

    let mut kept: Vec<usize> = Vec::new();
    for m in candidates {
        if kept.iter().all(|&k| k.abs_diff(m) > settings.exclusion) {
            kept.push(m);
            if settings.expected.is_some_and(|k| kept.len() == k) {
                break;
            }
        }
    }
    kept.sort_unstable();
    let peaks = kept
        .into_iter()
        .map(|m| Peak {
            index: m,
            frequency: spectrum.plan.frequency(m),
            power: g[m],
        })
        .collect();
    Ok(PeakSet {
        peaks,
        exclusion: settings.exclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::design;
    use crate::echo::echo_closed_form;
    use crate::scene::{ArrayConfig, BandPlan, SweepPlan, Target};

    fn scene(targets: &[(f64, f64)], m: usize) -> (EchoSpectrum, crate::beamformer::SquintDesign) {
        let plan = BandPlan::new(220e9, 1e9, m).unwrap();
        let array = ArrayConfig::half_wavelength(128, 220e9, plan.center()).unwrap();
        let d = design(
            &SweepPlan::from_degrees(60.0, -60.0).unwrap(),
            &plan,
            &array,
        );
        let ts: Vec<Target> = targets
            .iter()
            .map(|&(r, th)| Target::new(r, f64::to_radians(th), &array).unwrap())
            .collect();
        (echo_closed_form(&ts, &d), d)
    }

    #[test]
    fn four_targets_four_peaks() {
        let (y, _) = scene(
            &[(50.0, 50.0), (120.0, 30.0), (200.0, -10.0), (80.0, -45.0)],
            2048,
        );
        let peaks = detect_peaks(&y, &DetectionSettings::for_window(20)).unwrap();
        assert_eq!(peaks.len(), 4);
        let idx: Vec<usize> = peaks.peaks.iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![118, 431, 1227, 1859]);
        let top = detect_peaks(&y, &DetectionSettings::for_window(20).expecting(4)).unwrap();
        assert_eq!(top.peaks, peaks.peaks);
    }

    #[test]
    fn silent_spectrum_has_no_peaks() {
        let plan = BandPlan::new(220e9, 1e9, 256).unwrap();
        let y = EchoSpectrum::zeros(plan);
        assert!(detect_peaks(&y, &DetectionSettings::for_window(20))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn lone_target_peak_at_smallest_beta() {
        let th = 12.34f64;
        let (y, d) = scene(&[(70.0, th)], 2048);
        let peaks = detect_peaks(&y, &DetectionSettings::for_window(20)).unwrap();
        assert_eq!(peaks.len(), 1);
        let oracle = (0..d.plan.len())
            .min_by(|&a, &b| {
                let ba = d.beta(d.plan.frequency(a), th.to_radians()).abs();
                let bb = d.beta(d.plan.frequency(b), th.to_radians()).abs();
                ba.total_cmp(&bb)
            })
            .unwrap();
        assert_eq!(peaks.peaks[0].index, oracle);
    }

    #[test]
    fn short_spectrum_rejected() {
        let plan = BandPlan::new(220e9, 1e9, 20).unwrap();
        let y = EchoSpectrum::zeros(plan);
        assert!(detect_peaks(&y, &DetectionSettings::for_window(20)).is_err());
    }

    #[test]
    fn kept_peaks_respect_exclusion() {
        let (y, _) = scene(&[(50.0, 20.0), (60.0, 18.0), (70.0, -30.0)], 2048);
        let s = DetectionSettings::for_window(20);
        let peaks = detect_peaks(&y, &s).unwrap();
        for w in peaks.peaks.windows(2) {
            assert!(w[1].index - w[0].index > s.exclusion);
        }
    }

    #[test]
    fn known_count_ignores_threshold() {
        let (y, _) = scene(&[(50.0, 20.0)], 2048);
        let mut s = DetectionSettings::for_window(20).expecting(3);
        s.kappa = 1e30;
        let peaks = detect_peaks(&y, &s).unwrap();
        assert_eq!(peaks.len(), 3);
        assert!(detect_peaks(
            &y,
            &DetectionSettings {
                kappa: 1e30,
                ..DetectionSettings::for_window(20)
            }
        )
        .unwrap()
        .is_empty());
    }
}
