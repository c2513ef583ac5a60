//! Angle and range estimation from squinted echo spectra.
//!
//! YOLO reads everything from one sweep: the peak subcarrier gives the angle
//! through the squint map, and the phases of its `2M̈+1` neighbours give the
//! range. MYOLO repeats the sweep with slightly different sectors and ranges
//! each target from its peak-subcarrier phases alone.

mod myolo;
mod peaks;
mod yolo;

pub use myolo::{
    myolo_angle, myolo_associate, myolo_range, AngleAveraging, Track, TrackPoint, TrackSet,
};
pub use peaks::{detect_peaks, DetectionSettings, Peak, PeakSet};
pub use yolo::{
    angle_from_peak, sidelobe_score, yolo, yolo_range, Localization, PhaseScore, RangeEstimate,
    RangeSearch,
};

/// Full width of the main lobe of a sampled score curve where it stays above
/// `peak / √2`, in the curve's abscissa units.
///
/// The curve is treated as periodic; returns `None` if it never drops below
/// the level.
pub fn half_power_width(curve: &[(f64, f64)]) -> Option<f64> {
    let n = curve.len();
    if n < 3 {
        return None;
    }
    let (imax, &(_, peak)) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let level = peak / std::f64::consts::SQRT_2;
    let step = curve[1].0 - curve[0].0;
    let interp = |hi: f64, lo: f64| (hi - level) / (hi - lo);

    let mut right = None;
    for k in 1..n {
        let (a, b) = (curve[(imax + k - 1) % n].1, curve[(imax + k) % n].1);
        if b < level {
            right = Some((k - 1) as f64 + interp(a, b));
            break;
        }
    }
    let mut left = None;
    for k in 1..n {
        let (a, b) = (curve[(imax + n - k + 1) % n].1, curve[(imax + n - k) % n].1);
        if b < level {
            left = Some((k - 1) as f64 + interp(a, b));
            break;
        }
    }
    Some((left? + right?) * step)
}
