//! Scene geometry: the array, the OFDM band plan, targets and sweep plans.
//!
//! Angles are radians everywhere in the library; conversion from degrees
//! happens at the configuration boundary.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambiguity;
use crate::error::{invalid, Result};
use crate::SPEED_OF_LIGHT;

/// Uniform linear array along the y axis.
///
/// Antenna `i` sits at `(0, n·d)` with `n = -(N-1)/2 + i`. For even `N` the
/// indices are half-integers, which keeps the index set symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_antennas: usize,
    /// Element spacing `d` in meters.
    pub spacing: f64,
    /// Frequency (Hz) whose wavelength enters the path-gain model.
    pub carrier_ref: f64,
}

impl ArrayConfig {
    pub fn new(n_antennas: usize, spacing: f64, carrier_ref: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!(
                "antenna spacing must be positive, got {spacing}"
            )));
        }
        if !(carrier_ref > 0.0 && carrier_ref.is_finite()) {
            return Err(invalid(format!(
                "carrier reference must be positive, got {carrier_ref}"
            )));
        }
        Ok(Self {
            n_antennas,
            spacing,
            carrier_ref,
        })
    }

    /// Half-wavelength spacing at `spacing_freq`, gain reference at `carrier_ref`.
    pub fn half_wavelength(n_antennas: usize, spacing_freq: f64, carrier_ref: f64) -> Result<Self> {
        if !(spacing_freq > 0.0) {
            return Err(invalid("spacing reference frequency must be positive"));
        }
        Self::new(
            n_antennas,
            SPEED_OF_LIGHT / (2.0 * spacing_freq),
            carrier_ref,
        )
    }

    /// Position index of antenna `i` (0-based).
    #[inline]
    pub fn index(&self, i: usize) -> f64 {
        i as f64 - (self.n_antennas as f64 - 1.0) / 2.0
    }

    pub fn indices(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_antennas).map(move |i| self.index(i))
    }

    pub fn carrier_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_ref
    }

    /// Checks the spacing against the band: `d` may not exceed half the
    /// wavelength of the lowest subcarrier.
    pub fn validate_for(&self, band: &BandPlan) -> Result<()> {
        let limit = SPEED_OF_LIGHT / (2.0 * band.f0);
        if self.spacing > limit * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "antenna spacing {} m exceeds half wavelength {} m at f0",
                self.spacing, limit
            )));
        }
        Ok(())
    }
}

/// OFDM band: `M + 1` subcarriers from `f0` to `f0 + W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    /// Lowest subcarrier frequency in Hz.
    pub f0: f64,
    /// Bandwidth `W` in Hz.
    pub bandwidth: f64,
    /// `M`, so that there are `M + 1` subcarriers.
    pub n_subcarriers_minus_one: usize,
}

impl BandPlan {
    pub fn new(f0: f64, bandwidth: f64, m: usize) -> Result<Self> {
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(invalid(format!("f0 must be positive, got {f0}")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if m == 0 {
            return Err(invalid("band plan needs M >= 1"));
        }
        Ok(Self {
            f0,
            bandwidth,
            n_subcarriers_minus_one: m,
        })
    }

    /// Same `f0` and `W`, different subcarrier count.
    pub fn with_subcarriers(&self, m: usize) -> Result<Self> {
        Self::new(self.f0, self.bandwidth, m)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.n_subcarriers_minus_one
    }

    /// Number of subcarriers, `M + 1`.
    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.n_subcarriers_minus_one + 1
    }

    /// Subcarrier spacing `W / M`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.bandwidth / self.n_subcarriers_minus_one as f64
    }

    /// Baseband frequency of subcarrier `m`; exactly `W` at `m = M`.
    #[inline]
    pub fn baseband(&self, m: usize) -> f64 {
        self.bandwidth * (m as f64 / self.n_subcarriers_minus_one as f64)
    }

    #[inline]
    pub fn frequency(&self, m: usize) -> f64 {
        self.f0 + self.baseband(m)
    }

    pub fn center(&self) -> f64 {
        self.f0 + self.bandwidth / 2.0
    }

    pub fn max_frequency(&self) -> f64 {
        self.f0 + self.bandwidth
    }
}

/// All subcarrier frequencies `f_m = f0 + m·W/M`, `m = 0..=M`.
pub fn subcarrier_frequencies(plan: &BandPlan) -> Vec<f64> {
    (0..plan.len()).map(|m| plan.frequency(m)).collect()
}

/// Free-space two-way path gain `λ / (4π · 2r)`.
pub fn default_gain(range: f64, carrier_ref: f64) -> Result<Complex64> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(invalid(format!(
            "target range must be positive, got {range}"
        )));
    }
    if !(carrier_ref > 0.0) {
        return Err(invalid("carrier reference must be positive"));
    }
    let wavelength = SPEED_OF_LIGHT / carrier_ref;
    Ok(Complex64::new(wavelength / (8.0 * PI * range), 0.0))
}

/// Point target in polar coordinates relative to the array center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Range `r` in meters.
    pub range: f64,
    /// Angle `θ` in radians, measured from broadside.
    pub angle: f64,
    pub gain: Complex64,
}

impl Target {
    /// Target with the free-space gain for the array's carrier reference.
    pub fn new(range: f64, angle: f64, array: &ArrayConfig) -> Result<Self> {
        let gain = default_gain(range, array.carrier_ref)?;
        Self::with_gain(range, angle, gain)
    }

    pub fn with_gain(range: f64, angle: f64, gain: Complex64) -> Result<Self> {
        if !(range >= 0.0 && range.is_finite()) {
            return Err(invalid(format!(
                "target range must be non-negative, got {range}"
            )));
        }
        check_angle(angle, "target angle")?;
        Ok(Self { range, angle, gain })
    }

    pub fn x(&self) -> f64 {
        self.range * self.angle.cos()
    }

    pub fn y(&self) -> f64 {
        self.range * self.angle.sin()
    }
}

fn check_angle(angle: f64, what: &str) -> Result<()> {
    if !(angle.abs() < FRAC_PI_2) {
        return Err(invalid(format!(
            "{what} {angle} rad is outside (-pi/2, pi/2)"
        )));
    }
    Ok(())
}

/// Start and end of the squint sector: subcarrier 0 points at `start`,
/// subcarrier `M` at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub start: f64,
    pub end: f64,
}

impl SweepPlan {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        check_angle(start, "sweep start")?;
        check_angle(end, "sweep end")?;
        if start.sin() == end.sin() {
            return Err(invalid("sweep start and end must differ"));
        }
        Ok(Self { start, end })
    }

    /// Degenerate plan where every subcarrier points at `angle` (TTD beam focusing).
    pub fn focused(angle: f64) -> Result<Self> {
        check_angle(angle, "focus angle")?;
        Ok(Self {
            start: angle,
            end: angle,
        })
    }

    pub fn from_degrees(start_deg: f64, end_deg: f64) -> Result<Self> {
        Self::new(start_deg.to_radians(), end_deg.to_radians())
    }

    pub fn lower(&self) -> f64 {
        self.start.min(self.end)
    }

    pub fn upper(&self) -> f64 {
        self.start.max(self.end)
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.lower() && angle <= self.upper()
    }

    /// Whether this sweep's sector contains all of `other`'s.
    pub fn covers(&self, other: &SweepPlan) -> bool {
        self.lower() <= other.lower() && self.upper() >= other.upper()
    }
}

/// The `P` sweeps of a MYOLO acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyoloPlan {
    pub sweeps: Vec<SweepPlan>,
}

impl MyoloPlan {
    pub fn new(sweeps: Vec<SweepPlan>) -> Result<Self> {
        if sweeps.is_empty() {
            return Err(invalid("MYOLO plan needs at least one sweep"));
        }
        Ok(Self { sweeps })
    }

    /// Plan whose sweeps all contain the required sensing sector.
    pub fn covering(sweeps: Vec<SweepPlan>, sensing: &SweepPlan) -> Result<Self> {
        let plan = Self::new(sweeps)?;
        if let Some(p) = plan.sweeps.iter().position(|s| !s.covers(sensing)) {
            return Err(invalid(format!(
                "sweep {p} does not cover the sensing range"
            )));
        }
        Ok(plan)
    }

    /// `count` sweeps that widen `base` by `step` radians per sweep on both
    /// ends (60°/-60°, 61°/-61°, ... for a 1° step).
    pub fn widening(base: &SweepPlan, count: usize, step: f64) -> Result<Self> {
        let dir = if base.start >= base.end { 1.0 } else { -1.0 };
        let sweeps = (0..count)
            .map(|p| {
                let grow = dir * step * p as f64;
                SweepPlan::new(base.start + grow, base.end - grow)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::covering(sweeps, base)
    }

    pub fn len(&self) -> usize {
        self.sweeps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sweeps.is_empty()
    }
}

/// Band-plan groups that differ only in subcarrier count, used to extend
/// the unambiguous range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityPlan {
    pub groups: Vec<BandPlan>,
    /// Largest range the sensing task needs, meters.
    pub r_sense_max: f64,
    /// Acceptance tolerance for a common peak, meters.
    pub tolerance: f64,
}

impl AmbiguityPlan {
    pub fn new(groups: Vec<BandPlan>, r_sense_max: f64, tolerance: f64) -> Result<Self> {
        if groups.is_empty() {
            return Err(invalid("ambiguity plan needs at least one group"));
        }
        if !(r_sense_max > 0.0) || !(tolerance > 0.0) {
            return Err(invalid("sensing range and tolerance must be positive"));
        }
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                if a.m() == b.m() {
                    return Err(invalid(format!("duplicate subcarrier count M = {}", a.m())));
                }
            }
        }
        let plan = Self {
            groups,
            r_sense_max,
            tolerance,
        };
        let reach = plan.unambiguous_reach()?;
        if reach <= r_sense_max {
            return Err(invalid(format!(
                "groups are unambiguous only to {reach:.3} m, below the sensing range {r_sense_max} m"
            )));
        }
        Ok(plan)
    }

    /// Distance up to which the groups admit exactly one common peak at this
    /// tolerance. A lattice near-coincidence whose mismatch is below twice
    /// the tolerance would let a second branch fit.
    pub fn unambiguous_reach(&self) -> Result<f64> {
        if self.groups.len() == 1 {
            return Ok(ambiguity::max_unambiguous_distance(&self.groups[0]));
        }
        ambiguity::near_coincidence_distance(&self.groups, 2.0 * self.tolerance)
    }
}

/// Array, band and targets for one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub array: ArrayConfig,
    pub band: BandPlan,
    pub targets: Vec<Target>,
}

impl Scene {
    pub fn new(array: ArrayConfig, band: BandPlan, targets: Vec<Target>) -> Result<Self> {
        array.validate_for(&band)?;
        Ok(Self {
            array,
            band,
            targets,
        })
    }
}
