//! Phase-shifter plus true-time-delay beamforming with a controlled squint.
//!
//! Each antenna carries a phase shifter `e^{-j2πφ_n}` and a delay line whose
//! baseband response is `e^{-j2π f̃ t_n}`. Choosing
//!
//! ```text
//! φ_n = -f0 n d sinθ_start / c
//! t_n = -φ_n / W - (f0 + W) n d sinθ_end / (W c)
//! ```
//!
//! points subcarrier 0 at `θ_start` and subcarrier `M` at `θ_end`; every
//! subcarrier in between lands at the angle given by [`squint_sine`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::steering;
use crate::error::{Error, Result};
use crate::scene::{ArrayConfig, BandPlan, SweepPlan};
use crate::SPEED_OF_LIGHT;

/// Slack allowed on a sine value before it is reported as out of range.
pub const SINE_SLACK: f64 = 1e-12;

/// Below this `|sin(β/2)|` the Dirichlet ratio is evaluated by its limit.
pub const DIRICHLET_SINGULAR: f64 = 1e-12;

/// PS/TTD settings realizing one squint sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SquintDesign {
    /// Phase-shifter settings in cycles, unreduced.
    pub ps_phases: Vec<f64>,
    /// Signed delays in seconds.
    pub ttd_delays: Vec<f64>,
    pub plan: BandPlan,
    pub array: ArrayConfig,
    pub sweep: SweepPlan,
}

/// Squint angle of every subcarrier, radians.
#[derive(Debug, Clone, PartialEq)]
pub struct SquintMap {
    pub angles: Vec<f64>,
}

pub fn design(sweep: &SweepPlan, plan: &BandPlan, array: &ArrayConfig) -> SquintDesign {
    let d = array.spacing;
    let (f0, w) = (plan.f0, plan.bandwidth);
    let (s_start, s_end) = (sweep.start.sin(), sweep.end.sin());
    let mut ps_phases = Vec::with_capacity(array.n_antennas);
    let mut ttd_delays = Vec::with_capacity(array.n_antennas);
    for n in array.indices() {
        let phi = -f0 * n * d * s_start / SPEED_OF_LIGHT;
        let t = -phi / w - (f0 + w) * n * d * s_end / (w * SPEED_OF_LIGHT);
        ps_phases.push(phi);
        ttd_delays.push(t);
    }
    SquintDesign {
        ps_phases,
        ttd_delays,
        plan: *plan,
        array: *array,
        sweep: *sweep,
    }
}

impl SquintDesign {
    pub fn n_antennas(&self) -> usize {
        self.array.n_antennas
    }

    /// Beamforming vector `w̃` on subcarrier `m`.
    pub fn weights(&self, m: usize) -> Vec<Complex64> {
        self.weights_at_baseband(self.plan.baseband(m))
    }

    pub fn weights_at_baseband(&self, baseband: f64) -> Vec<Complex64> {
        let norm = 1.0 / (self.array.n_antennas as f64).sqrt();
        self.ps_phases
            .iter()
            .zip(&self.ttd_delays)
            .map(|(phi, t)| Complex64::from_polar(norm, -2.0 * PI * (phi + baseband * t)))
            .collect()
    }

    /// Delays shifted by a common offset so that none is negative.
    pub fn physical_delays(&self) -> Vec<f64> {
        let offset = self.ttd_delays.iter().fold(0.0_f64, |acc, t| acc.max(-t));
        self.ttd_delays.iter().map(|t| t + offset).collect()
    }

    /// Phase mismatch `β(f, θ)` between the beam on frequency `freq` and a
    /// plane wave from `angle`.
    pub fn beta(&self, freq: f64, angle: f64) -> f64 {
        let (f0, w) = (self.plan.f0, self.plan.bandwidth);
        let fb = freq - f0;
        let steer = (w - fb) * f0 * self.sweep.start.sin() + (w + f0) * fb * self.sweep.end.sin();
        2.0 * PI * self.array.spacing / (w * SPEED_OF_LIGHT) * (steer - w * freq * angle.sin())
    }

    /// Sine of the angle the beam on `freq` points at.
    pub fn squint_sine_at(&self, freq: f64) -> f64 {
        squint_sine(&self.plan, &self.sweep, freq)
    }
}

/// `sinθ(f) = [(W - f̃) f0 sinθ_start + (W + f0) f̃ sinθ_end] / (W f)`.
pub fn squint_sine(plan: &BandPlan, sweep: &SweepPlan, freq: f64) -> f64 {
    let (f0, w) = (plan.f0, plan.bandwidth);
    let fb = freq - f0;
    ((w - fb) * f0 * sweep.start.sin() + (w + f0) * fb * sweep.end.sin()) / (w * freq)
}

/// `arcsin` with a small tolerance for rounding just outside `[-1, 1]`.
pub(crate) fn checked_asin(value: f64, context: impl FnOnce() -> String) -> Result<f64> {
    if !(value.abs() <= 1.0 + SINE_SLACK) {
        return Err(Error::InvalidDesign {
            value,
            context: context(),
        });
    }
    Ok(value.clamp(-1.0, 1.0).asin())
}

pub fn squint_angle(m: usize, design: &SquintDesign) -> Result<f64> {
    if m > design.plan.m() {
        return Err(Error::InvalidConfig(format!(
            "subcarrier {m} out of range 0..={}",
            design.plan.m()
        )));
    }
    let s = design.squint_sine_at(design.plan.frequency(m));
    checked_asin(s, || format!("subcarrier {m}"))
}

pub fn squint_map(design: &SquintDesign) -> Result<SquintMap> {
    let angles = (0..design.plan.len())
        .map(|m| squint_angle(m, design))
        .collect::<Result<Vec<_>>>()?;
    Ok(SquintMap { angles })
}

/// Dirichlet ratio `sin(Nβ/2) / sin(β/2)`, i.e. `Σ_n e^{-jnβ}` over the
/// symmetric index set (a real number).
pub fn dirichlet(beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    let half = beta / 2.0;
    let s = half.sin();
    if s.abs() < DIRICHLET_SINGULAR {
        nf * (nf * half).cos() / half.cos()
    } else {
        (nf * half).sin() / s
    }
}

/// Array gain `|w̃ᴴ a_m(θ)|` from the closed Dirichlet form.
pub fn array_gain(design: &SquintDesign, m: usize, angle: f64) -> f64 {
    let beta = design.beta(design.plan.frequency(m), angle);
    let n = design.n_antennas();
    dirichlet(beta, n).abs() / (n as f64).sqrt()
}

/// Array gain from the explicit inner product of weights and steering vector.
pub fn array_gain_direct(design: &SquintDesign, m: usize, angle: f64) -> f64 {
    let w = design.weights(m);
    let a = steering(design.plan.frequency(m), angle, &design.array);
    w.iter()
        .zip(&a.entries)
        .map(|(wi, ai)| wi.conj() * ai)
        .sum::<Complex64>()
        .norm()
}
