//! Conventional time-division beam sweep.
//!
//! Every sweep steers the whole band toward one angle with narrowband
//! weights `a(θ_i)/√N` computed at the carrier, then sums the echo magnitude
//! over all subcarriers. Wide bands squint away from `θ_i` and flatten the
//! resulting angular profile.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::beamformer::dirichlet;
use crate::channel::{echo_channel, round_trip_phasor, steering};
use crate::scene::{ArrayConfig, BandPlan, Target};
use crate::SPEED_OF_LIGHT;

/// `g(θ_i) = Σ_m |(1/N) a^H(θ_i) H_m conj(a(θ_i))|` for every sweep angle,
/// with `a(θ_i)` evaluated at the array's carrier reference.
pub fn baseline_sweep(
    targets: &[Target],
    plan: &BandPlan,
    array: &ArrayConfig,
    angles: &[f64],
) -> Vec<f64> {
    let n = array.n_antennas;
    let freqs: Vec<f64> = (0..plan.len()).map(|m| plan.frequency(m)).collect();
    angles
        .par_iter()
        .map(|&theta| {
            let steer = array.carrier_ref * theta.sin();
            freqs
                .iter()
                .map(|&f| {
                    targets
                        .iter()
                        .map(|t| {
                            let psi = 2.0 * PI * array.spacing * (f * t.angle.sin() - steer)
                                / SPEED_OF_LIGHT;
                            let d = dirichlet(psi, n);
                            t.gain * round_trip_phasor(f, t.range) * (d * d / n as f64)
                        })
                        .sum::<Complex64>()
                        .norm()
                })
                .sum()
        })
        .collect()
}

/// The same profile through explicit channel matrices; reference path for
/// small arrays.
pub fn baseline_sweep_matrix(
    targets: &[Target],
    plan: &BandPlan,
    array: &ArrayConfig,
    angles: &[f64],
) -> Vec<f64> {
    let n = array.n_antennas as f64;
    let channels: Vec<_> = (0..plan.len())
        .map(|m| echo_channel(targets, plan, array, m))
        .collect();
    angles
        .iter()
        .map(|&theta| {
            let a = steering(array.carrier_ref, theta, array).entries;
            channels
                .iter()
                .map(|h| {
                    let mut y = Complex64::new(0.0, 0.0);
                    for j in 0..a.len() {
                        for i in 0..a.len() {
                            y += a[i].conj() * h[(i, j)] * a[j].conj();
                        }
                    }
                    (y / n).norm()
                })
                .sum()
        })
        .collect()
}

/// Ratio of the largest value to the median.
pub fn prominence(curve: &[f64]) -> f64 {
    let mut v = curve.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    };
    v[k - 1] / median
}
