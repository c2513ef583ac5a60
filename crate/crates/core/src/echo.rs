//! Received echo spectrum under a squint design.
//!
//! With an all-ones probe and `w_r = w_t = w̃`, subcarrier `m` receives
//! `y_m = w̃ᴴ H_m (w̃ᴴ)ᵀ`. Substituting the PS/TTD settings collapses the
//! quadratic form to
//!
//! ```text
//! y_m = (1/N) Σ_k α_k e^{-j2π f_m 2 r_k / c} [sin(Nβ_k/2) / sin(β_k/2)]²
//! ```
//!
//! Both routes are implemented: the closed form for all real work, and the
//! quadratic form over explicit channel matrices as its oracle.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beamformer::{dirichlet, SquintDesign};
use crate::channel::{echo_channel, round_trip_phasor};
use crate::error::{invalid, Result};
use crate::scene::{BandPlan, Target};

/// One complex echo sample per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoSpectrum {
    pub plan: BandPlan,
    pub values: Vec<Complex64>,
}

impl EchoSpectrum {
    pub fn zeros(plan: BandPlan) -> Self {
        Self {
            plan,
            values: vec![Complex64::new(0.0, 0.0); plan.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Power spectrum `g_m = |y_m|`.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|y| y.norm()).collect()
    }

    /// Measured phases `arg y_m`.
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|y| y.arg()).collect()
    }

    pub fn peak_power(&self) -> f64 {
        self.values.iter().map(|y| y.norm()).fold(0.0, f64::max)
    }
}

pub fn echo_closed_form(targets: &[Target], design: &SquintDesign) -> EchoSpectrum {
    let plan = design.plan;
    let n = design.n_antennas();
    let inv_n = 1.0 / n as f64;
    let values = (0..plan.len())
        .map(|m| {
            let f = plan.frequency(m);
            targets
                .iter()
                .map(|t| {
                    let dk = dirichlet(design.beta(f, t.angle), n);
                    t.gain * round_trip_phasor(f, t.range) * (dk * dk * inv_n)
                })
                .sum()
        })
        .collect();
    EchoSpectrum { plan, values }
}

/// Quadratic form `w̃ᴴ H_m (w̃ᴴ)ᵀ` over explicit `N × N` channel matrices.
/// Cost is `O(M N²)`; meant for small arrays.
pub fn echo_matrix_form(targets: &[Target], design: &SquintDesign) -> EchoSpectrum {
    let plan = design.plan;
    let values = (0..plan.len())
        .map(|m| {
            let h = echo_channel(targets, &plan, &design.array, m);
            let wc: Vec<Complex64> = design.weights(m).iter().map(|w| w.conj()).collect();
            let mut y = Complex64::new(0.0, 0.0);
            for (j, wj) in wc.iter().enumerate() {
                let col: Complex64 = wc.iter().enumerate().map(|(i, wi)| wi * h[(i, j)]).sum();
                y += col * wj;
            }
            y
        })
        .collect();
    EchoSpectrum { plan, values }
}

/// Which signal power the SNR is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrReference {
    /// Strongest echo at one receive antenna after transmit beamforming,
    /// `N · max_k |α_k|²`.
    #[default]
    Antenna,
    /// Strongest per-element echo `max_k |α_k|²`, without any array gain.
    Element,
    /// Strongest noiseless subcarrier power `max_m |y_m|²` after beamforming.
    EchoPeak,
}

impl SnrReference {
    /// Reference power for a scene, taken over all its noiseless spectra so
    /// that every sweep of one acquisition shares the same scale.
    pub fn reference_power(
        &self,
        targets: &[Target],
        n_antennas: usize,
        spectra: &[&EchoSpectrum],
    ) -> f64 {
        let element = || {
            targets
                .iter()
                .map(|t| t.gain.norm_sqr())
                .fold(0.0, f64::max)
        };
        match self {
            SnrReference::Antenna => n_antennas as f64 * element(),
            SnrReference::Element => element(),
            SnrReference::EchoPeak => spectra
                .iter()
                .flat_map(|s| s.values.iter().map(|y| y.norm_sqr()))
                .fold(0.0, f64::max),
        }
    }
}

/// Additive complex Gaussian noise applied after beamforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub seed: u64,
    /// `None` disables noise entirely.
    pub snr_db: Option<f64>,
}

impl NoiseModel {
    pub fn new(sigma2: f64, seed: u64, snr_db: Option<f64>) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        Ok(Self {
            sigma2,
            seed,
            snr_db,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma2: 1.0,
            seed: 0,
            snr_db: None,
        }
    }

    /// Signal scale `s` giving `s² · reference_power / σ² = SNR`.
    pub fn signal_scale(&self, reference_power: f64) -> f64 {
        match self.snr_db {
            Some(db) if reference_power > 0.0 => {
                let snr = 10f64.powf(db / 10.0);
                (snr * self.sigma2 / reference_power).sqrt()
            }
            _ => 1.0,
        }
    }

    /// Deterministic generator for one noise stream under this seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Circularly symmetric draws with variance `σ²`.
    pub fn draw(&self, stream: u64, count: usize) -> Vec<Complex64> {
        let mut rng = self.rng(stream);
        let sd = (self.sigma2 / 2.0).sqrt();
        (0..count)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(sd * re, sd * im)
            })
            .collect()
    }
}

/// Noise stream id for one spectrum of one trial.
pub fn noise_stream(trial: u64, group: usize, sweep: usize) -> u64 {
    (trial << 24) | ((group as u64 & 0xff) << 16) | (sweep as u64 & 0xffff)
}

/// `y_m ← s·y_m + η_m` with `s` from [`NoiseModel::signal_scale`].
pub fn add_noise(
    spectrum: &EchoSpectrum,
    noise: &NoiseModel,
    reference_power: f64,
    stream: u64,
) -> EchoSpectrum {
    if noise.snr_db.is_none() {
        return spectrum.clone();
    }
    let s = noise.signal_scale(reference_power);
    let eta = noise.draw(stream, spectrum.len());
    let values = spectrum
        .values
        .iter()
        .zip(eta)
        .map(|(y, e)| y * s + e)
        .collect();
    EchoSpectrum {
        plan: spectrum.plan,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::{design, squint_angle};
    use crate::scene::{ArrayConfig, SweepPlan};
    use crate::SPEED_OF_LIGHT;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup(n: usize, m: usize, w: f64) -> SquintDesign {
        let plan = BandPlan::new(220e9, w, m).unwrap();
        let array = ArrayConfig::half_wavelength(n, 220e9, plan.center()).unwrap();
        design(
            &SweepPlan::from_degrees(60.0, -60.0).unwrap(),
            &plan,
            &array,
        )
    }

    fn rel_err(a: &EchoSpectrum, b: &EchoSpectrum) -> f64 {
        let num: f64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    fn wrap(x: f64) -> f64 {
        (x + PI).rem_euclid(2.0 * PI) - PI
    }

    #[test]
    fn aligned_target_gives_full_gain() {
        let d = setup(128, 2048, 10e9);
        for m in [3, 500, 1024, 2000] {
            let th = squint_angle(m, &d).unwrap();
            let t = Target::new(75.0, th, &d.array).unwrap();
            let y = echo_closed_form(&[t], &d).values[m];
            let expect = t.gain * 128.0 * round_trip_phasor(d.plan.frequency(m), 75.0);
            assert!((y - expect).norm() < 1e-9 * expect.norm());
        }
    }

    #[test]
    fn empty_scene_is_silent() {
        let d = setup(16, 64, 10e9);
        let y = echo_closed_form(&[], &d);
        assert!(y.values.iter().all(|v| v.norm() == 0.0));
        assert_eq!(y.len(), 65);
    }

    #[test]
    fn single_antenna_is_scalar_channel() {
        let d = setup(1, 32, 10e9);
        let arr = d.array;
        let ts = [
            Target::new(12.0, 0.3, &arr).unwrap(),
            Target::new(31.0, -0.8, &arr).unwrap(),
        ];
        let y = echo_matrix_form(&ts, &d);
        for (m, v) in y.values.iter().enumerate() {
            let f = d.plan.frequency(m);
            let expect: Complex64 = ts
                .iter()
                .map(|t| t.gain * round_trip_phasor(f, t.range))
                .sum();
            assert!((v - expect).norm() < 1e-12 * expect.norm());
        }
    }

    #[test]
    fn zero_gain_targets_are_silent() {
        let d = setup(8, 16, 10e9);
        let t = Target::with_gain(20.0, 0.2, Complex64::new(0.0, 0.0)).unwrap();
        assert!(echo_matrix_form(&[t], &d)
            .values
            .iter()
            .all(|v| v.norm() == 0.0));
        assert!(echo_closed_form(&[t], &d)
            .values
            .iter()
            .all(|v| v.norm() == 0.0));
    }

    #[test]
    fn peak_value_law() {
        for n in [64, 128, 256] {
            let d = setup(n, 2048, 10e9);
            let th = squint_angle(777, &d).unwrap();
            let t = Target::new(120.0, th, &d.array).unwrap();
            let g = echo_closed_form(&[t], &d).power();
            let peak = g.iter().cloned().fold(0.0, f64::max);
            let expect = t.gain.re * n as f64;
            assert!((peak - expect).abs() < 1e-3 * expect);
            assert_eq!(g.iter().position(|v| *v == peak), Some(777));
        }
    }

    #[test]
    fn phase_law_at_peak() {
        let d = setup(128, 2048, 10e9);
        let m = 1300;
        let th = squint_angle(m, &d).unwrap();
        let r = 87.123;
        let t = Target::new(r, th, &d.array).unwrap();
        let y = echo_closed_form(&[t], &d).values[m];
        let theory = -2.0 * PI * d.plan.frequency(m) * 2.0 * r / SPEED_OF_LIGHT;
        assert!(wrap(y.arg() - theory).abs() < 1e-3);
    }

    #[test]
    fn interference_bounded_by_sidelobe_envelope() {
        let d = setup(64, 1024, 10e9);
        let n = 64.0;
        let (m1, m2) = (300, 700);
        let t1 = Target::new(60.0, squint_angle(m1, &d).unwrap(), &d.array).unwrap();
        let t2 = Target::new(90.0, squint_angle(m2, &d).unwrap(), &d.array).unwrap();
        let sep = (t1.angle.sin() - t2.angle.sin()).abs();
        assert!(sep > 4.0 * 2.0 / n);
        let alone = echo_closed_form(&[t1], &d).values[m1];
        let both = echo_closed_form(&[t1, t2], &d).values[m1];
        let beta = d.beta(d.plan.frequency(m1), t2.angle);
        let bound = (t2.gain.norm() / t1.gain.norm()) / (n * (beta / 2.0).sin()).powi(2);
        let perturbation = (both - alone).norm() / alone.norm();
        assert!(perturbation <= bound, "{perturbation} > {bound}");
    }

    #[test]
    fn noise_is_deterministic() {
        let d = setup(16, 128, 10e9);
        let t = Target::new(30.0, 0.1, &d.array).unwrap();
        let y = echo_closed_form(&[t], &d);
        let noise = NoiseModel::new(1.0, 42, Some(10.0)).unwrap();
        let a = add_noise(&y, &noise, 1e-12, 7);
        let b = add_noise(&y, &noise, 1e-12, 7);
        assert_eq!(a, b);
        let c = add_noise(&y, &noise, 1e-12, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_flag_keeps_spectrum() {
        let d = setup(16, 128, 10e9);
        let t = Target::new(30.0, 0.1, &d.array).unwrap();
        let y = echo_closed_form(&[t], &d);
        assert_eq!(add_noise(&y, &NoiseModel::noiseless(), 1.0, 0), y);
    }

    #[test]
    fn noise_variance() {
        let noise = NoiseModel::new(2.5, 9, Some(0.0)).unwrap();
        let eta = noise.draw(3, 100_000);
        let var = eta.iter().map(|e| e.norm_sqr()).sum::<f64>() / eta.len() as f64;
        assert!((var - 2.5).abs() < 0.02 * 2.5, "{var}");
        let mean: Complex64 = eta.iter().sum::<Complex64>() / eta.len() as f64;
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn scale_sets_snr() {
        let noise = NoiseModel::new(1.0, 0, Some(20.0)).unwrap();
        let s = noise.signal_scale(4e-12);
        assert!((s * s * 4e-12 - 100.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn closed_form_matches_quadratic_form(
            n in 1usize..=32, m in 1usize..=64,
            w in 1e9f64..20e9,
            raw in prop::collection::vec((1.0f64..300.0, -1.2f64..1.2), 1..5),
        ) {
            let d = setup(n, m, w);
            let ts: Vec<Target> = raw.iter().map(|&(r, th)| Target::new(r, th, &d.array).unwrap()).collect();
            let closed = echo_closed_form(&ts, &d);
            let matrix = echo_matrix_form(&ts, &d);
            prop_assert!(rel_err(&closed, &matrix) < 1e-9);
        }
    }
}
