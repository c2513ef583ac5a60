//! Range ambiguity of phase ranging over a uniform subcarrier grid.
//!
//! A band plan with subcarrier spacing `W/M` measures range only modulo
//! `R_u = cM/(2W)`. Groups with different `M` and the same `W` wrap at
//! different distances, so a target's true range is the point where all
//! groups' candidate lattices `r_q + l·R_u,q` meet.
//!
//! All `R_u,q` are integer multiples of `c/(2W)`. Lattice arithmetic is done
//! on those integers, so exact coincidences are found with an integer LCM
//! and near-coincidences without floating-point drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::BandPlan;
use crate::SPEED_OF_LIGHT;

pub fn max_unambiguous_distance(plan: &BandPlan) -> f64 {
    SPEED_OF_LIGHT * plan.m() as f64 / (2.0 * plan.bandwidth)
}

/// Range resolution unit `c/(2W)` shared by all groups, or an error if the
/// groups disagree on `W`.
fn common_unit(plans: &[BandPlan]) -> Result<f64> {
    let first = plans
        .first()
        .ok_or_else(|| Error::InvalidConfig("no band plans given".into()))?;
    if let Some(p) = plans.iter().find(|p| p.bandwidth != first.bandwidth) {
        return Err(Error::Unsupported(format!(
            "groups with different bandwidths ({} Hz and {} Hz)",
            first.bandwidth, p.bandwidth
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * first.bandwidth))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Distance at which every group's lattice returns to zero simultaneously:
/// `(c/2W)·lcm(M_1, …, M_Q)`.
pub fn combined_unambiguous_distance(plans: &[BandPlan]) -> Result<f64> {
    let unit = common_unit(plans)?;
    let lcm = plans.iter().fold(1u128, |acc, p| {
        let m = p.m() as u128;
        acc / gcd(acc, m) * m
    });
    Ok(unit * lcm as f64)
}

/// Smallest positive distance `D` on the first group's lattice that lies
/// within `max_mismatch` meters of a lattice point of every other group.
///
/// A second target branch can masquerade as the true one at this distance
/// when the per-group peak errors reach the mismatch. Bounded above by
/// [`combined_unambiguous_distance`].
pub fn near_coincidence_distance(plans: &[BandPlan], max_mismatch: f64) -> Result<f64> {
    let unit = common_unit(plans)?;
    let ms: Vec<u128> = plans.iter().map(|p| p.m() as u128).collect();
    if ms.len() == 1 {
        return Ok(unit * ms[0] as f64);
    }
    let lcm = ms.iter().fold(1u128, |acc, &m| acc / gcd(acc, m) * m);
    let m1 = ms[0];
    let mut l = 1u128;
    while l * m1 <= lcm {
        let d = l * m1;
        let worst = ms[1..]
            .iter()
            .map(|&m| {
                let rem = d % m;
                rem.min(m - rem)
            })
            .max()
            .unwrap_or(0);
        if worst as f64 * unit <= max_mismatch {
            return Ok(d as f64 * unit);
        }
        l += 1;
    }
    Ok(lcm as f64 * unit)
}

/// Candidate ranges `r + l·R_u` in `[0, r_max]`.
pub fn candidates(principal: f64, unambiguous: f64, r_max: f64) -> Vec<f64> {
    let base = principal.rem_euclid(unambiguous);
    (0..)
        .map(|l| base + l as f64 * unambiguous)
        .take_while(|r| *r <= r_max)
        .collect()
}

/// One group's part in a resolved range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResolution {
    pub unambiguous: f64,
    pub principal: f64,
    /// Branch index `l_q` of the chosen candidate.
    pub branch: i64,
    /// Chosen candidate `r_q + l_q·R_u,q`.
    pub candidate: f64,
    /// Distance from the chosen candidate to the resolved range.
    pub residual: f64,
    /// Every candidate in `[0, r_sense_max]`.
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySolution {
    pub groups: Vec<GroupResolution>,
    pub range: f64,
    /// Largest distance from any group's candidate to `range`.
    pub residual: f64,
}

struct Fit {
    range: f64,
    residual: f64,
    branches: Vec<i64>,
}

/// Finds the range where every group has a candidate within `tol`.
///
/// `principals` holds `(r_q, R_u,q)` per group. The resolved range is the
/// midpoint of the chosen candidates, minimizing the largest distance to
/// them.
pub fn resolve(principals: &[(f64, f64)], r_sense_max: f64, tol: f64) -> Result<AmbiguitySolution> {
    let (p0, ru0) = *principals
        .first()
        .ok_or_else(|| Error::InvalidConfig("no ambiguity groups to resolve".into()))?;
    let base0 = p0.rem_euclid(ru0);
    let l_max = ((r_sense_max + tol - base0) / ru0).floor() as i64 + 1;

    let mut fits: Vec<Fit> = Vec::new();
    let mut best_miss = f64::INFINITY;
    for l0 in -1..=l_max {
        let c0 = base0 + l0 as f64 * ru0;
        let mut lo = c0;
        let mut hi = c0;
        let mut branches = vec![l0];
        for &(p, ru) in &principals[1..] {
            let base = p.rem_euclid(ru);
            let l = ((c0 - base) / ru).round() as i64;
            let c = base + l as f64 * ru;
            lo = lo.min(c);
            hi = hi.max(c);
            branches.push(l);
        }
        let range = 0.5 * (lo + hi);
        let residual = 0.5 * (hi - lo);
        if range < -tol || range > r_sense_max + tol {
            continue;
        }
        if residual < tol {
            fits.push(Fit {
                range,
                residual,
                branches,
            });
        } else {
            best_miss = best_miss.min(residual);
        }
    }

    fits.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let best = match fits.first() {
        Some(f) => f,
        None => {
            return Err(Error::UnresolvedAmbiguity {
                residual: best_miss,
                tolerance: tol,
            })
        }
    };
    if let Some(other) = fits[1..]
        .iter()
        .find(|f| (f.range - best.range).abs() > tol)
    {
        return Err(Error::InconsistentGroups {
            first: best.range,
            second: other.range,
        });
    }

    let range = best.range.clamp(0.0, r_sense_max);
    let groups = principals
        .iter()
        .zip(&best.branches)
        .map(|(&(p, ru), &l)| {
            let candidate = p.rem_euclid(ru) + l as f64 * ru;
            GroupResolution {
                unambiguous: ru,
                principal: p.rem_euclid(ru),
                branch: l,
                candidate,
                residual: (candidate - range).abs(),
                candidates: candidates(p, ru, r_sense_max),
            }
        })
        .collect();
    Ok(AmbiguitySolution {
        groups,
        range,
        residual: best.residual,
    })
}

/// Positions of the local maxima of a sampled curve reaching at least
/// `rel_height` of its maximum.
pub fn curve_peaks(curve: &[(f64, f64)], rel_height: f64) -> Vec<f64> {
    let top = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let n = curve.len();
    (0..n)
        .filter(|&i| {
            let v = curve[i].1;
            let left = i == 0 || v > curve[i - 1].1;
            let right = i + 1 == n || v >= curve[i + 1].1;
            left && right && v >= rel_height * top
        })
        .map(|i| curve[i].0)
        .collect()
}

/// Peaks of the first curve that every other curve also peaks at, within
/// `tol`. Cross-check for [`resolve`] from fully sampled score curves.
pub fn common_peaks(curves: &[Vec<(f64, f64)>], rel_height: f64, tol: f64) -> Vec<f64> {
    let peaks: Vec<Vec<f64>> = curves.iter().map(|c| curve_peaks(c, rel_height)).collect();
    let Some((first, rest)) = peaks.split_first() else {
        return Vec::new();
    };
    first
        .iter()
        .copied()
        .filter(|r| {
            rest.iter()
                .all(|ps| ps.iter().any(|q| (q - r).abs() <= tol))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plan(w: f64, m: usize) -> BandPlan {
        BandPlan::new(220e9, w, m).unwrap()
    }

    #[test]
    fn unambiguous_distance_examples() {
        assert_eq!(max_unambiguous_distance(&plan(4e9, 4096)), 153.6);
        assert!((max_unambiguous_distance(&plan(10e9, 2048)) - 30.72).abs() < 1e-12);
        let a = max_unambiguous_distance(&plan(3e9, 1000));
        let b = max_unambiguous_distance(&plan(3e9, 2000));
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn combined_distance_integer_lcm() {
        // lcm(4096, 3900) = 4096 * 975
        let d = combined_unambiguous_distance(&[plan(4e9, 4096), plan(4e9, 3900)]).unwrap();
        assert!((d - 0.0375 * 4096.0 * 975.0).abs() < 1e-6);
        // 2048 = 2^11 and 2515 = 5 * 503 are coprime
        let d = combined_unambiguous_distance(&[plan(10e9, 2048), plan(10e9, 2515)]).unwrap();
        assert!((d - 0.015 * 2048.0 * 2515.0).abs() < 1e-6);
        let single = combined_unambiguous_distance(&[plan(4e9, 4096)]).unwrap();
        assert_eq!(single, 153.6);
    }

    #[test]
    fn mixed_bandwidths_unsupported() {
        let r = combined_unambiguous_distance(&[plan(4e9, 4096), plan(5e9, 3900)]);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn near_coincidence_examples() {
        let g = [plan(10e9, 2048), plan(10e9, 2515)];
        // 0.015 m units; first l·2048 within 66 (1 m) and 33 (0.5 m) units of a 2515 multiple
        assert!((near_coincidence_distance(&g, 1.0).unwrap() - 829.44).abs() < 1e-9);
        assert!((near_coincidence_distance(&g, 0.5).unwrap() - 2150.4).abs() < 1e-9);
        let g = [plan(4e9, 4096), plan(4e9, 3900)];
        assert!((near_coincidence_distance(&g, 1.0).unwrap() - 3072.0).abs() < 1e-9);
        // zero mismatch falls back to the exact lattice
        let exact = combined_unambiguous_distance(&g).unwrap();
        assert!((near_coincidence_distance(&g, 0.0).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn candidates_of_single_group() {
        let c = candidates(86.4, 153.6, 500.0);
        assert_eq!(c.len(), 3);
        for (got, want) in c.iter().zip([86.4, 240.0, 393.6]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn resolves_500_m() {
        let ru1 = 153.6;
        let ru2 = 0.0375 * 3900.0;
        let s = resolve(&[(500.0 % ru1, ru1), (500.0 % ru2, ru2)], 1000.0, 0.5).unwrap();
        assert!((s.range - 500.0).abs() < 1e-9);
        assert_eq!(s.groups[0].branch, 3);
        assert_eq!(s.groups[1].branch, 3);
    }

    #[test]
    fn short_range_trivial() {
        let s = resolve(&[(12.0, 30.72), (12.0, 37.725)], 300.0, 0.5).unwrap();
        assert!((s.range - 12.0).abs() < 1e-12);
        assert!(s.groups.iter().all(|g| g.branch == 0));
    }

    #[test]
    fn inconsistent_principals_unresolved() {
        let r = resolve(&[(3.0, 30.72), (20.0, 37.725)], 40.0, 0.5);
        assert!(matches!(r, Err(Error::UnresolvedAmbiguity { .. })));
    }

    #[test]
    fn single_group_beyond_reach_inconsistent() {
        let r = resolve(&[(86.4, 153.6)], 500.0, 0.5);
        assert!(matches!(r, Err(Error::InconsistentGroups { .. })));
    }

    #[test]
    fn candidates_spaced_by_unambiguous_distance() {
        let c = candidates(3.3, 30.72, 1000.0);
        for w in c.windows(2) {
            assert!((w[1] - w[0] - 30.72).abs() < 1e-9);
        }
    }

    #[test]
    fn common_peaks_of_lattices() {
        let make = |ru: f64, r: f64| -> Vec<(f64, f64)> {
            (0..10_000)
                .map(|i| {
                    let x = i as f64 * 0.1;
                    let d = (x - r).rem_euclid(ru);
                    (x, (-(d.min(ru - d)).powi(2)).exp())
                })
                .collect()
        };
        let peaks = common_peaks(&[make(153.6, 500.0), make(146.25, 500.0)], 0.5, 0.5);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - 500.0).abs() < 0.1);
    }

    proptest! {
        #[test]
        fn brute_force_uniqueness(m1 in 5usize..40, m2 in 5usize..40, frac in 0.0f64..1.0) {
            prop_assume!(m1 != m2);
            let g = [plan(10e9, m1), plan(10e9, m2)];
            let whole = combined_unambiguous_distance(&g).unwrap();
            let unit = 0.015;
            // integer-unit lattice: exact principals, target anywhere below the whole distance
            let r = (frac * whole / unit).floor() * unit + 0.3 * unit;
            let ru1 = max_unambiguous_distance(&g[0]);
            let ru2 = max_unambiguous_distance(&g[1]);
            let tol = 0.2 * unit;
            let reach = near_coincidence_distance(&g, 2.0 * tol).unwrap();
            prop_assume!(reach - tol > r);
            let s = resolve(&[(r % ru1, ru1), (r % ru2, ru2)], reach - tol, tol).unwrap();
            prop_assert!((s.range - r).abs() < 1e-9);
        }

        #[test]
        fn small_perturbation_keeps_branch(r in 0.0f64..1500.0, d1 in -0.24f64..0.24, d2 in -0.24f64..0.24) {
            let ru1 = 153.6;
            let ru2 = 146.25;
            let exact = resolve(&[(r % ru1, ru1), (r % ru2, ru2)], 2000.0, 0.5).unwrap();
            let moved = resolve(&[((r + d1).rem_euclid(ru1), ru1), ((r + d2).rem_euclid(ru2), ru2)], 2000.0, 0.5).unwrap();
            prop_assert!((moved.range - exact.range).abs() < 0.5);
        }
    }
}
