//! Closed-form data for the rotating Kepler problem.
//!
//! Nothing here touches the integrator: every value is a formula or a scalar
//! root, so these functions can cross-check `flow` and `chords`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::PhasePoint;

/// Critical value of the rotating Kepler Hamiltonian.
pub const KEPLER_CRITICAL_VALUE: f64 = -1.5;

/// A `k:l` resonance between the Kepler motion and the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResonanceLabel {
    pub k: u64,
    pub l: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ResonanceLabel {
    /// Requires `k > l >= 1` coprime.
    pub fn new(k: u64, l: u64) -> Result<Self> {
        if l == 0 || k <= l || gcd(k, l) != 1 {
            return Err(Error::InvalidLabel { k, l });
        }
        Ok(Self { k, l })
    }

    /// Covering number `N = k - l` of the circular chord that degenerates.
    pub fn cover(&self) -> u64 {
        self.k - self.l
    }

    /// Labels with `k - l = n` and `k <= k_max`.
    pub fn with_cover(n: u64, k_max: u64) -> Vec<Self> {
        if n == 0 {
            return Vec::new();
        }
        (n + 1..=k_max)
            .filter_map(|k| Self::new(k, k - n).ok())
            .collect()
    }
}

/// `tau_{k,l} = -1/2 (k/l)^{2/3} - (l/k)^{1/3}`.
pub fn tau_kl(lbl: ResonanceLabel) -> f64 {
    tau_for_ratio(lbl.k, lbl.l)
}

/// The same formula without label validation; depends only on `k/l`.
pub fn tau_for_ratio(k: u64, l: u64) -> f64 {
    let ratio = k as f64 / l as f64;
    -0.5 * ratio.powf(2.0 / 3.0) - ratio.recip().cbrt()
}

/// Checks `2(k - l) | k (2(k - l) - 1)` in exact arithmetic.
pub fn doubly_symmetric_condition(lbl: ResonanceLabel) -> bool {
    let n = (lbl.k - lbl.l) as u128;
    let k = lbl.k as u128;
    (k * (2 * n - 1)).is_multiple_of(2 * n)
}

/// The direct circular orbit on one energy level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularData {
    pub tau: f64,
    pub r: f64,
    /// Start point `(r, 0, 0, -1/sqrt r)` on `Fix(rho0)`.
    pub point: PhasePoint,
    /// Hamiltonian time between consecutive `Fix(rho0)` hits.
    pub half_period: f64,
    /// Reeb length of that half period.
    pub reeb_half_length: f64,
}

impl CircularData {
    /// Angular velocity relative to the rotating frame.
    pub fn relative_frequency(&self) -> f64 {
        self.r.powf(-1.5) - 1.0
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    /// Duration of the `n`-fold covered chord.
    pub fn cover_duration(&self, n: u64) -> f64 {
        n as f64 * self.half_period
    }
}

fn level(r: f64) -> f64 {
    -0.5 / r - r.sqrt()
}

/// Radius of the direct circular orbit with energy `tau`.
pub fn circular_radius(tau: f64) -> Result<f64> {
    if !(tau < KEPLER_CRITICAL_VALUE) {
        return Err(Error::AboveCritical(tau));
    }
    // level is increasing on (0, 1) with level(1) = -3/2
    let mut lo = (-0.5 / tau).min(0.5);
    while level(lo) > tau {
        lo *= 0.5;
    }
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if level(mid) < tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Radius, start point, half relative period and its Reeb length.
pub fn circular_data(tau: f64) -> Result<CircularData> {
    let r = circular_radius(tau)?;
    let point = PhasePoint::new(r, 0.0, 0.0, -1.0 / r.sqrt());
    let half_period = PI / (r.powf(-1.5) - 1.0);
    Ok(CircularData {
        tau,
        r,
        point,
        half_period,
        reeb_half_length: half_period * (1.0 / r - r.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::make_system;

    #[test]
    fn labels_are_validated() {
        assert!(ResonanceLabel::new(3, 1).is_ok());
        assert!(ResonanceLabel::new(4, 2).is_err());
        assert!(ResonanceLabel::new(1, 1).is_err());
        assert!(ResonanceLabel::new(2, 3).is_err());
        assert!(ResonanceLabel::new(2, 0).is_err());
        let two: Vec<_> = ResonanceLabel::with_cover(2, 9).iter().map(|l| (l.k, l.l)).collect();
        assert_eq!(two, vec![(3, 1), (5, 3), (7, 5), (9, 7)]);
    }

    #[test]
    fn tau_values() {
        let t21 = tau_kl(ResonanceLabel::new(2, 1).unwrap());
        assert!((t21 + 2f64.powf(2.0 / 3.0)).abs() < 1e-14);
        let t31 = tau_kl(ResonanceLabel::new(3, 1).unwrap());
        assert!((t31 + 1.733_403_185_876_586_8).abs() < 1e-14);
        let far = tau_kl(ResonanceLabel::new(1003, 1001).unwrap());
        assert!(far > -1.51 && far < -1.5);
        let far = tau_for_ratio(1002, 1000);
        assert!((far + 1.500_000_665_483_551_9).abs() < 1e-13);
        assert_eq!(tau_for_ratio(4, 2), tau_for_ratio(2, 1));
    }

    #[test]
    fn tau_increases_with_k_at_fixed_cover() {
        for n in 1..5 {
            let taus: Vec<f64> = ResonanceLabel::with_cover(n, 60).into_iter().map(tau_kl).collect();
            assert!(taus.windows(2).all(|w| w[0] < w[1]));
            assert!(taus.iter().all(|&t| t < KEPLER_CRITICAL_VALUE));
        }
    }

    #[test]
    fn divisibility() {
        let c = |k, l| doubly_symmetric_condition(ResonanceLabel::new(k, l).unwrap());
        assert!(c(2, 1));
        assert!(!c(3, 1));
        assert!(c(4, 3));
        assert!(!c(5, 3));
    }

    #[test]
    fn circular_data_is_consistent() {
        let sys = make_system("rotating-kepler").unwrap();
        let mut last = 0.0;
        for tau in [-40.0, -10.0, -3.0, -2.5, -1.8, -1.6, -1.5001] {
            let c = circular_data(tau).unwrap();
            assert!(c.r > last && c.r < 1.0);
            last = c.r;
            assert!((sys.hamiltonian(&c.point) - tau).abs() < 1e-12);
            assert!(c.half_period > 0.0 && c.reeb_half_length > 0.0);
        }
        assert!(circular_data(-1.5).is_err());
        assert!(circular_data(0.0).is_err());
    }

    #[test]
    fn near_critical_expansion() {
        // level(1 - d) = -3/2 - 3/8 d^2 + O(d^3)
        let eps = 1e-9;
        let c = circular_data(-1.5 - eps).unwrap();
        let d = 1.0 - c.r;
        assert!((d - (8.0 * eps / 3.0).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn resonance_at_tau_kl() {
        for (k, l) in [(2, 1), (3, 1), (5, 3), (4, 1)] {
            let c = circular_data(tau_kl(ResonanceLabel::new(k, l).unwrap())).unwrap();
            let expected = (l as f64 / k as f64).powf(2.0 / 3.0);
            assert!((c.r - expected).abs() < 1e-7);
            let cover = c.cover_duration(k - l);
            assert!((cover - PI * l as f64).abs() < 1e-6);
        }
    }
}
