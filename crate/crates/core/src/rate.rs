//! Achievable uplink spectral efficiency with matched filtering.
//!
//! All rates are in bits/s/Hz. Interference from user `k'` at user `k` is
//! weighted by the squared normalized aperture response between them, so the
//! SINR of user `k` is
//!
//! ```text
//! p_k PL_k / (sigma^2 / (pi R^2) + sum_{k' != k} p_k' PL_k' Btilde(R, kappa, chi_kk')^2)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{effective_distance, pair_coupling, path_loss_unchecked, wavenumber, LisUnit, UserPosition};
use crate::specfun::jinc;

/// Thermal noise density used when powers are derived from a transmit-to-noise ratio.
pub const NOISE_PSD_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("at least one user is required")]
    NoUsers,
    #[error("power profile has {powers} entries for {users} users")]
    LengthMismatch { powers: usize, users: usize },
    #[error("user index {index} out of range for {users} users")]
    BadIndex { index: usize, users: usize },
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("assignment maps {assigned} users but there are {users}")]
    AssignmentLength { assigned: usize, users: usize },
    #[error("user {user} is assigned to unit {unit}, which does not exist")]
    BadUnit { user: usize, unit: usize },
}

fn positive(what: &'static str, value: f64) -> Result<(), RateError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RateError::NonPositive { what, value })
    }
}

/// Noise power in watts for a density in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_watts(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    10f64.powf((psd_dbm_per_hz - 30.0) / 10.0) * bandwidth_hz
}

/// Per-user transmit powers and the receiver noise variance, in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    p: Vec<f64>,
    sigma2: f64,
    rho_db: Option<f64>,
}

impl PowerProfile {
    pub fn new(p: Vec<f64>, sigma2: f64) -> Result<Self, RateError> {
        positive("noise variance", sigma2)?;
        for &pk in &p {
            positive("transmit power", pk)?;
        }
        Ok(Self {
            p,
            sigma2,
            rho_db: None,
        })
    }

    /// Equal powers for `users` users with `p_k / sigma^2 = 10^(rho_db / 10)`.
    pub fn from_rho_db(users: usize, rho_db: f64, sigma2: f64) -> Result<Self, RateError> {
        positive("noise variance", sigma2)?;
        let p = sigma2 * 10f64.powf(rho_db / 10.0);
        positive("transmit power", p)?;
        Ok(Self {
            p: vec![p; users],
            sigma2,
            rho_db: Some(rho_db),
        })
    }

    /// As [`PowerProfile::from_rho_db`] with noise at -174 dBm/Hz over 1 Hz.
    pub fn with_default_noise(users: usize, rho_db: f64) -> Result<Self, RateError> {
        Self::from_rho_db(users, rho_db, noise_power_watts(NOISE_PSD_DBM_PER_HZ, 1.0))
    }

    pub fn powers(&self) -> &[f64] {
        &self.p
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho_db(&self) -> Option<f64> {
        self.rho_db
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn check(&self, users: usize) -> Result<(), RateError> {
        if users == 0 {
            return Err(RateError::NoUsers);
        }
        if self.p.len() != users {
            return Err(RateError::LengthMismatch {
                powers: self.p.len(),
                users,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeReport {
    pub per_user: Vec<f64>,
    pub sum: f64,
    pub upper_bound_per_user: Vec<f64>,
}

impl SeReport {
    fn new(per_user: Vec<f64>, upper_bound_per_user: Vec<f64>) -> Self {
        let sum = per_user.iter().sum();
        Self {
            per_user,
            sum,
            upper_bound_per_user,
        }
    }

    pub fn bound_sum(&self) -> f64 {
        self.upper_bound_per_user.iter().sum()
    }
}

/// SE of user `k` served by `unit`, with every other user interfering.
fn se_at_unit(k: usize, unit: &LisUnit, users: &[UserPosition], wavelength: f64, powers: &PowerProfile) -> f64 {
    let kappa = wavenumber(wavelength);
    let pl = |u: &UserPosition| path_loss_unchecked(wavelength, effective_distance(u, unit));
    let signal = powers.p[k] * pl(&users[k]);
    let interference: f64 = users
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(j, u)| {
            let b = jinc(unit.radius * kappa * pair_coupling(&users[k], u, unit).chi);
            powers.p[j] * pl(u) * b * b
        })
        .sum();
    (1.0 + signal / (powers.sigma2 / unit.area() + interference)).log2()
}

fn bound_at_unit(k: usize, unit: &LisUnit, users: &[UserPosition], wavelength: f64, powers: &PowerProfile) -> f64 {
    let pl = path_loss_unchecked(wavelength, effective_distance(&users[k], unit));
    (1.0 + powers.p[k] / powers.sigma2 * unit.area() * pl).log2()
}

/// Per-user and sum SE of a centralized surface.
pub fn se_clis(
    users: &[UserPosition],
    lis: &LisUnit,
    wavelength: f64,
    powers: &PowerProfile,
) -> Result<SeReport, RateError> {
    powers.check(users.len())?;
    positive("wavelength", wavelength)?;
    let per_user = (0..users.len())
        .map(|k| se_at_unit(k, lis, users, wavelength, powers))
        .collect();
    let bound = (0..users.len())
        .map(|k| bound_at_unit(k, lis, users, wavelength, powers))
        .collect();
    Ok(SeReport::new(per_user, bound))
}

/// Interference-free SE, the limit of [`se_clis`] for large apertures or
/// short wavelengths.
pub fn se_clis_upper_bound(
    users: &[UserPosition],
    lis: &LisUnit,
    wavelength: f64,
    powers: &PowerProfile,
) -> Result<SeReport, RateError> {
    powers.check(users.len())?;
    positive("wavelength", wavelength)?;
    let bound: Vec<f64> = (0..users.len())
        .map(|k| bound_at_unit(k, lis, users, wavelength, powers))
        .collect();
    Ok(SeReport::new(bound.clone(), bound))
}

/// SE of user `k` if it is served by `unit` in a distributed layout.
pub fn se_dlis_unit(
    k: usize,
    unit: &LisUnit,
    users: &[UserPosition],
    wavelength: f64,
    powers: &PowerProfile,
) -> Result<f64, RateError> {
    powers.check(users.len())?;
    positive("wavelength", wavelength)?;
    if k >= users.len() {
        return Err(RateError::BadIndex {
            index: k,
            users: users.len(),
        });
    }
    Ok(se_at_unit(k, unit, users, wavelength, powers))
}

/// Per-user SE for a distributed layout where user `k` is served by
/// `units[assignment[k]]`.
pub fn se_dlis(
    users: &[UserPosition],
    units: &[LisUnit],
    assignment: &[usize],
    wavelength: f64,
    powers: &PowerProfile,
) -> Result<Vec<f64>, RateError> {
    powers.check(users.len())?;
    positive("wavelength", wavelength)?;
    if assignment.len() != users.len() {
        return Err(RateError::AssignmentLength {
            assigned: assignment.len(),
            users: users.len(),
        });
    }
    assignment
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let unit = units.get(m).ok_or(RateError::BadUnit { user: k, unit: m })?;
            Ok(se_at_unit(k, unit, users, wavelength, powers))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channel, PhaseState};
    use crate::geometry::path_loss;
    use crate::specfun::bessel_zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn scatter(rng: &mut ChaCha8Rng, k: usize) -> Vec<UserPosition> {
        (0..k)
            .map(|_| {
                UserPosition::new(
                    rng.gen_range(-500.0..500.0),
                    rng.gen_range(-500.0..500.0),
                    rng.gen_range(50.0..200.0),
                )
                .unwrap()
            })
            .collect()
    }

    /// Two users at equal distance whose pair coupling puts R kappa chi on the
    /// first zero of J1.
    fn zero_interference_pair(radius: f64, wavelength: f64, d: f64) -> [UserPosition; 2] {
        let chi = bessel_zero(1, 1).unwrap() / (radius * wavenumber(wavelength));
        // symmetric about the z axis: chi = 2 sin(theta)
        let s = chi / 2.0;
        let c = (1.0 - s * s).sqrt();
        [
            UserPosition::new(d * s, 0.0, d * c).unwrap(),
            UserPosition::new(-d * s, 0.0, d * c).unwrap(),
        ]
    }

    #[test]
    fn noise_conversion() {
        let w = noise_power_watts(-174.0, 1.0);
        assert!((w / 3.981_071_705_534_97e-21 - 1.0).abs() < 1e-12);
        let p = PowerProfile::with_default_noise(10, 100.0).unwrap();
        for &pk in p.powers() {
            assert!((pk / p.sigma2() / 1e10 - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.rho_db(), Some(100.0));
    }

    #[test]
    fn rejects_bad_input() {
        let lis = LisUnit::centered(1.0).unwrap();
        let p = PowerProfile::with_default_noise(2, 100.0).unwrap();
        let one = [UserPosition::new(0.0, 0.0, 10.0).unwrap()];
        assert!(matches!(se_clis(&one, &lis, 0.3, &p), Err(RateError::LengthMismatch { .. })));
        let empty = PowerProfile::with_default_noise(0, 100.0).unwrap();
        assert!(matches!(se_clis(&[], &lis, 0.3, &empty), Err(RateError::NoUsers)));
        let users = [UserPosition::new(0.0, 0.0, 10.0).unwrap(); 2];
        assert!(matches!(
            se_dlis_unit(2, &lis, &users, 0.3, &p),
            Err(RateError::BadIndex { .. })
        ));
        assert!(PowerProfile::new(vec![1.0, -1.0], 1.0).is_err());
        assert!(PowerProfile::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn single_user_equals_bound() {
        let lis = LisUnit::centered(5.0).unwrap();
        let u = [UserPosition::new(30.0, -40.0, 120.0).unwrap()];
        let p = PowerProfile::with_default_noise(1, 100.0).unwrap();
        let r = se_clis(&u, &lis, 0.3, &p).unwrap();
        let pl = path_loss(0.3, effective_distance(&u[0], &lis)).unwrap();
        let expected = (1.0 + 1e10 * 25.0 * PI * pl).log2();
        assert!((r.per_user[0] - expected).abs() < 1e-12);
        let b = se_clis_upper_bound(&u, &lis, 0.3, &p).unwrap();
        assert_eq!(r.per_user, b.per_user);
        let d = se_dlis_unit(0, &lis, &u, 0.3, &p).unwrap();
        assert_eq!(d, r.per_user[0]);
    }

    #[test]
    fn zero_interference_reaches_bound() {
        let lis = LisUnit::centered(2.0).unwrap();
        let users = zero_interference_pair(2.0, 0.3, 400.0);
        let p = PowerProfile::with_default_noise(2, 100.0).unwrap();
        let r = se_clis(&users, &lis, 0.3, &p).unwrap();
        for k in 0..2 {
            assert!((r.per_user[k] - r.upper_bound_per_user[k]).abs() < 1e-9);
            let d = se_dlis_unit(k, &lis, &users, 0.3, &p).unwrap();
            assert!((d - r.upper_bound_per_user[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn bound_scales_with_area() {
        let u = [UserPosition::new(0.0, 50.0, 100.0).unwrap()];
        let p = PowerProfile::with_default_noise(1, 100.0).unwrap();
        let snr = |r: f64| {
            let b = se_clis_upper_bound(&u, &LisUnit::centered(r).unwrap(), 0.3, &p).unwrap();
            2f64.powf(b.per_user[0]) - 1.0
        };
        assert!((snr(6.0) / snr(3.0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn bound_independent_of_other_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let users = scatter(&mut rng, 20);
        let lis = LisUnit::centered(5.0).unwrap();
        let b20 = se_clis_upper_bound(&users, &lis, 0.05, &PowerProfile::with_default_noise(20, 100.0).unwrap()).unwrap();
        let b10 = se_clis_upper_bound(&users[..10], &lis, 0.05, &PowerProfile::with_default_noise(10, 100.0).unwrap()).unwrap();
        assert_eq!(&b20.per_user[..10], &b10.per_user[..]);
    }

    #[test]
    fn matches_general_sinr_form() {
        // log2(1 + p_k PL_k S_kk^2 / (S_kk sigma^2 + sum p_k' PL_k' |S_kk'|^2))
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let users = scatter(&mut rng, 6);
        let lis = LisUnit::centered(1.5).unwrap();
        let wavelength = 0.3;
        let p = PowerProfile::with_default_noise(6, 95.0).unwrap();
        let phases: Vec<PhaseState> = (0..6).map(|_| PhaseState::new(rng.gen_range(-PI..PI))).collect();
        let r = se_clis(&users, &lis, wavelength, &p).unwrap();
        for k in 0..6 {
            let pl = |j: usize| path_loss(wavelength, effective_distance(&users[j], &lis)).unwrap();
            let s = |j: usize| effective_channel(&users[k], &users[j], &lis, wavelength, (phases[k], phases[j]));
            let skk = s(k).magnitude;
            let interf: f64 = (0..6)
                .filter(|&j| j != k)
                .map(|j| p.powers()[j] * pl(j) * s(j).magnitude.powi(2))
                .sum();
            let expected = (1.0 + p.powers()[k] * pl(k) * skk * skk / (skk * p.sigma2() + interf)).log2();
            assert!((r.per_user[k] - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn dlis_units_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let users = scatter(&mut rng, 4);
        let p = PowerProfile::with_default_noise(4, 100.0).unwrap();
        let a = LisUnit::new(100.0, 0.0, 1.0, 0).unwrap();
        let b = LisUnit::new(-300.0, 200.0, 1.0, 1).unwrap();
        let ra = se_dlis_unit(1, &a, &users, 0.05, &p).unwrap();
        let rb = se_dlis_unit(1, &b, &users, 0.05, &p).unwrap();
        assert_eq!(ra, se_dlis_unit(1, &a, &users, 0.05, &p).unwrap());
        assert_ne!(ra, rb);
        let all = se_dlis(&users, &[a, b], &[0, 1, 1, 0], 0.05, &p).unwrap();
        assert_eq!(all[1], rb);
        assert!(se_dlis(&users, &[a, b], &[0, 2, 1, 0], 0.05, &p).is_err());
    }

    #[test]
    fn dense_scenario_nearly_reaches_bound() {
        // K = 10, rho = 100 dB, lambda = 0.05, R = 50: interference negligible.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let users = scatter(&mut rng, 10);
        let lis = LisUnit::centered(50.0).unwrap();
        let p = PowerProfile::with_default_noise(10, 100.0).unwrap();
        let r = se_clis(&users, &lis, 0.05, &p).unwrap();
        for k in 0..10 {
            assert!(r.per_user[k] >= 0.99 * r.upper_bound_per_user[k]);
        }
    }

    proptest::proptest! {
        #[test]
        fn report_invariants(seed in 0u64..500, k in 1usize..12, radius in 0.5..20.0f64, lambda in 0.01..0.5f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let users = scatter(&mut rng, k);
            let lis = LisUnit::centered(radius).unwrap();
            let p = PowerProfile::with_default_noise(k, 100.0).unwrap();
            let r = se_clis(&users, &lis, lambda, &p).unwrap();
            let total: f64 = r.per_user.iter().sum();
            proptest::prop_assert!((r.sum - total).abs() < 1e-9);
            for (a, b) in r.per_user.iter().zip(&r.upper_bound_per_user) {
                proptest::prop_assert!(a.is_finite() && *a >= 0.0);
                proptest::prop_assert!(*a <= b + 1e-9);
            }
        }
    }
}
