//! Matched-filter effective channel of a circular aperture.
//!
//! The closed form is `Sigma = A * B` with a pure phase `A` and the real,
//! signed aperture response `B(R, kappa, chi) = 2 pi R J1(R kappa chi) / (kappa chi)`.
//! [`effective_channel_quadrature`] integrates the conjugate channel product
//! over the disk directly and serves as the reference for the closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{effective_distance, pair_coupling, wavenumber, LisUnit, UserPosition};
use crate::specfun::{self, jinc, SpecfunError};

/// Smallest grid the quadrature accepts.
pub const MIN_GRID: usize = 64;
/// Largest grid the adaptive quadrature will try.
pub const MAX_GRID: usize = 1 << 14;
/// Nodes beyond the oscillation count needed for the periodic trapezoid rule
/// and Gauss-Legendre to reach machine precision.
const GRID_MARGIN: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("chi must be non-negative, got {0}")]
    NegativeChi(f64),
    #[error("quadrature grid must have at least {MIN_GRID} nodes, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

fn positive(what: &'static str, value: f64) -> Result<(), ChannelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ChannelError::NonPositive { what, value })
    }
}

/// Per-user random carrier phase, kept in `[-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState(f64);

impl PhaseState {
    /// Wraps `varphi` into `[-pi, pi]`.
    pub fn new(varphi: f64) -> Self {
        Self(wrap_phase(varphi))
    }

    pub fn varphi(self) -> f64 {
        self.0
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Closed-form effective channel between users `k` and `k'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannel {
    /// `|Sigma|`, m^2.
    pub magnitude: f64,
    /// Argument of the phase factor `A`, radians in `(-pi, pi]`.
    pub phase: f64,
    /// Signed aperture response `B`, m^2.
    pub response: f64,
}

impl EffectiveChannel {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.response, self.phase)
    }
}

/// `B(R, kappa, chi)`, equal to `pi R^2` at `chi = 0`.
pub fn lis_response(radius: f64, wavelength: f64, chi: f64) -> Result<f64, ChannelError> {
    Ok(PI * radius * radius * normalized_response(radius, wavelength, chi)?)
}

/// `B / (pi R^2) = 2 J1(R kappa chi) / (R kappa chi)`, in `[-1, 1]`.
pub fn normalized_response(radius: f64, wavelength: f64, chi: f64) -> Result<f64, ChannelError> {
    positive("radius", radius)?;
    positive("wavelength", wavelength)?;
    if chi.is_nan() || chi < 0.0 {
        return Err(ChannelError::NegativeChi(chi));
    }
    Ok(jinc(radius * wavenumber(wavelength) * chi))
}

pub fn effective_channel(
    user_k: &UserPosition,
    user_k2: &UserPosition,
    unit: &LisUnit,
    wavelength: f64,
    phases: (PhaseState, PhaseState),
) -> EffectiveChannel {
    let kappa = wavenumber(wavelength);
    let dk = effective_distance(user_k, unit);
    let dk2 = effective_distance(user_k2, unit);
    let phase = wrap_phase(kappa * (dk - dk2) + phases.0.varphi() - phases.1.varphi());
    let chi = pair_coupling(user_k, user_k2, unit).chi;
    let response = unit.area() * jinc(unit.radius * kappa * chi);
    EffectiveChannel {
        magnitude: response.abs(),
        phase,
        response,
    }
}

/// `chi_bar = j_{2,n} / (kappa R)`: beyond this separation the normalized
/// response stays below [`resolution_threshold`]`(n)`.
pub fn spatial_resolution(radius: f64, wavelength: f64, n: usize) -> Result<f64, ChannelError> {
    positive("radius", radius)?;
    positive("wavelength", wavelength)?;
    Ok(specfun::bessel_zero(2, n)? / (wavenumber(wavelength) * radius))
}

/// `2 |J1(j_{2,n})| / j_{2,n}`, the `n`-th extremum magnitude of the
/// normalized response. Half of it is [`specfun::extrema_envelope`], the
/// extremum of the un-normalized `J1(x)/x`.
pub fn resolution_threshold(n: usize) -> Result<f64, ChannelError> {
    Ok(specfun::normalized_extremum(n)?)
}

/// Result of integrating the channel product over the disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: Complex64,
    /// Nodes per dimension in the final grid.
    pub grid_n: usize,
    /// `false` when the grid was too coarse for the integrand's oscillation
    /// (or, for the adaptive variant, when refinement did not settle).
    pub resolved: bool,
}

/// Plane-wave phase model of one user seen from one unit, built from the
/// azimuth and elevation angles.
struct PlaneWave {
    /// `kappa d + varphi`
    offset: f64,
    cos_elev: f64,
    sin_az: f64,
    cos_az: f64,
}

impl PlaneWave {
    fn new(user: &UserPosition, unit: &LisUnit, kappa: f64, phase: PhaseState) -> Self {
        let dx = user.x - unit.center_x;
        let dy = user.y - unit.center_y;
        let d = (dx * dx + dy * dy + user.z * user.z).sqrt();
        // Azimuth of the projected arrival direction, measured from the y axis.
        let azimuth = dx.atan2(dy);
        let elevation = (user.z / d).asin();
        Self {
            offset: kappa * d + phase.varphi(),
            cos_elev: elevation.cos(),
            sin_az: azimuth.sin(),
            cos_az: azimuth.cos(),
        }
    }

    /// Signed distance of `(x, y)` from the zero-crossing line through the
    /// unit center, scaled by `cos(elevation)`: the path-length offset of the
    /// plane wave at that point.
    fn path_offset(&self, x: f64, y: f64) -> f64 {
        (y * self.cos_az - x * self.sin_az) * self.cos_elev
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `h_k^*(x, y) h_k'(x, y)` over the disk on a polar grid of
/// `grid_n` trapezoid nodes in angle and `grid_n / 2` Gauss-Legendre nodes in
/// radius.
pub fn effective_channel_quadrature(
    user_k: &UserPosition,
    user_k2: &UserPosition,
    unit: &LisUnit,
    wavelength: f64,
    phases: (PhaseState, PhaseState),
    grid_n: usize,
) -> Result<QuadratureEstimate, ChannelError> {
    positive("wavelength", wavelength)?;
    if grid_n < MIN_GRID {
        return Err(ChannelError::GridTooSmall(grid_n));
    }
    let kappa = wavenumber(wavelength);
    let wk = PlaneWave::new(user_k, unit, kappa, phases.0);
    let wk2 = PlaneWave::new(user_k2, unit, kappa, phases.1);
    let scale = oscillation_scale(&wk, &wk2, kappa, unit.radius);
    let resolved = grid_n as f64 >= scale + GRID_MARGIN;
    if !resolved {
        log::warn!(
            "quadrature grid {grid_n} under-resolves an integrand with oscillation scale {scale:.1}"
        );
    }
    let value = integrate(&wk, &wk2, kappa, unit.radius, grid_n);
    Ok(QuadratureEstimate {
        value,
        grid_n,
        resolved,
    })
}

/// Refines the polar grid until two successive grids agree to `1e-8`
/// relative (with an absolute floor of `1e-14 pi R^2`).
pub fn effective_channel_quadrature_adaptive(
    user_k: &UserPosition,
    user_k2: &UserPosition,
    unit: &LisUnit,
    wavelength: f64,
    phases: (PhaseState, PhaseState),
) -> Result<QuadratureEstimate, ChannelError> {
    positive("wavelength", wavelength)?;
    let kappa = wavenumber(wavelength);
    let wk = PlaneWave::new(user_k, unit, kappa, phases.0);
    let wk2 = PlaneWave::new(user_k2, unit, kappa, phases.1);
    let scale = oscillation_scale(&wk, &wk2, kappa, unit.radius);
    let mut n = ((scale + GRID_MARGIN) as usize).max(MIN_GRID).next_multiple_of(2);
    let floor = 1e-14 * unit.area();
    let mut prev = integrate(&wk, &wk2, kappa, unit.radius, n);
    loop {
        let next_n = (n + n / 2).next_multiple_of(2);
        if next_n > MAX_GRID {
            log::warn!("adaptive quadrature stopped at grid {n} without settling");
            return Ok(QuadratureEstimate {
                value: prev,
                grid_n: n,
                resolved: false,
            });
        }
        let next = integrate(&wk, &wk2, kappa, unit.radius, next_n);
        if (next - prev).norm() <= 1e-8 * next.norm() + floor {
            return Ok(QuadratureEstimate {
                value: next,
                grid_n: next_n,
                resolved: true,
            });
        }
        prev = next;
        n = next_n;
    }
}

/// `R |grad psi|` where `psi` is the position-dependent part of the phase
/// difference; the number of radians the integrand turns across the radius.
fn oscillation_scale(a: &PlaneWave, b: &PlaneWave, kappa: f64, radius: f64) -> f64 {
    let gx = -a.sin_az * a.cos_elev + b.sin_az * b.cos_elev;
    let gy = a.cos_az * a.cos_elev - b.cos_az * b.cos_elev;
    kappa * radius * gx.hypot(gy)
}

fn integrate(a: &PlaneWave, b: &PlaneWave, kappa: f64, radius: f64, grid_n: usize) -> Complex64 {
    let n_radial = (grid_n / 2).max(MIN_GRID / 2);
    let (nodes, weights) = gauss_legendre(n_radial);
    let angles: Vec<(f64, f64)> = (0..grid_n)
        .map(|i| (2.0 * PI * i as f64 / grid_n as f64).sin_cos())
        .collect();
    // h_k^* h_k' = exp(+j psi_k - j psi_k'), psi = kappa d + kappa * offset + varphi
    let constant = a.offset - b.offset;
    let mut total = Complex64::new(0.0, 0.0);
    for (&t, &w) in nodes.iter().zip(&weights) {
        let r = 0.5 * radius * (t + 1.0);
        let mut ring = Complex64::new(0.0, 0.0);
        for &(s, c) in &angles {
            let (x, y) = (r * c, r * s);
            let psi = kappa * (a.path_offset(x, y) - b.path_offset(x, y));
            let (im, re) = psi.sin_cos();
            ring += Complex64::new(re, im);
        }
        total += ring * (w * r);
    }
    // dr = R/2 dt, dtheta = 2 pi / grid_n
    let global = Complex64::from_polar(1.0, constant);
    total * global * (0.5 * radius * 2.0 * PI / grid_n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_zero, j1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_user(rng: &mut ChaCha8Rng, dist: f64) -> UserPosition {
        // uniform direction over the upper hemisphere
        let z: f64 = rng.gen_range(0.05..1.0);
        let az: f64 = rng.gen_range(-PI..PI);
        let rho = (1.0 - z * z).sqrt();
        UserPosition::new(dist * rho * az.cos(), dist * rho * az.sin(), dist * z).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((p - 2.0 / 19.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1001);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((s - 2.0 * 3.0_f64.sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn array_gain_at_zero_chi() {
        for &r in &[0.5, 1.0, 5.0, 50.0] {
            for &l in &[0.01, 0.3, 2.0] {
                let b = lis_response(r, l, 0.0).unwrap();
                assert!((b / (PI * r * r) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(lis_response(5.0, 0.3, 0.0).unwrap(), 25.0 * PI);
    }

    #[test]
    fn response_vanishes_at_j1_zero() {
        let r = 2.0;
        let l = 0.3;
        let chi = bessel_zero(1, 1).unwrap() / (r * wavenumber(l));
        assert!(lis_response(r, l, chi).unwrap().abs() < 1e-9);
    }

    #[test]
    fn series_branch_is_continuous() {
        let r = 1.0;
        let l = 2.0 * PI; // kappa = 1, so R kappa chi = chi
        for &x in &[0.5e-4, 0.99e-4, 1e-4, 1.01e-4, 2e-4] {
            let direct = 2.0 * PI * r * j1(x) / x;
            let b = lis_response(r, l, x).unwrap();
            assert!((b - direct).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(lis_response(1.0, 0.3, -0.1), Err(ChannelError::NegativeChi(_))));
        assert!(lis_response(0.0, 0.3, 0.1).is_err());
        assert!(normalized_response(1.0, -0.3, 0.1).is_err());
        let u = UserPosition::new(1.0, 2.0, 300.0).unwrap();
        let unit = LisUnit::centered(1.0).unwrap();
        let p = (PhaseState::default(), PhaseState::default());
        assert!(matches!(
            effective_channel_quadrature(&u, &u, &unit, 0.3, p, 32),
            Err(ChannelError::GridTooSmall(32))
        ));
    }

    #[test]
    fn normalized_extremum_at_first_j2_zero() {
        let r = 5.0;
        let l = 0.3;
        let kr = wavenumber(l) * r;
        let z = bessel_zero(2, 1).unwrap();
        let at = normalized_response(r, l, z / kr).unwrap();
        let expected = 2.0 * j1(z).abs() / z;
        assert!((at.abs() - expected).abs() < 1e-14);
        assert!((at.abs() - 0.132_279_49).abs() < 1e-7);
        // grid search around it agrees
        let best = (0..=20_000)
            .map(|i| 4.0 + 2.5 * i as f64 / 20_000.0)
            .map(|x| normalized_response(r, l, x / kr).unwrap().abs())
            .fold(0.0, f64::max);
        assert!((best - expected).abs() < 1e-8);
        assert!(normalized_response(r, l, 200.0 / kr).unwrap().abs() < 0.01);
        assert_eq!(normalized_response(r, l, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn self_channel_is_array_gain() {
        let unit = LisUnit::centered(3.0).unwrap();
        let u = UserPosition::new(40.0, -70.0, 500.0).unwrap();
        let p = PhaseState::new(1.2);
        let c = effective_channel(&u, &u, &unit, 0.1, (p, p));
        assert_eq!(c.phase, 0.0);
        assert!((c.response - 9.0 * PI).abs() < 1e-12);
        let q = effective_channel_quadrature(&u, &u, &unit, 0.1, (p, p), 64).unwrap();
        assert!((q.value - Complex64::new(9.0 * PI, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn swap_negates_phase() {
        let unit = LisUnit::new(3.0, 1.0, 2.0, 1).unwrap();
        let a = UserPosition::new(100.0, 20.0, 200.0).unwrap();
        let b = UserPosition::new(-50.0, 80.0, 150.0).unwrap();
        let pa = PhaseState::new(0.4);
        let pb = PhaseState::new(-2.9);
        let ab = effective_channel(&a, &b, &unit, 0.3, (pa, pb));
        let ba = effective_channel(&b, &a, &unit, 0.3, (pb, pa));
        assert_eq!(ab.response, ba.response);
        assert!((wrap_phase(ab.phase + ba.phase)).abs() < 1e-9);
        assert!((ab.magnitude - ab.response.abs()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature_r2() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let unit = LisUnit::centered(2.0).unwrap();
        for _ in 0..20 {
            let a = random_user(&mut rng, 300.0);
            let b = random_user(&mut rng, 450.0);
            let p = (
                PhaseState::new(rng.gen_range(-PI..PI)),
                PhaseState::new(rng.gen_range(-PI..PI)),
            );
            let closed = effective_channel(&a, &b, &unit, 0.3, p).value();
            let q = effective_channel_quadrature(&a, &b, &unit, 0.3, p, 2048).unwrap();
            assert!(q.resolved);
            let rel = (q.value - closed).norm() / closed.norm();
            assert!(rel < 1e-6, "rel err {rel:e}");
        }
    }

    #[test]
    fn quadrature_error_shrinks_with_grid() {
        // kappa R chi ~ 70: grids of 64 and 96 under-resolve, 256 converges.
        let unit = LisUnit::centered(2.0).unwrap();
        let a = UserPosition::new(300.0, 0.0, 400.0).unwrap();
        let b = UserPosition::new(-200.0, 100.0, 400.0).unwrap();
        let p = (PhaseState::default(), PhaseState::default());
        let closed = effective_channel(&a, &b, &unit, 0.1, p).value();
        let err = |n| {
            let q = effective_channel_quadrature(&a, &b, &unit, 0.1, p, n).unwrap();
            ((q.value - closed).norm() / unit.area(), q.resolved)
        };
        let (e64, r64) = err(64);
        let (e96, _) = err(96);
        let (e128, _) = err(128);
        let (e256, r256) = err(256);
        assert!(!r64 && r256);
        assert!(e64 > e96 && e96 > e128 && e128 > e256, "{e64} {e96} {e128} {e256}");
        assert!(e256 < 1e-12);
    }

    #[test]
    fn adaptive_quadrature_settles() {
        let unit = LisUnit::centered(4.0).unwrap();
        let a = UserPosition::new(800.0, 300.0, 900.0).unwrap();
        let b = UserPosition::new(-500.0, 100.0, 1200.0).unwrap();
        let p = (PhaseState::new(0.3), PhaseState::new(-1.0));
        let q = effective_channel_quadrature_adaptive(&a, &b, &unit, 0.05, p).unwrap();
        assert!(q.resolved);
        let closed = effective_channel(&a, &b, &unit, 0.05, p).value();
        assert!((q.value - closed).norm() / closed.norm() < 1e-6);
    }

    #[test]
    fn spatial_resolution_values() {
        let c1 = spatial_resolution(5.0, 0.3, 1).unwrap();
        assert!((c1 - 5.135_622_3 / (wavenumber(0.3) * 5.0)).abs() < 1e-9);
        assert!((c1 - 0.049_04).abs() < 1e-5);
        let c2 = spatial_resolution(10.0, 0.3, 1).unwrap();
        assert!((c1 / c2 - 2.0).abs() < 1e-14);
        assert!(spatial_resolution(5.0, 0.1, 1).unwrap() < c1);
    }

    #[test]
    fn threshold_holds_beyond_resolution() {
        let (r, l) = (5.0, 0.3);
        for n in 1..=10 {
            let bar = spatial_resolution(r, l, n).unwrap();
            let eta = resolution_threshold(n).unwrap();
            let steps = 20_000;
            for i in 1..=steps {
                let chi = bar + (2.0 - bar) * i as f64 / steps as f64;
                assert!(normalized_response(r, l, chi).unwrap().abs() < eta);
            }
        }
    }

    #[test]
    fn wrap_phase_range() {
        for &a in &[-10.0, -PI, 0.0, PI, 3.5, 100.0] {
            let w = wrap_phase(a);
            assert!(w > -PI - 1e-15 && w <= PI);
            assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
        assert!(PhaseState::new(7.0).varphi().abs() <= PI);
    }
}
