use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{derived_seed, generate_scenario, LayoutKind};
use super::table::Table;
use super::{SimConfig, SimError};
use crate::channel::{
    effective_channel, effective_channel_quadrature_adaptive, lis_response, normalized_response, resolution_threshold,
    spatial_resolution, PhaseState,
};
use crate::geometry::{effective_distance, fraunhofer_distance, fraunhofer_valid, wavenumber, LisUnit, UserPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    /// Outside the model's validity range but not an error.
    Warn,
    Fail,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["check", "status", "measured", "limit", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.into(),
                c.status.to_string().into(),
                c.measured.into(),
                c.limit.into(),
                c.detail.clone().into(),
            ]);
        }
        t
    }

    fn push(&mut self, name: &'static str, ok: bool, measured: f64, limit: f64, detail: String) {
        self.checks.push(Check {
            name,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            measured,
            limit,
            detail,
        });
    }
}

/// Largest gap, in radians over the aperture, between the exact spherical
/// path phase `kappa |p - u|` and its plane-wave approximation
/// `kappa (d - p . u_hat)`.
pub fn phase_deviation(user: &UserPosition, unit: &LisUnit, wavelength: f64) -> f64 {
    const RINGS: usize = 24;
    const SPOKES: usize = 256;
    let kappa = wavenumber(wavelength);
    let d = effective_distance(user, unit);
    let (ux, uy, uz) = (user.x - unit.center_x, user.y - unit.center_y, user.z);
    let mut worst: f64 = 0.0;
    for i in 1..=RINGS {
        let r = unit.radius * i as f64 / RINGS as f64;
        for j in 0..SPOKES {
            let (s, c) = (2.0 * PI * j as f64 / SPOKES as f64).sin_cos();
            let (px, py) = (r * c, r * s);
            let exact = ((ux - px).powi(2) + (uy - py).powi(2) + uz * uz).sqrt();
            let planar = d - (px * ux + py * uy) / d;
            worst = worst.max(kappa * (exact - planar).abs());
        }
    }
    worst
}

/// Runs the closed-form and model-validity diagnostics on scenarios drawn
/// from `cfg`.
pub fn validate(cfg: &SimConfig) -> Result<ValidationReport, SimError> {
    cfg.check()?;
    let mut report = ValidationReport::default();
    let lambda = cfg.wavelength;
    let dlis_ok = cfg.units >= cfg.users;

    // Self-coupling equals the aperture area.
    let mut worst: f64 = 0.0;
    for r in [cfg.radius, cfg.dlis_unit_radius()] {
        let b = lis_response(r, lambda, 0.0)?;
        worst = worst.max((b / (PI * r * r) - 1.0).abs());
    }
    report.push("array_gain", worst <= 1e-12, worst, 1e-12, "relative error of B(chi=0) against pi R^2".into());

    // Closed form against brute-force integration over the disk.
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, u64::MAX));
    let mut worst: f64 = 0.0;
    let mut unresolved = 0;
    for i in 0..cfg.validate.pairs {
        let kind = if i % 2 == 1 && dlis_ok { LayoutKind::Dlis } else { LayoutKind::Clis };
        let s = generate_scenario(cfg, kind, i as u64)?;
        let unit = s.layout.units()[rng.gen_range(0..s.layout.units().len())];
        let (a, b) = if s.users.len() >= 2 {
            (s.users[0], s.users[1])
        } else {
            (s.users[0], s.users[0])
        };
        let phases = (
            PhaseState::new(rng.gen_range(-PI..PI)),
            PhaseState::new(rng.gen_range(-PI..PI)),
        );
        let closed = effective_channel(&a, &b, &unit, lambda, phases).value();
        let q = effective_channel_quadrature_adaptive(&a, &b, &unit, lambda, phases)?;
        if !q.resolved {
            unresolved += 1;
        }
        worst = worst.max((q.value - closed).norm() / closed.norm());
    }
    let tol = cfg.validate.quadrature_tolerance;
    report.push(
        "closed_form_vs_quadrature",
        worst <= tol && unresolved == 0,
        worst,
        tol,
        format!("{} pairs, {unresolved} unresolved quadratures", cfg.validate.pairs),
    );

    // Normalized response stays under the n-th extremum beyond chi_bar_n.
    let mut margin = f64::NEG_INFINITY;
    for n in 1..=5 {
        let chi_bar = spatial_resolution(cfg.radius, lambda, n)?;
        let thr = resolution_threshold(n)?;
        for i in 1..=2000 {
            let chi = chi_bar * (1.0 + 4.0 * i as f64 / 2000.0);
            margin = margin.max(normalized_response(cfg.radius, lambda, chi)?.abs() - thr);
        }
    }
    report.push(
        "spatial_resolution_envelope",
        margin < 0.0,
        margin,
        0.0,
        "max of |normalized response| minus threshold beyond chi_bar_n, n <= 5".into(),
    );

    // Plane-wave phase error: about pi/8 at the Fraunhofer distance, shrinking beyond.
    let s = generate_scenario(cfg, LayoutKind::Clis, 0)?;
    let unit = s.layout.units()[0];
    let df = fraunhofer_distance(lambda, unit.radius);
    let multiples = [0.5, 1.0, 2.0, 4.0, 8.0];
    let mut at_df: f64 = 0.0;
    let mut monotone = true;
    for u in &s.users {
        let d = effective_distance(u, &unit);
        let dev: Vec<f64> = multiples
            .iter()
            .map(|f| {
                let scale = f * df / d;
                let moved = UserPosition::new(u.x * scale, u.y * scale, u.z * scale).expect("scaled user stays above plane");
                phase_deviation(&moved, &unit, lambda)
            })
            .collect();
        monotone &= dev.windows(2).all(|w| w[1] < w[0]);
        at_df = at_df.max(dev[1]);
    }
    let limit = PI / 8.0 * 1.01;
    report.push(
        "planar_phase_model",
        monotone && at_df <= limit,
        at_df,
        limit,
        format!("max phase error at the Fraunhofer distance; decreasing over {multiples:?} x d_F: {monotone}"),
    );

    // Links inside the Fraunhofer distance in sampled scenarios.
    let (mut near, mut total) = (0usize, 0usize);
    for r in 0..cfg.validate.coverage_scenarios as u64 {
        let mut kinds = vec![LayoutKind::Clis];
        if dlis_ok {
            kinds.push(LayoutKind::Dlis);
        }
        for kind in kinds {
            let s = generate_scenario(cfg, kind, r)?;
            for unit in s.layout.units() {
                for u in &s.users {
                    total += 1;
                    if !fraunhofer_valid(lambda, unit.radius, effective_distance(u, unit)) {
                        near += 1;
                    }
                }
            }
        }
    }
    let fraction = if total == 0 { 0.0 } else { near as f64 / total as f64 };
    if near > 0 {
        log::warn!(
            "{near} of {total} sampled user-unit links lie inside the Fraunhofer distance {:.1} m",
            fraunhofer_distance(lambda, cfg.radius)
        );
    }
    report.checks.push(Check {
        name: "fraunhofer_coverage",
        status: if near > 0 { CheckStatus::Warn } else { CheckStatus::Pass },
        measured: fraction,
        limit: 0.0,
        detail: format!("{near} of {total} links inside 8 R^2 / lambda"),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_passes() {
        let r = validate(&SimConfig::default()).unwrap();
        assert!(r.passed(), "{}", r.table().to_csv());
        assert_eq!(r.table().len(), r.checks.len());
        // 8 R^2 / lambda is 4 km for the default 5 m surface at 5 cm.
        assert_eq!(r.get("fraunhofer_coverage").unwrap().status, CheckStatus::Warn);
    }

    #[test]
    fn small_aperture_is_far_field() {
        let cfg = SimConfig {
            radius: 0.5,
            wavelength: 0.3,
            ..SimConfig::default()
        };
        let r = validate(&cfg).unwrap();
        assert!(r.passed());
        assert_eq!(r.get("fraunhofer_coverage").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn near_field_config_warns() {
        let cfg = SimConfig {
            radius: 20.0,
            validate: crate::sim::config::ValidateConfig {
                pairs: 2,
                ..Default::default()
            },
            ..SimConfig::default()
        };
        let r = validate(&cfg).unwrap();
        let c = r.get("fraunhofer_coverage").unwrap();
        assert_eq!(c.status, CheckStatus::Warn);
        assert!(c.measured > 0.0);
    }

    #[test]
    fn phase_error_shrinks_with_distance() {
        let unit = LisUnit::centered(2.0).unwrap();
        let df = fraunhofer_distance(0.1, 2.0);
        let dir = [0.3, -0.5, (1.0 - 0.34f64).sqrt()];
        let dev: Vec<f64> = [0.25, 1.0, 4.0, 16.0]
            .iter()
            .map(|f| {
                let d = f * df;
                phase_deviation(&UserPosition::new(dir[0] * d, dir[1] * d, dir[2] * d).unwrap(), &unit, 0.1)
            })
            .collect();
        for w in dev.windows(2) {
            assert!(w[1] < w[0]);
        }
        // The quadratic term kappa R^2 / (2 d) equals pi / 8 at d_F.
        assert!((dev[1] - PI / 8.0).abs() < 0.01 * PI / 8.0, "{}", dev[1]);
    }
}
