use super::table::Table;
use super::{SimConfig, SimError};
use crate::channel::{lis_response, normalized_response};
use crate::geometry::wavenumber;
use crate::specfun::bessel_zero;

/// Aperture response tables at `cfg.wavelength`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurves {
    /// `radius, chi, response, abs_response, normalized_response` for each
    /// configured radius over `chi` in `[0, chi_max]`.
    pub versus_chi: Table,
    /// `chi, radius, response, normalized_response` at the fixed chi over
    /// radius in `(0, radius_max]`.
    pub versus_radius: Table,
}

pub fn run_response_curves(cfg: &SimConfig) -> Result<ResponseCurves, SimError> {
    cfg.check()?;
    let r = &cfg.response;
    let lambda = cfg.wavelength;
    let mut versus_chi = Table::new(&["radius", "chi", "response", "abs_response", "normalized_response"]);
    for &radius in &r.radii {
        for i in 0..r.chi_points {
            let chi = r.chi_max * i as f64 / (r.chi_points - 1) as f64;
            let b = lis_response(radius, lambda, chi)?;
            versus_chi.push(vec![
                radius.into(),
                chi.into(),
                b.into(),
                b.abs().into(),
                normalized_response(radius, lambda, chi)?.into(),
            ]);
        }
    }
    let mut versus_radius = Table::new(&["chi", "radius", "response", "normalized_response"]);
    for i in 1..=r.radius_points {
        let radius = r.radius_max * i as f64 / r.radius_points as f64;
        versus_radius.push(vec![
            r.fixed_chi.into(),
            radius.into(),
            lis_response(radius, lambda, r.fixed_chi)?.into(),
            normalized_response(radius, lambda, r.fixed_chi)?.into(),
        ]);
    }
    Ok(ResponseCurves {
        versus_chi,
        versus_radius,
    })
}

/// Radii at which the normalized response at fixed `chi` has its first
/// `count` interior extrema, `j_{2,n} / (kappa chi)`.
pub fn radius_extrema(chi: f64, wavelength: f64, count: usize) -> Result<Vec<f64>, SimError> {
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(SimError::Config(format!("chi must be positive, got {chi}")));
    }
    let kappa = wavenumber(wavelength);
    (1..=count)
        .map(|n| Ok(bessel_zero(2, n)? / (kappa * chi)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_chi_rows_are_array_gain() {
        let cfg = SimConfig::default();
        let c = run_response_curves(&cfg).unwrap();
        let radius = c.versus_chi.column("radius").unwrap();
        let chi = c.versus_chi.column("chi").unwrap();
        let resp = c.versus_chi.column("response").unwrap();
        let mut seen = 0;
        for i in 0..chi.len() {
            if chi[i] == 0.0 {
                assert!((resp[i] / (PI * radius[i] * radius[i]) - 1.0).abs() < 1e-12);
                seen += 1;
            }
        }
        assert_eq!(seen, cfg.response.radii.len());
        assert_eq!(c.versus_radius.len(), cfg.response.radius_points);
    }

    #[test]
    fn larger_aperture_decays_sooner() {
        // First chi at which |normalized| falls below 0.5, per radius.
        let cfg = SimConfig::default();
        let c = run_response_curves(&cfg).unwrap();
        let radius = c.versus_chi.column("radius").unwrap();
        let norm = c.versus_chi.column("normalized_response").unwrap();
        let chi = c.versus_chi.column("chi").unwrap();
        let half: Vec<f64> = cfg
            .response
            .radii
            .iter()
            .map(|&r| {
                (0..chi.len())
                    .find(|&i| radius[i] == r && norm[i].abs() < 0.5)
                    .map(|i| chi[i])
                    .unwrap()
            })
            .collect();
        for w in half.windows(2) {
            assert!(w[1] < w[0], "{half:?}");
        }
    }

    #[test]
    fn extrema_of_radius_sweep() {
        let cfg = SimConfig {
            response: crate::sim::config::ResponseConfig {
                radius_points: 20_000,
                ..Default::default()
            },
            ..SimConfig::default()
        };
        let c = run_response_curves(&cfg).unwrap();
        let radius = c.versus_radius.column("radius").unwrap();
        let norm = c.versus_radius.column("normalized_response").unwrap();
        let step = radius[1] - radius[0];
        let found: Vec<f64> = (1..norm.len() - 1)
            .filter(|&i| {
                let (a, b, d) = (norm[i - 1].abs(), norm[i].abs(), norm[i + 1].abs());
                b > a && b > d
            })
            .map(|i| radius[i])
            .collect();
        let predicted = radius_extrema(cfg.response.fixed_chi, cfg.wavelength, found.len()).unwrap();
        assert!(found.len() >= 3);
        for (f, p) in found.iter().zip(&predicted) {
            assert!((f - p).abs() <= step, "found {f}, predicted {p}");
        }
    }
}
