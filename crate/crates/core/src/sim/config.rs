use serde::{Deserialize, Serialize};

use super::SimError;

/// Full simulator configuration. Every field has a default, so a config
/// file only needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Monte-Carlo realizations per ensemble.
    pub runs: usize,
    pub users: usize,
    /// Number of units in the distributed layout.
    pub units: usize,
    /// Radius of the centralized surface, meters.
    pub radius: f64,
    /// When set, each distributed unit gets radius `radius / sqrt(units)`
    /// so both layouts cover the same area.
    pub area_parity: bool,
    /// Unit radius used when `area_parity` is off. Defaults to `radius`.
    pub unit_radius: Option<f64>,
    pub wavelength: f64,
    /// Transmit power over noise power, dB.
    pub rho_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub region: RegionConfig,
    pub lua: LuaConfig,
    pub sweep: SweepConfig,
    pub response: ResponseConfig,
    pub validate: ValidateConfig,
}

/// Users and distributed units are dropped uniformly over a square of side
/// `side` centered on the origin; users sit at a height in `[z_min, z_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub side: f64,
    pub z_min: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LuaConfig {
    pub max_iter: usize,
    pub varrho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub radii: Vec<f64>,
    pub wavelengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseConfig {
    /// Radii of the response-versus-chi curves.
    pub radii: Vec<f64>,
    pub chi_max: f64,
    pub chi_points: usize,
    /// Fixed chi of the response-versus-radius curve.
    pub fixed_chi: f64,
    pub radius_max: f64,
    pub radius_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// User pairs checked against the disk quadrature.
    pub pairs: usize,
    pub quadrature_tolerance: f64,
    /// Scenarios scanned for user-unit links inside the Fraunhofer distance.
    pub coverage_scenarios: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            runs: 100,
            users: 10,
            units: 20,
            radius: 5.0,
            area_parity: true,
            unit_radius: None,
            wavelength: 0.05,
            rho_db: 100.0,
            noise_psd_dbm_hz: crate::rate::NOISE_PSD_DBM_PER_HZ,
            bandwidth_hz: 1.0,
            region: RegionConfig::default(),
            lua: LuaConfig::default(),
            sweep: SweepConfig::default(),
            response: ResponseConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            side: 1000.0,
            z_min: 50.0,
            z_max: 200.0,
        }
    }
}

impl Default for LuaConfig {
    fn default() -> Self {
        Self {
            max_iter: crate::assoc::DEFAULT_MAX_ITER,
            varrho: crate::assoc::DEFAULT_VARRHO,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            radii: vec![1.0, 5.0, 10.0, 50.0],
            wavelengths: vec![0.3, 0.05, 0.01],
        }
    }
}

impl Default for ResponseConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.5, 1.0, 2.0],
            chi_max: 0.2,
            chi_points: 401,
            fixed_chi: 0.05,
            radius_max: 10.0,
            radius_points: 401,
        }
    }
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            pairs: 16,
            quadrature_tolerance: 1e-6,
            coverage_scenarios: 10,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), SimError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Radius of each distributed unit.
    pub fn dlis_unit_radius(&self) -> f64 {
        if self.area_parity {
            self.radius / (self.units as f64).sqrt()
        } else {
            self.unit_radius.unwrap_or(self.radius)
        }
    }

    pub fn noise_power(&self) -> f64 {
        crate::rate::noise_power_watts(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    pub fn check(&self) -> Result<(), SimError> {
        if self.users == 0 {
            return Err(SimError::Config("users must be at least 1".into()));
        }
        if self.units == 0 {
            return Err(SimError::Config("units must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(SimError::Config("runs must be at least 1".into()));
        }
        positive("radius", self.radius)?;
        positive("wavelength", self.wavelength)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("region.side", self.region.side)?;
        positive("region.z_min", self.region.z_min)?;
        if !self.rho_db.is_finite() || !self.noise_psd_dbm_hz.is_finite() {
            return Err(SimError::Config("rho_db and noise_psd_dbm_hz must be finite".into()));
        }
        if !(self.region.z_max >= self.region.z_min && self.region.z_max.is_finite()) {
            return Err(SimError::Config(format!(
                "region.z_max ({}) must be finite and at least region.z_min ({})",
                self.region.z_max, self.region.z_min
            )));
        }
        if let Some(rd) = self.unit_radius {
            positive("unit_radius", rd)?;
            if self.area_parity {
                let parity = self.radius / (self.units as f64).sqrt();
                if (rd - parity).abs() > 1e-9 * parity {
                    return Err(SimError::Config(format!(
                        "unit_radius {rd} contradicts area parity, which requires {parity}"
                    )));
                }
            }
        }
        if self.lua.max_iter == 0 || !(self.lua.varrho > 0.0 && self.lua.varrho <= 1e-3) {
            return Err(SimError::Config("lua.max_iter must be >= 1 and lua.varrho in (0, 1e-3]".into()));
        }
        let grid_ok = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !grid_ok(&self.sweep.radii) || !grid_ok(&self.sweep.wavelengths) {
            return Err(SimError::Config("sweep grids must be nonempty with positive entries".into()));
        }
        let r = &self.response;
        if !grid_ok(&r.radii) || r.chi_points < 2 || r.radius_points < 2 {
            return Err(SimError::Config("response grids need positive radii and at least 2 points".into()));
        }
        positive("response.chi_max", r.chi_max)?;
        positive("response.radius_max", r.radius_max)?;
        if !(r.fixed_chi >= 0.0 && r.fixed_chi.is_finite()) {
            return Err(SimError::Config("response.fixed_chi must be non-negative".into()));
        }
        positive("validate.quadrature_tolerance", self.validate.quadrature_tolerance)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_check() {
        let cfg = SimConfig::default();
        cfg.check().unwrap();
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(SimConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn partial_file_overrides() {
        let cfg = SimConfig::from_toml("users = 5\n[region]\nz_max = 80.0\n").unwrap();
        assert_eq!(cfg.users, 5);
        assert_eq!(cfg.region.z_max, 80.0);
        assert_eq!(cfg.region.z_min, 50.0);
    }

    #[test]
    fn parity_radius() {
        let cfg = SimConfig {
            radius: 5.0,
            units: 20,
            ..SimConfig::default()
        };
        assert!((cfg.dlis_unit_radius() - 1.118_033_988_749_895).abs() < 1e-12);
        let off = SimConfig {
            area_parity: false,
            unit_radius: Some(2.0),
            ..cfg.clone()
        };
        assert_eq!(off.dlis_unit_radius(), 2.0);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "unknown_key = 1",
            "users = 0",
            "radius = -1.0",
            "unit_radius = 2.0",
            "[region]\nz_min = 100.0\nz_max = 50.0",
            "[sweep]\nradii = []",
            "[lua]\nvarrho = 0.5",
        ] {
            assert!(matches!(SimConfig::from_toml(text), Err(SimError::Config(_))), "{text}");
        }
        assert!(SimConfig::from_toml("area_parity = false\nunit_radius = 2.0").is_ok());
    }
}
