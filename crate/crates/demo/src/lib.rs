//! Browser bindings for three interactive views: the aperture response
//! against chi, the centralized SE against radius, and LUA association on a
//! random distributed drop.

use lis_core::assoc::{baseline_assign, exact_bottleneck_assign, lua, BaselinePolicy, LsfMatrix};
use lis_core::channel::normalized_response;
use lis_core::sim::{config::SweepConfig, generate_scenario, run_clis_sweep, LayoutKind, SimConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Normalized response at `points` evenly spaced chi in `[0, chi_max]`.
#[wasm_bindgen]
pub fn response_curve(radius: f64, wavelength: f64, chi_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    if points < 2 {
        return Err(js_err("need at least 2 points"));
    }
    (0..points)
        .map(|i| normalized_response(radius, wavelength, chi_max * i as f64 / (points - 1) as f64).map_err(js_err))
        .collect()
}

/// Mean sum SE and its bound for radii `r_max * i / points`, `i = 1..=points`,
/// flattened as `[radius, se, bound]` triples.
#[wasm_bindgen]
pub fn clis_rates(
    users: usize,
    runs: usize,
    seed: u64,
    wavelength: f64,
    rho_db: f64,
    r_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsValue> {
    let cfg = SimConfig {
        users,
        runs,
        seed,
        rho_db,
        sweep: SweepConfig {
            radii: (1..=points).map(|i| r_max * i as f64 / points as f64).collect(),
            wavelengths: vec![wavelength],
        },
        ..SimConfig::default()
    };
    let pts = run_clis_sweep(&cfg).map_err(js_err)?;
    Ok(pts.iter().flat_map(|p| [p.radius, p.mean_sum_se, p.mean_bound]).collect())
}

/// One distributed drop with its LUA, nearest and exact associations.
#[wasm_bindgen]
pub struct Association {
    users: Vec<f64>,
    units: Vec<f64>,
    lua: Vec<u32>,
    nearest: Vec<u32>,
    objectives: Vec<f64>,
}

#[wasm_bindgen]
impl Association {
    /// `[x, y]` per user, meters.
    pub fn users(&self) -> Vec<f64> {
        self.users.clone()
    }

    /// `[x, y]` per unit, meters.
    pub fn units(&self) -> Vec<f64> {
        self.units.clone()
    }

    pub fn lua(&self) -> Vec<u32> {
        self.lua.clone()
    }

    pub fn nearest(&self) -> Vec<u32> {
        self.nearest.clone()
    }

    /// Smallest selected path loss in dB for LUA, nearest and the exact optimum.
    pub fn objectives_db(&self) -> Vec<f64> {
        self.objectives.iter().map(|v| 10.0 * v.log10()).collect()
    }
}

#[wasm_bindgen]
pub fn associate(users: usize, units: usize, seed: u64, wavelength: f64) -> Result<Association, JsValue> {
    let cfg = SimConfig {
        users,
        units,
        seed,
        wavelength,
        ..SimConfig::default()
    };
    let s = generate_scenario(&cfg, LayoutKind::Dlis, 0).map_err(js_err)?;
    let layout = s.layout.units();
    let lsf = LsfMatrix::from_geometry(&s.users, layout, wavelength).map_err(js_err)?;
    let out = lua(&lsf, cfg.lua.max_iter, cfg.lua.varrho).map_err(js_err)?;
    let near = baseline_assign(&lsf, BaselinePolicy::Nearest).map_err(js_err)?;
    let (_, exact) = exact_bottleneck_assign(&lsf).map_err(js_err)?;
    let idx = |v: Vec<usize>| v.into_iter().map(|c| c as u32).collect();
    Ok(Association {
        users: s.users.iter().flat_map(|u| [u.x, u.y]).collect(),
        units: layout.iter().flat_map(|u| [u.center_x, u.center_y]).collect(),
        lua: idx(out.selection.assignment().expect("binary")),
        nearest: idx(near.assignment().expect("binary")),
        objectives: vec![out.objective, lsf.min_selected(&near).unwrap_or(0.0), exact],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_starts_at_one() {
        let c = response_curve(1.0, 0.1, 0.2, 50).unwrap();
        assert_eq!(c.len(), 50);
        assert!((c[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rates_are_triples() {
        let r = clis_rates(4, 3, 1, 0.05, 100.0, 10.0, 5).unwrap();
        assert_eq!(r.len(), 15);
        for t in r.chunks(3) {
            assert!(t[1] <= t[2] + 1e-12);
        }
    }

    #[test]
    fn association_is_consistent() {
        let a = associate(5, 12, 3, 0.05).unwrap();
        assert_eq!(a.users().len(), 10);
        assert_eq!(a.units().len(), 24);
        assert_eq!(a.lua().len(), 5);
        let o = a.objectives_db();
        assert!(o[0] <= o[2] + 1e-9 && o[1] <= o[2] + 1e-9);
    }
}
