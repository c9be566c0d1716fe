use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SimConfig, SimError};
use crate::geometry::{LisUnit, UserPosition};
use crate::rate::PowerProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    Clis,
    Dlis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// One surface centered on the origin.
    Clis(LisUnit),
    /// Equal-radius units scattered over the region.
    Dlis(Vec<LisUnit>),
}

impl Layout {
    pub fn units(&self) -> &[LisUnit] {
        match self {
            Layout::Clis(u) => std::slice::from_ref(u),
            Layout::Dlis(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: Layout,
    pub users: Vec<UserPosition>,
    pub wavelength: f64,
    pub powers: PowerProfile,
    /// Master seed and realization index the scenario was drawn from.
    pub seed: u64,
    pub realization: u64,
}

/// Generator for realization `r`. Users come from stream `2r` and units from
/// stream `2r + 1`, each drawn one at a time, so a scenario with fewer users
/// or units is a prefix of one with more.
fn stream(seed: u64, realization: u64, offset: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * realization + offset);
    rng
}

/// Independent seed for per-realization randomness outside the geometry,
/// such as the random associator.
pub(crate) fn derived_seed(seed: u64, realization: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    rng.set_stream(realization);
    rng.gen()
}

pub fn draw_users(cfg: &SimConfig, realization: u64, count: usize) -> Vec<UserPosition> {
    let mut rng = stream(cfg.seed, realization, 0);
    let h = cfg.region.side / 2.0;
    let (z0, z1) = (cfg.region.z_min, cfg.region.z_max);
    (0..count)
        .map(|_| {
            let x = rng.gen_range(-h..h);
            let y = rng.gen_range(-h..h);
            let z = if z1 > z0 { rng.gen_range(z0..z1) } else { z0 };
            UserPosition::new(x, y, z).expect("height band is positive")
        })
        .collect()
}

pub fn draw_units(cfg: &SimConfig, realization: u64, count: usize, radius: f64) -> Vec<LisUnit> {
    let mut rng = stream(cfg.seed, realization, 1);
    let h = cfg.region.side / 2.0;
    (0..count)
        .map(|i| {
            let x = rng.gen_range(-h..h);
            let y = rng.gen_range(-h..h);
            LisUnit::new(x, y, radius, i).expect("radius checked by config")
        })
        .collect()
}

/// Draws realization `realization` of `cfg` for the requested layout.
pub fn generate_scenario(cfg: &SimConfig, kind: LayoutKind, realization: u64) -> Result<Scenario, SimError> {
    cfg.check()?;
    let layout = match kind {
        LayoutKind::Clis => Layout::Clis(LisUnit::centered(cfg.radius)?),
        LayoutKind::Dlis => {
            if cfg.units < cfg.users {
                return Err(SimError::Config(format!(
                    "distributed layout needs at least as many units ({}) as users ({})",
                    cfg.units, cfg.users
                )));
            }
            Layout::Dlis(draw_units(cfg, realization, cfg.units, cfg.dlis_unit_radius()))
        }
    };
    Ok(Scenario {
        layout,
        users: draw_users(cfg, realization, cfg.users),
        wavelength: cfg.wavelength,
        powers: PowerProfile::from_rho_db(cfg.users, cfg.rho_db, cfg.noise_power())?,
        seed: cfg.seed,
        realization,
    })
}
