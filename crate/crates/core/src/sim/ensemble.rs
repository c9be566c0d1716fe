use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::scenario::{derived_seed, draw_users, generate_scenario, LayoutKind};
use super::table::Table;
use super::{SimConfig, SimError};
use crate::assoc::{baseline_assign, lua, BaselinePolicy, LsfMatrix};
use crate::geometry::LisUnit;
use crate::rate::{se_clis, se_dlis, PowerProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Associator {
    Lua,
    Nearest,
    Random,
}

impl Associator {
    pub const ALL: [Associator; 3] = [Associator::Lua, Associator::Nearest, Associator::Random];

    pub fn name(self) -> &'static str {
        match self {
            Associator::Lua => "lua",
            Associator::Nearest => "nearest",
            Associator::Random => "random",
        }
    }
}

impl fmt::Display for Associator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Associator {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "lua" => Ok(Associator::Lua),
            "nearest" => Ok(Associator::Nearest),
            "random" => Ok(Associator::Random),
            other => Err(SimError::Config(format!(
                "unknown associator {other:?}, expected lua, nearest or random"
            ))),
        }
    }
}

/// Nearest-rank empirical quantile of an ascending sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Per-user SE samples of an ensemble and their empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// One vector of per-user SE per realization, in realization order.
    pub samples: Vec<Vec<f64>>,
    /// Ascending `(se, P[SE <= se])` pairs over all users and realizations.
    pub cdf: Vec<(f64, f64)>,
    /// Fifth percentile of the per-user SE.
    pub percentile_95_likely: f64,
    pub median: f64,
    pub mean: f64,
}

impl EnsembleResult {
    pub fn from_samples(samples: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let mut all: Vec<f64> = samples.iter().flatten().copied().collect();
        if all.is_empty() {
            return Err(SimError::Config("ensemble produced no samples".into()));
        }
        if let Some(bad) = all.iter().find(|v| !v.is_finite()) {
            return Err(SimError::Numeric(format!("non-finite SE sample {bad}")));
        }
        all.sort_by(f64::total_cmp);
        let n = all.len() as f64;
        let cdf = all.iter().enumerate().map(|(i, &v)| (v, (i + 1) as f64 / n)).collect();
        let mean = all.iter().sum::<f64>() / n;
        Ok(Self {
            percentile_95_likely: quantile(&all, 0.05),
            median: quantile(&all, 0.5),
            mean,
            cdf,
            samples,
        })
    }

    pub fn cdf_table(&self, layout: &str, associator: &str) -> Table {
        let mut t = Table::new(&["layout", "associator", "se", "probability"]);
        for &(v, p) in &self.cdf {
            t.push(vec![layout.into(), associator.into(), v.into(), p.into()]);
        }
        t
    }
}

fn par_realizations<T, F>(runs: usize, f: F) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(u64) -> Result<T, SimError> + Sync + Send,
{
    // Indexed parallel collect keeps realization order regardless of scheduling.
    #[cfg(feature = "parallel")]
    return (0..runs as u64).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..runs as u64).map(f).collect();
}

/// Associates one distributed realization and returns its per-user SE.
pub fn dlis_realization(cfg: &SimConfig, associator: Associator, realization: u64) -> Result<Vec<f64>, SimError> {
    let scenario = generate_scenario(cfg, LayoutKind::Dlis, realization)?;
    let units = scenario.layout.units();
    let lsf = LsfMatrix::from_geometry(&scenario.users, units, scenario.wavelength)?;
    let selection = match associator {
        Associator::Lua => lua(&lsf, cfg.lua.max_iter, cfg.lua.varrho)?.selection,
        Associator::Nearest => baseline_assign(&lsf, BaselinePolicy::Nearest)?,
        Associator::Random => baseline_assign(
            &lsf,
            BaselinePolicy::Random {
                seed: derived_seed(cfg.seed, realization),
            },
        )?,
    };
    let assignment = selection.assignment().expect("associators return binary selections");
    Ok(se_dlis(&scenario.users, units, &assignment, scenario.wavelength, &scenario.powers)?)
}

/// Per-user SE distribution of the distributed layout over `cfg.runs` realizations.
pub fn run_dlis_cdf(cfg: &SimConfig, associator: Associator) -> Result<EnsembleResult, SimError> {
    cfg.check()?;
    if cfg.units < cfg.users {
        return Err(SimError::Config(format!(
            "distributed layout needs at least as many units ({}) as users ({})",
            cfg.units, cfg.users
        )));
    }
    let samples = par_realizations(cfg.runs, |r| dlis_realization(cfg, associator, r))?;
    EnsembleResult::from_samples(samples)
}

/// Per-user SE distribution of the centralized surface on the same user drops.
pub fn run_clis_cdf(cfg: &SimConfig) -> Result<EnsembleResult, SimError> {
    cfg.check()?;
    let samples = par_realizations(cfg.runs, |r| {
        let s = generate_scenario(cfg, LayoutKind::Clis, r)?;
        Ok(se_clis(&s.users, &s.layout.units()[0], s.wavelength, &s.powers)?.per_user)
    })?;
    EnsembleResult::from_samples(samples)
}

/// CDF table for the centralized reference plus each requested associator.
pub fn dlis_cdf_tables(cfg: &SimConfig, associators: &[Associator]) -> Result<(Table, Table), SimError> {
    let mut cdf = Table::new(&["layout", "associator", "se", "probability"]);
    let mut summary = Table::new(&["layout", "associator", "users", "units", "unit_radius", "mean_se", "median_se", "se_95_likely"]);
    let mut add = |layout: &str, name: &str, radius: f64, units: usize, e: &EnsembleResult| {
        cdf.rows.extend(e.cdf_table(layout, name).rows);
        summary.push(vec![
            layout.into(),
            name.into(),
            cfg.users.into(),
            units.into(),
            radius.into(),
            e.mean.into(),
            e.median.into(),
            e.percentile_95_likely.into(),
        ]);
    };
    add("clis", "none", cfg.radius, 1, &run_clis_cdf(cfg)?);
    for &a in associators {
        add("dlis", a.name(), cfg.dlis_unit_radius(), cfg.units, &run_dlis_cdf(cfg, a)?);
    }
    Ok((cdf, summary))
}

/// Ensemble means of the centralized surface at one `(radius, wavelength)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub radius: f64,
    pub wavelength: f64,
    pub users: usize,
    pub mean_sum_se: f64,
    pub mean_bound: f64,
    pub mean_per_user_se: f64,
}

impl SweepPoint {
    /// Shortfall relative to the interference-free bound.
    pub fn relative_gap(&self) -> f64 {
        (self.mean_bound - self.mean_sum_se) / self.mean_bound
    }
}

/// Mean sum SE and its interference-free bound over the `sweep` grid. Every
/// grid point sees the same user drops.
pub fn run_clis_sweep(cfg: &SimConfig) -> Result<Vec<SweepPoint>, SimError> {
    cfg.check()?;
    let drops = par_realizations(cfg.runs, |r| Ok(draw_users(cfg, r, cfg.users)))?;
    let powers = PowerProfile::from_rho_db(cfg.users, cfg.rho_db, cfg.noise_power())?;
    let mut out = Vec::with_capacity(cfg.sweep.radii.len() * cfg.sweep.wavelengths.len());
    for &wavelength in &cfg.sweep.wavelengths {
        for &radius in &cfg.sweep.radii {
            let lis = LisUnit::centered(radius)?;
            let reports = par_realizations(drops.len(), |r| Ok(se_clis(&drops[r as usize], &lis, wavelength, &powers)?))?;
            let n = reports.len() as f64;
            let mean_sum_se = reports.iter().map(|r| r.sum).sum::<f64>() / n;
            let mean_bound = reports.iter().map(|r| r.bound_sum()).sum::<f64>() / n;
            out.push(SweepPoint {
                radius,
                wavelength,
                users: cfg.users,
                mean_sum_se,
                mean_bound,
                mean_per_user_se: mean_sum_se / cfg.users as f64,
            });
        }
    }
    Ok(out)
}

pub fn sweep_table(points: &[SweepPoint]) -> Table {
    let mut t = Table::new(&[
        "radius",
        "wavelength",
        "users",
        "mean_sum_se",
        "mean_bound",
        "mean_per_user_se",
        "relative_gap",
    ]);
    for p in points {
        t.push(vec![
            p.radius.into(),
            p.wavelength.into(),
            p.users.into(),
            p.mean_sum_se.into(),
            p.mean_bound.into(),
            p.mean_per_user_se.into(),
            p.relative_gap().into(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            runs: 12,
            users: 4,
            units: 8,
            ..SimConfig::default()
        }
    }

    #[test]
    fn quantile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.05), 5.0);
        assert_eq!(quantile(&v, 0.5), 50.0);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 100.0);
        assert_eq!(quantile(&[3.0], 0.05), 3.0);
    }

    #[test]
    fn cdf_is_monotone_step() {
        let e = run_dlis_cdf(&small(), Associator::Nearest).unwrap();
        assert_eq!(e.samples.len(), 12);
        assert_eq!(e.cdf.len(), 48);
        for w in e.cdf.windows(2) {
            assert!(w[0].0 <= w[1].0 && w[0].1 < w[1].1);
        }
        assert!((e.cdf.last().unwrap().1 - 1.0).abs() < 1e-15);
        assert!(e.cdf[0].1 > 0.0);
        let sorted: Vec<f64> = e.cdf.iter().map(|c| c.0).collect();
        assert_eq!(e.percentile_95_likely, quantile(&sorted, 0.05));
    }

    #[test]
    fn ensemble_is_repeatable() {
        let cfg = small();
        for a in Associator::ALL {
            assert_eq!(run_dlis_cdf(&cfg, a).unwrap(), run_dlis_cdf(&cfg, a).unwrap());
        }
    }

    #[test]
    fn realization_matches_ensemble_entry() {
        let cfg = small();
        let e = run_dlis_cdf(&cfg, Associator::Lua).unwrap();
        assert_eq!(e.samples[5], dlis_realization(&cfg, Associator::Lua, 5).unwrap());
    }

    #[test]
    fn sweep_bound_dominates() {
        let cfg = SimConfig {
            runs: 5,
            ..SimConfig::default()
        };
        let pts = run_clis_sweep(&cfg).unwrap();
        assert_eq!(pts.len(), 12);
        for p in &pts {
            assert!(p.mean_sum_se <= p.mean_bound + 1e-12);
            assert!(p.relative_gap() >= -1e-15);
        }
        let t = sweep_table(&pts);
        assert_eq!(t.len(), 12);
        assert!(t.to_csv().starts_with("radius,wavelength,users,"));
    }

    #[test]
    fn associator_names() {
        for a in Associator::ALL {
            assert_eq!(a.name().parse::<Associator>().unwrap(), a);
        }
        assert!("best".parse::<Associator>().is_err());
    }

    #[test]
    fn rejects_more_users_than_units() {
        let cfg = SimConfig {
            users: 9,
            units: 8,
            ..small()
        };
        assert!(matches!(run_dlis_cdf(&cfg, Associator::Lua), Err(SimError::Config(_))));
    }
}
