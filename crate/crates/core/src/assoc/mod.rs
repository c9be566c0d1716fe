//! User-to-unit association for distributed surfaces.
//!
//! The association problem ignores interference and maximizes the smallest
//! large-scale fading (path loss) over an injective user-to-unit map. Three
//! routes are provided:
//!
//! * [`exact_bottleneck_assign`], the exact optimum,
//! * [`lua`], the reweighted-l1 relaxation solved as a sequence of LPs and
//!   rounded to a feasible assignment,
//! * [`baseline_assign`], greedy nearest-unit and uniformly random maps.

mod bottleneck;
pub mod simplex;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{effective_distance, path_loss_unchecked, LisUnit, UserPosition};
use simplex::{LinearProgram, LpError};

/// Default `varrho` of the weight update.
pub const DEFAULT_VARRHO: f64 = 1e-6;
/// Default iteration cap of the reweighting loop.
pub const DEFAULT_MAX_ITER: usize = 20;
/// Early-exit tolerance on the largest entry change between iterations.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Relaxed entries at or below this level count as unselected when rounding.
pub const SUPPORT_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssocError {
    #[error("{users} users cannot be served injectively by {units} units")]
    Infeasible { users: usize, units: usize },
    #[error("large-scale fading entries must be positive and finite, got {0}")]
    BadEntry(f64),
    #[error("matrix rows have unequal lengths")]
    Ragged,
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("could not parse matrix text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// `K x M` matrix of path losses, row per user.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfMatrix {
    users: usize,
    units: usize,
    values: Vec<f64>,
}

impl LsfMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, AssocError> {
        let users = rows.len();
        let units = rows.first().map_or(0, Vec::len);
        if users == 0 || units == 0 {
            return Err(AssocError::Empty);
        }
        if rows.iter().any(|r| r.len() != units) {
            return Err(AssocError::Ragged);
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(AssocError::BadEntry(bad));
        }
        Ok(Self { users, units, values })
    }

    /// Path loss from every unit center to every user.
    pub fn from_geometry(users: &[UserPosition], units: &[LisUnit], wavelength: f64) -> Result<Self, AssocError> {
        Self::from_rows(
            users
                .iter()
                .map(|u| {
                    units
                        .iter()
                        .map(|m| path_loss_unchecked(wavelength, effective_distance(u, m)))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.values[k * self.units + m]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.units..(k + 1) * self.units]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, AssocError> {
        Self::from_rows(
            (0..self.users)
                .map(|k| self.row(k).iter().map(|v| v * factor).collect())
                .collect(),
        )
    }

    /// Smallest selected entry of a binary selection.
    pub fn min_selected(&self, selection: &SelectionMatrix) -> Option<f64> {
        let a = selection.assignment()?;
        Some(
            a.iter()
                .enumerate()
                .map(|(k, &m)| self.get(k, m))
                .fold(f64::INFINITY, f64::min),
        )
    }

    /// One line per user, values separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in 0..self.users {
            let line: Vec<String> = self.row(k).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses [`LsfMatrix::to_text`] output. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self, AssocError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| AssocError::Parse {
                        line: i + 1,
                        msg: format!("{tok:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    fn check_feasible(&self) -> Result<(), AssocError> {
        if self.users > self.units {
            Err(AssocError::Infeasible {
                users: self.users,
                units: self.units,
            })
        } else {
            Ok(())
        }
    }

    fn as_options(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.users)
            .map(|k| self.row(k).iter().map(|&v| Some(v)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Relaxed,
    Binary,
}

/// `K x M` association state.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrix {
    users: usize,
    units: usize,
    s: Vec<f64>,
    mode: SelectionMode,
}

impl SelectionMatrix {
    /// Binary selection serving user `k` with unit `assignment[k]`.
    pub fn from_assignment(units: usize, assignment: &[usize]) -> Self {
        let users = assignment.len();
        let mut s = vec![0.0; users * units];
        for (k, &m) in assignment.iter().enumerate() {
            s[k * units + m] = 1.0;
        }
        Self {
            users,
            units,
            s,
            mode: SelectionMode::Binary,
        }
    }

    fn relaxed(users: usize, units: usize, s: Vec<f64>) -> Self {
        Self {
            users,
            units,
            s,
            mode: SelectionMode::Relaxed,
        }
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.s[k * self.units + m]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.s[k * self.units..(k + 1) * self.units]
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Serving unit per user for a binary selection.
    pub fn assignment(&self) -> Option<Vec<usize>> {
        if self.mode != SelectionMode::Binary {
            return None;
        }
        (0..self.users)
            .map(|k| self.row(k).iter().position(|&v| v == 1.0))
            .collect()
    }

    /// Each row has exactly one 1 and each column at most one; all else 0.
    pub fn is_feasible_binary(&self) -> bool {
        if self.mode != SelectionMode::Binary || self.s.iter().any(|&v| v != 0.0 && v != 1.0) {
            return false;
        }
        let rows_ok = (0..self.users).all(|k| self.row(k).iter().filter(|&&v| v == 1.0).count() == 1);
        let cols_ok = (0..self.units).all(|m| (0..self.users).filter(|&k| self.get(k, m) == 1.0).count() <= 1);
        rows_ok && cols_ok
    }
}

/// Reweighting coefficients `omega = 1 / (s + varrho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    omega: Vec<f64>,
    varrho: f64,
}

impl WeightMatrix {
    pub fn ones(users: usize, units: usize, varrho: f64) -> Self {
        Self {
            omega: vec![1.0; users * units],
            varrho,
        }
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    pub fn values(&self) -> &[f64] {
        &self.omega
    }

    pub fn update(&mut self, relaxed: &SelectionMatrix) {
        for (w, &s) in self.omega.iter_mut().zip(&relaxed.s) {
            *w = 1.0 / (s + self.varrho);
        }
    }
}

/// Exact max-min assignment of users to distinct units.
pub fn exact_bottleneck_assign(lsf: &LsfMatrix) -> Result<(SelectionMatrix, f64), AssocError> {
    lsf.check_feasible()?;
    let (assignment, objective) = bottleneck::bottleneck(&lsf.as_options(), lsf.units).ok_or(AssocError::Infeasible {
        users: lsf.users,
        units: lsf.units,
    })?;
    Ok((SelectionMatrix::from_assignment(lsf.units, &assignment), objective))
}

/// One convex subproblem of the reweighting loop:
///
/// ```text
/// maximize t
///   s.t.  sum_m omega_km PL_km s_km >= t     for every user k
///         sum_m omega_km s_km       = 1      for every user k
///         sum_k omega_km s_km      <= 1      for every unit m
///         0 <= s_km <= 1
/// ```
///
/// Solved in the scaled variables `x = omega * s`, where the weights only
/// enter through the upper bounds `x <= omega`, with the path losses
/// normalized by their maximum. The returned selection is the optimizer
/// that, with `t` held at its optimum, maximizes the sum over users of
/// `sum_m x_km PL_km / max_m PL_km`.
pub fn lp_subproblem(lsf: &LsfMatrix, weights: &WeightMatrix) -> Result<(SelectionMatrix, f64), AssocError> {
    let (k, m) = (lsf.users, lsf.units);
    if weights.omega.len() != k * m {
        return Err(AssocError::Parameter(format!(
            "weight matrix has {} entries for a {k}x{m} problem",
            weights.omega.len()
        )));
    }
    if let Some(&w) = weights.omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(AssocError::Parameter(format!("weights must be positive, got {w}")));
    }
    let scale = lsf.values.iter().copied().fold(0.0, f64::max);
    let n = k * m + 1;
    let t_col = k * m;
    let mut objective = vec![0.0; n];
    objective[t_col] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    for user in 0..k {
        let mut row = vec![0.0; n];
        for unit in 0..m {
            row[user * m + unit] = -lsf.get(user, unit) / scale;
        }
        row[t_col] = 1.0;
        lp.add_le(row, 0.0)?;
    }
    for user in 0..k {
        let mut row = vec![0.0; n];
        row[user * m..(user + 1) * m].fill(1.0);
        lp.add_eq(row, 1.0)?;
    }
    for unit in 0..m {
        let mut row = vec![0.0; n];
        for user in 0..k {
            row[user * m + unit] = 1.0;
        }
        lp.add_le(row, 1.0)?;
    }
    // x <= 1 already follows from the row equality.
    for (idx, &w) in weights.omega.iter().enumerate() {
        if w < 1.0 {
            let mut row = vec![0.0; n];
            row[idx] = 1.0;
            lp.add_le(row, w)?;
        }
    }
    let first = lp.solve()?;
    let t = first.x[t_col];
    // Only the worst user binds t, so the optimal face is large and the
    // other users' mass is otherwise placed arbitrarily. Among optimizers,
    // prefer mass on each user's strongest units.
    let mut row = vec![0.0; n];
    row[t_col] = -1.0;
    lp.add_le(row, -(t - 1e-9 * t.abs()))?;
    let mut secondary = vec![0.0; n];
    for user in 0..k {
        let best = lsf.row(user).iter().copied().fold(0.0, f64::max);
        for unit in 0..m {
            secondary[user * m + unit] = lsf.get(user, unit) / best;
        }
    }
    lp.set_objective(secondary)?;
    let sol = lp.solve().unwrap_or(first);
    let s = sol.x[..k * m]
        .iter()
        .zip(&weights.omega)
        .map(|(x, w)| (x / w).clamp(0.0, 1.0))
        .collect();
    Ok((SelectionMatrix::relaxed(k, m, s), t * scale))
}

/// Outcome of the reweighted-l1 association.
#[derive(Debug, Clone, PartialEq)]
pub struct LuaOutcome {
    pub selection: SelectionMatrix,
    /// Relaxed selection after the last completed iteration.
    pub relaxed: SelectionMatrix,
    /// Subproblem optimum `t` per iteration.
    pub trace: Vec<f64>,
    /// Smallest selected path loss of the rounded assignment.
    pub objective: f64,
}

/// Reweighted-l1 association: solve [`lp_subproblem`], set
/// `omega = 1 / (s + varrho)`, repeat up to `max_iter` times, then round.
///
/// Stops early once no entry moves by more than [`CONVERGENCE_TOL`]. If a
/// later subproblem becomes infeasible under the updated weights the loop
/// ends with the last feasible relaxed selection.
pub fn lua(lsf: &LsfMatrix, max_iter: usize, varrho: f64) -> Result<LuaOutcome, AssocError> {
    lsf.check_feasible()?;
    if max_iter == 0 {
        return Err(AssocError::Parameter("max_iter must be at least 1".into()));
    }
    if !(varrho > 0.0 && varrho <= 1e-3) {
        return Err(AssocError::Parameter(format!("varrho must lie in (0, 1e-3], got {varrho}")));
    }
    let mut weights = WeightMatrix::ones(lsf.users, lsf.units, varrho);
    let mut trace = Vec::with_capacity(max_iter);
    let mut relaxed: Option<SelectionMatrix> = None;
    for _ in 0..max_iter {
        let (next, t) = match lp_subproblem(lsf, &weights) {
            Ok(v) => v,
            Err(AssocError::Lp(LpError::Infeasible(_))) if relaxed.is_some() => break,
            Err(e) => return Err(e),
        };
        trace.push(t);
        let settled = relaxed.as_ref().is_some_and(|prev| {
            prev.s
                .iter()
                .zip(&next.s)
                .all(|(a, b)| (a - b).abs() < CONVERGENCE_TOL)
        });
        weights.update(&next);
        relaxed = Some(next);
        if settled {
            break;
        }
    }
    let relaxed = relaxed.expect("first iteration either succeeds or returns");
    let assignment = round(lsf, &relaxed)?;
    let selection = SelectionMatrix::from_assignment(lsf.units, &assignment);
    let objective = lsf.min_selected(&selection).unwrap_or(0.0);
    Ok(LuaOutcome {
        selection,
        relaxed,
        trace,
        objective,
    })
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Columns of `values` ordered by decreasing value, lowest index first on ties.
fn ranked(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Columns ordered by relaxed value where it exceeds [`SUPPORT_LEVEL`], then
/// by decreasing path loss, then by index. Entries at or below the level
/// carry no preference, so decayed fractional rows fall back to path loss.
fn candidates(relaxed: &[f64], lsf: &[f64]) -> Vec<usize> {
    let key = |c: usize| if relaxed[c] > SUPPORT_LEVEL { relaxed[c] } else { 0.0 };
    let mut idx: Vec<usize> = (0..relaxed.len()).collect();
    idx.sort_by(|&a, &b| {
        key(b)
            .total_cmp(&key(a))
            .then(lsf[b].total_cmp(&lsf[a]))
            .then(a.cmp(&b))
    });
    idx
}

/// Exact bottleneck assignment restricted to each user's top three
/// [`candidates`] of the relaxed selection, plus each column for the user with
/// the largest path loss there, falling back to the global exact
/// assignment when the candidate graph has no complete matching.
fn round(lsf: &LsfMatrix, relaxed: &SelectionMatrix) -> Result<Vec<usize>, AssocError> {
    let (k, m) = (lsf.users, lsf.units);
    let mut allowed = vec![false; k * m];
    for u in 0..k {
        for c in candidates(relaxed.row(u), lsf.row(u)).into_iter().take(3) {
            allowed[u * m + c] = true;
        }
    }
    // Every column is also offered to the user it serves best.
    for c in 0..m {
        let best = (0..k).fold(0, |b, u| if lsf.get(u, c) > lsf.get(b, c) { u } else { b });
        allowed[best * m + c] = true;
    }
    let restricted: Vec<Vec<Option<f64>>> = (0..k)
        .map(|u| (0..m).map(|c| allowed[u * m + c].then(|| lsf.get(u, c))).collect())
        .collect();
    if let Some((assignment, _)) = bottleneck::bottleneck(&restricted, m) {
        return Ok(assignment);
    }
    let (global, _) = bottleneck::bottleneck(&lsf.as_options(), m).ok_or(AssocError::Infeasible {
        users: k,
        units: m,
    })?;
    Ok(global)
}

/// Per-user argmax of the relaxed selection, lowest index first on ties.
/// Not necessarily injective.
pub fn argmax_rounding(relaxed: &SelectionMatrix) -> Vec<usize> {
    (0..relaxed.users()).map(|u| argmax_lowest(relaxed.row(u))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselinePolicy {
    /// Users in decreasing order of their best path loss each take their best free unit.
    Nearest,
    /// Uniformly random injective map from a seeded generator.
    Random { seed: u64 },
}

pub fn baseline_assign(lsf: &LsfMatrix, policy: BaselinePolicy) -> Result<SelectionMatrix, AssocError> {
    lsf.check_feasible()?;
    let (k, m) = (lsf.users, lsf.units);
    let assignment = match policy {
        BaselinePolicy::Nearest => {
            let best = |u: usize| lsf.row(u).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| best(b).total_cmp(&best(a)).then(a.cmp(&b)));
            let mut used = vec![false; m];
            let mut assignment = vec![0; k];
            for u in order {
                let c = ranked(lsf.row(u))
                    .into_iter()
                    .find(|&c| !used[c])
                    .expect("k <= m leaves a free unit");
                used[c] = true;
                assignment[u] = c;
            }
            assignment
        }
        BaselinePolicy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cols: Vec<usize> = (0..m).collect();
            cols.shuffle(&mut rng);
            cols.truncate(k);
            cols
        }
    };
    Ok(SelectionMatrix::from_assignment(m, &assignment))
}
