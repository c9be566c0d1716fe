//! Bessel functions of the first kind for orders 0, 1 and 2, their positive
//! zeros, and the extrema envelope of `J1(x)/x`.
//!
//! Evaluation uses three regimes:
//!
//! * `|x| <= 8`: ascending power series.
//! * `8 < |x| <= 30`: Miller backward recurrence normalized by
//!   `J0 + 2 (J2 + J4 + ...) = 1`.
//! * `|x| > 30`: Hankel asymptotic expansion, truncated at its smallest term.
//!
//! Every regime holds an absolute error around `1e-15` to `1e-14` against
//! the integral representation; the unit tests check the seams.

use std::sync::{OnceLock, RwLock};

use thiserror::Error;

/// Upper edge of the power-series regime.
const SERIES_LIMIT: f64 = 8.0;
/// Upper edge of the backward-recurrence regime.
const MILLER_LIMIT: f64 = 30.0;
/// Zeros precomputed per order when the shared tables are first touched.
const PRECOMPUTED_ZEROS: usize = 64;
/// Largest zero index the tables will ever extend to.
pub const MAX_ZERO_INDEX: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("bessel argument must be finite, got {0}")]
    NonFinite(f64),
    #[error("unsupported bessel order {0}")]
    UnsupportedOrder(u32),
    #[error("zero index must be at least 1")]
    ZeroIndex,
    #[error("zero index {requested} exceeds table capacity {limit}")]
    Capacity { requested: usize, limit: usize },
}

/// `J_order(x)` for `order` in `{0, 1, 2}`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64, SpecfunError> {
    if !x.is_finite() {
        return Err(SpecfunError::NonFinite(x));
    }
    match order {
        0 => Ok(j0(x)),
        1 => Ok(j1(x)),
        2 => Ok(j2(x)),
        other => Err(SpecfunError::UnsupportedOrder(other)),
    }
}

/// `J0(x)`. Returns NaN for non-finite input.
pub fn j0(x: f64) -> f64 {
    eval(0, x.abs())
}

/// `J1(x)`, odd in `x`.
pub fn j1(x: f64) -> f64 {
    let v = eval(1, x.abs());
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `J2(x)`, even in `x`.
pub fn j2(x: f64) -> f64 {
    eval(2, x.abs())
}

/// `2 J1(x) / x`, continuous through `x = 0` where it equals 1.
///
/// This is the aperture response of a disk normalized by its area.
pub fn jinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        // 2J1(x)/x = 1 - x^2/8 + x^4/192 - ...
        let x2 = ax * ax;
        1.0 - x2 / 8.0 + x2 * x2 / 192.0
    } else {
        2.0 * eval(1, ax) / ax
    }
}

fn eval(order: u32, ax: f64) -> f64 {
    if ax.is_nan() {
        f64::NAN
    } else if ax <= SERIES_LIMIT {
        series(order, ax)
    } else if ax <= MILLER_LIMIT {
        miller(order, ax)
    } else if ax.is_infinite() {
        0.0
    } else {
        hankel(order, ax)
    }
}

fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^n / n!
    let mut term = match order {
        0 => 1.0,
        1 => half,
        _ => 0.5 * half * half,
    };
    let n = f64::from(order);
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) || k < 3.0 {
        term *= q / (k * (k + n));
        sum += term;
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn miller(order: u32, x: f64) -> f64 {
    let mut start = x as usize + 40;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut wanted = [0.0_f64; 3];
    for k in (0..=start).rev() {
        if k <= 2 {
            wanted[k] = cur;
        }
        if k == 0 {
            norm += cur;
        } else if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if k == 0 {
            break;
        }
        let prev = (k as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for w in &mut wanted {
                *w *= 1e-250;
            }
        }
    }
    wanted[order as usize] / norm
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let eight_x = 8.0 * x;
    // a_k / x^k with a_k = prod_{i=1..k} (mu - (2i-1)^2) / (k! 8^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * eight_x);
        if next.abs() >= last || next == 0.0 {
            break;
        }
        last = next.abs();
        term = next;
        // k = 1, 3, 5, ... feed Q with alternating signs; even k feed P.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    // omega = x - (order/2 + 1/4) pi, expanded to keep the reduction exact.
    let theta = (0.5 * f64::from(order) + 0.25) * std::f64::consts::PI;
    let (sx, cx) = x.sin_cos();
    let (st, ct) = theta.sin_cos();
    let cos_w = cx * ct + sx * st;
    let sin_w = sx * ct - cx * st;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

/// Ordered positive zeros of `J1` or `J2`, extended on demand.
#[derive(Debug, Clone)]
pub struct BesselZeroTable {
    order: u32,
    zeros: Vec<f64>,
}

impl BesselZeroTable {
    pub fn new(order: u32) -> Result<Self, SpecfunError> {
        if !(1..=2).contains(&order) {
            return Err(SpecfunError::UnsupportedOrder(order));
        }
        Ok(Self {
            order,
            zeros: Vec::new(),
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Grows the table until it holds at least `n` zeros.
    pub fn extend_to(&mut self, n: usize) -> Result<(), SpecfunError> {
        if n > MAX_ZERO_INDEX {
            return Err(SpecfunError::Capacity {
                requested: n,
                limit: MAX_ZERO_INDEX,
            });
        }
        while self.zeros.len() < n {
            // J_m has no zeros in (0, m]; consecutive zeros are more than pi apart.
            let from = self
                .zeros
                .last()
                .map_or(f64::from(self.order) + 0.5, |z| z + 1.0);
            let z = next_zero(self.order, from);
            self.zeros.push(z);
        }
        Ok(())
    }

    /// The `n`-th positive zero (1-based).
    pub fn zero(&mut self, n: usize) -> Result<f64, SpecfunError> {
        if n == 0 {
            return Err(SpecfunError::ZeroIndex);
        }
        self.extend_to(n)?;
        Ok(self.zeros[n - 1])
    }
}

fn order_fn(order: u32) -> fn(f64) -> f64 {
    match order {
        0 => j0,
        1 => j1,
        _ => j2,
    }
}

/// First sign change of `J_order` at or after `from`, bisected to full precision.
fn next_zero(order: u32, from: f64) -> f64 {
    let f = order_fn(order);
    const STEP: f64 = 0.25;
    let mut a = from;
    let mut fa = f(a);
    loop {
        let b = a + STEP;
        let fb = f(b);
        if fa == 0.0 {
            return a;
        }
        if fa.signum() != fb.signum() {
            return bisect(f, a, b, fa);
        }
        a = b;
        fa = fb;
    }
}

fn bisect(f: fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a < 1e-13 {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn shared_tables() -> &'static [RwLock<BesselZeroTable>; 2] {
    static TABLES: OnceLock<[RwLock<BesselZeroTable>; 2]> = OnceLock::new();
    TABLES.get_or_init(|| {
        let build = |order| {
            let mut t = BesselZeroTable::new(order).expect("order 1 and 2 are supported");
            t.extend_to(PRECOMPUTED_ZEROS)
                .expect("precompute size is below capacity");
            RwLock::new(t)
        };
        [build(1), build(2)]
    })
}

/// `j_{order,n}`, the `n`-th positive zero of `J_order` for `order` in `{1, 2}`.
pub fn bessel_zero(order: u32, n: usize) -> Result<f64, SpecfunError> {
    if !(1..=2).contains(&order) {
        return Err(SpecfunError::UnsupportedOrder(order));
    }
    if n == 0 {
        return Err(SpecfunError::ZeroIndex);
    }
    if n > MAX_ZERO_INDEX {
        return Err(SpecfunError::Capacity {
            requested: n,
            limit: MAX_ZERO_INDEX,
        });
    }
    let lock = &shared_tables()[order as usize - 1];
    {
        let table = lock.read().unwrap_or_else(|e| e.into_inner());
        if let Some(z) = table.zeros().get(n - 1) {
            return Ok(*z);
        }
    }
    let mut table = lock.write().unwrap_or_else(|e| e.into_inner());
    table.zero(n)
}

/// `|J1(j_{2,n})| / j_{2,n}`, the magnitude of the `n`-th local extremum of
/// `J1(x)/x` for `x > 0`.
pub fn extrema_envelope(n: usize) -> Result<f64, SpecfunError> {
    let z = bessel_zero(2, n)?;
    Ok(j1(z).abs() / z)
}

/// `2 |J1(j_{2,n})| / j_{2,n}`, the magnitude of the `n`-th local extremum of
/// the area-normalized response `2 J1(x)/x`.
pub fn normalized_extremum(n: usize) -> Result<f64, SpecfunError> {
    Ok(2.0 * extrema_envelope(n)?)
}
