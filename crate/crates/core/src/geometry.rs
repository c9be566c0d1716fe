//! Positions, effective distances, free-space path loss, and the
//! direction-cosine coupling coefficients between user pairs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("user must lie above the surface plane (z > 0), got z = {0}")]
    BelowPlane(f64),
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
}

fn positive(what: &'static str, value: f64) -> Result<f64, GeometryError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(GeometryError::NonPositive { what, value })
    }
}

/// A single-antenna user in the half-space above the surface plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UserPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        if z > 0.0 && z.is_finite() && x.is_finite() && y.is_finite() {
            Ok(Self { x, y, z })
        } else {
            Err(GeometryError::BelowPlane(z))
        }
    }

    /// Unit vector from `unit`'s center toward this user, as `(x, y, z)` cosines.
    pub fn direction_cosines(&self, unit: &LisUnit) -> [f64; 3] {
        let d = effective_distance(self, unit);
        [
            (self.x - unit.center_x) / d,
            (self.y - unit.center_y) / d,
            self.z / d,
        ]
    }
}

/// A circular aperture lying in the `z = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LisUnit {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub unit_id: usize,
}

impl LisUnit {
    pub fn new(center_x: f64, center_y: f64, radius: f64, unit_id: usize) -> Result<Self, GeometryError> {
        positive("radius", radius)?;
        Ok(Self {
            center_x,
            center_y,
            radius,
            unit_id,
        })
    }

    /// A unit of the given radius centered at the origin.
    pub fn centered(radius: f64) -> Result<Self, GeometryError> {
        Self::new(0.0, 0.0, radius, 0)
    }

    /// Surface area `pi R^2`, which is also the matched-filter array gain.
    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Direction-cosine differences of two users seen from one unit.
///
/// `eta` and `xi` are the x and y components; `chi = hypot(eta, xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCoupling {
    pub eta: f64,
    pub xi: f64,
    pub chi: f64,
}

/// Wavenumber `2 pi / lambda`.
pub fn wavenumber(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// Distance from the unit center to the user.
pub fn effective_distance(user: &UserPosition, unit: &LisUnit) -> f64 {
    let dx = user.x - unit.center_x;
    let dy = user.y - unit.center_y;
    (dx * dx + dy * dy + user.z * user.z).sqrt()
}

/// Free-space path loss `(1 / (2 kappa d))^2`.
pub fn path_loss(wavelength: f64, distance: f64) -> Result<f64, GeometryError> {
    positive("wavelength", wavelength)?;
    positive("distance", distance)?;
    Ok(path_loss_unchecked(wavelength, distance))
}

#[inline]
pub(crate) fn path_loss_unchecked(wavelength: f64, distance: f64) -> f64 {
    let a = 2.0 * wavenumber(wavelength) * distance;
    1.0 / (a * a)
}

/// Fraunhofer distance `8 R^2 / lambda`.
pub fn fraunhofer_distance(wavelength: f64, radius: f64) -> f64 {
    8.0 * radius * radius / wavelength
}

/// `true` when `distance` is strictly beyond the Fraunhofer distance.
pub fn fraunhofer_valid(wavelength: f64, radius: f64, distance: f64) -> bool {
    distance > fraunhofer_distance(wavelength, radius)
}

pub fn pair_coupling(user_k: &UserPosition, user_k2: &UserPosition, unit: &LisUnit) -> PairCoupling {
    let a = user_k.direction_cosines(unit);
    let b = user_k2.direction_cosines(unit);
    let eta = a[0] - b[0];
    let xi = a[1] - b[1];
    PairCoupling {
        eta,
        xi,
        chi: eta.hypot(xi),
    }
}
