//! Great-circle geometry on the reference sphere.

use thiserror::Error;

/// Mean Earth radius in kilometers.
///
/// Edges are thresholded on relative distances, so any fixed radius
/// yields the same network topology; the constant is pinned here so
/// reported kilometer values are reproducible.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("coordinate is not a finite number")]
    NotFinite,
}

/// A latitude/longitude pair in decimal degrees.
///
/// Latitude is validated to [-90, +90] and longitude is wrapped into
/// (-180, +180] at construction, so points that name the same location
/// compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !lat_deg.is_finite() || !lon_deg.is_finite() {
            return Err(GeoError::NotFinite);
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoError::LatitudeOutOfRange(lat_deg));
        }
        Ok(GeoPoint {
            lat: lat_deg,
            lon: wrap_longitude(lon_deg),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Wrap a longitude into (-180, +180].
fn wrap_longitude(lon_deg: f64) -> f64 {
    let r = lon_deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else if r == 0.0 {
        0.0 // collapse -0.0
    } else {
        r
    }
}

/// Great-circle distance between two points in kilometers, by the
/// haversine formula on a sphere of radius [`EARTH_RADIUS_KM`].
///
/// Uses the arcsine-of-square-root form, which stays well conditioned at
/// the short separations that dominate neighboring districts. Exactly
/// symmetric in its arguments and zero for identical points.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let half_dphi = (b.lat - a.lat).to_radians() / 2.0;
    let half_dlam = (b.lon - a.lon).to_radians() / 2.0;

    let sp = half_dphi.sin();
    let sl = half_dlam.sin();
    let h = sp * sp + phi1.cos() * phi2.cos() * sl * sl;

    // h can creep above 1 by rounding near antipodal pairs.
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}
