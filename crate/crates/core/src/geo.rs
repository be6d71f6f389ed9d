//! WGS84 ⇄ UTM projection and the site calibration that maps occupant
//! positions into the building's local frame.
//!
//! The projection uses the Krüger series in the third flattening `n`,
//! carried to sixth order. Truncation error at that order is far below a
//! millimetre anywhere inside a UTM zone, and the inverse series together
//! with a Newton step on the conformal latitude round-trips to ~1e-12°.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_INV_F: f64 = 298.257_223_563;
pub const UTM_K0: f64 = 0.9996;
pub const FALSE_EASTING: f64 = 500_000.0;
pub const FALSE_NORTHING_SOUTH: f64 = 10_000_000.0;

const BAND_LETTERS: &[u8; 20] = b"CDEFGHJKLMNPQRSTUVWX";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("sample lies in UTM zone {found}, site origin is calibrated in zone {expected}")]
    ZoneMismatch { expected: String, found: String },
    #[error("invalid site transform: {0}")]
    InvalidTransform(String),
    #[error("cannot fit a site transform: {0}")]
    DegenerateFit(String),
}

/// A WGS84 position in degrees plus an altitude in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoSample {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude: f64,
}

impl GeoSample {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Self {
        GeoSample { latitude, longitude, altitude }
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(self.latitude.is_finite() && self.longitude.is_finite() && self.altitude.is_finite()) {
            return Err(GeoError::OutOfRange(format!("non-finite coordinate in {self:?}")));
        }
        if !(-80.0..=84.0).contains(&self.latitude) {
            return Err(GeoError::OutOfRange(format!(
                "latitude {} outside the UTM band coverage [-80, 84]",
                self.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(GeoError::OutOfRange(format!("longitude {} outside [-180, 180]", self.longitude)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtmCoord {
    pub easting: f64,
    pub northing: f64,
    pub zone_number: u8,
    /// Latitude band letter, `C`..=`X` (no `I` or `O`). `N` and later are north.
    pub zone_letter: char,
}

impl UtmCoord {
    pub fn is_northern(&self) -> bool {
        self.zone_letter >= 'N'
    }

    /// Zone number and hemisphere, e.g. `48N`. Bands within one hemisphere
    /// share a false northing, so they are interchangeable for local offsets.
    pub fn zone_label(&self) -> String {
        format!("{}{}", self.zone_number, if self.is_northern() { 'N' } else { 'S' })
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(1..=60).contains(&self.zone_number) {
            return Err(GeoError::OutOfRange(format!("zone number {} not in 1..=60", self.zone_number)));
        }
        if !self.zone_letter.is_ascii() || !BAND_LETTERS.contains(&(self.zone_letter as u8)) {
            return Err(GeoError::OutOfRange(format!("invalid band letter {:?}", self.zone_letter)));
        }
        if !(self.easting > 100_000.0 && self.easting < 900_000.0) {
            return Err(GeoError::OutOfRange(format!("easting {} outside (100000, 900000)", self.easting)));
        }
        if !(0.0..=10_000_000.0).contains(&self.northing) {
            return Err(GeoError::OutOfRange(format!("northing {} outside [0, 10000000]", self.northing)));
        }
        Ok(())
    }
}

impl fmt::Display for UtmCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{} {:.3}E {:.3}N", self.zone_number, self.zone_letter, self.easting, self.northing)
    }
}

/// Standard zone number for a longitude (no Norway/Svalbard exceptions).
pub fn zone_number(longitude: f64) -> u8 {
    let z = ((longitude + 180.0) / 6.0).floor() as i32 + 1;
    z.clamp(1, 60) as u8
}

pub fn band_letter(latitude: f64) -> char {
    let idx = ((latitude + 80.0) / 8.0).floor() as i32;
    BAND_LETTERS[idx.clamp(0, 19) as usize] as char
}

fn central_meridian(zone: u8) -> f64 {
    f64::from(zone) * 6.0 - 183.0
}

/// Series coefficients derived once from the ellipsoid.
struct Kruger {
    /// Rectifying radius.
    a_rect: f64,
    e: f64,
    alpha: [f64; 6],
    beta: [f64; 6],
}

fn kruger() -> Kruger {
    let f = 1.0 / WGS84_INV_F;
    let n = f / (2.0 - f);
    let (n2, n3) = (n * n, n * n * n);
    let (n4, n5, n6) = (n2 * n2, n2 * n3, n3 * n3);
    Kruger {
        a_rect: WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0),
        e: (f * (2.0 - f)).sqrt(),
        alpha: [
            n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0 + 7891.0 * n6 / 37800.0,
            13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0 - 1983433.0 * n6 / 1935360.0,
            61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 + 167603.0 * n6 / 181440.0,
            49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
            34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
            212378941.0 * n6 / 319334400.0,
        ],
        beta: [
            n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0 + 96199.0 * n6 / 604800.0,
            n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0 - 1118711.0 * n6 / 3870720.0,
            17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
            4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0,
            4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0,
            20648693.0 * n6 / 638668800.0,
        ],
    }
}

/// Projects a sample into its standard UTM zone.
pub fn wgs84_to_utm(s: &GeoSample) -> Result<UtmCoord, GeoError> {
    s.validate()?;
    wgs84_to_utm_in_zone(s, zone_number(s.longitude))
}

/// Projects a sample into a caller-chosen zone (used to keep a site in one
/// zone near a boundary).
pub fn wgs84_to_utm_in_zone(s: &GeoSample, zone: u8) -> Result<UtmCoord, GeoError> {
    s.validate()?;
    if !(1..=60).contains(&zone) {
        return Err(GeoError::OutOfRange(format!("zone number {zone} not in 1..=60")));
    }
    let k = kruger();
    let phi = s.latitude.to_radians();
    let mut dlon = s.longitude - central_meridian(zone);
    // wrap across the antimeridian
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let lam = dlon.to_radians();

    // conformal latitude
    let sin_phi = phi.sin();
    let t = (sin_phi.atanh() - k.e * (k.e * sin_phi).atanh()).sinh();
    let xi_p = t.atan2(lam.cos());
    let eta_p = (lam.sin() / (1.0 + t * t).sqrt()).atanh();

    let mut xi = xi_p;
    let mut eta = eta_p;
    for (j, a) in k.alpha.iter().enumerate() {
        let m = 2.0 * (j as f64 + 1.0);
        xi += a * (m * xi_p).sin() * (m * eta_p).cosh();
        eta += a * (m * xi_p).cos() * (m * eta_p).sinh();
    }

    let easting = FALSE_EASTING + UTM_K0 * k.a_rect * eta;
    let mut northing = UTM_K0 * k.a_rect * xi;
    if s.latitude < 0.0 {
        northing += FALSE_NORTHING_SOUTH;
    }
    Ok(UtmCoord { easting, northing, zone_number: zone, zone_letter: band_letter(s.latitude) })
}

/// Inverse projection. The returned altitude is zero; UTM carries no height.
pub fn utm_to_wgs84(u: &UtmCoord) -> Result<GeoSample, GeoError> {
    u.validate()?;
    let k = kruger();
    let northing = if u.is_northern() { u.northing } else { u.northing - FALSE_NORTHING_SOUTH };
    let xi = northing / (UTM_K0 * k.a_rect);
    let eta = (u.easting - FALSE_EASTING) / (UTM_K0 * k.a_rect);

    let mut xi_p = xi;
    let mut eta_p = eta;
    for (j, b) in k.beta.iter().enumerate() {
        let m = 2.0 * (j as f64 + 1.0);
        xi_p -= b * (m * xi).sin() * (m * eta).cosh();
        eta_p -= b * (m * xi).cos() * (m * eta).sinh();
    }

    let tau_p = xi_p.sin() / (eta_p.sinh().powi(2) + xi_p.cos().powi(2)).sqrt();
    let lam = eta_p.sinh().atan2(xi_p.cos());
    let tau = tau_from_conformal(tau_p, k.e);

    let latitude = tau.atan().to_degrees();
    let longitude = central_meridian(u.zone_number) + lam.to_degrees();
    Ok(GeoSample { latitude, longitude, altitude: 0.0 })
}

/// Solves tan(conformal latitude) = `tau_p` for tan(geodetic latitude) by
/// Newton's method.
fn tau_from_conformal(tau_p: f64, e: f64) -> f64 {
    let e2m = 1.0 - e * e;
    let mut tau = tau_p;
    for _ in 0..8 {
        let sigma = (e * (e * tau / (1.0 + tau * tau).sqrt()).atanh()).sinh();
        let tau_i = tau * (1.0 + sigma * sigma).sqrt() - sigma * (1.0 + tau * tau).sqrt();
        let dtau =
            (tau_p - tau_i) / (1.0 + tau_i * tau_i).sqrt() * (1.0 + e2m * tau * tau) / (e2m * (1.0 + tau * tau).sqrt());
        tau += dtau;
        if dtau.abs() < 1e-15 * tau.abs().max(1.0) {
            break;
        }
    }
    tau
}

/// Calibrated mapping from UTM to the building's local frame:
/// `p = scale · R(rotation) · (utm − origin)` horizontally and
/// `z = scale · (altitude − origin_altitude)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteTransform {
    pub origin: UtmCoord,
    pub origin_altitude: f64,
    /// Counter-clockwise about the vertical axis, normalized to `[0, 360)`.
    pub rotation_deg: f64,
    pub scale: f64,
}

impl SiteTransform {
    pub fn new(origin: UtmCoord, origin_altitude: f64, rotation_deg: f64, scale: f64) -> Result<Self, GeoError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeoError::InvalidTransform(format!("scale must be positive, got {scale}")));
        }
        if !rotation_deg.is_finite() || !origin_altitude.is_finite() {
            return Err(GeoError::InvalidTransform("rotation and origin altitude must be finite".into()));
        }
        let mut rotation_deg = rotation_deg.rem_euclid(360.0);
        if rotation_deg >= 360.0 {
            rotation_deg = 0.0;
        }
        Ok(SiteTransform { origin, origin_altitude, rotation_deg, scale })
    }

    /// Builds the transform from the configuration's geodetic origin.
    pub fn from_geodetic(origin: &GeoSample, rotation_deg: f64, scale: f64) -> Result<Self, GeoError> {
        let utm = wgs84_to_utm(origin)?;
        SiteTransform::new(utm, origin.altitude, rotation_deg, scale)
    }

    /// Applies the transform to an already projected point.
    pub fn apply(&self, utm: &UtmCoord, altitude: f64) -> Result<[f64; 3], GeoError> {
        if utm.zone_number != self.origin.zone_number || utm.is_northern() != self.origin.is_northern() {
            return Err(GeoError::ZoneMismatch { expected: self.origin.zone_label(), found: utm.zone_label() });
        }
        let dx = utm.easting - self.origin.easting;
        let dy = utm.northing - self.origin.northing;
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        Ok([
            self.scale * (cos * dx - sin * dy),
            self.scale * (sin * dx + cos * dy),
            self.scale * (altitude - self.origin_altitude),
        ])
    }

    /// Inverse of [`SiteTransform::apply`]: local coordinates back to UTM
    /// easting/northing and altitude.
    pub fn unapply(&self, local: [f64; 3]) -> (UtmCoord, f64) {
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        let (x, y) = (local[0] / self.scale, local[1] / self.scale);
        let utm = UtmCoord {
            easting: self.origin.easting + cos * x + sin * y,
            northing: self.origin.northing - sin * x + cos * y,
            ..self.origin
        };
        (utm, self.origin_altitude + local[2] / self.scale)
    }
}

/// Maps a WGS84 sample into building-local metres.
pub fn to_local(s: &GeoSample, t: &SiteTransform) -> Result<[f64; 3], GeoError> {
    s.validate()?;
    let zone = zone_number(s.longitude);
    if zone != t.origin.zone_number || (s.latitude >= 0.0) != t.origin.is_northern() {
        let found = format!("{zone}{}", if s.latitude >= 0.0 { 'N' } else { 'S' });
        return Err(GeoError::ZoneMismatch { expected: t.origin.zone_label(), found });
    }
    let utm = wgs84_to_utm_in_zone(s, zone)?;
    t.apply(&utm, s.altitude)
}

/// Inverse of [`to_local`], mainly for building test fixtures.
pub fn from_local(local: [f64; 3], t: &SiteTransform) -> Result<GeoSample, GeoError> {
    let (utm, altitude) = t.unapply(local);
    let mut s = utm_to_wgs84(&utm)?;
    s.altitude = altitude;
    Ok(s)
}

/// A surveyed correspondence between a geodetic position and the same point
/// in the model's local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoint {
    pub geo: GeoSample,
    pub local: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformFit {
    pub transform: SiteTransform,
    /// Per control point: distance between the mapped and the surveyed
    /// local position, metres.
    pub residuals: Vec<f64>,
    pub rms: f64,
}

/// Least-squares similarity fit (rotation, translation, scale) from two or
/// more control points. All points must project into one UTM zone.
pub fn fit_transform(pairs: &[ControlPoint]) -> Result<TransformFit, GeoError> {
    if pairs.len() < 2 {
        return Err(GeoError::DegenerateFit(format!("need at least 2 control points, got {}", pairs.len())));
    }
    let zone = zone_number(pairs[0].geo.longitude);
    let utms = pairs
        .iter()
        .map(|p| {
            let u = wgs84_to_utm_in_zone(&p.geo, zone)?;
            if zone_number(p.geo.longitude) != zone || (p.geo.latitude >= 0.0) != u.is_northern() {
                return Err(GeoError::DegenerateFit("control points span several UTM zones".into()));
            }
            Ok(u)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n = pairs.len() as f64;
    let (mut ue, mut un, mut px, mut py) = (0.0, 0.0, 0.0, 0.0);
    for (u, p) in utms.iter().zip(pairs) {
        ue += u.easting;
        un += u.northing;
        px += p.local[0];
        py += p.local[1];
    }
    let (ue, un, px, py) = (ue / n, un / n, px / n, py / n);

    // p - p̄ = [[a, -b], [b, a]] (u - ū)
    let (mut num_a, mut num_b, mut den) = (0.0, 0.0, 0.0);
    for (u, p) in utms.iter().zip(pairs) {
        let (dx, dy) = (u.easting - ue, u.northing - un);
        let (qx, qy) = (p.local[0] - px, p.local[1] - py);
        num_a += dx * qx + dy * qy;
        num_b += dx * qy - dy * qx;
        den += dx * dx + dy * dy;
    }
    if den < 1e-12 {
        return Err(GeoError::DegenerateFit("control points coincide horizontally".into()));
    }
    let (a, b) = (num_a / den, num_b / den);
    let scale = a.hypot(b);
    if scale < 1e-12 {
        return Err(GeoError::DegenerateFit("control points do not determine a scale".into()));
    }
    let rotation_deg = b.atan2(a).to_degrees();

    // origin: the UTM point that maps to local (0, 0)
    let (ox, oy) = (-px, -py);
    let det = a * a + b * b;
    let origin_e = ue + (a * ox + b * oy) / det;
    let origin_n = un + (-b * ox + a * oy) / det;
    let origin_alt = pairs.iter().map(|p| p.geo.altitude - p.local[2] / scale).sum::<f64>() / n;

    let origin = UtmCoord { easting: origin_e, northing: origin_n, ..utms[0] };
    let transform = SiteTransform::new(origin, origin_alt, rotation_deg, scale)?;
    let residuals: Vec<f64> = utms
        .iter()
        .zip(pairs)
        .map(|(u, p)| {
            let m = transform.apply(u, p.geo.altitude).expect("same zone by construction");
            ((m[0] - p.local[0]).powi(2) + (m[1] - p.local[1]).powi(2) + (m[2] - p.local[2]).powi(2)).sqrt()
        })
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    Ok(TransformFit { transform, residuals, rms })
}
