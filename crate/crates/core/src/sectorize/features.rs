//! The 23-feature traffic descriptor.
//!
//! Eight raw aggregates, nine engineered transforms, and six time/day
//! one-hot flags. Every feature is location agnostic: nothing identifies
//! where the region sits, only how the traffic inside it behaves.
//!
//! Degenerate inputs produce defined sentinels: with no aircraft all the
//! pairwise statistics are zero, and with one aircraft the proximity and
//! risk aggregates are zero. Features with a documented range are clamped
//! into it (`avg_proximity` 0..80 NM, `altitude_mix` 0..15000 ft,
//! `conflict_risk` 0..60 NM, `flow_concentration` 0..1.5).

use serde::{Deserialize, Serialize};

use crate::airspace::TrafficSnapshot;
use crate::real::{lit, Real};
use crate::Scalar;

/// Feature names, in emission order.
pub const FEATURE_NAMES: [&str; 23] = [
    "traffic_density",
    "avg_proximity",
    "altitude_mix",
    "conflict_risk",
    "primary_flow_dir",
    "flow_concentration",
    "time_of_day",
    "airspace_size",
    "congestion_index",
    "traffic_alt_complexity",
    "hotspot_indicator",
    "density_sq",
    "log_proximity",
    "traffic_level",
    "proximity_level",
    "risk_normalized",
    "flow_direction",
    "day_weekday",
    "day_weekend",
    "time_morn",
    "time_noon",
    "time_eve",
    "time_night",
];

/// One extracted feature row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    // Raw aggregates.
    pub traffic_density: Scalar,
    pub avg_proximity: Scalar,
    pub altitude_mix: Scalar,
    pub conflict_risk: Scalar,
    pub primary_flow_dir: Scalar,
    pub flow_concentration: Scalar,
    pub time_of_day: Scalar,
    pub airspace_size: Scalar,
    // Engineered transforms.
    pub congestion_index: Scalar,
    pub traffic_alt_complexity: Scalar,
    pub hotspot_indicator: Scalar,
    pub density_sq: Scalar,
    pub log_proximity: Scalar,
    pub traffic_level: Scalar,
    pub proximity_level: Scalar,
    pub risk_normalized: Scalar,
    pub flow_direction: Scalar,
    // Time/day one-hot flags.
    pub day_weekday: Scalar,
    pub day_weekend: Scalar,
    pub time_morn: Scalar,
    pub time_noon: Scalar,
    pub time_eve: Scalar,
    pub time_night: Scalar,
}

impl FeatureVector {
    pub fn to_row(&self) -> [Scalar; 23] {
        [
            self.traffic_density,
            self.avg_proximity,
            self.altitude_mix,
            self.conflict_risk,
            self.primary_flow_dir,
            self.flow_concentration,
            self.time_of_day,
            self.airspace_size,
            self.congestion_index,
            self.traffic_alt_complexity,
            self.hotspot_indicator,
            self.density_sq,
            self.log_proximity,
            self.traffic_level,
            self.proximity_level,
            self.risk_normalized,
            self.flow_direction,
            self.day_weekday,
            self.day_weekend,
            self.time_morn,
            self.time_noon,
            self.time_eve,
            self.time_night,
        ]
    }
}

/// Mean pairwise horizontal distance over unordered pairs.
pub fn mean_pairwise_distance<R: Real>(xy: &[(R, R)]) -> R {
    if xy.len() < 2 {
        return R::zero();
    }
    let mut sum = R::zero();
    let mut count = 0u64;
    for i in 0..xy.len() {
        for j in (i + 1)..xy.len() {
            let dx = xy[i].0 - xy[j].0;
            let dy = xy[i].1 - xy[j].1;
            sum = sum + (dx * dx + dy * dy).sqrt();
            count += 1;
        }
    }
    sum / R::from_u64(count).unwrap()
}

/// Mean over aircraft of the horizontal distance to the nearest other.
pub fn mean_min_separation<R: Real>(xy: &[(R, R)]) -> R {
    if xy.len() < 2 {
        return R::zero();
    }
    let mut sum = R::zero();
    for i in 0..xy.len() {
        let mut best = R::infinity();
        for j in 0..xy.len() {
            if i == j {
                continue;
            }
            let dx = xy[i].0 - xy[j].0;
            let dy = xy[i].1 - xy[j].1;
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        sum = sum + best;
    }
    sum / R::from_usize(xy.len()).unwrap()
}

/// Population standard deviation.
pub fn population_std<R: Real>(values: &[R]) -> R {
    if values.is_empty() {
        return R::zero();
    }
    let n = R::from_usize(values.len()).unwrap();
    let mean = values.iter().copied().sum::<R>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<R>() / n;
    var.sqrt()
}

/// Circular standard deviation of headings (radians in, dimensionless out):
/// `sqrt(-2 ln R)` with `R` the mean resultant length.
pub fn circular_std<R: Real>(headings_rad: &[R]) -> R {
    if headings_rad.is_empty() {
        return R::zero();
    }
    let n = R::from_usize(headings_rad.len()).unwrap();
    let c = headings_rad.iter().map(|h| h.cos()).sum::<R>() / n;
    let s = headings_rad.iter().map(|h| h.sin()).sum::<R>() / n;
    let r = (c * c + s * s).sqrt().min(R::one());
    if r <= R::zero() {
        return R::infinity();
    }
    (-(lit::<R>(2.0)) * r.ln()).max(R::zero()).sqrt()
}

/// Axial alignment: resultant length of doubled headings. 1.0 when all
/// traffic shares one axis (regardless of direction along it), 0 when
/// headings spread evenly.
pub fn axial_alignment<R: Real>(headings_rad: &[R]) -> R {
    if headings_rad.is_empty() {
        return R::zero();
    }
    let n = R::from_usize(headings_rad.len()).unwrap();
    let two = lit::<R>(2.0);
    let c = headings_rad.iter().map(|&h| (two * h).cos()).sum::<R>() / n;
    let s = headings_rad.iter().map(|&h| (two * h).sin()).sum::<R>() / n;
    (c * c + s * s).sqrt().min(R::one())
}

/// Tertile bin over `[0, hi]`: 0, 1, or 2.
fn tertile(value: Scalar, hi: Scalar) -> Scalar {
    let edge = hi / 3.0;
    if value < edge {
        0.0
    } else if value < 2.0 * edge {
        1.0
    } else {
        2.0
    }
}

/// Extracts the 23-feature descriptor from a snapshot.
///
/// Aircraft are processed in id order regardless of their order in the
/// snapshot, so the result is bit-for-bit permutation invariant.
pub fn extract_features(snap: &TrafficSnapshot) -> FeatureVector {
    let mut ordered: Vec<&crate::airspace::AircraftState> = snap.aircraft.iter().collect();
    ordered.sort_by_key(|a| a.id);
    let n = ordered.len();
    let density = n as Scalar;
    let xy: Vec<(Scalar, Scalar)> = ordered.iter().map(|a| (a.x_nm, a.y_nm)).collect();
    let alts: Vec<Scalar> = ordered.iter().map(|a| a.alt_ft).collect();
    let headings: Vec<Scalar> = ordered.iter().map(|a| a.heading_deg.to_radians()).collect();

    let avg_proximity = mean_pairwise_distance(&xy).clamp(0.0, 80.0);
    let altitude_mix = population_std(&alts).clamp(0.0, 15_000.0);
    let conflict_risk = mean_min_separation(&xy).clamp(0.0, 60.0);
    let primary_flow_dir = if n == 0 {
        0.0
    } else {
        headings.iter().map(|h| h.sin().abs()).sum::<Scalar>() / density
    };
    let flow_concentration = circular_std(&headings).clamp(0.0, 1.5);

    let ratio = |num: Scalar, den: Scalar| if den == 0.0 { 0.0 } else { num / den };

    let hour = snap.hour_of_day as Scalar;
    let weekday = if snap.day_of_week <= 4 { 1.0 } else { 0.0 };
    let (morn, noon, eve) = (
        (5..12).contains(&snap.hour_of_day),
        (12..17).contains(&snap.hour_of_day),
        (17..22).contains(&snap.hour_of_day),
    );

    FeatureVector {
        traffic_density: density,
        avg_proximity,
        altitude_mix,
        conflict_risk,
        primary_flow_dir,
        flow_concentration,
        time_of_day: hour,
        airspace_size: snap.region_side_nm,
        congestion_index: ratio(density, avg_proximity),
        traffic_alt_complexity: density * altitude_mix,
        hotspot_indicator: ratio(conflict_risk, avg_proximity),
        density_sq: density * density,
        log_proximity: (1.0 + avg_proximity).ln(),
        traffic_level: tertile(density, 150.0),
        proximity_level: tertile(avg_proximity, 80.0),
        risk_normalized: ratio(conflict_risk, density),
        flow_direction: axial_alignment(&headings),
        day_weekday: weekday,
        day_weekend: 1.0 - weekday,
        time_morn: morn as u8 as Scalar,
        time_noon: noon as u8 as Scalar,
        time_eve: eve as u8 as Scalar,
        time_night: (!(morn || noon || eve)) as u8 as Scalar,
    }
}
