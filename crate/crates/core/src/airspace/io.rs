//! Snapshot and plan file formats.
//!
//! Snapshot files carry a `key=value` preamble (region side, timestamp, day,
//! hour) followed by one CSV row per aircraft:
//!
//! ```text
//! region_side=100
//! timestamp=600
//! day=2
//! hour=14
//! id,x_nm,y_nm,alt_ft,heading_deg,speed_kt,fuel_min
//! 0,12.5,40,33000,90,450,240
//! ```
//!
//! Plan files are plain CSV, one row per waypoint:
//! `id,seq,x_nm,y_nm,alt_ft,t_s,speed_kt`.

use std::collections::BTreeMap;
use std::path::Path;

use super::{AircraftState, AirspaceError, FlightPlan, TrafficSnapshot, Waypoint};
use crate::time::SimTime;
use crate::Scalar;

const SNAPSHOT_HEADER: &str = "id,x_nm,y_nm,alt_ft,heading_deg,speed_kt,fuel_min";
const PLAN_HEADER: &str = "id,seq,x_nm,y_nm,alt_ft,t_s,speed_kt";

pub fn write_snapshot_file(path: &Path, snap: &TrafficSnapshot) -> Result<(), AirspaceError> {
    let mut out = String::new();
    out.push_str(&format!("region_side={}\n", snap.region_side_nm));
    out.push_str(&format!("timestamp={}\n", snap.timestamp_s));
    out.push_str(&format!("day={}\n", snap.day_of_week));
    out.push_str(&format!("hour={}\n", snap.hour_of_day));
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for a in &snap.aircraft {
        w.write_record([
            a.id.to_string(),
            a.x_nm.to_string(),
            a.y_nm.to_string(),
            a.alt_ft.to_string(),
            a.heading_deg.to_string(),
            a.speed_kt.to_string(),
            a.fuel_min.to_string(),
        ])
        .map_err(|e| AirspaceError::Malformed(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| AirspaceError::Malformed(e.to_string()))?;
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_snapshot_file(path: &Path) -> Result<TrafficSnapshot, AirspaceError> {
    let text = std::fs::read_to_string(path)?;
    let mut preamble = BTreeMap::new();
    let mut body_start = 0usize;
    for line in text.lines() {
        if line.trim() == SNAPSHOT_HEADER {
            body_start += line.len() + 1;
            break;
        }
        if let Some((k, v)) = line.split_once('=') {
            preamble.insert(k.trim().to_string(), v.trim().to_string());
        } else if !line.trim().is_empty() {
            return Err(AirspaceError::Malformed(format!(
                "expected key=value preamble or header, got '{line}'"
            )));
        }
        body_start += line.len() + 1;
    }
    let get = |k: &str| -> Result<&String, AirspaceError> {
        preamble.get(k).ok_or_else(|| AirspaceError::Malformed(format!("missing preamble key '{k}'")))
    };
    let parse_f = |k: &str| -> Result<Scalar, AirspaceError> {
        get(k)?.parse::<Scalar>().map_err(|e| AirspaceError::Malformed(format!("{k}: {e}")))
    };
    let parse_u = |k: &str| -> Result<u8, AirspaceError> {
        get(k)?.parse::<u8>().map_err(|e| AirspaceError::Malformed(format!("{k}: {e}")))
    };
    let mut snap = TrafficSnapshot::new(
        parse_f("region_side")?,
        parse_f("timestamp")?,
        parse_u("day")?,
        parse_u("hour")?,
    );

    let body = text.get(body_start.min(text.len())..).unwrap_or("");
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AirspaceError::Malformed(e.to_string()))?;
        let field = |i: usize| -> Result<Scalar, AirspaceError> {
            rec.get(i)
                .ok_or_else(|| AirspaceError::Malformed("short snapshot row".into()))?
                .parse::<Scalar>()
                .map_err(|e| AirspaceError::Malformed(e.to_string()))
        };
        snap.aircraft.push(AircraftState {
            id: field(0)? as u32,
            x_nm: field(1)?,
            y_nm: field(2)?,
            alt_ft: field(3)?,
            heading_deg: field(4)?,
            speed_kt: field(5)?,
            fuel_min: field(6)?,
        });
    }
    snap.validate()?;
    Ok(snap)
}

pub fn write_plan_file(path: &Path, plans: &[FlightPlan]) -> Result<(), AirspaceError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(PLAN_HEADER.split(','))
        .map_err(|e| AirspaceError::Malformed(e.to_string()))?;
    for plan in plans {
        for (seq, wp) in plan.waypoints.iter().enumerate() {
            w.write_record([
                plan.owner.to_string(),
                seq.to_string(),
                wp.x_nm.to_string(),
                wp.y_nm.to_string(),
                wp.alt_ft.to_string(),
                wp.time.as_secs_f64().to_string(),
                plan.speed_kt.to_string(),
            ])
            .map_err(|e| AirspaceError::Malformed(e.to_string()))?;
        }
    }
    let body = w.into_inner().map_err(|e| AirspaceError::Malformed(e.to_string()))?;
    std::fs::write(path, body)?;
    Ok(())
}

pub fn read_plan_file(path: &Path) -> Result<Vec<FlightPlan>, AirspaceError> {
    let text = std::fs::read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    // (owner -> (speed, rows)) keyed and ordered by owner id.
    let mut grouped: BTreeMap<u32, (Scalar, Vec<(usize, Waypoint)>)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AirspaceError::Malformed(e.to_string()))?;
        let field = |i: usize| -> Result<Scalar, AirspaceError> {
            rec.get(i)
                .ok_or_else(|| AirspaceError::Malformed("short plan row".into()))?
                .parse::<Scalar>()
                .map_err(|e| AirspaceError::Malformed(e.to_string()))
        };
        let owner = field(0)? as u32;
        let seq = field(1)? as usize;
        let wp = Waypoint {
            x_nm: field(2)?,
            y_nm: field(3)?,
            alt_ft: field(4)?,
            time: SimTime::from_secs_f64(field(5)?),
        };
        let speed = field(6)?;
        grouped.entry(owner).or_insert_with(|| (speed, Vec::new())).1.push((seq, wp));
    }
    let mut plans = Vec::new();
    for (owner, (speed, mut rows)) in grouped {
        rows.sort_by_key(|(seq, _)| *seq);
        let waypoints = rows.into_iter().map(|(_, wp)| wp).collect();
        plans.push(FlightPlan::new_relaxed(owner, speed, waypoints)?);
    }
    Ok(plans)
}

/// Builds a snapshot by sampling every airborne plan at `t_s`. Fuel is
/// reported as a nominal constant since plans do not carry fuel state.
pub fn snapshot_from_plans(
    plans: &[FlightPlan],
    region_side_nm: Scalar,
    t_s: Scalar,
    day_of_week: u8,
    hour_of_day: u8,
) -> TrafficSnapshot {
    const NOMINAL_FUEL_MIN: Scalar = 240.0;
    let t = SimTime::from_secs_f64(t_s);
    let mut snap = TrafficSnapshot::new(region_side_nm, t_s, day_of_week, hour_of_day);
    for plan in plans {
        if let Some((x, y, alt)) = plan.position_at(t) {
            snap.aircraft.push(AircraftState {
                id: plan.owner,
                x_nm: x.clamp(0.0, region_side_nm),
                y_nm: y.clamp(0.0, region_side_nm),
                alt_ft: alt.max(0.0),
                heading_deg: plan.heading_at(t).unwrap_or(0.0),
                speed_kt: plan.speed_kt,
                fuel_min: NOMINAL_FUEL_MIN,
            });
        }
    }
    snap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::{generate_synthetic_traffic, random_snapshot, SectorGrid, TrafficProfile};

    #[test]
    fn snapshot_round_trip() {
        let snap = random_snapshot(3, 12, 100.0);
        let dir = std::env::temp_dir().join("airsynod_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.csv");
        write_snapshot_file(&path, &snap).unwrap();
        let back = read_snapshot_file(&path).unwrap();
        assert_eq!(snap, back);
    }

    #[test]
    fn plan_round_trip() {
        let grid = SectorGrid::new(2, 2, 100.0).unwrap();
        let plans = generate_synthetic_traffic(5, 8, &grid, TrafficProfile::Converging);
        let dir = std::env::temp_dir().join("airsynod_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("plans.csv");
        write_plan_file(&path, &plans).unwrap();
        let back = read_plan_file(&path).unwrap();
        assert_eq!(plans, back);
    }

    #[test]
    fn snapshot_from_plans_samples_airborne_only() {
        let grid = SectorGrid::new(2, 2, 100.0).unwrap();
        let plans = generate_synthetic_traffic(5, 8, &grid, TrafficProfile::Random);
        let snap = snapshot_from_plans(&plans, 100.0, 1.0, 0, 12);
        // Later entries have not departed yet at t=1s.
        assert!(snap.aircraft.len() <= plans.len());
        snap.validate().unwrap();
    }
}
