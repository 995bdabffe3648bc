use super::{check_interval, IngestError};
use crate::geo::GeoPoint;
use crate::instance::{Direction, Period, TripRequest};
use crate::time::parse_clock;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

/// One row of a trip log, possibly dirty. Times are minutes of the day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawTripRecord {
    pub id: Option<String>,
    pub date: Option<String>,
    pub direction: Option<Direction>,
    pub scheduled_pickup: Option<i64>,
    pub scheduled_dropoff: Option<i64>,
    pub actual_pickup: Option<i64>,
    pub actual_dropoff: Option<i64>,
    pub appointment: Option<i64>,
    pub pickup_lat: Option<f64>,
    pub pickup_lon: Option<f64>,
    pub dropoff_lat: Option<f64>,
    pub dropoff_lon: Option<f64>,
    pub distance_km: Option<f64>,
    pub cost: Option<f64>,
    pub mobility_aid: Option<bool>,
}

impl RawTripRecord {
    /// All fields the pipeline consumes are present. Appointment, cost and the
    /// mobility-aid flag are informational.
    pub fn is_complete(&self) -> bool {
        self.id.is_some()
            && self.date.is_some()
            && self.direction.is_some()
            && self.scheduled_pickup.is_some()
            && self.scheduled_dropoff.is_some()
            && self.actual_pickup.is_some()
            && self.actual_dropoff.is_some()
            && self.pickup_lat.is_some()
            && self.pickup_lon.is_some()
            && self.dropoff_lat.is_some()
            && self.dropoff_lon.is_some()
            && self.distance_km.is_some()
    }

    pub fn pickup_location(&self) -> Option<GeoPoint> {
        Some(GeoPoint::new(self.pickup_lat?, self.pickup_lon?))
    }

    pub fn dropoff_location(&self) -> Option<GeoPoint> {
        Some(GeoPoint::new(self.dropoff_lat?, self.dropoff_lon?))
    }

    fn label(&self) -> String {
        self.id.clone().unwrap_or_else(|| "<no id>".into())
    }

    /// Converts a clean record into a request whose period is the
    /// `interval_minutes` bucket of its scheduled pickup.
    pub fn to_trip_request(&self, interval_minutes: i64) -> Result<TripRequest, IngestError> {
        check_interval(interval_minutes)?;
        let missing = || IngestError::InvalidRecord { id: self.label(), reason: "incomplete record".into() };
        let pickup = self.scheduled_pickup.ok_or_else(missing)?;
        let trip = TripRequest {
            id: self.id.clone().ok_or_else(missing)?,
            direction: self.direction.ok_or_else(missing)?,
            pickup_location: self.pickup_location().ok_or_else(missing)?,
            dropoff_location: self.dropoff_location().ok_or_else(missing)?,
            scheduled_pickup: pickup,
            scheduled_dropoff: self.scheduled_dropoff.ok_or_else(missing)?,
            period: Period::containing(pickup, interval_minutes),
        };
        trip.validate().map_err(|e| IngestError::InvalidRecord { id: self.label(), reason: e.to_string() })?;
        Ok(trip)
    }
}

/// CSV header name for each logical field. Loaded from a JSON mapping file;
/// the default matches the bundled trip-log layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub id: String,
    pub date: String,
    pub direction: String,
    pub scheduled_pickup: String,
    pub scheduled_dropoff: String,
    pub actual_pickup: String,
    pub actual_dropoff: String,
    pub appointment: String,
    pub pickup_lat: String,
    pub pickup_lon: String,
    pub dropoff_lat: String,
    pub dropoff_lon: String,
    pub distance_km: String,
    pub cost: String,
    pub mobility_aid: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            id: "trip_id".into(),
            date: "date".into(),
            direction: "direction".into(),
            scheduled_pickup: "scheduled_pickup".into(),
            scheduled_dropoff: "scheduled_dropoff".into(),
            actual_pickup: "actual_pickup".into(),
            actual_dropoff: "actual_dropoff".into(),
            appointment: "appointment".into(),
            pickup_lat: "pickup_lat".into(),
            pickup_lon: "pickup_lon".into(),
            dropoff_lat: "dropoff_lat".into(),
            dropoff_lon: "dropoff_lon".into(),
            distance_km: "odometer_km".into(),
            cost: "cost_usd".into(),
            mobility_aid: "mobility_aid".into(),
        }
    }
}

impl ColumnMapping {
    pub fn from_json_file(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| IngestError::Mapping(e.to_string()))
    }
}

fn parse_direction(s: &str) -> Option<Direction> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inbound" | "in" | "i" | "to" => Some(Direction::Inbound),
        "outbound" | "out" | "o" | "from" => Some(Direction::Outbound),
        _ => None,
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "y" | "yes" | "true" => Some(true),
        "0" | "n" | "no" | "false" => Some(false),
        _ => None,
    }
}

pub fn read_records(path: &Path, mapping: &ColumnMapping) -> Result<Vec<RawTripRecord>, IngestError> {
    read_records_from(std::fs::File::open(path)?, mapping)
}

/// Reads trip records. Empty or unparsable cells become `None`; structural CSV
/// errors and missing mapped columns are errors.
pub fn read_records_from<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<Vec<RawTripRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize, IngestError> {
        headers.iter().position(|h| h == name).ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    // Informational columns may be absent from the file entirely.
    let opt_col = |name: &str| headers.iter().position(|h| h == name);
    let c_id = col(&mapping.id)?;
    let c_date = col(&mapping.date)?;
    let c_dir = col(&mapping.direction)?;
    let c_sp = col(&mapping.scheduled_pickup)?;
    let c_sd = col(&mapping.scheduled_dropoff)?;
    let c_ap = col(&mapping.actual_pickup)?;
    let c_ad = col(&mapping.actual_dropoff)?;
    let c_plat = col(&mapping.pickup_lat)?;
    let c_plon = col(&mapping.pickup_lon)?;
    let c_dlat = col(&mapping.dropoff_lat)?;
    let c_dlon = col(&mapping.dropoff_lon)?;
    let c_dist = col(&mapping.distance_km)?;
    let c_appt = opt_col(&mapping.appointment);
    let c_cost = opt_col(&mapping.cost);
    let c_aid = opt_col(&mapping.mobility_aid);

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let cell = |c: usize| row.get(c).map(str::trim).filter(|s| !s.is_empty());
        let text = |c: usize| cell(c).map(str::to_string);
        let num = |c: usize| cell(c).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
        let clock = |c: usize| cell(c).and_then(parse_clock);
        out.push(RawTripRecord {
            id: text(c_id),
            date: text(c_date),
            direction: cell(c_dir).and_then(parse_direction),
            scheduled_pickup: clock(c_sp),
            scheduled_dropoff: clock(c_sd),
            actual_pickup: clock(c_ap),
            actual_dropoff: clock(c_ad),
            appointment: c_appt.and_then(clock),
            pickup_lat: num(c_plat),
            pickup_lon: num(c_plon),
            dropoff_lat: num(c_dlat),
            dropoff_lon: num(c_dlon),
            distance_km: num(c_dist),
            cost: c_cost.and_then(num),
            mobility_aid: c_aid.and_then(|c| cell(c)).and_then(parse_bool),
        });
    }
    Ok(out)
}

/// Writes records with the mapping's headers; times as `HH:MM`.
pub fn write_records_to<W: std::io::Write>(
    writer: W,
    records: &[RawTripRecord],
    mapping: &ColumnMapping,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        &mapping.id,
        &mapping.date,
        &mapping.direction,
        &mapping.scheduled_pickup,
        &mapping.scheduled_dropoff,
        &mapping.actual_pickup,
        &mapping.actual_dropoff,
        &mapping.appointment,
        &mapping.pickup_lat,
        &mapping.pickup_lon,
        &mapping.dropoff_lat,
        &mapping.dropoff_lon,
        &mapping.distance_km,
        &mapping.cost,
        &mapping.mobility_aid,
    ])?;
    let clock = |m: Option<i64>| m.map(crate::time::format_clock).unwrap_or_default();
    let num = |v: Option<f64>, digits: usize| v.map(|x| format!("{x:.digits$}")).unwrap_or_default();
    for r in records {
        let direction = match r.direction {
            Some(Direction::Inbound) => "inbound",
            Some(Direction::Outbound) => "outbound",
            None => "",
        };
        w.write_record([
            r.id.clone().unwrap_or_default(),
            r.date.clone().unwrap_or_default(),
            direction.to_string(),
            clock(r.scheduled_pickup),
            clock(r.scheduled_dropoff),
            clock(r.actual_pickup),
            clock(r.actual_dropoff),
            clock(r.appointment),
            num(r.pickup_lat, 6),
            num(r.pickup_lon, 6),
            num(r.dropoff_lat, 6),
            num(r.dropoff_lon, 6),
            num(r.distance_km, 1),
            num(r.cost, 2),
            r.mobility_aid.map(|b| if b { "yes" } else { "no" }.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(path: &Path, records: &[RawTripRecord], mapping: &ColumnMapping) -> Result<(), IngestError> {
    write_records_to(std::fs::File::create(path)?, records, mapping)
}
