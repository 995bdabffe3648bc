//! Trip-log ingestion: CSV reading through a configurable column mapping,
//! outlier cleaning, hourly bucketing and travel-time resolution.

mod provider;
mod records;

pub use provider::{
    resolve_travel_times, HaversineProvider, HttpProvider, MatrixFileProvider, ProviderError, ProviderKind,
    TravelCache, TravelTimeProvider, MATRIX_KEY_ENV, MATRIX_URL_ENV,
};
pub use records::{read_records, read_records_from, write_records, write_records_to, ColumnMapping, RawTripRecord};

use crate::instance::{Period, TripRequest};
use crate::time::MINUTES_PER_DAY;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed CSV: {0}")]
    UnparsableFile(#[from] csv::Error),
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("column mapping: {0}")]
    Mapping(String),
    #[error("interval of {0} minutes does not divide the day")]
    BadInterval(i64),
    #[error("record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a record was dropped during cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DropReason {
    MissingField,
    SameOd,
    NegativeDistance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CleaningReport {
    pub total: usize,
    pub kept: usize,
    pub missing_field: usize,
    pub same_od: usize,
    pub negative_distance: usize,
}

impl CleaningReport {
    pub fn dropped(&self) -> usize {
        self.missing_field + self.same_od + self.negative_distance
    }
}

/// First cleaning rule a record violates, if any.
pub fn drop_reason(r: &RawTripRecord) -> Option<DropReason> {
    if !r.is_complete() {
        return Some(DropReason::MissingField);
    }
    if r.pickup_location() == r.dropoff_location() {
        return Some(DropReason::SameOd);
    }
    if r.distance_km.is_some_and(|d| d < 0.0) {
        return Some(DropReason::NegativeDistance);
    }
    None
}

/// Drops incomplete records, records whose origin equals their destination and
/// records with a negative recorded distance.
pub fn clean(records: Vec<RawTripRecord>) -> (Vec<RawTripRecord>, CleaningReport) {
    let mut report = CleaningReport { total: records.len(), ..Default::default() };
    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| match drop_reason(r) {
            None => true,
            Some(DropReason::MissingField) => {
                report.missing_field += 1;
                false
            }
            Some(DropReason::SameOd) => {
                report.same_od += 1;
                false
            }
            Some(DropReason::NegativeDistance) => {
                report.negative_distance += 1;
                false
            }
        })
        .collect();
    report.kept = kept.len();
    (kept, report)
}

/// Groups trips by the period containing their scheduled pickup. Empty periods
/// are omitted; each trip's `period` is set to its bucket.
pub fn bucket_by_period(
    trips: Vec<TripRequest>,
    interval_minutes: i64,
) -> Result<BTreeMap<Period, Vec<TripRequest>>, IngestError> {
    check_interval(interval_minutes)?;
    let mut buckets: BTreeMap<Period, Vec<TripRequest>> = BTreeMap::new();
    for mut t in trips {
        let p = Period::containing(t.scheduled_pickup, interval_minutes);
        t.period = p;
        buckets.entry(p).or_default().push(t);
    }
    Ok(buckets)
}

pub(crate) fn check_interval(interval_minutes: i64) -> Result<(), IngestError> {
    if interval_minutes <= 0 || MINUTES_PER_DAY % interval_minutes != 0 {
        return Err(IngestError::BadInterval(interval_minutes));
    }
    Ok(())
}
