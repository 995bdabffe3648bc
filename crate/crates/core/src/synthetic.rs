//! Seeded instance generators: small random instances for cross-checking the
//! solver, and a synthetic day of paratransit trips standing in for a
//! private operational log.

use crate::geo::{haversine_km, haversine_minutes, GeoPoint};
use crate::ingestion::RawTripRecord;
use crate::instance::{
    build_instance_with_matrix, Direction, Fleet, Instance, InstanceConfig, InstanceError, ModelKind, Period,
    TripRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Parameters of [`random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    pub vehicles: usize,
    pub capacity: u32,
    pub model_kind: ModelKind,
    /// Upper bound on every travel time, in whole minutes.
    pub max_travel: u32,
    /// Extra minutes between the earliest possible and the scheduled dropoff.
    pub max_slack: i64,
    pub period: Period,
    pub config: InstanceConfig,
}

impl RandomSpec {
    pub fn new(n: usize, vehicles: usize, model_kind: ModelKind) -> Self {
        RandomSpec {
            n,
            vehicles,
            capacity: 7,
            model_kind,
            max_travel: 60,
            max_slack: 20,
            period: Period { start: 480, end: 540 },
            config: InstanceConfig { model_kind, ..Default::default() },
        }
    }
}

/// Points on a plane with rounded Euclidean travel times in whole minutes, so
/// times are nearly metric but not exactly.
fn integer_matrix(rng: &mut ChaCha8Rng, points: &[(f64, f64)], cap: u32) -> Vec<Vec<f64>> {
    let k = points.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let (a, b) = (points[i], points[j]);
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                let noise: f64 = rng.random_range(-1.0..=1.0);
                m[i][j] = (d + noise).round().clamp(1.0, cap as f64);
            }
        }
    }
    m
}

/// A random instance with integer-minute travel times. Scheduled times are
/// drawn so that each request is individually plausible; whether the whole
/// instance is feasible depends on the draw.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Result<Instance, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let half = spec.max_travel as f64 / 2.0;
    let point = |rng: &mut ChaCha8Rng| (rng.random_range(0.0..half), rng.random_range(0.0..half));
    let depot = point(&mut rng);
    let pickups: Vec<_> = (0..n).map(|_| point(&mut rng)).collect();
    let dropoffs: Vec<_> = (0..n).map(|_| point(&mut rng)).collect();
    let mut points = vec![depot];
    points.extend(&pickups);
    points.extend(&dropoffs);
    points.push(depot);
    let minutes = integer_matrix(&mut rng, &points, spec.max_travel);

    let mut requests = Vec::with_capacity(n);
    for r in 0..n {
        let direction = if rng.random_bool(0.5) { Direction::Inbound } else { Direction::Outbound };
        let pickup = rng.random_range(spec.period.start..spec.period.end);
        let ride = minutes[1 + r][1 + n + r] as i64;
        let dropoff = pickup + spec.config.boarding + ride + rng.random_range(0..=spec.max_slack);
        requests.push(TripRequest {
            id: format!("r{}", r + 1),
            direction,
            pickup_location: GeoPoint::new(pickups[r].0, pickups[r].1),
            dropoff_location: GeoPoint::new(dropoffs[r].0, dropoffs[r].1),
            scheduled_pickup: pickup,
            scheduled_dropoff: dropoff,
            period: spec.period,
        });
    }
    let fleet = Fleet::uniform(spec.vehicles, spec.capacity, GeoPoint::new(depot.0, depot.1));
    let config = InstanceConfig { model_kind: spec.model_kind, ..spec.config.clone() };
    build_instance_with_matrix(&requests, &fleet, &config, &minutes)
}

/// Wadesboro, North Carolina.
pub const DEPOT: GeoPoint = GeoPoint::new(34.9682, -80.0767);

/// Health-care facilities served by the synthetic day, with their share of trips.
const FACILITIES: [(GeoPoint, f64); 4] = [
    (GeoPoint::new(34.9760, -80.0685), 0.68),
    (GeoPoint::new(34.9943, -80.5237), 0.11),
    (GeoPoint::new(34.9388, -79.7673), 0.11),
    (GeoPoint::new(35.3507, -80.2001), 0.1),
];

/// Trips per hour of the synthetic day, by starting hour. 32 of 58 trips
/// (55.2 %) fall between 9 am and 1 pm.
pub const DAY_PROFILE: [(i64, usize); 11] =
    [(5, 1), (6, 4), (7, 6), (8, 5), (9, 8), (10, 8), (11, 8), (12, 8), (13, 4), (15, 2), (16, 4)];

pub const SYNTHETIC_DATE: &str = "2019-07-15";
pub const SYNTHETIC_SPEED_KMH: f64 = 40.0;

/// Moves `from` by `km` along `bearing` (radians), flat-earth approximation.
fn offset(from: GeoPoint, km: f64, bearing: f64) -> GeoPoint {
    let dlat = km * bearing.cos() / 111.0;
    let dlon = km * bearing.sin() / (111.0 * from.lat.to_radians().cos());
    GeoPoint::new(from.lat + dlat, from.lon + dlon)
}

/// A day of 58 trip records with scheduled and actual times, deterministic in `seed`.
pub fn synthetic_day(seed: u64) -> Vec<RawTripRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let boarding = InstanceConfig::default().boarding;
    for &(hour, count) in &DAY_PROFILE {
        for _ in 0..count {
            let id = format!("T{:03}", out.len() + 1);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut facility = FACILITIES[0].0;
            for &(f, share) in &FACILITIES {
                acc += share;
                if u < acc {
                    facility = f;
                    break;
                }
            }
            // Homes cluster around the county seat; local clinic patients live closer.
            let radius = if facility == FACILITIES[0].0 { 14.0 } else { 9.0 };
            let home = offset(DEPOT, radius * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
            let direction = if hour < 11 || (hour < 13 && rng.random_bool(0.4)) || (hour == 13 && rng.random_bool(0.2))
            {
                Direction::Inbound
            } else {
                Direction::Outbound
            };
            let (from, to) = match direction {
                Direction::Inbound => (home, facility),
                Direction::Outbound => (facility, home),
            };
            let ride = haversine_minutes(from, to, SYNTHETIC_SPEED_KMH).ceil() as i64;
            let pickup = hour * 60 + rng.random_range(0..60);
            let dropoff = pickup + boarding + ride + rng.random_range(3..=15);
            let appointment = match direction {
                Direction::Inbound => Some((dropoff + 14) / 15 * 15),
                Direction::Outbound => None,
            };
            // Observed operations: late and early pickups, detours from shared rides.
            let actual_pickup = pickup + rng.random_range(-12..=25);
            let actual_dropoff = actual_pickup + boarding + ride + rng.random_range(0..=20);
            let km = haversine_km(from, to) * 1.25;
            out.push(RawTripRecord {
                id: Some(id),
                date: Some(SYNTHETIC_DATE.into()),
                direction: Some(direction),
                scheduled_pickup: Some(pickup),
                scheduled_dropoff: Some(dropoff),
                actual_pickup: Some(actual_pickup),
                actual_dropoff: Some(actual_dropoff),
                appointment,
                pickup_lat: Some(from.lat),
                pickup_lon: Some(from.lon),
                dropoff_lat: Some(to.lat),
                dropoff_lon: Some(to.lon),
                distance_km: Some((km * 10.0).round() / 10.0),
                cost: Some(((4.0 + 1.1 * km) * 100.0).round() / 100.0),
                mobility_aid: Some(rng.random_bool(0.15)),
            });
        }
    }
    out
}

/// The seed of the shipped fixture.
pub const FIXTURE_SEED: u64 = 2019;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_are_deterministic() {
        let spec = RandomSpec::new(3, 2, ModelKind::Operator);
        let a = random_instance(7, &spec).unwrap();
        let b = random_instance(7, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.arcs.iter().all(|arc| arc.time.minutes() <= 60.0 && arc.time.minutes().fract() == 0.0));
    }

    #[test]
    fn synthetic_day_matches_profile() {
        let day = synthetic_day(FIXTURE_SEED);
        assert_eq!(day.len(), 58);
        let core = day.iter().filter(|r| (540..780).contains(&r.scheduled_pickup.unwrap())).count();
        assert_eq!(core, 32);
        let short = day.iter().filter(|r| r.distance_km.unwrap() < 20.0).count() as f64 / 58.0;
        assert!((0.62..=0.68).contains(&short), "{short}");
        assert!(day.iter().all(|r| r.is_complete()));
        assert_eq!(day, synthetic_day(FIXTURE_SEED));
    }

    /// Set `PARADARP_WRITE_FIXTURE=1` to rewrite the file after a generator change.
    #[test]
    fn shipped_fixture_matches_generator() {
        use crate::ingestion::{write_records_to, ColumnMapping};
        let mut bytes = Vec::new();
        write_records_to(&mut bytes, &synthetic_day(FIXTURE_SEED), &ColumnMapping::default()).unwrap();
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_day.csv");
        if std::env::var_os("PARADARP_WRITE_FIXTURE").is_some() {
            std::fs::write(&path, &bytes).unwrap();
        }
        assert!(std::fs::read(&path).unwrap() == bytes, "{} is stale", path.display());
    }
}
