//! Time units. Clock times are whole minutes of the day; travel times are
//! fixed-point tenths of a minute.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};

pub const MINUTES_PER_DAY: i64 = 1440;

/// A duration or clock time in tenths of a minute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tenths(pub i64);

impl Tenths {
    pub const ZERO: Tenths = Tenths(0);

    pub const fn from_minutes(m: i64) -> Self {
        Tenths(m * 10)
    }

    /// Rounds half-up to one decimal place.
    pub fn from_minutes_f64(m: f64) -> Self {
        Tenths((m * 10.0 + 0.5).floor() as i64)
    }

    pub fn minutes(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl Add for Tenths {
    type Output = Tenths;
    fn add(self, rhs: Tenths) -> Tenths {
        Tenths(self.0 + rhs.0)
    }
}

impl Sub for Tenths {
    type Output = Tenths;
    fn sub(self, rhs: Tenths) -> Tenths {
        Tenths(self.0 - rhs.0)
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 10 == 0 {
            write!(f, "{}", self.0 / 10)
        } else {
            write!(f, "{}", self.minutes())
        }
    }
}

/// Parses "HH:MM", "HH:MM:SS" or an ISO-8601 datetime ("YYYY-MM-DDTHH:MM[:SS]")
/// into minutes of the day. Seconds are truncated.
pub fn parse_clock(s: &str) -> Option<i64> {
    let s = s.trim();
    let clock = match s.find(['T', ' ']) {
        Some(pos) if s[..pos].contains('-') => &s[pos + 1..],
        _ => s,
    };
    // Drop any zone suffix; timestamps are local time.
    let clock = clock.split(|c| c == 'Z' || c == '+' || (c == '-')).next().unwrap_or(clock);
    let mut parts = clock.split(':');
    let h: i64 = parts.next()?.trim().parse().ok()?;
    let m: i64 = parts.next()?.trim().parse().ok()?;
    if let Some(sec) = parts.next() {
        let sec: f64 = sec.trim().parse().ok()?;
        if !(0.0..60.0).contains(&sec) {
            return None;
        }
    }
    if !(0..24).contains(&h) || !(0..60).contains(&m) {
        return None;
    }
    Some(h * 60 + m)
}

pub fn format_clock(minutes: i64) -> String {
    format!("{:02}:{:02}", minutes.div_euclid(60), minutes.rem_euclid(60))
}
