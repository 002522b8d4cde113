//! Clock arithmetic on the service day.
//!
//! Simulated and scheduled times are measured in minutes since midnight of
//! the service date. Values past 24:00 are legal and denote post-midnight
//! parts of the same service day.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MINUTES_PER_HOUR: f64 = 60.0;
pub const HOURS_PER_DAY: usize = 24;

/// Latest time of day a schedule entry may carry (27:59).
pub const MAX_SCHEDULE_MINUTES: u32 = 27 * 60 + 59;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeParseError {
    #[error("invalid time of day {0:?}, expected HH:MM or HH:MM:SS")]
    Format(String),
    #[error("time of day {0:?} is outside 00:00-27:59")]
    Range(String),
}

/// Hour bucket (0-23) of a clock value, wrapping post-midnight minutes.
pub fn hour_of(minutes: f64) -> u8 {
    ((minutes / MINUTES_PER_HOUR).floor() as i64).rem_euclid(HOURS_PER_DAY as i64) as u8
}

/// A point on the service-day clock, in minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClockTime(f64);

impl ClockTime {
    pub const fn from_minutes(minutes: f64) -> Self {
        ClockTime(minutes)
    }

    pub fn from_hm(hours: u32, minutes: u32) -> Self {
        ClockTime(f64::from(hours * 60 + minutes))
    }

    /// Position of a timestamp on the clock of `service_date`.
    pub fn on_service_day(service_date: NaiveDate, timestamp: NaiveDateTime) -> Self {
        let midnight = service_date.and_hms_opt(0, 0, 0).expect("midnight exists");
        let secs = (timestamp - midnight).num_seconds();
        ClockTime(secs as f64 / 60.0)
    }

    pub fn minutes(self) -> f64 {
        self.0
    }

    pub fn hour(self) -> u8 {
        hour_of(self.0)
    }

    pub fn plus_minutes(self, minutes: f64) -> Self {
        ClockTime(self.0 + minutes)
    }
}

impl Add<f64> for ClockTime {
    type Output = ClockTime;

    fn add(self, rhs: f64) -> ClockTime {
        ClockTime(self.0 + rhs)
    }
}

impl Sub for ClockTime {
    type Output = f64;

    fn sub(self, rhs: ClockTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for ClockTime {
    /// `HH:MM:SS`, rounded to the nearest second; `HH` may exceed 23.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = (self.0 * 60.0).round() as i64;
        let (sign, total) = if total < 0 {
            ("-", -total)
        } else {
            ("", total)
        };
        write!(
            f,
            "{sign}{:02}:{:02}:{:02}",
            total / 3600,
            (total / 60) % 60,
            total % 60
        )
    }
}

impl FromStr for ClockTime {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, m, sec) = split_hms(s)?;
        if h * 60 + m > MAX_SCHEDULE_MINUTES {
            return Err(TimeParseError::Range(s.to_string()));
        }
        Ok(ClockTime(f64::from(h * 60 + m) + f64::from(sec) / 60.0))
    }
}

/// A scheduled departure, whole minutes since midnight (`HH:MM`, up to 27:59).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ScheduleTime(u32);

impl ScheduleTime {
    pub fn from_minutes(minutes: u32) -> Result<Self, TimeParseError> {
        if minutes > MAX_SCHEDULE_MINUTES {
            return Err(TimeParseError::Range(minutes.to_string()));
        }
        Ok(ScheduleTime(minutes))
    }

    pub fn minutes(self) -> u32 {
        self.0
    }

    pub fn clock(self) -> ClockTime {
        ClockTime(f64::from(self.0))
    }
}

impl fmt::Display for ScheduleTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ScheduleTime {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, m, sec) = split_hms(s)?;
        if sec != 0 {
            return Err(TimeParseError::Format(s.to_string()));
        }
        let minutes = h * 60 + m;
        if minutes > MAX_SCHEDULE_MINUTES {
            return Err(TimeParseError::Range(s.to_string()));
        }
        Ok(ScheduleTime(minutes))
    }
}

impl From<ScheduleTime> for String {
    fn from(t: ScheduleTime) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for ScheduleTime {
    type Error = TimeParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

fn split_hms(s: &str) -> Result<(u32, u32, u32), TimeParseError> {
    let bad = || TimeParseError::Format(s.to_string());
    let mut parts = s.trim().split(':');
    let mut field = |max: u32| -> Result<Option<u32>, TimeParseError> {
        match parts.next() {
            None => Ok(None),
            Some(p) if p.len() == 2 && p.bytes().all(|b| b.is_ascii_digit()) => {
                let v: u32 = p.parse().map_err(|_| bad())?;
                if v > max {
                    Err(bad())
                } else {
                    Ok(Some(v))
                }
            }
            Some(_) => Err(bad()),
        }
    };
    let h = field(99)?.ok_or_else(bad)?;
    let m = field(59)?.ok_or_else(bad)?;
    let sec = field(59)?.unwrap_or(0);
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((h, m, sec))
}

/// Hour of a local timestamp.
pub fn timestamp_hour(ts: NaiveDateTime) -> u8 {
    ts.hour() as u8
}
