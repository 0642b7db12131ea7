use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Day number relative to 1970-01-01.
pub type Day = i32;

pub fn day_from_date(date: NaiveDate) -> Day {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    date.signed_duration_since(epoch).num_days() as Day
}

pub fn date_from_day(day: Day) -> NaiveDate {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    epoch + Duration::days(day as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridUnit {
    Week,
    Month,
}

impl GridUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            GridUnit::Week => "week",
            GridUnit::Month => "month",
        }
    }
}

impl std::str::FromStr for GridUnit {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "week" => Ok(GridUnit::Week),
            "month" => Ok(GridUnit::Month),
            other => Err(format!("unknown grid unit {other:?}; use week or month")),
        }
    }
}

/// Default observation window: one year before the cohort start through five
/// years after it.
pub const MONTH_RANGE: (i32, i32) = (-12, 59);
pub const WEEK_RANGE: (i32, i32) = (-52, 260);

/// Cohort-relative bucket grid. Index 0 is the bucket containing the cohort
/// start date. Weekly buckets are 7-day windows anchored at the start date;
/// monthly buckets are calendar months offset from the start month.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    origin: Day,
    unit: GridUnit,
    /// Inclusive bucket index range.
    start: i32,
    end: i32,
}

impl TimeGrid {
    pub fn new(origin: Day, unit: GridUnit, start: i32, end: i32) -> Self {
        assert!(start <= 0 && end >= 0, "grid must contain index 0");
        TimeGrid {
            origin,
            unit,
            start,
            end,
        }
    }

    pub fn monthly(origin: Day) -> Self {
        Self::new(origin, GridUnit::Month, MONTH_RANGE.0, MONTH_RANGE.1)
    }

    pub fn weekly(origin: Day) -> Self {
        Self::new(origin, GridUnit::Week, WEEK_RANGE.0, WEEK_RANGE.1)
    }

    pub fn with_unit(origin: Day, unit: GridUnit) -> Self {
        match unit {
            GridUnit::Month => Self::monthly(origin),
            GridUnit::Week => Self::weekly(origin),
        }
    }

    pub fn origin(&self) -> Day {
        self.origin
    }

    pub fn unit(&self) -> GridUnit {
        self.unit
    }

    pub fn first_index(&self) -> i32 {
        self.start
    }

    pub fn last_index(&self) -> i32 {
        self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn contains(&self, idx: i32) -> bool {
        idx >= self.start && idx <= self.end
    }

    pub fn check_index(&self, idx: i32) -> Result<()> {
        if self.contains(idx) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                idx,
                lo: self.start,
                hi: self.end,
            })
        }
    }

    /// Bucket index of a day, unbounded by the grid range.
    pub fn raw_index_of(&self, day: Day) -> i32 {
        match self.unit {
            GridUnit::Week => (day - self.origin).div_euclid(7),
            GridUnit::Month => {
                let d = date_from_day(day);
                let o = date_from_day(self.origin);
                (d.year() - o.year()) * 12 + (d.month() as i32 - o.month() as i32)
            }
        }
    }

    /// Bucket index of a day, or None when the day falls outside the range.
    pub fn index_of(&self, day: Day) -> Option<i32> {
        let idx = self.raw_index_of(day);
        self.contains(idx).then_some(idx)
    }

    /// First day of the bucket (inclusive).
    pub fn bucket_start(&self, idx: i32) -> Day {
        match self.unit {
            GridUnit::Week => self.origin + 7 * idx,
            GridUnit::Month => {
                let o = date_from_day(self.origin);
                let months = o.year() * 12 + (o.month() as i32 - 1) + idx;
                let (y, m) = (months.div_euclid(12), months.rem_euclid(12) + 1);
                day_from_date(NaiveDate::from_ymd_opt(y, m as u32, 1).unwrap())
            }
        }
    }

    /// Last day of the bucket (inclusive). Snapshots at `idx` contain every
    /// edge with `t <= bucket_end(idx)`.
    pub fn bucket_end(&self, idx: i32) -> Day {
        match self.unit {
            GridUnit::Week => self.origin + 7 * idx + 6,
            GridUnit::Month => self.bucket_start(idx + 1) - 1,
        }
    }
}
