//! Monthly and quarterly period arithmetic.
//!
//! Every dated quantity in the crate lives on a monthly grid. A [`Month`] is a
//! plain ordinal (`year * 12 + month - 1`), so successor, lag, and distance are
//! integer operations. Quarterly series are stored on the same grid, keyed by
//! the first month of each quarter.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Month(year * 12 + month as i32 - 1)
    }

    pub fn from_ordinal(ordinal: i32) -> Self {
        Month(ordinal)
    }

    pub fn ordinal(self) -> i32 {
        self.0
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// Calendar month, 1-based.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Month::new(date.year(), date.month())
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year(), self.month(), 1).expect("valid first-of-month")
    }

    pub fn succ(self) -> Self {
        Month(self.0 + 1)
    }

    pub fn pred(self) -> Self {
        Month(self.0 - 1)
    }

    pub fn offset(self, months: i32) -> Self {
        Month(self.0 + months)
    }

    /// Signed number of months from `other` to `self`.
    pub fn since(self, other: Month) -> i32 {
        self.0 - other.0
    }

    /// First month of the quarter containing this month.
    pub fn quarter_start(self) -> Self {
        Month(self.0 - self.0.rem_euclid(12) % 3)
    }

    pub fn is_quarter_start(self) -> bool {
        (self.month() - 1) % 3 == 0
    }

    /// Inclusive range of months.
    pub fn range_inclusive(start: Month, end: Month) -> impl Iterator<Item = Month> {
        (start.0..=end.0).map(Month)
    }

    /// Parses `YYYY-MM-DD` (day must be 01) or `YYYY-MM`.
    pub fn parse_period(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return (d.day() == 1).then(|| Month::from_date(d));
        }
        let (y, m) = s.split_once('-')?;
        if m.len() != 2 {
            return None;
        }
        let y: i32 = y.parse().ok()?;
        let m: u32 = m.parse().ok()?;
        (1..=12).contains(&m).then(|| Month::new(y, m))
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-01", self.year(), self.month())
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Month::parse_period(s).ok_or_else(|| Error::Validation(format!("bad month {s:?}")))
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Month::parse_period(&s).ok_or_else(|| serde::de::Error::custom(format!("bad month {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Monthly,
    Quarterly,
}

impl Frequency {
    /// Months per period.
    pub fn step(self) -> i32 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
        }
    }

    pub fn accepts(self, m: Month) -> bool {
        match self {
            Frequency::Monthly => true,
            Frequency::Quarterly => m.is_quarter_start(),
        }
    }

    /// Default annualization constant for growth transforms.
    pub fn annualization(self) -> f64 {
        match self {
            Frequency::Monthly => 1200.0,
            Frequency::Quarterly => 400.0,
        }
    }
}

/// Closed interval of months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Month,
    pub end: Month,
}

impl Window {
    pub fn new(start: Month, end: Month) -> Result<Self> {
        if end < start {
            return Err(Error::Validation(format!("window end {end} precedes start {start}")));
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, m: Month) -> bool {
        self.start <= m && m <= self.end
    }

    pub fn len(&self) -> usize {
        (self.end.since(self.start) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinal_round_trip() {
        let m = Month::new(1892, 6);
        assert_eq!(m.year(), 1892);
        assert_eq!(m.month(), 6);
        assert_eq!(m.to_string(), "1892-06-01");
        assert_eq!(Month::new(1973, 12).succ(), Month::new(1974, 1));
        assert_eq!(Month::new(1974, 1).pred(), Month::new(1973, 12));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(Month::parse_period("1973-01-01"), Some(Month::new(1973, 1)));
        assert_eq!(Month::parse_period("1987-12"), Some(Month::new(1987, 12)));
        assert_eq!(Month::parse_period("1987-12-15"), None);
        assert_eq!(Month::parse_period("1987-13"), None);
    }

    #[test]
    fn quarters() {
        assert_eq!(Month::new(2001, 5).quarter_start(), Month::new(2001, 4));
        assert!(Month::new(2001, 10).is_quarter_start());
        assert!(!Month::new(2001, 11).is_quarter_start());
    }

    #[test]
    fn training_window_is_180_months() {
        let w = Window::new(Month::new(1973, 1), Month::new(1987, 12)).unwrap();
        assert_eq!(w.len(), 180);
    }
}
