use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::calendar::{Frequency, Month};
use crate::error::{Error, Result};
use crate::series::{TimeSeries, TransformKind};

pub type MacroSeries = TimeSeries;

/// Loads a `date,value` CSV into a validated series.
pub fn load_macro(
    path: impl AsRef<Path>,
    name: &str,
    frequency: Frequency,
    transform: TransformKind,
) -> Result<MacroSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_macro(file, name, frequency, transform)
}

pub fn parse_macro(
    reader: impl Read,
    name: &str,
    frequency: Frequency,
    transform: TransformKind,
) -> Result<MacroSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Validation(format!("series {name}: {e}")))?
        .clone();
    if headers.len() != 2 || headers[0].trim() != "date" || headers[1].trim() != "value" {
        return Err(Error::Validation(format!(
            "series {name}: expected header `date,value`, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut obs: Vec<(Month, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Validation(format!("series {name} line {line}: {e}")))?;
        let raw_date = rec.get(0).unwrap_or("").trim();
        let raw_value = rec.get(1).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| Error::BadDate {
            id: format!("{name}:{line}"),
            value: raw_date.to_string(),
        })?;
        let month = Month::from_date(date);
        if date.day() != 1 || !frequency.accepts(month) {
            return Err(Error::FrequencyMismatch {
                series: name.to_string(),
                date: raw_date.to_string(),
                expected: frequency.name(),
            });
        }
        let value: f64 = raw_value.parse().map_err(|_| Error::NonNumeric {
            series: name.to_string(),
            line,
            value: raw_value.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonNumeric {
                series: name.to_string(),
                line,
                value: raw_value.to_string(),
            });
        }
        if let Some(&(prev, _)) = obs.last() {
            if month == prev {
                return Err(Error::DuplicatePeriod {
                    series: name.to_string(),
                    date: raw_date.to_string(),
                });
            }
            if month < prev {
                return Err(Error::NonMonotone {
                    series: name.to_string(),
                    date: raw_date.to_string(),
                });
            }
        }
        obs.push((month, value));
    }
    TimeSeries::new(name, frequency, transform, obs)
}

/// Writes a series as `date,value`.
pub fn write_series_csv(series: &TimeSeries, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Validation(e.to_string());
    w.write_record(["date", "value"]).map_err(io)?;
    for (m, v) in series.observations() {
        w.write_record([m.to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<series>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str, f: Frequency) -> Result<MacroSeries> {
        parse_macro(s.as_bytes(), "x", f, TransformKind::LogDifference)
    }

    #[test]
    fn twelve_monthly_rows() {
        let mut s = String::from("date,value\n");
        for m in 1..=12 {
            s.push_str(&format!("2000-{m:02}-01,{}\n", 100 + m));
        }
        assert_eq!(parse(&s, Frequency::Monthly).unwrap().len(), 12);
    }

    #[test]
    fn quarterly_file_with_monthly_dates() {
        let s = "date,value\n2000-01-01,1\n2000-02-01,2\n";
        assert!(matches!(parse(s, Frequency::Quarterly), Err(Error::FrequencyMismatch { .. })));
    }

    #[test]
    fn duplicate_period() {
        let s = "date,value\n2000-01-01,1\n2000-01-01,2\n";
        assert!(matches!(parse(s, Frequency::Monthly), Err(Error::DuplicatePeriod { .. })));
    }

    #[test]
    fn non_monotone() {
        let s = "date,value\n2000-02-01,1\n2000-01-01,2\n";
        assert!(matches!(parse(s, Frequency::Monthly), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn non_numeric() {
        let s = "date,value\n2000-01-01,abc\n";
        assert!(matches!(parse(s, Frequency::Monthly), Err(Error::NonNumeric { line: 2, .. })));
    }

    #[test]
    fn monthly_dates_must_be_first_of_month() {
        let s = "date,value\n2000-01-15,1\n";
        assert!(matches!(parse(s, Frequency::Monthly), Err(Error::FrequencyMismatch { .. })));
    }

    #[test]
    fn write_then_parse() {
        let s = "date,value\n2000-01-01,1.5\n2000-04-01,-2\n";
        let series = parse(s, Frequency::Quarterly).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&series, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap(), Frequency::Quarterly).unwrap(), series);
    }
}
