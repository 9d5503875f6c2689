use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub title: String,
    pub body: String,
}

impl Document {
    pub fn month(&self) -> Month {
        Month::from_date(self.date)
    }
}

/// Inclusive calendar-date filter applied while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub loaded: usize,
    pub dropped_empty: usize,
    pub out_of_range: usize,
    /// Months between the first and last retained document with no documents.
    pub gaps: Vec<Month>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    date: String,
    title: String,
    body: String,
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    date_range: Option<DateRange>,
) -> Result<(Vec<Document>, IngestReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), path, date_range)
}

/// Parses JSON-lines records; `origin` only labels error messages.
pub fn parse_corpus(
    reader: impl BufRead,
    origin: &Path,
    date_range: Option<DateRange>,
) -> Result<(Vec<Document>, IngestReport)> {
    let mut docs = Vec::new();
    let mut report = IngestReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: origin.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(rec.date.trim(), "%Y-%m-%d").map_err(|_| Error::BadDate {
            id: rec.id.clone(),
            value: rec.date.clone(),
        })?;
        if rec.body.trim().is_empty() {
            report.dropped_empty += 1;
            continue;
        }
        if let Some(r) = date_range {
            if !r.contains(date) {
                report.out_of_range += 1;
                continue;
            }
        }
        docs.push(Document {
            id: rec.id,
            date,
            title: rec.title,
            body: rec.body,
        });
    }
    docs.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.id.cmp(&b.id)));
    report.loaded = docs.len();
    report.gaps = month_gaps(&docs);
    Ok((docs, report))
}

fn month_gaps(docs: &[Document]) -> Vec<Month> {
    let present: BTreeSet<Month> = docs.iter().map(Document::month).collect();
    let (Some(&first), Some(&last)) = (present.first(), present.last()) else {
        return Vec::new();
    };
    Month::range_inclusive(first, last)
        .filter(|m| !present.contains(m))
        .collect()
}

/// Writes documents in the JSON-lines corpus format.
pub fn write_corpus(docs: &[Document], mut out: impl Write) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Rec<'a> {
        id: &'a str,
        date: String,
        title: &'a str,
        body: &'a str,
    }
    for d in docs {
        let rec = Rec {
            id: &d.id,
            date: d.date.format("%Y-%m-%d").to_string(),
            title: &d.title,
            body: &d.body,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<(Vec<Document>, IngestReport)> {
        parse_corpus(s.as_bytes(), Path::new("test.jsonl"), None)
    }

    fn rec(id: &str, date: &str, body: &str) -> String {
        format!(r#"{{"id":"{id}","date":"{date}","title":"t {id}","body":"{body}"}}"#)
    }

    #[test]
    fn empty_bodies_are_dropped() {
        let input = [rec("a", "1990-01-03", "x"), rec("b", "1990-01-04", "  "), rec("c", "1990-01-05", "y")].join("\n");
        let (docs, report) = parse(&input).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(report.dropped_empty, 1);
        assert_eq!(report.loaded, 2);
    }

    #[test]
    fn missing_months_reported_as_gaps() {
        let input = [rec("a", "1891-12-30", "x"), rec("b", "1892-07-01", "y")].join("\n");
        let (_, report) = parse(&input).unwrap();
        let expected: Vec<Month> = (1..=6).map(|m| Month::new(1892, m)).collect();
        assert_eq!(report.gaps, expected);
    }

    #[test]
    fn output_sorted_by_date() {
        let dates = ["1990-05-01", "1990-01-09", "1990-03-02", "1990-02-11", "1990-04-20"];
        let input: Vec<String> = dates.iter().enumerate().map(|(i, d)| rec(&i.to_string(), d, "w")).collect();
        let (docs, _) = parse(&input.join("\n")).unwrap();
        let mut sorted: Vec<&str> = dates.to_vec();
        sorted.sort();
        let got: Vec<String> = docs.iter().map(|d| d.date.to_string()).collect();
        assert_eq!(got, sorted);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = format!("{}\n{{not json\n", rec("a", "1990-01-01", "x"));
        match parse(&input).unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_date_names_record() {
        let input = rec("doc-7", "1990-13-01", "x");
        match parse(&input).unwrap_err() {
            Error::BadDate { id, .. } => assert_eq!(id, "doc-7"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn date_range_filters() {
        let input = [rec("a", "1989-12-31", "x"), rec("b", "1990-01-01", "y")].join("\n");
        let range = DateRange {
            start: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(1990, 12, 31).unwrap(),
        };
        let (docs, report) = parse_corpus(input.as_bytes(), Path::new("t"), Some(range)).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(report.out_of_range, 1);
    }

    #[test]
    fn write_then_parse() {
        let input = [rec("a", "1990-01-03", "alpha beta"), rec("b", "1990-02-04", "gamma")].join("\n");
        let (docs, _) = parse(&input).unwrap();
        let mut buf = Vec::new();
        write_corpus(&docs, &mut buf).unwrap();
        let (again, _) = parse_corpus(&buf[..], Path::new("t"), None).unwrap();
        assert_eq!(docs, again);
    }
}
