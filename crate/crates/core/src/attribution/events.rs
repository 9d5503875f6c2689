use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub date: Month,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventWindow {
    pub event: String,
    pub window_mean: f64,
    pub n_months: usize,
    /// Fewer than `lookback` months of data before the event.
    pub partial: bool,
}

pub const RECESSIONS_ROW: &str = "Recessions";
pub const OTHER_ROW: &str = "All Other Months";

fn window(date: Month, lookback: usize) -> impl Iterator<Item = Month> {
    (1..=lookback as i32).map(move |i| date.offset(-i))
}

fn summarize(series: &TimeSeries, name: &str, months: impl IntoIterator<Item = Month>, expected: usize) -> Option<EventWindow> {
    let vals: Vec<f64> = months.into_iter().filter_map(|m| series.get(m)).collect();
    (!vals.is_empty()).then(|| EventWindow {
        event: name.to_string(),
        window_mean: vals.iter().sum::<f64>() / vals.len() as f64,
        n_months: vals.len(),
        partial: vals.len() < expected,
    })
}

/// Average of `series` over the `lookback` months strictly before each event,
/// a pooled row over the lookbacks of all recession starts, and a row for
/// every month outside those windows.
///
/// Events dated at or before the first observation are left out.
pub fn event_window_average(
    series: &TimeSeries,
    events: &[Event],
    recession_starts: &[Month],
    lookback: usize,
) -> Vec<EventWindow> {
    let Some(first) = series.first_month() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut covered = BTreeSet::new();
    for e in events {
        covered.extend(window(e.date, lookback));
        if e.date <= first {
            log::info!("event {} precedes the series; skipped", e.name);
            continue;
        }
        if let Some(w) = summarize(series, &e.name, window(e.date, lookback), lookback) {
            out.push(w);
        }
    }
    let pooled: BTreeSet<Month> = recession_starts.iter().flat_map(|&d| window(d, lookback)).collect();
    if let Some(w) = summarize(series, RECESSIONS_ROW, pooled.iter().copied(), pooled.len()) {
        out.push(w);
    }
    covered.extend(pooled);
    let rest: Vec<Month> = series.observations().iter().map(|o| o.0).filter(|m| !covered.contains(m)).collect();
    let n_rest = rest.len();
    if let Some(w) = summarize(series, OTHER_ROW, rest, n_rest) {
        out.push(w);
    }
    out
}
