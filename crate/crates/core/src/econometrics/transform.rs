use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::series::{TimeSeries, TransformKind};

/// Annualized `h`-period-ahead change, keyed by the forecast origin `t`:
///
/// ```text
/// log:        c/(h+1) * ln(Y[t+h] / Y[t-1])
/// arithmetic: c/(h+1) * (Y[t+h] - Y[t-1]) / 100
/// ```
///
/// Periods follow the series frequency. Origins lacking either endpoint are
/// skipped.
pub fn nabla(y: &TimeSeries, h: usize, c: f64) -> Result<TimeSeries> {
    let step = y.frequency.step();
    let scale = c / (h as f64 + 1.0);
    let map = y.to_map();
    let mut out = Vec::new();
    for (&t, _) in &map {
        let (Some(&prev), Some(&ahead)) = (map.get(&t.offset(-step)), map.get(&t.offset(step * h as i32))) else {
            continue;
        };
        let v = match y.transform {
            TransformKind::LogDifference => {
                if prev <= 0.0 || ahead <= 0.0 {
                    return Err(Error::Validation(format!(
                        "series {}: log growth needs positive values (at {t})",
                        y.name
                    )));
                }
                scale * (ahead / prev).ln()
            }
            TransformKind::ArithmeticDifference => scale * (ahead - prev) / 100.0,
            TransformKind::Level => {
                return Err(Error::Validation(format!(
                    "series {} is a level series and has no growth transform",
                    y.name
                )))
            }
        };
        out.push((t, v));
    }
    TimeSeries::new(format!("{}_h{h}", y.name), y.frequency, TransformKind::Level, out)
}

/// `nabla` with the frequency's default annualization (1200 monthly, 400 quarterly).
pub fn nabla_default(y: &TimeSeries, h: usize) -> Result<TimeSeries> {
    nabla(y, h, y.frequency.annualization())
}

/// Series shifted forward by `periods`: the value at `t` is the input at `t - periods`.
pub fn lag(s: &TimeSeries, periods: usize) -> TimeSeries {
    let shift = s.frequency.step() * periods as i32;
    let obs = s.observations().iter().map(|&(m, v)| (m.offset(shift), v)).collect();
    TimeSeries::new(format!("{}(t-{periods})", s.name), s.frequency, s.transform, obs).expect("shift keeps order")
}

/// How a 0/1 recession series is aggregated over `t..t+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecessionRule {
    /// 1 if any period in `t..=t+h` is a recession period.
    #[default]
    Any,
    /// 1 if period `t+h` is a recession period.
    EndOnly,
}

pub fn recession_window(nber: &TimeSeries, h: usize, rule: RecessionRule) -> Result<TimeSeries> {
    if let Some(&(m, v)) = nber.observations().iter().find(|(_, v)| *v != 0.0 && *v != 1.0) {
        return Err(Error::Validation(format!("series {}: non-binary value {v} at {m}", nber.name)));
    }
    let step = nber.frequency.step();
    let map = nber.to_map();
    let mut out = Vec::new();
    'origin: for &t in map.keys() {
        let at = |i: usize| map.get(&t.offset(step * i as i32)).copied();
        let v = match rule {
            RecessionRule::EndOnly => match at(h) {
                Some(v) => v,
                None => continue,
            },
            RecessionRule::Any => {
                let mut any = 0.0;
                for i in 0..=h {
                    match at(i) {
                        Some(v) => any = f64::max(any, v),
                        None => continue 'origin,
                    }
                }
                any
            }
        };
        out.push((t, v));
    }
    TimeSeries::new(format!("{}_h{h}", nber.name), nber.frequency, TransformKind::Level, out)
}

/// First months of recession episodes in a 0/1 series.
pub fn recession_starts(nber: &TimeSeries) -> Vec<Month> {
    let mut starts = Vec::new();
    let mut prev: Option<(Month, f64)> = None;
    for &(m, v) in nber.observations() {
        let was_on = matches!(prev, Some((pm, pv)) if pv == 1.0 && pm == m.offset(-nber.frequency.step()));
        if v == 1.0 && !was_on {
            starts.push(m);
        }
        prev = Some((m, v));
    }
    starts
}
