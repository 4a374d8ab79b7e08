//! Daily market data ingestion and calendar completion.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Days, NaiveDate};
use log::warn;

use crate::calendar::{MonthRange, YearMonth};
use crate::error::{Error, Result};
use crate::hierarchy::TimeSeries;

pub const DEFAULT_DATE_COLUMN: &str = "Date";
pub const DEFAULT_VALUE_COLUMN: &str = "Open";

/// Accepts `YYYY-MM-DD`, `DD/MM/YY` and `DD/MM/YYYY`.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    let year = s.rsplit('/').next()?;
    let fmt = match year.len() {
        2 => "%d/%m/%y",
        4 => "%d/%m/%Y",
        _ => return None,
    };
    NaiveDate::parse_from_str(s, fmt).ok()
}

/// Values that data vendors use for "no trade that day". Such rows are
/// dropped and later filled like any other gap.
fn is_missing(s: &str) -> bool {
    matches!(
        s.trim().to_ascii_lowercase().as_str(),
        "" | "null" | "nan" | "na"
    )
}

pub fn load_ohlcv_csv(path: &Path, date_column: &str, value_column: &str) -> Result<TimeSeries> {
    let file = File::open(path)?;
    read_ohlcv(file, date_column, value_column)
}

/// Reads one value column keyed by date, sorted ascending.
pub fn read_ohlcv<R: Read>(input: R, date_column: &str, value_column: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Schema("file has no header row".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let (di, vi) = (column(date_column)?, column(value_column)?);

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let date = parse_date(field(di)).ok_or_else(|| Error::Parse {
            line,
            message: format!("unparseable date {:?}", field(di)),
        })?;
        let raw = field(vi);
        if is_missing(raw) {
            skipped += 1;
            continue;
        }
        let value: f64 = raw.replace(',', "").parse().map_err(|_| Error::Parse {
            line,
            message: format!("unparseable value {raw:?} in column {value_column:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {raw:?}"),
            });
        }
        rows.push((date, value));
    }
    if skipped > 0 {
        warn!("skipped {skipped} rows with no {value_column} value");
    }
    if rows.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[0].0));
    }
    let (dates, values) = rows.into_iter().unzip();
    TimeSeries::new(dates, values)
}

/// Fills every missing calendar day between the first and last observation
/// by linear interpolation between its observed neighbours.
pub fn fill_calendar(series: &TimeSeries) -> Result<TimeSeries> {
    let (Some(first), Some(last)) = (series.first_date(), series.last_date()) else {
        return Err(Error::InvalidSeries("cannot fill an empty series".into()));
    };
    let span = (last - first).num_days() as usize + 1;
    let mut dates = Vec::with_capacity(span);
    let mut values = Vec::with_capacity(span);
    let obs: Vec<(NaiveDate, f64)> = series.iter().collect();
    for pair in obs.windows(2) {
        let ((d0, v0), (d1, v1)) = (pair[0], pair[1]);
        let gap = (d1 - d0).num_days();
        for k in 0..gap {
            dates.push(d0 + Days::new(k as u64));
            values.push(v0 + (v1 - v0) * k as f64 / gap as f64);
        }
    }
    dates.push(last);
    values.push(*series.values().last().expect("nonempty"));
    TimeSeries::new(dates, values)
}

/// Actuals of one calendar month.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthData {
    pub month: YearMonth,
    pub values: Vec<f64>,
}

/// Splits a calendar-complete series into the months of `range`. Every
/// month must be fully covered.
pub fn month_partition(series: &TimeSeries, range: MonthRange) -> Result<Vec<MonthData>> {
    range
        .months()
        .map(|month| {
            let incomplete = |reason: String| Error::IncompleteMonth { month, reason };
            let (first, last) = (month.first_day(), month.last_day());
            match (series.first_date(), series.last_date()) {
                (Some(a), Some(b)) if a <= first && last <= b => {}
                (Some(a), Some(b)) => {
                    return Err(incomplete(format!("data covers only {a} to {b}")));
                }
                _ => return Err(incomplete("no data".into())),
            }
            let values = month
                .dates()
                .map(|d| {
                    series
                        .get(d)
                        .ok_or_else(|| incomplete(format!("missing {d}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MonthData { month, values })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    #[test]
    fn date_formats() {
        assert_eq!(d("01/03/20"), NaiveDate::from_ymd_opt(2020, 3, 1).unwrap());
        assert_eq!(
            d("2020-03-01"),
            NaiveDate::from_ymd_opt(2020, 3, 1).unwrap()
        );
        assert_eq!(
            d("31/03/2020"),
            NaiveDate::from_ymd_opt(2020, 3, 31).unwrap()
        );
        assert!(parse_date("03/31/20").is_none());
        assert!(parse_date("yesterday").is_none());
    }

    #[test]
    fn reads_and_sorts() {
        let csv = "Date,Open,High,Low,Close,Volume\n\
                   02/03/20,11387,1,1,1,1\n\
                   01/03/20,11386,1,1,1,1\n";
        let s = read_ohlcv(csv.as_bytes(), "Date", "Open").unwrap();
        assert_eq!(s.dates(), &[d("2020-03-01"), d("2020-03-02")]);
        assert_eq!(s.values(), &[11386.0, 11387.0]);
    }

    #[test]
    fn ingestion_errors() {
        assert!(matches!(
            read_ohlcv("".as_bytes(), "Date", "Open"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            read_ohlcv("Date,Open\n".as_bytes(), "Date", "Open"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            read_ohlcv("Date,Close\n2020-01-01,1\n".as_bytes(), "Date", "Open"),
            Err(Error::Schema(_))
        ));
        let bad_date = "Date,Open\n2020-01-01,1\nnope,2\n";
        assert!(matches!(
            read_ohlcv(bad_date.as_bytes(), "Date", "Open"),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_value = "Date,Open\n2020-01-01,abc\n";
        assert!(matches!(
            read_ohlcv(bad_value.as_bytes(), "Date", "Open"),
            Err(Error::Parse { line: 2, .. })
        ));
        let dup = "Date,Open\n2020-01-01,1\n2020-01-01,2\n";
        assert!(matches!(
            read_ohlcv(dup.as_bytes(), "Date", "Open"),
            Err(Error::DuplicateDate(_))
        ));
        let nulls = "Date,Open\n2020-01-01,1\n2020-01-02,null\n2020-01-03,3\n";
        assert_eq!(
            read_ohlcv(nulls.as_bytes(), "Date", "Open").unwrap().len(),
            2
        );
    }

    #[test]
    fn fills_weekends() {
        let s =
            TimeSeries::new(vec![d("2020-03-06"), d("2020-03-09")], vec![100.0, 106.0]).unwrap();
        let f = fill_calendar(&s).unwrap();
        assert_eq!(f.values(), &[100.0, 102.0, 104.0, 106.0]);
        let s = TimeSeries::new(vec![d("2020-03-01"), d("2020-03-03")], vec![10.0, 20.0]).unwrap();
        assert_eq!(fill_calendar(&s).unwrap().values(), &[10.0, 15.0, 20.0]);
        let s = TimeSeries::new(vec![d("2020-03-01"), d("2020-03-02")], vec![1.0, 2.0]).unwrap();
        assert_eq!(fill_calendar(&s).unwrap(), s);
        let single = TimeSeries::new(vec![d("2020-03-01")], vec![1.0]).unwrap();
        assert_eq!(fill_calendar(&single).unwrap(), single);
        assert!(fill_calendar(&TimeSeries::new(vec![], vec![]).unwrap()).is_err());
    }

    fn daily(from: &str, to: &str) -> TimeSeries {
        let (a, b) = (d(from), d(to));
        let dates: Vec<NaiveDate> = a.iter_days().take_while(|x| *x <= b).collect();
        let values = (0..dates.len()).map(|i| i as f64).collect();
        TimeSeries::new(dates, values).unwrap()
    }

    #[test]
    fn partitions_months() {
        let s = daily("2019-01-01", "2020-03-31");
        let train = month_partition(&s, "2019-01..2020-02".parse().unwrap()).unwrap();
        assert_eq!(train.len(), 14);
        assert_eq!(train.last().unwrap().values.len(), 29);
        let test = month_partition(&s, "2020-03".parse().unwrap()).unwrap();
        assert_eq!(test[0].values.len(), 31);

        let short = daily("2019-01-02", "2020-03-30");
        let err = month_partition(&short, "2019-01..2019-02".parse().unwrap()).unwrap_err();
        assert!(
            matches!(err, Error::IncompleteMonth { month, .. } if month.to_string() == "2019-01")
        );
        let err = month_partition(&short, "2020-03".parse().unwrap()).unwrap_err();
        assert!(
            matches!(err, Error::IncompleteMonth { month, .. } if month.to_string() == "2020-03")
        );
    }

    proptest! {
        #[test]
        fn fill_then_partition_round_trips(
            start_offset in 0u64..400,
            keep in prop::collection::vec(any::<bool>(), 40..120),
        ) {
            let base = d("2019-01-01") + Days::new(start_offset);
            let mut dates = vec![];
            let mut values = vec![];
            for (i, k) in keep.iter().enumerate() {
                if *k || i == 0 || i == keep.len() - 1 {
                    dates.push(base + Days::new(i as u64));
                    values.push(1000.0 + (i as f64 * 7.3).sin() * 50.0);
                }
            }
            let filled = fill_calendar(&TimeSeries::new(dates.clone(), values.clone()).unwrap()).unwrap();
            prop_assert_eq!(filled.len(), keep.len());
            for (dt, v) in dates.iter().zip(&values) {
                prop_assert_eq!(filled.get(*dt), Some(*v));
            }
            let first = filled.first_date().unwrap();
            let last = filled.last_date().unwrap();
            let mut m0 = YearMonth::of(first);
            if m0.first_day() != first { m0 = m0.succ(); }
            let mut m1 = YearMonth::of(last);
            if m1.last_day() != last {
                let prev = m1.first_day().pred_opt().unwrap();
                m1 = YearMonth::of(prev);
            }
            if m0 <= m1 {
                let parts = month_partition(&filled, MonthRange::new(m0, m1).unwrap()).unwrap();
                let joined: Vec<f64> = parts.iter().flat_map(|p| p.values.clone()).collect();
                let lo = filled.dates().iter().position(|x| *x == m0.first_day()).unwrap();
                prop_assert_eq!(&joined[..], &filled.values()[lo..lo + joined.len()]);
            }
        }
    }
}
