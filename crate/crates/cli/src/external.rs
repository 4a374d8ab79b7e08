//! User-supplied base forecasts: CSV `date,forecast`, optionally with one
//! `monthly_total,<value>` row overriding the test month's total.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use dtr_core::data::parse_date;
use dtr_core::YearMonth;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalForecast {
    daily: BTreeMap<NaiveDate, f64>,
    monthly_total: Option<f64>,
}

impl ExternalForecast {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            CliError::Data(format!(
                "cannot read external forecast {}: {e}",
                path.display()
            ))
        })?;
        Self::read(file).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn read<R: Read>(input: R) -> CliResult<Self> {
        let data = |m: String| CliError::Data(m);
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers().map_err(|e| data(e.to_string()))?.clone();
        let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if names != ["date", "forecast"] {
            return Err(data(format!(
                "expected header date,forecast, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut out = ExternalForecast::default();
        for record in reader.records() {
            let record = record.map_err(|e| data(e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let (key, raw) = (record.get(0).unwrap_or(""), record.get(1).unwrap_or(""));
            let value: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| data(format!("line {line}: bad forecast value {raw:?}")))?;
            if key.eq_ignore_ascii_case("monthly_total") {
                if out.monthly_total.replace(value).is_some() {
                    return Err(data(format!("line {line}: second monthly_total row")));
                }
                continue;
            }
            let date =
                parse_date(key).ok_or_else(|| data(format!("line {line}: bad date {key:?}")))?;
            if out.daily.insert(date, value).is_some() {
                return Err(data(format!("line {line}: duplicate date {date}")));
            }
        }
        if out.daily.is_empty() {
            return Err(data("no daily forecasts".into()));
        }
        Ok(out)
    }

    /// Daily forecasts of `month` if every day is present.
    pub fn month(&self, month: YearMonth) -> Option<Vec<f64>> {
        month.dates().map(|d| self.daily.get(&d).copied()).collect()
    }

    pub fn monthly_total(&self) -> Option<f64> {
        self.monthly_total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_daily_rows_and_total() {
        let text = "date,forecast\n2020-02-01,5\n2020-02-02,6\nmonthly_total,11.5\n";
        let f = ExternalForecast::read(text.as_bytes()).unwrap();
        assert_eq!(f.monthly_total(), Some(11.5));
        assert_eq!(f.month("2020-02".parse().unwrap()), None);
        let full: String = (1..=29).map(|d| format!("2020-02-{d:02},{d}\n")).collect();
        let f = ExternalForecast::read(format!("date,forecast\n{full}").as_bytes()).unwrap();
        assert_eq!(f.month("2020-02".parse().unwrap()).unwrap().len(), 29);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(ExternalForecast::read("when,value\n2020-01-01,1\n".as_bytes()).is_err());
        assert!(ExternalForecast::read("date,forecast\n2020-01-01,x\n".as_bytes()).is_err());
        assert!(
            ExternalForecast::read("date,forecast\n2020-01-01,1\n2020-01-01,2\n".as_bytes())
                .is_err()
        );
        assert!(ExternalForecast::read("date,forecast\n".as_bytes()).is_err());
    }
}
