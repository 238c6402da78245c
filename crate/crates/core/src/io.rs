//! Dated series ingestion from two-column CSV files.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Result, RiskError};

/// What the second CSV column holds, taken from its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Value,
    Price,
    Return,
}

impl SeriesKind {
    fn from_header(h: &str) -> Option<Self> {
        match h.trim().to_ascii_lowercase().as_str() {
            "value" | "loss" => Some(Self::Value),
            "price" | "close" => Some(Self::Price),
            "return" | "ret" => Some(Self::Return),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub kind: SeriesKind,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl Series {
    /// Daily log returns of a price series; other kinds pass through.
    pub fn returns(&self) -> Result<Vec<f64>> {
        match self.kind {
            SeriesKind::Price => {
                if self.values.iter().any(|p| !(*p > 0.0)) {
                    return Err(RiskError::Parse("prices must be positive".into()));
                }
                Ok(self.values.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
            }
            _ => Ok(self.values.clone()),
        }
    }

    /// Losses: values as given, or negated returns for price and return series.
    pub fn losses(&self) -> Result<Vec<f64>> {
        match self.kind {
            SeriesKind::Value => Ok(self.values.clone()),
            _ => Ok(self.returns()?.into_iter().map(|r| -r).collect()),
        }
    }
}

/// Reads `date,value`, `date,price` or `date,return` with ISO-8601 dates.
/// Lines starting with `#` are skipped.
pub fn read_series_from<R: Read>(reader: R) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| RiskError::Parse(e.to_string()))?
        .clone();
    if headers.len() != 2 || !headers[0].eq_ignore_ascii_case("date") {
        return Err(RiskError::Parse(format!(
            "expected header `date,<value|price|return>`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let kind = SeriesKind::from_header(&headers[1])
        .ok_or_else(|| RiskError::Parse(format!("unknown value column `{}`", &headers[1])))?;
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| RiskError::Parse(format!("line {line}: {e}")))?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| RiskError::Parse(format!("line {line}: date `{}`: {e}", &rec[0])))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| RiskError::Parse(format!("line {line}: value `{}`", &rec[1])))?;
        if !v.is_finite() {
            return Err(RiskError::Parse(format!("line {line}: non-finite value")));
        }
        dates.push(date);
        values.push(v);
    }
    if values.is_empty() {
        return Err(RiskError::Parse("series is empty".into()));
    }
    Ok(Series {
        kind,
        dates,
        values,
    })
}

pub fn read_series(path: &Path) -> Result<Series> {
    let f =
        std::fs::File::open(path).map_err(|e| RiskError::Io(format!("{}: {e}", path.display())))?;
    read_series_from(f)
}
