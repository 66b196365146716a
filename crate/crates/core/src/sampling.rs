//! Historical forecast/error store and nearest-forecast sample selection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PowerSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub timestamp: i64,
    pub forecast: Vec<f64>,
    pub error: Vec<f64>,
}

/// One validation period: forecast issued beforehand and the observed availability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub timestamp: i64,
    pub forecast: Vec<f64>,
    pub error: Vec<f64>,
    pub observed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Positions in the history slice, nearest first.
    pub indices: Vec<usize>,
    /// Error vectors of the selected records, same order as `indices`.
    pub errors: Vec<Vec<f64>>,
    pub origin_forecast: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Builds a set directly from error vectors (no history behind it).
    pub fn from_errors(forecast: Vec<f64>, errors: Vec<Vec<f64>>) -> Self {
        Self {
            indices: (0..errors.len()).collect(),
            errors,
            origin_forecast: forecast,
        }
    }

    /// Realized availability `W^f + e` of sample `k`.
    pub fn realized(&self, k: usize) -> Vec<f64> {
        self.origin_forecast
            .iter()
            .zip(&self.errors[k])
            .map(|(f, e)| f + e)
            .collect()
    }

    /// Copy with every sample clipped into `[0, capacity]`.
    pub fn clipped(&self, capacities: &[f64]) -> Self {
        let errors = self
            .errors
            .iter()
            .map(|e| clip_errors(e, &self.origin_forecast, capacities))
            .collect();
        Self {
            indices: self.indices.clone(),
            errors,
            origin_forecast: self.origin_forecast.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub n_dne: usize,
    pub n_obp: usize,
    pub clip_to_capacity: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n_dne: 400,
            n_obp: 20,
            clip_to_capacity: true,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_dne == 0 || self.n_obp == 0 {
            return Err(Error::invariant(
                "selection config",
                "sample counts must be at least 1",
            ));
        }
        Ok(())
    }
}

fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `min(n, |history|)` records nearest to `upcoming` in Euclidean
/// distance; ties go to the earlier timestamp.
pub fn select_samples(history: &[HistoryRecord], upcoming: &[f64], n: usize) -> Result<SampleSet> {
    if history.is_empty() {
        return Err(Error::invariant("history", "no records to select from"));
    }
    if n == 0 {
        return Err(Error::invariant(
            "selection",
            "sample count must be at least 1",
        ));
    }
    for r in history {
        for (v, what) in [(&r.forecast, "forecast"), (&r.error, "error")] {
            if v.len() != upcoming.len() {
                return Err(Error::Dimension {
                    expected: upcoming.len(),
                    got: v.len(),
                    context: format!("{what} vector of record {}", r.timestamp),
                });
            }
        }
    }
    let mut order: Vec<(f64, i64, usize)> = history
        .iter()
        .enumerate()
        .map(|(i, r)| (distance_sq(&r.forecast, upcoming), r.timestamp, i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    order.truncate(n.min(history.len()));
    Ok(SampleSet {
        indices: order.iter().map(|o| o.2).collect(),
        errors: order.iter().map(|o| history[o.2].error.clone()).collect(),
        origin_forecast: upcoming.to_vec(),
    })
}

/// Error vector adjusted so `forecast + e` lies in `[0, capacity]`.
pub fn clip_errors(error: &[f64], forecast: &[f64], capacities: &[f64]) -> Vec<f64> {
    error
        .iter()
        .zip(forecast)
        .zip(capacities)
        .map(|((&e, &f), &cap)| (f + e).clamp(0.0, cap) - f)
        .collect()
}

pub fn clip_sample(record: &HistoryRecord, upcoming: &[f64], capacities: &[f64]) -> Vec<f64> {
    clip_errors(&record.error, upcoming, capacities)
}

fn header_index(headers: &csv::StringRecord, name: &str, path: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("{path}: missing column {name}")))
}

fn parse_rows(
    path: impl AsRef<Path>,
    vrg_ids: &[String],
    with_observed: bool,
) -> Result<Vec<ValidationRecord>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    let ts = header_index(&headers, "timestamp", &shown)?;
    let cols = |prefix: &str| -> Result<Vec<usize>> {
        vrg_ids
            .iter()
            .map(|id| header_index(&headers, &format!("{prefix}_{id}"), &shown))
            .collect()
    };
    let fc = cols("forecast")?;
    let ec = cols("error")?;
    let oc = if with_observed {
        cols("observed")?
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            let field = rec.get(c).unwrap_or("").trim();
            let v: f64 = field.parse().map_err(|_| {
                Error::Schema(format!("{shown}: row {}: bad number {field:?}", row + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Schema(format!(
                    "{shown}: row {}: non-finite value",
                    row + 1
                )));
            }
            Ok(v)
        };
        let field = rec.get(ts).unwrap_or("").trim();
        let timestamp: i64 = field.parse().map_err(|_| {
            Error::Schema(format!("{shown}: row {}: bad timestamp {field:?}", row + 1))
        })?;
        out.push(ValidationRecord {
            timestamp,
            forecast: fc.iter().map(|&c| num(c)).collect::<Result<_>>()?,
            error: ec.iter().map(|&c| num(c)).collect::<Result<_>>()?,
            observed: oc.iter().map(|&c| num(c)).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

fn check_forecasts(system: &PowerSystem, ts: i64, forecast: &[f64]) -> Result<()> {
    for (v, &f) in system.vrgs.iter().zip(forecast) {
        if !(0.0..=v.capacity + 1e-9).contains(&f) {
            return Err(Error::invariant(
                format!("history record {ts}"),
                format!("forecast {f} for {} outside [0, {}]", v.id, v.capacity),
            ));
        }
    }
    Ok(())
}

/// Reads a history CSV with `timestamp,forecast_<id>...,error_<id>...` columns.
pub fn load_history(path: impl AsRef<Path>, system: &PowerSystem) -> Result<Vec<HistoryRecord>> {
    let ids: Vec<String> = system.vrgs.iter().map(|v| v.id.clone()).collect();
    parse_rows(path, &ids, false)?
        .into_iter()
        .map(|r| {
            check_forecasts(system, r.timestamp, &r.forecast)?;
            Ok(HistoryRecord {
                timestamp: r.timestamp,
                forecast: r.forecast,
                error: r.error,
            })
        })
        .collect()
}

/// Reads a validation CSV, which additionally carries `observed_<id>` columns.
pub fn load_validation(
    path: impl AsRef<Path>,
    system: &PowerSystem,
) -> Result<Vec<ValidationRecord>> {
    let ids: Vec<String> = system.vrgs.iter().map(|v| v.id.clone()).collect();
    let rows = parse_rows(path, &ids, true)?;
    for r in &rows {
        check_forecasts(system, r.timestamp, &r.forecast)?;
    }
    Ok(rows)
}

fn write_rows<'a>(
    path: impl AsRef<Path>,
    vrg_ids: &[String],
    rows: impl Iterator<Item = (i64, &'a [f64], &'a [f64], Option<&'a [f64]>)>,
    with_observed: bool,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(vrg_ids.iter().map(|id| format!("forecast_{id}")));
    header.extend(vrg_ids.iter().map(|id| format!("error_{id}")));
    if with_observed {
        header.extend(vrg_ids.iter().map(|id| format!("observed_{id}")));
    }
    w.write_record(&header)?;
    for (ts, f, e, o) in rows {
        let mut rec = vec![ts.to_string()];
        rec.extend(f.iter().map(|v| format!("{v:.6}")));
        rec.extend(e.iter().map(|v| format!("{v:.6}")));
        if let Some(o) = o {
            rec.extend(o.iter().map(|v| format!("{v:.6}")));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_history(
    path: impl AsRef<Path>,
    vrg_ids: &[String],
    records: &[HistoryRecord],
) -> Result<()> {
    write_rows(
        path,
        vrg_ids,
        records
            .iter()
            .map(|r| (r.timestamp, r.forecast.as_slice(), r.error.as_slice(), None)),
        false,
    )
}

pub fn write_validation(
    path: impl AsRef<Path>,
    vrg_ids: &[String],
    records: &[ValidationRecord],
) -> Result<()> {
    write_rows(
        path,
        vrg_ids,
        records.iter().map(|r| {
            (
                r.timestamp,
                r.forecast.as_slice(),
                r.error.as_slice(),
                Some(r.observed.as_slice()),
            )
        }),
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ts: i64, f: &[f64]) -> HistoryRecord {
        HistoryRecord {
            timestamp: ts,
            forecast: f.to_vec(),
            error: vec![ts as f64; f.len()],
        }
    }

    #[test]
    fn hand_distances() {
        let h = vec![
            rec(0, &[0.0, 0.0]),
            rec(1, &[3.0, 4.0]),
            rec(2, &[6.0, 8.0]),
        ];
        let s = select_samples(&h, &[0.0, 0.0], 2).unwrap();
        assert_eq!(s.indices, vec![0, 1]);
        let all = select_samples(&h, &[0.0, 0.0], 10).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn ties_break_on_timestamp_not_position() {
        let h = vec![rec(5, &[1.0]), rec(2, &[-1.0]), rec(9, &[1.0])];
        let s = select_samples(&h, &[0.0], 2).unwrap();
        assert_eq!(s.indices, vec![1, 0]);
        let mut rev = h.clone();
        rev.reverse();
        let t = select_samples(&rev, &[0.0], 2).unwrap();
        let ts: Vec<i64> = t.indices.iter().map(|&i| rev[i].timestamp).collect();
        assert_eq!(ts, vec![2, 5]);
    }

    #[test]
    fn dimension_mismatch() {
        let h = vec![rec(0, &[1.0, 2.0])];
        assert!(matches!(
            select_samples(&h, &[0.0], 1),
            Err(Error::Dimension { .. })
        ));
        assert!(select_samples(&[], &[0.0], 1).is_err());
    }

    #[test]
    fn clipping_cases() {
        let r = |e| HistoryRecord {
            timestamp: 0,
            forecast: vec![5.0],
            error: vec![e],
        };
        assert_eq!(clip_sample(&r(0.5), &[5.0], &[6.0]), vec![0.5]);
        assert_eq!(clip_sample(&r(2.0), &[5.0], &[6.0]), vec![1.0]);
        assert_eq!(clip_sample(&r(-7.0), &[5.0], &[6.0]), vec![-5.0]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let ids = vec!["W1".to_string()];
        let rows = vec![ValidationRecord {
            timestamp: 3,
            forecast: vec![1.5],
            error: vec![-0.25],
            observed: vec![1.25],
        }];
        write_validation(&path, &ids, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("timestamp,forecast_W1,error_W1,observed_W1\n"));
        let back = parse_rows(&path, &ids, true).unwrap();
        assert_eq!(back, rows);
    }
}
