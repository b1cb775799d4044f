//! Series CSV: header `t,p_e,p_g,p_o,demand_e,demand_g,demand_h,pv`, one
//! row per slot with `t` counting from 0.

use std::fmt::Write as _;
use std::path::Path;

use crate::env::ExogenousSeries;
use crate::scalar::Scalar;

use super::DataError;

pub const SERIES_HEADER: [&str; 8] = ["t", "p_e", "p_g", "p_o", "demand_e", "demand_g", "demand_h", "pv"];

/// CSV text whose numbers read back to the identical values.
pub fn write_series<S: Scalar>(series: &ExogenousSeries<S>) -> String {
    let mut s = SERIES_HEADER.join(",");
    s.push('\n');
    for t in 0..series.horizon() {
        let _ = writeln!(
            s,
            "{t},{},{},{},{},{},{},{}",
            series.p_e[t],
            series.p_g[t],
            series.p_o[t],
            series.demand_e[t],
            series.demand_g[t],
            series.demand_h[t],
            series.pv[t]
        );
    }
    s
}

pub fn parse_series<S: Scalar>(text: &str) -> Result<ExogenousSeries<S>, DataError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DataError::EmptySeries)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let missing: Vec<&str> = SERIES_HEADER.iter().filter(|c| !cols.contains(c)).copied().collect();
    if !missing.is_empty() {
        return Err(DataError::MissingColumns(missing.join(", ")));
    }
    if cols.len() != SERIES_HEADER.len() || cols != SERIES_HEADER {
        return Err(DataError::BadHeader(header.to_string()));
    }
    let mut series = ExogenousSeries {
        p_e: Vec::new(),
        p_g: Vec::new(),
        p_o: Vec::new(),
        demand_e: Vec::new(),
        demand_g: Vec::new(),
        demand_h: Vec::new(),
        pv: Vec::new(),
    };
    for (expected_t, (n, line)) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != SERIES_HEADER.len() {
            return Err(DataError::Row {
                line: n + 1,
                reason: format!("expected {} fields, found {}", SERIES_HEADER.len(), fields.len()),
            });
        }
        if fields[0].parse::<usize>().ok() != Some(expected_t) {
            return Err(DataError::Row {
                line: n + 1,
                reason: format!("slot index {:?}, expected {expected_t}", fields[0]),
            });
        }
        let mut vals = [S::zero(); 7];
        for (i, f) in fields[1..].iter().enumerate() {
            vals[i] = S::parse_str(f).ok_or_else(|| DataError::Row {
                line: n + 1,
                reason: format!("{} = {f:?} is not a number", SERIES_HEADER[i + 1]),
            })?;
        }
        series.p_e.push(vals[0]);
        series.p_g.push(vals[1]);
        series.p_o.push(vals[2]);
        series.demand_e.push(vals[3]);
        series.demand_g.push(vals[4]);
        series.demand_h.push(vals[5]);
        series.pv.push(vals[6]);
    }
    if series.horizon() == 0 {
        return Err(DataError::EmptySeries);
    }
    series.validate()?;
    Ok(series)
}

/// Reads and validates a series CSV file.
pub fn load_series<S: Scalar>(path: &Path) -> Result<ExogenousSeries<S>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_series(&text)
}

pub fn save_series<S: Scalar>(series: &ExogenousSeries<S>, path: &Path) -> Result<(), DataError> {
    std::fs::write(path, write_series(series)).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
