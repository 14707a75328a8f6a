//! Long-format CSV files for plotting.
//!
//! `irf-band`: `horizon,point,lo,hi`, one row per horizon, percentile-t bounds.
//!
//! `coverage-bars`: `regime,dgp,order,T,h,lag_rule,method,coverage,nominal`,
//! one row per metrics cell.

use std::io::{Read, Write};
use std::str::FromStr;

use lp_bootstrap::mabootstrap::IntervalRecord;
use lp_bootstrap::metrics::{format_sig, McCell};
use lp_bootstrap::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    IrfBand,
    CoverageBars,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irf-band" => Ok(PlotKind::IrfBand),
            "coverage-bars" => Ok(PlotKind::CoverageBars),
            other => Err(Error::InvalidInput(format!("unknown plot kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub horizon: usize,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageBar {
    pub regime: String,
    pub dgp: String,
    pub order: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub h: usize,
    pub lag_rule: String,
    pub method: String,
    pub coverage: f64,
    pub nominal: f64,
}

pub fn write_irf_band<W: Write>(records: &[IntervalRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["horizon", "point", "lo", "hi"])?;
    for r in records {
        out.write_record([r.horizon.to_string(), format_sig(r.point), format_sig(r.lo_t), format_sig(r.hi_t)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_irf_band<R: Read>(r: R) -> Result<Vec<BandRow>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

fn order_of(dgp: &str) -> usize {
    dgp.trim_start_matches(|c: char| c.is_ascii_alphabetic()).parse().unwrap_or(0)
}

pub fn coverage_bars(cells: &[McCell], nominal: f64) -> Vec<CoverageBar> {
    cells
        .iter()
        .map(|c| CoverageBar {
            regime: c.design.clone(),
            dgp: c.dgp.clone(),
            order: order_of(&c.dgp),
            t: c.t,
            h: c.h,
            lag_rule: c.lag_rule.clone(),
            method: c.method.clone(),
            coverage: c.coverage,
            nominal,
        })
        .collect()
}

pub fn write_coverage_bars<W: Write>(bars: &[CoverageBar], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["regime", "dgp", "order", "T", "h", "lag_rule", "method", "coverage", "nominal"])?;
    for b in bars {
        out.write_record([
            b.regime.clone(),
            b.dgp.clone(),
            b.order.to_string(),
            b.t.to_string(),
            b.h.to_string(),
            b.lag_rule.clone(),
            b.method.clone(),
            format_sig(b.coverage),
            format_sig(b.nominal),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_coverage_bars<R: Read>(r: R) -> Result<Vec<CoverageBar>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_round_trip() {
        let recs: Vec<IntervalRecord> = (0..=10)
            .map(|h| IntervalRecord {
                horizon: h,
                point: 0.5f64.powi(h as i32),
                lo_t: -0.1,
                hi_t: 1.0 + 1.0 / 3.0,
                lo_efron: 0.0,
                hi_efron: 1.0,
                n_failures: 0,
            })
            .collect();
        let mut buf = Vec::new();
        write_irf_band(&recs, &mut buf).unwrap();
        let rows = read_irf_band(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(String::from_utf8(buf).unwrap().lines().next().unwrap().split(',').count(), 4);
        assert_eq!(rows[10].point, format_sig(0.5f64.powi(10)).parse::<f64>().unwrap());
    }

    #[test]
    fn dgp_orders() {
        assert_eq!(order_of("ar10"), 10);
        assert_eq!(order_of("ma24"), 24);
        assert_eq!(order_of("ar1"), 1);
    }
}
