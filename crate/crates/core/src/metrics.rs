//! Monte Carlo aggregation: coverage, relative interval length, bias and
//! the table layout they are reported in.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mabootstrap::Interval;

/// Reported horizons for the AR designs.
pub const AR_HORIZONS: [usize; 6] = [5, 10, 15, 20, 30, 60];
/// Reported horizons for the MA designs.
pub const MA_HORIZONS: [usize; 4] = [10, 20, 40, 60];

/// Fraction of intervals containing `truth`, endpoints included.
pub fn coverage(intervals: &[Interval<f64>], truth: f64) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::InvalidInput("coverage of zero replications".into()));
    }
    let hits = intervals.iter().filter(|i| i.contains(truth)).count();
    Ok(hits as f64 / intervals.len() as f64)
}

/// Coverage when each replication has its own true value.
pub fn coverage_paired(intervals: &[Interval<f64>], truths: &[f64]) -> Result<f64> {
    if intervals.is_empty() || intervals.len() != truths.len() {
        return Err(Error::InvalidInput(format!(
            "{} intervals against {} true values",
            intervals.len(),
            truths.len()
        )));
    }
    let hits = intervals.iter().zip(truths).filter(|(i, &r)| i.contains(r)).count();
    Ok(hits as f64 / intervals.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeLength {
    pub median: f64,
    pub n_degenerate: usize,
}

/// Median over replications of interval width divided by the range of that
/// replication's estimated IRF. Replications with a zero range are skipped
/// and counted.
pub fn median_rel_length(intervals: &[Interval<f64>], irfs: &[Vec<f64>]) -> Result<RelativeLength> {
    if intervals.len() != irfs.len() || intervals.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} intervals against {} IRF estimates",
            intervals.len(),
            irfs.len()
        )));
    }
    let mut ratios = Vec::with_capacity(intervals.len());
    for (iv, irf) in intervals.iter().zip(irfs) {
        let hi = irf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = irf.iter().copied().fold(f64::INFINITY, f64::min);
        let range = hi - lo;
        if range > 0.0 && range.is_finite() {
            ratios.push(iv.width() / range);
        }
    }
    let n_degenerate = intervals.len() - ratios.len();
    if ratios.is_empty() {
        return Err(Error::DegenerateCell(format!(
            "all {n_degenerate} replications have a flat IRF estimate"
        )));
    }
    Ok(RelativeLength { median: median(&mut ratios), n_degenerate })
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Mean over replications of `|truth - bootstrap mean|`.
pub fn mean_abs_bias(bootstrap_means: &[f64], truth: f64) -> Result<f64> {
    if bootstrap_means.is_empty() {
        return Err(Error::InvalidInput("bias of zero replications".into()));
    }
    let total: f64 = bootstrap_means.iter().map(|m| (truth - m).abs()).sum();
    Ok(total / bootstrap_means.len() as f64)
}

pub fn mean_abs_bias_paired(bootstrap_means: &[f64], truths: &[f64]) -> Result<f64> {
    if bootstrap_means.is_empty() || bootstrap_means.len() != truths.len() {
        return Err(Error::InvalidInput("bias inputs of mismatched length".into()));
    }
    let total: f64 = bootstrap_means.iter().zip(truths).map(|(m, r)| (r - m).abs()).sum();
    Ok(total / bootstrap_means.len() as f64)
}

/// Everything that identifies a table row apart from the horizon.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub design: String,
    pub dgp: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub lag_rule: String,
    pub method: String,
    pub scheme: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCell {
    pub design: String,
    pub dgp: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub lag_rule: String,
    pub method: String,
    pub scheme: String,
    pub h: usize,
    pub coverage: f64,
    pub median_rel_length: f64,
    pub mean_abs_bias: f64,
    pub n_reps: usize,
    pub n_degenerate: usize,
}

impl McCell {
    pub fn key(&self) -> RowKey {
        RowKey {
            design: self.design.clone(),
            dgp: self.dgp.clone(),
            t: self.t,
            lag_rule: self.lag_rule.clone(),
            method: self.method.clone(),
            scheme: self.scheme.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.coverage.is_finite()
            && self.median_rel_length.is_finite()
            && self.mean_abs_bias.is_finite();
        if !finite
            || !(0.0..=1.0).contains(&self.coverage)
            || self.median_rel_length < 0.0
            || self.mean_abs_bias < 0.0
            || self.n_reps == 0
        {
            return Err(Error::InvalidInput(format!("malformed cell {self:?}")));
        }
        Ok(())
    }

    /// Copy with every real field rounded to 6 significant digits.
    pub fn rounded(&self) -> Self {
        Self {
            coverage: round_sig(self.coverage),
            median_rel_length: round_sig(self.median_rel_length),
            mean_abs_bias: round_sig(self.mean_abs_bias),
            ..self.clone()
        }
    }
}

/// Rounds to 6 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Shortest decimal form of `x` rounded to 6 significant digits.
pub fn format_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

/// Complete grid of cells: rows by design key, columns by horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McTable {
    pub horizons: Vec<usize>,
    pub rows: Vec<RowKey>,
    /// Row-major: `cells[r * horizons.len() + j]`.
    pub cells: Vec<McCell>,
}

impl McTable {
    pub fn cell(&self, row: usize, col: usize) -> &McCell {
        &self.cells[row * self.horizons.len() + col]
    }

    pub fn find(&self, key: &RowKey, h: usize) -> Option<&McCell> {
        let r = self.rows.iter().position(|k| k == key)?;
        let c = self.horizons.iter().position(|&x| x == h)?;
        Some(self.cell(r, c))
    }

    pub fn coverage_panel(&self) -> Vec<(RowKey, Vec<f64>)> {
        self.panel(|c| c.coverage)
    }

    pub fn length_panel(&self) -> Vec<(RowKey, Vec<f64>)> {
        self.panel(|c| c.median_rel_length)
    }

    fn panel(&self, f: impl Fn(&McCell) -> f64) -> Vec<(RowKey, Vec<f64>)> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, k)| (k.clone(), (0..self.horizons.len()).map(|c| f(self.cell(r, c))).collect()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_cells_csv(&self.cells, w)
    }

    pub fn to_json(&self) -> Result<String> {
        let rounded: Vec<McCell> = self.cells.iter().map(McCell::rounded).collect();
        Ok(serde_json::to_string_pretty(&rounded)?)
    }
}

/// Orders cells into a table. Rows keep first-appearance order; every row
/// needs exactly one cell per horizon.
pub fn assemble_table(cells: Vec<McCell>, horizons: &[usize]) -> Result<McTable> {
    if cells.is_empty() || horizons.is_empty() {
        return Err(Error::IncompleteGrid("empty grid".into()));
    }
    let distinct: BTreeSet<usize> = horizons.iter().copied().collect();
    if distinct.len() != horizons.len() {
        return Err(Error::InvalidInput("repeated horizon".into()));
    }
    let mut rows: Vec<RowKey> = Vec::new();
    let mut slots: HashMap<(RowKey, usize), McCell> = HashMap::new();
    for cell in cells {
        cell.validate()?;
        let key = cell.key();
        if !distinct.contains(&cell.h) {
            return Err(Error::IncompleteGrid(format!("horizon {} not in table", cell.h)));
        }
        if !rows.contains(&key) {
            rows.push(key.clone());
        }
        if slots.insert((key, cell.h), cell).is_some() {
            return Err(Error::IncompleteGrid("duplicate cell".into()));
        }
    }
    let mut ordered = Vec::with_capacity(rows.len() * horizons.len());
    for key in &rows {
        for &h in horizons {
            let cell = slots.remove(&(key.clone(), h)).ok_or_else(|| {
                Error::IncompleteGrid(format!(
                    "missing {} T={} {} {} h={h}",
                    key.dgp, key.t, key.lag_rule, key.method
                ))
            })?;
            ordered.push(cell);
        }
    }
    Ok(McTable { horizons: horizons.to_vec(), rows, cells: ordered })
}

/// CSV with the fixed column order and 6-significant-digit reals.
pub fn write_cells_csv<W: Write>(cells: &[McCell], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record([
        "design",
        "dgp",
        "T",
        "lag_rule",
        "method",
        "scheme",
        "h",
        "coverage",
        "median_rel_length",
        "mean_abs_bias",
        "n_reps",
        "n_degenerate",
    ])?;
    for c in cells {
        out.write_record([
            c.design.clone(),
            c.dgp.clone(),
            c.t.to_string(),
            c.lag_rule.clone(),
            c.method.clone(),
            c.scheme.clone(),
            c.h.to_string(),
            format_sig(c.coverage),
            format_sig(c.median_rel_length),
            format_sig(c.mean_abs_bias),
            c.n_reps.to_string(),
            c.n_degenerate.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cells_csv<R: Read>(r: R) -> Result<Vec<McCell>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut cells = Vec::new();
    for row in rdr.deserialize() {
        cells.push(row?);
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi)
    }

    #[test]
    fn coverage_examples() {
        let all = vec![iv(-1.0, 1.0); 10];
        assert_eq!(coverage(&all, 0.0).unwrap(), 1.0);
        assert_eq!(coverage(&all, 5.0).unwrap(), 0.0);
        assert_eq!(coverage(&all, 1.0).unwrap(), 1.0);
        let mut mixed = vec![iv(0.0, 2.0); 92];
        mixed.extend(vec![iv(3.0, 4.0); 8]);
        assert_eq!(coverage(&mixed, 1.0).unwrap(), 0.92);
        assert!(coverage(&[], 0.0).is_err());
    }

    #[test]
    fn relative_length_examples() {
        let r = median_rel_length(&[iv(0.0, 1.0)], &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(r.median, 1.0);
        let ivs = [iv(0.0, 1.0), iv(0.0, 2.0), iv(0.0, 3.0)];
        let irfs = vec![vec![1.0, 0.5, 0.0]; 3];
        assert_eq!(median_rel_length(&ivs, &irfs).unwrap().median, 2.0);
        let r = median_rel_length(&ivs, &[vec![1.0, 1.0], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!((r.median, r.n_degenerate), (2.5, 1));
        assert!(matches!(
            median_rel_length(&ivs[..1], &[vec![1.0, 1.0]]),
            Err(Error::DegenerateCell(_))
        ));
    }

    #[test]
    fn bias_examples() {
        assert_eq!(mean_abs_bias(&[0.3, 0.3], 0.3).unwrap(), 0.0);
        assert!((mean_abs_bias(&[0.9, 1.1], 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(mean_abs_bias_paired(&[0.9, 2.0], &[1.0, 2.5]).unwrap(), 0.3);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.93), "0.93");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig(123456789.0), "123457000");
        assert_eq!(format_sig(2.0 / 3.0 * 1e-5), "0.00000666667");
    }

    pub(crate) fn cell(t: usize, rule: &str, h: usize, cov: f64) -> McCell {
        McCell {
            design: "ar1-phi0".into(),
            dgp: "ar1".into(),
            t,
            lag_rule: rule.into(),
            method: "lp-method1".into(),
            scheme: "bwb".into(),
            h,
            coverage: cov,
            median_rel_length: 1.0 / 7.0,
            mean_abs_bias: 0.01,
            n_reps: 100,
            n_degenerate: 0,
        }
    }

    #[test]
    fn single_cell_table() {
        let t = assemble_table(vec![cell(200, "sbic", 5, 0.9)], &[5]).unwrap();
        assert_eq!((t.rows.len(), t.cells.len()), (1, 1));
    }

    #[test]
    fn reference_grid_shape() {
        let mut cells = Vec::new();
        for t in [200, 400, 1000] {
            for rule in ["sbic", "p1", "p2", "p4"] {
                for h in AR_HORIZONS.iter().rev() {
                    cells.push(cell(t, rule, *h, 0.9));
                }
            }
        }
        let table = assemble_table(cells, &AR_HORIZONS).unwrap();
        assert_eq!(table.rows.len(), 12);
        assert_eq!(table.coverage_panel().len(), 12);
        assert!(table.length_panel().iter().all(|(_, v)| v.len() == 6));
        assert_eq!(table.cell(0, 0).h, 5);
        assert!(table.find(&table.rows[11], 60).is_some());
    }

    #[test]
    fn incomplete_and_duplicate_grids() {
        let cells = vec![cell(200, "sbic", 5, 0.9), cell(200, "sbic", 10, 0.9), cell(400, "sbic", 5, 0.9)];
        assert!(matches!(assemble_table(cells, &[5, 10]), Err(Error::IncompleteGrid(_))));
        let dup = vec![cell(200, "sbic", 5, 0.9), cell(200, "sbic", 5, 0.8)];
        assert!(assemble_table(dup, &[5]).is_err());
        assert!(assemble_table(vec![cell(200, "sbic", 5, 1.5)], &[5]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cells: Vec<McCell> = (0..4).map(|i| cell(200, "sbic", 5 * (i + 1), 0.1 * i as f64 + 1.0 / 9.0)).collect();
        let mut buf = Vec::new();
        write_cells_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("design,dgp,T,lag_rule,method,scheme,h,coverage,"));
        let back = read_cells_csv(buf.as_slice()).unwrap();
        let rounded: Vec<McCell> = cells.iter().map(McCell::rounded).collect();
        assert_eq!(back, rounded);
        let mut again = Vec::new();
        write_cells_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }
}
