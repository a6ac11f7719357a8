//! Per-snapshot metric rows, empirical CDFs, CSV emission and the
//! experiment summary.
//!
//! CSV schemas are versioned through a leading `schema_version` column; dB
//! values are written with four decimal places so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;

use crate::error::Error;
use crate::Result;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkFlag {
    Ok,
    /// Restricted sweep measured zero power while exhaustive search did not.
    BlockageMiss,
    /// Neither sweep measured any power.
    NoLink,
}

impl LinkFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkFlag::Ok => "ok",
            LinkFlag::BlockageMiss => "blockage_miss",
            LinkFlag::NoLink => "no_link",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(LinkFlag::Ok),
            "blockage_miss" => Ok(LinkFlag::BlockageMiss),
            "no_link" => Ok(LinkFlag::NoLink),
            other => Err(Error::ConfigParse(format!("unknown link flag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub snapshot: usize,
    pub cv_cell: usize,
    pub trained_pairs_exhaustive: usize,
    pub trained_pairs_restricted: usize,
    pub loss_db: f64,
    pub best_power_exhaustive_db: f64,
    pub best_power_restricted_db: f64,
    pub flag: LinkFlag,
}

/// Per-snapshot results for one array size.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub array_size: usize,
    pub rows: Vec<MetricRow>,
    /// Snapshots re-drawn because no eligible communicating vehicle existed.
    pub resample_events: usize,
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.4}")
    }
}

fn parse_db(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|e| Error::ConfigParse(format!("bad dB value {s:?}: {e}"))),
    }
}

const METRICS_HEADER: &str = "schema_version,snapshot,cv_cell,trained_pairs_exhaustive,\
trained_pairs_restricted,loss_db,best_power_exhaustive_db,best_power_restricted_db,flag";

impl MetricTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                METRICS_SCHEMA_VERSION,
                r.snapshot,
                r.cv_cell,
                r.trained_pairs_exhaustive,
                r.trained_pairs_restricted,
                fmt_db(r.loss_db),
                fmt_db(r.best_power_exhaustive_db),
                fmt_db(r.best_power_restricted_db),
                r.flag.as_str()
            );
        }
        out
    }

    /// Parses a metrics CSV produced by [`MetricTable::to_csv`]. The array
    /// size is not stored in the file; pass 0 when unknown.
    pub fn from_csv(text: &str, array_size: usize) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or(Error::EmptyInput("metrics csv"))?;
        if header != METRICS_HEADER {
            return Err(Error::ConfigParse("unrecognized metrics header".into()));
        }
        let mut rows = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::ConfigParse(format!(
                    "expected 9 fields, got {}",
                    fields.len()
                )));
            }
            let version: u32 = fields[0]
                .parse()
                .map_err(|_| Error::ConfigParse("bad schema_version".into()))?;
            if version != METRICS_SCHEMA_VERSION {
                return Err(Error::ConfigParse(format!(
                    "unsupported metrics schema version {version}"
                )));
            }
            let parse_usize = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|e| Error::ConfigParse(format!("bad integer {s:?}: {e}")))
            };
            rows.push(MetricRow {
                snapshot: parse_usize(fields[1])?,
                cv_cell: parse_usize(fields[2])?,
                trained_pairs_exhaustive: parse_usize(fields[3])?,
                trained_pairs_restricted: parse_usize(fields[4])?,
                loss_db: parse_db(fields[5])?,
                best_power_exhaustive_db: parse_db(fields[6])?,
                best_power_restricted_db: parse_db(fields[7])?,
                flag: LinkFlag::parse(fields[8])?,
            });
        }
        Ok(MetricTable {
            array_size,
            rows,
            resample_events: 0,
        })
    }
}

/// Empirical CDF: sorted ascending with one step per distinct sample;
/// probabilities in (0, 1].
pub fn compute_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("cdf values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = p,
            _ => out.push((*v, p)),
        }
    }
    Ok(out)
}

pub fn cdf_to_csv(cdf: &[(f64, f64)], value_label: &str) -> String {
    let mut out = format!("schema_version,{value_label},cumulative_probability\n");
    for (v, p) in cdf {
        let _ = writeln!(out, "{},{},{:.6}", METRICS_SCHEMA_VERSION, fmt_db(*v), p);
    }
    out
}

/// Aggregate statistics for one array size.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub array_size: usize,
    pub snapshots: usize,
    pub resample_events: usize,
    pub trained_pairs_exhaustive: usize,
    pub mean_trained_restricted: f64,
    pub median_trained_restricted: f64,
    pub overhead_ratio: f64,
    pub mean_loss_db_finite: f64,
    pub median_loss_db: f64,
    pub fraction_loss_le_half_db: f64,
    pub blockage_misses: usize,
    pub no_link_snapshots: usize,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn summarize(table: &MetricTable) -> SizeSummary {
    let n = table.rows.len();
    let counts: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.trained_pairs_restricted as f64)
        .collect();
    let mean_trained = counts.iter().sum::<f64>() / n.max(1) as f64;
    let mut sorted_counts = counts.clone();
    sorted_counts.sort_by(f64::total_cmp);
    let exhaustive = table
        .rows
        .first()
        .map(|r| r.trained_pairs_exhaustive)
        .unwrap_or(0);
    let mut losses: Vec<f64> = table.rows.iter().map(|r| r.loss_db).collect();
    losses.sort_by(f64::total_cmp);
    let finite: Vec<f64> = losses.iter().copied().filter(|l| l.is_finite()).collect();
    let mean_finite = if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let le_half = losses.iter().filter(|&&l| l <= 0.5).count();
    SizeSummary {
        array_size: table.array_size,
        snapshots: n,
        resample_events: table.resample_events,
        trained_pairs_exhaustive: exhaustive,
        mean_trained_restricted: mean_trained,
        median_trained_restricted: median(&sorted_counts),
        overhead_ratio: if exhaustive > 0 {
            mean_trained / exhaustive as f64
        } else {
            f64::NAN
        },
        mean_loss_db_finite: mean_finite,
        median_loss_db: median(&losses),
        fraction_loss_le_half_db: le_half as f64 / n.max(1) as f64,
        blockage_misses: table
            .rows
            .iter()
            .filter(|r| r.flag == LinkFlag::BlockageMiss)
            .count(),
        no_link_snapshots: table
            .rows
            .iter()
            .filter(|r| r.flag == LinkFlag::NoLink)
            .count(),
    }
}

pub fn format_summary(s: &SizeSummary) -> String {
    let mut out = String::new();
    if s.array_size > 0 {
        let _ = writeln!(out, "array {0}x{0}", s.array_size);
    } else {
        let _ = writeln!(out, "array (size not recorded)");
    }
    let _ = writeln!(out, "  snapshots:                 {}", s.snapshots);
    let _ = writeln!(out, "  resample events:           {}", s.resample_events);
    let _ = writeln!(out, "  exhaustive trained pairs:  {}", s.trained_pairs_exhaustive);
    let _ = writeln!(out, "  mean restricted pairs:     {:.4}", s.mean_trained_restricted);
    let _ = writeln!(out, "  median restricted pairs:   {:.4}", s.median_trained_restricted);
    let _ = writeln!(out, "  overhead ratio:            {:.6}", s.overhead_ratio);
    let _ = writeln!(out, "  mean loss (finite) dB:     {}", fmt_db(s.mean_loss_db_finite));
    let _ = writeln!(out, "  median loss dB:            {}", fmt_db(s.median_loss_db));
    let _ = writeln!(out, "  P(loss <= 0.5 dB):         {:.4}", s.fraction_loss_le_half_db);
    let _ = writeln!(out, "  blockage misses:           {}", s.blockage_misses);
    let _ = writeln!(out, "  no-link snapshots:         {}", s.no_link_snapshots);
    out
}
