//! Run report: stats table, band × significance-class matrix and the full
//! verdict list.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::catalog::{format_number, CleanReport};
use crate::error::{Error, Result};
use crate::pricebands::{BandStat, PriceBandSpec, PriceBandStats};
use crate::significance::{Classification, Fold, Reject, SignificancePolicy, SignificanceVerdict};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub band: String,
    pub counts: Vec<usize>,
    pub total: usize,
}

/// Rows are bands of the listed original price; columns are significance
/// classes, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<MatrixRow>,
    pub column_totals: Vec<usize>,
    pub grand_total: usize,
}

impl SummaryMatrix {
    pub fn build(
        bands: &PriceBandSpec,
        policy: &SignificancePolicy,
        verdicts: &[SignificanceVerdict],
    ) -> Result<Self> {
        let columns = policy.class_columns();
        let mut rows: Vec<MatrixRow> = bands
            .names()
            .into_iter()
            .map(|band| MatrixRow {
                band,
                counts: vec![0; columns.len()],
                total: 0,
            })
            .collect();
        for v in verdicts {
            let r = bands.index_of(&v.listed_band).ok_or_else(|| {
                Error::Config(format!(
                    "verdict `{}` names unknown band `{}`",
                    v.id, v.listed_band
                ))
            })?;
            let c = columns
                .iter()
                .position(|c| *c == v.class_name)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "verdict `{}` has unknown class `{}`",
                        v.id, v.class_name
                    ))
                })?;
            rows[r].counts[c] += 1;
            rows[r].total += 1;
        }
        let column_totals = (0..columns.len())
            .map(|c| rows.iter().map(|r| r.counts[c]).sum())
            .collect();
        let grand_total = rows.iter().map(|r| r.total).sum();
        Ok(Self {
            columns,
            rows,
            column_totals,
            grand_total,
        })
    }

    /// Row totals, column totals and grand total agree with each other.
    pub fn is_consistent(&self) -> bool {
        let by_rows: usize = self.rows.iter().map(|r| r.total).sum();
        let by_cols: usize = self.column_totals.iter().sum();
        let rows_ok = self
            .rows
            .iter()
            .all(|r| r.counts.iter().sum::<usize>() == r.total);
        rows_ok && by_rows == self.grand_total && by_cols == self.grand_total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub stats_table: Vec<BandStat>,
    pub summary_matrix: SummaryMatrix,
    /// Cross-class deals by number of bands dropped; present when the
    /// policy asks for graded reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graded_cross_class: Option<BTreeMap<usize, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean_report: Option<CleanReport>,
    pub verdicts: Vec<SignificanceVerdict>,
    pub rejects: Vec<Reject>,
    pub config_echo: BTreeMap<String, serde_json::Value>,
}

impl RunReport {
    pub fn build(
        bands: &PriceBandSpec,
        stats: &PriceBandStats,
        policy: &SignificancePolicy,
        classification: Classification,
        config_echo: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        let summary_matrix = SummaryMatrix::build(bands, policy, &classification.verdicts)?;
        let graded_cross_class = policy.graded_cross_class.then(|| {
            let mut graded = BTreeMap::new();
            for v in &classification.verdicts {
                if v.fold == Fold::Infinite {
                    *graded.entry(v.x_levels).or_insert(0) += 1;
                }
            }
            graded
        });
        Ok(Self {
            version: REPORT_VERSION,
            stats_table: stats.rows.clone(),
            summary_matrix,
            graded_cross_class,
            clean_report: None,
            verdicts: classification.verdicts,
            rejects: classification.rejects,
            config_echo,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Persistence(format!("serializing report: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

pub const VERDICT_HEADER: [&str; 9] = [
    "id",
    "listed_band",
    "predicted_band",
    "sale_price_band",
    "discount",
    "fold",
    "x_levels",
    "class_name",
    "anomalies",
];

/// Flat CSV of verdicts; anomalies are `;`-joined.
pub fn write_verdicts_csv<W: Write>(verdicts: &[SignificanceVerdict], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let err = |e: csv::Error| Error::Persistence(format!("writing verdict csv: {e}"));
    w.write_record(VERDICT_HEADER).map_err(err)?;
    for v in verdicts {
        let fold = match v.fold {
            Fold::Finite(n) => n.to_string(),
            Fold::Infinite => "inf".into(),
        };
        let anomalies: Vec<String> = v
            .anomalies
            .iter()
            .map(|a| {
                serde_json::to_value(a)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default()
            })
            .collect();
        w.write_record([
            v.id.as_str(),
            &v.listed_band,
            &v.predicted_band,
            &v.sale_price_band,
            &format_number(v.discount),
            &fold,
            &v.x_levels.to_string(),
            &v.class_name,
            &anomalies.join(";"),
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Persistence(format!("writing verdict csv: {e}")))
}
