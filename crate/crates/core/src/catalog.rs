//! Product catalog model, CSV ingestion, cleaning and stratified splitting.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricebands::PriceBandSpec;

/// Column order of the catalog CSV. Empty cell = missing value.
pub const CATALOG_HEADER: [&str; 9] = [
    "id",
    "name",
    "ram_gb",
    "storage_gb",
    "front_cam_mp",
    "back_cam_mp",
    "battery_mah",
    "original_price",
    "sale_price",
];

pub const NUM_FEATURES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ram: f64,
    pub storage: f64,
    pub front_camera: f64,
    pub back_camera: f64,
    pub battery: f64,
}

impl FeatureVector {
    pub fn new(ram: f64, storage: f64, front_camera: f64, back_camera: f64, battery: f64) -> Self {
        Self {
            ram,
            storage,
            front_camera,
            back_camera,
            battery,
        }
    }

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn to_array(self) -> [f64; NUM_FEATURES] {
        [
            self.ram,
            self.storage,
            self.front_camera,
            self.back_camera,
            self.battery,
        ]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommodityRecord {
    pub id: String,
    pub name: String,
    pub features: FeatureVector,
    pub original_price: f64,
    pub sale_price: Option<f64>,
}

/// A cleaned catalog: every record complete, ids unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<CommodityRecord>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(records: Vec<CommodityRecord>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Contract(format!("duplicate record id `{}`", r.id)));
            }
            validate_record(r)?;
        }
        Ok(Self {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows: Vec<CatalogRow> = self.records.iter().map(CatalogRow::from).collect();
        write_rows(&rows, out)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn validate_record(r: &CommodityRecord) -> Result<()> {
    if !r.features.is_valid() {
        return Err(Error::Contract(format!(
            "record `{}` has a negative or non-finite feature",
            r.id
        )));
    }
    if !(r.original_price.is_finite() && r.original_price > 0.0) {
        return Err(Error::Contract(format!(
            "record `{}` has non-positive original price",
            r.id
        )));
    }
    if let Some(s) = r.sale_price {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Contract(format!(
                "record `{}` has non-positive sale price",
                r.id
            )));
        }
    }
    Ok(())
}

/// One CSV row as loaded, before cleaning. Any numeric cell may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogRow {
    pub id: String,
    pub name: String,
    pub features: [Option<f64>; NUM_FEATURES],
    pub original_price: Option<f64>,
    pub sale_price: Option<f64>,
}

impl CatalogRow {
    fn complete(&self) -> Option<CommodityRecord> {
        let mut f = [0.0; NUM_FEATURES];
        for (dst, src) in f.iter_mut().zip(&self.features) {
            *dst = (*src)?;
        }
        Some(CommodityRecord {
            id: self.id.clone(),
            name: self.name.clone(),
            features: FeatureVector::from_array(f),
            original_price: self.original_price?,
            sale_price: self.sale_price,
        })
    }

    /// The complete record, or a contract error naming the first missing cell.
    pub fn to_record(&self) -> Result<CommodityRecord> {
        if let Some(k) = self.features.iter().position(Option::is_none) {
            return Err(Error::Contract(format!(
                "record `{}` is missing `{}`",
                self.id,
                CATALOG_HEADER[2 + k]
            )));
        }
        if self.original_price.is_none() {
            return Err(Error::Contract(format!(
                "record `{}` is missing `original_price`",
                self.id
            )));
        }
        let rec = self.complete().expect("all required cells checked");
        validate_record(&rec)?;
        Ok(rec)
    }

    fn to_strings(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        let mut out = vec![self.id.clone(), self.name.clone()];
        out.extend(self.features.iter().map(|v| num(*v)));
        out.push(num(self.original_price));
        out.push(num(self.sale_price));
        out
    }
}

impl From<&CommodityRecord> for CatalogRow {
    fn from(r: &CommodityRecord) -> Self {
        Self {
            id: r.id.clone(),
            name: r.name.clone(),
            features: r.features.to_array().map(Some),
            original_price: Some(r.original_price),
            sale_price: r.sale_price,
        }
    }
}

/// Rows straight out of a catalog CSV, nulls and duplicates included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawCatalog {
    pub rows: Vec<CatalogRow>,
    pub provenance: String,
}

impl From<&Dataset> for RawCatalog {
    fn from(ds: &Dataset) -> Self {
        Self {
            rows: ds.records.iter().map(CatalogRow::from).collect(),
            provenance: ds.provenance.clone(),
        }
    }
}

impl RawCatalog {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.rows, out)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Integers print without a fractional part; everything else uses the
/// shortest round-tripping representation.
pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn write_rows<W: Write>(rows: &[CatalogRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io_err = |e: csv::Error| Error::Persistence(format!("writing catalog csv: {e}"));
    w.write_record(CATALOG_HEADER).map_err(io_err)?;
    for row in rows {
        w.write_record(row.to_strings()).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::Persistence(format!("writing catalog csv: {e}")))
}

pub fn load_catalog_csv(path: &Path) -> Result<RawCatalog> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut raw = read_catalog(file)?;
    raw.provenance = path.display().to_string();
    Ok(raw)
}

/// Parses catalog CSV text. Row numbers in errors are 1-based file lines
/// (the header is row 1).
pub fn read_catalog<R: Read>(input: R) -> Result<RawCatalog> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    check_header(&header)?;

    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row_no = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let cell = |c: usize| rec.get(c).unwrap_or("").trim();
        let number = |c: usize| -> Result<Option<f64>> {
            let text = cell(c);
            if text.is_empty() {
                return Ok(None);
            }
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: CATALOG_HEADER[c].to_string(),
                message: format!("`{text}` is not a number"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Parse {
                    row: row_no,
                    column: CATALOG_HEADER[c].to_string(),
                    message: format!("`{text}` must be a finite non-negative number"),
                });
            }
            Ok(Some(v))
        };
        let mut features = [None; NUM_FEATURES];
        for (k, slot) in features.iter_mut().enumerate() {
            *slot = number(2 + k)?;
        }
        let positive = |v: Option<f64>, c: usize| -> Result<Option<f64>> {
            match v {
                Some(p) if p <= 0.0 => Err(Error::Parse {
                    row: row_no,
                    column: CATALOG_HEADER[c].to_string(),
                    message: "prices must be strictly positive".into(),
                }),
                other => Ok(other),
            }
        };
        rows.push(CatalogRow {
            id: cell(0).to_string(),
            name: cell(1).to_string(),
            features,
            original_price: positive(number(7)?, 7)?,
            sale_price: positive(number(8)?, 8)?,
        });
        if rows.last().is_some_and(|r| r.id.is_empty()) {
            return Err(Error::Parse {
                row: row_no,
                column: "id".into(),
                message: "id must not be empty".into(),
            });
        }
    }
    Ok(RawCatalog {
        rows,
        provenance: String::new(),
    })
}

fn check_header(header: &csv::StringRecord) -> Result<()> {
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    for expected in CATALOG_HEADER {
        if !got.contains(&expected) {
            return Err(Error::Schema(format!("missing column `{expected}`")));
        }
    }
    if let Some(extra) = got.iter().find(|c| !CATALOG_HEADER.contains(c)) {
        return Err(Error::Schema(format!("unexpected column `{extra}`")));
    }
    if got != CATALOG_HEADER {
        return Err(Error::Schema(format!(
            "columns out of order; expected `{}`",
            CATALOG_HEADER.join(",")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleanReport {
    pub input: usize,
    pub null_dropped: usize,
    pub dedup_dropped: usize,
    /// Rows whose id repeats an earlier survivor while their content differs.
    pub id_conflict_dropped: usize,
    pub output: usize,
}

/// Exact-equality key over hardware and prices (the name is ignored, so
/// colour variants collapse). Bit patterns make the comparison exact.
fn dedup_key(r: &CommodityRecord) -> ([u64; NUM_FEATURES], u64, Option<u64>) {
    (
        r.features.to_array().map(f64::to_bits),
        r.original_price.to_bits(),
        r.sale_price.map(f64::to_bits),
    )
}

/// Drops rows with a missing feature or original price, then drops exact
/// (features, prices) duplicates keeping the first occurrence.
pub fn clean(raw: &RawCatalog) -> (Dataset, CleanReport) {
    let mut report = CleanReport {
        input: raw.rows.len(),
        ..CleanReport::default()
    };
    let mut seen_keys = HashSet::new();
    let mut seen_ids = HashSet::new();
    let mut records = Vec::new();
    for row in &raw.rows {
        let Some(rec) = row.complete() else {
            report.null_dropped += 1;
            continue;
        };
        if !seen_keys.insert(dedup_key(&rec)) {
            report.dedup_dropped += 1;
            continue;
        }
        if !seen_ids.insert(rec.id.clone()) {
            report.id_conflict_dropped += 1;
            continue;
        }
        records.push(rec);
    }
    report.output = records.len();
    let ds = Dataset {
        records,
        provenance: raw.provenance.clone(),
    };
    (ds, report)
}

/// Within each band, a seeded shuffle followed by a cut at
/// `round(train_fraction * band_size)`, leaving at least one test record
/// whenever the band has two or more. Both outputs keep input order.
pub fn stratified_split(
    ds: &Dataset,
    bands: &PriceBandSpec,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Contract(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_band: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in ds.records.iter().enumerate() {
        by_band
            .entry(bands.assign(r.original_price)?)
            .or_default()
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.len()];
    for members in by_band.values_mut() {
        members.shuffle(&mut rng);
        let n = members.len();
        let mut take = (train_fraction * n as f64).round() as usize;
        if n >= 2 {
            take = take.min(n - 1);
        }
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    let pick = |want: bool| {
        ds.records
            .iter()
            .zip(&in_train)
            .filter(|(_, t)| **t == want)
            .map(|(r, _)| r.clone())
            .collect::<Vec<_>>()
    };
    Ok((
        Dataset {
            records: pick(true),
            provenance: format!("{} [train, seed {seed}]", ds.provenance),
        },
        Dataset {
            records: pick(false),
            provenance: format!("{} [test, seed {seed}]", ds.provenance),
        },
    ))
}
