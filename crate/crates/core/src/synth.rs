//! Seeded synthetic catalogs standing in for crawled listings.
//!
//! Prices are drawn log-uniformly inside each band; the five features are
//! noisy monotone functions of the log-price, so features genuinely predict
//! the band. Sale prices come from a configurable discount mix.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{
    CatalogRow, CommodityRecord, Dataset, FeatureVector, RawCatalog, NUM_FEATURES,
};
use crate::error::{Error, Result};
use crate::pricebands::PriceBandSpec;

/// Per-band record counts of the reference catalog (LOW, BUDGET, MID RANGE,
/// PREMIUM).
pub const DEFAULT_BAND_COUNTS: [usize; 4] = [426, 204, 76, 27];

/// Mix of sale-season price changes. Probabilities are checked in order:
/// unchanged, cross-band drop, deep cut, price rise; the rest get a shallow cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountProfile {
    pub unchanged: f64,
    pub cross_band: f64,
    pub deep: f64,
    pub rise: f64,
    /// Largest fractional discount of a shallow cut.
    pub shallow_max: f64,
    /// Fractional range of a deep cut.
    pub deep_range: (f64, f64),
}

impl Default for DiscountProfile {
    fn default() -> Self {
        Self {
            unchanged: 0.30,
            cross_band: 0.02,
            deep: 0.03,
            rise: 0.01,
            shallow_max: 0.08,
            deep_range: (0.15, 0.40),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Records per band, in band order.
    pub counts: Vec<usize>,
    /// Lowest price generated in the first band.
    pub price_floor: f64,
    /// Highest price generated in the unbounded last band.
    pub price_ceiling: f64,
    /// Half-width of the uniform noise added to each feature's latent level.
    pub feature_noise: f64,
    pub discount: DiscountProfile,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            counts: DEFAULT_BAND_COUNTS.to_vec(),
            price_floor: 500.0,
            price_ceiling: 150_000.0,
            feature_noise: 0.05,
            discount: DiscountProfile::default(),
        }
    }
}

const BRANDS: [&str; 12] = [
    "Aurel", "Brisa", "Corvo", "Dulan", "Elmet", "Fyra", "Gantt", "Halo", "Istra", "Juno", "Kestl",
    "Lumo",
];
const COLOURS: [&str; 6] = ["Black", "Blue", "Silver", "Green", "Red", "Gold"];

const RAM_LEVELS: [f64; 9] = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0];
const STORAGE_LEVELS: [f64; 8] = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
const FRONT_LEVELS: [f64; 8] = [0.3, 2.0, 5.0, 8.0, 13.0, 16.0, 20.0, 32.0];
const BACK_LEVELS: [f64; 9] = [2.0, 5.0, 8.0, 12.0, 13.0, 16.0, 48.0, 64.0, 108.0];

fn level(levels: &[f64], x: f64) -> f64 {
    let top = (levels.len() - 1) as f64;
    levels[(x * top).round().clamp(0.0, top) as usize]
}

/// Non-sale and sale catalogs over the same products (same ids, features
/// and original prices).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub non_sale: Dataset,
    pub sale: Dataset,
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    bands: &'a PriceBandSpec,
    log_floor: f64,
    log_span: f64,
}

impl Generator<'_> {
    /// Inclusive integer price range covered by band `b`.
    fn band_range(&self, b: usize) -> (f64, f64) {
        let band = &self.bands.bands()[b];
        let lo = band.lower.max(self.cfg.price_floor).ceil();
        let hi = band
            .upper
            .map_or(self.cfg.price_ceiling, |u| u.ceil() - 1.0);
        (lo, hi)
    }

    fn price_in(&self, b: usize, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = self.band_range(b);
        let x = rng.gen_range(lo.ln()..=hi.ln());
        x.exp().round().clamp(lo, hi)
    }

    fn features_for(&self, price: f64, rng: &mut ChaCha8Rng) -> FeatureVector {
        let q = (price.ln() - self.log_floor) / self.log_span;
        let w = self.cfg.feature_noise;
        let mut noisy = || q + rng.gen_range(-w..=w);
        let ram = level(&RAM_LEVELS, noisy());
        let storage = level(&STORAGE_LEVELS, noisy());
        let front = level(&FRONT_LEVELS, noisy());
        let back = level(&BACK_LEVELS, noisy());
        let battery = ((1000.0 + 4000.0 * noisy().clamp(0.0, 1.2)) / 50.0).round() * 50.0;
        FeatureVector::new(ram, storage, front, back, battery)
    }

    fn sale_price(&self, original: f64, band: usize, rng: &mut ChaCha8Rng) -> f64 {
        let d = &self.cfg.discount;
        let roll: f64 = rng.gen();
        let mut acc = d.unchanged;
        if roll < acc {
            return original;
        }
        acc += d.cross_band;
        if roll < acc && band > 0 {
            let (lo, hi) = self.band_range(band - 1);
            let target = rng.gen_range(lo.max(hi * 0.7)..=hi).round();
            return target.min(original - 1.0).max(1.0);
        }
        acc += d.deep;
        if roll < acc {
            let cut = rng.gen_range(d.deep_range.0..=d.deep_range.1);
            return (original * (1.0 - cut)).round().max(1.0);
        }
        acc += d.rise;
        if roll < acc {
            return (original * rng.gen_range(1.01..=1.05)).round();
        }
        let cut = rng.gen_range(0.0..=d.shallow_max);
        (original * (1.0 - cut)).round().max(1.0)
    }
}

pub fn generate(cfg: &SynthConfig, bands: &PriceBandSpec) -> Result<SynthOutput> {
    if cfg.counts.len() != bands.len() {
        return Err(Error::Config(format!(
            "{} band counts given for {} bands",
            cfg.counts.len(),
            bands.len()
        )));
    }
    if !(cfg.price_floor > 0.0 && cfg.price_floor < cfg.price_ceiling) {
        return Err(Error::Config(
            "price floor must be positive and below the ceiling".into(),
        ));
    }
    let gen = Generator {
        cfg,
        bands,
        log_floor: cfg.price_floor.ln(),
        log_span: cfg.price_ceiling.ln() - cfg.price_floor.ln(),
    };
    for (b, &count) in cfg.counts.iter().enumerate() {
        let (lo, hi) = gen.band_range(b);
        if count > 0 && !(lo <= hi) {
            return Err(Error::Config(format!(
                "band `{}` has no integer prices between the floor {} and ceiling {}",
                bands.name(b),
                cfg.price_floor,
                cfg.price_ceiling
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = cfg
        .counts
        .iter()
        .enumerate()
        .flat_map(|(b, &n)| std::iter::repeat_n(b, n))
        .collect();
    order.shuffle(&mut rng);

    let mut seen = HashSet::new();
    let mut non_sale = Vec::with_capacity(order.len());
    let mut sale = Vec::with_capacity(order.len());
    for (i, &band) in order.iter().enumerate() {
        // Resample until the (features, price) pair is new, so the catalog
        // contains no accidental duplicates.
        let (price, features) = loop {
            let price = gen.price_in(band, &mut rng);
            let features = gen.features_for(price, &mut rng);
            let key = (features.to_array().map(f64::to_bits), price.to_bits());
            if seen.insert(key) {
                break (price, features);
            }
        };
        let brand = BRANDS[rng.gen_range(0..BRANDS.len())];
        let colour = COLOURS[rng.gen_range(0..COLOURS.len())];
        let name = format!(
            "{brand} {}{:03} ({colour})",
            (b'A' + band as u8) as char,
            i % 1000
        );
        let record = CommodityRecord {
            id: format!("P{:04}", i + 1),
            name,
            features,
            original_price: price,
            sale_price: None,
        };
        let sale_price = gen.sale_price(price, band, &mut rng);
        sale.push(CommodityRecord {
            sale_price: Some(sale_price),
            ..record.clone()
        });
        non_sale.push(record);
    }
    let note = format!("synthetic catalog, seed {}", cfg.seed);
    Ok(SynthOutput {
        non_sale: Dataset::new(non_sale, format!("{note} (non-sale)"))?,
        sale: Dataset::new(sale, format!("{note} (sale)"))?,
    })
}

/// Fabricated split of the rows a raw crawl loses to cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlNoise {
    /// Rows with at least one missing feature or original price.
    pub null_rows: usize,
    /// Colour variants: exact copies of a product under another name.
    pub colour_duplicates: usize,
}

impl Default for CrawlNoise {
    /// 300 + 160 = 460 extra rows, taking 733 products to 1193 rows.
    fn default() -> Self {
        Self {
            null_rows: 300,
            colour_duplicates: 160,
        }
    }
}

/// A raw crawl that cleans back to exactly `clean`: incomplete rows are
/// scattered anywhere, colour duplicates always follow their original.
pub fn raw_crawl(clean: &Dataset, noise: CrawlNoise, seed: u64) -> Result<RawCatalog> {
    let n = clean.len();
    if n == 0 && noise.colour_duplicates > 0 {
        return Err(Error::Config(
            "cannot duplicate rows of an empty catalog".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, CatalogRow)> = clean
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (i as f64, CatalogRow::from(r)))
        .collect();

    for d in 0..noise.colour_duplicates {
        let src = rng.gen_range(0..n);
        let mut row = CatalogRow::from(&clean.records[src]);
        let base = row
            .name
            .rsplit_once(" (")
            .map_or(row.name.as_str(), |(b, _)| b)
            .to_string();
        let colour = COLOURS[rng.gen_range(0..COLOURS.len())];
        row.name = format!("{base} ({colour})");
        row.id = format!("{}-v{}", row.id, d + 1);
        // Strictly after the source row.
        let key = src as f64 + rng.gen_range(0.001..1.0) * (n - src) as f64;
        keyed.push((key, row));
    }
    for z in 0..noise.null_rows {
        let mut row = if n > 0 {
            CatalogRow::from(&clean.records[rng.gen_range(0..n)])
        } else {
            CatalogRow {
                id: String::new(),
                name: "Unnamed".into(),
                features: [Some(1.0); NUM_FEATURES],
                original_price: Some(999.0),
                sale_price: None,
            }
        };
        row.id = format!("N{:04}", z + 1);
        row.name = format!("{} [partial listing]", row.name);
        // Blank one to three of the six required cells.
        let blanks = rng.gen_range(1..=3);
        let mut cells: Vec<usize> = (0..=NUM_FEATURES).collect();
        cells.shuffle(&mut rng);
        for &c in &cells[..blanks] {
            if c == NUM_FEATURES {
                row.original_price = None;
            } else {
                row.features[c] = None;
            }
        }
        keyed.push((rng.gen_range(0.0..n.max(1) as f64), row));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(RawCatalog {
        rows: keyed.into_iter().map(|(_, r)| r).collect(),
        provenance: format!("synthetic raw crawl, seed {seed}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::clean;

    #[test]
    fn default_counts_recount_by_band() {
        let bands = PriceBandSpec::default_spec();
        let out = generate(&SynthConfig::default(), &bands).unwrap();
        assert_eq!(out.non_sale.len(), 733);
        let mut counts = [0usize; 4];
        for r in &out.non_sale.records {
            counts[bands.assign(r.original_price).unwrap()] += 1;
            assert!(r.features.is_valid());
            assert!(r.sale_price.is_none());
        }
        assert_eq!(counts, DEFAULT_BAND_COUNTS);
        assert!(out.sale.records.iter().all(|r| r.sale_price.is_some()));
    }

    #[test]
    fn same_seed_same_output() {
        let bands = PriceBandSpec::default_spec();
        let a = generate(&SynthConfig::default(), &bands).unwrap();
        let b = generate(&SynthConfig::default(), &bands).unwrap();
        assert_eq!(a, b);
        let c = generate(
            &SynthConfig {
                seed: 7,
                ..SynthConfig::default()
            },
            &bands,
        )
        .unwrap();
        assert_ne!(a.non_sale, c.non_sale);
    }

    #[test]
    fn count_mismatch_is_config_error() {
        let cfg = SynthConfig {
            counts: vec![1, 2, 3],
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate(&cfg, &PriceBandSpec::default_spec()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn raw_crawl_cleans_back() {
        let bands = PriceBandSpec::default_spec();
        let out = generate(&SynthConfig::default(), &bands).unwrap();
        let raw = raw_crawl(&out.non_sale, CrawlNoise::default(), 42).unwrap();
        assert_eq!(raw.rows.len(), 1193);
        let (ds, report) = clean(&raw);
        assert_eq!(report.null_dropped, 300);
        assert_eq!(report.dedup_dropped, 160);
        assert_eq!(ds.records, out.non_sale.records);
    }
}
