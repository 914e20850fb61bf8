//! Price bands ("price classes"): ordered, contiguous, half-open price
//! intervals, plus per-band count/mean/standard-deviation statistics.
//!
//! Bands are always assigned from the non-sale price. Every interval is
//! lower-inclusive and upper-exclusive; the last band is unbounded above.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::Dataset;
use crate::error::{Error, Result};

/// One price interval `[lower, upper)`. `upper == None` means +∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBand {
    pub name: String,
    pub lower: f64,
    pub upper: Option<f64>,
}

impl PriceBand {
    pub fn contains(&self, price: f64) -> bool {
        price >= self.lower && self.upper.is_none_or(|u| price < u)
    }
}

/// Validated, ordered set of contiguous price bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PriceBandSpec {
    bands: Vec<PriceBand>,
}

impl<'de> Deserialize<'de> for PriceBandSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bands = Vec::<PriceBand>::deserialize(d)?;
        PriceBandSpec::new(bands).map_err(serde::de::Error::custom)
    }
}

impl PriceBandSpec {
    pub fn new(bands: Vec<PriceBand>) -> Result<Self> {
        if bands.len() < 2 {
            return Err(Error::Config(format!(
                "a band spec needs at least 2 bands, got {}",
                bands.len()
            )));
        }
        for (i, band) in bands.iter().enumerate() {
            if band.name.trim().is_empty() {
                return Err(Error::Config(format!("band {i} has an empty name")));
            }
            if bands[..i].iter().any(|b| b.name == band.name) {
                return Err(Error::Config(format!(
                    "duplicate band name `{}`",
                    band.name
                )));
            }
            if !band.lower.is_finite() || band.lower <= 0.0 {
                return Err(Error::Config(format!(
                    "band `{}` must have a finite positive lower bound",
                    band.name
                )));
            }
            let last = i + 1 == bands.len();
            match (band.upper, last) {
                (None, true) => {}
                (Some(_), true) => {
                    return Err(Error::Config(format!(
                        "last band `{}` must be unbounded above",
                        band.name
                    )))
                }
                (None, false) => {
                    return Err(Error::Config(format!(
                        "only the last band may be unbounded, but `{}` is",
                        band.name
                    )))
                }
                (Some(upper), false) => {
                    if !(upper > band.lower) {
                        return Err(Error::Config(format!(
                            "band `{}` has upper {} not above lower {}",
                            band.name, upper, band.lower
                        )));
                    }
                    if upper != bands[i + 1].lower {
                        return Err(Error::Config(format!(
                            "bands `{}` and `{}` are not contiguous ({} vs {})",
                            band.name,
                            bands[i + 1].name,
                            upper,
                            bands[i + 1].lower
                        )));
                    }
                }
            }
        }
        Ok(Self { bands })
    }

    /// LOW / BUDGET / MID RANGE / PREMIUM with cut points 5000, 15000, 30000.
    ///
    /// LOW starts at the smallest positive `f64`, so any positive price is
    /// assignable.
    pub fn default_spec() -> Self {
        let band = |name: &str, lower: f64, upper: Option<f64>| PriceBand {
            name: name.to_string(),
            lower,
            upper,
        };
        Self {
            bands: vec![
                band("LOW", f64::MIN_POSITIVE, Some(5000.0)),
                band("BUDGET", 5000.0, Some(15000.0)),
                band("MID RANGE", 15000.0, Some(30000.0)),
                band("PREMIUM", 30000.0, None),
            ],
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("band spec {}: {e}", path.display())))
    }

    pub fn bands(&self) -> &[PriceBand] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.bands.iter().map(|b| b.name.clone()).collect()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.bands[index].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.bands.iter().position(|b| b.name == name)
    }

    /// Index of the unique band containing `price`.
    pub fn assign(&self, price: f64) -> Result<usize> {
        if !price.is_finite() || price <= 0.0 {
            return Err(Error::BandAssignment { price });
        }
        // Bands are sorted, so the containing band is the last one whose
        // lower bound does not exceed the price.
        let idx = self.bands.partition_point(|b| b.lower <= price);
        if idx == 0 {
            return Err(Error::BandAssignment { price });
        }
        debug_assert!(self.bands[idx - 1].contains(price));
        Ok(idx - 1)
    }

    pub fn assign_name(&self, price: f64) -> Result<&str> {
        self.assign(price).map(|i| self.name(i))
    }
}

impl Default for PriceBandSpec {
    fn default() -> Self {
        Self::default_spec()
    }
}

/// Stats row: band, count, mean and sample standard deviation of
/// the non-sale prices assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStat {
    pub name: String,
    pub lower: f64,
    pub upper: Option<f64>,
    pub count: usize,
    /// `None` for an empty band.
    pub mean: Option<f64>,
    /// Sample standard deviation; 0 when `count <= 1`.
    pub sd: f64,
}

impl BandStat {
    pub fn is_degenerate(&self) -> bool {
        self.count <= 1 || self.sd == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceBandStats {
    pub rows: Vec<BandStat>,
}

impl PriceBandStats {
    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn get(&self, name: &str) -> Option<&BandStat> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Checks that these stats were computed for `spec` (same names and bounds).
    pub fn check_matches(&self, spec: &PriceBandSpec) -> Result<()> {
        let same = self.rows.len() == spec.len()
            && self
                .rows
                .iter()
                .zip(spec.bands())
                .all(|(r, b)| r.name == b.name && r.lower == b.lower && r.upper == b.upper);
        if same {
            Ok(())
        } else {
            Err(Error::Config(
                "band statistics were computed for a different band spec".into(),
            ))
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("stats file {}: {e}", path.display())))
    }
}

/// Count, mean and sample standard deviation of `values` (two-pass).
pub(crate) fn mean_and_sample_sd(values: &[f64]) -> (Option<f64>, f64) {
    let n = values.len();
    if n == 0 {
        return (None, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (Some(mean), 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (Some(mean), (ss / (n - 1) as f64).sqrt())
}

/// Per-band statistics over the original (non-sale) prices of `ds`.
pub fn band_stats(spec: &PriceBandSpec, ds: &Dataset) -> Result<PriceBandStats> {
    band_stats_from_prices(spec, ds.records.iter().map(|r| r.original_price))
}

pub fn band_stats_from_prices(
    spec: &PriceBandSpec,
    prices: impl IntoIterator<Item = f64>,
) -> Result<PriceBandStats> {
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); spec.len()];
    for price in prices {
        buckets[spec.assign(price)?].push(price);
    }
    let rows = spec
        .bands()
        .iter()
        .zip(&buckets)
        .map(|(band, prices)| {
            let (mean, sd) = mean_and_sample_sd(prices);
            BandStat {
                name: band.name.clone(),
                lower: band.lower,
                upper: band.upper,
                count: prices.len(),
                mean,
                sd,
            }
        })
        .collect();
    Ok(PriceBandStats { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> PriceBandSpec {
        PriceBandSpec::default_spec()
    }

    #[test]
    fn default_spec_has_four_named_bands() {
        let s = spec();
        assert_eq!(s.len(), 4);
        assert_eq!(s.names(), ["LOW", "BUDGET", "MID RANGE", "PREMIUM"]);
        // Round-trips through the validating constructor.
        PriceBandSpec::new(s.bands().to_vec()).unwrap();
    }

    #[test]
    fn assigns_reference_prices() {
        let s = spec();
        assert_eq!(s.assign_name(4399.0).unwrap(), "LOW");
        assert_eq!(s.assign_name(60000.0).unwrap(), "PREMIUM");
        assert_eq!(s.assign_name(5000.0).unwrap(), "BUDGET");
        assert_eq!(s.assign_name(30000.0).unwrap(), "PREMIUM");
        assert_eq!(s.assign_name(29999.99).unwrap(), "MID RANGE");
        assert_eq!(s.assign_name(1e-300).unwrap(), "LOW");
    }

    #[test]
    fn rejects_non_positive_and_below_first_band() {
        let s = spec();
        assert!(matches!(s.assign(0.0), Err(Error::BandAssignment { .. })));
        assert!(matches!(s.assign(-3.0), Err(Error::BandAssignment { .. })));
        assert!(s.assign(f64::NAN).is_err());

        let raised = PriceBandSpec::new(vec![
            PriceBand {
                name: "A".into(),
                lower: 100.0,
                upper: Some(200.0),
            },
            PriceBand {
                name: "B".into(),
                lower: 200.0,
                upper: None,
            },
        ])
        .unwrap();
        assert!(raised.assign(99.0).is_err());
        assert_eq!(raised.assign(100.0).unwrap(), 0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let b = |n: &str, l: f64, u: Option<f64>| PriceBand {
            name: n.into(),
            lower: l,
            upper: u,
        };
        assert!(PriceBandSpec::new(vec![b("A", 1.0, None)]).is_err());
        assert!(PriceBandSpec::new(vec![b("A", 1.0, Some(5.0)), b("B", 6.0, None)]).is_err());
        assert!(PriceBandSpec::new(vec![b("A", 1.0, Some(5.0)), b("A", 5.0, None)]).is_err());
        assert!(PriceBandSpec::new(vec![b("A", 1.0, Some(5.0)), b("B", 5.0, Some(9.0))]).is_err());
        assert!(PriceBandSpec::new(vec![b("A", 0.0, Some(5.0)), b("B", 5.0, None)]).is_err());
    }

    #[test]
    fn band_spec_json_uses_null_for_infinity() {
        let json =
            r#"[{"name":"CHEAP","lower":1,"upper":100},{"name":"DEAR","lower":100,"upper":null}]"#;
        let s: PriceBandSpec = serde_json::from_str(json).unwrap();
        assert_eq!(s.assign_name(1e9).unwrap(), "DEAR");
        let bad =
            r#"[{"name":"CHEAP","lower":1,"upper":100},{"name":"DEAR","lower":101,"upper":null}]"#;
        assert!(serde_json::from_str::<PriceBandSpec>(bad).is_err());
    }

    #[test]
    fn stats_hand_computed() {
        let (mean, sd) = mean_and_sample_sd(&[10.0, 20.0, 30.0]);
        assert_eq!(mean, Some(20.0));
        assert_eq!(sd, 10.0);
        assert_eq!(mean_and_sample_sd(&[42.0]), (Some(42.0), 0.0));
        assert_eq!(mean_and_sample_sd(&[]), (None, 0.0));
    }

    #[test]
    fn stats_per_band_with_empty_band() {
        let st = band_stats_from_prices(&spec(), [100.0, 200.0, 300.0, 40000.0]).unwrap();
        assert_eq!(st.total(), 4);
        let low = st.get("LOW").unwrap();
        assert_eq!((low.count, low.mean, low.sd), (3, Some(200.0), 100.0));
        let budget = st.get("BUDGET").unwrap();
        assert_eq!((budget.count, budget.mean, budget.sd), (0, None, 0.0));
        assert!(st.get("PREMIUM").unwrap().is_degenerate());
        st.check_matches(&spec()).unwrap();
    }

    proptest! {
        #[test]
        fn every_positive_price_lands_in_exactly_one_band(price in 1e-6f64..1e7) {
            let s = spec();
            let idx = s.assign(price).unwrap();
            let hits = s.bands().iter().filter(|b| b.contains(price)).count();
            prop_assert_eq!(hits, 1);
            prop_assert!(s.bands()[idx].contains(price));
        }
    }
}
