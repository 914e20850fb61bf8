use std::path::Path;

use proptest::prelude::*;
use salefold_core::catalog::{CommodityRecord, FeatureVector};
use salefold_core::pricebands::{BandStat, PriceBand, PriceBandSpec, PriceBandStats};
use salefold_core::significance::{
    classify_discount, fold_index, Anomaly, Fold, SignificancePolicy,
};
use salefold_core::svm::BandPredictor;

/// Predicts whatever band index it was built with.
struct Fixed {
    names: Vec<String>,
    band: usize,
}

impl BandPredictor for Fixed {
    fn class_names(&self) -> &[String] {
        &self.names
    }
    fn predict_index(&self, _: &FeatureVector) -> salefold_core::Result<usize> {
        Ok(self.band)
    }
}

fn reference_stats() -> PriceBandStats {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reference_band_stats.json");
    PriceBandStats::from_json_file(&p).unwrap()
}

fn record(original: f64, sale: f64) -> CommodityRecord {
    CommodityRecord {
        id: "x".into(),
        name: String::new(),
        features: FeatureVector::new(2.0, 16.0, 0.0, 5.0, 2800.0),
        original_price: original,
        sale_price: Some(sale),
    }
}

/// Two wide bands so random prices stay inside one band.
fn wide_bands() -> PriceBandSpec {
    PriceBandSpec::new(vec![
        PriceBand {
            name: "A".into(),
            lower: 1.0,
            upper: Some(1e9),
        },
        PriceBand {
            name: "B".into(),
            lower: 1e9,
            upper: None,
        },
    ])
    .unwrap()
}

fn wide_stats(sigma: f64) -> PriceBandStats {
    let row = |name: &str, lower: f64, upper: Option<f64>| BandStat {
        name: name.into(),
        lower,
        upper,
        count: 10,
        mean: Some(lower * 2.0),
        sd: sigma,
    };
    PriceBandStats {
        rows: vec![row("A", 1.0, Some(1e9)), row("B", 1e9, None)],
    }
}

/// The three class ranges written out literally, with
/// a discount of exactly σ counted as GOOD.
fn literal_class(discount: f64, sigma: f64) -> &'static str {
    if 0.0 <= discount && discount < sigma / 2.0 {
        "POOR"
    } else if sigma / 2.0 <= discount && discount < sigma {
        "ACCEPTABLE"
    } else {
        "GOOD"
    }
}

fn same_band_class(discount: f64, sigma: f64, k: f64) -> (String, u64) {
    let bands = wide_bands();
    let stats = wide_stats(sigma);
    let model = Fixed {
        names: bands.names(),
        band: 0,
    };
    let policy = SignificancePolicy {
        k,
        ..Default::default()
    };
    let v = classify_discount(
        &policy,
        &bands,
        &stats,
        &model,
        &record(1e6 + discount, 1e6),
    )
    .unwrap();
    match v.fold {
        Fold::Finite(n) => (v.class_name, n),
        Fold::Infinite => panic!("same-band sale classified cross-class"),
    }
}

#[test]
fn worked_examples() {
    let bands = PriceBandSpec::default_spec();
    let stats = reference_stats();
    stats.check_matches(&bands).unwrap();
    let policy = SignificancePolicy::default();
    let low = Fixed {
        names: bands.names(),
        band: 0,
    };
    let premium = Fixed {
        names: bands.names(),
        band: 3,
    };

    let iball = classify_discount(&policy, &bands, &stats, &low, &record(4399.0, 3749.0)).unwrap();
    assert_eq!(iball.class_name, "ACCEPTABLE");
    assert_eq!(iball.discount, 650.0);
    assert_eq!(iball.fold, Fold::Finite(1));

    let lg =
        classify_discount(&policy, &bands, &stats, &premium, &record(60000.0, 14999.0)).unwrap();
    assert_eq!(lg.class_name, "EXCELLENT");
    assert_eq!(lg.fold, Fold::Infinite);
    assert_eq!(lg.x_levels, 2);
    assert_eq!(lg.sale_price_band, "BUDGET");
}

#[test]
fn boundary_discounts() {
    assert_eq!(same_band_class(0.0, 100.0, 0.5).0, "POOR");
    assert_eq!(same_band_class(50.0, 100.0, 0.5).0, "ACCEPTABLE");
    assert_eq!(same_band_class(100.0, 100.0, 0.5).0, "GOOD");
    assert_eq!(same_band_class(1e5, 100.0, 0.5), ("GOOD".to_string(), 2000));
}

#[test]
fn low_band_is_never_cross_class() {
    let bands = PriceBandSpec::default_spec();
    let low = Fixed {
        names: bands.names(),
        band: 0,
    };
    let policy = SignificancePolicy::default();
    for sale in [1.0, 10.0, 999.0, 4998.0] {
        let v = classify_discount(&policy, &bands, &reference_stats(), &low, &record(4999.0, sale)).unwrap();
        assert_ne!(v.class_name, "EXCELLENT");
    }
}

#[test]
fn price_rise_is_flagged_not_rejected() {
    let (name, fold) = same_band_class(-25.0, 100.0, 0.5);
    assert_eq!((name.as_str(), fold), ("POOR", 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn class_ranges_equivalence(sigma in 1e-3f64..1e5, ratio in 0.0f64..4.0) {
        let discount = ratio * sigma;
        let (name, _) = same_band_class(discount, sigma, 0.5);
        let d = (1e6 + discount) - 1e6;
        prop_assert_eq!(name, literal_class(d, sigma));
    }

    #[test]
    fn fold_intervals_partition(discount in 0.0f64..1e7, k in 0.01f64..1.0, sigma in 1e-3f64..1e5) {
        let n = fold_index(discount, k, sigma);
        let w = k * sigma;
        prop_assert!(n as f64 * w <= discount);
        prop_assert!(discount < (n + 1) as f64 * w);
    }

    #[test]
    fn fold_monotone_in_discount(a in 0.0f64..1e6, b in 0.0f64..1e6, sigma in 1.0f64..1e4) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fold_index(lo, 0.5, sigma) <= fold_index(hi, 0.5, sigma));
    }

    #[test]
    fn halving_k_never_lowers_fold(discount in 0.0f64..1e6, k in 0.02f64..1.0, sigma in 1.0f64..1e4) {
        let (_, coarse) = same_band_class(discount, sigma, k);
        let (_, fine) = same_band_class(discount, sigma, k / 2.0);
        prop_assert!(fine >= coarse);
    }

    #[test]
    fn cross_class_dominates(
        (sale_band, predicted) in (1usize..4).prop_flat_map(|p| (0..p, Just(p))),
        discount_frac in 0.0f64..0.99,
    ) {
        let bands = PriceBandSpec::default_spec();
        let model = Fixed { names: bands.names(), band: predicted };
        let sale = [1000.0, 10000.0, 20000.0][sale_band];
        let original = sale / (1.0 - discount_frac);
        let v = classify_discount(&SignificancePolicy::default(), &bands, &reference_stats(), &model, &record(original, sale)).unwrap();
        prop_assert_eq!(v.class_name.as_str(), "EXCELLENT");
        prop_assert_eq!(v.x_levels, predicted - sale_band);
    }

    #[test]
    fn negative_discount_iff_flag(original in 100.0f64..4900.0, sale in 100.0f64..4900.0) {
        let bands = PriceBandSpec::default_spec();
        let model = Fixed { names: bands.names(), band: 0 };
        let v = classify_discount(&SignificancePolicy::default(), &bands, &reference_stats(), &model, &record(original, sale)).unwrap();
        prop_assert_eq!(v.discount < 0.0, v.anomalies.contains(&Anomaly::NegativeDiscount));
    }
}
