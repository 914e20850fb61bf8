use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use salefold_core::catalog::{self, CommodityRecord, Dataset};
use salefold_core::extract::{self, RuleSet};
use salefold_core::pricebands::{band_stats, PriceBandSpec, PriceBandStats};
use salefold_core::report::{write_verdicts_csv, RunReport};
use salefold_core::significance::{classify_dataset, Reject, SignificancePolicy};
use salefold_core::svm::{
    self, accuracy, cross_validate, GridPoint, KernelKind, KernelSpec, TrainOptions,
};
use salefold_core::synth::{self, CrawlNoise, SynthConfig};
use salefold_core::{Error, ErrorKind};

use crate::{AnalyzeArgs, BandArgs, ExtractArgs, StatsArgs, SynthArgs, TrainArgs};

/// An error tagged with the pipeline stage that raised it.
pub struct CliError {
    pub stage: &'static str,
    pub source: Error,
}

impl CliError {
    /// 2 configuration/schema, 3 data contract, 4 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self.source.kind() {
            ErrorKind::Configuration | ErrorKind::Io => 2,
            ErrorKind::DataContract => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for salefold_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError { stage, source })
    }
}

fn io_stage(stage: &'static str, path: &Path, e: io::Error) -> CliError {
    CliError {
        stage,
        source: Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    }
}

fn load_bands(args: &BandArgs) -> CliResult<PriceBandSpec> {
    match &args.bands {
        Some(p) => PriceBandSpec::from_json_file(p).stage("load bands"),
        None => Ok(PriceBandSpec::default_spec()),
    }
}

fn load_clean(path: &Path) -> CliResult<(Dataset, catalog::CleanReport)> {
    let raw = catalog::load_catalog_csv(path).stage("load catalog")?;
    let (ds, report) = catalog::clean(&raw);
    eprintln!(
        "cleaned {}: {} rows in, {} null-dropped, {} duplicates dropped, {} id conflicts, {} kept",
        path.display(),
        report.input,
        report.null_dropped,
        report.dedup_dropped,
        report.id_conflict_dropped,
        report.output
    );
    Ok((ds, report))
}

fn write_or_print(path: Option<&PathBuf>, text: &str, stage: &'static str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_stage(stage, p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_stage(stage, Path::new("<stdout>"), e)),
    }
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

pub fn extract(args: ExtractArgs) -> CliResult<()> {
    let rules = RuleSet::from_json_file(&args.rules).stage("load rules")?;
    let records = extract::extract_corpus(&args.snapshots, &rules).stage("extract")?;
    let raw = extract::to_catalog(&records);
    let mut buf = Vec::new();
    raw.write_csv(&mut buf).stage("write catalog")?;
    eprintln!(
        "extracted {} records from {}",
        records.len(),
        args.snapshots.display()
    );
    write_or_print(
        args.output.as_ref(),
        &String::from_utf8(buf).expect("csv output is utf-8"),
        "write catalog",
    )
}

pub fn format_stats_table(stats: &PriceBandStats) -> String {
    let mut out = format!(
        "{:<12} {:>8} {:>14} {:>14}\n",
        "band", "count", "mean", "sd"
    );
    for r in &stats.rows {
        let mean = r
            .mean
            .map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
        out.push_str(&format!(
            "{:<12} {:>8} {:>14} {:>14.2}\n",
            r.name, r.count, mean, r.sd
        ));
    }
    out.push_str(&format!("{:<12} {:>8}\n", "total", stats.total()));
    out
}

pub fn stats(args: StatsArgs) -> CliResult<()> {
    let bands = load_bands(&args.bands)?;
    let (ds, _) = load_clean(&args.catalog)?;
    let stats = band_stats(&bands, &ds).stage("band stats")?;
    print!("{}", format_stats_table(&stats));
    if let Some(out) = &args.output {
        let text = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
        fs::write(out, text).map_err(|e| io_stage("write stats", out, e))?;
    }
    Ok(())
}

fn default_grid() -> Vec<GridPoint> {
    let kinds = [
        KernelKind::Linear,
        KernelKind::Poly,
        KernelKind::Rbf,
        KernelKind::Sigmoid,
    ];
    kinds
        .iter()
        .flat_map(|&kind| {
            [0.1, 1.0, 10.0].into_iter().map(move |c| GridPoint {
                kernel: KernelSpec::new(kind),
                c,
            })
        })
        .collect()
}

pub fn train(args: TrainArgs) -> CliResult<()> {
    let bands = load_bands(&args.bands)?;
    let (ds, clean_report) = load_clean(&args.catalog)?;
    let (train_set, test_set) =
        catalog::stratified_split(&ds, &bands, args.train_fraction, args.seed).stage("split")?;

    let mut opts = TrainOptions {
        kernel: KernelSpec {
            kind: args.kernel,
            gamma: args.gamma,
            degree: args.degree,
            coef0: args.coef0,
        },
        c: args.c,
        tol: args.tol,
        class_weighting: args.class_weight.into(),
        ..TrainOptions::default()
    };

    if let Some(folds) = args.cv {
        let grid = match &args.grid {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| io_stage("load grid", p, e))?;
                serde_json::from_str::<Vec<GridPoint>>(&text).map_err(|e| CliError {
                    stage: "load grid",
                    source: Error::Config(format!("grid file {}: {e}", p.display())),
                })?
            }
            None => default_grid(),
        };
        if grid.is_empty() {
            return Err(CliError {
                stage: "cross-validate",
                source: Error::Config("grid is empty".into()),
            });
        }
        let ranked = cross_validate(&train_set, &bands, &grid, folds, args.seed, &opts)
            .stage("cross-validate")?;
        println!("cross-validation ({folds} folds, seed {}):", args.seed);
        println!(
            "{:>4} {:>8} {:>9} {:>8} {:>10}",
            "rank", "kernel", "gamma", "C", "accuracy"
        );
        for (rank, s) in ranked.iter().enumerate() {
            let gamma = s
                .config
                .kernel
                .gamma
                .map_or("auto".to_string(), |g| format!("{g}"));
            println!(
                "{:>4} {:>8} {:>9} {:>8} {:>10.4}",
                rank + 1,
                format!("{:?}", s.config.kernel.kind).to_lowercase(),
                gamma,
                s.config.c,
                s.mean_accuracy
            );
        }
        let best = ranked.first().expect("grid is non-empty");
        opts.kernel = best.config.kernel;
        opts.c = best.config.c;
    }

    let model = svm::train_multiclass(&train_set, &bands, &opts).stage("train")?;
    let train_acc = accuracy(&model, &train_set, &bands).stage("evaluate")?;
    let test_acc = accuracy(&model, &test_set, &bands).stage("evaluate")?;
    svm::save_model(&model, &args.model).stage("save model")?;
    eprintln!(
        "kept {} of {} rows; {} train / {} holdout",
        clean_report.output,
        clean_report.input,
        train_set.len(),
        test_set.len()
    );
    println!("train accuracy: {train_acc:.4}");
    println!("holdout accuracy: {test_acc:.4}");
    Ok(())
}

/// Converts sale rows one by one; incomplete rows become rejects rather
/// than disappearing.
fn sale_records(path: &Path) -> CliResult<(Dataset, Vec<Reject>)> {
    let raw = catalog::load_catalog_csv(path).stage("load sale catalog")?;
    let mut records: Vec<CommodityRecord> = Vec::with_capacity(raw.rows.len());
    let mut rejects = Vec::new();
    for row in &raw.rows {
        match row.to_record() {
            Ok(r) => records.push(r),
            Err(e) => rejects.push(Reject {
                id: row.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let ds = Dataset {
        records,
        provenance: raw.provenance,
    };
    Ok((ds, rejects))
}

pub fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let bands = load_bands(&args.bands)?;
    let model = svm::load_model(&args.model).stage("load model")?;
    model.check_bands(&bands).stage("load model")?;

    let mut policy = match &args.policy {
        Some(p) => SignificancePolicy::from_json_file(p).stage("load policy")?,
        None => SignificancePolicy::default(),
    };
    if let Some(k) = args.k {
        policy.k = k;
    }
    policy.validate().stage("load policy")?;

    let (stats, clean_report) = match (&args.stats, &args.catalog) {
        (Some(p), _) => {
            let stats = PriceBandStats::from_json_file(p).stage("load stats")?;
            stats.check_matches(&bands).stage("load stats")?;
            (stats, None)
        }
        (None, Some(p)) => {
            let (ds, report) = load_clean(p)?;
            (band_stats(&bands, &ds).stage("band stats")?, Some(report))
        }
        (None, None) => unreachable!("clap requires --catalog or --stats"),
    };

    let (sale, mut early_rejects) = sale_records(&args.sale)?;
    let mut classification = classify_dataset(&policy, &bands, &stats, &model, &sale);
    early_rejects.append(&mut classification.rejects);
    classification.rejects = early_rejects;

    let mut echo = BTreeMap::new();
    echo.insert("model".to_string(), path_value(&args.model));
    echo.insert("sale".to_string(), path_value(&args.sale));
    echo.insert(
        "stats_source".to_string(),
        match (&args.stats, &args.catalog) {
            (Some(p), _) => json!({ "stats": path_value(p) }),
            (None, Some(p)) => json!({ "catalog": path_value(p) }),
            (None, None) => Value::Null,
        },
    );
    echo.insert(
        "bands".to_string(),
        serde_json::to_value(&bands).expect("bands serialize"),
    );
    echo.insert(
        "policy".to_string(),
        serde_json::to_value(&policy).expect("policy serialize"),
    );

    let mut report =
        RunReport::build(&bands, &stats, &policy, classification, echo).stage("report")?;
    report.clean_report = clean_report;
    debug_assert!(report.summary_matrix.is_consistent());

    if let Some(p) = &args.verdicts_csv {
        let file = fs::File::create(p).map_err(|e| io_stage("write verdicts", p, e))?;
        write_verdicts_csv(&report.verdicts, io::BufWriter::new(file)).stage("write verdicts")?;
    }
    let text = report.to_json().stage("report")?;
    if args.output.is_some() {
        let m = &report.summary_matrix;
        eprintln!(
            "{} verdicts, {} rejects; {}",
            report.verdicts.len(),
            report.rejects.len(),
            m.columns
                .iter()
                .zip(&m.column_totals)
                .map(|(c, n)| format!("{c} {n}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    write_or_print(args.output.as_ref(), &text, "write report")
}

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let bands = load_bands(&args.bands)?;
    let cfg = SynthConfig {
        seed: args.seed,
        counts: args.counts.clone(),
        ..SynthConfig::default()
    };
    let out = synth::generate(&cfg, &bands).stage("synth")?;
    fs::create_dir_all(&args.output).map_err(|e| io_stage("synth", &args.output, e))?;
    out.non_sale
        .write_csv_file(&args.output.join("nonsale.csv"))
        .stage("write catalog")?;
    out.sale
        .write_csv_file(&args.output.join("sale.csv"))
        .stage("write catalog")?;
    if args.raw {
        let raw =
            synth::raw_crawl(&out.non_sale, CrawlNoise::default(), args.seed).stage("synth")?;
        raw.write_csv_file(&args.output.join("raw_crawl.csv"))
            .stage("write catalog")?;
    }
    eprintln!(
        "wrote {} products (seed {}) to {}",
        out.non_sale.len(),
        args.seed,
        args.output.display()
    );
    Ok(())
}
