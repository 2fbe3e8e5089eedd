//! Operator-facing command layer wiring the pipeline stages together:
//! simulate, extract/split, select/train/evaluate, and report merging.
//!
//! Every command is a library function returning `Result`, so the thin
//! binary only parses arguments and maps errors to exit codes (2 config,
//! 3 data, 4 numeric).

mod config;

pub use config::{RunConfig, SEED_ENV_VAR};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::classifiers::ModelSpec;
use crate::dataset::{
    apply_scaler, fit_scaler, read_records, records_from_rows, train_test_split, write_records,
    DataMatrix, Dataset, CLASS_NAMES, LEAKY_FEATURES,
};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, evaluate, roc_points, ConfusionMatrix};
use crate::features::{
    multi_feature_union, rank_features, read_selected, write_selected, RankingMethod,
};
use crate::sim::{
    energy_curve, lifetime_stats, read_trace_rows, throughput, trace_rows, write_trace,
    Simulation, SimulationTrace, TraceRow, TRACE_HEADER,
};

/// Appends a suffix before the extension: `data.csv` -> `data.train.csv`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}{ext}"))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run_trace(config: &RunConfig) -> Result<SimulationTrace> {
    let mut sim = Simulation::new(
        config.deployment.clone(),
        config.energy.clone(),
        config.behavior.clone(),
        config.attack_mix.clone(),
    );
    sim.ms_per_round = config.ms_per_round;
    sim.run()
}

fn summary_pairs(trace: &SimulationTrace) -> Result<Vec<(String, String)>> {
    let executed = trace.ledgers.len() as u64;
    let delivered = trace.total_delivered_bits();
    let offered = trace.total_offered_bits();
    let total_spent: f64 = trace
        .ledgers
        .iter()
        .flat_map(|l| l.nodes.iter())
        .map(|n| n.tx_energy + n.rx_energy)
        .sum();
    let mut pairs: Vec<(String, String)> = vec![
        ("node_count".into(), trace.graph.sensor_count().to_string()),
        ("fog_count".into(), trace.graph.fogs.len().to_string()),
        ("seed".into(), trace.seed.to_string()),
        ("rounds_configured".into(), trace.deployment.rounds.to_string()),
        ("rounds_executed".into(), executed.to_string()),
        ("offered_bits".into(), offered.to_string()),
        ("delivered_bits".into(), delivered.to_string()),
        (
            "dropped_packets".into(),
            trace
                .ledgers
                .iter()
                .map(|l| l.dropped_packets)
                .sum::<u64>()
                .to_string(),
        ),
        (
            "delivery_ratio".into(),
            if offered > 0 {
                format!("{}", delivered as f64 / offered as f64)
            } else {
                "undefined".into()
            },
        ),
        ("total_energy_consumed_j".into(), format!("{total_spent}")),
    ];
    if executed > 0 {
        let elapsed_seconds = executed as f64 * trace.ms_per_round / 1000.0;
        let t = throughput(trace, elapsed_seconds)?;
        pairs.push(("throughput_raw_kbps".into(), format!("{}", t.raw_kbps)));
        pairs.push(("throughput_x100".into(), format!("{}", t.scaled_x100)));
        let stats = lifetime_stats(trace)?;
        pairs.push(("lifetime_mean_ms".into(), format!("{}", stats.mean)));
        pairs.push(("lifetime_std_dev_ms".into(), format!("{}", stats.std_dev)));
        pairs.push(("lifetime_std_err_ms".into(), format!("{}", stats.std_err)));
        pairs.push(("lifetime_ci95_low_ms".into(), format!("{}", stats.ci95.0)));
        pairs.push(("lifetime_ci95_high_ms".into(), format!("{}", stats.ci95.1)));
        pairs.push(("lifetime_min_ms".into(), format!("{}", stats.min)));
        pairs.push(("lifetime_max_ms".into(), format!("{}", stats.max)));
    }
    Ok(pairs)
}

const SUMMARY_HEADER: &str = "key,value";
const ENERGY_HEADER: &str = "round,mean_cumulative_j";
const REPORT_HEADER: &str = "metric,class,value";

fn write_summary(pairs: &[(String, String)], path: &Path) -> Result<()> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (k, v) in pairs {
        let _ = writeln!(out, "{k},{v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_energy_curve(trace: &SimulationTrace, path: &Path) -> Result<()> {
    let mut out = String::from(ENERGY_HEADER);
    out.push('\n');
    for (round, mean) in energy_curve(trace) {
        let _ = writeln!(out, "{round},{mean}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Runs the simulation from a config file and writes the trace CSV plus a
/// `.summary.csv` and `.energy.csv` sidecar next to it.
pub fn cmd_simulate(config_path: &Path, out_trace: &Path) -> Result<()> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = RunConfig::env_seed()? {
        config.override_seeds(seed);
    }
    let trace = run_trace(&config)?;
    write_trace(&trace, out_trace)?;
    let pairs = summary_pairs(&trace)?;
    write_summary(&pairs, &with_suffix(out_trace, "summary"))?;
    write_energy_curve(&trace, &with_suffix(out_trace, "energy"))?;

    println!("wrote trace {}", out_trace.display());
    for (k, v) in &pairs {
        println!("{k:>24} = {v}");
    }
    Ok(())
}

fn dataset_to_files(
    records: Dataset,
    out_csv: &Path,
    train_ratio: f64,
    split_seed: u64,
) -> Result<(Dataset, Dataset)> {
    write_records(&records, out_csv)?;
    let (train, test) = train_test_split(&records, train_ratio, split_seed)?;
    write_records(&train, &with_suffix(out_csv, "train"))?;
    write_records(&test, &with_suffix(out_csv, "test"))?;

    println!(
        "wrote {} records to {} (train {}, test {})",
        records.len(),
        out_csv.display(),
        train.len(),
        test.len()
    );
    println!("{:<22} {:>10} {:>10} {:>10}", "class", "all", "train", "test");
    let all = records.class_distribution();
    let tr = train.class_distribution();
    let te = test.class_distribution();
    for i in 0..all.len() {
        println!(
            "{:<22} {:>10} {:>10} {:>10}",
            all[i].0, all[i].1, tr[i].1, te[i].1
        );
    }
    Ok((train, test))
}

/// Extracts the labeled dataset from a trace file and writes the full,
/// train, and test CSVs.
pub fn cmd_dataset(
    trace_path: &Path,
    out_csv: &Path,
    train_ratio: f64,
    split_seed: u64,
) -> Result<()> {
    let seed = RunConfig::env_seed()?.unwrap_or(split_seed);
    let rows = read_trace_rows(trace_path)?;
    if rows.is_empty() {
        return Err(Error::data(format!(
            "trace {} holds no rows",
            trace_path.display()
        )));
    }
    dataset_to_files(records_from_rows(&rows), out_csv, train_ratio, seed)?;
    Ok(())
}

/// Everything `train-eval` needs beyond the config defaults.
#[derive(Debug, Clone)]
pub struct TrainEvalArgs {
    pub train_csv: PathBuf,
    pub test_csv: PathBuf,
    pub model: String,
    pub features: String,
    pub k_folds: Option<usize>,
    pub allow_leaky: bool,
    pub feature_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub config: Option<PathBuf>,
}

fn model_spec(name: &str, config: &RunConfig) -> Result<ModelSpec> {
    match name {
        "tree" => Ok(ModelSpec::Tree(config.tree.clone())),
        "logistic" => Ok(ModelSpec::Logistic(config.logistic.clone())),
        "gbt" => Ok(ModelSpec::Gbt(config.gbt.clone())),
        "svm" => Ok(ModelSpec::Svm(config.svm.clone())),
        "majority" => Ok(ModelSpec::Majority),
        other => Err(Error::config(format!(
            "unknown model '{other}' (expected tree|logistic|gbt|svm)"
        ))),
    }
}

fn select_feature_names(
    mode: &str,
    feature_file: Option<&Path>,
    x: &DataMatrix,
    names: &[&str],
    k_each: usize,
) -> Result<Vec<String>> {
    if let Some(path) = feature_file {
        return read_selected(path);
    }
    match mode {
        "all" => Ok(names.iter().map(|s| s.to_string()).collect()),
        "pca10" | "svd10" => {
            let method = if mode == "pca10" {
                RankingMethod::Pca
            } else {
                RankingMethod::Svd
            };
            let ranking = rank_features(x, method)?;
            let mut idx: Vec<usize> = ranking.order.iter().take(k_each).copied().collect();
            idx.sort_unstable();
            Ok(idx.into_iter().map(|i| names[i].to_string()).collect())
        }
        "multi20" => multi_feature_union(x, names, k_each),
        other => Err(Error::config(format!(
            "unknown feature mode '{other}' (expected all|pca10|svd10|multi20)"
        ))),
    }
}

fn class_slug(name: &str) -> String {
    name.to_lowercase().replace(' ', "_")
}

/// Cross-validates on the training set, fits on all of it, and evaluates on
/// the held-out test set; artifacts land in `out_dir`.
pub fn cmd_train_eval(args: &TrainEvalArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = RunConfig::env_seed()? {
        config.override_seeds(seed);
    }
    let train_ds = read_records(&args.train_csv)?;
    let test_ds = read_records(&args.test_csv)?;
    if train_ds.is_empty() || test_ds.is_empty() {
        return Err(Error::data("train and test datasets must be nonempty"));
    }
    std::fs::create_dir_all(&args.out_dir)?;

    let (train_x_all, train_y, names) = train_ds.to_matrix(args.allow_leaky);
    let (test_x_all, test_y, _) = test_ds.to_matrix(args.allow_leaky);

    let selected = select_feature_names(
        &args.features,
        args.feature_file.as_deref(),
        &train_x_all,
        &names,
        config.k_each,
    )?;
    let leaking: Vec<&str> = selected
        .iter()
        .map(String::as_str)
        .filter(|n| LEAKY_FEATURES.contains(n))
        .collect();
    if !leaking.is_empty() && !args.allow_leaky {
        return Err(Error::config(format!(
            "label-leaking columns selected ({}); pass --allow-leaky for ablation runs",
            leaking.join(", ")
        )));
    }
    let columns: Vec<usize> = selected
        .iter()
        .map(|name| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::data(format!("unknown feature '{name}'")))
        })
        .collect::<Result<Vec<usize>>>()?;
    write_selected(&selected, &args.out_dir.join("selected_features.txt"))?;

    let train_x = train_x_all.select_columns(&columns)?;
    let test_x = test_x_all.select_columns(&columns)?;
    let spec = model_spec(&args.model, &config)?;
    let class_refs: Vec<&str> = CLASS_NAMES.to_vec();

    let k = args.k_folds.unwrap_or(config.k_folds);
    let cv = cross_validate(
        &train_x,
        &train_y,
        &class_refs,
        &spec,
        k,
        config.fold_seed,
        config.cost_phi,
    )?;
    for warning in &cv.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "cross-validation ({} folds, model {}, features {}):",
        k,
        spec.name(),
        args.features
    );
    for (i, fold) in cv.folds.iter().enumerate() {
        println!("  fold {i}: accuracy {:.4}", fold.accuracy);
    }
    println!("  mean accuracy {:.4}", cv.mean.accuracy);
    std::fs::write(
        args.out_dir.join("cv_report.csv"),
        cv.mean.to_metric_csv(),
    )?;

    // Final fit on the whole training set, evaluated on the test set.
    let (fit_x, eval_x) = if spec.standardizes() {
        let stats = fit_scaler(&train_x);
        (apply_scaler(&train_x, &stats), apply_scaler(&test_x, &stats))
    } else {
        (train_x, test_x)
    };
    let model = spec.train(&fit_x, &train_y, class_refs.len())?;
    let predictions: Vec<usize> = (0..eval_x.rows)
        .map(|i| model.predict(eval_x.row(i)))
        .collect::<Result<Vec<usize>>>()?;
    let report = evaluate(&predictions, &test_y, &class_refs, config.cost_phi)?;
    let cm = ConfusionMatrix::from_predictions(&predictions, &test_y, &class_refs)?;

    std::fs::write(args.out_dir.join("report.txt"), report.to_table_text())?;
    std::fs::write(args.out_dir.join("report.csv"), report.to_metric_csv())?;
    std::fs::write(args.out_dir.join("confusion.csv"), cm.to_csv())?;
    model.save(&args.out_dir.join("model.txt"))?;

    for (c, name) in class_refs.iter().enumerate() {
        let labels: Vec<bool> = test_y.iter().map(|&a| a == c).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue; // single-class ROC is undefined
        }
        let scores: Vec<f64> = (0..eval_x.rows)
            .map(|i| Ok(model.class_scores(eval_x.row(i))?[c]))
            .collect::<Result<Vec<f64>>>()?;
        let roc = roc_points(&scores, &labels)?;
        let mut out = String::from("fp_rate,tp_rate\n");
        for (fpr, tpr) in &roc.points {
            let _ = writeln!(out, "{fpr},{tpr}");
        }
        let _ = writeln!(out, "# auc,{}", roc.auc);
        std::fs::write(
            args.out_dir.join(format!("roc_{}.csv", class_slug(name))),
            out,
        )?;
    }

    println!();
    print!("{}", report.to_table_text());
    println!("artifacts in {}", args.out_dir.display());
    Ok(())
}

enum ReportInput {
    Energy(Vec<(u64, f64)>),
    Summary(Vec<(String, String)>),
    Metrics(Vec<(String, String, String)>),
}

fn mean_cumulative_from_rows(rows: &[TraceRow]) -> Vec<(u64, f64)> {
    let l = rows.iter().map(|r| r.node_id).max().unwrap_or(1) as f64;
    let mut per_round: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows {
        *per_round.entry(r.round).or_insert(0.0) += r.tx_energy + r.rx_energy;
    }
    let mut cumulative = 0.0;
    per_round
        .into_iter()
        .map(|(round, spent)| {
            cumulative += spent;
            (round, cumulative / l)
        })
        .collect()
}

fn classify_input(path: &Path) -> Result<ReportInput> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::data(format!("{} is empty", path.display())))?
        .trim_end();
    match header {
        TRACE_HEADER => {
            let rows = read_trace_rows(path)?;
            Ok(ReportInput::Energy(mean_cumulative_from_rows(&rows)))
        }
        ENERGY_HEADER => {
            let mut curve = Vec::new();
            for (i, line) in lines.enumerate() {
                if line.is_empty() {
                    continue;
                }
                let (round, value) = line.split_once(',').ok_or_else(|| {
                    Error::data(format!("{}:{}: bad energy row", path.display(), i + 2))
                })?;
                curve.push((
                    round.parse().map_err(|_| {
                        Error::data(format!("{}:{}: bad round", path.display(), i + 2))
                    })?,
                    value.parse().map_err(|_| {
                        Error::data(format!("{}:{}: bad energy", path.display(), i + 2))
                    })?,
                ));
            }
            Ok(ReportInput::Energy(curve))
        }
        SUMMARY_HEADER => {
            let pairs = lines
                .filter(|l| !l.is_empty())
                .map(|l| {
                    l.split_once(',')
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .ok_or_else(|| Error::data(format!("bad summary row '{l}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ReportInput::Summary(pairs))
        }
        REPORT_HEADER => {
            let rows = lines
                .filter(|l| !l.is_empty())
                .map(|l| {
                    let mut parts = l.splitn(3, ',');
                    match (parts.next(), parts.next(), parts.next()) {
                        (Some(m), Some(c), Some(v)) => {
                            Ok((m.to_string(), c.to_string(), v.to_string()))
                        }
                        _ => Err(Error::data(format!("bad metric row '{l}'"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ReportInput::Metrics(rows))
        }
        other => Err(Error::data(format!(
            "{}: unrecognized header '{other}'",
            path.display()
        ))),
    }
}

/// Merges traces/energy curves, run summaries, or evaluation reports into a
/// side-by-side comparison table (CSV to stdout or a file). Inputs must all
/// be of the same kind.
pub fn cmd_report(inputs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::config("report: at least one input required"));
    }
    let parsed: Vec<ReportInput> = inputs
        .iter()
        .map(|p| classify_input(p))
        .collect::<Result<Vec<_>>>()?;
    let stems: Vec<String> = inputs.iter().map(|p| file_stem(p)).collect();

    let table = match &parsed[0] {
        ReportInput::Energy(_) => {
            let curves: Vec<&Vec<(u64, f64)>> = parsed
                .iter()
                .map(|p| match p {
                    ReportInput::Energy(c) => Ok(c),
                    _ => Err(Error::data("mixed incompatible schemas")),
                })
                .collect::<Result<Vec<_>>>()?;
            let longest = curves.iter().map(|c| c.len()).max().unwrap_or(0);
            let mut out = format!("round,{}\n", stems.join(","));
            for i in 0..longest {
                let round = curves
                    .iter()
                    .find_map(|c| c.get(i).map(|(r, _)| *r))
                    .unwrap_or(i as u64 + 1);
                let _ = write!(out, "{round}");
                for c in &curves {
                    // A finished run holds its last cumulative level.
                    let v = c
                        .get(i)
                        .or(c.last())
                        .map(|(_, v)| *v)
                        .unwrap_or(0.0);
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
            out
        }
        ReportInput::Summary(_) => {
            let summaries: Vec<&Vec<(String, String)>> = parsed
                .iter()
                .map(|p| match p {
                    ReportInput::Summary(s) => Ok(s),
                    _ => Err(Error::data("mixed incompatible schemas")),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = format!("key,{}\n", stems.join(","));
            for (key, _) in summaries[0] {
                let _ = write!(out, "{key}");
                for s in &summaries {
                    let v = s
                        .iter()
                        .find(|(k, _)| k == key)
                        .map(|(_, v)| v.as_str())
                        .unwrap_or("");
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
            out
        }
        ReportInput::Metrics(_) => {
            let reports: Vec<&Vec<(String, String, String)>> = parsed
                .iter()
                .map(|p| match p {
                    ReportInput::Metrics(r) => Ok(r),
                    _ => Err(Error::data("mixed incompatible schemas")),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = format!("metric,class,{}\n", stems.join(","));
            for (metric, class, _) in reports[0] {
                let _ = write!(out, "{metric},{class}");
                for r in &reports {
                    let v = r
                        .iter()
                        .find(|(m, c, _)| m == metric && c == class)
                        .map(|(_, _, v)| v.as_str())
                        .unwrap_or("");
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
            out
        }
    };

    match out {
        Some(path) => std::fs::write(path, &table)?,
        None => print!("{table}"),
    }
    Ok(())
}

/// Chains simulate, dataset extraction/split, and train/evaluate with one
/// seed; every artifact lands under `out_dir`.
pub fn cmd_pipeline(
    config_path: &Path,
    out_dir: &Path,
    model: &str,
    features: &str,
) -> Result<()> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = RunConfig::env_seed()? {
        config.override_seeds(seed);
    }
    std::fs::create_dir_all(out_dir)?;

    let trace = run_trace(&config)?;
    let trace_path = out_dir.join("trace.csv");
    write_trace(&trace, &trace_path)?;
    let pairs = summary_pairs(&trace)?;
    write_summary(&pairs, &with_suffix(&trace_path, "summary"))?;
    write_energy_curve(&trace, &with_suffix(&trace_path, "energy"))?;
    println!("pipeline: simulated {} rounds", trace.ledgers.len());

    let records = records_from_rows(&trace_rows(&trace));
    if records.is_empty() {
        return Err(Error::data("pipeline: simulation produced no records"));
    }
    let dataset_path = out_dir.join("dataset.csv");
    dataset_to_files(records, &dataset_path, config.train_ratio, config.split_seed)?;

    let args = TrainEvalArgs {
        train_csv: with_suffix(&dataset_path, "train"),
        test_csv: with_suffix(&dataset_path, "test"),
        model: model.to_string(),
        features: features.to_string(),
        k_folds: Some(config.k_folds),
        allow_leaky: false,
        feature_file: None,
        out_dir: out_dir.to_path_buf(),
        config: Some(config_path.to_path_buf()),
    };
    cmd_train_eval(&args)?;
    Ok(())
}
