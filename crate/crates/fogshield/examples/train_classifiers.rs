//! Trains all four detectors on one generated dataset and compares their
//! test-set behavior side by side.
//!
//! ```bash
//! cargo run --release --example train_classifiers
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::classifiers::{
    GbtParams, LogisticParams, ModelSpec, SvmParams, TreeParams,
};
use fogshield::dataset::{
    apply_scaler, extract_records, fit_scaler, train_test_split, CLASS_NAMES,
};
use fogshield::eval::evaluate;
use fogshield::network::{Behavior, DeploymentConfig, EnergyParams};
use fogshield::sim::Simulation;

fn main() -> fogshield::Result<()> {
    let deployment = DeploymentConfig {
        sensor_count: 100,
        fog_count: 4,
        area_width: 300.0,
        area_height: 300.0,
        relay_range: 450.0,
        rounds: 500,
        seed: 17,
        ..DeploymentConfig::default()
    };
    let energy = EnergyParams {
        e0: 0.7,
        ..EnergyParams::default()
    };
    let mut mix = BTreeMap::new();
    for attack in Behavior::ATTACKS {
        mix.insert(attack, 0.1);
    }
    let trace = Simulation::new(deployment, energy, BehaviorParams::default(), mix).run()?;
    let dataset = extract_records(&trace)?;
    let (train, test) = train_test_split(&dataset, 0.8, 17)?;
    println!("{} train records, {} test records", train.len(), test.len());

    let (train_x, train_y, _) = train.to_matrix(false);
    let (test_x, test_y, _) = test.to_matrix(false);
    let class_refs: Vec<&str> = CLASS_NAMES.to_vec();

    let specs = [
        ModelSpec::Gbt(GbtParams {
            n_rounds: 60,
            ..GbtParams::default()
        }),
        ModelSpec::Tree(TreeParams {
            max_depth: 22,
            ..TreeParams::default()
        }),
        ModelSpec::Logistic(LogisticParams::default()),
        ModelSpec::Svm(SvmParams::default()),
    ];

    println!(
        "\n{:<10} {:>10} {:>12} {:>10} {:>10}",
        "model", "accuracy", "macro F1", "cost", "errors"
    );
    for spec in specs {
        let (fit_x, eval_x) = if spec.standardizes() {
            let stats = fit_scaler(&train_x);
            (
                apply_scaler(&train_x, &stats),
                apply_scaler(&test_x, &stats),
            )
        } else {
            (train_x.clone(), test_x.clone())
        };
        let model = spec.train(&fit_x, &train_y, class_refs.len())?;
        let predictions: Vec<usize> = (0..eval_x.rows)
            .map(|i| model.predict(eval_x.row(i)))
            .collect::<fogshield::Result<Vec<usize>>>()?;
        let report = evaluate(&predictions, &test_y, &class_refs, 1.0)?;
        println!(
            "{:<10} {:>10.4} {:>12.4} {:>10.4} {:>10.0}",
            spec.name(),
            report.accuracy,
            report.macro_f1.unwrap_or(f64::NAN),
            report.cost.unwrap_or(f64::NAN),
            report.incorrect
        );
    }
    Ok(())
}
