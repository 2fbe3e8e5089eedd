//! Runs 5-fold cross-validation on the training split and prints per-fold
//! and averaged metrics, the way the training stage validates a model
//! before it ever sees the test set.
//!
//! ```bash
//! cargo run --release --example cross_validation
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::classifiers::{ModelSpec, TreeParams};
use fogshield::dataset::{extract_records, train_test_split, CLASS_NAMES};
use fogshield::eval::cross_validate;
use fogshield::network::{Behavior, DeploymentConfig, EnergyParams};
use fogshield::sim::Simulation;

fn main() -> fogshield::Result<()> {
    let deployment = DeploymentConfig {
        sensor_count: 80,
        fog_count: 4,
        area_width: 300.0,
        area_height: 300.0,
        relay_range: 450.0,
        rounds: 400,
        seed: 29,
        ..DeploymentConfig::default()
    };
    let energy = EnergyParams {
        e0: 0.6,
        ..EnergyParams::default()
    };
    let mut mix = BTreeMap::new();
    for attack in Behavior::ATTACKS {
        mix.insert(attack, 0.1);
    }
    let trace = Simulation::new(deployment, energy, BehaviorParams::default(), mix).run()?;
    let dataset = extract_records(&trace)?;
    let (train, _test) = train_test_split(&dataset, 0.8, 29)?;
    let (x, y, _) = train.to_matrix(false);
    let class_refs: Vec<&str> = CLASS_NAMES.to_vec();

    let spec = ModelSpec::Tree(TreeParams {
        max_depth: 22,
        ..TreeParams::default()
    });
    let outcome = cross_validate(&x, &y, &class_refs, &spec, 5, 29, 1.0)?;
    for warning in &outcome.warnings {
        println!("warning: {warning}");
    }

    println!("5-fold cross-validation of the decision tree on {} records:", x.rows);
    println!(
        "{:<6} {:>10} {:>10} {:>10} {:>10}",
        "fold", "accuracy", "macro F1", "rmse", "records"
    );
    for (i, fold) in outcome.folds.iter().enumerate() {
        println!(
            "{:<6} {:>10.4} {:>10.4} {:>10.4} {:>10.0}",
            i,
            fold.accuracy,
            fold.macro_f1.unwrap_or(f64::NAN),
            fold.rmse,
            fold.total
        );
    }
    println!(
        "{:<6} {:>10.4} {:>10.4} {:>10.4}",
        "mean",
        outcome.mean.accuracy,
        outcome.mean.macro_f1.unwrap_or(f64::NAN),
        outcome.mean.rmse
    );

    println!("\naveraged per-class view:\n{}", outcome.mean.to_table_text());
    Ok(())
}
