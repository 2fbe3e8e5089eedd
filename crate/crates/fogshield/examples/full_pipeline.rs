//! The whole pipeline in one pass: simulate, extract, split, select
//! features, cross-validate, train, and evaluate on the held-out test set.
//! Mirrors what `fogshield pipeline` does from the command line.
//!
//! ```bash
//! cargo run --release --example full_pipeline
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::classifiers::{GbtParams, ModelSpec};
use fogshield::dataset::{extract_records, train_test_split, CLASS_NAMES};
use fogshield::eval::{cross_validate, evaluate};
use fogshield::features::multi_feature_union;
use fogshield::network::{Behavior, DeploymentConfig, EnergyParams};
use fogshield::sim::{delivery_ratio, Simulation};

fn main() -> fogshield::Result<()> {
    let seed = 41;
    let deployment = DeploymentConfig {
        sensor_count: 100,
        fog_count: 4,
        area_width: 300.0,
        area_height: 300.0,
        relay_range: 450.0,
        rounds: 500,
        seed,
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

    // Stage 1: simulate.
    let trace = Simulation::new(deployment, energy, BehaviorParams::default(), mix).run()?;
    println!(
        "simulated {} rounds, delivery ratio {:.3}",
        trace.ledgers.len(),
        delivery_ratio(&trace)?
    );

    // Stage 2: extract and split.
    let dataset = extract_records(&trace)?;
    let (train, test) = train_test_split(&dataset, 0.8, seed)?;
    println!("dataset {} records -> train {}, test {}", dataset.len(), train.len(), test.len());

    // Stage 3: multi-feature selection on the training matrix.
    let (train_x_all, train_y, names) = train.to_matrix(false);
    let (test_x_all, test_y, _) = test.to_matrix(false);
    let selected = multi_feature_union(&train_x_all, &names, 10)?;
    println!("selected features: {}", selected.join(", "));
    let columns: Vec<usize> = selected
        .iter()
        .map(|n| names.iter().position(|x| x == n).expect("selected from names"))
        .collect();
    let train_x = train_x_all.select_columns(&columns)?;
    let test_x = test_x_all.select_columns(&columns)?;

    // Stage 4: cross-validate, then fit and test.
    let spec = ModelSpec::Gbt(GbtParams {
        n_rounds: 60,
        ..GbtParams::default()
    });
    let class_refs: Vec<&str> = CLASS_NAMES.to_vec();
    let cv = cross_validate(&train_x, &train_y, &class_refs, &spec, 5, seed, 1.0)?;
    println!("cross-validation mean accuracy {:.4}", cv.mean.accuracy);

    let model = spec.train(&train_x, &train_y, class_refs.len())?;
    let predictions: Vec<usize> = (0..test_x.rows)
        .map(|i| model.predict(test_x.row(i)))
        .collect::<fogshield::Result<Vec<usize>>>()?;
    let report = evaluate(&predictions, &test_y, &class_refs, 1.0)?;
    println!("\nheld-out test report:\n{}", report.to_table_text());
    Ok(())
}
