//! Ranks the trainable features with PCA and SVD, shows the cumulative
//! variance picture, and builds the multi-feature union.
//!
//! ```bash
//! cargo run --release --example feature_selection
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::dataset::extract_records;
use fogshield::features::{
    multi_feature_union, pca_fit, rank_features, variance_contribution, RankingMethod,
};
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
        seed: 3,
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
    let (x, _, names) = dataset.to_matrix(false);
    println!("{} records, {} trainable features", x.rows, x.cols);

    let model = pca_fit(&x)?;
    println!("\ncumulative variance contribution of the leading components:");
    for y in [1, 2, 3, 5, 8, x.cols] {
        println!(
            "  first {y:>2} components: {:>7.3}%",
            100.0 * variance_contribution(&model, y)?
        );
    }

    let pca = rank_features(&x, RankingMethod::Pca)?;
    let svd = rank_features(&x, RankingMethod::Svd)?;
    println!("\n{:<6} {:<22} {:<22}", "rank", "PCA", "SVD");
    for i in 0..x.cols {
        println!(
            "{:<6} {:<22} {:<22}",
            i + 1,
            names[pca.order[i]],
            names[svd.order[i]]
        );
    }

    let union = multi_feature_union(&x, &names, 10)?;
    println!(
        "\nmulti-feature union of both top-10 lists ({} features): {}",
        union.len(),
        union.join(", ")
    );
    Ok(())
}
