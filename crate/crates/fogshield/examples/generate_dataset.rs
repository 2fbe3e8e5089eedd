//! Turns a simulation trace into the 20-feature labeled dataset, splits it
//! 80/20 with class stratification, and writes the three CSVs.
//!
//! ```bash
//! cargo run --release --example generate_dataset
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::dataset::{extract_records, train_test_split, write_records, Dataset};
use fogshield::network::{Behavior, DeploymentConfig, EnergyParams};
use fogshield::sim::Simulation;

fn print_distribution(title: &str, ds: &Dataset) {
    println!("{title} ({} records)", ds.len());
    for (class, count) in ds.class_distribution() {
        println!("  {class:<22} {count:>7}");
    }
}

fn main() -> fogshield::Result<()> {
    let deployment = DeploymentConfig {
        sensor_count: 100,
        fog_count: 4,
        area_width: 300.0,
        area_height: 300.0,
        relay_range: 450.0,
        rounds: 600,
        seed: 5,
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
    let (train, test) = train_test_split(&dataset, 0.8, 5)?;

    print_distribution("full dataset", &dataset);
    print_distribution("train (80%)", &train);
    print_distribution("test (20%)", &test);

    let sample = &dataset.records[0];
    println!(
        "\nfirst record: node {} served by fog {} in round {}, D_Tr {}, E_Rem {:.4e} J, label {:?}",
        sample.id, sample.fog_id, sample.round, sample.tx_rate, sample.e_rem, sample.label
    );

    let out_dir = std::env::temp_dir().join("fogshield-examples");
    std::fs::create_dir_all(&out_dir)?;
    let full_path = out_dir.join("dataset.csv");
    write_records(&dataset, &full_path)?;
    write_records(&train, &out_dir.join("dataset.train.csv"))?;
    write_records(&test, &out_dir.join("dataset.test.csv"))?;
    println!("\nwrote CSVs next to {}", full_path.display());
    Ok(())
}
