//! Pairs an honest baseline run against each attack type on the same seed
//! and topology, showing what every attack does to delivery and energy.
//!
//! ```bash
//! cargo run --release --example attack_impact
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::network::{Behavior, DeploymentConfig, EnergyParams};
use fogshield::sim::{delivery_ratio, energy_curve, Simulation, SimulationTrace};

fn run_with_mix(mix: BTreeMap<Behavior, f64>) -> fogshield::Result<SimulationTrace> {
    let deployment = DeploymentConfig {
        sensor_count: 80,
        fog_count: 4,
        area_width: 300.0,
        area_height: 300.0,
        relay_range: 450.0,
        rounds: 400,
        seed: 23,
        ..DeploymentConfig::default()
    };
    let energy = EnergyParams {
        e0: 0.6,
        ..EnergyParams::default()
    };
    Simulation::new(deployment, energy, BehaviorParams::default(), mix).run()
}

fn main() -> fogshield::Result<()> {
    let honest = run_with_mix(BTreeMap::new())?;
    let honest_curve = energy_curve(&honest);
    let honest_final = honest_curve.last().map_or(0.0, |(_, v)| *v);

    println!(
        "{:<22} {:>9} {:>12} {:>16} {:>12}",
        "scenario", "delivery", "dropped", "mean energy (J)", "deaths"
    );
    let deaths: u64 = honest.ledgers.iter().map(|l| l.deaths.len() as u64).sum();
    println!(
        "{:<22} {:>9.3} {:>12} {:>16.4} {:>12}",
        "honest baseline",
        delivery_ratio(&honest)?,
        honest
            .ledgers
            .iter()
            .map(|l| l.dropped_packets)
            .sum::<u64>(),
        honest_final,
        deaths
    );

    for attack in Behavior::ATTACKS {
        let mut mix = BTreeMap::new();
        mix.insert(attack, 0.15);
        let trace = run_with_mix(mix)?;
        let curve = energy_curve(&trace);
        let deaths: u64 = trace.ledgers.iter().map(|l| l.deaths.len() as u64).sum();
        println!(
            "{:<22} {:>9.3} {:>12} {:>16.4} {:>12}",
            format!("{attack:?} 15%"),
            delivery_ratio(&trace)?,
            trace
                .ledgers
                .iter()
                .map(|l| l.dropped_packets)
                .sum::<u64>(),
            curve.last().map_or(0.0, |(_, v)| *v),
            deaths
        );
    }

    // Flooding drains the network: its energy curve sits above the honest
    // one at every round of the pairing.
    let mut flood_mix = BTreeMap::new();
    flood_mix.insert(Behavior::Flooding, 0.15);
    let flooded = run_with_mix(flood_mix)?;
    let flooded_curve = energy_curve(&flooded);
    let dominated = honest_curve
        .iter()
        .zip(&flooded_curve)
        .all(|(h, f)| f.1 >= h.1);
    println!("\nflooding energy curve dominates the honest curve pointwise: {dominated}");
    Ok(())
}
