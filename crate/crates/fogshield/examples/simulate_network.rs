//! Deploys a fog-assisted sensor network, runs the round engine, and prints
//! the delivery, lifetime, and energy picture of the run.
//!
//! ```bash
//! cargo run --release --example simulate_network
//! ```

use std::collections::BTreeMap;

use fogshield::attack::BehaviorParams;
use fogshield::network::{Behavior, DeploymentConfig, EnergyParams};
use fogshield::sim::{delivery_ratio, energy_curve, lifetime_stats, throughput, Simulation};

fn main() -> fogshield::Result<()> {
    let deployment = DeploymentConfig {
        sensor_count: 120,
        fog_count: 4,
        area_width: 300.0,
        area_height: 300.0,
        relay_range: 450.0,
        rounds: 800,
        seed: 11,
        ..DeploymentConfig::default()
    };
    let energy = EnergyParams {
        e0: 0.8,
        ..EnergyParams::default()
    };
    let mut attack_mix = BTreeMap::new();
    attack_mix.insert(Behavior::Flooding, 0.1);
    attack_mix.insert(Behavior::BlackHole, 0.1);
    attack_mix.insert(Behavior::SelectiveForwarding, 0.1);
    attack_mix.insert(Behavior::GrayHole, 0.1);

    let sim = Simulation::new(deployment, energy, BehaviorParams::default(), attack_mix);
    let trace = sim.run()?;

    println!(
        "simulated {} rounds over {} sensors and {} fogs (seed {})",
        trace.ledgers.len(),
        trace.graph.sensor_count(),
        trace.graph.fogs.len(),
        trace.seed
    );
    println!(
        "offered {} kb, delivered {} kb, delivery ratio {:.3}",
        trace.total_offered_bits() / 1000,
        trace.total_delivered_bits() / 1000,
        delivery_ratio(&trace)?
    );

    let elapsed_s = trace.ledgers.len() as f64 * trace.ms_per_round / 1000.0;
    let t = throughput(&trace, elapsed_s)?;
    println!(
        "throughput {:.1} kbps (x100 convention: {:.0})",
        t.raw_kbps, t.scaled_x100
    );

    let stats = lifetime_stats(&trace)?;
    println!(
        "lifetime ms: mean {:.1}, sd {:.1}, se {:.2}, 95% ci [{:.1}, {:.1}], min {:.0}, max {:.0}",
        stats.mean, stats.std_dev, stats.std_err, stats.ci95.0, stats.ci95.1, stats.min, stats.max
    );

    let curve = energy_curve(&trace);
    println!("cumulative mean energy consumed (J):");
    for (round, mean) in curve.iter().step_by(curve.len().div_ceil(8).max(1)) {
        println!("  round {round:>4}: {mean:.4}");
    }
    if let Some((round, mean)) = curve.last() {
        println!("  round {round:>4}: {mean:.4} (end)");
    }

    let alive = trace.graph.nodes.iter().filter(|n| n.alive()).count();
    println!("{alive} sensors still alive at the end of the run");
    Ok(())
}
