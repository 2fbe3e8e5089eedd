//! Static network structure, radio energy arithmetic, and residual-energy
//! relay election.
//!
//! The network is a graph over randomly deployed sensor nodes plus a row of
//! fog nodes along one edge of the area. Two sensors are linked when their
//! Euclidean distance is at most the threshold distance `d0`, which is also
//! the crossover point of the two-branch transmit energy model: below `d0`
//! the amplifier cost grows with `d^2`, at or beyond it with `d^4`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};

/// Node behavior classes. `Honest` nodes follow the protocol; the other four
/// implement the attack policies in [`crate::attack`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Behavior {
    Honest,
    Flooding,
    BlackHole,
    SelectiveForwarding,
    GrayHole,
}

impl Behavior {
    pub const ATTACKS: [Behavior; 4] = [
        Behavior::Flooding,
        Behavior::BlackHole,
        Behavior::SelectiveForwarding,
        Behavior::GrayHole,
    ];

    pub fn is_attacker(self) -> bool {
        self != Behavior::Honest
    }
}

/// Planar position in meters.
pub type Position = (f64, f64);

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Static deployment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub sensor_count: usize,
    pub fog_count: usize,
    /// Target fraction of relay nodes in the network.
    pub relay_fraction: f64,
    /// Sensor communication range `r_n`.
    pub sensor_range: f64,
    /// Relay communication range `R_n`, must be at least `sensor_range`.
    pub relay_range: f64,
    /// Link threshold distance `d0`; also the tx-energy branch crossover.
    pub threshold_distance: f64,
    /// Data packet size in bits.
    pub packet_bits: u64,
    /// Number of rounds to simulate.
    pub rounds: u64,
    pub seed: u64,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        let d0 = (10e-12f64 / 0.0013e-12).sqrt(); // ~87.7 m
        DeploymentConfig {
            area_width: 300.0,
            area_height: 300.0,
            sensor_count: 200,
            fog_count: 4,
            relay_fraction: 0.1,
            sensor_range: d0,
            relay_range: 3.0 * d0,
            threshold_distance: d0,
            packet_bits: 4000,
            rounds: 2000,
            seed: 42,
        }
    }
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_width > 0.0) || !(self.area_height > 0.0) {
            return Err(Error::config("deployment area must be positive"));
        }
        if self.sensor_count < 2 {
            return Err(Error::config("at least 2 sensor nodes required"));
        }
        if self.fog_count == 0 {
            return Err(Error::config("at least 1 fog node required"));
        }
        if !(self.relay_fraction > 0.0 && self.relay_fraction < 1.0) {
            return Err(Error::config("relay_fraction must lie in (0,1)"));
        }
        if !(self.sensor_range > 0.0) {
            return Err(Error::config("sensor_range must be positive"));
        }
        if self.relay_range < self.sensor_range {
            return Err(Error::config("relay_range must be >= sensor_range"));
        }
        if !(self.threshold_distance > 0.0) {
            return Err(Error::config("threshold_distance must be positive"));
        }
        if self.packet_bits == 0 {
            return Err(Error::config("packet_bits must be positive"));
        }
        Ok(())
    }
}

/// Radio and battery coefficients of the first-order energy model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    /// Electronic energy per bit (J/bit).
    pub phi: f64,
    /// Near-field amplifier energy (J/bit/m^2), used below `d0`.
    pub beta1: f64,
    /// Far-field amplifier energy (J/bit/m^4), used at or beyond `d0`.
    pub beta2: f64,
    /// Initial battery of an honest node (J).
    pub e0: f64,
    /// Attacker battery boost `a`: attackers start with `(1+a) * e0`.
    pub malicious_boost: f64,
    /// Optimal relay election probability for a node at average energy.
    pub p_opt: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            phi: 50e-9,
            beta1: 10e-12,
            beta2: 0.0013e-12,
            e0: 0.5,
            malicious_boost: 1.0,
            p_opt: 0.1,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.beta1 > 0.0 && self.beta2 > 0.0 && self.e0 > 0.0) {
            return Err(Error::config("energy coefficients must be positive"));
        }
        if self.malicious_boost < 0.0 {
            return Err(Error::config("malicious_boost must be >= 0"));
        }
        if !(self.p_opt > 0.0 && self.p_opt <= 1.0) {
            return Err(Error::config("p_opt must lie in (0,1]"));
        }
        Ok(())
    }

    /// Crossover distance where the two amplifier branches meet.
    pub fn derived_threshold(&self) -> f64 {
        (self.beta1 / self.beta2).sqrt()
    }
}

/// One deployed sensor node. `alive` is derived: a node lives while it has
/// residual energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    /// Unique id, starting at 1. Fog ids follow the sensor id space.
    pub id: u32,
    pub position: Position,
    pub behavior: Behavior,
    pub is_relay: bool,
    pub e_init: f64,
    pub e_rem: f64,
}

impl SensorNode {
    pub fn alive(&self) -> bool {
        self.e_rem > 0.0
    }
}

/// A fog node: mains-powered data sink near the network edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FogNode {
    pub fog_id: u32,
    pub position: Position,
    /// Packets received in the current round.
    pub received_count: u64,
}

/// Deployed network: sensors, fogs, and the `d0` link structure.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    pub nodes: Vec<SensorNode>,
    pub fogs: Vec<FogNode>,
    /// Unordered id pairs (i < j) with distance <= d0.
    pub edges: BTreeSet<(u32, u32)>,
    /// Neighbor id sets, indexed by node position in `nodes`.
    pub neighbors: Vec<BTreeSet<u32>>,
    pub threshold_distance: f64,
}

impl NetworkGraph {
    /// Builds the link structure over the given nodes and fogs.
    pub fn build(nodes: Vec<SensorNode>, fogs: Vec<FogNode>, d0: f64) -> NetworkGraph {
        let l = nodes.len();
        let mut edges = BTreeSet::new();
        let mut neighbors = vec![BTreeSet::new(); l];
        for i in 0..l {
            for j in (i + 1)..l {
                if distance(nodes[i].position, nodes[j].position) <= d0 {
                    edges.insert((nodes[i].id, nodes[j].id));
                    neighbors[i].insert(nodes[j].id);
                    neighbors[j].insert(nodes[i].id);
                }
            }
        }
        NetworkGraph {
            nodes,
            fogs,
            edges,
            neighbors,
            threshold_distance: d0,
        }
    }

    pub fn sensor_count(&self) -> usize {
        self.nodes.len()
    }

    fn index_of(&self, node_id: u32) -> Result<usize> {
        let idx = node_id as usize;
        if idx >= 1 && idx <= self.nodes.len() {
            Ok(idx - 1)
        } else {
            Err(Error::data(format!("unknown node id {node_id}")))
        }
    }

    pub fn node(&self, node_id: u32) -> Result<&SensorNode> {
        Ok(&self.nodes[self.index_of(node_id)?])
    }

    pub fn degree(&self, node_id: u32) -> Result<usize> {
        Ok(self.neighbors[self.index_of(node_id)?].len())
    }

    /// Fog nearest to the given position (ties to the lower fog id).
    pub fn nearest_fog(&self, pos: Position) -> &FogNode {
        self.fogs
            .iter()
            .min_by(|a, b| {
                distance(pos, a.position)
                    .partial_cmp(&distance(pos, b.position))
                    .unwrap()
            })
            .expect("graph has at least one fog")
    }

    /// Graph Laplacian over the sensor nodes, row-major l x l.
    ///
    /// Derived from adjacency: off-diagonal entries are -1 exactly on edges,
    /// diagonal entries are node degrees.
    pub fn laplacian(&self) -> Vec<i64> {
        let l = self.nodes.len();
        let mut m = vec![0i64; l * l];
        for &(i, j) in &self.edges {
            let (a, b) = ((i - 1) as usize, (j - 1) as usize);
            m[a * l + b] = -1;
            m[b * l + a] = -1;
            m[a * l + a] += 1;
            m[b * l + b] += 1;
        }
        m
    }
}

/// Neighbor set `N_i` of a node: exactly the other ids within `d0`.
pub fn neighbor_set(graph: &NetworkGraph, node_id: u32) -> Result<&BTreeSet<u32>> {
    let idx = graph.index_of(node_id)?;
    Ok(&graph.neighbors[idx])
}

fn fog_row(config: &DeploymentConfig, first_fog_id: u32) -> Vec<FogNode> {
    // Fogs sit on a uniform grid along the bottom edge of the area.
    (0..config.fog_count)
        .map(|k| FogNode {
            fog_id: first_fog_id + k as u32,
            position: (
                (k as f64 + 0.5) * config.area_width / config.fog_count as f64,
                0.0,
            ),
            received_count: 0,
        })
        .collect()
}

fn initial_energy(behavior: Behavior, energy: &EnergyParams) -> f64 {
    if behavior.is_attacker() {
        (1.0 + energy.malicious_boost) * energy.e0
    } else {
        energy.e0
    }
}

/// Randomly deploys `sensor_count` nodes in the area and assigns attacker
/// behaviors according to `attack_mix` (fraction of nodes per attack type;
/// the remainder stays honest). Deterministic for a fixed seed.
pub fn deploy(
    config: &DeploymentConfig,
    energy: &EnergyParams,
    attack_mix: &BTreeMap<Behavior, f64>,
) -> Result<NetworkGraph> {
    config.validate()?;
    energy.validate()?;

    let l = config.sensor_count;
    let mut frac_sum = 0.0;
    for (&behavior, &frac) in attack_mix {
        if behavior == Behavior::Honest {
            return Err(Error::config("attack_mix must not contain the honest class"));
        }
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::config("attack_mix fractions must lie in [0,1]"));
        }
        frac_sum += frac;
    }
    if frac_sum > 1.0 + 1e-12 {
        return Err(Error::config("attack_mix fractions must sum to at most 1"));
    }

    let mut rng = crate::sim::substream_rng(config.seed, crate::sim::STREAM_DEPLOY, 0);

    // Positions first, then behavior assignment, so the same seed yields the
    // same placement under every attack mix.
    let positions: Vec<Position> = (0..l)
        .map(|_| {
            (
                rng.random::<f64>() * config.area_width,
                rng.random::<f64>() * config.area_height,
            )
        })
        .collect();

    let mut behaviors = vec![Behavior::Honest; l];
    let mut order: Vec<usize> = (0..l).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let mut cursor = 0usize;
    for attack in Behavior::ATTACKS {
        let frac = attack_mix.get(&attack).copied().unwrap_or(0.0);
        let count = (frac * l as f64).round() as usize;
        if cursor + count > l {
            return Err(Error::config("attacker counts exceed the node count"));
        }
        for &idx in &order[cursor..cursor + count] {
            behaviors[idx] = attack;
        }
        cursor += count;
    }

    let nodes: Vec<SensorNode> = (0..l)
        .map(|i| {
            let e_init = initial_energy(behaviors[i], energy);
            SensorNode {
                id: (i + 1) as u32,
                position: positions[i],
                behavior: behaviors[i],
                is_relay: false,
                e_init,
                e_rem: e_init,
            }
        })
        .collect();

    let fogs = fog_row(config, (l + 1) as u32);
    Ok(NetworkGraph::build(nodes, fogs, config.threshold_distance))
}

/// Deploys nodes at explicit positions with explicit behaviors. Used to set
/// up forced topologies; fog placement and link rules match [`deploy`].
pub fn deploy_at(
    config: &DeploymentConfig,
    energy: &EnergyParams,
    placements: &[(Position, Behavior)],
) -> Result<NetworkGraph> {
    energy.validate()?;
    if placements.is_empty() {
        return Err(Error::config("at least one placement required"));
    }
    let nodes: Vec<SensorNode> = placements
        .iter()
        .enumerate()
        .map(|(i, &(position, behavior))| {
            let e_init = initial_energy(behavior, energy);
            SensorNode {
                id: (i + 1) as u32,
                position,
                behavior,
                is_relay: false,
                e_init,
                e_rem: e_init,
            }
        })
        .collect();
    let fogs = fog_row(config, (placements.len() + 1) as u32);
    Ok(NetworkGraph::build(nodes, fogs, config.threshold_distance))
}

/// Energy to transmit `q` bits over distance `d` meters.
///
/// Uses the near branch `q (phi + beta1 d^2)` strictly below `d0` and the far
/// branch `q (phi + beta2 d^4)` at or beyond it.
pub fn tx_energy(q: u64, d: f64, p: &EnergyParams, d0: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::numeric("tx_energy: q must be positive"));
    }
    if !d.is_finite() || d < 0.0 {
        return Err(Error::numeric("tx_energy: distance must be finite and >= 0"));
    }
    if !(d0 > 0.0) {
        return Err(Error::numeric("tx_energy: d0 must be positive"));
    }
    let q = q as f64;
    let e = if d < d0 {
        q * (p.phi + p.beta1 * d * d)
    } else {
        q * (p.phi + p.beta2 * d * d * d * d)
    };
    Ok(e)
}

/// Energy to receive `q` bits: `q * phi`.
pub fn rx_energy(q: u64, p: &EnergyParams) -> Result<f64> {
    if q == 0 {
        return Err(Error::numeric("rx_energy: q must be positive"));
    }
    Ok(q as f64 * p.phi)
}

/// Total energy of a node over its transmit and receive events.
pub fn node_total_energy(
    tx_events: &[(u64, f64)],
    rx_events: &[u64],
    p: &EnergyParams,
    d0: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for &(q, d) in tx_events {
        total += tx_energy(q, d, p, d0)?;
    }
    for &q in rx_events {
        total += rx_energy(q, p)?;
    }
    Ok(total)
}

/// Arithmetic mean of per-node energy values.
pub fn average_energy(consumptions: &[f64]) -> Result<f64> {
    if consumptions.is_empty() {
        return Err(Error::numeric("average_energy: empty list"));
    }
    Ok(consumptions.iter().sum::<f64>() / consumptions.len() as f64)
}

/// Per-round relay election probability of a node.
///
/// An honest node at the average energy is elected with probability `p_opt`;
/// the probability scales with the node's residual energy relative to the
/// average. Attackers carry a `(1+a)` divisor, so with equal residual ratio
/// they are never more likely to relay than honest nodes. Clamped to the
/// unit interval.
pub fn relay_probability(
    node: &SensorNode,
    residual: f64,
    e_avg: f64,
    p: &EnergyParams,
) -> Result<f64> {
    if !(e_avg > 0.0) {
        return Err(Error::numeric("relay_probability: e_avg must be positive"));
    }
    let ratio = residual / e_avg;
    let raw = if node.behavior.is_attacker() {
        p.p_opt * ratio / (1.0 + p.malicious_boost)
    } else {
        p.p_opt * ratio
    };
    Ok(raw.clamp(0.0, 1.0))
}

/// Elects relays for one round: each alive node flips an independent coin at
/// its [`relay_probability`]. Dead nodes are never selected. `is_relay` flags
/// on the graph are updated. One draw is consumed per node, dead or alive, so
/// paired runs with a shared stream stay aligned.
pub fn select_relays(
    graph: &mut NetworkGraph,
    residuals: &[f64],
    p: &EnergyParams,
    rng: &mut impl Rng,
) -> Result<BTreeSet<u32>> {
    if residuals.len() != graph.nodes.len() {
        return Err(Error::numeric(
            "select_relays: one residual per node required",
        ));
    }
    let alive: Vec<f64> = residuals.iter().copied().filter(|&e| e > 0.0).collect();
    if alive.is_empty() {
        return Err(Error::numeric("select_relays: all nodes dead"));
    }
    let e_avg = average_energy(&alive)?;

    let mut selected = BTreeSet::new();
    for (i, node) in graph.nodes.iter_mut().enumerate() {
        let u = rng.random::<f64>();
        node.is_relay = false;
        if residuals[i] > 0.0 {
            let prob = if node.behavior.is_attacker() {
                p.p_opt * (residuals[i] / e_avg) / (1.0 + p.malicious_boost)
            } else {
                p.p_opt * (residuals[i] / e_avg)
            }
            .clamp(0.0, 1.0);
            if u < prob {
                node.is_relay = true;
                selected.insert(node.id);
            }
        }
    }
    Ok(selected)
}
