//! Round-driven simulation engine: relay election, route discovery, data
//! transmission under attacker interference, the energy ledger, and the
//! end-of-run network analytics.
//!
//! Each round executes a fixed sequence: average-energy computation, relay
//! election, TDMA grouping, flooding adverts, one data packet per alive
//! sensor (routed to a relay chosen by route discovery, or straight to a fog
//! within `d0`), per-packet forwarding decisions at the relays, energy
//! debiting, and death bookkeeping. Relays aggregate their own reading with
//! their members' packets and forward every surviving packet to their
//! nearest fog, provided that fog lies within the relay communication range.
//!
//! Delivered and offered bit counters track data originating at honest
//! nodes; attacker nodes transmit their own packets too (and pay for them),
//! but fabricated payloads do not count as delivered sensor data.
//!
//! Everything is a pure function of configuration and seed. Per-purpose,
//! per-round RNG substreams keep paired runs (same seed, different attack
//! mix) aligned draw for draw.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::attack::{
    behavior_label, blackhole_route_reply, flooding_emissions, label_behavior, BehaviorParams,
};
use crate::error::{Error, Result};
use crate::network::{
    deploy, distance, rx_energy, select_relays, tx_energy, Behavior, DeploymentConfig,
    EnergyParams, NetworkGraph,
};

pub const STREAM_DEPLOY: u64 = 1;
pub const STREAM_RELAY: u64 = 2;
pub const STREAM_BEHAVIOR: u64 = 3;

/// Advert messages an honest node would send per round; flooders multiply it.
pub const ADVERT_BASELINE: u64 = 1;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic RNG substream for a (seed, purpose, index) triple.
pub fn substream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha12Rng {
    let mut z = splitmix64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = splitmix64(z ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    ChaCha12Rng::seed_from_u64(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Data,
    RouteRequest,
    RouteReply,
    Advert,
}

/// A packet in flight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub src: u32,
    /// Destination node or fog id.
    pub dst: u32,
    pub bits: u64,
    pub hops: u64,
    pub seq: u64,
}

/// Per-node slice of one round's ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRound {
    pub node_id: u32,
    /// Data packets transmitted toward the fogs (own and forwarded).
    pub data_tx: u64,
    pub advert_tx: u64,
    pub rx_count: u64,
    pub tx_energy: f64,
    pub rx_energy: f64,
    pub is_relay: bool,
    /// Whether the node sent to a relay or received as one this round.
    pub relay_contact: bool,
    /// TDMA slot within the relay group, 0 when ungrouped.
    pub rank: u64,
    /// Next-hop id of this round's own data transmission, 0 when none.
    pub send_code: u32,
    pub served_fog: u32,
    /// Whether the identification function had flagged the node before this round.
    pub flagged: bool,
    pub e_rem_after: f64,
}

/// One simulated round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLedger {
    /// 1-based round index.
    pub round_index: u64,
    /// Entries for every node alive at the start of the round, in id order.
    pub nodes: Vec<NodeRound>,
    /// Packets received per fog this round, indexed like `graph.fogs`.
    pub fog_rx: Vec<u64>,
    pub offered_bits: u64,
    pub delivered_bits: u64,
    pub dropped_packets: u64,
    pub deaths: Vec<u32>,
    pub relay_count: u64,
    pub alive_at_start: u64,
}

/// Complete record of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub deployment: DeploymentConfig,
    pub energy: EnergyParams,
    pub behavior: BehaviorParams,
    pub attack_mix: BTreeMap<Behavior, f64>,
    pub ms_per_round: f64,
    pub seed: u64,
    pub ledgers: Vec<RoundLedger>,
    /// Final network state; links and positions are static over the run.
    pub graph: NetworkGraph,
}

impl SimulationTrace {
    pub fn total_delivered_bits(&self) -> u64 {
        self.ledgers.iter().map(|l| l.delivered_bits).sum()
    }

    pub fn total_offered_bits(&self) -> u64 {
        self.ledgers.iter().map(|l| l.offered_bits).sum()
    }
}

/// Picks the next hop from per-neighbor route replies: fewest hops first,
/// ties broken by the highest sequence number, remaining ties by the lowest
/// node id.
pub fn route_discovery(
    graph: &NetworkGraph,
    source_id: u32,
    replies: &BTreeMap<u32, (u64, u64)>,
) -> Result<u32> {
    let source = graph.node(source_id)?;
    if !source.alive() {
        return Err(Error::numeric(format!("source {source_id} is dead")));
    }
    let mut best: Option<(u32, u64, u64)> = None;
    for (&id, &(hops, seq)) in replies {
        let better = match best {
            None => true,
            Some((_, bh, bs)) => hops < bh || (hops == bh && seq > bs),
        };
        if better {
            best = Some((id, hops, seq));
        }
    }
    best.map(|(id, _, _)| id)
        .ok_or_else(|| Error::numeric("route_discovery: no alive neighbors replied"))
}

/// One simulation run in the making.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub deployment: DeploymentConfig,
    pub energy: EnergyParams,
    pub behavior: BehaviorParams,
    pub attack_mix: BTreeMap<Behavior, f64>,
    /// Wall-clock milliseconds one round stands for; reporting only.
    pub ms_per_round: f64,
}

impl Simulation {
    pub fn new(
        deployment: DeploymentConfig,
        energy: EnergyParams,
        behavior: BehaviorParams,
        attack_mix: BTreeMap<Behavior, f64>,
    ) -> Simulation {
        Simulation {
            deployment,
            energy,
            behavior,
            attack_mix,
            ms_per_round: 1.0,
        }
    }

    /// Deploys a fresh network from the config seed and runs it.
    pub fn run(&self) -> Result<SimulationTrace> {
        let graph = deploy(&self.deployment, &self.energy, &self.attack_mix)?;
        self.run_on(graph)
    }

    /// Runs the round engine on an existing graph, e.g. a forced topology
    /// from [`crate::network::deploy_at`].
    pub fn run_on(&self, graph: NetworkGraph) -> Result<SimulationTrace> {
        let mut state = self.init_state(graph)?;
        let mut ledgers = Vec::new();
        while state.round < self.deployment.rounds {
            match self.step_round(&mut state)? {
                Some(ledger) => ledgers.push(ledger),
                None => break, // fully dead network ends the run early
            }
        }
        Ok(SimulationTrace {
            deployment: self.deployment.clone(),
            energy: self.energy.clone(),
            behavior: self.behavior.clone(),
            attack_mix: self.attack_mix.clone(),
            ms_per_round: self.ms_per_round,
            seed: self.deployment.seed,
            ledgers,
            graph: state.graph,
        })
    }

    /// Validates the parameters and wraps a graph into steppable state.
    pub fn init_state(&self, graph: NetworkGraph) -> Result<SimulationState> {
        self.behavior.validate()?;
        self.energy.validate()?;
        if !(self.ms_per_round > 0.0) {
            return Err(Error::config("ms_per_round must be positive"));
        }
        let flagged = vec![false; graph.sensor_count()];
        Ok(SimulationState {
            graph,
            flagged,
            round: 0,
        })
    }

    /// Executes one round against the state: relay election, TDMA grouping,
    /// flooding adverts, data transmission with route discovery, forwarding
    /// decisions, energy debiting, and death bookkeeping. Returns `None`
    /// without advancing when every sensor is already dead.
    pub fn step_round(&self, state: &mut SimulationState) -> Result<Option<RoundLedger>> {
        let graph = &mut state.graph;
        let flagged = &mut state.flagged;
        let l = graph.sensor_count();
        let q = self.deployment.packet_bits;
        let d0 = self.deployment.threshold_distance;
        let seed = self.deployment.seed;
        let round = state.round + 1;

        {
            let alive_start: Vec<usize> = (0..l).filter(|&i| graph.nodes[i].alive()).collect();
            if alive_start.is_empty() {
                return Ok(None);
            }

            let mut acc: Vec<NodeRound> = (0..l)
                .map(|i| NodeRound {
                    node_id: (i + 1) as u32,
                    data_tx: 0,
                    advert_tx: 0,
                    rx_count: 0,
                    tx_energy: 0.0,
                    rx_energy: 0.0,
                    is_relay: false,
                    relay_contact: false,
                    rank: 0,
                    send_code: 0,
                    served_fog: graph.nearest_fog(graph.nodes[i].position).fog_id,
                    flagged: flagged[i],
                    e_rem_after: 0.0,
                })
                .collect();
            let mut fog_rx = vec![0u64; graph.fogs.len()];
            let mut offered_bits = 0u64;
            let mut delivered_bits = 0u64;
            let mut dropped_packets = 0u64;
            let mut flag_pending = vec![false; l];

            // (1)-(2) average energy and relay election.
            let residuals: Vec<f64> = graph.nodes.iter().map(|n| n.e_rem).collect();
            let mut relay_rng = substream_rng(seed, STREAM_RELAY, round);
            let relays = select_relays(graph, &residuals, &self.energy, &mut relay_rng)?;
            for i in 0..l {
                acc[i].is_relay = graph.nodes[i].is_relay;
            }

            // (3) TDMA grouping: members join their nearest alive relay.
            let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for &i in &alive_start {
                let node = &graph.nodes[i];
                if node.is_relay {
                    continue;
                }
                let nearest = graph.neighbors[i]
                    .iter()
                    .filter(|&&id| {
                        let other = &graph.nodes[(id - 1) as usize];
                        other.is_relay && other.alive()
                    })
                    .min_by(|&&a, &&b| {
                        let da = distance(node.position, graph.nodes[(a - 1) as usize].position);
                        let db = distance(node.position, graph.nodes[(b - 1) as usize].position);
                        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                    });
                if let Some(&relay_id) = nearest {
                    groups.entry(relay_id).or_default().push(node.id);
                }
            }
            for members in groups.values() {
                for (slot, &member) in members.iter().enumerate() {
                    acc[(member - 1) as usize].rank = (slot + 1) as u64;
                }
            }

            let mut behavior_rng = substream_rng(seed, STREAM_BEHAVIOR, round);
            let gray_active: Vec<bool> = (0..l)
                .map(|i| {
                    if graph.nodes[i].behavior == Behavior::GrayHole {
                        behavior_rng.random::<f64>() < self.behavior.grayhole_active_duty
                    } else {
                        false
                    }
                })
                .collect();

            // (4) Flooding adverts: one broadcast per advert, billed at the
            // farthest alive neighbor, received by every alive neighbor.
            for &i in &alive_start {
                if graph.nodes[i].behavior != Behavior::Flooding || !graph.nodes[i].alive() {
                    continue;
                }
                let listeners: Vec<usize> = graph.neighbors[i]
                    .iter()
                    .map(|&id| (id - 1) as usize)
                    .filter(|&j| graph.nodes[j].alive())
                    .collect();
                if listeners.is_empty() {
                    continue;
                }
                let reach = listeners
                    .iter()
                    .map(|&j| distance(graph.nodes[i].position, graph.nodes[j].position))
                    .fold(0.0f64, f64::max);
                let emissions = flooding_emissions(&self.behavior, ADVERT_BASELINE);
                for _ in 0..emissions {
                    let cost = tx_energy(q, reach, &self.energy, d0)?;
                    if !debit(&mut graph.nodes[i].e_rem, cost, &mut acc[i].tx_energy) {
                        break;
                    }
                    acc[i].advert_tx += 1;
                    flag_pending[i] = true;
                    let rx_cost = rx_energy(q, &self.energy)?;
                    for &j in &listeners {
                        if graph.nodes[j].alive()
                            && debit(&mut graph.nodes[j].e_rem, rx_cost, &mut acc[j].rx_energy)
                        {
                            acc[j].rx_count += 1;
                        }
                    }
                }
            }

            // (5) Every alive sensor gets one data packet on its way.
            let mut inboxes: BTreeMap<u32, Vec<Message>> = BTreeMap::new();
            for &i in &alive_start {
                let node_id = (i + 1) as u32;
                let honest = graph.nodes[i].behavior == Behavior::Honest;
                if !graph.nodes[i].alive() {
                    continue; // drained earlier this round, nothing to offer
                }
                if honest {
                    offered_bits += q;
                }

                if graph.nodes[i].is_relay {
                    // A relay aggregates its own reading locally.
                    inboxes.entry(node_id).or_default().push(Message {
                        kind: MessageKind::Data,
                        src: node_id,
                        dst: graph.nearest_fog(graph.nodes[i].position).fog_id,
                        bits: q,
                        hops: 0,
                        seq: round,
                    });
                    acc[i].send_code = node_id;
                    continue;
                }

                let candidates: Vec<u32> = graph.neighbors[i]
                    .iter()
                    .copied()
                    .filter(|&id| {
                        let other = &graph.nodes[(id - 1) as usize];
                        other.is_relay && other.alive()
                    })
                    .collect();

                if !candidates.is_empty() {
                    let chosen = if candidates.len() == 1 {
                        candidates[0]
                    } else {
                        let replies: BTreeMap<u32, (u64, u64)> = candidates
                            .iter()
                            .map(|&id| {
                                let reply =
                                    if graph.nodes[(id - 1) as usize].behavior == Behavior::BlackHole {
                                        blackhole_route_reply(1, round)
                                    } else {
                                        (1, round)
                                    };
                                (id, reply)
                            })
                            .collect();
                        route_discovery(graph, node_id, &replies)?
                    };
                    let c = (chosen - 1) as usize;
                    let d = distance(graph.nodes[i].position, graph.nodes[c].position);
                    let cost = tx_energy(q, d, &self.energy, d0)?;
                    acc[i].served_fog = graph.nearest_fog(graph.nodes[c].position).fog_id;
                    if debit(&mut graph.nodes[i].e_rem, cost, &mut acc[i].tx_energy) {
                        acc[i].data_tx += 1;
                        acc[i].send_code = chosen;
                        acc[i].relay_contact = true;
                        let rx_cost = rx_energy(q, &self.energy)?;
                        if graph.nodes[c].alive()
                            && debit(&mut graph.nodes[c].e_rem, rx_cost, &mut acc[c].rx_energy)
                        {
                            acc[c].rx_count += 1;
                            acc[c].relay_contact = true;
                            inboxes.entry(chosen).or_default().push(Message {
                                kind: MessageKind::Data,
                                src: node_id,
                                dst: acc[i].served_fog,
                                bits: q,
                                hops: 1,
                                seq: round,
                            });
                        } else if honest {
                            dropped_packets += 1; // relay drained mid-reception
                        }
                    } else if honest {
                        dropped_packets += 1; // sender drained mid-transmission
                    }
                    continue;
                }

                let fog = graph.nearest_fog(graph.nodes[i].position);
                let fog_id = fog.fog_id;
                let fd = distance(graph.nodes[i].position, fog.position);
                if fd <= d0 {
                    let cost = tx_energy(q, fd, &self.energy, d0)?;
                    if debit(&mut graph.nodes[i].e_rem, cost, &mut acc[i].tx_energy) {
                        acc[i].data_tx += 1;
                        acc[i].send_code = fog_id;
                        fog_rx[(fog_id as usize) - l - 1] += 1;
                        if honest {
                            delivered_bits += q;
                        }
                    } else if honest {
                        dropped_packets += 1;
                    }
                } else if honest {
                    dropped_packets += 1; // no relay in range, fog out of reach
                }
            }

            // (6) Relays decide packet by packet, then forward survivors to
            // their nearest fog, provided it sits within the relay range.
            for (&relay_id, msgs) in &inboxes {
                let r = (relay_id - 1) as usize;
                let behavior = graph.nodes[r].behavior;
                let fog = graph.nearest_fog(graph.nodes[r].position);
                let fog_id = fog.fog_id;
                let fog_dist = distance(graph.nodes[r].position, fog.position);
                let fog_reachable = fog_dist <= self.deployment.relay_range;
                for msg in msgs {
                    let honest_origin =
                        graph.nodes[(msg.src - 1) as usize].behavior == Behavior::Honest;
                    if !fog_reachable {
                        // Stranded relay: the packet has nowhere to go.
                        if honest_origin {
                            dropped_packets += 1;
                        }
                        continue;
                    }
                    if !graph.nodes[r].alive() {
                        if honest_origin {
                            dropped_packets += 1;
                        }
                        continue;
                    }
                    let drop = match behavior {
                        Behavior::Honest | Behavior::Flooding => false,
                        Behavior::BlackHole => {
                            behavior_rng.random::<f64>() < self.behavior.blackhole_drop_prob
                        }
                        Behavior::SelectiveForwarding => {
                            behavior_rng.random::<f64>() < self.behavior.selective_drop_prob
                        }
                        Behavior::GrayHole => {
                            gray_active[r]
                                && behavior_rng.random::<f64>() < self.behavior.grayhole_drop_prob
                        }
                    };
                    if drop {
                        flag_pending[r] = true;
                        if honest_origin {
                            dropped_packets += 1;
                        }
                        continue;
                    }
                    let cost = tx_energy(msg.bits, fog_dist, &self.energy, d0)?;
                    if debit(&mut graph.nodes[r].e_rem, cost, &mut acc[r].tx_energy) {
                        acc[r].data_tx += 1;
                        fog_rx[(fog_id as usize) - l - 1] += 1;
                        if honest_origin {
                            delivered_bits += msg.bits;
                        }
                    } else if honest_origin {
                        dropped_packets += 1;
                    }
                }
            }

            // (7)-(8) Energies are already debited; record deaths and state.
            let mut deaths = Vec::new();
            for &i in &alive_start {
                if !graph.nodes[i].alive() {
                    deaths.push((i + 1) as u32);
                }
            }
            for i in 0..l {
                acc[i].e_rem_after = graph.nodes[i].e_rem;
            }
            for (fog, &rx) in graph.fogs.iter_mut().zip(&fog_rx) {
                fog.received_count = rx;
            }
            for i in 0..l {
                flagged[i] = flagged[i] || flag_pending[i];
            }

            let entries: Vec<NodeRound> =
                alive_start.iter().map(|&i| acc[i].clone()).collect();
            state.round = round;
            Ok(Some(RoundLedger {
                round_index: round,
                nodes: entries,
                fog_rx,
                offered_bits,
                delivered_bits,
                dropped_packets,
                deaths,
                relay_count: relays.len() as u64,
                alive_at_start: alive_start.len() as u64,
            }))
        }
    }
}

/// Mutable engine state between rounds: the network plus the lagged
/// identification-function flags.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub graph: NetworkGraph,
    flagged: Vec<bool>,
    /// Rounds executed so far.
    pub round: u64,
}

/// Debits `cost` from a battery into a ledger bucket. When the battery
/// cannot cover the cost it drains completely, the remainder is billed, and
/// the event fails.
fn debit(e_rem: &mut f64, cost: f64, bucket: &mut f64) -> bool {
    if *e_rem >= cost {
        *e_rem -= cost;
        *bucket += cost;
        true
    } else {
        *bucket += *e_rem;
        *e_rem = 0.0;
        false
    }
}

/// Convenience wrapper around [`Simulation::run`] with 1 ms rounds.
pub fn run_simulation(
    deployment: &DeploymentConfig,
    energy: &EnergyParams,
    attack_mix: &BTreeMap<Behavior, f64>,
    behavior: &BehaviorParams,
) -> Result<SimulationTrace> {
    Simulation::new(
        deployment.clone(),
        energy.clone(),
        behavior.clone(),
        attack_mix.clone(),
    )
    .run()
}

/// Throughput over a run, raw and with the conventional x100 scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    /// Delivered kilobits per second times 100, the reporting convention.
    pub scaled_x100: f64,
    pub raw_kbps: f64,
}

/// Delivered data over elapsed time. `elapsed_seconds` must be positive.
pub fn throughput(trace: &SimulationTrace, elapsed_seconds: f64) -> Result<Throughput> {
    if !(elapsed_seconds > 0.0) {
        return Err(Error::numeric("throughput: elapsed time must be positive"));
    }
    let kilobits = trace.total_delivered_bits() as f64 / 1000.0;
    let raw_kbps = kilobits / elapsed_seconds;
    Ok(Throughput {
        scaled_x100: raw_kbps * 100.0,
        raw_kbps,
    })
}

/// Descriptive statistics of per-node lifetimes in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeStats {
    pub node_count: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std_dev: f64,
    pub std_err: f64,
    /// 95% confidence interval for the mean: mean +- 1.96 * std_err.
    pub ci95: (f64, f64),
    pub min: f64,
    pub max: f64,
}

/// Lifetime of every node: its death round times the round duration; nodes
/// alive at the end are credited the full configured duration.
pub fn lifetime_stats(trace: &SimulationTrace) -> Result<LifetimeStats> {
    let l = trace.graph.sensor_count();
    if l == 0 || trace.ledgers.is_empty() && trace.deployment.rounds > 0 {
        return Err(Error::numeric("lifetime_stats: empty trace"));
    }
    let mut death_round: BTreeMap<u32, u64> = BTreeMap::new();
    for ledger in &trace.ledgers {
        for &id in &ledger.deaths {
            death_round.entry(id).or_insert(ledger.round_index);
        }
    }
    let lifetimes: Vec<f64> = (1..=l as u32)
        .map(|id| {
            let rounds = death_round
                .get(&id)
                .copied()
                .unwrap_or(trace.deployment.rounds);
            rounds as f64 * trace.ms_per_round
        })
        .collect();
    Ok(describe(&lifetimes))
}

fn describe(values: &[f64]) -> LifetimeStats {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_dev = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let std_err = std_dev / (n as f64).sqrt();
    let half = 1.96 * std_err;
    LifetimeStats {
        node_count: n,
        mean,
        std_dev,
        std_err,
        ci95: (mean - half, mean + half),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Per-round mean of cumulative per-node consumed energy. Monotone
/// nondecreasing because consumption only accumulates.
pub fn energy_curve(trace: &SimulationTrace) -> Vec<(u64, f64)> {
    let l = trace.graph.sensor_count() as f64;
    let mut cumulative = 0.0;
    trace
        .ledgers
        .iter()
        .map(|ledger| {
            let spent: f64 = ledger
                .nodes
                .iter()
                .map(|n| n.tx_energy + n.rx_energy)
                .sum();
            cumulative += spent;
            (ledger.round_index, cumulative / l)
        })
        .collect()
}

/// Fraction of honest-origin bits that reached a fog.
pub fn delivery_ratio(trace: &SimulationTrace) -> Result<f64> {
    let offered = trace.total_offered_bits();
    if offered == 0 {
        return Err(Error::numeric("delivery_ratio: no offered bits"));
    }
    Ok(trace.total_delivered_bits() as f64 / offered as f64)
}

// ---------------------------------------------------------------------------
// Trace CSV: one row per (round, alive node), self-contained for extraction.
// ---------------------------------------------------------------------------

pub const TRACE_HEADER: &str = "round,time,node_id,label,degree,is_relay,relay_contact,flagged,\
rank,send_code,served_fog,served_fog_rx,data_tx,advert_tx,rx_count,tx_energy,rx_energy,\
e_rem,e_init,relay_fraction";

/// Flattened per-(round, node) view of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: u64,
    pub time: f64,
    pub node_id: u32,
    pub label: Behavior,
    pub degree: u32,
    pub is_relay: bool,
    pub relay_contact: bool,
    pub flagged: bool,
    pub rank: u64,
    pub send_code: u32,
    pub served_fog: u32,
    pub served_fog_rx: u64,
    pub data_tx: u64,
    pub advert_tx: u64,
    pub rx_count: u64,
    pub tx_energy: f64,
    pub rx_energy: f64,
    pub e_rem: f64,
    pub e_init: f64,
    /// Fraction of relays among nodes alive at the round start.
    pub relay_fraction: f64,
}

pub fn trace_rows(trace: &SimulationTrace) -> Vec<TraceRow> {
    let l = trace.graph.sensor_count();
    let mut rows = Vec::new();
    for ledger in &trace.ledgers {
        let relay_fraction = if ledger.alive_at_start > 0 {
            ledger.relay_count as f64 / ledger.alive_at_start as f64
        } else {
            0.0
        };
        for entry in &ledger.nodes {
            let idx = (entry.node_id - 1) as usize;
            let node = &trace.graph.nodes[idx];
            let fog_idx = (entry.served_fog as usize) - l - 1;
            rows.push(TraceRow {
                round: ledger.round_index,
                time: ledger.round_index as f64 * trace.ms_per_round,
                node_id: entry.node_id,
                label: node.behavior,
                degree: trace.graph.neighbors[idx].len() as u32,
                is_relay: entry.is_relay,
                relay_contact: entry.relay_contact,
                flagged: entry.flagged,
                rank: entry.rank,
                send_code: entry.send_code,
                served_fog: entry.served_fog,
                served_fog_rx: ledger.fog_rx[fog_idx],
                data_tx: entry.data_tx,
                advert_tx: entry.advert_tx,
                rx_count: entry.rx_count,
                tx_energy: entry.tx_energy,
                rx_energy: entry.rx_energy,
                e_rem: entry.e_rem_after,
                e_init: node.e_init,
                relay_fraction,
            });
        }
    }
    rows
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Writes the trace as line-oriented CSV, one row per (round, alive node).
pub fn write_trace(trace: &SimulationTrace, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace_rows(trace) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.time,
            r.node_id,
            behavior_label(r.label),
            r.degree,
            flag(r.is_relay),
            flag(r.relay_contact),
            flag(r.flagged),
            r.rank,
            r.send_code,
            r.served_fog,
            r.served_fog_rx,
            r.data_tx,
            r.advert_tx,
            r.rx_count,
            r.tx_energy,
            r.rx_energy,
            r.e_rem,
            r.e_init,
            r.relay_fraction,
        )
        .expect("write to string cannot fail");
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(value: &str, line: usize, name: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::data(format!("row {line}: invalid {name} value '{value}'")))
}

fn parse_flag(value: &str, line: usize, name: &str) -> Result<bool> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::data(format!(
            "row {line}: {name} must be 0 or 1, found '{value}'"
        ))),
    }
}

/// Reads a trace CSV back into rows. Errors name the offending file line.
pub fn read_trace_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open trace {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::data("trace file is empty, missing header")),
    };
    if header.trim_end() != TRACE_HEADER {
        return Err(Error::data(format!(
            "trace header mismatch: expected '{TRACE_HEADER}'"
        )));
    }
    let expected = TRACE_HEADER.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(Error::data(format!(
                "row {line_no}: expected {expected} fields, found {}",
                fields.len()
            )));
        }
        let label = label_behavior(fields[3])
            .ok_or_else(|| Error::data(format!("row {line_no}: unknown class '{}'", fields[3])))?;
        rows.push(TraceRow {
            round: parse_field(fields[0], line_no, "round")?,
            time: parse_field(fields[1], line_no, "time")?,
            node_id: parse_field(fields[2], line_no, "node_id")?,
            label,
            degree: parse_field(fields[4], line_no, "degree")?,
            is_relay: parse_flag(fields[5], line_no, "is_relay")?,
            relay_contact: parse_flag(fields[6], line_no, "relay_contact")?,
            flagged: parse_flag(fields[7], line_no, "flagged")?,
            rank: parse_field(fields[8], line_no, "rank")?,
            send_code: parse_field(fields[9], line_no, "send_code")?,
            served_fog: parse_field(fields[10], line_no, "served_fog")?,
            served_fog_rx: parse_field(fields[11], line_no, "served_fog_rx")?,
            data_tx: parse_field(fields[12], line_no, "data_tx")?,
            advert_tx: parse_field(fields[13], line_no, "advert_tx")?,
            rx_count: parse_field(fields[14], line_no, "rx_count")?,
            tx_energy: parse_field(fields[15], line_no, "tx_energy")?,
            rx_energy: parse_field(fields[16], line_no, "rx_energy")?,
            e_rem: parse_field(fields[17], line_no, "e_rem")?,
            e_init: parse_field(fields[18], line_no, "e_init")?,
            relay_fraction: parse_field(fields[19], line_no, "relay_fraction")?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::deploy_at;
    use std::collections::BTreeMap;

    fn no_mix() -> BTreeMap<Behavior, f64> {
        BTreeMap::new()
    }

    fn base_config() -> DeploymentConfig {
        DeploymentConfig::default()
    }

    fn generous_energy() -> EnergyParams {
        EnergyParams {
            e0: 1e6,
            ..EnergyParams::default()
        }
    }

    #[test]
    fn route_discovery_prefers_fewest_hops() {
        let graph = deploy_at(
            &base_config(),
            &EnergyParams::default(),
            &[
                ((0.0, 100.0), Behavior::Honest),
                ((10.0, 100.0), Behavior::Honest),
                ((20.0, 100.0), Behavior::Honest),
            ],
        )
        .unwrap();
        let mut replies = BTreeMap::new();
        replies.insert(2, (2, 5));
        replies.insert(3, (3, 9));
        assert_eq!(route_discovery(&graph, 1, &replies).unwrap(), 2);
    }

    #[test]
    fn route_discovery_breaks_hop_ties_by_sequence() {
        let graph = deploy_at(
            &base_config(),
            &EnergyParams::default(),
            &[
                ((0.0, 100.0), Behavior::Honest),
                ((10.0, 100.0), Behavior::Honest),
                ((20.0, 100.0), Behavior::Honest),
            ],
        )
        .unwrap();
        let mut replies = BTreeMap::new();
        replies.insert(2, (1, 5));
        replies.insert(3, (1, 9));
        assert_eq!(route_discovery(&graph, 1, &replies).unwrap(), 3);
        replies.insert(3, (1, 5));
        assert_eq!(route_discovery(&graph, 1, &replies).unwrap(), 2);
        assert!(route_discovery(&graph, 1, &BTreeMap::new()).is_err());
    }

    #[test]
    fn route_discovery_blackhole_lie_dominates() {
        let graph = deploy_at(
            &base_config(),
            &EnergyParams::default(),
            &[
                ((0.0, 100.0), Behavior::Honest),
                ((10.0, 100.0), Behavior::Honest),
                ((20.0, 100.0), Behavior::BlackHole),
            ],
        )
        .unwrap();
        let mut replies = BTreeMap::new();
        replies.insert(2, (3, 5));
        replies.insert(3, blackhole_route_reply(3, 9));
        assert_eq!(route_discovery(&graph, 1, &replies).unwrap(), 3);
    }

    fn single_node_sim(rounds: u64) -> Simulation {
        let config = DeploymentConfig {
            rounds,
            fog_count: 1,
            area_width: 100.0,
            area_height: 100.0,
            ..base_config()
        };
        Simulation::new(
            config,
            generous_energy(),
            BehaviorParams::default(),
            no_mix(),
        )
    }

    #[test]
    fn lone_honest_node_in_fog_range_delivers_everything() {
        let sim = single_node_sim(5);
        // Fog sits at (50, 0); the node 50 m above it.
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let trace = sim.run_on(graph).unwrap();
        for ledger in &trace.ledgers {
            assert_eq!(ledger.delivered_bits, sim.deployment.packet_bits);
            assert_eq!(ledger.dropped_packets, 0);
        }
        assert_eq!(delivery_ratio(&trace).unwrap(), 1.0);
    }

    #[test]
    fn lone_sender_pays_exactly_one_transmission() {
        let sim = single_node_sim(1);
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let trace = sim.run_on(graph).unwrap();
        let entry = &trace.ledgers[0].nodes[0];
        let expected = tx_energy(4000, 50.0, &sim.energy, sim.deployment.threshold_distance)
            .unwrap();
        assert!((expected - 3.0e-4).abs() / 3.0e-4 < 1e-12);
        assert_eq!(entry.tx_energy, expected);
        assert_eq!(entry.rx_energy, 0.0);
    }

    #[test]
    fn blackhole_on_the_only_path_starves_delivery() {
        // Member -> black hole -> fog; the member can reach the fog neither
        // directly (beyond d0) nor as a relay (beyond the relay range).
        let config = DeploymentConfig {
            rounds: 200,
            fog_count: 1,
            area_width: 100.0,
            area_height: 400.0,
            ..base_config()
        };
        let sim = Simulation::new(
            config,
            generous_energy(),
            BehaviorParams::default(),
            no_mix(),
        );
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[
                ((50.0, 280.0), Behavior::Honest),
                ((50.0, 210.0), Behavior::BlackHole),
            ],
        )
        .unwrap();
        let trace = sim.run_on(graph).unwrap();
        assert!(trace.total_offered_bits() > 0);
        assert_eq!(trace.total_delivered_bits(), 0);
        assert_eq!(delivery_ratio(&trace).unwrap(), 0.0);
    }

    #[test]
    fn zero_rounds_echo_initial_state() {
        let sim = single_node_sim(0);
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let trace = sim.run_on(graph.clone()).unwrap();
        assert!(trace.ledgers.is_empty());
        assert_eq!(trace.graph, graph);
    }

    #[test]
    fn all_honest_cluster_delivers_constant_bits_per_round() {
        let config = DeploymentConfig {
            sensor_count: 12,
            rounds: 30,
            fog_count: 1,
            area_width: 100.0,
            area_height: 80.0,
            seed: 5,
            ..base_config()
        };
        // Every node within d0 of the single fog at (50, 0).
        let sim = Simulation::new(
            config,
            generous_energy(),
            BehaviorParams::default(),
            no_mix(),
        );
        let placements: Vec<_> = (0..12)
            .map(|i| {
                (
                    (20.0 + 5.0 * i as f64, 10.0 + 3.0 * (i % 4) as f64),
                    Behavior::Honest,
                )
            })
            .collect();
        let trace = sim.run_on(deploy_at(&sim.deployment, &sim.energy, &placements).unwrap())
            .unwrap();
        let expected = 12 * sim.deployment.packet_bits;
        for ledger in &trace.ledgers {
            assert_eq!(ledger.delivered_bits, expected);
        }
    }

    #[test]
    fn manual_stepping_matches_a_batch_run() {
        let config = DeploymentConfig {
            sensor_count: 30,
            rounds: 60,
            seed: 12,
            ..base_config()
        };
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::SelectiveForwarding, 0.2);
        let energy = EnergyParams {
            e0: 0.01,
            ..EnergyParams::default()
        };
        let sim = Simulation::new(
            config.clone(),
            energy.clone(),
            BehaviorParams::default(),
            mix.clone(),
        );
        let batch = sim.run().unwrap();

        let graph = crate::network::deploy(&config, &energy, &mix).unwrap();
        let mut state = sim.init_state(graph).unwrap();
        let mut ledgers = Vec::new();
        while state.round < config.rounds {
            match sim.step_round(&mut state).unwrap() {
                Some(ledger) => ledgers.push(ledger),
                None => break,
            }
        }
        assert_eq!(batch.ledgers, ledgers);
        assert_eq!(batch.graph, state.graph);

        // A fully dead network refuses to advance.
        if state.graph.nodes.iter().all(|n| !n.alive()) {
            assert_eq!(sim.step_round(&mut state).unwrap(), None);
        }
    }

    #[test]
    fn repeated_seed_gives_bit_identical_traces() {
        let config = DeploymentConfig {
            sensor_count: 40,
            rounds: 50,
            seed: 99,
            ..base_config()
        };
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::Flooding, 0.1);
        mix.insert(Behavior::BlackHole, 0.1);
        let energy = EnergyParams {
            e0: 0.05,
            ..EnergyParams::default()
        };
        let a = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();
        let b = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();
        assert_eq!(a, b);

        let dir = std::env::temp_dir().join("fogshield_sim_determinism");
        std::fs::create_dir_all(&dir).unwrap();
        let pa = dir.join("a.csv");
        let pb = dir.join("b.csv");
        write_trace(&a, &pa).unwrap();
        write_trace(&b, &pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn energy_is_conserved_between_ledger_and_batteries() {
        let config = DeploymentConfig {
            sensor_count: 60,
            rounds: 300,
            seed: 7,
            ..base_config()
        };
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::Flooding, 0.1);
        mix.insert(Behavior::SelectiveForwarding, 0.1);
        let energy = EnergyParams {
            e0: 0.02,
            ..EnergyParams::default()
        };
        let trace = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();

        let mut billed = vec![0.0f64; trace.graph.sensor_count()];
        for ledger in &trace.ledgers {
            for entry in &ledger.nodes {
                billed[(entry.node_id - 1) as usize] += entry.tx_energy + entry.rx_energy;
            }
        }
        for (node, &b) in trace.graph.nodes.iter().zip(&billed) {
            let consumed = node.e_init - node.e_rem;
            let scale = consumed.abs().max(1e-12);
            assert!(
                (consumed - b).abs() / scale < 1e-9,
                "node {}: consumed {consumed} vs billed {b}",
                node.id
            );
        }
    }

    #[test]
    fn dead_nodes_never_act_again() {
        let config = DeploymentConfig {
            sensor_count: 50,
            rounds: 400,
            seed: 21,
            ..base_config()
        };
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::Flooding, 0.2);
        let energy = EnergyParams {
            e0: 0.01,
            ..EnergyParams::default()
        };
        let trace = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();
        let mut dead_since: BTreeMap<u32, u64> = BTreeMap::new();
        for ledger in &trace.ledgers {
            for entry in &ledger.nodes {
                if let Some(&since) = dead_since.get(&entry.node_id) {
                    panic!(
                        "node {} died in round {since} but appears in round {}",
                        entry.node_id, ledger.round_index
                    );
                }
            }
            for &id in &ledger.deaths {
                dead_since.insert(id, ledger.round_index);
            }
        }
        assert!(!dead_since.is_empty(), "expected deaths in this scenario");

        // Residual energies never increase across rounds.
        let mut last: BTreeMap<u32, f64> = BTreeMap::new();
        for ledger in &trace.ledgers {
            for entry in &ledger.nodes {
                if let Some(&prev) = last.get(&entry.node_id) {
                    assert!(entry.e_rem_after <= prev + 1e-15);
                }
                last.insert(entry.node_id, entry.e_rem_after);
            }
        }
    }

    #[test]
    fn honest_run_dominates_attacked_run_on_delivered_prefixes() {
        let config = DeploymentConfig {
            sensor_count: 80,
            rounds: 250,
            seed: 13,
            ..base_config()
        };
        let energy = EnergyParams {
            e0: 0.05,
            ..EnergyParams::default()
        };
        let honest = run_simulation(&config, &energy, &no_mix(), &BehaviorParams::default())
            .unwrap();
        let mut mix = BTreeMap::new();
        for b in Behavior::ATTACKS {
            mix.insert(b, 0.1);
        }
        let attacked = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();

        let mut honest_cum = 0u64;
        let mut attacked_cum = 0u64;
        let rounds = honest.ledgers.len().max(attacked.ledgers.len());
        for r in 0..rounds {
            honest_cum += honest.ledgers.get(r).map_or(0, |l| l.delivered_bits);
            attacked_cum += attacked.ledgers.get(r).map_or(0, |l| l.delivered_bits);
            assert!(
                honest_cum >= attacked_cum,
                "round {}: honest {honest_cum} < attacked {attacked_cum}",
                r + 1
            );
        }
    }

    #[test]
    fn throughput_hand_values() {
        let sim = single_node_sim(0);
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let empty = sim.run_on(graph).unwrap();
        let t = throughput(&empty, 10.0).unwrap();
        assert_eq!(t.raw_kbps, 0.0);
        assert_eq!(t.scaled_x100, 0.0);
        assert!(throughput(&empty, 0.0).is_err());

        // 250 rounds of 4000 bits = 1000 kb over 10 s.
        let sim = single_node_sim(250);
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let trace = sim.run_on(graph).unwrap();
        assert_eq!(trace.total_delivered_bits(), 1_000_000);
        let t = throughput(&trace, 10.0).unwrap();
        assert!((t.raw_kbps - 100.0).abs() < 1e-9);
        assert!((t.scaled_x100 - 10_000.0).abs() < 1e-6);
        let doubled = throughput(&trace, 5.0).unwrap();
        assert!((doubled.raw_kbps - 200.0).abs() < 1e-9);
    }

    #[test]
    fn lifetime_stats_of_survivors_degenerate_at_mean() {
        let sim = single_node_sim(40);
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let trace = sim.run_on(graph).unwrap();
        let stats = lifetime_stats(&trace).unwrap();
        assert_eq!(stats.mean, 40.0);
        assert_eq!(stats.std_dev, 0.0);
        assert_eq!(stats.ci95, (40.0, 40.0));
    }

    #[test]
    fn lifetime_descriptive_statistics_hand_check() {
        let stats = describe(&[250.0, 1450.0]);
        assert_eq!(stats.mean, 850.0);
        assert_eq!(stats.min, 250.0);
        assert_eq!(stats.max, 1450.0);
        // Brute-force sample standard deviation and standard error.
        let sd = (((250.0f64 - 850.0).powi(2) + (1450.0f64 - 850.0).powi(2)) / 1.0).sqrt();
        assert!((stats.std_dev - sd).abs() < 1e-9);
        assert!((stats.std_err - sd / 2.0f64.sqrt()).abs() < 1e-9);
        assert!((stats.ci95.0 - (850.0 - 1.96 * stats.std_err)).abs() < 1e-9);
    }

    #[test]
    fn energy_curve_is_monotone_and_zero_without_traffic() {
        let config = DeploymentConfig {
            sensor_count: 30,
            rounds: 120,
            seed: 2,
            ..base_config()
        };
        let energy = EnergyParams {
            e0: 0.05,
            ..EnergyParams::default()
        };
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::Flooding, 0.1);
        let trace = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();
        let curve = energy_curve(&trace);
        for pair in curve.windows(2) {
            assert!(pair[1].1 >= pair[0].1);
        }

        let sim = single_node_sim(0);
        let graph = deploy_at(
            &sim.deployment,
            &sim.energy,
            &[((50.0, 50.0), Behavior::Honest)],
        )
        .unwrap();
        let idle = sim.run_on(graph).unwrap();
        assert!(energy_curve(&idle).is_empty());
    }

    #[test]
    fn flooding_curve_dominates_honest_curve_on_paired_seeds() {
        let config = DeploymentConfig {
            sensor_count: 60,
            rounds: 150,
            seed: 31,
            ..base_config()
        };
        let energy = EnergyParams {
            e0: 0.05,
            ..EnergyParams::default()
        };
        let honest = run_simulation(&config, &energy, &no_mix(), &BehaviorParams::default())
            .unwrap();
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::Flooding, 0.1);
        let flooded = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();
        let hc = energy_curve(&honest);
        let fc = energy_curve(&flooded);
        for (h, f) in hc.iter().zip(&fc) {
            assert!(
                f.1 >= h.1 - 1e-12,
                "round {}: flooding {} < honest {}",
                h.0,
                f.1,
                h.1
            );
        }
    }

    #[test]
    fn trace_rows_round_trip_through_csv() {
        let config = DeploymentConfig {
            sensor_count: 25,
            rounds: 40,
            seed: 77,
            ..base_config()
        };
        let mut mix = BTreeMap::new();
        mix.insert(Behavior::GrayHole, 0.2);
        let energy = EnergyParams {
            e0: 0.03,
            ..EnergyParams::default()
        };
        let trace = run_simulation(&config, &energy, &mix, &BehaviorParams::default()).unwrap();
        let rows = trace_rows(&trace);
        let dir = std::env::temp_dir().join("fogshield_trace_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        write_trace(&trace, &path).unwrap();
        let back = read_trace_rows(&path).unwrap();
        assert_eq!(rows, back);
    }
}
