//! Per-round action policies of the four DoS attacker types, as pure
//! decision functions over explicit RNG state.

use rand::Rng;

use crate::network::Behavior;

/// Tunable attack intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorParams {
    /// Advert messages per round relative to the honest baseline.
    pub flood_rate_multiplier: f64,
    /// Per-packet drop probability of a black hole (total by default).
    pub blackhole_drop_prob: f64,
    /// Constant per-packet drop probability of a selective forwarder.
    pub selective_drop_prob: f64,
    /// Drop probability of a gray hole while it misbehaves.
    pub grayhole_drop_prob: f64,
    /// Chance per round that a gray hole enters its misbehaving phase.
    pub grayhole_active_duty: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        BehaviorParams {
            flood_rate_multiplier: 10.0,
            blackhole_drop_prob: 1.0,
            selective_drop_prob: 0.5,
            grayhole_drop_prob: 0.8,
            grayhole_active_duty: 0.5,
        }
    }
}

impl BehaviorParams {
    pub fn validate(&self) -> crate::Result<()> {
        if self.flood_rate_multiplier < 1.0 {
            return Err(crate::Error::config("flood_rate_multiplier must be >= 1"));
        }
        for (name, p) in [
            ("blackhole_drop_prob", self.blackhole_drop_prob),
            ("selective_drop_prob", self.selective_drop_prob),
            ("grayhole_drop_prob", self.grayhole_drop_prob),
            ("grayhole_active_duty", self.grayhole_active_duty),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(crate::Error::config(format!("{name} must lie in [0,1]")));
            }
        }
        Ok(())
    }
}

/// Per-packet forwarding decision at a relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardDecision {
    Forward,
    Drop,
}

/// Advert messages a flooder emits this round: `ceil(multiplier * baseline)`.
/// Honest nodes never invoke this policy; they stay at the baseline.
pub fn flooding_emissions(params: &BehaviorParams, honest_baseline: u64) -> u64 {
    (params.flood_rate_multiplier * honest_baseline as f64).ceil() as u64
}

/// The route reply a black hole advertises: one hop and a sequence number
/// higher than anything seen, regardless of the true topology.
pub fn blackhole_route_reply(_true_hops: u64, max_seq_seen: u64) -> (u64, u64) {
    (1, max_seq_seen + 1)
}

/// Whether a node forwards or drops one relayed packet.
///
/// Honest and flooding nodes always forward (a flooder's malice is advert
/// emission, not dropping). A gray hole first draws its duty phase, then its
/// drop; the round engine instead fixes the duty phase once per round.
pub fn forward_decision(
    behavior: Behavior,
    params: &BehaviorParams,
    rng: &mut impl Rng,
) -> ForwardDecision {
    let drop = match behavior {
        Behavior::Honest | Behavior::Flooding => false,
        Behavior::BlackHole => rng.random::<f64>() < params.blackhole_drop_prob,
        Behavior::SelectiveForwarding => rng.random::<f64>() < params.selective_drop_prob,
        Behavior::GrayHole => {
            let active = rng.random::<f64>() < params.grayhole_active_duty;
            active && rng.random::<f64>() < params.grayhole_drop_prob
        }
    };
    if drop {
        ForwardDecision::Drop
    } else {
        ForwardDecision::Forward
    }
}

/// Attack class `A_y` of a behavior.
pub fn behavior_label(behavior: Behavior) -> &'static str {
    match behavior {
        Behavior::Honest => "Normal",
        Behavior::Flooding => "Flooding",
        Behavior::BlackHole => "Black hole",
        Behavior::SelectiveForwarding => "Selective Forwarding",
        Behavior::GrayHole => "Gray hole",
    }
}

/// Inverse of [`behavior_label`].
pub fn label_behavior(label: &str) -> Option<Behavior> {
    match label {
        "Normal" => Some(Behavior::Honest),
        "Flooding" => Some(Behavior::Flooding),
        "Black hole" => Some(Behavior::BlackHole),
        "Selective Forwarding" => Some(Behavior::SelectiveForwarding),
        "Gray hole" => Some(Behavior::GrayHole),
        _ => None,
    }
}
