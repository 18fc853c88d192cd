//! Stochastic rate processes for background, client, and bot traffic.
//!
//! Every flow is a fluid rate sampled per tick. Stochastic models draw a
//! packet rate and packet size uniformly within their bounds, redrawn once
//! per epoch (1 s epochs give per-tick i.i.d. draws; longer epochs hold a
//! level, which is what makes background bursty at the 5 s polling cadence).
//! Draws are stateless functions of (flow seed, epoch index), so a flow's
//! trajectory is independent of evaluation order.

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::topology::{HostId, Role, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficKind {
    Telnet,
    Dns,
    Csa,
    Voip,
    Quake3,
    Bot,
    Background1,
    Background2,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Tcp,
    Udp,
    TcpUdp,
}

/// Bounded packet-size/packet-rate process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficModel {
    pub kind: TrafficKind,
    /// bytes
    pub pkt_size_min: f64,
    pub pkt_size_max: f64,
    /// pkt/s
    pub rate_min: f64,
    pub rate_max: f64,
    pub protocol: Protocol,
    /// s
    pub duration: f64,
    /// Level-hold length in seconds; 1.0 redraws every tick.
    pub epoch_s: f64,
    /// Probability the flow is on during an epoch; 1.0 means always on.
    pub on_prob: f64,
}

impl TrafficModel {
    fn new(
        kind: TrafficKind,
        pkt_size: (f64, f64),
        rate: (f64, f64),
        protocol: Protocol,
        duration: f64,
    ) -> Self {
        Self {
            kind,
            pkt_size_min: pkt_size.0,
            pkt_size_max: pkt_size.1,
            rate_min: rate.0,
            rate_max: rate.1,
            protocol,
            duration,
            epoch_s: 1.0,
            on_prob: 1.0,
        }
    }

    // The five application models have no published packet parameters; these
    // defaults hit the documented mean rates (telnet 2 kbps, dns 1 kbps,
    // csa 40 kbps, voip 30 kbps, quake3 50 kbps) and are config-overridable.
    pub fn telnet() -> Self {
        Self::new(TrafficKind::Telnet, (60.0, 200.0), (1.0, 3.0), Protocol::Tcp, 3600.0)
    }
    pub fn dns() -> Self {
        Self::new(TrafficKind::Dns, (60.0, 190.0), (0.5, 1.5), Protocol::TcpUdp, 3600.0)
    }
    pub fn csa() -> Self {
        Self::new(TrafficKind::Csa, (80.0, 170.0), (30.0, 50.0), Protocol::Udp, 3600.0)
    }
    pub fn voip() -> Self {
        Self::new(TrafficKind::Voip, (100.0, 150.0), (20.0, 40.0), Protocol::Udp, 3600.0)
    }
    pub fn quake3() -> Self {
        Self::new(TrafficKind::Quake3, (50.0, 200.0), (40.0, 60.0), Protocol::Udp, 3600.0)
    }
    pub fn bot() -> Self {
        Self::new(TrafficKind::Bot, (100.0, 2000.0), (15.0, 200.0), Protocol::Tcp, 300.0)
    }
    pub fn background1() -> Self {
        Self::new(TrafficKind::Background1, (50.0, 1000.0), (1.0, 80.0), Protocol::Tcp, 3600.0)
    }
    pub fn background2() -> Self {
        Self::new(TrafficKind::Background2, (10.0, 2500.0), (1.0, 80.0), Protocol::Tcp, 3600.0)
    }

    /// Fixed-rate process: 1000 B packets at exactly `rate_bps`.
    pub fn constant(rate_bps: f64) -> Self {
        let pps = rate_bps / 8000.0;
        Self::new(TrafficKind::Constant, (1000.0, 1000.0), (pps, pps), Protocol::Tcp, 3600.0)
    }

    /// Scale the packet-rate bounds by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.rate_min *= factor;
        self.rate_max *= factor;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_epoch(mut self, epoch_s: f64, on_prob: f64) -> Self {
        self.epoch_s = epoch_s.max(1e-9);
        self.on_prob = on_prob;
        self
    }

    /// Instantaneous rate ceiling in bits/s.
    pub fn max_bps(&self) -> f64 {
        self.rate_max * self.pkt_size_max * 8.0
    }

    /// Long-run mean of the stochastic draw in bits/s.
    pub fn expected_mean_bps(&self) -> f64 {
        self.on_prob
            * (self.rate_min + self.rate_max)
            * 0.5
            * (self.pkt_size_min + self.pkt_size_max)
            * 0.5
            * 8.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    None,
    Linear,
}

/// Deterministic intensity profile overriding the stochastic draw.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RampProfile {
    pub shape: RampShape,
    /// bits/s
    pub r_start: f64,
    pub r_end: f64,
    /// s
    pub ramp_duration: f64,
}

impl RampProfile {
    pub fn none() -> Self {
        Self {
            shape: RampShape::None,
            r_start: 0.0,
            r_end: 0.0,
            ramp_duration: 0.0,
        }
    }

    pub fn linear(r_start: f64, r_end: f64, ramp_duration: f64) -> Self {
        Self {
            shape: RampShape::Linear,
            r_start,
            r_end,
            ramp_duration,
        }
    }

    /// Constant deterministic rate, expressed as a zero-length-equivalent ramp.
    pub fn flat(rate: f64) -> Self {
        Self::linear(rate, rate, 1.0)
    }
}

/// Origin class of a flow, used for ground-truth labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    Background,
    FlashCrowd,
    Attack,
}

/// One source-to-destination rate process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSpec {
    pub src: HostId,
    pub dst: HostId,
    pub model: TrafficModel,
    /// s from scenario start
    pub start_offset: f64,
    pub ramp: RampProfile,
    pub seed: u64,
    pub class: FlowClass,
}

const TAG_PHASE: u64 = 0x70;
const TAG_ON: u64 = 0x71;
const TAG_RATE: u64 = 0x72;
const TAG_SIZE: u64 = 0x73;

impl FlowSpec {
    /// Offered rate in bits/s at time `t`, deterministic in (seed, t).
    ///
    /// Zero outside [start_offset, start_offset + duration). A linear ramp
    /// interpolates r_start to r_end over ramp_duration and holds r_end
    /// afterwards; without a ramp the model draws a level per epoch. Either
    /// way the rate is capped at the model ceiling.
    pub fn rate_at(&self, t: f64) -> f64 {
        let tau = t - self.start_offset;
        if tau < 0.0 || tau >= self.model.duration {
            return 0.0;
        }
        match self.ramp.shape {
            RampShape::Linear => {
                let r = if tau < self.ramp.ramp_duration {
                    let frac = tau / self.ramp.ramp_duration;
                    self.ramp.r_start + frac * (self.ramp.r_end - self.ramp.r_start)
                } else {
                    self.ramp.r_end
                };
                r.min(self.model.max_bps())
            }
            RampShape::None => {
                let epoch_len = self.model.epoch_s;
                let phase = rng::unit(self.seed, &[TAG_PHASE]) * epoch_len;
                let epoch = ((t + phase) / epoch_len).floor() as i64 as u64;
                if self.model.on_prob < 1.0
                    && rng::unit(self.seed, &[TAG_ON, epoch]) >= self.model.on_prob
                {
                    return 0.0;
                }
                let pps = rng::uniform(
                    self.seed,
                    &[TAG_RATE, epoch],
                    self.model.rate_min,
                    self.model.rate_max,
                );
                let size = rng::uniform(
                    self.seed,
                    &[TAG_SIZE, epoch],
                    self.model.pkt_size_min,
                    self.model.pkt_size_max,
                );
                pps * size * 8.0
            }
        }
    }

    /// Long-run mean of the offered rate while the flow is active.
    pub fn expected_mean_bps(&self) -> f64 {
        match self.ramp.shape {
            RampShape::Linear => 0.5 * (self.ramp.r_start + self.ramp.r_end),
            RampShape::None => self.model.expected_mean_bps(),
        }
    }
}

/// Background assembly knobs. Scales multiply packet-rate bounds; the burst
/// envelope (epoch length and on-probability) shapes the variance seen at
/// the 5 s polling cadence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub enabled: bool,
    /// Scale on the five application models emitted by every bot and client.
    pub app_scale: f64,
    /// Scale on the Background1/Background2 models emitted by every host.
    pub background_scale: f64,
    /// Epoch and on-probability for host background flows.
    pub epoch_s: f64,
    pub on_prob: f64,
    /// Leaf/injection generator flows: uniform level in bits/s per decoy flow.
    pub generator_rate_min_bps: f64,
    pub generator_rate_max_bps: f64,
    pub generator_epoch_s: f64,
    pub generator_on_prob: f64,
    /// Extra scale on the injection generator's flows relative to the leaf
    /// generators (1 = same band).
    pub injection_scale: f64,
    /// Per-run multiplicative jitter on all background levels, drawn once per
    /// seed from [1-jitter, 1+jitter].
    pub run_level_jitter: f64,
    /// Steady aggregate from the clients toward the injection generator,
    /// split evenly across clients. It crosses the target link but exits on
    /// the injection spur, so it pre-loads the target without touching any
    /// decoy edge. 0 disables it.
    pub filler_total_bps: f64,
    /// Half-width of each filler flow's uniform rate band in bits/s.
    pub filler_jitter_bps: f64,
    /// Legitimate surge events per run (flows from several clients converging
    /// on one decoy), labelled normal.
    pub flash_crowds: u32,
    /// Total rate of one surge in bits/s (drawn in [0.5x, 1.2x] of this).
    pub flash_crowd_rate_bps: f64,
    pub flash_crowd_duration_s: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            app_scale: 0.25,
            background_scale: 0.05,
            epoch_s: 60.0,
            on_prob: 0.35,
            generator_rate_min_bps: 2_000.0,
            generator_rate_max_bps: 30_000.0,
            generator_epoch_s: 60.0,
            generator_on_prob: 0.7,
            injection_scale: 1.0,
            run_level_jitter: 0.2,
            filler_total_bps: 0.0,
            filler_jitter_bps: 5_000.0,
            flash_crowds: 0,
            flash_crowd_rate_bps: 1.2e6,
            flash_crowd_duration_s: 180.0,
        }
    }
}

const TAG_SUITE: u64 = 0x10;
const TAG_GEN: u64 = 0x11;
const TAG_DEST: u64 = 0x12;
const TAG_JITTER: u64 = 0x13;
const TAG_FLASH: u64 = 0x14;
const TAG_FILLER: u64 = 0x15;

/// Assemble the background suite: every bot and client emits the five
/// application models plus Background1/Background2 toward seeded
/// round-robin decoys, and each leaf generator (plus the injection
/// generator) emits one flow per reachable decoy.
pub fn make_background_suite(
    topology: &Topology,
    config: &TrafficConfig,
    horizon_s: f64,
    seed: u64,
) -> Vec<FlowSpec> {
    let mut flows = Vec::new();
    let decoys = topology.hosts_with_role(Role::Decoy);
    let jitter = if config.run_level_jitter > 0.0 {
        let u = rng::unit(seed, &[TAG_JITTER]);
        1.0 + config.run_level_jitter * (2.0 * u - 1.0)
    } else {
        1.0
    };

    if config.enabled {
        let models: Vec<TrafficModel> = vec![
            TrafficModel::telnet().scaled(config.app_scale * jitter),
            TrafficModel::dns().scaled(config.app_scale * jitter),
            TrafficModel::csa().scaled(config.app_scale * jitter),
            TrafficModel::voip().scaled(config.app_scale * jitter),
            TrafficModel::quake3().scaled(config.app_scale * jitter),
            TrafficModel::background1()
                .scaled(config.background_scale * jitter)
                .with_epoch(config.epoch_s, config.on_prob),
            TrafficModel::background2()
                .scaled(config.background_scale * jitter)
                .with_epoch(config.epoch_s, config.on_prob),
        ];
        // Seeded destination rotation keeps per-decoy load even while varying
        // which decoy carries which model across runs.
        let rotation = rng::derive(seed, &[TAG_DEST]) as usize;
        let mut flow_idx = 0usize;
        let sources: Vec<HostId> = topology
            .hosts_with_role(Role::Bot)
            .into_iter()
            .chain(topology.hosts_with_role(Role::Client))
            .collect();
        for src in sources {
            for (m, model) in models.iter().enumerate() {
                let dst = decoys[(rotation + flow_idx) % decoys.len()];
                flows.push(FlowSpec {
                    src,
                    dst,
                    model: model.clone().with_duration(horizon_s),
                    start_offset: 0.0,
                    ramp: RampProfile::none(),
                    seed: rng::derive(seed, &[TAG_SUITE, src.0 as u64, m as u64]),
                    class: FlowClass::Background,
                });
                flow_idx += 1;
            }
        }
    }

    // Generator flows level up edge-link background: each generator sends to
    // every decoy on its own leaf switch; the injection generator reaches one
    // decoy per sub-tree through the root.
    let gen_model = |rate_lo: f64, rate_hi: f64| {
        TrafficModel {
            kind: TrafficKind::Background2,
            pkt_size_min: 1000.0,
            pkt_size_max: 1000.0,
            rate_min: rate_lo * jitter / 8000.0,
            rate_max: rate_hi * jitter / 8000.0,
            protocol: Protocol::Tcp,
            duration: horizon_s,
            epoch_s: config.generator_epoch_s,
            on_prob: config.generator_on_prob,
        }
    };
    for g in topology.hosts_with_role(Role::BgGenerator) {
        let gen = topology.host(g).expect("generator exists");
        let injection = gen.attach_switch == 6;
        let local: Vec<HostId> = if injection {
            // Injection generator: first decoy of each sub-tree.
            decoys.iter().copied().step_by(10).collect()
        } else {
            decoys
                .iter()
                .copied()
                .filter(|d| topology.host(*d).unwrap().attach_switch == gen.attach_switch)
                .collect()
        };
        let scale = if injection { config.injection_scale } else { 1.0 };
        for (k, dst) in local.into_iter().enumerate() {
            flows.push(FlowSpec {
                src: g,
                dst,
                model: gen_model(
                    config.generator_rate_min_bps * scale,
                    config.generator_rate_max_bps * scale,
                ),
                start_offset: 0.0,
                ramp: RampProfile::none(),
                seed: rng::derive(seed, &[TAG_GEN, g.0 as u64, k as u64]),
                class: FlowClass::Background,
            });
        }
    }

    // Filler: a steady client-side aggregate that rides the target link and
    // leaves on the injection spur, raising the target's floor utilization
    // without adding load on monitored decoy edges.
    if config.filler_total_bps > 0.0 {
        let clients = topology.hosts_with_role(Role::Client);
        let sink = topology
            .hosts_with_role(Role::BgGenerator)
            .into_iter()
            .find(|g| topology.host(*g).unwrap().attach_switch == 6);
        if let (Some(sink), false) = (sink, clients.is_empty()) {
            let per_flow = config.filler_total_bps / clients.len() as f64;
            let lo = (per_flow - config.filler_jitter_bps).max(0.0);
            let hi = per_flow + config.filler_jitter_bps;
            for (k, src) in clients.into_iter().enumerate() {
                flows.push(FlowSpec {
                    src,
                    dst: sink,
                    model: TrafficModel {
                        kind: TrafficKind::Constant,
                        pkt_size_min: 1000.0,
                        pkt_size_max: 1000.0,
                        rate_min: lo / 8000.0,
                        rate_max: hi / 8000.0,
                        protocol: Protocol::Tcp,
                        duration: horizon_s,
                        epoch_s: 1.0,
                        on_prob: 1.0,
                    },
                    start_offset: 0.0,
                    ramp: RampProfile::none(),
                    seed: rng::derive(seed, &[TAG_FILLER, k as u64]),
                    class: FlowClass::Background,
                });
            }
        }
    }

    flows
}

/// Legitimate surge events: several clients converge on one decoy for a few
/// minutes. Start times are drawn inside the given windows, one window per
/// event round-robin.
pub fn make_flash_crowds(
    topology: &Topology,
    config: &TrafficConfig,
    windows: &[(f64, f64)],
    seed: u64,
) -> Vec<FlowSpec> {
    let mut flows = Vec::new();
    if config.flash_crowds == 0 || windows.is_empty() {
        return flows;
    }
    let clients = topology.hosts_with_role(Role::Client);
    let decoys = topology.hosts_with_role(Role::Decoy);
    let dur = config.flash_crowd_duration_s;
    for e in 0..config.flash_crowds as u64 {
        let (w_lo, w_hi) = windows[e as usize % windows.len()];
        if w_hi - w_lo <= dur {
            continue;
        }
        let start = rng::uniform(seed, &[TAG_FLASH, e, 0], w_lo, w_hi - dur);
        let total =
            config.flash_crowd_rate_bps * rng::uniform(seed, &[TAG_FLASH, e, 1], 0.5, 1.2);
        let decoy = decoys[(rng::derive(seed, &[TAG_FLASH, e, 2]) as usize) % decoys.len()];
        let n_src = 3usize.min(clients.len());
        let first = (rng::derive(seed, &[TAG_FLASH, e, 3]) as usize) % clients.len();
        for k in 0..n_src {
            let src = clients[(first + k) % clients.len()];
            flows.push(FlowSpec {
                src,
                dst: decoy,
                model: TrafficModel::background1().with_duration(dur),
                start_offset: start,
                ramp: RampProfile::linear(0.0, total / n_src as f64, 30.0_f64.min(dur)),
                seed: rng::derive(seed, &[TAG_FLASH, e, 4 + k as u64]),
                class: FlowClass::FlashCrowd,
            });
        }
    }
    flows
}
