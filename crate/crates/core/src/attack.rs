//! Bot coordination: target-link selection, synchronized low-rate flow
//! scheduling, and the rolling multi-target variant.
//!
//! The attacker floods a link not by hitting it directly but by starting
//! many individually unremarkable bot-to-decoy flows whose routes all cross
//! it. Links are ranked by flow density (how many bot/decoy pairs route
//! across them); bots start within a sync spread `BS` of the attack onset
//! and hold their flows for `Dur`. A rolling schedule rotates the flood
//! across several high-density links on a fixed period so no single link
//! stays saturated long enough to trip naive monitors.

use serde::{Deserialize, Serialize};

use crate::engine::RunOutput;
use crate::error::{Error, Result};
use crate::rng;
use crate::topology::{LinkId, Role, Topology};
use crate::traffic::{FlowClass, FlowSpec, RampProfile, TrafficModel};

/// Attack shape knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub enabled: bool,
    /// Attack onset, s from scenario start.
    #[serde(alias = "start")]
    pub start_s: f64,
    /// Bot sync spread BS: per-bot start offsets drawn uniformly in [0, BS].
    #[serde(alias = "bs")]
    pub bot_sync_spread_s: f64,
    /// Attack duration Dur: how long each bot holds its flows.
    #[serde(alias = "dur")]
    pub attack_duration_s: f64,
    /// Total offered rate per bot, split across its assigned decoys.
    pub per_bot_bps: f64,
    /// How many links to flood; >1 only meaningful with `rolling`.
    pub n_target_links: usize,
    /// Rotate across the selected links instead of holding one.
    pub rolling: bool,
    /// Rotation period for the rolling schedule, s.
    pub rolling_period_s: f64,
    /// Optional per-flow deterministic ramp overriding `per_bot_bps`
    /// (bits/s per decoy flow).
    pub ramp_start_bps: f64,
    pub ramp_end_bps: f64,
    pub ramp_duration_s: f64,
    pub use_ramp: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            // Desk-scale d: the attack lands five simulated minutes in.
            start_s: 300.0,
            bot_sync_spread_s: 60.0,
            attack_duration_s: 600.0,
            per_bot_bps: 185_000.0,
            n_target_links: 1,
            rolling: false,
            rolling_period_s: 180.0,
            ramp_start_bps: 300.0,
            ramp_end_bps: 600.0,
            ramp_duration_s: 600.0,
            use_ramp: false,
        }
    }
}

/// One bot's marching orders, kept for the schedule dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BotAssignment {
    pub bot: String,
    /// s after `start_s`
    pub offset_s: f64,
    /// Total offered rate, bits/s.
    pub rate_bps: f64,
    pub decoys: Vec<String>,
}

/// One slice of the rolling rotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RollingPeriod {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub link: String,
}

/// Fully resolved attack: flows for the engine plus a human-readable plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackPlan {
    pub target_links: Vec<String>,
    pub assignments: Vec<BotAssignment>,
    pub periods: Vec<RollingPeriod>,
    pub flows: Vec<FlowSpec>,
}

/// Rank links by flow density: the number of distinct bot-to-decoy pairs
/// whose route crosses the link. Ties break toward the lower link id. Host
/// attachment links never out-rank the shared fabric because each carries a
/// single endpoint's pairs.
pub fn select_target_links(topology: &Topology, k: usize) -> Result<Vec<LinkId>> {
    let bots = topology.hosts_with_role(Role::Bot);
    let decoys = topology.hosts_with_role(Role::Decoy);
    if bots.is_empty() {
        return Err(Error::NoBots);
    }
    if decoys.is_empty() {
        return Err(Error::NoDecoys);
    }
    let mut density = vec![0usize; topology.links.len()];
    for &b in &bots {
        for &d in &decoys {
            for lid in topology.route(b, d)? {
                density[lid.0] += 1;
            }
        }
    }
    let mut ranked: Vec<(usize, usize)> = density
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(l, &c)| (l, c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if k > ranked.len() {
        return Err(Error::TooManyTargetLinks {
            requested: k,
            available: ranked.len(),
        });
    }
    Ok(ranked[..k].iter().map(|&(l, _)| LinkId(l)).collect())
}

const TAG_OFFSET: u64 = 0x20;

/// Decoys reachable across `link`, i.e. pairs (any bot, decoy) routed over it.
fn decoys_across(topology: &Topology, link: LinkId, bots: &[crate::topology::HostId])
    -> Result<Vec<crate::topology::HostId>>
{
    let mut out = Vec::new();
    for &d in &topology.hosts_with_role(Role::Decoy) {
        let mut crosses = false;
        for &b in bots {
            if topology.route(b, d)?.contains(&link) {
                crosses = true;
                break;
            }
        }
        if crosses {
            out.push(d);
        }
    }
    Ok(out)
}

fn flow_for(
    bot: crate::topology::HostId,
    decoy: crate::topology::HostId,
    rate_bps: f64,
    start: f64,
    duration: f64,
    cfg: &AttackConfig,
    seed: u64,
) -> FlowSpec {
    let ramp = if cfg.use_ramp {
        RampProfile::linear(cfg.ramp_start_bps, cfg.ramp_end_bps, cfg.ramp_duration_s)
    } else {
        RampProfile::flat(rate_bps)
    };
    FlowSpec {
        src: bot,
        dst: decoy,
        model: TrafficModel::bot().with_duration(duration),
        start_offset: start,
        ramp,
        seed,
        class: FlowClass::Attack,
    }
}

/// Build the attack plan for a single fixed target link (the densest one).
///
/// Decoys behind the target are dealt round-robin to bots so each bot
/// contributes `per_bot_bps` split evenly across its hand. Per-bot onset
/// offsets are uniform in [0, BS]; every flow lives for `Dur`.
pub fn schedule_bots(topology: &Topology, cfg: &AttackConfig, seed: u64) -> Result<AttackPlan> {
    let targets = select_target_links(topology, cfg.n_target_links.max(1))?;
    let bots = topology.hosts_with_role(Role::Bot);
    if cfg.rolling {
        return rolling_schedule(topology, cfg, &targets, seed);
    }
    let link = targets[0];
    let decoys = decoys_across(topology, link, &bots)?;
    if decoys.is_empty() {
        return Err(Error::NoDecoys);
    }

    let mut assignments = Vec::with_capacity(bots.len());
    let mut flows = Vec::new();
    let mut hands: Vec<Vec<crate::topology::HostId>> = vec![Vec::new(); bots.len()];
    for (j, &d) in decoys.iter().enumerate() {
        hands[j % bots.len()].push(d);
    }
    for (i, &bot) in bots.iter().enumerate() {
        let offset = rng::uniform(seed, &[TAG_OFFSET, i as u64], 0.0, cfg.bot_sync_spread_s);
        let hand = &hands[i];
        if hand.is_empty() {
            continue;
        }
        let per_flow = cfg.per_bot_bps / hand.len() as f64;
        for (h, &d) in hand.iter().enumerate() {
            flows.push(flow_for(
                bot,
                d,
                per_flow,
                cfg.start_s + offset,
                cfg.attack_duration_s,
                cfg,
                rng::derive(seed, &[TAG_OFFSET, i as u64, h as u64]),
            ));
        }
        assignments.push(BotAssignment {
            bot: topology.host(bot)?.name.clone(),
            offset_s: offset,
            rate_bps: if cfg.use_ramp {
                cfg.ramp_end_bps * hand.len() as f64
            } else {
                cfg.per_bot_bps
            },
            decoys: hand
                .iter()
                .map(|&d| topology.host(d).map(|h| h.name.clone()))
                .collect::<Result<_>>()?,
        });
    }

    Ok(AttackPlan {
        target_links: vec![topology.link(link)?.name.clone()],
        assignments,
        periods: Vec::new(),
        flows,
    })
}

/// Rotate the flood across `targets` every `rolling_period_s`. Bot offsets
/// apply to the first period; later switches are coordinated (flows restart
/// exactly on the boundary, ramps restarting with them) and every flow is
/// clipped at its period's end.
fn rolling_schedule(
    topology: &Topology,
    cfg: &AttackConfig,
    targets: &[LinkId],
    seed: u64,
) -> Result<AttackPlan> {
    if targets.is_empty() {
        return Err(Error::TooManyTargetLinks {
            requested: 0,
            available: 0,
        });
    }
    let bots = topology.hosts_with_role(Role::Bot);
    let n_periods = (cfg.attack_duration_s / cfg.rolling_period_s).ceil() as usize;
    if n_periods == 0 {
        return Err(Error::RollingNeedsSets(targets.len()));
    }
    let attack_end = cfg.start_s + cfg.attack_duration_s;

    let mut offsets = Vec::with_capacity(bots.len());
    let mut assignments = Vec::with_capacity(bots.len());
    for (i, &bot) in bots.iter().enumerate() {
        let offset = rng::uniform(seed, &[TAG_OFFSET, i as u64], 0.0, cfg.bot_sync_spread_s);
        offsets.push(offset);
        assignments.push(BotAssignment {
            bot: topology.host(bot)?.name.clone(),
            offset_s: offset,
            rate_bps: cfg.per_bot_bps,
            decoys: Vec::new(),
        });
    }

    let mut periods = Vec::with_capacity(n_periods);
    let mut flows = Vec::new();
    for p in 0..n_periods {
        let link = targets[p % targets.len()];
        let t0 = cfg.start_s + p as f64 * cfg.rolling_period_s;
        let t1 = (t0 + cfg.rolling_period_s).min(attack_end);
        periods.push(RollingPeriod {
            index: p,
            t_start: t0,
            t_end: t1,
            link: topology.link(link)?.name.clone(),
        });
        let decoys = decoys_across(topology, link, &bots)?;
        if decoys.is_empty() {
            continue;
        }
        let mut hands: Vec<Vec<crate::topology::HostId>> = vec![Vec::new(); bots.len()];
        for (j, &d) in decoys.iter().enumerate() {
            hands[j % bots.len()].push(d);
        }
        for (i, &bot) in bots.iter().enumerate() {
            let hand = &hands[i];
            if hand.is_empty() {
                continue;
            }
            let start = if p == 0 { t0 + offsets[i] } else { t0 };
            if start >= t1 {
                continue;
            }
            let per_flow = cfg.per_bot_bps / hand.len() as f64;
            for (h, &d) in hand.iter().enumerate() {
                flows.push(flow_for(
                    bot,
                    d,
                    per_flow,
                    start,
                    t1 - start,
                    cfg,
                    rng::derive(seed, &[TAG_OFFSET, p as u64, i as u64, h as u64]),
                ));
            }
            if p == 0 {
                assignments[i].decoys = hand
                    .iter()
                    .map(|&d| topology.host(d).map(|x| x.name.clone()))
                    .collect::<Result<_>>()?;
            }
        }
    }

    Ok(AttackPlan {
        target_links: targets
            .iter()
            .map(|&l| topology.link(l).map(|x| x.name.clone()))
            .collect::<Result<_>>()?,
        assignments,
        periods,
        flows,
    })
}

/// Per-bot rate needed to push the target link past `sat_factor` times its
/// capacity on top of the expected background crossing it.
pub fn required_per_bot_bps(
    topology: &Topology,
    background: &[FlowSpec],
    sat_factor: f64,
    n_bots: usize,
) -> Result<f64> {
    if n_bots == 0 {
        return Err(Error::NoBots);
    }
    let target = topology.target_link;
    let cap = topology.link(target)?.capacity;
    let mut bg = 0.0;
    for f in background {
        if topology.route(f.src, f.dst)?.contains(&target) {
            bg += f.expected_mean_bps();
        }
    }
    Ok(((sat_factor * cap - bg).max(0.0) / n_bots as f64).min(TrafficModel::bot().max_bps()))
}

/// Warm-up measured on a finished run: first bot-flow onset to first
/// saturated poll of the target link.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WarmupWindow {
    pub t_first_bot: f64,
    pub t_saturation: f64,
    pub warmup_s: f64,
}

/// `None` until the target link has actually gone down.
pub fn measure_warmup(out: &RunOutput) -> Option<WarmupWindow> {
    match (out.t_first_bot, out.t_saturation) {
        (Some(t0), Some(ts)) => Some(WarmupWindow {
            t_first_bot: t0,
            t_saturation: ts,
            warmup_s: ts - t0,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, Scenario};
    use crate::traffic::RampShape;
    use crate::topology::build_topology;

    #[test]
    fn densest_link_is_the_core_cut() {
        for n in [2u32, 4, 8] {
            let t = build_topology(n, 2e6, 10.0).unwrap();
            let picked = select_target_links(&t, 1).unwrap();
            assert_eq!(picked[0], t.target_link, "n={n}");
        }
    }

    #[test]
    fn ranking_matches_brute_force_densities() {
        let t = build_topology(4, 2e6, 10.0).unwrap();
        let bots = t.hosts_with_role(Role::Bot);
        let decoys = t.hosts_with_role(Role::Decoy);
        let mut density = vec![0usize; t.links.len()];
        for &b in &bots {
            for &d in &decoys {
                for l in t.route(b, d).unwrap() {
                    density[l.0] += 1;
                }
            }
        }
        let picked = select_target_links(&t, 5).unwrap();
        for w in picked.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            assert!(
                density[a] > density[b] || (density[a] == density[b] && a < b),
                "order violated between links {a} and {b}"
            );
        }
        // The core cut carries every pair.
        assert_eq!(density[t.target_link.0], bots.len() * decoys.len());
    }

    #[test]
    fn too_many_targets_is_an_error() {
        let t = build_topology(2, 2e6, 10.0).unwrap();
        let crossed = select_target_links(&t, 1).unwrap().len();
        assert_eq!(crossed, 1);
        assert!(matches!(
            select_target_links(&t, 10_000),
            Err(Error::TooManyTargetLinks { .. })
        ));
    }

    #[test]
    fn schedule_spreads_decoys_evenly_and_bounds_offsets() {
        let t = build_topology(4, 2e6, 10.0).unwrap();
        let cfg = AttackConfig {
            bot_sync_spread_s: 120.0,
            ..AttackConfig::default()
        };
        let plan = schedule_bots(&t, &cfg, 7).unwrap();
        assert_eq!(plan.assignments.len(), 10);
        // 40 decoys over 10 bots: 4 each, every decoy exactly once.
        let mut all: Vec<&String> = plan.assignments.iter().flat_map(|a| a.decoys.iter()).collect();
        assert_eq!(all.len(), 40);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 40);
        for a in &plan.assignments {
            assert_eq!(a.decoys.len(), 4);
            assert!(a.offset_s >= 0.0 && a.offset_s <= 120.0);
        }
        // Each bot offers per_bot_bps in total.
        for a in &plan.assignments {
            let total: f64 = plan
                .flows
                .iter()
                .filter(|f| t.host(f.src).unwrap().name == a.bot)
                .map(|f| f.ramp.r_end)
                .sum();
            assert!((total - cfg.per_bot_bps).abs() < 1e-9);
        }
        assert!(plan.flows.iter().all(|f| f.class == FlowClass::Attack));
        assert!(plan
            .flows
            .iter()
            .all(|f| (f.model.duration - cfg.attack_duration_s).abs() < 1e-9));
    }

    #[test]
    fn schedule_is_deterministic_per_seed() {
        let t = build_topology(2, 2e6, 10.0).unwrap();
        let cfg = AttackConfig::default();
        let a = schedule_bots(&t, &cfg, 11).unwrap();
        let b = schedule_bots(&t, &cfg, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = schedule_bots(&t, &cfg, 12).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn attack_alone_saturates_and_warmup_is_positive() {
        let t = build_topology(2, 2e6, 10.0).unwrap();
        let cfg = AttackConfig {
            start_s: 100.0,
            bot_sync_spread_s: 30.0,
            attack_duration_s: 300.0,
            per_bot_bps: 250_000.0, // 2.5 Mbps aggregate vs 2 Mbps target
            ..AttackConfig::default()
        };
        let plan = schedule_bots(&t, &cfg, 3).unwrap();
        let sc = Scenario::new(t, plan.flows, 600.0);
        let out = run(&sc).unwrap();
        let w = measure_warmup(&out).expect("target must go down");
        assert!(w.t_first_bot >= 100.0 && w.t_first_bot <= 130.0);
        assert!(w.warmup_s > 0.0);
        assert!(w.t_saturation <= 100.0 + 30.0 + 10.0, "t_sat {}", w.t_saturation);
    }

    #[test]
    fn rolling_periods_tile_the_attack_window() {
        let t = build_topology(4, 2e6, 10.0).unwrap();
        let cfg = AttackConfig {
            start_s: 200.0,
            attack_duration_s: 630.0,
            rolling: true,
            rolling_period_s: 180.0,
            n_target_links: 3,
            ..AttackConfig::default()
        };
        let plan = schedule_bots(&t, &cfg, 5).unwrap();
        assert_eq!(plan.periods.len(), 4); // ceil(630/180)
        assert_eq!(plan.target_links.len(), 3);
        for (p, period) in plan.periods.iter().enumerate() {
            assert_eq!(period.link, plan.target_links[p % 3]);
            let expect_start = 200.0 + p as f64 * 180.0;
            assert!((period.t_start - expect_start).abs() < 1e-9);
            assert!(period.t_end <= 200.0 + 630.0 + 1e-9);
        }
        // Flows never outlive their period.
        for f in &plan.flows {
            let end = f.start_offset + f.model.duration;
            let inside = plan
                .periods
                .iter()
                .any(|p| f.start_offset >= p.t_start - 1e-9 && end <= p.t_end + 1e-9);
            assert!(inside, "flow [{}, {end}] escapes all periods", f.start_offset);
        }
        // Later periods restart exactly on the boundary.
        let p1 = &plan.periods[1];
        assert!(plan
            .flows
            .iter()
            .filter(|f| f.start_offset >= p1.t_start - 1e-9 && f.start_offset < p1.t_end)
            .all(|f| (f.start_offset - p1.t_start).abs() < 1e-9));
    }

    #[test]
    fn ramp_mode_restarts_each_rolling_period() {
        let t = build_topology(2, 2e6, 10.0).unwrap();
        let cfg = AttackConfig {
            start_s: 0.0,
            bot_sync_spread_s: 0.0,
            attack_duration_s: 360.0,
            rolling: true,
            rolling_period_s: 180.0,
            n_target_links: 1,
            use_ramp: true,
            ramp_start_bps: 300.0,
            ramp_end_bps: 600.0,
            ramp_duration_s: 180.0,
            ..AttackConfig::default()
        };
        let plan = schedule_bots(&t, &cfg, 1).unwrap();
        let second: Vec<&FlowSpec> = plan
            .flows
            .iter()
            .filter(|f| (f.start_offset - 180.0).abs() < 1e-9)
            .collect();
        assert!(!second.is_empty());
        for f in second {
            assert_eq!(f.ramp.shape, RampShape::Linear);
            assert_eq!(f.rate_at(180.0), 300.0); // ramp starts over
        }
    }

    #[test]
    fn sizing_covers_background_deficit() {
        let t = build_topology(2, 2e6, 10.0).unwrap();
        let cfg = crate::traffic::TrafficConfig::default();
        let bg = crate::traffic::make_background_suite(&t, &cfg, 1800.0, 9);
        let per_bot = required_per_bot_bps(&t, &bg, 1.1, 10).unwrap();
        let target = t.target_link;
        let mut crossing = 0.0;
        for f in &bg {
            if t.route(f.src, f.dst).unwrap().contains(&target) {
                crossing += f.expected_mean_bps();
            }
        }
        assert!((10.0 * per_bot + crossing - 1.1 * 2e6).abs() < 1e-6);
    }
}
