//! Discrete-time fluid-flow engine.
//!
//! Each tick evaluates every flow's offered rate, pushes it along the flow's
//! route with proportional-share clipping at each congested link, and
//! aggregates per-link load. Links are full-duplex: the two directions of a
//! link are independent lanes with the link's capacity each, and the
//! reported per-link figures come from the busier lane. Lanes are processed
//! in topological order of the flow-precedence graph so a flow arrives at a
//! link already thinned by upstream bottlenecks.
//!
//! Polling averages `poll_s / tick_s` consecutive ticks; a sample is stamped
//! with the window's end time. Ground-truth labels are a post-pass over the
//! attack phase boundaries: `normal` before the first bot flow starts,
//! `warmup` until the target link first saturates, `attack` until the last
//! attack flow ends, `normal` again after.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::topology::{LinkId, Node, Topology};
use crate::traffic::{FlowClass, FlowSpec};

/// Ground-truth phase of a polling sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Warmup,
    Attack,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Warmup => "warmup",
            Label::Attack => "attack",
        }
    }
}

/// One polled measurement of one link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSample {
    /// Window end time, s.
    pub t: f64,
    pub link_id: LinkId,
    /// Mean offered load over the window, bits/s (busier direction).
    pub offered_bps: f64,
    /// Mean of per-tick min(1, offered/capacity) over the window.
    pub utilization: f64,
    /// Distinct flows that touched the link during the window.
    pub flow_count: u32,
    pub label: Label,
}

/// A complete simulation input: who sends what over which network.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub flows: Vec<FlowSpec>,
    /// s
    pub horizon_s: f64,
    /// s, rate-evaluation step
    pub tick_s: f64,
    /// s, polling cadence; must be an integer multiple of `tick_s`
    pub poll_s: f64,
    /// Utilization at or above which a link counts as saturated.
    pub saturation_threshold: f64,
}

impl Scenario {
    pub fn new(topology: Topology, flows: Vec<FlowSpec>, horizon_s: f64) -> Self {
        Self {
            topology,
            flows,
            horizon_s,
            tick_s: 1.0,
            poll_s: 5.0,
            saturation_threshold: 0.999,
        }
    }

    fn ticks_per_poll(&self) -> Result<usize> {
        if self.tick_s <= 0.0 || self.poll_s <= 0.0 {
            return Err(Error::TickPollMismatch {
                tick: self.tick_s,
                poll: self.poll_s,
            });
        }
        let ratio = self.poll_s / self.tick_s;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::TickPollMismatch {
                tick: self.tick_s,
                poll: self.poll_s,
            });
        }
        Ok(ratio.round() as usize)
    }
}

/// Polled series for every link plus the attack phase boundaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    /// Poll-major, link-id-minor.
    pub samples: Vec<LinkSample>,
    pub n_links: usize,
    pub n_polls: usize,
    pub poll_s: f64,
    /// Start of the earliest attack flow, if any.
    pub t_first_bot: Option<f64>,
    /// First poll at which the target link's window-average utilization
    /// reached the saturation threshold, at or after `t_first_bot`.
    pub t_saturation: Option<f64>,
    /// End of the latest attack flow, if any.
    pub t_attack_end: Option<f64>,
}

impl RunOutput {
    pub fn poll_times(&self) -> Vec<f64> {
        (0..self.n_polls).map(|k| self.samples[k * self.n_links].t).collect()
    }

    pub fn utilization_series(&self, link: LinkId) -> Vec<f64> {
        (0..self.n_polls)
            .map(|k| self.samples[k * self.n_links + link.0].utilization)
            .collect()
    }

    pub fn offered_series(&self, link: LinkId) -> Vec<f64> {
        (0..self.n_polls)
            .map(|k| self.samples[k * self.n_links + link.0].offered_bps)
            .collect()
    }

    /// Mean utilization of `link` over polls with end time in (t_lo, t_hi].
    pub fn mean_utilization(&self, link: LinkId, t_lo: f64, t_hi: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for k in 0..self.n_polls {
            let s = &self.samples[k * self.n_links + link.0];
            if s.t > t_lo && s.t <= t_hi {
                sum += s.utilization;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Static routing state shared by every tick.
struct Plan {
    /// Per flow: lanes in path order. Lane id = link_id * 2 + direction.
    paths: Vec<Vec<usize>>,
    /// Per lane: flows traversing it, in flow-id order.
    lane_flows: Vec<Vec<usize>>,
    /// Lanes in flow-precedence topological order.
    lane_order: Vec<usize>,
    capacities: Vec<f64>,
}

fn build_plan(topology: &Topology, flows: &[FlowSpec]) -> Result<Plan> {
    let n_lanes = topology.links.len() * 2;
    let mut paths = Vec::with_capacity(flows.len());
    for flow in flows {
        topology.host(flow.src)?;
        topology.host(flow.dst)?;
        let route = topology.route(flow.src, flow.dst)?;
        // Orient each hop by walking the node sequence.
        let mut here = Node::Host(flow.src);
        let mut lanes = Vec::with_capacity(route.len());
        for lid in route {
            let link = topology.link(lid)?;
            if link.endpoint_a == here {
                lanes.push(lid.0 * 2);
                here = link.endpoint_b;
            } else {
                lanes.push(lid.0 * 2 + 1);
                here = link.endpoint_a;
            }
        }
        paths.push(lanes);
    }

    let mut lane_flows = vec![Vec::new(); n_lanes];
    for (f, path) in paths.iter().enumerate() {
        for &lane in path {
            lane_flows[lane].push(f);
        }
    }

    // Kahn over the lane-precedence graph (edges between consecutive lanes
    // of each path). All scenario flows sink at hosts, so this is acyclic;
    // if a custom flow set ever produced a cycle, the remainder is appended
    // in id order, which keeps the run deterministic.
    let mut indeg = vec![0usize; n_lanes];
    let mut succ = vec![Vec::new(); n_lanes];
    for path in &paths {
        for w in path.windows(2) {
            succ[w[0]].push(w[1]);
            indeg[w[1]] += 1;
        }
    }
    let mut queue: VecDeque<usize> =
        (0..n_lanes).filter(|&l| indeg[l] == 0).collect();
    let mut lane_order = Vec::with_capacity(n_lanes);
    while let Some(l) = queue.pop_front() {
        lane_order.push(l);
        for &s in &succ[l] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push_back(s);
            }
        }
    }
    if lane_order.len() < n_lanes {
        for l in 0..n_lanes {
            if indeg[l] > 0 {
                lane_order.push(l);
            }
        }
    }

    let capacities = (0..n_lanes)
        .map(|l| topology.links[l / 2].capacity)
        .collect();

    Ok(Plan {
        paths,
        lane_flows,
        lane_order,
        capacities,
    })
}

/// Per-link aggregate of one polling window.
struct WindowAccum {
    offered_sum: Vec<f64>,
    util_sum: Vec<f64>,
    seen: Vec<u64>,
}

fn run_window(
    w: usize,
    scenario: &Scenario,
    plan: &Plan,
    ticks_per_poll: usize,
) -> WindowAccum {
    let n_links = scenario.topology.links.len();
    let n_flows = scenario.flows.len();
    let words = n_flows.div_ceil(64);
    let mut acc = WindowAccum {
        offered_sum: vec![0.0; n_links],
        util_sum: vec![0.0; n_links],
        seen: vec![0u64; n_links * words],
    };
    let mut rates = vec![0.0f64; n_flows];
    let mut carry = vec![1.0f64; n_flows];
    let mut lane_offered = vec![0.0f64; n_links * 2];

    for step in 0..ticks_per_poll {
        let t = (w * ticks_per_poll + step) as f64 * scenario.tick_s;
        for (f, flow) in scenario.flows.iter().enumerate() {
            rates[f] = flow.rate_at(t);
            carry[f] = 1.0;
        }
        lane_offered.iter_mut().for_each(|x| *x = 0.0);
        for &lane in &plan.lane_order {
            let mut offered = 0.0;
            for &f in &plan.lane_flows[lane] {
                offered += rates[f] * carry[f];
            }
            if offered <= 0.0 {
                continue;
            }
            lane_offered[lane] = offered;
            let cap = plan.capacities[lane];
            if offered > cap {
                let factor = cap / offered;
                for &f in &plan.lane_flows[lane] {
                    carry[f] *= factor;
                }
            }
        }
        for link in 0..n_links {
            let offered = lane_offered[link * 2].max(lane_offered[link * 2 + 1]);
            acc.offered_sum[link] += offered;
            let cap = scenario.topology.links[link].capacity;
            acc.util_sum[link] += (offered / cap).min(1.0);
        }
        for f in 0..n_flows {
            if rates[f] > 0.0 {
                for &lane in &plan.paths[f] {
                    let link = lane / 2;
                    acc.seen[link * words + f / 64] |= 1u64 << (f % 64);
                }
            }
        }
    }
    acc
}

/// Run the scenario and return the polled per-link series.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    run_inner(scenario, false)
}

/// Sequential-core variant of [`run`] kept for benchmarking; identical output.
pub fn run_sequential(scenario: &Scenario) -> Result<RunOutput> {
    run_inner(scenario, true)
}

fn run_inner(scenario: &Scenario, force_seq: bool) -> Result<RunOutput> {
    if scenario.topology.links.is_empty() {
        return Err(Error::EmptyTopology);
    }
    let ticks_per_poll = scenario.ticks_per_poll()?;
    let n_polls = (scenario.horizon_s / scenario.poll_s).floor() as usize;
    let n_links = scenario.topology.links.len();
    let plan = build_plan(&scenario.topology, &scenario.flows)?;

    let windows: Vec<WindowAccum> = if force_seq {
        par::map_indexed_seq(n_polls, |w| run_window(w, scenario, &plan, ticks_per_poll))
    } else {
        par::map_indexed(n_polls, |w| run_window(w, scenario, &plan, ticks_per_poll))
    };

    // Phase boundaries from the attack flows plus the target-link series.
    let t_first_bot = scenario
        .flows
        .iter()
        .filter(|f| f.class == FlowClass::Attack)
        .map(|f| f.start_offset)
        .fold(None::<f64>, |m, t| Some(m.map_or(t, |m| m.min(t))));
    let t_attack_end = scenario
        .flows
        .iter()
        .filter(|f| f.class == FlowClass::Attack)
        .map(|f| f.start_offset + f.model.duration)
        .fold(None::<f64>, |m, t| Some(m.map_or(t, |m| m.max(t))));
    let target = scenario.topology.target_link;
    let mut t_saturation = None;
    if let Some(t0) = t_first_bot {
        for (k, acc) in windows.iter().enumerate() {
            let t_end = (k + 1) as f64 * scenario.poll_s;
            let util = acc.util_sum[target.0] / ticks_per_poll as f64;
            if t_end > t0 && util >= scenario.saturation_threshold {
                t_saturation = Some(t_end);
                break;
            }
        }
    }

    let label_at = |t_end: f64| -> Label {
        match t_first_bot {
            None => Label::Normal,
            Some(t0) => {
                let attack_end = t_attack_end.unwrap_or(f64::INFINITY);
                if t_end <= t0 || t_end > attack_end {
                    Label::Normal
                } else if t_saturation.map_or(true, |ts| t_end < ts) {
                    Label::Warmup
                } else {
                    Label::Attack
                }
            }
        }
    };

    let words = scenario.flows.len().div_ceil(64);
    let mut samples = Vec::with_capacity(n_polls * n_links);
    for (k, acc) in windows.iter().enumerate() {
        let t_end = (k + 1) as f64 * scenario.poll_s;
        let label = label_at(t_end);
        for link in 0..n_links {
            let flow_count: u32 = acc.seen[link * words..(link + 1) * words]
                .iter()
                .map(|w| w.count_ones())
                .sum();
            samples.push(LinkSample {
                t: t_end,
                link_id: LinkId(link),
                offered_bps: acc.offered_sum[link] / ticks_per_poll as f64,
                utilization: acc.util_sum[link] / ticks_per_poll as f64,
                flow_count,
                label,
            });
        }
    }

    Ok(RunOutput {
        samples,
        n_links,
        n_polls,
        poll_s: scenario.poll_s,
        t_first_bot,
        t_saturation,
        t_attack_end,
    })
}
