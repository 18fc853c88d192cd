//! Parameterized sub-tree topologies with deterministic routing.
//!
//! The network is a tree: four access switches feed an aggregation switch,
//! which connects to the server-side root over the single cut edge (the
//! target link). The root fans out to one leaf switch per sub-tree, each
//! hosting ten decoy servers, plus an injection switch carrying an extra
//! background generator.
//!
//! ```text
//!   bots 1-5    -> s1 \
//!   bots 6-10   -> s2  \            target          s8  -> decoys 1-10,  gen1
//!   clients 1-5 -> s3   > s5 ========================> s7 -> s9  -> decoys 11-20, gen2
//!   clients 6-10-> s4  /                              | \   ...
//!                                                    s6   s(7+n)
//!                                                     |
//!                                                    gen0
//! ```

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

/// Index into [`Topology::hosts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HostId(pub usize);

/// Index into [`Topology::links`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

/// A tree node: either a switch or a host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Switch(u32),
    Host(HostId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Switch(n) => write!(f, "s{n}"),
            Node::Host(h) => write!(f, "h{}", h.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Bot,
    Client,
    Decoy,
    BgGenerator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Host {
    pub id: HostId,
    /// Stable human-readable name, e.g. `bot3`, `decoy17`, `gen0`.
    pub name: String,
    pub role: Role,
    pub attach_switch: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    /// Stable human-readable name, `{a}-{b}` in construction order.
    pub name: String,
    pub endpoint_a: Node,
    pub endpoint_b: Node,
    /// bits/s
    pub capacity: f64,
    /// ms
    pub delay: f64,
    /// Hop distance from the target link along server-side paths toward the
    /// decoys: 0 for the target link itself, 1 for root-to-leaf links, 2 for
    /// decoy edge links. `None` for links off those paths (client side and
    /// the injection spur).
    pub level: Option<u32>,
}

/// Immutable tree topology; safe to share read-only across scenario runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Topology {
    pub n_subtrees: u32,
    pub switches: Vec<u32>,
    pub hosts: Vec<Host>,
    pub links: Vec<Link>,
    pub target_link: LinkId,
}

/// Build the canonical topology for `n_subtrees` sub-trees.
///
/// Switch count is `7 + n_subtrees`; hosts are 10 bots on s1/s2, 10 clients
/// on s3/s4, 10 decoys per leaf switch, one background generator per leaf
/// switch plus one on the injection switch s6.
pub fn build_topology(n_subtrees: u32, capacity: f64, delay: f64) -> Result<Topology> {
    if n_subtrees == 0 {
        return Err(Error::EmptyTopology);
    }
    let n = n_subtrees;
    let switches: Vec<u32> = (1..=7 + n).collect();
    let leaf_switches: Vec<u32> = (8..=7 + n).collect();

    let mut hosts: Vec<Host> = Vec::new();
    let add_host = |name: String, role: Role, attach: u32, hosts: &mut Vec<Host>| -> HostId {
        let id = HostId(hosts.len());
        hosts.push(Host {
            id,
            name,
            role,
            attach_switch: attach,
        });
        id
    };

    for i in 1..=10u32 {
        let sw = if i <= 5 { 1 } else { 2 };
        add_host(format!("bot{i}"), Role::Bot, sw, &mut hosts);
    }
    for i in 1..=10u32 {
        let sw = if i <= 5 { 3 } else { 4 };
        add_host(format!("client{i}"), Role::Client, sw, &mut hosts);
    }
    for (t, &leaf) in leaf_switches.iter().enumerate() {
        for d in 1..=10u32 {
            let idx = t as u32 * 10 + d;
            add_host(format!("decoy{idx}"), Role::Decoy, leaf, &mut hosts);
        }
    }
    add_host("gen0".to_string(), Role::BgGenerator, 6, &mut hosts);
    for (t, &leaf) in leaf_switches.iter().enumerate() {
        add_host(format!("gen{}", t + 1), Role::BgGenerator, leaf, &mut hosts);
    }

    let mut links: Vec<Link> = Vec::new();
    let add_link =
        |a: Node, b: Node, level: Option<u32>, links: &mut Vec<Link>, host_names: &[Host]| {
            let id = LinkId(links.len());
            let name_of = |n: &Node| match n {
                Node::Switch(s) => format!("s{s}"),
                Node::Host(h) => host_names[h.0].name.clone(),
            };
            links.push(Link {
                id,
                name: format!("{}-{}", name_of(&a), name_of(&b)),
                endpoint_a: a,
                endpoint_b: b,
                capacity,
                delay,
                level,
            });
            id
        };

    // Switch fabric.
    for s in 1..=4u32 {
        add_link(Node::Switch(s), Node::Switch(5), None, &mut links, &hosts);
    }
    let target_link = add_link(Node::Switch(5), Node::Switch(7), Some(0), &mut links, &hosts);
    add_link(Node::Switch(7), Node::Switch(6), None, &mut links, &hosts);
    for &leaf in &leaf_switches {
        add_link(Node::Switch(7), Node::Switch(leaf), Some(1), &mut links, &hosts);
    }
    // Host attachments; decoy attachments are the level-2 edge links.
    for h in &hosts {
        let level = if h.role == Role::Decoy { Some(2) } else { None };
        add_link(
            Node::Host(h.id),
            Node::Switch(h.attach_switch),
            level,
            &mut links,
            &hosts,
        );
    }

    Ok(Topology {
        n_subtrees,
        switches,
        hosts,
        links,
        target_link,
    })
}

impl Topology {
    pub fn host_by_name(&self, name: &str) -> Result<&Host> {
        self.hosts
            .iter()
            .find(|h| h.name == name)
            .ok_or_else(|| Error::UnknownHost(name.to_string()))
    }

    pub fn host(&self, id: HostId) -> Result<&Host> {
        self.hosts
            .get(id.0)
            .ok_or_else(|| Error::UnknownHost(format!("h{}", id.0)))
    }

    pub fn link(&self, id: LinkId) -> Result<&Link> {
        self.links
            .get(id.0)
            .ok_or_else(|| Error::UnknownLink(format!("L{}", id.0)))
    }

    pub fn link_by_name(&self, name: &str) -> Result<&Link> {
        self.links
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLink(name.to_string()))
    }

    pub fn hosts_with_role(&self, role: Role) -> Vec<HostId> {
        self.hosts
            .iter()
            .filter(|h| h.role == role)
            .map(|h| h.id)
            .collect()
    }

    /// All node identifiers (switches first, then hosts), for adjacency maps.
    fn node_index(&self, node: Node) -> usize {
        match node {
            Node::Switch(s) => s as usize - 1,
            Node::Host(h) => self.switches.len() + h.0,
        }
    }

    fn node_count(&self) -> usize {
        self.switches.len() + self.hosts.len()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, LinkId)>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for l in &self.links {
            let a = self.node_index(l.endpoint_a);
            let b = self.node_index(l.endpoint_b);
            adj[a].push((b, l.id));
            adj[b].push((a, l.id));
        }
        adj
    }

    /// The unique simple path between two hosts, as an ordered list of links.
    /// The identity route is empty. Deterministic across calls.
    pub fn route(&self, src: HostId, dst: HostId) -> Result<Vec<LinkId>> {
        self.host(src)?;
        self.host(dst)?;
        if src == dst {
            return Ok(Vec::new());
        }
        let adj = self.adjacency();
        let start = self.node_index(Node::Host(src));
        let goal = self.node_index(Node::Host(dst));
        let mut prev: Vec<Option<(usize, LinkId)>> = vec![None; self.node_count()];
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            if u == goal {
                break;
            }
            for &(v, lid) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, lid));
                    queue.push_back(v);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = goal;
        while cur != start {
            let (p, lid) = prev[cur].expect("tree is connected");
            path.push(lid);
            cur = p;
        }
        path.reverse();
        Ok(path)
    }

    /// Server-side links at the given hop distance from the target link.
    /// Unknown levels return an empty list.
    pub fn links_at_level(&self, level: u32) -> Vec<LinkId> {
        self.links
            .iter()
            .filter(|l| l.level == Some(level))
            .map(|l| l.id)
            .collect()
    }

    /// Decoy edge links (level 2), the default monitored set.
    pub fn decoy_edge_links(&self) -> Vec<LinkId> {
        self.links_at_level(2)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }
}
