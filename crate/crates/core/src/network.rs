//! Undirected repeater networks and their bound-annotated form.
//!
//! A [`NetworkGraph`] is what users write down: nodes with internal channels,
//! edges carrying either an explicit channel or a fibre length, and the pair
//! of end users. [`apply_split`] turns it into a [`BoundedGraph`] in which
//! every edge carries a lower and an upper bound on its two-way capacity.
//! Routing works exclusively on the bounded form.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::{oriented_edge_bounds, BoundPair, EdgeBounds, Orientation};
use crate::channels::{fibre_channel, ChannelSpec, Family, FibreParams, NodeSpec, DEFAULT_GAMMA, DEFAULT_NBAR_B};
use crate::error::{Error, Result};

/// Fibre description inside a network file. Missing loss or noise values
/// fall back to the network-wide setting, then to the library defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FibreLink {
    pub length_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar_b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLink {
    Channel(ChannelSpec),
    Fibre(FibreLink),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub link: EdgeLink,
}

impl EdgeSpec {
    pub fn channel(a: impl Into<String>, b: impl Into<String>, channel: ChannelSpec) -> Self {
        EdgeSpec { a: a.into(), b: b.into(), link: EdgeLink::Channel(channel) }
    }

    pub fn fibre(a: impl Into<String>, b: impl Into<String>, length_km: f64) -> Self {
        EdgeSpec {
            a: a.into(),
            b: b.into(),
            link: EdgeLink::Fibre(FibreLink { length_km, gamma: None, nbar_b: None }),
        }
    }

    fn key(&self) -> (&str, &str) {
        if self.a <= self.b {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }
}

/// One problem found by [`NetworkGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub detail: String,
}

impl Violation {
    fn new(code: &'static str, detail: impl Into<String>) -> Self {
        Violation { code, detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub users: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar_b: Option<f64>,
}

impl NetworkGraph {
    pub fn new(
        nodes: Vec<NodeSpec>,
        edges: Vec<EdgeSpec>,
        alpha: impl Into<String>,
        beta: impl Into<String>,
    ) -> Self {
        NetworkGraph {
            nodes,
            edges,
            users: vec![alpha.into(), beta.into()],
            family: None,
            gamma: None,
            nbar_b: None,
        }
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// End users `(alpha, beta)`, if exactly two are declared.
    pub fn end_users(&self) -> Option<(&str, &str)> {
        match self.users.as_slice() {
            [a, b] => Some((a, b)),
            _ => None,
        }
    }

    /// Edges incident on `id`.
    pub fn neighbourhood_edges(&self, id: &str) -> Result<Vec<&EdgeSpec>> {
        if self.node(id).is_none() {
            return Err(Error::NotFound(format!("node {id:?}")));
        }
        Ok(self.edges.iter().filter(|e| e.a == id || e.b == id).collect())
    }

    fn fibre_params(&self, link: &FibreLink) -> FibreParams {
        FibreParams {
            gamma: link.gamma.or(self.gamma).unwrap_or(DEFAULT_GAMMA),
            nbar_b: link.nbar_b.or(self.nbar_b).unwrap_or(DEFAULT_NBAR_B),
            length_km: link.length_km,
        }
    }

    /// Families named by explicit channels (edges and node internals).
    fn declared_families(&self) -> BTreeSet<Family> {
        let mut out = BTreeSet::new();
        for e in &self.edges {
            if let EdgeLink::Channel(c) = &e.link {
                out.extend(c.family());
            }
        }
        for n in &self.nodes {
            out.extend(n.recv.family());
            out.extend(n.send.family());
        }
        out
    }

    /// Channel family of the whole network. Fibre-only networks with ideal
    /// nodes default to thermal loss.
    pub fn resolve_family(&self) -> Result<Family> {
        let found: Vec<Family> = self.declared_families().into_iter().collect();
        match (self.family, found.as_slice()) {
            (_, [a, b, ..]) => Err(Error::Family(format!("network mixes {a} and {b} channels"))),
            (Some(f), [g]) if f != *g => {
                Err(Error::Family(format!("network declared {f} but contains {g} channels")))
            }
            (Some(f), _) => Ok(f),
            (None, [g]) => Ok(*g),
            (None, []) => Ok(Family::ThermalLoss),
        }
    }

    /// External channel of an edge in the given family.
    pub fn edge_channel(&self, edge: &EdgeSpec, family: Family) -> Result<ChannelSpec> {
        match &edge.link {
            EdgeLink::Channel(c) => {
                c.validate()?;
                Ok(*c)
            }
            EdgeLink::Fibre(f) => fibre_channel(&self.fibre_params(f), family),
        }
    }

    /// True when every channel in a thermal-loss network adds no noise, so
    /// the exact pure-loss capacity applies.
    pub fn is_noiseless(&self) -> Result<bool> {
        let family = self.resolve_family()?;
        if family != Family::ThermalLoss {
            return Ok(false);
        }
        for e in &self.edges {
            if self.edge_channel(e, family)?.as_thermal_loss()?.1 != 0.0 {
                return Ok(false);
            }
        }
        for n in &self.nodes {
            if n.effective_recv().as_thermal_loss()?.1 != 0.0
                || n.effective_send().as_thermal_loss()?.1 != 0.0
            {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Bounding functions suited to this network.
    pub fn default_bounds(&self) -> Result<BoundPair> {
        Ok(BoundPair::for_family(self.resolve_family()?, self.is_noiseless()?))
    }

    /// Every structural and physical problem with the graph. Never fails.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut ids = HashMap::new();
        for n in &self.nodes {
            if n.id.is_empty() {
                out.push(Violation::new("empty id", "node ids must be non-empty"));
            }
            if ids.insert(n.id.as_str(), n).is_some() {
                out.push(Violation::new("duplicate node", format!("node {:?} declared twice", n.id)));
            }
            for (which, c) in [("recv", &n.recv), ("send", &n.send)] {
                if let Err(e) = c.validate() {
                    out.push(Violation::new("invalid channel", format!("node {:?} {which}: {e}", n.id)));
                }
            }
        }

        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let name = format!("{}-{}", e.a, e.b);
            for end in [&e.a, &e.b] {
                if !ids.contains_key(end.as_str()) {
                    out.push(Violation::new("unknown endpoint", format!("edge {name} references {end:?}")));
                }
            }
            if e.a == e.b {
                out.push(Violation::new("self-loop", format!("edge {name}")));
            } else if !seen.insert(e.key()) {
                out.push(Violation::new("duplicate edge", format!("edge {name} declared twice")));
            }
            match &e.link {
                EdgeLink::Channel(c) => {
                    if let Err(err) = c.validate() {
                        out.push(Violation::new("invalid channel", format!("edge {name}: {err}")));
                    }
                }
                EdgeLink::Fibre(f) => {
                    if let Err(err) = self.fibre_params(f).validate() {
                        out.push(Violation::new("invalid fibre", format!("edge {name}: {err}")));
                    }
                }
            }
        }

        match self.end_users() {
            None => out.push(Violation::new(
                "users",
                format!("required: exactly two end users, found {}", self.users.len()),
            )),
            Some((a, b)) => {
                if a == b {
                    out.push(Violation::new("users", format!("end users must differ, both are {a:?}")));
                }
                for u in [a, b] {
                    if !ids.contains_key(u) {
                        out.push(Violation::new("users", format!("unknown end user {u:?}")));
                    }
                }
            }
        }

        if let Err(e) = self.resolve_family() {
            out.push(Violation::new("family mismatch", e.to_string()));
        }
        out
    }

    /// [`validate`](Self::validate) as a `Result`.
    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v.iter().map(ToString::to_string).collect()))
        }
    }
}

/// Which annotation a capacity query reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Lower,
    Upper,
}

impl Selector {
    pub const BOTH: [Selector; 2] = [Selector::Lower, Selector::Upper];

    pub fn pick(self, bounds: &EdgeBounds) -> f64 {
        match self {
            Selector::Lower => bounds.lower,
            Selector::Upper => bounds.upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedEdge {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub bounds: EdgeBounds,
}

/// A network whose edges carry capacity bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedGraph {
    nodes: Vec<String>,
    edges: Vec<BoundedEdge>,
    users: [String; 2],
    #[serde(skip)]
    index: HashMap<String, usize>,
    #[serde(skip)]
    ends: Vec<(usize, usize)>,
}

impl BoundedGraph {
    fn build(nodes: Vec<String>, edges: Vec<BoundedEdge>, users: [String; 2]) -> Result<Self> {
        let mut problems = Vec::new();
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, id) in nodes.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                problems.push(format!("duplicate node: {id:?}"));
            }
        }
        let mut ends = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for e in &edges {
            let (Some(&a), Some(&b)) = (index.get(&e.a), index.get(&e.b)) else {
                problems.push(format!("unknown endpoint: edge {}-{}", e.a, e.b));
                continue;
            };
            if a == b {
                problems.push(format!("self-loop: {}", e.a));
            } else if !seen.insert((a.min(b), a.max(b))) {
                problems.push(format!("duplicate edge: {}-{}", e.a, e.b));
            }
            let EdgeBounds { lower, upper, .. } = e.bounds;
            if !(lower >= 0.0 && upper >= lower) {
                problems.push(format!("bad bounds on {}-{}: [{lower}, {upper}]", e.a, e.b));
            }
            ends.push((a, b));
        }
        if users[0] == users[1] {
            problems.push(format!("users: end users must differ, both are {:?}", users[0]));
        }
        for u in &users {
            if !index.contains_key(u) {
                problems.push(format!("users: unknown end user {u:?}"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Invalid(problems));
        }
        Ok(BoundedGraph { nodes, edges, users, index, ends })
    }

    /// Graph from explicit edge values `(a, b, lower, upper)`; each edge is
    /// oriented `a -> b`.
    pub fn from_values<S: AsRef<str>>(
        nodes: &[S],
        edges: &[(S, S, f64, f64)],
        alpha: &str,
        beta: &str,
    ) -> Result<Self> {
        let nodes = nodes.iter().map(|s| s.as_ref().to_string()).collect();
        let edges = edges
            .iter()
            .map(|(a, b, lower, upper)| {
                let (a, b) = (a.as_ref().to_string(), b.as_ref().to_string());
                let orientation = Orientation { from: a.clone(), to: b.clone() };
                BoundedEdge {
                    a,
                    b,
                    bounds: EdgeBounds {
                        lower: *lower,
                        upper: *upper,
                        upper_orientation: orientation.clone(),
                        orientation,
                    },
                }
            })
            .collect();
        Self::build(nodes, edges, [alpha.to_string(), beta.to_string()])
    }

    /// Graph in which both bounds of every edge equal a single value.
    pub fn uniform<S: AsRef<str>>(
        nodes: &[S],
        edges: &[(S, S)],
        value: f64,
        alpha: &str,
        beta: &str,
    ) -> Result<Self> {
        let edges: Vec<(&str, &str, f64, f64)> =
            edges.iter().map(|(a, b)| (a.as_ref(), b.as_ref(), value, value)).collect();
        let nodes: Vec<&str> = nodes.iter().map(AsRef::as_ref).collect();
        Self::from_values(&nodes, &edges, alpha, beta)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[BoundedEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn users(&self) -> (&str, &str) {
        (&self.users[0], &self.users[1])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// User indices `(alpha, beta)`.
    pub fn user_indices(&self) -> (usize, usize) {
        (self.index[&self.users[0]], self.index[&self.users[1]])
    }

    /// Endpoint indices of every edge, in edge order.
    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.ends
    }

    pub fn value(&self, edge: usize, selector: Selector) -> f64 {
        selector.pick(&self.edges[edge].bounds)
    }

    /// Indices of the edges incident on `id`.
    pub fn neighbourhood_edges(&self, id: &str) -> Result<Vec<usize>> {
        let i = self.index_of(id).ok_or_else(|| Error::NotFound(format!("node {id:?}")))?;
        Ok((0..self.ends.len()).filter(|&e| self.ends[e].0 == i || self.ends[e].1 == i).collect())
    }

    /// Copy with every bound multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut edges = self.edges.clone();
        for e in &mut edges {
            e.bounds.lower *= s;
            e.bounds.upper *= s;
        }
        Self::build(self.nodes.clone(), edges, self.users.clone())
    }

    /// Copy without edge number `edge`.
    pub fn without_edge(&self, edge: usize) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.remove(edge);
        Self::build(self.nodes.clone(), edges, self.users.clone())
    }
}

/// Annotate every edge of a valid graph with its oriented bounds.
pub fn apply_split(graph: &NetworkGraph, kinds: BoundPair) -> Result<BoundedGraph> {
    graph.check()?;
    let family = graph.resolve_family()?;
    kinds.check(family)?;
    let (alpha, beta) = graph.end_users().expect("checked above");
    let lookup: HashMap<&str, &NodeSpec> = graph.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let mut edges = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let channel = graph.edge_channel(e, family)?;
        let bounds = oriented_edge_bounds(&channel, lookup[e.a.as_str()], lookup[e.b.as_str()], kinds)?;
        edges.push(BoundedEdge { a: e.a.clone(), b: e.b.clone(), bounds });
    }
    let nodes = graph.nodes.iter().map(|n| n.id.clone()).collect();
    BoundedGraph::build(nodes, edges, [alpha.to_string(), beta.to_string()])
}

/// Node bipartition separating the end users, with its crossing edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl Cut {
    /// Cut whose `A` side is the set of flagged nodes.
    pub fn from_side(bg: &BoundedGraph, in_a: &[bool]) -> Cut {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, id) in bg.nodes().iter().enumerate() {
            if in_a[i] {
                a.push(id.clone());
            } else {
                b.push(id.clone());
            }
        }
        let edges = bg
            .endpoints()
            .iter()
            .zip(bg.edges())
            .filter(|((x, y), _)| in_a[*x] != in_a[*y])
            .map(|(_, e)| (e.a.clone(), e.b.clone()))
            .collect();
        Cut { a, b, edges }
    }

    /// Sum of the selected values over the cut-set.
    pub fn value(&self, bg: &BoundedGraph, selector: Selector) -> f64 {
        let crossing: BTreeSet<(&str, &str)> =
            self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        bg.edges()
            .iter()
            .filter(|e| crossing.contains(&(e.a.as_str(), e.b.as_str())))
            .map(|e| selector.pick(&e.bounds))
            .sum()
    }
}

/// Capacity of the cheaper of the two cuts isolating an end user.
pub fn min_neighbourhood_capacity(bg: &BoundedGraph, selector: Selector) -> f64 {
    let (alpha, beta) = bg.users();
    [alpha, beta]
        .iter()
        .map(|u| {
            bg.neighbourhood_edges(u)
                .expect("users are graph nodes")
                .into_iter()
                .map(|e| bg.value(e, selector))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}
