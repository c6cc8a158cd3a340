//! Weakly-regular networks: lattice generation, connectivity constants,
//! capacity thresholds and minimum nodal density.
//!
//! In a weakly-regular network every node has degree `k`, and the multiset
//! of common-neighbour counts over a node's edges (its adjacent commonality)
//! is drawn from a fixed family `Lambda`. Two constants follow from that
//! data: `delta` governs edges in the bulk and `omega` edges touching the
//! end users. If every bulk edge carries at least `C/delta` and every user
//! edge at least `C/omega`, the flooding capacity between deeply embedded
//! users is at least `C`. Inverting that condition through a single-edge
//! bounding function gives the largest tolerable link length, internal loss
//! or receiver noise.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bounds::{oriented_edge_bounds, BoundPair, EdgeBounds};
use crate::channels::{fibre_channel, ChannelSpec, Family, FibreParams, NodeSpec, Role, DEFAULT_GAMMA, DEFAULT_NBAR_B};
use crate::error::{domain, Error, Result};
use crate::network::{EdgeLink, EdgeSpec, FibreLink, NetworkGraph};
use crate::qkd::{preset, QkdSetup};
use crate::routing::max_flow;

/// Lattice cell of a generated network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellType {
    /// Triangular lattice, degree 6.
    #[serde(rename = "triangular6")]
    Triangular6,
    /// Square lattice with both diagonals in every cell, degree 8.
    #[serde(rename = "manhattan8")]
    Manhattan8,
}

impl CellType {
    pub fn k(self) -> u32 {
        match self {
            CellType::Triangular6 => 6,
            CellType::Manhattan8 => 8,
        }
    }

    /// Adjacent-commonality family of the lattice.
    pub fn lambda(self) -> Vec<Vec<u32>> {
        match self {
            CellType::Triangular6 => vec![vec![2; 6]],
            CellType::Manhattan8 => vec![vec![2, 2, 2, 2, 4, 4, 4, 4]],
        }
    }

    /// Geometric factor of the sparsest placement with links no longer than `d`.
    pub fn xi_geom(self) -> f64 {
        match self {
            CellType::Triangular6 => 2.0 / 3f64.sqrt(),
            CellType::Manhattan8 => 2.0,
        }
    }

    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            // Axial coordinates.
            CellType::Triangular6 => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)],
            CellType::Manhattan8 => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
        }
    }
}

impl std::fmt::Display for CellType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellType::Triangular6 => "triangular6",
            CellType::Manhattan8 => "manhattan8",
        })
    }
}

impl std::str::FromStr for CellType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangular6" => Ok(CellType::Triangular6),
            "manhattan8" => Ok(CellType::Manhattan8),
            _ => Err(domain(format!("unknown cell type {s:?} (expected triangular6 or manhattan8)"))),
        }
    }
}

fn check_lambda(k: u32, lambda: &[Vec<u32>]) -> Result<()> {
    if lambda.is_empty() {
        return Err(domain("adjacent-commonality family is empty"));
    }
    for l in lambda {
        if l.len() != k as usize {
            return Err(domain(format!("multiset {l:?} has {} entries, expected k = {k}", l.len())));
        }
        if let Some(bad) = l.iter().find(|&&v| v + 1 > k) {
            return Err(domain(format!("commonality {bad} exceeds k - 1 = {}", k.saturating_sub(1))));
        }
    }
    Ok(())
}

/// `min over lambda of sum (k - lambda_i - 1)`.
pub fn delta(k: u32, lambda: &[Vec<u32>]) -> Result<u32> {
    check_lambda(k, lambda)?;
    let d = lambda.iter().map(|l| l.iter().map(|&v| k - v - 1).sum::<u32>()).min().expect("non-empty");
    if d <= k {
        log::warn!("delta = {d} does not exceed k = {k}; threshold guarantees are weak");
    }
    Ok(d)
}

/// `omega = delta (k - 1) / (delta - k + 1)` as a reduced fraction.
pub fn omega_fraction(k: u32, delta: u32) -> Result<(u64, u64)> {
    if delta < k {
        return Err(domain(format!("omega needs delta > k - 1, got delta = {delta}, k = {k}")));
    }
    let num = u64::from(delta) * u64::from(k - 1);
    let den = u64::from(delta + 1 - k);
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

pub fn omega(k: u32, delta: u32) -> Result<f64> {
    let (n, d) = omega_fraction(k, delta)?;
    Ok(n as f64 / d as f64)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Sorted adjacent-commonality multiset of every node, keyed by node id.
pub fn adjacent_commonality(graph: &NetworkGraph) -> HashMap<String, Vec<u32>> {
    let mut nbrs: HashMap<&str, HashSet<&str>> = graph.nodes.iter().map(|n| (n.id.as_str(), HashSet::new())).collect();
    for e in &graph.edges {
        nbrs.entry(&e.a).or_default().insert(&e.b);
        nbrs.entry(&e.b).or_default().insert(&e.a);
    }
    nbrs.iter()
        .map(|(x, nx)| {
            let mut l: Vec<u32> =
                nx.iter().map(|y| nx.intersection(&nbrs[y]).count() as u32).collect();
            l.sort_unstable();
            (x.to_string(), l)
        })
        .collect()
}

/// Check that `graph` is weakly regular with degree `k` and family `lambda`:
/// no node exceeds degree `k`, every node of full degree has a commonality
/// multiset in `lambda`, and both end users have full degree.
pub fn check_weak_regularity(graph: &NetworkGraph, k: u32, lambda: &[Vec<u32>]) -> Result<()> {
    check_lambda(k, lambda)?;
    let allowed: BTreeSet<Vec<u32>> = lambda
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.sort_unstable();
            l
        })
        .collect();
    let mut problems = Vec::new();
    let common = adjacent_commonality(graph);
    let mut ids: Vec<&String> = common.keys().collect();
    ids.sort();
    for id in ids {
        let l = &common[id];
        if l.len() > k as usize {
            problems.push(format!("node {id} has degree {} > {k}", l.len()));
        } else if l.len() == k as usize && !allowed.contains(l) {
            problems.push(format!("node {id} has adjacent commonality {l:?}"));
        }
    }
    match graph.end_users() {
        Some((a, b)) => {
            for u in [a, b] {
                let deg = common.get(u).map_or(0, Vec::len);
                if deg != k as usize {
                    problems.push(format!("end user {u} has degree {deg}, expected {k}"));
                }
            }
        }
        None => problems.push("end users not set".into()),
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(problems))
    }
}

/// Where the QKD receiver parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QkdChoice {
    Preset(String),
    Custom(QkdSetup),
}

impl QkdChoice {
    pub fn setup(&self) -> Result<QkdSetup> {
        match self {
            QkdChoice::Preset(name) => preset(name),
            QkdChoice::Custom(s) => {
                s.validate()?;
                Ok(*s)
            }
        }
    }
}

fn default_radius() -> u32 {
    2
}

fn default_family() -> Family {
    Family::ThermalLoss
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_nbar_b() -> f64 {
    DEFAULT_NBAR_B
}

/// A weakly-regular lattice network with homogeneous nodes and links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrnSpec {
    pub cell: CellType,
    /// Margin, in lattice cells, around the segment joining the users.
    #[serde(default = "default_radius")]
    pub radius: u32,
    /// Uniform link length, km.
    #[serde(default)]
    pub edge_length_km: f64,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_nbar_b")]
    pub nbar_b: f64,
    /// Internal receive channel of every node.
    #[serde(default)]
    pub recv: ChannelSpec,
    /// Internal send channel of every node.
    #[serde(default)]
    pub send: ChannelSpec,
    /// Noisy QKD receivers; replaces `recv` and the fibre noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qkd_setup: Option<QkdChoice>,
    /// Bounding functions; defaults to the family's natural pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundPair>,
    /// Adjacent-commonality family; defaults to the cell's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<u32>>>,
}

impl WrnSpec {
    pub fn new(cell: CellType, family: Family) -> Self {
        WrnSpec {
            cell,
            radius: default_radius(),
            edge_length_km: 0.0,
            family,
            gamma: DEFAULT_GAMMA,
            nbar_b: DEFAULT_NBAR_B,
            recv: ChannelSpec::Identity,
            send: ChannelSpec::Identity,
            qkd_setup: None,
            bounds: None,
            lambda: None,
        }
    }

    pub fn k(&self) -> u32 {
        self.cell.k()
    }

    pub fn lambda(&self) -> Vec<Vec<u32>> {
        self.lambda.clone().unwrap_or_else(|| self.cell.lambda())
    }

    pub fn delta(&self) -> Result<u32> {
        delta(self.k(), &self.lambda())
    }

    pub fn omega(&self) -> Result<f64> {
        omega(self.k(), self.delta()?)
    }

    fn qkd(&self) -> Result<Option<QkdSetup>> {
        match &self.qkd_setup {
            None => Ok(None),
            Some(_) if self.family != Family::ThermalLoss => {
                Err(Error::Family("QKD receivers need thermal-loss channels".into()))
            }
            Some(choice) => choice.setup().map(Some),
        }
    }

    fn fibre(&self, length_km: f64) -> Result<FibreParams> {
        let nbar_b = self.qkd()?.map_or(self.nbar_b, |q| q.nbar_b);
        let f = FibreParams { gamma: self.gamma, nbar_b, length_km };
        f.validate()?;
        Ok(f)
    }

    /// Bounding functions used for thresholds.
    pub fn bound_pair(&self) -> Result<BoundPair> {
        if let Some(b) = self.bounds {
            b.check(self.family)?;
            return Ok(b);
        }
        let noiseless = self.family == Family::ThermalLoss
            && self.qkd_setup.is_none()
            && self.nbar_b == 0.0
            && [self.recv, self.send].iter().all(|c| matches!(c.as_thermal_loss(), Ok((_, n)) if n == 0.0));
        Ok(BoundPair::for_family(self.family, noiseless))
    }

    /// Bounding functions for thresholds in `kind`. Solving for receiver
    /// noise rules out the noiseless pair even when the base spec is noiseless.
    pub fn bound_pair_for(&self, kind: ParamKind) -> Result<BoundPair> {
        let pair = self.bound_pair()?;
        if kind == ParamKind::ReceiverNoise && self.bounds.is_none() && pair == BoundPair::PURE_LOSS {
            return Ok(BoundPair::THERMAL);
        }
        Ok(pair)
    }

    /// Copy with parameter `kind` set to `value`: the link length, the
    /// receiver's loss (damping probability, or `1 - tau` for thermal loss)
    /// or the receiver's thermal photon number.
    pub fn with_param(&self, kind: ParamKind, value: f64) -> Result<WrnSpec> {
        let mut s = self.clone();
        match kind {
            ParamKind::EdgeLength => s.edge_length_km = value,
            _ if self.qkd_setup.is_some() => {
                return Err(domain("internal receiver parameters are fixed by the QKD setup"));
            }
            ParamKind::InternalLoss => {
                s.recv = match self.family {
                    Family::AmplitudeDamping => ChannelSpec::amplitude_damping(value)?,
                    Family::ThermalLoss => ChannelSpec::thermal_loss(1.0 - value, self.recv.as_thermal_loss()?.1)?,
                };
            }
            ParamKind::ReceiverNoise => {
                if self.family != Family::ThermalLoss {
                    return Err(Error::Family("receiver noise needs thermal-loss channels".into()));
                }
                s.recv = ChannelSpec::thermal_loss(self.recv.as_thermal_loss()?.0, value)?;
            }
        }
        Ok(s)
    }

    /// Node template for a link of transmissivity `eta`.
    fn node(&self, id: &str, eta: f64) -> Result<NodeSpec> {
        for c in [self.recv, self.send] {
            c.validate()?;
            if c.family().is_some_and(|f| f != self.family) {
                return Err(Error::Family(format!("node internals are not {} channels", self.family)));
            }
        }
        let recv = match self.qkd()? {
            Some(q) => q.receiver_channel(eta)?,
            None => self.recv,
        };
        Ok(NodeSpec::with_internals(id, recv, self.send))
    }

    /// Transmissivity of a fibre link of the given length.
    fn eta(&self, length_km: f64) -> Result<f64> {
        Ok(self.fibre(length_km)?.transmissivity())
    }
}

/// Lattice sites and edges: users at `(0, 0)` and `(3, 0)`, plus every site
/// within `radius` lattice steps of the segment between them.
pub fn lattice(cell: CellType, radius: u32) -> (Vec<(i32, i32)>, Vec<(usize, usize)>) {
    let r = radius as i32;
    let inside = |x: i32, y: i32| match cell {
        CellType::Triangular6 => (0..=3).any(|s| {
            let (dq, dr) = (x - s, y);
            (dq.abs() + dr.abs() + (dq + dr).abs()) / 2 <= r
        }),
        CellType::Manhattan8 => (-r..=3 + r).contains(&x) && (-r..=r).contains(&y),
    };
    let mut sites = Vec::new();
    for y in -r..=r {
        for x in -2 * r..=3 + 2 * r {
            if inside(x, y) {
                sites.push((x, y));
            }
        }
    }
    let index: HashMap<(i32, i32), usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut edges = Vec::new();
    for (i, &(x, y)) in sites.iter().enumerate() {
        for &(dx, dy) in cell.offsets() {
            if let Some(&j) = index.get(&(x + dx, y + dy)) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    (sites, edges)
}

pub fn site_id((x, y): (i32, i32)) -> String {
    format!("{x},{y}")
}

/// Generate the lattice network described by `spec`.
pub fn generate(spec: &WrnSpec) -> Result<NetworkGraph> {
    if spec.radius < 2 {
        return Err(domain(format!("radius must be at least 2, got {}", spec.radius)));
    }
    let fibre = spec.fibre(spec.edge_length_km)?;
    let eta = fibre.transmissivity();
    let (sites, edges) = lattice(spec.cell, spec.radius);
    let users = [site_id((0, 0)), site_id((3, 0))];
    let mut nodes = Vec::with_capacity(sites.len());
    for &s in &sites {
        let id = site_id(s);
        let mut node = spec.node(&id, eta)?;
        if users.contains(&id) {
            node.role = Role::User;
        }
        nodes.push(node);
    }
    let link = FibreLink { length_km: fibre.length_km, gamma: None, nbar_b: None };
    let edges = edges
        .into_iter()
        .map(|(i, j)| EdgeSpec { a: nodes[i].id.clone(), b: nodes[j].id.clone(), link: EdgeLink::Fibre(link) })
        .collect();
    let [alpha, beta] = users;
    let mut graph = NetworkGraph::new(nodes, edges, alpha, beta).with_family(spec.family);
    graph.gamma = Some(fibre.gamma);
    graph.nbar_b = Some(fibre.nbar_b);
    check_weak_regularity(&graph, spec.k(), &spec.lambda())?;
    Ok(graph)
}

/// Flooding capacity of the generated lattice with every edge worth `c`
/// equals `k c`, as guaranteed for weakly-regular networks.
pub fn verify_flooding_guarantee(spec: &WrnSpec, c: f64) -> Result<bool> {
    let graph = generate(spec)?;
    verify_flooding_guarantee_graph(&graph, spec.k(), &spec.lambda(), c)
}

/// [`verify_flooding_guarantee`] for an arbitrary graph, which must be weakly regular.
pub fn verify_flooding_guarantee_graph(graph: &NetworkGraph, k: u32, lambda: &[Vec<u32>], c: f64) -> Result<bool> {
    check_weak_regularity(graph, k, lambda)?;
    let d = delta(k, lambda)?;
    let w = omega(k, d)?;
    if (d as f64) < k as f64 || w < k as f64 {
        return Err(domain(format!("uniform edges need delta, omega >= k; got {d}, {w}")));
    }
    let ids: Vec<&str> = graph.nodes.iter().map(|n| n.id.as_str()).collect();
    let edges: Vec<(&str, &str)> = graph.edges.iter().map(|e| (e.a.as_str(), e.b.as_str())).collect();
    let (a, b) = graph.end_users().expect("checked");
    let bg = crate::network::BoundedGraph::uniform(&ids, &edges, c, a, b)?;
    let value = max_flow(&bg, crate::network::Selector::Lower).value;
    Ok((value - k as f64 * c).abs() <= 1e-9 * c.max(1.0))
}

/// Parameter a threshold is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    /// Link length, km.
    #[serde(rename = "edgeLength")]
    EdgeLength,
    /// Receiver damping probability (AD) or loss `1 - tau_r` (thermal loss).
    #[serde(rename = "internalLoss")]
    InternalLoss,
    /// Receiver thermal photon number.
    #[serde(rename = "receiverNoise")]
    ReceiverNoise,
}

impl std::str::FromStr for ParamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-length" | "edgeLength" => Ok(ParamKind::EdgeLength),
            "internal-loss" | "internalLoss" => Ok(ParamKind::InternalLoss),
            "receiver-noise" | "receiverNoise" => Ok(ParamKind::ReceiverNoise),
            _ => Err(domain(format!(
                "unknown parameter {s:?} (expected edge-length, internal-loss or receiver-noise)"
            ))),
        }
    }
}

/// Admissible values of a parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomain {
    pub min: f64,
    pub max: f64,
}

impl ParamKind {
    pub fn domain(self) -> ParamDomain {
        match self {
            ParamKind::EdgeLength | ParamKind::ReceiverNoise => ParamDomain { min: 0.0, max: f64::INFINITY },
            // A receiver that loses everything has no defined bound.
            ParamKind::InternalLoss => ParamDomain { min: 0.0, max: 1.0 - 1e-12 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Bounding function decreasing: the solution is the largest tolerable value.
    #[serde(rename = "maxTolerable")]
    MaxTolerable,
    /// Bounding function increasing: the solution is the least required value.
    #[serde(rename = "minRequired")]
    MinRequired,
}

/// Starting bracket for the root search, in the parameter's natural units.
pub const INITIAL_BRACKET: (f64, f64) = (1e-6, 1e3);
pub const MAX_EXPANSIONS: u32 = 60;
pub const MONOTONICITY_SAMPLES: usize = 64;
pub const XI_RTOL: f64 = 1e-9;
pub const RESULT_RTOL: f64 = 1e-6;

/// Solution of `x F(xi) = target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Solution {
    pub xi: f64,
    pub direction: Direction,
}

/// Sample `f` on a uniform grid over `[lo, hi]` and reject it unless the
/// samples are non-increasing or non-decreasing.
fn check_monotone<F>(f: &F, lo: f64, hi: f64) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let values = (0..MONOTONICITY_SAMPLES)
        .map(|i| f(lo + (hi - lo) * i as f64 / (MONOTONICITY_SAMPLES - 1) as f64))
        .collect::<Result<Vec<f64>>>()?;
    let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    let up = values.windows(2).all(|w| w[1] >= w[0] - slack(w[0], w[1]));
    let down = values.windows(2).all(|w| w[1] <= w[0] + slack(w[0], w[1]));
    if up || down {
        Ok(())
    } else {
        Err(Error::Monotonicity { lo, hi })
    }
}

/// Solve `x F(xi) = target` for a monotone `F`.
///
/// The root of the log-ratio cost `ln(x F) - ln(target)` is bracketed
/// starting from [`INITIAL_BRACKET`], checked for monotonicity by sampling,
/// then refined by bisection.
pub fn solve_threshold<F>(f: F, target: f64, scale: f64, dom: ParamDomain) -> Result<Solution>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(target > 0.0 && target.is_finite() && scale > 0.0 && scale.is_finite()) {
        return Err(domain(format!("target {target} and scale {scale} must be positive")));
    }
    let goal = target / scale;
    let cost = |xi: f64| -> Result<f64> {
        let v = f(xi)?;
        if v.is_nan() || v < 0.0 {
            return Err(domain(format!("bounding function returned {v} at {xi}")));
        }
        Ok(v.ln() - goal.ln())
    };

    let mut lo = INITIAL_BRACKET.0.clamp(dom.min, dom.max);
    let mut hi = INITIAL_BRACKET.1.clamp(dom.min, dom.max);
    let mut c_lo = cost(lo)?;
    let mut c_hi = cost(hi)?;
    let mut expansions = 0;
    // A side stops growing at the domain boundary or where the bounding
    // function can no longer be evaluated (e.g. transmissivity underflow).
    let (mut lo_open, mut hi_open) = (lo > dom.min, hi < dom.max);
    while c_lo.signum() == c_hi.signum() && c_lo != 0.0 && c_hi != 0.0 {
        if expansions == MAX_EXPANSIONS || !(lo_open || hi_open) {
            check_monotone(&f, lo, hi)?;
            let reach = f(lo)?.max(f(hi)?);
            return Err(Error::NotAttainable {
                target,
                reason: format!(
                    "per-edge value {goal:.6e} is outside the range reached on [{lo:.3e}, {hi:.3e}] (largest {:.6e})",
                    reach
                ),
            });
        }
        if lo_open {
            let next = (lo / 2.0).max(dom.min);
            match cost(next) {
                Ok(c) => (lo, c_lo, lo_open) = (next, c, next > dom.min),
                Err(Error::Domain(_)) => lo_open = false,
                Err(e) => return Err(e),
            }
        }
        if hi_open {
            let next = (hi * 2.0).min(dom.max);
            match cost(next) {
                Ok(c) => (hi, c_hi, hi_open) = (next, c, next < dom.max),
                Err(Error::Domain(_)) => hi_open = false,
                Err(e) => return Err(e),
            }
        }
        expansions += 1;
    }

    check_monotone(&f, lo, hi)?;
    let decreasing = c_lo > c_hi;
    let direction = if decreasing { Direction::MaxTolerable } else { Direction::MinRequired };

    if c_lo == 0.0 {
        return Ok(Solution { xi: lo, direction });
    }
    if c_hi == 0.0 {
        return Ok(Solution { xi: hi, direction });
    }
    for _ in 0..400 {
        if hi - lo <= XI_RTOL * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let c = cost(mid)?;
        if c == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if c.signum() == c_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Of the two ends, report the one whose value is closer to the target.
    let xi = if cost(lo)?.abs() <= cost(hi)?.abs() { lo } else { hi };
    let reached = f(xi)? * scale;
    if (reached - target).abs() > RESULT_RTOL * target {
        return Err(Error::NotAttainable {
            target,
            reason: format!("bounding function jumps near {xi}; best value {reached:.6e}"),
        });
    }
    Ok(Solution { xi, direction })
}

/// Which connectivity constant scales the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Bulk edges.
    Delta,
    /// Edges at the end users.
    Omega,
}

/// Bracket of a threshold from the lower and upper bounding functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub param: ParamKind,
    pub x: Scale,
    pub x_value: f64,
    pub target: f64,
    /// Worst-case and best-case values, in that order. `None` where the
    /// corresponding bounding function cannot reach the target.
    pub bracket: [Option<f64>; 2],
    pub direction: Direction,
    /// Solution from the lower bounding function.
    pub from_lower: Option<f64>,
    /// Solution from the upper bounding function.
    pub from_upper: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ThresholdResult {
    pub fn attainable(&self) -> bool {
        self.from_lower.is_some() || self.from_upper.is_some()
    }

    /// Midpoint of the bracket when both ends exist.
    pub fn midpoint(&self) -> Option<f64> {
        match self.bracket {
            [Some(a), Some(b)] => Some(0.5 * (a + b)),
            _ => None,
        }
    }
}

/// Thresholds for the bulk and the user edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub bulk: ThresholdResult,
    pub user: ThresholdResult,
}

/// Values the parameters take when not being solved for.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FixedParams {
    /// Link length, km. Falls back to the spec's `edge_length_km`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_length_km: Option<f64>,
}

/// Single-edge bounds of the spec with parameter `kind` set to `xi`.
pub fn edge_bounds_at(spec: &WrnSpec, kind: ParamKind, xi: f64, fixed: FixedParams) -> Result<EdgeBounds> {
    let kinds = spec.bound_pair_for(kind)?;
    let mut s = spec.with_param(kind, xi)?;
    if kind != ParamKind::EdgeLength {
        s.edge_length_km = fixed.edge_length_km.unwrap_or(spec.edge_length_km);
    }
    let eta = s.eta(s.edge_length_km)?;
    let edge = fibre_channel(&s.fibre(s.edge_length_km)?, s.family)?;
    let x = s.node("x", eta)?;
    let y = s.node("y", eta)?;
    oriented_edge_bounds(&edge, &x, &y, kinds)
}

fn solve_scaled(
    spec: &WrnSpec,
    kind: ParamKind,
    target: f64,
    scale: Scale,
    fixed: FixedParams,
) -> Result<ThresholdResult> {
    let x_value = match scale {
        Scale::Delta => spec.delta()? as f64,
        Scale::Omega => spec.omega()?,
    };
    let mut notes = Vec::new();
    let mut direction = None;
    let mut solve = |upper: bool| -> Result<Option<f64>> {
        let f = |xi: f64| edge_bounds_at(spec, kind, xi, fixed).map(|b| if upper { b.upper } else { b.lower });
        match solve_threshold(f, target, x_value, kind.domain()) {
            Ok(s) => {
                direction.get_or_insert(s.direction);
                Ok(Some(s.xi))
            }
            Err(Error::NotAttainable { reason, .. }) => {
                notes.push(format!("{} bound: {reason}", if upper { "upper" } else { "lower" }));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let from_lower = solve(false)?;
    let from_upper = solve(true)?;
    let direction = direction.unwrap_or(Direction::MaxTolerable);
    // The lower bound reaches the target later than the upper bound does, so
    // its root is the pessimistic end.
    let bracket = match direction {
        Direction::MaxTolerable => [from_lower, from_upper],
        Direction::MinRequired => [from_upper, from_lower],
    };
    Ok(ThresholdResult { param: kind, x: scale, x_value, target, bracket, direction, from_lower, from_upper, notes })
}

/// Thresholds guaranteeing flooding capacity `target`, for bulk edges
/// (scaled by `delta`) and user edges (scaled by `omega`).
pub fn threshold_report(spec: &WrnSpec, target: f64, kind: ParamKind, fixed: FixedParams) -> Result<ThresholdReport> {
    Ok(ThresholdReport {
        bulk: solve_scaled(spec, kind, target, Scale::Delta, fixed)?,
        user: solve_scaled(spec, kind, target, Scale::Omega, fixed)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityResult {
    pub d_max: f64,
    pub xi_geom: f64,
    pub rho_min: f64,
}

/// Fewest nodes per km^2 compatible with links no longer than `d_max` km.
pub fn min_nodal_density(d_max: f64, cell: CellType) -> Result<DensityResult> {
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(domain(format!("d_max must be positive, got {d_max}")));
    }
    let xi_geom = cell.xi_geom();
    Ok(DensityResult { d_max, xi_geom, rho_min: xi_geom / (d_max * d_max) })
}
