//! Point-to-point channel descriptions and their reductions.
//!
//! Two channel families are supported: qubit amplitude damping and bosonic
//! thermal loss (pure loss being thermal loss with zero added noise). A chain
//! of same-family channels always collapses to a single channel of that
//! family, which is what makes node splitting tractable: each repeater is
//! modelled as `receiver -> user -> sender` with an internal channel on each
//! hop, and the end-to-end channel between two user nodes is the reduction of
//! `sender.send`, the external link, and `receiver.recv`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance below which a negative reduced photon number is rounding noise.
pub const NBAR_CLAMP: f64 = 1e-12;

/// A single point-to-point quantum channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
#[derive(Default)]
pub enum ChannelSpec {
    /// Qubit amplitude damping with damping probability `p`.
    #[serde(rename = "ad")]
    AmplitudeDamping { p: f64 },
    /// Bosonic thermal loss with transmissivity `tau` and `nbar` output thermal photons.
    #[serde(rename = "tl")]
    ThermalLoss { tau: f64, nbar: f64 },
    /// Bosonic pure loss; identical to `ThermalLoss { tau: eta, nbar: 0 }`.
    #[serde(rename = "pl")]
    PureLoss { eta: f64 },
    #[serde(rename = "id")]
    #[default]
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ad")]
    AmplitudeDamping,
    #[serde(rename = "tl")]
    ThermalLoss,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::AmplitudeDamping => write!(f, "amplitude-damping"),
            Family::ThermalLoss => write!(f, "thermal-loss"),
        }
    }
}

impl ChannelSpec {
    pub fn amplitude_damping(p: f64) -> Result<Self> {
        let c = ChannelSpec::AmplitudeDamping { p };
        c.validate()?;
        Ok(c)
    }

    pub fn thermal_loss(tau: f64, nbar: f64) -> Result<Self> {
        let c = ChannelSpec::ThermalLoss { tau, nbar };
        c.validate()?;
        Ok(c)
    }

    pub fn pure_loss(eta: f64) -> Result<Self> {
        let c = ChannelSpec::PureLoss { eta };
        c.validate()?;
        Ok(c)
    }

    /// The channel family, or `None` for the identity (compatible with both).
    pub fn family(&self) -> Option<Family> {
        match self {
            ChannelSpec::AmplitudeDamping { .. } => Some(Family::AmplitudeDamping),
            ChannelSpec::ThermalLoss { .. } | ChannelSpec::PureLoss { .. } => {
                Some(Family::ThermalLoss)
            }
            ChannelSpec::Identity => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::AmplitudeDamping { p } => check_prob(p, "p"),
            ChannelSpec::ThermalLoss { tau, nbar } => {
                check_transmissivity(tau, "tau")?;
                check_nbar(nbar, "nbar")
            }
            ChannelSpec::PureLoss { eta } => check_transmissivity(eta, "eta"),
            ChannelSpec::Identity => Ok(()),
        }
    }

    /// Damping probability when this channel can act as an amplitude-damping link.
    pub fn as_damping(&self) -> Result<f64> {
        match *self {
            ChannelSpec::AmplitudeDamping { p } => Ok(p),
            ChannelSpec::Identity => Ok(0.0),
            other => Err(Error::Family(format!(
                "expected amplitude-damping channel, found {}",
                other.family().map_or("identity".to_string(), |f| f.to_string())
            ))),
        }
    }

    /// `(tau, nbar)` when this channel can act as a thermal-loss link.
    pub fn as_thermal_loss(&self) -> Result<(f64, f64)> {
        match *self {
            ChannelSpec::ThermalLoss { tau, nbar } => Ok((tau, nbar)),
            ChannelSpec::PureLoss { eta } => Ok((eta, 0.0)),
            ChannelSpec::Identity => Ok((1.0, 0.0)),
            ChannelSpec::AmplitudeDamping { .. } => Err(Error::Family(
                "expected thermal-loss channel, found amplitude-damping".into(),
            )),
        }
    }
}


fn check_prob(p: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {p} outside [0, 1]")))
    }
}

fn check_transmissivity(t: f64, name: &str) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} = {t} outside (0, 1]")))
    }
}

fn check_nbar(n: f64, name: &str) -> Result<()> {
    if n >= 0.0 && n.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} = {n} must be a finite non-negative photon number")))
    }
}

/// Total damping probability of a chain of amplitude-damping channels.
pub fn compose_ad(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::EmptyCompound);
    }
    for &p in probs {
        check_prob(p, "p")?;
    }
    // Lossless links are identities; skipping them keeps single-link chains exact.
    let mut lossy = probs.iter().copied().filter(|&p| p > 0.0);
    match (lossy.next(), lossy.clone().next()) {
        (None, _) => Ok(0.0),
        (Some(p), None) => Ok(p),
        (Some(first), Some(_)) => {
            let survive = lossy.fold(1.0 - first, |acc, p| acc * (1.0 - p));
            Ok((1.0 - survive).clamp(0.0, 1.0))
        }
    }
}

/// Reduce a chain of thermal-loss channels `(tau, nbar)`, first applied first,
/// to a single `(tau_tot, nbar_tot)`.
///
/// Tracks the additive noise on the output covariance matrix:
/// `xi_j = tau_j * xi_{j-1} + nbar_j + |1 - tau_j| / 2` with `xi_0 = 0`, then
/// `nbar_tot = xi_N - |1 - tau_tot| / 2`.
pub fn compose_tl(channels: &[(f64, f64)]) -> Result<(f64, f64)> {
    if channels.is_empty() {
        return Err(Error::EmptyCompound);
    }
    let mut tau_tot = 1.0;
    let mut xi = 0.0;
    for &(tau, nbar) in channels {
        check_transmissivity(tau, "tau")?;
        check_nbar(nbar, "nbar")?;
        xi = tau * xi + nbar + 0.5 * (1.0 - tau).abs();
        tau_tot *= tau;
    }
    let nbar_tot = clamp_nbar(xi - 0.5 * (1.0 - tau_tot).abs())?;
    Ok((tau_tot, nbar_tot))
}

fn clamp_nbar(n: f64) -> Result<f64> {
    if n >= 0.0 {
        Ok(n)
    } else if n >= -NBAR_CLAMP {
        Ok(0.0)
    } else {
        Err(domain(format!("reduced photon number {n} is negative")))
    }
}

/// An ordered chain of channels, first applied first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundChannel {
    links: Vec<ChannelSpec>,
}

impl CompoundChannel {
    pub fn new(links: Vec<ChannelSpec>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::EmptyCompound);
        }
        for l in &links {
            l.validate()?;
        }
        let c = CompoundChannel { links };
        c.family()?;
        Ok(c)
    }

    pub fn links(&self) -> &[ChannelSpec] {
        &self.links
    }

    /// Common family of the non-identity links.
    pub fn family(&self) -> Result<Option<Family>> {
        let mut fam = None;
        for f in self.links.iter().filter_map(ChannelSpec::family) {
            match fam {
                None => fam = Some(f),
                Some(g) if g != f => {
                    return Err(Error::Family(format!("compound mixes {g} and {f} links")))
                }
                _ => {}
            }
        }
        Ok(fam)
    }

    /// Single channel equivalent to the whole chain.
    pub fn reduce(&self) -> Result<ChannelSpec> {
        match self.family()? {
            None => Ok(ChannelSpec::Identity),
            Some(Family::AmplitudeDamping) => {
                let probs = self
                    .links
                    .iter()
                    .map(ChannelSpec::as_damping)
                    .collect::<Result<Vec<_>>>()?;
                Ok(ChannelSpec::AmplitudeDamping { p: compose_ad(&probs)? })
            }
            Some(Family::ThermalLoss) => {
                let params = self
                    .links
                    .iter()
                    .map(ChannelSpec::as_thermal_loss)
                    .collect::<Result<Vec<_>>>()?;
                let (tau, nbar) = compose_tl(&params)?;
                Ok(ChannelSpec::ThermalLoss { tau, nbar })
            }
        }
    }
}

/// Optical fibre link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FibreParams {
    /// Loss rate per km (0.02 is 0.2 dB/km).
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Background thermal photons added along the link, independent of length.
    #[serde(default = "default_nbar_b", rename = "nbar_b")]
    pub nbar_b: f64,
    pub length_km: f64,
}

pub const DEFAULT_GAMMA: f64 = 0.02;
pub const DEFAULT_NBAR_B: f64 = 0.002;

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_nbar_b() -> f64 {
    DEFAULT_NBAR_B
}

impl FibreParams {
    pub fn new(length_km: f64) -> Self {
        FibreParams { gamma: DEFAULT_GAMMA, nbar_b: DEFAULT_NBAR_B, length_km }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km >= 0.0 && self.length_km.is_finite()) {
            return Err(domain(format!("fibre length {} km must be >= 0", self.length_km)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(domain(format!("fibre loss rate {} must be > 0", self.gamma)));
        }
        check_nbar(self.nbar_b, "nbar_b")
    }

    /// `10^(-gamma d)`.
    pub fn transmissivity(&self) -> f64 {
        10f64.powf(-self.gamma * self.length_km)
    }
}

/// Channel model of a fibre link in the requested family.
pub fn fibre_channel(params: &FibreParams, family: Family) -> Result<ChannelSpec> {
    params.validate()?;
    let eta = params.transmissivity();
    if eta <= 0.0 {
        return Err(domain(format!(
            "fibre of {} km has vanishing transmissivity",
            params.length_km
        )));
    }
    Ok(match family {
        Family::AmplitudeDamping => ChannelSpec::AmplitudeDamping { p: 1.0 - eta },
        Family::ThermalLoss => ChannelSpec::ThermalLoss { tau: eta, nbar: params.nbar_b },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Repeater,
    User,
}

/// A network node with its internal receive (`receiver -> user`) and send
/// (`user -> sender`) channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default)]
    pub recv: ChannelSpec,
    #[serde(default)]
    pub send: ChannelSpec,
    #[serde(default)]
    pub role: Role,
    /// When false the internal channels are ignored (ideal node).
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub split: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl NodeSpec {
    /// Ideal repeater (identity internals).
    pub fn ideal(id: impl Into<String>) -> Self {
        NodeSpec {
            id: id.into(),
            recv: ChannelSpec::Identity,
            send: ChannelSpec::Identity,
            role: Role::Repeater,
            split: true,
        }
    }

    pub fn with_internals(id: impl Into<String>, recv: ChannelSpec, send: ChannelSpec) -> Self {
        NodeSpec { recv, send, ..NodeSpec::ideal(id) }
    }

    pub fn user(mut self) -> Self {
        self.role = Role::User;
        self
    }

    /// Receive channel as seen by node splitting.
    pub fn effective_recv(&self) -> ChannelSpec {
        if self.split {
            self.recv
        } else {
            ChannelSpec::Identity
        }
    }

    pub fn effective_send(&self) -> ChannelSpec {
        if self.split {
            self.send
        } else {
            ChannelSpec::Identity
        }
    }
}

/// Total damping probability for the physical direction `sender -> receiver`.
pub fn node_split_ad(p_xy: f64, sender: &NodeSpec, receiver: &NodeSpec) -> Result<f64> {
    let p_send = sender.effective_send().as_damping()?;
    let p_recv = receiver.effective_recv().as_damping()?;
    compose_ad(&[p_send, p_xy, p_recv])
}

/// Total `(eta, nbar)` for the physical direction `sender -> receiver`:
/// `eta_tot = tau_r tau_s eta`, `nbar_tot = nbar_r + tau_r nbar_xy + eta tau_r nbar_s`.
pub fn node_split_tl(
    edge: (f64, f64),
    sender: &NodeSpec,
    receiver: &NodeSpec,
) -> Result<(f64, f64)> {
    let (eta, nbar_xy) = edge;
    check_transmissivity(eta, "eta")?;
    check_nbar(nbar_xy, "nbar")?;
    let (tau_s, nbar_s) = sender.effective_send().as_thermal_loss()?;
    let (tau_r, nbar_r) = receiver.effective_recv().as_thermal_loss()?;
    let eta_tot = tau_r * tau_s * eta;
    let nbar_tot = nbar_r + tau_r * nbar_xy + eta * tau_r * nbar_s;
    Ok((eta_tot, nbar_tot))
}
