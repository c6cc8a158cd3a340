//! Single-edge capacity bounds and physical orientation of an edge.
//!
//! All rates are in bits per channel use. Lower bounds come from the reverse
//! coherent information; upper bounds from squashed entanglement (amplitude
//! damping) or the relative entropy of entanglement (thermal loss). Pure loss
//! is distillable, so its lower and upper bounds coincide.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channels::{node_split_ad, node_split_tl, ChannelSpec, Family, NodeSpec};
use crate::error::{domain, Error, Result};

/// Grid resolution of the coarse pass in [`ad_rci`].
pub const AD_RCI_GRID: usize = 1001;
/// Golden-section stopping width in `u`.
pub const AD_RCI_UTOL: f64 = 1e-10;

/// Binary Shannon entropy in bits.
pub fn h2(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(domain(format!("probability {u} outside [0, 1]")));
    }
    Ok(h2_unchecked(u))
}

pub(crate) fn h2_unchecked(u: f64) -> f64 {
    xlog2x_neg(u) + xlog2x_neg(1.0 - u)
}

fn xlog2x_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// `h(x) = (x+1) log2(x+1) - x log2 x`, the entropy of a thermal state with
/// mean photon number `x`.
pub fn bosonic_h(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("mean photon number {x} must be >= 0")));
    }
    Ok(bosonic_h_unchecked(x))
}

fn bosonic_h_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        // Rearranged so large x does not cancel catastrophically.
        x.ln_1p() / LN_2 + x * x.recip().ln_1p() / LN_2
    }
}

/// `H2(u) - H2(u p)`: reverse coherent information of amplitude damping `p`
/// for an input with excitation probability `u`.
pub fn ad_rci_at(p: f64, u: f64) -> f64 {
    h2_unchecked(u) - h2_unchecked(u * p)
}

/// Reverse coherent information of an amplitude-damping channel, maximised
/// over the input excitation `u`.
///
/// A 1001-point grid locates the best cell; golden-section search then
/// refines inside the neighbouring cells. The grid pass keeps a second local
/// maximum from being missed.
pub fn ad_rci(p_tot: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_tot) {
        return Err(domain(format!("damping probability {p_tot} outside [0, 1]")));
    }
    let f = |u: f64| ad_rci_at(p_tot, u);
    let step = 1.0 / (AD_RCI_GRID - 1) as f64;
    let (best_i, best) = (0..AD_RCI_GRID)
        .map(|i| (i, f(i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let lo = (best_i.saturating_sub(1)) as f64 * step;
    let hi = ((best_i + 1).min(AD_RCI_GRID - 1)) as f64 * step;
    let refined = golden_max(f, lo, hi, AD_RCI_UTOL);
    Ok(best.max(refined).max(0.0))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.5 * (a + b)))
}

/// Squashed-entanglement upper bound of an amplitude-damping channel:
/// `H2(1/2 - p/4) - H2(1 - p/4)`.
pub fn ad_squashed(p_tot: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_tot) {
        return Err(domain(format!("damping probability {p_tot} outside [0, 1]")));
    }
    let v = h2_unchecked(0.5 - p_tot / 4.0) - h2_unchecked(1.0 - p_tot / 4.0);
    Ok(v.max(0.0))
}

fn check_open_transmissivity(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("transmissivity {eta} outside (0, 1); the bound diverges at 1")))
    }
}

/// Unclamped reverse coherent information of a thermal-loss channel.
pub fn tl_rci_raw(eta: f64, nbar: f64) -> Result<f64> {
    check_open_transmissivity(eta)?;
    let env = nbar / (1.0 - eta);
    Ok(-(1.0 - eta).log2() - bosonic_h(env)?)
}

/// Reverse coherent information lower bound of a thermal-loss channel,
/// `max(0, -log2(1-eta) - h(nbar/(1-eta)))`.
pub fn tl_rci(eta: f64, nbar: f64) -> Result<f64> {
    Ok(tl_rci_raw(eta, nbar)?.max(0.0))
}

/// Relative-entropy-of-entanglement upper bound of a thermal-loss channel.
///
/// Zero in the entanglement-breaking region `nbar >= eta` (equivalently an
/// environment occupation of at least `eta / (1 - eta)`), where the closed
/// form no longer applies. The closed form itself vanishes on that boundary.
pub fn tl_ree(eta: f64, nbar: f64) -> Result<f64> {
    let raw = tl_rci_raw(eta, nbar)?;
    if nbar >= eta {
        return Ok(0.0);
    }
    let env = nbar / (1.0 - eta);
    Ok((raw - env * eta.log2()).max(0.0))
}

/// Two-way capacity of the pure-loss channel, `-log2(1 - eta)`.
pub fn plob_pure_loss(eta: f64) -> Result<f64> {
    check_open_transmissivity(eta)?;
    Ok(-(1.0 - eta).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    RciLower,
    SquashedUpper,
    ReeUpper,
    PlobExact,
}

/// Lower and upper bounding functions used to annotate edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: BoundKind,
    pub upper: BoundKind,
}

impl BoundPair {
    pub const AD: BoundPair =
        BoundPair { lower: BoundKind::RciLower, upper: BoundKind::SquashedUpper };
    pub const THERMAL: BoundPair =
        BoundPair { lower: BoundKind::RciLower, upper: BoundKind::ReeUpper };
    pub const PURE_LOSS: BoundPair =
        BoundPair { lower: BoundKind::PlobExact, upper: BoundKind::PlobExact };

    /// Default pair for a family; `noiseless` selects the exact pure-loss capacity.
    pub fn for_family(family: Family, noiseless: bool) -> BoundPair {
        match (family, noiseless) {
            (Family::AmplitudeDamping, _) => BoundPair::AD,
            (Family::ThermalLoss, false) => BoundPair::THERMAL,
            (Family::ThermalLoss, true) => BoundPair::PURE_LOSS,
        }
    }

    pub fn check(&self, family: Family) -> Result<()> {
        let lower_ok = matches!(self.lower, BoundKind::RciLower | BoundKind::PlobExact);
        let upper_ok = !matches!(self.upper, BoundKind::RciLower);
        if !lower_ok || !upper_ok {
            return Err(Error::Family(format!(
                "{:?} cannot serve as lower and {:?} as upper bound",
                self.lower, self.upper
            )));
        }
        for kind in [self.lower, self.upper] {
            let ok = match kind {
                BoundKind::RciLower => true,
                BoundKind::SquashedUpper => family == Family::AmplitudeDamping,
                BoundKind::ReeUpper | BoundKind::PlobExact => family == Family::ThermalLoss,
            };
            if !ok {
                return Err(Error::Family(format!("{kind:?} does not apply to {family} channels")));
            }
        }
        Ok(())
    }
}

/// Physical direction of an edge, `from -> to`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Orientation {
    pub from: String,
    pub to: String,
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl Serialize for Orientation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Orientation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let (from, to) = s
            .split_once("->")
            .ok_or_else(|| serde::de::Error::custom(format!("bad orientation {s:?}")))?;
        Ok(Orientation { from: from.to_string(), to: to.to_string() })
    }
}

/// Capacity bounds of one edge after choosing the best physical direction
/// separately for each bounding function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeBounds {
    pub lower: f64,
    pub upper: f64,
    /// Direction achieving `lower`.
    pub orientation: Orientation,
    /// Direction achieving `upper`.
    pub upper_orientation: Orientation,
}

fn eval_bound(kind: BoundKind, family: Family, total: ChannelSpec) -> Result<f64> {
    match family {
        Family::AmplitudeDamping => {
            let p = total.as_damping()?;
            match kind {
                BoundKind::RciLower => ad_rci(p),
                BoundKind::SquashedUpper => ad_squashed(p),
                _ => Err(Error::Family(format!("{kind:?} does not apply to {family} channels"))),
            }
        }
        Family::ThermalLoss => {
            let (eta, nbar) = total.as_thermal_loss()?;
            if eta >= 1.0 {
                // Lossless link: the bounds diverge.
                return Ok(f64::INFINITY);
            }
            match kind {
                BoundKind::RciLower => tl_rci(eta, nbar),
                BoundKind::ReeUpper => tl_ree(eta, nbar),
                BoundKind::PlobExact if nbar == 0.0 => plob_pure_loss(eta),
                BoundKind::PlobExact => {
                    Err(Error::Family(format!("exact capacity needs pure loss, found nbar = {nbar}")))
                }
                BoundKind::SquashedUpper => {
                    Err(Error::Family(format!("{kind:?} does not apply to {family} channels")))
                }
            }
        }
    }
}

/// Total channel for the physical direction `sender -> receiver`.
pub fn directed_channel(
    edge: &ChannelSpec,
    family: Family,
    sender: &NodeSpec,
    receiver: &NodeSpec,
) -> Result<ChannelSpec> {
    match family {
        Family::AmplitudeDamping => Ok(ChannelSpec::AmplitudeDamping {
            p: node_split_ad(edge.as_damping()?, sender, receiver)?,
        }),
        Family::ThermalLoss => {
            let (tau, nbar) = node_split_tl(edge.as_thermal_loss()?, sender, receiver)?;
            Ok(ChannelSpec::ThermalLoss { tau, nbar })
        }
    }
}

/// Bounds of the edge `{x, y}`, each maximised over the two physical directions.
///
/// Ties go to the direction whose `(sender, receiver)` id pair is
/// lexicographically smaller.
pub fn oriented_edge_bounds(
    edge: &ChannelSpec,
    x: &NodeSpec,
    y: &NodeSpec,
    kinds: BoundPair,
) -> Result<EdgeBounds> {
    let family = [edge, &x.effective_send(), &x.effective_recv(), &y.effective_send(), &y.effective_recv()]
        .iter()
        .try_fold(None, |acc: Option<Family>, c| match (acc, c.family()) {
            (Some(a), Some(b)) if a != b => {
                Err(Error::Family(format!("edge {}-{} mixes {a} and {b} channels", x.id, y.id)))
            }
            (None, b) => Ok(b),
            (a, _) => Ok(a),
        })?
        // An all-identity edge is a lossless thermal-loss link.
        .unwrap_or(Family::ThermalLoss);
    kinds.check(family)?;

    let mut dirs = [(x, y), (y, x)];
    dirs.sort_by(|a, b| (&a.0.id, &a.1.id).cmp(&(&b.0.id, &b.1.id)));

    let mut lower: Option<(f64, Orientation)> = None;
    let mut upper: Option<(f64, Orientation)> = None;
    for (s, r) in dirs {
        let total = directed_channel(edge, family, s, r)?;
        let orient = Orientation { from: s.id.clone(), to: r.id.clone() };
        let lo = eval_bound(kinds.lower, family, total)?;
        let up = eval_bound(kinds.upper, family, total)?;
        if lower.as_ref().is_none_or(|(v, _)| lo > *v) {
            lower = Some((lo, orient.clone()));
        }
        if upper.as_ref().is_none_or(|(v, _)| up > *v) {
            upper = Some((up, orient));
        }
    }
    let (lower, orientation) = lower.expect("two directions evaluated");
    let (upper, upper_orientation) = upper.expect("two directions evaluated");
    // Both are valid bounds on the same capacity; rounding in the inner
    // maximisation is the only way to cross.
    let upper = upper.max(lower);
    Ok(EdgeBounds { lower, upper, orientation, upper_orientation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Dense-grid oracle for the maximisation over u.
    fn ad_rci_dense(p: f64) -> f64 {
        let n = 200_000;
        (0..=n).map(|i| ad_rci_at(p, i as f64 / n as f64)).fold(0.0, f64::max)
    }

    #[test]
    fn h2_values() {
        assert_eq!(h2(0.0).unwrap(), 0.0);
        assert_eq!(h2(1.0).unwrap(), 0.0);
        assert_eq!(h2(0.5).unwrap(), 1.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89
        assert!(close(h2(0.11).unwrap(), 0.499_915_958_164_528, 1e-12));
        assert!(close(h2(0.3).unwrap(), h2(0.7).unwrap(), 1e-15));
        assert!(h2(1.1).is_err());
        assert!(h2(-0.1).is_err());
    }

    #[test]
    fn bosonic_h_values() {
        assert_eq!(bosonic_h(0.0).unwrap(), 0.0);
        // Asymptotically log2(e x).
        let big = 1.76e16;
        assert!(close(bosonic_h(big).unwrap(), (std::f64::consts::E * big).log2(), 1e-12));
        assert!(close(bosonic_h(1.0).unwrap(), 2.0, 1e-15));
        assert!(close(bosonic_h(0.1).unwrap(), 0.483_446_685_613_664_8, 1e-12));
        assert!(bosonic_h(-1e-3).is_err());
        // Large-x asymptote log2(e x).
        let x = 1e6;
        assert!(close(bosonic_h(x).unwrap(), (std::f64::consts::E * x).log2(), 1e-6));
    }

    #[test]
    fn ad_rci_values() {
        assert!(close(ad_rci(0.0).unwrap(), 1.0, 1e-15));
        assert_eq!(ad_rci(1.0).unwrap(), 0.0);
        let v = ad_rci(0.5).unwrap();
        assert!(close(v, 0.271_553_303_163_6, 1e-9), "{v}");
        for p in [0.05, 0.3, 0.7, 0.95, 0.999] {
            assert!(close(ad_rci(p).unwrap(), ad_rci_dense(p), 1e-9));
        }
        assert!(ad_rci(1.01).is_err());
    }

    #[test]
    fn ad_squashed_values() {
        assert!(close(ad_squashed(0.0).unwrap(), 1.0, 1e-15));
        assert!(close(ad_squashed(1.0).unwrap(), 0.0, 1e-15));
        assert!(close(ad_squashed(0.5).unwrap(), 0.410_869_559_725_365, 1e-12));
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let v = ad_squashed(i as f64 / 100.0).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn thermal_bounds_values() {
        assert!(close(tl_rci(0.5, 0.0).unwrap(), 1.0, 1e-15));
        assert_eq!(tl_rci(0.1, 1.0).unwrap(), 0.0);
        assert!(tl_rci_raw(0.1, 1.0).unwrap() < 0.0);
        assert!(close(tl_rci(0.9, 0.01).unwrap(), 2.838_481_409_273_698, 1e-12));
        assert!(close(tl_ree(0.5, 0.0).unwrap(), 1.0, 1e-15));
        assert!(close(tl_ree(0.9, 0.01).unwrap(), 2.853_681_718_618_202_6, 1e-12));
        assert_eq!(tl_ree(0.1, 1.0).unwrap(), 0.0);
        assert!(tl_rci(1.0, 0.0).is_err());
        assert!(tl_ree(1.0, 0.0).is_err());
    }

    #[test]
    fn ree_vanishes_continuously_at_entanglement_breaking_edge() {
        for eta in [0.002, 0.05, 0.3, 0.8] {
            let just_inside = tl_ree(eta, eta * (1.0 - 1e-9)).unwrap();
            assert!(just_inside < 1e-7, "{eta}: {just_inside}");
        }
    }

    #[test]
    fn plob_agrees_with_thermal_bounds() {
        for i in 1..100 {
            let eta = i as f64 / 100.0;
            let c = plob_pure_loss(eta).unwrap();
            assert_eq!(c, tl_rci(eta, 0.0).unwrap());
            assert_eq!(c, tl_ree(eta, 0.0).unwrap());
        }
        assert!(close(plob_pure_loss(0.1).unwrap(), 0.152_003_093_445_049_3, 1e-12));
        assert!(plob_pure_loss(1e-12).unwrap() < 1e-11);
    }

    #[test]
    fn orientation_symmetric_nodes() {
        let node = |id: &str| {
            NodeSpec::with_internals(
                id,
                ChannelSpec::AmplitudeDamping { p: 0.2 },
                ChannelSpec::AmplitudeDamping { p: 0.1 },
            )
        };
        let b = oriented_edge_bounds(
            &ChannelSpec::AmplitudeDamping { p: 0.3 },
            &node("y"),
            &node("x"),
            BoundPair::AD,
        )
        .unwrap();
        assert_eq!(b.orientation.to_string(), "x->y");
        assert_eq!(b.upper_orientation.to_string(), "x->y");
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn orientation_avoids_lossy_receiver() {
        let x = NodeSpec::ideal("x");
        let y = NodeSpec::with_internals(
            "y",
            ChannelSpec::AmplitudeDamping { p: 0.5 },
            ChannelSpec::Identity,
        );
        let edge = ChannelSpec::AmplitudeDamping { p: 0.1 };
        let b = oriented_edge_bounds(&edge, &x, &y, BoundPair::AD).unwrap();
        // x->y: 1 - 0.9*0.5 = 0.55; y->x: 0.1.
        assert_eq!(b.orientation.to_string(), "y->x");
        assert!(close(b.lower, ad_rci(0.1).unwrap(), 1e-15));
        assert!(close(b.upper, ad_squashed(0.1).unwrap(), 1e-15));
    }

    #[test]
    fn orientation_thermal_noisy_receiver() {
        let x = NodeSpec::ideal("x");
        let y = NodeSpec::with_internals(
            "y",
            ChannelSpec::ThermalLoss { tau: 0.9, nbar: 0.05 },
            ChannelSpec::Identity,
        );
        let edge = ChannelSpec::ThermalLoss { tau: 0.5, nbar: 0.002 };
        let b = oriented_edge_bounds(&edge, &x, &y, BoundPair::THERMAL).unwrap();
        assert_eq!(b.orientation.to_string(), "y->x");
        assert!(close(b.lower, tl_rci(0.5, 0.002).unwrap(), 1e-15));
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn bound_pair_family_checks() {
        let x = NodeSpec::ideal("x");
        let y = NodeSpec::ideal("y");
        let ad = ChannelSpec::AmplitudeDamping { p: 0.1 };
        let tl = ChannelSpec::ThermalLoss { tau: 0.5, nbar: 0.1 };
        assert!(matches!(oriented_edge_bounds(&ad, &x, &y, BoundPair::THERMAL), Err(Error::Family(_))));
        assert!(matches!(oriented_edge_bounds(&tl, &x, &y, BoundPair::AD), Err(Error::Family(_))));
        assert!(matches!(oriented_edge_bounds(&tl, &x, &y, BoundPair::PURE_LOSS), Err(Error::Family(_))));
        let mixed = NodeSpec::with_internals("m", ChannelSpec::PureLoss { eta: 0.9 }, ChannelSpec::Identity);
        assert!(matches!(oriented_edge_bounds(&ad, &x, &mixed, BoundPair::AD), Err(Error::Family(_))));
    }

    #[test]
    fn lossless_edge_is_unbounded() {
        let x = NodeSpec::ideal("x");
        let y = NodeSpec::ideal("y");
        let b = oriented_edge_bounds(&ChannelSpec::Identity, &x, &y, BoundPair::PURE_LOSS).unwrap();
        assert!(b.lower.is_infinite() && b.upper.is_infinite());
    }
}
