//! Receiver noise of practical continuous-variable QKD stations.
//!
//! Coherent detection needs a local oscillator (LO). It is either sent along
//! with the signal (TLO) or generated at the receiver (LLO). Both leave
//! excess noise at the receiver, which enters the network as the thermal
//! photon number of the receiver's internal channel.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channels::{ChannelSpec, NodeSpec};
use crate::error::{domain, Error, Result};

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoScheme {
    /// Transmitted local oscillator.
    #[serde(rename = "TLO")]
    Transmitted,
    /// Locally generated local oscillator.
    #[serde(rename = "LLO")]
    Local,
}

/// Detector and source parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QkdSetup {
    /// Wavelength, m.
    pub wavelength: f64,
    /// Detector efficiency.
    pub tau_eff: f64,
    /// Shot-noise units of the detection: 1 homodyne, 2 heterodyne.
    pub nu_det: u8,
    /// Detector bandwidth, Hz.
    pub bandwidth: f64,
    /// Thermal noise of the fibre channel.
    pub nbar_b: f64,
    /// Noise-equivalent power, W/sqrt(Hz).
    pub nep: f64,
    /// LO power, W.
    pub p_lo: f64,
    /// Laser linewidth, Hz.
    pub linewidth: f64,
    /// Clock rate, Hz.
    pub clock: f64,
    /// Signal pulse duration, s. Carried for completeness; no formula uses it.
    pub dt: f64,
    /// LO pulse duration, s.
    pub dt_lo: f64,
    /// Modulation variance.
    pub mu: f64,
    pub scheme: LoScheme,
}

impl Default for QkdSetup {
    fn default() -> Self {
        QkdSetup {
            wavelength: 800e-9,
            tau_eff: 0.8,
            nu_det: 2,
            bandwidth: 1e8,
            nbar_b: 0.002,
            nep: 6e-12,
            p_lo: 0.1,
            linewidth: 1600.0,
            clock: 5e6,
            dt: 1e-8,
            dt_lo: 1e-8,
            mu: 10.0,
            scheme: LoScheme::Local,
        }
    }
}

pub const PRESETS: [&str; 4] = [
    "table1-heterodyne-llo",
    "table1-heterodyne-tlo",
    "table1-homodyne-llo",
    "table1-homodyne-tlo",
];

/// Named setups built on the default parameter table.
pub fn preset(name: &str) -> Result<QkdSetup> {
    let base = QkdSetup::default();
    let (nu_det, scheme) = match name {
        "table1-heterodyne-llo" => (2, LoScheme::Local),
        "table1-heterodyne-tlo" => (2, LoScheme::Transmitted),
        "table1-homodyne-llo" => (1, LoScheme::Local),
        "table1-homodyne-tlo" => (1, LoScheme::Transmitted),
        _ => return Err(Error::NotFound(format!("qkd preset {name:?} (known: {})", PRESETS.join(", ")))),
    };
    Ok(QkdSetup { nu_det, scheme, ..base })
}

impl QkdSetup {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("tau_eff", self.tau_eff),
            ("bandwidth", self.bandwidth),
            ("p_lo", self.p_lo),
            ("clock", self.clock),
            ("dt", self.dt),
            ("dt_lo", self.dt_lo),
            ("mu", self.mu),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("nbar_b", self.nbar_b), ("nep", self.nep), ("linewidth", self.linewidth)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.tau_eff > 1.0 {
            return Err(domain(format!("tau_eff must not exceed 1, got {}", self.tau_eff)));
        }
        if self.mu < 1.0 {
            return Err(domain(format!("mu must be at least 1, got {}", self.mu)));
        }
        if !matches!(self.nu_det, 1 | 2) {
            return Err(domain(format!("nu_det must be 1 or 2, got {}", self.nu_det)));
        }
        Ok(())
    }

    /// Optical frequency `c / lambda`, Hz.
    pub fn frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength
    }

    /// Phase noise `pi (mu - 1) l_W / C`.
    pub fn theta_ph(&self) -> f64 {
        PI * (self.mu - 1.0) * self.linewidth / self.clock
    }

    /// Electronic noise `nu_det NEP^2 W dt_LO / (2 h nu P)` for LO power `p_lo_det` at the detector.
    pub fn theta_el(&self, p_lo_det: f64) -> Result<f64> {
        if !(p_lo_det.is_finite() && p_lo_det > 0.0) {
            return Err(domain(format!("detected LO power must be positive, got {p_lo_det}")));
        }
        let nu_det = f64::from(self.nu_det);
        Ok(nu_det * self.nep * self.nep * self.bandwidth * self.dt_lo
            / (2.0 * PLANCK * self.frequency() * p_lo_det))
    }

    /// Receiver excess noise for a link of transmissivity `eta`.
    pub fn receiver_noise(&self, eta: f64) -> Result<f64> {
        self.validate()?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(domain(format!("transmissivity must lie in (0, 1], got {eta}")));
        }
        match self.scheme {
            LoScheme::Local => Ok(eta * self.tau_eff * self.theta_ph() + self.theta_el(self.p_lo)?),
            // The LO travels with the signal and is attenuated like it.
            LoScheme::Transmitted => self.theta_el(eta * self.tau_eff * self.p_lo),
        }
    }

    /// Internal receive channel of a station on a link of transmissivity `eta`.
    pub fn receiver_channel(&self, eta: f64) -> Result<ChannelSpec> {
        ChannelSpec::thermal_loss(self.tau_eff, self.receiver_noise(eta)?)
    }

    /// Station with a noisy receiver and an ideal sender.
    pub fn receiver_node(&self, id: impl Into<String>, eta: f64) -> Result<NodeSpec> {
        Ok(NodeSpec::with_internals(id, self.receiver_channel(eta)?, ChannelSpec::Identity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn phase_noise() {
        let s = QkdSetup::default();
        assert!(rel(s.theta_ph(), 9.047_786_842_338_604e-3) < 1e-12);
        assert_eq!(QkdSetup { mu: 1.0, ..s }.theta_ph(), 0.0);
        let doubled = QkdSetup { linewidth: 3200.0, ..s }.theta_ph();
        assert!(rel(doubled, 2.0 * s.theta_ph()) < 1e-15);
    }

    #[test]
    fn electronic_noise() {
        let het = preset("table1-heterodyne-llo").unwrap();
        let hom = preset("table1-homodyne-llo").unwrap();
        let v = het.theta_el(0.1).unwrap();
        assert!(rel(v, 1.449_825_571_452_300_3e-3) < 1e-12);
        assert!(rel(hom.theta_el(0.1).unwrap(), v / 2.0) < 1e-15);
        assert!(rel(het.theta_el(0.05).unwrap(), 2.0 * v) < 1e-15);
        assert!(het.theta_el(0.0).is_err());
        assert_eq!(QkdSetup { nep: 0.0, ..het }.theta_el(0.1).unwrap(), 0.0);
    }

    #[test]
    fn receiver_noise_examples() {
        let llo = preset("table1-heterodyne-llo").unwrap();
        assert!(rel(llo.receiver_noise(1.0).unwrap(), 8.688_055_045_323_183e-3) < 1e-12);

        let tlo = preset("table1-heterodyne-tlo").unwrap();
        let unit = QkdSetup { tau_eff: 1.0, ..tlo };
        assert_eq!(unit.receiver_noise(1.0).unwrap(), unit.theta_el(unit.p_lo).unwrap());
        assert!(tlo.receiver_noise(0.0).is_err());

        let no_phase = QkdSetup { linewidth: 0.0, ..llo };
        assert_eq!(no_phase.receiver_noise(0.3).unwrap(), no_phase.theta_el(0.1).unwrap());
    }

    #[test]
    fn tlo_overtakes_llo_at_low_transmissivity() {
        let llo = preset("table1-heterodyne-llo").unwrap();
        let tlo = preset("table1-heterodyne-tlo").unwrap();
        assert!(tlo.receiver_noise(1.0).unwrap() < llo.receiver_noise(1.0).unwrap());
        assert!(tlo.receiver_noise(0.1).unwrap() > llo.receiver_noise(0.1).unwrap());
    }

    #[test]
    fn monotone_in_transmissivity() {
        let llo = preset("table1-heterodyne-llo").unwrap();
        let tlo = preset("table1-heterodyne-tlo").unwrap();
        let bound = llo.tau_eff * llo.theta_ph() + llo.theta_el(llo.p_lo).unwrap();
        let etas: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
        for w in etas.windows(2) {
            assert!(llo.receiver_noise(w[0]).unwrap() < llo.receiver_noise(w[1]).unwrap());
            assert!(tlo.receiver_noise(w[0]).unwrap() > tlo.receiver_noise(w[1]).unwrap());
            assert!(llo.receiver_noise(w[1]).unwrap() <= bound + 1e-18);
        }
    }

    #[test]
    fn noise_is_dimensionless() {
        // Rescaling power and bandwidth units together leaves the noise unchanged.
        let s = QkdSetup::default();
        let scaled = QkdSetup { nep: s.nep * 10.0, bandwidth: s.bandwidth / 100.0, ..s };
        assert!(rel(scaled.theta_el(0.1).unwrap(), s.theta_el(0.1).unwrap()) < 1e-12);
        let slow = QkdSetup { linewidth: s.linewidth * 3.0, clock: s.clock * 3.0, ..s };
        assert!(rel(slow.theta_ph(), s.theta_ph()) < 1e-12);
    }

    #[test]
    fn presets_and_json() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(matches!(preset("nope"), Err(Error::NotFound(_))));
        let s: QkdSetup = serde_json::from_str(r#"{"scheme": "TLO", "p_lo": 0.2}"#).unwrap();
        assert_eq!(s.scheme, LoScheme::Transmitted);
        assert_eq!(s.tau_eff, 0.8);
        assert!(serde_json::from_str::<QkdSetup>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn receiver_node_has_ideal_sender() {
        let n = preset("table1-heterodyne-tlo").unwrap().receiver_node("r", 0.5).unwrap();
        assert_eq!(n.send, ChannelSpec::Identity);
        assert!(matches!(n.recv, ChannelSpec::ThermalLoss { tau, .. } if tau == 0.8));
    }
}
