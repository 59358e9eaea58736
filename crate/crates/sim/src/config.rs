//! Scenario configuration in TOML.
//!
//! Every key has a default, so an empty file is a valid scenario. Units are
//! spelled into the key names.

use std::path::Path;

use coexist_core::contract::{PricingParams, TypeLadder};
use coexist_core::frame::FrameConfig;
use coexist_core::matching::GainOrder;
use coexist_core::phy::{dbm_to_watts, InterferenceModel, RadioParams};
use coexist_core::scheduler::{Policy, SchedulerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub noise_dbm: f64,
    pub bandwidth_mhz: f64,
    pub carrier_ghz: f64,
    pub embb_tx_power_mw: f64,
    pub urllc_max_power_w: f64,
    pub error_target: f64,
    pub packet_bytes: u32,
    /// Channel uses per URLLC codeword.
    pub blocklength: f64,
    pub interference: Interference,
}

impl Default for RadioSection {
    fn default() -> Self {
        RadioSection {
            noise_dbm: -97.5,
            bandwidth_mhz: 5.0,
            carrier_ghz: 2.0,
            embb_tx_power_mw: 0.01,
            urllc_max_power_w: 5.0,
            error_target: 1e-5,
            packet_bytes: 100,
            blocklength: 800.0,
            interference: Interference::ReceiverGain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interference {
    ReceiverGain,
    UrllcGain,
    PerfectSic,
}

impl From<Interference> for InterferenceModel {
    fn from(i: Interference) -> Self {
        match i {
            Interference::ReceiverGain => InterferenceModel::ReceiverGain,
            Interference::UrllcGain => InterferenceModel::UrllcGain,
            Interference::PerfectSic => InterferenceModel::PerfectSic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    pub tti_ms: f64,
    pub mini_slot_ms: f64,
    pub rb_count: usize,
}

impl Default for FrameSection {
    fn default() -> Self {
        FrameSection {
            tti_ms: 1.0,
            mini_slot_ms: 0.125,
            rb_count: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractSection {
    pub tiers: usize,
    /// Promised-rate increment per tier as a fraction of the required rate.
    pub rate_step: f64,
    /// Order in which URLLC users rank eMBB channel gains.
    pub urllc_preference: Preference,
}

impl Default for ContractSection {
    fn default() -> Self {
        ContractSection {
            tiers: 4,
            rate_step: 0.05,
            urllc_preference: Preference::Ascending,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingSection {
    pub urllc_price_cap: f64,
    pub embb_price: f64,
    pub incentive_share: f64,
    pub revenue_weight: f64,
    pub cost_weight: f64,
    pub cost_per_bps: f64,
    pub ir_margin: f64,
}

impl Default for PricingSection {
    fn default() -> Self {
        let p = PricingParams::default();
        PricingSection {
            urllc_price_cap: p.urllc_price_cap,
            embb_price: p.embb_price,
            incentive_share: p.incentive_share,
            revenue_weight: p.revenue_weight,
            cost_weight: p.cost_weight,
            cost_per_bps: p.cost_per_bps,
            ir_margin: p.ir_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    /// Mean arrivals per URLLC user per mini-slot.
    pub arrival_rate: f64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection { arrival_rate: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub radius_m: f64,
    pub n_embb: usize,
    pub n_urllc: usize,
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection {
            radius_m: 1000.0,
            n_embb: 20,
            n_urllc: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSelector {
    Contract,
    Puncture,
    Nourllc,
    All,
}

impl SchemeSelector {
    pub fn policies(self) -> Vec<Policy> {
        match self {
            SchemeSelector::Contract => vec![Policy::Contract],
            SchemeSelector::Puncture => vec![Policy::Puncture],
            SchemeSelector::Nourllc => vec![Policy::NoUrllc],
            SchemeSelector::All => Policy::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for SchemeSelector {
    type Err = SimError;

    fn from_str(s: &str) -> SimResult<Self> {
        match s {
            "contract" => Ok(SchemeSelector::Contract),
            "puncture" => Ok(SchemeSelector::Puncture),
            "nourllc" => Ok(SchemeSelector::Nourllc),
            "all" => Ok(SchemeSelector::All),
            _ => Err(SimError::config("sim.scheme", format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub scheme: SchemeSelector,
    pub seeds: u64,
    pub master_seed: u64,
    pub ttis: usize,
    /// URLLC user counts; empty means `topology.n_urllc` only.
    pub sweep_urllc: Vec<usize>,
    /// Error targets; empty means `radio.error_target` only.
    pub sweep_epsilon: Vec<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            scheme: SchemeSelector::All,
            seeds: 20,
            master_seed: 1,
            ttis: 100,
            sweep_urllc: Vec::new(),
            sweep_epsilon: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub radio: RadioSection,
    pub frame: FrameSection,
    pub contract: ContractSection,
    pub pricing: PricingSection,
    pub traffic: TrafficSection,
    pub topology: TopologySection,
    pub sim: SimSection,
}

fn check(ok: bool, field: &str, reason: impl Into<String>) -> SimResult<()> {
    if ok {
        Ok(())
    } else {
        Err(SimError::config(field, reason))
    }
}

fn positive(v: f64, field: &str) -> SimResult<()> {
    check(v.is_finite() && v > 0.0, field, format!("must be finite and > 0, got {v}"))
}

fn non_negative(v: f64, field: &str) -> SimResult<()> {
    check(v.is_finite() && v >= 0.0, field, format!("must be finite and >= 0, got {v}"))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> SimResult<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> SimResult<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every field, naming the first offender as `section.key`.
    pub fn validate(&self) -> SimResult<()> {
        let r = &self.radio;
        check(r.noise_dbm.is_finite(), "radio.noise_dbm", "must be finite")?;
        positive(r.bandwidth_mhz, "radio.bandwidth_mhz")?;
        positive(r.carrier_ghz, "radio.carrier_ghz")?;
        positive(r.embb_tx_power_mw, "radio.embb_tx_power_mw")?;
        positive(r.urllc_max_power_w, "radio.urllc_max_power_w")?;
        check(r.error_target > 0.0 && r.error_target < 0.5, "radio.error_target", "must lie in (0, 0.5)")?;
        check(r.packet_bytes > 0, "radio.packet_bytes", "must be >= 1")?;
        check(r.blocklength.is_finite() && r.blocklength >= 1.0, "radio.blocklength", "must be >= 1")?;

        let f = &self.frame;
        positive(f.tti_ms, "frame.tti_ms")?;
        positive(f.mini_slot_ms, "frame.mini_slot_ms")?;
        let ratio = f.tti_ms / f.mini_slot_ms;
        check(
            ratio >= 1.0 && (ratio - ratio.round()).abs() <= 1e-9 * ratio,
            "frame.mini_slot_ms",
            "the TTI must be an integer multiple of the mini-slot",
        )?;
        check(f.rb_count > 0, "frame.rb_count", "must be >= 1")?;

        let c = &self.contract;
        check(c.tiers > 0, "contract.tiers", "must be >= 1")?;
        check(c.rate_step.is_finite() && c.rate_step > 0.0 || c.tiers == 1, "contract.rate_step", "must be > 0")?;

        let p = &self.pricing;
        for (v, field) in [
            (p.urllc_price_cap, "pricing.urllc_price_cap"),
            (p.embb_price, "pricing.embb_price"),
            (p.revenue_weight, "pricing.revenue_weight"),
            (p.cost_weight, "pricing.cost_weight"),
            (p.cost_per_bps, "pricing.cost_per_bps"),
        ] {
            non_negative(v, field)?;
        }
        check((0.0..=1.0).contains(&p.incentive_share), "pricing.incentive_share", "must lie in [0, 1]")?;
        check(p.ir_margin.is_finite(), "pricing.ir_margin", "must be finite")?;

        non_negative(self.traffic.arrival_rate, "traffic.arrival_rate")?;

        let t = &self.topology;
        positive(t.radius_m, "topology.radius_m")?;
        check(t.radius_m >= 1.0, "topology.radius_m", "must be >= 1 m")?;
        check(t.n_embb > 0, "topology.n_embb", "must be >= 1")?;

        let s = &self.sim;
        check(s.seeds > 0, "sim.seeds", "must be >= 1")?;
        check(s.ttis > 0, "sim.ttis", "must be >= 1")?;
        for &e in &s.sweep_epsilon {
            check(e > 0.0 && e < 0.5, "sim.sweep_epsilon", format!("{e} outside (0, 0.5)"))?;
        }

        for eps in self.epsilons() {
            self.scheduler_config(eps).validate().map_err(|e| SimError::config("scenario", e.to_string()))?;
        }
        self.ladder()?;
        Ok(())
    }

    pub fn radio_params(&self, error_target: f64) -> RadioParams {
        let r = &self.radio;
        RadioParams {
            noise_power: dbm_to_watts(r.noise_dbm),
            rb_bandwidth: r.bandwidth_mhz * 1e6,
            carrier: r.carrier_ghz * 1e9,
            embb_tx_power: r.embb_tx_power_mw * 1e-3,
            urllc_max_power: r.urllc_max_power_w,
            error_target,
            urllc_packet_bits: r.packet_bytes * 8,
            blocklength: r.blocklength,
            interference: r.interference.into(),
        }
    }

    pub fn frame_config(&self) -> FrameConfig {
        FrameConfig {
            embb_tti: self.frame.tti_ms * 1e-3,
            mini_slot: self.frame.mini_slot_ms * 1e-3,
            rb_count: self.frame.rb_count,
        }
    }

    pub fn pricing_params(&self) -> PricingParams {
        let p = &self.pricing;
        PricingParams {
            urllc_price_cap: p.urllc_price_cap,
            embb_price: p.embb_price,
            incentive_share: p.incentive_share,
            revenue_weight: p.revenue_weight,
            cost_weight: p.cost_weight,
            cost_per_bps: p.cost_per_bps,
            ir_margin: p.ir_margin,
        }
    }

    pub fn scheduler_config(&self, error_target: f64) -> SchedulerConfig {
        SchedulerConfig {
            radio: self.radio_params(error_target),
            frame: self.frame_config(),
            pricing: self.pricing_params(),
            rate_step: self.contract.rate_step,
            gain_order: match self.contract.urllc_preference {
                Preference::Ascending => GainOrder::Ascending,
                Preference::Descending => GainOrder::Descending,
            },
        }
    }

    pub fn ladder(&self) -> SimResult<TypeLadder> {
        TypeLadder::equal_width(self.contract.tiers, self.topology.radius_m)
            .map_err(|e| SimError::config("contract.tiers", e.to_string()))
    }

    pub fn urllc_counts(&self) -> Vec<usize> {
        if self.sim.sweep_urllc.is_empty() {
            vec![self.topology.n_urllc]
        } else {
            self.sim.sweep_urllc.clone()
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        if self.sim.sweep_epsilon.is_empty() {
            vec![self.radio.error_target]
        } else {
            self.sim.sweep_epsilon.clone()
        }
    }
}

/// Parses `a:b:step` into the inclusive range `a, a+step, ..., <= b`.
pub fn parse_sweep(spec: &str) -> SimResult<Vec<usize>> {
    let err = |reason: &str| SimError::config("sweep_urllc", format!("`{spec}`: {reason}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|_| err("expected integers a:b:step")))
        .collect::<SimResult<Vec<usize>>>()?;
    let (a, b, step) = match nums.as_slice() {
        [a] => (*a, *a, 1),
        [a, b] => (*a, *b, 1),
        [a, b, s] => (*a, *b, *s),
        _ => return Err(err("expected a:b:step")),
    };
    if step == 0 {
        return Err(err("step must be >= 1"));
    }
    if a > b {
        return Err(err("start exceeds end"));
    }
    Ok((a..=b).step_by(step).collect())
}

/// Parses a comma-separated list of error targets.
pub fn parse_epsilons(list: &str) -> SimResult<Vec<f64>> {
    let values = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SimError::config("sweep_epsilon", format!("`{s}` is not a number")))
        })
        .collect::<SimResult<Vec<f64>>>()?;
    if values.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
        return Err(SimError::config("sweep_epsilon", "targets must lie in (0, 0.5)"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_core() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let sc = cfg.scheduler_config(1e-5);
        assert_eq!(sc.radio, RadioParams::default());
        assert_eq!(sc.frame, FrameConfig::default());
        assert_eq!(sc.pricing, PricingParams::default());
        assert_eq!(sc, SchedulerConfig::default());
    }

    #[test]
    fn sweeps() {
        assert_eq!(parse_sweep("5:40:5").unwrap(), vec![5, 10, 15, 20, 25, 30, 35, 40]);
        assert_eq!(parse_sweep("3").unwrap(), vec![3]);
        assert!(parse_sweep("5:1:1").is_err());
        assert!(parse_sweep("1:5:0").is_err());
        assert!(parse_sweep("a:b").is_err());
        assert_eq!(parse_epsilons("1e-3, 1e-5,1e-7").unwrap(), vec![1e-3, 1e-5, 1e-7]);
        assert!(parse_epsilons("0.7").is_err());
    }
}
