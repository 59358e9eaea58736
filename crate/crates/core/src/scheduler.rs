//! Per-mini-slot URLLC admission and the Monte-Carlo run loop.
//!
//! Each mini-slot, requests carried over from the previous mini-slot are
//! matched to free RBs first; then new arrivals are matched to what is left.
//! A matched request is superposed when the pair gate admits its type and
//! punctures otherwise. New arrivals that find no RB wait one mini-slot;
//! carried requests that again find none are dropped.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::contract::{
    bs_utility, classify_type, design_bundle, superposition_gate, urllc_utility, ContractBundle,
    ContractItem, PairContext, PricingParams, Scheme, TypeLadder, TypeTier,
};
use crate::error::{invalid, Error, Result};
use crate::frame::{
    assign_embb, draw_arrivals, rng_from_seed, CellMode, FrameConfig, FrameGrid, Role, UserId,
    UserProfile,
};
use crate::matching::{
    build_embb_prefs, build_urllc_prefs, deferred_acceptance, GainOrder, Matching,
    PreferenceProfile,
};
use crate::phy::{
    embb_clean_rate, embb_superposed_sinr, shannon_rate, sinr, FblModel, LinkState, RadioParams,
};

/// Relative bracket width at which power bisection stops.
pub const POWER_REL_TOL: f64 = 1e-6;

/// Smallest URLLC power meeting `target_rate` (bit/s) on `link`.
///
/// Bisects the interference-free finite-blocklength rate on
/// `[0, urllc_max_power]` and returns the feasible end of the final bracket,
/// so the result always meets the target.
pub fn allocate_power(
    link: &LinkState,
    target_rate: f64,
    radio: &RadioParams,
    fbl: &FblModel,
) -> Result<f64> {
    if !(target_rate >= 0.0 && target_rate.is_finite()) {
        return Err(Error::Domain(format!("rate target {target_rate} must be finite and >= 0")));
    }
    if target_rate == 0.0 {
        return Ok(0.0);
    }
    let rate_at = |p: f64| -> Result<f64> { Ok(fbl.rate(sinr(p, link.gain, 0.0, radio.noise_power)?)) };
    let max_rate = rate_at(radio.urllc_max_power)?;
    if max_rate < target_rate {
        return Err(Error::Unreachable {
            target_bps: target_rate,
            max_rate_bps: max_rate,
        });
    }
    let (mut lo, mut hi) = (0.0, radio.urllc_max_power);
    while hi - lo > POWER_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? >= target_rate {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Which scheduler handles URLLC traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Policy {
    /// Contract-driven choice between superposition and puncturing.
    Contract,
    /// Every admitted packet punctures its RB.
    Puncture,
    /// URLLC traffic absent; eMBB keeps every cell.
    NoUrllc,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Contract, Policy::Puncture, Policy::NoUrllc];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Contract => "contract",
            Policy::Puncture => "puncture",
            Policy::NoUrllc => "nourllc",
        }
    }
}

impl core::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| invalid("scheme", format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    pub radio: RadioParams,
    pub frame: FrameConfig,
    pub pricing: PricingParams,
    /// Promised-rate increment per tier, as a fraction of the required rate.
    pub rate_step: f64,
    pub gain_order: GainOrder,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            radio: RadioParams::default(),
            frame: FrameConfig::default(),
            pricing: PricingParams::default(),
            rate_step: 0.05,
            gain_order: GainOrder::Ascending,
        }
    }
}

impl SchedulerConfig {
    /// Rate that delivers one packet within one mini-slot, bit/s.
    pub fn required_rate(&self) -> f64 {
        f64::from(self.radio.urllc_packet_bits) / self.frame.mini_slot
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.frame.validate()?;
        self.pricing.validate()?;
        if !(self.rate_step >= 0.0 && self.rate_step.is_finite()) {
            return Err(invalid("rate_step", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// One URLLC packet awaiting a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub id: u32,
    pub user: UserId,
    /// Global mini-slot index of arrival.
    pub arrival: u64,
    pub tier: TypeTier,
    pub link: LinkState,
    /// Allocated power, `None` when the promised rate is out of reach.
    pub power: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Promised rate unreachable at the power cap.
    Unreachable,
    /// No free RB in the arrival mini-slot or the next.
    NoResource,
}

/// Placement of one scheduled packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub request: u32,
    pub user: UserId,
    pub arrival: u64,
    /// Global mini-slot index of transmission.
    pub placed: u64,
    pub rb: usize,
    pub embb_owner: UserId,
    pub scheme: Scheme,
    pub power: f64,
    pub tier: TypeTier,
    pub item: ContractItem,
    /// Achieved URLLC rate, bit/s.
    pub urllc_rate: f64,
    /// eMBB rate in the cell during this mini-slot, bit/s.
    pub embb_rate: f64,
    pub urllc_utility: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotOutcome {
    pub decisions: Vec<Decision>,
    /// Carried-request matching first, then the new-arrival matching.
    pub matchings: Vec<Matching>,
    pub carry: Vec<Request>,
    pub drops: Vec<(Request, DropReason)>,
}

/// Grid and eMBB channel state of one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct TtiState {
    pub grid: FrameGrid,
    /// Link of each RB's owner.
    pub rb_links: Vec<LinkState>,
    /// Global index of the TTI's first mini-slot.
    pub first_slot: u64,
}

/// Completed TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub grid: FrameGrid,
    pub matchings: Vec<Matching>,
    pub decisions: BTreeMap<u32, Decision>,
    pub drops: Vec<(Request, DropReason)>,
    /// eMBB bits delivered in the TTI.
    pub embb_volume: f64,
    pub bs_profit: f64,
    pub urllc_network_utility: f64,
}

/// Per-TTI averages and run totals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricSet {
    pub ttis: u64,
    /// eMBB sum rate, bit/s.
    pub embb_sum_rate: f64,
    pub bs_profit: f64,
    pub urllc_network_utility: f64,
    /// Superposition incentives paid out.
    pub incentive_paid: f64,
    pub arrivals: u64,
    pub scheduled: u64,
    pub superposed: u64,
    pub punctured: u64,
    pub drops: u64,
    pub drops_unreachable: u64,
    pub drops_no_resource: u64,
    /// Scheduled packets below the required rate.
    pub reliability_violations: u64,
    /// Scheduled packets placed outside their arrival or next mini-slot.
    pub latency_violations: u64,
}

/// Run length, load and random streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub ttis: usize,
    /// Poisson arrivals per URLLC user per mini-slot.
    pub arrival_rate_per_user: f64,
    pub arrivals_seed: u64,
    pub sources_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub metrics: MetricSet,
    pub outcomes: Vec<ScheduleOutcome>,
}

/// eMBB bits carried by one TTI's grid.
///
/// Idle cells carry `t` times the owner's clean rate, punctured cells carry
/// nothing and superposed cells carry `t` times the rate with the URLLC layer
/// as interference. `urllc_links` supplies the occupant of each superposed
/// cell.
pub fn objective_value(
    grid: &FrameGrid,
    rb_links: &[LinkState],
    urllc_links: &BTreeMap<UserId, LinkState>,
    radio: &RadioParams,
    frame: &FrameConfig,
) -> Result<f64> {
    if rb_links.len() != grid.rb_count() {
        return Err(Error::Grid(format!(
            "{} RB links for {} RBs",
            rb_links.len(),
            grid.rb_count()
        )));
    }
    let clean: Vec<f64> = rb_links
        .iter()
        .map(|l| embb_clean_rate(l, radio))
        .collect::<Result<_>>()?;
    let mut volume = 0.0;
    for (rb, slot, cell) in grid.cells() {
        let rate = match cell.mode {
            CellMode::Idle => clean[rb],
            CellMode::Puncture => 0.0,
            CellMode::Superpose => {
                let occupant = cell.urllc_occupant.ok_or_else(|| {
                    Error::Grid(format!("superposed cell ({rb}, {slot}) has no occupant"))
                })?;
                let ul = urllc_links.get(&occupant).ok_or_else(|| {
                    Error::Domain(format!("no link for URLLC user {occupant}"))
                })?;
                shannon_rate(
                    embb_superposed_sinr(&rb_links[rb], ul, radio.embb_tx_power, cell.urllc_power, radio)?,
                    radio.rb_bandwidth,
                )
            }
        };
        volume += frame.mini_slot * rate;
    }
    Ok(volume)
}

/// A policy bound to a type ladder and its designed contract bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduler {
    config: SchedulerConfig,
    ladder: TypeLadder,
    bundle: ContractBundle,
    fbl: FblModel,
    policy: Policy,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig, ladder: TypeLadder, policy: Policy) -> Result<Self> {
        config.validate()?;
        let bundle = design_bundle(
            &ladder,
            &PairContext {
                required_rate: config.required_rate(),
                rate_step: config.rate_step,
                pricing: config.pricing,
            },
        )?;
        let fbl = config.radio.fbl_model()?;
        Ok(Scheduler {
            config,
            ladder,
            bundle,
            fbl,
            policy,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn ladder(&self) -> &TypeLadder {
        &self.ladder
    }

    pub fn bundle(&self) -> &ContractBundle {
        &self.bundle
    }

    pub fn fbl(&self) -> &FblModel {
        &self.fbl
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Classifies `user`, looks up its contract item and allocates power for
    /// the promised rate.
    pub fn request(&self, id: u32, user: &UserProfile, arrival: u64) -> Result<Request> {
        let tier = classify_type(user, &self.ladder)?;
        let link = user.link()?;
        let target = self.bundle.item(tier.index).promised_rate;
        let power = match allocate_power(&link, target, &self.config.radio, &self.fbl) {
            Ok(p) => Some(p),
            Err(Error::Unreachable { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Request {
            id,
            user: user.id,
            arrival,
            tier,
            link,
            power,
        })
    }

    /// Fresh grid with eMBB owners assigned.
    pub fn start_tti(&self, embb_users: &[(UserId, LinkState)], first_slot: u64) -> Result<TtiState> {
        let grid = assign_embb(FrameGrid::new(&self.config.frame), embb_users)?;
        let rb_links = (0..grid.rb_count())
            .map(|rb| {
                let owner = grid.owner(rb);
                embb_users
                    .iter()
                    .find(|(id, _)| Some(*id) == owner)
                    .map(|(_, l)| *l)
                    .ok_or_else(|| Error::Grid(format!("RB {rb} has no eMBB owner")))
            })
            .collect::<Result<_>>()?;
        Ok(TtiState {
            grid,
            rb_links,
            first_slot,
        })
    }

    /// Schedules one mini-slot: carried requests first, then new arrivals.
    ///
    /// Under [`Policy::NoUrllc`] arrivals are ignored.
    pub fn schedule_minislot(
        &self,
        tti: &mut TtiState,
        slot: usize,
        carried: Vec<Request>,
        arrivals: Vec<Request>,
    ) -> Result<SlotOutcome> {
        let mut out = SlotOutcome::default();
        if self.policy == Policy::NoUrllc {
            return Ok(out);
        }
        if slot >= tti.grid.minislots() {
            return Err(Error::Grid(format!("mini-slot {slot} out of range")));
        }
        let (carried, stuck) = split_reachable(carried);
        let (arrivals, unreachable) = split_reachable(arrivals);
        out.drops.extend(
            stuck
                .into_iter()
                .chain(unreachable)
                .map(|r| (r, DropReason::Unreachable)),
        );
        let missed = self.admit(tti, slot, carried, &mut out)?;
        out.drops.extend(missed.into_iter().map(|r| (r, DropReason::NoResource)));
        out.carry = self.admit(tti, slot, arrivals, &mut out)?;
        Ok(out)
    }

    fn admit(
        &self,
        tti: &mut TtiState,
        slot: usize,
        requests: Vec<Request>,
        out: &mut SlotOutcome,
    ) -> Result<Vec<Request>> {
        let free: Vec<usize> = tti.grid.free_rbs(slot).collect();
        if requests.is_empty() || free.is_empty() {
            return Ok(requests);
        }
        let types: BTreeMap<UserId, f64> = requests
            .iter()
            .map(|r| (UserId(r.id), r.tier.value))
            .collect();
        let embb_prefs = free
            .iter()
            .map(|&rb| build_embb_prefs(rb_key(rb), &types))
            .collect::<Result<Vec<PreferenceProfile>>>()?;
        let candidates: Vec<(UserId, LinkState)> =
            free.iter().map(|&rb| (rb_key(rb), tti.rb_links[rb])).collect();
        let urllc_prefs = requests
            .iter()
            .map(|r| build_urllc_prefs(UserId(r.id), &candidates, self.config.gain_order))
            .collect::<Result<Vec<PreferenceProfile>>>()?;
        let matching = deferred_acceptance(&embb_prefs, &urllc_prefs);
        let mut rest = Vec::new();
        for req in requests {
            match matching.partner_of_urllc(UserId(req.id)) {
                Some(rb) => out.decisions.push(self.place(tti, slot, rb.0 as usize, req)?),
                None => rest.push(req),
            }
        }
        out.matchings.push(matching);
        Ok(rest)
    }

    fn place(&self, tti: &mut TtiState, slot: usize, rb: usize, req: Request) -> Result<Decision> {
        let radio = &self.config.radio;
        let power = req
            .power
            .ok_or_else(|| Error::Domain(format!("request {} has no feasible power", req.id)))?;
        let item = *self.bundle.item(req.tier.index);
        let embb_link = tti.rb_links[rb];
        let scheme = match self.policy {
            Policy::Contract => superposition_gate(
                Some(&embb_link),
                &req.link,
                power,
                item.promised_rate,
                radio,
                &self.fbl,
                &self.ladder,
            )?
            .scheme_for(req.tier.value),
            _ => Scheme::Puncture,
        };
        let urllc_rate = self.fbl.rate(sinr(power, req.link.gain, 0.0, radio.noise_power)?);
        let (mode, embb_rate) = match scheme {
            Scheme::Superpose => (
                CellMode::Superpose,
                shannon_rate(
                    embb_superposed_sinr(&embb_link, &req.link, radio.embb_tx_power, power, radio)?,
                    radio.rb_bandwidth,
                ),
            ),
            Scheme::Puncture => (CellMode::Puncture, 0.0),
        };
        tti.grid.place_urllc(rb, slot, req.user, mode, power)?;
        Ok(Decision {
            request: req.id,
            user: req.user,
            arrival: req.arrival,
            placed: tti.first_slot + slot as u64,
            rb,
            embb_owner: tti.grid.owner(rb).expect("assigned grid"),
            scheme,
            power,
            tier: req.tier,
            item,
            urllc_rate,
            embb_rate,
            urllc_utility: urllc_utility(&item, scheme, req.tier.value),
        })
    }

    /// Runs `spec.ttis` TTIs over a fixed topology.
    ///
    /// Requests still waiting when the run ends are counted as dropped.
    pub fn simulate(&self, users: &[UserProfile], spec: &RunSpec) -> Result<RunReport> {
        let frame = &self.config.frame;
        let radio = &self.config.radio;
        let minislots = frame.minislots_per_tti();
        let embb: Vec<(UserId, LinkState)> = users
            .iter()
            .filter(|u| u.role == Role::Embb)
            .map(|u| Ok((u.id, u.link()?)))
            .collect::<Result<_>>()?;
        let urllc: Vec<&UserProfile> = users.iter().filter(|u| u.role == Role::Urllc).collect();
        let templates = urllc
            .iter()
            .map(|u| self.request(0, u, 0))
            .collect::<Result<Vec<_>>>()?;
        let urllc_links: BTreeMap<UserId, LinkState> =
            templates.iter().map(|r| (r.user, r.link)).collect();

        let counts = if self.policy == Policy::NoUrllc || urllc.is_empty() {
            alloc::vec![0; spec.ttis * minislots]
        } else {
            draw_arrivals(
                spec.arrivals_seed,
                spec.arrival_rate_per_user * urllc.len() as f64,
                spec.ttis * minislots,
            )?
        };
        let mut sources = rng_from_seed(spec.sources_seed);
        let required = self.config.required_rate();
        let mut metrics = MetricSet {
            ttis: spec.ttis as u64,
            ..MetricSet::default()
        };
        let mut outcomes = Vec::with_capacity(spec.ttis);
        let mut carry: Vec<Request> = Vec::new();
        let mut next_id: u32 = 0;

        for tti in 0..spec.ttis {
            let first_slot = (tti * minislots) as u64;
            let mut state = self.start_tti(&embb, first_slot)?;
            let mut matchings = Vec::new();
            let mut decisions = BTreeMap::new();
            let mut drops = Vec::new();
            for slot in 0..minislots {
                let global = first_slot + slot as u64;
                let arrivals: Vec<Request> = (0..counts[global as usize])
                    .map(|_| {
                        let k = sources.random_range(0..templates.len());
                        let req = Request {
                            id: next_id,
                            arrival: global,
                            ..templates[k]
                        };
                        next_id += 1;
                        req
                    })
                    .collect();
                metrics.arrivals += arrivals.len() as u64;
                let so = self.schedule_minislot(&mut state, slot, core::mem::take(&mut carry), arrivals)?;
                carry = so.carry;
                matchings.extend(so.matchings);
                drops.extend(so.drops);
                decisions.extend(so.decisions.into_iter().map(|d| (d.request, d)));
            }
            if tti + 1 == spec.ttis {
                drops.extend(core::mem::take(&mut carry).into_iter().map(|r| (r, DropReason::NoResource)));
            }
            state.grid.check_invariants()?;
            let embb_volume = objective_value(&state.grid, &state.rb_links, &urllc_links, radio, frame)?;

            let prices: Vec<f64> = decisions.values().map(|d| d.item.price).collect();
            let urllc_rates: Vec<f64> = decisions.values().map(|d| d.urllc_rate).collect();
            let mut owners: Vec<UserId> = (0..state.grid.rb_count()).filter_map(|rb| state.grid.owner(rb)).collect();
            owners.sort();
            owners.dedup();
            let embb_prices = alloc::vec![self.config.pricing.embb_price; owners.len()];
            let bs_profit = bs_utility(
                &prices,
                &embb_prices,
                &urllc_rates,
                &[embb_volume / frame.embb_tti],
                &self.config.pricing,
            );
            let urllc_network_utility: f64 = decisions.values().map(|d| d.urllc_utility).sum();

            metrics.embb_sum_rate += embb_volume / frame.embb_tti;
            metrics.bs_profit += bs_profit;
            metrics.urllc_network_utility += urllc_network_utility;
            for d in decisions.values() {
                metrics.scheduled += 1;
                match d.scheme {
                    Scheme::Superpose => {
                        metrics.superposed += 1;
                        metrics.incentive_paid += d.item.incentive;
                    }
                    Scheme::Puncture => metrics.punctured += 1,
                }
                if !(d.urllc_rate >= required) {
                    metrics.reliability_violations += 1;
                }
                if d.placed < d.arrival || d.placed - d.arrival > 1 {
                    metrics.latency_violations += 1;
                }
            }
            for (_, reason) in &drops {
                metrics.drops += 1;
                match reason {
                    DropReason::Unreachable => metrics.drops_unreachable += 1,
                    DropReason::NoResource => metrics.drops_no_resource += 1,
                }
            }
            outcomes.push(ScheduleOutcome {
                grid: state.grid,
                matchings,
                decisions,
                drops,
                embb_volume,
                bs_profit,
                urllc_network_utility,
            });
        }

        if spec.ttis > 0 {
            let n = spec.ttis as f64;
            metrics.embb_sum_rate /= n;
            metrics.bs_profit /= n;
            metrics.urllc_network_utility /= n;
            metrics.incentive_paid /= n;
        }
        Ok(RunReport { metrics, outcomes })
    }
}

fn rb_key(rb: usize) -> UserId {
    UserId(rb as u32)
}

fn split_reachable(requests: Vec<Request>) -> (Vec<Request>, Vec<Request>) {
    requests.into_iter().partition(|r| r.power.is_some())
}
