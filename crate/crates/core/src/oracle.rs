//! Exhaustive ground truth on tiny instances.
//!
//! The brute-force solver places every URLLC packet in its arrival or next
//! mini-slot on some RB, as a superposition or a puncture, at a power from a
//! discrete grid, and keeps the placement with the largest eMBB volume.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::contract::{
    bs_utility, sic_feasible, verify_feasibility, ContractBundle, PricingParams, Scheme,
    TypeLadder, Violation,
};
use crate::error::{invalid, Error, Result};
use crate::frame::{assign_embb, CellMode, FrameConfig, FrameGrid, Role, UserId, UserProfile};
use crate::matching::{is_stable, Matching, PreferenceProfile};
use crate::phy::{embb_clean_rate, embb_superposed_sinr, shannon_rate, sinr, LinkState};
use crate::scheduler::{objective_value, Policy, Request, Scheduler, SchedulerConfig};

pub const MAX_TINY_EMBB: usize = 3;
pub const MAX_TINY_URLLC: usize = 3;
pub const MAX_TINY_RBS: usize = 4;
pub const MAX_TINY_MINISLOTS: usize = 8;
pub const MAX_TINY_POWER_LEVELS: usize = 8;

/// `n` log-spaced powers from `lo` to `hi` inclusive.
pub fn log_power_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
        return Err(invalid("power_grid", format!("need 0 < lo <= hi and n >= 1, got {lo}, {hi}, {n}")));
    }
    if n == 1 {
        return Ok(vec![hi]);
    }
    let ratio = libm::log(hi / lo);
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo * libm::exp(ratio * i as f64 / (n - 1) as f64)
            }
        })
        .collect())
}

/// A URLLC packet of a tiny instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyPacket {
    pub user: UserProfile,
    /// Arrival mini-slot within the TTI.
    pub arrival: usize,
}

/// One TTI small enough to enumerate.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub embb: Vec<UserProfile>,
    pub packets: Vec<TinyPacket>,
    pub rb_count: usize,
    pub minislots: usize,
    /// Ascending; the last level is the power cap.
    pub power_grid: Vec<f64>,
}

impl TinyInstance {
    pub fn validate(&self) -> Result<()> {
        if self.embb.is_empty() || self.embb.len() > MAX_TINY_EMBB {
            return Err(invalid("n_embb", format!("must be 1..={MAX_TINY_EMBB}")));
        }
        if self.packets.len() > MAX_TINY_URLLC {
            return Err(invalid("n_urllc", format!("must be <= {MAX_TINY_URLLC}")));
        }
        if self.rb_count == 0 || self.rb_count > MAX_TINY_RBS {
            return Err(invalid("rb_count", format!("must be 1..={MAX_TINY_RBS}")));
        }
        if self.minislots == 0 || self.minislots > MAX_TINY_MINISLOTS {
            return Err(invalid("minislots", format!("must be 1..={MAX_TINY_MINISLOTS}")));
        }
        if self.power_grid.is_empty()
            || self.power_grid.len() > MAX_TINY_POWER_LEVELS
            || self.power_grid[0] <= 0.0
            || self.power_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid("power_grid", "need 1..=8 positive ascending levels"));
        }
        if self.embb.iter().any(|u| u.role != Role::Embb)
            || self.packets.iter().any(|p| p.user.role != Role::Urllc)
        {
            return Err(invalid("roles", "eMBB and URLLC lists hold the wrong roles"));
        }
        if self.packets.iter().any(|p| p.arrival >= self.minislots) {
            return Err(invalid("arrival", "arrival outside the TTI"));
        }
        Ok(())
    }

    /// Random instance with room for every packet in its arrival mini-slot
    /// and URLLC users close enough to be served.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, power_cap: f64) -> Result<Self> {
        let n_embb = rng.random_range(1..=MAX_TINY_EMBB);
        let n_urllc = rng.random_range(1..=MAX_TINY_URLLC);
        let rb_count = rng.random_range(n_urllc.max(2)..=MAX_TINY_RBS);
        let minislots = rng.random_range(2..=MAX_TINY_MINISLOTS);
        let at = |id: u32, role: Role, d: f64| UserProfile {
            id: UserId(id),
            role,
            position: (d, 0.0),
            distance_to_bs: d,
        };
        let embb = (0..n_embb)
            .map(|i| at(i as u32, Role::Embb, rng.random_range(20.0..1000.0)))
            .collect();
        let packets = (0..n_urllc)
            .map(|i| TinyPacket {
                user: at(100 + i as u32, Role::Urllc, rng.random_range(5.0..400.0)),
                arrival: rng.random_range(0..minislots),
            })
            .collect();
        let inst = TinyInstance {
            embb,
            packets,
            rb_count,
            minislots,
            power_grid: log_power_grid(1e-6, power_cap, MAX_TINY_POWER_LEVELS)?,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Frame of the instance at the configured mini-slot length.
    pub fn frame(&self, mini_slot: f64) -> FrameConfig {
        FrameConfig {
            embb_tti: mini_slot * self.minislots as f64,
            mini_slot,
            rb_count: self.rb_count,
        }
    }

    /// `config` resized to this instance, power capped at the top grid level.
    pub fn scheduler_config(&self, config: &SchedulerConfig) -> SchedulerConfig {
        let mut c = *config;
        c.frame = self.frame(config.frame.mini_slot);
        c.radio.urllc_max_power = *self.power_grid.last().expect("validated grid");
        c
    }

    fn embb_links(&self) -> Result<Vec<(UserId, LinkState)>> {
        self.embb.iter().map(|u| Ok((u.id, u.link()?))).collect()
    }

    fn urllc_links(&self) -> Result<BTreeMap<UserId, LinkState>> {
        self.packets.iter().map(|p| Ok((p.user.id, p.user.link()?))).collect()
    }
}

/// One packet's cell, mode and power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub packet: usize,
    pub rb: usize,
    pub slot: usize,
    pub scheme: Scheme,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Best eMBB volume, bits.
    pub objective: f64,
    pub assignment: Vec<Placement>,
    /// Complete feasible assignments visited.
    pub feasible_assignments: u64,
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    placement: Placement,
    loss: f64,
    urllc_rate: f64,
}

struct Prepared {
    frame: FrameConfig,
    grid: FrameGrid,
    rb_links: Vec<LinkState>,
    urllc_links: BTreeMap<UserId, LinkState>,
    options: Vec<Vec<Choice>>,
}

fn prepare(inst: &TinyInstance, config: &SchedulerConfig) -> Result<Prepared> {
    inst.validate()?;
    let cfg = inst.scheduler_config(config);
    let radio = &cfg.radio;
    let fbl = radio.fbl_model()?;
    let required = cfg.required_rate();
    let frame = cfg.frame;
    let embb = inst.embb_links()?;
    let grid = assign_embb(FrameGrid::new(&frame), &embb)?;
    let rb_links: Vec<LinkState> = (0..grid.rb_count())
        .map(|rb| {
            let owner = grid.owner(rb);
            embb.iter().find(|(id, _)| Some(*id) == owner).map(|(_, l)| *l).expect("owner exists")
        })
        .collect();
    let clean: Vec<f64> = rb_links
        .iter()
        .map(|l| embb_clean_rate(l, radio))
        .collect::<Result<_>>()?;
    let t = frame.mini_slot;
    let mut options = Vec::with_capacity(inst.packets.len());
    for (k, pkt) in inst.packets.iter().enumerate() {
        let ul = pkt.user.link()?;
        let mut opts = Vec::new();
        for rb in 0..inst.rb_count {
            for slot in [pkt.arrival, pkt.arrival + 1] {
                if slot >= inst.minislots {
                    continue;
                }
                for &p in &inst.power_grid {
                    let urllc_rate = fbl.rate(sinr(p, ul.gain, 0.0, radio.noise_power)?);
                    if urllc_rate < required {
                        continue;
                    }
                    if sic_feasible(&rb_links[rb], &ul, p, radio)? {
                        let sup = shannon_rate(
                            embb_superposed_sinr(&rb_links[rb], &ul, radio.embb_tx_power, p, radio)?,
                            radio.rb_bandwidth,
                        );
                        opts.push(Choice {
                            placement: Placement { packet: k, rb, slot, scheme: Scheme::Superpose, power: p },
                            loss: t * (clean[rb] - sup),
                            urllc_rate,
                        });
                    }
                    opts.push(Choice {
                        placement: Placement { packet: k, rb, slot, scheme: Scheme::Puncture, power: p },
                        loss: t * clean[rb],
                        urllc_rate,
                    });
                }
            }
        }
        if opts.is_empty() {
            return Err(Error::Infeasible(format!(
                "reliability: packet {k} misses the required rate at every grid power"
            )));
        }
        options.push(opts);
    }
    Ok(Prepared {
        frame,
        grid,
        rb_links,
        urllc_links: inst.urllc_links()?,
        options,
    })
}

/// Depth-first walk over every occupancy-respecting choice of one option per
/// packet; `visit` receives the chosen indices, total loss and URLLC rate sum.
fn walk(
    options: &[Vec<Choice>],
    minislots: usize,
    occupied: &mut Vec<bool>,
    chosen: &mut Vec<usize>,
    loss: f64,
    rate: f64,
    visit: &mut dyn FnMut(&[usize], f64, f64),
) {
    let k = chosen.len();
    if k == options.len() {
        visit(chosen, loss, rate);
        return;
    }
    for (i, o) in options[k].iter().enumerate() {
        let cell = o.placement.rb * minislots + o.placement.slot;
        if occupied[cell] {
            continue;
        }
        occupied[cell] = true;
        chosen.push(i);
        walk(options, minislots, occupied, chosen, loss + o.loss, rate + o.urllc_rate, visit);
        chosen.pop();
        occupied[cell] = false;
    }
}

fn enumerate(prep: &Prepared, inst: &TinyInstance, visit: &mut dyn FnMut(&[usize], f64, f64)) {
    let mut occupied = vec![false; inst.rb_count * inst.minislots];
    let mut chosen = Vec::with_capacity(inst.packets.len());
    walk(&prep.options, inst.minislots, &mut occupied, &mut chosen, 0.0, 0.0, visit);
}

fn grid_for(prep: &Prepared, inst: &TinyInstance, placements: &[Placement]) -> Result<FrameGrid> {
    let mut grid = prep.grid.clone();
    for p in placements {
        let mode = match p.scheme {
            Scheme::Superpose => CellMode::Superpose,
            Scheme::Puncture => CellMode::Puncture,
        };
        grid.place_urllc(p.rb, p.slot, inst.packets[p.packet].user.id, mode, p.power)?;
    }
    Ok(grid)
}

/// Maximises eMBB volume over every feasible placement.
///
/// Constraints: each packet served in its arrival or next mini-slot, at most
/// one packet per cell, the required URLLC rate met at the chosen grid power,
/// and superposition only where the URLLC receiver can cancel the eMBB layer.
pub fn solve_milp_bruteforce(inst: &TinyInstance, config: &SchedulerConfig) -> Result<OracleSolution> {
    let prep = prepare(inst, config)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut count = 0u64;
    enumerate(&prep, inst, &mut |chosen, loss, _| {
        count += 1;
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, chosen.to_vec()));
        }
    });
    let (_, chosen) = best.ok_or_else(|| {
        Error::Infeasible(String::from("occupancy: packets cannot share cells within their deadlines"))
    })?;
    let assignment: Vec<Placement> = chosen
        .iter()
        .enumerate()
        .map(|(k, &i)| prep.options[k][i].placement)
        .collect();
    let grid = grid_for(&prep, inst, &assignment)?;
    let objective = objective_value(&grid, &prep.rb_links, &prep.urllc_links, &config.radio, &prep.frame)?;
    Ok(OracleSolution {
        objective,
        assignment,
        feasible_assignments: count,
    })
}

/// Heuristic run on a tiny instance.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicRun {
    pub objective: f64,
    /// Objective with each power rounded up to the next grid level.
    pub objective_on_grid: f64,
    pub placements: Vec<Placement>,
    pub drops: usize,
}

/// Runs `policy` over the instance's single TTI.
pub fn run_heuristic(
    inst: &TinyInstance,
    config: &SchedulerConfig,
    ladder: &TypeLadder,
    policy: Policy,
) -> Result<HeuristicRun> {
    let prep = prepare(inst, config)?;
    let cfg = inst.scheduler_config(config);
    let scheduler = Scheduler::new(cfg, ladder.clone(), policy)?;
    let mut state = scheduler.start_tti(&inst.embb_links()?, 0)?;
    let mut carry: Vec<Request> = Vec::new();
    let mut placements = Vec::new();
    let mut drops = 0;
    for slot in 0..inst.minislots {
        let arrivals = inst
            .packets
            .iter()
            .enumerate()
            .filter(|(_, p)| p.arrival == slot)
            .map(|(k, p)| scheduler.request(k as u32, &p.user, slot as u64))
            .collect::<Result<Vec<_>>>()?;
        let out = scheduler.schedule_minislot(&mut state, slot, core::mem::take(&mut carry), arrivals)?;
        drops += out.drops.len();
        carry = out.carry;
        placements.extend(out.decisions.iter().map(|d| Placement {
            packet: d.request as usize,
            rb: d.rb,
            slot: (d.placed - state.first_slot) as usize,
            scheme: d.scheme,
            power: d.power,
        }));
    }
    drops += carry.len();
    let radio = &cfg.radio;
    let objective = objective_value(&state.grid, &state.rb_links, &prep.urllc_links, radio, &cfg.frame)?;
    let rounded: Vec<Placement> = placements
        .iter()
        .map(|p| Placement {
            power: inst
                .power_grid
                .iter()
                .copied()
                .find(|&g| g >= p.power)
                .unwrap_or(p.power),
            ..*p
        })
        .collect();
    let rounded_grid = grid_for(&prep, inst, &rounded)?;
    let objective_on_grid =
        objective_value(&rounded_grid, &state.rb_links, &prep.urllc_links, radio, &cfg.frame)?;
    Ok(HeuristicRun {
        objective,
        objective_on_grid,
        placements,
        drops,
    })
}

/// Heuristic versus brute force on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceCheck {
    pub oracle: f64,
    pub contract: f64,
    pub puncture: f64,
    /// Objective the contract heuristic loses when its powers snap to the grid.
    pub grid_allowance: f64,
    pub drops: usize,
}

impl DominanceCheck {
    /// Heuristic within the oracle optimum up to grid resolution.
    pub fn oracle_dominates(&self) -> bool {
        self.contract <= self.oracle + self.grid_allowance + 1e-9 * self.oracle.abs()
    }

    pub fn contract_beats_puncture(&self) -> bool {
        self.contract >= self.puncture
    }
}

pub fn check_dominance(
    inst: &TinyInstance,
    config: &SchedulerConfig,
    ladder: &TypeLadder,
) -> Result<DominanceCheck> {
    let oracle = solve_milp_bruteforce(inst, config)?;
    let contract = run_heuristic(inst, config, ladder, Policy::Contract)?;
    let puncture = run_heuristic(inst, config, ladder, Policy::Puncture)?;
    Ok(DominanceCheck {
        oracle: oracle.objective,
        contract: contract.objective,
        puncture: puncture.objective,
        grid_allowance: (contract.objective - contract.objective_on_grid).max(0.0),
        drops: contract.drops,
    })
}

/// Every one-to-one partial matching between the eMBB and URLLC owners.
pub fn matching_count(n: usize, m: usize) -> u64 {
    let choose = |n: u64, k: u64| -> u64 { (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1)) };
    let (n, m) = (n as u64, m as u64);
    (0..=n.min(m))
        .map(|k| choose(n, k) * choose(m, k) * (1..=k).product::<u64>())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableSet {
    pub stable: Vec<Matching>,
    /// Candidate matchings examined.
    pub candidates: u64,
}

impl StableSet {
    pub fn contains(&self, m: &Matching) -> bool {
        self.stable.iter().any(|s| s == m)
    }
}

/// Enumerates every partial matching and keeps the stable ones.
pub fn enumerate_stable_matchings(
    embb_prefs: &[PreferenceProfile],
    urllc_prefs: &[PreferenceProfile],
) -> StableSet {
    let embb: Vec<UserId> = embb_prefs.iter().map(|p| p.owner).collect();
    let urllc: Vec<UserId> = urllc_prefs.iter().map(|p| p.owner).collect();
    let mut set = StableSet {
        stable: Vec::new(),
        candidates: 0,
    };
    let mut used = vec![false; urllc.len()];
    let mut pairs = Vec::new();
    extend_matchings(&embb, &urllc, 0, &mut used, &mut pairs, &mut |pairs| {
        set.candidates += 1;
        let m = Matching::from_pairs(pairs.iter().copied()).expect("one-to-one by construction");
        if is_stable(&m, embb_prefs, urllc_prefs) {
            set.stable.push(m);
        }
    });
    set
}

/// `(urllc, embb)`.
type Pair = (UserId, UserId);

fn extend_matchings(
    embb: &[UserId],
    urllc: &[UserId],
    i: usize,
    used: &mut Vec<bool>,
    pairs: &mut Vec<Pair>,
    visit: &mut dyn FnMut(&[Pair]),
) {
    if i == embb.len() {
        visit(pairs);
        return;
    }
    extend_matchings(embb, urllc, i + 1, used, pairs, visit);
    for j in 0..urllc.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        pairs.push((urllc[j], embb[i]));
        extend_matchings(embb, urllc, i + 1, used, pairs, visit);
        pairs.pop();
        used[j] = false;
    }
}

/// How BS utility and eMBB volume rank the feasible assignments.
#[derive(Debug, Clone, PartialEq)]
pub enum Agreement {
    /// Pearson correlation of BS utility with eMBB volume.
    Correlation(f64),
    /// BS utility is constant over all assignments.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceReport {
    /// The bundle breaks IR or IC, so the BS problem has no feasible point.
    Infeasible(Vec<Violation>),
    Evaluated {
        feasible_assignments: u64,
        /// eMBB volume of the assignment that maximises BS utility.
        bs_argmax_objective: f64,
        /// Whether that assignment satisfies every volume-problem constraint.
        bs_argmax_feasible: bool,
        objective_min: f64,
        objective_max: f64,
        agreement: Agreement,
    },
}

/// Compares BS utility with eMBB volume over every feasible assignment.
///
/// Every packet pays its tier's price; each RB owner pays the eMBB price once.
pub fn check_equivalence_property(
    inst: &TinyInstance,
    config: &SchedulerConfig,
    ladder: &TypeLadder,
    bundle: &ContractBundle,
) -> Result<EquivalenceReport> {
    let report = verify_feasibility(bundle, ladder);
    if !report.is_feasible() {
        return Ok(EquivalenceReport::Infeasible(report.violations));
    }
    let prep = prepare(inst, config)?;
    let pricing: PricingParams = config.pricing;
    let prices = inst
        .packets
        .iter()
        .map(|p| Ok(bundle.item(crate::contract::classify_type(&p.user, ladder)?.index).price))
        .collect::<Result<Vec<f64>>>()?;
    let mut owners: Vec<UserId> = (0..prep.grid.rb_count()).filter_map(|rb| prep.grid.owner(rb)).collect();
    owners.sort();
    owners.dedup();
    let embb_prices = vec![pricing.embb_price; owners.len()];
    let tti = prep.frame.embb_tti;
    let base: f64 = prep
        .rb_links
        .iter()
        .map(|l| embb_clean_rate(l, &config.radio).map(|r| r * tti))
        .sum::<Result<f64>>()?;

    let mut n = 0u64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
    enumerate(&prep, inst, &mut |chosen, loss, rate| {
        let volume = base - loss;
        let utility = bs_utility(&prices, &embb_prices, &[rate], &[volume / tti], &pricing);
        n += 1;
        sx += volume;
        sy += utility;
        sxx += volume * volume;
        syy += utility * utility;
        sxy += volume * utility;
        lo = lo.min(volume);
        hi = hi.max(volume);
        umin = umin.min(utility);
        umax = umax.max(utility);
        if best.as_ref().is_none_or(|(b, _)| utility > *b) {
            best = Some((utility, chosen.to_vec()));
        }
    });
    let (_, chosen) = best.ok_or_else(|| {
        Error::Infeasible(String::from("occupancy: packets cannot share cells within their deadlines"))
    })?;
    let placements: Vec<Placement> = chosen
        .iter()
        .enumerate()
        .map(|(k, &i)| prep.options[k][i].placement)
        .collect();
    let grid = grid_for(&prep, inst, &placements)?;
    grid.check_invariants()?;
    let bs_argmax_objective =
        objective_value(&grid, &prep.rb_links, &prep.urllc_links, &config.radio, &prep.frame)?;
    let scale = umax.abs().max(1.0);
    let agreement = if umax - umin <= 1e-12 * scale {
        Agreement::Degenerate
    } else {
        let nf = n as f64;
        let cov = sxy / nf - (sx / nf) * (sy / nf);
        let vx = (sxx / nf - (sx / nf) * (sx / nf)).max(0.0);
        let vy = (syy / nf - (sy / nf) * (sy / nf)).max(0.0);
        if vx == 0.0 || vy == 0.0 {
            Agreement::Degenerate
        } else {
            Agreement::Correlation((cov / libm::sqrt(vx * vy)).clamp(-1.0, 1.0))
        }
    };
    let slack = 1e-9 * hi.abs().max(1.0);
    Ok(EquivalenceReport::Evaluated {
        feasible_assignments: n,
        bs_argmax_objective,
        bs_argmax_feasible: bs_argmax_objective >= lo - slack && bs_argmax_objective <= hi + slack,
        objective_min: lo,
        objective_max: hi,
        agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::{design_bundle, ContractItem, PairContext};
    use crate::frame::rng_from_seed;
    use crate::matching::deferred_acceptance;

    fn ids(v: &[u32]) -> Vec<UserId> {
        v.iter().map(|&i| UserId(i)).collect()
    }

    fn at(id: u32, role: Role, d: f64) -> UserProfile {
        UserProfile {
            id: UserId(id),
            role,
            position: (d, 0.0),
            distance_to_bs: d,
        }
    }

    fn small(packets: Vec<TinyPacket>) -> TinyInstance {
        TinyInstance {
            embb: vec![at(0, Role::Embb, 900.0), at(1, Role::Embb, 600.0)],
            packets,
            rb_count: 2,
            minislots: 4,
            power_grid: log_power_grid(1e-6, 5.0, 8).unwrap(),
        }
    }

    #[test]
    fn power_grid_shape() {
        let g = log_power_grid(1e-6, 5.0, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[7], 5.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_power_grid(0.0, 1.0, 8).is_err());
    }

    #[test]
    fn no_packets_gives_clean_volume() {
        let inst = small(vec![]);
        let cfg = SchedulerConfig::default();
        let sol = solve_milp_bruteforce(&inst, &cfg).unwrap();
        let frame = inst.frame(cfg.frame.mini_slot);
        let clean: f64 = inst
            .embb
            .iter()
            .map(|u| embb_clean_rate(&u.link().unwrap(), &cfg.radio).unwrap())
            .sum();
        assert!((sol.objective - frame.embb_tti * clean).abs() < 1e-9 * sol.objective);
        assert_eq!(sol.feasible_assignments, 1);
    }

    #[test]
    fn single_feasible_packet_superposes() {
        let inst = small(vec![TinyPacket {
            user: at(100, Role::Urllc, 10.0),
            arrival: 0,
        }]);
        let sol = solve_milp_bruteforce(&inst, &SchedulerConfig::default()).unwrap();
        assert_eq!(sol.assignment[0].scheme, Scheme::Superpose);
    }

    #[test]
    fn unreachable_packet_is_infeasible() {
        let mut inst = small(vec![TinyPacket {
            user: at(100, Role::Urllc, 1000.0),
            arrival: 0,
        }]);
        inst.power_grid = log_power_grid(1e-6, 0.5, 8).unwrap();
        let err = solve_milp_bruteforce(&inst, &SchedulerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref s) if s.starts_with("reliability")));
    }

    #[test]
    fn crowded_cells_are_infeasible() {
        let mut inst = small(
            (0..3)
                .map(|i| TinyPacket {
                    user: at(100 + i, Role::Urllc, 50.0),
                    arrival: 3,
                })
                .collect(),
        );
        inst.rb_count = 1;
        inst.embb.truncate(1);
        let err = solve_milp_bruteforce(&inst, &SchedulerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref s) if s.starts_with("occupancy")));
    }

    #[test]
    fn heuristic_within_oracle() {
        let cfg = SchedulerConfig::default();
        let ladder = TypeLadder::equal_width(4, 1000.0).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..10 {
            let inst = TinyInstance::random(&mut rng, cfg.radio.urllc_max_power).unwrap();
            let c = check_dominance(&inst, &cfg, &ladder).unwrap();
            assert_eq!(c.drops, 0);
            assert!(c.oracle_dominates(), "{c:?}");
            assert!(c.contract_beats_puncture(), "{c:?}");
        }
    }

    #[test]
    fn matching_counts() {
        assert_eq!(matching_count(1, 1), 2);
        assert_eq!(matching_count(2, 2), 7);
        assert_eq!(matching_count(3, 2), 13);
        assert_eq!(matching_count(6, 6), 13_327);
    }

    #[test]
    fn one_by_one() {
        let e = vec![PreferenceProfile::from_ranking(UserId(0), ids(&[10]))];
        let u = vec![PreferenceProfile::from_ranking(UserId(10), ids(&[0]))];
        let set = enumerate_stable_matchings(&e, &u);
        assert_eq!(set.candidates, 2);
        assert_eq!(set.stable.len(), 1);
        assert_eq!(set.stable[0].partner_of_embb(UserId(0)), Some(UserId(10)));
    }

    #[test]
    fn latin_square_has_several_stable_matchings() {
        let e = vec![
            PreferenceProfile::from_ranking(UserId(0), ids(&[10, 11, 12])),
            PreferenceProfile::from_ranking(UserId(1), ids(&[11, 12, 10])),
            PreferenceProfile::from_ranking(UserId(2), ids(&[12, 10, 11])),
        ];
        let u = vec![
            PreferenceProfile::from_ranking(UserId(10), ids(&[1, 2, 0])),
            PreferenceProfile::from_ranking(UserId(11), ids(&[2, 0, 1])),
            PreferenceProfile::from_ranking(UserId(12), ids(&[0, 1, 2])),
        ];
        let set = enumerate_stable_matchings(&e, &u);
        assert_eq!(set.candidates, matching_count(3, 3));
        assert_eq!(set.stable.len(), 3);
        assert!(set.contains(&deferred_acceptance(&e, &u)));
    }

    #[test]
    fn equivalence_reports() {
        let cfg = SchedulerConfig::default();
        let ladder = TypeLadder::equal_width(4, 1000.0).unwrap();
        let ctx = PairContext {
            required_rate: cfg.required_rate(),
            rate_step: cfg.rate_step,
            pricing: cfg.pricing,
        };
        let bundle = design_bundle(&ladder, &ctx).unwrap();
        let inst = small(vec![
            TinyPacket { user: at(100, Role::Urllc, 30.0), arrival: 0 },
            TinyPacket { user: at(101, Role::Urllc, 300.0), arrival: 1 },
        ]);
        match check_equivalence_property(&inst, &cfg, &ladder, &bundle).unwrap() {
            EquivalenceReport::Evaluated { bs_argmax_feasible, agreement, .. } => {
                assert!(bs_argmax_feasible);
                assert!(matches!(agreement, Agreement::Correlation(_)));
            }
            other => panic!("{other:?}"),
        }

        let mut costless = cfg;
        costless.pricing.cost_per_bps = 0.0;
        match check_equivalence_property(&inst, &costless, &ladder, &bundle).unwrap() {
            EquivalenceReport::Evaluated { agreement, .. } => assert_eq!(agreement, Agreement::Degenerate),
            other => panic!("{other:?}"),
        }

        let mut items: Vec<ContractItem> = bundle.items().to_vec();
        items[3].price = 100.0;
        let bad = ContractBundle::from_items(items);
        assert!(matches!(
            check_equivalence_property(&inst, &cfg, &ladder, &bad).unwrap(),
            EquivalenceReport::Infeasible(_)
        ));
    }
}
