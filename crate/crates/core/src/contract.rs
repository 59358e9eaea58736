//! Willingness tiers, contract bundles and the superposition/puncturing gate.
//!
//! A URLLC user of type `theta` signing item `(y, price)` earns
//! `theta * y - price`, plus the incentive `share * embb_price` when its
//! packet is superposed. Rates enter utilities in Mbit/s.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::frame::{Role, UserProfile};
use crate::phy::{
    embb_layer_sinr_at_urllc, embb_superposed_sinr, shannon_rate, sinr, FblModel, LinkState,
    RadioParams,
};

const IC_TOLERANCE: f64 = 1e-9;

/// Descending willingness values with the distance breakpoints of each tier.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeLadder {
    tiers: Vec<f64>,
    tier_radii: Vec<f64>,
}

impl TypeLadder {
    pub fn new(tiers: Vec<f64>, tier_radii: Vec<f64>) -> Result<Self> {
        if tiers.is_empty() || tiers.len() != tier_radii.len() {
            return Err(invalid(
                "tiers",
                format!("need N >= 1 tiers with N radii, got {} and {}", tiers.len(), tier_radii.len()),
            ));
        }
        if tiers.iter().any(|t| !t.is_finite()) || tiers.windows(2).any(|w| w[0] <= w[1]) {
            return Err(invalid("tiers", "type values must be finite and strictly descending"));
        }
        if tier_radii[0] <= 0.0 || tier_radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("tier_radii", "radii must be positive and strictly increasing"));
        }
        Ok(TypeLadder { tiers, tier_radii })
    }

    /// `n` equal-width rings over the cell with `theta_k = (n - k + 1) / n`.
    pub fn equal_width(n: usize, cell_radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("tiers", "need at least one tier"));
        }
        if !(cell_radius > 0.0) {
            return Err(invalid("radius", "cell radius must be > 0"));
        }
        let nf = n as f64;
        let tiers = (1..=n).map(|k| (nf - k as f64 + 1.0) / nf).collect();
        let radii = (1..=n)
            .map(|k| if k == n { cell_radius } else { cell_radius * k as f64 / nf })
            .collect();
        TypeLadder::new(tiers, radii)
    }

    pub fn len(&self) -> usize {
        self.tiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.is_empty()
    }

    pub fn tiers(&self) -> &[f64] {
        &self.tiers
    }

    pub fn tier_radii(&self) -> &[f64] {
        &self.tier_radii
    }

    pub fn cell_radius(&self) -> f64 {
        *self.tier_radii.last().expect("ladder is non-empty")
    }

    /// Threshold that no type reaches; forces puncturing.
    pub fn sentinel(&self) -> f64 {
        self.tiers[0] + 1.0
    }
}

/// A classified type: zero-based tier index and its willingness value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeTier {
    pub index: usize,
    pub value: f64,
}

/// Tier of the innermost ring containing the user.
pub fn classify_type(user: &UserProfile, ladder: &TypeLadder) -> Result<TypeTier> {
    if user.role != Role::Urllc {
        return Err(Error::Domain(format!("user {} is not a URLLC user", user.id)));
    }
    ladder
        .tier_radii
        .iter()
        .position(|&r| user.distance_to_bs <= r)
        .map(|index| TypeTier {
            index,
            value: ladder.tiers[index],
        })
        .ok_or_else(|| {
            Error::Domain(format!(
                "user {} at {} m lies beyond the outermost tier",
                user.id, user.distance_to_bs
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Superpose,
    Puncture,
}

/// Prices, incentive share, and BS cost weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingParams {
    /// Ceiling on any URLLC contract price.
    pub urllc_price_cap: f64,
    /// Lump-sum price paid per TTI by each eMBB RB owner.
    pub embb_price: f64,
    /// Fraction of the eMBB price handed to a superposing URLLC user.
    pub incentive_share: f64,
    /// Revenue normalisation.
    pub revenue_weight: f64,
    /// Cost normalisation.
    pub cost_weight: f64,
    /// Linear resource cost per bit/s served.
    pub cost_per_bps: f64,
    /// Utility left to the lowest type by the boundary price.
    pub ir_margin: f64,
}

impl Default for PricingParams {
    fn default() -> Self {
        PricingParams {
            urllc_price_cap: 10.0,
            embb_price: 1.0,
            incentive_share: 0.5,
            revenue_weight: 1.0,
            cost_weight: 1.0,
            cost_per_bps: 1e-8,
            ir_margin: 0.01,
        }
    }
}

impl PricingParams {
    pub fn incentive(&self) -> f64 {
        self.incentive_share * self.embb_price
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("urllc_price_cap", self.urllc_price_cap),
            ("embb_price", self.embb_price),
            ("incentive_share", self.incentive_share),
            ("revenue_weight", self.revenue_weight),
            ("cost_weight", self.cost_weight),
            ("cost_per_bps", self.cost_per_bps),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.incentive_share) {
            return Err(invalid("incentive_share", "must lie in [0, 1]"));
        }
        if !self.ir_margin.is_finite() {
            return Err(invalid("ir_margin", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractItem {
    pub type_value: f64,
    /// Promised URLLC rate, bit/s.
    pub promised_rate: f64,
    pub price: f64,
    /// Incentive paid on superposition, `share * embb_price`.
    pub incentive: f64,
}

/// One item per tier, aligned with the ladder (index 0 is the highest type).
#[derive(Debug, Clone, PartialEq)]
pub struct ContractBundle {
    items: Vec<ContractItem>,
}

impl ContractBundle {
    pub fn from_items(items: Vec<ContractItem>) -> Self {
        ContractBundle { items }
    }

    pub fn items(&self) -> &[ContractItem] {
        &self.items
    }

    pub fn item(&self, tier: usize) -> &ContractItem {
        &self.items[tier]
    }
}

/// What a bundle is designed against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairContext {
    /// Rate every URLLC packet must reach, bit/s.
    pub required_rate: f64,
    /// Extra promised rate per tier above the lowest, as a fraction of
    /// `required_rate`.
    pub rate_step: f64,
    pub pricing: PricingParams,
}

/// URLLC utility for signing `item` with true type `theta`.
pub fn urllc_utility(item: &ContractItem, scheme: Scheme, theta: f64) -> f64 {
    let base = theta * item.promised_rate * 1e-6 - item.price;
    match scheme {
        Scheme::Superpose => base + item.incentive,
        Scheme::Puncture => base,
    }
}

/// BS utility: weighted revenue minus weighted linear resource cost.
pub fn bs_utility(
    urllc_prices: &[f64],
    embb_prices: &[f64],
    urllc_rates: &[f64],
    embb_rates: &[f64],
    pricing: &PricingParams,
) -> f64 {
    let revenue: f64 = urllc_prices.iter().sum::<f64>() + embb_prices.iter().sum::<f64>();
    let served: f64 = urllc_rates.iter().sum::<f64>() + embb_rates.iter().sum::<f64>();
    pricing.revenue_weight * revenue - pricing.cost_weight * pricing.cost_per_bps * served
}

/// Designs the bundle: promised rates rise by `rate_step` per tier toward the
/// top type, the lowest type's price leaves it `ir_margin` of utility (capped
/// at `urllc_price_cap`), and each higher price binds the adjacent downward
/// incentive constraint.
pub fn design_bundle(ladder: &TypeLadder, ctx: &PairContext) -> Result<ContractBundle> {
    if !(ctx.required_rate >= 0.0 && ctx.required_rate.is_finite()) {
        return Err(invalid("required_rate", "must be finite and >= 0"));
    }
    if !(ctx.rate_step > 0.0 && ctx.rate_step.is_finite()) && ladder.len() > 1 {
        return Err(Error::InfeasibleBundle(String::from(
            "monotonicity: distinct types need a positive rate step",
        )));
    }
    let n = ladder.len();
    let rates: Vec<f64> = (0..n)
        .map(|i| ctx.required_rate * (1.0 + ctx.rate_step * (n - 1 - i) as f64))
        .collect();
    let mut prices = alloc::vec![0.0; n];
    let lowest = n - 1;
    prices[lowest] = (ladder.tiers[lowest] * rates[lowest] * 1e-6 - ctx.pricing.ir_margin)
        .min(ctx.pricing.urllc_price_cap);
    for i in (0..lowest).rev() {
        prices[i] = ladder.tiers[i] * (rates[i] - rates[i + 1]) * 1e-6 + prices[i + 1];
    }
    let incentive = ctx.pricing.incentive();
    let bundle = ContractBundle {
        items: (0..n)
            .map(|i| ContractItem {
                type_value: ladder.tiers[i],
                promised_rate: rates[i],
                price: prices[i],
                incentive,
            })
            .collect(),
    };
    let report = verify_feasibility(&bundle, ladder);
    match report.violations.first() {
        None => Ok(bundle),
        Some(v) => Err(Error::InfeasibleBundle(format!("{v:?}"))),
    }
}

/// A constraint broken by a bundle.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Item fields out of range (negative rate, non-positive price).
    ItemInvariant { tier: usize },
    /// A higher type is promised a strictly lower rate than a lower type.
    Monotonicity { higher: usize, lower: usize },
    /// Diagonal utility not strictly positive.
    IndividualRationality { tier: usize, utility: f64 },
    /// The type prefers another tier's item.
    IncentiveCompatibility { tier: usize, preferred: usize, gain: f64 },
    /// Utility ordering disagrees with promised-rate ordering.
    NecessaryCondition { first: usize, second: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Row = true type, column = item chosen; puncturing-form utilities.
pub fn utility_matrix(bundle: &ContractBundle, ladder: &TypeLadder) -> Vec<Vec<f64>> {
    ladder
        .tiers
        .iter()
        .map(|&theta| {
            bundle
                .items
                .iter()
                .map(|item| urllc_utility(item, Scheme::Puncture, theta))
                .collect()
        })
        .collect()
}

/// Enumerates IR, IC, monotonicity and the utility/rate ordering condition
/// over every pair of tiers.
///
/// Utilities are taken without the superposition incentive: the incentive is
/// common to every item, so it never changes IC, and leaving it out makes IR
/// the stricter check.
pub fn verify_feasibility(bundle: &ContractBundle, ladder: &TypeLadder) -> FeasibilityReport {
    let mut violations = Vec::new();
    let items = &bundle.items;
    if items.len() != ladder.len() {
        violations.push(Violation::ItemInvariant { tier: items.len().min(ladder.len()) });
        return FeasibilityReport { violations };
    }
    for (tier, item) in items.iter().enumerate() {
        if !(item.promised_rate >= 0.0 && item.price > 0.0 && item.incentive >= 0.0) {
            violations.push(Violation::ItemInvariant { tier });
        }
    }
    for higher in 0..items.len() {
        for lower in higher + 1..items.len() {
            if items[higher].promised_rate < items[lower].promised_rate {
                violations.push(Violation::Monotonicity { higher, lower });
            }
        }
    }
    let matrix = utility_matrix(bundle, ladder);
    for (tier, row) in matrix.iter().enumerate() {
        let own = row[tier];
        if !(own > 0.0) {
            violations.push(Violation::IndividualRationality { tier, utility: own });
        }
        for (other, &u) in row.iter().enumerate() {
            if u > own + IC_TOLERANCE {
                violations.push(Violation::IncentiveCompatibility {
                    tier,
                    preferred: other,
                    gain: u - own,
                });
            }
        }
    }
    for first in 0..items.len() {
        for second in 0..items.len() {
            if first == second {
                continue;
            }
            let utility_higher = matrix[first][first] > matrix[second][second] + IC_TOLERANCE;
            let rate_higher = items[first].promised_rate > items[second].promised_rate;
            if utility_higher != rate_higher {
                violations.push(Violation::NecessaryCondition { first, second });
            }
        }
    }
    FeasibilityReport { violations }
}

/// Outcome of the superposition gate for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOutcome {
    /// Lowest type admitted to superposition.
    pub threshold: f64,
    /// The URLLC rate at the allocated power meets the target.
    pub rate_ok: bool,
    /// The URLLC receiver can decode and cancel the eMBB layer.
    pub sic_ok: bool,
}

impl GateOutcome {
    pub fn scheme_for(&self, theta: f64) -> Scheme {
        if theta >= self.threshold {
            Scheme::Superpose
        } else {
            Scheme::Puncture
        }
    }
}

/// Pair feasibility gate.
///
/// Superposition is admitted for every type when (a) the interference-free
/// URLLC rate at power `p_u` reaches `target_rate`, and (b) the eMBB layer
/// seen at the URLLC receiver, with the URLLC layer as interference, supports
/// strictly more than the rate the eMBB user itself decodes, so the URLLC user
/// can strip it off first. Otherwise the threshold is set above every type.
pub fn superposition_gate(
    embb: Option<&LinkState>,
    urllc: &LinkState,
    p_u: f64,
    target_rate: f64,
    radio: &RadioParams,
    fbl: &FblModel,
    ladder: &TypeLadder,
) -> Result<GateOutcome> {
    let Some(embb) = embb else {
        return Ok(GateOutcome {
            threshold: ladder.sentinel(),
            rate_ok: false,
            sic_ok: false,
        });
    };
    let urllc_rate = fbl.rate(sinr(p_u, urllc.gain, 0.0, radio.noise_power)?);
    let rate_ok = p_u > 0.0 && urllc_rate >= target_rate;
    let sic_ok = sic_feasible(embb, urllc, p_u, radio)?;
    let threshold = if rate_ok && sic_ok {
        *ladder.tiers.last().expect("ladder is non-empty")
    } else {
        ladder.sentinel()
    };
    Ok(GateOutcome {
        threshold,
        rate_ok,
        sic_ok,
    })
}

/// True when the URLLC receiver decodes the eMBB layer at a strictly higher
/// rate than the eMBB receiver does, so it can cancel that layer first.
pub fn sic_feasible(embb: &LinkState, urllc: &LinkState, p_u: f64, radio: &RadioParams) -> Result<bool> {
    let p_e = radio.embb_tx_power;
    let at_urllc = shannon_rate(
        embb_layer_sinr_at_urllc(urllc, p_e, p_u, radio)?,
        radio.rb_bandwidth,
    );
    let at_embb = shannon_rate(
        embb_superposed_sinr(embb, urllc, p_e, p_u, radio)?,
        radio.rb_bandwidth,
    );
    Ok(at_urllc > at_embb)
}

/// Per-user settlement of one scheduled packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityReport {
    pub urllc_utility: f64,
    /// BS utility attributable to this packet: its price less the cost of
    /// the URLLC rate served.
    pub bs_utility: f64,
    pub scheme: Scheme,
}

impl UtilityReport {
    pub fn settle(item: &ContractItem, tier: TypeTier, gate: &GateOutcome, achieved_rate: f64, pricing: &PricingParams) -> Self {
        let scheme = gate.scheme_for(tier.value);
        UtilityReport {
            urllc_utility: urllc_utility(item, scheme, tier.value),
            bs_utility: bs_utility(&[item.price], &[], &[achieved_rate], &[], pricing),
            scheme,
        }
    }
}
