//! Frame bookkeeping, user topology and URLLC arrival generation.
//!
//! One eMBB TTI spans `minislots_per_tti` URLLC mini-slots on each of
//! `rb_count` resource blocks. eMBB users own whole RB rows for a TTI; URLLC
//! packets occupy single (RB, mini-slot) cells.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::phy::{LinkState, PathlossLaw};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    /// eMBB TTI length, s.
    pub embb_tti: f64,
    /// URLLC mini-slot length, s.
    pub mini_slot: f64,
    pub rb_count: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            embb_tti: 1.0e-3,
            mini_slot: 1.25e-4,
            rb_count: 8,
        }
    }
}

impl FrameConfig {
    pub fn minislots_per_tti(&self) -> usize {
        libm::round(self.embb_tti / self.mini_slot) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.embb_tti > 0.0 && self.mini_slot > 0.0) {
            return Err(invalid("embb_tti", "TTI and mini-slot must be > 0"));
        }
        let ratio = self.embb_tti / self.mini_slot;
        if ratio < 1.0 || (ratio - libm::round(ratio)).abs() > 1e-9 * ratio {
            return Err(invalid(
                "mini_slot",
                format!("TTI must be an integer multiple of the mini-slot, ratio {ratio}"),
            ));
        }
        if self.rb_count == 0 {
            return Err(invalid("rb_count", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl core::fmt::Display for UserId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Embb,
    Urllc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    pub id: UserId,
    pub role: Role,
    /// Position in metres, BS at the origin.
    pub position: (f64, f64),
    pub distance_to_bs: f64,
}

impl UserProfile {
    /// Link state under the pathloss law of the user's role.
    pub fn link(&self) -> Result<LinkState> {
        let law = match self.role {
            Role::Embb => PathlossLaw::Embb,
            Role::Urllc => PathlossLaw::Urllc,
        };
        LinkState::new(law, self.distance_to_bs)
    }
}

/// Independent random streams drawn from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Topology = 1,
    Arrivals = 2,
    Sources = 3,
    Oracle = 4,
}

/// Expands `(master, run, stream)` into a seed. ChaCha is counter based, so
/// the result depends only on the triple and never on evaluation order.
pub fn derive_seed(master: u64, run: u64, stream: SeedStream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(run);
    rng.set_word_pos((stream as u128) << 32);
    rng.next_u64()
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform drop on a disc centred at the BS.
///
/// eMBB users get ids `0..n_embb`, URLLC users follow. Distances below one
/// metre are pushed radially out to one metre.
pub fn generate_topology(seed: u64, n_embb: usize, n_urllc: usize, radius: f64) -> Vec<UserProfile> {
    let mut rng = rng_from_seed(seed);
    let roles = core::iter::repeat_n(Role::Embb, n_embb).chain(core::iter::repeat_n(Role::Urllc, n_urllc));
    roles
        .enumerate()
        .map(|(i, role)| {
            let r = radius * libm::sqrt(rng.random::<f64>());
            let phi = core::f64::consts::TAU * rng.random::<f64>();
            let r = r.max(1.0);
            let position = (r * libm::cos(phi), r * libm::sin(phi));
            UserProfile {
                id: UserId(i as u32),
                role,
                position,
                distance_to_bs: libm::hypot(position.0, position.1).max(1.0),
            }
        })
        .collect()
}

/// Per-mini-slot Poisson arrival counts with mean `rate`.
pub fn draw_arrivals(seed: u64, rate: f64, minislots: usize) -> Result<Vec<u32>> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(invalid("arrival_rate", format!("must be finite and >= 0, got {rate}")));
    }
    if rate == 0.0 {
        return Ok(vec![0; minislots]);
    }
    let poisson = Poisson::new(rate).map_err(|e| invalid("arrival_rate", format!("{e}")))?;
    let mut rng = rng_from_seed(seed);
    Ok((0..minislots)
        .map(|_| poisson.sample(&mut rng) as u32)
        .collect())
}

/// Transmission mode of one (RB, mini-slot) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellMode {
    #[default]
    Idle,
    Superpose,
    Puncture,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cell {
    pub embb_owner: Option<UserId>,
    pub urllc_occupant: Option<UserId>,
    pub mode: CellMode,
    /// URLLC transmit power, W.
    pub urllc_power: f64,
}

impl Cell {
    /// Superposition indicator.
    pub fn x(&self) -> u8 {
        u8::from(self.mode == CellMode::Superpose)
    }

    /// Puncturing indicator.
    pub fn z(&self) -> u8 {
        u8::from(self.mode == CellMode::Puncture)
    }
}

/// RB x mini-slot occupancy for one eMBB TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    rb_count: usize,
    minislots: usize,
    cells: Vec<Cell>,
}

impl FrameGrid {
    pub fn new(frame: &FrameConfig) -> Self {
        let minislots = frame.minislots_per_tti();
        FrameGrid {
            rb_count: frame.rb_count,
            minislots,
            cells: vec![Cell::default(); frame.rb_count * minislots],
        }
    }

    pub fn rb_count(&self) -> usize {
        self.rb_count
    }

    pub fn minislots(&self) -> usize {
        self.minislots
    }

    pub fn cell(&self, rb: usize, slot: usize) -> &Cell {
        &self.cells[rb * self.minislots + slot]
    }

    pub fn owner(&self, rb: usize) -> Option<UserId> {
        self.cell(rb, 0).embb_owner
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, &Cell)> {
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, c)| (i / self.minislots, i % self.minislots, c))
    }

    fn set_owner(&mut self, rb: usize, owner: UserId) {
        let row = rb * self.minislots;
        for cell in &mut self.cells[row..row + self.minislots] {
            cell.embb_owner = Some(owner);
        }
    }

    /// RBs with no URLLC occupant in `slot`.
    pub fn free_rbs(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.rb_count).filter(move |&rb| self.cell(rb, slot).urllc_occupant.is_none())
    }

    /// Places a URLLC packet; the cell must be free and the mode active.
    pub fn place_urllc(
        &mut self,
        rb: usize,
        slot: usize,
        user: UserId,
        mode: CellMode,
        power: f64,
    ) -> Result<()> {
        if rb >= self.rb_count || slot >= self.minislots {
            return Err(Error::Grid(format!("cell ({rb}, {slot}) out of range")));
        }
        if mode == CellMode::Idle {
            return Err(Error::Grid("URLLC placement needs superpose or puncture".into()));
        }
        let minislots = self.minislots;
        let cell = &mut self.cells[rb * minislots + slot];
        if let Some(other) = cell.urllc_occupant {
            return Err(Error::Grid(format!(
                "cell ({rb}, {slot}) already holds URLLC user {other}"
            )));
        }
        cell.urllc_occupant = Some(user);
        cell.mode = mode;
        cell.urllc_power = power;
        Ok(())
    }

    /// Checks ownership and mode/occupancy consistency of every cell.
    pub fn check_invariants(&self) -> Result<()> {
        for (rb, slot, cell) in self.cells() {
            if cell.embb_owner.is_none() {
                return Err(Error::Grid(format!("cell ({rb}, {slot}) has no eMBB owner")));
            }
            if cell.embb_owner != self.owner(rb) {
                return Err(Error::Grid(format!("RB {rb} changes owner within the TTI")));
            }
            let occupied = cell.urllc_occupant.is_some();
            if occupied != (cell.mode != CellMode::Idle) {
                return Err(Error::Grid(format!(
                    "cell ({rb}, {slot}) mode {:?} inconsistent with occupancy",
                    cell.mode
                )));
            }
            if cell.x() + cell.z() > 1 {
                return Err(Error::Grid(format!("cell ({rb}, {slot}) has x + z > 1")));
            }
        }
        Ok(())
    }
}

/// Pre-schedules eMBB users onto RB rows for the whole TTI.
///
/// The `rb_count` best-gain users are kept (ties to the lower id) and RBs are
/// dealt to them round robin in that order.
pub fn assign_embb(mut grid: FrameGrid, embb_users: &[(UserId, LinkState)]) -> Result<FrameGrid> {
    if grid.rb_count == 0 {
        return Ok(grid);
    }
    if embb_users.is_empty() {
        return Err(Error::EmptyCandidates("no eMBB users to pre-schedule"));
    }
    if (0..grid.rb_count).any(|rb| grid.owner(rb).is_some()) {
        return Err(Error::Grid("grid already carries eMBB owners".into()));
    }
    let mut ranked: Vec<&(UserId, LinkState)> = embb_users.iter().collect();
    ranked.sort_by(|a, b| b.1.gain.total_cmp(&a.1.gain).then(a.0.cmp(&b.0)));
    ranked.truncate(grid.rb_count);
    for rb in 0..grid.rb_count {
        let owner = ranked[rb % ranked.len()].0;
        grid.set_owner(rb, owner);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(d: f64) -> LinkState {
        LinkState::new(PathlossLaw::Embb, d).unwrap()
    }

    #[test]
    fn frame_defaults() {
        let f = FrameConfig::default();
        f.validate().unwrap();
        assert_eq!(f.minislots_per_tti(), 8);
        let bad = FrameConfig {
            mini_slot: 3e-4,
            ..f
        };
        assert!(bad.validate().is_err());
        let bad = FrameConfig { rb_count: 0, ..f };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_topology() {
        assert!(generate_topology(7, 0, 0, 1000.0).is_empty());
    }

    #[test]
    fn topology_deterministic_and_in_disc() {
        let a = generate_topology(42, 10, 15, 1000.0);
        let b = generate_topology(42, 10, 15, 1000.0);
        assert_eq!(a, b);
        assert_ne!(a, generate_topology(43, 10, 15, 1000.0));
        for u in &a {
            assert!(u.distance_to_bs >= 1.0 && u.distance_to_bs <= 1000.0 + 1e-9);
            let d = libm::hypot(u.position.0, u.position.1);
            assert!((d.max(1.0) - u.distance_to_bs).abs() < 1e-9);
        }
        assert!(a[..10].iter().all(|u| u.role == Role::Embb));
        assert!(a[10..].iter().all(|u| u.role == Role::Urllc));
    }

    #[test]
    fn topology_mean_distance() {
        let users = generate_topology(5, 0, 10_000, 1000.0);
        let mean = users.iter().map(|u| u.distance_to_bs).sum::<f64>() / 10_000.0;
        let expected = 2.0 / 3.0 * 1000.0;
        assert!((mean - expected).abs() < 0.02 * expected, "{mean}");
    }

    #[test]
    fn arrivals_zero_rate() {
        assert_eq!(draw_arrivals(1, 0.0, 5).unwrap(), vec![0; 5]);
        assert!(draw_arrivals(1, -1.0, 5).is_err());
    }

    #[test]
    fn arrivals_poisson_moments() {
        let a = draw_arrivals(11, 2.0, 100_000).unwrap();
        let n = a.len() as f64;
        let mean = a.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = a.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 2.0).abs() < 0.03, "{mean}");
        assert!((var - mean).abs() < 0.05 * mean, "{var} vs {mean}");
        assert_eq!(a, draw_arrivals(11, 2.0, 100_000).unwrap());
    }

    #[test]
    fn assign_single() {
        let frame = FrameConfig {
            rb_count: 1,
            ..FrameConfig::default()
        };
        let g = assign_embb(FrameGrid::new(&frame), &[(UserId(3), link(50.0))]).unwrap();
        assert_eq!(g.owner(0), Some(UserId(3)));
    }

    #[test]
    fn assign_best_gain_users() {
        let frame = FrameConfig {
            rb_count: 3,
            ..FrameConfig::default()
        };
        let users = [
            (UserId(0), link(400.0)),
            (UserId(1), link(20.0)),
            (UserId(2), link(900.0)),
            (UserId(3), link(100.0)),
            (UserId(4), link(60.0)),
        ];
        let g = assign_embb(FrameGrid::new(&frame), &users).unwrap();
        let mut owners: Vec<u32> = (0..3).map(|rb| g.owner(rb).unwrap().0).collect();
        owners.sort();
        assert_eq!(owners, vec![1, 3, 4]);
    }

    #[test]
    fn assign_round_robin() {
        let frame = FrameConfig {
            rb_count: 4,
            ..FrameConfig::default()
        };
        let users = [(UserId(0), link(10.0)), (UserId(1), link(30.0))];
        let g = assign_embb(FrameGrid::new(&frame), &users).unwrap();
        let count = |id| (0..4).filter(|&rb| g.owner(rb) == Some(UserId(id))).count();
        assert_eq!((count(0), count(1)), (2, 2));
        g.check_invariants().unwrap();
    }

    #[test]
    fn assign_errors() {
        let frame = FrameConfig::default();
        assert!(assign_embb(FrameGrid::new(&frame), &[]).is_err());
        let g = assign_embb(FrameGrid::new(&frame), &[(UserId(0), link(5.0))]).unwrap();
        assert!(assign_embb(g, &[(UserId(0), link(5.0))]).is_err());
    }

    #[test]
    fn placement_rules() {
        let frame = FrameConfig::default();
        let mut g = assign_embb(FrameGrid::new(&frame), &[(UserId(0), link(5.0))]).unwrap();
        g.place_urllc(2, 3, UserId(9), CellMode::Puncture, 0.1).unwrap();
        assert!(g.place_urllc(2, 3, UserId(10), CellMode::Superpose, 0.1).is_err());
        assert!(g.place_urllc(1, 3, UserId(10), CellMode::Idle, 0.1).is_err());
        assert!(g.place_urllc(8, 0, UserId(10), CellMode::Puncture, 0.1).is_err());
        assert_eq!(g.cell(2, 3).z(), 1);
        assert_eq!(g.cell(2, 3).x(), 0);
        assert_eq!(g.free_rbs(3).count(), 7);
        g.check_invariants().unwrap();
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(9, 0, SeedStream::Topology);
        assert_eq!(a, derive_seed(9, 0, SeedStream::Topology));
        assert_ne!(a, derive_seed(9, 1, SeedStream::Topology));
        assert_ne!(a, derive_seed(9, 0, SeedStream::Arrivals));
        assert_ne!(a, derive_seed(10, 0, SeedStream::Topology));
    }
}
