//! One-to-one URLLC/eMBB pairing by deferred acceptance.
//!
//! eMBB users propose; each URLLC user holds the best proposal seen so far.
//! A rejected pair is struck from both preference lists, so it is never
//! proposed again. Ties in scores are broken toward the lower user id.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::UserId;
use crate::phy::LinkState;

/// A ranked list of acceptable counterparts, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    pub owner: UserId,
    pub ranked: Vec<UserId>,
    pub score: BTreeMap<UserId, f64>,
}

impl PreferenceProfile {
    /// Ranks counterparts by score, highest first when `descending`.
    pub fn from_scores(owner: UserId, score: BTreeMap<UserId, f64>, descending: bool) -> Self {
        let mut ranked: Vec<UserId> = score.keys().copied().collect();
        ranked.sort_by(|a, b| {
            let (sa, sb) = (score[a], score[b]);
            let ord = if descending {
                sb.total_cmp(&sa)
            } else {
                sa.total_cmp(&sb)
            };
            ord.then(a.cmp(b))
        });
        PreferenceProfile {
            owner,
            ranked,
            score,
        }
    }

    /// Builds a profile from an explicit ranking.
    pub fn from_ranking(owner: UserId, ranked: Vec<UserId>) -> Self {
        let score = ranked
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, -(i as f64)))
            .collect();
        PreferenceProfile {
            owner,
            ranked,
            score,
        }
    }

    pub fn rank_of(&self, id: UserId) -> Option<usize> {
        self.ranked.iter().position(|&r| r == id)
    }

    /// True if `candidate` is acceptable and strictly better than `current`
    /// (being unmatched ranks below every acceptable partner).
    pub fn prefers(&self, candidate: UserId, current: Option<UserId>) -> bool {
        match (self.rank_of(candidate), current.and_then(|c| self.rank_of(c))) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(a), Some(b)) => a < b,
        }
    }
}

/// Direction in which URLLC users rank eMBB partners by channel gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainOrder {
    /// Weaker eMBB channels first.
    #[default]
    Ascending,
    Descending,
}

/// Ranks eMBB candidates for one URLLC user by the eMBB channel gain.
pub fn build_urllc_prefs(
    owner: UserId,
    embb_links: &[(UserId, LinkState)],
    order: GainOrder,
) -> Result<PreferenceProfile> {
    if embb_links.is_empty() {
        return Err(Error::EmptyCandidates("URLLC preference needs eMBB candidates"));
    }
    let score = embb_links.iter().map(|(id, l)| (*id, l.gain)).collect();
    Ok(PreferenceProfile::from_scores(
        owner,
        score,
        order == GainOrder::Descending,
    ))
}

/// Ranks URLLC candidates for one eMBB user by descending type value.
pub fn build_embb_prefs(owner: UserId, urllc_types: &BTreeMap<UserId, f64>) -> Result<PreferenceProfile> {
    if urllc_types.is_empty() {
        return Err(Error::EmptyCandidates("eMBB preference needs URLLC candidates"));
    }
    Ok(PreferenceProfile::from_scores(owner, urllc_types.clone(), true))
}

/// A partial bijection between URLLC and eMBB users.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    urllc_to_embb: BTreeMap<UserId, UserId>,
    embb_to_urllc: BTreeMap<UserId, UserId>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a matching from `(urllc, embb)` pairs; fails if any user repeats.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (UserId, UserId)>) -> Result<Self> {
        let mut m = Matching::new();
        for (u, e) in pairs {
            if m.urllc_to_embb.contains_key(&u) || m.embb_to_urllc.contains_key(&e) {
                return Err(Error::Domain(alloc::format!(
                    "pair ({u}, {e}) breaks one-to-one matching"
                )));
            }
            m.link(u, e);
        }
        Ok(m)
    }

    fn link(&mut self, u: UserId, e: UserId) {
        self.urllc_to_embb.insert(u, e);
        self.embb_to_urllc.insert(e, u);
    }

    fn unlink_urllc(&mut self, u: UserId) {
        if let Some(e) = self.urllc_to_embb.remove(&u) {
            self.embb_to_urllc.remove(&e);
        }
    }

    pub fn partner_of_urllc(&self, u: UserId) -> Option<UserId> {
        self.urllc_to_embb.get(&u).copied()
    }

    pub fn partner_of_embb(&self, e: UserId) -> Option<UserId> {
        self.embb_to_urllc.get(&e).copied()
    }

    /// `(urllc, embb)` pairs in ascending URLLC id order.
    pub fn pairs(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        self.urllc_to_embb.iter().map(|(u, e)| (*u, *e))
    }

    pub fn len(&self) -> usize {
        self.urllc_to_embb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.urllc_to_embb.is_empty()
    }
}

fn find(profiles: &[PreferenceProfile], owner: UserId) -> Option<&PreferenceProfile> {
    profiles.iter().find(|p| p.owner == owner)
}

/// eMBB-proposing deferred acceptance.
///
/// Rounds repeat until a round makes no proposal, at which point the matching
/// no longer changes.
pub fn deferred_acceptance(embb_prefs: &[PreferenceProfile], urllc_prefs: &[PreferenceProfile]) -> Matching {
    let mut embb_lists: BTreeMap<UserId, Vec<UserId>> = embb_prefs
        .iter()
        .map(|p| (p.owner, p.ranked.clone()))
        .collect();
    let mut urllc_lists: BTreeMap<UserId, Vec<UserId>> = urllc_prefs
        .iter()
        .map(|p| (p.owner, p.ranked.clone()))
        .collect();
    let mut matching = Matching::new();

    loop {
        let proposals: Vec<(UserId, UserId)> = embb_lists
            .iter()
            .filter(|(e, _)| matching.partner_of_embb(**e).is_none())
            .filter_map(|(e, list)| list.first().map(|u| (*e, *u)))
            .collect();
        if proposals.is_empty() {
            break;
        }
        let mut rejected: Vec<(UserId, UserId)> = Vec::new();
        for (e, u) in proposals {
            let Some(list) = urllc_lists.get(&u) else {
                rejected.push((e, u));
                continue;
            };
            let rank = |x: UserId| list.iter().position(|&y| y == x);
            match (rank(e), matching.partner_of_urllc(u)) {
                (None, _) => rejected.push((e, u)),
                (Some(_), None) => matching.link(u, e),
                (Some(new), Some(held)) => {
                    // a held partner is always still on u's list
                    if rank(held).is_some_and(|old| new < old) {
                        matching.unlink_urllc(u);
                        matching.link(u, e);
                        rejected.push((held, u));
                    } else {
                        rejected.push((e, u));
                    }
                }
            }
        }
        for (e, u) in rejected {
            if let Some(list) = embb_lists.get_mut(&e) {
                list.retain(|&x| x != u);
            }
            if let Some(list) = urllc_lists.get_mut(&u) {
                list.retain(|&x| x != e);
            }
        }
    }
    matching
}

/// True iff `e` and `u` are mutually acceptable, not matched together, and
/// each strictly prefers the other to its current partner.
pub fn is_blocking_pair(
    e: UserId,
    u: UserId,
    m: &Matching,
    embb_prefs: &[PreferenceProfile],
    urllc_prefs: &[PreferenceProfile],
) -> bool {
    if m.partner_of_embb(e) == Some(u) {
        return false;
    }
    let (Some(pe), Some(pu)) = (find(embb_prefs, e), find(urllc_prefs, u)) else {
        return false;
    };
    pe.prefers(u, m.partner_of_embb(e)) && pu.prefers(e, m.partner_of_urllc(u))
}

/// No blocking pair and every matched pair mutually acceptable.
pub fn is_stable(m: &Matching, embb_prefs: &[PreferenceProfile], urllc_prefs: &[PreferenceProfile]) -> bool {
    let acceptable = m.pairs().all(|(u, e)| {
        let ok_e = find(embb_prefs, e).is_some_and(|p| p.rank_of(u).is_some());
        let ok_u = find(urllc_prefs, u).is_some_and(|p| p.rank_of(e).is_some());
        ok_e && ok_u
    });
    acceptable
        && embb_prefs.iter().all(|pe| {
            urllc_prefs
                .iter()
                .all(|pu| !is_blocking_pair(pe.owner, pu.owner, m, embb_prefs, urllc_prefs))
        })
}
