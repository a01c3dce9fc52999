//! Zone scoring, the Jaccard coexistence policy, hysteresis-aware refresh and
//! zone reports.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::matrix::SignedMatrices;
use crate::projection::SignedProjection;
use crate::zones::{extract_zones, inclusion_maximal, threshold_nodes, Zone};

/// Width of the score buckets inside which scores count as tied.
pub const EPS_TIE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    /// `Σφ − λ·cut₋ − ρ·loss₊`
    #[default]
    Raw,
    /// `mean φ − (λ·cut₋ + ρ·loss₊)/|Z|`
    Normalized,
    /// `mean φ × density`
    Quality,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringMode::Raw => "raw",
            ScoringMode::Normalized => "normalized",
            ScoringMode::Quality => "quality",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GovernanceParams {
    pub tau: f64,
    pub k: Option<usize>,
    pub lambda_gov: f64,
    pub rho_gov: f64,
    pub scoring_mode: ScoringMode,
    pub tau_keep: f64,
    pub delta_score: f64,
    pub delta_mass: f64,
    pub hops: usize,
}

impl Default for GovernanceParams {
    fn default() -> Self {
        Self {
            tau: 0.30,
            k: Some(3),
            lambda_gov: 0.0,
            rho_gov: 0.0,
            scoring_mode: ScoringMode::Raw,
            tau_keep: 0.50,
            delta_score: 1e-6,
            delta_mass: 1e-3,
            hops: 2,
        }
    }
}

impl GovernanceParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.tau,
            self.tau_keep,
            self.lambda_gov,
            self.rho_gov,
            self.delta_score,
            self.delta_mass,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(
                "governance parameters must be finite".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::Validation(format!(
                "tau = {} not in [0, 1)",
                self.tau
            )));
        }
        if !(self.tau < self.tau_keep && self.tau_keep <= 1.0) {
            return Err(Error::Validation(format!(
                "tau_keep = {} must satisfy tau < tau_keep <= 1",
                self.tau_keep
            )));
        }
        if self.lambda_gov < 0.0 || self.rho_gov < 0.0 {
            return Err(Error::Validation("boundary penalties must be >= 0".into()));
        }
        if self.delta_score < 0.0 || self.delta_mass < 0.0 {
            return Err(Error::Validation("hysteresis margins must be >= 0".into()));
        }
        if self.k == Some(0) {
            return Err(Error::Validation("k must be at least 1 when set".into()));
        }
        Ok(())
    }
}

/// `|A ∩ B| / |A ∪ B|` over sorted, deduplicated id lists.
pub fn jaccard(a: &[NodeId], b: &[NodeId]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::Empty("jaccard of two empty sets"));
    }
    Ok(jaccard_sorted(a, b))
}

pub(crate) fn jaccard_sorted(a: &[NodeId], b: &[NodeId]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// `(cut₋, loss₊)`: raw contradiction and support weight on edges leaving
/// the zone.
pub fn boundary_flows(zone: &Zone, m: &SignedMatrices) -> (f64, f64) {
    let outside = |row: &[(usize, f64)]| -> f64 {
        row.iter()
            .filter(|(v, _)| !zone.contains(*v))
            .map(|&(_, w)| w)
            .sum()
    };
    let mut cut = 0.0;
    let mut loss = 0.0;
    for &u in zone.members() {
        cut += outside(m.contr.row(u));
        loss += outside(m.supp.row(u));
    }
    (cut, loss)
}

/// Unordered member pairs joined by any aggregated weight in either
/// direction; equals the projected edge count inside the zone.
fn internal_pairs(zone: &Zone, m: &SignedMatrices) -> usize {
    let mut pairs = BTreeSet::new();
    for &u in zone.members() {
        for (v, _) in m.supp.row(u).iter().chain(m.contr.row(u)) {
            if *v != u && zone.contains(*v) {
                pairs.insert((u.min(*v), u.max(*v)));
            }
        }
    }
    pairs.len()
}

/// A zone with its policy statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredZone {
    pub zone: Zone,
    pub score: f64,
    pub mass: f64,
    pub cut_minus: f64,
    pub loss_plus: f64,
}

impl ScoredZone {
    pub fn members(&self) -> &[NodeId] {
        self.zone.members()
    }

    /// Policy rank: score bucket descending, larger mass, smaller cut₋,
    /// then the lexicographically smaller member list.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        score_bucket(other.score)
            .total_cmp(&score_bucket(self.score))
            .then_with(|| other.mass.total_cmp(&self.mass))
            .then_with(|| self.cut_minus.total_cmp(&other.cut_minus))
            .then_with(|| self.members().cmp(other.members()))
    }
}

/// Scores are compared on a grid of width [`EPS_TIE`], which keeps the
/// ordering a total order.
fn score_bucket(score: f64) -> f64 {
    (score / EPS_TIE).round()
}

pub fn score(zone: &Zone, phi: &[f64], m: &SignedMatrices, params: &GovernanceParams) -> f64 {
    score_zone(zone.clone(), phi, m, params).score
}

pub fn score_zone(
    mut zone: Zone,
    phi: &[f64],
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> ScoredZone {
    zone.refresh(phi);
    let mass = zone.mass(phi);
    let (cut_minus, loss_plus) = boundary_flows(&zone, m);
    let k = zone.size() as f64;
    let penalty = params.lambda_gov * cut_minus + params.rho_gov * loss_plus;
    let score = match params.scoring_mode {
        ScoringMode::Raw => mass - penalty,
        ScoringMode::Normalized => (mass - penalty) / k,
        ScoringMode::Quality => {
            if zone.size() < 2 {
                0.0
            } else {
                let density = 2.0 * internal_pairs(&zone, m) as f64 / (k * (k - 1.0));
                mass / k * density
            }
        }
    };
    ScoredZone {
        zone,
        score,
        mass,
        cut_minus,
        loss_plus,
    }
}

/// Accepted zones in policy order, plus the candidate family they were
/// chosen from (reused by local refresh).
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    zones: Vec<ScoredZone>,
    candidates: Vec<Zone>,
    scoring_mode: ScoringMode,
}

impl Atlas {
    pub fn empty() -> Self {
        Self {
            zones: Vec::new(),
            candidates: Vec::new(),
            scoring_mode: ScoringMode::Raw,
        }
    }

    pub fn zones(&self) -> &[ScoredZone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn candidates(&self) -> &[Zone] {
        &self.candidates
    }

    pub fn scoring_mode(&self) -> ScoringMode {
        self.scoring_mode
    }

    pub fn member_sets(&self) -> Vec<Vec<NodeId>> {
        self.zones.iter().map(|z| z.members().to_vec()).collect()
    }

    /// Accepted zones as plain zones, for re-submission as candidates.
    pub fn zone_list(&self) -> Vec<Zone> {
        self.zones.iter().map(|z| z.zone.clone()).collect()
    }

    /// Translates node ids (e.g. after node removal) and rescores against
    /// `phi`. Members mapped to `None` are dropped, as are emptied zones.
    pub fn remap(
        &self,
        f: impl Fn(NodeId) -> Option<NodeId>,
        phi: &[f64],
        m: &SignedMatrices,
        params: &GovernanceParams,
    ) -> Atlas {
        let map = |z: &Zone| z.map_members(&f, phi);
        let mut zones: Vec<ScoredZone> = self
            .zones
            .iter()
            .filter_map(|z| map(&z.zone))
            .map(|z| score_zone(z, phi, m, params))
            .collect();
        zones.sort_by(ScoredZone::rank_cmp);
        let mut candidates: Vec<Zone> = self.candidates.iter().filter_map(map).collect();
        candidates.sort_by(|a, b| a.members().cmp(b.members()));
        Atlas {
            zones,
            candidates,
            scoring_mode: params.scoring_mode,
        }
    }
}

fn prepare(
    candidates: Vec<Zone>,
    phi: &[f64],
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> (Vec<Zone>, Vec<ScoredZone>) {
    let mut family = inclusion_maximal(candidates);
    family.sort_by(|a, b| a.members().cmp(b.members()));
    let scored = family
        .iter()
        .map(|z| score_zone(z.clone(), phi, m, params))
        .collect();
    (family, scored)
}

fn compatible(candidate: &ScoredZone, accepted: &[ScoredZone], tau: f64) -> bool {
    accepted
        .iter()
        .all(|a| jaccard_sorted(a.members(), candidate.members()) < tau)
}

/// Greedy coexistence pass: rank candidates, accept each whose overlap with
/// every accepted zone is below `tau`, stop at `k`.
pub fn atlas_update(
    candidates: Vec<Zone>,
    phi: &[f64],
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> Atlas {
    let (family, mut scored) = prepare(candidates, phi, m, params);
    scored.sort_by(ScoredZone::rank_cmp);
    let cap = params.k.unwrap_or(usize::MAX);
    let mut accepted: Vec<ScoredZone> = Vec::new();
    for c in scored {
        if accepted.len() >= cap {
            break;
        }
        if compatible(&c, &accepted, params.tau) {
            accepted.push(c);
        }
    }
    Atlas {
        zones: accepted,
        candidates: family,
        scoring_mode: params.scoring_mode,
    }
}

/// Coexistence pass that favours zones continuing the previous atlas.
///
/// A candidate is *retained* when it overlaps some previous zone at
/// `J ≥ tau_keep`; retained candidates go first inside a score bucket. A new
/// candidate that would block a lower-ranked retained one is only allowed to
/// when it beats it by more than `delta_score` or by at least `delta_mass`;
/// otherwise the retained candidate is considered first.
pub fn atlas_refresh(
    prev: &Atlas,
    candidates: Vec<Zone>,
    phi: &[f64],
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> Atlas {
    let (family, scored) = prepare(candidates, phi, m, params);
    let retained: Vec<bool> = scored
        .iter()
        .map(|c| {
            prev.zones
                .iter()
                .any(|p| jaccard_sorted(p.members(), c.members()) >= params.tau_keep)
        })
        .collect();
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&scored[a], &scored[b]);
        score_bucket(y.score)
            .total_cmp(&score_bucket(x.score))
            .then_with(|| retained[b].cmp(&retained[a]))
            .then_with(|| x.rank_cmp(y))
    });

    let displaces = |challenger: &ScoredZone, incumbent: &ScoredZone| {
        challenger.score - incumbent.score > params.delta_score
            || challenger.mass - incumbent.mass >= params.delta_mass
    };
    let mut done = vec![false; scored.len()];
    let mut accepted: Vec<ScoredZone> = Vec::new();
    let consider = |i: usize, accepted: &mut Vec<ScoredZone>, done: &mut Vec<bool>| {
        done[i] = true;
        if compatible(&scored[i], accepted, params.tau) {
            accepted.push(scored[i].clone());
        }
    };
    for pos in 0..order.len() {
        let i = order[pos];
        if done[i] {
            continue;
        }
        if !retained[i] {
            for &j in &order[pos + 1..] {
                if !done[j]
                    && retained[j]
                    && jaccard_sorted(scored[i].members(), scored[j].members()) >= params.tau
                    && !displaces(&scored[i], &scored[j])
                {
                    consider(j, &mut accepted, &mut done);
                }
            }
        }
        consider(i, &mut accepted, &mut done);
    }
    accepted.sort_by(ScoredZone::rank_cmp);
    if let Some(k) = params.k {
        accepted.truncate(k);
    }
    Atlas {
        zones: accepted,
        candidates: family,
        scoring_mode: params.scoring_mode,
    }
}

/// Nodes whose threshold membership changed between `prev_phi` and
/// `new_phi`, together with `extra_seeds`, expanded by `hops` undirected
/// hops over `proj`. Sorted ascending.
pub fn local_refresh_region(
    prev_phi: &[f64],
    new_phi: &[f64],
    theta: f64,
    proj: &SignedProjection,
    hops: usize,
    extra_seeds: &[NodeId],
) -> Result<Vec<NodeId>> {
    if prev_phi.len() != new_phi.len() {
        return Err(Error::Validation(format!(
            "confidence vectors differ in length ({} vs {})",
            prev_phi.len(),
            new_phi.len()
        )));
    }
    let n = new_phi.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let crossed = (0..n).filter(|&v| (prev_phi[v] >= theta) != (new_phi[v] >= theta));
    for v in crossed.chain(extra_seeds.iter().copied().filter(|&v| v < n)) {
        if dist[v] == usize::MAX {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        if dist[u] >= hops {
            continue;
        }
        let Some(lu) = proj.local(u) else { continue };
        for e in proj.neighbours(lu) {
            let v = proj.global(e.to);
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    Ok((0..n).filter(|&v| dist[v] != usize::MAX).collect())
}

/// Incremental refresh: re-extracts zones only inside the refresh region and
/// carries the previous candidates that do not touch it.
///
/// `touched` lists nodes whose edges or priors were edited; they join the
/// region alongside threshold crossings.
#[allow(clippy::too_many_arguments)]
pub fn local_refresh(
    prev: &Atlas,
    prev_phi: &[f64],
    new_phi: &[f64],
    theta: f64,
    m: &SignedMatrices,
    params: &GovernanceParams,
    touched: &[NodeId],
) -> Result<Atlas> {
    let full = SignedProjection::full(m);
    let region = local_refresh_region(prev_phi, new_phi, theta, &full, params.hops, touched)?;
    let in_region = {
        let mut mask = vec![false; new_phi.len()];
        for &v in &region {
            mask[v] = true;
        }
        mask
    };
    let mut candidates: Vec<Zone> = prev
        .candidates
        .iter()
        .filter(|z| {
            z.members()
                .iter()
                .all(|&v| v < new_phi.len() && !in_region[v])
        })
        .cloned()
        .collect();
    if !region.is_empty() {
        let keep: Vec<NodeId> = threshold_nodes(new_phi, theta)
            .into_iter()
            .filter(|&v| in_region[v])
            .collect();
        let proj = SignedProjection::from_matrices(m, &keep);
        candidates.extend(extract_zones(&proj, new_phi));
    }
    Ok(atlas_refresh(prev, candidates, new_phi, m, params))
}

/// Full recomputation: threshold, project, extract, refresh against `prev`.
pub fn recompute_atlas(
    prev: &Atlas,
    phi: &[f64],
    theta: f64,
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> Atlas {
    let proj = SignedProjection::from_matrices(m, &threshold_nodes(phi, theta));
    atlas_refresh(prev, extract_zones(&proj, phi), phi, m, params)
}

/// One-shot pipeline from a confidence vector to a fresh atlas.
pub fn build_atlas(
    phi: &[f64],
    theta: f64,
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> Atlas {
    let proj = SignedProjection::from_matrices(m, &threshold_nodes(phi, theta));
    atlas_update(extract_zones(&proj, phi), phi, m, params)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneReport {
    pub zone_id: usize,
    pub size: usize,
    pub score: f64,
    pub scoring_mode: ScoringMode,
    pub mean_phi: f64,
    pub min_phi: f64,
    pub cut_minus: f64,
    pub loss_plus: f64,
    pub nn_jaccard: f64,
}

/// One row per accepted zone, in atlas order. Statistics use `phi` as given.
pub fn zone_report(
    atlas: &Atlas,
    phi: &[f64],
    m: &SignedMatrices,
    params: &GovernanceParams,
) -> Vec<ZoneReport> {
    let zones = atlas.zones();
    zones
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let s = score_zone(z.zone.clone(), phi, m, params);
            let nn = zones
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| jaccard_sorted(z.members(), o.members()))
                .fold(0.0, f64::max);
            ZoneReport {
                zone_id: i,
                size: s.zone.size(),
                score: s.score,
                scoring_mode: params.scoring_mode,
                mean_phi: s.zone.mean_phi,
                min_phi: s.zone.min_phi,
                cut_minus: s.cut_minus,
                loss_plus: s.loss_plus,
                nn_jaccard: nn,
            }
        })
        .collect()
}

pub const REPORT_HEADER: &str =
    "zone_id,size,score,scoring_mode,mean_phi,min_phi,cut_minus,loss_plus,nn_jaccard";

pub fn report_csv(rows: &[ZoneReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.zone_id,
            r.size,
            r.score,
            r.scoring_mode,
            r.mean_phi,
            r.min_phi,
            r.cut_minus,
            r.loss_plus,
            r.nn_jaccard
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseRows;

    fn matrices(
        n: usize,
        supp: Vec<(usize, usize, f64)>,
        contr: Vec<(usize, usize, f64)>,
    ) -> SignedMatrices {
        SignedMatrices::from_raw(
            SparseRows::from_triplets(n, supp),
            SparseRows::from_triplets(n, contr),
        )
    }

    fn zone(members: &[usize], phi: &[f64]) -> Zone {
        Zone::new(members.to_vec(), phi).unwrap()
    }

    fn unbounded() -> GovernanceParams {
        GovernanceParams {
            k: None,
            ..Default::default()
        }
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&[1, 2, 3], &[2, 3, 4]).unwrap(), 0.5);
        assert_eq!(jaccard(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(jaccard(&[1], &[2]).unwrap(), 0.0);
        assert!(jaccard(&[], &[]).is_err());
    }

    #[test]
    fn boundary_flow_examples() {
        let phi = [0.9, 0.8, 0.5];
        let isolated = matrices(3, vec![], vec![]);
        assert_eq!(boundary_flows(&zone(&[0, 1], &phi), &isolated), (0.0, 0.0));
        let m = matrices(3, vec![(0, 1, 0.4), (2, 0, 0.3)], vec![(0, 2, 0.7)]);
        assert_eq!(boundary_flows(&zone(&[0, 1, 2], &phi), &m), (0.0, 0.0));
        assert_eq!(boundary_flows(&zone(&[0, 1], &phi), &m), (0.7, 0.0));
    }

    #[test]
    fn score_examples() {
        let phi = [0.9, 0.8, 0.5];
        let m = matrices(3, vec![(0, 1, 0.4)], vec![(0, 2, 0.7)]);
        let z = zone(&[0, 1], &phi);
        let plain = GovernanceParams::default();
        assert!((score(&z, &phi, &m, &plain) - 1.7).abs() < 1e-12);
        let penalised = GovernanceParams {
            lambda_gov: 1.0,
            ..Default::default()
        };
        assert!((score(&z, &phi, &m, &penalised) - 1.0).abs() < 1e-12);
        let normalised = GovernanceParams {
            lambda_gov: 1.0,
            scoring_mode: ScoringMode::Normalized,
            ..Default::default()
        };
        assert!((score(&z, &phi, &m, &normalised) - 0.5).abs() < 1e-12);
        let isolated = matrices(3, vec![], vec![]);
        let heavy = GovernanceParams {
            lambda_gov: 5.0,
            rho_gov: 5.0,
            ..Default::default()
        };
        assert!((score(&z, &phi, &isolated, &heavy) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn quality_score_matches_zone_quality() {
        let phi = [0.6, 0.6, 0.6, 0.1];
        let m = matrices(
            4,
            vec![(0, 1, 1.0), (2, 1, 1.0), (1, 2, 0.5)],
            vec![(2, 3, 1.0)],
        );
        let z = zone(&[0, 1, 2], &phi);
        let q = GovernanceParams {
            scoring_mode: ScoringMode::Quality,
            ..Default::default()
        };
        let proj = SignedProjection::full(&m);
        let expected = crate::zones::zone_quality(&z, &phi, &proj);
        assert!((expected - 0.4).abs() < 1e-12);
        assert!((score(&z, &phi, &m, &q) - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_zones_collapse_to_one() {
        let phi = [0.9; 3];
        let m = matrices(3, vec![], vec![]);
        let a = atlas_update(
            vec![zone(&[0, 1], &phi), zone(&[0, 1], &phi)],
            &phi,
            &m,
            &unbounded(),
        );
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn disjoint_zones_all_accepted_and_cap_applies() {
        let phi = [0.9, 0.9, 0.8, 0.8, 0.7];
        let m = matrices(5, vec![], vec![]);
        let cands = vec![zone(&[0, 1], &phi), zone(&[2, 3], &phi), zone(&[4], &phi)];
        let all = atlas_update(cands.clone(), &phi, &m, &unbounded());
        assert_eq!(all.len(), 3);
        let capped = GovernanceParams {
            k: Some(2),
            ..Default::default()
        };
        let top = atlas_update(cands, &phi, &m, &capped);
        assert_eq!(top.member_sets(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn tie_chain_prefers_smaller_cut_then_lexicographic() {
        let phi = [0.5; 6];
        let m = matrices(6, vec![], vec![(0, 5, 0.1)]);
        let params = GovernanceParams {
            tau: 0.2,
            ..unbounded()
        };
        // Equal score and mass; {0,1} carries cut 0.1 so {1,2} wins.
        let a = atlas_update(
            vec![zone(&[0, 1], &phi), zone(&[1, 2], &phi)],
            &phi,
            &m,
            &params,
        );
        assert_eq!(a.member_sets(), vec![vec![1, 2]]);
        let a = atlas_update(
            vec![zone(&[3, 4], &phi), zone(&[2, 3], &phi)],
            &phi,
            &m,
            &params,
        );
        assert_eq!(a.member_sets(), vec![vec![2, 3]]);
    }

    #[test]
    fn update_is_idempotent_on_its_output() {
        let phi = [0.9, 0.8, 0.7, 0.6, 0.5];
        let m = matrices(5, vec![(0, 1, 1.0)], vec![(1, 2, 1.0)]);
        let cands = vec![
            zone(&[0, 1, 2], &phi),
            zone(&[1, 2, 3], &phi),
            zone(&[3, 4], &phi),
            zone(&[4], &phi),
        ];
        let p = unbounded();
        let once = atlas_update(cands, &phi, &m, &p);
        let twice = atlas_update(once.zone_list(), &phi, &m, &p);
        assert_eq!(once.zones(), twice.zones());
    }

    #[test]
    fn refresh_on_unchanged_inputs_is_identity() {
        let phi = [0.9, 0.8, 0.7, 0.6, 0.5];
        let m = matrices(5, vec![(0, 1, 1.0)], vec![(1, 2, 1.0)]);
        let cands = vec![
            zone(&[0, 1, 2], &phi),
            zone(&[1, 2, 3], &phi),
            zone(&[3, 4], &phi),
        ];
        let p = GovernanceParams::default();
        let prev = atlas_update(cands.clone(), &phi, &m, &p);
        assert_eq!(atlas_refresh(&prev, cands, &phi, &m, &p), prev);
    }

    #[test]
    fn small_gain_challenger_is_deferred() {
        let m = matrices(6, vec![], vec![]);
        let p = GovernanceParams {
            k: Some(1),
            ..Default::default()
        };
        let phi0 = [0.5, 0.5, 0.5, 0.5, 0.0, 0.0];
        let prev = atlas_update(vec![zone(&[0, 1, 2, 3], &phi0)], &phi0, &m, &p);
        // {2,3,4,5} overlaps the incumbent at 1/3: a conflict, but not a
        // continuation of it.
        let cands = |phi: &[f64]| vec![zone(&[0, 1, 2, 3], phi), zone(&[2, 3, 4, 5], phi)];
        let gain = p.delta_score / 2.0;
        let phi1 = [0.5, 0.5, 0.5, 0.5, 0.5 + gain, 0.5];
        let fresh = atlas_update(cands(&phi1), &phi1, &m, &p);
        assert_eq!(fresh.member_sets(), vec![vec![2, 3, 4, 5]]);
        let next = atlas_refresh(&prev, cands(&phi1), &phi1, &m, &p);
        assert_eq!(next.member_sets(), vec![vec![0, 1, 2, 3]]);
        let phi2 = [0.5, 0.5, 0.5, 0.5, 0.6, 0.6];
        let next = atlas_refresh(&prev, cands(&phi2), &phi2, &m, &p);
        assert_eq!(next.member_sets(), vec![vec![2, 3, 4, 5]]);
    }

    #[test]
    fn region_examples() {
        // Path 0-1-2-3-4-5.
        let m = matrices(6, (0..5).map(|i| (i, i + 1, 1.0)).collect(), vec![]);
        let proj = SignedProjection::full(&m);
        let prev = [0.9; 6];
        assert!(local_refresh_region(&prev, &prev, 0.5, &proj, 2, &[])
            .unwrap()
            .is_empty());
        let mut new = prev;
        new[2] = 0.1;
        assert_eq!(
            local_refresh_region(&prev, &new, 0.5, &proj, 0, &[]).unwrap(),
            vec![2]
        );
        assert_eq!(
            local_refresh_region(&prev, &new, 0.5, &proj, 2, &[]).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        assert!(local_refresh_region(&prev, &new[..5], 0.5, &proj, 2, &[]).is_err());
    }

    #[test]
    fn report_rows_and_csv() {
        let phi = [0.9, 0.8, 0.5, 0.4];
        let m = matrices(4, vec![], vec![(0, 2, 0.7)]);
        let a = atlas_update(
            vec![zone(&[0, 1], &phi), zone(&[2, 3], &phi)],
            &phi,
            &m,
            &unbounded(),
        );
        let rows = zone_report(&a, &phi, &m, &unbounded());
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.nn_jaccard == 0.0));
        assert_eq!(rows[0].cut_minus, 0.7);
        let csv = report_csv(&rows);
        assert!(csv.starts_with(REPORT_HEADER));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().contains(",raw,"));
    }

    #[test]
    fn params_validation() {
        assert!(GovernanceParams::default().validate().is_ok());
        let bad = GovernanceParams {
            tau_keep: 0.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GovernanceParams {
            lambda_gov: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
