//! Backward coalescing ancestral lines from a finite set of space-time sites.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use rand::RngCore;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::analytic::shared_ancestry;
use crate::error::{invalid, Error, Result};
use crate::special::gamma;
use crate::steplaw::StepLaw;
use crate::unionfind::UnionFind;

type FxMap<K, V> = HashMap<K, V, FxBuildHasher>;

/// Lattice site (space, time).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub space: i64,
    pub time: i64,
}

impl Site {
    pub fn new(space: i64, time: i64) -> Self {
        Site { space, time }
    }
}

/// State of the ancestral lines after some backward steps.
///
/// Occupied positions are kept in a vector in first-arrival order, with a
/// hash index from position to slot, so jumps are drawn in an order that
/// depends only on the seed.
#[derive(Debug, Clone)]
pub struct CoalescenceFrontier<'a> {
    law: &'a StepLaw,
    sites: &'a [Site],
    order: Vec<u32>,
    next_pending: usize,
    current_time: i64,
    deepest_time: i64,
    steps_below_deepest: u64,
    occupied: Vec<(i64, u32)>,
    index: FxMap<i64, u32>,
    scratch: Vec<(i64, u32)>,
    clusters: UnionFind,
}

impl<'a> CoalescenceFrontier<'a> {
    pub fn new(sites: &'a [Site], law: &'a StepLaw) -> Result<Self> {
        let mut seen: HashSet<Site, FxBuildHasher> = HashSet::with_capacity_and_hasher(sites.len(), FxBuildHasher);
        for s in sites {
            if !seen.insert(*s) {
                return Err(Error::DuplicateSite { space: s.space, time: s.time });
            }
        }
        if sites.len() >= u32::MAX as usize {
            return Err(invalid("sites", "too many sites"));
        }
        let mut order: Vec<u32> = (0..sites.len() as u32).collect();
        order.sort_by_key(|&i| core::cmp::Reverse(sites[i as usize].time));
        let current_time = sites.iter().map(|s| s.time).max().unwrap_or(0);
        let deepest_time = sites.iter().map(|s| s.time).min().unwrap_or(0);
        let mut f = CoalescenceFrontier {
            law,
            sites,
            order,
            next_pending: 0,
            current_time,
            deepest_time,
            steps_below_deepest: 0,
            occupied: Vec::new(),
            index: FxMap::default(),
            scratch: Vec::new(),
            clusters: UnionFind::new(sites.len()),
        };
        f.admit_level();
        Ok(f)
    }

    fn admit_level(&mut self) {
        while self.next_pending < self.order.len() {
            let i = self.order[self.next_pending];
            let site = self.sites[i as usize];
            if site.time != self.current_time {
                break;
            }
            self.next_pending += 1;
            match self.index.get(&site.space) {
                Some(&slot) => {
                    let rep = self.occupied[slot as usize].1;
                    self.clusters.union(rep, i);
                }
                None => {
                    self.index.insert(site.space, self.occupied.len() as u32);
                    self.occupied.push((site.space, i));
                }
            }
        }
    }

    /// Time level of the frontier (decreases by one per step).
    pub fn time(&self) -> i64 {
        self.current_time
    }

    /// Steps taken past the deepest queried level.
    pub fn steps_below_deepest(&self) -> u64 {
        self.steps_below_deepest
    }

    pub fn live_count(&self) -> usize {
        self.occupied.len()
    }

    pub fn pending_sites(&self) -> usize {
        self.order.len() - self.next_pending
    }

    pub fn clusters(&self) -> usize {
        self.clusters.sets()
    }

    /// Move every occupied position to its parent n − J with one jump per
    /// position, merge collisions, then admit sites of the new level.
    pub fn step<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        self.index.clear();
        if self.index.capacity() > 8 * self.occupied.len() + 64 {
            self.index.shrink_to(2 * self.occupied.len());
        }
        self.scratch.clear();
        for k in 0..self.occupied.len() {
            let (pos, rep) = self.occupied[k];
            let next = pos.wrapping_sub(self.law.sample(rng));
            match self.index.get(&next) {
                Some(&slot) => {
                    let other = self.scratch[slot as usize].1;
                    self.clusters.union(other, rep);
                }
                None => {
                    self.index.insert(next, self.scratch.len() as u32);
                    self.scratch.push((next, rep));
                }
            }
        }
        core::mem::swap(&mut self.occupied, &mut self.scratch);
        if self.current_time <= self.deepest_time {
            self.steps_below_deepest += 1;
        }
        self.current_time -= 1;
        self.admit_level();
    }

    /// Done when the horizon is spent or a single line remains with nothing
    /// left to admit.
    pub fn finished(&self, t_max: u64) -> bool {
        if self.pending_sites() > 0 {
            return false;
        }
        self.live_count() <= 1 || self.steps_below_deepest >= t_max
    }

    pub fn into_labeling(mut self, t_max: u64) -> ComponentLabeling {
        let n = self.sites.len();
        let mut dense: FxMap<u32, u32> = FxMap::default();
        let mut labels = Vec::with_capacity(n);
        for i in 0..n as u32 {
            let r = self.clusters.find(i);
            let next = dense.len() as u32;
            labels.push(*dense.entry(r).or_insert(next));
        }
        ComponentLabeling {
            sites: self.sites.to_vec(),
            labels,
            components: dense.len(),
            residual_clusters: self.occupied.len(),
            cutoff_used: t_max,
            steps_below_deepest: self.steps_below_deepest,
        }
    }
}

/// Partition of the queried sites into components of the ancestral graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLabeling {
    sites: Vec<Site>,
    labels: Vec<u32>,
    components: usize,
    residual_clusters: usize,
    cutoff_used: u64,
    steps_below_deepest: u64,
}

impl ComponentLabeling {
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Component ids, dense and numbered in order of first appearance.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// Lines still distinct when the walk stopped.
    pub fn residual_clusters(&self) -> usize {
        self.residual_clusters
    }

    pub fn cutoff_used(&self) -> u64 {
        self.cutoff_used
    }

    pub fn steps_below_deepest(&self) -> u64 {
        self.steps_below_deepest
    }

    /// Per-component count of queried sites at `slice_time`, for components
    /// that meet that level.
    pub fn component_slice_sizes(&self, slice_time: i64) -> Result<Vec<usize>> {
        let mut counts = alloc::vec![0usize; self.components];
        let mut any = false;
        for (s, &l) in self.sites.iter().zip(&self.labels) {
            if s.time == slice_time {
                counts[l as usize] += 1;
                any = true;
            }
        }
        if !any {
            return Err(Error::UnknownSlice(slice_time));
        }
        counts.retain(|&c| c > 0);
        Ok(counts)
    }
}

/// Run the ancestral lines of `sites` backward until they have all merged or
/// `t_max` steps have been taken below the deepest site. `t_max = 0` takes
/// no steps past the deepest level.
pub fn run_backward<R: RngCore + ?Sized>(
    sites: &[Site],
    law: &StepLaw,
    t_max: u64,
    rng: &mut R,
) -> Result<ComponentLabeling> {
    let mut frontier = CoalescenceFrontier::new(sites, law)?;
    while !frontier.finished(t_max) {
        frontier.step(rng);
    }
    Ok(frontier.into_labeling(t_max))
}

/// Default horizon c·n^α·ln n (n ≥ 2).
pub fn default_t_max(law: &StepLaw, n: u64, c: f64) -> u64 {
    let nf = (n.max(2)) as f64;
    (c * nf.powf(law.alpha()) * nf.ln()).ceil() as u64
}

/// P((k,0) ∼ (0,0)) = (1/2π)∫cos(kx)/(1 − P²) dx / ‖Q‖².
pub fn coalesce_prob_fourier(law: &StepLaw, k: i64, q_norm2: f64) -> Result<f64> {
    Ok((shared_ancestry(law, k, 0)? / q_norm2).clamp(0.0, 1.0))
}

/// Leading-order hitting probability of 0 for the difference walk started at
/// distance r: Γ(1−α)sin(πα/2)r^(α−1)/(2π·a·‖Q‖²) with a = 2c_α·lim L.
pub fn far_field_hitting(law: &StepLaw, r: f64, q_norm2: f64) -> f64 {
    let alpha = law.alpha();
    let half = 0.5 * core::f64::consts::PI * alpha;
    let a = 2.0 * half.cos() * gamma(1.0 - alpha) * law.slowly_varying_limit();
    gamma(1.0 - alpha) * half.sin() * r.powf(alpha - 1.0) / (2.0 * core::f64::consts::PI * a * q_norm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub k: i64,
    pub estimate: f64,
    pub stderr: f64,
    /// Fraction of paths neither merged nor escaped at t_max.
    pub live_fraction: f64,
    /// Fraction of paths stopped beyond the escape radius.
    pub escaped_fraction: f64,
    pub reps: u64,
    pub degenerate: bool,
}

/// Default escape radius for [`coalesce_prob_mc`].
pub const ESCAPE_RADIUS: i64 = 1 << 24;

/// Monte Carlo estimate of P((k,0) ∼ (0,0)) from the difference walk
/// D₀ = k, D_{s+1} = D_s + J − J′. Paths are stopped when they hit 0, when
/// |D| exceeds `escape_radius`, or after `t_max` steps; only hits count.
pub fn coalesce_prob_mc<R: RngCore + ?Sized>(
    law: &StepLaw,
    k: i64,
    t_max: u64,
    reps: u64,
    escape_radius: i64,
    rng: &mut R,
) -> Result<McEstimate> {
    if reps == 0 {
        return Err(invalid("reps", "must be positive"));
    }
    if k == 0 {
        return Ok(McEstimate {
            k,
            estimate: 1.0,
            stderr: 0.0,
            live_fraction: 0.0,
            escaped_fraction: 0.0,
            reps,
            degenerate: true,
        });
    }
    let mut hits = 0u64;
    let mut live = 0u64;
    let mut escaped = 0u64;
    for _ in 0..reps {
        match difference_walk(law, k, t_max, escape_radius, rng) {
            WalkEnd::Hit => hits += 1,
            WalkEnd::Escaped => escaped += 1,
            WalkEnd::Live => live += 1,
        }
    }
    let r = reps as f64;
    let est = hits as f64 / r;
    Ok(McEstimate {
        k,
        estimate: est,
        stderr: (est * (1.0 - est) / r).sqrt(),
        live_fraction: live as f64 / r,
        escaped_fraction: escaped as f64 / r,
        reps,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkEnd {
    Hit,
    Escaped,
    Live,
}

/// One difference-walk path.
pub fn difference_walk<R: RngCore + ?Sized>(
    law: &StepLaw,
    k: i64,
    t_max: u64,
    escape_radius: i64,
    rng: &mut R,
) -> WalkEnd {
    let mut d = k;
    for _ in 0..t_max {
        d = d.wrapping_add(law.sample(rng)).wrapping_sub(law.sample(rng));
        if d == 0 {
            return WalkEnd::Hit;
        }
        if d.unsigned_abs() > escape_radius as u64 {
            return WalkEnd::Escaped;
        }
    }
    WalkEnd::Live
}
