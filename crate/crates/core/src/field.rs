//! The equilibrium ±1 field: components of the ancestral graph colored
//! independently.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec::Vec;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::coalesce::{run_backward, ComponentLabeling, Site};
use crate::error::{check_p, invalid, Error, Result};
use crate::steplaw::{LawParams, StepLaw};

/// Microscopic time ⌊t·n^α/(2L(n))⌋ for macroscopic time t.
pub fn microscopic_time(law: &StepLaw, t: f64, n: u64) -> i64 {
    let nf = n.max(1) as f64;
    (t * nf.powf(law.alpha()) / law.two_sided_scale(nf)).floor() as i64
}

fn unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Colors on sites 0..=n for a set of time slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceTimeField {
    n: usize,
    slice_times: Vec<i64>,
    // Row of each requested slice in `levels`.
    slice_level: Vec<usize>,
    levels: Vec<i64>,
    bits: Vec<Vec<u64>>,
    prefix: Vec<Vec<i64>>,
    p: f64,
    labeling: ComponentLabeling,
    law: LawParams,
    seed: Option<u64>,
}

/// Sample the field on sites 0..=n at the given microscopic slice times.
/// All slices share one backward run; repeated slice times share rows.
pub fn sample_equilibrium_field<R: RngCore + ?Sized>(
    law: &StepLaw,
    p: f64,
    n: usize,
    slice_times: &[i64],
    t_max: u64,
    rng: &mut R,
) -> Result<SpaceTimeField> {
    check_p(p)?;
    if slice_times.is_empty() {
        return Err(invalid("slice_times", "need at least one slice"));
    }
    let mut levels: Vec<i64> = slice_times.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let slice_level: Vec<usize> = slice_times.iter().map(|t| levels.binary_search(t).unwrap_or(0)).collect();
    let width = n + 1;
    let mut sites = Vec::with_capacity(width * levels.len());
    for &t in &levels {
        sites.extend((0..width as i64).map(|i| Site::new(i, t)));
    }
    let labeling = run_backward(&sites, law, t_max, rng)?;
    let colors: Vec<bool> = (0..labeling.component_count()).map(|_| unit_uniform(rng) < p).collect();
    let words = width.div_ceil(64);
    let mut bits = Vec::with_capacity(levels.len());
    let mut prefix = Vec::with_capacity(levels.len());
    for row in 0..levels.len() {
        let mut b = alloc::vec![0u64; words];
        let mut pre = Vec::with_capacity(width);
        let mut acc = 0i64;
        for i in 0..width {
            let up = colors[labeling.label(row * width + i) as usize];
            if up {
                b[i / 64] |= 1 << (i % 64);
                acc += 1;
            } else {
                acc -= 1;
            }
            pre.push(acc);
        }
        bits.push(b);
        prefix.push(pre);
    }
    Ok(SpaceTimeField {
        n,
        slice_times: slice_times.to_vec(),
        slice_level,
        levels,
        bits,
        prefix,
        p,
        labeling,
        law: law.params(),
        seed: None,
    })
}

impl SpaceTimeField {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// n; the window holds sites 0..=n.
    pub fn window_width(&self) -> usize {
        self.n
    }

    pub fn slice_times(&self) -> &[i64] {
        &self.slice_times
    }

    pub fn slice_count(&self) -> usize {
        self.slice_times.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn law(&self) -> LawParams {
        self.law
    }

    pub fn labeling(&self) -> &ComponentLabeling {
        &self.labeling
    }

    fn row(&self, slice: usize) -> usize {
        self.slice_level[slice]
    }

    /// ±1 at site i of a slice.
    pub fn value(&self, i: usize, slice: usize) -> i8 {
        let w = self.bits[self.row(slice)][i / 64];
        if (w >> (i % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Σ_{i=0}^{m} value(i).
    pub fn prefix_sum(&self, m: usize, slice: usize) -> i64 {
        self.prefix[self.row(slice)][m]
    }

    pub fn prefix_sums(&self, slice: usize) -> &[i64] {
        &self.prefix[self.row(slice)]
    }

    /// S(⌊xn⌋) = Σ_{i=0}^{⌊xn⌋} value(i).
    pub fn partial_sum(&self, x: f64, slice: usize) -> Result<i64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid("x", "must lie in [0,1]"));
        }
        if slice >= self.slice_count() {
            return Err(Error::UnknownSlice(slice as i64));
        }
        Ok(self.prefix_sum(self.index_of(x), slice))
    }

    fn index_of(&self, x: f64) -> usize {
        ((x * self.n as f64).floor() as usize).min(self.n)
    }

    /// (S(⌊xn⌋) − (2p−1)⌊xn⌋)/σ_n.
    pub fn rescaled(&self, sigma_n: f64, x: f64, slice: usize) -> Result<f64> {
        if !(sigma_n > 0.0) {
            return Err(invalid("sigma_n", "must be > 0"));
        }
        let s = self.partial_sum(x, slice)? as f64;
        let m = self.index_of(x) as f64;
        Ok((s - (2.0 * self.p - 1.0) * m) / sigma_n)
    }

    /// Σ_{i ∈ T_β ∩ slice} weight(i) for every component β, indexed by label
    /// (zero for components missing the slice).
    pub fn component_sums<F: Fn(usize) -> f64>(&self, slice: usize, weight: F) -> Vec<f64> {
        let row = self.row(slice);
        let width = self.n + 1;
        let mut out = alloc::vec![0.0; self.labeling.component_count()];
        for i in 0..width {
            out[self.labeling.label(row * width + i) as usize] += weight(i);
        }
        out
    }

    /// Sizes |T_β ∩ slice| of the components meeting the slice.
    pub fn component_slice_sizes(&self, slice: usize) -> Result<Vec<usize>> {
        let t = *self.slice_times.get(slice).ok_or(Error::UnknownSlice(slice as i64))?;
        self.labeling.component_slice_sizes(t)
    }
}

/// Law of the component colors B_β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ColoringLaw {
    /// ±1 with P(+1) = p.
    Bernoulli { p: f64 },
    /// Uniform on [−√3, √3]: mean 0, variance 1, bounded third moment.
    Uniform,
}

impl ColoringLaw {
    pub fn mean(&self) -> f64 {
        match self {
            ColoringLaw::Bernoulli { p } => 2.0 * p - 1.0,
            ColoringLaw::Uniform => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ColoringLaw::Bernoulli { p } => 4.0 * p * (1.0 - p),
            ColoringLaw::Uniform => 1.0,
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = unit_uniform(rng);
        match self {
            ColoringLaw::Bernoulli { p } => {
                if u < *p {
                    1.0
                } else {
                    -1.0
                }
            }
            ColoringLaw::Uniform => 3f64.sqrt() * (2.0 * u - 1.0),
        }
    }
}

/// Σ_β w_β (B_β − E B) for fresh independent colors B_β.
pub fn recolored_sum<R: RngCore + ?Sized>(weights: &[f64], coloring: ColoringLaw, rng: &mut R) -> f64 {
    let m = coloring.mean();
    weights.iter().map(|w| w * (coloring.sample(rng) - m)).sum()
}

/// E[(Σ_β w_β (B_β − E B))² | graph] = Var(B)·Σ_β w_β².
pub fn conditional_variance(weights: &[f64], coloring: ColoringLaw) -> f64 {
    coloring.variance() * weights.iter().map(|w| w * w).sum::<f64>()
}
