//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-11, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, ..Default::default() }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    // Rounding floor 50ε·∫|f| on the panel.
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_sum = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_sum;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(floor);
    }
    Panel { a, b, value, error, floor }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_points(f, &[a, b], tol)
}

/// Integrate over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` (which must be increasing).
///
/// Panels whose error is already at the rounding floor, or that can no longer
/// be bisected, are frozen; the run converges once the total error meets the
/// tolerance or is made up of rounding floors.
pub fn integrate_points<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::with_capacity(points.len().max(16));
    let mut frozen = Totals::default();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1]));
            evaluations += 15;
        }
    }
    let max_panels = tol.max_intervals.max(heap.len() + 1);
    loop {
        let live = totals(&heap);
        let value = live.value + frozen.value;
        let error = live.error + frozen.error;
        let floor = live.floor + frozen.floor;
        if error <= tol.abs.max(tol.rel * value.abs()).max(1.5 * floor) {
            return Ok(Estimate { value, error, evaluations });
        }
        if heap.len() + frozen.panels >= max_panels {
            return Err(Error::QuadratureFailed { value, error, evaluations });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Err(Error::QuadratureFailed { value, error, evaluations }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || worst.error <= worst.floor {
            frozen.add(&worst);
            continue;
        }
        heap.push(gk15(&mut f, worst.a, mid));
        heap.push(gk15(&mut f, mid, worst.b));
        evaluations += 30;
    }
}

#[derive(Default)]
struct Totals {
    value: f64,
    error: f64,
    floor: f64,
    panels: usize,
}

impl Totals {
    fn add(&mut self, p: &Panel) {
        self.value += p.value;
        self.error += p.error;
        self.floor += p.floor;
        self.panels += 1;
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> Totals {
    // Re-summing each round keeps the totals free of cancellation drift.
    let mut t = Totals::default();
    for p in heap.iter() {
        t.add(p);
    }
    t
}

/// Evenly spaced breakpoints `a, a+h, ..., b` with `pieces` panels.
pub fn uniform_points(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut pts: Vec<f64> = (0..pieces).map(|i| a + h * i as f64).collect();
    pts.push(b);
    pts
}
