//! Integrals over the circle of functions of the characteristic function,
//! with the x^(-α) singularity at the origin removed by substituting
//! x = w^(1/(1-α)).

#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::Result;
use crate::quad::{integrate_points, Estimate, Tolerance};
use crate::steplaw::StepLaw;

/// (1/π)∫_0^π f(x, 1 − P(x)) dx.
///
/// `oscillation` is the angular frequency of the fastest oscillating factor
/// in `f`; breakpoints are placed at its half periods. `scale` adds
/// geometric breakpoints around a known concentration scale.
pub fn circle_integral<F>(
    law: &StepLaw,
    oscillation: f64,
    scale: Option<f64>,
    tol: Tolerance,
    mut f: F,
) -> Result<Estimate>
where
    F: FnMut(f64, f64) -> f64,
{
    let alpha = law.alpha();
    let gamma = 1.0 / (1.0 - alpha);
    let mut xs: Vec<f64> = Vec::new();
    let mut g = PI;
    for _ in 0..60 {
        g *= 0.5;
        xs.push(g);
    }
    if let Some(s) = scale {
        let mut v = s / 16.0;
        while v < PI {
            xs.push(v);
            v *= 2.0;
        }
    }
    if oscillation > 0.5 {
        let step = PI / oscillation;
        let count = (oscillation.floor() as usize).min(1 << 22);
        xs.extend((1..=count).map(|j| j as f64 * step).filter(|&x| x < PI));
    }
    xs.push(0.0);
    xs.push(PI);
    xs.retain(|&x| x <= PI);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ws: Vec<f64> = xs.iter().map(|&x| x.powf(1.0 - alpha)).collect();
    let tol = tol.with_max_intervals(tol.max_intervals.max(4 * ws.len()));
    let est = integrate_points(
        |w| {
            let x = w.powf(gamma);
            if x <= 0.0 {
                return 0.0;
            }
            let jac = gamma * w.powf(gamma - 1.0);
            f(x, law.one_minus_char_fn(x)) * jac
        },
        &ws,
        tol,
    )?;
    Ok(Estimate { value: est.value / PI, error: est.error / PI, evaluations: est.evaluations })
}

/// P^t given 1 − P.
pub fn char_power(one_minus: f64, t: u64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    let p = 1.0 - one_minus;
    if p >= 0.0 {
        ((t as f64) * libm::log1p(-one_minus)).exp()
    } else {
        let m = (-p).powf(t as f64);
        if t % 2 == 0 {
            m
        } else {
            -m
        }
    }
}

/// 1/(1 − P²) given 1 − P.
pub fn inverse_one_minus_square(one_minus: f64) -> f64 {
    1.0 / (one_minus * (2.0 - one_minus))
}
