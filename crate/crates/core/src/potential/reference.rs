//! Bin integrals of `exp(-U)` by adaptive Simpson quadrature.
//!
//! Adaptive subdivision concentrates work on bins crossed by a kink of `U`,
//! where uniform refinement converges slowly.

use rayon::prelude::*;

use super::Potential;
use crate::error::{Error, Result};
use crate::metrics::GridSpec;

const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 40;

pub(super) fn bin_integrals(potential: &dyn Potential, grid: &GridSpec) -> Result<Vec<f64>> {
    if grid.dim() != potential.dim() {
        return Err(Error::DimensionMismatch { expected: potential.dim(), got: grid.dim() });
    }
    let density = |x: &[f64]| (-potential.value(x)).exp();
    match grid.dim() {
        1 => {
            let ax = &grid.axes()[0];
            Ok((0..ax.bins)
                .into_par_iter()
                .map(|i| {
                    let (a, b) = ax.bin_edges(i);
                    integrate(&|x| density(&[x]), a, b)
                })
                .collect())
        }
        2 => {
            let (ax, ay) = (&grid.axes()[0], &grid.axes()[1]);
            Ok((0..ax.bins * ay.bins)
                .into_par_iter()
                .map(|flat| {
                    let (i, j) = (flat / ay.bins, flat % ay.bins);
                    let (x0, x1) = ax.bin_edges(i);
                    let (y0, y1) = ay.bin_edges(j);
                    integrate(&|x| integrate(&|y| density(&[x, y]), y0, y1), x0, x1)
                })
                .collect())
        }
        d => Err(Error::Unsupported(format!("reference densities are available in 1 or 2 dimensions, not {d}"))),
    }
}

/// Adaptive Simpson rule on `[a, b]`.
pub(crate) fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // A coarse pre-split keeps narrow features from hiding between the first nodes.
    let quarter = (b - a) / 4.0;
    (0..4)
        .map(|k| {
            let lo = a + quarter * k as f64;
            let hi = if k == 3 { b } else { lo + quarter };
            let (flo, fhi) = (f(lo), f(hi));
            let mid = 0.5 * (lo + hi);
            let fmid = f(mid);
            let s = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            refine(f, lo, hi, flo, fmid, fhi, s, 0.25 * whole.abs(), 0)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    scale: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let tol = REL_TOL * scale.max((left + right).abs());
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, scale * 0.5, depth + 1)
        + refine(f, m, b, fm, frm, fb, right, scale * 0.5, depth + 1)
}
