//! Witness search for non-x-simplicity.
//!
//! A witness is the rectangle configuration that certifies a connected open
//! set is not x-simple: a parameter line `t0` carrying a non-member set
//! `Upsilon` inside `{t0} x [x1, x2]`, with `(t0, x1)` and `(t0, x2)` outside
//! the region, while the closed rectangle `[t0-eps, t0] x [x1-eps, x2+eps]`
//! minus a neighborhood of `Upsilon` lies inside the region (reflected in `t`
//! when the rectangle extends to the right instead).  The search works at
//! raster scale: it walks to the edge of a run of disconnected slices and
//! grows the rectangle until membership probes fail.

use serde::{Deserialize, Serialize};

use super::classify::Classification;
use super::{DomainError, Region};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    /// The parameter line carrying the obstruction.
    pub t0: f64,
    /// Rectangle half-size; half of the raster-measured clearance.
    pub eps: f64,
    /// Gap endpoints on the line, `x1 <= x2`; neither point is in the region.
    pub x1: f64,
    pub x2: f64,
    /// When true the rectangle extends to `[t0, t0+eps]` instead of
    /// `[t0-eps, t0]`.
    pub reflected_t: bool,
    /// Sampled non-member points of `{t0} x [x1, x2]`.
    pub upsilon: Vec<(f64, f64)>,
}

impl Witness {
    /// Signed direction of the rectangle: -1 extends left, +1 extends right.
    pub fn direction(&self) -> f64 {
        if self.reflected_t {
            1.0
        } else {
            -1.0
        }
    }

    /// Parameter at distance `d > 0` from the line, on the rectangle side.
    pub fn approach_t(&self, d: f64) -> f64 {
        self.t0 + self.direction() * d
    }
}

/// Find a witness for some non-x-simple component of a classified region.
pub fn find_witness(region: &Region, cls: &Classification) -> Result<Witness, DomainError> {
    let h = cls.h;
    for comp in cls.components.iter().filter(|c| !c.x_simple) {
        let bad: Vec<f64> = cls
            .disconnected_slices
            .iter()
            .filter(|&&(_, id)| id == comp.id)
            .map(|&(t, _)| t)
            .collect();
        for run in split_runs(&bad, 1.5 * h) {
            let (first, last) = (run[0], run[run.len() - 1]);
            for (t0, reflected) in [(first, false), (last, true)] {
                if let Some(w) = try_line(region, cls, comp.id, t0, reflected) {
                    return Ok(w);
                }
            }
        }
    }
    Err(DomainError::NoWitness { h })
}

/// Group sorted values into runs of near-consecutive samples.
fn split_runs(sorted: &[f64], max_gap: f64) -> Vec<Vec<f64>> {
    let mut runs: Vec<Vec<f64>> = Vec::new();
    for &t in sorted {
        match runs.last_mut() {
            Some(run) if t - run[run.len() - 1] <= max_gap => run.push(t),
            _ => runs.push(vec![t]),
        }
    }
    runs
}

fn try_line(
    region: &Region,
    cls: &Classification,
    comp_id: u32,
    t0: f64,
    reflected: bool,
) -> Option<Witness> {
    let h = cls.h;
    let slice = region.slice(t0);
    // Intervals of this component only; gaps between other components are
    // not obstructions (the space between them is genuinely outside).
    let intervals: Vec<_> = slice
        .intervals
        .iter()
        .filter(|iv| {
            let probes = [0.5, 0.25, 0.75, 0.1, 0.9];
            probes
                .iter()
                .map(|k| cls.raster.label_at(t0, iv.lo + iv.width() * k))
                .find(|&l| l != 0)
                == Some(comp_id)
        })
        .collect();
    for pair in intervals.windows(2) {
        let (x1, x2) = (pair[0].hi, pair[1].lo);
        if region.contains(t0, x1) || region.contains(t0, x2) {
            continue;
        }
        let upsilon = sample_upsilon(region, t0, x1, x2, h);
        if upsilon.is_empty() {
            continue;
        }
        // Grow the clearance geometrically, then bisect to raster accuracy.
        let cap = (region.bbox.t1 - region.bbox.t0).max(region.bbox.x1 - region.bbox.x0);
        let mut lo = 0.0f64;
        let mut r = 4.0 * h;
        while r <= cap && rect_clear(region, t0, x1, x2, r, reflected, h, h / 2.0) {
            lo = r;
            r *= 2.0;
        }
        if lo == 0.0 {
            continue;
        }
        let mut hi = r.min(cap * 1.0001);
        for _ in 0..8 {
            let mid = 0.5 * (lo + hi);
            if rect_clear(region, t0, x1, x2, mid, reflected, h, h / 2.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let eps = lo / 2.0;
        // A rectangle that does not clear the excused strip around the
        // obstruction certifies nothing.
        if eps < 3.0 * h {
            continue;
        }
        // Final validation of the half-size rectangle with denser probe lines.
        if !rect_clear(region, t0, x1, x2, eps, reflected, h, h / 3.0) {
            continue;
        }
        return Some(Witness {
            t0,
            eps,
            x1,
            x2,
            reflected_t: reflected,
            upsilon,
        });
    }
    None
}

/// Non-member samples of `{t0} x [x1, x2]` at spacing `<= h/10`.
fn sample_upsilon(region: &Region, t0: f64, x1: f64, x2: f64, h: f64) -> Vec<(f64, f64)> {
    if x2 < x1 {
        return Vec::new();
    }
    let n = (((x2 - x1) / (h / 10.0)).ceil() as usize).max(1);
    let mut out = Vec::new();
    for k in 0..=n {
        let x = if x1 == x2 {
            x1
        } else {
            x1 + (x2 - x1) * k as f64 / n as f64
        };
        if !region.contains(t0, x) {
            out.push((t0, x));
        }
        if x1 == x2 {
            break;
        }
    }
    out
}

/// Check the rectangle of size `r` on the chosen side of `t0`, excusing the
/// `2h`-strip around the obstruction segment on the line itself.
///
/// Works line by line on the slice decomposition rather than with pointwise
/// membership probes: a slit or a row of punctures is invisible to isolated
/// probes, but splits the slice it sits on.  Every exclusion line crossing
/// the rectangle is checked in addition to the regular grid of lines.
#[allow(clippy::too_many_arguments)]
fn rect_clear(
    region: &Region,
    t0: f64,
    x1: f64,
    x2: f64,
    r: f64,
    reflected: bool,
    h: f64,
    spacing: f64,
) -> bool {
    let (tlo, thi) = if reflected { (t0, t0 + r) } else { (t0 - r, t0) };
    let (xlo, xhi) = (x1 - r, x2 + r);
    let nt = (((thi - tlo) / spacing).ceil() as usize).max(1);
    let mut lines: Vec<f64> = (0..=nt)
        .map(|i| tlo + (thi - tlo) * i as f64 / nt as f64)
        .collect();
    lines.extend(
        region
            .exclude_points
            .iter()
            .map(|&(t, _)| t)
            .chain(region.exclude_vsegments.iter().map(|&(t, _, _)| t))
            .filter(|&t| t >= tlo && t <= thi),
    );
    for t in lines {
        let slice = region.slice(t);
        if (t - t0).abs() <= 2.0 * h {
            // On the excused strip only the flanks of the gap band matter.
            if !span_inside(&slice, xlo, x1 - 2.0 * h) || !span_inside(&slice, x2 + 2.0 * h, xhi) {
                return false;
            }
        } else if !span_inside(&slice, xlo, xhi) {
            return false;
        }
    }
    true
}

/// Whether the closed span `[a, b]` sits strictly inside one slice interval.
/// An empty span (`a > b`) holds trivially.
fn span_inside(slice: &super::Slice, a: f64, b: f64) -> bool {
    if a > b {
        return true;
    }
    slice.intervals.iter().any(|iv| iv.lo < a && b < iv.hi)
}
