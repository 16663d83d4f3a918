//! Slice bounds and smooth sections through x-simple regions.

use serde::{Deserialize, Serialize};

use super::{DomainError, Region};

/// Strict margin a section keeps from the slice bounds.
const SECTION_MARGIN: f64 = 1e-9;

/// Sampled lower/upper slice bounds over the parameter range.
///
/// Bounds at the bbox edge are flagged: they stand in for an unbounded slice
/// that was clipped.  Evaluation between samples is linear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsFn {
    pub ts: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub lo_at_bbox: Vec<bool>,
    pub hi_at_bbox: Vec<bool>,
}

impl BoundsFn {
    /// `(lo, hi)` interpolated at `t`; `None` outside the sampled range.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        let k = locate(&self.ts, t)?;
        if k + 1 == self.ts.len() {
            return Some((self.lo[k], self.hi[k]));
        }
        let w = (t - self.ts[k]) / (self.ts[k + 1] - self.ts[k]);
        Some((
            self.lo[k] * (1.0 - w) + self.lo[k + 1] * w,
            self.hi[k] * (1.0 - w) + self.hi[k + 1] * w,
        ))
    }
}

/// Section curve `theta(t)` strictly inside the slices of an x-simple region,
/// cubic-Hermite interpolated between samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionFn {
    pub ts: Vec<f64>,
    pub thetas: Vec<f64>,
}

impl SectionFn {
    /// A constant section; valid whenever the constant stays interior.
    pub fn constant(t0: f64, t1: f64, value: f64) -> SectionFn {
        SectionFn {
            ts: vec![t0, t1],
            thetas: vec![value, value],
        }
    }

    /// Evaluate at `t` (clamped to the sampled parameter range).
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.thetas[0];
        }
        if t >= self.ts[n - 1] {
            return self.thetas[n - 1];
        }
        let k = locate(&self.ts, t).unwrap();
        if k + 1 == n {
            return self.thetas[n - 1];
        }
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let (y0, y1) = (self.thetas[k], self.thetas[k + 1]);
        let dt = t1 - t0;
        // finite-difference slopes, one-sided at the ends
        let m0 = if k == 0 {
            (y1 - y0) / dt
        } else {
            (y1 - self.thetas[k - 1]) / (t1 - self.ts[k - 1])
        };
        let m1 = if k + 2 == n {
            (y1 - y0) / dt
        } else {
            (self.thetas[k + 2] - y0) / (self.ts[k + 2] - t0)
        };
        let s = (t - t0) / dt;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * y0 + h10 * dt * m0 + h01 * y1 + h11 * dt * m1
    }
}

/// Index of the sample interval containing `t`.
fn locate(ts: &[f64], t: f64) -> Option<usize> {
    if ts.is_empty() || t < ts[0] || t > ts[ts.len() - 1] {
        return None;
    }
    match ts.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(k) => Some(k),
        Err(k) => Some(k - 1),
    }
}

/// Sample the slice bounds of a region over its parameter scan.
pub fn bounds(region: &Region) -> Result<BoundsFn, DomainError> {
    let h = region.resolution();
    let mut out = BoundsFn {
        ts: Vec::new(),
        lo: Vec::new(),
        hi: Vec::new(),
        lo_at_bbox: Vec::new(),
        hi_at_bbox: Vec::new(),
    };
    for t in region.t_scan_values(h) {
        let slice = region.slice(t);
        if let Some((lo, hi)) = slice.bounds() {
            out.ts.push(t);
            out.lo.push(lo);
            out.hi.push(hi);
            out.lo_at_bbox
                .push(slice.intervals.first().unwrap().lo_at_bbox);
            out.hi_at_bbox
                .push(slice.intervals.last().unwrap().hi_at_bbox);
        }
    }
    if out.ts.is_empty() {
        return Err(DomainError::EmptyRegion(h));
    }
    Ok(out)
}

/// Construct a section strictly inside an x-simple region.
///
/// Slice midpoints are smoothed with a Gaussian-weighted moving average whose
/// window is halved until the curve keeps a strict margin to both bounds; if
/// the window collapses below the sample spacing the raw midpoints are used
/// (they always satisfy the margin).
pub fn smooth_section(region: &Region) -> Result<SectionFn, DomainError> {
    let h = region.resolution();
    let mut ts = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for t in region.t_scan_values(h) {
        let slice = region.slice(t);
        if slice.is_empty() {
            continue;
        }
        if slice.intervals.len() > 1 {
            return Err(DomainError::NotXSimple(t, slice.intervals.len()));
        }
        let iv = &slice.intervals[0];
        if iv.width() <= 2.0 * SECTION_MARGIN {
            return Err(DomainError::SliceTooThin(t, iv.width()));
        }
        ts.push(t);
        lo.push(iv.lo);
        hi.push(iv.hi);
    }
    if ts.is_empty() {
        return Err(DomainError::EmptyRegion(h));
    }
    let mids: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let min_spacing = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let span = ts[ts.len() - 1] - ts[0];
    let mut window = span / 8.0;
    let thetas = loop {
        if !window.is_finite() || window < min_spacing / 4.0 || span == 0.0 {
            break mids.clone();
        }
        let candidate = gaussian_average(&ts, &mids, window);
        let valid = candidate
            .iter()
            .zip(lo.iter().zip(&hi))
            .all(|(&th, (&a, &b))| a + SECTION_MARGIN < th && th < b - SECTION_MARGIN);
        if valid {
            break candidate;
        }
        window /= 2.0;
    };
    Ok(SectionFn { ts, thetas })
}

/// Gaussian-weight moving average with the kernel truncated at three windows.
fn gaussian_average(ts: &[f64], ys: &[f64], window: f64) -> Vec<f64> {
    let n = ts.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        let mut wsum = 0.0;
        // samples are sorted: walk outwards until the kernel is negligible
        let mut push = |j: usize| {
            let d = (ts[j] - ts[i]) / window;
            if d.abs() <= 3.0 {
                let w = (-d * d).exp();
                acc += w * ys[j];
                wsum += w;
                true
            } else {
                false
            }
        };
        push(i);
        for j in (0..i).rev() {
            if !push(j) {
                break;
            }
        }
        for j in i + 1..n {
            if !push(j) {
                break;
            }
        }
        out.push(acc / wsum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Rect, Region, Shape};
    use crate::expr::parse;

    #[test]
    fn strip_section_is_the_midline() {
        let mut r = Region::new(
            Rect::new(-2.0, 2.0, -1.0, 2.0),
            vec![Shape::Rect(Rect::new(-2.0, 2.0, 0.0, 1.0))],
        );
        r.resolution = Some(1e-2);
        let theta = smooth_section(&r).unwrap();
        for &t in &[-1.9, -0.3, 0.0, 1.2, 1.99] {
            assert!((theta.eval(t) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_section_stays_strictly_inside() {
        // 0 < x < t over 0 < t < 1: slices shrink to a point at the left end
        let mut r = Region::new(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            vec![Shape::Expr(parse("x > 0 && x < t").unwrap())],
        );
        r.resolution = Some(2e-3);
        let theta = smooth_section(&r).unwrap();
        for (&t, &th) in theta.ts.iter().zip(&theta.thetas) {
            assert!(0.0 < th && th < t, "theta({t}) = {th} escaped the slice");
        }
    }

    #[test]
    fn disk_bounds_match_the_analytic_chord() {
        let mut r = Region::new(
            Rect::new(-2.0, 2.0, -2.0, 2.0),
            vec![Shape::Disk([0.0, 0.0, 1.0])],
        );
        r.resolution = Some(2e-3);
        let b = bounds(&r).unwrap();
        for &t in &[-0.9, -0.5, 0.0, 0.3, 0.8] {
            let (lo, hi) = b.eval(t).unwrap();
            let w: f64 = (1.0 - t * t).sqrt();
            assert!((lo + w).abs() < 5e-3, "lo({t}) = {lo}");
            assert!((hi - w).abs() < 5e-3, "hi({t}) = {hi}");
        }
        assert!(b.eval(1.5).is_none(), "outside the nonempty slice range");
    }

    #[test]
    fn section_on_non_x_simple_region_errors() {
        let mut r = Region::new(
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            vec![Shape::Rect(Rect::new(-1.0, 1.0, -1.0, 1.0))],
        );
        r.exclude_vsegments.push((0.0, -0.2, 0.3));
        r.resolution = Some(1e-2);
        assert!(matches!(
            smooth_section(&r),
            Err(DomainError::NotXSimple(_, _))
        ));
    }

    #[test]
    fn constant_section_evaluates_everywhere() {
        let s = SectionFn::constant(0.0, 1.0, 0.25);
        assert_eq!(s.eval(0.5), 0.25);
        assert_eq!(s.eval(-3.0), 0.25);
        assert_eq!(s.eval(7.0), 0.25);
    }

    #[test]
    fn hermite_interpolation_reproduces_linear_sections() {
        let ts: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let thetas: Vec<f64> = ts.iter().map(|t| 0.3 * t + 0.1).collect();
        let s = SectionFn { ts, thetas };
        for &t in &[0.05, 0.333, 0.71, 0.99] {
            assert!((s.eval(t) - (0.3 * t + 0.1)).abs() < 1e-12);
        }
    }
}
