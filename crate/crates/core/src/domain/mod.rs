//! Open planar regions and their vertical-slice geometry.
//!
//! A [`Region`] is a union of open primitives (rectangles, disks, predicate
//! sets) clipped to a bounding box, minus a measure-zero excluded set of
//! points and vertical segments.  All topology questions (connectedness,
//! x-simplicity, witnesses) are answered at a finite raster resolution `h`;
//! slice endpoints are refined well below `h` so that downstream solvers get
//! sharp interval bounds.

mod classify;
mod section;
mod witness;

pub use classify::{classify, Classification, ComponentInfo, Raster};
pub use section::{bounds, smooth_section, BoundsFn, SectionFn};
pub use witness::{find_witness, Witness};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("region is empty at resolution {0:.3e}")]
    EmptyRegion(f64),
    #[error("region is not x-simple: slice at t = {0} has {1} intervals")]
    NotXSimple(f64, usize),
    #[error("no witness found at resolution {h:.3e}; all slice disconnections may be thinner than h — refine the resolution")]
    NoWitness { h: f64 },
    #[error("slice at t = {0} is too thin ({1:.3e}) to place a section strictly inside")]
    SliceTooThin(f64, f64),
    #[error("section requested outside the sampled parameter range")]
    OutOfRange,
}

/// Open axis-aligned rectangle `(t0,t1) x (x0,x1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl Rect {
    pub fn new(t0: f64, t1: f64, x0: f64, x1: f64) -> Rect {
        Rect { t0, t1, x0, x1 }
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        self.t0 < t && t < self.t1 && self.x0 < x && x < self.x1
    }

    pub fn diagonal(&self) -> f64 {
        ((self.t1 - self.t0).powi(2) + (self.x1 - self.x0).powi(2)).sqrt()
    }
}

// Rectangles serialize as `[t0, t1, x0, x1]`.
impl Serialize for Rect {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        [self.t0, self.t1, self.x0, self.x1].serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let [t0, t1, x0, x1] = <[f64; 4]>::deserialize(de)?;
        Ok(Rect { t0, t1, x0, x1 })
    }
}

/// One open primitive of a region.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `[t0, t1, x0, x1]`, open.
    Rect(Rect),
    /// `[center_t, center_x, radius]`, open.
    Disk([f64; 3]),
    /// Points where the predicate expression is true, sampled at resolution
    /// `h` and refined by bisection.
    Expr(Expr),
}

impl Shape {
    fn contains(&self, t: f64, x: f64) -> bool {
        match self {
            Shape::Rect(r) => r.contains(t, x),
            Shape::Disk([ct, cx, r]) => (t - ct).powi(2) + (x - cx).powi(2) < r * r,
            Shape::Expr(e) => e.eval_bool(t, x),
        }
    }
}

/// Open region of the `(t,x)`-plane.
///
/// Membership is the union of `shapes`, intersected with the open `bbox`,
/// minus the excluded points and closed vertical segments.  The excluded set
/// has measure zero, so it never changes raster connectivity, but it does cut
/// slices: `slice` reports split intervals on the exact parameter lines that
/// carry exclusions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Region {
    pub bbox: Rect,
    pub shapes: Vec<Shape>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_points: Vec<(f64, f64)>,
    /// `(t, xlo, xhi)`: the closed segment `{t} x [xlo, xhi]` is removed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_vsegments: Vec<(f64, f64, f64)>,
    /// Raster resolution; defaults to `1e-3` of the bbox diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

/// One maximal open interval of a slice, with provenance flags for its
/// endpoints: whether they come from the bbox clip or from an excluded set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_at_bbox: bool,
    pub hi_at_bbox: bool,
    pub lo_at_exclusion: bool,
    pub hi_at_exclusion: bool,
}

impl Interval {
    fn plain(lo: f64, hi: f64) -> Interval {
        Interval {
            lo,
            hi,
            lo_at_bbox: false,
            hi_at_bbox: false,
            lo_at_exclusion: false,
            hi_at_exclusion: false,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// Vertical slice `{t} x Region_t`: disjoint open intervals sorted by `lo`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Slice {
    pub t: f64,
    pub intervals: Vec<Interval>,
}

impl Slice {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The interval containing `x`, if any.
    pub fn interval_containing(&self, x: f64) -> Option<&Interval> {
        self.intervals.iter().find(|iv| iv.contains(x))
    }

    /// Lower and upper bounds of the slice union (None when empty).
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(a), Some(b)) => Some((a.lo, b.hi)),
            _ => None,
        }
    }
}

/// Exact-enough comparison for parameter lines carrying exclusions: the scan
/// inserts those t values verbatim, so equality up to a few ulps suffices.
fn same_t(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl Region {
    pub fn new(bbox: Rect, shapes: Vec<Shape>) -> Region {
        Region {
            bbox,
            shapes,
            exclude_points: Vec::new(),
            exclude_vsegments: Vec::new(),
            resolution: None,
        }
    }

    /// Raster resolution in plane units.
    pub fn resolution(&self) -> f64 {
        self.resolution.unwrap_or(1e-3 * self.bbox.diagonal())
    }

    /// Pointwise membership.  False on excluded points/segments, on the bbox
    /// boundary, and outside every shape.
    pub fn contains(&self, t: f64, x: f64) -> bool {
        if !self.bbox.contains(t, x) {
            return false;
        }
        if !self.shapes.iter().any(|s| s.contains(t, x)) {
            return false;
        }
        for &(pt, px) in &self.exclude_points {
            if same_t(t, pt) && same_t(x, px) {
                return false;
            }
        }
        for &(st, xlo, xhi) in &self.exclude_vsegments {
            if same_t(t, st) && xlo <= x && x <= xhi {
                return false;
            }
        }
        true
    }

    /// Parameter values the scanning routines must visit: the uniform grid at
    /// resolution `h` plus every parameter line that carries an exclusion.
    pub fn t_scan_values(&self, h: f64) -> Vec<f64> {
        let mut ts = Vec::new();
        let n = ((self.bbox.t1 - self.bbox.t0) / h).ceil() as usize;
        for i in 0..=n {
            let t = self.bbox.t0 + i as f64 * h;
            if t <= self.bbox.t1 {
                ts.push(t);
            }
        }
        for &(pt, _) in &self.exclude_points {
            if self.bbox.t0 < pt && pt < self.bbox.t1 {
                ts.push(pt);
            }
        }
        for &(st, _, _) in &self.exclude_vsegments {
            if self.bbox.t0 < st && st < self.bbox.t1 {
                ts.push(st);
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }

    /// Semi-analytic vertical slice at parameter `t`.
    ///
    /// Analytic shapes contribute closed-form interval bounds; predicate
    /// shapes are sampled at resolution `h` with endpoints refined by
    /// bisection to `h/100`.  Exclusions on this exact line split or trim the
    /// merged intervals.
    pub fn slice(&self, t: f64) -> Slice {
        let h = self.resolution();
        if t <= self.bbox.t0 || t >= self.bbox.t1 {
            return Slice {
                t,
                intervals: Vec::new(),
            };
        }
        let (bx0, bx1) = (self.bbox.x0, self.bbox.x1);
        let mut raw: Vec<Interval> = Vec::new();
        for shape in &self.shapes {
            match shape {
                Shape::Rect(r) => {
                    if r.t0 < t && t < r.t1 {
                        push_clipped(&mut raw, r.x0, r.x1, bx0, bx1);
                    }
                }
                Shape::Disk([ct, cx, rad]) => {
                    let d = t - ct;
                    if d.abs() < *rad {
                        let w = (rad * rad - d * d).sqrt();
                        push_clipped(&mut raw, cx - w, cx + w, bx0, bx1);
                    }
                }
                Shape::Expr(e) => {
                    scan_predicate_runs(e, t, bx0, bx1, h, &mut raw);
                }
            }
        }
        let mut intervals = merge_intervals(raw);
        self.subtract_exclusions(t, &mut intervals);
        intervals.retain(|iv| iv.width() > 0.0);
        Slice { t, intervals }
    }

    fn subtract_exclusions(&self, t: f64, intervals: &mut Vec<Interval>) {
        for &(pt, px) in &self.exclude_points {
            if !same_t(t, pt) {
                continue;
            }
            let mut out = Vec::with_capacity(intervals.len() + 1);
            for iv in intervals.drain(..) {
                if iv.contains(px) {
                    let mut left = iv;
                    left.hi = px;
                    left.hi_at_bbox = false;
                    left.hi_at_exclusion = true;
                    let mut right = iv;
                    right.lo = px;
                    right.lo_at_bbox = false;
                    right.lo_at_exclusion = true;
                    out.push(left);
                    out.push(right);
                } else {
                    out.push(iv);
                }
            }
            *intervals = out;
        }
        for &(st, xlo, xhi) in &self.exclude_vsegments {
            if !same_t(t, st) {
                continue;
            }
            let mut out = Vec::with_capacity(intervals.len() + 1);
            for iv in intervals.drain(..) {
                if xhi <= iv.lo || xlo >= iv.hi {
                    out.push(iv);
                    continue;
                }
                if iv.lo < xlo {
                    let mut left = iv;
                    left.hi = xlo;
                    left.hi_at_bbox = false;
                    left.hi_at_exclusion = true;
                    out.push(left);
                }
                if xhi < iv.hi {
                    let mut right = iv;
                    right.lo = xhi;
                    right.lo_at_bbox = false;
                    right.lo_at_exclusion = true;
                    out.push(right);
                }
            }
            *intervals = out;
        }
    }
}

fn push_clipped(out: &mut Vec<Interval>, lo: f64, hi: f64, bx0: f64, bx1: f64) {
    let clo = lo.max(bx0);
    let chi = hi.min(bx1);
    if clo < chi {
        let mut iv = Interval::plain(clo, chi);
        iv.lo_at_bbox = clo > lo || clo == bx0;
        iv.hi_at_bbox = chi < hi || chi == bx1;
        out.push(iv);
    }
}

/// Maximal runs where the predicate holds along the line, endpoints bisected
/// to `h/100` against the predicate's sign change.
fn scan_predicate_runs(e: &Expr, t: f64, bx0: f64, bx1: f64, h: f64, out: &mut Vec<Interval>) {
    let n = (((bx1 - bx0) / h).ceil() as usize).max(2);
    let xs: Vec<f64> = (0..=n)
        .map(|j| bx0 + (bx1 - bx0) * j as f64 / n as f64)
        .collect();
    let tol = h / 100.0;
    let mut j = 0;
    while j <= n {
        if !e.eval_bool(t, xs[j]) {
            j += 1;
            continue;
        }
        let run_start = j;
        while j + 1 <= n && e.eval_bool(t, xs[j + 1]) {
            j += 1;
        }
        let run_end = j;
        let mut iv = Interval::plain(xs[run_start], xs[run_end]);
        if run_start == 0 {
            iv.lo_at_bbox = true;
        } else {
            iv.lo = bisect_boundary(e, t, xs[run_start - 1], xs[run_start], tol);
        }
        if run_end == n {
            iv.hi_at_bbox = true;
        } else {
            iv.hi = bisect_boundary(e, t, xs[run_end + 1], xs[run_end], tol);
        }
        if iv.width() > 0.0 {
            out.push(iv);
        }
        j += 1;
    }
}

/// Bisect between an outside point and an inside point down to `tol`.
fn bisect_boundary(e: &Expr, t: f64, mut outside: f64, mut inside: f64, tol: f64) -> f64 {
    while (outside - inside).abs() > tol {
        let mid = 0.5 * (outside + inside);
        if e.eval_bool(t, mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (outside + inside)
}

/// Union of possibly overlapping intervals.  Open intervals that merely touch
/// at one point stay separate: the shared endpoint is not in the union.
fn merge_intervals(mut raw: Vec<Interval>) -> Vec<Interval> {
    raw.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
    for iv in raw {
        match out.last_mut() {
            Some(last) if iv.lo < last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                    last.hi_at_bbox = iv.hi_at_bbox;
                    last.hi_at_exclusion = iv.hi_at_exclusion;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}
