//! Slice integration: adaptive Runge-Kutta 5(4) with dense output, parameter
//! sweeps over a family of slices, and adaptive quadrature.
//!
//! Each slice `t = const` carries a linear first-order system
//! `v' = A(t, x) v + F(t, x)` in `x`.  A slice solution is integrated in both
//! directions from an anchor point and stored as a chain of quartic
//! interpolants, so later passes (Wronskian fields, expansions, residual
//! checks) can evaluate it anywhere on the covered range at full order.

use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::domain::{Interval, Region, SectionFn};
use crate::operators::{CompiledSystem, LinearSystem};

// Dormand-Prince 5(4) tableau with the dense-output row.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step: quartic interpolants over `[xa, xa + h]` (h signed).
#[derive(Debug, Clone)]
struct Segment {
    xa: f64,
    h: f64,
    /// `dim` rows of 5 interpolation coefficients.
    cont: Vec<[f64; 5]>,
}

impl Segment {
    fn eval_into(&self, x: f64, out: &mut [f64]) {
        let th = (x - self.xa) / self.h;
        let th1 = 1.0 - th;
        for (o, c) in out.iter_mut().zip(&self.cont) {
            *o = c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
        }
    }
}

/// How a slice integration ended.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceStatus {
    /// Both directions reached their target endpoint.
    Complete,
    /// `|v|` crossed the blow-up bound, or the step size underflowed, at
    /// `x_star` while going in direction `dir` (-1 left, +1 right).
    Blowup { x_star: f64, dir: i8 },
    /// The anchor point was not inside the slice; nothing was integrated.
    NoAnchor,
}

/// Dense solution of one slice.
#[derive(Debug, Clone)]
pub struct SliceSolution {
    pub t: f64,
    /// Anchor `x` the initial data was posed at.
    pub anchor: f64,
    pub init: Vec<f64>,
    pub status: SliceStatus,
    /// Accepted / rejected step counts over both directions.
    pub steps: (usize, usize),
    segments: Vec<Segment>,
}

impl SliceSolution {
    pub fn dim(&self) -> usize {
        self.init.len()
    }

    /// Covered x-range (hull of all accepted steps).
    pub fn covered(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.segments {
            lo = lo.min(s.xa.min(s.xa + s.h));
            hi = hi.max(s.xa.max(s.xa + s.h));
        }
        if self.segments.is_empty() {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Evaluate the full state vector at `x`, if covered.
    pub fn eval(&self, x: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out)?;
        Some(out)
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Option<()> {
        if self.segments.is_empty() {
            return None;
        }
        // Segments are sorted by their left edge; find the covering one.
        let pos = self
            .segments
            .partition_point(|s| s.xa.min(s.xa + s.h) <= x)
            .checked_sub(1)?;
        let seg = &self.segments[pos];
        let (lo, hi) = (seg.xa.min(seg.xa + seg.h), seg.xa.max(seg.xa + seg.h));
        // Covers join round-off only; must stay below the boundary shave.
        let slack = 1e-13 * seg.h.abs();
        if x < lo - slack || x > hi + slack {
            return None;
        }
        seg.eval_into(x, out);
        Some(())
    }

    /// First component at `x` (the scalar solution, for companion systems).
    pub fn eval_first(&self, x: f64) -> Option<f64> {
        if self.segments.is_empty() {
            return None;
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out)?;
        Some(out[0])
    }
}

/// Integrate one slice in both directions from `anchor`.
///
/// Endpoints flagged as abutting an excluded set are approached only up to
/// the configured boundary shave, since coefficients are often singular
/// exactly there.
pub fn solve_slice(
    sys: &CompiledSystem,
    t: f64,
    iv: &Interval,
    anchor: f64,
    init: &[f64],
    cfg: &SolverConfig,
) -> SliceSolution {
    assert_eq!(init.len(), sys.dim(), "initial data has the wrong dimension");
    let shave = cfg.boundary_tol();
    let lo = if iv.lo_at_exclusion { iv.lo + shave } else { iv.lo };
    let hi = if iv.hi_at_exclusion { iv.hi - shave } else { iv.hi };
    // Anchoring exactly on a kept endpoint is fine (the covered interval is
    // closed there); anchors outside, or inside a shaved band, are not.
    if !(anchor >= lo && anchor <= hi) {
        return SliceSolution {
            t,
            anchor,
            init: init.to_vec(),
            status: SliceStatus::NoAnchor,
            steps: (0, 0),
            segments: Vec::new(),
        };
    }

    let left = integrate_dir(sys, t, anchor, lo, init, cfg);
    let right = integrate_dir(sys, t, anchor, hi, init, cfg);
    let mut segments = left.segments;
    segments.reverse();
    segments.extend(right.segments);
    let status = match (left.blowup, right.blowup) {
        (Some((x_star, dir)), _) | (None, Some((x_star, dir))) => {
            SliceStatus::Blowup { x_star, dir }
        }
        (None, None) => SliceStatus::Complete,
    };
    SliceSolution {
        t,
        anchor,
        init: init.to_vec(),
        status,
        steps: (
            left.accepted + right.accepted,
            left.rejected + right.rejected,
        ),
        segments,
    }
}

struct DirResult {
    segments: Vec<Segment>,
    blowup: Option<(f64, i8)>,
    accepted: usize,
    rejected: usize,
}

fn integrate_dir(
    sys: &CompiledSystem,
    t: f64,
    x0: f64,
    xend: f64,
    v0: &[f64],
    cfg: &SolverConfig,
) -> DirResult {
    let dim = sys.dim();
    let posneg = (xend - x0).signum();
    let dir: i8 = if posneg < 0.0 { -1 } else { 1 };
    let mut res = DirResult {
        segments: Vec::new(),
        blowup: None,
        accepted: 0,
        rejected: 0,
    };
    if (xend - x0).abs() == 0.0 || posneg == 0.0 {
        return res;
    }

    let mut x = x0;
    let mut y = v0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut ynew = vec![0.0; dim];
    let mut ystage = vec![0.0; dim];
    sys.eval_into(t, x, &y, &mut k[0]);

    let hmax = (xend - x0).abs();
    let mut h = hinit(sys, t, x, &y, &k[0], posneg, hmax, cfg);

    // PI step control state.
    let mut facold: f64 = 1e-4;
    let expo1 = 0.2 - 0.04 * 0.75;
    let (safe, fac1, fac2) = (0.9, 0.2, 10.0);
    let max_steps = 500_000usize;

    for _ in 0..max_steps {
        let mut last = false;
        if (x + 1.01 * h - xend) * posneg > 0.0 {
            h = xend - x;
            last = true;
        }

        // Stages 2..7 (k7 at the step end doubles as next k1: first-same-as-last).
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        let mut finite = true;
        for (s, row) in rows.iter().enumerate() {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, &a) in row.iter().enumerate() {
                    acc += h * a * k[j][i];
                }
                ystage[i] = acc;
            }
            sys.eval_into(t, x + C[s + 1] * h, &ystage, &mut k[s + 1]);
            finite &= k[s + 1].iter().all(|v| v.is_finite());
        }
        for i in 0..dim {
            let mut acc = y[i];
            for (j, &b) in B.iter().enumerate() {
                acc += h * b * k[j][i];
            }
            ynew[i] = acc;
        }
        sys.eval_into(t, x + h, &ynew, &mut k[6]);
        finite &= k[6].iter().all(|v| v.is_finite()) && ynew.iter().all(|v| v.is_finite());

        if !finite {
            res.rejected += 1;
            h *= 0.5;
            if h.abs() < cfg.h_min {
                res.blowup = Some((x, dir));
                return res;
            }
            continue;
        }

        // Weighted RMS error of the embedded 4th-order difference.
        let mut err = 0.0;
        for i in 0..dim {
            let sk = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
            let mut e = 0.0;
            for (j, &ej) in E.iter().enumerate() {
                e += ej * k[j][i];
            }
            err += (h * e / sk).powi(2);
        }
        err = (err / dim as f64).sqrt();

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            // Accept: store the interpolant, advance, recycle the last stage.
            let fac = (fac11 / facold.powf(0.04)).clamp(1.0 / fac2, 1.0 / fac1);
            facold = err.max(1e-4);
            let mut cont = Vec::with_capacity(dim);
            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                let mut d = 0.0;
                for (j, &dj) in D.iter().enumerate() {
                    d += dj * k[j][i];
                }
                cont.push([y[i], ydiff, bspl, ydiff - h * k[6][i] - bspl, h * d]);
            }
            res.segments.push(Segment { xa: x, h, cont });
            res.accepted += 1;
            x += h;
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            if y.iter().any(|v| v.abs() > cfg.blowup_bound) {
                res.blowup = Some((x, dir));
                return res;
            }
            if last {
                return res;
            }
            h /= fac.max(1e-30);
            if h.abs() > hmax {
                h = hmax * posneg;
            }
        } else {
            res.rejected += 1;
            h /= (fac11 / safe).min(1.0 / fac1);
        }
        if h.abs() < cfg.h_min {
            res.blowup = Some((x, dir));
            return res;
        }
    }
    res.blowup = Some((x, dir));
    res
}

/// Starting step size: compare the scale of the state with the scale of the
/// derivative, then correct with a crude second-derivative estimate.
fn hinit(
    sys: &CompiledSystem,
    t: f64,
    x: f64,
    y: &[f64],
    f0: &[f64],
    posneg: f64,
    hmax: f64,
    cfg: &SolverConfig,
) -> f64 {
    let dim = y.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..dim {
        let sk = cfg.atol + cfg.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(hmax) * posneg;

    let y1: Vec<f64> = y.iter().zip(f0).map(|(yi, fi)| yi + h * fi).collect();
    let mut f1 = vec![0.0; dim];
    sys.eval_into(t, x + h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..dim {
        let sk = cfg.atol + cfg.rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    der2 = der2.sqrt() / h.abs();

    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h.abs() * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h.abs()).min(h1).min(hmax).max(cfg.h_min) * posneg
}

/// Solution family over a set of parameter values.
#[derive(Debug, Clone)]
pub struct ParamSolution {
    pub slices: Vec<SliceSolution>,
}

impl ParamSolution {
    /// The slice at parameter `t` (exact up to relative 1e-12).
    pub fn slice_at(&self, t: f64) -> Option<&SliceSolution> {
        let tol = 1e-12 * (1.0 + t.abs());
        let pos = self.slices.partition_point(|s| s.t < t - tol);
        self.slices.get(pos).filter(|s| (s.t - t).abs() <= tol)
    }

    /// Evaluate the first component at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> Option<f64> {
        self.slice_at(t)?.eval_first(x)
    }
}

/// Integrate the system on every listed parameter value, anchored on a
/// section curve.  Initial data may vary with `t`.  Slices whose anchor
/// misses the region come back with [`SliceStatus::NoAnchor`].
pub fn sweep(
    sys: &LinearSystem,
    region: &Region,
    section: &SectionFn,
    init: &(dyn Fn(f64) -> Vec<f64> + Sync),
    ts: &[f64],
    cfg: &SolverConfig,
) -> ParamSolution {
    let compiled = sys.compile();
    let mut slices: Vec<SliceSolution> = ts
        .par_iter()
        .map(|&t| {
            let slice = region.slice(t);
            let anchor = section.eval(t);
            match slice.interval_containing(anchor) {
                Some(iv) => solve_slice(&compiled, t, iv, anchor, &init(t), cfg),
                None => SliceSolution {
                    t,
                    anchor,
                    init: init(t),
                    status: SliceStatus::NoAnchor,
                    steps: (0, 0),
                    segments: Vec::new(),
                },
            }
        })
        .collect();
    slices.sort_by(|a, b| a.t.total_cmp(&b.t));
    ParamSolution { slices }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
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
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Running integral of `f` from `xs[0]` to each grid point.
pub fn cumulative_integral(f: &dyn Fn(f64) -> f64, xs: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            acc += integral(f, xs[i - 1], x, tol);
        }
        out.push(acc);
    }
    out
}
