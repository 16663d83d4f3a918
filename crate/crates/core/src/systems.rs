//! First-order linear systems `v' = A(t, x) v + F(t, x)` treated directly:
//! fundamental matrices, the determinant/trace identity, and forced
//! solutions with a quadrature cross-check.
//!
//! Everything a scalar operator enjoys carries over through its companion
//! system, so these routines double as an independent route through the
//! scalar theory; the acceptance suite exploits that redundancy.

use nalgebra::{DMatrix, DVector};

use crate::config::{linspace, GridSpec, SolverConfig};
use crate::domain::{Classification, Region, SectionFn};
use crate::fundamental::{assess, FundamentalVerdict, WronskianReport};
use crate::integrate::{integral, sweep, ParamSolution, SliceStatus};
use crate::operators::LinearSystem;

/// Matrix solution family with unit frame on the anchor curve:
/// `Phi(t, theta(t)) = I`.
pub struct FundamentalMatrix {
    pub dim: usize,
    pub ts: Vec<f64>,
    pub section: SectionFn,
    /// `columns[j]` solves the homogeneous system from the `j`-th unit vector.
    pub columns: Vec<ParamSolution>,
}

impl FundamentalMatrix {
    pub fn eval(&self, t: f64, x: f64) -> Option<DMatrix<f64>> {
        let n = self.dim;
        let mut cols = Vec::with_capacity(n);
        for col in &self.columns {
            cols.push(col.slice_at(t)?.eval(x)?);
        }
        Some(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }

    pub fn det(&self, t: f64, x: f64) -> Option<f64> {
        Some(self.eval(t, x)?.determinant())
    }

    /// x-range covered by every column on the slice at `t`.
    pub fn covered(&self, t: f64) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for col in &self.columns {
            let (a, b) = col.slice_at(t)?.covered()?;
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo < hi).then_some((lo, hi))
    }
}

/// Integrate the homogeneous part of `sys` from every unit vector.
pub fn build_fundamental_matrix(
    sys: &LinearSystem,
    region: &Region,
    section: &SectionFn,
    ts: &[f64],
    cfg: &SolverConfig,
) -> FundamentalMatrix {
    let n = sys.dim();
    let hom = sys.homogeneous();
    let columns = (0..n)
        .map(|j| {
            let init = move |_t: f64| {
                let mut v = vec![0.0; n];
                v[j] = 1.0;
                v
            };
            sweep(&hom, region, section, &init, ts, cfg)
        })
        .collect();
    FundamentalMatrix {
        dim: n,
        ts: ts.to_vec(),
        section: section.clone(),
        columns,
    }
}

/// Sample `det Phi` against `exp(int_theta^x tr A)` on `grid.nx` points per
/// slice.
pub fn det_check(
    fm: &FundamentalMatrix,
    sys: &LinearSystem,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> WronskianReport {
    let compiled = sys.compile();
    let mut report = WronskianReport {
        samples: Vec::new(),
        max_rel_dev: 0.0,
        anchor_dev: 0.0,
        min_abs: f64::INFINITY,
        skipped_slices: 0,
    };
    for &t in &fm.ts {
        let complete = fm.columns.iter().all(|col| {
            col.slice_at(t)
                .is_some_and(|s| s.status == SliceStatus::Complete)
        });
        let Some((lo, hi)) = fm.covered(t) else {
            report.skipped_slices += 1;
            continue;
        };
        if !complete {
            report.skipped_slices += 1;
            continue;
        }
        let theta = fm.section.eval(t);
        if let Some(d0) = fm.det(t, theta) {
            report.anchor_dev = report.anchor_dev.max((d0 - 1.0).abs());
        }
        let trace = |x: f64| compiled.trace(t, x);
        for x in linspace(lo, hi, grid.nx.max(2)) {
            let Some(d) = fm.det(t, x) else { continue };
            let g = integral(&trace, theta, x, cfg.quad_tol);
            report.min_abs = report.min_abs.min(d.abs());
            let (predicted, dev) = if g.abs() > 700.0 {
                let dev = if d > 0.0 {
                    (d.ln() - g).abs() / g.abs()
                } else {
                    f64::INFINITY
                };
                (g, dev)
            } else {
                let p = g.exp();
                (p, (d - p).abs() / p.abs().max(1e-300))
            };
            report.max_rel_dev = report.max_rel_dev.max(dev);
            report.samples.push((t, x, d, predicted));
        }
    }
    report
}

/// Verdict for a matrix family, by the same region/Wronskian logic as the
/// scalar case.
pub fn assess_matrix(cls: &Classification, report: &WronskianReport) -> FundamentalVerdict {
    assess(cls, report)
}

/// Integrate the forced system from given initial data on the anchor curve.
pub fn solve_system(
    sys: &LinearSystem,
    region: &Region,
    section: &SectionFn,
    init: &(dyn Fn(f64) -> Vec<f64> + Sync),
    ts: &[f64],
    cfg: &SolverConfig,
) -> ParamSolution {
    sweep(sys, region, section, init, ts, cfg)
}

/// Variation-of-constants state at `(t, x)`:
/// `Phi(x) (v0 + int_theta^x Phi(xi)^-1 F(xi) dxi)`.
pub fn quadrature_system_state(
    fm: &FundamentalMatrix,
    sys: &LinearSystem,
    v0: &[f64],
    t: f64,
    x: f64,
    cfg: &SolverConfig,
) -> Option<Vec<f64>> {
    let n = fm.dim;
    let forcing: Vec<_> = sys.f.iter().map(|e| e.compile()).collect();
    let mut accum = DVector::from_column_slice(v0);
    for i in 0..n {
        let slot = |xi: f64| -> f64 {
            let Some(phi) = fm.eval(t, xi) else {
                return f64::NAN;
            };
            let rhs = DVector::from_iterator(n, forcing.iter().map(|f| f.eval(t, xi)));
            match phi.lu().solve(&rhs) {
                Some(w) => w[i],
                None => f64::NAN,
            }
        };
        accum[i] += integral(&slot, fm.section.eval(t), x, cfg.quad_tol);
    }
    let out = fm.eval(t, x)? * accum;
    out.iter().all(|v| v.is_finite()).then(|| out.iter().copied().collect())
}
