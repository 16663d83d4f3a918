//! Fundamental sets of homogeneous solutions and their Wronskian fields.
//!
//! On an x-simple piece, a fundamental set is built slicewise: the companion
//! system is integrated from the anchor curve `theta(t)` with the `p` unit
//! vectors as initial data.  That normalizes the Wronskian to `1` on the
//! anchor curve, and along every slice the first-order identity
//! `W' = -(g_{p-1}/g_p) W` predicts it everywhere else; comparing the sampled
//! determinant against that prediction is a strong end-to-end check of the
//! whole pipeline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{linspace, GridSpec, SolverConfig};
use crate::domain::{Classification, Region, SectionFn};
use crate::integrate::{integral, sweep, ParamSolution, SliceStatus};
use crate::operators::ScalarOperator;

/// A family of `p` homogeneous solutions with unit initial frames on the
/// anchor curve.
pub struct FundamentalSet {
    pub order: usize,
    pub ts: Vec<f64>,
    pub section: SectionFn,
    /// `solutions[s]` is the family whose anchor state is the `s`-th unit
    /// vector: solution number `s` satisfies `d^i u/dx^i(theta) = [i == s]`.
    pub solutions: Vec<ParamSolution>,
}

impl FundamentalSet {
    /// Value of solution `s` at `(t, x)`.
    pub fn eval(&self, s: usize, t: f64, x: f64) -> Option<f64> {
        self.solutions[s].eval(t, x)
    }

    /// Full derivative stack `(u, u', ..)` of solution `s` at `(t, x)`.
    pub fn eval_state(&self, s: usize, t: f64, x: f64) -> Option<Vec<f64>> {
        self.solutions[s].slice_at(t)?.eval(x)
    }

    /// Wronskian at `(t, x)`: determinant of the state columns.
    pub fn wronskian(&self, t: f64, x: f64) -> Option<f64> {
        let p = self.order;
        let mut cols = Vec::with_capacity(p);
        for s in 0..p {
            cols.push(self.eval_state(s, t, x)?);
        }
        Some(DMatrix::from_fn(p, p, |i, j| cols[j][i]).determinant())
    }

    /// x-range covered by every member on the slice at `t`.
    pub fn covered(&self, t: f64) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for sol in &self.solutions {
            let (a, b) = sol.slice_at(t)?.covered()?;
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo < hi).then_some((lo, hi))
    }
}

/// Build the fundamental set of `P u = 0` over the parameter values `ts`,
/// anchored on `section`.
pub fn build_fundamental(
    op: &ScalarOperator,
    region: &Region,
    section: &SectionFn,
    ts: &[f64],
    cfg: &SolverConfig,
) -> FundamentalSet {
    let p = op.order();
    let sys = op.companion(None);
    let solutions = (0..p)
        .map(|s| {
            let init = move |_t: f64| {
                let mut v = vec![0.0; p];
                v[s] = 1.0;
                v
            };
            sweep(&sys, region, section, &init, ts, cfg)
        })
        .collect();
    FundamentalSet {
        order: p,
        ts: ts.to_vec(),
        section: section.clone(),
        solutions,
    }
}

/// Sampled Wronskian field compared against its first-order prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WronskianReport {
    /// `(t, x, sampled, predicted)` rows.
    pub samples: Vec<(f64, f64, f64, f64)>,
    /// Largest relative deviation between sample and prediction (log-domain
    /// once the predicted exponent leaves the representable range).
    pub max_rel_dev: f64,
    /// Largest `|W(t, theta(t)) - 1|` over the anchor curve.
    pub anchor_dev: f64,
    /// Smallest `|W|` seen anywhere.
    pub min_abs: f64,
    /// Slices skipped because some member did not integrate to completion.
    pub skipped_slices: usize,
}

/// Sample the Wronskian on `grid.nx` points per slice and compare with
/// `W(t, theta) exp(-int_theta^x g_{p-1}/g_p)`.
pub fn wronskian_check(
    set: &FundamentalSet,
    op: &ScalarOperator,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> WronskianReport {
    let ratio_num = op.coeffs[op.order() - 1].compile();
    let ratio_den = op.leading().compile();
    let mut report = WronskianReport {
        samples: Vec::new(),
        max_rel_dev: 0.0,
        anchor_dev: 0.0,
        min_abs: f64::INFINITY,
        skipped_slices: 0,
    };
    for &t in &set.ts {
        let complete = set.solutions.iter().all(|sol| {
            sol.slice_at(t)
                .is_some_and(|s| s.status == SliceStatus::Complete)
        });
        let Some((lo, hi)) = set.covered(t) else {
            report.skipped_slices += 1;
            continue;
        };
        if !complete {
            report.skipped_slices += 1;
            continue;
        }
        let theta = set.section.eval(t);
        if let Some(w0) = set.wronskian(t, theta) {
            report.anchor_dev = report.anchor_dev.max((w0 - 1.0).abs());
        }
        let trace = |x: f64| -ratio_num.eval(t, x) / ratio_den.eval(t, x);
        for x in linspace(lo, hi, grid.nx.max(2)) {
            let Some(w) = set.wronskian(t, x) else { continue };
            let g = integral(&trace, theta, x, cfg.quad_tol);
            report.min_abs = report.min_abs.min(w.abs());
            let (predicted, dev) = if g.abs() > 700.0 {
                // exp would overflow/underflow; compare exponents instead.
                let dev = if w > 0.0 {
                    (w.ln() - g).abs() / g.abs()
                } else {
                    f64::INFINITY
                };
                (g, dev)
            } else {
                let p = g.exp();
                (p, (w - p).abs() / p.abs().max(1e-300))
            };
            report.max_rel_dev = report.max_rel_dev.max(dev);
            report.samples.push((t, x, w, predicted));
        }
    }
    report
}

/// Whether a set of solutions with the given Wronskian behavior is a
/// fundamental set on the classified region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FundamentalVerdict {
    Fundamental { explanation: String },
    /// Nonvanishing Wronskian, but the region lets expansion coefficients
    /// differ between slice intervals, so the set spans no global basis.
    NonvanishingOnly { explanation: String },
    NotFundamental { explanation: String },
}

/// Combine the region classification with the Wronskian evidence.
pub fn assess(cls: &Classification, report: &WronskianReport) -> FundamentalVerdict {
    if report.min_abs <= 0.0 || !report.min_abs.is_finite() {
        let at = report
            .samples
            .iter()
            .min_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
            .map(|&(t, x, ..)| format!(" near (t, x) = ({t:.6}, {x:.6})"))
            .unwrap_or_default();
        return FundamentalVerdict::NotFundamental {
            explanation: format!(
                "the Wronskian vanishes{at}, so the solutions are linearly dependent somewhere"
            ),
        };
    }
    if cls.x_simple {
        FundamentalVerdict::Fundamental {
            explanation: "the Wronskian never vanishes and every slice of the region is a \
                          single interval, so expansion coefficients are forced to be the same \
                          continuous functions across the whole region"
                .to_string(),
        }
    } else {
        FundamentalVerdict::NonvanishingOnly {
            explanation: "the Wronskian never vanishes, but some slice splits into several \
                          intervals; coefficients can be chosen freely on each piece of such a \
                          slice, so the family spans solutions without being a basis with \
                          parameter-continuous coefficients"
                .to_string(),
        }
    }
}

/// Expansion coefficients of solutions against a fundamental set, sampled on
/// the set's parameter values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Zeta {
    pub ts: Vec<f64>,
    /// One coefficient vector per parameter value.
    pub coeffs: Vec<Vec<f64>>,
}

impl Zeta {
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        let tol = 1e-12 * (1.0 + t.abs());
        let pos = self.ts.partition_point(|&s| s < t - tol);
        ((self.ts.get(pos)? - t).abs() <= tol).then(|| self.coeffs[pos].as_slice())
    }
}

/// Solve `Phi(t, theta) zeta(t) = u-state(t, theta)` slice by slice.  Returns
/// `None` rows for slices where the data is incomplete or the frame is
/// singular.
pub fn expand(set: &FundamentalSet, u: &ParamSolution) -> Zeta {
    let p = set.order;
    let mut ts = Vec::new();
    let mut coeffs = Vec::new();
    for &t in &set.ts {
        let theta = set.section.eval(t);
        let (Some(frame), Some(rhs)) = (
            (0..p)
                .map(|s| set.eval_state(s, t, theta))
                .collect::<Option<Vec<_>>>(),
            u.slice_at(t).and_then(|s| s.eval(theta)),
        ) else {
            continue;
        };
        let mat = DMatrix::from_fn(p, p, |i, j| frame[j][i]);
        let Some(sol) = mat.lu().solve(&nalgebra::DVector::from_vec(rhs)) else {
            continue;
        };
        ts.push(t);
        coeffs.push(sol.iter().copied().collect());
    }
    Zeta { ts, coeffs }
}

/// Evaluate the combination `sum_s zeta^s(t) phi^s(t, x)`.
pub fn combine(set: &FundamentalSet, zeta: &Zeta, t: f64, x: f64) -> Option<f64> {
    let z = zeta.at(t)?;
    let mut acc = 0.0;
    for (s, &zs) in z.iter().enumerate() {
        acc += zs * set.eval(s, t, x)?;
    }
    Some(acc)
}
