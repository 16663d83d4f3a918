//! Counterexample generators tied to non-x-simple geometry, with numeric
//! verification of their advertised growth laws.
//!
//! Each generator starts from a non-simplicity witness (or the punctured
//! square) and produces a concrete operator or right-hand side whose failure
//! mode is measurable:
//!
//! * [`gen_hom_counterexample`] — homogeneous operator whose Wronskian is
//!   forced to vanish on the obstructed line (`WronskianVanishing`);
//! * [`gen_inhom_counterexample`] — first-order equation whose cross-cut
//!   defect diverges, so no global solution exists (`NoGlobalSolution`);
//! * [`PuncturedSquare`] — the dyadic-puncture coefficient field whose
//!   equation admits only the zero solution (`OnlyZeroSolution`);
//! * [`gen_nonsolvable_rhs_first_order`] — a bump-train right-hand side that
//!   every slice solution must overshoot (`NonsolvableRhs`).
//!
//! Infinite constructions are truncated.  Every report carries the analytic
//! tail bound of what was dropped and states its conclusion as a truncated
//! certification, never as a proof of the untruncated claim.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{linspace, SolverConfig};
use crate::domain::{Interval, Rect, Region, Shape, Witness};
use crate::expr::{Expr, Func};
use crate::integrate::{cumulative_integral, integral, solve_slice};
use crate::operators::ScalarOperator;

/// Which failure mode a report certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathologyKind {
    WronskianVanishing,
    NoGlobalSolution,
    OnlyZeroSolution,
    NonsolvableRhs,
}

/// One measured quantity against its predicted value.
///
/// `within` is decided by the rule stated in the row label (relative bound,
/// absolute bound, threshold, or sign), so rows with different semantics can
/// share the table.  `rel_dev` is informational.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub label: String,
    /// Where the measurement was taken (approach distance or parameter).
    pub at: f64,
    pub value: f64,
    pub expected: f64,
    pub rel_dev: f64,
    pub within: bool,
}

/// Verification record of one generated counterexample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathologyReport {
    pub kind: PathologyKind,
    pub rows: Vec<MeasurementRow>,
    pub pass: bool,
    pub notes: Vec<String>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

fn row(label: &str, at: f64, value: f64, expected: f64, within: bool) -> MeasurementRow {
    let rel = (value - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    MeasurementRow {
        label: label.to_string(),
        at,
        value: sanitize(value),
        expected: sanitize(expected),
        rel_dev: sanitize(rel),
        within,
    }
}

fn span(lo: f64, hi: f64) -> Interval {
    Interval {
        lo,
        hi,
        lo_at_bbox: false,
        hi_at_bbox: false,
        lo_at_exclusion: false,
        hi_at_exclusion: false,
    }
}

/// `v` or `v - c`, skipping the subtraction when the offset is zero so that
/// generated expressions stay readable.
fn shifted(v: Expr, c: f64) -> Expr {
    if c == 0.0 {
        v
    } else {
        Expr::sub(v, Expr::num(c))
    }
}

/// `1 / ((x - x1)^2 + (t - t0)^2)`.
fn inverse_square_kernel(t0: f64, x1: f64) -> Expr {
    Expr::div(
        Expr::num(1.0),
        Expr::add(
            Expr::pow(shifted(Expr::X, x1), 2),
            Expr::pow(shifted(Expr::T, t0), 2),
        ),
    )
}

// ---------------------------------------------------------------------------
// Homogeneous counterexample: forced Wronskian decay.
// ---------------------------------------------------------------------------

/// Order-`p` operator with unit leading coefficient and
/// `g_{p-1} = -c / ((x - x1)^2 + (t - t0)^2)`, all other coefficients zero.
///
/// Along every slice the log-Wronskian drops by `c` times the kernel integral
/// between the witness edges, which diverges as the slice approaches the
/// obstructed line; a fundamental set would need a nonvanishing Wronskian
/// there, so none exists on any region containing the witness rectangle
/// together with points of the line beyond the gap.
pub fn gen_hom_counterexample(w: &Witness, p: usize, c: f64) -> ScalarOperator {
    assert!(p >= 1, "operator order must be positive");
    assert!(c > 0.0, "kernel strength must be positive");
    let kernel = inverse_square_kernel(w.t0, w.x1);
    let scaled = if c == 1.0 {
        kernel
    } else {
        Expr::mul(Expr::num(c), kernel)
    };
    let mut coeffs = vec![Expr::num(0.0); p + 1];
    coeffs[p] = Expr::num(1.0);
    coeffs[p - 1] = Expr::neg(scaled);
    ScalarOperator::new(coeffs).expect("p + 1 >= 2 coefficients")
}

/// Closed-form log-Wronskian drop across the witness span at approach
/// distance `d`: `-c/d * (atan(eps/d) + atan((gap + eps)/d))`.
pub fn predicted_log_decay(w: &Witness, c: f64, d: f64) -> f64 {
    let gamma = w.x2 - w.x1;
    -c / d * ((w.eps / d).atan() + ((gamma + w.eps) / d).atan())
}

/// Measures the Wronskian decay of a kernel operator over ten geometric
/// approach distances.
///
/// Per distance the quadrature of `g_{p-1}/g_p` across the witness span is
/// checked against the closed form; where the drop is moderate the same
/// number is cross-checked by integrating a left-anchored solution frame
/// (whose determinant grows like `exp(-G)`, which stays representable).  The
/// decay itself is certified in the log domain: the values must decrease
/// strictly and end below `log 1e-8`.
pub fn verify_wronskian_decay(
    op: &ScalarOperator,
    w: &Witness,
    c: f64,
    cfg: &SolverConfig,
) -> PathologyReport {
    let p = op.order();
    let lead = op.coeffs[p].compile();
    let next = op.coeffs[p - 1].compile();
    let xl = w.x1 - w.eps;
    let xr = w.x2 + w.eps;
    let ds: Vec<f64> = (0..10).map(|i| w.eps * 0.5f64.powi(i + 1)).collect();

    let mut rows = Vec::new();
    let mut gs = Vec::with_capacity(ds.len());
    for &d in &ds {
        let t = w.approach_t(d);
        let g = integral(&|x| next.eval(t, x) / lead.eval(t, x), xl, xr, cfg.quad_tol);
        let pred = predicted_log_decay(w, c, d);
        rows.push(row(
            "log-Wronskian drop across the gap: quadrature vs closed form (rel 1e-6)",
            d,
            g,
            pred,
            (g - pred).abs() <= 1e-6 * pred.abs(),
        ));
        gs.push(g);
    }

    let worst_step = gs
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(row(
        "largest consecutive increment of log |W| (must be negative)",
        *ds.last().unwrap(),
        worst_step,
        0.0,
        worst_step < 0.0,
    ));
    let floor = 1e-8f64.ln();
    rows.push(row(
        "log |W| at the left edge at closest approach (must lie below log 1e-8)",
        *ds.last().unwrap(),
        *gs.last().unwrap(),
        floor,
        *gs.last().unwrap() <= floor,
    ));

    // Runge-Kutta cross-check on the moderate samples.  A frame anchored at
    // the left edge grows like exp(-G) toward the right edge, so the
    // comparison stays well inside the blow-up bound for G >= -25.
    let sys = op.companion(None).compile();
    let iv = span(xl, xr);
    for (i, &d) in ds.iter().enumerate() {
        if gs[i] < -25.0 {
            continue;
        }
        let t = w.approach_t(d);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
        for s in 0..p {
            let mut init = vec![0.0; p];
            init[s] = 1.0;
            let sol = solve_slice(&sys, t, &iv, xl, &init, cfg);
            match sol.eval(xr) {
                Some(v) => cols.push(v),
                None => break,
            }
        }
        if cols.len() < p {
            rows.push(row(
                "slice integration of the solution frame failed",
                d,
                f64::NAN,
                gs[i],
                false,
            ));
            continue;
        }
        let det = DMatrix::from_fn(p, p, |r, s| cols[s][r]).determinant();
        let g_rk = if det > 0.0 { -det.ln() } else { f64::NAN };
        rows.push(row(
            "left-anchored frame growth vs quadrature (log, rel 1e-5)",
            d,
            g_rk,
            gs[i],
            (g_rk - gs[i]).abs() <= 1e-5 * gs[i].abs(),
        ));
    }

    let pass = rows.iter().all(|r| r.within);
    PathologyReport {
        kind: PathologyKind::WronskianVanishing,
        rows,
        pass,
        notes: vec![
            "Certified at the level of sampled decay: the Wronskian of any solution tuple \
             normalized at the far edge collapses below every positive bound as the slice \
             approaches the obstructed line, so no fundamental set exists across the gap."
                .to_string(),
        ],
    }
}

// ---------------------------------------------------------------------------
// Inhomogeneous counterexample: diverging cross-cut defect.
// ---------------------------------------------------------------------------

/// The pure-transport instance `u_x = 1 / ((x - x1)^2 + (t - t0)^2)`.
///
/// Returns the operator (coefficients `0, 1`) and the right-hand side.  Any
/// solution must climb by the cross-cut defect `Delta(t)` between the witness
/// edges, and `Delta` diverges at the obstructed line while continuity beyond
/// the gap demands a bounded climb.
pub fn gen_inhom_counterexample(w: &Witness) -> (ScalarOperator, Expr) {
    let op = ScalarOperator::new(vec![Expr::num(0.0), Expr::num(1.0)]).expect("two coefficients");
    (op, inverse_square_kernel(w.t0, w.x1))
}

/// Measures `d * Delta(d)` against the closed form
/// `atan(eps/d) + atan((gap + eps)/d)` and its limit `pi`.
pub fn verify_defect_growth(
    op: &ScalarOperator,
    f: &Expr,
    w: &Witness,
    cfg: &SolverConfig,
) -> PathologyReport {
    assert_eq!(op.order(), 1, "the defect argument is first-order");
    let h1 = op.coeffs[1].compile();
    let fc = f.compile();
    let xl = w.x1 - w.eps;
    let xr = w.x2 + w.eps;
    let gamma = w.x2 - w.x1;

    let mut rows = Vec::new();
    let mut last_scaled = f64::NAN;
    for &d in &[1e-1, 1e-2, 1e-3] {
        let t = w.approach_t(d);
        let defect = integral(&|x| fc.eval(t, x) / h1.eval(t, x), xl, xr, cfg.quad_tol);
        let expected = (w.eps / d).atan() + ((gamma + w.eps) / d).atan();
        last_scaled = d * defect;
        rows.push(row(
            "scaled cross-cut defect d*Delta(d) vs closed form (abs 1e-3)",
            d,
            last_scaled,
            expected,
            (last_scaled - expected).abs() <= 1e-3,
        ));
    }
    rows.push(row(
        "d*Delta(d) approaches pi (rel 2e-3)",
        1e-3,
        last_scaled,
        PI,
        (last_scaled - PI).abs() <= 2e-3 * PI,
    ));

    let pass = rows.iter().all(|r| r.within);
    PathologyReport {
        kind: PathologyKind::NoGlobalSolution,
        rows,
        pass,
        notes: vec![
            "Every antiderivative of f/h1 must jump by Delta(t) across the witness span; \
             the jump diverges at the obstructed line, while a solution continuous past the \
             gap endpoints would keep it bounded.  Hence no global solution exists."
                .to_string(),
        ],
    }
}

// ---------------------------------------------------------------------------
// Punctured square: only the zero solution.
// ---------------------------------------------------------------------------

/// One puncture of the dyadic family: level `k`, index `l`, located at
/// `t = l / 2^k`, `x = 1 - 1/2^k`, with kernel weight `c / 4^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Puncture {
    pub level: u32,
    pub index: u32,
    pub t: f64,
    pub x: f64,
    pub weight: f64,
}

/// The unit square punctured at every `(l/2^k, 1 - 1/2^k)`, together with the
/// truncated coefficient field
/// `H = sum_{k<=k_max} sum_l (c/4^k) / ((x - 1 + 2^-k)^2 + (t - l 2^-k)^2)`.
///
/// The equation `u_x = H u` has only the zero solution on the full punctured
/// square; the truncation certifies this through the growth law of crossing
/// integrals (see [`verify_forced_vanishing`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PuncturedSquare {
    pub k_max: u32,
    pub c: f64,
}

impl PuncturedSquare {
    pub fn new(k_max: u32, c: f64) -> PuncturedSquare {
        assert!((1..=12).contains(&k_max), "truncation level out of range");
        assert!(c > 0.0, "kernel strength must be positive");
        PuncturedSquare { k_max, c }
    }

    pub fn punctures(&self) -> Vec<Puncture> {
        let mut out = Vec::new();
        for k in 1..=self.k_max {
            let x = 1.0 - 0.5f64.powi(k as i32);
            let weight = self.c * 0.25f64.powi(k as i32);
            for l in 1..(1u32 << k) {
                out.push(Puncture {
                    level: k,
                    index: l,
                    t: l as f64 * 0.5f64.powi(k as i32),
                    x,
                    weight,
                });
            }
        }
        out
    }

    /// The field as an expression tree (one kernel term per puncture).
    pub fn field(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for p in self.punctures() {
            let term = Expr::mul(Expr::num(p.weight), inverse_square_kernel(p.t, p.x));
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::add(a, term),
            });
        }
        acc.expect("at least one puncture")
    }

    /// Direct summation; infinite at a puncture (the non-finite flag).
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in 1..=self.k_max {
            let xk = 1.0 - 0.5f64.powi(k as i32);
            let wk = self.c * 0.25f64.powi(k as i32);
            let dx2 = (x - xk) * (x - xk);
            let step = 0.5f64.powi(k as i32);
            for l in 1..(1u32 << k) {
                let dt = t - l as f64 * step;
                acc += wk / (dx2 + dt * dt);
            }
        }
        acc
    }

    /// `u_x = H u` in coefficient form.
    pub fn operator(&self) -> ScalarOperator {
        ScalarOperator::new(vec![Expr::neg(self.field()), Expr::num(1.0)])
            .expect("two coefficients")
    }

    /// The punctured open unit square as a region.
    pub fn region(&self) -> Region {
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        let mut region = Region::new(unit, vec![Shape::Rect(unit)]);
        region.exclude_points = self.punctures().iter().map(|p| (p.t, p.x)).collect();
        region
    }

    /// Dominated tail of the dropped levels on balls at distance `delta`
    /// from every puncture: `c/delta^2 * (2^-K - 4^-K / 3)`.
    pub fn tail_bound(&self, delta: f64) -> f64 {
        let k = self.k_max as i32;
        self.c / (delta * delta) * (0.5f64.powi(k) - 0.25f64.powi(k) / 3.0)
    }
}

/// Exact window integral of one kernel term at parameter offset `dt`:
/// `int_{x0}^{x1} a / ((x - qx)^2 + dt^2) dx`.
fn window_term(weight: f64, qx: f64, dt: f64, x0: f64, x1: f64) -> f64 {
    let s = dt.abs().max(f64::MIN_POSITIVE);
    weight / s * (((x1 - qx) / s).atan() - ((x0 - qx) / s).atan())
}

/// Measures crossing integrals of the truncated field against the Cauchy law
/// `pi * a / d` per puncture and approach distance.
///
/// A (puncture, distance) pair is held to the law only when the window
/// captures at least 93% of the full-line integral and the other kernel
/// terms contribute at most 5% of it; remaining pairs are validated against
/// the truncated closed form instead and labeled window-limited.  A line
/// crossing no puncture is reported as unconstrained.
pub fn verify_forced_vanishing(sq: &PuncturedSquare, cfg: &SolverConfig) -> PathologyReport {
    let punctures = sq.punctures();
    let ds = [1e-2, 1e-3, 5e-4, 1e-4];

    let groups: Vec<Vec<MeasurementRow>> = punctures
        .par_iter()
        .map(|p| {
            let mut rows = Vec::new();
            let half = 0.5f64.powi(p.level as i32 + 2);
            let (x0, x1) = (p.x - half, p.x + half);
            let mut lawful: [Option<f64>; 4] = [None; 4];
            for (i, &d) in ds.iter().enumerate() {
                // Approach from inside the square.
                let side = if p.t - d > 0.0 { -1.0 } else { 1.0 };
                let tp = p.t + side * d;
                let law = PI * p.weight / d;
                let own = window_term(p.weight, p.x, d, x0, x1);
                let others: f64 = punctures
                    .iter()
                    .filter(|q| !(q.level == p.level && q.index == p.index))
                    .map(|q| window_term(q.weight, q.x, tp - q.t, x0, x1))
                    .sum();
                let qualified = own >= 0.93 * law && others <= 0.05 * law;
                let expected = if qualified { law } else { own + others };
                let tol = cfg.quad_tol.max(1e-8 * (1.0 + expected.abs()));
                let measured = integral(&|x| sq.eval(tp, x), x0, x1, tol);
                if qualified {
                    rows.push(row(
                        &format!(
                            "crossing integral at level {} vs Cauchy law pi*a/d (rel 15%)",
                            p.level
                        ),
                        d,
                        measured,
                        law,
                        (measured - law).abs() <= 0.15 * law,
                    ));
                    lawful[i] = Some(measured);
                } else {
                    rows.push(row(
                        &format!(
                            "crossing integral at level {} vs truncated closed form, \
                             window-limited (rel 1%)",
                            p.level
                        ),
                        d,
                        measured,
                        expected,
                        (measured - expected).abs() <= 1e-2 * expected.abs(),
                    ));
                }
            }
            if let (Some(full), Some(halved)) = (lawful[1], lawful[2]) {
                let ratio = halved / full;
                rows.push(row(
                    &format!(
                        "halving the approach distance doubles the crossing integral \
                         (level {}, rel 15%)",
                        p.level
                    ),
                    ds[2],
                    ratio,
                    2.0,
                    (ratio - 2.0).abs() <= 0.3,
                ));
            }
            rows
        })
        .collect();
    let mut rows: Vec<MeasurementRow> = groups.into_iter().flatten().collect();

    // A parameter line through no puncture: growth stays bounded.
    let t_free = 0.3;
    let expected: f64 = punctures
        .iter()
        .map(|q| window_term(q.weight, q.x, t_free - q.t, 0.0, 1.0))
        .sum();
    let tol = cfg.quad_tol.max(1e-8 * (1.0 + expected));
    let measured = integral(&|x| sq.eval(t_free, x), 0.0, 1.0, tol);
    rows.push(row(
        "line crossing no puncture: bounded growth, unconstrained (rel 1%)",
        t_free,
        measured,
        expected,
        (measured - expected).abs() <= 1e-2 * expected,
    ));

    let pass = rows.iter().all(|r| r.within);
    PathologyReport {
        kind: PathologyKind::OnlyZeroSolution,
        rows,
        pass,
        notes: vec![
            format!(
                "Coefficient series truncated at level {}; the dropped tail is at most \
                 {:.3e} on balls at distance 0.1 from every puncture (truncated \
                 certification).",
                sq.k_max,
                sq.tail_bound(0.1)
            ),
            "Crossing integrals follow the Cauchy law pi*a/d, so the slicewise transport \
             factor degenerates at every puncture line: a solution continuous on one side \
             must vanish on the other.  Drilling through all levels pins every solution \
             to zero; lines crossing no puncture are unconstrained."
                .to_string(),
        ],
    }
}

// ---------------------------------------------------------------------------
// Right-hand sides no slice solution survives.
// ---------------------------------------------------------------------------

/// Mass of `(max(0, 1 - y^2))^3` over `y in [-1, 1]`.
const BUMP_MASS: f64 = 32.0 / 35.0;

/// `max(z, 0)` as `(z + |z|) / 2`.
fn clamp_expr(z: Expr) -> Expr {
    Expr::div(
        Expr::add(z.clone(), Expr::fun(Func::Abs, z)),
        Expr::num(2.0),
    )
}

/// Clip to `[0, 1]`.
fn cap_expr(z: Expr) -> Expr {
    Expr::sub(clamp_expr(z.clone()), clamp_expr(Expr::sub(z, Expr::num(1.0))))
}

/// Piecewise-linear hat in `t`: 0 outside `(a, b)`, 1 at `m`.
fn hat_expr(a: f64, m: f64, b: f64) -> Expr {
    let up = cap_expr(Expr::div(
        shifted(Expr::T, a),
        Expr::num(m - a),
    ));
    let down = cap_expr(Expr::div(
        Expr::sub(Expr::num(b), Expr::T),
        Expr::num(b - m),
    ));
    Expr::mul(up, down)
}

/// C^2 bump in `x` with support `[center - hw, center + hw]` and total mass
/// `amplitude * hw * 32/35`.
fn bump_expr(center: f64, hw: f64, amplitude: f64) -> Expr {
    let y = Expr::div(shifted(Expr::X, center), Expr::num(hw));
    let z = Expr::sub(Expr::num(1.0), Expr::pow(y, 2));
    Expr::mul(Expr::num(amplitude), Expr::pow(clamp_expr(z), 3))
}

/// One bump of the constructed right-hand side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhsTerm {
    pub k: u32,
    /// Parameter where the bump peaks: `t0 + dir * eps / k`.
    pub t_star: f64,
    /// Half-width of the support ball around the gap endpoint.
    pub eps_k: f64,
    /// Sampled upper bound for `|h1| * phi` on the support ball.
    pub b_k: f64,
    /// Value of the normalized homogeneous solution at the far edge.
    pub phi_far: f64,
    pub mass: f64,
    pub amplitude: f64,
}

/// Finite bump-train right-hand side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonsolvableRhs {
    pub f: Expr,
    pub terms: Vec<RhsTerm>,
    pub k_max: u32,
}

/// Builds a right-hand side for a first-order operator `h1 d_x + h0` such
/// that every slice solution with boundary data bounded by `C` exceeds `k`
/// at the far witness edge for all `k > C`.
///
/// Bump `k` sits on the slice `t*_k` approaching the obstructed line, is
/// supported in the half-`eps` ball around the gap endpoint, and carries mass
/// `1.05 * k * b_k * (1 + 1/phi(t*_k, far edge))`, where `phi` is the
/// homogeneous solution normalized to 1 at the near edge and `b_k`
/// overestimates `|h1| * phi` on the support (overestimating is safe: the
/// guaranteed climb is `mass / b_k`).  Hats in `t` keep neighboring bumps
/// from interfering at the sample parameters.
pub fn gen_nonsolvable_rhs_first_order(
    op: &ScalarOperator,
    w: &Witness,
    k_max: u32,
    cfg: &SolverConfig,
) -> NonsolvableRhs {
    assert_eq!(op.order(), 1, "the construction is first-order");
    assert!(k_max >= 1, "at least one bump");
    let h0 = op.coeffs[0].compile();
    let h1 = op.coeffs[1].compile();
    let xl = w.x1 - w.eps;
    let xr = w.x2 + w.eps;
    let dir = w.direction();
    let delta1 = 0.5 * w.eps;
    let t_star = |k: u32| -> f64 {
        if k == 0 {
            w.t0 + dir * (w.eps + delta1)
        } else {
            w.t0 + dir * w.eps / k as f64
        }
    };
    let eps_k = 0.5 * w.eps;

    let mut terms = Vec::with_capacity(k_max as usize);
    let mut sum: Option<Expr> = None;
    for k in 1..=k_max {
        let tk = t_star(k);
        let ratio = |x: f64| h0.eval(tk, x) / h1.eval(tk, x);

        // phi on the support ball via one cumulative quadrature from the
        // near edge, then the sampled bound for |h1| * phi.
        let xs = linspace(w.x1 - eps_k, w.x1 + eps_k, 401);
        let head = integral(&ratio, xl, xs[0], cfg.quad_tol);
        let cum = cumulative_integral(&ratio, &xs, cfg.quad_tol);
        let mut peak = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let phi = (-(head + cum[i])).exp();
            peak = peak.max(h1.eval(tk, x).abs() * phi);
        }
        let b_k = 1.05 * peak;
        let phi_far = (-integral(&ratio, xl, xr, cfg.quad_tol)).exp();
        let mass = 1.05 * k as f64 * b_k * (1.0 + 1.0 / phi_far);
        let amplitude = mass / (eps_k * BUMP_MASS);

        let mut knots = [t_star(k - 1), tk, t_star(k + 1)];
        knots.sort_by(f64::total_cmp);
        let term = Expr::mul(
            bump_expr(w.x1, eps_k, amplitude),
            hat_expr(knots[0], knots[1], knots[2]),
        );
        sum = Some(match sum {
            None => term,
            Some(acc) => Expr::add(acc, term),
        });
        terms.push(RhsTerm {
            k,
            t_star: tk,
            eps_k,
            b_k,
            phi_far,
            mass,
            amplitude,
        });
    }

    NonsolvableRhs {
        f: sum.expect("k_max >= 1"),
        terms,
        k_max,
    }
}

/// Integrates the forced equation from zero data at the near edge along each
/// bump slice and checks that the far-edge value exceeds its threshold `k`;
/// also re-checks the mass inequality each bump was built to satisfy.
pub fn verify_nonsolvable_rhs(
    op: &ScalarOperator,
    rhs: &NonsolvableRhs,
    w: &Witness,
    cfg: &SolverConfig,
) -> PathologyReport {
    assert_eq!(op.order(), 1, "the construction is first-order");
    let sys = op.companion(Some(&rhs.f)).compile();
    let xl = w.x1 - w.eps;
    let xr = w.x2 + w.eps;
    let iv = span(xl, xr);

    let mut rows = Vec::new();
    for term in &rhs.terms {
        let sol = solve_slice(&sys, term.t_star, &iv, xl, &[0.0], cfg);
        let value = sol.eval_first(xr).unwrap_or(f64::NAN);
        rows.push(row(
            "far-edge value from zero boundary data (must exceed k)",
            term.t_star,
            value.abs(),
            term.k as f64,
            value.abs() > term.k as f64,
        ));
        let required = term.k as f64 * term.b_k * (1.0 + 1.0 / term.phi_far);
        rows.push(row(
            "bump mass dominates k * b_k * (1 + 1/phi)",
            term.t_star,
            term.mass,
            required,
            term.mass >= required,
        ));
    }

    let pass = rows.iter().all(|r| r.within);
    PathologyReport {
        kind: PathologyKind::NonsolvableRhs,
        rows,
        pass,
        notes: vec![
            "Any solution bounded by C at the near edge lands beyond k at the far edge for \
             every k > C; zero boundary data realizes the bound, so the measured overshoot \
             certifies that no solution extends past the obstructed line."
                .to_string(),
            format!(
                "Finite bump train up to k = {}; the diverging pattern is certified up to \
                 that index (truncated certification).",
                rhs.k_max
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin_witness() -> Witness {
        Witness {
            t0: 0.0,
            eps: 1.0,
            x1: 0.0,
            x2: 0.0,
            reflected_t: false,
            upsilon: vec![(0.0, 0.0)],
        }
    }

    #[test]
    fn hom_generator_reproduces_the_inverse_square_coefficients() {
        let w = origin_witness();
        let op = gen_hom_counterexample(&w, 1, 1.0);
        assert_eq!(op.order(), 1);
        // 3^2 + 4^2 = 25 keeps the arithmetic exact.
        assert_eq!(op.coeffs[0].eval(4.0, 3.0), -0.04);
        assert_eq!(op.coeffs[1].eval(4.0, 3.0), 1.0);

        let op2 = gen_hom_counterexample(&w, 2, 1.0);
        assert_eq!(op2.order(), 2);
        assert_eq!(op2.coeffs[0].eval(4.0, 3.0), 0.0);
        assert_eq!(op2.coeffs[1].eval(4.0, 3.0), -0.04);
        assert_eq!(op2.coeffs[2].eval(4.0, 3.0), 1.0);
    }

    #[test]
    fn log_decay_quadrature_matches_the_closed_form() {
        let w = origin_witness();
        let op = gen_hom_counterexample(&w, 1, 1.0);
        let lead = op.coeffs[1].compile();
        let next = op.coeffs[0].compile();
        let d = 1e-3;
        let t = w.approach_t(d);
        let g = integral(&|x| next.eval(t, x) / lead.eval(t, x), -1.0, 1.0, 1e-10);
        let pred = predicted_log_decay(&w, 1.0, d);
        assert!((g - pred).abs() <= 1e-6 * pred.abs(), "g = {g}, pred = {pred}");
        assert!(g <= -3000.0);
    }

    #[test]
    fn wronskian_decay_certificate_passes() {
        let w = origin_witness();
        let cfg = SolverConfig::default();
        for p in [1, 2] {
            let op = gen_hom_counterexample(&w, p, 1.0);
            let report = verify_wronskian_decay(&op, &w, 1.0, &cfg);
            assert_eq!(report.kind, PathologyKind::WronskianVanishing);
            assert!(report.pass, "order {p}: {:#?}", report.rows);
            let frame_rows = report
                .rows
                .iter()
                .filter(|r| r.label.starts_with("left-anchored frame"))
                .count();
            assert!(frame_rows >= 3, "expected cross-checks on moderate samples");
        }
    }

    #[test]
    fn defect_growth_follows_the_arctan_law() {
        let w = origin_witness();
        let (op, f) = gen_inhom_counterexample(&w);
        let report = verify_defect_growth(&op, &f, &w, &SolverConfig::default());
        assert_eq!(report.kind, PathologyKind::NoGlobalSolution);
        assert!(report.pass, "{:#?}", report.rows);
        let tight = report.rows.iter().find(|r| r.at == 1e-3).unwrap();
        assert!((tight.value - 2.0 * 1e3f64.atan()).abs() <= 1e-3);
        let limit = report.rows.last().unwrap();
        assert!((limit.value - PI).abs() <= 2e-3 * PI);
    }

    #[test]
    fn inhom_generator_is_the_pure_transport_instance() {
        let (op, f) = gen_inhom_counterexample(&origin_witness());
        assert_eq!(op.coeffs[0].eval(0.7, -0.3), 0.0);
        assert_eq!(op.coeffs[1].eval(0.7, -0.3), 1.0);
        assert_eq!(f.eval(4.0, 3.0), 0.04);
    }

    #[test]
    fn first_level_field_is_a_single_kernel() {
        let sq = PuncturedSquare::new(1, 1.0);
        let punctures = sq.punctures();
        assert_eq!(punctures.len(), 1);
        let p = punctures[0];
        assert_eq!((p.level, p.index, p.t, p.x, p.weight), (1, 1, 0.5, 0.5, 0.25));

        let direct = sq.eval(0.3, 0.2);
        let closed = 0.25 / ((0.2f64 - 0.5).powi(2) + (0.3f64 - 0.5).powi(2));
        assert!((direct - closed).abs() <= 1e-15 * closed);
        assert!((direct - 25.0 / 13.0).abs() <= 1e-12);
        assert_eq!(sq.field().eval(0.3, 0.2), direct);
        assert!(!sq.eval(0.5, 0.5).is_finite());

        let region = sq.region();
        assert!(!region.contains(0.5, 0.5));
        assert!(region.contains(0.5, 0.50001));

        assert_eq!(PuncturedSquare::new(3, 1.0).punctures().len(), 11);
    }

    #[test]
    fn tail_bound_matches_the_geometric_sum() {
        let sq = PuncturedSquare::new(6, 1.0);
        let bound = sq.tail_bound(0.1);
        let series: f64 = (7..200)
            .map(|k| (0.5f64.powi(k) - 0.25f64.powi(k)) / 0.01)
            .sum();
        assert!((bound - series).abs() <= 1e-10 * series);
        assert!(bound <= 0.0157 / 0.01);
        assert!(bound >= 1.55);
    }

    #[test]
    fn partial_sums_increase_and_respect_the_tail() {
        // (0.3, 0.2) is at distance >= 0.55 from every puncture of level >= 2.
        let (t, x) = (0.3, 0.2);
        let mut prev = PuncturedSquare::new(1, 1.0).eval(t, x);
        for k in 2..=7 {
            let next = PuncturedSquare::new(k, 1.0).eval(t, x);
            assert!(next > prev);
            let dominated = PuncturedSquare::new(k - 1, 1.0).tail_bound(0.55);
            assert!(next - prev <= dominated);
            prev = next;
        }
    }

    #[test]
    fn crossing_integrals_follow_the_cauchy_law() {
        let sq = PuncturedSquare::new(1, 1.0);
        let report = verify_forced_vanishing(&sq, &SolverConfig::default());
        assert_eq!(report.kind, PathologyKind::OnlyZeroSolution);
        assert!(report.pass, "{:#?}", report.rows);
        for d in [1e-2, 1e-3] {
            let row = report
                .rows
                .iter()
                .find(|r| r.at == d && r.label.contains("Cauchy law"))
                .unwrap();
            let law = PI * 0.25 / d;
            assert!(
                (row.value - law).abs() <= 0.10 * law,
                "d = {d}: {} vs {law}",
                row.value
            );
        }
        let halving = report
            .rows
            .iter()
            .find(|r| r.label.contains("halving"))
            .unwrap();
        assert!((halving.value - 2.0).abs() <= 0.3);
    }

    #[test]
    fn line_between_punctures_is_unconstrained() {
        let sq = PuncturedSquare::new(3, 1.0);
        let report = verify_forced_vanishing(&sq, &SolverConfig::default());
        let free = report
            .rows
            .iter()
            .find(|r| r.label.contains("unconstrained"))
            .unwrap();
        assert!(free.within, "{free:#?}");
        assert!(free.value < 50.0, "growth should stay modest: {}", free.value);
    }

    #[test]
    fn transport_rhs_mass_doubles_k() {
        let w = origin_witness();
        let op = ScalarOperator::new(vec![Expr::num(0.0), Expr::num(1.0)]).unwrap();
        let rhs = gen_nonsolvable_rhs_first_order(&op, &w, 6, &SolverConfig::default());
        assert_eq!(rhs.terms.len(), 6);
        for term in &rhs.terms {
            assert_eq!(term.phi_far, 1.0);
            assert_eq!(term.b_k, 1.05);
            assert!(term.mass >= 2.0 * term.k as f64);
            assert!(term.mass <= 2.5 * term.k as f64);
        }
        // At its own sample parameter each bump peaks alone.
        let t3 = rhs.terms[2].t_star;
        let a3 = rhs.terms[2].amplitude;
        let peak = rhs.f.eval(t3, 0.0);
        assert!((peak - a3).abs() <= 1e-12 * a3, "{peak} vs {a3}");
        assert_eq!(rhs.f.eval(t3, 0.5), 0.0);
        assert_eq!(rhs.f.eval(t3, -0.5), 0.0);
    }

    #[test]
    fn forced_blowup_exceeds_every_threshold() {
        let w = origin_witness();
        let op = ScalarOperator::new(vec![Expr::num(0.0), Expr::num(1.0)]).unwrap();
        let cfg = SolverConfig::default();
        let rhs = gen_nonsolvable_rhs_first_order(&op, &w, 6, &cfg);
        let report = verify_nonsolvable_rhs(&op, &rhs, &w, &cfg);
        assert_eq!(report.kind, PathologyKind::NonsolvableRhs);
        assert!(report.pass, "{:#?}", report.rows);
        let row5 = report
            .rows
            .iter()
            .find(|r| r.label.starts_with("far-edge") && r.expected == 5.0)
            .unwrap();
        assert!(row5.value > 5.0);
        // Pure transport: the far-edge value is exactly the bump mass.
        assert!((row5.value - rhs.terms[4].mass).abs() <= 1e-6 * rhs.terms[4].mass);
    }

    #[test]
    fn varying_coefficient_rhs_still_blows_up() {
        let w = origin_witness();
        let op = ScalarOperator::new(vec![
            Expr::T,
            Expr::add(Expr::num(2.0), Expr::fun(Func::Sin, Expr::X)),
        ])
        .unwrap();
        let cfg = SolverConfig::default();
        let rhs = gen_nonsolvable_rhs_first_order(&op, &w, 5, &cfg);
        let report = verify_nonsolvable_rhs(&op, &rhs, &w, &cfg);
        assert!(report.pass, "{:#?}", report.rows);
    }

    #[test]
    fn report_round_trips_through_json() {
        let w = origin_witness();
        let (op, f) = gen_inhom_counterexample(&w);
        let report = verify_defect_growth(&op, &f, &w, &SolverConfig::default());
        let text = serde_json::to_string(&report).unwrap();
        let back: PathologyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.kind, report.kind);
        assert_eq!(back.pass, report.pass);
        assert_eq!(back.rows.len(), report.rows.len());
        assert_eq!(back.rows[0].value, report.rows[0].value);
    }
}
