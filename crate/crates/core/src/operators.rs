//! Scalar linear differential operators in the space variable and their
//! first-order companion systems.
//!
//! An operator is a coefficient list: `P u = sum_i coeffs[i] * d^i u/dx^i`,
//! every coefficient a function of `(t, x)`.  The parameter `t` never sees a
//! derivative; each slice of the region carries an ordinary ODE in `x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Region;
use crate::expr::{CompiledExpr, Expr};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("an operator needs order >= 1, i.e. at least two coefficients (got {0})")]
    TooFewCoefficients(usize),
    #[error(
        "leading coefficient vanishes near (t, x) = ({t:.9}, {x:.9}): |value| = {value:.3e}"
    )]
    LeadingCoefficientVanishes { t: f64, x: f64, value: f64 },
    #[error("system matrix is not square: row {row} has {len} entries for dimension {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
}

/// `P u = sum_i coeffs[i] * d^i u/dx^i`; `coeffs` is indexed by derivative
/// order, so the last entry is the leading coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarOperator {
    pub coeffs: Vec<Expr>,
}

impl ScalarOperator {
    pub fn new(coeffs: Vec<Expr>) -> Result<ScalarOperator, OperatorError> {
        if coeffs.len() < 2 {
            return Err(OperatorError::TooFewCoefficients(coeffs.len()));
        }
        Ok(ScalarOperator { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> &Expr {
        &self.coeffs[self.order()]
    }

    /// Check that the leading coefficient stays away from zero on the region.
    ///
    /// Dense sampling along every scanned slice; a sign change between
    /// neighboring samples is sharpened by bisection so the reported point
    /// sits next to an actual root rather than somewhere in between.
    pub fn validate_leading(&self, region: &Region) -> Result<(), OperatorError> {
        let h = region.resolution();
        let lead = self.leading().compile();
        for t in region.t_scan_values(h) {
            for iv in &region.slice(t).intervals {
                let n = ((iv.width() / h).ceil() as usize).clamp(8, 4000);
                let mut prev: Option<(f64, f64)> = None;
                for k in 0..=n {
                    let x = iv.lo + iv.width() * k as f64 / n as f64;
                    let v = lead.eval(t, x);
                    if v.abs() < 1e-12 || v.is_nan() {
                        return Err(OperatorError::LeadingCoefficientVanishes { t, x, value: v.abs() });
                    }
                    if let Some((px, pv)) = prev {
                        if pv.signum() != v.signum() {
                            let (mut a, mut b) = (px, x);
                            let mut va = pv;
                            for _ in 0..60 {
                                let m = 0.5 * (a + b);
                                let vm = lead.eval(t, m);
                                if vm.signum() == va.signum() {
                                    a = m;
                                    va = vm;
                                } else {
                                    b = m;
                                }
                            }
                            let value = lead.eval(t, a).abs().min(lead.eval(t, b).abs());
                            return Err(OperatorError::LeadingCoefficientVanishes { t, x: a, value });
                        }
                    }
                    prev = Some((x, v));
                }
            }
        }
        Ok(())
    }

    /// First-order companion system for `P u = f` in `v = (u, u', ..)`:
    /// superdiagonal ones, last row `-coeffs[j] / leading`, forcing
    /// `(0, .., f / leading)`.
    pub fn companion(&self, f: Option<&Expr>) -> LinearSystem {
        let p = self.order();
        let lead = self.leading();
        let mut a = vec![vec![Expr::num(0.0); p]; p];
        for (i, row) in a.iter_mut().enumerate().take(p - 1) {
            row[i + 1] = Expr::num(1.0);
        }
        for j in 0..p {
            a[p - 1][j] = Expr::neg(Expr::div(self.coeffs[j].clone(), lead.clone()));
        }
        let mut forcing = vec![Expr::num(0.0); p];
        if let Some(f) = f {
            forcing[p - 1] = Expr::div(f.clone(), lead.clone());
        }
        LinearSystem::new(a, forcing).expect("companion construction is square by construction")
    }
}

/// First-order linear system `v' = A(t, x) v + F(t, x)` (derivative in `x`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub a: Vec<Vec<Expr>>,
    pub f: Vec<Expr>,
}

impl LinearSystem {
    pub fn new(a: Vec<Vec<Expr>>, f: Vec<Expr>) -> Result<LinearSystem, OperatorError> {
        let dim = f.len();
        if a.len() != dim {
            return Err(OperatorError::NotSquare { row: 0, len: a.len(), dim });
        }
        for (row, r) in a.iter().enumerate() {
            if r.len() != dim {
                return Err(OperatorError::NotSquare { row, len: r.len(), dim });
            }
        }
        Ok(LinearSystem { a, f })
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// Homogeneous copy: same matrix, zero forcing.
    pub fn homogeneous(&self) -> LinearSystem {
        LinearSystem {
            a: self.a.clone(),
            f: vec![Expr::num(0.0); self.dim()],
        }
    }

    pub fn compile(&self) -> CompiledSystem {
        CompiledSystem {
            dim: self.dim(),
            a: self
                .a
                .iter()
                .flat_map(|row| row.iter().map(Expr::compile))
                .collect(),
            f: self.f.iter().map(Expr::compile).collect(),
        }
    }
}

/// Stack-program form of a [`LinearSystem`] for integrator inner loops.
pub struct CompiledSystem {
    dim: usize,
    a: Vec<CompiledExpr>,
    f: Vec<CompiledExpr>,
}

impl CompiledSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = A(t, x) v + F(t, x)`.
    pub fn eval_into(&self, t: f64, x: f64, v: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let mut acc = self.f[i].eval(t, x);
            for (j, vj) in v.iter().enumerate() {
                acc += self.a[i * self.dim + j].eval(t, x) * vj;
            }
            out[i] = acc;
        }
    }

    /// Trace of `A` at `(t, x)`.
    pub fn trace(&self, t: f64, x: f64) -> f64 {
        (0..self.dim).map(|i| self.a[i * self.dim + i].eval(t, x)).sum()
    }
}

/// Central difference weights for the `m`-th derivative: `[1, -2, 1]`
/// convolved with itself `m/2` times, once more with `[-1/2, 0, 1/2]` when
/// `m` is odd.  Applied as `sum_k w[k] u(x + (k - c) dx) / dx^m` with `c`
/// the center index.
fn diff_weights(m: usize) -> Vec<f64> {
    fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] += ai * bj;
            }
        }
        out
    }
    let mut w = vec![1.0];
    for _ in 0..m / 2 {
        w = conv(&w, &[1.0, -2.0, 1.0]);
    }
    if m % 2 == 1 {
        w = conv(&w, &[-0.5, 0.0, 0.5]);
    }
    w
}

/// Normalized residual of `P u = f` at `(t, x)`: derivatives of `u` come from
/// central differences with step `dx`, and the defect is divided by
/// `1 + |f| + sum_i |coeffs[i] d_i u|` so the answer is scale-free.  `None`
/// when `u` is unavailable somewhere on the stencil.
pub fn residual_at(
    op: &ScalarOperator,
    f: Option<&Expr>,
    u: &dyn Fn(f64, f64) -> Option<f64>,
    t: f64,
    x: f64,
    dx: f64,
) -> Option<f64> {
    let p = op.order();
    let half = p / 2 + (p % 2);
    let mut samples = Vec::with_capacity(2 * half + 1);
    for k in -(half as i64)..=half as i64 {
        let v = u(t, x + k as f64 * dx)?;
        if !v.is_finite() {
            return None;
        }
        samples.push(v);
    }
    let fv = f.map(|e| e.eval(t, x)).unwrap_or(0.0);
    let mut defect = -fv;
    let mut scale = 1.0 + fv.abs();
    for (i, coeff) in op.coeffs.iter().enumerate() {
        let w = diff_weights(i);
        let c = (w.len() - 1) / 2;
        let mut d = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            d += wk * samples[half + k - c];
        }
        d /= dx.powi(i as i32);
        let term = coeff.eval(t, x) * d;
        defect += term;
        scale += term.abs();
    }
    Some(defect.abs() / scale)
}

/// Largest [`residual_at`] over the sample points; `None` when no point had a
/// full stencil.
pub fn max_residual(
    op: &ScalarOperator,
    f: Option<&Expr>,
    u: &dyn Fn(f64, f64) -> Option<f64>,
    pts: &[(f64, f64)],
    dx: f64,
) -> Option<f64> {
    pts.iter()
        .filter_map(|&(t, x)| residual_at(op, f, u, t, x, dx))
        .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Rect, Region, Shape};
    use crate::expr::parse;

    fn unit_region() -> Region {
        let mut r = Region::new(
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            vec![Shape::Rect(Rect::new(-1.0, 1.0, -1.0, 1.0))],
        );
        r.resolution = Some(1e-2);
        r
    }

    #[test]
    fn companion_of_u_xx_plus_u() {
        let op = ScalarOperator::new(vec![Expr::num(1.0), Expr::num(0.0), Expr::num(1.0)]).unwrap();
        let sys = op.companion(Some(&Expr::num(1.0)));
        let c = sys.compile();
        let mut out = [0.0; 2];
        c.eval_into(0.3, -0.7, &[1.0, 2.0], &mut out);
        // v' = (u', -u + 1)
        assert_eq!(out, [2.0, 0.0]);
        c.eval_into(0.0, 0.0, &[0.0, 5.0], &mut out);
        assert_eq!(out, [5.0, 1.0]);
        assert_eq!(c.trace(0.1, 0.2), 0.0);
    }

    #[test]
    fn companion_divides_by_the_leading_coefficient() {
        // 2 u'' - u' = 0  =>  last row (0, 1/2), forcing f/2
        let op = ScalarOperator::new(vec![Expr::num(0.0), Expr::num(-1.0), Expr::num(2.0)]).unwrap();
        let sys = op.companion(Some(&Expr::num(3.0)));
        let c = sys.compile();
        let mut out = [0.0; 2];
        c.eval_into(0.0, 0.0, &[4.0, 6.0], &mut out);
        assert_eq!(out, [6.0, 4.5]);
    }

    #[test]
    fn order_zero_is_rejected() {
        assert!(matches!(
            ScalarOperator::new(vec![Expr::num(1.0)]),
            Err(OperatorError::TooFewCoefficients(1))
        ));
    }

    #[test]
    fn leading_validation_passes_and_fails() {
        let r = unit_region();
        let ok = ScalarOperator::new(vec![parse("t + sin(x)").unwrap(), Expr::num(1.0)]).unwrap();
        ok.validate_leading(&r).unwrap();

        let bad = ScalarOperator::new(vec![Expr::num(0.0), parse("t - 0.5").unwrap()]).unwrap();
        match bad.validate_leading(&r) {
            Err(OperatorError::LeadingCoefficientVanishes { t, .. }) => {
                assert!((t - 0.5).abs() < 2e-2, "root reported at t = {t}");
            }
            other => panic!("expected a vanishing-leading error, got {other:?}"),
        }
    }

    #[test]
    fn difference_weights_match_the_tables() {
        assert_eq!(diff_weights(1), vec![-0.5, 0.0, 0.5]);
        assert_eq!(diff_weights(2), vec![1.0, -2.0, 1.0]);
        assert_eq!(diff_weights(3), vec![-0.5, 1.0, 0.0, -1.0, 0.5]);
        assert_eq!(diff_weights(4), vec![1.0, -4.0, 6.0, -4.0, 1.0]);
    }

    #[test]
    fn residual_accepts_a_true_solution() {
        let op = ScalarOperator::new(vec![Expr::num(1.0), Expr::num(0.0), Expr::num(1.0)]).unwrap();
        let u = |_t: f64, x: f64| Some(x.sin());
        let pts: Vec<(f64, f64)> = (0..50).map(|k| (0.0, -1.0 + 0.04 * k as f64)).collect();
        let r = max_residual(&op, None, &u, &pts, 1e-3).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn residual_accepts_a_third_order_solution() {
        // u''' - u = 0 with u = e^x
        let op = ScalarOperator::new(vec![
            Expr::num(-1.0),
            Expr::num(0.0),
            Expr::num(0.0),
            Expr::num(1.0),
        ])
        .unwrap();
        let u = |_t: f64, x: f64| Some(x.exp());
        let pts: Vec<(f64, f64)> = (0..20).map(|k| (0.0, -0.5 + 0.05 * k as f64)).collect();
        let r = max_residual(&op, None, &u, &pts, 1e-3).unwrap();
        assert!(r < 1e-4, "residual {r}");
    }

    #[test]
    fn residual_rejects_a_wrong_solution() {
        let op = ScalarOperator::new(vec![Expr::num(1.0), Expr::num(0.0), Expr::num(1.0)]).unwrap();
        let u = |_t: f64, x: f64| Some(x * x);
        let r = max_residual(&op, None, &u, &[(0.0, 0.5)], 1e-3).unwrap();
        assert!(r > 0.1, "residual {r} should flag u = x^2");
    }

    #[test]
    fn residual_skips_points_without_a_stencil() {
        let op = ScalarOperator::new(vec![Expr::num(1.0), Expr::num(1.0)]).unwrap();
        let u = |_t: f64, x: f64| if x > 0.0 { Some(x) } else { None };
        assert!(residual_at(&op, None, &u, 0.0, 1e-4, 1e-3).is_none());
        assert!(residual_at(&op, None, &u, 0.0, 0.5, 1e-3).is_some());
    }
}
