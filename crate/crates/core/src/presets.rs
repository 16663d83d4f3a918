//! Ready-made regions and reference problems.
//!
//! The classifier fixtures cover the qualitative zoo the region analysis has
//! to get right: product domains, punctures of measure zero, a slit that
//! leaves the set simply connected but cuts every slice on one side, a
//! multiply connected annulus, disconnected unions, the dyadically punctured
//! square, and a comb-shaped x-simple set whose fingers shrink geometrically.
//! The problem builders return small (region, operator[, rhs]) bundles shared
//! by the CLI and the acceptance suite.

use crate::domain::{Rect, Region, Shape, Witness};
use crate::expr::{self, Expr};
use crate::operators::ScalarOperator;
use crate::pathology::PuncturedSquare;

/// Resolution shared by all fixtures.
pub const FIXTURE_RESOLUTION: f64 = 1e-3;

fn full(bbox: Rect) -> Region {
    let mut region = Region::new(bbox, vec![Shape::Rect(bbox)]);
    region.resolution = Some(FIXTURE_RESOLUTION);
    region
}

/// Open unit square.
pub fn rectangle() -> Region {
    full(Rect::new(0.0, 1.0, 0.0, 1.0))
}

/// Horizontal strip of unit height, clipped to `|t| < 5`.
pub fn strip() -> Region {
    full(Rect::new(-5.0, 5.0, 0.0, 1.0))
}

/// Plane minus the origin, clipped to `(-1,1)^2`.
pub fn punctured_plane() -> Region {
    let mut region = full(Rect::new(-1.0, 1.0, -1.0, 1.0));
    region.exclude_points.push((0.0, 0.0));
    region
}

/// Plane minus the closed ray `t >= 0, x = 0`, clipped to `(-1,1)^2`:
/// simply connected, yet every slice with `t >= 0` is cut in two.
pub fn slit_plane() -> Region {
    let mut region = Region::new(
        Rect::new(-1.0, 1.0, -1.0, 1.0),
        vec![
            Shape::Rect(Rect::new(-1.0, 1.0, 0.0, 1.0)),
            Shape::Rect(Rect::new(-1.0, 1.0, -1.0, 0.0)),
            Shape::Rect(Rect::new(-1.0, 0.0, -1.0, 1.0)),
        ],
    );
    region.resolution = Some(FIXTURE_RESOLUTION);
    region
}

/// Two disjoint unit squares stacked in `x` over the same parameter range.
pub fn stacked_rectangles() -> Region {
    let mut region = Region::new(
        Rect::new(0.0, 1.0, 0.0, 3.0),
        vec![
            Shape::Rect(Rect::new(0.0, 1.0, 0.0, 1.0)),
            Shape::Rect(Rect::new(0.0, 1.0, 2.0, 3.0)),
        ],
    );
    region.resolution = Some(FIXTURE_RESOLUTION);
    region
}

/// Annulus `0.5 < |(t,x)| < 1`: connected but multiply connected, and the
/// hole splits every slice with `|t| < 0.5`.
pub fn annulus() -> Region {
    let mut region = Region::new(
        Rect::new(-1.1, 1.1, -1.1, 1.1),
        vec![Shape::Expr(
            expr::parse("t^2 + x^2 < 1 && t^2 + x^2 > 0.25").unwrap(),
        )],
    );
    region.resolution = Some(FIXTURE_RESOLUTION);
    region
}

/// Dyadically punctured unit square, truncated at level `k_max`.
pub fn punctured_square(k_max: u32) -> Region {
    let mut region = PuncturedSquare::new(k_max, 1.0).region();
    region.resolution = Some(FIXTURE_RESOLUTION);
    region
}

/// Comb-shaped x-simple set: a block `t < 0` with finitely many fingers
/// reaching right, finger `k` spanning `0 <= t < 0.4/k` just below
/// `x = -0.5/(k+1)`.  Consecutive rectangles overlap so the union stays open
/// and every slice is one interval.
pub fn comb() -> Region {
    let mut shapes = vec![
        Shape::Rect(Rect::new(-0.9, 0.0, -0.9, 1.2)),
        Shape::Rect(Rect::new(-0.05, 0.4, -0.9, -0.25)),
    ];
    for k in 2..=4u32 {
        let k = f64::from(k);
        shapes.push(Shape::Rect(Rect::new(
            -0.05,
            0.4 / k,
            -0.5 / k - 0.03,
            -0.5 / (k + 1.0),
        )));
    }
    let mut region = Region::new(Rect::new(-1.0, 0.5, -1.0, 1.3), shapes);
    region.resolution = Some(FIXTURE_RESOLUTION);
    region
}

/// One region of the classifier suite together with its known classification.
#[derive(Debug, Clone)]
pub struct ClassifierFixture {
    pub name: &'static str,
    pub region: Region,
    pub x_simple: bool,
    pub components: usize,
    /// Per-component x-simplicity, in component-id order.
    pub component_x_simple: Vec<bool>,
    pub pieces: usize,
    pub has_witness: bool,
}

/// The eight-fixture classifier suite.
pub fn classifier_fixtures() -> Vec<ClassifierFixture> {
    vec![
        ClassifierFixture {
            name: "rectangle",
            region: rectangle(),
            x_simple: true,
            components: 1,
            component_x_simple: vec![true],
            pieces: 1,
            has_witness: false,
        },
        ClassifierFixture {
            name: "strip",
            region: strip(),
            x_simple: true,
            components: 1,
            component_x_simple: vec![true],
            pieces: 1,
            has_witness: false,
        },
        ClassifierFixture {
            name: "punctured-plane",
            region: punctured_plane(),
            x_simple: false,
            components: 1,
            component_x_simple: vec![false],
            pieces: 0,
            has_witness: true,
        },
        ClassifierFixture {
            name: "slit-plane",
            region: slit_plane(),
            x_simple: false,
            components: 1,
            component_x_simple: vec![false],
            pieces: 0,
            has_witness: true,
        },
        ClassifierFixture {
            name: "stacked-rectangles",
            region: stacked_rectangles(),
            x_simple: false,
            components: 2,
            component_x_simple: vec![true, true],
            pieces: 2,
            has_witness: false,
        },
        ClassifierFixture {
            name: "annulus",
            region: annulus(),
            x_simple: false,
            components: 1,
            component_x_simple: vec![false],
            pieces: 0,
            has_witness: true,
        },
        ClassifierFixture {
            name: "punctured-square-k3",
            region: punctured_square(3),
            x_simple: false,
            components: 1,
            component_x_simple: vec![false],
            pieces: 0,
            has_witness: true,
        },
        ClassifierFixture {
            name: "comb",
            region: comb(),
            x_simple: true,
            components: 1,
            component_x_simple: vec![true],
            pieces: 1,
            has_witness: false,
        },
    ]
}

/// Witness configuration of the clipped punctured plane: the obstruction
/// line `t = 0` with the gap collapsed to the origin and the certifying
/// rectangle extending into `t < 0`.
pub fn origin_witness() -> Witness {
    Witness {
        t0: 0.0,
        eps: 0.5,
        x1: 0.0,
        x2: 0.0,
        reflected_t: false,
        upsilon: vec![(0.0, 0.0)],
    }
}

/// Homogeneous transport through the inverse-square kernel on the punctured
/// plane: `u_x = u / (x^2 + t^2)`.  Every global continuous solution vanishes
/// on the half-line `t = 0, x <= 0`, so no fundamental set exists.
pub fn kernel_transport() -> (Region, ScalarOperator) {
    let op = ScalarOperator::new(vec![
        expr::parse("-1 / (x^2 + t^2)").unwrap(),
        Expr::num(1.0),
    ])
    .unwrap();
    (punctured_plane(), op)
}

/// Inhomogeneous counterpart on the punctured plane: `u_x = 1 / (x^2 + t^2)`,
/// which has no continuous solution on the whole region.
pub fn kernel_rhs() -> (Region, ScalarOperator, Expr) {
    let op = ScalarOperator::new(vec![Expr::num(0.0), Expr::num(1.0)]).unwrap();
    let f = expr::parse("1 / (x^2 + t^2)").unwrap();
    (punctured_plane(), op, f)
}

/// Constantly forced oscillator `u_xx + u = 1` on a rectangle.
pub fn oscillator() -> (Region, ScalarOperator, Expr) {
    let op = ScalarOperator::new(vec![Expr::num(1.0), Expr::num(0.0), Expr::num(1.0)]).unwrap();
    (full(Rect::new(0.0, 1.0, 0.0, 3.0)), op, Expr::num(1.0))
}

/// Damped oscillator `u_xx + (t + sin x) u_x + u = 0` on the unit square;
/// the parameter-dependent damping drives the Wronskian decay law.
pub fn damped_oscillator() -> (Region, ScalarOperator) {
    let op = ScalarOperator::new(vec![
        Expr::num(1.0),
        expr::parse("t + sin(x)").unwrap(),
        Expr::num(1.0),
    ])
    .unwrap();
    (rectangle(), op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::classify;

    #[test]
    fn slit_plane_membership_matches_the_ray() {
        let r = slit_plane();
        assert!(r.contains(-0.5, 0.0), "left of the slit tip");
        assert!(!r.contains(0.0, 0.0));
        assert!(!r.contains(0.5, 0.0));
        assert!(r.contains(0.5, 1e-9));
        assert_eq!(r.slice(-0.5).intervals.len(), 1);
        assert_eq!(r.slice(0.5).intervals.len(), 2);
    }

    #[test]
    fn slit_plane_classifies_as_one_simply_connected_obstruction() {
        let cls = classify(&slit_plane()).unwrap();
        assert!(!cls.x_simple);
        assert_eq!(cls.components.len(), 1);
        assert!(cls.pieces.is_empty());
        let w = cls.witness.expect("slit plane witness");
        assert!(w.t0.abs() < 5e-3, "obstruction starts at the slit tip, got {}", w.t0);
        assert!(w.x1.abs() < 5e-3 && w.x2.abs() < 5e-3);
        assert!(!w.reflected_t, "certifying rectangle extends into t < 0");
    }

    #[test]
    fn comb_is_x_simple_despite_the_fingers() {
        let r = comb();
        for &t in &[-0.5, -0.01, 0.0, 0.05, 0.12, 0.15, 0.3, 0.39] {
            let s = r.slice(t);
            assert_eq!(s.intervals.len(), 1, "slice at t = {t} must be one interval");
        }
        assert!(r.slice(0.45).is_empty());
        let cls = classify(&r).unwrap();
        assert!(cls.x_simple);
        assert_eq!(cls.components.len(), 1);
        assert_eq!(cls.pieces.len(), 1);
        assert!(cls.witness.is_none());
    }

    #[test]
    fn stacked_rectangles_have_x_simple_components_but_no_witness() {
        let cls = classify(&stacked_rectangles()).unwrap();
        assert!(!cls.x_simple, "two intervals per slice");
        assert_eq!(cls.components.len(), 2);
        assert!(cls.components.iter().all(|c| c.x_simple));
        assert_eq!(cls.pieces.len(), 2);
        assert!(cls.witness.is_none());
    }

    #[test]
    fn problem_presets_are_well_formed() {
        let (r, op) = kernel_transport();
        assert_eq!(op.order(), 1);
        assert!(!r.contains(0.0, 0.0));
        // kernel value at (t,x) = (1,1): -1/2
        assert_eq!(op.coeffs[0].eval(1.0, 1.0), -0.5);

        let (_, op, f) = kernel_rhs();
        assert_eq!(op.order(), 1);
        assert_eq!(f.eval(0.0, 2.0), 0.25);

        let (_, op, f) = oscillator();
        assert_eq!(op.order(), 2);
        assert_eq!(f.eval(0.3, 0.7), 1.0);

        let (_, op) = damped_oscillator();
        assert_eq!(op.order(), 2);
        assert_eq!(op.coeffs[1].eval(0.5, 0.0), 0.5);

        let w = origin_witness();
        assert_eq!(w.direction(), -1.0);
        assert_eq!(w.approach_t(0.1), -0.1);
    }
}
