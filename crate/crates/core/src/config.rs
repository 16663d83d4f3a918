//! Run-wide numeric configuration.

use serde::{Deserialize, Serialize};

/// Tolerances and guards shared by the slice integrator and quadrature routines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative tolerance of the embedded RK 5(4) step controller.
    pub rtol: f64,
    /// Absolute tolerance of the step controller.
    pub atol: f64,
    /// Blow-up bound: integration stops once `|v|_inf` exceeds this.
    pub blowup_bound: f64,
    /// Smallest step the controller may take before giving up on a slice.
    pub h_min: f64,
    /// Slice endpoints adjacent to excluded sets are approached only up to
    /// `boundary_shave` steps of `h_min` short of the endpoint.
    pub boundary_shave: f64,
    /// Absolute/relative tolerance of adaptive Simpson quadrature.
    pub quad_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-9,
            atol: 1e-12,
            blowup_bound: 1e12,
            h_min: 1e-13,
            boundary_shave: 10.0,
            quad_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    /// Distance kept between the integrator and a slice endpoint that abuts
    /// an excluded set.
    pub fn boundary_tol(&self) -> f64 {
        self.boundary_shave * self.h_min
    }
}

/// Output grid resolution for sampled fields.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of parameter samples across the piece's t-projection.
    pub nt: usize,
    /// Number of x samples across each slice.
    pub nx: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nt: 100, nx: 100 }
    }
}

/// `n` evenly spaced points with both endpoints included (`n >= 2`).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}
