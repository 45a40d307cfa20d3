//! Local interpolation of level data on the uniform space grid.
//!
//! The solver stores each time level as node values on a uniform grid and
//! the slab recursion needs off-grid reads at Gaussian probe points. We use
//! a 4-point Lagrange cubic and then clamp the result to the range of the
//! two nodes bracketing the query. The clamp costs nothing on smooth
//! sections (the cubic already lands inside the bracket once the data is
//! locally monotone and resolved) and guarantees that every interpolated
//! value respects the bounds the node data respects: spatial derivative
//! profiles stay in [-1, 1], monotone runs stay monotone, and no Runge-type
//! overshoot can leak out of a kink at the terminal condition.

/// Interpolate `f` (values on the uniform grid `x0 + i*dx`) at `x`, using a
/// Lagrange cubic on the 4-point stencil around `x` clamped to the values of
/// the two bracketing nodes. `x` must lie within the grid span; callers
/// handle extension beyond it. Requires `f.len() >= 4`.
pub fn cubic_clamped(x0: f64, dx: f64, f: &[f64], x: f64) -> f64 {
    let n = f.len();
    debug_assert!(n >= 4);
    let u = (x - x0) / dx;
    let cell = (u.floor() as isize).clamp(0, n as isize - 2) as usize;
    // Shift the stencil inward at the edges so it always has 4 points.
    let start = cell.saturating_sub(1).min(n - 4);
    let t = u - start as f64;
    let (f0, f1, f2, f3) = (f[start], f[start + 1], f[start + 2], f[start + 3]);
    let c0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let c1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let c2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let c3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    let val = c0 * f0 + c1 * f1 + c2 * f2 + c3 * f3;
    let (a, b) = (f[cell], f[cell + 1]);
    val.clamp(a.min(b), a.max(b))
}
