//! Terminal conditions and exact propagation through the final time slab.
//!
//! The recursion needs $\Psi(t, x) = \frac{1}{v}\log E\,e^{v\,\Psi(t', x +
//! \sigma Z)}$ with $\Psi(t', \cdot)$ equal to the terminal condition on the
//! last slab. Sampling the terminal condition with a fixed quadrature rule
//! is the one place the scheme would lose accuracy: $|x|$ has a kink and
//! $\log\cosh(\beta x)/\beta$ an exponentially narrow shoulder at scale
//! $1/\beta$. Instead we evaluate the last slab in closed form. For $|x|$
//! the tilted Gaussian averages reduce to normal CDFs. For the smooth
//! boundary we write $\log\cosh(\beta y)/\beta = |y| - \log 2/\beta +
//! \mathrm{ln1p}(e^{-2\beta|y|})/\beta$ and integrate the exponentially
//! localized remainder with a panel quadrature refined geometrically around
//! the shoulder, so the result stays at machine precision uniformly in
//! $\beta$ and in the tilt $v$.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::exec;
use crate::quad::{log_add_exp, log_norm_cdf, log_norm_pdf, norm_cdf, norm_pdf, GaussLegendre};

/// Terminal condition of the backward recursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Ground-state boundary $\Psi(1, x) = |x|$.
    ZeroT,
    /// Free-energy boundary $\Psi(1, x) = \log\cosh(\beta x)/\beta$.
    FiniteBeta { beta: f64 },
}

impl BoundaryKind {
    /// Terminal value at `x`.
    pub fn terminal(&self, x: f64) -> f64 {
        match *self {
            BoundaryKind::ZeroT => x.abs(),
            BoundaryKind::FiniteBeta { beta } => log_cosh_over_beta(beta, x),
        }
    }

    /// Spatial derivative of the terminal value (0 at the kink of `|x|`).
    pub fn terminal_slope(&self, x: f64) -> f64 {
        match *self {
            BoundaryKind::ZeroT => {
                if x == 0.0 {
                    0.0
                } else {
                    x.signum()
                }
            }
            BoundaryKind::FiniteBeta { beta } => (beta * x).tanh(),
        }
    }
}

/// $\log\cosh(\beta x)/\beta$ without overflow.
pub fn log_cosh_over_beta(beta: f64, x: f64) -> f64 {
    let ax = x.abs();
    ax - std::f64::consts::LN_2 / beta + (-2.0 * beta * ax).exp().ln_1p() / beta
}

/// Evaluate $\Psi$ and $\partial_x\Psi$ on all of `xs` for a slab that ends
/// at the terminal condition: Gaussian increment variance `sigma2 > 0`,
/// exponential tilt `v >= 0`.
pub(crate) fn exact_level(
    kind: BoundaryKind,
    v: f64,
    sigma2: f64,
    xs: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let sigma = sigma2.sqrt();
    let pairs = exec::map_indexed(xs.len(), |i| match kind {
        BoundaryKind::ZeroT => zero_t_node(v, sigma, xs[i]),
        BoundaryKind::FiniteBeta { beta } => finite_beta_node(beta, v, sigma, xs[i]),
    });
    pairs.into_iter().unzip()
}

/// Mean and variance of $|Y|$ for $Y \sim N(x, \sigma^2)$.
fn abs_moments(x: f64, sigma: f64) -> (f64, f64) {
    let z = x / sigma;
    let mean = x * (2.0 * norm_cdf(z) - 1.0) + 2.0 * sigma * norm_pdf(z);
    let var = x * x + sigma * sigma - mean * mean;
    (mean, var.max(0.0))
}

// Below this tilt-times-scale threshold the log-average is evaluated by a
// second-order expansion in `v`; the direct formula loses precision as
// O(eps/v) while the expansion error is O(v^2), and both are ~1e-9 at the
// crossover.
fn tiny_tilt(v: f64, x: f64, sigma: f64) -> bool {
    v * (x.abs() + 4.0 * sigma + 1.0) < 1e-5
}

/// Log-partition pieces of the tilted half-Gaussians:
/// $E[e^{v|Y|}] = e^{v^2\sigma^2/2}(e^{l_a} + e^{l_b})$ with
/// $l_a = vx + \log\Phi(x/\sigma + v\sigma)$,
/// $l_b = -vx + \log\Phi(v\sigma - x/\sigma)$.
fn tilt_logs(v: f64, sigma: f64, x: f64) -> (f64, f64) {
    let z = x / sigma;
    let la = v * x + log_norm_cdf(z + v * sigma);
    let lb = -v * x + log_norm_cdf(v * sigma - z);
    (la, lb)
}

/// One node of the last slab for the `|x|` boundary:
/// $\Psi = \frac{1}{v}\log E\,e^{v|Y|}$, $\partial_x\Psi = \frac{E[e^{v|Y|}
/// \,\mathrm{sign}\,Y]}{E[e^{v|Y|}]}$, both in closed form.
pub(crate) fn zero_t_node(v: f64, sigma: f64, x: f64) -> (f64, f64) {
    if v == 0.0 {
        let z = x / sigma;
        let d = 2.0 * norm_cdf(z) - 1.0;
        return (x * d + 2.0 * sigma * norm_pdf(z), d);
    }
    let (la, lb) = tilt_logs(v, sigma, x);
    let dpsi = (0.5 * (la - lb)).tanh();
    let psi = if tiny_tilt(v, x, sigma) {
        let (mean, var) = abs_moments(x, sigma);
        mean + 0.5 * v * var
    } else {
        0.5 * v * sigma * sigma + log_add_exp(la, lb) / v
    };
    (psi, dpsi)
}

// Panel layout for integrands of the form (smooth Gaussian factor) x
// (factor decaying like exp(-|s - s_star| / w)): coarse panels over the
// Gaussian bulk plus geometrically refined panels around the decay center.
const PANEL_SPAN: f64 = 12.0; // phi(12) ~ 2e-32: Gaussian bulk cutoff
const KINK_REACH: f64 = 50.0; // exp(-50) cutoff on the decaying factor

fn gl16() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(16))
}

fn kink_edges(s_star: f64, w: f64) -> Vec<f64> {
    let mut edges: Vec<f64> = Vec::with_capacity(48);
    let mut e = -PANEL_SPAN;
    while e <= PANEL_SPAN + 1e-9 {
        edges.push(e);
        e += 2.0;
    }
    let reach = KINK_REACH * w;
    if s_star + reach > -PANEL_SPAN && s_star - reach < PANEL_SPAN {
        // Refine around the in-domain point closest to the decay center so a
        // center just outside the span still gets a resolved boundary layer.
        let sc = s_star.clamp(-PANEL_SPAN, PANEL_SPAN);
        let mut push = |s: f64| {
            if s > -PANEL_SPAN && s < PANEL_SPAN {
                edges.push(s);
            }
        };
        push(sc);
        let mut d = w;
        for _ in 0..80 {
            if d >= reach {
                break;
            }
            push(sc - d);
            push(sc + d);
            d *= 2.0;
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    edges
}

/// $\int_{-12}^{12} f(s)\,ds$ for `f` that decays like
/// $e^{-|s - s_\star|/w}$ times a Gaussian-bulk factor. Panels entirely
/// farther than `50 w` from the center are dropped.
pub(crate) fn kink_integral(s_star: f64, w: f64, f: impl Fn(f64) -> f64) -> f64 {
    let gl = gl16();
    let edges = kink_edges(s_star, w);
    let reach = KINK_REACH * w;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let dist = if b < s_star {
            s_star - b
        } else if a > s_star {
            a - s_star
        } else {
            0.0
        };
        if dist > reach {
            continue;
        }
        total += gl.integrate(a, b, &f);
    }
    total
}

/// One node of the last slab for the `logcosh` boundary. Writes the
/// boundary as $|y| - \log2/\beta + \mathrm{ln1p}(u)/\beta$ with $u =
/// e^{-2\beta|y|}$ and folds the $|y|$ part in closed form; the remainder
/// enters through two correction ratios integrated over the shoulder:
/// $c_1 = E[e^{v|Y|}F_1]/E[e^{v|Y|}]$ with $F_1 = \mathrm{expm1}(a\,
/// \mathrm{ln1p}(u))$, $a = v/\beta$, and likewise $c_2$ for the slope.
pub(crate) fn finite_beta_node(beta: f64, v: f64, sigma: f64, x: f64) -> (f64, f64) {
    let ln2 = std::f64::consts::LN_2;
    let z = x / sigma;
    let s_star = -z;
    if v == 0.0 {
        let w = 1.0 / (2.0 * beta * sigma);
        let (mean, _) = abs_moments(x, sigma);
        let corr_psi = kink_integral(s_star, w, |s| {
            let y = x + sigma * s;
            let u = (-2.0 * beta * y.abs()).exp();
            u.ln_1p() / beta * norm_pdf(s)
        });
        let base_d = 2.0 * norm_cdf(z) - 1.0;
        let corr_d = kink_integral(s_star, w, |s| {
            let y = x + sigma * s;
            let u = (-2.0 * beta * y.abs()).exp();
            y.signum() * (-2.0 * u / (1.0 + u)) * norm_pdf(s)
        });
        return (mean - ln2 / beta + corr_psi, (base_d + corr_d).clamp(-1.0, 1.0));
    }
    let a = v / beta;
    let (la, lb) = tilt_logs(v, sigma, x);
    let log_cf = 0.5 * v * v * sigma * sigma + log_add_exp(la, lb);
    let ratio0 = (0.5 * (la - lb)).tanh();
    // Decay rate of e^{v|y|} F(u) away from y = 0 is (2 beta - v) sigma per
    // unit s (and v <= beta always holds for admissible inputs).
    let w = 1.0 / ((2.0 * beta - v) * sigma);
    let c1 = kink_integral(s_star, w, |s| {
        let y = x + sigma * s;
        let u = (-2.0 * beta * y.abs()).exp();
        let f1 = (a * u.ln_1p()).exp_m1();
        f1 * (v * y.abs() + log_norm_pdf(s) - log_cf).exp()
    });
    let c2 = kink_integral(s_star, w, |s| {
        let y = x + sigma * s;
        let u = (-2.0 * beta * y.abs()).exp();
        let f2 = (a * u.ln_1p()).exp_m1() - 2.0 * u * (1.0 + u).powf(a - 1.0);
        y.signum() * f2 * (v * y.abs() + log_norm_pdf(s) - log_cf).exp()
    });
    let psi = if tiny_tilt(v, x, sigma) {
        let (mean, var) = abs_moments(x, sigma);
        mean + 0.5 * v * var - ln2 / beta + c1.ln_1p() / v
    } else {
        (-a * ln2 + log_cf + c1.ln_1p()) / v
    };
    let dpsi = ((ratio0 + c2) / (1.0 + c1)).clamp(-1.0, 1.0);
    (psi, dpsi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::adaptive_simpson;

    // E e^{c Z} 1{Z > a} = e^{c^2/2} Phi(c - a) gives the reference value
    // for the exponential-tail Gaussian integral used by the panel tests,
    // assembled in log space since the factors overflow separately.
    fn exp_abs_tail(beta: f64, x: f64, sigma: f64) -> f64 {
        let h = 0.5 * beta * beta * sigma * sigma;
        log_add_exp(
            h - beta * x + log_norm_cdf(x / sigma - beta * sigma),
            h + beta * x + log_norm_cdf(-x / sigma - beta * sigma),
        )
        .exp()
    }

    #[test]
    fn terminal_values_and_slopes() {
        let z = BoundaryKind::ZeroT;
        assert_eq!(z.terminal(-2.5), 2.5);
        assert_eq!(z.terminal_slope(0.0), 0.0);
        assert_eq!(z.terminal_slope(-0.0), 0.0);
        assert_eq!(z.terminal_slope(3.0), 1.0);
        assert_eq!(z.terminal_slope(-0.1), -1.0);

        let f = BoundaryKind::FiniteBeta { beta: 256.0 };
        // Far from the origin the smooth boundary is |x| - log2/beta.
        let got = f.terminal(50.0);
        assert!((got - (50.0 - std::f64::consts::LN_2 / 256.0)).abs() < 1e-15);
        assert_eq!(f.terminal(0.0), 0.0);
        assert!((f.terminal_slope(0.01) - (2.56f64).tanh()).abs() < 1e-15);
        // logcosh/beta is sandwiched between |x| - log2/beta and |x|.
        for &x in &[0.0, 1e-3, 0.3, 5.0] {
            let b = f.terminal(x);
            assert!(b <= x.abs() + 1e-15 && b >= x.abs() - std::f64::consts::LN_2 / 256.0 - 1e-15);
        }
    }

    #[test]
    fn zero_t_node_frozen_anchors() {
        // E|Z| = sqrt(2/pi), E|1 + Z|, E|0.5 + Z| for Z ~ N(0,1), frozen
        // from an independent high-precision evaluation.
        let (p0, d0) = zero_t_node(0.0, 1.0, 0.0);
        assert!((p0 - 0.7978845608028654).abs() < 1e-15);
        assert!(d0.abs() < 1e-15);
        let (p1, _) = zero_t_node(0.0, 1.0, 1.0);
        assert!((p1 - 1.1666309411753726).abs() < 1e-14);
        let (p5, _) = zero_t_node(0.0, 1.0, 0.5);
        assert!((p5 - 0.8955931148026121).abs() < 1e-14);
    }

    #[test]
    fn zero_t_node_matches_direct_quadrature() {
        // The oracle integrates exp(v(|x + sigma s| - |x|)) phi(s), shifted
        // by the dominant exponent so the integral is O(1) and an absolute
        // Simpson tolerance is meaningful.
        for &v in &[0.0, 0.7, 3.0] {
            for &sigma in &[0.3, 1.0] {
                for &x in &[0.0, 0.5, -3.0, 8.0] {
                    let (psi, dpsi) = zero_t_node(v, sigma, x);
                    let (psi_q, dpsi_q) = if v == 0.0 {
                        let m = adaptive_simpson(
                            &|s: f64| (x + sigma * s).abs() * norm_pdf(s),
                            -14.0,
                            14.0,
                            1e-12,
                        );
                        let d = adaptive_simpson(
                            &|s: f64| (x + sigma * s).signum() * norm_pdf(s),
                            -14.0,
                            14.0,
                            1e-12,
                        );
                        (m, d)
                    } else {
                        let shifted = |s: f64| {
                            (v * ((x + sigma * s).abs() - x.abs())).exp() * norm_pdf(s)
                        };
                        let num = adaptive_simpson(&shifted, -14.0, 14.0, 1e-11);
                        let num_d = adaptive_simpson(
                            &|s: f64| shifted(s) * (x + sigma * s).signum(),
                            -14.0,
                            14.0,
                            1e-11,
                        );
                        (x.abs() + num.ln() / v, num_d / num)
                    };
                    assert!(
                        (psi - psi_q).abs() < 1e-9 * psi_q.abs().max(1.0),
                        "v={v} sigma={sigma} x={x}: {psi} vs {psi_q}"
                    );
                    assert!((dpsi - dpsi_q).abs() < 1e-9, "v={v} sigma={sigma} x={x}");
                }
            }
        }
    }

    #[test]
    fn zero_t_node_slope_is_odd_and_bounded() {
        for &v in &[0.0, 0.4, 2.0, 17.0] {
            for &sigma in &[0.05, 1.0, 1.8] {
                for i in 0..60 {
                    let x = -15.0 + i as f64 * 0.5;
                    let (_, d) = zero_t_node(v, sigma, x);
                    let (_, dm) = zero_t_node(v, sigma, -x);
                    assert!(d.abs() <= 1.0, "slope out of range: {d}");
                    assert!((d + dm).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn zero_t_node_tiny_tilt_branch_is_continuous() {
        // The probe tilts sit on opposite sides of the crossover; the value
        // genuinely drifts by (d psi / d v) dv = (Var|Y|/2) dv between them,
        // so the branch mismatch is what remains after removing that drift.
        for &(x, sigma) in &[(0.0f64, 1.0), (2.0, 0.4), (-7.0, 1.5)] {
            let vc = 1e-5 / (x.abs() + 4.0 * sigma + 1.0);
            let (lo, _) = zero_t_node(vc * 0.99, sigma, x);
            let (hi, _) = zero_t_node(vc * 1.01, sigma, x);
            let (_, var) = abs_moments(x, sigma);
            let drift = 0.02 * vc * 0.5 * var;
            assert!(
                ((hi - lo) - drift).abs() < 1e-9,
                "jump at branch switch: {lo} vs {hi} (drift {drift})"
            );
        }
    }

    #[test]
    fn kink_integral_matches_exponential_tail_formula() {
        for &beta in &[4.0, 64.0] {
            for &sigma in &[0.05f64, 1.0] {
                for &x in &[0.0, 0.3, -2.0] {
                    let w = 1.0 / (beta * sigma);
                    let got = kink_integral(-x / sigma, w, |s| {
                        (-beta * (x + sigma * s).abs()).exp() * norm_pdf(s)
                    });
                    let want = exp_abs_tail(beta, x, sigma);
                    if (x / sigma).abs() <= PANEL_SPAN + KINK_REACH * w {
                        assert!(
                            (got - want).abs() < 1e-12 * want.max(1e-300),
                            "beta={beta} sigma={sigma} x={x}: {got} vs {want}"
                        );
                    } else {
                        // A kink this far outside the panel span carries
                        // Gaussian-suppressed mass only; the integrator may
                        // drop it entirely, which matters at no usable scale.
                        assert!(got.abs() <= want && want < 1e-50);
                    }
                }
            }
        }
    }

    #[test]
    fn finite_beta_node_full_tilt_reproduces_tail_formula() {
        // With v = beta the slab has the closed form
        // psi = logcosh(beta x)/beta + beta sigma^2 / 2, dpsi = tanh(beta x).
        for &beta in &[1.0, 8.0, 64.0, 256.0] {
            for &sigma in &[1e-3, 0.5, 1.7] {
                for &x in &[0.0, 0.3, -0.3, 2.0, -14.0] {
                    let (psi, dpsi) = finite_beta_node(beta, beta, sigma, x);
                    let want = log_cosh_over_beta(beta, x) + 0.5 * beta * sigma * sigma;
                    assert!(
                        (psi - want).abs() < 1e-12 * want.abs().max(1.0),
                        "beta={beta} sigma={sigma} x={x}: {psi} vs {want}"
                    );
                    assert!(
                        (dpsi - (beta * x).tanh()).abs() < 1e-12,
                        "beta={beta} sigma={sigma} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn finite_beta_node_matches_direct_quadrature() {
        for &beta in &[1.0, 4.0] {
            for &v in &[0.0, 0.5, 1.0] {
                let v = v * beta;
                for &sigma in &[0.25, 1.0] {
                    for &x in &[0.0, 0.8, -2.5] {
                        let (psi, dpsi) = finite_beta_node(beta, v, sigma, x);
                        let b = |y: f64| log_cosh_over_beta(beta, y);
                        let (psi_q, dpsi_q) = if v == 0.0 {
                            let m = adaptive_simpson(
                                &|s: f64| b(x + sigma * s) * norm_pdf(s),
                                -14.0,
                                14.0,
                                1e-13,
                            );
                            let d = adaptive_simpson(
                                &|s: f64| (beta * (x + sigma * s)).tanh() * norm_pdf(s),
                                -14.0,
                                14.0,
                                1e-13,
                            );
                            (m, d)
                        } else {
                            // Shift by v b(x) so the tilted integral is O(1).
                            let shifted =
                                |s: f64| (v * (b(x + sigma * s) - b(x))).exp() * norm_pdf(s);
                            let num = adaptive_simpson(&shifted, -14.0, 14.0, 1e-11);
                            let num_d = adaptive_simpson(
                                &|s: f64| shifted(s) * (beta * (x + sigma * s)).tanh(),
                                -14.0,
                                14.0,
                                1e-11,
                            );
                            (b(x) + num.ln() / v, num_d / num)
                        };
                        assert!(
                            (psi - psi_q).abs() < 1e-9 * psi_q.abs().max(1.0),
                            "beta={beta} v={v} sigma={sigma} x={x}: {psi} vs {psi_q}"
                        );
                        assert!(
                            (dpsi - dpsi_q).abs() < 1e-9,
                            "beta={beta} v={v} sigma={sigma} x={x}: {dpsi} vs {dpsi_q}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn finite_beta_node_approaches_zero_t_node() {
        // The boundaries differ by at most log2/beta, and the log-average is
        // monotone in the boundary, so the slab values must as well.
        let beta = 4096.0;
        for &v in &[0.5, 2.0] {
            for &x in &[0.0, 1.2, -6.0] {
                let (pb, _) = finite_beta_node(beta, v, 1.0, x);
                let (pz, _) = zero_t_node(v, 1.0, x);
                assert!(pb <= pz + 1e-12);
                assert!(pb >= pz - std::f64::consts::LN_2 / beta - 1e-12);
            }
        }
    }

    #[test]
    fn exact_level_parallel_matches_scalar() {
        let xs: Vec<f64> = (0..101).map(|i| -5.0 + 0.1 * i as f64).collect();
        let (psi, dpsi) = exact_level(BoundaryKind::FiniteBeta { beta: 8.0 }, 3.0, 0.7, &xs);
        for (i, &x) in xs.iter().enumerate() {
            let (p, d) = finite_beta_node(8.0, 3.0, 0.7f64.sqrt(), x);
            assert_eq!(psi[i], p);
            assert_eq!(dpsi[i], d);
        }
    }
}
