//! Gaussian quadrature rules and stable normal-distribution helpers.
//!
//! Nodes and weights come from the Golub–Welsch eigenvalue method: the rule
//! of order n is the eigendecomposition of the n×n Jacobi matrix of the
//! orthogonal polynomial family, with weights proportional to the squared
//! first components of the eigenvectors.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Hermite rule expressed against the standard normal measure:
/// `expect(f)` ≈ E[f(Z)], Z ~ N(0,1). Exact for polynomials of degree < 2n.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    /// Probe points in z-space (√2 × physicists' nodes), ascending.
    pub nodes: Vec<f64>,
    /// Probability weights, summing to 1.
    pub weights: Vec<f64>,
}

fn golub_welsch(off_diag: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = off_diag.len() + 1;
    let mat = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            off_diag[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(mat);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

// The eigenvalues of a symmetric rule mirror around 0 only up to rounding;
// enforce exact symmetry so even integrands give exactly even results.
fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let half = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -half;
        nodes[j] = half;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two quadrature nodes");
        let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        let (nodes_t, w2) = golub_welsch(&off);
        // t-nodes integrate against e^{-t²}; substitute z = √2 t and
        // normalize the total weight √π away.
        let total: f64 = w2.iter().sum();
        let mut nodes: Vec<f64> = nodes_t.iter().map(|t| t * std::f64::consts::SQRT_2).collect();
        let mut weights: Vec<f64> = w2.iter().map(|w| w / total).collect();
        symmetrize(&mut nodes, &mut weights);
        Self { nodes, weights }
    }

    /// E[f(Z)] for Z ~ N(0,1); a micro-oracle for the moment tests.
    #[cfg(test)]
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// Total weight of probes with |z| > r (tail mass of the rule).
    pub fn tail_weight(&self, r: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|&(&z, _)| z.abs() > r)
            .map(|(_, &w)| w)
            .sum()
    }
}

/// Gauss–Legendre rule on [-1, 1]; weights sum to 2.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        let (mut nodes, w2) = golub_welsch(&off);
        let total: f64 = w2.iter().sum();
        let mut weights: Vec<f64> = w2.iter().map(|w| 2.0 * w / total).collect();
        symmetrize(&mut nodes, &mut weights);
        Self { nodes, weights }
    }

    /// ∫_a^b f.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn log_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

pub fn norm_cdf(z: f64) -> f64 {
    // libm's erfc (FreeBSD msun port) is accurate to <1 ulp; rational
    // approximations in common statistics crates only reach ~1e-11, which is
    // visible through the closed-form slab formulas.
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// log Φ(z), stable over the whole line. For z below the erfc underflow
/// threshold the standard asymptotic expansion of the Mills ratio is used.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > -36.0 {
        if z > 8.0 {
            // Φ(z) = 1 - Φ(-z); Φ(-z) ≤ 1e-15, so ln(1-u) ≈ -u.
            return (-norm_cdf(-z)).ln_1p();
        }
        norm_cdf(z).ln()
    } else {
        // ln Φ(z) = -z²/2 - ln(-z√(2π)) + ln(1 - 1/z² + 3/z⁴ - 15/z⁶ + ...)
        let zi = 1.0 / (z * z);
        let series = 1.0 - zi * (1.0 - 3.0 * zi * (1.0 - 5.0 * zi));
        -0.5 * z * z - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
    }
}

/// log(e^a + e^b) without overflow; tolerates -inf inputs.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_three_points() {
        // Classic n = 3 rule: z-nodes ±√3, 0 with probability weights 1/6, 2/3, 1/6.
        let gh = GaussHermite::new(3);
        assert_abs_diff_eq!(gh.nodes[0], -(3f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(gh.nodes[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gh.nodes[2], 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(gh.weights[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gh.weights[1], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn hermite_moments_and_mgf() {
        let gh = GaussHermite::new(64);
        assert_abs_diff_eq!(gh.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gh.expect(|z| z), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(gh.expect(|z| z * z), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gh.expect(|z| z.powi(4)), 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(gh.expect(|z| z.powi(6)), 15.0, epsilon = 1e-10);
        // E e^{cZ} = e^{c²/2}
        for c in [0.5f64, 1.0, 3.0] {
            let exact = (c * c / 2.0).exp();
            assert_abs_diff_eq!(gh.expect(|z| (c * z).exp()) / exact, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn legendre_polynomials_and_cosine() {
        let gl = GaussLegendre::new(16);
        assert_abs_diff_eq!(gl.integrate(0.0, 1.0, |x| x * x * x), 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(
            gl.integrate(-1.0, 1.0, |x| x.cos()),
            2.0 * 1f64.sin(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(gl.integrate(2.0, 5.0, |x| 1.0 / x), (5f64 / 2.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn normal_cdf_anchors() {
        assert_abs_diff_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_cdf(1.0), 0.841344746068543, epsilon = 1e-14);
        assert_abs_diff_eq!(norm_cdf(1.0) + norm_cdf(-1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_pdf(0.0), (2.0 * std::f64::consts::PI).sqrt().recip());
    }

    #[test]
    fn log_norm_cdf_branches_agree() {
        for z in [-5.0, -10.0, -20.0, -30.0] {
            assert_abs_diff_eq!(log_norm_cdf(z), norm_cdf(z).ln(), epsilon = 1e-10);
        }
        // Continuity across the asymptotic switch at z = -36.
        let a = log_norm_cdf(-35.999);
        let b = log_norm_cdf(-36.001);
        let slope = (b - a) / (-0.002);
        assert!((slope - 36.0).abs() < 0.1, "d/dz lnΦ ≈ z near the switch");
        // Large positive arguments: ln Φ(z) → 0 from below.
        assert!(log_norm_cdf(9.0) < 0.0);
        assert!(log_norm_cdf(40.0).abs() < 1e-300);
    }

    #[test]
    fn log_add_exp_basics() {
        assert_abs_diff_eq!(log_add_exp(0.0, 0.0), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(log_add_exp(700.0, 700.0), 700.0 + 2f64.ln(), epsilon = 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }
}
