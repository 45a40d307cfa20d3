//! Backward solver for the Parisi PDE
//! $\partial_t\Psi = -\tfrac{\xi''(t)}{2}\left(\partial_{xx}\Psi +
//! \eta(t)(\partial_x\Psi)^2\right)$ with terminal condition $|x|$ (ground
//! state) or $\log\cosh(\beta x)/\beta$ (free energy), where $\eta$ is a
//! step function ($\gamma$ itself, or $\beta\alpha$).
//!
//! Because $\eta$ is piecewise constant the Cole–Hopf substitution
//! $\Phi = e^{\eta\Psi}$ makes each interval exactly one Gaussian
//! convolution with total variance $\xi'(t_{j+1}) - \xi'(t_j)$: no time
//! stepping and no time-discretization error. The recursion per interval is
//!
//! $\Psi(t_j, x) = \tfrac1v \log E\, e^{v\,\Psi(t_{j+1},\, x + \sigma Z)}$,
//!
//! with the plain Gaussian mean at $v = 0$, and the spatial derivative
//! propagated exactly as the tilted average $E[e^{v\Psi}\partial_x\Psi] /
//! E[e^{v\Psi}]$ rather than by differencing the grid. The final interval is
//! evaluated in closed form against the terminal condition (see
//! [`boundary`]); earlier intervals use Gauss–Hermite quadrature with
//! clamped cubic interpolation of the stored level and a linear-growth
//! extension beyond the grid edge, where $\partial_x\Psi = \pm 1$ up to
//! exponentially small terms.

mod boundary;
mod interp;

pub use boundary::{log_cosh_over_beta, BoundaryKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::MixingFunction;
use crate::order_param::{l1_distance, DiscreteCdf, StepOrderParam};
use crate::quad::GaussHermite;

/// Uniform space grid and quadrature settings for a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    /// Half-width: nodes span `[-x_max, x_max]`.
    pub x_max: f64,
    /// Node count; odd so that `x = 0` is a node.
    pub n_x: usize,
    /// Gauss–Hermite order for interior slab convolutions.
    pub quad_nodes: usize,
    /// Stored time levels per order-parameter interval, equally spaced in
    /// the xi'-clock. The left endpoint is always stored; higher values add
    /// interior snapshots (each computed in one exact step from the interval
    /// end, not chained) for consumers that need time resolution inside
    /// intervals, such as feedback controls.
    pub sub_levels: usize,
}

impl SpaceGrid {
    /// Defaults sized so Gaussian probes lose less than ~1e-14 of their mass
    /// beyond the trusted region: `x_max = |h| + 8 sqrt(xi'(1))`, 2049
    /// nodes, 64-point quadrature.
    pub fn default_for(m: &MixingFunction) -> Self {
        SpaceGrid {
            x_max: m.h().abs() + 8.0 * m.xi_prime(1.0).sqrt(),
            n_x: 2049,
            quad_nodes: 64,
            sub_levels: 1,
        }
    }

    pub fn validate(&self, m: &MixingFunction) -> Result<()> {
        if !(self.x_max.is_finite() && self.x_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "x_max must be positive and finite, got {}",
                self.x_max
            )));
        }
        if self.n_x < 5 || self.n_x % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "n_x must be odd and at least 5, got {}",
                self.n_x
            )));
        }
        if self.quad_nodes < 8 {
            return Err(Error::InvalidGrid(format!(
                "quad_nodes must be at least 8, got {}",
                self.quad_nodes
            )));
        }
        if self.sub_levels < 1 {
            return Err(Error::InvalidGrid("sub_levels must be at least 1".into()));
        }
        let need = m.h().abs() + 6.0 * m.xi_prime(1.0).sqrt();
        if self.x_max <= need {
            return Err(Error::InvalidGrid(format!(
                "x_max = {} but the grid must cover |h| + 6 sqrt(xi'(1)) = {need}",
                self.x_max
            )));
        }
        Ok(())
    }

    /// Grid spacing `2 x_max / (n_x - 1)`.
    pub fn dx(&self) -> f64 {
        self.x_max / (self.n_x / 2) as f64
    }

    /// Node positions, built symmetrically so `x = 0` is exact and
    /// `xs[i] == -xs[n-1-i]` bitwise.
    pub fn xs(&self) -> Vec<f64> {
        let mid = (self.n_x / 2) as f64;
        let dx = self.dx();
        (0..self.n_x).map(|i| (i as f64 - mid) * dx).collect()
    }
}

/// One stored time level: `psi[i]` and `dpsi[i]` at the grid nodes.
#[derive(Clone, Debug)]
pub struct Level {
    pub t: f64,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
}

/// Solution of one backward solve: levels at every interval endpoint (plus
/// optional interior snapshots) and the terminal time 1.
#[derive(Clone, Debug)]
pub struct PdeSolution {
    model: MixingFunction,
    eta: StepOrderParam,
    boundary: BoundaryKind,
    grid: SpaceGrid,
    xs: Vec<f64>,
    times: Vec<f64>,
    levels: Vec<Level>,
    ext_margin: f64,
}

/// Interpolated read of one level, with the linear-growth extension past the
/// grid edge.
fn probe(x0: f64, dx: f64, x_max: f64, psi: &[f64], dpsi: &[f64], y: f64) -> (f64, f64) {
    if y > x_max {
        (psi[psi.len() - 1] + (y - x_max), 1.0)
    } else if y < -x_max {
        (psi[0] + (-x_max - y), -1.0)
    } else {
        (
            interp::cubic_clamped(x0, dx, psi, y),
            interp::cubic_clamped(x0, dx, dpsi, y),
        )
    }
}

/// One interior slab step at every node: tilt `v`, increment variance
/// `sigma2`, reading the already-computed level (`fpsi`, `fdpsi`).
fn quad_level(
    gh: &GaussHermite,
    xs: &[f64],
    x_max: f64,
    dx: f64,
    v: f64,
    sigma2: f64,
    fpsi: &[f64],
    fdpsi: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let sigma = sigma2.sqrt();
    let x0 = xs[0];
    let nodes = &gh.nodes;
    let weights = &gh.weights;
    let nq = nodes.len();
    let pairs = exec::map_indexed(xs.len(), |ix| {
        let x = xs[ix];
        let mut fv = vec![0.0f64; nq];
        let mut dv = vec![0.0f64; nq];
        for q in 0..nq {
            let (f, d) = probe(x0, dx, x_max, fpsi, fdpsi, x + sigma * nodes[q]);
            fv[q] = f;
            dv[q] = d;
        }
        if v == 0.0 {
            let mut p = 0.0;
            let mut dd = 0.0;
            for q in 0..nq {
                p += weights[q] * fv[q];
                dd += weights[q] * dv[q];
            }
            return (p, dd);
        }
        let mut fbar = 0.0;
        let mut fmax = f64::NEG_INFINITY;
        let mut fmin = f64::INFINITY;
        for q in 0..nq {
            fbar += weights[q] * fv[q];
            fmax = fmax.max(fv[q]);
            fmin = fmin.min(fv[q]);
        }
        if v * (fmax - fmin) < 1.0 {
            // Centered expm1 form: stable down to arbitrarily small tilts,
            // where the max-shifted log-sum-exp would lose O(eps/v).
            let mut s = 0.0;
            let mut num = 0.0;
            let mut den = 0.0;
            for q in 0..nq {
                let e = (v * (fv[q] - fbar)).exp_m1();
                s += weights[q] * e;
                num += weights[q] * (1.0 + e) * dv[q];
                den += weights[q] * (1.0 + e);
            }
            (fbar + s.ln_1p() / v, num / den)
        } else {
            let shift = v * fmax;
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            for q in 0..nq {
                let e = (v * fv[q] - shift).exp();
                s0 += weights[q] * e;
                s1 += weights[q] * e * dv[q];
            }
            ((shift + s0.ln()) / v, s1 / s0)
        }
    });
    pairs.into_iter().unzip()
}

fn build(
    m: &MixingFunction,
    eta: &StepOrderParam,
    bound: BoundaryKind,
    grid: SpaceGrid,
) -> Result<PdeSolution> {
    grid.validate(m)?;
    let xs = grid.xs();
    let dx = grid.dx();
    let gh = GaussHermite::new(grid.quad_nodes);
    let ext_margin = 8.0 * m.xi_prime(1.0).sqrt();

    let term_psi: Vec<f64> = xs.iter().map(|&x| bound.terminal(x)).collect();
    let term_dpsi: Vec<f64> = xs.iter().map(|&x| bound.terminal_slope(x)).collect();
    let mut rev: Vec<Level> = vec![Level {
        t: 1.0,
        psi: term_psi,
        dpsi: term_dpsi,
    }];
    let mut right_psi = rev[0].psi.clone();
    let mut right_dpsi = rev[0].dpsi.clone();

    let segs = eta.segments().to_vec();
    let k = segs.len();
    for j in (0..k).rev() {
        let (t_lo, v) = segs[j];
        let t_hi = if j + 1 < k { segs[j + 1].0 } else { 1.0 };
        let tau_lo = m.xi_prime(t_lo);
        let tau_hi = m.xi_prime(t_hi);
        let span = tau_hi - tau_lo;
        if span > 0.0 && gh.tail_weight(ext_margin / span.sqrt()) > 1e-12 {
            return Err(Error::GridTooSmall(format!(
                "interval [{t_lo}, {t_hi}) has increment std {:.4}; quadrature probes \
                 carry more than 1e-12 weight beyond x_max + margin = {:.4}",
                span.sqrt(),
                grid.x_max + ext_margin
            )));
        }
        let last = j + 1 == k;
        for i in (0..grid.sub_levels).rev() {
            let tau_t = tau_lo + span * i as f64 / grid.sub_levels as f64;
            let t = if i == 0 { t_lo } else { m.xi_prime_inverse(tau_t) };
            let sigma2 = tau_hi - tau_t;
            let (psi, dpsi) = if sigma2 <= 0.0 {
                (right_psi.clone(), right_dpsi.clone())
            } else if last {
                boundary::exact_level(bound, v, sigma2, &xs)
            } else {
                quad_level(&gh, &xs, grid.x_max, dx, v, sigma2, &right_psi, &right_dpsi)
            };
            rev.push(Level { t, psi, dpsi });
        }
        right_psi = rev.last().unwrap().psi.clone();
        right_dpsi = rev.last().unwrap().dpsi.clone();
    }
    rev.reverse();
    let times = rev.iter().map(|l| l.t).collect();
    Ok(PdeSolution {
        model: m.clone(),
        eta: eta.clone(),
        boundary: bound,
        grid,
        xs,
        times,
        levels: rev,
        ext_margin,
    })
}

/// Solve with the ground-state boundary `|x|` and coefficient `gamma`.
pub fn solve_zero_t(
    m: &MixingFunction,
    gamma: &StepOrderParam,
    grid: SpaceGrid,
) -> Result<PdeSolution> {
    build(m, gamma, BoundaryKind::ZeroT, grid)
}

/// Solve with the free-energy boundary `logcosh(beta x)/beta` and effective
/// coefficient `eta = beta * alpha`.
pub fn solve_finite_beta(
    m: &MixingFunction,
    alpha: &DiscreteCdf,
    beta: f64,
    grid: SpaceGrid,
) -> Result<PdeSolution> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    build(m, &alpha.to_eta(beta), BoundaryKind::FiniteBeta { beta }, grid)
}

impl PdeSolution {
    pub fn model(&self) -> &MixingFunction {
        &self.model
    }

    /// The effective step coefficient of the solve (`gamma`, or
    /// `beta * alpha` at finite temperature).
    pub fn eta(&self) -> &StepOrderParam {
        &self.eta
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Stored level times, ascending; `times()[0] == 0` and the last is 1.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// How far past `x_max` the linear extension is trusted.
    pub fn ext_margin(&self) -> f64 {
        self.ext_margin
    }

    /// Index of the latest stored level with time `<= t`.
    pub fn level_at_or_before(&self, t: f64) -> usize {
        let idx = self.times.partition_point(|&s| s <= t + 1e-12);
        idx.saturating_sub(1)
    }

    /// Read `(psi, dpsi)` of a stored level at arbitrary `x`, applying the
    /// linear-growth extension beyond the grid edge. Reads exactly at a grid
    /// node return the stored values.
    pub fn eval_level(&self, level: usize, x: f64) -> (f64, f64) {
        let l = &self.levels[level];
        let dx = self.grid.dx();
        let u = (x - self.xs[0]) / dx;
        let near = u.round();
        if (u - near).abs() < 1e-9 && near >= 0.0 && (near as usize) < self.xs.len() {
            let i = near as usize;
            return (l.psi[i], l.dpsi[i]);
        }
        probe(self.xs[0], dx, self.grid.x_max, &l.psi, &l.dpsi, x)
    }

    /// Read `(psi, dpsi)` at a stored time and arbitrary `x` within the
    /// extension margin.
    pub fn eval(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let idx = self.times.partition_point(|&s| s < t - 1e-9);
        if idx >= self.times.len() || (self.times[idx] - t).abs() > 1e-9 {
            return Err(Error::UnknownSlabTime(t));
        }
        if x.abs() > self.grid.x_max + self.ext_margin {
            return Err(Error::Domain(format!(
                "x = {x} is beyond the trusted extension range {:.4}",
                self.grid.x_max + self.ext_margin
            )));
        }
        Ok(self.eval_level(idx, x))
    }

    /// `Psi(0, h)` — the PDE term of the variational functional.
    pub fn value_at_origin(&self) -> f64 {
        self.eval_level(0, self.model.h()).0
    }

    /// Serializable header describing the solve.
    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "eta": self.eta,
            "boundary": self.boundary,
            "grid": self.grid,
        })
    }

    /// Dump all levels as `t,x,psi,dpsi` CSV rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,psi,dpsi")?;
        for level in &self.levels {
            for (i, &x) in self.xs.iter().enumerate() {
                writeln!(w, "{},{},{},{}", level.t, x, level.psi[i], level.dpsi[i])?;
            }
        }
        Ok(())
    }
}

/// Result of comparing two solves against the a-priori stability bound
/// `sup_x |Psi_a(0,x) - Psi_b(0,x)| <= 2 xi''(1) d(a, b)` with `d` the L1
/// distance between the step coefficients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzReport {
    pub distance: f64,
    pub bound: f64,
    pub max_gap: f64,
    pub pass: bool,
}

/// Solve both coefficients at zero temperature and check the stability
/// bound at `t = 0` within `tol`.
pub fn lipschitz_check(
    m: &MixingFunction,
    a: &StepOrderParam,
    b: &StepOrderParam,
    grid: SpaceGrid,
    tol: f64,
) -> Result<LipschitzReport> {
    let sa = solve_zero_t(m, a, grid)?;
    let sb = solve_zero_t(m, b, grid)?;
    let la = &sa.levels()[0];
    let lb = &sb.levels()[0];
    let mut max_gap = 0.0f64;
    for i in 0..la.psi.len() {
        max_gap = max_gap.max((la.psi[i] - lb.psi[i]).abs());
    }
    let distance = l1_distance(a, b);
    let bound = 2.0 * m.xi_second(1.0) * distance;
    Ok(LipschitzReport {
        distance,
        bound,
        max_gap,
        pass: max_gap <= bound + tol,
    })
}
