//! Monte Carlo verification of the stochastic-control representation of the
//! slab solution.
//!
//! For every admissible control |u| ≤ 1 on [s,1] the controlled diffusion
//!
//!   dY(r) = η(r) ξ″(r) u(r) dr + ξ″(r)^{1/2} dW(r),   Y(s) = x,
//!
//! earns F^s(u,x) = E[Ψ(1, Y(1))] − ½ ∫ₛ¹ η ξ″ E u(r)² dr ≤ Ψ(s,x), with
//! equality for the feedback control u*(r,y) = ∂ₓΨ(r,y). Simulation runs in
//! the ξ′-clock: each step's noise variance is an exact ξ′ increment and a
//! control frozen over a step has its drift integrated exactly, so every
//! simulated policy realizes an admissible control with no discretization
//! error in the dynamics — the inequality is exact and only the feedback
//! policy pays an O(Δ) freeze penalty. The same paths also check the
//! bookkeeping identity
//!
//!   Ψ(s,x) = E[Ψ(1,Y)] − ½∫ η ξ″ E u² dr + ½∫ η ξ″ E(∂ₓΨ(r,Y) − u)² dr,
//!
//! whose last term is the policy's duality gap; agreement cross-validates
//! the PDE and SDE code paths against each other.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::MixingFunction;
use crate::order_param::StepOrderParam;
use crate::pde::PdeSolution;
use crate::rng::{stream_rng, sub_seed};

/// Monte Carlo budget; the seed indexes paths counter-style, so the same
/// seed drives identical noise under every policy (common random numbers).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

/// An admissible control: values bounded by 1 in absolute value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlPolicy {
    /// u ≡ u₀.
    Constant { u: f64 },
    /// u(r, y) = ∂ₓΨ(t_r, y) read from the solution at the nearest stored
    /// slab time t_r ≤ r. The terminal value u(1) is prescribed to be 0, but
    /// left-endpoint stepping never queries it.
    Feedback,
    /// Tabulated u(t, x): row = last `times[i]` ≤ t, piecewise-linear in x
    /// with clamped extrapolation.
    Table { times: Vec<f64>, xs: Vec<f64>, values: Vec<Vec<f64>> },
}

impl ControlPolicy {
    pub fn constant(u: f64) -> Result<Self> {
        let p = ControlPolicy::Constant { u };
        p.validate()?;
        Ok(p)
    }

    pub fn table(times: Vec<f64>, xs: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let p = ControlPolicy::Table { times, xs, values };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let admissible = |u: f64| u.is_finite() && u.abs() <= 1.0;
        match self {
            ControlPolicy::Constant { u } => {
                if !admissible(*u) {
                    return Err(Error::Domain(format!("control value {u} outside [-1, 1]")));
                }
            }
            ControlPolicy::Feedback => {}
            ControlPolicy::Table { times, xs, values } => {
                if times.is_empty() || xs.len() < 2 || values.len() != times.len() {
                    return Err(Error::Domain("empty or ragged control table".into()));
                }
                if times.windows(2).any(|w| w[0] >= w[1])
                    || !(0.0..1.0).contains(&times[0])
                    || *times.last().unwrap() >= 1.0
                {
                    return Err(Error::Domain("table times must increase within [0,1)".into()));
                }
                if xs.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Domain("table x nodes must increase".into()));
                }
                for row in values {
                    if row.len() != xs.len() || row.iter().any(|&u| !admissible(u)) {
                        return Err(Error::Domain(
                            "table rows must match x nodes with values in [-1, 1]".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The control value at (t, y); clamped so interpolation noise can never
    /// leave the admissible set.
    pub fn at(&self, sol: &PdeSolution, t: f64, y: f64) -> f64 {
        match self {
            ControlPolicy::Constant { u } => *u,
            ControlPolicy::Feedback => {
                sol.eval_level(sol.level_at_or_before(t), y).1.clamp(-1.0, 1.0)
            }
            ControlPolicy::Table { times, xs, values } => {
                let row = &values[times.partition_point(|&r| r <= t).saturating_sub(1)];
                if y <= xs[0] {
                    return row[0];
                }
                if y >= *xs.last().unwrap() {
                    return *row.last().unwrap();
                }
                let j = xs.partition_point(|&v| v <= y) - 1;
                let w = (y - xs[j]) / (xs[j + 1] - xs[j]);
                (row[j] + w * (row[j + 1] - row[j])).clamp(-1.0, 1.0)
            }
        }
    }
}

/// The feedback control u*(r,y) = ∂ₓΨ(r,y) attached to a computed solution.
pub fn feedback_policy(sol: &PdeSolution) -> ControlPolicy {
    assert!(!sol.levels().is_empty(), "solution stores no slab levels");
    ControlPolicy::Feedback
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over √n_paths.
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

fn estimate_from(values: &[f64], n_steps: usize, seed: u64) -> McEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1).max(1) as f64;
    McEstimate { mean, std_error: (var / n as f64).sqrt(), n_paths: n, n_steps, seed }
}

/// One Euler step of the ξ′-clock partition: the control is frozen at the
/// left endpoint `t`, the noise variance over the step is exactly `dtau`.
#[derive(Clone, Copy, Debug)]
struct Step {
    t: f64,
    t_next: f64,
    eta: f64,
    dtau: f64,
}

/// Splits [s,1] at the η breakpoints and refines each piece uniformly in
/// ξ′(t), allotting steps proportionally to its share of the total clock.
fn clock_partition(
    m: &MixingFunction,
    eta: &StepOrderParam,
    s: f64,
    n_steps: usize,
) -> Result<Vec<Step>> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("start time {s} outside [0, 1)")));
    }
    if n_steps == 0 {
        return Err(Error::StepCountTooSmall("zero steps".into()));
    }
    let total = m.xi_prime(1.0) - m.xi_prime(s);
    let mut steps: Vec<Step> = Vec::with_capacity(n_steps + eta.segments().len());
    let segs = eta.segments();
    let mut pieces: Vec<(f64, f64, f64)> = Vec::with_capacity(segs.len());
    for (j, &(t, v)) in segs.iter().enumerate() {
        let hi = segs.get(j + 1).map_or(1.0, |seg| seg.0);
        if hi > s {
            pieces.push((t.max(s), hi, v));
        }
    }
    for &(lo, hi, v) in &pieces {
        let tau_lo = m.xi_prime(lo);
        let tau_hi = m.xi_prime(hi);
        let span = tau_hi - tau_lo;
        if span <= 0.0 {
            continue;
        }
        let n = ((n_steps as f64 * span / total).round() as usize).max(1);
        for i in 0..n {
            let ta = tau_lo + span * i as f64 / n as f64;
            let tb = tau_lo + span * (i + 1) as f64 / n as f64;
            let t = if i == 0 { lo } else { m.xi_prime_inverse(ta) };
            let t_next = if i + 1 == n { hi } else { m.xi_prime_inverse(tb) };
            steps.push(Step { t, t_next, eta: v, dtau: tb - ta });
        }
    }
    for step in &steps {
        if step.eta * step.dtau > 0.1 {
            return Err(Error::StepCountTooSmall(format!(
                "drift-dominated step: eta * dtau = {} > 0.1 at t = {}",
                step.eta * step.dtau,
                step.t
            )));
        }
    }
    Ok(steps)
}

fn check_model(m: &MixingFunction, sol: &PdeSolution) -> Result<()> {
    if m != sol.model() {
        return Err(Error::Domain("model does not match the supplied solution".into()));
    }
    Ok(())
}

/// Per-path tallies of the three integrals entering the representation.
struct PathOutcome {
    functional: f64, // Ψ(1,Y) − ½∫ηξ″u²
    gap: f64,        // ½∫ηξ″(∂ₓΨ−u)², trapezoid in the clock
}

/// A clock step with its stored-level indices and noise scale resolved once,
/// so the per-path loop performs no time searches.
struct PreStep {
    t: f64,
    level: usize,
    level_next: usize,
    eta: f64,
    dtau: f64,
    sqrt_dtau: f64,
}

fn resolve_steps(sol: &PdeSolution, steps: &[Step]) -> Vec<PreStep> {
    steps
        .iter()
        .map(|s| PreStep {
            t: s.t,
            level: sol.level_at_or_before(s.t),
            level_next: sol.level_at_or_before(s.t_next),
            eta: s.eta,
            dtau: s.dtau,
            sqrt_dtau: s.dtau.sqrt(),
        })
        .collect()
}

/// Simulates the reward E[Ψ(1,Y) − ½∫ηξ″u²] alone. The policy dispatch is
/// hoisted out of the path loop: a constant control pays only for its noise
/// (its drift schedule and running cost are path-independent), the feedback
/// control reads one stored level per step. Every arm draws exactly one
/// normal per step, so all policies share the same noise per path index.
fn run_functional(
    sol: &PdeSolution,
    policy: &ControlPolicy,
    steps: &[Step],
    x: f64,
    mc: &McParams,
) -> Vec<f64> {
    let boundary = sol.boundary();
    let pre = resolve_steps(sol, steps);
    match policy {
        ControlPolicy::Constant { u } => {
            let u = *u;
            let drift: Vec<f64> = pre.iter().map(|s| s.eta * u * s.dtau).collect();
            let running: f64 = pre.iter().map(|s| 0.5 * s.eta * u * u * s.dtau).sum();
            exec::map_indexed(mc.n_paths, |p| {
                let mut rng = stream_rng(mc.seed, p as u64);
                let mut y = x;
                for (s, d) in pre.iter().zip(&drift) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    y += d + s.sqrt_dtau * z;
                }
                boundary.terminal(y) - running
            })
        }
        ControlPolicy::Feedback => exec::map_indexed(mc.n_paths, |p| {
            let mut rng = stream_rng(mc.seed, p as u64);
            let mut y = x;
            let mut running = 0.0;
            for s in &pre {
                let u = sol.eval_level(s.level, y).1.clamp(-1.0, 1.0);
                let z: f64 = StandardNormal.sample(&mut rng);
                y += s.eta * u * s.dtau + s.sqrt_dtau * z;
                running += 0.5 * s.eta * u * u * s.dtau;
            }
            boundary.terminal(y) - running
        }),
        ControlPolicy::Table { .. } => exec::map_indexed(mc.n_paths, |p| {
            let mut rng = stream_rng(mc.seed, p as u64);
            let mut y = x;
            let mut running = 0.0;
            for s in &pre {
                let u = policy.at(sol, s.t, y);
                let z: f64 = StandardNormal.sample(&mut rng);
                y += s.eta * u * s.dtau + s.sqrt_dtau * z;
                running += 0.5 * s.eta * u * u * s.dtau;
            }
            boundary.terminal(y) - running
        }),
    }
}

fn run_paths(
    sol: &PdeSolution,
    policy: &ControlPolicy,
    steps: &[Step],
    x: f64,
    mc: &McParams,
) -> Vec<PathOutcome> {
    let boundary = sol.boundary();
    let pre = resolve_steps(sol, steps);
    exec::map_indexed(mc.n_paths, |p| {
        let mut rng = stream_rng(mc.seed, p as u64);
        let mut y = x;
        let mut running = 0.0;
        let mut gap = 0.0;
        for s in &pre {
            let slope = sol.eval_level(s.level, y).1;
            let u = match policy {
                ControlPolicy::Feedback => slope.clamp(-1.0, 1.0),
                _ => policy.at(sol, s.t, y).clamp(-1.0, 1.0),
            };
            let d_left = (slope - u) * (slope - u);
            let z: f64 = StandardNormal.sample(&mut rng);
            y += s.eta * u * s.dtau + s.sqrt_dtau * z;
            running += 0.5 * s.eta * u * u * s.dtau;
            let slope_next = sol.eval_level(s.level_next, y).1;
            let d_right = (slope_next - u) * (slope_next - u);
            gap += 0.25 * s.eta * (d_left + d_right) * s.dtau;
        }
        PathOutcome { functional: boundary.terminal(y) - running, gap }
    })
}

/// Estimates F^s(u,x) = E[Ψ(1,Y) − ½∫ηξ″u²dr] by Euler simulation on [s,1].
pub fn simulate_functional(
    m: &MixingFunction,
    sol: &PdeSolution,
    policy: &ControlPolicy,
    s: f64,
    x: f64,
    mc: &McParams,
) -> Result<McEstimate> {
    check_model(m, sol)?;
    policy.validate()?;
    let steps = clock_partition(m, sol.eta(), s, mc.n_steps)?;
    let values = run_functional(sol, policy, &steps, x, mc);
    Ok(estimate_from(&values, mc.n_steps, mc.seed))
}

/// Both sides of the pathwise identity along shared paths: the left side is
/// Ψ(s,x) from the solution, the right side adds the duality gap to the
/// simulated functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub psi: f64,
    pub functional: McEstimate,
    pub gap: McEstimate,
    pub right_side: McEstimate,
    /// right_side.mean − psi; zero within MC error when PDE and SDE agree.
    pub residual: f64,
}

pub fn duality_gap(
    m: &MixingFunction,
    sol: &PdeSolution,
    policy: &ControlPolicy,
    s: f64,
    x: f64,
    mc: &McParams,
) -> Result<DualityReport> {
    check_model(m, sol)?;
    policy.validate()?;
    let psi = sol.eval(s, x)?.0;
    let steps = clock_partition(m, sol.eta(), s, mc.n_steps)?;
    let outcomes = run_paths(sol, policy, &steps, x, mc);
    let f_vals: Vec<f64> = outcomes.iter().map(|o| o.functional).collect();
    let gap_vals: Vec<f64> = outcomes.iter().map(|o| o.gap).collect();
    let right_vals: Vec<f64> = outcomes.iter().map(|o| o.functional + o.gap).collect();
    let right_side = estimate_from(&right_vals, mc.n_steps, mc.seed);
    Ok(DualityReport {
        psi,
        functional: estimate_from(&f_vals, mc.n_steps, mc.seed),
        gap: estimate_from(&gap_vals, mc.n_steps, mc.seed),
        residual: right_side.mean - psi,
        right_side,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheck {
    pub label: String,
    pub estimate: McEstimate,
    /// F(u) ≤ Ψ(s,x) + 3·SE.
    pub bound_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub s: f64,
    pub x: f64,
    pub psi: f64,
    pub checks: Vec<PolicyCheck>,
    pub optimal: McEstimate,
    pub optimal_refined: McEstimate,
    /// Time-discretization allowance for the feedback policy, estimated by
    /// step doubling (first-order extrapolation) plus a small floor.
    pub bias_budget: f64,
    pub optimal_pass: bool,
    pub pass: bool,
}

/// Checks the variational characterization at one probe (s,x): a battery of
/// suboptimal policies must stay below Ψ(s,x) and the feedback policy must
/// attain it within MC error plus the step-doubling bias budget.
pub fn verify_variational(
    m: &MixingFunction,
    sol: &PdeSolution,
    s: f64,
    x: f64,
    mc: &McParams,
) -> Result<VariationalReport> {
    check_model(m, sol)?;
    let psi = sol.eval(s, x)?.0;

    let mut battery: Vec<(String, ControlPolicy)> = [-1.0, 0.0, 0.5, 1.0]
        .iter()
        .map(|&u| (format!("constant {u}"), ControlPolicy::constant(u).unwrap()))
        .collect();
    for i in 0..2 {
        let mut rng = stream_rng(sub_seed(mc.seed, "policy-table", i), 0);
        let times: Vec<f64> = (0..8).map(|j| j as f64 / 8.0).collect();
        let xs: Vec<f64> = (0..25).map(|j| -6.0 + 0.5 * j as f64).collect();
        let values: Vec<Vec<f64>> = times
            .iter()
            .map(|_| xs.iter().map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect())
            .collect();
        battery.push((format!("random table {i}"), ControlPolicy::table(times, xs, values)?));
    }

    let mut checks = Vec::with_capacity(battery.len());
    for (label, policy) in battery {
        let estimate = simulate_functional(m, sol, &policy, s, x, mc)?;
        let bound_pass = estimate.mean <= psi + 3.0 * estimate.std_error;
        checks.push(PolicyCheck { label, estimate, bound_pass });
    }

    let star = feedback_policy(sol);
    let optimal = simulate_functional(m, sol, &star, s, x, mc)?;
    let refined = McParams { n_steps: 2 * mc.n_steps, ..*mc };
    let optimal_refined = simulate_functional(m, sol, &star, s, x, &refined)?;
    let bias_budget = 2.0 * (optimal_refined.mean - optimal.mean).abs() + 1e-4;
    let optimal_pass = (optimal.mean - psi).abs() <= 3.0 * optimal.std_error + bias_budget;
    let pass = optimal_pass && checks.iter().all(|c| c.bound_pass);
    Ok(VariationalReport {
        s,
        x,
        psi,
        checks,
        optimal,
        optimal_refined,
        bias_budget,
        optimal_pass,
        pass,
    })
}
