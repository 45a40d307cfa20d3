//! Exact finite-N ground truth for cross-validation.
//!
//! A disorder sample carries i.i.d. standard Gaussian coupling tensors
//! g_{i₁…i_p} (one per active p, non-symmetrized, summed over all ordered
//! index tuples) and evaluates
//!
//!   H_N(σ) = Σ_p c_p N^{-(p-1)/2} Σ_{i₁…i_p} g_{i₁…i_p} σ_{i₁}⋯σ_{i_p} + h Σ_i σ_i
//!
//! exactly. Exhaustive enumeration over {−1,+1}^N yields the per-sample
//! ground state L_N = max_σ H_N(σ)/N and free energy
//! F_N(β) = (βN)⁻¹ log Σ_σ e^{βH_N(σ)}, linked by the sandwich
//! L_N ≤ F_N(β) ≤ L_N + log2/β. Enumeration walks a Gray code with
//! incremental energy updates (O(N) per flip for p = 2, O(N²) for p = 3,
//! direct re-evaluation for larger p), and disorder averages over samples
//! extrapolate in N to estimate the thermodynamic limit.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::MixingFunction;
use crate::rng::{stream_rng, sub_seed};

/// Total tensor entries allowed per sample.
const ENTRY_BUDGET: u64 = 1_000_000_000;
/// Enumeration budgets: ground state tracks one running maximum, the free
/// energy also exponentiates per configuration.
const MAX_N_GROUND: usize = 28;
const MAX_N_FREE: usize = 24;

/// One draw of the coupling disorder for a fixed system size.
#[derive(Clone, Debug)]
pub struct DisorderSample {
    n: usize,
    h: f64,
    /// (p, c_p N^{-(p-1)/2}, row-major tensor of N^p Gaussians).
    tensors: Vec<(u32, f64, Vec<f64>)>,
}

fn checked_budget(m: &MixingFunction, n: usize) -> Result<()> {
    let mut total: u64 = 0;
    for &(p, _) in m.coeffs() {
        let entries = (n as u64).checked_pow(p).ok_or_else(|| {
            Error::BudgetExceeded(format!("tensor for p = {p} overflows at N = {n}"))
        })?;
        total = total.saturating_add(entries);
    }
    if total > ENTRY_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{total} tensor entries exceed the {ENTRY_BUDGET} budget"
        )));
    }
    Ok(())
}

/// Draws the coupling tensors for (m, N) from counter-derived streams: one
/// stream per active p, so the same seed reproduces the sample exactly.
pub fn sample_disorder(m: &MixingFunction, n: usize, seed: u64) -> Result<DisorderSample> {
    if n == 0 {
        return Err(Error::Domain("system size must be at least 1".into()));
    }
    checked_budget(m, n)?;
    let mut tensors = Vec::with_capacity(m.coeffs().len());
    for &(p, c) in m.coeffs() {
        let mut rng = stream_rng(sub_seed(seed, "coupling-tensor", u64::from(p)), 0);
        let entries = (n as u64).pow(p) as usize;
        let g: Vec<f64> = (0..entries).map(|_| StandardNormal.sample(&mut rng)).collect();
        let scale = c * (n as f64).powf(-0.5 * (f64::from(p) - 1.0));
        tensors.push((p, scale, g));
    }
    Ok(DisorderSample { n, h: m.h(), tensors })
}

impl DisorderSample {
    /// A sample with externally supplied tensors (row-major, N^p entries
    /// each); used by hand-built instances in tests.
    pub fn from_tensors(
        m: &MixingFunction,
        n: usize,
        tensors: &[(u32, Vec<f64>)],
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(tensors.len());
        for (p, g) in tensors {
            let c = m
                .coeffs()
                .iter()
                .find(|&&(q, _)| q == *p)
                .map(|&(_, c)| c)
                .ok_or_else(|| Error::Domain(format!("model has no p = {p} term")))?;
            if g.len() != n.pow(*p) {
                return Err(Error::Domain(format!(
                    "tensor for p = {p} has {} entries, expected {}",
                    g.len(),
                    n.pow(*p)
                )));
            }
            let scale = c * (n as f64).powf(-0.5 * (f64::from(*p) - 1.0));
            out.push((*p, scale, g.clone()));
        }
        Ok(Self { n, h: m.h(), tensors: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The Gaussian part Σ_p c_p N^{-(p-1)/2} Σ g σ⋯σ (no external field).
    pub fn coupling_energy(&self, sigma: &[i8]) -> f64 {
        debug_assert_eq!(sigma.len(), self.n);
        let mut total = 0.0;
        for (p, scale, g) in &self.tensors {
            let mut s = 0.0;
            let mut idx = vec![0usize; *p as usize];
            for &gv in g {
                let mut prod = 1i8;
                for &i in &idx {
                    prod *= sigma[i];
                }
                s += gv * f64::from(prod);
                for d in (0..idx.len()).rev() {
                    idx[d] += 1;
                    if idx[d] < self.n {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            total += scale * s;
        }
        total
    }

    /// H_N(σ): couplings plus the external field term.
    pub fn hamiltonian(&self, sigma: &[i8]) -> f64 {
        let spin_sum: f64 = sigma.iter().map(|&s| f64::from(s)).sum();
        self.coupling_energy(sigma) + self.h * spin_sum
    }

    /// True when H(−σ) = H(σ): no field and only even interaction orders.
    fn spin_flip_symmetric(&self) -> bool {
        self.h == 0.0 && self.tensors.iter().all(|(p, _, _)| p % 2 == 0)
    }
}

/// Precomputed per-spin flip data: flipping spin k changes only the tuples
/// holding k an odd number of times, so
///
///   ΔH(k) = −2 σ_k [ Σ_j B_k(j) σ_j + Σ_{i,j≠k} C_k(i,j) σ_i σ_j + D_k + h ]
///
/// with B from the p = 2 tensor (row k plus column k, diagonal excluded),
/// C and D from the p = 3 tensor; orders p ≥ 4 fall back to direct
/// re-evaluation of their sum.
struct FlipTable<'a> {
    n: usize,
    h: f64,
    pair: Option<Vec<f64>>,
    triple: Option<(Vec<f64>, Vec<f64>)>,
    high: Vec<&'a (u32, f64, Vec<f64>)>,
}

impl<'a> FlipTable<'a> {
    fn new(d: &'a DisorderSample) -> Self {
        let n = d.n;
        let mut pair = None;
        let mut triple = None;
        let mut high = Vec::new();
        for t in &d.tensors {
            let (p, scale, g) = t;
            match p {
                2 => {
                    let mut b = vec![0.0; n * n];
                    for k in 0..n {
                        for j in 0..n {
                            if j != k {
                                b[k * n + j] = scale * (g[k * n + j] + g[j * n + k]);
                            }
                        }
                    }
                    pair = Some(b);
                }
                3 => {
                    let mut c = vec![0.0; n * n * n];
                    let mut diag = vec![0.0; n];
                    for k in 0..n {
                        diag[k] = scale * g[(k * n + k) * n + k];
                        for i in 0..n {
                            for j in 0..n {
                                if i != k && j != k {
                                    c[(k * n + i) * n + j] = scale
                                        * (g[(k * n + i) * n + j]
                                            + g[(i * n + k) * n + j]
                                            + g[(i * n + j) * n + k]);
                                }
                            }
                        }
                    }
                    triple = Some((c, diag));
                }
                _ => high.push(t),
            }
        }
        Self { n, h: d.h, pair, triple, high }
    }

    /// Energy change of flipping spin k from the current configuration.
    fn delta(&self, sigma: &mut [i8], k: usize) -> f64 {
        let n = self.n;
        let sk = f64::from(sigma[k]);
        let mut bracket = self.h;
        if let Some(b) = &self.pair {
            let row = &b[k * n..(k + 1) * n];
            bracket +=
                row.iter().zip(sigma.iter()).map(|(&w, &s)| w * f64::from(s)).sum::<f64>();
        }
        if let Some((c, diag)) = &self.triple {
            let mut s3 = diag[k];
            for i in 0..n {
                let row = &c[(k * n + i) * n..(k * n + i) * n + n];
                let inner: f64 =
                    row.iter().zip(sigma.iter()).map(|(&w, &s)| w * f64::from(s)).sum();
                s3 += f64::from(sigma[i]) * inner;
            }
            bracket += s3;
        }
        let mut delta = -2.0 * sk * bracket;
        if !self.high.is_empty() {
            for (_, scale, g) in &self.high {
                let before = tensor_sum(g, self.n, sigma);
                sigma[k] = -sigma[k];
                let after = tensor_sum(g, self.n, sigma);
                sigma[k] = -sigma[k];
                delta += scale * (after - before);
            }
        }
        delta
    }
}

fn tensor_sum(g: &[f64], n: usize, sigma: &[i8]) -> f64 {
    let p = (g.len() as f64).ln() / (n as f64).ln();
    let p = p.round() as usize;
    let mut idx = vec![0usize; p];
    let mut s = 0.0;
    for &gv in g {
        let mut prod = 1i8;
        for &i in &idx {
            prod *= sigma[i];
        }
        s += gv * f64::from(prod);
        for d in (0..p).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    s
}

/// Gray-code sweep over {−1,+1}^N (or the σ_N = +1 half-cube when `halve`),
/// feeding every configuration's energy to the visitor.
fn enumerate_energies(d: &DisorderSample, halve: bool, mut visit: impl FnMut(&[i8], f64)) {
    let bits = if halve { d.n - 1 } else { d.n };
    let table = FlipTable::new(d);
    let mut sigma = vec![1i8; d.n];
    let mut energy = d.hamiltonian(&sigma);
    visit(&sigma, energy);
    for step in 1..(1u64 << bits) {
        let k = step.trailing_zeros() as usize;
        energy += table.delta(&mut sigma, k);
        sigma[k] = -sigma[k];
        visit(&sigma, energy);
    }
}

/// Exact L_N = max_σ H_N(σ)/N with a maximizing configuration. The σ → −σ
/// shortcut applies only when the Hamiltonian is invariant under it.
pub fn ground_state_exhaustive(d: &DisorderSample) -> Result<(f64, Vec<i8>)> {
    if d.n > MAX_N_GROUND {
        return Err(Error::BudgetExceeded(format!(
            "N = {} exceeds the enumeration budget {MAX_N_GROUND}",
            d.n
        )));
    }
    let halve = d.spin_flip_symmetric();
    let mut best = f64::NEG_INFINITY;
    let mut best_sigma = vec![1i8; d.n];
    enumerate_energies(d, halve, |sigma, energy| {
        if energy > best {
            best = energy;
            best_sigma.copy_from_slice(sigma);
        }
    });
    Ok((best / d.n as f64, best_sigma))
}

/// Exact F_N(β) by a streaming log-sum-exp over all configurations; asserts
/// the per-sample sandwich against the simultaneously tracked maximum.
pub fn free_energy_exhaustive(d: &DisorderSample, beta: f64) -> Result<f64> {
    if d.n > MAX_N_FREE {
        return Err(Error::BudgetExceeded(format!(
            "N = {} exceeds the summation budget {MAX_N_FREE}",
            d.n
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("inverse temperature {beta} must be positive")));
    }
    let halve = d.spin_flip_symmetric();
    let mut max_energy = f64::NEG_INFINITY;
    let mut acc = 0.0;
    enumerate_energies(d, halve, |_, energy| {
        let s = beta * energy;
        let m = beta * max_energy;
        if s > m {
            acc = acc * (m - s).exp() + 1.0;
            max_energy = energy;
        } else {
            acc += (s - m).exp();
        }
    });
    let mut log_sum = beta * max_energy + acc.ln();
    if halve {
        log_sum += std::f64::consts::LN_2;
    }
    let f = log_sum / (beta * d.n as f64);
    let l = max_energy / d.n as f64;
    assert!(
        f >= l && f <= l + std::f64::consts::LN_2 / beta + 1e-9,
        "free energy {f} escaped the sandwich around {l}"
    );
    Ok(f)
}

/// Simulated-annealing schedule: geometric β ramp, restarted from fresh
/// random configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub restarts: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { sweeps: 300, restarts: 4, beta_start: 0.5, beta_end: 20.0 }
    }
}

/// Best H_N(σ)/N found by Metropolis annealing — always a lower bound on
/// L_N. Restarts only ever improve the running best.
pub fn ground_state_anneal(d: &DisorderSample, schedule: &AnnealSchedule, seed: u64) -> f64 {
    let table = FlipTable::new(d);
    let n = d.n;
    let mut best = f64::NEG_INFINITY;
    for restart in 0..schedule.restarts.max(1) {
        let mut rng = stream_rng(sub_seed(seed, "anneal-restart", restart as u64), 0);
        let mut sigma: Vec<i8> =
            (0..n).map(|_| if rand::Rng::gen::<bool>(&mut rng) { 1 } else { -1 }).collect();
        let mut energy = d.hamiltonian(&sigma);
        best = best.max(energy);
        let sweeps = schedule.sweeps.max(2);
        for sweep in 0..sweeps {
            let ramp = sweep as f64 / (sweeps - 1) as f64;
            let beta = schedule.beta_start * (schedule.beta_end / schedule.beta_start).powf(ramp);
            for k in 0..n {
                let delta = table.delta(&mut sigma, k);
                if delta >= 0.0 || rand::Rng::gen::<f64>(&mut rng) < (beta * delta).exp() {
                    sigma[k] = -sigma[k];
                    energy += delta;
                    best = best.max(energy);
                }
            }
        }
    }
    best / n as f64
}

// ---------------------------------------------------------------------------
// Disorder averages.

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample: usize,
    pub seed: u64,
    pub l_n: f64,
    pub f_n: Option<f64>,
}

/// Disorder statistics of L_N (and optionally F_N(β)) at one system size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub n: usize,
    pub beta: Option<f64>,
    pub rows: Vec<SampleRow>,
    pub mean_l: f64,
    pub se_l: f64,
    pub mean_f: Option<f64>,
    pub se_f: Option<f64>,
    pub seed: u64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1).max(1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Enumerates `n_samples` independent disorder draws in parallel and
/// aggregates their exact per-sample statistics.
pub fn disorder_average(
    m: &MixingFunction,
    n: usize,
    n_samples: usize,
    beta: Option<f64>,
    seed: u64,
) -> Result<OracleResult> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one disorder sample".into()));
    }
    let rows: Vec<Result<SampleRow>> = exec::map_indexed(n_samples, |i| {
        let sample_seed = sub_seed(seed, "disorder-sample", i as u64);
        let d = sample_disorder(m, n, sample_seed)?;
        let (l_n, _) = ground_state_exhaustive(&d)?;
        let f_n = match beta {
            Some(b) => Some(free_energy_exhaustive(&d, b)?),
            None => None,
        };
        Ok(SampleRow { sample: i, seed: sample_seed, l_n, f_n })
    });
    let rows: Vec<SampleRow> = rows.into_iter().collect::<Result<_>>()?;
    let (mean_l, se_l) = mean_se(&rows.iter().map(|r| r.l_n).collect::<Vec<_>>());
    let (mean_f, se_f) = if beta.is_some() {
        let fs: Vec<f64> = rows.iter().map(|r| r.f_n.unwrap()).collect();
        let (mf, sf) = mean_se(&fs);
        (Some(mf), Some(sf))
    } else {
        (None, None)
    };
    Ok(OracleResult { n, beta, rows, mean_l, se_l, mean_f, se_f, seed })
}

impl OracleResult {
    /// Plot-ready per-sample table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample,seed,n,l_n,f_n")?;
        for row in &self.rows {
            match row.f_n {
                Some(f) => writeln!(w, "{},{},{},{},{}", row.sample, row.seed, self.n, row.l_n, f)?,
                None => writeln!(w, "{},{},{},{},", row.sample, row.seed, self.n, row.l_n)?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Covariance validation of the sampler.

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub overlap: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n: usize,
    pub n_samples: usize,
    pub rows: Vec<CovarianceRow>,
    pub max_abs_deviation: f64,
    pub pass: bool,
}

/// Monte Carlo check of E X(σ¹)X(σ²) = N ξ(R₁₂) for configuration pairs
/// spanning overlaps {−1, −½, 0, ½, 1}: fresh disorder per sample, fixed
/// pairs, 3-SE acceptance per overlap.
pub fn covariance_check(
    m: &MixingFunction,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    if n == 0 || n > 12 {
        return Err(Error::BudgetExceeded(format!(
            "covariance check runs at N ≤ 12, got {n}"
        )));
    }
    if n_samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let gaussian_part = m.clone().with_field(0.0)?;
    let sigma1 = vec![1i8; n];
    let targets: Vec<(f64, Vec<i8>)> = [-1.0f64, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|&r| {
            let flips = ((n as f64) * (1.0 - r) / 2.0).round() as usize;
            let mut sigma2 = vec![1i8; n];
            for s in sigma2.iter_mut().take(flips) {
                *s = -1;
            }
            let actual = 1.0 - 2.0 * flips as f64 / n as f64;
            (actual, sigma2)
        })
        .collect();

    let products: Vec<Vec<f64>> = exec::map_indexed(n_samples, |i| {
        let d = sample_disorder(&gaussian_part, n, sub_seed(seed, "covariance-sample", i as u64))
            .expect("budget checked above");
        let x1 = d.coupling_energy(&sigma1);
        targets
            .iter()
            .map(|(_, sigma2)| x1 * d.coupling_energy(sigma2) / n as f64)
            .collect()
    });

    let mut rows = Vec::with_capacity(targets.len());
    let mut max_dev = 0.0f64;
    for (j, (overlap, _)) in targets.iter().enumerate() {
        let samples: Vec<f64> = products.iter().map(|row| row[j]).collect();
        let (estimate, std_error) = mean_se(&samples);
        let target = m.xi(*overlap);
        let dev = (estimate - target).abs();
        max_dev = max_dev.max(dev);
        rows.push(CovarianceRow {
            overlap: *overlap,
            estimate,
            std_error,
            target,
            pass: dev <= 3.0 * std_error,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(CovarianceReport { n, n_samples, rows, max_abs_deviation: max_dev, pass })
}

// ---------------------------------------------------------------------------
// Extrapolation in N.

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    /// Fitted thermodynamic-limit value a in E L_N ≈ a + b N^{−ω}.
    pub estimate: f64,
    pub std_error: f64,
    pub slope: f64,
    pub omega: f64,
    /// Set when residuals exceed the per-point errors, i.e. the form does
    /// not describe the data.
    pub degenerate: bool,
}

/// Weighted least squares of mean L_N against N^{−ω}. The exponent is a
/// modeling knob (default 2/3): the limit exists, but no rate is proven, so
/// fits must be read with the exponent stated.
pub fn extrapolate_gse(results: &[OracleResult], omega: f64) -> Result<ExtrapolationFit> {
    let mut points: Vec<(f64, f64, f64)> =
        results.iter().map(|r| (r.n as f64, r.mean_l, r.se_l)).collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    points.dedup_by(|a, b| a.0 == b.0);
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "extrapolation needs at least 3 distinct sizes, got {}",
            points.len()
        )));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("exponent {omega} must be positive")));
    }
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(n, y, se) in &points {
        let w = 1.0 / (se * se).max(1e-30);
        let x = n.powf(-omega);
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let det = sw * swxx - swx * swx;
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::Domain("degenerate design matrix in extrapolation".into()));
    }
    let a = (swxx * swy - swx * swxy) / det;
    let b = (sw * swxy - swx * swy) / det;
    let var_a = swxx / det;
    let degenerate = points.iter().any(|&(n, y, se)| {
        let fit = a + b * n.powf(-omega);
        (y - fit).abs() > 3.0 * se.max(1e-15)
    });
    Ok(ExtrapolationFit { estimate: a, std_error: var_a.sqrt(), slope: b, omega, degenerate })
}
