//! Order parameters.
//!
//! Zero temperature works with nonnegative, nondecreasing, right-continuous
//! step functions γ on [0,1) ([`StepOrderParam`]); finite temperature with
//! discrete probability CDFs α on [0,1] ([`DiscreteCdf`]). The embedding
//! α(s) = γ(s)/β plus an atom at 1 connects the two and drives the β → ∞
//! cross-checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixingFunction;

/// A step function γ on [0,1): value `segments[j].1` on [t_j, t_{j+1}).
///
/// Stored in canonical form: breakpoints strictly increasing starting at 0,
/// adjacent equal values merged. Two equal step functions therefore compare
/// equal structurally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct StepOrderParam {
    segments: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for StepOrderParam {
    type Error = Error;
    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        StepOrderParam::new(&pairs)
    }
}

impl From<StepOrderParam> for Vec<(f64, f64)> {
    fn from(g: StepOrderParam) -> Self {
        g.segments
    }
}

impl StepOrderParam {
    /// Build from `[(t_0 = 0, v_1), (t_1, v_2), ...]` pairs; value v_{j+1}
    /// holds on [t_j, t_{j+1}).
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidOrderParam("no segments".into()));
        }
        if pairs[0].0 != 0.0 {
            return Err(Error::InvalidOrderParam(format!(
                "first breakpoint must be 0, got {}",
                pairs[0].0
            )));
        }
        for (i, &(t, v)) in pairs.iter().enumerate() {
            if !t.is_finite() || !(0.0..1.0).contains(&t) {
                return Err(Error::InvalidOrderParam(format!(
                    "breakpoint {t} at index {i} outside [0, 1)"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidOrderParam(format!(
                    "value {v} at index {i} is negative or not finite"
                )));
            }
            if i > 0 {
                if t <= pairs[i - 1].0 {
                    return Err(Error::InvalidOrderParam(format!(
                        "breakpoints must be strictly increasing at index {i}"
                    )));
                }
                if v < pairs[i - 1].1 {
                    return Err(Error::InvalidOrderParam(format!(
                        "decreasing value at index {i}: {} < {}",
                        v,
                        pairs[i - 1].1
                    )));
                }
            }
        }
        // Canonicalize: merge runs of equal values.
        let mut segments: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for &(t, v) in pairs {
            match segments.last() {
                Some(&(_, last_v)) if last_v == v => {}
                _ => segments.push((t, v)),
            }
        }
        Ok(Self { segments })
    }

    /// γ ≡ 0.
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// γ ≡ v on all of [0,1).
    pub fn constant(v: f64) -> Self {
        Self::new(&[(0.0, v)]).expect("constant step function")
    }

    /// Canonical segments `(t_j, v_{j+1})`.
    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// Number of jumps (k-step γ has k+1 segments).
    pub fn jumps(&self) -> usize {
        self.segments.len() - 1
    }

    /// γ(s) for s ∈ [0, 1); right-continuous.
    pub fn value_at(&self, s: f64) -> f64 {
        assert!((0.0..1.0).contains(&s), "step function argument {s} outside [0,1)");
        let idx = self.segments.partition_point(|&(t, _)| t <= s);
        self.segments[idx - 1].1
    }

    /// γ(1−), the supremum.
    pub fn sup(&self) -> f64 {
        self.segments.last().unwrap().1
    }

    /// ∫₀¹ γ(t) dt.
    pub fn integral(&self) -> f64 {
        self.piecewise_sum(|lo, hi, v| v * (hi - lo))
    }

    /// Σ_j f(t_j, t_{j+1}, v_{j+1}) over the segment partition of [0,1).
    pub fn piecewise_sum(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (j, &(t, v)) in self.segments.iter().enumerate() {
            let hi = self.segments.get(j + 1).map_or(1.0, |&(t2, _)| t2);
            total += f(t, hi, v);
        }
        total
    }

    /// Pointwise min(γ, cap), re-canonicalized.
    pub fn truncate(&self, cap: f64) -> Self {
        assert!(cap >= 0.0);
        let pairs: Vec<(f64, f64)> =
            self.segments.iter().map(|&(t, v)| (t, v.min(cap))).collect();
        Self::new(&pairs).expect("truncation preserves validity")
    }
}

/// L¹ distance d(γ, γ′) = ∫₀¹ |γ − γ′| dt, exact on the merged partition.
pub fn l1_distance(a: &StepOrderParam, b: &StepOrderParam) -> f64 {
    l1_distance_on(a, b, 1.0)
}

/// ∫₀^upto |γ − γ′| dt for upto ∈ (0, 1]; used by restricted-support
/// convergence diagnostics.
pub fn l1_distance_on(a: &StepOrderParam, b: &StepOrderParam, upto: f64) -> f64 {
    assert!((0.0..=1.0).contains(&upto) && upto > 0.0);
    let mut cuts: Vec<f64> = a
        .segments
        .iter()
        .chain(b.segments.iter())
        .map(|&(t, _)| t)
        .filter(|&t| t < upto)
        .collect();
    cuts.push(upto);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        total += (a.value_at(lo) - b.value_at(lo)).abs() * (hi - lo);
    }
    total
}

/// Admissible-value envelope for minimizers of the zero-temperature
/// functional: any minimizing γ satisfies
///
///   γ(s) ≤ √(2 ξ′(1) log 2) / (ξ(1) − ξ(s)),
///
/// which the optimizer uses as a per-segment cap. Diverges as s → 1; returns
/// +∞ when the denominator underflows.
pub fn minimizer_envelope(m: &MixingFunction, s: f64) -> f64 {
    assert!((0.0..1.0).contains(&s), "envelope argument {s} outside [0,1)");
    let denom = m.xi(1.0) - m.xi(s);
    let num = (2.0 * m.xi_prime(1.0) * std::f64::consts::LN_2).sqrt();
    if denom <= f64::MIN_POSITIVE {
        return f64::INFINITY;
    }
    num / denom
}

/// A discrete CDF on [0,1]: atoms (q_i, m_i) with 0 ≤ q_1 < … < q_r ≤ 1 and
/// Σ m_i = 1. Plays the role of the finite-temperature order parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DiscreteCdf {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for DiscreteCdf {
    type Error = Error;
    fn try_from(atoms: Vec<(f64, f64)>) -> Result<Self> {
        DiscreteCdf::new(&atoms)
    }
}

impl From<DiscreteCdf> for Vec<(f64, f64)> {
    fn from(a: DiscreteCdf) -> Self {
        a.atoms
    }
}

impl DiscreteCdf {
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidOrderParam("no atoms".into()));
        }
        for (i, &(q, mass)) in atoms.iter().enumerate() {
            if !q.is_finite() || !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidOrderParam(format!(
                    "atom position {q} at index {i} outside [0, 1]"
                )));
            }
            if !(mass.is_finite() && mass > 0.0) {
                return Err(Error::InvalidOrderParam(format!(
                    "atom mass {mass} at index {i} must be positive"
                )));
            }
            if i > 0 && q <= atoms[i - 1].0 {
                return Err(Error::InvalidOrderParam(format!(
                    "atom positions must be strictly increasing at index {i}"
                )));
            }
        }
        let total: f64 = atoms.iter().map(|&(_, m)| m).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidOrderParam(format!(
                "atom masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms: atoms.to_vec() })
    }

    /// Point mass δ_q.
    pub fn delta(q: f64) -> Result<Self> {
        Self::new(&[(q, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// α(t) = Σ_{q_i ≤ t} m_i, right-continuous.
    pub fn value_at(&self, t: f64) -> f64 {
        assert!((0.0..=1.0).contains(&t));
        self.atoms
            .iter()
            .take_while(|&&(q, _)| q <= t)
            .map(|&(_, m)| m)
            .sum()
    }

    /// Largest support point: inf{t : α(t) = 1}.
    pub fn q_star(&self) -> f64 {
        self.atoms.last().unwrap().0
    }

    /// The step function β·α restricted to [0,1) (an atom at exactly 1 does
    /// not appear; it only affects the terminal condition, which is fixed).
    pub fn to_eta(&self, beta: f64) -> StepOrderParam {
        assert!(beta > 0.0);
        let mut pairs: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        let mut cum = 0.0;
        for &(q, m) in &self.atoms {
            if q >= 1.0 {
                break;
            }
            cum += m;
            if q == 0.0 {
                pairs[0].1 = beta * cum;
            } else {
                pairs.push((q, beta * cum));
            }
        }
        StepOrderParam::new(&pairs).expect("beta*alpha is a valid step function")
    }
}

/// The finite-temperature image of a zero-temperature order parameter:
/// α(s) = γ(s)/β on [0,1) with the remaining mass as an atom at 1.
/// Requires β > γ(1−).
pub fn embed_finite_beta(gamma: &StepOrderParam, beta: f64) -> Result<DiscreteCdf> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidOrderParam(format!("beta {beta} must be positive")));
    }
    if beta <= gamma.sup() {
        return Err(Error::InvalidOrderParam(format!(
            "beta {beta} must exceed sup gamma = {}",
            gamma.sup()
        )));
    }
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut prev = 0.0;
    for &(t, v) in gamma.segments() {
        if v > prev {
            atoms.push((t, (v - prev) / beta));
            prev = v;
        }
    }
    atoms.push((1.0, 1.0 - prev / beta));
    DiscreteCdf::new(&atoms)
}
