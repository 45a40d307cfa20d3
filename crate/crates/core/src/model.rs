//! Mixing functions of mixed p-spin models.
//!
//! A mixture is a finite list of (p, c_p) pairs with p ≥ 2 plus an external
//! field h. The covariance structure of the Gaussian Hamiltonian enters all
//! other modules only through
//!
//!   ξ(s) = Σ_p c_p² s^p,   s ∈ [-1, 1],
//!
//! and its first two derivatives. The Sherrington–Kirkpatrick model is the
//! single entry (2, 1/√2), i.e. ξ(s) = s²/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct MixingFunction {
    /// (p, c_p) pairs, sorted by p, each c_p nonzero.
    coeffs: Vec<(u32, f64)>,
    /// External field; enters the functional as the spatial evaluation point.
    h: f64,
}

/// Wire form: `coeffs = [[p, c_p], ...]`, `h = real`.
#[derive(Serialize, Deserialize)]
struct RawModel {
    coeffs: Vec<(u32, f64)>,
    h: f64,
}

impl TryFrom<RawModel> for MixingFunction {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        MixingFunction::new(&raw.coeffs, raw.h)
    }
}

impl From<MixingFunction> for RawModel {
    fn from(m: MixingFunction) -> Self {
        RawModel { coeffs: m.coeffs, h: m.h }
    }
}

impl MixingFunction {
    pub fn new(coeffs: &[(u32, f64)], h: f64) -> Result<Self> {
        let mut coeffs: Vec<(u32, f64)> = coeffs.to_vec();
        coeffs.sort_by_key(|&(p, _)| p);
        for window in coeffs.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::InvalidModel(format!(
                    "duplicate entry for p = {}",
                    window[0].0
                )));
            }
        }
        for &(p, c) in &coeffs {
            if p < 2 {
                return Err(Error::InvalidModel(format!("p must be >= 2, got {p}")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidModel(format!("c_{p} is not finite")));
            }
        }
        if !coeffs.iter().any(|&(_, c)| c != 0.0) {
            return Err(Error::InvalidModel("no nonzero coefficient".into()));
        }
        if !h.is_finite() {
            return Err(Error::InvalidModel("h is not finite".into()));
        }
        coeffs.retain(|&(_, c)| c != 0.0);
        Ok(Self { coeffs, h })
    }

    /// Sherrington–Kirkpatrick: ξ(s) = s²/2, h = 0.
    pub fn sk() -> Self {
        Self::new(&[(2, std::f64::consts::FRAC_1_SQRT_2)], 0.0).unwrap()
    }

    /// Pure p-spin with unit coefficient.
    pub fn pure(p: u32) -> Result<Self> {
        Self::new(&[(p, 1.0)], 0.0)
    }

    pub fn with_field(mut self, h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidModel("h is not finite".into()));
        }
        self.h = h;
        Ok(self)
    }

    pub fn coeffs(&self) -> &[(u32, f64)] {
        &self.coeffs
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn check_domain(s: f64) {
        assert!(
            s.abs() <= 1.0 + 1e-12,
            "mixing function argument {s} outside [-1, 1]"
        );
    }

    /// ξ(s) = Σ_p c_p² s^p.
    pub fn xi(&self, s: f64) -> f64 {
        Self::check_domain(s);
        self.coeffs
            .iter()
            .map(|&(p, c)| c * c * s.powi(p as i32))
            .sum()
    }

    /// ξ′(s) = Σ_p p c_p² s^{p-1}.
    pub fn xi_prime(&self, s: f64) -> f64 {
        Self::check_domain(s);
        self.coeffs
            .iter()
            .map(|&(p, c)| f64::from(p) * c * c * s.powi(p as i32 - 1))
            .sum()
    }

    /// ξ″(s) = Σ_p p(p-1) c_p² s^{p-2}.
    pub fn xi_second(&self, s: f64) -> f64 {
        Self::check_domain(s);
        self.coeffs
            .iter()
            .map(|&(p, c)| f64::from(p) * f64::from(p - 1) * c * c * s.powi(p as i32 - 2))
            .sum()
    }

    /// Invert ξ′ on [0, 1]: the ξ′-clock used by the PDE and SDE time grids.
    ///
    /// Requires τ ∈ [0, ξ′(1)]; ξ′ is strictly increasing there (all c_p² ≥ 0
    /// with at least one positive), so bisection is safe.
    pub fn xi_prime_inverse(&self, tau: f64) -> f64 {
        let top = self.xi_prime(1.0);
        assert!(
            (-1e-12..=top * (1.0 + 1e-12) + 1e-300).contains(&tau),
            "tau {tau} outside [0, xi'(1) = {top}]"
        );
        if tau <= 0.0 {
            return 0.0;
        }
        if tau >= top {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.xi_prime(mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * 2.0 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Σ_p 2^p c_p², the classical summability diagnostic for mixtures.
    pub fn series_weight(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|&(p, c)| 2f64.powi(p as i32) * c * c)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sk_values() {
        let m = MixingFunction::sk();
        assert_abs_diff_eq!(m.xi(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi(-1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi_prime(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi_second(0.3), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pure_cubic_values() {
        let m = MixingFunction::pure(3).unwrap();
        assert_abs_diff_eq!(m.xi(0.5), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi_prime(1.0), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi_second(1.0), 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.xi(-1.0), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = MixingFunction::new(&[(2, 0.6), (3, 0.5), (4, 0.3)], 0.2).unwrap();
        let d = 1e-5;
        for i in 0..=8 {
            let s = 0.1 + 0.1 * f64::from(i);
            let fd1 = (m.xi(s + d) - m.xi(s - d)) / (2.0 * d);
            let fd2 = (m.xi_prime(s + d) - m.xi_prime(s - d)) / (2.0 * d);
            assert_abs_diff_eq!(m.xi_prime(s), fd1, epsilon = 1e-8);
            assert_abs_diff_eq!(m.xi_second(s), fd2, epsilon = 1e-8);
        }
    }

    #[test]
    fn derivatives_monotone_on_unit_interval() {
        let m = MixingFunction::new(&[(2, 0.5), (5, 0.8)], 0.0).unwrap();
        let mut prev = (0.0, 0.0);
        for i in 0..=100 {
            let s = f64::from(i) / 100.0;
            let d = (m.xi_prime(s), m.xi_second(s));
            assert!(d.0 >= prev.0 && d.1 >= prev.1, "derivative decreased at s={s}");
            assert!(d.0 >= 0.0 && d.1 >= 0.0);
            prev = d;
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            MixingFunction::new(&[], 0.0),
            Err(Error::InvalidModel(msg)) if msg.contains("no nonzero coefficient")
        ));
        assert!(matches!(
            MixingFunction::new(&[(2, 0.0)], 0.0),
            Err(Error::InvalidModel(msg)) if msg.contains("no nonzero coefficient")
        ));
        assert!(matches!(
            MixingFunction::new(&[(1, 1.0)], 0.0),
            Err(Error::InvalidModel(msg)) if msg.contains(">= 2")
        ));
        assert!(matches!(
            MixingFunction::new(&[(2, 1.0), (2, 0.5)], 0.0),
            Err(Error::InvalidModel(msg)) if msg.contains("duplicate")
        ));
        assert!(MixingFunction::new(&[(2, 1.0)], f64::NAN).is_err());
    }

    #[test]
    fn xi_prime_inverse_roundtrip() {
        let m = MixingFunction::new(&[(2, 0.4), (3, 0.7)], 0.0).unwrap();
        for i in 0..=20 {
            let tau = m.xi_prime(1.0) * f64::from(i) / 20.0;
            let t = m.xi_prime_inverse(tau);
            assert_abs_diff_eq!(m.xi_prime(t), tau, epsilon = 1e-12);
        }
    }

    #[test]
    fn series_weight_sk() {
        assert_abs_diff_eq!(MixingFunction::sk().series_weight(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let m = MixingFunction::new(&[(3, 1.0)], 0.5).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: MixingFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        let bad: std::result::Result<MixingFunction, _> =
            serde_json::from_str(r#"{"coeffs":[[1,1.0]],"h":0.0}"#);
        assert!(bad.is_err());
    }
}
