//! Model parameters, regime classification and derived constants.
//!
//! The nonlinear term couples the pair (|ψ⟩, |φ⟩) through their inner
//! products. Eight real couplings enter: the complex `g = a + ib`, the
//! anti-Hermitian pair `μ`, `λ`, and the diagonal weights `α₁, α₂, β₁, β₂`.
//! The norm `N = ⟨ψ|ψ⟩ + ⟨φ|φ⟩` is conserved by the dynamics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, I};

/// Raw model couplings as read from a JSON config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub lambda: f64,
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub beta2: f64,
    #[serde(rename = "N")]
    pub n_norm: f64,
}

impl ModelParams {
    /// Parameters with only `g`, `μ`, `λ` and `N` set.
    pub fn new(a: f64, b: f64, mu: f64, lambda: f64, n_norm: f64) -> Self {
        Self {
            a,
            b,
            mu,
            lambda,
            alpha1: 0.0,
            alpha2: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            n_norm,
        }
    }

    pub fn with_diagonal(mut self, alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Self {
        self.alpha1 = alpha1;
        self.alpha2 = alpha2;
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn validate(self) -> Result<ValidatedParams> {
        let fields = [
            ("a", self.a),
            ("b", self.b),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("N", self.n_norm),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} = {v} is not finite")));
        }
        if self.n_norm <= 0.0 {
            return Err(Error::InvalidNorm(self.n_norm));
        }
        let regime = Regime {
            bounded: self.b > 0.0 && -self.b < self.mu && self.mu < 0.0,
            original_model: self.mu == 0.0,
            case2: self.b + self.mu == 0.0,
            negative_b: self.b < 0.0,
        };
        Ok(ValidatedParams {
            params: self,
            regime,
        })
    }

    pub fn g(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    /// Right-hand side `d/dt (|ψ⟩, |φ⟩)` of the full nonlinear equations of
    /// motion, with `H` diagonal in the supplied energy basis.
    pub fn state_derivative(
        &self,
        energies: &[f64],
        psi: &[Complex64],
        phi: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let pp = inner(psi, psi).re;
        let qq = inner(phi, phi).re;
        let gamma = inner(phi, psi);
        let g = self.g();
        let m11 = Complex64::new(self.alpha1 * pp + self.alpha2 * qq, self.mu * qq);
        let m22 = Complex64::new(self.beta1 * pp + self.beta2 * qq, -self.mu * pp);
        let m12 = (g + self.lambda) * gamma;
        let m21 = (g.conj() - self.lambda) * gamma.conj();
        let dpsi = energies
            .iter()
            .zip(psi.iter().zip(phi))
            .map(|(&e, (&x, &y))| -I * ((e + m11) * x + m12 * y))
            .collect();
        let dphi = energies
            .iter()
            .zip(psi.iter().zip(phi))
            .map(|(&e, (&x, &y))| -I * (m21 * x + (e + m22) * y))
            .collect();
        (dpsi, dphi)
    }
}

/// Regime flags attached by [`ModelParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Regime {
    /// `b > 0` and `-b < μ < 0`: the effective potential confines κ.
    pub bounded: bool,
    /// `μ = 0`.
    pub original_model: bool,
    /// `b + μ = 0`; excluded from the s-domain machinery.
    pub case2: bool,
    /// `b < 0` is accepted but flagged; nothing is claimed about it.
    pub negative_b: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    params: ModelParams,
    regime: Regime,
}

impl ValidatedParams {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        if self.regime.case2 {
            return Err(Error::UnsupportedReparameterization);
        }
        let m = &self.params;
        let n = m.n_norm;
        let alpha = m.alpha1 + m.alpha2;
        let beta = m.beta1 + m.beta2;
        Ok(DerivedParams {
            g: m.g(),
            p: m.mu / (m.b + m.mu),
            s_slope: -(m.b + m.mu),
            alpha,
            beta,
            alpha_p: m.alpha1 - m.alpha2,
            beta_p: m.beta1 - m.beta2,
            theta: 0.5 * n * (2.0 * m.lambda + alpha - beta),
            theta_prime: Complex64::new(n * m.lambda, -n * m.mu),
            q: Complex64::new(0.5 * n * alpha, 0.5 * n * m.mu),
            q_prime: Complex64::new(0.5 * n * beta, -0.5 * n * m.mu),
        })
    }
}

impl std::ops::Deref for ValidatedParams {
    type Target = ModelParams;

    fn deref(&self) -> &ModelParams {
        &self.params
    }
}

/// Constants derived from a validated parameter set with `b + μ ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub g: Complex64,
    /// Potential exponent `μ/(b+μ)`.
    pub p: f64,
    /// `ds/dt = -(b+μ)`.
    pub s_slope: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_p: f64,
    pub beta_p: f64,
    /// Phase rate of `γ` at the fixed point, `(N/2)(2λ+α-β)`.
    pub theta: f64,
    /// `N(λ - iμ)`.
    pub theta_prime: Complex64,
    /// `(N/2)(α + iμ)`.
    pub q: Complex64,
    /// `(N/2)(β - iμ)`.
    pub q_prime: Complex64,
}

impl DerivedParams {
    pub fn s_of_t(&self, t: f64) -> f64 {
        self.s_slope * t
    }

    pub fn t_of_s(&self, s: f64) -> f64 {
        s / self.s_slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_pneg1() {
        let v = ModelParams::new(0.0, 1.0, -0.5, 0.0, 5.0).validate().unwrap();
        assert!(v.regime().bounded);
        let d = v.derive().unwrap();
        assert_eq!(d.p, -1.0);
        assert_eq!(d.s_slope, -0.5);
    }

    #[test]
    fn original_model_flag() {
        let v = ModelParams::new(0.0, 1.0, 0.0, 0.0, 1.0).validate().unwrap();
        assert!(v.regime().original_model);
        assert!(!v.regime().bounded);
        let d = v.derive().unwrap();
        assert_eq!(d.p, 0.0);
        assert_eq!(d.s_slope, -1.0);
    }

    #[test]
    fn case2_refuses_derivation() {
        let v = ModelParams::new(0.0, 1.0, -1.0, 0.0, 1.0).validate().unwrap();
        assert!(v.regime().case2);
        assert_eq!(v.derive(), Err(Error::UnsupportedReparameterization));
    }

    #[test]
    fn theta_vanishes_without_lambda_and_equal_diagonals() {
        let d = ModelParams::new(0.3, 1.0, -0.5, 0.0, 5.0)
            .with_diagonal(0.25, 0.5, 0.5, 0.25)
            .validate()
            .unwrap()
            .derive()
            .unwrap();
        assert_eq!(d.alpha, d.beta);
        assert_eq!(d.theta, 0.0);
    }

    #[test]
    fn rejects_bad_norm_and_nan() {
        assert_eq!(
            ModelParams::new(0.0, 1.0, -0.5, 0.0, 0.0).validate(),
            Err(Error::InvalidNorm(0.0))
        );
        assert!(matches!(
            ModelParams::new(f64::NAN, 1.0, -0.5, 0.0, 1.0).validate(),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            ModelParams::new(0.0, 1.0, -0.5, 0.0, f64::INFINITY).validate(),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn negative_b_is_flagged() {
        let v = ModelParams::new(0.0, -1.0, 0.5, 0.0, 1.0).validate().unwrap();
        assert!(v.regime().negative_b);
        assert!(!v.regime().bounded);
    }

    #[test]
    fn json_schema_uses_capital_n_and_rejects_unknown_keys() {
        let p: ModelParams = serde_json::from_str(
            r#"{"a":1,"b":1,"mu":-0.5,"lambda":0.2,"alpha1":0,"alpha2":0,"beta1":0,"beta2":0,"N":5}"#,
        )
        .unwrap();
        assert_eq!(p.n_norm, 5.0);
        assert!(serde_json::from_str::<ModelParams>(
            r#"{"a":1,"b":1,"mu":-0.5,"lambda":0.2,"N":5,"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn norm_sum_is_conserved_by_the_equations_of_motion() {
        let m = ModelParams::new(0.7, 1.1, -0.4, 0.3, 2.0).with_diagonal(0.1, -0.2, 0.3, 0.05);
        let e = [0.0, 0.5, 1.3];
        let psi = [
            Complex64::new(0.4, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.3, -0.3),
        ];
        let phi = [
            Complex64::new(0.1, 0.6),
            Complex64::new(0.2, 0.2),
            Complex64::new(-0.5, 0.1),
        ];
        let (dpsi, dphi) = m.state_derivative(&e, &psi, &phi);
        let d_norm = 2.0 * (inner(&psi, &dpsi).re + inner(&phi, &dphi).re);
        assert!(d_norm.abs() < 1e-14, "{d_norm}");
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn s_t_round_trip(b in 0.01f64..10.0, frac in 0.01f64..0.99, t in -1e6f64..1e6) {
            let d = ModelParams::new(0.0, b, -frac * b, 0.0, 1.0).validate().unwrap().derive().unwrap();
            let back = d.t_of_s(d.s_of_t(t));
            prop_assert!((back - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1e-300));
        }

        #[test]
        fn negative_p_iff_bounded(b in 0.01f64..10.0, mu in -20.0f64..20.0) {
            let v = ModelParams::new(0.0, b, mu, 0.0, 1.0).validate().unwrap();
            prop_assume!(!v.regime().case2);
            let d = v.derive().unwrap();
            prop_assert_eq!(d.p < 0.0, v.regime().bounded);
        }
    }
}
