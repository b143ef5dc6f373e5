//! Exact state vectors when the reduced dynamics sits at the bottom of the
//! potential (`τ = 0`, `δ = δ₀`).
//!
//! Both vectors are built from two orthogonal vectors `|A⟩`, `|B⟩` that evolve
//! under `H` alone:
//!
//! ```text
//! |ψ⟩ = e^{-i(N/2)(α+λ)t} (e^{iσt}|A⟩ + e^{-iσt}|B⟩)
//! |φ⟩ = i/((g+λ)γ₀) e^{-i(N/2)(β-λ)t} (ν₊e^{iσt}|A⟩ + ν₋e^{-iσt}|B⟩)
//! ```

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr, I};
use crate::params::{DerivedParams, ModelParams, ValidatedParams};

/// Eigenvalues of `H`; states are coefficient vectors in this eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBasis {
    energies: Vec<f64>,
}

impl EnergyBasis {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::BasisTooSmall(energies.len()));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidInput(format!("energy {e} is not finite")));
        }
        Ok(Self { energies })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `|v(t)⟩ = Σ e^{-iEₙt} vₙ |n⟩`.
    pub fn propagate(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        self.energies
            .iter()
            .zip(v)
            .map(|(&e, &x)| x * Complex64::from_polar(1.0, -e * t))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointData {
    pub kappa0: f64,
    pub delta0: f64,
    pub c: f64,
    pub gamma0: f64,
    pub p: f64,
}

/// Bottom of the potential: `δ₀ = -μN²/(4b)`, `c = -(4/p)δ₀^{1-p}`.
pub fn fixed_point(params: &ValidatedParams) -> Result<FixedPointData> {
    if !params.regime().bounded {
        return Err(Error::Regime(format!("b = {}, mu = {}", params.b, params.mu)));
    }
    let p = params.derive()?.p;
    let n = params.n_norm;
    let delta0 = -params.mu * n * n / (4.0 * params.b);
    Ok(FixedPointData {
        kappa0: delta0.ln(),
        delta0,
        c: -(4.0 / p) * delta0.powf(1.0 - p),
        gamma0: delta0.sqrt(),
        p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalConstants {
    pub nu_plus: Complex64,
    pub nu_minus: Complex64,
    pub sigma: f64,
    pub chi_plus: f64,
    pub chi_minus: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    /// Phase rate of `⟨φ|ψ⟩`.
    pub theta: f64,
    pub theta_prime: Complex64,
}

/// `σ² = (N²/4)(-(μ/b)a² - μ²(1+b/μ) + λ²(1+μ/b))`.
pub fn sigma_squared(m: &ModelParams) -> f64 {
    let n = m.n_norm;
    let r = m.mu / m.b;
    0.25 * n * n
        * (-r * m.a * m.a - m.mu * m.mu * (1.0 + m.b / m.mu) + m.lambda * m.lambda * (1.0 + r))
}

fn s_difference(m: &ModelParams, sigma: f64) -> f64 {
    let r = m.mu / m.b;
    m.n_norm * m.n_norm / (4.0 * sigma) * (m.lambda * (1.0 + r) + m.a * r)
}

pub fn modal_constants(params: &ValidatedParams, fp: &FixedPointData) -> Result<ModalConstants> {
    let own = fixed_point(params)?;
    if (own.delta0 - fp.delta0).abs() > 1e-12 * own.delta0 {
        return Err(Error::InternalConsistency(format!(
            "fixed point delta0 = {} does not belong to these parameters ({})",
            fp.delta0, own.delta0
        )));
    }
    let d = params.derive()?;
    let sigma_sq = sigma_squared(params);
    if !(sigma_sq > 0.0) {
        return Err(Error::DegenerateFrequency(sigma_sq));
    }
    let sigma = sigma_sq.sqrt();
    let n = params.n_norm;
    let chi_plus = -0.5 * params.lambda * n + sigma;
    let chi_minus = -0.5 * params.lambda * n - sigma;
    let diff = s_difference(params, sigma);
    let s_plus = 0.5 * (0.5 * n + diff);
    let s_minus = 0.5 * (0.5 * n - diff);
    if !(s_plus > 0.0 && s_minus > 0.0) {
        return Err(Error::Inconsistency { s_plus, s_minus });
    }
    Ok(ModalConstants {
        nu_plus: Complex64::new(-0.5 * params.mu * n, chi_plus),
        nu_minus: Complex64::new(-0.5 * params.mu * n, chi_minus),
        sigma,
        chi_plus,
        chi_minus,
        s_plus,
        s_minus,
        theta: d.theta,
        theta_prime: d.theta_prime,
    })
}

/// Residuals of the algebraic conditions behind [`ModalConstants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalChecks {
    /// Real part of `ν₊*S₊ + ν₋*S₋ = iγ₀²(g*+λ)`.
    pub overlap_real: f64,
    /// Imaginary part of the same condition.
    pub overlap_imag: f64,
    /// `|ν₊|²S₊ + |ν₋|²S₋ = (N/2)|g+λ|²γ₀²`.
    pub phi_norm: f64,
    /// Gap between the two expressions for `S₊ - S₋`; `None` when `λ = 0`.
    pub alt_difference_gap: Option<f64>,
    /// `(4/N²)σ² - [λ(1+μ/b) + aμ/b]²`, positive iff `|S₊ - S₋| < N/2`.
    pub positivity_margin: f64,
    /// The same margin in the factored form `-(μ/b)(1+μ/b)(a+λ)² - μ(μ+b)`.
    pub positivity_factored: f64,
    /// Largest `|ν² + iN(λ-iμ)ν + (g+λ)(g*-λ)γ₀²|` over both roots.
    pub root_residual: f64,
}

impl ModalChecks {
    pub fn max_residual(&self) -> f64 {
        [
            self.overlap_real.abs(),
            self.overlap_imag.abs(),
            self.phi_norm.abs(),
            self.alt_difference_gap.unwrap_or(0.0),
            self.root_residual,
            (self.positivity_margin - self.positivity_factored).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Second expression for `S₊ - S₋`, obtained from the `⟨φ|φ⟩` condition.
pub fn alternate_s_difference(m: &ModelParams, sigma: f64) -> Option<f64> {
    if m.lambda == 0.0 {
        return None;
    }
    let (n2, a, b, mu, l) = (m.n_norm * m.n_norm, m.a, m.b, m.mu, m.lambda);
    Some(
        (0.5 * n2 * (mu * mu + l * l)
            + 2.0 * sigma * sigma
            + 0.5 * n2 * (mu / b) * (a * a + b * b + 2.0 * l * a + l * l))
            / (4.0 * l * sigma),
    )
}

pub fn modal_checks(
    params: &ValidatedParams,
    fp: &FixedPointData,
    mc: &ModalConstants,
) -> ModalChecks {
    let g = params.g();
    let (n, l, mu, b, a) = (params.n_norm, params.lambda, params.mu, params.b, params.a);
    let g2 = fp.gamma0 * fp.gamma0;
    let lhs = mc.nu_plus.conj() * mc.s_plus + mc.nu_minus.conj() * mc.s_minus;
    let rhs = I * g2 * (g.conj() + l);
    let phi_norm = mc.nu_plus.norm_sqr() * mc.s_plus + mc.nu_minus.norm_sqr() * mc.s_minus
        - 0.5 * n * (g + l).norm_sqr() * g2;
    let diff = mc.s_plus - mc.s_minus;
    let alt_difference_gap = alternate_s_difference(params, mc.sigma).map(|x| (x - diff).abs());
    let r = mu / b;
    let bracket = l * (1.0 + r) + a * r;
    let positivity_margin = 4.0 / (n * n) * mc.sigma * mc.sigma - bracket * bracket;
    let positivity_factored = -r * (1.0 + r) * (a + l).powi(2) - mu * (mu + b);
    let constant = (g + l) * (g.conj() - l) * g2;
    let lin = I * n * Complex64::new(l, -mu);
    let root = |nu: Complex64| (nu * nu + lin * nu + constant).norm();
    ModalChecks {
        overlap_real: lhs.re - rhs.re,
        overlap_imag: lhs.im - rhs.im,
        phi_norm,
        alt_difference_gap,
        positivity_margin,
        positivity_factored,
        root_residual: root(mc.nu_plus).max(root(mc.nu_minus)),
    }
}

/// Seeded `|A⟩`, `|B⟩` with `⟨A|B⟩ = 0`, `⟨A|A⟩ = S₊`, `⟨B|B⟩ = S₋`.
pub fn build_ab(
    mc: &ModalConstants,
    basis: &EnergyBasis,
    seed: u64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let dim = basis.dim();
    if dim < 2 {
        return Err(Error::BasisTooSmall(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let a = normalized(draw(&mut rng));
    let b = loop {
        let mut v = draw(&mut rng);
        // two passes of classical Gram–Schmidt
        for _ in 0..2 {
            let proj = inner(&a, &v);
            for (x, y) in v.iter_mut().zip(&a) {
                *x -= proj * y;
            }
        }
        if norm_sqr(&v) > 1e-6 {
            break normalized(v);
        }
    };
    let (ka, kb) = (mc.s_plus.sqrt(), mc.s_minus.sqrt());
    Ok((
        a.into_iter().map(|x| x * ka).collect(),
        b.into_iter().map(|x| x * kb).collect(),
    ))
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = norm_sqr(&v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Coefficients of `|ψ⟩`, `|φ⟩` in the energy basis at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVectorPair {
    pub t: f64,
    pub psi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
}

impl StateVectorPair {
    pub fn psi_norm_sqr(&self) -> f64 {
        norm_sqr(&self.psi)
    }

    pub fn phi_norm_sqr(&self) -> f64 {
        norm_sqr(&self.phi)
    }

    /// `γ = ⟨φ|ψ⟩`.
    pub fn gamma(&self) -> Complex64 {
        inner(&self.phi, &self.psi)
    }

    /// `⟨ψ|ψ⟩⟨φ|φ⟩ - |⟨φ|ψ⟩|²`.
    pub fn schwarz(&self) -> f64 {
        self.psi_norm_sqr() * self.phi_norm_sqr() - self.gamma().norm_sqr()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite complex vectors serialize")
    }
}

/// Evolution at the fixed point for one choice of `|A⟩`, `|B⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleSolution {
    pub params: ModelParams,
    pub derived: DerivedParams,
    pub fixed_point: FixedPointData,
    pub modes: ModalConstants,
    pub basis: EnergyBasis,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// Constant phase `ϑ` in `⟨φ|ψ⟩ = γ₀e^{iϑ}e^{-iθt}`.
    pub gamma_phase: f64,
}

impl SimpleSolution {
    /// Solution with `|A⟩`, `|B⟩` drawn from `seed`.
    pub fn seeded(params: &ValidatedParams, basis: EnergyBasis, seed: u64) -> Result<Self> {
        let fp = fixed_point(params)?;
        let mc = modal_constants(params, &fp)?;
        let (a, b) = build_ab(&mc, &basis, seed)?;
        Ok(Self {
            params: *params.params(),
            derived: params.derive()?,
            fixed_point: fp,
            modes: mc,
            basis,
            a,
            b,
            gamma_phase: 0.0,
        })
    }

    /// Solution from caller-supplied `|A⟩`, `|B⟩`, which must satisfy the
    /// orthogonality and normalization conditions to within `tol`.
    pub fn with_vectors(
        params: &ValidatedParams,
        basis: EnergyBasis,
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        tol: f64,
    ) -> Result<Self> {
        let fp = fixed_point(params)?;
        let mc = modal_constants(params, &fp)?;
        if a.len() != basis.dim() || b.len() != basis.dim() {
            return Err(Error::InvalidInput(format!(
                "vectors of length {} and {} for a basis of dimension {}",
                a.len(),
                b.len(),
                basis.dim()
            )));
        }
        let overlap = inner(&a, &b).norm();
        let (na, nb) = (norm_sqr(&a), norm_sqr(&b));
        if overlap > tol || (na - mc.s_plus).abs() > tol || (nb - mc.s_minus).abs() > tol {
            return Err(Error::OffManifold(format!(
                "<A|B> = {overlap:e}, <A|A> = {na} (want {}), <B|B> = {nb} (want {})",
                mc.s_plus, mc.s_minus
            )));
        }
        Ok(Self {
            params: *params.params(),
            derived: params.derive()?,
            fixed_point: fp,
            modes: mc,
            basis,
            a,
            b,
            gamma_phase: 0.0,
        })
    }

    pub fn with_gamma_phase(mut self, phase: f64) -> Self {
        self.gamma_phase = phase;
        self
    }

    pub fn evolve(&self, t: f64) -> StateVectorPair {
        evolve_simple(
            &self.a,
            &self.b,
            &self.modes,
            &self.params,
            &self.derived,
            self.fixed_point.gamma0,
            &self.basis,
            self.gamma_phase,
            t,
        )
    }
}

#[allow(clippy::too_many_arguments)]
pub fn evolve_simple(
    a: &[Complex64],
    b: &[Complex64],
    mc: &ModalConstants,
    params: &ModelParams,
    derived: &DerivedParams,
    gamma0: f64,
    basis: &EnergyBasis,
    gamma_phase: f64,
    t: f64,
) -> StateVectorPair {
    let n = params.n_norm;
    let at = basis.propagate(a, t);
    let bt = basis.propagate(b, t);
    let up = Complex64::from_polar(1.0, mc.sigma * t);
    let down = up.conj();
    let psi_phase = Complex64::from_polar(1.0, -0.5 * n * (derived.alpha + params.lambda) * t);
    let phi_pref = I / ((params.g() + params.lambda) * gamma0)
        * Complex64::from_polar(1.0, -0.5 * n * (derived.beta - params.lambda) * t - gamma_phase);
    let (kp, km) = (mc.nu_plus * up, mc.nu_minus * down);
    StateVectorPair {
        t,
        psi: at
            .iter()
            .zip(&bt)
            .map(|(x, y)| psi_phase * (up * x + down * y))
            .collect(),
        phi: at
            .iter()
            .zip(&bt)
            .map(|(x, y)| phi_pref * (kp * x + km * y))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vp(a: f64, b: f64, mu: f64, l: f64, n: f64) -> ValidatedParams {
        ModelParams::new(a, b, mu, l, n).validate().unwrap()
    }

    #[test]
    fn worked_fixed_points() {
        let fp = fixed_point(&vp(0.0, 1.0, -0.5, 0.0, 2.0)).unwrap();
        assert_eq!(fp.delta0, 0.5);
        assert!((fp.c - 1.0).abs() < 1e-15);
        assert!((4.0 * fp.delta0 + fp.c / fp.delta0 - 4.0).abs() < 1e-15);

        let fp = fixed_point(&vp(0.0, 1.0, -0.5, 0.0, 5.0)).unwrap();
        assert_eq!(fp.delta0, 25.0 / 8.0);
        assert!((fp.c - 625.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn outside_bounded_regime_is_rejected() {
        assert!(matches!(fixed_point(&vp(0.0, 1.0, 0.0, 0.0, 1.0)), Err(Error::Regime(_))));
        assert!(matches!(fixed_point(&vp(0.0, 1.0, -1.5, 0.0, 1.0)), Err(Error::Regime(_))));
    }

    #[test]
    fn sigma_worked_example() {
        let v = vp(1.0, 1.0, -0.5, 0.0, 2.0);
        assert!((sigma_squared(&v) - 0.75).abs() < 1e-15);
        let mc = modal_constants(&v, &fixed_point(&v).unwrap()).unwrap();
        let want = 4.0 / (4.0 * mc.sigma) * (1.0 * -0.5);
        assert!((mc.s_plus - mc.s_minus - want).abs() < 1e-15);
        assert_eq!(mc.s_plus + mc.s_minus, 1.0);
    }

    #[test]
    fn ab_contract() {
        let v = vp(0.4, 1.0, -0.3, 0.2, 2.0);
        let mc = modal_constants(&v, &fixed_point(&v).unwrap()).unwrap();
        let basis = EnergyBasis::new(vec![0.0, 1.0, 2.5]).unwrap();
        let (a, b) = build_ab(&mc, &basis, 9).unwrap();
        assert!(inner(&a, &b).norm() <= 1e-14);
        assert!((norm_sqr(&a) - mc.s_plus).abs() <= 1e-14);
        assert!((norm_sqr(&b) - mc.s_minus).abs() <= 1e-14);
        assert_eq!(build_ab(&mc, &basis, 9).unwrap(), (a, b));
        assert!(matches!(EnergyBasis::new(vec![1.0]), Err(Error::BasisTooSmall(1))));
    }

    #[test]
    fn rejects_bad_user_vectors() {
        let v = vp(0.4, 1.0, -0.3, 0.2, 2.0);
        let basis = EnergyBasis::new(vec![0.0, 1.0]).unwrap();
        let a = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(SimpleSolution::with_vectors(&v, basis, a, b, 1e-10).is_err());
    }

    #[test]
    fn json_shape() {
        let pair = StateVectorPair {
            t: 0.5,
            psi: vec![Complex64::new(1.0, -2.0)],
            phi: vec![Complex64::new(0.0, 3.0)],
        };
        assert_eq!(pair.to_json(), r#"{"t":0.5,"psi":[[1.0,-2.0]],"phi":[[0.0,3.0]]}"#);
    }
}
