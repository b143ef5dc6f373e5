//! State vectors over an arbitrary reduced background `(κ(t), τ(t))`.
//!
//! With `γ = e^{κ/2}e^{-i(Λ+θ₀)}` known, the equations for `|ψ⟩`, `|φ⟩` become
//! linear. Stripping the scalar prefactors
//!
//! ```text
//! |ψ⟩ = e^{μNt/2 + μκ/(4(b+μ))} e^{-iθ_ψ} |ψ'⟩
//! |φ⟩ = e^{-μNt/2 + μκ/(4(b+μ))} e^{-iθ_φ} |φ'⟩
//! ```
//!
//! leaves `i dψ'/dt = (g+λ)e^f φ'`, `i dφ'/dt = (g*-λ)e^{κ-f} ψ'`, so every
//! component of `ψ'` solves `F̈ - ḟḞ + (g+λ)(g*-λ)e^κ F = 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::HarmonicModel;
use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr, I};
use crate::ode::Dopri5;
use crate::params::{DerivedParams, ModelParams, ValidatedParams};
use crate::statevec_simple::{EnergyBasis, FixedPointData, StateVectorPair};
use crate::taudelta::{
    closed_case1, closed_case3, tanh_ansatz, tdeqs_rhs, PNegOneOrbit, TauDeltaSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathSource {
    ClosedForm,
    Integrated,
}

/// `(κ, τ)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackgroundPoint {
    pub kappa: f64,
    pub tau: f64,
}

/// Reduced solution sampled on an ascending time grid, interpolated by cubic
/// Hermite segments whose slopes come from the τ–δ equations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    t: Vec<f64>,
    kappa: Vec<f64>,
    tau: Vec<f64>,
    dkappa: Vec<f64>,
    dtau: Vec<f64>,
}

impl SampledPath {
    pub fn new(t: Vec<f64>, kappa: Vec<f64>, tau: Vec<f64>, params: &ModelParams) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: t.len(),
            });
        }
        if kappa.len() != t.len() || tau.len() != t.len() {
            return Err(Error::InvalidInput("sample arrays differ in length".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
        }
        let (mu, b, n) = (params.mu, params.b, params.n_norm);
        let mut dkappa = Vec::with_capacity(t.len());
        let mut dtau = Vec::with_capacity(t.len());
        for (&k, &ta) in kappa.iter().zip(&tau) {
            let delta = k.exp();
            let (dt, dd) = tdeqs_rhs(mu, b, n, ta, delta);
            dtau.push(dt);
            dkappa.push(dd / delta);
        }
        Ok(Self {
            t,
            kappa,
            tau,
            dkappa,
            dtau,
        })
    }

    /// Samples from an s-domain series, mapped through `t = s / s_slope`.
    pub fn from_series(series: &TauDeltaSeries, derived: &DerivedParams, params: &ModelParams) -> Result<Self> {
        let mut rows: Vec<(f64, f64, f64)> = series
            .states
            .iter()
            .map(|st| (derived.t_of_s(st.s), st.kappa, st.tau))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (t, rest): (Vec<f64>, Vec<(f64, f64)>) = rows.into_iter().map(|(t, k, ta)| (t, (k, ta))).unzip();
        let (kappa, tau) = rest.into_iter().unzip();
        Self::new(t, kappa, tau, params)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    fn eval(&self, t: f64) -> Option<BackgroundPoint> {
        let (lo, hi) = self.range();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = self.t.partition_point(|&x| x <= t).clamp(1, self.t.len() - 1) - 1;
        let h = self.t[i + 1] - self.t[i];
        let x = (t - self.t[i]) / h;
        let hermite = |y: &[f64], d: &[f64]| {
            let x2 = x * x;
            let x3 = x2 * x;
            (2.0 * x3 - 3.0 * x2 + 1.0) * y[i]
                + (x3 - 2.0 * x2 + x) * h * d[i]
                + (-2.0 * x3 + 3.0 * x2) * y[i + 1]
                + (x3 - x2) * h * d[i + 1]
        };
        Some(BackgroundPoint {
            kappa: hermite(&self.kappa, &self.dkappa),
            tau: hermite(&self.tau, &self.dtau),
        })
    }
}

/// A solution of the reduced problem in physical time.
#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundPath {
    /// Bottom of the potential, `τ = 0`.
    Constant { kappa: f64 },
    /// `κ(t)`, `τ(t)` from the `p = -1` orbit at `s = s_slope·t + s_offset`.
    PNegOne {
        orbit: PNegOneOrbit,
        s_slope: f64,
        s_offset: f64,
    },
    Case1 { omega0: f64, b: f64 },
    Case3 { delta0: f64, mu: f64, n_norm: f64 },
    TanhAnsatz { n_norm: f64, b: f64, mu: f64 },
    /// Small-oscillation model at `s = s_slope·t`. Not an exact solution.
    Harmonic { model: HarmonicModel, s_slope: f64 },
    Sampled(SampledPath),
}

impl BackgroundPath {
    pub fn fixed_point(fp: &FixedPointData) -> Self {
        BackgroundPath::Constant { kappa: fp.kappa0 }
    }

    pub fn pneg1(orbit: PNegOneOrbit, derived: &DerivedParams) -> Self {
        BackgroundPath::PNegOne {
            orbit,
            s_slope: derived.s_slope,
            s_offset: 0.0,
        }
    }

    pub fn source(&self) -> PathSource {
        match self {
            BackgroundPath::Sampled(_) => PathSource::Integrated,
            _ => PathSource::ClosedForm,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            BackgroundPath::Sampled(p) => p.range(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn eval(&self, t: f64) -> Result<BackgroundPoint> {
        let out = match self {
            BackgroundPath::Constant { kappa } => Some(BackgroundPoint {
                kappa: *kappa,
                tau: 0.0,
            }),
            BackgroundPath::PNegOne {
                orbit,
                s_slope,
                s_offset,
            } => {
                let st = orbit.at(s_slope * t + s_offset)?;
                Some(BackgroundPoint {
                    kappa: st.kappa,
                    tau: st.tau,
                })
            }
            BackgroundPath::Case1 { omega0, b } => {
                let r = closed_case1(*omega0, *b, t);
                Some(BackgroundPoint {
                    kappa: r.delta.ln(),
                    tau: r.tau,
                })
            }
            BackgroundPath::Case3 { delta0, mu, n_norm } => {
                let r = closed_case3(*delta0, *mu, *n_norm, t);
                Some(BackgroundPoint {
                    kappa: r.delta.ln(),
                    tau: r.tau,
                })
            }
            BackgroundPath::TanhAnsatz { n_norm, b, mu } => {
                let r = tanh_ansatz(*n_norm, *b, *mu, t);
                Some(BackgroundPoint {
                    kappa: r.delta.ln(),
                    tau: r.tau,
                })
            }
            BackgroundPath::Harmonic { model, s_slope } => {
                let st = model.at(s_slope * t);
                Some(BackgroundPoint {
                    kappa: st.kappa,
                    tau: st.tau,
                })
            }
            BackgroundPath::Sampled(p) => p.eval(t),
        };
        out.filter(|p| p.kappa.is_finite())
            .ok_or_else(|| Error::Domain(format!("t = {t} is outside the background path")))
    }

    /// Largest `|dκ/dt + 2(b+μ)τ|` over `ts`, with `dκ/dt` from central
    /// differences of step `h`.
    pub fn consistency_residual(&self, params: &ModelParams, ts: &[f64], h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in ts {
            let fd = (self.eval(t + h)?.kappa - self.eval(t - h)?.kappa) / (2.0 * h);
            let tau = self.eval(t)?.tau;
            worst = worst.max((fd + 2.0 * (params.b + params.mu) * tau).abs());
        }
        Ok(worst)
    }
}

/// Phases and exponents at one instant. `theta_psi` and `theta_phi` omit the
/// per-mode `Eₙt`, which cancels in every identity below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseData {
    pub t: f64,
    /// `Λ = N[λ + (α-β)/2]t + κ[a - (α'-β')/2]/(2(b+μ))`.
    pub lambda_phase: f64,
    /// `f = κ/2 - μNt - i(θ_f + θ₀)`.
    pub f: Complex64,
    pub f_dot: Complex64,
    pub theta_psi: f64,
    pub theta_phi: f64,
    pub theta_f: f64,
    pub theta0: f64,
}

impl PhaseData {
    /// `θ_φ - θ_ψ - θ_f + Λ`, zero by construction of the phases.
    pub fn identity_residual(&self) -> f64 {
        self.theta_phi - self.theta_psi - self.theta_f + self.lambda_phase
    }
}

/// Parameters plus a background: everything the linear problem needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralModel {
    pub params: ModelParams,
    pub derived: DerivedParams,
    pub path: BackgroundPath,
    pub theta0: f64,
}

impl GeneralModel {
    pub fn new(params: &ValidatedParams, path: BackgroundPath) -> Result<Self> {
        Ok(Self {
            params: *params.params(),
            derived: params.derive()?,
            path,
            theta0: 0.0,
        })
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    fn bpm(&self) -> f64 {
        self.params.b + self.params.mu
    }

    /// `(g+λ)(g*-λ)`.
    fn coupling(&self) -> Complex64 {
        let g = self.params.g();
        (g + self.params.lambda) * (g.conj() - self.params.lambda)
    }

    pub fn phases(&self, t: f64) -> Result<PhaseData> {
        let bg = self.path.eval(t)?;
        Ok(self.phases_at(t, bg))
    }

    fn phases_at(&self, t: f64, bg: BackgroundPoint) -> PhaseData {
        let m = &self.params;
        let d = &self.derived;
        let n = m.n_norm;
        let k = bg.kappa;
        let bpm = self.bpm();
        let lambda_phase = n * (m.lambda + 0.5 * (d.alpha - d.beta)) * t
            + k / (2.0 * bpm) * (m.a - 0.5 * (d.alpha_p - d.beta_p));
        let theta_f = m.lambda * n * t + m.a * k / (2.0 * bpm);
        PhaseData {
            t,
            lambda_phase,
            f: Complex64::new(0.5 * k - m.mu * n * t, -(theta_f + self.theta0)),
            f_dot: Complex64::new(-bpm * bg.tau - m.mu * n, -(m.lambda * n - m.a * bg.tau)),
            theta_psi: 0.5 * n * d.alpha * t - k * d.alpha_p / (4.0 * bpm),
            theta_phi: 0.5 * n * d.beta * t - k * d.beta_p / (4.0 * bpm),
            theta_f,
            theta0: self.theta0,
        }
    }

    /// `γ(t) = e^{κ/2}e^{-i(Λ+θ₀)}`.
    pub fn gamma(&self, t: f64) -> Result<Complex64> {
        let bg = self.path.eval(t)?;
        let ph = self.phases_at(t, bg);
        Ok(Complex64::from_polar((0.5 * bg.kappa).exp(), -(ph.lambda_phase + self.theta0)))
    }

    /// Right-hand side of `iγ̇ = [λN - (g+iμ)τ + ½(α₁-β₁)(N+τ) + ½(α₂-β₂)(N-τ)]γ`.
    pub fn gamma_rate(&self, t: f64, gamma: Complex64) -> Result<Complex64> {
        let m = &self.params;
        let tau = self.path.eval(t)?.tau;
        let n = m.n_norm;
        let k = m.lambda * n - Complex64::new(m.a, m.b + m.mu) * tau
            + 0.5 * (m.alpha1 - m.beta1) * (n + tau)
            + 0.5 * (m.alpha2 - m.beta2) * (n - tau);
        Ok(-I * k * gamma)
    }

    /// Scalar factors `(K_ψ, K_φ)` with `ψ = K_ψ e^{-iHt} ψ'`, `φ = K_φ e^{-iHt} φ'`.
    fn prefactors(&self, t: f64, bg: BackgroundPoint, ph: &PhaseData) -> (Complex64, Complex64) {
        let m = &self.params;
        let common = m.mu * bg.kappa / (4.0 * self.bpm());
        let half = 0.5 * m.mu * m.n_norm * t;
        (
            Complex64::from_polar((half + common).exp(), -ph.theta_psi),
            Complex64::from_polar((-half + common).exp(), -ph.theta_phi),
        )
    }
}

/// `γ` on a background; see [`GeneralModel::gamma`].
pub fn gamma_general(model: &GeneralModel, t: f64) -> Result<Complex64> {
    model.gamma(t)
}

/// `F₁, Ḟ₁, F₂, Ḟ₂` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValues {
    pub f1: Complex64,
    pub df1: Complex64,
    pub f2: Complex64,
    pub df2: Complex64,
}

impl FValues {
    /// `Ḟ₁F₂ - F₁Ḟ₂`.
    pub fn wronskian(&self) -> Complex64 {
        self.df1 * self.f2 - self.f1 * self.df2
    }

    fn pack(&self) -> [f64; 8] {
        [
            self.f1.re, self.f1.im, self.df1.re, self.df1.im, self.f2.re, self.f2.im, self.df2.re,
            self.df2.im,
        ]
    }

    fn unpack(y: &[f64]) -> Self {
        Self {
            f1: Complex64::new(y[0], y[1]),
            df1: Complex64::new(y[2], y[3]),
            f2: Complex64::new(y[4], y[5]),
            df2: Complex64::new(y[6], y[7]),
        }
    }
}

/// Fundamental pair of the F equation with `F₁(t₀) = 1`, `Ḟ₁(t₀) = 0`,
/// `F₂(t₀) = 0`, `Ḟ₂(t₀) = 1`, stored at evenly spaced checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct FSolutionPair {
    pub t0: f64,
    pub t1: f64,
    checkpoints: Vec<(f64, [f64; 8])>,
    /// `c₀` in `W = c₀e^f`.
    pub wronskian_c0: Complex64,
    /// `max |W e^{-f} - c₀| / |c₀|` over the checkpoints.
    pub max_wronskian_drift: f64,
    solver: Dopri5,
}

/// Integrate the F equation over `[t0, t1]` (either order).
pub fn integrate_f(model: &GeneralModel, t0: f64, t1: f64, checkpoints: usize) -> Result<FSolutionPair> {
    integrate_f_with(model, t0, t1, checkpoints, Dopri5::default())
}

pub fn integrate_f_with(
    model: &GeneralModel,
    t0: f64,
    t1: f64,
    checkpoints: usize,
    solver: Dopri5,
) -> Result<FSolutionPair> {
    let (lo, hi) = model.path.range();
    if !(t0.min(t1) >= lo && t0.max(t1) <= hi) {
        return Err(Error::Domain(format!(
            "window [{t0}, {t1}] is not covered by the background [{lo}, {hi}]"
        )));
    }
    let f0 = model.phases(t0)?.f;
    let wronskian_c0 = -(-f0).exp();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut y = FValues {
        f1: one,
        df1: zero,
        f2: zero,
        df2: one,
    }
    .pack();
    let count = checkpoints.max(1);
    let mut stored = vec![(t0, y)];
    let mut drift: f64 = 0.0;
    let mut prev = t0;
    for k in 1..=count {
        let t = t0 + (t1 - t0) * k as f64 / count as f64;
        solver.integrate(f_rhs(model), prev, &mut y, t)?;
        let w = FValues::unpack(&y).wronskian() * (-model.phases(t)?.f).exp();
        drift = drift.max((w - wronskian_c0).norm() / wronskian_c0.norm());
        stored.push((t, y));
        prev = t;
    }
    if drift > 1e-6 {
        return Err(Error::Accuracy(format!(
            "Wronskian drift {drift:e} exceeds 1e-6; tighten the solver tolerance"
        )));
    }
    if t1 < t0 {
        stored.reverse();
    }
    Ok(FSolutionPair {
        t0,
        t1,
        checkpoints: stored,
        wronskian_c0,
        max_wronskian_drift: drift,
        solver,
    })
}

fn f_rhs(model: &GeneralModel) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    let coupling = model.coupling();
    move |t, y, dy| {
        let Ok(bg) = model.path.eval(t) else {
            dy.fill(f64::NAN);
            return;
        };
        let fd = model.phases_at(t, bg).f_dot;
        let ek = bg.kappa.exp();
        let v = FValues::unpack(y);
        let dd1 = fd * v.df1 - coupling * ek * v.f1;
        let dd2 = fd * v.df2 - coupling * ek * v.f2;
        dy.copy_from_slice(
            &FValues {
                f1: v.df1,
                df1: dd1,
                f2: v.df2,
                df2: dd2,
            }
            .pack(),
        );
    }
}

impl FSolutionPair {
    pub fn window(&self) -> (f64, f64) {
        (self.t0.min(self.t1), self.t0.max(self.t1))
    }

    /// Values at `t`, re-integrated from the nearest checkpoint.
    pub fn eval(&self, model: &GeneralModel, t: f64) -> Result<FValues> {
        let (lo, hi) = self.window();
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Domain(format!("t = {t} is outside the F window [{lo}, {hi}]")));
        }
        let i = self.checkpoints.partition_point(|c| c.0 < t);
        let nearest = [i.saturating_sub(1), i.min(self.checkpoints.len() - 1)]
            .into_iter()
            .min_by(|&a, &b| {
                (self.checkpoints[a].0 - t)
                    .abs()
                    .total_cmp(&(self.checkpoints[b].0 - t).abs())
            })
            .unwrap_or(0);
        let (ts, mut y) = self.checkpoints[nearest];
        self.solver.integrate(f_rhs(model), ts, &mut y, t)?;
        Ok(FValues::unpack(&y))
    }

    /// `|W(t)e^{-f(t)} - c₀| / |c₀|`.
    pub fn wronskian_drift(&self, model: &GeneralModel, t: f64) -> Result<f64> {
        let w = self.eval(model, t)?.wronskian() * (-model.phases(t)?.f).exp();
        Ok((w - self.wronskian_c0).norm() / self.wronskian_c0.norm())
    }
}

/// `|ψ(t)⟩`, `|φ(t)⟩` from `|ψ'⟩ = F₁|ψ₁(t)⟩ + F₂|ψ₂(t)⟩`.
pub fn reconstruct(
    fs: &FSolutionPair,
    model: &GeneralModel,
    basis: &EnergyBasis,
    psi1: &[Complex64],
    psi2: &[Complex64],
    t: f64,
) -> Result<StateVectorPair> {
    let fv = fs.eval(model, t)?;
    let bg = model.path.eval(t)?;
    let ph = model.phases_at(t, bg);
    let (kpsi, kphi) = model.prefactors(t, bg, &ph);
    let kphi = kphi * I * (-ph.f).exp() / (model.params.g() + model.params.lambda);
    let p1 = basis.propagate(psi1, t);
    let p2 = basis.propagate(psi2, t);
    Ok(StateVectorPair {
        t,
        psi: p1.iter().zip(&p2).map(|(x, y)| kpsi * (fv.f1 * x + fv.f2 * y)).collect(),
        phi: p1.iter().zip(&p2).map(|(x, y)| kphi * (fv.df1 * x + fv.df2 * y)).collect(),
    })
}

/// Constant vectors `ψ₁`, `ψ₂` that reproduce the given states at `t`.
pub fn initial_data_from_states(
    fs: &FSolutionPair,
    model: &GeneralModel,
    basis: &EnergyBasis,
    t: f64,
    psi: &[Complex64],
    phi: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let fv = fs.eval(model, t)?;
    let bg = model.path.eval(t)?;
    let ph = model.phases_at(t, bg);
    let (kpsi, kphi) = model.prefactors(t, bg, &ph);
    // ψ' and dψ'/dt = -i(g+λ)e^f φ' in the rotating frame
    let back_psi = basis.propagate(psi, -t);
    let back_phi = basis.propagate(phi, -t);
    let dscale = -I * (model.params.g() + model.params.lambda) * ph.f.exp() / kphi;
    let det = fv.f1 * fv.df2 - fv.f2 * fv.df1;
    let mut psi1 = Vec::with_capacity(psi.len());
    let mut psi2 = Vec::with_capacity(psi.len());
    for (x, y) in back_psi.iter().zip(&back_phi) {
        let u = x / kpsi;
        let du = dscale * y;
        psi1.push((fv.df2 * u - fv.f2 * du) / det);
        psi2.push((fv.f1 * du - fv.df1 * u) / det);
    }
    Ok((psi1, psi2))
}

/// Residuals of `⟨ψ|ψ⟩+⟨φ|φ⟩ = N`, `⟨ψ|ψ⟩-⟨φ|φ⟩ = τ`, `⟨φ|ψ⟩ = γ` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintResiduals {
    pub t: f64,
    pub norm_sum_resid: f64,
    pub tau_resid: f64,
    pub gamma_resid: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        self.norm_sum_resid
            .abs()
            .max(self.tau_resid.abs())
            .max(self.gamma_resid)
    }
}

pub fn constraint_residuals(model: &GeneralModel, state: &StateVectorPair) -> Result<ConstraintResiduals> {
    let p = state.psi_norm_sqr();
    let q = state.phi_norm_sqr();
    let bg = model.path.eval(state.t)?;
    Ok(ConstraintResiduals {
        t: state.t,
        norm_sum_resid: p + q - model.params.n_norm,
        tau_resid: p - q - bg.tau,
        gamma_resid: (state.gamma() - model.gamma(state.t)?).norm(),
    })
}

/// Largest residual of any constraint over `ts`.
pub fn constraint_drift(
    fs: &FSolutionPair,
    model: &GeneralModel,
    basis: &EnergyBasis,
    psi1: &[Complex64],
    psi2: &[Complex64],
    ts: &[f64],
) -> Result<Vec<ConstraintResiduals>> {
    ts.iter()
        .map(|&t| constraint_residuals(model, &reconstruct(fs, model, basis, psi1, psi2, t)?))
        .collect()
}

/// Solve the three constraints at `t0` for `ψ₁ = r₁u₁`, `ψ₂ = z u₁ + r₂u₂`,
/// with `u₁ ⊥ u₂` seeded unit vectors and `(r₁, Re z, Im z, r₂)` found by
/// damped Newton iteration.
pub fn impose_constraints(
    fs: &FSolutionPair,
    model: &GeneralModel,
    basis: &EnergyBasis,
    t0: f64,
    seed: u64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let dim = basis.dim();
    if dim < 2 {
        return Err(Error::BasisTooSmall(dim));
    }
    let (u1, u2) = seeded_pair(dim, seed);
    let fv = fs.eval(model, t0)?;
    let bg = model.path.eval(t0)?;
    let ph = model.phases_at(t0, bg);
    let (kpsi, kphi) = model.prefactors(t0, bg, &ph);
    let kphi = kphi * I * (-ph.f).exp() / (model.params.g() + model.params.lambda);
    let gamma = model.gamma(t0)?;
    let n = model.params.n_norm;

    // In the (u₁, u₂) frame the states at t0 have two components each; the
    // common factor e^{-iHt0} is unitary and drops out of every inner product.
    let eval = |x: &[f64; 4]| -> [f64; 4] {
        let z = Complex64::new(x[1], x[2]);
        let psi = [kpsi * (fv.f1 * x[0] + fv.f2 * z), kpsi * fv.f2 * x[3]];
        let phi = [kphi * (fv.df1 * x[0] + fv.df2 * z), kphi * fv.df2 * x[3]];
        let p = psi[0].norm_sqr() + psi[1].norm_sqr();
        let q = phi[0].norm_sqr() + phi[1].norm_sqr();
        let g = phi[0].conj() * psi[0] + phi[1].conj() * psi[1];
        [
            (p + q - n) / n,
            (p - q - bg.tau) / n,
            (g.re - gamma.re) / n,
            (g.im - gamma.im) / n,
        ]
    };
    let norm = |r: &[f64; 4]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let p_want = 0.5 * (n + bg.tau);
    let q_want = 0.5 * (n - bg.tau);
    let mut x = [
        p_want.sqrt() / (kpsi * fv.f1).norm().max(1e-300),
        0.0,
        0.0,
        q_want.sqrt() / (kphi * fv.df2).norm().max(1e-300),
    ];
    let mut r = eval(&x);
    let max_iter = 200;
    for _ in 0..max_iter {
        if norm(&r) <= 1e-14 {
            break;
        }
        let mut jac = [[0.0; 4]; 4];
        for j in 0..4 {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (eval(&xp), eval(&xm));
            for i in 0..4 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let Some(step) = solve4(jac, r) else {
            break;
        };
        let base = norm(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: [f64; 4] = std::array::from_fn(|i| x[i] - lambda * step[i]);
            let rt = eval(&trial);
            if norm(&rt) < base {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = norm(&r) * n;
    if !(residual <= 1e-10) {
        return Err(Error::NoSolutionFound {
            iterations: max_iter,
            residual,
        });
    }
    let z = Complex64::new(x[1], x[2]);
    let psi1 = u1.iter().map(|v| v * x[0]).collect();
    let psi2 = u1.iter().zip(&u2).map(|(a, b)| z * a + b * x[3]).collect();
    Ok((psi1, psi2))
}

fn seeded_pair(dim: usize, seed: u64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<Complex64> {
        (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let unit = |v: Vec<Complex64>| {
        let n = norm_sqr(&v).sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let u1 = unit(draw());
    loop {
        let mut v = draw();
        for _ in 0..2 {
            let proj = inner(&u1, &v);
            for (x, y) in v.iter_mut().zip(&u1) {
                *x -= proj * y;
            }
        }
        if norm_sqr(&v) > 1e-6 {
            return (u1, unit(v));
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let k = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= k * src;
            }
            b[row] -= k * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve4_identity_and_singular() {
        let mut a = [[0.0; 4]; 4];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 2.0;
        }
        assert_eq!(solve4(a, [2.0, 4.0, 6.0, 8.0]), Some([1.0, 2.0, 3.0, 4.0]));
        assert_eq!(solve4([[0.0; 4]; 4], [1.0; 4]), None);
    }

    #[test]
    fn sampled_path_hits_nodes_and_rejects_outside() {
        let m = ModelParams::new(0.0, 1.0, -0.5, 0.0, 2.0);
        let p = SampledPath::new(vec![0.0, 1.0, 2.0], vec![-1.0, -0.5, -0.8], vec![0.1, 0.0, -0.2], &m)
            .unwrap();
        let path = BackgroundPath::Sampled(p);
        assert_eq!(path.eval(1.0).unwrap().kappa, -0.5);
        assert_eq!(path.eval(2.0).unwrap().tau, -0.2);
        assert!(matches!(path.eval(2.5), Err(Error::Domain(_))));
        assert_eq!(path.source(), PathSource::Integrated);
    }

    #[test]
    fn phase_identity_pointwise() {
        let v = ModelParams::new(0.7, 1.0, -0.5, 0.4, 5.0)
            .with_diagonal(0.3, -0.1, 0.2, 0.6)
            .validate()
            .unwrap();
        let orbit = PNegOneOrbit::new(5.0, 4.0).unwrap();
        let model = GeneralModel::new(&v, BackgroundPath::pneg1(orbit, &v.derive().unwrap())).unwrap();
        for i in 0..50 {
            let ph = model.phases(0.1 * i as f64).unwrap();
            assert!(ph.identity_residual().abs() <= 1e-10);
        }
    }

    #[test]
    fn gamma_modulus_is_sqrt_delta() {
        let v = ModelParams::new(0.7, 1.0, -0.5, 0.4, 5.0).validate().unwrap();
        let orbit = PNegOneOrbit::new(5.0, 4.0).unwrap();
        let model = GeneralModel::new(&v, BackgroundPath::pneg1(orbit, &v.derive().unwrap())).unwrap();
        for &t in &[0.0, 0.3, 1.7] {
            let k = model.path.eval(t).unwrap().kappa;
            assert!((model.gamma(t).unwrap().norm_sqr() - k.exp()).abs() <= 1e-13 * k.exp());
        }
    }
}
