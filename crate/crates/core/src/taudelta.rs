//! Reduced dynamics of `τ = ⟨ψ|ψ⟩ - ⟨φ|φ⟩` and `δ = |⟨φ|ψ⟩|²`.
//!
//! In physical time the pair obeys
//!
//! ```text
//! dτ/dt = μ(N² - τ²) + 4bδ,    dδ/dt = -2(b+μ)τδ.
//! ```
//!
//! With `κ = ln δ`, `s = -(b+μ)t` and `p = μ/(b+μ)` this is Hamiltonian with
//! `h = τ² + V(κ)`, `V(κ) = 4e^κ + c e^{pκ}`, and `dκ/ds = 2τ`,
//! `dτ/ds = -V'(κ)`. On-shell trajectories have `h = N²`.

use serde::Serialize;

use crate::elliptic::{kappa_kernel_eval, kappa_kernel_period, Modulus};
use crate::error::{Error, Result};

/// A point `(κ, τ)` of the reduced phase space at evolution parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauDeltaState {
    pub kappa: f64,
    pub tau: f64,
    pub s: f64,
}

impl TauDeltaState {
    pub fn new(kappa: f64, tau: f64, s: f64) -> Result<Self> {
        if !(kappa.is_finite() && tau.is_finite() && s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "state (kappa={kappa}, tau={tau}, s={s})"
            )));
        }
        Ok(Self { kappa, tau, s })
    }

    pub fn delta(&self) -> f64 {
        self.kappa.exp()
    }

    /// `Ω = τ²`.
    pub fn omega(&self) -> f64 {
        self.tau * self.tau
    }
}

/// `(τ, δ)` in physical time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauDelta {
    pub tau: f64,
    pub delta: f64,
}

/// Right-hand side `(dτ/dt, dδ/dt)` of the τ–δ equations.
pub fn tdeqs_rhs(mu: f64, b: f64, n_norm: f64, tau: f64, delta: f64) -> (f64, f64) {
    (
        mu * (n_norm * n_norm - tau * tau) + 4.0 * b * delta,
        -2.0 * (b + mu) * tau * delta,
    )
}

fn sech_sq(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// `μ = 0`: `τ = 2ω₀ tanh(2ω₀bt)`, `δ = ω₀² sech²(2ω₀bt)`.
pub fn closed_case1(omega0: f64, b: f64, t: f64) -> TauDelta {
    let x = 2.0 * omega0 * b * t;
    TauDelta {
        tau: 2.0 * omega0 * x.tanh(),
        delta: omega0 * omega0 * sech_sq(x),
    }
}

/// `b + μ = 0`: `τ = -2ω₀ tanh(2ω₀bt)` with constant `δ = N²/4 - ω₀²`.
pub fn closed_case2(omega0: f64, b: f64, n_norm: f64, t: f64) -> Result<TauDelta> {
    let quarter = 0.25 * n_norm * n_norm;
    let omega0_sq = omega0 * omega0;
    if omega0_sq > quarter {
        return Err(Error::NegativeDelta {
            omega0_sq,
            quarter_n_sq: quarter,
        });
    }
    Ok(TauDelta {
        tau: -2.0 * omega0 * (2.0 * omega0 * b * t).tanh(),
        delta: quarter - omega0_sq,
    })
}

/// `b = 0`: `τ = N tanh(μNt)`, `δ = δ₀ sech²(μNt)`.
pub fn closed_case3(delta0: f64, mu: f64, n_norm: f64, t: f64) -> TauDelta {
    let x = mu * n_norm * t;
    TauDelta {
        tau: n_norm * x.tanh(),
        delta: delta0 * sech_sq(x),
    }
}

/// The one-parameter-free solution valid for all couplings:
/// `τ = N tanh((b+μ)Nt)`, `δ = (N²/4) sech²((b+μ)Nt)`.
pub fn tanh_ansatz(n_norm: f64, b: f64, mu: f64, t: f64) -> TauDelta {
    let x = (b + mu) * n_norm * t;
    TauDelta {
        tau: n_norm * x.tanh(),
        delta: 0.25 * n_norm * n_norm * sech_sq(x),
    }
}

/// `c = (N² - τ² - 4δ) δ^{-p}` without the sign check.
pub fn first_integral_raw(tau: f64, delta: f64, n_norm: f64, p: f64) -> f64 {
    (n_norm * n_norm - tau * tau - 4.0 * delta) * delta.powf(-p)
}

/// Integration constant of the first integral `τ² = N² - 4δ - cδ^p`.
///
/// Values below `-1e-12·N²·δ^{-p}` violate the Schwarz inequality and are
/// rejected; smaller negative values are rounding noise and returned as is.
pub fn first_integral_c(tau: f64, delta: f64, n_norm: f64, p: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    let c = first_integral_raw(tau, delta, n_norm, p);
    if c < -1e-12 * (n_norm * n_norm).max(1.0) * delta.powf(-p) {
        return Err(Error::OffManifold(format!(
            "c = {c} < 0 at tau = {tau}, delta = {delta}"
        )));
    }
    Ok(c)
}

/// Schwarz parameter `𝒮 = ⟨ψ|ψ⟩⟨φ|φ⟩ - |⟨φ|ψ⟩|² = (c/4)δ^p`.
pub fn schwarz(delta: f64, c: f64, p: f64) -> f64 {
    0.25 * c * delta.powf(p)
}

/// Effective potential `V(κ) = 4e^κ + c e^{pκ}` with the on-shell energy `N²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub c: f64,
    pub p: f64,
    pub n_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialMinimum {
    pub kappa0: f64,
    pub v0: f64,
}

impl PotentialSpec {
    pub fn new(c: f64, p: f64, n_norm: f64) -> Result<Self> {
        if !(c.is_finite() && p.is_finite() && n_norm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "potential (c={c}, p={p}, N={n_norm})"
            )));
        }
        if c < 0.0 {
            return Err(Error::OffManifold(format!("c = {c} must be non-negative")));
        }
        if n_norm <= 0.0 {
            return Err(Error::InvalidNorm(n_norm));
        }
        Ok(Self { c, p, n_norm })
    }

    /// Potential through the given state, with `c` recovered from the first
    /// integral.
    pub fn through(state: &TauDeltaState, p: f64, n_norm: f64) -> Result<Self> {
        let c = first_integral_c(state.tau, state.delta(), n_norm, p)?;
        Self::new(c.max(0.0), p, n_norm)
    }

    pub fn potential(&self, kappa: f64) -> f64 {
        4.0 * kappa.exp() + self.c * (self.p * kappa).exp()
    }

    /// `V'(κ)`.
    pub fn slope(&self, kappa: f64) -> f64 {
        4.0 * kappa.exp() + self.p * self.c * (self.p * kappa).exp()
    }

    /// `V''(κ)`.
    pub fn curvature(&self, kappa: f64) -> f64 {
        4.0 * kappa.exp() + self.p * self.p * self.c * (self.p * kappa).exp()
    }

    pub fn energy(&self, state: &TauDeltaState) -> f64 {
        state.tau * state.tau + self.potential(state.kappa)
    }

    /// Unique minimum `κ₀ = ln(-pc/4)/(1-p)`, present only for `p < 0`, `c > 0`.
    pub fn minimum(&self) -> Result<PotentialMinimum> {
        if self.p >= 0.0 || self.c <= 0.0 {
            return Err(Error::NoInteriorMinimum(self.p));
        }
        let kappa0 = (-self.p * self.c / 4.0).ln() / (1.0 - self.p);
        Ok(PotentialMinimum {
            kappa0,
            v0: self.potential(kappa0),
        })
    }

    /// For `p = -1`, `κ = η + η₀` turns `V` into `4√c cosh η`.
    pub fn eta_shift(&self) -> Option<f64> {
        (self.p == -1.0 && self.c > 0.0).then(|| 0.5 * (self.c / 4.0).ln())
    }
}

/// Splitting used by [`integrate`]. All three are symmetric compositions of
/// the position-Verlet step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Verlet,
    Yoshida4,
    Yoshida6,
}

impl Scheme {
    fn weights(self) -> &'static [f64] {
        const VERLET: [f64; 1] = [1.0];
        // 1/(2 - 2^{1/3}) and -2^{1/3}/(2 - 2^{1/3})
        const Y4: [f64; 3] = [
            1.351_207_191_959_657_6,
            -1.702_414_383_919_315,
            1.351_207_191_959_657_6,
        ];
        // Yoshida's sixth-order solution A
        const W1: f64 = -1.177_679_984_178_87;
        const W2: f64 = 0.235_573_213_359_357;
        const W3: f64 = 0.784_513_610_477_560;
        const W0: f64 = 1.0 - 2.0 * (W1 + W2 + W3);
        const Y6: [f64; 7] = [W3, W2, W1, W0, W1, W2, W3];
        match self {
            Scheme::Verlet => &VERLET,
            Scheme::Yoshida4 => &Y4,
            Scheme::Yoshida6 => &Y6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorOptions {
    /// Maximum step in `s`.
    pub substep: f64,
    pub scheme: Scheme,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            substep: 1e-3,
            scheme: Scheme::Yoshida6,
        }
    }
}

/// Integrated samples with the conserved quantity monitored along the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauDeltaSeries {
    pub states: Vec<TauDeltaState>,
    pub energies: Vec<f64>,
    /// `max |h(s) - h(s_init)|` over the returned samples.
    pub energy_drift: f64,
}

fn verlet(kappa: &mut f64, tau: &mut f64, pot: &PotentialSpec, dt: f64) {
    // dκ/ds = 2τ, so a half drift moves κ by τ·dt.
    *kappa += *tau * dt;
    *tau -= pot.slope(*kappa) * dt;
    *kappa += *tau * dt;
}

/// Advance `state` to `s_target` (either direction) with fixed substeps no
/// longer than `opts.substep`.
pub fn step_to(
    state: TauDeltaState,
    pot: &PotentialSpec,
    s_target: f64,
    opts: &IntegratorOptions,
) -> Result<TauDeltaState> {
    if !(opts.substep > 0.0 && opts.substep.is_finite()) {
        return Err(Error::InvalidInput(format!("substep = {}", opts.substep)));
    }
    let span = s_target - state.s;
    if span == 0.0 {
        return Ok(state);
    }
    let steps = (span.abs() / opts.substep).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let (mut kappa, mut tau) = (state.kappa, state.tau);
    let weights = opts.scheme.weights();
    for i in 0..steps {
        for w in weights {
            verlet(&mut kappa, &mut tau, pot, w * dt);
        }
        if !(kappa.abs() <= 700.0) || !tau.is_finite() {
            return Err(Error::Divergence {
                s: state.s + (i + 1) as f64 * dt,
                kappa,
            });
        }
    }
    Ok(TauDeltaState {
        kappa,
        tau,
        s: s_target,
    })
}

/// Sample the trajectory through `init` at every point of an ascending grid.
/// Grid points below `init.s` are reached by integrating backwards.
pub fn integrate(
    init: TauDeltaState,
    pot: &PotentialSpec,
    s_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<TauDeltaSeries> {
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("s grid must be strictly increasing".into()));
    }
    let split = s_grid.partition_point(|&s| s < init.s);
    let mut states = vec![init; s_grid.len()];
    let mut cur = init;
    for i in (0..split).rev() {
        cur = step_to(cur, pot, s_grid[i], opts)?;
        states[i] = cur;
    }
    cur = init;
    for i in split..s_grid.len() {
        cur = step_to(cur, pot, s_grid[i], opts)?;
        states[i] = cur;
    }
    let h0 = pot.energy(&init);
    let energies: Vec<f64> = states.iter().map(|s| pot.energy(s)).collect();
    let energy_drift = energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
    Ok(TauDeltaSeries {
        states,
        energies,
        energy_drift,
    })
}

/// Same as [`integrate`] but sampled on a physical-time grid through
/// `s = s_slope·t`. `init.s` is an `s` value. The returned states keep `s`.
pub fn integrate_in_time(
    init: TauDeltaState,
    pot: &PotentialSpec,
    s_slope: f64,
    t_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<TauDeltaSeries> {
    let mut s_grid: Vec<f64> = t_grid.iter().map(|t| s_slope * t).collect();
    let reversed = s_slope < 0.0;
    if reversed {
        s_grid.reverse();
    }
    let mut series = integrate(init, pot, &s_grid, opts)?;
    if reversed {
        series.states.reverse();
        series.energies.reverse();
    }
    Ok(series)
}

/// Mean spacing between successive minima of κ (upward zero crossings of τ),
/// located by cubic Hermite interpolation of τ using `dτ/ds = -V'(κ)`.
pub fn oscillation_period(states: &[TauDeltaState], pot: &PotentialSpec) -> Option<f64> {
    let mut crossings = Vec::new();
    for w in states.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.tau < 0.0 && b.tau >= 0.0 {
            let h = b.s - a.s;
            let (y0, y1) = (a.tau, b.tau);
            let (d0, d1) = (-pot.slope(a.kappa) * h, -pot.slope(b.kappa) * h);
            let hermite = |x: f64| {
                let x2 = x * x;
                let x3 = x2 * x;
                (2.0 * x3 - 3.0 * x2 + 1.0) * y0
                    + (x3 - 2.0 * x2 + x) * d0
                    + (-2.0 * x3 + 3.0 * x2) * y1
                    + (x3 - x2) * d1
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push(a.s + 0.5 * (lo + hi) * h);
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Exact on-shell orbit for `p = -1` (`μ = -b/2`).
///
/// `κ(s) = η₀ - 2i·am(i√(N²-4√c)·s | 8√c/(4√c-N²))` with `η₀ = ½ln(c/4)`,
/// and `τ(s) = √(N²-4√c)·dn(i√(N²-4√c)·s | ·)`, so `τ(0) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNegOneOrbit {
    pub n_norm: f64,
    pub c: f64,
    /// `√(N² - 4√c)`, the value of τ at κ = η₀.
    pub amplitude: f64,
    pub modulus: f64,
    pub eta0: f64,
}

impl PNegOneOrbit {
    pub fn new(n_norm: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(format!("c = {c} must be positive")));
        }
        if !(n_norm > 0.0) {
            return Err(Error::InvalidNorm(n_norm));
        }
        let energy = n_norm * n_norm;
        let barrier = 4.0 * c.sqrt();
        if energy <= barrier {
            return Err(Error::EnergyBelowBarrier { energy, barrier });
        }
        Ok(Self {
            n_norm,
            c,
            amplitude: (energy - barrier).sqrt(),
            modulus: 2.0 * barrier / (barrier - energy),
            eta0: 0.5 * (c / 4.0).ln(),
        })
    }

    pub fn potential(&self) -> PotentialSpec {
        PotentialSpec {
            c: self.c,
            p: -1.0,
            n_norm: self.n_norm,
        }
    }

    pub fn at(&self, s: f64) -> Result<TauDeltaState> {
        let k = kappa_kernel_eval(self.amplitude * s, Modulus::new(self.modulus)?)?;
        Ok(TauDeltaState {
            kappa: self.eta0 + k.value,
            tau: 0.5 * self.amplitude * k.slope,
            s,
        })
    }

    /// Period of κ(s).
    pub fn period(&self) -> Result<f64> {
        Ok(kappa_kernel_period(Modulus::new(self.modulus)?)? / self.amplitude)
    }
}

pub fn closed_pneg1(n_norm: f64, c: f64, s: f64) -> Result<TauDeltaState> {
    PNegOneOrbit::new(n_norm, c)?.at(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_origin() {
        let c1 = closed_case1(0.75, 1.3, 0.0);
        assert_eq!((c1.tau, c1.delta), (0.0, 0.5625));
        let c2 = closed_case2(0.5, 1.0, 2.0, 0.0).unwrap();
        assert_eq!((c2.tau, c2.delta), (0.0, 0.75));
        let c3 = closed_case3(0.3, -0.4, 2.0, 0.0);
        assert_eq!((c3.tau, c3.delta), (0.0, 0.3));
        let a = tanh_ansatz(2.0, 1.0, -0.5, 0.0);
        assert_eq!((a.tau, a.delta), (0.0, 1.0));
    }

    #[test]
    fn case1_late_time_limit() {
        let (w, b) = (0.8, 1.5);
        let t = 50.0 / (2.0 * w * b);
        let r = closed_case1(w, b, t);
        assert!((r.tau - 2.0 * w).abs() < 1e-10);
        assert!(r.delta < 1e-10);
    }

    #[test]
    fn case2_delta_constant_and_guarded() {
        let a = closed_case2(0.4, 1.0, 2.0, 0.3).unwrap();
        let b = closed_case2(0.4, 1.0, 2.0, 7.0).unwrap();
        assert_eq!(a.delta, b.delta);
        assert!(matches!(
            closed_case2(1.5, 1.0, 2.0, 0.0),
            Err(Error::NegativeDelta { .. })
        ));
    }

    #[test]
    fn case3_tau_independent_of_delta0() {
        for t in [-1.0, 0.2, 3.0] {
            assert_eq!(
                closed_case3(0.1, -0.3, 2.0, t).tau,
                closed_case3(5.0, -0.3, 2.0, t).tau
            );
        }
    }

    #[test]
    fn ansatz_reduces_to_case1_at_half_norm() {
        let (n, b) = (3.0, 0.7);
        for t in [-0.5, 0.1, 0.9] {
            let a = tanh_ansatz(n, b, 0.0, t);
            let c = closed_case1(n / 2.0, b, t);
            assert!((a.tau - c.tau).abs() < 1e-15);
            assert!((a.delta - c.delta).abs() < 1e-15);
        }
    }

    #[test]
    fn first_integral_examples() {
        // p = 0 on a case-1 orbit gives c = N² - 4ω₀²
        let (n, w, b) = (2.0, 0.6, 1.0);
        for t in [0.0, 0.4, 1.3] {
            let r = closed_case1(w, b, t);
            let c = first_integral_c(r.tau, r.delta, n, 0.0).unwrap();
            assert!((c - (n * n - 4.0 * w * w)).abs() < 1e-13);
        }
        assert!((first_integral_c(0.0, 0.5, 2.0, -1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            first_integral_c(2.0, 0.5, 2.0, -1.0),
            Err(Error::OffManifold(_))
        ));
        assert!(first_integral_c(0.0, 0.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn schwarz_examples() {
        assert_eq!(schwarz(0.3, 0.0, -1.0), 0.0);
        assert_eq!(schwarz(0.3, 2.0, 0.0), 0.5);
        assert_eq!(schwarz(7.0, 2.0, 0.0), 0.5);
    }

    #[test]
    fn potential_minimum_pneg1() {
        let pot = PotentialSpec::new(4.0, -1.0, 5.0).unwrap();
        let m = pot.minimum().unwrap();
        assert_eq!(m.kappa0, 0.0);
        assert_eq!(m.v0, 8.0);
        assert!(pot.slope(m.kappa0).abs() < 1e-15);
        assert_eq!(pot.eta_shift(), Some(0.0));
        assert!(pot.potential(30.0) > 1e12 && pot.potential(-30.0) > 1e12);
        assert!(matches!(
            PotentialSpec::new(4.0, 0.0, 5.0).unwrap().minimum(),
            Err(Error::NoInteriorMinimum(_))
        ));
    }

    #[test]
    fn stationary_at_minimum() {
        let pot = PotentialSpec::new(2.5, -0.6, 3.0).unwrap();
        let k0 = pot.minimum().unwrap().kappa0;
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let init = TauDeltaState::new(k0, 0.0, 0.0).unwrap();
        let series = integrate(init, &pot, &grid, &IntegratorOptions::default()).unwrap();
        for s in &series.states {
            assert!((s.kappa - k0).abs() <= 1e-12);
        }
    }

    #[test]
    fn reversibility() {
        let pot = PotentialSpec::new(4.0, -1.0, 5.0).unwrap();
        let init = closed_pneg1(5.0, 4.0, 0.0).unwrap();
        let opts = IntegratorOptions::default();
        let fwd = step_to(init, &pot, 5.0, &opts).unwrap();
        let back = step_to(fwd, &pot, 0.0, &opts).unwrap();
        assert!((back.kappa - init.kappa).abs() <= 1e-9);
        assert!((back.tau - init.tau).abs() <= 1e-9);
        // same check through momentum reversal
        let flipped = TauDeltaState::new(fwd.kappa, -fwd.tau, 0.0).unwrap();
        let ret = step_to(flipped, &pot, 5.0, &opts).unwrap();
        assert!((ret.kappa - init.kappa).abs() <= 1e-9);
        assert!((ret.tau + init.tau).abs() <= 1e-9);
    }

    #[test]
    fn pneg1_origin_values() {
        let st = closed_pneg1(5.0, 4.0, 0.0).unwrap();
        assert_eq!(st.kappa, 0.0);
        assert_eq!(st.delta(), 1.0);
        assert!((st.tau - 17f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            closed_pneg1(2.0, 4.0, 0.0),
            Err(Error::EnergyBelowBarrier { .. })
        ));
    }

    #[test]
    fn divergence_is_reported() {
        // p > 0 with an outward push: κ escapes to -∞
        let pot = PotentialSpec::new(1.0, 0.5, 1.0).unwrap();
        let init = TauDeltaState::new(0.0, -30.0, 0.0).unwrap();
        let r = step_to(init, &pot, 100.0, &IntegratorOptions::default());
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }
}
