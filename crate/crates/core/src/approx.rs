//! Two approximations to the `κ` dynamics: small oscillations about the
//! potential minimum, and a piecewise single-exponential potential
//!
//! ```text
//! Ṽ(κ) = 4e^κ        for κ ≥ κ₁,
//!        c e^{pκ}    for κ < κ₁,      4e^{κ₁} = c e^{pκ₁},
//! ```
//!
//! whose regions are each solved in closed form and glued at `κ = κ₁`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::taudelta::{
    integrate, oscillation_period, IntegratorOptions, PotentialSpec, TauDeltaState,
};

/// `κ(s) = κ₀ + A cos(ω_s(s - s₀) + φ₀)`, `τ = κ'/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicModel {
    pub kappa0: f64,
    pub omega_s: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub s0: f64,
    /// `V(κ₀)`.
    pub v0: f64,
    /// Set when the amplitude is not small against the distance to `κ₁`.
    pub warning: Option<String>,
}

impl HarmonicModel {
    pub fn kappa(&self, s: f64) -> f64 {
        self.kappa0 + self.amplitude * (self.omega_s * (s - self.s0) + self.phase).cos()
    }

    pub fn tau(&self, s: f64) -> f64 {
        -0.5 * self.amplitude * self.omega_s * (self.omega_s * (s - self.s0) + self.phase).sin()
    }

    pub fn at(&self, s: f64) -> TauDeltaState {
        TauDeltaState {
            kappa: self.kappa(s),
            tau: self.tau(s),
            s,
        }
    }

    /// `V₀ + A²ω_s²/4`.
    pub fn energy(&self) -> f64 {
        self.v0 + 0.25 * (self.amplitude * self.omega_s).powi(2)
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_s
    }
}

/// Harmonic model about the minimum of `pot`, starting at the upper turning
/// point at `s = 0`.
pub fn small_osc(pot: &PotentialSpec, amplitude: f64) -> Result<HarmonicModel> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::InvalidInput(format!("amplitude {amplitude}")));
    }
    let min = pot.minimum()?;
    let omega_s = (2.0 * pot.curvature(min.kappa0)).sqrt();
    let kappa1 = PiecewisePotential::new(pot.c, pot.p)?.kappa1;
    let limit = 0.1 * (min.kappa0 - kappa1).abs().max(1.0);
    let warning = (amplitude > limit)
        .then(|| format!("amplitude {amplitude} exceeds {limit}; harmonic model is unreliable"));
    Ok(HarmonicModel {
        kappa0: min.kappa0,
        omega_s,
        amplitude,
        phase: 0.0,
        s0: 0.0,
        v0: min.v0,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiecewisePotential {
    pub kappa1: f64,
    pub c: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// `κ > κ₁`, `Ṽ = 4e^κ`.
    Upper,
    /// `κ < κ₁`, `Ṽ = c e^{pκ}`.
    Lower,
}

impl PiecewisePotential {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("c = {c} must be positive")));
        }
        if !(p < 0.0) {
            return Err(Error::NoInteriorMinimum(p));
        }
        Ok(Self {
            kappa1: (c / 4.0).ln() / (1.0 - p),
            c,
            p,
        })
    }

    pub fn from_spec(pot: &PotentialSpec) -> Result<Self> {
        Self::new(pot.c, pot.p)
    }

    /// `Ṽ(κ₁)`, the lowest value of `Ṽ`.
    pub fn floor(&self) -> f64 {
        4.0 * self.kappa1.exp()
    }

    pub fn potential(&self, kappa: f64) -> f64 {
        if kappa >= self.kappa1 {
            4.0 * kappa.exp()
        } else {
            self.c * (self.p * kappa).exp()
        }
    }

    /// The exponential dropped from `V` in the region of `κ`.
    pub fn omitted(&self, kappa: f64) -> f64 {
        if kappa >= self.kappa1 {
            self.c * (self.p * kappa).exp()
        } else {
            4.0 * kappa.exp()
        }
    }

    pub fn region(&self, state: &TauDeltaState) -> Result<Region> {
        if state.kappa > self.kappa1 || (state.kappa == self.kappa1 && state.tau > 0.0) {
            Ok(Region::Upper)
        } else if state.kappa < self.kappa1 || state.tau < 0.0 {
            Ok(Region::Lower)
        } else {
            Err(Error::AmbiguousRegion)
        }
    }
}

/// Closed-form motion under `Ṽ` at energy `E`. One cycle starts on entry to
/// the upper region; with `X = acosh√(E/Ṽ(κ₁))`, `q = -p`, the cycle spends
/// `2X/√E` above `κ₁` and `2X/(q√E)` below it. Above,
/// `τ = -√E tanh(√E u)`, `e^κ = (E/4) sech²(√E u)`; below,
/// `τ = √E tanh(q√E u)`, `c e^{pκ} = E sech²(q√E u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiecewiseOrbit {
    pub pot: PiecewisePotential,
    pub energy: f64,
    /// Value of `s` at which a cycle begins.
    pub s_entry: f64,
    x: f64,
}

/// One region of the orbit: its closed form holds for
/// `s ∈ [s_start, s_end]` with local time `u = s - s_mid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub region: Region,
    pub s_start: f64,
    pub s_end: f64,
    pub s_mid: f64,
}

impl PiecewiseOrbit {
    pub fn new(pp: PiecewisePotential, init: &TauDeltaState) -> Result<Self> {
        let region = pp.region(init)?;
        let energy = init.tau * init.tau + pp.potential(init.kappa);
        let floor = pp.floor();
        if !(energy > floor) {
            return Err(Error::AmbiguousRegion);
        }
        let re = energy.sqrt();
        let q = -pp.p;
        let x = (energy / floor).sqrt().acosh();
        let ratio = (init.tau / re).clamp(-1.0, 1.0);
        let s_entry = match region {
            Region::Upper => {
                let u = -ratio.atanh() / re;
                init.s - u - x / re
            }
            Region::Lower => {
                let u = ratio.atanh() / (q * re);
                init.s - u - x / (q * re) - 2.0 * x / re
            }
        };
        Ok(Self {
            pot: pp,
            energy,
            s_entry,
            x,
        })
    }

    fn upper_span(&self) -> f64 {
        2.0 * self.x / self.energy.sqrt()
    }

    fn lower_span(&self) -> f64 {
        2.0 * self.x / (-self.pot.p * self.energy.sqrt())
    }

    pub fn period(&self) -> f64 {
        self.upper_span() + self.lower_span()
    }

    /// The segment containing `s`.
    pub fn segment(&self, s: f64) -> Segment {
        let period = self.period();
        let k = ((s - self.s_entry) / period).floor();
        let start = self.s_entry + k * period;
        let mid_up = start + 0.5 * self.upper_span();
        if s < start + self.upper_span() {
            Segment {
                region: Region::Upper,
                s_start: start,
                s_end: start + self.upper_span(),
                s_mid: mid_up,
            }
        } else {
            let lo = start + self.upper_span();
            Segment {
                region: Region::Lower,
                s_start: lo,
                s_end: lo + self.lower_span(),
                s_mid: lo + 0.5 * self.lower_span(),
            }
        }
    }

    /// The segment that begins where `seg` ends.
    pub fn following(&self, seg: &Segment) -> Segment {
        let (region, span) = match seg.region {
            Region::Upper => (Region::Lower, self.lower_span()),
            Region::Lower => (Region::Upper, self.upper_span()),
        };
        Segment {
            region,
            s_start: seg.s_end,
            s_end: seg.s_end + span,
            s_mid: seg.s_end + 0.5 * span,
        }
    }

    /// Region formula of `seg` evaluated at `s`, which may lie outside it.
    pub fn eval_in(&self, seg: &Segment, s: f64) -> TauDeltaState {
        let re = self.energy.sqrt();
        let u = s - seg.s_mid;
        match seg.region {
            Region::Upper => {
                let a = re * u;
                TauDeltaState {
                    kappa: (self.energy / 4.0).ln() - 2.0 * log_cosh(a),
                    tau: -re * a.tanh(),
                    s,
                }
            }
            Region::Lower => {
                let q = -self.pot.p;
                let a = q * re * u;
                TauDeltaState {
                    kappa: (2.0 * log_cosh(a) - (self.energy / self.pot.c).ln()) / q,
                    tau: re * a.tanh(),
                    s,
                }
            }
        }
    }

    pub fn at(&self, s: f64) -> TauDeltaState {
        self.eval_in(&self.segment(s), s)
    }
}

fn log_cosh(a: f64) -> f64 {
    let a = a.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Mismatch of the two neighbouring closed forms at a region boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub s: f64,
    /// Region entered.
    pub into: Region,
    pub kappa_jump: f64,
    pub tau_jump: f64,
    /// `|κ - κ₁|` at the crossing.
    pub boundary_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseTrajectory {
    pub states: Vec<TauDeltaState>,
    pub crossings: Vec<Crossing>,
    pub energy: f64,
    pub period: f64,
    /// Largest `|h̃(s) - h̃(s₀)|` over the samples.
    pub energy_drift: f64,
}

/// Motion under `Ṽ` from `init`, sampled at `s_grid`, with every region
/// crossing between the grid extremes and `init.s` recorded.
pub fn piecewise_solve(
    pp: &PiecewisePotential,
    init: &TauDeltaState,
    s_grid: &[f64],
) -> Result<PiecewiseTrajectory> {
    let orbit = PiecewiseOrbit::new(*pp, init)?;
    let states: Vec<TauDeltaState> = s_grid.iter().map(|&s| orbit.at(s)).collect();
    let h0 = init.tau * init.tau + pp.potential(init.kappa);
    let energy_drift = states
        .iter()
        .map(|st| (st.tau * st.tau + pp.potential(st.kappa) - h0).abs())
        .fold(0.0, f64::max);

    let lo = s_grid.iter().copied().fold(init.s, f64::min);
    let hi = s_grid.iter().copied().fold(init.s, f64::max);
    let mut crossings = Vec::new();
    let mut seg = orbit.segment(lo);
    while seg.s_end <= hi {
        let next = orbit.following(&seg);
        let s = seg.s_end;
        let (a, b) = (orbit.eval_in(&seg, s), orbit.eval_in(&next, s));
        crossings.push(Crossing {
            s,
            into: next.region,
            kappa_jump: (a.kappa - b.kappa).abs(),
            tau_jump: (a.tau - b.tau).abs(),
            boundary_gap: (a.kappa - pp.kappa1).abs().max((b.kappa - pp.kappa1).abs()),
        });
        seg = next;
    }
    Ok(PiecewiseTrajectory {
        states,
        crossings,
        energy: orbit.energy,
        period: orbit.period(),
        energy_drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxReport {
    pub kappa1: f64,
    pub max_potential_gap: f64,
    pub max_kappa_error: f64,
    pub period_true: f64,
    pub period_approx: f64,
}

/// Compares the piecewise motion with the integrated motion under the full
/// potential, both started from `init` at `s = init.s`, over `s_grid`.
pub fn approx_error_report(
    pp: &PiecewisePotential,
    pot: &PotentialSpec,
    init: &TauDeltaState,
    s_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<ApproxReport> {
    let approx = piecewise_solve(pp, init, s_grid)?;
    let exact = integrate(*init, pot, s_grid, opts)?;
    let max_kappa_error = approx
        .states
        .iter()
        .zip(&exact.states)
        .map(|(a, e)| (a.kappa - e.kappa).abs())
        .fold(0.0, f64::max);

    let (lo, hi) = approx
        .states
        .iter()
        .chain(&exact.states)
        .chain(std::iter::once(init))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.kappa), hi.max(s.kappa))
        });
    let mut kappas: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
    if pp.kappa1 > lo && pp.kappa1 < hi {
        kappas.push(pp.kappa1);
    }
    let max_potential_gap = kappas
        .iter()
        .map(|&k| (pot.potential(k) - pp.potential(k)).abs())
        .fold(0.0, f64::max);

    let period_approx = approx.period;
    let period_true = true_period(pot, init, 3.0 * period_approx, opts)?;
    Ok(ApproxReport {
        kappa1: pp.kappa1,
        max_potential_gap,
        max_kappa_error,
        period_true,
        period_approx,
    })
}

/// Period of the full-potential motion through `init`, widening the sampled
/// window until two full cycles are seen.
fn true_period(
    pot: &PotentialSpec,
    init: &TauDeltaState,
    mut span: f64,
    opts: &IntegratorOptions,
) -> Result<f64> {
    for _ in 0..8 {
        let n = (span / opts.substep).ceil().max(8.0) as usize;
        let grid: Vec<f64> = (0..=n).map(|i| init.s + span * i as f64 / n as f64).collect();
        let long = integrate(*init, pot, &grid, opts)?;
        if let Some(t) = oscillation_period(&long.states, pot) {
            return Ok(t);
        }
        span *= 2.0;
    }
    Err(Error::InsufficientData { needed: 2, got: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa1_is_the_minimum_for_p_minus_one() {
        let pot = PotentialSpec::new(4.0, -1.0, 5.0).unwrap();
        let pp = PiecewisePotential::from_spec(&pot).unwrap();
        assert_eq!(pp.kappa1, pot.minimum().unwrap().kappa0);
        let pot = PotentialSpec::new(7.3, -1.0, 5.0).unwrap();
        assert_eq!(PiecewisePotential::from_spec(&pot).unwrap().kappa1, pot.minimum().unwrap().kappa0);
    }

    #[test]
    fn harmonic_frequency_at_c_four() {
        let pot = PotentialSpec::new(4.0, -1.0, 5.0).unwrap();
        let h = small_osc(&pot, 0.0).unwrap();
        assert!(h.kappa0.abs() < 1e-15);
        assert!((h.omega_s - 4.0).abs() < 1e-14);
        assert_eq!(h.kappa(1.3), h.kappa0);
        assert_eq!(h.energy(), h.v0);
    }

    #[test]
    fn no_minimum_without_negative_p() {
        let pot = PotentialSpec::new(4.0, 0.5, 5.0).unwrap();
        assert!(matches!(small_osc(&pot, 1e-3), Err(Error::NoInteriorMinimum(_))));
        assert!(PiecewisePotential::new(4.0, 0.0).is_err());
    }

    #[test]
    fn large_amplitude_warns() {
        let pot = PotentialSpec::new(4.0, -1.0, 5.0).unwrap();
        assert!(small_osc(&pot, 1e-3).unwrap().warning.is_none());
        assert!(small_osc(&pot, 0.5).unwrap().warning.is_some());
    }

    #[test]
    fn resting_at_the_kink_is_ambiguous() {
        let pp = PiecewisePotential::new(4.0, -1.0).unwrap();
        let st = TauDeltaState::new(pp.kappa1, 0.0, 0.0).unwrap();
        assert!(matches!(piecewise_solve(&pp, &st, &[0.0, 1.0]), Err(Error::AmbiguousRegion)));
    }

    #[test]
    fn starting_point_is_reproduced() {
        let pp = PiecewisePotential::new(3.0, -0.6).unwrap();
        for &(k, t) in &[(0.4, 0.7), (0.4, -0.7), (-1.5, 0.2), (-1.5, -2.0), (pp.kappa1, 1.0), (pp.kappa1, -1.0)] {
            let init = TauDeltaState::new(k, t, 0.25).unwrap();
            let st = PiecewiseOrbit::new(pp, &init).unwrap().at(0.25);
            assert!((st.kappa - k).abs() < 1e-12 && (st.tau - t).abs() < 1e-12, "{k} {t}: {st:?}");
        }
    }
}
