mod common;

use nlqm::linalg::{inner, max_abs_diff, norm_sqr};
use nlqm::statevec_general::{
    constraint_drift, impose_constraints, initial_data_from_states, integrate_f, reconstruct,
    BackgroundPath, GeneralModel, SampledPath,
};
use nlqm::statevec_simple::{fixed_point, EnergyBasis, SimpleSolution};
use nlqm::taudelta::{integrate, IntegratorOptions, PNegOneOrbit};
use nlqm::{ModelParams, ValidatedParams};
use num_complex::Complex64;

fn pneg1_params() -> ValidatedParams {
    ModelParams::new(0.7, 1.0, -0.5, 0.4, 5.0)
        .with_diagonal(0.3, -0.1, 0.2, 0.6)
        .validate()
        .unwrap()
}

fn oscillating_model() -> (GeneralModel, f64) {
    let v = pneg1_params();
    let d = v.derive().unwrap();
    let orbit = PNegOneOrbit::new(5.0, 4.0).unwrap();
    let period_t = orbit.period().unwrap() / d.s_slope.abs();
    (GeneralModel::new(&v, BackgroundPath::pneg1(orbit, &d)).unwrap(), period_t)
}

fn basis(dim: usize) -> EnergyBasis {
    EnergyBasis::new((0..dim).map(|k| 0.3 * k as f64 + 0.05 * (k * k) as f64).collect()).unwrap()
}

fn grid(t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t1 * i as f64 / n as f64).collect()
}

#[test]
fn wronskian_is_conserved_over_a_period() {
    let (model, period) = oscillating_model();
    let fs = integrate_f(&model, 0.0, period, 64).unwrap();
    assert!(fs.max_wronskian_drift <= 1e-8, "{:e}", fs.max_wronskian_drift);
    for t in grid(period, 37) {
        assert!(fs.wronskian_drift(&model, t).unwrap() <= 1e-8);
    }
}

#[test]
fn constraints_propagate_over_a_period() {
    let (model, period) = oscillating_model();
    let b = basis(5);
    let fs = integrate_f(&model, 0.0, period, 64).unwrap();
    let (p1, p2) = impose_constraints(&fs, &model, &b, 0.0, 7).unwrap();
    let drift = constraint_drift(&fs, &model, &b, &p1, &p2, &grid(period, 200)).unwrap();
    let worst = drift.iter().map(|r| r.max()).fold(0.0, f64::max);
    assert!(worst <= 1e-7, "worst constraint residual {worst:e}");
}

#[test]
fn constraints_solved_for_many_seeds() {
    let (model, period) = oscillating_model();
    let b = basis(4);
    let fs = integrate_f(&model, 0.0, period, 16).unwrap();
    for seed in 0..100 {
        let (p1, p2) = impose_constraints(&fs, &model, &b, 0.0, seed).unwrap();
        let r = constraint_drift(&fs, &model, &b, &p1, &p2, &[0.0]).unwrap()[0];
        assert!(r.max() <= 1e-10, "seed {seed}: {r:?}");
    }
    // away from the F origin as well
    let t0 = 0.37 * period;
    let (p1, p2) = impose_constraints(&fs, &model, &b, t0, 3).unwrap();
    let r = constraint_drift(&fs, &model, &b, &p1, &p2, &[t0]).unwrap()[0];
    assert!(r.max() <= 1e-10);
}

#[test]
fn constraint_solution_matches_closed_form_at_origin() {
    // At the F origin ψ depends on ψ₁ only and φ on ψ₂ only, so the norms of
    // ψ₁ and ψ₂ follow from ⟨ψ|ψ⟩ = (N+τ)/2, ⟨φ|φ⟩ = (N-τ)/2 directly.
    let (model, period) = oscillating_model();
    let b = basis(4);
    let fs = integrate_f(&model, 0.0, period, 8).unwrap();
    let (p1, p2) = impose_constraints(&fs, &model, &b, 0.0, 11).unwrap();
    let st = reconstruct(&fs, &model, &b, &p1, &p2, 0.0).unwrap();
    let tau = model.path.eval(0.0).unwrap().tau;
    let n = model.params.n_norm;
    let ph = model.phases(0.0).unwrap();
    let bpm = model.params.b + model.params.mu;
    let k = model.path.eval(0.0).unwrap().kappa;
    let kpsi = (model.params.mu * k / (4.0 * bpm)).exp();
    assert!((norm_sqr(&p1) - 0.5 * (n + tau) / (kpsi * kpsi)).abs() <= 1e-9);
    let kphi = kpsi * (-ph.f.re).exp() / (model.params.g() + model.params.lambda).norm();
    assert!((norm_sqr(&p2) - 0.5 * (n - tau) / (kphi * kphi)).abs() <= 1e-9);
    assert!((st.psi_norm_sqr() + st.phi_norm_sqr() - n).abs() <= 1e-12);
}

#[test]
fn gamma_solves_its_equation() {
    let (model, _) = oscillating_model();
    let h = 1e-5;
    for &t in &[0.0, 0.4, 1.1, 2.9] {
        let fd = (model.gamma(t + h).unwrap() - model.gamma(t - h).unwrap()) / (2.0 * h);
        let rhs = model.gamma_rate(t, model.gamma(t).unwrap()).unwrap();
        assert!((fd - rhs).norm() <= 1e-6, "t={t}: {}", (fd - rhs).norm());
    }
}

#[test]
fn reconstructed_states_obey_equations_of_motion() {
    let (model, period) = oscillating_model();
    let b = basis(4);
    let fs = integrate_f(&model, 0.0, period, 64).unwrap();
    let (p1, p2) = impose_constraints(&fs, &model, &b, 0.0, 5).unwrap();
    let h = 1e-5;
    for &t in &[0.2 * period, 0.5 * period, 0.8 * period] {
        let now = reconstruct(&fs, &model, &b, &p1, &p2, t).unwrap();
        let fwd = reconstruct(&fs, &model, &b, &p1, &p2, t + h).unwrap();
        let back = reconstruct(&fs, &model, &b, &p1, &p2, t - h).unwrap();
        let (dpsi, dphi) = model.params.state_derivative(b.energies(), &now.psi, &now.phi);
        for k in 0..4 {
            assert!(((fwd.psi[k] - back.psi[k]) / (2.0 * h) - dpsi[k]).norm() <= 1e-6);
            assert!(((fwd.phi[k] - back.phi[k]) / (2.0 * h) - dphi[k]).norm() <= 1e-6);
        }
    }
}

fn fixed_point_setup() -> (ValidatedParams, GeneralModel, SimpleSolution, EnergyBasis) {
    let v = ModelParams::new(0.6, 1.3, -0.4, 0.5, 2.0)
        .with_diagonal(0.2, 0.1, -0.3, 0.25)
        .validate()
        .unwrap();
    let fp = fixed_point(&v).unwrap();
    let model = GeneralModel::new(&v, BackgroundPath::fixed_point(&fp)).unwrap();
    // align the constant phase of γ between the two constructions
    let lambda0 = model.phases(0.0).unwrap().lambda_phase;
    let b = basis(5);
    let simple = SimpleSolution::seeded(&v, b.clone(), 21).unwrap().with_gamma_phase(-lambda0);
    (v, model, simple, b)
}

#[test]
fn fixed_point_background_reproduces_simple_solution() {
    let (_, model, simple, b) = fixed_point_setup();
    assert!((model.gamma(0.0).unwrap() - simple.evolve(0.0).gamma()).norm() < 1e-13);
    let fs = integrate_f(&model, 0.0, 10.0, 100).unwrap();
    let s0 = simple.evolve(0.0);
    let (p1, p2) = initial_data_from_states(&fs, &model, &b, 0.0, &s0.psi, &s0.phi).unwrap();
    for t in grid(10.0, 50) {
        let g = reconstruct(&fs, &model, &b, &p1, &p2, t).unwrap();
        let s = simple.evolve(t);
        // best global phase per vector
        for (x, y) in [(&g.psi, &s.psi), (&g.phi, &s.phi)] {
            let ov = inner(y, x);
            let rot = Complex64::from_polar(1.0, -ov.arg());
            let aligned: Vec<Complex64> = x.iter().map(|z| z * rot).collect();
            assert!(max_abs_diff(&aligned, y) <= 1e-8, "t={t}");
            assert!(ov.arg().abs() <= 1e-8);
        }
    }
}

#[test]
fn fixed_point_constraints_recover_modal_weights() {
    let (v, model, simple, b) = fixed_point_setup();
    let fs = integrate_f(&model, 0.0, 1.0, 4).unwrap();
    let (p1, p2) = impose_constraints(&fs, &model, &b, 0.0, 8).unwrap();
    // at t = 0: ψ' = K₊ + K₋ and dψ'/dt = ν₊K₊ + ν₋K₋, with ψ'(0) = ψ₁, ψ̇'(0) = ψ₂
    let (np, nm) = (simple.modes.nu_plus, simple.modes.nu_minus);
    let kp: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, c)| (c - nm * a) / (np - nm)).collect();
    let km: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, c)| (np * a - c) / (np - nm)).collect();
    let k = fixed_point(&v).unwrap().kappa0;
    let scale = (v.mu * k / (2.0 * (v.b + v.mu))).exp();
    assert!((norm_sqr(&kp) * scale - simple.modes.s_plus).abs() <= 1e-8);
    assert!((norm_sqr(&km) * scale - simple.modes.s_minus).abs() <= 1e-8);
    assert!(inner(&kp, &km).norm() <= 1e-8);
}

#[test]
fn constant_background_characteristic_exponents() {
    let (_, model, simple, _) = fixed_point_setup();
    let fs = integrate_f(&model, 0.0, 3.0, 30).unwrap();
    let (np, nm) = (simple.modes.nu_plus, simple.modes.nu_minus);
    for t in grid(3.0, 12) {
        let f1 = (nm * (np * t).exp() - np * (nm * t).exp()) / (nm - np);
        let f2 = ((np * t).exp() - (nm * t).exp()) / (np - nm);
        let v = fs.eval(&model, t).unwrap();
        assert!((v.f1 - f1).norm() <= 1e-8 * f1.norm().max(1.0));
        assert!((v.f2 - f2).norm() <= 1e-8 * f2.norm().max(1.0));
    }
}

#[test]
fn zero_coupling_keeps_f1_constant() {
    // g + λ = 0 needs b = 0 and a = -λ
    let v = ModelParams::new(-0.3, 0.0, -0.7, 0.3, 2.0).validate().unwrap();
    let path = BackgroundPath::Case3 {
        delta0: 0.4,
        mu: -0.7,
        n_norm: 2.0,
    };
    let model = GeneralModel::new(&v, path).unwrap();
    let fs = integrate_f(&model, 0.0, 2.0, 10).unwrap();
    for t in grid(2.0, 8) {
        let f = fs.eval(&model, t).unwrap();
        assert!((f.f1 - 1.0).norm() < 1e-14 && f.df1.norm() < 1e-14);
    }
}

#[test]
fn single_mode_state_is_proportional_to_f1() {
    let (model, period) = oscillating_model();
    let b = basis(3);
    let fs = integrate_f(&model, 0.0, period, 16).unwrap();
    let p1 = vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4), Complex64::new(0.5, 0.0)];
    let p2 = vec![Complex64::new(0.0, 0.0); 3];
    let t = 0.6 * period;
    let st = reconstruct(&fs, &model, &b, &p1, &p2, t).unwrap();
    let evolved = b.propagate(&p1, t);
    let ratio = st.psi[0] / evolved[0];
    for (a, e) in st.psi.iter().zip(evolved.iter()).skip(1) {
        assert!((a - ratio * e).norm() <= 1e-14 * a.norm().max(1.0));
    }
}

#[test]
fn integrated_background_agrees_with_closed_form() {
    let v = pneg1_params();
    let d = v.derive().unwrap();
    let orbit = PNegOneOrbit::new(5.0, 4.0).unwrap();
    let period_t = orbit.period().unwrap() / d.s_slope.abs();
    let s_grid: Vec<f64> = (0..=800).map(|i| d.s_slope * period_t * (800 - i) as f64 / 800.0).collect();
    let series = integrate(orbit.at(0.0).unwrap(), &orbit.potential(), &s_grid, &IntegratorOptions::default()).unwrap();
    let sampled = BackgroundPath::Sampled(SampledPath::from_series(&series, &d, &v).unwrap());
    let exact = BackgroundPath::pneg1(orbit, &d);
    let ts = grid(period_t * 0.999, 97);
    let inner_ts: Vec<f64> = ts.iter().map(|t| t + 1e-3).collect();
    assert!(sampled.consistency_residual(&v, &inner_ts, 1e-5).unwrap() <= 1e-6);
    assert!(exact.consistency_residual(&v, &ts, 1e-5).unwrap() <= 1e-8);
    let end = sampled.range().1;
    let m_s = GeneralModel::new(&v, sampled).unwrap();
    let m_e = GeneralModel::new(&v, exact).unwrap();
    let fs_s = integrate_f(&m_s, 0.0, end, 32).unwrap();
    let fs_e = integrate_f(&m_e, 0.0, end, 32).unwrap();
    for &t in &ts {
        let (a, b) = (fs_s.eval(&m_s, t).unwrap(), fs_e.eval(&m_e, t).unwrap());
        assert!((a.f1 - b.f1).norm() <= 1e-6 * b.f1.norm().max(1.0));
        assert!((m_s.gamma(t).unwrap() - m_e.gamma(t).unwrap()).norm() <= 1e-7);
    }
}
