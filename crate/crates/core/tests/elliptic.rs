mod common;

use common::{quad, rk4, Draws};
use nlqm::elliptic::{
    ellip_f, ellip_k, jacobi_am, jacobi_sn_cn_dn, kappa_kernel, kappa_kernel_eval, Modulus,
};
use std::f64::consts::{FRAC_PI_2, PI};

fn md(m: f64) -> Modulus {
    Modulus::new(m).unwrap()
}

fn f_oracle(phi: f64, m: f64) -> f64 {
    quad(|t| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, 64)
}

#[test]
fn f_matches_quadrature_at_half_parameter() {
    let got = ellip_f(FRAC_PI_2, md(0.5)).unwrap();
    let want = f_oracle(FRAC_PI_2, 0.5);
    assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
}

#[test]
fn f_matches_quadrature_over_parameter_range() {
    for &m in &[-5.0, -16.0 / 17.0, -0.3, 0.0, 0.2, 0.7, 0.95] {
        for &phi in &[0.1, 0.7, 1.4, 2.8, 5.0, -2.2] {
            let got = ellip_f(phi, md(m)).unwrap();
            let want = f_oracle(phi, m);
            assert!((got - want).abs() <= 1e-11, "m={m} phi={phi}: {got} vs {want}");
        }
    }
    // m > 1 inside the admissible window
    let got = ellip_f(0.5, md(2.0)).unwrap();
    assert!((got - f_oracle(0.5, 2.0)).abs() <= 1e-11);
}

#[test]
fn negative_parameter_amplitude_agrees_with_quadrature() {
    // am is inverted through the negative-parameter transformation; its
    // defining integral is evaluated independently.
    for &m in &[-5.0, -2.0, -16.0 / 17.0, -0.1] {
        for &u in &[0.05, 0.4, 1.1, 2.5] {
            let phi = jacobi_am(u, md(m)).unwrap();
            let back = f_oracle(phi, m);
            assert!((back - u).abs() <= 1e-11, "m={m} u={u}: {back}");
        }
    }
}

#[test]
fn am_f_round_trip() {
    let phi = 0.7;
    let u = ellip_f(phi, md(-0.9)).unwrap();
    assert!((jacobi_am(u, md(-0.9)).unwrap() - phi).abs() <= 1e-12);

    let mut d = Draws::new(7);
    for _ in 0..1000 {
        let m = d.uniform(-5.0, 0.99);
        let phi = d.uniform(-6.0, 6.0);
        let u = ellip_f(phi, md(m)).unwrap();
        let back = jacobi_am(u, md(m)).unwrap();
        assert!((back - phi).abs() <= 1e-12, "m={m} phi={phi} back={back}");
    }
}

#[test]
fn quasi_periodicity() {
    for &m in &[0.0, 0.3, 0.9] {
        let k = ellip_k(m).unwrap();
        for &phi in &[0.2, 1.0, 2.5] {
            let lhs = ellip_f(phi + PI, md(m)).unwrap();
            let rhs = ellip_f(phi, md(m)).unwrap() + 2.0 * k;
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}

#[test]
fn identities_at_random_points() {
    let mut d = Draws::new(11);
    for _ in 0..1000 {
        let m = d.uniform(-5.0, 0.99);
        let u = d.uniform(-10.0, 10.0);
        let j = jacobi_sn_cn_dn(u, md(m)).unwrap();
        assert!((j.sn * j.sn + j.cn * j.cn - 1.0).abs() <= 1e-11);
        assert!((j.dn * j.dn + m * j.sn * j.sn - 1.0).abs() <= 1e-11);
        let am = jacobi_am(u, md(m)).unwrap();
        assert!((am.sin() - j.sn).abs() <= 1e-11);
        assert!((am.cos() - j.cn).abs() <= 1e-11);
    }
}

#[test]
fn dn_is_the_derivative_of_am() {
    let mut d = Draws::new(13);
    let h = 1e-5;
    for _ in 0..500 {
        let m = d.uniform(-5.0, 0.99);
        let u = d.uniform(-5.0, 5.0);
        let fd = (jacobi_am(u + h, md(m)).unwrap() - jacobi_am(u - h, md(m)).unwrap()) / (2.0 * h);
        let dn = jacobi_sn_cn_dn(u, md(m)).unwrap().dn;
        assert!((fd - dn).abs() <= 1e-8, "m={m} u={u}: {fd} vs {dn}");
    }
}

#[test]
fn am_is_monotone_below_one() {
    for &m in &[-3.0, -0.5, 0.0, 0.5, 0.95] {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..2000 {
            let u = -10.0 + i as f64 * 0.01;
            let a = jacobi_am(u, md(m)).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }
}

#[test]
fn kernel_matches_real_ode() {
    // K'' = m sinh K, K(0) = 0, K'(0) = 2.
    let m = -16.0 / 17.0;
    let y = rk4(
        |_, y| vec![y[1], m * y[0].sinh()],
        0.0,
        &[0.0, 2.0],
        0.3,
        30_000,
    );
    let k = kappa_kernel_eval(0.3, md(m)).unwrap();
    assert!((k.value - y[0]).abs() <= 1e-10, "{} vs {}", k.value, y[0]);
    assert!((k.slope - y[1]).abs() <= 1e-10);
}

#[test]
fn kernel_first_integral() {
    // (K'/2)² = 1 + m (cosh K - 1) / 2
    let mut d = Draws::new(5);
    for _ in 0..500 {
        let m = d.uniform(-5.0, -0.01);
        let u = d.uniform(-8.0, 8.0);
        let k = kappa_kernel_eval(u, md(m)).unwrap();
        let lhs = (k.slope / 2.0).powi(2);
        let rhs = 1.0 + m * (k.value.cosh() - 1.0) / 2.0;
        assert!((lhs - rhs).abs() < 1e-11);
        assert_eq!(kappa_kernel(-u, md(m)).unwrap(), -k.value);
    }
}
