//! Real-argument Jacobi elliptic functions and the incomplete elliptic
//! integral of the first kind, for any finite real parameter `m`.
//!
//! * `0 ≤ m < 1` is evaluated directly: arithmetic–geometric mean descent
//!   for the amplitude, Carlson's `R_F` for the integral.
//! * `m < 0` goes through the negative-parameter transformation
//!   `sn(u|-k) = sd(v|k/(1+k)) / √(1+k)` with `v = u√(1+k)`.
//! * `m > 1` goes through the reciprocal-parameter transformation
//!   `sn(u|m) = sn(u√m | 1/m) / √m`.
//!
//! The imaginary-argument amplitude needed by the `p = -1` orbit is exposed
//! only as the real quantity `-2i·am(iu|m)` ([`kappa_kernel`]).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const AGM_EPS: f64 = 1e-16;
const MAX_AGM_STEPS: usize = 64;

/// Evaluation route chosen for a parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    NegativeParameter,
    ReciprocalParameter,
}

/// The parameter `m = k²` of the elliptic functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus(f64);

impl Modulus {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidInput(format!("elliptic parameter m = {m}")));
        }
        Ok(Self(m))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn route(self) -> Route {
        if self.0 < 0.0 {
            Route::NegativeParameter
        } else if self.0 > 1.0 {
            Route::ReciprocalParameter
        } else {
            Route::Direct
        }
    }
}

/// `(sn, cn, dn)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..MAX_AGM_STEPS {
        if (a - b).abs() <= AGM_EPS * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    a
}

/// Complete integral `K(m)` for `m < 1`.
pub fn ellip_k(m: f64) -> Result<f64> {
    if !m.is_finite() || m >= 1.0 {
        return Err(Error::Domain(format!("K(m) requires m < 1, got {m}")));
    }
    Ok(PI / (2.0 * agm(1.0, (1.0 - m).sqrt())))
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    const ERRTOL: f64 = 8e-4;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let ave = (x + y + z) / 3.0;
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt();
        }
    }
}

/// Incomplete integral of the first kind `F(φ|m) = ∫₀^φ dθ / √(1 - m sin²θ)`.
///
/// For `m < 1` every real `φ` is accepted via `F(φ + nπ) = F(φ) + 2nK`.
/// For `m ≥ 1` the path must avoid the singularity `m sin²θ = 1`.
pub fn ellip_f(phi: f64, m: Modulus) -> Result<f64> {
    if !phi.is_finite() {
        return Err(Error::InvalidInput(format!("phi = {phi}")));
    }
    let m = m.value();
    if phi == 0.0 {
        return Ok(0.0);
    }
    if m < 1.0 {
        let n = (phi / PI).round();
        let r = phi - n * PI;
        let (s, c) = r.sin_cos();
        let reduced = s * carlson_rf(c * c, 1.0 - m * s * s, 1.0);
        if n == 0.0 {
            return Ok(reduced);
        }
        return Ok(2.0 * n * ellip_k(m)? + reduced);
    }
    let s = phi.sin();
    if phi.abs() >= FRAC_PI_2 || m * s * s >= 1.0 {
        return Err(Error::Domain(format!(
            "F(phi|m) singular on the path: phi = {phi}, m = {m}"
        )));
    }
    let c = phi.cos();
    Ok(s * carlson_rf(c * c, 1.0 - m * s * s, 1.0))
}

/// Amplitude for `0 ≤ m < 1` by descending AGM (Abramowitz & Stegun 16.4).
fn am_direct(u: f64, m: f64) -> f64 {
    if m == 0.0 || u == 0.0 {
        return u;
    }
    let mut a = [0.0f64; MAX_AGM_STEPS + 1];
    let mut c = [0.0f64; MAX_AGM_STEPS + 1];
    a[0] = 1.0;
    c[0] = m.sqrt();
    let mut b = (1.0 - m).sqrt();
    let mut n = 0;
    while n < MAX_AGM_STEPS && c[n].abs() > AGM_EPS {
        let (an, bn) = (a[n], b);
        a[n + 1] = 0.5 * (an + bn);
        c[n + 1] = 0.5 * (an - bn);
        b = (an * bn).sqrt();
        n += 1;
    }
    let mut phi = (2f64).powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    phi
}

fn jacobi_direct(u: f64, m: f64) -> Jacobi {
    let phi = am_direct(u, m);
    let (sn, cn) = phi.sin_cos();
    Jacobi {
        sn,
        cn,
        dn: (1.0 - m * sn * sn).sqrt(),
    }
}

/// Jacobi amplitude `am(u|m)`, the inverse of `F(·|m)`.
///
/// Continuous and increasing in `u` for `m < 1`. For `m > 1` the amplitude
/// is bounded and periodic; the principal value in `[-π/2, π/2]` is returned.
pub fn jacobi_am(u: f64, m: Modulus) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("u = {u}")));
    }
    let m = m.value();
    Ok(match Modulus(m).route() {
        Route::Direct if m == 1.0 => u.sinh().atan(),
        Route::Direct => am_direct(u, m),
        Route::NegativeParameter => {
            let k = -m;
            let scale = (1.0 + k).sqrt();
            let phi = am_direct(u * scale, k / (1.0 + k));
            let n = (phi / PI).round();
            let r = phi - n * PI;
            n * PI + r.sin().atan2(r.cos() * scale)
        }
        Route::ReciprocalParameter => {
            let j = jacobi_sn_cn_dn(u, Modulus(m))?;
            j.sn.atan2(j.cn)
        }
    })
}

/// `(sn, cn, dn)(u|m)` for any finite real `u`, `m`.
pub fn jacobi_sn_cn_dn(u: f64, m: Modulus) -> Result<Jacobi> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("u = {u}")));
    }
    let m = m.value();
    Ok(match Modulus(m).route() {
        Route::Direct if m == 1.0 => {
            let sech = 1.0 / u.cosh();
            Jacobi {
                sn: u.tanh(),
                cn: sech,
                dn: sech,
            }
        }
        Route::Direct => jacobi_direct(u, m),
        Route::NegativeParameter => {
            let k = -m;
            let scale = (1.0 + k).sqrt();
            let j = jacobi_direct(u * scale, k / (1.0 + k));
            Jacobi {
                sn: j.sn / (scale * j.dn),
                cn: j.cn / j.dn,
                dn: 1.0 / j.dn,
            }
        }
        Route::ReciprocalParameter => {
            let root = m.sqrt();
            let j = jacobi_direct(u * root, 1.0 / m);
            Jacobi {
                sn: j.sn / root,
                cn: j.dn,
                dn: j.cn,
            }
        }
    })
}

/// Value and `u`-derivative of the orbit kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub slope: f64,
}

/// `-2i·am(iu|m)` for `m < 0`, evaluated as the real quantity
/// `2·asinh(sc(u|1-m))` through Jacobi's imaginary transformation.
pub fn kappa_kernel(u: f64, m: Modulus) -> Result<f64> {
    Ok(kappa_kernel_eval(u, m)?.value)
}

/// [`kappa_kernel`] together with its derivative `2·dc(u|1-m)`, which equals
/// `2·dn(iu|m)`.
pub fn kappa_kernel_eval(u: f64, m: Modulus) -> Result<KernelValue> {
    if !u.is_finite() {
        return Err(Error::InvalidInput(format!("u = {u}")));
    }
    let m = m.value();
    if m >= 0.0 {
        return Err(Error::Domain(format!("kappa kernel requires m < 0, got {m}")));
    }
    let mc = 1.0 - m;
    let root = mc.sqrt();
    // (sn, cn, dn)(u|1-m) via the reciprocal parameter 1/(1-m) in (0, 1).
    let j = jacobi_direct(u.abs() * root, 1.0 / mc);
    let sc = j.sn / (root * j.dn);
    let nc = 1.0 / j.dn;
    let value = 2.0 * sc.asinh();

    // Second route: e^{i am(iu|m)} = cn(iu|m) + i sn(iu|m) = nc - sc must be a
    // positive real for the result to be real.
    let log_route = Complex64::new(nc - sc, 0.0).ln() * -2.0;
    let gap = (log_route.re - value).abs();
    if log_route.im.abs() > 1e-10 || gap > 1e-10 * (1.0 + sc * sc) {
        return Err(Error::InternalConsistency(format!(
            "kappa kernel at u = {u}, m = {m}: imaginary residual {}, real gap {gap:e}",
            log_route.im
        )));
    }
    Ok(KernelValue {
        value: if u < 0.0 { -value } else { value },
        slope: 2.0 * j.cn / j.dn,
    })
}

/// Period of [`kappa_kernel`] in `u`, `4K(1/(1-m))/√(1-m)`.
pub fn kappa_kernel_period(m: Modulus) -> Result<f64> {
    let m = m.value();
    if m >= 0.0 {
        return Err(Error::Domain(format!("kappa kernel requires m < 0, got {m}")));
    }
    let mc = 1.0 - m;
    Ok(4.0 * ellip_k(1.0 / mc)? / mc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(m: f64) -> Modulus {
        Modulus::new(m).unwrap()
    }

    #[test]
    fn routes() {
        assert_eq!(md(0.3).route(), Route::Direct);
        assert_eq!(md(1.0).route(), Route::Direct);
        assert_eq!(md(-2.0).route(), Route::NegativeParameter);
        assert_eq!(md(3.0).route(), Route::ReciprocalParameter);
        assert!(Modulus::new(f64::NAN).is_err());
    }

    #[test]
    fn trivial_values() {
        for m in [-4.0, -0.5, 0.0, 0.3, 0.99, 2.5] {
            assert_eq!(ellip_f(0.0, md(m)).unwrap(), 0.0);
            assert_eq!(jacobi_am(0.0, md(m)).unwrap(), 0.0);
            let j = jacobi_sn_cn_dn(0.0, md(m)).unwrap();
            assert_eq!((j.sn, j.cn, j.dn), (0.0, 1.0, 1.0));
        }
        for phi in [-3.0, 0.2, 1.0, 7.5] {
            assert!((ellip_f(phi, md(0.0)).unwrap() - phi).abs() < 1e-15);
            assert_eq!(jacobi_am(phi, md(0.0)).unwrap(), phi);
        }
    }

    #[test]
    fn k_at_zero_and_known_value() {
        assert!((ellip_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        // K(1/2) = Γ(1/4)² / (4√π)
        let k_half = 1.854_074_677_301_372;
        assert!((ellip_k(0.5).unwrap() - k_half).abs() < 1e-14);
    }

    #[test]
    fn singular_path_is_a_domain_error() {
        assert!(matches!(ellip_f(1.2, md(2.0)), Err(Error::Domain(_))));
        assert!(matches!(ellip_f(FRAC_PI_2, md(1.0)), Err(Error::Domain(_))));
        assert!(ellip_f(0.5, md(2.0)).is_ok());
    }

    #[test]
    fn parameter_one_is_gudermannian() {
        let u = 0.8;
        assert!((jacobi_am(u, md(1.0)).unwrap() - u.sinh().atan()).abs() < 1e-15);
        let back = ellip_f(jacobi_am(u, md(1.0)).unwrap(), md(1.0)).unwrap();
        assert!((back - u).abs() < 1e-13);
    }

    #[test]
    fn reciprocal_parameter_identities() {
        for &u in &[-1.3, 0.2, 0.7, 2.9] {
            let j = jacobi_sn_cn_dn(u, md(2.5)).unwrap();
            assert!((j.sn * j.sn + j.cn * j.cn - 1.0).abs() < 1e-14);
            assert!((j.dn * j.dn + 2.5 * j.sn * j.sn - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_origin_and_slope() {
        let m = md(-16.0 / 17.0);
        let k = kappa_kernel_eval(0.0, m).unwrap();
        assert_eq!(k.value, 0.0);
        assert!((k.slope - 2.0).abs() < 1e-15);
        let h = 1e-5;
        let fd = (kappa_kernel(h, m).unwrap() - kappa_kernel(-h, m).unwrap()) / (2.0 * h);
        assert!((fd - 2.0).abs() < 1e-8);
        assert!(kappa_kernel(0.3, md(0.2)).is_err());
    }

    #[test]
    fn kernel_is_odd_and_periodic() {
        let m = md(-0.7);
        let period = kappa_kernel_period(m).unwrap();
        for &u in &[0.1, 0.45, 1.7, 3.3] {
            let a = kappa_kernel(u, m).unwrap();
            assert_eq!(kappa_kernel(-u, m).unwrap(), -a);
            assert!((kappa_kernel(u + period, m).unwrap() - a).abs() < 1e-12);
        }
    }
}
