//! Density matrix `ρ = (|ψ⟩⟨ψ| + |φ⟩⟨φ|)/N`, its evolution audit, expectation
//! values, and the closed orbit traced by `⟨X(t)⟩` for the fixed-point
//! solution.

use nalgebra::{DMatrix, Matrix2, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::I;
use crate::params::{ModelParams, ValidatedParams};
use crate::statevec_simple::{fixed_point, ModalConstants, StateVectorPair};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: DMatrix<Complex64>,
    pub t: f64,
}

fn dyad(a: &[Complex64], b: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

pub fn density(sv: &StateVectorPair, n_norm: f64) -> DensityMatrix {
    DensityMatrix {
        rho: (dyad(&sv.psi, &sv.psi) + dyad(&sv.phi, &sv.phi)) / Complex64::from(n_norm),
        t: sv.t,
    }
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.rho)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::from(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.eigenvalues().iter().filter(|&&e| e.abs() > threshold).count()
    }
}

fn hermiticity_residual(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `1 - 2𝒮/N² = 1 - (c/(2N²))δ^p`.
pub fn purity_predicted(delta: f64, c: f64, p: f64, n_norm: f64) -> f64 {
    1.0 - c / (2.0 * n_norm * n_norm) * delta.powf(p)
}

fn commutator_h(energies: &[f64], rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        rho[(i, j)] * (energies[i] - energies[j])
    })
}

/// `[H,ρ] + (1/N)[2iμ(Q|ψ⟩⟨ψ| - P|φ⟩⟨φ|) + 2λ(γ|φ⟩⟨ψ| - γ*|ψ⟩⟨φ|)]`, the value
/// of `iρ̇` implied by the equations of motion.
pub fn rho_rhs(sv: &StateVectorPair, params: &ModelParams, energies: &[f64]) -> DMatrix<Complex64> {
    let n = params.n_norm;
    let rho = density(sv, n).rho;
    let p = sv.psi_norm_sqr();
    let q = sv.phi_norm_sqr();
    let gamma = sv.gamma();
    let pp = dyad(&sv.psi, &sv.psi);
    let ff = dyad(&sv.phi, &sv.phi);
    let fp = dyad(&sv.phi, &sv.psi);
    let pf = dyad(&sv.psi, &sv.phi);
    let nonlinear = (pp * Complex64::from(q) - ff * Complex64::from(p)) * (2.0 * I * params.mu)
        + (fp * gamma - pf * gamma.conj()) * Complex64::from(2.0 * params.lambda);
    commutator_h(energies, &rho) + nonlinear / Complex64::from(n)
}

/// The same right-hand side with `⟨ψ|ψ⟩ = ⟨φ|φ⟩ = N/2` substituted:
/// `[H,ρ] + (1/N)[iμN(|ψ⟩⟨ψ| - |φ⟩⟨φ|) + 2λ(γ|φ⟩⟨ψ| - γ*|ψ⟩⟨φ|)]`.
pub fn rho_rhs_tau0(sv: &StateVectorPair, params: &ModelParams, energies: &[f64]) -> DMatrix<Complex64> {
    let n = params.n_norm;
    let rho = density(sv, n).rho;
    let gamma = sv.gamma();
    let nonlinear = (dyad(&sv.psi, &sv.psi) - dyad(&sv.phi, &sv.phi)) * (I * params.mu * n)
        + (dyad(&sv.phi, &sv.psi) * gamma - dyad(&sv.psi, &sv.phi) * gamma.conj())
            * Complex64::from(2.0 * params.lambda);
    commutator_h(energies, &rho) + nonlinear / Complex64::from(n)
}

/// Largest elementwise gap between the central difference `iρ̇` and
/// [`rho_rhs`] at every interior sample of a uniformly spaced series.
pub fn rho_dot_residual(
    series: &[StateVectorPair],
    params: &ModelParams,
    energies: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if series.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: series.len(),
        });
    }
    let h = series[1].t - series[0].t;
    if series
        .windows(2)
        .any(|w| ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs())
    {
        return Err(Error::InvalidInput("series must be uniformly spaced".into()));
    }
    let n = params.n_norm;
    Ok(series
        .windows(3)
        .map(|w| {
            let fd = (density(&w[2], n).rho - density(&w[0], n).rho) * (I / (2.0 * h));
            let gap = fd - rho_rhs(&w[1], params, energies);
            (w[1].t, gap.iter().map(|z| z.norm()).fold(0.0, f64::max))
        })
        .collect())
}

/// `Tr ρX`, rejecting an imaginary part above `1e-12·max(1, |Re|)`.
pub fn expectation(dm: &DensityMatrix, x: &DMatrix<Complex64>) -> Result<f64> {
    if x.nrows() != dm.dim() || x.ncols() != dm.dim() {
        return Err(Error::InvalidInput(format!(
            "operator is {}x{}, density matrix is {}x{}",
            x.nrows(),
            x.ncols(),
            dm.dim(),
            dm.dim()
        )));
    }
    let v = (&dm.rho * x).trace();
    if v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
        return Err(Error::NonHermitian(v.im.abs()));
    }
    Ok(v.re)
}

/// Linear-in-time rates of the matrix elements, zero in the default model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositionDrift {
    pub xaa: [f64; 3],
    pub xbb: [f64; 3],
    pub xab: [Complex64; 3],
}

/// Matrix elements `⟨A|Xᵢ|A⟩`, `⟨B|Xᵢ|B⟩`, `⟨A|Xᵢ|B⟩` of a 3-D position operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositionModel {
    pub xaa: [f64; 3],
    pub xbb: [f64; 3],
    pub xab: [Complex64; 3],
    pub drift: Option<PositionDrift>,
}

impl PositionModel {
    pub fn new(xaa: [f64; 3], xbb: [f64; 3], xab: [Complex64; 3]) -> Self {
        Self {
            xaa,
            xbb,
            xab,
            drift: None,
        }
    }

    pub fn with_drift(mut self, drift: PositionDrift) -> Self {
        self.drift = Some(drift);
        self
    }

    /// Matrix elements of explicit Hermitian operators between `|A⟩` and `|B⟩`.
    pub fn from_operators(
        ops: &[DMatrix<Complex64>; 3],
        a: &[Complex64],
        b: &[Complex64],
    ) -> Result<Self> {
        let av = nalgebra::DVector::from_column_slice(a);
        let bv = nalgebra::DVector::from_column_slice(b);
        let mut xaa = [0.0; 3];
        let mut xbb = [0.0; 3];
        let mut xab = [Complex64::new(0.0, 0.0); 3];
        for (k, x) in ops.iter().enumerate() {
            if x.nrows() != a.len() || x.ncols() != a.len() {
                return Err(Error::InvalidInput("operator dimension mismatch".into()));
            }
            let r = hermiticity_residual(x);
            if r > 1e-12 {
                return Err(Error::NonHermitian(r));
            }
            xaa[k] = av.dotc(&(x * &av)).re;
            xbb[k] = bv.dotc(&(x * &bv)).re;
            xab[k] = av.dotc(&(x * &bv));
        }
        Ok(Self::new(xaa, xbb, xab))
    }

    fn at(&self, t: f64) -> ([f64; 3], [f64; 3], [Complex64; 3]) {
        match &self.drift {
            None => (self.xaa, self.xbb, self.xab),
            Some(d) => (
                std::array::from_fn(|i| self.xaa[i] + d.xaa[i] * t),
                std::array::from_fn(|i| self.xbb[i] + d.xbb[i] * t),
                std::array::from_fn(|i| self.xab[i] + d.xab[i] * t),
            ),
        }
    }
}

/// `⟨X(t)⟩ = X₀ + V cos 2σt + W sin 2σt` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySamples {
    pub t: Vec<f64>,
    pub x: Vec<[f64; 3]>,
    /// `2σ`.
    pub omega: f64,
    /// Analytic `X₀`, `V`, `W` (at `t = 0` when the model drifts).
    pub center: [f64; 3],
    pub v: [f64; 3],
    pub w: [f64; 3],
}

pub fn trajectory_simple(
    pm: &PositionModel,
    mc: &ModalConstants,
    params: &ValidatedParams,
    t_grid: &[f64],
) -> Result<TrajectorySamples> {
    if !(mc.sigma > 0.0) {
        return Err(Error::DegenerateFrequency(mc.sigma * mc.sigma));
    }
    let gamma0 = fixed_point(params)?.gamma0;
    let n = params.n_norm;
    let d = (params.g() + params.lambda).norm_sqr() * gamma0 * gamma0;
    let wa = (1.0 + mc.nu_plus.norm_sqr() / d) / n;
    let wb = (1.0 + mc.nu_minus.norm_sqr() / d) / n;
    let wab = (1.0 + mc.nu_plus.conj() * mc.nu_minus / d) / n;
    let omega = 2.0 * mc.sigma;
    let coeffs = |t: f64| {
        let (xaa, xbb, xab) = pm.at(t);
        let center: [f64; 3] = std::array::from_fn(|i| wa * xaa[i] + wb * xbb[i]);
        let cp: [Complex64; 3] = std::array::from_fn(|i| wab * xab[i]);
        (
            center,
            std::array::from_fn(|i| 2.0 * cp[i].re),
            std::array::from_fn(|i| 2.0 * cp[i].im),
        )
    };
    let x = t_grid
        .iter()
        .map(|&t| {
            let (c, v, w) = coeffs(t);
            let (s, co) = (omega * t).sin_cos();
            std::array::from_fn(|i| c[i] + v[i] * co + w[i] * s)
        })
        .collect();
    let (center, v, w) = coeffs(0.0);
    Ok(TrajectorySamples {
        t: t_grid.to_vec(),
        x,
        omega,
        center,
        v,
        w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseFit {
    pub center: [f64; 3],
    pub v: [f64; 3],
    pub w: [f64; 3],
    /// Major and minor axis directions.
    pub e1: [f64; 3],
    pub e2: [f64; 3],
    pub normal: [f64; 3],
    pub r1: f64,
    pub r2: f64,
    pub omega: f64,
    /// `max |x - (X₀ + V cos ωt + W sin ωt)|`.
    pub harmonic_residual: f64,
    /// `max |(x - X₀)·n|`.
    pub planarity_residual: f64,
    /// `max |(x₁/R₁)² + (x₂/R₂)² - 1|`.
    pub conic_residual: f64,
    /// `(max - min)/mean` of the areal velocity about a focus.
    pub focal_areal_variation: f64,
    /// `V` and `W` collinear (or zero): the orbit is a segment or a point.
    pub degenerate: bool,
}

/// Fit `X₀ + V cos ωt + W sin ωt` by least squares at the known `ω`, then
/// read the axes from the singular values of `[V W]`.
pub fn ellipse_fit(samples: &TrajectorySamples) -> Result<EllipseFit> {
    let n = samples.t.len();
    if n < 8 {
        return Err(Error::InsufficientData { needed: 8, got: n });
    }
    let omega = samples.omega;
    let span = samples.t[n - 1] - samples.t[0];
    if !(omega > 0.0) || span * omega < std::f64::consts::PI {
        return Err(Error::InsufficientData { needed: 8, got: n });
    }
    // normal equations for the basis (1, cos, sin), shared by all coordinates
    let mut gram = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Matrix3::<f64>::zeros();
    for (t, x) in samples.t.iter().zip(&samples.x) {
        let (s, c) = (omega * t).sin_cos();
        let phi = Vector3::new(1.0, c, s);
        gram += phi * phi.transpose();
        rhs += phi * Vector3::from(*x).transpose();
    }
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or(Error::InsufficientData { needed: 8, got: n })?;
    let center: [f64; 3] = std::array::from_fn(|i| coef[(0, i)]);
    let v = Vector3::new(coef[(1, 0)], coef[(1, 1)], coef[(1, 2)]);
    let w = Vector3::new(coef[(2, 0)], coef[(2, 1)], coef[(2, 2)]);
    let x0 = Vector3::from(center);

    let harmonic_residual = samples
        .t
        .iter()
        .zip(&samples.x)
        .map(|(t, x)| {
            let (s, c) = (omega * t).sin_cos();
            (Vector3::from(*x) - (x0 + v * c + w * s)).norm()
        })
        .fold(0.0, f64::max);

    let g = Matrix2::new(v.dot(&v), v.dot(&w), v.dot(&w), w.dot(&w));
    let eig = g.symmetric_eigen();
    let (i1, i2) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let r1 = eig.eigenvalues[i1].max(0.0).sqrt();
    let r2 = eig.eigenvalues[i2].max(0.0).sqrt();
    let degenerate = r1 <= 1e-12 * x0.norm().max(1.0) || r2 <= 1e-9 * r1;
    let dir = |k: usize, r: f64| -> Vector3<f64> {
        let c = eig.eigenvectors.column(k);
        let u = v * c[0] + w * c[1];
        if r > 0.0 { u / r } else { u }
    };
    let mut e1 = dir(i1, r1);
    let mut e2 = dir(i2, r2);
    let mut normal = v.cross(&w);
    if degenerate {
        if !((e1.norm() - 1.0).abs() < 1e-6) {
            e1 = Vector3::x();
        }
        // any orthonormal completion of the segment direction
        let seed = if e1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        e2 = (seed - e1 * e1.dot(&seed)).normalize();
        normal = e1.cross(&e2);
    }
    let normal = if normal.norm() > 0.0 { normal.normalize() } else { Vector3::z() };

    let mut planarity_residual: f64 = 0.0;
    let mut conic_residual: f64 = 0.0;
    for x in &samples.x {
        let d = Vector3::from(*x) - x0;
        planarity_residual = planarity_residual.max(d.dot(&normal).abs());
        if !degenerate {
            let (a, b) = (d.dot(&e1) / r1, d.dot(&e2) / r2);
            conic_residual = conic_residual.max((a * a + b * b - 1.0).abs());
        }
    }

    let focal_areal_variation = if degenerate {
        0.0
    } else {
        let focus = x0 + e1 * (r1 * r1 - r2 * r2).sqrt();
        let rates: Vec<f64> = samples
            .t
            .iter()
            .map(|t| {
                let (s, c) = (omega * t).sin_cos();
                let pos = x0 + v * c + w * s;
                let vel = (w * c - v * s) * omega;
                0.5 * (pos - focus).cross(&vel).norm()
            })
            .collect();
        let max = rates.iter().copied().fold(f64::MIN, f64::max);
        let min = rates.iter().copied().fold(f64::MAX, f64::min);
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        (max - min) / mean
    };

    let arr = |u: Vector3<f64>| [u.x, u.y, u.z];
    Ok(EllipseFit {
        center,
        v: arr(v),
        w: arr(w),
        e1: arr(e1),
        e2: arr(e2),
        normal: arr(normal),
        r1,
        r2,
        omega,
        harmonic_residual,
        planarity_residual,
        conic_residual,
        focal_areal_variation,
        degenerate,
    })
}
