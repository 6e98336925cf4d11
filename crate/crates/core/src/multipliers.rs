//! Smooth cutoffs, the second-order and general partitions of unity, multiplier
//! application, and quadrature estimates of Theta(1, inf) multiplier norms.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::directions::DirectionSet;
use crate::error::{Error, Result};
use crate::fields::{GridField, GridSpec, Space};
use crate::poly::NormalForm2;

/// C-infinity transition: 0 for x <= 0, 1 for x >= 1.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// phi_eps(t): 0 for |t| <= eps, 1 for |t| >= 2 eps.
pub fn bump(t: f64, eps: f64) -> f64 {
    smoothstep(t.abs() / eps - 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplierField {
    pub grid: GridSpec,
    /// Values at the frequency samples, FFT order.
    pub values: Vec<f64>,
    pub provenance: String,
}

impl MultiplierField {
    /// Evaluates `f` at every frequency sample of `grid`.
    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(grid: GridSpec, provenance: &str, f: F) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.freq_point(i)))
            .collect();
        MultiplierField {
            grid,
            values,
            provenance: provenance.to_string(),
        }
    }

    pub fn constant(grid: GridSpec, v: f64) -> Self {
        let len = grid.len();
        MultiplierField {
            grid,
            values: vec![v; len],
            provenance: format!("constant {v}"),
        }
    }

    pub fn in_unit_range(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// As a frequency-space field, for export.
    pub fn to_field(&self) -> GridField {
        GridField {
            grid: self.grid.clone(),
            space: Space::Frequency,
            data: self.values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }
}

/// Phi_k(eta) = phi(Re Q_k) + phi(Im Q_k) - phi(Re Q_k) phi(Im Q_k)
pub fn phi_k(nf: &NormalForm2, k: usize, eps: f64, eta: &[f64]) -> f64 {
    let q = nf.q_k(k, eta);
    let a = bump(q.re, eps);
    let b = bump(q.im, eps);
    a + b - a * b
}

#[derive(Clone, Debug)]
pub struct SecondOrderCutoffs {
    pub eps: f64,
    pub phi: Vec<MultiplierField>,
    /// Phi_1, Phi_2 (1 - Phi_1), ..., and the remainder prod (1 - Phi_j) last.
    pub pieces: Vec<MultiplierField>,
}

pub fn second_order_cutoffs(
    nf: &NormalForm2,
    eps: f64,
    grid: &GridSpec,
) -> Result<SecondOrderCutoffs> {
    if nf.eps.contains(&0) {
        return Err(Error::Unsupported(
            "cutoffs need a nondegenerate normal form".into(),
        ));
    }
    if grid.n() != nf.dim() {
        return Err(Error::DimensionMismatch {
            expected: nf.dim(),
            got: grid.n(),
        });
    }
    let n = nf.dim();
    let phi: Vec<MultiplierField> = (0..n)
        .map(|k| {
            MultiplierField::from_fn(grid.clone(), &format!("Phi_{} eps={eps}", k + 1), |xi| {
                phi_k(nf, k, eps, &nf.eta_of(xi))
            })
        })
        .collect();
    let mut pieces = Vec::with_capacity(n + 1);
    let mut rest = vec![1.0; grid.len()];
    for (k, p) in phi.iter().enumerate() {
        let values = p.values.iter().zip(&rest).map(|(a, r)| a * r).collect();
        pieces.push(MultiplierField {
            grid: grid.clone(),
            values,
            provenance: format!("telescoped piece {}", k + 1),
        });
        rest.iter_mut()
            .zip(&p.values)
            .for_each(|(r, a)| *r *= 1.0 - a);
    }
    pieces.push(MultiplierField {
        grid: grid.clone(),
        values: rest,
        provenance: "remainder prod(1 - Phi_j)".into(),
    });
    Ok(SecondOrderCutoffs { eps, phi, pieces })
}

/// psi_k = bump(dist_k, r0) and Psi_{k+1} = psi_{k+1} prod_{l <= k} (1 - psi_l).
pub fn general_cutoffs(ds: &DirectionSet, grid: &GridSpec) -> Result<Vec<MultiplierField>> {
    if ds.margin <= 0.0 {
        return Err(Error::UncertifiedDirections(ds.margin));
    }
    let m = ds.thetas.len();
    let psi: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            (0..grid.len())
                .into_par_iter()
                .map(|i| bump(ds.distance(k, &grid.freq_point(i)), ds.r0))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(m);
    let mut rest = vec![1.0; grid.len()];
    for (k, p) in psi.iter().enumerate() {
        let values = p.iter().zip(&rest).map(|(a, r)| a * r).collect();
        out.push(MultiplierField {
            grid: grid.clone(),
            values,
            provenance: format!("Psi_{} r0={}", k + 1, ds.r0),
        });
        rest.iter_mut().zip(p).for_each(|(r, a)| *r *= 1.0 - a);
    }
    Ok(out)
}

pub fn apply_multiplier(fhat: &GridField, m: &MultiplierField) -> Result<GridField> {
    fhat.expect_space(Space::Frequency)?;
    if !fhat.grid.same_as(&m.grid) {
        return Err(Error::GridMismatch(
            "multiplier grid differs from field grid".into(),
        ));
    }
    let mut out = fhat.clone();
    out.data
        .iter_mut()
        .zip(&m.values)
        .for_each(|(a, v)| *a *= v);
    Ok(out)
}

/// (2 pi)^{-1/2} sup over lines of the integral of |inverse transform along
/// `axis`|, with the unitary inverse transform evaluated by FFT.
pub fn multiplier_theta_norm(m: &MultiplierField, axis: usize) -> Result<f64> {
    theta_norm_with(&m.grid, axis, |flat| m.values[flat])
}

/// As `multiplier_theta_norm`, evaluating the multiplier lazily from xi.
pub fn theta_norm_fn<F: Fn(&[f64]) -> f64 + Sync>(
    grid: &GridSpec,
    axis: usize,
    f: F,
) -> Result<f64> {
    theta_norm_with(grid, axis, |flat| f(&grid.freq_point(flat)))
}

fn theta_norm_with<F: Fn(usize) -> f64 + Sync>(
    grid: &GridSpec,
    axis: usize,
    value: F,
) -> Result<f64> {
    if axis >= grid.n() {
        return Err(Error::InvalidAxis { axis, n: grid.n() });
    }
    let (bases, stride) = grid.lines(axis);
    let d = grid.dims[axis];
    let fft = FftPlanner::new().plan_fft_inverse(d);
    let len = grid.length(axis);
    let h = grid.h(axis);
    // g_l = (2 pi)^{-1/2} (2 pi / L) sum_m m(xi_m) e^{i xi_m x_l}; result = int |g| / sqrt(2 pi)
    let scale = (TAU / len) * h / TAU;
    let sup = bases
        .par_iter()
        .map(|&b| {
            let mut line: Vec<C64> = (0..d)
                .map(|i| C64::new(value(b + i * stride), 0.0))
                .collect();
            fft.process(&mut line);
            line.iter().map(|z| z.norm()).sum::<f64>() * scale
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// Quantities of the one-dimensional L1 estimate for 1 - phi_eps(q(t)).
#[derive(Clone, Debug, Serialize)]
pub struct MultiplierBoundEstimate {
    /// Measure of {|q| < 2 eps}, the support of 1 - phi_eps(q).
    pub mu1: f64,
    pub m1: f64,
    pub m2: f64,
    pub eps: f64,
    /// 2 mu1 [M1/eps + sqrt(M2/eps)]
    pub bound: f64,
    /// Integral of |unitary inverse transform of 1 - phi_eps(q)|.
    pub measured: f64,
    /// mu [M1/eps + sqrt(M2/eps)] with mu, M1, M2 taken on {|q| < eps}.
    pub sublevel_product: f64,
}

/// Samples q, q' and q'' on a uniform t grid (spacing dt). Returns None when
/// 1 - phi_eps(q) does not vanish at both ends of the window: the factor is then
/// not compactly supported in t (q is constant on the line) and has no L1 transform.
pub fn basic_estimate(
    q: &[f64],
    dq: &[f64],
    d2q: &[f64],
    dt: f64,
    eps: f64,
) -> Option<MultiplierBoundEstimate> {
    let n = q.len();
    let g: Vec<f64> = q.iter().map(|&v| 1.0 - bump(v, eps)).collect();
    if g[0] != 0.0 || g[n - 1] != 0.0 {
        return None;
    }
    let stats = |level: f64| {
        let mut mu = 0.0;
        let mut m1: f64 = 0.0;
        let mut m2: f64 = 0.0;
        for i in 0..n {
            if q[i].abs() < level {
                mu += dt;
                m1 = m1.max(dq[i].abs());
                m2 = m2.max(d2q[i].abs());
            }
        }
        (mu, m1, m2)
    };
    let (mu1, m1, m2) = stats(2.0 * eps);
    let (mu_e, m1_e, m2_e) = stats(eps);
    let sublevel_product = if mu_e > 0.0 {
        mu_e * (m1_e / eps + (m2_e / eps).sqrt())
    } else {
        0.0
    };
    let mut line: Vec<C64> = g.iter().map(|&v| C64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut line);
    // |g_check(tau_m)| = (2 pi)^{-1/2} dt |sum_l g_l e^{i t_l tau_m}|, weight 2 pi / (n dt)
    let measured =
        line.iter().map(|z| z.norm()).sum::<f64>() * dt / TAU.sqrt() * TAU / (n as f64 * dt);
    Some(MultiplierBoundEstimate {
        mu1,
        m1,
        m2,
        eps,
        bound: 2.0 * mu1 * (m1 / eps + (m2 / eps).sqrt()),
        measured,
        sublevel_product,
    })
}

/// Real and imaginary parts of Q_j along eta_axis = t, with their t-derivatives.
pub struct QLine {
    pub re: [Vec<f64>; 3],
    pub im: [Vec<f64>; 3],
}

/// Q_j(eta) sampled along eta_axis over `ts` with the other eta coordinates fixed.
pub fn q_line(nf: &NormalForm2, j: usize, axis: usize, eta: &[f64], ts: &[f64]) -> QLine {
    let e = nf.eps[axis] as f64;
    let beta = nf.beta[axis];
    let mut re = [
        Vec::with_capacity(ts.len()),
        Vec::with_capacity(ts.len()),
        Vec::with_capacity(ts.len()),
    ];
    let mut im = [
        Vec::with_capacity(ts.len()),
        Vec::with_capacity(ts.len()),
        Vec::with_capacity(ts.len()),
    ];
    let mut p = eta.to_vec();
    for &t in ts {
        p[axis] = t;
        let q = nf.q_k(j, &p);
        // d/dt eps (i t - beta)^2 = 2 i eps (i t - beta); second derivative -2 eps
        let d1 = C64::new(0.0, 2.0 * e) * C64::new(-beta, t);
        re[0].push(q.re);
        re[1].push(d1.re);
        re[2].push(-2.0 * e);
        im[0].push(q.im);
        im[1].push(d1.im);
        im[2].push(0.0);
    }
    QLine { re, im }
}

/// Theta, nu and the in-plane frame used to express the transform along Theta
/// of a multiplier constant along nu.
#[derive(Clone, Debug, Serialize)]
pub struct PlaneGeometry {
    pub theta: Vec<f64>,
    pub nu: Vec<f64>,
    pub alpha: f64,
    pub nu_perp: Vec<f64>,
    pub theta_perp: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PlaneGeometry {
    pub fn new(theta: &[f64], nu: &[f64]) -> Result<Self> {
        let c = dot(theta, nu).clamp(-1.0, 1.0);
        let s = (1.0 - c * c).sqrt();
        if s <= 1e-6 {
            return Err(Error::NearParallel(c));
        }
        let nu_perp: Vec<f64> = theta.iter().zip(nu).map(|(t, v)| (t - c * v) / s).collect();
        // Theta = cos a nu + sin a nu_perp, Theta_perp = -sin a nu + cos a nu_perp
        let theta_perp = nu
            .iter()
            .zip(&nu_perp)
            .map(|(v, w)| -s * v + c * w)
            .collect();
        Ok(PlaneGeometry {
            theta: theta.to_vec(),
            nu: nu.to_vec(),
            alpha: s.atan2(c),
            nu_perp,
            theta_perp,
        })
    }

    /// Splits xi in Theta-perp into ell = xi . Theta_perp and the part orthogonal to the plane.
    pub fn decompose(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        let ell = dot(xi, &self.theta_perp);
        let a = dot(xi, &self.theta);
        let pp = xi
            .iter()
            .zip(&self.theta)
            .zip(&self.theta_perp)
            .map(|((x, t), p)| x - a * t - ell * p)
            .collect();
        (ell, pp)
    }
}

/// Transform along Theta of Psi(xi) = psi(xi_{nu perp}) at t Theta + xi, given the
/// transform of psi along nu_perp, `psi_check(s, xi_perpperp)`:
/// e^{-i ell t cot a} / sin a * psi_check(t / sin a, xi_perpperp).
/// The phase sign follows from the orientation of Theta_perp chosen above.
pub fn two_direction_transform<F>(psi_check: F, geom: &PlaneGeometry, t: f64, xi: &[f64]) -> C64
where
    F: Fn(f64, &[f64]) -> C64,
{
    let (ell, pp) = geom.decompose(xi);
    let (s, c) = geom.alpha.sin_cos();
    C64::from_polar(1.0 / s, -ell * t * c / s) * psi_check(t / s, &pp)
}
