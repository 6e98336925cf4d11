//! Directional ODE solves along a grid axis: the first-order line integrator,
//! the partial-fraction and factorized routes, Fourier division, the degenerate
//! first-order path, and residual checks.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    dft_full, frequency_to_mixed, idft_full, ipartial_dft, partial_dft, Exponent, GridField,
    GridSpec, Space,
};
use crate::poly::{MultiPoly, NormalForm2};
use crate::roots::roots_of;
use crate::tol;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Cell quadrature of the line integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    /// g constant on each cell, taken from the upwind sample; exact for such g.
    PiecewiseConstant,
    /// g interpolated through this many samples around each cell.
    Lagrange(usize),
}

/// Integration side for real q, where the exponential neither grows nor decays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BranchRule {
    /// t0 = -inf whenever Im q >= 0.
    Forward,
    /// For real q: the side picked by adding sign * i0 to the symbol, i.e.
    /// forward iff sign * Re p'(q) < 0. Helmholtz (k^2 + i0) uses sign = +1.
    Absorbing { sign: f64 },
}

/// True when the solve integrates from t = -inf.
pub fn branch_forward(q: C64, p_prime: C64, rule: BranchRule) -> bool {
    let real = q.im.abs() <= tol::REAL_ROOT * (1.0 + q.norm());
    if !real {
        return q.im > 0.0;
    }
    match rule {
        BranchRule::Forward => true,
        BranchRule::Absorbing { sign } => sign * p_prime.re < 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub quadrature: Quadrature,
    pub branch: BranchRule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            quadrature: Quadrature::Lagrange(tol::LAGRANGE_POINTS),
            branch: BranchRule::Forward,
        }
    }
}

// ---------------------------------------------------------------------------
// line integrator

/// (e^{z} - 1) / z, stable near zero.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        C64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_8,
    0.755_404_408_355_003,
    0.865_631_202_387_831_8,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

/// Nodes and weights of 16-point Gauss-Legendre on [0, 1].
fn gauss_unit() -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(16);
    for k in 0..8 {
        v.push((0.5 - 0.5 * GL16_X[k], 0.5 * GL16_W[k]));
        v.push((0.5 + 0.5 * GL16_X[k], 0.5 * GL16_W[k]));
    }
    v
}

/// Lagrange basis values at the Gauss nodes for every stencil offset.
/// Stencil `off` has nodes j - off (j = 0..npts) in units of h, the cell being [0, 1].
#[derive(Clone, Debug)]
pub struct LagrangeTable {
    pub npts: usize,
    gauss: Vec<(f64, f64)>,
    /// basis[off][g][j]
    basis: Vec<Vec<Vec<f64>>>,
}

impl LagrangeTable {
    pub fn new(npts: usize) -> Self {
        let gauss = gauss_unit();
        let basis = (0..npts)
            .map(|off| {
                let nodes: Vec<f64> = (0..npts).map(|j| j as f64 - off as f64).collect();
                gauss
                    .iter()
                    .map(|&(s, _)| {
                        (0..npts)
                            .map(|j| {
                                let mut l = 1.0;
                                for (k, &xk) in nodes.iter().enumerate() {
                                    if k != j {
                                        l *= (s - xk) / (nodes[j] - xk);
                                    }
                                }
                                l
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        LagrangeTable { npts, gauss, basis }
    }

    /// Offset of the stencil for cell [m, m+1] on a line of n samples.
    fn offset(&self, m: usize, n: usize) -> usize {
        let mid = self.npts / 2 - 1;
        let mut off = mid.min(m);
        if m + self.npts - off > n {
            off = m + self.npts - n;
        }
        off
    }
}

/// One-dimensional solve of (-i d/dt - q) w = g on samples with spacing h.
pub struct LineSolver<'a> {
    pub h: f64,
    pub quadrature: Quadrature,
    table: Option<&'a LagrangeTable>,
}

impl<'a> LineSolver<'a> {
    pub fn new(h: f64, quadrature: Quadrature, table: Option<&'a LagrangeTable>) -> Self {
        if let Quadrature::Lagrange(n) = quadrature {
            assert!(
                table.is_some_and(|t| t.npts == n),
                "Lagrange table of matching size required"
            );
        }
        LineSolver {
            h,
            quadrature,
            table,
        }
    }

    /// Per-offset cell weights for q and direction.
    fn weights(&self, q: C64, forward: bool) -> Vec<Vec<C64>> {
        let t = self.table.expect("table");
        let h = self.h;
        let e: Vec<C64> = t
            .gauss
            .iter()
            .map(|&(s, w)| {
                if forward {
                    I * h * w * (I * q * h * (1.0 - s)).exp()
                } else {
                    -I * h * w * (-I * q * h * s).exp()
                }
            })
            .collect();
        t.basis
            .iter()
            .map(|bg| {
                (0..t.npts)
                    .map(|j| bg.iter().zip(&e).map(|(b, ee)| ee * b[j]).sum())
                    .collect()
            })
            .collect()
    }

    /// Source increment of cell [m, m+1] (forward) or its reverse (backward).
    fn increments(&self, q: C64, g: &[C64], forward: bool) -> Vec<C64> {
        let n = g.len();
        let h = self.h;
        let mut inc = vec![C64::default(); n.saturating_sub(1)];
        match self.quadrature {
            Quadrature::PiecewiseConstant => {
                let c = if forward {
                    I * h * phi1(I * q * h)
                } else {
                    -I * h * phi1(-I * q * h)
                };
                for m in 0..n.saturating_sub(1) {
                    inc[m] = c * if forward { g[m] } else { g[m + 1] };
                }
            }
            Quadrature::Lagrange(npts) => {
                let t = self.table.expect("table");
                let w = self.weights(q, forward);
                if n < npts {
                    // too short for the stencil: fall back to piecewise constant
                    let c = if forward {
                        I * h * phi1(I * q * h)
                    } else {
                        -I * h * phi1(-I * q * h)
                    };
                    for m in 0..n.saturating_sub(1) {
                        inc[m] = c * if forward { g[m] } else { g[m + 1] };
                    }
                    return inc;
                }
                for m in 0..n - 1 {
                    let off = t.offset(m, n);
                    let start = m - off;
                    inc[m] = w[off]
                        .iter()
                        .zip(&g[start..start + npts])
                        .map(|(a, b)| a * b)
                        .sum();
                }
            }
        }
        inc
    }

    /// Writes w into `out`. Forward: w_0 = 0, w_{m+1} = e^{iqh} w_m + inc_m.
    /// Backward: w_{N-1} = 0, w_m = e^{-iqh} w_{m+1} + inc_m.
    pub fn solve(&self, q: C64, g: &[C64], forward: bool, out: &mut [C64]) {
        self.solve_from(q, g, forward, C64::default(), out)
    }

    /// As `solve`, starting from `seed` instead of zero at the upwind end.
    pub fn solve_from(&self, q: C64, g: &[C64], forward: bool, seed: C64, out: &mut [C64]) {
        let n = g.len();
        let inc = self.increments(q, g, forward);
        if n == 0 {
            return;
        }
        if forward {
            let a = (I * q * self.h).exp();
            out[0] = seed;
            for m in 0..n - 1 {
                out[m + 1] = a * out[m] + inc[m];
            }
        } else {
            let a = (-I * q * self.h).exp();
            out[n - 1] = seed;
            for m in (0..n - 1).rev() {
                out[m] = a * out[m + 1] + inc[m];
            }
        }
    }

    /// Relative defect of the discrete recurrence, the quadrature's own ODE residual.
    pub fn mixed_exact_residual(&self, q: C64, g: &[C64], forward: bool, w: &[C64]) -> f64 {
        self.mixed_exact_residual_from(q, g, forward, C64::default(), w)
    }

    pub fn mixed_exact_residual_from(
        &self,
        q: C64,
        g: &[C64],
        forward: bool,
        seed: C64,
        w: &[C64],
    ) -> f64 {
        let n = g.len();
        if n < 2 {
            return 0.0;
        }
        let inc = self.increments(q, g, forward);
        let mut num = 0.0;
        let mut den = 0.0;
        if forward {
            let a = (I * q * self.h).exp();
            num += (w[0] - seed).norm_sqr();
            for m in 0..n - 1 {
                num += (w[m + 1] - a * w[m] - inc[m]).norm_sqr();
                den += inc[m].norm_sqr();
            }
        } else {
            let a = (-I * q * self.h).exp();
            num += (w[n - 1] - seed).norm_sqr();
            for m in 0..n - 1 {
                num += (w[m] - a * w[m + 1] - inc[m]).norm_sqr();
                den += inc[m].norm_sqr();
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

// ---------------------------------------------------------------------------
// line plumbing

/// Gathers every line along `axis`, runs `op(xi_perp, line)` in parallel, scatters back.
fn for_lines<T, F>(field: &mut GridField, axis: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64], &mut [C64]) -> T + Sync,
{
    let grid = field.grid.clone();
    let (bases, stride) = grid.lines(axis);
    let d = grid.dims[axis];
    let mut buf: Vec<C64> = vec![C64::default(); bases.len() * d];
    for (li, &b) in bases.iter().enumerate() {
        for i in 0..d {
            buf[li * d + i] = field.data[b + i * stride];
        }
    }
    let out: Vec<T> = buf
        .par_chunks_mut(d)
        .enumerate()
        .map(|(li, line)| {
            let mut xi = grid.freq_point(bases[li]);
            xi[axis] = 0.0;
            op(&xi, line)
        })
        .collect();
    for (li, &b) in bases.iter().enumerate() {
        for i in 0..d {
            field.data[b + i * stride] = buf[li * d + i];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// first-order problems

/// (D_t - q) w = g per perpendicular frequency of a mixed field.
#[derive(Clone, Debug)]
pub struct FirstOrderProblem {
    /// One value per line, in `GridSpec::lines` order.
    pub q: Vec<C64>,
    /// p'(q) per line, consulted by the absorbing branch rule only.
    pub p_prime: Vec<C64>,
    pub g: GridField,
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderReport {
    /// Theta(inf,2) of w over Theta(1,2) of g.
    pub sup_over_l1: f64,
    /// Theta(inf,2) of w over Theta(inf,2) of g.
    pub ratio_46: f64,
    pub inf_im_q: f64,
    /// max over lines of sup|w| / int|g|.
    pub pointwise: f64,
    pub mixed_residual: f64,
}

pub fn solve_first_order(
    prob: &FirstOrderProblem,
    opts: &SolveOptions,
) -> Result<(GridField, FirstOrderReport)> {
    let Space::Mixed(axis) = prob.g.space else {
        return Err(Error::WrongSpace {
            expected: "mixed".into(),
            got: prob.g.space.name(),
        });
    };
    let nlines = prob.g.grid.len() / prob.g.grid.dims[axis];
    if prob.q.len() != nlines || prob.p_prime.len() != nlines {
        return Err(Error::DimensionMismatch {
            expected: nlines,
            got: prob.q.len(),
        });
    }
    let table = lagrange_table(opts);
    let solver = LineSolver::new(prob.g.grid.h(axis), opts.quadrature, table.as_ref());
    let mut w = prob.g.clone();
    let (bases, _) = w.grid.lines(axis);
    let index: std::collections::HashMap<usize, usize> =
        bases.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let grid = w.grid.clone();
    let stats = for_lines(&mut w, axis, |xi, line| {
        // recover the line index from its perpendicular frequency via the base offset
        let base = base_of(&grid, axis, xi);
        let li = index[&base];
        let q = prob.q[li];
        let fwd = branch_forward(q, prob.p_prime[li], opts.branch);
        let g = line.to_vec();
        solver.solve(q, &g, fwd, line);
        let l1 = g.iter().map(|z| z.norm()).sum::<f64>() * solver.h;
        let sup = line.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let res = solver.mixed_exact_residual(q, &g, fwd, line);
        (if l1 > 0.0 { sup / l1 } else { 0.0 }, res)
    });
    let pointwise = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let mixed_residual = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let inf_im_q = prob
        .q
        .iter()
        .map(|q| q.im.abs())
        .fold(f64::INFINITY, f64::min);
    let w_inf2 = w.mixed_norm_along(axis, Exponent::Inf, Exponent::Two)?;
    let g12 = prob
        .g
        .mixed_norm_along(axis, Exponent::One, Exponent::Two)?;
    let ginf2 = prob
        .g
        .mixed_norm_along(axis, Exponent::Inf, Exponent::Two)?;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok((
        w.clone(),
        FirstOrderReport {
            sup_over_l1: ratio(w_inf2, g12),
            ratio_46: ratio(w_inf2, ginf2),
            inf_im_q,
            pointwise,
            mixed_residual,
        },
    ))
}

fn base_of(grid: &GridSpec, axis: usize, xi: &[f64]) -> usize {
    let mut idx = vec![0usize; grid.n()];
    for j in 0..grid.n() {
        if j == axis {
            continue;
        }
        let n = grid.dims[j] as i64;
        let k = (xi[j] / grid.dxi(j)).round() as i64;
        idx[j] = k.rem_euclid(n) as usize;
    }
    grid.ravel(&idx)
}

fn lagrange_table(opts: &SolveOptions) -> Option<LagrangeTable> {
    match opts.quadrature {
        Quadrature::Lagrange(n) => Some(LagrangeTable::new(n)),
        Quadrature::PiecewiseConstant => None,
    }
}

// ---------------------------------------------------------------------------
// PDE routes

/// Measured estimate ratio of one route with its bound.
#[derive(Clone, Debug, Serialize)]
pub struct RouteReport {
    pub route: String,
    pub axis: usize,
    /// Theta(inf,2) of F_perp u over Theta(1,2) of F_perp f.
    pub ratio: f64,
    pub bound: f64,
    /// Smallest |p'| at the roots (or |P| for division) over active lines/support.
    pub min_guard: f64,
    pub eps: f64,
    pub active_lines: usize,
    pub mixed_residual: f64,
}

fn ratio_along(u_mixed: &GridField, f_mixed: &GridField, axis: usize) -> Result<f64> {
    let a = u_mixed.mixed_norm_along(axis, Exponent::Inf, Exponent::Two)?;
    let b = f_mixed.mixed_norm_along(axis, Exponent::One, Exponent::Two)?;
    Ok(if b > 0.0 { a / b } else { 0.0 })
}

fn axis_dir(n: usize, axis: usize) -> Vec<C64> {
    (0..n)
        .map(|j| C64::new(if j == axis { 1.0 } else { 0.0 }, 0.0))
        .collect()
}

/// Partial-fraction route: for each perpendicular frequency with data,
/// u = sum_j solve(tau_j)[F / p'(tau_j)]. `fhat` is the (multiplied) spectrum.
pub fn solve_scalar_direction(
    p: &MultiPoly,
    axis: usize,
    fhat: &GridField,
    eps: f64,
    opts: &SolveOptions,
) -> Result<(GridField, RouteReport)> {
    fhat.expect_space(Space::Frequency)?;
    let n = p.dim();
    if fhat.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: fhat.n(),
        });
    }
    if axis >= n {
        return Err(Error::InvalidAxis { axis, n });
    }
    let dir = axis_dir(n, axis);
    // degree in xi_axis; lower than deg P only on the degenerate first-order path
    let nn = p
        .terms()
        .map(|(m, _)| m.0[axis] as usize)
        .max()
        .unwrap_or(0);
    let table = lagrange_table(opts);
    let solver = LineSolver::new(fhat.grid.h(axis), opts.quadrature, table.as_ref());
    let f_mixed = frequency_to_mixed(fhat, axis)?;
    let mut u = f_mixed.clone();
    let stats = for_lines(&mut u, axis, |xi, line| -> Result<Option<(f64, f64)>> {
        if line.iter().all(|z| *z == C64::default()) {
            return Ok(None);
        }
        let base: Vec<C64> = xi.iter().map(|&x| C64::new(x, 0.0)).collect();
        let c = p.restrict_general(&dir, &base);
        let rs = roots_of(&c[..=nn])?;
        let md = rs.min_deriv();
        if md <= eps {
            return Err(Error::BadSetLeakage { min_deriv: md, eps });
        }
        let g = line.to_vec();
        line.iter_mut().for_each(|z| *z = C64::default());
        let mut w = vec![C64::default(); g.len()];
        let mut res: f64 = 0.0;
        for (tau, dp) in rs.roots.iter().zip(&rs.derivs) {
            let gj: Vec<C64> = g.iter().map(|z| z / dp).collect();
            let fwd = branch_forward(*tau, *dp, opts.branch);
            solver.solve(*tau, &gj, fwd, &mut w);
            res = res.max(solver.mixed_exact_residual(*tau, &gj, fwd, &w));
            line.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
        }
        Ok(Some((md, res)))
    });
    let mut min_guard = f64::INFINITY;
    let mut active = 0;
    let mut mixed_residual: f64 = 0.0;
    for s in stats {
        if let Some((md, r)) = s? {
            active += 1;
            min_guard = min_guard.min(md);
            mixed_residual = mixed_residual.max(r);
        }
    }
    let ratio = ratio_along(&u, &f_mixed, axis)?;
    let out = ipartial_dft(&u)?;
    Ok((
        out,
        RouteReport {
            route: "partial-fraction".into(),
            axis,
            ratio,
            bound: nn as f64 / eps,
            min_guard,
            eps,
            active_lines: active,
            mixed_residual,
        },
    ))
}

/// Factorized second-order route along normal-form axis k (requires V = I):
/// P = -eps_k d_k^2 (tau - tau_+)(tau - tau_-), tau_pm = (-i beta_k pm sqrt(eps_k Q_k)) / d_k.
/// `eps = 0` disables the |Q_k| guard: lines with Q_k = 0 then carry a double root
/// (fine when it is off the real axis) and the reported bound is infinite.
pub fn solve_second_order_direction(
    nf: &NormalForm2,
    k: usize,
    fhat: &GridField,
    eps: f64,
    opts: &SolveOptions,
) -> Result<(GridField, RouteReport)> {
    fhat.expect_space(Space::Frequency)?;
    if !nf.basis_is_identity() {
        return Err(Error::Unsupported(
            "factorized route needs a diagonal quadratic part".into(),
        ));
    }
    if nf.eps[k] == 0 {
        return Err(Error::Unsupported(
            "factorized route needs eps_k != 0".into(),
        ));
    }
    let ek = nf.eps[k] as f64;
    let dk = nf.scale[k];
    let bk = nf.beta[k];
    let table = lagrange_table(opts);
    let solver = LineSolver::new(fhat.grid.h(k), opts.quadrature, table.as_ref());
    let f_mixed = frequency_to_mixed(fhat, k)?;
    let mut u = f_mixed.clone();
    let lead = -ek * dk * dk;
    let stats = for_lines(&mut u, k, |xi, line| -> Result<Option<(f64, f64)>> {
        if line.iter().all(|z| *z == C64::default()) {
            return Ok(None);
        }
        let eta = nf.eta_of(xi);
        let qk = nf.q_k(k, &eta);
        if eps > 0.0 && qk.norm() <= eps {
            return Err(Error::BadSetLeakage {
                min_deriv: qk.norm(),
                eps,
            });
        }
        let mut s = (qk * ek).sqrt();
        if s.im < 0.0 {
            s = -s;
        }
        let tp = (C64::new(0.0, -bk) + s) / dk;
        let tm = (C64::new(0.0, -bk) - s) / dk;
        let dpp = lead * (tp - tm);
        let dpm = lead * (tm - tp);
        let g = line.to_vec();
        let mut v = vec![C64::default(); g.len()];
        let fm = branch_forward(tm, dpm, opts.branch);
        solver.solve(tm, &g, fm, &mut v);
        let r1 = solver.mixed_exact_residual(tm, &g, fm, &v);
        let fp = branch_forward(tp, dpp, opts.branch);
        // v continues past the upwind edge of the second solve as e^{i tau_- t} v(edge);
        // its exact contribution there is v(edge) / (tau_- - tau_+)
        let seed = if fp == fm {
            C64::default()
        } else {
            let edge = if fp { v[0] } else { v[v.len() - 1] };
            edge / (tm - tp)
        };
        solver.solve_from(tp, &v, fp, seed, line);
        let r2 = solver.mixed_exact_residual_from(tp, &v, fp, seed, line);
        line.iter_mut().for_each(|z| *z /= lead);
        Ok(Some((dpp.norm(), r1.max(r2))))
    });
    let mut min_guard = f64::INFINITY;
    let mut active = 0;
    let mut mixed_residual: f64 = 0.0;
    for s in stats {
        if let Some((md, r)) = s? {
            active += 1;
            min_guard = min_guard.min(md);
            mixed_residual = mixed_residual.max(r);
        }
    }
    let ratio = ratio_along(&u, &f_mixed, k)?;
    let out = ipartial_dft(&u)?;
    Ok((
        out,
        RouteReport {
            route: "factorized".into(),
            axis: k,
            ratio,
            bound: if eps > 0.0 {
                1.0 / (dk * dk * eps.sqrt())
            } else {
                f64::INFINITY
            },
            min_guard,
            eps,
            active_lines: active,
            mixed_residual,
        },
    ))
}

/// u-hat = f-hat / P on the support of f-hat; the ratio is measured along axis 0
/// against d / eps with d the largest support length on a line along that axis.
pub fn solve_fourier_division(
    fhat: &GridField,
    p: &MultiPoly,
    eps: f64,
) -> Result<(GridField, RouteReport)> {
    fhat.expect_space(Space::Frequency)?;
    let grid = fhat.grid.clone();
    let vals: Vec<Result<C64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if fhat.data[i] == C64::default() {
                return Ok(C64::default());
            }
            let pv = p.eval_real(&grid.freq_point(i))?;
            Ok(pv)
        })
        .collect();
    let mut uh = fhat.clone();
    let mut min_abs = f64::INFINITY;
    for (i, v) in vals.into_iter().enumerate() {
        let v = v?;
        if fhat.data[i] == C64::default() {
            continue;
        }
        min_abs = min_abs.min(v.norm());
        if v.norm() <= eps {
            return Err(Error::DivisionOnZeroSet {
                min_abs: v.norm(),
                eps,
            });
        }
        uh.data[i] = fhat.data[i] / v;
    }
    let axis = 0;
    let (bases, stride) = grid.lines(axis);
    let d = bases
        .iter()
        .map(|&b| {
            (0..grid.dims[axis])
                .filter(|&i| fhat.data[b + i * stride] != C64::default())
                .count() as f64
        })
        .fold(0.0, f64::max)
        * grid.dxi(axis);
    let f_mixed = frequency_to_mixed(fhat, axis)?;
    let u_mixed = frequency_to_mixed(&uh, axis)?;
    let ratio = ratio_along(&u_mixed, &f_mixed, axis)?;
    let out = idft_full(&uh)?;
    Ok((
        out,
        RouteReport {
            route: "division".into(),
            axis,
            ratio,
            bound: d / eps,
            min_guard: min_abs,
            eps,
            active_lines: bases.len(),
            mixed_residual: 0.0,
        },
    ))
}

/// Normal form with eps_a = 0 and alpha_a != 0: along axis a the symbol is
/// 2i alpha_a tau + R(xi_perp), one root q = iR / (2 alpha_a) with p' = 2i alpha_a.
/// The scalar route with N = 1; the bound is 1 / (2 |alpha_a|).
pub fn solve_degenerate_first_order(
    p: &MultiPoly,
    nf: &NormalForm2,
    axis: usize,
    fhat: &GridField,
    opts: &SolveOptions,
) -> Result<(GridField, RouteReport)> {
    if nf.eps[axis] != 0 || nf.alpha[axis] == 0.0 {
        return Err(Error::Config(format!(
            "axis {axis} is not a first-order axis of the normal form"
        )));
    }
    if !nf.basis_is_identity() {
        return Err(Error::Unsupported(
            "degenerate path needs a diagonal quadratic part".into(),
        ));
    }
    let two_alpha = 2.0 * nf.alpha[axis].abs() * nf.scale[axis];
    // |p'| = 2|alpha| everywhere, so any eps below it admits every line
    let (u, mut rep) = solve_scalar_direction(
        &restrict_to_axis_degree(p, axis)?,
        axis,
        fhat,
        0.5 * two_alpha,
        opts,
    )?;
    rep.route = "degenerate-first-order".into();
    rep.bound = 1.0 / two_alpha;
    Ok((u, rep))
}

/// The symbol itself when it is first order in xi_axis (otherwise an error).
fn restrict_to_axis_degree(p: &MultiPoly, axis: usize) -> Result<MultiPoly> {
    let deg = p.terms().map(|(m, _)| m.0[axis]).max().unwrap_or(0);
    if deg != 1 {
        return Err(Error::Config(format!(
            "symbol has degree {deg} in xi_{}",
            axis + 1
        )));
    }
    Ok(p.clone())
}

// ---------------------------------------------------------------------------
// spectator axes

/// Axes the symbol does not depend on; they act as pure perpendicular parameters.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionPlan {
    pub core: Vec<usize>,
    pub spectator: Vec<usize>,
}

pub fn reduce_dimension(nf: &NormalForm2) -> DimensionPlan {
    let n = nf.dim();
    let (spectator, core): (Vec<usize>, Vec<usize>) = if nf.basis_is_identity() {
        (0..n).partition(|&j| nf.eps[j] == 0 && nf.alpha[j] == 0.0)
    } else {
        (Vec::new(), (0..n).collect())
    };
    DimensionPlan { core, spectator }
}

/// u = f / B for a constant symbol.
pub fn solve_constant(f: &GridField, b: C64) -> Result<GridField> {
    f.expect_space(Space::Physical)?;
    if b.norm() == 0.0 {
        return Err(Error::DivisionOnZeroSet {
            min_abs: 0.0,
            eps: 0.0,
        });
    }
    Ok(f.scaled(C64::new(1.0, 0.0) / b))
}

// ---------------------------------------------------------------------------
// residuals

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidualMethod {
    InteriorFd,
    MixedExact,
}

impl std::str::FromStr for ResidualMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior-FD" | "interior-fd" => Ok(ResidualMethod::InteriorFd),
            "mixed-exact" => Ok(ResidualMethod::MixedExact),
            other => Err(Error::Config(format!("unknown residual method {other:?}"))),
        }
    }
}

/// Fornberg weights for derivative `m` at 0 on the given nodes.
pub fn fornberg(m: usize, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Central stencil of order FD_ORDER for the m-th derivative, as (offset, weight).
fn central_stencil(m: usize, h: f64) -> Vec<(i64, f64)> {
    let r = (m + tol::FD_ORDER - 1).div_ceil(2) as i64;
    let nodes: Vec<f64> = (-r..=r).map(|k| k as f64).collect();
    let w = fornberg(m, &nodes);
    (-r..=r)
        .zip(w)
        .map(|(k, w)| (k, w / h.powi(m as i32)))
        .collect()
}

/// m-th derivative along `axis` by periodic central differences of order FD_ORDER.
pub fn derivative_axis(data: &[C64], grid: &GridSpec, axis: usize, m: usize) -> Vec<C64> {
    if m == 0 {
        return data.to_vec();
    }
    let st = central_stencil(m, grid.h(axis));
    let strides = grid.strides();
    let d = grid.dims[axis] as i64;
    let s = strides[axis];
    (0..data.len())
        .into_par_iter()
        .map(|flat| {
            let i = ((flat / s) as i64) % d;
            let base = flat - (i as usize) * s;
            st.iter()
                .map(|&(k, w)| data[base + ((i + k).rem_euclid(d) as usize) * s] * w)
                .sum()
        })
        .collect()
}

/// P(D) u with D = -i grad by periodic central differences.
pub fn apply_symbol_fd(p: &MultiPoly, u: &GridField) -> Result<GridField> {
    u.expect_space(Space::Physical)?;
    let n = u.n();
    if p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: n,
        });
    }
    let mut out = vec![C64::default(); u.data.len()];
    for (m, c) in p.terms() {
        let mut cur = u.data.clone();
        for j in 0..n {
            cur = derivative_axis(&cur, &u.grid, j, m.0[j] as usize);
        }
        let coef = c * (-I).powu(m.degree());
        out.iter_mut().zip(&cur).for_each(|(o, v)| *o += coef * v);
    }
    Ok(GridField {
        grid: u.grid.clone(),
        space: Space::Physical,
        data: out,
    })
}

/// Relative L2 defect of P(D)u - f on cells at least FD_MARGIN from every face.
pub fn residual_interior_fd(p: &MultiPoly, u: &GridField, f: &GridField) -> Result<f64> {
    u.check_same_grid(f)?;
    f.expect_space(Space::Physical)?;
    let pu = apply_symbol_fd(p, u)?;
    let g = &u.grid;
    let m = tol::FD_MARGIN;
    let mut idx = vec![0usize; g.n()];
    let mut num = 0.0;
    let mut den = 0.0;
    for flat in 0..g.len() {
        g.unravel(flat, &mut idx);
        if idx.iter().zip(&g.dims).any(|(&i, &d)| i < m || i + m >= d) {
            continue;
        }
        num += (pu.data[flat] - f.data[flat]).norm_sqr();
        den += f.data[flat].norm_sqr();
    }
    Ok(if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    })
}

/// As `residual_interior_fd`, restricted to the central cube |x - c|_inf <= frac * L.
pub fn residual_fd_central(p: &MultiPoly, u: &GridField, f: &GridField, frac: f64) -> Result<f64> {
    u.check_same_grid(f)?;
    f.expect_space(Space::Physical)?;
    let pu = apply_symbol_fd(p, u)?;
    let g = &u.grid;
    let c = g.center();
    let mut num = 0.0;
    let mut den = 0.0;
    for flat in 0..g.len() {
        let x = g.point(flat);
        if (0..g.n()).any(|j| (x[j] - c[j]).abs() > frac * g.length(j)) {
            continue;
        }
        num += (pu.data[flat] - f.data[flat]).norm_sqr();
        den += f.data[flat].norm_sqr();
    }
    Ok(if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    })
}

/// Spectral residual: relative L2 of P(xi) u-hat - f-hat over the grid.
pub fn residual_spectral(p: &MultiPoly, u: &GridField, f: &GridField) -> Result<f64> {
    let uh = dft_full(u)?;
    let fh = dft_full(f)?;
    let g = &uh.grid;
    let (num, den) = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let pv = p.eval_real(&g.freq_point(i)).unwrap_or_default();
            (
                (pv * uh.data[i] - fh.data[i]).norm_sqr(),
                fh.data[i].norm_sqr(),
            )
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    })
}

/// Mixed-space view of a physical field along `axis`, for estimate ratios.
pub fn mixed_ratio(u: &GridField, f: &GridField, axis: usize) -> Result<f64> {
    ratio_along(&partial_dft(u, axis)?, &partial_dft(f, axis)?, axis)
}

/// Unitary 1-D inverse transform scale, exported for tests of the conventions.
pub fn unitary_scale() -> f64 {
    1.0 / TAU.sqrt()
}
