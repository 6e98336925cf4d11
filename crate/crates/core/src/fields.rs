//! Grid fields, discrete Fourier transforms, mixed norms and rotation resampling.
//!
//! Transform convention, per axis of length N, spacing h, box [lo, lo + L):
//! fhat(xi_m) = (2 pi)^{-1/2} h e^{-i lo xi_m} sum_l f_l e^{-2 pi i l m / N},
//! with xi_m = 2 pi m' / L and m' the signed index (Nyquist negative).
//! Frequency samples are kept in FFT order.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridSpec {
    /// Box centred at the origin with edge `length` and `npts` points per axis.
    pub fn cube(n: usize, npts: usize, length: f64) -> Self {
        Self::centered(&vec![0.0; n], npts, length)
    }

    pub fn centered(center: &[f64], npts: usize, length: f64) -> Self {
        GridSpec {
            dims: vec![npts; center.len()],
            lo: center.iter().map(|c| c - 0.5 * length).collect(),
            hi: center.iter().map(|c| c + 0.5 * length).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn h(&self, j: usize) -> f64 {
        self.length(j) / self.dims[j] as f64
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n()).map(|j| self.h(j)).product()
    }

    pub fn coord(&self, j: usize, i: usize) -> f64 {
        self.lo[j] + i as f64 * self.h(j)
    }

    pub fn freq(&self, j: usize, i: usize) -> f64 {
        TAU * signed_index(i, self.dims[j]) as f64 / self.length(j)
    }

    pub fn dxi(&self, j: usize) -> f64 {
        TAU / self.length(j)
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.n();
        let mut s = vec![1; n];
        for j in (0..n.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.dims[j + 1];
        }
        s
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for j in (0..self.n()).rev() {
            out[j] = flat % self.dims[j];
            flat /= self.dims[j];
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (i, d)| acc * d + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.n()];
        self.unravel(flat, &mut idx);
        (0..self.n()).map(|j| self.coord(j, idx[j])).collect()
    }

    pub fn freq_point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.n()];
        self.unravel(flat, &mut idx);
        (0..self.n()).map(|j| self.freq(j, idx[j])).collect()
    }

    /// Offsets of the first sample of every line along `axis`, and the stride along it.
    pub fn lines(&self, axis: usize) -> (Vec<usize>, usize) {
        let stride = self.strides()[axis];
        let d = self.dims[axis];
        let outer: usize = self.dims[..axis].iter().product();
        let mut v = Vec::with_capacity(self.len() / d);
        for o in 0..outer {
            for i in 0..stride {
                v.push(o * d * stride + i);
            }
        }
        (v, stride)
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.dims == other.dims
            && self
                .lo
                .iter()
                .zip(&other.lo)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
            && self
                .hi
                .iter()
                .zip(&other.hi)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.lo.len() != self.n() || self.hi.len() != self.n() {
            return Err(Error::Config("grid dims/lo/hi lengths disagree".into()));
        }
        for j in 0..self.n() {
            if !self.dims[j].is_power_of_two() || self.dims[j] < 2 {
                return Err(Error::Config(format!(
                    "axis {j}: {} points is not a power of two",
                    self.dims[j]
                )));
            }
            if !(self.hi[j] > self.lo[j]) {
                return Err(Error::Config(format!("axis {j}: empty box")));
            }
        }
        Ok(())
    }
}

pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Physical,
    Frequency,
    /// Physical along the axis, frequency along every other axis.
    Mixed(usize),
}

impl Space {
    pub fn name(&self) -> String {
        match self {
            Space::Physical => "physical".into(),
            Space::Frequency => "frequency".into(),
            Space::Mixed(k) => format!("mixed({k})"),
        }
    }

    fn is_freq_axis(&self, j: usize) -> bool {
        match self {
            Space::Physical => false,
            Space::Frequency => true,
            Space::Mixed(k) => *k != j,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub space: Space,
    pub data: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Inf,
}

impl GridField {
    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        let len = grid.len();
        GridField {
            grid,
            space,
            data: vec![C64::default(); len],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> C64 + Sync>(grid: GridSpec, f: F) -> Self {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        GridField {
            grid,
            space: Space::Physical,
            data,
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn expect_space(&self, s: Space) -> Result<()> {
        if self.space != s {
            return Err(Error::WrongSpace {
                expected: s.name(),
                got: self.space.name(),
            });
        }
        Ok(())
    }

    pub fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid.dims, other.grid.dims
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn add_assign(&mut self, other: &GridField) -> Result<()> {
        self.check_same_grid(other)?;
        if self.space != other.space {
            return Err(Error::WrongSpace {
                expected: self.space.name(),
                got: other.space.name(),
            });
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        let mut out = self.clone();
        out.add_assign(&other.scaled(C64::new(-1.0, 0.0)))?;
        Ok(out)
    }

    fn axis_weight(&self, j: usize) -> f64 {
        if self.space.is_freq_axis(j) {
            self.grid.dxi(j)
        } else {
            self.grid.h(j)
        }
    }

    /// Quadrature weight of one sample for the field's space.
    pub fn weight(&self) -> f64 {
        (0..self.n()).map(|j| self.axis_weight(j)).product()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|x| x.norm_sqr()).sum::<f64>() * self.weight()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Continuum coordinate of the sample at `flat` along each axis in the field's space.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.n()];
        self.grid.unravel(flat, &mut idx);
        (0..self.n())
            .map(|j| {
                if self.space.is_freq_axis(j) {
                    self.grid.freq(j, idx[j])
                } else {
                    self.grid.coord(j, idx[j])
                }
            })
            .collect()
    }

    /// Mixed norm with inner exponent p along `axis` and outer q over the rest,
    /// each axis weighted by its own cell size (h or 2 pi / L).
    pub fn mixed_norm_along(&self, axis: usize, p: Exponent, q: Exponent) -> Result<f64> {
        if axis >= self.n() {
            return Err(Error::InvalidAxis { axis, n: self.n() });
        }
        let inner = self.line_norms(axis, p);
        let w: f64 = (0..self.n())
            .filter(|&j| j != axis)
            .map(|j| self.axis_weight(j))
            .product();
        Ok(outer_norm(&inner, w, q))
    }

    /// Inner norms per line along `axis`, in the order of `GridSpec::lines`.
    pub fn line_norms(&self, axis: usize, p: Exponent) -> Vec<f64> {
        let (bases, stride) = self.grid.lines(axis);
        let d = self.grid.dims[axis];
        let h = self.axis_weight(axis);
        bases
            .par_iter()
            .map(|&b| {
                let it = (0..d).map(|i| self.data[b + i * stride].norm());
                match p {
                    Exponent::One => it.sum::<f64>() * h,
                    Exponent::Two => (it.map(|x| x * x).sum::<f64>() * h).sqrt(),
                    Exponent::Inf => it.fold(0.0, f64::max),
                }
            })
            .collect()
    }
}

pub fn outer_norm(v: &[f64], w: f64, q: Exponent) -> f64 {
    match q {
        Exponent::One => v.iter().sum::<f64>() * w,
        Exponent::Two => (v.iter().map(|x| x * x).sum::<f64>() * w).sqrt(),
        Exponent::Inf => v.iter().copied().fold(0.0, f64::max),
    }
}

/// Mixed Theta(p,q) norm of a field already in mixed space along its axis.
pub fn mixed_norm(f: &GridField, p: Exponent, q: Exponent) -> Result<f64> {
    match f.space {
        Space::Mixed(k) => f.mixed_norm_along(k, p, q),
        s => Err(Error::WrongSpace {
            expected: "mixed".into(),
            got: s.name(),
        }),
    }
}

// ---------------------------------------------------------------------------
// transforms

/// Applies `op` to every line along `axis` in parallel (gather, process, scatter).
pub fn map_lines<F>(data: &mut [C64], grid: &GridSpec, axis: usize, op: F)
where
    F: Fn(usize, &mut [C64]) + Sync,
{
    let (bases, stride) = grid.lines(axis);
    let d = grid.dims[axis];
    let mut buf = vec![C64::default(); bases.len() * d];
    for (li, &b) in bases.iter().enumerate() {
        for i in 0..d {
            buf[li * d + i] = data[b + i * stride];
        }
    }
    buf.par_chunks_mut(d)
        .enumerate()
        .for_each(|(li, line)| op(li, line));
    for (li, &b) in bases.iter().enumerate() {
        for i in 0..d {
            data[b + i * stride] = buf[li * d + i];
        }
    }
}

fn transform_axis(f: &mut GridField, axis: usize, forward: bool) {
    let d = f.grid.dims[axis];
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(d)
    } else {
        planner.plan_fft_inverse(d)
    };
    let h = f.grid.h(axis);
    let lo = f.grid.lo[axis];
    let xi: Vec<f64> = (0..d).map(|m| f.grid.freq(axis, m)).collect();
    let s2pi = TAU.sqrt();
    let phase: Vec<C64> = if forward {
        xi.iter()
            .map(|&x| C64::from_polar(h / s2pi, -lo * x))
            .collect()
    } else {
        let dxi = TAU / f.grid.length(axis);
        xi.iter()
            .map(|&x| C64::from_polar(dxi / s2pi, lo * x))
            .collect()
    };
    let grid = f.grid.clone();
    map_lines(&mut f.data, &grid, axis, |_, line| {
        if forward {
            fft.process(line);
            line.iter_mut().zip(&phase).for_each(|(a, p)| *a *= p);
        } else {
            line.iter_mut().zip(&phase).for_each(|(a, p)| *a *= p);
            fft.process(line);
        }
    });
}

pub fn dft_full(f: &GridField) -> Result<GridField> {
    f.expect_space(Space::Physical)?;
    let mut out = f.clone();
    for j in 0..f.n() {
        transform_axis(&mut out, j, true);
    }
    out.space = Space::Frequency;
    Ok(out)
}

pub fn idft_full(f: &GridField) -> Result<GridField> {
    f.expect_space(Space::Frequency)?;
    let mut out = f.clone();
    for j in 0..f.n() {
        transform_axis(&mut out, j, false);
    }
    out.space = Space::Physical;
    Ok(out)
}

/// Transform over every axis except `axis`.
pub fn partial_dft(f: &GridField, axis: usize) -> Result<GridField> {
    if axis >= f.n() {
        return Err(Error::InvalidAxis { axis, n: f.n() });
    }
    f.expect_space(Space::Physical)?;
    let mut out = f.clone();
    for j in (0..f.n()).filter(|&j| j != axis) {
        transform_axis(&mut out, j, true);
    }
    out.space = Space::Mixed(axis);
    Ok(out)
}

pub fn ipartial_dft(f: &GridField) -> Result<GridField> {
    let Space::Mixed(axis) = f.space else {
        return Err(Error::WrongSpace {
            expected: "mixed".into(),
            got: f.space.name(),
        });
    };
    let mut out = f.clone();
    for j in (0..f.n()).filter(|&j| j != axis) {
        transform_axis(&mut out, j, false);
    }
    out.space = Space::Physical;
    Ok(out)
}

/// Mixed(axis) -> Frequency by a 1-D transform along the retained axis.
pub fn mixed_to_frequency(f: &GridField) -> Result<GridField> {
    let Space::Mixed(axis) = f.space else {
        return Err(Error::WrongSpace {
            expected: "mixed".into(),
            got: f.space.name(),
        });
    };
    let mut out = f.clone();
    transform_axis(&mut out, axis, true);
    out.space = Space::Frequency;
    Ok(out)
}

/// Frequency -> Mixed(axis) by a 1-D inverse transform along `axis`.
pub fn frequency_to_mixed(f: &GridField, axis: usize) -> Result<GridField> {
    f.expect_space(Space::Frequency)?;
    if axis >= f.n() {
        return Err(Error::InvalidAxis { axis, n: f.n() });
    }
    let mut out = f.clone();
    transform_axis(&mut out, axis, false);
    out.space = Space::Mixed(axis);
    Ok(out)
}

// ---------------------------------------------------------------------------
// rotation

#[derive(Clone, Debug)]
pub struct Rotated {
    pub field: GridField,
    /// ||f - R^{-1}(R f)|| / ||f||
    pub residual: f64,
}

/// Energy fraction outside the inner half of the box (|x - c|_inf > L/4 on some axis).
pub fn outside_inner_half(f: &GridField) -> f64 {
    let c = f.grid.center();
    let mut out = 0.0;
    let mut tot = 0.0;
    for (i, v) in f.data.iter().enumerate() {
        let x = f.grid.point(i);
        let e = v.norm_sqr();
        tot += e;
        if (0..f.n()).any(|j| (x[j] - c[j]).abs() > 0.25 * f.grid.length(j)) {
            out += e;
        }
    }
    if tot == 0.0 {
        0.0
    } else {
        out / tot
    }
}

/// g(x) = f(R^{-1} x) about the box centre, by exact quarter turns plus three
/// Fourier shears on a twice-padded grid; also reports the round-trip residual.
pub fn rotate_resample(f: &GridField, r: &[Vec<f64>]) -> Result<Rotated> {
    f.expect_space(Space::Physical)?;
    let outside = outside_inner_half(f);
    if outside > tol::GUARD_BAND {
        return Err(Error::GuardBand(outside));
    }
    let field = rotate_unchecked(f, r)?;
    let rt: Vec<Vec<f64>> = (0..r.len())
        .map(|i| (0..r.len()).map(|j| r[j][i]).collect())
        .collect();
    let back = rotate_unchecked(&field, &rt)?;
    let nf = f.l2_norm();
    let residual = if nf == 0.0 {
        0.0
    } else {
        back.sub(f)?.l2_norm() / nf
    };
    Ok(Rotated { field, residual })
}

/// Rotation without the guard-band check (used for solved pieces, which have tails).
pub fn rotate_unchecked(f: &GridField, r: &[Vec<f64>]) -> Result<GridField> {
    let n = f.n();
    if r.len() != n || r.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.len(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| r[k][i] * r[k][j]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-10 {
                return Err(Error::Config("rotation matrix is not orthogonal".into()));
            }
        }
    }
    let is_identity = (0..n).all(|i| (0..n).all(|j| r[i][j] == if i == j { 1.0 } else { 0.0 }));
    if is_identity {
        return Ok(f.clone());
    }
    match n {
        2 => {
            if r[0][0] * r[1][1] - r[0][1] * r[1][0] < 0.0 {
                return Err(Error::Config("rotation must have determinant +1".into()));
            }
            rotate_plane(f, 0, 1, r[1][0].atan2(r[0][0]))
        }
        3 => {
            let (a, b, g) = zyz_angles(r);
            let x = rotate_plane(f, 0, 1, g)?;
            let x = rotate_plane(&x, 2, 0, b)?;
            rotate_plane(&x, 0, 1, a)
        }
        _ => Err(Error::Unsupported(format!("rotation in {n} dimensions"))),
    }
}

/// R = Rz(a) Ry(b) Rz(g)
pub fn zyz_angles(r: &[Vec<f64>]) -> (f64, f64, f64) {
    let cb = r[2][2].clamp(-1.0, 1.0);
    let sb = (r[0][2] * r[0][2] + r[1][2] * r[1][2]).sqrt();
    if sb < 1e-12 {
        if cb > 0.0 {
            (r[1][0].atan2(r[0][0]), 0.0, 0.0)
        } else {
            ((-r[0][1]).atan2(r[1][1]), PI, 0.0)
        }
    } else {
        (
            r[1][2].atan2(r[0][2]),
            sb.atan2(cb),
            r[2][1].atan2(-r[2][0]),
        )
    }
}

pub fn rotation_matrix_2d(theta: f64) -> Vec<Vec<f64>> {
    let (s, c) = theta.sin_cos();
    vec![vec![c, -s], vec![s, c]]
}

/// Rotation by `theta` in the (a, b) plane: a -> cos a + sin b.
pub fn rotate_plane(f: &GridField, a: usize, b: usize, theta: f64) -> Result<GridField> {
    let g = &f.grid;
    if g.dims[a] != g.dims[b] || (g.length(a) - g.length(b)).abs() > 1e-12 * g.length(a) {
        return Err(Error::Unsupported("rotation plane must be square".into()));
    }
    let quarter = (theta / (PI / 2.0)).round();
    let rem = theta - quarter * PI / 2.0;
    let q = (quarter as i64).rem_euclid(4) as usize;
    let mut cur = f.clone();
    for _ in 0..q {
        cur = quarter_turn(&cur, a, b);
    }
    if rem.abs() < 1e-15 {
        return Ok(cur);
    }
    let (padded, off) = pad_plane(&cur, a, b);
    let sa = -(rem / 2.0).tan();
    let sb = rem.sin();
    let p = shear(&padded, a, b, sa);
    let p = shear(&p, b, a, sb);
    let p = shear(&p, a, b, sa);
    Ok(crop_plane(&p, &cur.grid, a, b, off))
}

fn quarter_turn(f: &GridField, a: usize, b: usize) -> GridField {
    // g(x_a, x_b) = f(x_b, -x_a)
    let g = &f.grid;
    let nn = g.dims[a];
    let mut out = f.clone();
    let mut idx = vec![0; g.n()];
    for flat in 0..g.len() {
        g.unravel(flat, &mut idx);
        let (i, j) = (idx[a], idx[b]);
        idx[a] = j;
        idx[b] = (nn - i) % nn;
        out.data[flat] = f.data[g.ravel(&idx)];
    }
    out
}

fn pad_plane(f: &GridField, a: usize, b: usize) -> (GridField, usize) {
    let g = &f.grid;
    let nn = g.dims[a];
    let off = nn / 2;
    let mut pg = g.clone();
    for &ax in &[a, b] {
        let l = g.length(ax);
        pg.dims[ax] = 2 * nn;
        pg.lo[ax] = g.lo[ax] - 0.5 * l;
        pg.hi[ax] = g.hi[ax] + 0.5 * l;
    }
    let mut out = GridField::zeros(pg, f.space);
    let mut idx = vec![0; g.n()];
    for flat in 0..g.len() {
        g.unravel(flat, &mut idx);
        idx[a] += off;
        idx[b] += off;
        let t = out.grid.ravel(&idx);
        out.data[t] = f.data[flat];
    }
    (out, off)
}

fn crop_plane(p: &GridField, g: &GridSpec, a: usize, b: usize, off: usize) -> GridField {
    let mut out = GridField::zeros(g.clone(), p.space);
    let mut idx = vec![0; g.n()];
    for flat in 0..g.len() {
        g.unravel(flat, &mut idx);
        idx[a] += off;
        idx[b] += off;
        out.data[flat] = p.data[p.grid.ravel(&idx)];
    }
    out
}

/// g(x) = f(x - s * (x_b - c_b) e_a): Fourier shift of every line along `a`.
fn shear(f: &GridField, a: usize, b: usize, s: f64) -> GridField {
    let g = f.grid.clone();
    let d = g.dims[a];
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(d);
    let inv = planner.plan_fft_inverse(d);
    let cb = g.center()[b];
    let (bases, _) = g.lines(a);
    let mut idx = vec![0; g.n()];
    let shifts: Vec<f64> = bases
        .iter()
        .map(|&base| {
            g.unravel(base, &mut idx);
            s * (g.coord(b, idx[b]) - cb)
        })
        .collect();
    let k: Vec<f64> = (0..d).map(|m| g.freq(a, m)).collect();
    let mut out = f.clone();
    map_lines(&mut out.data, &g, a, |li, line| {
        let delta = shifts[li];
        fwd.process(line);
        for (m, v) in line.iter_mut().enumerate() {
            if d.is_multiple_of(2) && m == d / 2 {
                *v *= (k[m] * delta).cos();
            } else {
                *v *= C64::from_polar(1.0, -k[m] * delta);
            }
        }
        inv.process(line);
        let sc = 1.0 / d as f64;
        line.iter_mut().for_each(|v| *v *= sc);
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(grid: GridSpec, c: Vec<f64>, sigma: f64) -> GridField {
        GridField::from_fn(grid, move |x| {
            let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            C64::new((-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    #[test]
    fn gaussian_transform_pair() {
        let g = GridSpec::cube(2, 128, 32.0);
        let f = gauss(g, vec![0.0, 0.0], 1.0);
        let fh = dft_full(&f).unwrap();
        for i in 0..fh.data.len() {
            let xi = fh.grid.freq_point(i);
            let want = (-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0).exp();
            assert!(
                (fh.data[i] - want).norm() < 1e-12,
                "{} {}",
                fh.data[i],
                want
            );
        }
        let back = idft_full(&fh).unwrap();
        assert!(back.sub(&f).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn shifted_box_phase() {
        let g = GridSpec::centered(&[3.0], 128, 40.0);
        let f = gauss(g, vec![3.0], 1.0);
        let fh = dft_full(&f).unwrap();
        for i in 0..128 {
            let xi = fh.grid.freq(0, i);
            let want = C64::from_polar((-xi * xi / 2.0).exp(), -3.0 * xi);
            assert!(
                (fh.data[i] - want).norm() < 1e-12,
                "{} {}",
                fh.data[i],
                want
            );
        }
    }

    #[test]
    fn delta_has_flat_spectrum_and_plancherel() {
        let g = GridSpec::cube(2, 16, 8.0);
        let mut f = GridField::zeros(g, Space::Physical);
        f.data[3 * 16 + 5] = C64::new(1.0, 0.0);
        let fh = dft_full(&f).unwrap();
        let m0 = fh.data[0].norm();
        assert!(fh.data.iter().all(|x| (x.norm() - m0).abs() < 1e-14));
        assert!((fh.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn partial_then_axis_equals_full() {
        let g = GridSpec::cube(3, 8, 6.0);
        let f = GridField::from_fn(g, |x| C64::new(x[0].sin() + x[1] * x[2], x[2].cos()));
        let a = mixed_to_frequency(&partial_dft(&f, 1).unwrap()).unwrap();
        let b = dft_full(&f).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-10 * b.l2_norm());
        let back = ipartial_dft(&partial_dft(&f, 2).unwrap()).unwrap();
        assert!(back.sub(&f).unwrap().l2_norm() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn mixed_norm_identities() {
        let g = GridSpec::cube(2, 32, 8.0);
        let f = gauss(g.clone(), vec![0.5, -0.3], 0.8);
        let m = partial_dft(&f, 0).unwrap();
        let l2 = mixed_norm(&m, Exponent::Two, Exponent::Two).unwrap();
        assert!((l2 - f.l2_norm()).abs() < 1e-12);
        // t-independent field: Theta(inf,2) equals the cross-section L2 norm
        let c = GridField::from_fn(g, |x| C64::new((-x[1] * x[1]).exp(), 0.0));
        let mc = partial_dft(&c, 0).unwrap();
        let cross: f64 = (0..32).map(|j| c.data[j].norm_sqr()).sum::<f64>() * c.grid.h(1);
        let v = mixed_norm(&mc, Exponent::Inf, Exponent::Two).unwrap();
        assert!((v - cross.sqrt()).abs() < 1e-12);
        assert!(mixed_norm(&c, Exponent::One, Exponent::Two).is_err());
    }

    #[test]
    fn rotation_examples() {
        let g = GridSpec::cube(2, 128, 16.0);
        let f = gauss(g, vec![1.0, 0.5], 0.5);
        let id = rotate_resample(&f, &rotation_matrix_2d(0.0)).unwrap();
        assert_eq!(id.field.data, f.data);
        let q = rotate_resample(&f, &rotation_matrix_2d(PI / 2.0)).unwrap();
        let direct = gauss(f.grid.clone(), vec![-0.5, 1.0], 0.5);
        assert!(q.field.sub(&direct).unwrap().max_abs() < 1e-14);
        let r = rotate_resample(&f, &rotation_matrix_2d(PI / 4.0)).unwrap();
        assert!(r.residual < 1e-8, "residual {}", r.residual);
        let s = 0.5f64.sqrt();
        let direct = gauss(f.grid.clone(), vec![s * 0.5, s * 1.5], 0.5);
        assert!(r.field.sub(&direct).unwrap().max_abs() < 1e-8);
        let wide = gauss(GridSpec::cube(2, 64, 16.0), vec![5.0, 0.0], 0.7);
        assert!(matches!(
            rotate_resample(&wide, &rotation_matrix_2d(0.3)),
            Err(Error::GuardBand(_))
        ));
    }

    #[test]
    fn rotation_3d_matches_analytic() {
        let g = GridSpec::cube(3, 64, 16.0);
        let f = gauss(g, vec![1.0, 0.0, 0.5], 0.5);
        let (a, b, c) = (0.3f64, 0.7f64, -0.4f64);
        let rz = |t: f64| {
            vec![
                vec![t.cos(), -t.sin(), 0.0],
                vec![t.sin(), t.cos(), 0.0],
                vec![0.0, 0.0, 1.0],
            ]
        };
        let ry = |t: f64| {
            vec![
                vec![t.cos(), 0.0, t.sin()],
                vec![0.0, 1.0, 0.0],
                vec![-t.sin(), 0.0, t.cos()],
            ]
        };
        let mm = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..3)
                .map(|i| {
                    (0..3)
                        .map(|j| (0..3).map(|k| x[i][k] * y[k][j]).sum())
                        .collect()
                })
                .collect()
        };
        let r = mm(&mm(&rz(a), &ry(b)), &rz(c));
        let (a2, b2, c2) = zyz_angles(&r);
        assert!((a2 - a).abs() < 1e-12 && (b2 - b).abs() < 1e-12 && (c2 - c).abs() < 1e-12);
        let out = rotate_resample(&f, &r).unwrap();
        let c0 = [1.0, 0.0, 0.5];
        let rc: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| r[i][j] * c0[j]).sum())
            .collect();
        let direct = gauss(f.grid.clone(), rc, 0.5);
        assert!(out.field.sub(&direct).unwrap().max_abs() < 1e-7);
    }
}
