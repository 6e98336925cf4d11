//! Direction selection: sampled tangent sets, greedy covering, and the sampled
//! admissibility checks.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::GridSpec;
use crate::poly::{discriminant_resultant, MultiPoly, NormalForm2};
use crate::roots::min_deriv_of;
use crate::tol;

/// Symmetric sample grid [-extent, extent]^m on a perpendicular hyperplane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerpGrid {
    pub extent: f64,
    pub points: usize,
}

impl PerpGrid {
    pub fn with_spacing(extent: f64, spacing: f64) -> Self {
        let points = ((2.0 * extent / spacing).ceil() as usize + 1).max(2);
        PerpGrid { extent, points }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.points - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    fn nearest(&self, y: f64) -> usize {
        (((y + self.extent) / self.spacing()).round().max(0.0) as usize).min(self.points - 1)
    }
}

/// Orthonormal basis of theta-perp. Coordinate axes other than the one closest
/// to theta are projected and orthonormalized in order, so for theta = e_k the
/// basis is the remaining axes.
pub fn perp_basis(theta: &[f64]) -> Vec<Vec<f64>> {
    let n = theta.len();
    let skip = (0..n)
        .max_by(|&a, &b| theta[a].abs().total_cmp(&theta[b].abs()))
        .unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in (0..n).filter(|&j| j != skip) {
        let mut v: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        for u in std::iter::once(theta).chain(basis.iter().map(|b| b.as_slice())) {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v);
    }
    basis
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nv == 0.0 {
        return Err(Error::Config("zero direction".into()));
    }
    Ok(v.iter().map(|x| x / nv).collect())
}

fn principal_at(p: &MultiPoly, theta: &[f64]) -> f64 {
    p.principal_part()
        .eval_real(theta)
        .map(|z| z.norm())
        .unwrap_or(0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentSetSample {
    pub theta: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    pub grid: PerpGrid,
    /// |Delta(theta, xi_perp)| in row-major order over the perpendicular grid.
    pub values: Vec<f64>,
    pub min_deriv: Vec<f64>,
    pub zero_band: Vec<usize>,
    #[serde(skip)]
    edt: Vec<f64>,
}

impl TangentSetSample {
    pub fn m(&self) -> usize {
        self.basis.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Perpendicular coordinates of sample `flat`.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let m = self.m();
        let p = self.grid.points;
        let mut out = vec![0.0; m];
        let mut r = flat;
        for j in (0..m).rev() {
            out[j] = self.grid.coord(r % p);
            r /= p;
        }
        out
    }

    /// The sample point as a full frequency vector.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let y = self.coords(flat);
        let n = self.theta.len();
        (0..n)
            .map(|i| self.basis.iter().zip(&y).map(|(b, c)| b[i] * c).sum())
            .collect()
    }

    /// Half diagonal of one sample cell.
    pub fn half_cell(&self) -> f64 {
        0.5 * self.grid.spacing() * (self.m() as f64).sqrt()
    }

    /// Lower bound for the distance from xi_perp (of any xi) to the real tangent
    /// set: nearest-sample distance transform, minus the snap offset and the
    /// half-cell band padding. Infinite when the band is empty.
    pub fn distance(&self, xi: &[f64]) -> f64 {
        if self.zero_band.is_empty() {
            return f64::INFINITY;
        }
        let m = self.m();
        if m == 0 {
            return 0.0;
        }
        let p = self.grid.points;
        let mut flat = 0;
        let mut snap2 = 0.0;
        for b in &self.basis {
            let y: f64 = b.iter().zip(xi).map(|(a, c)| a * c).sum();
            let i = self.grid.nearest(y);
            flat = flat * p + i;
            let d = y - self.grid.coord(i);
            snap2 += d * d;
        }
        (self.edt[flat] - snap2.sqrt() - self.half_cell()).max(0.0)
    }
}

/// Samples Delta(theta, .) and min |p'| at the roots on a perpendicular grid,
/// marks the zero band, and builds its distance transform.
pub fn tangent_set_sample(
    p: &MultiPoly,
    theta: &[f64],
    grid: &PerpGrid,
) -> Result<TangentSetSample> {
    let n = p.dim();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    let theta = unit(theta)?;
    let pn = principal_at(p, &theta);
    if pn <= tol::PRINCIPAL_MIN {
        return Err(Error::DirectionOnCharacteristicCone(pn));
    }
    let basis = perp_basis(&theta);
    let m = basis.len();
    if m > 2 {
        return Err(Error::Unsupported(format!(
            "tangent sets in {n} dimensions"
        )));
    }
    let count = grid.points.pow(m as u32);
    let dir: Vec<C64> = theta.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut sample = TangentSetSample {
        theta: theta.clone(),
        basis,
        grid: grid.clone(),
        values: Vec::new(),
        min_deriv: Vec::new(),
        zero_band: Vec::new(),
        edt: Vec::new(),
    };
    let evals: Vec<(C64, f64)> = (0..count)
        .into_par_iter()
        .map(|flat| {
            let base: Vec<C64> = sample
                .point(flat)
                .into_iter()
                .map(|x| C64::new(x, 0.0))
                .collect();
            let c = p.restrict_general(&dir, &base);
            let d = discriminant_resultant(&c).unwrap_or(C64::new(0.0, 0.0));
            (d, min_deriv_of(&c))
        })
        .collect();
    let delta: Vec<C64> = evals.iter().map(|e| e.0).collect();
    sample.values = delta.iter().map(|d| d.norm()).collect();
    sample.min_deriv = evals.iter().map(|e| e.1).collect();
    sample.zero_band = zero_band(&delta, m, grid.points);
    sample.edt = distance_transform(&sample.zero_band, m, grid.points, grid.spacing());
    Ok(sample)
}

/// A sample is in the band when |Delta| there does not exceed the variation of
/// Delta to some grid neighbour, i.e. a zero may lie within reach.
fn zero_band(delta: &[C64], m: usize, p: usize) -> Vec<usize> {
    if m == 0 {
        return if delta[0].norm() == 0.0 {
            vec![0]
        } else {
            Vec::new()
        };
    }
    let idx = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= p as isize || j >= p as isize {
            None
        } else {
            Some(i as usize * p + j as usize)
        }
    };
    (0..delta.len())
        .into_par_iter()
        .filter(|&flat| {
            let v = delta[flat];
            if v.norm() == 0.0 {
                return true;
            }
            let (i, j) = if m == 1 {
                (0, flat as isize)
            } else {
                ((flat / p) as isize, (flat % p) as isize)
            };
            let di: &[isize] = if m == 1 { &[0] } else { &[-1, 0, 1] };
            let mut var: f64 = 0.0;
            for &a in di {
                for b in [-1isize, 0, 1] {
                    if let Some(k) = idx(i + a, j + b) {
                        var = var.max((delta[k] - v).norm());
                    }
                }
            }
            v.norm() <= var
        })
        .collect()
}

/// Exact Euclidean distance transform (lower envelope of parabolas) to the
/// marked samples, in coordinate units.
fn distance_transform(band: &[usize], m: usize, p: usize, h: f64) -> Vec<f64> {
    let total = p.pow(m as u32);
    if band.is_empty() {
        return vec![f64::INFINITY; total];
    }
    let big = 1e30;
    let mut d2 = vec![big; total];
    for &b in band {
        d2[b] = 0.0;
    }
    if m >= 1 {
        // last axis is contiguous
        d2.par_chunks_mut(p).for_each(edt_1d);
    }
    if m == 2 {
        let mut col = vec![0.0; p];
        for j in 0..p {
            for i in 0..p {
                col[i] = d2[i * p + j];
            }
            edt_1d(&mut col);
            for i in 0..p {
                d2[i * p + j] = col[i];
            }
        }
    }
    d2.into_iter()
        .map(|x| {
            if x >= big {
                f64::INFINITY
            } else {
                x.sqrt() * h
            }
        })
        .collect()
}

fn edt_1d(f: &mut [f64]) {
    let n = f.len();
    let src = f.to_vec();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match src.iter().position(|&x| x < 1e29) {
        Some(i) => i,
        None => return,
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if src[q] >= 1e29 {
            continue;
        }
        loop {
            let r = v[k];
            let s = ((src[q] + (q * q) as f64) - (src[r] + (r * r) as f64))
                / (2.0 * (q as f64 - r as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let r = v[k];
        let d = q as f64 - r as f64;
        f[q] = d * d + src[r];
    }
}

/// Uniform inclusive frequency box on which coverage is certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
}

impl CertGrid {
    pub fn cube(n: usize, half_width: f64, spacing: f64) -> Self {
        let pts = ((2.0 * half_width / spacing).ceil() as usize + 1).max(2);
        CertGrid {
            lo: vec![-half_width; n],
            hi: vec![half_width; n],
            points: vec![pts; n],
        }
    }

    /// Exactly the frequency samples of a solve grid.
    pub fn from_freq_grid(g: &GridSpec) -> Self {
        let n = g.n();
        CertGrid {
            lo: (0..n)
                .map(|j| -((g.dims[j] / 2) as f64) * g.dxi(j))
                .collect(),
            hi: (0..n)
                .map(|j| (g.dims[j] as f64 / 2.0 - 1.0).ceil() * g.dxi(j))
                .collect(),
            points: g.dims.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, j: usize) -> f64 {
        (self.hi[j] - self.lo[j]) / (self.points[j] - 1) as f64
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        let mut r = flat;
        for j in (0..n).rev() {
            out[j] = self.lo[j] + (r % self.points[j]) as f64 * self.spacing(j);
            r /= self.points[j];
        }
        out
    }

    /// Largest |xi| over the box.
    pub fn radius(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub uncovered: usize,
    /// Connected components of the uncovered cert points (face adjacency).
    pub clusters: usize,
    pub cluster_centroids: Vec<Vec<f64>>,
    /// min over cert points of max_k dist_k - 2 r0
    pub margin: f64,
}

/// Checks that every cert point is farther than 2 r0 from some sampled tangent set.
pub fn coverage(samples: &[TangentSetSample], r0: f64, cert: &CertGrid) -> CoverageReport {
    let best: Vec<f64> = (0..cert.len())
        .into_par_iter()
        .map(|flat| {
            let xi = cert.point(flat);
            samples.iter().map(|s| s.distance(&xi)).fold(0.0, f64::max)
        })
        .collect();
    let margin = best.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * r0;
    let bad: Vec<bool> = best.iter().map(|&d| d <= 2.0 * r0).collect();
    let uncovered = bad.iter().filter(|&&b| b).count();
    let (clusters, cluster_centroids) = clusters_of(&bad, cert);
    CoverageReport {
        covered: cert.len() - uncovered,
        uncovered,
        clusters,
        cluster_centroids,
        margin,
    }
}

fn clusters_of(bad: &[bool], cert: &CertGrid) -> (usize, Vec<Vec<f64>>) {
    let n = cert.n();
    let mut strides = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * cert.points[j + 1];
    }
    let mut label = vec![usize::MAX; bad.len()];
    let mut centroids = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bad.len() {
        if !bad[start] || label[start] != usize::MAX {
            continue;
        }
        let id = centroids.len();
        let mut sum = vec![0.0; n];
        let mut count = 0usize;
        label[start] = id;
        stack.push(start);
        while let Some(f) = stack.pop() {
            let x = cert.point(f);
            sum.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
            count += 1;
            for j in 0..n {
                let i = (f / strides[j]) % cert.points[j];
                if i > 0 && bad[f - strides[j]] && label[f - strides[j]] == usize::MAX {
                    label[f - strides[j]] = id;
                    stack.push(f - strides[j]);
                }
                if i + 1 < cert.points[j]
                    && bad[f + strides[j]]
                    && label[f + strides[j]] == usize::MAX
                {
                    label[f + strides[j]] = id;
                    stack.push(f + strides[j]);
                }
            }
        }
        centroids.push(sum.into_iter().map(|s| s / count as f64).collect());
    }
    (centroids.len(), centroids)
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionSet {
    pub thetas: Vec<Vec<f64>>,
    pub r0: f64,
    pub eps: f64,
    pub cert: CertGrid,
    pub margin: f64,
    #[serde(skip)]
    pub samples: Vec<TangentSetSample>,
}

impl DirectionSet {
    /// Lower bound on the distance from xi to the tangent set of direction k.
    pub fn distance(&self, k: usize, xi: &[f64]) -> f64 {
        self.samples[k].distance(xi)
    }
}

/// Candidate directions: coordinate axes first, then a low-discrepancy sequence
/// on the half sphere with a seeded random rotation of the sequence.
#[derive(Clone, Debug)]
pub struct DirectionSampler {
    n: usize,
    next: usize,
    shift: Vec<f64>,
    explicit: Vec<Vec<f64>>,
}

impl DirectionSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..2).map(|_| rng.gen::<f64>()).collect();
        let explicit = (0..n)
            .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        DirectionSampler {
            n,
            next: 0,
            shift,
            explicit,
        }
    }

    /// Exactly the given directions, in order.
    pub fn from_list(dirs: Vec<Vec<f64>>) -> Self {
        DirectionSampler {
            n: dirs.first().map_or(0, |d| d.len()),
            next: 0,
            shift: Vec::new(),
            explicit: dirs,
        }
    }

    fn low_discrepancy(&self, i: usize) -> Vec<f64> {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let u = ((i as f64 + 0.5) / phi + self.shift[0]).fract();
        match self.n {
            1 => vec![1.0],
            2 => {
                let a = std::f64::consts::PI * u;
                vec![a.cos(), a.sin()]
            }
            _ => {
                let v = ((i as f64 + 0.5) * 0.618_033_988_749_895 * 0.5 + self.shift[1]).fract();
                let z = v;
                let r = (1.0 - z * z).sqrt();
                let a = std::f64::consts::TAU * u;
                let mut d = vec![r * a.cos(), r * a.sin(), z];
                d.resize(self.n, 0.0);
                d
            }
        }
    }
}

impl Iterator for DirectionSampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.next;
        self.next += 1;
        if i < self.explicit.len() {
            return Some(self.explicit[i].clone());
        }
        if self.shift.is_empty() {
            return None;
        }
        Some(self.low_discrepancy(i - self.explicit.len()))
    }
}

#[derive(Clone, Debug)]
pub struct FindOptions {
    pub r0: f64,
    /// Perpendicular sample spacing; the sample extent follows from the cert grid.
    pub sample_spacing: f64,
    pub budget: usize,
}

/// Greedy covering: a candidate is kept when it covers some cert point not yet
/// covered. Fails with BudgetExhausted once `budget` candidates were tried.
pub fn find_directions<I>(
    p: &MultiPoly,
    candidates: I,
    opts: &FindOptions,
    cert: &CertGrid,
) -> Result<DirectionSet>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let n = p.dim();
    if cert.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cert.n(),
        });
    }
    let perp = PerpGrid::with_spacing(cert.radius() + opts.sample_spacing, opts.sample_spacing);
    let mut covered = vec![false; cert.len()];
    let mut kept: Vec<TangentSetSample> = Vec::new();
    let mut tried = 0;
    for cand in candidates {
        if tried >= opts.budget {
            break;
        }
        tried += 1;
        let theta = unit(&cand)?;
        if principal_at(p, &theta) <= tol::CANDIDATE_PRINCIPAL_MIN {
            continue;
        }
        let s = tangent_set_sample(p, &theta, &perp)?;
        let newly: Vec<usize> = (0..cert.len())
            .into_par_iter()
            .filter(|&f| !covered[f] && s.distance(&cert.point(f)) > 2.0 * opts.r0)
            .collect();
        if newly.is_empty() {
            continue;
        }
        for f in newly {
            covered[f] = true;
        }
        kept.push(s);
        if covered.iter().all(|&c| c) {
            let rep = coverage(&kept, opts.r0, cert);
            let eps = kept
                .iter()
                .map(|s| cond1_from_sample(s, opts.r0).eps)
                .fold(f64::INFINITY, f64::min);
            return Ok(DirectionSet {
                thetas: kept.iter().map(|s| s.theta.clone()).collect(),
                r0: opts.r0,
                eps: 0.5 * eps,
                cert: cert.clone(),
                margin: rep.margin,
                samples: kept,
            });
        }
    }
    Err(Error::BudgetExhausted {
        tried,
        uncovered: covered.iter().filter(|&&c| !c).count(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Cond1Report {
    /// Supremum of passing eps: min |p'| over samples farther than r0 from the band.
    pub eps: f64,
    pub samples: usize,
    pub band: usize,
    /// Samples considered (distance > r0).
    pub outside: usize,
}

fn cond1_from_sample(s: &TangentSetSample, r0: f64) -> Cond1Report {
    let mut eps = f64::INFINITY;
    let mut outside = 0;
    for flat in 0..s.len() {
        if s.distance(&s.point(flat)) > r0 {
            outside += 1;
            eps = eps.min(s.min_deriv[flat]);
        }
    }
    Cond1Report {
        eps,
        samples: s.len(),
        band: s.zero_band.len(),
        outside,
    }
}

/// Sampled condition 1: every sample with min |p'| <= eps lies within r0 of the
/// zero band exactly when eps is below the returned value. The threshold is
/// read off directly (the limit of bisection over eps).
pub fn check_admissibility_cond1(
    p: &MultiPoly,
    theta: &[f64],
    r0: f64,
    grid: &PerpGrid,
) -> Result<Cond1Report> {
    let s = tangent_set_sample(p, theta, grid)?;
    Ok(cond1_from_sample(&s, r0))
}

/// Sampled condition 2: both zero bands are empty outside radius `r`.
pub fn check_admissibility_cond2(
    p: &MultiPoly,
    theta1: &[f64],
    theta2: &[f64],
    r: f64,
    grid: &PerpGrid,
) -> Result<bool> {
    let t1 = unit(theta1)?;
    let t2 = unit(theta2)?;
    let c: f64 = t1.iter().zip(&t2).map(|(a, b)| a * b).sum();
    if 1.0 - c.abs() < 1e-12 {
        return Err(Error::NearParallel(c));
    }
    for t in [t1, t2] {
        let s = tangent_set_sample(p, &t, grid)?;
        let far = s
            .zero_band
            .iter()
            .any(|&f| s.coords(f).iter().map(|y| y * y).sum::<f64>().sqrt() > r);
        if far {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Second-order plan: the n normal-form coordinate directions plus a remainder
/// handled by Fourier division.
#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderPlan {
    /// Directions in xi coordinates (columns of the eigenvector basis).
    pub thetas: Vec<Vec<f64>>,
    pub eps: f64,
    pub remainder: bool,
}

pub fn second_order_directions(nf: &NormalForm2) -> Result<SecondOrderPlan> {
    if nf.is_double_characteristic() {
        return Err(Error::DoubleCharacteristic);
    }
    if nf.eps.contains(&0) {
        return Err(Error::Unsupported(
            "degenerate normal form (some eps_j = 0) uses the first-order path".into(),
        ));
    }
    let n = nf.dim();
    let eps = second_order_eps(nf);
    let thetas = (0..n)
        .map(|j| (0..n).map(|i| nf.basis[i * n + j]).collect())
        .collect();
    Ok(SecondOrderPlan {
        thetas,
        eps,
        remainder: true,
    })
}

/// eps = |b| / (4n) when b != 0, else max beta_k^2 / 4: small enough that the
/// remainder support stays off the zero set of P (with room for the 2 eps plateau).
pub fn second_order_eps(nf: &NormalForm2) -> f64 {
    let n = nf.dim() as f64;
    if nf.b != 0.0 {
        nf.b.abs() / (4.0 * n)
    } else {
        nf.beta.iter().map(|b| b * b).fold(0.0, f64::max) / 4.0
    }
}
