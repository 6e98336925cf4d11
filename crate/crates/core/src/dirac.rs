//! The 4x4 Dirac system sum_j A_j d_j u - i omega u = f in three dimensions,
//! solved along one axis by diagonalizing the Hermitian line matrix.

use nalgebra::{Matrix4, Schur, SymmetricEigen, Vector4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{l2_on_domain, DomainSpec};
use crate::error::{Error, Result};
use crate::fields::{ipartial_dft, partial_dft, GridField, GridSpec, Space};
use crate::ode::{
    branch_forward, derivative_axis, LagrangeTable, LineSolver, Quadrature, SolveOptions,
};
use crate::tol;

const I: C64 = C64 { re: 0.0, im: 1.0 };

pub type IMat = [[i8; 4]; 4];

#[derive(Clone, Debug, Serialize)]
pub struct DiracMatrices {
    pub a: [IMat; 3],
    pub omega: f64,
}

fn imul(x: &IMat, y: &IMat) -> IMat {
    let mut out = [[0i8; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| x[i][k] * y[k][j]).sum();
        }
    }
    out
}

fn ineg(x: &IMat) -> IMat {
    x.map(|r| r.map(|v| -v))
}

fn itranspose(x: &IMat) -> IMat {
    let mut t = [[0i8; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = x[j][i];
        }
    }
    t
}

const MINUS_ID: IMat = [[-1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]];

/// Product sign s with A_i A_j = s A_k for the distinct triple (i, j, k), if any.
pub fn product_sign(a: &[IMat; 3], i: usize, j: usize) -> Option<i8> {
    let k = 3 - i - j;
    let p = imul(&a[i], &a[j]);
    if p == a[k] {
        Some(1)
    } else if p == ineg(&a[k]) {
        Some(-1)
    } else {
        None
    }
}

/// Checks skewness, A_j^2 = -I and the product table in integer arithmetic.
pub fn identities_hold(a: &[IMat; 3]) -> bool {
    let skew = a.iter().all(|m| itranspose(m) == ineg(m));
    let square = a.iter().all(|m| imul(m, m) == MINUS_ID);
    let table = (0..3).all(|i| {
        (0..3)
            .filter(|&j| j != i)
            .all(|j| product_sign(a, i, j).is_some())
    });
    skew && square && table
}

pub fn build_matrices(omega: f64) -> DiracMatrices {
    // P = [[0, -1], [1, 0]] in 2x2 blocks
    let a1: IMat = [[0, 0, 0, -1], [0, 0, 1, 0], [0, -1, 0, 0], [1, 0, 0, 0]];
    let a2: IMat = [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]];
    let a3: IMat = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]];
    let a = [a1, a2, a3];
    assert!(identities_hold(&a), "Dirac matrix identities");
    DiracMatrices { a, omega }
}

fn to_c(m: &IMat) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| C64::new(m[i][j] as f64, 0.0))
}

impl DiracMatrices {
    pub fn a_c(&self, j: usize) -> Matrix4<C64> {
        to_c(&self.a[j])
    }

    pub fn b(&self) -> Matrix4<C64> {
        Matrix4::identity() * C64::new(0.0, -self.omega)
    }
}

/// M = A_k^{-1} (sum_{j != k} i xi_j A_j + B), with A_k^{-1} = -A_k.
/// Along the axis the system reads d_t u = -M u + A_k^{-1} f.
pub fn m_of_xi(dm: &DiracMatrices, xi: &[f64], k: usize) -> Result<Matrix4<C64>> {
    if k >= 3 {
        return Err(Error::InvalidAxis { axis: k, n: 3 });
    }
    let mut s = dm.b();
    for j in (0..3).filter(|&j| j != k) {
        s += dm.a_c(j) * C64::new(0.0, xi[j]);
    }
    let m = -dm.a_c(k) * s;
    let defect = normality_defect(&m);
    if defect >= tol::NORMALITY {
        return Err(Error::NotNormal(defect));
    }
    Ok(m)
}

/// ||M M* - M* M||_F
pub fn normality_defect(m: &Matrix4<C64>) -> f64 {
    let ma = m.adjoint();
    (m * ma - ma * m).norm()
}

/// Eigenpairs of a normal matrix, sorted by (Re, Im).
#[derive(Clone, Debug)]
pub struct Eigen4 {
    pub values: Vec<C64>,
    pub vectors: Matrix4<C64>,
}

/// Unitary diagonalization: the symmetric eigensolver when M is Hermitian (the Dirac
/// case), otherwise a complex Schur form, which is diagonal for a normal matrix.
pub fn eigen_normal(m: &Matrix4<C64>) -> Result<Eigen4> {
    let defect = normality_defect(m);
    if defect >= tol::NORMALITY {
        return Err(Error::NotNormal(defect));
    }
    let (vals, vecs): (Vec<C64>, Matrix4<C64>) = if (m - m.adjoint()).norm() < tol::NORMALITY {
        let eig = SymmetricEigen::new((m + m.adjoint()) * C64::new(0.5, 0.0));
        (
            eig.eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect(),
            eig.eigenvectors,
        )
    } else {
        let (q, t) = Schur::new(*m).unpack();
        ((0..4).map(|i| t[(i, i)]).collect(), q)
    };
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| {
        vals[x]
            .re
            .total_cmp(&vals[y].re)
            .then(vals[x].im.total_cmp(&vals[y].im))
    });
    let values = order.iter().map(|&i| vals[i]).collect();
    let vectors = Matrix4::from_fn(|r, c| vecs[(r, order[c])]);
    Ok(Eigen4 { values, vectors })
}

/// Orthogonal projections onto the Re >= 0 and Re < 0 eigenspaces.
pub fn spectral_projections(m: &Matrix4<C64>) -> Result<(Matrix4<C64>, Matrix4<C64>)> {
    let e = eigen_normal(m)?;
    let mut plus = Matrix4::zeros();
    let mut minus = Matrix4::zeros();
    for (c, l) in e.values.iter().enumerate() {
        let v = e.vectors.column(c);
        let outer = v * v.adjoint();
        if l.re >= 0.0 {
            plus += outer;
        } else {
            minus += outer;
        }
    }
    Ok((plus, minus))
}

/// Four component fields on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField4 {
    pub comps: [GridField; 4],
}

impl VectorField4 {
    pub fn new(comps: [GridField; 4]) -> Result<Self> {
        for c in &comps[1..] {
            comps[0].check_same_grid(c)?;
            if c.space != comps[0].space {
                return Err(Error::WrongSpace {
                    expected: comps[0].space.name(),
                    got: c.space.name(),
                });
            }
        }
        Ok(VectorField4 { comps })
    }

    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        let z = GridField::zeros(grid, space);
        VectorField4 {
            comps: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.comps[0].grid
    }

    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_on_domain(&self, d: &DomainSpec) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.comps {
            s += l2_on_domain(c, d)?.powi(2);
        }
        Ok(s.sqrt())
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_fields(path, &self.comps.iter().collect::<Vec<_>>())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let v = crate::io::read_fields(path)?;
        let [a, b, c, d]: [GridField; 4] = v.try_into().map_err(|v: Vec<GridField>| {
            Error::Io(format!("expected 4 records, found {}", v.len()))
        })?;
        VectorField4::new([a, b, c, d])
    }

    fn map(&self, f: impl Fn(&GridField) -> Result<GridField>) -> Result<Self> {
        Ok(VectorField4 {
            comps: [
                f(&self.comps[0])?,
                f(&self.comps[1])?,
                f(&self.comps[2])?,
                f(&self.comps[3])?,
            ],
        })
    }
}

/// Per-line Euclidean norm of the vector, then Theta(p, 2) over lines.
fn vector_mixed_norm(v: &VectorField4, axis: usize, inf: bool) -> f64 {
    let g = v.grid();
    let (bases, stride) = g.lines(axis);
    let d = g.dims[axis];
    let h = g.h(axis);
    let w: f64 = (0..3).filter(|&j| j != axis).map(|j| g.dxi(j)).product();
    let s: f64 = bases
        .par_iter()
        .map(|&b| {
            let it = (0..d).map(|i| {
                v.comps
                    .iter()
                    .map(|c| c.data[b + i * stride].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            });
            let l = if inf {
                it.fold(0.0, f64::max)
            } else {
                it.sum::<f64>() * h
            };
            l * l
        })
        .sum();
    (s * w).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracReport {
    pub axis: usize,
    pub omega: f64,
    /// Theta(inf,2) of the solution over Theta(1,2) of the source, both in mixed space.
    pub ratio: f64,
    pub max_normality_defect: f64,
    pub mixed_residual: f64,
    pub active_lines: usize,
}

/// Solves along axis k. Per perpendicular frequency, with M = U diag(lambda) U*,
/// v = U* u obeys (-i d_t - i lambda) v = -i U* A_k^{-1} F, one scalar solve per eigenvalue.
pub fn solve_dirac(
    f: &VectorField4,
    omega: f64,
    k: usize,
    opts: &SolveOptions,
) -> Result<(VectorField4, DiracReport)> {
    let grid = f.grid().clone();
    if grid.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: grid.n(),
        });
    }
    for c in &f.comps {
        c.expect_space(Space::Physical)?;
    }
    let dm = build_matrices(omega);
    let ak_inv = -dm.a_c(k);
    let fm = f.map(|c| partial_dft(c, k))?;
    let (bases, stride) = grid.lines(k);
    let d = grid.dims[k];
    let table = match opts.quadrature {
        Quadrature::Lagrange(n) => Some(LagrangeTable::new(n)),
        Quadrature::PiecewiseConstant => None,
    };
    let solver = LineSolver::new(grid.h(k), opts.quadrature, table.as_ref());
    type LineOut = (Vec<[C64; 4]>, f64, f64, bool);
    let lines: Vec<Result<LineOut>> = bases
        .par_iter()
        .map(|&b| {
            let src: Vec<Vector4<C64>> = (0..d)
                .map(|i| Vector4::from_fn(|c, _| fm.comps[c].data[b + i * stride]))
                .collect();
            if src.iter().all(|v| v.iter().all(|z| *z == C64::default())) {
                return Ok((vec![[C64::default(); 4]; d], 0.0, 0.0, false));
            }
            let mut xi = grid.freq_point(b);
            xi[k] = 0.0;
            let m = m_of_xi(&dm, &xi, k)?;
            let defect = normality_defect(&m);
            let e = eigen_normal(&m)?;
            let ustar = e.vectors.adjoint();
            let h: Vec<Vector4<C64>> = src.iter().map(|v| ustar * (ak_inv * v)).collect();
            let mut out = vec![Vector4::<C64>::zeros(); d];
            let mut res: f64 = 0.0;
            let mut w = vec![C64::default(); d];
            for (c, lam) in e.values.iter().enumerate() {
                let q = I * lam;
                let g: Vec<C64> = h.iter().map(|v| -I * v[c]).collect();
                // p'(q) = 1 for the first-order line operator, so the absorbing rule
                // with sign -1 reduces to forward; real q only arises at lambda = 0
                let fwd = branch_forward(q, C64::new(1.0, 0.0), opts.branch);
                solver.solve(q, &g, fwd, &mut w);
                res = res.max(solver.mixed_exact_residual(q, &g, fwd, &w));
                for i in 0..d {
                    out[i] += e.vectors.column(c) * w[i];
                }
            }
            Ok((
                out.iter().map(|v| [v[0], v[1], v[2], v[3]]).collect(),
                defect,
                res,
                true,
            ))
        })
        .collect();
    let mut um = VectorField4::zeros(grid.clone(), Space::Mixed(k));
    let mut max_def: f64 = 0.0;
    let mut mixed_residual: f64 = 0.0;
    let mut active = 0;
    for (li, r) in lines.into_iter().enumerate() {
        let (vals, def, res, act) = r?;
        max_def = max_def.max(def);
        mixed_residual = mixed_residual.max(res);
        active += act as usize;
        for (i, v) in vals.iter().enumerate() {
            for c in 0..4 {
                um.comps[c].data[bases[li] + i * stride] = v[c];
            }
        }
    }
    let num = vector_mixed_norm(&um, k, true);
    let den = vector_mixed_norm(&fm, k, false);
    let u = um.map(ipartial_dft)?;
    Ok((
        u,
        DiracReport {
            axis: k,
            omega,
            ratio: if den > 0.0 { num / den } else { 0.0 },
            max_normality_defect: max_def,
            mixed_residual,
            active_lines: active,
        },
    ))
}

/// Relative L2 defect of sum_j A_j d_j u - i omega u - f on cells FD_MARGIN from the faces.
pub fn dirac_residual_fd(u: &VectorField4, f: &VectorField4, omega: f64) -> Result<f64> {
    let dm = build_matrices(omega);
    let g = u.grid().clone();
    let mut lhs: Vec<Vec<C64>> = u
        .comps
        .iter()
        .map(|c| c.data.iter().map(|z| -I * omega * z).collect())
        .collect();
    for j in 0..3 {
        let du: Vec<Vec<C64>> = u
            .comps
            .iter()
            .map(|c| derivative_axis(&c.data, &g, j, 1))
            .collect();
        for r in 0..4 {
            for c in 0..4 {
                let a = dm.a[j][r][c];
                if a != 0 {
                    let a = a as f64;
                    lhs[r].iter_mut().zip(&du[c]).for_each(|(l, d)| *l += d * a);
                }
            }
        }
    }
    let m = tol::FD_MARGIN;
    let mut idx = vec![0usize; 3];
    let (mut num, mut den) = (0.0, 0.0);
    for flat in 0..g.len() {
        g.unravel(flat, &mut idx);
        if idx.iter().zip(&g.dims).any(|(&i, &d)| i < m || i + m >= d) {
            continue;
        }
        for r in 0..4 {
            num += (lhs[r][flat] - f.comps[r].data[flat]).norm_sqr();
            den += f.comps[r].data[flat].norm_sqr();
        }
    }
    Ok(if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::BranchRule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matrix_identities() {
        let dm = build_matrices(1.0);
        assert!(identities_hold(&dm.a));
        assert_eq!(
            dm.a[1],
            [[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]]
        );
        for i in 0..3 {
            assert_eq!(imul(&dm.a[i], &dm.a[i]), MINUS_ID);
            assert_eq!(itranspose(&dm.a[i]), ineg(&dm.a[i]));
        }
        let mut broken = dm.a;
        broken[2][0][1] = 0;
        assert!(!identities_hold(&broken));
    }

    #[test]
    fn m_at_zero_is_i_ak() {
        let dm = build_matrices(1.0);
        for k in 0..3 {
            let m = m_of_xi(&dm, &[0.0; 3], k).unwrap();
            assert!((m - dm.a_c(k) * I).norm() == 0.0);
        }
    }

    #[test]
    fn normality_and_spectrum() {
        let dm = build_matrices(1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let k = rng.gen_range(0..3);
            let m = m_of_xi(&dm, &xi, k).unwrap();
            assert!(normality_defect(&m) < tol::NORMALITY);
            let e = eigen_normal(&m).unwrap();
            // oracle: squared eigenvalues are the eigenvalues of M^2, whose trace gives their sum
            let tr2: C64 = (m * m).trace();
            let s2: C64 = e.values.iter().map(|l| l * l).sum();
            assert!((tr2 - s2).norm() < 1e-9 * (1.0 + tr2.norm()));
            // spectrum is symmetric under lambda -> -lambda
            for i in 0..4 {
                assert!(
                    (e.values[i] + e.values[3 - i]).norm() < 1e-9,
                    "{:?}",
                    e.values
                );
            }
            let (pp, pm) = spectral_projections(&m).unwrap();
            assert!((pp + pm - Matrix4::identity()).norm() < 1e-12);
            assert!((pp * pp - pp).norm() < 1e-10 && (pp.adjoint() - pp).norm() < 1e-10);
            assert!((pm * pm - pm).norm() < 1e-10 && (pm.adjoint() - pm).norm() < 1e-10);
        }
    }

    #[test]
    fn diagonal_projection_example() {
        let m = Matrix4::from_diagonal(&Vector4::new(
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
        ));
        let (pp, pm) = spectral_projections(&m).unwrap();
        // Re lambda = 0 belongs to the plus side, so both +i and -i land there
        let want = Matrix4::from_diagonal(&Vector4::new(
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        ));
        assert!((pp - want).norm() < 1e-12);
        assert!((pp + pm - Matrix4::identity()).norm() < 1e-12);
        let skewed = Matrix4::from_fn(|i, j| C64::new(if j == i + 1 { 1.0 } else { 0.0 }, 0.0));
        assert!(matches!(
            spectral_projections(&skewed),
            Err(Error::NotNormal(_))
        ));
    }

    fn gaussian4(g: &GridSpec, c: [f64; 3]) -> VectorField4 {
        let make = |a: f64, b: f64| {
            GridField::from_fn(g.clone(), move |x| {
                let r2: f64 = (0..3).map(|j| (x[j] - c[j]).powi(2)).sum();
                C64::new(a, b) * (-r2).exp()
            })
        };
        VectorField4::new([
            make(1.0, 0.0),
            make(0.0, 0.5),
            make(-0.3, 0.2),
            make(0.0, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn solve_zero_and_gaussian() {
        let g = GridSpec::cube(3, 64, 16.0);
        let opts = SolveOptions {
            quadrature: Quadrature::Lagrange(12),
            branch: BranchRule::Forward,
        };
        let z = VectorField4::zeros(g.clone(), Space::Physical);
        let (u0, r0) = solve_dirac(&z, 1.0, 2, &opts).unwrap();
        assert_eq!(u0.l2_norm(), 0.0);
        assert_eq!(r0.active_lines, 0);
        let f = gaussian4(&g, [0.0, 0.0, 0.0]);
        let (u, rep) = solve_dirac(&f, 1.0, 2, &opts).unwrap();
        assert!(rep.mixed_residual < 1e-10, "{}", rep.mixed_residual);
        assert!(rep.ratio <= 1.0 + 1e-6, "{}", rep.ratio);
        assert!(rep.max_normality_defect < tol::NORMALITY);
        let res = dirac_residual_fd(&u, &f, 1.0).unwrap();
        assert!(res < 1e-3, "{res}");
    }

    #[test]
    fn vector_file_round_trip() {
        let g = GridSpec::cube(3, 8, 4.0);
        let f = gaussian4(&g, [0.5, 0.0, 0.0]);
        let dir = std::env::temp_dir().join(format!("simplechar-dirac-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("v.scfd");
        f.write(&p).unwrap();
        assert_eq!(VectorField4::read(&p).unwrap(), f);
        std::fs::remove_dir_all(&dir).ok();
    }
}
