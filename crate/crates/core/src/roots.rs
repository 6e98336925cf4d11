//! Univariate complex roots, partial fractions, and the near-double-root test.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{
    derivative_univariate, effective_degree, eval_univariate, restrict_to_line, LineRestriction,
    MultiPoly,
};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSet {
    /// Lexicographic by (Re, Im) with a 1e-12 tie window on the real part.
    pub roots: Vec<C64>,
    /// p'(tau_j)
    pub derivs: Vec<C64>,
}

impl RootSet {
    pub fn min_deriv(&self) -> f64 {
        self.derivs
            .iter()
            .map(|d| d.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_spacing(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in i + 1..self.roots.len() {
                m = m.min((self.roots[i] - self.roots[j]).norm());
            }
        }
        m
    }
}

pub fn roots(p: &LineRestriction) -> Result<RootSet> {
    if p.is_degenerate() {
        return Err(Error::DegenerateLine);
    }
    roots_of(&p.coeffs)
}

/// Roots of c_0 + c_1 tau + ... + c_N tau^N via companion-matrix eigenvalues
/// followed by at most five Newton steps each.
pub fn roots_of(c: &[C64]) -> Result<RootSet> {
    let nn = effective_degree(c);
    if nn == 0 || nn + 1 < c.len() {
        return Err(Error::DegenerateLine);
    }
    let lead = c[nn];
    let mut rs: Vec<C64> = match nn {
        1 => vec![-c[0] / lead],
        2 => {
            let (a, b, cc) = (lead, c[1], c[0]);
            let disc = (b * b - a * cc * 4.0).sqrt();
            // avoid cancellation between -b and the square root
            let q = if (b.conj() * disc).re >= 0.0 {
                -(b + disc) * 0.5
            } else {
                -(b - disc) * 0.5
            };
            if q == C64::default() {
                vec![C64::default(), C64::default()]
            } else {
                vec![q / a, cc / q]
            }
        }
        _ => {
            let mut m = DMatrix::<C64>::zeros(nn, nn);
            for i in 1..nn {
                m[(i, i - 1)] = C64::new(1.0, 0.0);
            }
            for i in 0..nn {
                m[(i, nn - 1)] = -c[i] / lead;
            }
            let ev = m.eigenvalues().ok_or_else(|| {
                Error::RootFinding("companion eigenvalues did not converge".into())
            })?;
            ev.iter().copied().collect()
        }
    };
    let dc = derivative_univariate(c);
    for r in rs.iter_mut() {
        polish(c, &dc, r);
    }
    order_lexicographic(&mut rs);
    let derivs = rs.iter().map(|&r| eval_univariate(&dc, r)).collect();
    Ok(RootSet { roots: rs, derivs })
}

fn polish(c: &[C64], dc: &[C64], r: &mut C64) {
    let mut val = eval_univariate(c, *r).norm();
    for _ in 0..tol::NEWTON_STEPS {
        if val == 0.0 {
            return;
        }
        let d = eval_univariate(dc, *r);
        if d == C64::default() {
            return;
        }
        let next = *r - eval_univariate(c, *r) / d;
        let nv = eval_univariate(c, next).norm();
        if !(nv < val) {
            return;
        }
        *r = next;
        val = nv;
    }
}

/// Sort by real part; runs whose real parts differ by at most the tie window
/// are ordered by imaginary part.
pub fn order_lexicographic(rs: &mut [C64]) {
    rs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut i = 0;
    while i < rs.len() {
        let mut j = i + 1;
        while j < rs.len() && rs[j].re - rs[j - 1].re <= tol::ROOT_TIE {
            j += 1;
        }
        rs[i..j].sort_by(|a, b| a.im.total_cmp(&b.im));
        i = j;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialFractions {
    pub poles: Vec<C64>,
    /// 1 / p'(tau_j)
    pub weights: Vec<C64>,
    pub min_deriv: f64,
}

impl PartialFractions {
    /// sum_j w_j / (tau - tau_j)
    pub fn eval(&self, tau: C64) -> C64 {
        self.poles
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w / (tau - p))
            .sum()
    }
}

/// Weights of 1/p(tau) = sum_j 1/((tau - tau_j) p'(tau_j)) for simple roots.
pub fn partial_fractions(r: &RootSet) -> Result<PartialFractions> {
    let spacing = r.min_spacing();
    let min_deriv = r.min_deriv();
    if spacing <= tol::PF_MIN_SPACING || min_deriv <= tol::PF_MIN_DERIV {
        return Err(Error::NearDoubleRoot { spacing, min_deriv });
    }
    let weights: Vec<C64> = r.derivs.iter().map(|d| d.inv()).collect();
    let pf = PartialFractions {
        poles: r.roots.clone(),
        weights,
        min_deriv,
    };
    // p is recovered from its roots and p'(tau_1) for the self-check
    let nn = r.roots.len();
    let lead = r.derivs[0]
        / r.roots
            .iter()
            .skip(1)
            .map(|t| r.roots[0] - t)
            .product::<C64>();
    let radius = 1.0 + r.roots.iter().map(|t| t.norm()).fold(0.0, f64::max);
    for k in 0..5 {
        let ang = 0.7 + 1.3 * k as f64;
        let tau = C64::from_polar(radius * (1.0 + 0.1 * k as f64), ang);
        let p = lead * r.roots.iter().map(|t| tau - t).product::<C64>();
        let rel = (pf.eval(tau) * p - 1.0).norm();
        if !(rel <= tol::PF_SELF_CHECK * nn as f64) {
            return Err(Error::NearDoubleRoot { spacing, min_deriv });
        }
    }
    Ok(pf)
}

/// min_j |p'(tau_j)| on the line tau*theta + xi_perp; zero when the line degenerates.
pub fn min_deriv_at_roots(p: &MultiPoly, theta: &[f64], xi_perp: &[f64]) -> Result<f64> {
    let lr = restrict_to_line(p, theta, xi_perp)?;
    Ok(min_deriv_of(&lr.coeffs))
}

pub fn min_deriv_of(c: &[C64]) -> f64 {
    match roots_of(c) {
        Ok(rs) => rs.min_deriv(),
        Err(_) => 0.0,
    }
}

// ---------------------------------------------------------------------------
// eigenvalue-free oracle

/// Winding number of p around the boundary of [x0,x1] x [y0,y1], i.e. the root count.
/// Edges are refined until each argument increment is below pi/4.
pub fn count_roots_in_box(c: &[C64], x0: f64, x1: f64, y0: f64, y1: f64) -> Option<i64> {
    let corners = [
        C64::new(x0, y0),
        C64::new(x1, y0),
        C64::new(x1, y1),
        C64::new(x0, y1),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        total += winding_segment(c, corners[k], corners[(k + 1) % 4], 0)?;
    }
    Some((total / std::f64::consts::TAU).round() as i64)
}

fn winding_segment(c: &[C64], a: C64, b: C64, depth: u32) -> Option<f64> {
    let pa = eval_univariate(c, a);
    let pb = eval_univariate(c, b);
    if pa.norm() == 0.0 || pb.norm() == 0.0 {
        return None;
    }
    let d = (pb / pa).arg();
    if d.abs() < std::f64::consts::FRAC_PI_4 && depth > 2 {
        return Some(d);
    }
    if depth > 40 {
        return None;
    }
    let m = (a + b) * 0.5;
    Some(winding_segment(c, a, m, depth + 1)? + winding_segment(c, m, b, depth + 1)?)
}

/// Locates every root to within `size` by recursive quadrisection on argument-principle counts.
pub fn roots_by_argument_principle(c: &[C64], size: f64) -> Option<Vec<C64>> {
    let nn = effective_degree(c);
    // Cauchy bound
    let r = 1.0 + (0..nn).map(|i| (c[i] / c[nn]).norm()).fold(0.0, f64::max);
    // slightly irrational offsets keep roots off box edges
    let h = r * 1.0137 + 0.01;
    let mut stack = vec![(-h + 0.0031, h, -h + 0.0017, h)];
    let mut out = Vec::new();
    while let Some((x0, x1, y0, y1)) = stack.pop() {
        let k = count_roots_in_box(c, x0, x1, y0, y1)?;
        if k <= 0 {
            continue;
        }
        if x1 - x0 < size && y1 - y0 < size {
            for _ in 0..k {
                out.push(C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)));
            }
            continue;
        }
        let xm = 0.5 * (x0 + x1);
        let ym = 0.5 * (y0 + y1);
        stack.extend([
            (x0, xm, y0, ym),
            (xm, x1, y0, ym),
            (x0, xm, ym, y1),
            (xm, x1, ym, y1),
        ]);
    }
    order_lexicographic(&mut out);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn quadratic_examples() {
        let r = roots_of(&[c(-1.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(r.roots, vec![c(-1.0), c(1.0)]);
        assert_eq!(r.derivs, vec![c(-2.0), c(2.0)]);
        let pf = partial_fractions(&r).unwrap();
        assert_eq!(pf.weights, vec![c(-0.5), c(0.5)]);
        assert!((pf.eval(c(0.0)) + 1.0).norm() < 1e-15);

        let r = roots_of(&[c(1.0), c(0.0), c(1.0)]).unwrap();
        let i = C64::new(0.0, 1.0);
        assert!((r.roots[0] + i).norm() < 1e-15 && (r.roots[1] - i).norm() < 1e-15);
        let pf = partial_fractions(&r).unwrap();
        assert!((pf.weights[0] - i * 0.5).norm() < 1e-15);
        assert!((pf.weights[1] + i * 0.5).norm() < 1e-15);
    }

    #[test]
    fn bilaplacian_roots_and_derivs() {
        // (tau^2 + 0.5 - 1)(tau^2 + 0.5 + 1)
        let a = -0.5;
        let b = 1.5;
        let r = roots_of(&[c(a * b), c(0.0), c(a + b), c(0.0), c(1.0)]).unwrap();
        let s = 0.5f64.sqrt();
        let t = 1.5f64.sqrt();
        let want = [
            C64::new(-s, 0.0),
            C64::new(0.0, -t),
            C64::new(0.0, t),
            C64::new(s, 0.0),
        ];
        for (x, y) in r.roots.iter().zip(want) {
            assert!((x - y).norm() < 1e-12, "{x} vs {y}");
        }
        let mags: Vec<f64> = r.derivs.iter().map(|d| d.norm()).collect();
        assert!((mags[0] - 4.0 * s).abs() < 1e-12);
        assert!((mags[1] - 4.0 * t).abs() < 1e-12);
        let pf = partial_fractions(&r).unwrap();
        let tau = C64::new(2.0, 1.0);
        let p = eval_univariate(&[c(a * b), c(0.0), c(a + b), c(0.0), c(1.0)], tau);
        assert!((pf.eval(tau) * p - 1.0).norm() < 1e-10);
    }

    #[test]
    fn near_double_root_rejected() {
        let r = roots_of(&[c(0.0), c(0.0), c(1.0)]).unwrap();
        assert!(matches!(
            partial_fractions(&r),
            Err(Error::NearDoubleRoot { .. })
        ));
        assert!(matches!(
            roots_of(&[c(1.0), c(0.0)]),
            Err(Error::DegenerateLine)
        ));
    }

    #[test]
    fn argument_principle_oracle_agrees() {
        let coeffs = [
            C64::new(0.3, -1.0),
            C64::new(-2.0, 0.5),
            c(1.1),
            C64::new(0.0, 0.7),
            c(-0.4),
            c(1.0),
        ];
        let a = roots_of(&coeffs).unwrap();
        let b = roots_by_argument_principle(&coeffs, 1e-9).unwrap();
        assert_eq!(b.len(), 5);
        for (x, y) in a.roots.iter().zip(&b) {
            assert!((x - y).norm() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn tie_window_orders_by_imaginary_part() {
        let mut v = vec![
            C64::new(1.0 + 5e-13, -1.0),
            C64::new(1.0, 2.0),
            C64::new(-3.0, 0.0),
        ];
        order_lexicographic(&mut v);
        assert_eq!(v[0], C64::new(-3.0, 0.0));
        assert_eq!(v[1].im, -1.0);
    }

    #[test]
    fn min_deriv_examples() {
        let h = MultiPoly::parse("x1^2 + x2^2 - 1").unwrap();
        assert!(min_deriv_at_roots(&h, &[1.0, 0.0], &[0.0, 1.0]).unwrap() < 1e-7);
        let bil = MultiPoly::parse("x1^4 + 2*x1^2 x2^2 + x2^4 - 1").unwrap();
        assert!((min_deriv_at_roots(&bil, &[1.0, 0.0], &[0.0, 0.0]).unwrap() - 4.0).abs() < 1e-12);
        let q = MultiPoly::parse("x1^2 x2^2 - 1").unwrap();
        let s = 0.5f64.sqrt();
        for b in [0.3, 1.0, 2.5] {
            let v = min_deriv_at_roots(&q, &[s, s], &[-b * s, b * s]).unwrap();
            let want = 2.0 * ((b * b - 2.0f64).abs()).sqrt();
            assert!((v - want).abs() < 1e-10, "b={b}: {v} vs {want}");
        }
        let lin = MultiPoly::parse_dim("x1 - 1", 2).unwrap();
        assert_eq!(
            min_deriv_at_roots(&lin, &[0.0, 1.0], &[0.3, 0.0]).unwrap_or(-1.0),
            0.0
        );
    }
}
