//! Acceptance suite: one line per criterion. Runs without the libtest harness so
//! the lines are always printed; exits nonzero when a hard check fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simplechar::dirac::{build_matrices, identities_hold, m_of_xi, normality_defect};
use simplechar::directions::{
    coverage, find_directions, second_order_eps, tangent_set_sample, CertGrid, DirectionSampler,
    FindOptions, PerpGrid,
};
use simplechar::domain::{l2_on_domain, DomainSpec};
use simplechar::fields::{partial_dft, Exponent, GridField, GridSpec, Space};
use simplechar::harness::studies::{
    faddeev_anisotropic, invariance_study, laplacian_counterexample, placement_family,
    scaling_study, translation_dilation_family, verify_estimate, Transform,
};
use simplechar::harness::{preset_scenario, solve, Preset};
use simplechar::multipliers::{
    basic_estimate, multiplier_theta_norm, q_line, second_order_cutoffs,
};
use simplechar::ode::{solve_first_order, FirstOrderProblem, Quadrature, SolveOptions};
use simplechar::poly::{discriminant_at, eval_univariate, normalize_second_order, MultiPoly};
use simplechar::roots::{partial_fractions, roots_of};
use simplechar::C64;

const PF_REL: f64 = 1e-8;
const DISC_REL: f64 = 1e-8;
const MIXED_LEMMA_TOL: f64 = 1e-8;
const SUP_BOUND_ROUNDOFF: f64 = 1e-12;
const FIRST_ORDER_RESIDUAL: f64 = 1e-12;
const CUTOFF_NORM_CEILING: f64 = 18.0;
const SUBLEVEL_CEILING: f64 = 9.0 * std::f64::consts::SQRT_2;
const QUADRATURE_SLACK: f64 = 0.02;
const PARTITION_TOL: f64 = 1e-12;
const FD_RESIDUAL: f64 = 1e-3;
const REFINEMENT_ORDER: f64 = 4.0;
const TWO_ROUTE: f64 = 1e-8;
const TRANSLATION_VARIATION: f64 = 1e-9;
const NORMALITY: f64 = 1e-10;
const DIRAC_MIXED_RESIDUAL: f64 = 1e-10;
const DIRAC_SPREAD: f64 = 0.2;
const LAPLACIAN_SPEC_SLOPE: f64 = 0.5;
const LAPLACIAN_ANALYTIC_SLOPE: f64 = 1.0;
const LAPLACIAN_SLOPE_TOL: f64 = 0.05;

struct Outcome {
    /// Verdict against the criterion as written.
    pass: bool,
    /// Verdict of the assertions this suite enforces (differs from `pass` only
    /// where the criterion's expected value is analytically wrong).
    hard_ok: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        hard_ok: pass,
        detail,
    }
}

fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

/// Coefficients (ascending) of lead * prod (tau - r_j).
fn from_roots(lead: C64, rs: &[C64]) -> Vec<C64> {
    let mut c = vec![lead];
    for r in rs {
        let mut next = vec![C64::default(); c.len() + 1];
        for (i, a) in c.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * r;
        }
        c = next;
    }
    c
}

fn c1_partial_fractions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let deg = rng.gen_range(2..=6);
        let mut rs: Vec<C64> = Vec::new();
        while rs.len() < deg {
            let z = rand_c(&mut rng, 2.0);
            if rs.iter().all(|r| (r - z).norm() > 0.1) {
                rs.push(z);
            }
        }
        let c = from_roots(rand_c(&mut rng, 1.0) + C64::new(1.5, 0.0), &rs);
        let pf = partial_fractions(&roots_of(&c).unwrap()).unwrap();
        let mut k = 0;
        while k < 10 {
            let tau = rand_c(&mut rng, 3.0);
            if rs.iter().any(|r| (r - tau).norm() < 0.05) {
                continue;
            }
            let exact = 1.0 / eval_univariate(&c, tau);
            worst = worst.max((pf.eval(tau) - exact).norm() / exact.norm());
            k += 1;
        }
    }
    outcome(
        worst < PF_REL,
        format!("200 polynomials x 10 points, max rel err {worst:.1e} (< {PF_REL:.0e})"),
    )
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> MultiPoly {
    let mut p = MultiPoly::zero(n);
    let mut exps = vec![0u32; n];
    fn rec(p: &mut MultiPoly, rng: &mut ChaCha8Rng, exps: &mut Vec<u32>, j: usize, left: u32) {
        if j == exps.len() {
            p.add_term(exps.clone(), rand_c(rng, 1.0));
            return;
        }
        for e in 0..=left {
            exps[j] = e;
            rec(p, rng, exps, j + 1, left - e);
        }
        exps[j] = 0;
    }
    rec(&mut p, rng, &mut exps, 0, deg);
    p
}

fn c2_discriminant_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut homog, mut shift): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let n = 2 + i % 2;
        let deg = rng.gen_range(2..=4u32);
        let p = random_poly(&mut rng, n, deg);
        let theta: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let xi: Vec<C64> = (0..n).map(|_| rand_c(&mut rng, 1.0)).collect();
        let lambda = C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        let r = rng.gen_range(-2.0..2.0);
        let d = discriminant_at(&p, &theta, &xi).unwrap();
        let lt: Vec<C64> = theta.iter().map(|t| t * lambda).collect();
        let expect = d * lambda.powu(deg * (deg - 1));
        homog = homog.max((discriminant_at(&p, &lt, &xi).unwrap() - expect).norm() / expect.norm());
        let xs: Vec<C64> = xi.iter().zip(&theta).map(|(x, t)| x + t * r).collect();
        shift = shift.max((discriminant_at(&p, &theta, &xs).unwrap() - d).norm() / d.norm());
    }
    outcome(
        homog < DISC_REL && shift < DISC_REL,
        format!("100 draws, homogeneity {homog:.1e}, shift {shift:.1e} (< {DISC_REL:.0e})"),
    )
}

/// h times the number of grid slices perpendicular to `axis` that meet D.
fn projected_length(grid: &GridSpec, axis: usize, d: &DomainSpec) -> f64 {
    let mut hit = vec![false; grid.dims[axis]];
    let mut idx = vec![0usize; grid.n()];
    for flat in 0..grid.len() {
        if d.contains(&grid.point(flat)) {
            grid.unravel(flat, &mut idx);
            hit[idx[axis]] = true;
        }
    }
    hit.iter().filter(|&&b| b).count() as f64 * grid.h(axis)
}

fn c3_mixed_norm_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut worst_ball: f64 = f64::NEG_INFINITY;
    for (n, pts, len) in [(2usize, 32usize, 16.0), (3, 16, 8.0)] {
        let grid = GridSpec::cube(n, pts, len);
        for _ in 0..50 {
            let axis = rng.gen_range(0..n);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let radius = rng.gen_range(0.8..2.5);
            let dom = DomainSpec::ball(c, radius);
            let mut u = GridField::zeros(grid.clone(), Space::Physical);
            let mut f = GridField::zeros(grid.clone(), Space::Physical);
            for i in 0..grid.len() {
                u.data[i] = rand_c(&mut rng, 1.0);
                if dom.contains(&grid.point(i)) {
                    f.data[i] = rand_c(&mut rng, 1.0);
                }
            }
            let d = projected_length(&grid, axis, &dom);
            // ||u||_{L2(D)} <= sqrt(d) ||F u||_{Theta(inf,2)}
            let lhs = l2_on_domain(&u, &dom).unwrap();
            let rhs = d.sqrt()
                * partial_dft(&u, axis)
                    .unwrap()
                    .mixed_norm_along(axis, Exponent::Inf, Exponent::Two)
                    .unwrap();
            worst = worst.max((lhs - rhs) / rhs);
            worst_ball = worst_ball.max(lhs / (rhs * (2.0 * radius / d).sqrt()) - 1.0);
            // ||F f||_{Theta(1,2)} <= sqrt(d) ||f||_{L2(D)}
            let lhs = partial_dft(&f, axis)
                .unwrap()
                .mixed_norm_along(axis, Exponent::One, Exponent::Two)
                .unwrap();
            let rhs = d.sqrt() * l2_on_domain(&f, &dom).unwrap();
            worst = worst.max((lhs - rhs) / rhs);
            worst_ball = worst_ball.max(lhs / (rhs * (2.0 * radius / d).sqrt()) - 1.0);
        }
    }
    outcome(
        worst <= MIXED_LEMMA_TOL,
        format!(
            "100 fields (n = 2, 3), max relative excess {worst:.2e} (<= {MIXED_LEMMA_TOL:.0e}) with d = h * slices hit; {worst_ball:.2e} with d = 2R"
        ),
    )
}

fn c4_first_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = SolveOptions {
        quadrature: Quadrature::PiecewiseConstant,
        ..Default::default()
    };
    let (mut sup_ratio, mut r46, mut res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for trial in 0..50 {
        let n = 2 + trial % 2;
        let pts = if n == 2 { 64 } else { 16 };
        let grid = GridSpec::cube(n, pts, 16.0);
        let axis = rng.gen_range(0..n);
        let mut g = GridField::zeros(grid.clone(), Space::Mixed(axis));
        let mut idx = vec![0usize; n];
        for i in 0..grid.len() {
            grid.unravel(i, &mut idx);
            let t = idx[axis];
            if t >= pts / 4 && t < 3 * pts / 4 {
                g.data[i] = rand_c(&mut rng, 1.0);
            }
        }
        let lines = grid.len() / pts;
        let real_q = trial % 5 == 0;
        let q: Vec<C64> = (0..lines)
            .map(|_| {
                let im = if real_q {
                    0.0
                } else {
                    rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                };
                C64::new(rng.gen_range(-3.0..3.0), im)
            })
            .collect();
        let prob = FirstOrderProblem {
            p_prime: vec![C64::new(1.0, 0.0); lines],
            q,
            g,
        };
        let (_, rep) = solve_first_order(&prob, &opts).unwrap();
        sup_ratio = sup_ratio.max(rep.sup_over_l1);
        if rep.inf_im_q > 0.0 {
            r46 = r46.max(rep.ratio_46 * rep.inf_im_q);
        }
        res = res.max(rep.mixed_residual);
    }
    outcome(
        sup_ratio <= 1.0 + SUP_BOUND_ROUNDOFF && r46 <= 1.0 + SUP_BOUND_ROUNDOFF && res < FIRST_ORDER_RESIDUAL,
        format!("50 problems, sup|w| ratio {sup_ratio:.6} (<= 1), inf|Im q| ratio {r46:.6} (<= 1), mixed residual {res:.1e}"),
    )
}

fn c5_multipliers() -> Outcome {
    let family: [(&str, usize, usize, f64); 6] = [
        ("1 - x1^2 - x2^2", 2, 256, 64.0),
        ("4 - x1^2 - x2^2", 2, 256, 64.0),
        ("1 + x1^2 - x2^2", 2, 256, 64.0),
        ("-x1^2 - x2^2 + 2i * x1 + 1", 2, 256, 64.0),
        ("-x1^2 - x2^2 + 2i * x1 + 1.5", 2, 256, 64.0),
        ("1 - x1^2 - x2^2 - x3^2", 3, 64, 32.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut norm_max, mut sub_max, mut excess, mut partition): (f64, f64, f64, f64) =
        (0.0, 0.0, f64::NEG_INFINITY, 0.0);
    let mut lines = 0;
    for (text, n, pts, len) in family {
        let nf = normalize_second_order(&MultiPoly::parse_dim(text, n).unwrap()).unwrap();
        let eps = second_order_eps(&nf);
        let grid = GridSpec::cube(n, pts, len);
        let cut = second_order_cutoffs(&nf, eps, &grid).unwrap();
        for i in 0..grid.len() {
            let s: f64 = cut.pieces.iter().map(|m| m.values[i]).sum();
            partition = partition.max((s - 1.0).abs());
        }
        for j in 0..n {
            for k in (0..n).filter(|&k| k != j) {
                norm_max = norm_max.max(multiplier_theta_norm(&cut.phi[j], k).unwrap());
                let dt = 1e-3;
                let ts: Vec<f64> = (0..16384).map(|i| (i as f64 - 8192.0) * dt).collect();
                for _ in 0..10 {
                    let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    let ql = q_line(&nf, j, k, &eta, &ts);
                    for part in [&ql.re, &ql.im] {
                        if let Some(e) = basic_estimate(&part[0], &part[1], &part[2], dt, eps) {
                            excess = excess.max(e.measured / e.bound - 1.0);
                            sub_max = sub_max.max(e.sublevel_product);
                            lines += 1;
                        }
                    }
                }
            }
        }
    }
    let slack = 1.0 + QUADRATURE_SLACK;
    outcome(
        norm_max <= CUTOFF_NORM_CEILING * slack
            && sub_max <= SUBLEVEL_CEILING * slack
            && excess <= QUADRATURE_SLACK
            && partition < PARTITION_TOL,
        format!(
            "6 symbols: max Phi_j norm along Theta_k {norm_max:.3} (<= 18), {lines} lines: basic bound excess {excess:.3}, sublevel {sub_max:.3} (<= 9 sqrt2), partition {partition:.1e}"
        ),
    )
}

fn c6_end_to_end() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["helmholtz", "bilaplacian"] {
        let coarse = solve(&preset_scenario(Preset::from_name(name).unwrap(), 128))
            .unwrap()
            .report
            .residual_fd;
        let mut scn = preset_scenario(Preset::from_name(name).unwrap(), 256);
        scn.two_route = name == "helmholtz";
        let rep = solve(&scn).unwrap().report;
        let order = (coarse / rep.residual_fd).log2();
        ok &= rep.residual_fd < FD_RESIDUAL && order >= REFINEMENT_ORDER;
        let mut s = format!("{name} residual {:.1e} order {order:.1}", rep.residual_fd);
        if let Some(a) = rep.two_route_agreement {
            ok &= a < TWO_ROUTE;
            s += &format!(" two-route {a:.1e}");
        } else if scn.two_route {
            ok = false;
        }
        parts.push(s);
    }
    outcome(ok, parts.join("; "))
}

fn c7_estimate() -> Outcome {
    let base = preset_scenario(Preset::from_name("helmholtz").unwrap(), 256);
    let (members, groups) = placement_family(&base, 5, 4, 7).unwrap();
    let table = verify_estimate(&members, &groups).unwrap();
    let inv = invariance_study(
        &base,
        &[
            Transform::Rotate { degrees: 37.0 },
            Transform::Rotate { degrees: 45.0 },
        ],
    )
    .unwrap();
    let finite = table.max_ratio.is_finite() && table.max_ratio > 0.0;
    let rot = inv.rows.iter().map(|r| r.variation).fold(0.0, f64::max);
    let resample = inv
        .rows
        .iter()
        .filter_map(|r| r.resample_residual)
        .fold(0.0, f64::max);
    outcome(
        finite && table.rows.len() == 20 && table.group_variation < TRANSLATION_VARIATION && inv.pass,
        format!(
            "20 members, max ratio {:.5}, translation variation {:.1e}, rotation variation {rot:.1e} (resample residual {resample:.1e}, floor 1e-10)",
            table.max_ratio, table.group_variation
        ),
    )
}

fn c8_scaling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, params) in [
        ("helmholtz", vec![1.0, 2.0, 4.0, 8.0]),
        ("bilaplacian", vec![1.0, 2.0, 4.0]),
        ("faddeev", vec![1.0, 2.0, 4.0]),
    ] {
        let r = scaling_study(
            &preset_scenario(Preset::from_name(name).unwrap(), 256),
            &params,
        )
        .unwrap();
        ok &= r.pass;
        parts.push(format!(
            "{name} {:.3} ({} +- {})",
            r.slope, r.expected_slope, r.tolerance
        ));
    }
    let mut worst: f64 = 0.0;
    for a in [1.0, 2.0, 4.0] {
        let scn = preset_scenario(
            Preset::Faddeev {
                re_zeta: a,
                lambda: 0.0,
                n: 2,
            },
            256,
        );
        let r = faddeev_anisotropic(&scn).unwrap();
        ok &= r.pass;
        worst = worst.max(r.constant);
    }
    parts.push(format!("anisotropic constant {worst:.4} (<= 1 + 1e-6)"));
    outcome(ok, parts.join("; "))
}

fn c9_dirac() -> Outcome {
    let dm = build_matrices(1.0);
    let ids = identities_hold(&dm.a);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut normal: f64 = 0.0;
    for _ in 0..100 {
        let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
        normal = normal.max(normality_defect(&m_of_xi(&dm, &xi, 2).unwrap()));
    }
    let base = preset_scenario(Preset::from_name("dirac").unwrap(), 64);
    let (members, groups) = translation_dilation_family(&base, 5, &[0.85, 1.15], 9).unwrap();
    let mut ratios = Vec::new();
    let mut mixed: f64 = 0.0;
    for m in &members {
        let sol = solve(m).unwrap();
        mixed = mixed.max(sol.report.dirac.as_ref().unwrap().mixed_residual);
        ratios.push(sol.report.ratio.unwrap());
    }
    let _ = groups;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios
        .iter()
        .map(|r| (r / mean - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        ids && normal < NORMALITY && mixed < DIRAC_MIXED_RESIDUAL && spread <= DIRAC_SPREAD,
        format!(
            "identities {ids}, normality {normal:.1e}, mixed residual {mixed:.1e}, ratio {mean:.5} +- {:.1}% over 10 configs",
            100.0 * spread
        ),
    )
}

fn c10_laplacian() -> Outcome {
    let r = laplacian_counterexample(&[1.0, 2.0, 4.0, 8.0], 64.0).unwrap();
    let spec = (r.slope - LAPLACIAN_SPEC_SLOPE).abs() <= LAPLACIAN_SLOPE_TOL;
    let analytic = (r.slope - LAPLACIAN_ANALYTIC_SLOPE).abs() <= LAPLACIAN_SLOPE_TOL;
    let closed = r
        .rows
        .iter()
        .all(|row| (row.norm_u / row.norm_u_closed_form - 1.0).abs() < 1e-12);
    Outcome {
        pass: spec,
        hard_ok: analytic && closed,
        detail: format!(
            "slope {:.4} vs expected {LAPLACIAN_SPEC_SLOPE} +- {LAPLACIAN_SLOPE_TOL}; the ratio is exactly linear in A (analytic slope {LAPLACIAN_ANALYTIC_SLOPE}, asserted); estimate still fails for large A",
            r.slope
        ),
    }
}

fn c11_directions() -> Outcome {
    let p = MultiPoly::parse("1 - x1^2 - x2^2 - x3^2").unwrap();
    let r0 = 0.02;
    let cert = CertGrid::cube(3, 1.6, 0.04);
    let spacing = r0 / 2.0;
    let axes = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ];
    let grid = PerpGrid::with_spacing(cert.radius(), spacing);
    let samples: Vec<_> = axes
        .iter()
        .map(|a| tangent_set_sample(&p, a, &grid).unwrap())
        .collect();
    let three = coverage(&samples, r0, &cert);
    let s = 3f64.sqrt().recip();
    let mut dirs = axes;
    dirs.push(vec![s, s, s]);
    let opts = FindOptions {
        r0,
        sample_spacing: spacing,
        budget: 4,
    };
    let four = find_directions(&p, DirectionSampler::from_list(dirs), &opts, &cert);
    let ok = four.is_ok() && three.uncovered > 0 && three.clusters == 8;
    outcome(
        ok,
        format!(
            "with the diagonal: {}; axes alone: {} uncovered points in {} clusters",
            match &four {
                Ok(ds) => format!("certified, margin {:.4}", ds.margin),
                Err(e) => e.to_string(),
            },
            three.uncovered,
            three.clusters
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("partial fractions", c1_partial_fractions),
        ("discriminant laws", c2_discriminant_laws),
        ("mixed-norm lemma", c3_mixed_norm_lemma),
        ("first-order solve", c4_first_order),
        ("multiplier bounds", c5_multipliers),
        ("end-to-end residual", c6_end_to_end),
        ("estimate verification", c7_estimate),
        ("scaling laws", c8_scaling),
        ("dirac system", c9_dirac),
        ("laplacian counterexample", c10_laplacian),
        ("direction finding", c11_directions),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut hard_fail = false;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if filter.as_ref().is_some_and(|s| !name.contains(s.as_str())) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name}: {} [{:.1} s]",
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
        hard_fail |= !o.hard_ok;
    }
    if hard_fail {
        std::process::exit(1);
    }
}
