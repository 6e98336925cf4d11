//! Pre-solve analysis: route, normal form, direction certification, sampled
//! nonsingularity and admissibility thresholds.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{general_directions, Preset, Scenario};
use crate::dirac::{build_matrices, identities_hold, m_of_xi, normality_defect};
use crate::directions::{
    check_admissibility_cond1, second_order_directions, DirectionSet, PerpGrid, SecondOrderPlan,
};
use crate::error::{Error, Result};
use crate::poly::{
    is_nonsingular_sampled, normalize_second_order, MultiPoly, NonsingularReport, NormalForm2,
};

/// Random real frequencies in the nonsingularity check.
pub const NONSINGULAR_SAMPLES: usize = 4000;
/// Near-variety threshold of the nonsingularity check, relative to the largest coefficient.
pub const NONSINGULAR_TOL: f64 = 1e-6;
/// Random frequencies in the Dirac normality check.
pub const NORMALITY_SAMPLES: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct DirectionAdmissibility {
    pub theta: Vec<f64>,
    pub r0: f64,
    /// Largest eps for which sampled condition 1 holds at this r0.
    pub cond1_eps: f64,
    /// sqrt(8 r0 sqrt|theta_1 theta_2|) for the quartic preset.
    pub closed_form_eps: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracCheck {
    pub identities_hold: bool,
    pub max_normality_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub symbol: String,
    pub dim: usize,
    pub degree: usize,
    /// second_order, first_order, general, dirac or constant
    pub route: String,
    pub normal_form: Option<NormalForm2>,
    pub double_characteristic: bool,
    pub second_order_plan: Option<SecondOrderPlan>,
    pub directions: Option<DirectionSet>,
    pub nonsingular: Option<NonsingularReport>,
    pub admissibility: Vec<DirectionAdmissibility>,
    pub dirac: Option<DiracCheck>,
    pub certified: bool,
    pub failure: Option<String>,
}

/// Certification failures are recorded in the report; the error is returned
/// alongside so callers can map it to an exit code.
pub fn analyze(scn: &Scenario) -> Result<(AnalysisReport, Option<Error>)> {
    scn.validate()?;
    let n = scn.dim();
    let mut rep = AnalysisReport {
        symbol: scn.symbol_label(),
        dim: n,
        degree: 0,
        route: String::new(),
        normal_form: None,
        double_characteristic: false,
        second_order_plan: None,
        directions: None,
        nonsingular: None,
        admissibility: Vec::new(),
        dirac: None,
        certified: false,
        failure: None,
    };
    if let Some(Preset::Dirac { omega, axis }) = &scn.preset {
        rep.degree = 1;
        rep.route = "dirac".into();
        let dm = build_matrices(*omega);
        let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..NORMALITY_SAMPLES {
            let xi: Vec<f64> = (0..3)
                .map(|_| rng.gen_range(-4.0..4.0) * omega.abs().max(1.0))
                .collect();
            worst = worst.max(normality_defect(&m_of_xi(&dm, &xi, *axis)?));
        }
        let ok = identities_hold(&dm.a) && worst < crate::tol::NORMALITY;
        rep.dirac = Some(DiracCheck {
            identities_hold: identities_hold(&dm.a),
            max_normality_defect: worst,
        });
        rep.certified = ok;
        if !ok {
            let e = Error::NotNormal(worst);
            rep.failure = Some(e.to_string());
            return Ok((rep, Some(e)));
        }
        return Ok((rep, None));
    }
    let p = scn.symbol()?.expect("scalar scenario");
    rep.degree = p.degree();
    rep.nonsingular = Some(nonsingular_check(&p, scn)?);
    if rep.degree == 0 {
        rep.route = "constant".into();
        rep.certified = true;
        return Ok((rep, None));
    }
    if rep.degree == 2 {
        if let Ok(nf) = normalize_second_order(&p) {
            rep.double_characteristic = nf.is_double_characteristic();
            rep.normal_form = Some(nf.clone());
            if rep.double_characteristic {
                rep.route = "second_order".into();
                let e = Error::DoubleCharacteristic;
                rep.failure = Some(e.to_string());
                return Ok((rep, Some(e)));
            }
            if nf.basis_is_identity() {
                if nf.eps.iter().all(|&e| e != 0) {
                    rep.route = "second_order".into();
                    rep.second_order_plan = Some(second_order_directions(&nf)?);
                } else {
                    rep.route = "first_order".into();
                }
                rep.certified = true;
                return Ok((rep, None));
            }
        }
    }
    rep.route = "general".into();
    let grid = scn.grid_spec()?;
    match general_directions(scn, &p, &grid) {
        Ok(ds) => {
            let spacing = ds.cert.spacing(0);
            let pg = PerpGrid::with_spacing(ds.cert.radius(), spacing);
            for t in &ds.thetas {
                let c1 = check_admissibility_cond1(&p, t, ds.r0, &pg)?;
                let closed_form_eps = matches!(scn.preset, Some(Preset::Quartic))
                    .then(|| (8.0 * ds.r0 * (t[0] * t[1]).abs().sqrt()).sqrt());
                rep.admissibility.push(DirectionAdmissibility {
                    theta: t.clone(),
                    r0: ds.r0,
                    cond1_eps: c1.eps,
                    closed_form_eps,
                });
            }
            rep.directions = Some(ds);
            rep.certified = true;
            Ok((rep, None))
        }
        Err(e @ (Error::BudgetExhausted { .. } | Error::UncertifiedDirections(_))) => {
            rep.failure = Some(e.to_string());
            Ok((rep, Some(e)))
        }
        Err(e) => Err(e),
    }
}

fn nonsingular_check(p: &MultiPoly, scn: &Scenario) -> Result<NonsingularReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed ^ 0x5eed);
    let r = 2.0 * scn.freq_scale().max(1.0);
    let samples: Vec<Vec<C64>> = (0..NONSINGULAR_SAMPLES)
        .map(|_| {
            (0..p.dim())
                .map(|_| C64::new(rng.gen_range(-r..r), 0.0))
                .collect()
        })
        .collect();
    is_nonsingular_sampled(p, &samples, NONSINGULAR_TOL * p.max_abs_coeff().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::preset_scenario;

    #[test]
    fn helmholtz_gets_axis_plan() {
        let s = preset_scenario(Preset::from_name("helmholtz").unwrap(), 64);
        let (r, e) = analyze(&s).unwrap();
        assert!(e.is_none());
        assert_eq!(r.route, "second_order");
        assert_eq!(r.second_order_plan.unwrap().thetas.len(), 2);
    }

    #[test]
    fn laplacian_is_double_characteristic() {
        let s = preset_scenario(Preset::from_name("laplacian").unwrap(), 16);
        let (r, e) = analyze(&s).unwrap();
        assert!(matches!(e, Some(Error::DoubleCharacteristic)));
        assert!(r.double_characteristic && !r.certified);
    }

    #[test]
    fn dirac_is_normal() {
        let s = preset_scenario(Preset::from_name("dirac").unwrap(), 16);
        let (r, e) = analyze(&s).unwrap();
        assert!(e.is_none());
        assert!(r.dirac.unwrap().max_normality_defect < 1e-10);
    }
}
