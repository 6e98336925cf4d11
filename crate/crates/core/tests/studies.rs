use simplechar::domain::{Ball, DomainSpec};
use simplechar::harness::studies::{
    multiball_bound, placement_family, verify_estimate, MULTIBALL_SLACK,
};
use simplechar::harness::{preset_scenario, Preset, SourceTerm};

const LINEARITY: f64 = 1e-12;
const SCALE_INVARIANCE: f64 = 1e-12;

#[test]
fn two_distant_balls_keep_the_single_ball_constant() {
    let base = preset_scenario(Preset::from_name("helmholtz").unwrap(), 128);
    let balls = vec![
        Ball {
            center: vec![-11.0, 0.0],
            radius: 3.0,
        },
        Ball {
            center: vec![11.0, 0.0],
            radius: 3.0,
        },
    ];
    let domains = vec![
        DomainSpec::ball(vec![-11.0, 0.0], 5.0),
        DomainSpec::ball(vec![11.0, 0.0], 5.0),
        DomainSpec::ball(vec![0.0, 0.0], 16.0),
        DomainSpec::Box {
            lo: vec![-16.0, -4.0],
            hi: vec![16.0, 4.0],
        },
    ];
    let r = multiball_bound(&base, &balls, &domains).unwrap();
    assert!(r.linearity_error < LINEARITY, "{}", r.linearity_error);
    assert!(
        r.multi_constant <= (1.0 + MULTIBALL_SLACK) * r.single_constant,
        "{} vs {}",
        r.multi_constant,
        r.single_constant
    );
}

#[test]
fn ratio_ignores_source_amplitude() {
    let base = preset_scenario(Preset::from_name("helmholtz").unwrap(), 128);
    let mut loud = base.clone();
    for s in &mut loud.source {
        if let SourceTerm::Gaussian { amplitude, .. } = s {
            *amplitude *= 10.0;
        }
    }
    let (a, ga) = placement_family(&base, 3, 2, 7).unwrap();
    let (b, gb) = placement_family(&loud, 3, 2, 7).unwrap();
    let ta = verify_estimate(&a, &ga).unwrap();
    let tb = verify_estimate(&b, &gb).unwrap();
    for (x, y) in ta.rows.iter().zip(&tb.rows) {
        assert!(
            (x.ratio - y.ratio).abs() <= SCALE_INVARIANCE * x.ratio,
            "{} vs {}",
            x.ratio,
            y.ratio
        );
        assert!((y.norm_f / x.norm_f - 10.0).abs() < 1e-9);
    }
}

#[test]
fn small_families_are_rejected() {
    let base = preset_scenario(Preset::from_name("helmholtz").unwrap(), 32);
    let (m, g) = placement_family(&base, 1, 2, 0).unwrap();
    assert!(m.len() < 5);
    assert!(verify_estimate(&m, &g).is_err());
}
