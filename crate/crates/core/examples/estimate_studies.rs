//! Ratio table over a placement family, invariance rows and a scaling fit for
//! the 2D Helmholtz preset.

use simplechar::harness::studies::{
    invariance_study, placement_family, scaling_study, verify_estimate, Transform,
};
use simplechar::harness::{preset_scenario, Preset};

fn main() -> simplechar::Result<()> {
    let base = preset_scenario(Preset::from_name("helmholtz")?, 256);

    let (members, groups) = placement_family(&base, 5, 4, 2024)?;
    let table = verify_estimate(&members, &groups)?;
    println!(
        "{} members: max ratio {:.5}, min {:.5}, spread within a placement {:.1e}",
        table.rows.len(),
        table.max_ratio,
        table.min_ratio,
        table.group_variation
    );

    let inv = invariance_study(
        &base,
        &[
            Transform::Translate { cells: vec![8, -3] },
            Transform::QuarterTurn { turns: 1 },
            Transform::Rotate { degrees: 37.0 },
            Transform::Dilate { factor: 2.0 },
        ],
    )?;
    for r in &inv.rows {
        println!(
            "{:<18} variation {:.1e} (tolerance {:.1e})",
            r.transform, r.variation, r.tolerance
        );
    }

    let sc = scaling_study(&base, &[1.0, 2.0, 4.0, 8.0])?;
    println!(
        "ratio vs k: slope {:.4}, expected {}",
        sc.slope, sc.expected_slope
    );
    Ok(())
}
