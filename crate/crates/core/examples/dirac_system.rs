//! The Dirac-type 4x4 system: integer matrix identities, normality of the
//! line symbol, and an end-to-end solve on a small grid.

use simplechar::dirac::{build_matrices, identities_hold, m_of_xi, normality_defect};
use simplechar::harness::{preset_scenario, solve, Preset};

fn main() -> simplechar::Result<()> {
    let dm = build_matrices(1.0);
    println!(
        "A_j^T = -A_j, A_j^2 = -I, sign table: {}",
        identities_hold(&dm.a)
    );
    let m = m_of_xi(&dm, &[0.3, -1.2, 0.7], 2)?;
    println!("||MM* - M*M||_F = {:.1e}", normality_defect(&m));

    let scn = preset_scenario(Preset::from_name("dirac")?, 32);
    let sol = solve(&scn)?;
    let d = sol.report.dirac.as_ref().expect("dirac report");
    println!(
        "mixed ratio {:.5}, mixed residual {:.1e}, active lines {}",
        d.ratio, d.mixed_residual, d.active_lines
    );
    println!(
        "estimate ratio {:?}, interior-FD residual {:.2e}",
        sol.report.ratio, sol.report.residual_fd
    );
    Ok(())
}
