//! Frequency-side cutoffs for a second-order symbol: the telescoped pieces sum
//! to one, and each Phi_j has a bounded mixed norm along the other axes.

use simplechar::directions::second_order_eps;
use simplechar::fields::GridSpec;
use simplechar::multipliers::{multiplier_theta_norm, second_order_cutoffs};
use simplechar::poly::{normalize_second_order, MultiPoly};

fn main() -> simplechar::Result<()> {
    let p = MultiPoly::parse("1 - x1^2 - x2^2")?;
    let nf = normalize_second_order(&p)?;
    println!(
        "normal form: eps {:?}, beta {:?}, b {}",
        nf.eps, nf.beta, nf.b
    );

    let eps = second_order_eps(&nf);
    let grid = GridSpec::cube(2, 256, 64.0);
    let cut = second_order_cutoffs(&nf, eps, &grid)?;

    let worst = (0..grid.len())
        .map(|i| (cut.pieces.iter().map(|m| m.values[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    println!(
        "eps = {eps}, {} pieces, max |sum - 1| = {worst:.1e}",
        cut.pieces.len()
    );

    for (j, phi) in cut.phi.iter().enumerate() {
        for k in (0..2).filter(|&k| k != j) {
            println!(
                "Phi_{} along axis {}: Theta(1,inf) norm of the kernel {:.4}",
                j + 1,
                k + 1,
                multiplier_theta_norm(phi, k)?
            );
        }
    }
    Ok(())
}
