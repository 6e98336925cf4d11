//! Roots of a line restriction, the partial-fraction weights of 1/p, and the
//! discriminant computed two ways.

use simplechar::poly::{discriminant_line, restrict_to_line, MultiPoly};
use simplechar::roots::{partial_fractions, roots};
use simplechar::C64;

fn main() -> simplechar::Result<()> {
    // Helmholtz with k = 2, restricted to the line tau e1 + (0, 0.5)
    let p = MultiPoly::parse("4 - x1^2 - x2^2")?;
    let line = restrict_to_line(&p, &[1.0, 0.0], &[0.0, 0.5])?;
    let rs = roots(&line)?;
    for (t, d) in rs.roots.iter().zip(&rs.derivs) {
        println!("root {t:.6}   p'(root) {d:.6}");
    }

    let pf = partial_fractions(&rs)?;
    let tau = C64::new(0.3, 0.7);
    println!("1/p(tau) = {:.12}", 1.0 / line.eval(tau));
    println!("sum      = {:.12}", pf.eval(tau));

    let d = discriminant_line(&line)?;
    println!(
        "discriminant {:.6} (root product {:.6}, rel diff {:.1e})",
        d.value, d.root_product, d.rel_diff
    );

    // a quartic line restriction: four simple roots, one partial fraction each
    let q = MultiPoly::parse("x1^2 * x2^2 - 1")?;
    let line = restrict_to_line(&q, &[0.6, 0.8], &[-0.8 * 0.3, 0.6 * 0.3])?;
    let rs = roots(&line)?;
    println!(
        "quartic line: {} roots, min |p'| = {:.4}",
        rs.roots.len(),
        rs.min_deriv()
    );
    Ok(())
}
