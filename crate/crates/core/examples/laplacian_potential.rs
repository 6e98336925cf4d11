//! The diameter estimate against the Newtonian potential of a uniform ball:
//! the ratio grows linearly in the ball radius A.

use simplechar::harness::studies::laplacian_counterexample;

fn main() -> simplechar::Result<()> {
    let rep = laplacian_counterexample(&[1.0, 2.0, 4.0, 8.0], 64.0)?;
    println!(
        "{:>4} {:>14} {:>12} {:>10} {:>12}",
        "A", "||u||", "||f||", "ratio", "u > f/(2R)"
    );
    for r in &rep.rows {
        println!(
            "{:>4} {:>14.4} {:>12.4} {:>10.4} {:>11.1}%",
            r.a,
            r.norm_u,
            r.norm_f,
            r.ratio,
            100.0 * r.pointwise_fraction_half_r
        );
    }
    println!("slope {:.4}", rep.slope);
    Ok(())
}
