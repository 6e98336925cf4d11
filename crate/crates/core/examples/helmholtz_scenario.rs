//! End-to-end solve of a preset scenario, with the field written to disk.
//!
//! cargo run --release --example helmholtz_scenario -- [preset] [points]

use simplechar::harness::{preset_scenario, solve, Preset};

fn main() -> simplechar::Result<()> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "helmholtz".into());
    let points = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(256);
    let scn = preset_scenario(Preset::from_name(&name)?, points);
    let t = std::time::Instant::now();
    let sol = solve(&scn)?;
    let r = &sol.report;
    println!("{} on {}^{}: route {}", r.symbol, points, r.n, r.route);
    for p in &r.pieces {
        let m = p
            .multiplier_norm
            .map_or("-".to_string(), |m| format!("{m:.4}"));
        println!(
            "  {:<22} multiplier norm {m:>7}  mixed ratio {:.4}",
            p.label, p.route.ratio
        );
    }
    println!(
        "interior-FD residual {:.2e}, decomposition error {:.1e}",
        r.residual_fd, r.decomposition_error
    );
    if let Some(a) = r.two_route_agreement {
        println!("two-route agreement {a:.1e}");
    }
    println!(
        "ratio ||u||/(sqrt(d_r d_s)||f||) = {:?}  ({:.2} s)",
        r.ratio,
        t.elapsed().as_secs_f64()
    );
    let path = std::env::temp_dir().join(format!("{name}_u.field"));
    sol.u.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
