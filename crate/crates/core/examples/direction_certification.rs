//! Certifies direction sets for the 3D Helmholtz symbol 1 - |xi|^2.
//!
//! The three coordinate axes leave the points (+-1, +-1, +-1)/sqrt(3) uncovered;
//! adding the diagonal closes the gap.

use simplechar::directions::{
    coverage, find_directions, tangent_set_sample, CertGrid, DirectionSampler, FindOptions,
    PerpGrid,
};
use simplechar::poly::MultiPoly;

fn main() -> simplechar::Result<()> {
    let p = MultiPoly::parse("1 - x1^2 - x2^2 - x3^2")?;
    let arg = |i: usize, d: f64| {
        std::env::args()
            .nth(i)
            .and_then(|a| a.parse().ok())
            .unwrap_or(d)
    };
    let r0 = arg(1, 0.02);
    let cert = CertGrid::cube(3, arg(2, 1.6), arg(3, 0.04));
    let spacing = r0 / 2.0;
    let s = 3f64.sqrt().recip();
    let axes = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ];

    let t = std::time::Instant::now();
    let grid = PerpGrid::with_spacing(cert.radius(), spacing);
    let samples = axes
        .iter()
        .map(|a| tangent_set_sample(&p, a, &grid))
        .collect::<simplechar::Result<Vec<_>>>()?;
    let rep = coverage(&samples, r0, &cert);
    println!(
        "axes only: {} of {} cert points uncovered in {} clusters",
        rep.uncovered,
        rep.covered + rep.uncovered,
        rep.clusters
    );
    for c in &rep.cluster_centroids {
        println!("  cluster at ({:+.3}, {:+.3}, {:+.3})", c[0], c[1], c[2]);
    }

    let mut dirs = axes.clone();
    dirs.push(vec![s, s, s]);
    let opts = FindOptions {
        r0,
        sample_spacing: spacing,
        budget: 4,
    };
    match find_directions(&p, DirectionSampler::from_list(dirs), &opts, &cert) {
        Ok(ds) => println!(
            "with the diagonal: certified, {} directions, margin {:.4}",
            ds.thetas.len(),
            ds.margin
        ),
        Err(e) => println!("with the diagonal: {e}"),
    }
    println!("({:.2} s)", t.elapsed().as_secs_f64());
    Ok(())
}
