//! Physical-space domains D_r, D_s: membership, diameters and L2 norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{GridField, Space};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, x: &[f64]) -> bool {
        dist2(x, &self.center) <= self.radius * self.radius
    }

    /// Parameter interval of the chord cut from the line p + t u (|u| = 1).
    fn chord(&self, p: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let w: Vec<f64> = self.center.iter().zip(p).map(|(c, x)| c - x).collect();
        let t0: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
        let d2 = w.iter().map(|a| a * a).sum::<f64>() - t0 * t0;
        let r2 = self.radius * self.radius;
        if d2 >= r2 {
            return None;
        }
        let half = (r2 - d2).sqrt();
        Some((t0 - half, t0 + half))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    UnionOfBalls { balls: Vec<Ball> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diameter {
    /// Exact for a ball or box; for unions the best line found (a lower bound).
    pub value: f64,
    pub upper_bound: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl DomainSpec {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        DomainSpec::Ball { center, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Box { lo, .. } => lo.len(),
            DomainSpec::UnionOfBalls { balls } => balls.first().map_or(0, |b| b.center.len()),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("domain: {m}")));
        match self {
            DomainSpec::Ball { center, radius } => {
                if center.len() != n {
                    return bad("ball centre has wrong dimension");
                }
                if !(*radius > 0.0) {
                    return bad("ball radius must be positive");
                }
            }
            DomainSpec::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return bad("box corners have wrong dimension");
                }
                if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return bad("box is empty");
                }
            }
            DomainSpec::UnionOfBalls { balls } => {
                if balls.is_empty() {
                    return bad("union of balls is empty");
                }
                for b in balls {
                    DomainSpec::ball(b.center.clone(), b.radius).validate(n)?;
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Ball { center, radius } => dist2(x, center) <= radius * radius,
            DomainSpec::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b),
            DomainSpec::UnionOfBalls { balls } => balls.iter().any(|b| b.contains(x)),
        }
    }

    /// Supremum over lines of the length of the intersection.
    pub fn diameter(&self) -> Diameter {
        match self {
            DomainSpec::Ball { radius, .. } => Diameter {
                value: 2.0 * radius,
                upper_bound: 2.0 * radius,
            },
            DomainSpec::Box { lo, hi } => {
                let d = dist2(lo, hi).sqrt();
                Diameter {
                    value: d,
                    upper_bound: d,
                }
            }
            DomainSpec::UnionOfBalls { balls } => {
                let n = balls[0].center.len();
                let mut lines: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
                for (i, a) in balls.iter().enumerate() {
                    for j in 0..n {
                        let mut u = vec![0.0; n];
                        u[j] = 1.0;
                        lines.push((a.center.clone(), u));
                    }
                    for b in &balls[i + 1..] {
                        let d = dist2(&a.center, &b.center).sqrt();
                        if d > 0.0 {
                            let u = b
                                .center
                                .iter()
                                .zip(&a.center)
                                .map(|(x, y)| (x - y) / d)
                                .collect();
                            lines.push((a.center.clone(), u));
                        }
                    }
                }
                let mut best: f64 = 0.0;
                for (p, u) in &lines {
                    let mut iv: Vec<(f64, f64)> =
                        balls.iter().filter_map(|b| b.chord(p, u)).collect();
                    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
                    let mut total = 0.0;
                    let mut cur: Option<(f64, f64)> = None;
                    for (a, b) in iv {
                        cur = match cur {
                            Some((c0, c1)) if a <= c1 => Some((c0, c1.max(b))),
                            Some((c0, c1)) => {
                                total += c1 - c0;
                                Some((a, b))
                            }
                            None => Some((a, b)),
                        };
                    }
                    if let Some((c0, c1)) = cur {
                        total += c1 - c0;
                    }
                    best = best.max(total);
                }
                Diameter {
                    value: best,
                    upper_bound: balls.iter().map(|b| 2.0 * b.radius).sum(),
                }
            }
        }
    }

    pub fn translated(&self, dx: &[f64]) -> Self {
        let sh = |c: &[f64]| c.iter().zip(dx).map(|(a, b)| a + b).collect::<Vec<f64>>();
        match self {
            DomainSpec::Ball { center, radius } => DomainSpec::Ball {
                center: sh(center),
                radius: *radius,
            },
            DomainSpec::Box { lo, hi } => DomainSpec::Box {
                lo: sh(lo),
                hi: sh(hi),
            },
            DomainSpec::UnionOfBalls { balls } => DomainSpec::UnionOfBalls {
                balls: balls
                    .iter()
                    .map(|b| Ball {
                        center: sh(&b.center),
                        radius: b.radius,
                    })
                    .collect(),
            },
        }
    }

    /// x -> s x
    pub fn dilated(&self, s: f64) -> Self {
        let sc = |c: &[f64]| c.iter().map(|a| a * s).collect::<Vec<f64>>();
        match self {
            DomainSpec::Ball { center, radius } => DomainSpec::Ball {
                center: sc(center),
                radius: radius * s,
            },
            DomainSpec::Box { lo, hi } => DomainSpec::Box {
                lo: sc(lo),
                hi: sc(hi),
            },
            DomainSpec::UnionOfBalls { balls } => DomainSpec::UnionOfBalls {
                balls: balls
                    .iter()
                    .map(|b| Ball {
                        center: sc(&b.center),
                        radius: b.radius * s,
                    })
                    .collect(),
            },
        }
    }

    /// Balls map exactly under x -> c + R (x - c); boxes are not rotation-closed.
    pub fn rotated(&self, r: &[Vec<f64>], about: &[f64]) -> Result<Self> {
        let rot = |x: &[f64]| -> Vec<f64> {
            (0..x.len())
                .map(|i| {
                    about[i]
                        + (0..x.len())
                            .map(|j| r[i][j] * (x[j] - about[j]))
                            .sum::<f64>()
                })
                .collect()
        };
        match self {
            DomainSpec::Ball { center, radius } => Ok(DomainSpec::Ball {
                center: rot(center),
                radius: *radius,
            }),
            DomainSpec::UnionOfBalls { balls } => Ok(DomainSpec::UnionOfBalls {
                balls: balls
                    .iter()
                    .map(|b| Ball {
                        center: rot(&b.center),
                        radius: b.radius,
                    })
                    .collect(),
            }),
            DomainSpec::Box { .. } => Err(Error::Unsupported("rotating a box domain".into())),
        }
    }
}

/// sqrt(sum |f|^2 h^n) over grid points inside D.
pub fn l2_on_domain(f: &GridField, d: &DomainSpec) -> Result<f64> {
    f.expect_space(Space::Physical)?;
    let mut s = 0.0;
    for (i, v) in f.data.iter().enumerate() {
        if d.contains(&f.grid.point(i)) {
            s += v.norm_sqr();
        }
    }
    Ok((s * f.grid.cell_volume()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use num_complex::Complex64 as C64;

    #[test]
    fn diameters() {
        assert_eq!(DomainSpec::ball(vec![0.0; 3], 1.0).diameter().value, 2.0);
        let cube = DomainSpec::Box {
            lo: vec![0.0; 3],
            hi: vec![1.0; 3],
        };
        assert!((cube.diameter().value - 3f64.sqrt()).abs() < 1e-15);
        let two = DomainSpec::UnionOfBalls {
            balls: vec![
                Ball {
                    center: vec![0.0, 0.0, 0.0],
                    radius: 1.0,
                },
                Ball {
                    center: vec![5.0, 0.0, 0.0],
                    radius: 1.0,
                },
            ],
        };
        let d = two.diameter();
        assert!((d.value - 4.0).abs() < 1e-14);
        assert_eq!(d.upper_bound, 4.0);
        let overlap = DomainSpec::UnionOfBalls {
            balls: vec![
                Ball {
                    center: vec![0.0, 0.0],
                    radius: 1.0,
                },
                Ball {
                    center: vec![1.0, 0.0],
                    radius: 1.0,
                },
            ],
        };
        assert!((overlap.diameter().value - 3.0).abs() < 1e-14);
    }

    #[test]
    fn l2_examples() {
        let g = GridSpec::cube(2, 16, 4.0);
        let f = GridField::from_fn(g, |_| C64::new(2.0, 0.0));
        let all = DomainSpec::Box {
            lo: vec![-10.0; 2],
            hi: vec![10.0; 2],
        };
        assert!((l2_on_domain(&f, &all).unwrap() - f.l2_norm()).abs() < 1e-14);
        let far = DomainSpec::ball(vec![50.0, 50.0], 1.0);
        assert_eq!(l2_on_domain(&f, &far).unwrap(), 0.0);
        // half of the sample columns: x in [-2, -0.25]
        let half = DomainSpec::Box {
            lo: vec![-10.0, -10.0],
            hi: vec![-0.1, 10.0],
        };
        let v = l2_on_domain(&f, &half).unwrap();
        assert!((v - f.l2_norm() / 2f64.sqrt()).abs() < 1e-14);
    }
}
