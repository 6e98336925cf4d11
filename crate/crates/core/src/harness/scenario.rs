//! Scenario description: symbol or named preset, sources, domains and grid.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::domain::{Ball, DomainSpec};
use crate::error::{Error, Result};
use crate::fields::{GridField, GridSpec};
use crate::ode::{BranchRule, Quadrature, SolveOptions};
use crate::poly::MultiPoly;
use crate::tol;

/// Named symbols. Parameters default to 1 and dimension to 2 (3 for Dirac and Laplacian).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// k^2 - |xi|^2
    Helmholtz {
        #[serde(default = "one")]
        k: f64,
        #[serde(default = "two")]
        n: usize,
    },
    /// |xi|^4 - lambda^2
    Bilaplacian {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "two")]
        n: usize,
    },
    /// Delta + 2 zeta.grad - lambda with zeta = a e1 + i b, |b| = |a|, written in the
    /// conjugated real form -|xi|^2 + 2i a xi_1 + a^2 - lambda.
    Faddeev {
        #[serde(default = "one")]
        re_zeta: f64,
        #[serde(default)]
        lambda: f64,
        #[serde(default = "two")]
        n: usize,
    },
    /// xi_1^2 xi_2^2 - 1
    Quartic,
    Dirac {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default = "dirac_axis")]
        axis: usize,
    },
    /// -|xi|^2
    Laplacian {
        #[serde(default = "three")]
        n: usize,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn dirac_axis() -> usize {
    2
}

impl Preset {
    /// Default-parameter preset by name, as accepted on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "helmholtz" => Preset::Helmholtz { k: 1.0, n: 2 },
            "helmholtz3d" => Preset::Helmholtz { k: 1.0, n: 3 },
            "bilaplacian" => Preset::Bilaplacian { lambda: 1.0, n: 2 },
            "faddeev" => Preset::Faddeev {
                re_zeta: 1.0,
                lambda: 0.0,
                n: 2,
            },
            "quartic" => Preset::Quartic,
            "dirac" => Preset::Dirac {
                omega: 1.0,
                axis: 2,
            },
            "laplacian" => Preset::Laplacian { n: 3 },
            _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Helmholtz { .. } => "helmholtz",
            Preset::Bilaplacian { .. } => "bilaplacian",
            Preset::Faddeev { .. } => "faddeev",
            Preset::Quartic => "quartic",
            Preset::Dirac { .. } => "dirac",
            Preset::Laplacian { .. } => "laplacian",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Preset::Helmholtz { n, .. }
            | Preset::Bilaplacian { n, .. }
            | Preset::Faddeev { n, .. }
            | Preset::Laplacian { n } => *n,
            Preset::Quartic => 2,
            Preset::Dirac { .. } => 3,
        }
    }

    /// Order of the operator.
    pub fn order(&self) -> usize {
        match self {
            Preset::Bilaplacian { .. } | Preset::Quartic => 4,
            Preset::Dirac { .. } => 1,
            _ => 2,
        }
    }

    /// The scalar symbol; Dirac is a system and has none.
    pub fn symbol(&self) -> Result<MultiPoly> {
        let n = self.dim();
        let c = |re: f64, im: f64| C64::new(re, im);
        let norm2 = (0..n).fold(MultiPoly::zero(n), |acc, j| {
            acc.add(&MultiPoly::var(n, j).pow(2))
        });
        Ok(match self {
            Preset::Helmholtz { k, .. } => MultiPoly::constant(n, c(k * k, 0.0)).sub(&norm2),
            Preset::Bilaplacian { lambda, .. } => norm2
                .pow(2)
                .sub(&MultiPoly::constant(n, c(lambda * lambda, 0.0))),
            Preset::Faddeev {
                re_zeta, lambda, ..
            } => MultiPoly::constant(n, c(re_zeta * re_zeta - lambda, 0.0))
                .sub(&norm2)
                .add(&MultiPoly::var(n, 0).scale(c(0.0, 2.0 * re_zeta))),
            Preset::Quartic => MultiPoly::var(2, 0)
                .pow(2)
                .mul(&MultiPoly::var(2, 1).pow(2))
                .sub(&MultiPoly::constant(2, c(1.0, 0.0))),
            Preset::Laplacian { .. } => norm2.scale(c(-1.0, 0.0)),
            Preset::Dirac { .. } => {
                return Err(Error::Unsupported("the Dirac preset is a system".into()))
            }
        })
    }

    /// The parameter a scaling study varies.
    pub fn parameter(&self) -> f64 {
        match self {
            Preset::Helmholtz { k, .. } => *k,
            Preset::Bilaplacian { lambda, .. } => *lambda,
            Preset::Faddeev { re_zeta, .. } => re_zeta.abs(),
            Preset::Dirac { omega, .. } => omega.abs(),
            Preset::Quartic | Preset::Laplacian { .. } => 1.0,
        }
    }

    /// Frequency scale kappa; the symbol is covariant under xi -> xi / kappa.
    pub fn freq_scale(&self) -> f64 {
        match self {
            Preset::Bilaplacian { lambda, .. } => lambda.abs().sqrt(),
            _ => self.parameter(),
        }
    }

    /// Same preset with its frequency scale multiplied by `s`.
    pub fn rescaled(&self, s: f64) -> Self {
        match self.clone() {
            Preset::Helmholtz { k, n } => Preset::Helmholtz { k: k * s, n },
            Preset::Bilaplacian { lambda, n } => Preset::Bilaplacian {
                lambda: lambda * s * s,
                n,
            },
            Preset::Faddeev { re_zeta, lambda, n } => Preset::Faddeev {
                re_zeta: re_zeta * s,
                lambda: lambda * s * s,
                n,
            },
            Preset::Dirac { omega, axis } => Preset::Dirac {
                omega: omega * s,
                axis,
            },
            p => p,
        }
    }

    /// Preset with the study parameter set to `v` (other parameters follow covariantly).
    pub fn with_parameter(&self, v: f64) -> Self {
        let kappa = match self {
            Preset::Bilaplacian { .. } => v.abs().sqrt(),
            _ => v.abs(),
        };
        self.rescaled(kappa / self.freq_scale())
    }

    /// Exponent of the ratio in the study parameter: ratio ~ parameter^gamma.
    pub fn scaling_exponent(&self) -> f64 {
        let per_kappa = -(self.order() as f64 - 1.0);
        match self {
            Preset::Bilaplacian { .. } => per_kappa / 2.0,
            _ => per_kappa,
        }
    }

    /// Branch rule for real roots on this symbol.
    pub fn default_branch(&self) -> BranchRule {
        match self {
            Preset::Helmholtz { .. } => BranchRule::Absorbing { sign: 1.0 },
            Preset::Bilaplacian { .. } => BranchRule::Absorbing { sign: -1.0 },
            _ => BranchRule::Forward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub text: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceTerm {
    /// amplitude * exp(-|x - center|^2 / width^2)
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Indicator {
        domain: DomainSpec,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

/// Gaussians count as supported within this many widths (e^{-36} relative).
pub const GAUSSIAN_SUPPORT_WIDTHS: f64 = 6.0;

impl SourceTerm {
    pub fn dim(&self) -> usize {
        match self {
            SourceTerm::Gaussian { center, .. } => center.len(),
            SourceTerm::Indicator { domain, .. } => domain.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SourceTerm::Gaussian {
                center,
                width,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-r2 / (width * width)).exp()
            }
            SourceTerm::Indicator { domain, amplitude } => {
                if domain.contains(x) {
                    *amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn anchor(&self) -> Vec<f64> {
        match self {
            SourceTerm::Gaussian { center, .. } => center.clone(),
            SourceTerm::Indicator { domain, .. } => domain_anchor(domain),
        }
    }

    /// The ball or domain treated as the support.
    pub fn support(&self) -> Vec<Ball> {
        match self {
            SourceTerm::Gaussian { center, width, .. } => {
                vec![Ball {
                    center: center.clone(),
                    radius: GAUSSIAN_SUPPORT_WIDTHS * width,
                }]
            }
            SourceTerm::Indicator { domain, .. } => match domain {
                DomainSpec::Ball { center, radius } => vec![Ball {
                    center: center.clone(),
                    radius: *radius,
                }],
                DomainSpec::UnionOfBalls { balls } => balls.clone(),
                DomainSpec::Box { lo, hi } => {
                    let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    let r = 0.5
                        * lo.iter()
                            .zip(hi)
                            .map(|(a, b)| (b - a).powi(2))
                            .sum::<f64>()
                            .sqrt();
                    vec![Ball {
                        center: c,
                        radius: r,
                    }]
                }
            },
        }
    }

    fn map_geometry(
        &self,
        pt: &dyn Fn(&[f64]) -> Vec<f64>,
        len: f64,
        dom: &dyn Fn(&DomainSpec) -> Result<DomainSpec>,
    ) -> Result<Self> {
        Ok(match self {
            SourceTerm::Gaussian {
                center,
                width,
                amplitude,
            } => SourceTerm::Gaussian {
                center: pt(center),
                width: width * len,
                amplitude: *amplitude,
            },
            SourceTerm::Indicator { domain, amplitude } => SourceTerm::Indicator {
                domain: dom(domain)?,
                amplitude: *amplitude,
            },
        })
    }
}

fn domain_anchor(d: &DomainSpec) -> Vec<f64> {
    match d {
        DomainSpec::Ball { center, .. } => center.clone(),
        DomainSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        DomainSpec::UnionOfBalls { balls } => {
            let n = balls[0].center.len();
            (0..n)
                .map(|j| balls.iter().map(|b| b.center[j]).sum::<f64>() / balls.len() as f64)
                .collect()
        }
    }
}

/// Cubic box of `points`^n samples and side `length`. Without an explicit centre
/// the box is centred on the mean source anchor, snapped to the lattice h Z^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub length: f64,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub polynomial: Option<PolynomialSpec>,
    pub source: Vec<SourceTerm>,
    /// Defaults to the union of the source supports.
    #[serde(default)]
    pub d_s: Option<DomainSpec>,
    pub d_r: DomainSpec,
    pub grid: GridConfig,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub branch: Option<BranchRule>,
    #[serde(default)]
    pub quadrature: Option<Quadrature>,
    /// Also run the partial-fraction route on second-order pieces and compare.
    #[serde(default)]
    pub two_route: bool,
    /// Dirac source direction in C^4 (real entries); default e1.
    #[serde(default)]
    pub polarization: Option<Vec<f64>>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        match (&self.preset, &self.polynomial) {
            (Some(p), _) => p.dim(),
            (None, Some(p)) => p.dim,
            _ => 0,
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.preset, Some(Preset::Dirac { .. }))
    }

    /// The scalar symbol, or None for the Dirac system.
    pub fn symbol(&self) -> Result<Option<MultiPoly>> {
        match (&self.preset, &self.polynomial) {
            (Some(Preset::Dirac { .. }), _) => Ok(None),
            (Some(p), None) => Ok(Some(p.symbol()?)),
            (None, Some(p)) => Ok(Some(MultiPoly::parse_dim(&p.text, p.dim)?)),
            _ => Err(Error::Config(
                "exactly one of 'preset' and 'polynomial' is required".into(),
            )),
        }
    }

    pub fn symbol_label(&self) -> String {
        match (&self.preset, &self.polynomial) {
            (Some(p), _) => match p {
                Preset::Helmholtz { k, n } => format!("helmholtz(k={k}, n={n})"),
                Preset::Bilaplacian { lambda, n } => format!("bilaplacian(lambda={lambda}, n={n})"),
                Preset::Faddeev { re_zeta, lambda, n } => {
                    format!("faddeev(re_zeta={re_zeta}, lambda={lambda}, n={n})")
                }
                Preset::Quartic => "quartic".into(),
                Preset::Dirac { omega, axis } => format!("dirac(omega={omega}, axis={axis})"),
                Preset::Laplacian { n } => format!("laplacian(n={n})"),
            },
            (None, Some(p)) => p.text.clone(),
            _ => String::new(),
        }
    }

    pub fn freq_scale(&self) -> f64 {
        self.preset.as_ref().map_or(1.0, |p| p.freq_scale())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            quadrature: self
                .quadrature
                .unwrap_or(Quadrature::Lagrange(tol::LAGRANGE_POINTS)),
            branch: self.branch.unwrap_or_else(|| {
                self.preset
                    .as_ref()
                    .map_or(BranchRule::Forward, |p| p.default_branch())
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.preset.is_some() == self.polynomial.is_some() {
            return bad("exactly one of 'preset' and 'polynomial' is required".into());
        }
        self.symbol()?;
        let n = self.dim();
        if n == 0 {
            return bad("dimension must be positive".into());
        }
        if self.source.is_empty() {
            return bad("at least one source term is required".into());
        }
        for s in &self.source {
            if s.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.dim(),
                });
            }
            match s {
                SourceTerm::Gaussian { width, .. } if !(*width > 0.0) => {
                    return bad("gaussian width must be positive".into())
                }
                SourceTerm::Indicator { domain, .. } => domain.validate(n)?,
                _ => {}
            }
        }
        self.d_r.validate(n)?;
        let ds = self.source_domain();
        ds.validate(n)?;
        if self.grid.points < 8 || !self.grid.points.is_multiple_of(2) {
            return bad(format!(
                "grid points must be even and >= 8, got {}",
                self.grid.points
            ));
        }
        if !(self.grid.length > 0.0) {
            return bad("grid length must be positive".into());
        }
        if let Some(c) = &self.grid.center {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
        }
        if matches!(self.eps, Some(e) if !(e > 0.0)) {
            return bad("eps must be positive".into());
        }
        if matches!(self.r0, Some(r) if !(r > 0.0)) {
            return bad("r0 must be positive".into());
        }
        if let Some(p) = &self.polarization {
            if p.len() != 4 {
                return bad("polarization needs 4 entries".into());
            }
        }
        if self.is_dirac() && n != 3 {
            return bad("the Dirac preset is three-dimensional".into());
        }
        // D_s (hence the source) must sit in the inner half of the box
        let grid = self.grid_spec()?;
        let c = grid.center();
        let quarter = 0.25 * self.grid.length;
        let balls = match &ds {
            DomainSpec::Ball { center, radius } => vec![Ball {
                center: center.clone(),
                radius: *radius,
            }],
            DomainSpec::UnionOfBalls { balls } => balls.clone(),
            DomainSpec::Box { lo, hi } => {
                if lo
                    .iter()
                    .zip(hi)
                    .enumerate()
                    .any(|(j, (a, b))| a - c[j] < -quarter || b - c[j] > quarter)
                {
                    return bad("D_s must lie in the inner half of the box".into());
                }
                Vec::new()
            }
        };
        for b in balls {
            if (0..n).any(|j| (b.center[j] - c[j]).abs() + b.radius > quarter * (1.0 + 1e-12)) {
                return bad("D_s must lie in the inner half of the box".into());
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let n = self.dim();
        let h = self.grid.length / self.grid.points as f64;
        let center = match &self.grid.center {
            Some(c) => c.clone(),
            None => {
                let anchors: Vec<Vec<f64>> = self.source.iter().map(|s| s.anchor()).collect();
                (0..n)
                    .map(|j| {
                        let m = anchors.iter().map(|a| a[j]).sum::<f64>() / anchors.len() as f64;
                        (m / h).round() * h
                    })
                    .collect()
            }
        };
        let g = GridSpec::centered(&center, self.grid.points, self.grid.length);
        g.validate()?;
        Ok(g)
    }

    pub fn source_domain(&self) -> DomainSpec {
        if let Some(d) = &self.d_s {
            return d.clone();
        }
        let balls: Vec<Ball> = self.source.iter().flat_map(|s| s.support()).collect();
        if balls.len() == 1 {
            DomainSpec::Ball {
                center: balls[0].center.clone(),
                radius: balls[0].radius,
            }
        } else {
            DomainSpec::UnionOfBalls { balls }
        }
    }

    pub fn source_field(&self, grid: &GridSpec) -> GridField {
        GridField::from_fn(grid.clone(), |x| {
            C64::new(self.source.iter().map(|s| s.value(x)).sum(), 0.0)
        })
    }

    fn map_geometry(
        &self,
        pt: &dyn Fn(&[f64]) -> Vec<f64>,
        len: f64,
        dom: &dyn Fn(&DomainSpec) -> Result<DomainSpec>,
    ) -> Result<Self> {
        let mut s = self.clone();
        s.source = self
            .source
            .iter()
            .map(|t| t.map_geometry(pt, len, dom))
            .collect::<Result<_>>()?;
        s.d_r = dom(&self.d_r)?;
        s.d_s = self.d_s.as_ref().map(dom).transpose()?;
        s.grid.center = self.grid.center.as_ref().map(|c| pt(c));
        s.grid.length = self.grid.length * len;
        Ok(s)
    }

    /// Sources, domains and box moved by dx.
    pub fn translated(&self, dx: &[f64]) -> Self {
        let pt = |c: &[f64]| c.iter().zip(dx).map(|(a, b)| a + b).collect::<Vec<f64>>();
        let dom = |d: &DomainSpec| Ok(d.translated(dx));
        self.map_geometry(&pt, 1.0, &dom)
            .expect("translation cannot fail")
    }

    /// Geometry and box dilated by s about the origin; the symbol is unchanged.
    pub fn dilated(&self, s: f64) -> Self {
        let pt = |c: &[f64]| c.iter().map(|a| a * s).collect::<Vec<f64>>();
        let dom = |d: &DomainSpec| Ok(d.dilated(s));
        self.map_geometry(&pt, s, &dom)
            .expect("dilation cannot fail")
    }

    /// Sources and domains rotated by R about `about`; the box keeps its centre there.
    pub fn rotated(&self, r: &[Vec<f64>], about: &[f64]) -> Result<Self> {
        let n = about.len();
        let pt = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| about[i] + (0..n).map(|j| r[i][j] * (x[j] - about[j])).sum::<f64>())
                .collect()
        };
        let dom = |d: &DomainSpec| d.rotated(r, about);
        let mut s = self.map_geometry(&pt, 1.0, &dom)?;
        s.grid.center = Some(about.to_vec());
        Ok(s)
    }

    /// Same scenario with the preset's frequency scale multiplied by `kappa` and the
    /// geometry shrunk by the same factor (exact covariance of the estimate quantities).
    pub fn rescaled(&self, kappa: f64) -> Result<Self> {
        let Some(p) = &self.preset else {
            return Err(Error::Unsupported("rescaling needs a preset".into()));
        };
        let mut s = self.dilated(1.0 / kappa);
        s.preset = Some(p.rescaled(kappa));
        s.r0 = self.r0.map(|r| r * kappa);
        let order = p.order() as i32;
        s.eps = self.eps.map(|e| e * kappa.powi(order));
        Ok(s)
    }
}

/// Default scenario for a preset at `points`^n resolution.
pub fn preset_scenario(preset: Preset, points: usize) -> Scenario {
    let n = preset.dim();
    let kappa = preset.freq_scale().max(f64::MIN_POSITIVE);
    let (source, length, d_r) = match n {
        2 => (
            vec![
                SourceTerm::Gaussian {
                    center: vec![1.0, 0.5],
                    width: 1.5,
                    amplitude: 1.0,
                },
                SourceTerm::Gaussian {
                    center: vec![-1.5, -0.5],
                    width: 1.0,
                    amplitude: 0.5,
                },
            ],
            64.0,
            DomainSpec::ball(vec![-0.25, 0.0], 7.3),
        ),
        _ if preset.name() == "dirac" => (
            vec![SourceTerm::Gaussian {
                center: vec![0.25, -0.25, 0.0],
                width: 0.6,
                amplitude: 1.0,
            }],
            16.0,
            DomainSpec::ball(vec![0.25, -0.25, 0.0], 3.1),
        ),
        _ => (
            vec![SourceTerm::Gaussian {
                center: vec![0.0; n],
                width: 1.5,
                amplitude: 1.0,
            }],
            50.0,
            DomainSpec::ball(vec![0.0; n], 7.3),
        ),
    };
    let base = Scenario {
        preset: Some(preset.rescaled(1.0 / kappa)),
        polynomial: None,
        source,
        d_s: None,
        d_r,
        grid: GridConfig {
            points,
            length,
            center: None,
        },
        eps: None,
        r0: None,
        seed: 0,
        branch: None,
        quadrature: None,
        two_route: false,
        polarization: None,
    };
    if preset.name() == "laplacian" || preset.name() == "quartic" || preset.freq_scale() == 0.0 {
        let mut s = base;
        s.preset = Some(preset);
        return s;
    }
    base.rescaled(kappa).expect("preset scenario has a preset")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build_expected_symbols() {
        let h = Preset::Helmholtz { k: 2.0, n: 2 }.symbol().unwrap();
        assert_eq!(h.eval_real(&[1.0, 1.0]).unwrap(), C64::new(2.0, 0.0));
        let b = Preset::Bilaplacian { lambda: 1.0, n: 2 }.symbol().unwrap();
        assert_eq!(b.eval_real(&[1.0, 0.0]).unwrap(), C64::new(0.0, 0.0));
        let f = Preset::Faddeev {
            re_zeta: 1.0,
            lambda: 0.0,
            n: 2,
        }
        .symbol()
        .unwrap();
        assert_eq!(f.eval_real(&[0.0, 1.0]).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(f.eval_real(&[1.0, 1.0]).unwrap(), C64::new(-1.0, 2.0));
        assert!(Preset::Dirac {
            omega: 1.0,
            axis: 2
        }
        .symbol()
        .is_err());
    }

    #[test]
    fn rescaling_is_covariant() {
        let p = Preset::Bilaplacian { lambda: 1.0, n: 2 };
        assert_eq!(
            p.with_parameter(4.0),
            Preset::Bilaplacian { lambda: 4.0, n: 2 }
        );
        assert_eq!(p.scaling_exponent(), -1.5);
        assert_eq!(Preset::Helmholtz { k: 1.0, n: 2 }.scaling_exponent(), -1.0);
        let s = preset_scenario(Preset::Helmholtz { k: 1.0, n: 2 }, 64);
        let t = s.rescaled(2.0).unwrap();
        assert_eq!(t.grid.length, 32.0);
        assert_eq!(t.preset, Some(Preset::Helmholtz { k: 2.0, n: 2 }));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut s = preset_scenario(Preset::Helmholtz { k: 1.0, n: 2 }, 64);
        s.validate().unwrap();
        s.grid.length = 20.0;
        assert!(s.validate().is_err(), "D_s outside the inner half");
        let json = r#"{"preset": {"name": "helmholtz"}, "source": [], "d_r": {"kind": "ball", "center": [0, 0], "radius": 1},
                       "grid": {"points": 16, "length": 8}, "bogus": 1}"#;
        assert!(serde_json::from_str::<Scenario>(json).is_err());
    }

    #[test]
    fn box_centre_snaps_to_lattice() {
        let s = preset_scenario(Preset::Helmholtz { k: 1.0, n: 2 }, 256);
        let g = s.grid_spec().unwrap();
        let h = g.h(0);
        for c in g.center() {
            assert!((c / h - (c / h).round()).abs() < 1e-12);
        }
        let t = s.translated(&[8.0 * h, -3.0 * h]);
        let gt = t.grid_spec().unwrap();
        assert!((gt.center()[0] - g.center()[0] - 8.0 * h).abs() < 1e-12);
    }
}
