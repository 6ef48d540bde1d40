//! Tensor-product quadrature on boxes, balls and the compactified stereographic chart,
//! compactly supported bump fields, and integrated action and Hessian values.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{curvature_forms_with_derivative, infinitesimal_gauge, LeviCivitaField, SectionJet, VectorJet};
use crate::error::{Error, Result};
use crate::gauge::{
    field_perturbation, hessian_pre_gauge_integrand, projection_pi, AlgebraOneForm, Background, PerturbationJet,
};
use crate::models::{ModelMetric, Point4, Scheme};

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let n = NonZeroUsize::new(n).ok_or_else(|| Error::Argument("a rule needs at least one node".into()))?;
    let rule = GaussLegendre::new(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    Ok(rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect())
}

/// Product rule on the unit three-sphere in hyperspherical angles `(χ, θ, φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereRule {
    pub n_chi: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SphereRule {
    fn default() -> Self {
        SphereRule {
            n_chi: 5,
            n_theta: 5,
            n_phi: 8,
        }
    }
}

impl SphereRule {
    /// Unit directions with weights summing to `2π²`.
    pub fn nodes(&self) -> Result<Vec<([f64; 4], f64)>> {
        if self.n_phi == 0 {
            return Err(Error::Argument("a rule needs at least one node".into()));
        }
        let chi = gauss_legendre(self.n_chi, 0.0, PI)?;
        let u = gauss_legendre(self.n_theta, -1.0, 1.0)?;
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.n_chi * self.n_theta * self.n_phi);
        for &(c, wc) in &chi {
            let (sc, cc) = c.sin_cos();
            for &(ct, wt) in &u {
                let st = (1.0 - ct * ct).sqrt();
                for k in 0..self.n_phi {
                    let (sp, cp) = ((k as f64 + 0.5) * dphi).sin_cos();
                    out.push(([cc, sc * ct, sc * st * cp, sc * st * sp], wc * sc * sc * wt * dphi));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RuleDomain {
    Box {
        lo: Point4,
        hi: Point4,
    },
    Ball {
        center: Point4,
        radius: f64,
    },
    /// All of the chart, through `r = t/(1 − t)`.
    Compactified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Point4>,
    pub weights: Vec<f64>,
    pub domain: RuleDomain,
}

impl QuadratureRule {
    /// `n` Gauss–Legendre nodes per axis.
    pub fn gauss_box(lo: Point4, hi: Point4, n: usize) -> Result<Self> {
        let axes: Vec<Vec<(f64, f64)>> = (0..4).map(|k| gauss_legendre(n, lo[k], hi[k])).collect::<Result<_>>()?;
        let mut nodes = Vec::with_capacity(n.pow(4));
        let mut weights = Vec::with_capacity(n.pow(4));
        for a in &axes[0] {
            for b in &axes[1] {
                for c in &axes[2] {
                    for d in &axes[3] {
                        nodes.push([a.0, b.0, c.0, d.0]);
                        weights.push(a.1 * b.1 * c.1 * d.1);
                    }
                }
            }
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            domain: RuleDomain::Box { lo, hi },
        })
    }

    pub fn unit_box(n: usize) -> Result<Self> {
        Self::gauss_box([0.0; 4], [1.0; 4], n)
    }

    /// Radial Gauss–Legendre with the `r³` Jacobian, times an angular rule.
    pub fn ball(center: Point4, radius: f64, radial: usize, angular: SphereRule) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Argument(format!("ball radius must be positive, got {radius}")));
        }
        let rs = gauss_legendre(radial, 0.0, radius)?;
        let dirs = angular.nodes()?;
        let mut nodes = Vec::with_capacity(rs.len() * dirs.len());
        let mut weights = Vec::with_capacity(rs.len() * dirs.len());
        for &(r, wr) in &rs {
            for (d, wd) in &dirs {
                nodes.push(std::array::from_fn(|k| center[k] + r * d[k]));
                weights.push(wr * r.powi(3) * wd);
            }
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            domain: RuleDomain::Ball { center, radius },
        })
    }

    /// The whole chart, with the radius compactified to `t ∈ [0, 1)`.
    pub fn compactified(radial: usize, angular: SphereRule) -> Result<Self> {
        let ts = gauss_legendre(radial, 0.0, 1.0)?;
        let dirs = angular.nodes()?;
        let mut nodes = Vec::with_capacity(ts.len() * dirs.len());
        let mut weights = Vec::with_capacity(ts.len() * dirs.len());
        for &(t, wt) in &ts {
            let r = t / (1.0 - t);
            let jac = wt / (1.0 - t).powi(2) * r.powi(3);
            for (d, wd) in &dirs {
                nodes.push(d.map(|c| r * c));
                weights.push(jac * wd);
            }
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            domain: RuleDomain::Compactified,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// Whether the closed ball `|x − center| ≤ radius` lies inside the rule's domain.
    pub fn covers_ball(&self, center: &Point4, radius: f64) -> bool {
        match self.domain {
            RuleDomain::Box { lo, hi } => (0..4).all(|k| center[k] - radius >= lo[k] && center[k] + radius <= hi[k]),
            RuleDomain::Ball { center: c, radius: r } => {
                let d = (0..4).map(|k| (center[k] - c[k]).powi(2)).sum::<f64>().sqrt();
                d + radius <= r * (1.0 + 1e-12)
            }
            RuleDomain::Compactified => true,
        }
    }
}

/// Neumaier summation in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub type Density<'a> = dyn Fn(&Point4) -> Result<f64> + Sync + 'a;

/// `Σ_k w_k f(x_k)`, evaluated in parallel and summed in node order.
pub fn integrate_chart(density: &Density, rule: &QuadratureRule) -> Result<f64> {
    let values: Vec<f64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(x, w)| {
            let v = density(x)?;
            if !v.is_finite() {
                return Err(Error::Numeric(format!("density is not finite at {x:?}")));
            }
            Ok(w * v)
        })
        .collect::<Result<_>>()?;
    Ok(compensated_sum(values))
}

/// Settings for integrals over the whole stereographic chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S4Settings {
    pub radial: usize,
    pub angular: SphereRule,
    /// Largest accepted relative change between `radial/2` and `radial` nodes.
    pub tol: f64,
}

impl Default for S4Settings {
    fn default() -> Self {
        S4Settings {
            radial: 64,
            angular: SphereRule::default(),
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S4Integral {
    pub value: f64,
    pub coarse: f64,
    pub relative_change: f64,
}

/// Integral of a coordinate density over the stereographic chart of S⁴, checked by
/// halving the radial node count.
pub fn integrate_s4(density: &Density, settings: &S4Settings) -> Result<S4Integral> {
    let fine = integrate_chart(
        density,
        &QuadratureRule::compactified(settings.radial, settings.angular)?,
    )?;
    let coarse = integrate_chart(
        density,
        &QuadratureRule::compactified((settings.radial / 2).max(1), settings.angular)?,
    )?;
    let scale = fine.abs().max(coarse.abs());
    let change = if scale == 0.0 {
        0.0
    } else {
        (fine - coarse).abs() / scale
    };
    if !(change <= settings.tol) {
        return Err(Error::Convergence {
            coarse,
            fine,
            tol: settings.tol,
        });
    }
    Ok(S4Integral {
        value: fine,
        coarse,
        relative_change: change,
    })
}

/// `(1 − |x − c|²/R²)³` inside the ball, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub center: Point4,
    pub radius: f64,
}

impl BumpField {
    fn s(&self, x: &Point4) -> (f64, [f64; 4]) {
        let r2 = self.radius * self.radius;
        let d: [f64; 4] = std::array::from_fn(|k| x[k] - self.center[k]);
        (d.iter().map(|v| v * v).sum::<f64>() / r2, d.map(|v| 2.0 * v / r2))
    }

    pub fn value(&self, x: &Point4) -> f64 {
        let (s, _) = self.s(x);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s).powi(3)
        }
    }

    pub fn gradient(&self, x: &Point4) -> [f64; 4] {
        let (s, ds) = self.s(x);
        if s >= 1.0 {
            return [0.0; 4];
        }
        ds.map(|v| -3.0 * (1.0 - s).powi(2) * v)
    }

    pub fn hessian(&self, x: &Point4) -> [[f64; 4]; 4] {
        let (s, ds) = self.s(x);
        if s >= 1.0 {
            return [[0.0; 4]; 4];
        }
        let r2 = self.radius * self.radius;
        std::array::from_fn(|m| {
            std::array::from_fn(|n| {
                let dd = if m == n { 2.0 / r2 } else { 0.0 };
                6.0 * (1.0 - s) * ds[m] * ds[n] - 3.0 * (1.0 - s).powi(2) * dd
            })
        })
    }

    /// `β ξ₀` as a section jet.
    pub fn section(&self, x: &Point4, xi0: &[f64; 3]) -> SectionJet {
        let (v, g, h) = (self.value(x), self.gradient(x), self.hessian(x));
        SectionJet {
            xi: xi0.map(|c| c * v),
            dxi: std::array::from_fn(|i| g.map(|d| d * xi0[i])),
            ddxi: std::array::from_fn(|i| h.map(|r| r.map(|d| d * xi0[i]))),
        }
    }

    /// `β v₀` as a vector field jet.
    pub fn vector(&self, x: &Point4, v0: &[f64; 4]) -> VectorJet {
        let (v, g) = (self.value(x), self.gradient(x));
        VectorJet {
            v: v0.map(|c| c * v),
            dv: std::array::from_fn(|mu| v0.map(|c| c * g[mu])),
        }
    }
}

/// Infinitesimal gauge transformation `d_A(βξ₀) + ι_{βv₀} F` of the Levi-Civita connection
/// on `Λ⁺` of `model`.
pub fn pure_gauge_jet(
    model: &ModelMetric,
    bump: &BumpField,
    xi0: &[f64; 3],
    v0: &[f64; 4],
    x: &Point4,
    h: f64,
) -> Result<PerturbationJet> {
    if bump.value(x) == 0.0 {
        return Ok(PerturbationJet::zero());
    }
    let jet = curvature_forms_with_derivative(&LeviCivitaField { model: *model }, x, Scheme::Analytic, h)?;
    infinitesimal_gauge(&jet, &bump.section(x, xi0), &bump.vector(x, v0))
}

/// The field `Π(β b₀)` with its covariant derivative by differences.
pub fn horizontal_bump_jet(
    bg: &dyn Background,
    bump: &BumpField,
    b0: &AlgebraOneForm,
    x: &Point4,
    h: f64,
) -> Result<PerturbationJet> {
    let reach = (0..4).map(|k| (x[k] - bump.center[k]).powi(2)).sum::<f64>().sqrt();
    if reach >= bump.radius + crate::fd::REACH * h {
        return Ok(PerturbationJet::zero());
    }
    let field = |y: &Point4| -> Result<AlgebraOneForm> {
        let beta = bump.value(y);
        if beta == 0.0 {
            return Ok([[0.0; 4]; 3]);
        }
        projection_pi(&bg.context(y)?, &b0.map(|r| r.map(|v| v * beta)))
    };
    field_perturbation(&bg.coeffs(x)?, &field, x, h)
}

pub type JetField<'a> = dyn Fn(&Point4) -> Result<PerturbationJet> + Sync + 'a;

/// `∫ D²S(a, a)` from the pre-gauge integrand, for `a` supported in the closed ball
/// `support = (center, radius)`.
pub fn hessian_quadratic_form(
    bg: &dyn Background,
    field: &JetField,
    support: (Point4, f64),
    rule: &QuadratureRule,
) -> Result<f64> {
    if !rule.covers_ball(&support.0, support.1) {
        return Err(Error::Support);
    }
    let density = |x: &Point4| -> Result<f64> {
        let pj = field(x)?;
        if pj.a.iter().flatten().chain(pj.d_a.iter().flatten()).all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        hessian_pre_gauge_integrand(&bg.context(x)?, &pj)
    };
    integrate_chart(&density, rule)
}

/// `∫ |a|² μ`.
pub fn l2_norm_sq(bg: &dyn Background, field: &JetField, rule: &QuadratureRule) -> Result<f64> {
    let density = |x: &Point4| -> Result<f64> {
        let pj = field(x)?;
        if pj.a.iter().flatten().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let ctx = bg.context(x)?;
        Ok(ctx.norm_sq(&pj.a) * ctx.mu)
    };
    integrate_chart(&density, rule)
}
