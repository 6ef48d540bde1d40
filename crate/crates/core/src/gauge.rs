//! Almost complex structures from a self-dual frame, the gauge projection, gauge-fixing
//! residuals, the three forms of the Hessian integrand and the symbol of `d_A^* Π d_A`.
//!
//! Endomorphisms of one-forms are stored as matrices acting on coefficient vectors:
//! `(Jα)_m = Σ_n J[m][n] α_n`.

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::connection::{covariant_d0, covariant_d1, ConnectionCoeffs};
use crate::curvature::{lc_connection_on_lambda_plus, oriented_frames, Orientation};
use crate::error::{Error, Result};
use crate::exterior::{cyclic, epsilon, wedge11, wedge12, wedge22, MetricData, Sym3, ThreeForm, TwoForm};
use crate::fd;
use crate::models::{ModelMetric, Point4, Scheme};
use crate::plebanski::{lc_pure_data, wedge_orthogonality_residual, PlebanskiPoint, PureConnectionData, Tangent};
use crate::scalar::Mat4;

/// Three so(3)-valued one-form coefficients, `a[i][ν] = a^i_ν`.
pub type AlgebraOneForm = [[f64; 4]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// `d_a` was obtained by differentiating an actual field.
    FieldDerived,
    /// `a` and `d_a` were prescribed independently.
    Synthetic,
}

/// A tangent vector to the space of connections at a point, with its covariant derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationJet {
    pub a: AlgebraOneForm,
    /// `(d_A a)^i`.
    pub d_a: [TwoForm; 3],
    pub provenance: Provenance,
}

impl PerturbationJet {
    pub fn zero() -> Self {
        PerturbationJet {
            a: [[0.0; 4]; 3],
            d_a: [[0.0; 6]; 3],
            provenance: Provenance::Synthetic,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a
            .iter()
            .flatten()
            .chain(self.d_a.iter().flatten())
            .all(|v| v.is_finite())
    }
}

/// Perturbation jet of a one-form field, differencing it with step `h`.
pub fn field_perturbation(
    a_coeffs: &ConnectionCoeffs,
    field: &(dyn Fn(&Point4) -> Result<AlgebraOneForm> + Sync),
    p: &Point4,
    h: f64,
) -> Result<PerturbationJet> {
    let a = field(p)?;
    let eval = |x: [f64; 4]| field(&x).unwrap_or([[f64::NAN; 4]; 3]);
    let g = fd::gradient(&eval, *p, h);
    let db: [[[f64; 4]; 4]; 3] = std::array::from_fn(|i| std::array::from_fn(|mu| g[mu][i]));
    let pj = PerturbationJet {
        a,
        d_a: covariant_d1(a_coeffs, &a, &db),
        provenance: Provenance::FieldDerived,
    };
    crate::error::finite_or(pj.is_finite(), pj, "perturbation jet")
}

fn mat_vec(m: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| (0..4).map(|j| m[i][j] * v[j]).sum())
}

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

/// `J_i(α) = ⋆(Σ_i∧α)`, unchecked.
fn j_matrices(sigma: &[TwoForm; 3], md: &MetricData) -> [Mat4; 3] {
    std::array::from_fn(|i| {
        let mut m = [[0.0; 4]; 4];
        for n in 0..4 {
            let mut e = [0.0; 4];
            e[n] = 1.0;
            let col = md.star3(&wedge12(&e, &sigma[i]));
            for r in 0..4 {
                m[r][n] = col[r];
            }
        }
        m
    })
}

/// Largest entry of `J_iJ_j − ε_ijk J_k + δ_ij`.
pub fn quaternion_residual(j: &[Mat4; 3]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let prod = mat_mul(&j[a], &j[b]);
            for r in 0..4 {
                for s in 0..4 {
                    let mut want = if a == b && r == s { -1.0 } else { 0.0 };
                    for k in 0..3 {
                        want += epsilon(a, b, k) * j[k][r][s];
                    }
                    worst = worst.max((prod[r][s] - want).abs());
                }
            }
        }
    }
    worst
}

/// The almost complex structures of an oriented wedge-orthogonal frame.
pub fn build_j(sigma: &[TwoForm; 3], g: &Mat4) -> Result<[Mat4; 3]> {
    let j = j_matrices(sigma, &MetricData::new(g));
    let r = quaternion_residual(&j);
    if !(r <= 1e-8) {
        return Err(Error::Orientation(format!(
            "quaternion relations fail (residual {r:.3e})"
        )));
    }
    Ok(j)
}

/// Pointwise data at a critical point that every gauge computation needs.
#[derive(Clone, Copy, Debug)]
pub struct GaugeContext {
    pub sigma: [TwoForm; 3],
    pub md: MetricData,
    /// `dvol = μ dx¹²³⁴`.
    pub mu: f64,
    pub y: Sym3,
    pub x: Sym3,
    pub lambda: f64,
    pub j: [Mat4; 3],
}

impl GaugeContext {
    pub fn new(sigma: [TwoForm; 3], g: &Mat4, y: Sym3, lambda: f64) -> Result<Self> {
        if lambda == 0.0 {
            return Err(Error::Argument("lambda must be non-zero".into()));
        }
        if (y.trace() - lambda).abs() > 1e-10 * lambda.abs() {
            return Err(Error::Argument(format!(
                "tr Y = {} differs from lambda {lambda}",
                y.trace()
            )));
        }
        let md = MetricData::new(g);
        let mu = md.sqrt_det;
        if !(mu > 0.0) {
            return Err(Error::Numeric("metric is not positive definite".into()));
        }
        let res = wedge_orthogonality_residual(&sigma, mu).norm();
        if res > 1e-8 {
            return Err(Error::Argument(format!(
                "Σ is not wedge-orthogonal for dvol_g (residual {res:.3e})"
            )));
        }
        Ok(GaugeContext {
            sigma,
            md,
            mu,
            y,
            x: y.inverse()?,
            lambda,
            j: build_j(&sigma, g)?,
        })
    }

    pub fn from_pure(pcd: &PureConnectionData) -> Result<Self> {
        Self::new(pcd.sigma, &pcd.g, pcd.y, pcd.lambda)
    }

    /// Flat chart with the flat self-dual frame and a prescribed `Y`.
    pub fn flat(y: Sym3) -> Result<Self> {
        let id = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        Self::new(crate::exterior::flat_sd_basis(), &id, y, y.trace())
    }

    pub fn apply_j(&self, i: usize, alpha: &[f64; 4]) -> [f64; 4] {
        mat_vec(&self.j[i], alpha)
    }

    /// `|a|² = Σ_i g(a^i, a^i)`.
    pub fn norm_sq(&self, a: &AlgebraOneForm) -> f64 {
        a.iter().map(|ai| self.md.inner1(ai, ai)).sum()
    }

    /// Anti-self-dual frame for the same orientation.
    pub fn asd_frame(&self) -> Result<[TwoForm; 3]> {
        Ok(oriented_frames(&self.md.g, Orientation::Positive)?.1)
    }
}

/// `p(a) = J_i a^i`.
pub fn p_map(ctx: &GaugeContext, a: &AlgebraOneForm) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..3 {
        let v = ctx.apply_j(i, &a[i]);
        for m in 0..4 {
            out[m] += v[m];
        }
    }
    out
}

/// `q(v) = ι_v F` with `F = YΣ`.
pub fn q_map(ctx: &GaugeContext, v: &[f64; 4]) -> AlgebraOneForm {
    let iv: [[f64; 4]; 3] = std::array::from_fn(|j| crate::exterior::interior2(v, &ctx.sigma[j]));
    std::array::from_fn(|i| std::array::from_fn(|nu| (0..3).map(|j| ctx.y.get(i, j) * iv[j][nu]).sum()))
}

fn pq_matrix(ctx: &GaugeContext) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for n in 0..4 {
        let mut e = [0.0; 4];
        e[n] = 1.0;
        let col = p_map(ctx, &q_map(ctx, &e));
        for r in 0..4 {
            m[(r, n)] = col[r];
        }
    }
    m
}

/// `Π a` by the closed formula in terms of `Y`.
pub fn projection_pi_closed(ctx: &GaugeContext, a: &AlgebraOneForm) -> AlgebraOneForm {
    let inv = 1.0 / ctx.lambda;
    let ja: [[[f64; 4]; 3]; 3] = std::array::from_fn(|l| std::array::from_fn(|j| ctx.apply_j(l, &a[j])));
    std::array::from_fn(|i| {
        std::array::from_fn(|nu| {
            let mut s = a[i][nu];
            for k in 0..3 {
                let yik = ctx.y.get(i, k);
                for j in 0..3 {
                    for l in 0..3 {
                        let e = epsilon(k, j, l);
                        if e != 0.0 {
                            s += inv * e * yik * ja[l][j][nu];
                        }
                    }
                }
                s -= inv * ctx.y.get(i, k) * a[k][nu];
            }
            s
        })
    })
}

/// `Π = 1 − q (p q)⁻¹ p`, cross-checked against the closed formula.
pub fn projection_pi(ctx: &GaugeContext, a: &AlgebraOneForm) -> Result<AlgebraOneForm> {
    let pa = Vector4::from(p_map(ctx, a));
    let w = pq_matrix(ctx)
        .lu()
        .solve(&pa)
        .ok_or_else(|| Error::Numeric("p∘q is singular".into()))?;
    let qa = q_map(ctx, &[w[0], w[1], w[2], w[3]]);
    let out: AlgebraOneForm = std::array::from_fn(|i| std::array::from_fn(|nu| a[i][nu] - qa[i][nu]));
    let closed = projection_pi_closed(ctx, a);
    let scale = 1.0 + a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = (0..3)
        .flat_map(|i| (0..4).map(move |nu| (i, nu)))
        .fold(0.0f64, |m, (i, nu)| m.max((out[i][nu] - closed[i][nu]).abs()));
    if gap > 1e-10 * scale {
        return Err(Error::Consistency(format!("projection routes differ by {gap:.3e}")));
    }
    Ok(out)
}

/// `N_ij` with `(d_A^+ a)^i = N_ij Σ_j`.
pub fn self_dual_coefficients(ctx: &GaugeContext, d_a: &[TwoForm; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| wedge22(&d_a[i], &ctx.sigma[j]) / (2.0 * ctx.mu))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeResiduals {
    /// `Σ_i∧a^i`.
    pub horizontal: ThreeForm,
    /// `ε_ijk Σ_j∧(d_A a)^k`, one four-form coefficient per `i`.
    pub vertical: [f64; 3],
    /// `Σ_i∧(d_A a)^i / μ = 2 tr N`.
    pub trace_n: f64,
}

pub fn gauge_residuals(ctx: &GaugeContext, pj: &PerturbationJet) -> GaugeResiduals {
    let mut horizontal = [0.0; 4];
    for i in 0..3 {
        let t = wedge12(&pj.a[i], &ctx.sigma[i]);
        for m in 0..4 {
            horizontal[m] += t[m];
        }
    }
    let vertical = std::array::from_fn(|i| {
        let (j, k) = cyclic(i);
        wedge22(&ctx.sigma[j], &pj.d_a[k]) - wedge22(&ctx.sigma[k], &pj.d_a[j])
    });
    let trace_n = (0..3).map(|i| wedge22(&ctx.sigma[i], &pj.d_a[i])).sum::<f64>() / ctx.mu;
    GaugeResiduals {
        horizontal,
        vertical,
        trace_n,
    }
}

/// Residual of `⋆a^i = ε_ijk Σ_j∧a^k`, which holds for horizontal `a`.
pub fn hodge_identity_residual(ctx: &GaugeContext, a: &AlgebraOneForm) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        let (j, k) = cyclic(i);
        let lhs = ctx.md.star1(&a[i]);
        let p = wedge12(&a[k], &ctx.sigma[j]);
        let q = wedge12(&a[j], &ctx.sigma[k]);
        for m in 0..4 {
            worst = worst.max((lhs[m] - p[m] + q[m]).abs());
        }
    }
    worst
}

const TRACE_FREE_BASIS: [[[f64; 3]; 3]; 5] = [
    [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
    [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
];

/// Coordinates of a trace-free symmetric matrix in `TRACE_FREE_BASIS`.
fn trace_free_coords(s: &Sym3) -> SVector<f64, 5> {
    SVector::from([s.0[0], -s.0[2], s.0[3], s.0[4], s.0[5]])
}

fn from_trace_free_coords(c: &SVector<f64, 5>) -> Sym3 {
    Sym3([c[0], c[1] - c[0], -c[1], c[2], c[3], c[4]])
}

/// The trace-free symmetric `φ` with `S²₀(Xφ) = S²₀(XN)`.
pub fn solve_phi_with(x: &Sym3, n: &Matrix3<f64>) -> Result<Sym3> {
    let xm = x.matrix();
    let mut l = SMatrix::<f64, 5, 5>::zeros();
    for (c, b) in TRACE_FREE_BASIS.iter().enumerate() {
        let bm = Matrix3::from_fn(|i, j| b[i][j]);
        l.set_column(c, &trace_free_coords(&crate::exterior::s20_project(&(xm * bm))));
    }
    let sv = l.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if !(lo > 1e-12 * hi) {
        return Err(Error::Definiteness(format!(
            "φ-equation is singular (σ_min/σ_max = {:.3e})",
            lo / hi
        )));
    }
    let rhs = trace_free_coords(&crate::exterior::s20_project(&(xm * n)));
    let c = l
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("φ-equation is singular".into()))?;
    Ok(from_trace_free_coords(&c))
}

pub fn solve_phi(ctx: &GaugeContext, n: &Matrix3<f64>) -> Result<Sym3> {
    solve_phi_with(&ctx.x, n)
}

/// `ε_ijk a^i∧a^j∧Σ_k`.
fn cubic_term(sigma: &[TwoForm; 3], a: &AlgebraOneForm) -> f64 {
    let mut s = 0.0;
    for k in 0..3 {
        let (i, j) = cyclic(k);
        s += 2.0 * wedge22(&wedge11(&a[i], &a[j]), &sigma[k]);
    }
    s
}

fn minus_phi_sigma(d: &[TwoForm; 3], phi: &Sym3, sigma: &[TwoForm; 3]) -> [TwoForm; 3] {
    std::array::from_fn(|i| std::array::from_fn(|k| d[i][k] - (0..3).map(|j| phi.get(i, j) * sigma[j][k]).sum::<f64>()))
}

/// Second variation density of the Plebanski action at `pp` along `t`.
pub fn hessian_plebanski_integrand(pp: &PlebanskiPoint, t: &Tangent) -> f64 {
    let y = pp.y();
    let e = minus_phi_sigma(&t.a.d_a, &t.phi, &pp.sigma);
    let mut s = -cubic_term(&pp.sigma, &t.a.a);
    for i in 0..3 {
        s += 2.0 * wedge22(&e[i], &t.sigma[i]);
        for j in 0..3 {
            s -= y.get(i, j) * wedge22(&t.sigma[i], &t.sigma[j]);
        }
    }
    s
}

/// Hessian density of the pure connection action before gauge fixing.
pub fn hessian_pre_gauge_integrand(ctx: &GaugeContext, pj: &PerturbationJet) -> Result<f64> {
    let phi = solve_phi(ctx, &self_dual_coefficients(ctx, &pj.d_a))?;
    let e = minus_phi_sigma(&pj.d_a, &phi, &ctx.sigma);
    let mut s = -cubic_term(&ctx.sigma, &pj.a);
    for i in 0..3 {
        for j in 0..3 {
            s += ctx.x.get(i, j) * wedge22(&e[i], &e[j]);
        }
    }
    Ok(s)
}

/// Tolerances for accepting a jet as gauge fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeTolerance {
    pub horizontal: f64,
    pub vertical: f64,
}

impl Default for GaugeTolerance {
    fn default() -> Self {
        GaugeTolerance {
            horizontal: 1e-10,
            vertical: 1e-10,
        }
    }
}

/// `|a|² − X_ij ⟨(d⁻a)^i, (d⁻a)^j⟩`, a density against `μ`.
pub fn hessian_gauge_fixed_integrand(ctx: &GaugeContext, pj: &PerturbationJet, tol: GaugeTolerance) -> Result<f64> {
    let a2 = ctx.norm_sq(&pj.a);
    let pa = p_map(ctx, &pj.a);
    let hres = ctx.md.inner1(&pa, &pa).sqrt();
    if hres > tol.horizontal * (1.0 + a2.sqrt()) {
        return Err(Error::Precondition(format!(
            "perturbation is not horizontal (|p(a)| = {hres:.3e})"
        )));
    }
    let n = self_dual_coefficients(ctx, &pj.d_a);
    let vres = (n - n.transpose()).norm() + n.trace().abs();
    if vres > tol.vertical * (1.0 + n.norm()) {
        return Err(Error::Precondition(format!(
            "self-dual part is not symmetric trace-free (defect {vres:.3e})"
        )));
    }
    let dm: [TwoForm; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|k| pj.d_a[i][k] - (0..3).map(|j| n[(i, j)] * ctx.sigma[j][k]).sum::<f64>())
    });
    let gram = ctx.md.gram2();
    let mut s = a2;
    for i in 0..3 {
        for j in 0..3 {
            s -= ctx.x.get(i, j) * crate::exterior::inner_with(&gram, &dm[i], &dm[j]);
        }
    }
    Ok(s)
}

/// A jet satisfying the pointwise gauge conditions exactly: `a = Π(raw)`,
/// `d_A a = N Σ + C Σ⁻` with `N` symmetric trace-free.
pub fn synthetic_gauge_fixed_jet(
    ctx: &GaugeContext,
    raw: &AlgebraOneForm,
    n: &Sym3,
    asd: &[[f64; 3]; 3],
) -> Result<PerturbationJet> {
    let a = projection_pi(ctx, raw)?;
    let t = n.trace() / 3.0;
    let n = n.sub(&Sym3::identity().scaled(t));
    let minus = ctx.asd_frame()?;
    let d_a = std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            (0..3)
                .map(|j| n.get(i, j) * ctx.sigma[j][k] + asd[i][j] * minus[j][k])
                .sum::<f64>()
        })
    });
    Ok(PerturbationJet {
        a,
        d_a,
        provenance: Provenance::Synthetic,
    })
}

/// Random instance of `synthetic_gauge_fixed_jet` with standard normal inputs.
pub fn random_gauge_fixed_jet<R: Rng + ?Sized>(ctx: &GaugeContext, rng: &mut R) -> Result<PerturbationJet> {
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let raw: AlgebraOneForm = std::array::from_fn(|_| std::array::from_fn(|_| normal()));
    let n = Sym3(std::array::from_fn(|_| normal()));
    let asd: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| normal()));
    synthetic_gauge_fixed_jet(ctx, &raw, &n, &asd)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolCheck {
    /// `⟨α, Π(α ⊗ ξ)⟩`.
    pub direct: [f64; 3],
    /// `(ξ − Λ⁻¹ Y ξ)|α|²`.
    pub formula: [f64; 3],
    /// `dist(Λ, spec Y) / |Λ|`.
    pub gap: f64,
    pub elliptic: bool,
}

fn symbol_direct(ctx: &GaugeContext, alpha: &[f64; 4], xi: &[f64; 3]) -> Result<[f64; 3]> {
    let a: AlgebraOneForm = std::array::from_fn(|i| alpha.map(|v| v * xi[i]));
    let pa = projection_pi(ctx, &a)?;
    Ok(std::array::from_fn(|i| ctx.md.inner1(alpha, &pa[i])))
}

pub fn symbol_gap(ctx: &GaugeContext) -> f64 {
    ctx.y
        .eigenvalues()
        .iter()
        .map(|e| (ctx.lambda - e).abs())
        .fold(f64::INFINITY, f64::min)
        / ctx.lambda.abs()
}

pub fn symbol_check(ctx: &GaugeContext, alpha: &[f64; 4], xi: &[f64; 3]) -> Result<SymbolCheck> {
    let a2 = ctx.md.inner1(alpha, alpha);
    if !(a2 > 0.0) {
        return Err(Error::Argument("α must be non-zero".into()));
    }
    let direct = symbol_direct(ctx, alpha, xi)?;
    let formula =
        std::array::from_fn(|i| (xi[i] - (0..3).map(|j| ctx.y.get(i, j) * xi[j]).sum::<f64>() / ctx.lambda) * a2);
    let gap = symbol_gap(ctx);
    Ok(SymbolCheck {
        direct,
        formula,
        gap,
        elliptic: gap > 1e-12,
    })
}

/// The symbol `ξ ↦ ⟨α, Π(α⊗ξ)⟩ / |α|²` as a matrix, through the projection.
pub fn symbol_matrix(ctx: &GaugeContext, alpha: &[f64; 4]) -> Result<Matrix3<f64>> {
    let a2 = ctx.md.inner1(alpha, alpha);
    let mut m = Matrix3::zeros();
    for c in 0..3 {
        let mut xi = [0.0; 3];
        xi[c] = 1.0;
        let col = symbol_direct(ctx, alpha, &xi)?;
        for r in 0..3 {
            m[(r, c)] = col[r] / a2;
        }
    }
    Ok(m)
}

/// A critical background: connection coefficients and gauge context at every point.
pub trait Background: Sync {
    fn context(&self, x: &Point4) -> Result<GaugeContext>;
    fn coeffs(&self, x: &Point4) -> Result<ConnectionCoeffs>;
    fn check(&self, _x: &Point4, _margin: f64) -> Result<()> {
        Ok(())
    }
}

/// Constant coefficients everywhere.
#[derive(Clone, Copy, Debug)]
pub struct FrozenBackground {
    pub ctx: GaugeContext,
    pub a: ConnectionCoeffs,
}

impl Background for FrozenBackground {
    fn context(&self, _x: &Point4) -> Result<GaugeContext> {
        Ok(self.ctx)
    }

    fn coeffs(&self, _x: &Point4) -> Result<ConnectionCoeffs> {
        Ok(self.a)
    }
}

/// Levi-Civita connection on `Λ⁺` of a model Einstein metric.
#[derive(Clone, Copy, Debug)]
pub struct ModelBackground {
    pub model: ModelMetric,
    pub lambda: f64,
}

impl ModelBackground {
    pub fn new(model: ModelMetric) -> Self {
        ModelBackground {
            model,
            lambda: model.lambda(),
        }
    }

    pub fn pure_data(&self, x: &Point4) -> Result<PureConnectionData> {
        lc_pure_data(&self.model, x, self.lambda).map(|(_, d)| d)
    }
}

impl Background for ModelBackground {
    fn context(&self, x: &Point4) -> Result<GaugeContext> {
        GaugeContext::from_pure(&self.pure_data(x)?)
    }

    fn coeffs(&self, x: &Point4) -> Result<ConnectionCoeffs> {
        lc_connection_on_lambda_plus(&self.model, x, Scheme::Analytic)
    }

    fn check(&self, x: &Point4, margin: f64) -> Result<()> {
        self.model.chart().check_margin(x, margin)
    }
}

/// `(d_A^* b)^i = −(1/√g) ∂_μ(√g g^{μν} b^i_ν) + ε_ijk A^j_μ g^{μν} b^k_ν`, one difference.
pub fn covariant_codifferential(
    bg: &dyn Background,
    field: &(dyn Fn(&Point4) -> Result<AlgebraOneForm> + Sync),
    p: &Point4,
    h: f64,
) -> Result<[f64; 3]> {
    bg.check(p, fd::REACH * h)?;
    let flux = |x: [f64; 4]| -> [[f64; 4]; 3] {
        let run = || -> Result<[[f64; 4]; 3]> {
            let md = bg.context(&x)?.md;
            let b = field(&x)?;
            Ok(b.map(|bi| md.sharp(&bi).map(|v| v * md.sqrt_det)))
        };
        run().unwrap_or([[f64::NAN; 4]; 3])
    };
    let grad = fd::gradient(&flux, *p, h);
    let ctx = bg.context(p)?;
    let a = bg.coeffs(p)?;
    let b = field(p)?;
    let up = b.map(|bi| ctx.md.sharp(&bi));
    let out = std::array::from_fn(|i| {
        let div: f64 = (0..4).map(|mu| grad[mu][i][mu]).sum();
        let (j, k) = cyclic(i);
        let twist: f64 = (0..4).map(|mu| a[j][mu] * up[k][mu] - a[k][mu] * up[j][mu]).sum();
        -div / ctx.md.sqrt_det + twist
    });
    crate::error::finite_or(out.iter().all(|v: &f64| v.is_finite()), out, "codifferential")
}

/// Both sides of `d_A^* a = −⋆(ε_ijk Σ_j∧(d_A a)^k)` for a horizontal field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoulombCheck {
    pub lhs: [f64; 3],
    pub rhs: [f64; 3],
}

impl CoulombCheck {
    pub fn relative_gap(&self) -> f64 {
        let d = (0..3).map(|i| (self.lhs[i] - self.rhs[i]).powi(2)).sum::<f64>().sqrt();
        let n = self.lhs.iter().chain(&self.rhs).map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            0.0
        } else {
            d / n
        }
    }
}

pub fn coulomb_equivalence_check(
    bg: &dyn Background,
    field: &(dyn Fn(&Point4) -> Result<AlgebraOneForm> + Sync),
    p: &Point4,
    h: f64,
    tol: f64,
) -> Result<CoulombCheck> {
    let ctx = bg.context(p)?;
    let pj = field_perturbation(&bg.coeffs(p)?, field, p, h)?;
    let pa = p_map(&ctx, &pj.a);
    let hres = ctx.md.inner1(&pa, &pa).sqrt();
    if hres > tol * (1.0 + ctx.norm_sq(&pj.a).sqrt()) {
        return Err(Error::Precondition(format!(
            "field is not horizontal (|p(a)| = {hres:.3e})"
        )));
    }
    let v = gauge_residuals(&ctx, &pj).vertical;
    Ok(CoulombCheck {
        lhs: covariant_codifferential(bg, field, p, h)?,
        rhs: v.map(|x| -x / ctx.md.sqrt_det),
    })
}

/// A so(3)-valued function with its first partials, `(ξ, ∂_μ ξ^i)`.
pub type SectionField<'a> = dyn Fn(&Point4) -> ([f64; 3], [[f64; 4]; 3]) + Sync + 'a;

/// `(d_A^* Π d_A ξ)(p)`: exact `d_A ξ`, pointwise projection, one difference for `d_A^*`.
pub fn gauge_operator_apply(bg: &dyn Background, xi: &SectionField, p: &Point4, h: f64) -> Result<[f64; 3]> {
    let projected = |x: &Point4| -> Result<AlgebraOneForm> {
        let (v, dv) = xi(x);
        let d = covariant_d0(&bg.coeffs(x)?, &v, &dv);
        projection_pi(&bg.context(x)?, &d)
    };
    covariant_codifferential(bg, &projected, p, h)
}
