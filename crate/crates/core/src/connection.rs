//! SO(3)-connections given as coefficient fields, their curvature two-forms, the
//! definiteness test and the infinitesimal gauge action.
//!
//! Conventions: `(d_A ω)^i = dω^i − ε_ijk A^j ∧ ω^k` on so(3)-valued forms of any degree
//! and `F^i = dA^i − ½ ε_ijk A^j ∧ A^k`.

use nalgebra::Matrix3;
use num_dual::Dual64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curvature::{lc_coeffs, oriented_frames, Orientation};
use crate::error::{Error, Result};
use crate::exterior::{
    cyclic, exterior_d1, exterior_d2, interior2, wedge11, wedge12, wedge22, Sym3, ThreeForm, TwoForm,
};
use crate::fd;
use crate::gauge::{PerturbationJet, Provenance};
use crate::models::{ModelMetric, Point4, Scheme};
use crate::plebanski::conformal_metric_from_span;
use crate::scalar::Scalar;

/// `a[i][μ] = A^i_μ` in the basis `ê_i` of so(3).
pub type ConnectionCoeffs<D = f64> = [[D; 4]; 3];

/// `da[i][μ][ν] = ∂_μ A^i_ν`.
pub type CoeffDerivs = [[[f64; 4]; 4]; 3];

/// A connection on a chart, optionally with closed-form first derivatives.
pub trait ConnectionField: Sync {
    fn coeffs(&self, x: &Point4) -> ConnectionCoeffs;

    fn coeffs_jet(&self, _x: &Point4) -> Option<(ConnectionCoeffs, CoeffDerivs)> {
        None
    }

    /// Whether `x` is usable with stencils reaching `margin`.
    fn check(&self, _x: &Point4, _margin: f64) -> Result<()> {
        Ok(())
    }
}

/// Levi-Civita connection on Λ⁺ of a model metric, in the `sd_frame` trivialisation.
#[derive(Clone, Copy, Debug)]
pub struct LeviCivitaField {
    pub model: ModelMetric,
}

impl ConnectionField for LeviCivitaField {
    fn coeffs(&self, x: &Point4) -> ConnectionCoeffs {
        lc_coeffs(&self.model, x)
    }

    fn coeffs_jet(&self, x: &Point4) -> Option<(ConnectionCoeffs, CoeffDerivs)> {
        let mut da = [[[0.0; 4]; 4]; 3];
        let mut a = [[0.0; 4]; 3];
        for mu in 0..4 {
            let xd: [Dual64; 4] = std::array::from_fn(|i| Dual64::new(x[i], if i == mu { 1.0 } else { 0.0 }));
            let ad = lc_coeffs(&self.model, &xd);
            for i in 0..3 {
                for nu in 0..4 {
                    da[i][mu][nu] = ad[i][nu].eps;
                    a[i][nu] = ad[i][nu].re;
                }
            }
        }
        Some((a, da))
    }

    fn check(&self, x: &Point4, margin: f64) -> Result<()> {
        self.model.chart().check_margin(x, margin)
    }
}

/// A connection given by a plain closure; derivatives by finite differences.
pub struct FnField<F>(pub F);

impl<F: Fn(&Point4) -> ConnectionCoeffs + Sync> ConnectionField for FnField<F> {
    fn coeffs(&self, x: &Point4) -> ConnectionCoeffs {
        (self.0)(x)
    }
}

/// A connection whose coefficients are generic over the scalar type, so closed-form
/// derivatives come from forward mode.
pub trait GenericConnection: Sync {
    fn eval<D: Scalar>(&self, x: &[D; 4]) -> ConnectionCoeffs<D>;
}

pub struct Exact<T>(pub T);

impl<T: GenericConnection> ConnectionField for Exact<T> {
    fn coeffs(&self, x: &Point4) -> ConnectionCoeffs {
        self.0.eval(x)
    }

    fn coeffs_jet(&self, x: &Point4) -> Option<(ConnectionCoeffs, CoeffDerivs)> {
        let mut da = [[[0.0; 4]; 4]; 3];
        for mu in 0..4 {
            let xd: [Dual64; 4] = std::array::from_fn(|i| Dual64::new(x[i], if i == mu { 1.0 } else { 0.0 }));
            let ad = self.0.eval(&xd);
            for i in 0..3 {
                for nu in 0..4 {
                    da[i][mu][nu] = ad[i][nu].eps;
                }
            }
        }
        Some((self.0.eval(x), da))
    }
}

/// Connection coefficients, their first partials and the curvature two-forms at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectionJet {
    pub point: Point4,
    pub a: ConnectionCoeffs,
    pub da: CoeffDerivs,
    pub f: [TwoForm; 3],
    /// `df[μ][i] = ∂_μ F^i`, when requested.
    pub df: Option<[[TwoForm; 3]; 4]>,
}

/// `F^i = dA^i − ½ ε_ijk A^j∧A^k`.
pub fn curvature_from(a: &ConnectionCoeffs, da: &CoeffDerivs) -> [TwoForm; 3] {
    std::array::from_fn(|i| {
        let (j, k) = cyclic(i);
        let d = exterior_d1(&da[i]);
        let q = wedge11(&a[j], &a[k]);
        std::array::from_fn(|n| d[n] - q[n])
    })
}

fn coeff_jet(field: &dyn ConnectionField, p: &Point4, scheme: Scheme) -> Result<(ConnectionCoeffs, CoeffDerivs)> {
    match scheme {
        Scheme::Analytic => {
            field.check(p, 0.0)?;
            field
                .coeffs_jet(p)
                .ok_or_else(|| Error::Argument("field has no closed-form derivatives".into()))
        }
        Scheme::FiniteDifference(h) => {
            field.check(p, fd::REACH * h)?;
            let f = |x: [f64; 4]| field.coeffs(&x);
            let g = fd::gradient(&f, *p, h);
            let mut da = [[[0.0; 4]; 4]; 3];
            for mu in 0..4 {
                for i in 0..3 {
                    da[i][mu] = g[mu][i];
                }
            }
            Ok((f(*p), da))
        }
    }
}

/// Curvature of the connection at `p`.
pub fn curvature_forms(field: &dyn ConnectionField, p: &Point4, scheme: Scheme) -> Result<ConnectionJet> {
    let (a, da) = coeff_jet(field, p, scheme)?;
    let f = curvature_from(&a, &da);
    let jet = ConnectionJet {
        point: *p,
        a,
        da,
        f,
        df: None,
    };
    if !(a.iter().flatten().all(|v| v.is_finite()) && f.iter().flatten().all(|v| v.is_finite())) {
        return Err(Error::Numeric(format!("non-finite connection jet at {p:?}")));
    }
    Ok(jet)
}

/// As `curvature_forms`, also filling `df` by differencing the curvature with step `h`.
pub fn curvature_forms_with_derivative(
    field: &dyn ConnectionField,
    p: &Point4,
    scheme: Scheme,
    h: f64,
) -> Result<ConnectionJet> {
    let mut jet = curvature_forms(field, p, scheme)?;
    field.check(p, fd::REACH * h)?;
    let inner = match scheme {
        Scheme::Analytic => Scheme::Analytic,
        Scheme::FiniteDifference(_) => Scheme::FiniteDifference(h),
    };
    let fcurv = |x: [f64; 4]| -> [TwoForm; 3] {
        coeff_jet(field, &x, inner)
            .map(|(a, da)| curvature_from(&a, &da))
            .unwrap_or([[f64::NAN; 6]; 3])
    };
    let df = fd::gradient(&fcurv, *p, h);
    if !df.iter().flatten().flatten().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite curvature derivative".into()));
    }
    jet.df = Some(df);
    Ok(jet)
}

/// `(d_A ω)^i` for so(3)-valued two-forms with partials `dw[μ][i] = ∂_μ ω^i`.
pub fn covariant_d2(a: &ConnectionCoeffs, w: &[TwoForm; 3], dw: &[[TwoForm; 3]; 4]) -> [ThreeForm; 3] {
    std::array::from_fn(|i| {
        let (j, k) = cyclic(i);
        let partials: [TwoForm; 4] = std::array::from_fn(|mu| dw[mu][i]);
        let d = exterior_d2(&partials);
        let p = wedge12(&a[j], &w[k]);
        let q = wedge12(&a[k], &w[j]);
        std::array::from_fn(|m| d[m] - p[m] + q[m])
    })
}

/// `(d_A b)^i` for so(3)-valued one-forms with `db[i][μ][ν] = ∂_μ b^i_ν`.
pub fn covariant_d1(a: &ConnectionCoeffs, b: &[[f64; 4]; 3], db: &[[[f64; 4]; 4]; 3]) -> [TwoForm; 3] {
    std::array::from_fn(|i| {
        let (j, k) = cyclic(i);
        let d = exterior_d1(&db[i]);
        let p = wedge11(&a[j], &b[k]);
        let q = wedge11(&a[k], &b[j]);
        std::array::from_fn(|n| d[n] - p[n] + q[n])
    })
}

/// `(d_A ξ)^i = dξ^i − ε_ijk A^j ξ^k` for a section with `dxi[i][μ] = ∂_μ ξ^i`.
pub fn covariant_d0(a: &ConnectionCoeffs, xi: &[f64; 3], dxi: &[[f64; 4]; 3]) -> [[f64; 4]; 3] {
    std::array::from_fn(|i| {
        let (j, k) = cyclic(i);
        std::array::from_fn(|mu| dxi[i][mu] - a[j][mu] * xi[k] + a[k][mu] * xi[j])
    })
}

/// `(d_A F)^i`, which vanishes identically.
pub fn bianchi_residual(jet: &ConnectionJet) -> Result<[ThreeForm; 3]> {
    let df = jet
        .df
        .ok_or_else(|| Error::Precondition("curvature derivative not computed".into()))?;
    Ok(covariant_d2(&jet.a, &jet.f, &df))
}

/// `Q_ij = F^i∧F^j / μ₀` for a reference four-form coefficient `μ₀`.
pub fn wedge_matrix(f: &[TwoForm; 3], mu0: f64) -> Sym3 {
    let w = |i: usize, j: usize| wedge22(&f[i], &f[j]) / mu0;
    Sym3([w(0, 0), w(1, 1), w(2, 2), w(0, 1), w(0, 2), w(1, 2)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Positive,
    Negative,
    /// Indefinite or degenerate wedge matrix.
    Indefinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessReport {
    /// Wedge matrix relative to `dx¹²³⁴`.
    pub q: Sym3,
    pub classification: Classification,
    /// Smallest `|eigenvalue|` of `Q` divided by the largest.
    pub min_abs_eigenvalue: f64,
    /// Orientation of the coordinate four-form for which span(F) is the self-dual bundle;
    /// `None` when indefinite.
    pub base_orientation: Option<Orientation>,
}

impl DefinitenessReport {
    pub fn sign(&self) -> Option<f64> {
        match self.classification {
            Classification::Positive => Some(1.0),
            Classification::Negative => Some(-1.0),
            Classification::Indefinite => None,
        }
    }
}

/// Spectral definiteness test with the sign read off from the orientation of `e_i ↦ F^i`.
pub fn classify_definite(jet: &ConnectionJet, tol: f64) -> DefinitenessReport {
    let q = wedge_matrix(&jet.f, 1.0);
    let e = q.eigenvalues();
    let scale = e[0].abs().max(e[2].abs());
    let min_abs = e.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let ratio = if scale > 0.0 { min_abs / scale } else { 0.0 };
    let indefinite = DefinitenessReport {
        q,
        classification: Classification::Indefinite,
        min_abs_eigenvalue: ratio,
        base_orientation: None,
    };
    if !(ratio > tol) || e[0] * e[2] < 0.0 {
        return indefinite;
    }
    let base = if e[0] > 0.0 {
        Orientation::Positive
    } else {
        Orientation::Negative
    };
    let Ok(g) = conformal_metric_from_span(&jet.f) else {
        return indefinite;
    };
    let Ok((frame, _)) = oriented_frames(&g, base) else {
        return indefinite;
    };
    // F^i = M_ij Σ_j with M_ij = F^i∧Σ_j / Σ_j∧Σ_j
    let m = Matrix3::from_fn(|i, j| wedge22(&jet.f[i], &frame[j]) / wedge22(&frame[j], &frame[j]));
    let classification = if m.determinant() > 0.0 {
        Classification::Positive
    } else {
        Classification::Negative
    };
    DefinitenessReport {
        q,
        classification,
        min_abs_eigenvalue: ratio,
        base_orientation: Some(base),
    }
}

/// Outcome of the sampling oracle for definiteness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledDefiniteness {
    pub definite: bool,
    /// Smallest `‖F(u,v)‖ / ‖F‖` seen over unit orthonormal pairs.
    pub min_ratio: f64,
    /// An orthonormal pair with (numerically) vanishing `F(u, v)`, if one was found.
    pub witness: Option<([f64; 4], [f64; 4])>,
}

/// Orthonormal frame of `u^⊥` from quaternion multiplication, continuous in `u`.
fn complement_frame(u: &[f64; 4]) -> [[f64; 4]; 3] {
    let [a, b, c, d] = *u;
    [[-b, a, d, -c], [-c, -d, a, b], [-d, c, -b, a]]
}

/// `B[i][m] = F^i(u, e_m)` for the complement frame `e_m` of `u`.
fn restricted(f: &[TwoForm; 3], u: &[f64; 4]) -> (Matrix3<f64>, [[f64; 4]; 3]) {
    let frame = complement_frame(u);
    let iu: [[f64; 4]; 3] = std::array::from_fn(|i| interior2(u, &f[i]));
    let b = Matrix3::from_fn(|i, m| (0..4).map(|nu| iu[i][nu] * frame[m][nu]).sum());
    (b, frame)
}

fn smallest_direction(b: &Matrix3<f64>, frame: &[[f64; 4]; 3]) -> (f64, [f64; 4]) {
    let svd = b.svd(false, true);
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
    let vt = svd.v_t.expect("requested");
    let v = std::array::from_fn(|nu| (0..3).map(|m| vt[(k, m)] * frame[m][nu]).sum());
    (s, v)
}

fn normalized(x: [f64; 4]) -> [f64; 4] {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.map(|v| v / n)
}

/// Samples unit directions `u` and checks whether `F(u, ·)` is injective on `u^⊥`.
/// A sign change of `det F(u, ·)` between samples is bisected to an explicit witness.
pub fn sample_definiteness<R: Rng + ?Sized>(f: &[TwoForm; 3], n: usize, tol: f64, rng: &mut R) -> SampledDefiniteness {
    let norm = f.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return SampledDefiniteness {
            definite: false,
            min_ratio: 0.0,
            witness: Some(([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0])),
        };
    }
    let mut best = (f64::INFINITY, [0.0; 4], [0.0; 4]);
    let mut pos: Option<[f64; 4]> = None;
    let mut neg: Option<[f64; 4]> = None;
    for _ in 0..n.max(1) {
        let u = normalized(std::array::from_fn(|_| rng.sample(StandardNormal)));
        let (b, frame) = restricted(f, &u);
        let (s, v) = smallest_direction(&b, &frame);
        if s < best.0 {
            best = (s, u, v);
        }
        let det = b.determinant();
        if det > 0.0 {
            pos.get_or_insert(u);
        } else if det < 0.0 {
            neg.get_or_insert(u);
        }
    }
    if let (Some(up), Some(un)) = (pos, neg) {
        // det B_u changes sign along the arc, so some u on it has a kernel
        let (mut lo, mut hi) = (0.0, 1.0);
        let at = |t: f64| normalized(std::array::from_fn(|k| (1.0 - t) * up[k] + t * un[k]));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if restricted(f, &at(mid)).0.determinant() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = at(0.5 * (lo + hi));
        let (b, frame) = restricted(f, &u);
        let (s, v) = smallest_direction(&b, &frame);
        if s < best.0 {
            best = (s, u, v);
        }
        return SampledDefiniteness {
            definite: false,
            min_ratio: best.0 / norm,
            witness: Some((best.1, best.2)),
        };
    }
    let ratio = best.0 / norm;
    SampledDefiniteness {
        definite: ratio > tol,
        min_ratio: ratio,
        witness: (ratio <= tol).then_some((best.1, best.2)),
    }
}

/// True iff no sampled pair of independent vectors annihilates the curvature.
pub fn definiteness_sampled<R: Rng + ?Sized>(jet: &ConnectionJet, n: usize, tol: f64, rng: &mut R) -> bool {
    sample_definiteness(&jet.f, n, tol, rng).definite
}

/// A section of so(3) with first and second partials.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SectionJet {
    pub xi: [f64; 3],
    /// `dxi[i][μ] = ∂_μ ξ^i`.
    pub dxi: [[f64; 4]; 3],
    /// `ddxi[i][μ][ν] = ∂_μ ∂_ν ξ^i`.
    pub ddxi: [[[f64; 4]; 4]; 3],
}

/// A vector field with first partials.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VectorJet {
    pub v: [f64; 4],
    /// `dv[μ][ν] = ∂_μ v^ν`.
    pub dv: [[f64; 4]; 4],
}

/// `a = d_A ξ + ι_v F` together with `d_A a`, assembled from jets.
pub fn infinitesimal_gauge(jet: &ConnectionJet, xi: &SectionJet, v: &VectorJet) -> Result<PerturbationJet> {
    let df = jet
        .df
        .ok_or_else(|| Error::Precondition("infinitesimal gauge action needs ∂F".into()))?;
    let a = &jet.a;
    let dax = covariant_d0(a, &xi.xi, &xi.dxi);
    let ivf: [[f64; 4]; 3] = std::array::from_fn(|i| interior2(&v.v, &jet.f[i]));
    let pert: [[f64; 4]; 3] = std::array::from_fn(|i| std::array::from_fn(|nu| dax[i][nu] + ivf[i][nu]));
    // db[i][μ][ν] = ∂_μ a^i_ν
    let mut db = [[[0.0; 4]; 4]; 3];
    for i in 0..3 {
        let (j, k) = cyclic(i);
        for mu in 0..4 {
            let dvf = interior2(&v.dv[mu], &jet.f[i]);
            let vdf = interior2(&v.v, &df[mu][i]);
            for nu in 0..4 {
                let gauge = xi.ddxi[i][mu][nu] - jet.da[j][mu][nu] * xi.xi[k] - a[j][nu] * xi.dxi[k][mu]
                    + jet.da[k][mu][nu] * xi.xi[j]
                    + a[k][nu] * xi.dxi[j][mu];
                db[i][mu][nu] = gauge + dvf[nu] + vdf[nu];
            }
        }
    }
    Ok(PerturbationJet {
        a: pert,
        d_a: covariant_d1(a, &pert, &db),
        provenance: Provenance::FieldDerived,
    })
}
