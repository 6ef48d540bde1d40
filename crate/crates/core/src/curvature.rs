//! Levi-Civita curvature of a metric jet and its chiral block decomposition.

use num_dual::Dual;
use serde::{Deserialize, Serialize};

use crate::connection::ConnectionCoeffs;
use crate::error::{Error, Result};
use crate::exterior::{
    asd_frame, epsilon, inner_with, matrix_to_two, reflect_metric, reflect_two, sd_frame, two_to_matrix, wedge11,
    MetricData, Sym3, TwoForm,
};
use crate::fd;
use crate::models::{MetricJet, ModelMetric, Point4, Scheme};
use crate::scalar::{inv_det4, Mat4, Scalar};

/// `gamma[k][i][j] = Γ^k_{ij}`.
pub type Christoffel<D = f64> = [[[D; 4]; 4]; 4];

fn christoffel_from<D: Scalar>(inv: &Mat4<D>, dg: &[Mat4<D>; 4]) -> Christoffel<D> {
    let mut lowered = [[[D::zero(); 4]; 4]; 4];
    for l in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                lowered[l][i][j] = (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]) * 0.5;
            }
        }
    }
    let mut out = [[[D::zero(); 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut s = D::zero();
                for l in 0..4 {
                    s += inv[k][l] * lowered[l][i][j];
                }
                out[k][i][j] = s;
            }
        }
    }
    out
}

fn checked_inverse(g: &Mat4) -> Result<Mat4> {
    let (inv, det) = inv_det4(g);
    if !(det > 0.0 && det.is_finite()) {
        return Err(Error::Numeric(format!("metric not positive definite (det {det})")));
    }
    Ok(inv)
}

pub fn christoffel(jet: &MetricJet) -> Result<Christoffel> {
    let inv = checked_inverse(&jet.g)?;
    Ok(christoffel_from(&inv, &jet.dg))
}

/// Fully covariant Riemann tensor `R_{ijkl}`, normalised so that the unit sphere has
/// `R_{ijkl} = g_ik g_jl − g_il g_jk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannTensor {
    pub r: [[[[f64; 4]; 4]; 4]; 4],
    pub g: Mat4,
}

pub fn riemann(jet: &MetricJet) -> Result<RiemannTensor> {
    let inv = checked_inverse(&jet.g)?;
    let gamma = christoffel_from(&inv, &jet.dg);
    // dgamma[m][k][i][j] = ∂_m Γ^k_ij
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        let mut dinv = [[0.0; 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        s -= inv[k][a] * jet.dg[m][a][b] * inv[b][l];
                    }
                }
                dinv[k][l] = s;
            }
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        let low = 0.5 * (jet.dg[i][l][j] + jet.dg[j][l][i] - jet.dg[l][i][j]);
                        let dlow = 0.5 * (jet.ddg[m][i][l][j] + jet.ddg[m][j][l][i] - jet.ddg[m][l][i][j]);
                        s += dinv[k][l] * low + inv[k][l] * dlow;
                    }
                    dgamma[m][k][i][j] = s;
                }
            }
        }
    }
    // up[rho][sigma][mu][nu] = R^ρ_{σμν}
    let mut up = [[[[0.0; 4]; 4]; 4]; 4];
    for rho in 0..4 {
        for sg in 0..4 {
            for mu in 0..4 {
                for nu in 0..4 {
                    let mut s = dgamma[mu][rho][nu][sg] - dgamma[nu][rho][mu][sg];
                    for l in 0..4 {
                        s += gamma[rho][mu][l] * gamma[l][nu][sg] - gamma[rho][nu][l] * gamma[l][mu][sg];
                    }
                    up[rho][sg][mu][nu] = s;
                }
            }
        }
    }
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    r[i][j][k][l] = (0..4).map(|p| jet.g[k][p] * up[p][l][i][j]).sum();
                }
            }
        }
    }
    if r.iter().flatten().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite curvature".into()));
    }
    Ok(RiemannTensor { r, g: jet.g })
}

impl RiemannTensor {
    /// Largest violation of the antisymmetries, pair symmetry and first Bianchi identity.
    pub fn symmetry_defect(&self) -> f64 {
        let r = &self.r;
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        worst = worst
                            .max((r[i][j][k][l] + r[j][i][k][l]).abs())
                            .max((r[i][j][k][l] + r[i][j][l][k]).abs())
                            .max((r[i][j][k][l] - r[k][l][i][j]).abs())
                            .max((r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l]).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn ricci(&self) -> Mat4 {
        let inv = inv_det4(&self.g).0;
        std::array::from_fn(|j| {
            std::array::from_fn(|l| {
                let mut s = 0.0;
                for i in 0..4 {
                    for k in 0..4 {
                        s += inv[i][k] * self.r[i][j][k][l];
                    }
                }
                s
            })
        })
    }

    pub fn scalar(&self) -> f64 {
        let inv = inv_det4(&self.g).0;
        let ric = self.ricci();
        (0..4)
            .flat_map(|j| (0..4).map(move |l| (j, l)))
            .map(|(j, l)| inv[j][l] * ric[j][l])
            .sum()
    }

    /// Norm of the trace-free Ricci tensor.
    pub fn traceless_ricci_norm(&self) -> f64 {
        let inv = inv_det4(&self.g).0;
        let ric = self.ricci();
        let quarter = self.scalar() / 4.0;
        let t: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| ric[i][j] - quarter * self.g[i][j]));
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        s += inv[a][cc] * inv[b][d] * t[a][b] * t[cc][d];
                    }
                }
            }
        }
        s.max(0.0).sqrt()
    }

    /// `⟨Rm ω, η⟩ = ¼ R_{ijkl} ω^{ij} η^{kl}`.
    pub fn operator_pairing(&self, w: &TwoForm, v: &TwoForm) -> f64 {
        let inv = inv_det4(&self.g).0;
        let raise = |f: &TwoForm| -> Mat4 {
            let m = two_to_matrix(f);
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut s = 0.0;
                    for a in 0..4 {
                        for b in 0..4 {
                            s += inv[i][a] * m[a][b] * inv[b][j];
                        }
                    }
                    s
                })
            })
        };
        let (wu, vu) = (raise(w), raise(v));
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        s += self.r[i][j][k][l] * wu[i][j] * vu[k][l];
                    }
                }
            }
        }
        0.25 * s
    }

    /// Sectional curvature of span(u, v) straight from the tensor.
    pub fn sectional_direct(&self, u: &[f64; 4], v: &[f64; 4]) -> f64 {
        let mut num = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        num += self.r[i][j][k][l] * u[i] * v[j] * u[k] * v[l];
                    }
                }
            }
        }
        let g = |a: &[f64; 4], b: &[f64; 4]| -> f64 {
            (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| self.g[i][j] * a[i] * b[j])
                .sum()
        };
        num / (g(u, u) * g(v, v) - g(u, v).powi(2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// Oriented frames of `(Λ⁺, Λ⁻)` for the given orientation of the coordinate four-form.
/// The negative orientation is handled by conjugating with the reflection `x¹ ↦ −x¹`.
pub fn oriented_frames(g: &Mat4, orientation: Orientation) -> Result<([TwoForm; 3], [TwoForm; 3])> {
    match orientation {
        Orientation::Positive => Ok((sd_frame(g)?.sigma, asd_frame(g)?.sigma)),
        Orientation::Negative => {
            let rg = reflect_metric(g);
            let p = sd_frame(&rg)?.sigma.map(|w| reflect_two(&w));
            let m = asd_frame(&rg)?.sigma.map(|w| reflect_two(&w));
            Ok((p, m))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiralDecomp {
    pub rplus: Sym3,
    pub rminus: Sym3,
    /// `c[a][b] = ⟨Rm Σ⁺_a, Σ⁻_b⟩/2`.
    pub c: [[f64; 3]; 3],
    pub scalar: f64,
    pub orientation: Orientation,
}

impl ChiralDecomp {
    pub fn c_norm(&self) -> f64 {
        self.c.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn chiral_decompose(rm: &RiemannTensor, orientation: Orientation) -> Result<ChiralDecomp> {
    let (sp, sm) = oriented_frames(&rm.g, orientation)?;
    let block = |a: &[TwoForm; 3], b: &[TwoForm; 3]| -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * rm.operator_pairing(&a[i], &b[j])))
    };
    Ok(ChiralDecomp {
        rplus: Sym3::from_rows(&block(&sp, &sp)),
        rminus: Sym3::from_rows(&block(&sm, &sm)),
        c: block(&sp, &sm),
        scalar: rm.scalar(),
        orientation,
    })
}

/// Sectional curvature from the chiral blocks; valid for Einstein metrics only.
pub fn sectional(decomp: &ChiralDecomp, g: &Mat4, u: &[f64; 4], v: &[f64; 4], tol: f64) -> Result<f64> {
    let scale = 1.0 + decomp.rplus.norm() + decomp.rminus.norm();
    if decomp.c_norm() > tol * scale {
        return Err(Error::Precondition(format!(
            "curvature block C has norm {:.3e}; the metric is not Einstein",
            decomp.c_norm()
        )));
    }
    let md = MetricData::new(g);
    let ip = |a: &[f64; 4], b: &[f64; 4]| md.inner1(&md.flat(a), &md.flat(b));
    let defect = (ip(u, u) - 1.0).abs().max((ip(v, v) - 1.0).abs()).max(ip(u, v).abs());
    if defect > 1e-8 {
        return Err(Error::Argument(format!(
            "u, v are not orthonormal (defect {defect:.3e})"
        )));
    }
    let w = wedge11(&md.flat(u), &md.flat(v));
    let (sp, sm) = oriented_frames(g, decomp.orientation)?;
    let gram = md.gram2();
    let quad = |frame: &[TwoForm; 3], r: &Sym3| -> f64 {
        let coef: [f64; 3] = std::array::from_fn(|a| 0.5 * inner_with(&gram, &w, &frame[a]));
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += coef[a] * r.get(a, b) * coef[b];
            }
        }
        2.0 * s
    };
    Ok(quad(&sp, &decomp.rplus) + quad(&sm, &decomp.rminus))
}

/// Levi-Civita connection on Λ⁺ in the `sd_frame` trivialisation, from the metric and frame
/// with their first partials. `dg[μ] = ∂_μ g`, `ds[μ][i] = ∂_μ Σ_i`.
pub fn lc_from_frame<D: Scalar>(
    g: &Mat4<D>,
    dg: &[Mat4<D>; 4],
    sigma: &[TwoForm<D>; 3],
    ds: &[[TwoForm<D>; 3]; 4],
) -> ConnectionCoeffs<D> {
    let md = MetricData::new(g);
    let gamma = christoffel_from(&md.inv, dg);
    let gram = md.gram2();
    let sm = sigma.map(|w| two_to_matrix(&w));
    let mut a = [[D::zero(); 4]; 3];
    for mu in 0..4 {
        // nabla[i] = ∇_μ Σ_i
        let nabla: [TwoForm<D>; 3] = std::array::from_fn(|i| {
            let d = two_to_matrix(&ds[mu][i]);
            let m: Mat4<D> = std::array::from_fn(|al| {
                std::array::from_fn(|be| {
                    let mut s = d[al][be];
                    for l in 0..4 {
                        s -= gamma[l][mu][al] * sm[i][l][be] + gamma[l][mu][be] * sm[i][al][l];
                    }
                    s
                })
            });
            matrix_to_two(&m)
        });
        for j in 0..3 {
            let mut s = D::zero();
            for i in 0..3 {
                for k in 0..3 {
                    let e = epsilon(i, j, k);
                    if e != 0.0 {
                        s += inner_with(&gram, &nabla[i], &sigma[k]) * (0.25 * e);
                    }
                }
            }
            a[j][mu] = s;
        }
    }
    a
}

/// LC connection coefficients at a (possibly dual-valued) point, differentiating the frame
/// by one more level of forward mode.
pub fn lc_coeffs<D: Scalar>(model: &ModelMetric, x: &[D; 4]) -> ConnectionCoeffs<D> {
    let mut g = [[D::zero(); 4]; 4];
    let mut sigma = [[D::zero(); 6]; 3];
    let mut dg = [[[D::zero(); 4]; 4]; 4];
    let mut ds = [[[D::zero(); 6]; 3]; 4];
    for mu in 0..4 {
        let xd: [Dual<D>; 4] = std::array::from_fn(|i| Dual::new(x[i], if i == mu { D::one() } else { D::zero() }));
        let gd = model.metric(&xd);
        let frame = sd_frame(&gd)
            .map(|f| f.sigma)
            .unwrap_or([[Dual::from_re(D::zero()); 6]; 3]);
        dg[mu] = gd.map(|r| r.map(|v| v.eps));
        ds[mu] = frame.map(|w| w.map(|v| v.eps));
        if mu == 0 {
            g = gd.map(|r| r.map(|v| v.re));
            sigma = frame.map(|w| w.map(|v| v.re));
        }
    }
    lc_from_frame(&g, &dg, &sigma, &ds)
}

/// Levi-Civita connection on Λ⁺ at `p`.
pub fn lc_connection_on_lambda_plus(model: &ModelMetric, p: &Point4, scheme: Scheme) -> Result<ConnectionCoeffs> {
    let chart = model.chart();
    let a = match scheme {
        Scheme::Analytic => {
            chart.check(p)?;
            lc_coeffs(model, p)
        }
        Scheme::FiniteDifference(h) => {
            chart.check_margin(p, fd::REACH * h)?;
            let frame = |x: [f64; 4]| -> [TwoForm; 3] {
                sd_frame(&model.metric(&x))
                    .map(|f| f.sigma)
                    .unwrap_or([[f64::NAN; 6]; 3])
            };
            let metric = |x: [f64; 4]| model.metric(&x);
            let g = metric(*p);
            lc_from_frame(
                &g,
                &fd::gradient(&metric, *p, h),
                &frame(*p),
                &fd::gradient(&frame, *p, h),
            )
        }
    };
    crate::error::finite_or(a.iter().flatten().all(|v| v.is_finite()), a, "connection coefficients")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jet(kind: ModelKind, p: &Point4) -> MetricJet {
        ModelMetric::new(kind).metric_jet(p, Scheme::Analytic).unwrap()
    }

    fn decomp(model: &ModelMetric, p: &Point4, o: Orientation) -> ChiralDecomp {
        let rm = riemann(&model.metric_jet(p, Scheme::Analytic).unwrap()).unwrap();
        chiral_decompose(&rm, o).unwrap()
    }

    fn assert_sym_close(a: &Sym3, b: &Sym3, tol: f64) {
        assert!(a.sub(b).norm() <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn flat_and_origin_christoffels_vanish() {
        let g = christoffel(&jet(ModelKind::Flat, &[0.1, 0.2, 0.3, 0.4])).unwrap();
        assert!(g.iter().flatten().flatten().all(|v| *v == 0.0));
        let g = christoffel(&jet(ModelKind::Sphere4, &[0.0; 4])).unwrap();
        assert!(g.iter().flatten().flatten().all(|v| *v == 0.0));
    }

    /// For g = e^{2u} δ: Γ^k_ij = δ_ki ∂_j u + δ_kj ∂_i u − δ_ij ∂_k u.
    #[test]
    fn hyperbolic_christoffels_match_conformal_formula() {
        let p = [0.2, 0.0, 0.0, 0.0];
        let gam = christoffel(&jet(ModelKind::Hyperbolic4, &p)).unwrap();
        // u = ln 2 − ln(1 − r²), ∂_i u = 2 x_i / (1 − r²)
        let du: [f64; 4] = std::array::from_fn(|i| 2.0 * p[i] / (1.0 - 0.04));
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let want = d(k, i) * du[j] + d(k, j) * du[i] - d(i, j) * du[k];
                    assert!((gam[k][i][j] - want).abs() < 1e-13);
                }
            }
        }
    }

    fn constant_curvature_defect(rm: &RiemannTensor, kappa: f64) -> f64 {
        let g = rm.g;
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let want = kappa * (g[i][k] * g[j][l] - g[i][l] * g[j][k]);
                        worst = worst.max((rm.r[i][j][k][l] - want).abs());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn space_forms_have_constant_curvature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (kind, kappa) in [
            (ModelKind::Sphere4, 1.0),
            (ModelKind::Hyperbolic4, -1.0),
            (ModelKind::Flat, 0.0),
        ] {
            let m = ModelMetric::new(kind);
            for _ in 0..20 {
                let p = m.sample_point(&mut rng);
                let rm = riemann(&jet(kind, &p)).unwrap();
                let scale = rm.g[0][0].powi(2);
                assert!(constant_curvature_defect(&rm, kappa) < 1e-9 * scale, "{kind} {p:?}");
                assert!(rm.symmetry_defect() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn model_blocks() {
        let p = [0.3, -0.2, 0.5, 0.1];
        let s = decomp(&ModelMetric::new(ModelKind::Sphere4), &p, Orientation::Positive);
        assert_sym_close(&s.rplus, &Sym3::identity(), 1e-9);
        assert_sym_close(&s.rminus, &Sym3::identity(), 1e-9);
        assert!(s.c_norm() < 1e-9 && (s.scalar - 12.0).abs() < 1e-9);
        let h = decomp(&ModelMetric::new(ModelKind::Hyperbolic4), &p, Orientation::Positive);
        assert_sym_close(&h.rplus, &Sym3::identity().scaled(-1.0), 1e-9);
        assert!((h.scalar + 12.0).abs() < 1e-9);
        let q = decomp(&ModelMetric::new(ModelKind::S2xS2), &p, Orientation::Positive);
        let e = q.rplus.eigenvalues();
        assert!((e[0]).abs() < 1e-9 && e[1].abs() < 1e-9 && (e[2] - 1.0).abs() < 1e-9);
        assert!(q.c_norm() < 1e-9 && (q.scalar - 4.0).abs() < 1e-9);
        let cp = decomp(&ModelMetric::new(ModelKind::Cp2), &p, Orientation::Positive);
        let e = cp.rplus.eigenvalues();
        assert!(
            e[0].abs() < 1e-9 && e[1].abs() < 1e-9 && (e[2] - 6.0).abs() < 1e-9,
            "{e:?}"
        );
        assert_sym_close(&cp.rminus, &Sym3::identity().scaled(2.0), 1e-9);
        assert!((cp.scalar - 24.0).abs() < 1e-9);
    }

    #[test]
    fn orientation_reversal_swaps_blocks() {
        let p = [0.3, -0.2, 0.5, 0.1];
        let m = ModelMetric::new(ModelKind::Cp2);
        let pos = decomp(&m, &p, Orientation::Positive);
        let neg = decomp(&m, &p, Orientation::Negative);
        assert_sym_close(&neg.rplus, &pos.rminus, 1e-9);
        assert_sym_close(&neg.rminus, &pos.rplus, 1e-9);
        // the reflected model read with the standard orientation
        let refl = m.reversed();
        let q = [-p[0], p[1], p[2], p[3]];
        let other = decomp(&refl, &q, Orientation::Positive);
        assert_sym_close(&other.rplus, &neg.rplus, 1e-9);
        assert_sym_close(&other.rminus, &neg.rminus, 1e-9);
    }

    #[test]
    fn sectional_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (kind, want) in [
            (ModelKind::Sphere4, 1.0),
            (ModelKind::Hyperbolic4, -1.0),
            (ModelKind::Flat, 0.0),
        ] {
            let m = ModelMetric::new(kind);
            let p = m.sample_point(&mut rng);
            let rm = riemann(&jet(kind, &p)).unwrap();
            let d = chiral_decompose(&rm, Orientation::Positive).unwrap();
            let f = 1.0 / rm.g[0][0].sqrt();
            let u = [f, 0.0, 0.0, 0.0];
            let v = [0.0, 0.6 * f, 0.8 * f, 0.0];
            assert!((sectional(&d, &rm.g, &u, &v, 1e-8).unwrap() - want).abs() < 1e-9);
            assert!((rm.sectional_direct(&u, &v) - want).abs() < 1e-9);
            assert!(matches!(sectional(&d, &rm.g, &u, &u, 1e-8), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn sectional_agrees_with_tensor_on_product_and_cp2() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [ModelKind::S2xS2, ModelKind::Cp2] {
            let m = ModelMetric::new(kind);
            let p = m.sample_point(&mut rng);
            let rm = riemann(&jet(kind, &p)).unwrap();
            let d = chiral_decompose(&rm, Orientation::Positive).unwrap();
            let md = MetricData::new(&rm.g);
            // orthonormalise two random vectors
            let ip = |a: &[f64; 4], b: &[f64; 4]| md.inner1(&md.flat(a), &md.flat(b));
            let mut u = [0.3, -1.0, 0.4, 0.2];
            let n = ip(&u, &u).sqrt();
            u = u.map(|x| x / n);
            let mut v = [0.5, 0.1, -0.7, 0.9];
            let pr = ip(&u, &v);
            v = std::array::from_fn(|i| v[i] - pr * u[i]);
            let n = ip(&v, &v).sqrt();
            v = v.map(|x| x / n);
            let a = sectional(&d, &rm.g, &u, &v, 1e-8).unwrap();
            assert!((a - rm.sectional_direct(&u, &v)).abs() < 1e-9, "{kind}");
        }
    }

    #[test]
    fn non_einstein_sectional_is_rejected() {
        let m = ModelMetric::new(ModelKind::Sphere4).with_bump(crate::models::ConformalBump {
            center: [0.0; 4],
            width: 0.7,
            amplitude: 0.3,
        });
        let p = [0.2, 0.1, 0.0, -0.3];
        let rm = riemann(&m.metric_jet(&p, Scheme::Analytic).unwrap()).unwrap();
        let d = chiral_decompose(&rm, Orientation::Positive).unwrap();
        assert!(d.c_norm() > 1e-3);
        assert!(matches!(
            sectional(&d, &rm.g, &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn lc_connection_examples() {
        let flat = ModelMetric::new(ModelKind::Flat);
        let a = lc_connection_on_lambda_plus(&flat, &[0.4, 0.1, 0.0, 2.0], Scheme::Analytic).unwrap();
        assert!(a.iter().flatten().all(|v| *v == 0.0));
        let s = ModelMetric::new(ModelKind::Sphere4);
        let a = lc_connection_on_lambda_plus(&s, &[0.0; 4], Scheme::Analytic).unwrap();
        assert!(a.iter().flatten().all(|v| v.abs() < 1e-15));
        let p = [0.3, 0.0, 0.0, 0.0];
        let an = lc_connection_on_lambda_plus(&s, &p, Scheme::Analytic).unwrap();
        let fd = lc_connection_on_lambda_plus(&s, &p, Scheme::default_fd()).unwrap();
        for i in 0..3 {
            for mu in 0..4 {
                assert!((an[i][mu] - fd[i][mu]).abs() < 1e-9);
            }
        }
    }
}
