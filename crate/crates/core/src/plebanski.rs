//! The metric, self-dual frame and Weyl-type matrix built from a definite connection,
//! metric reconstruction from a wedge-orthogonal triple, and Plebanski residuals.

use nalgebra::{DMatrix, Matrix3, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::connection::{
    classify_definite, covariant_d2, curvature_forms, Classification, ConnectionField, ConnectionJet, LeviCivitaField,
};
use crate::curvature::Orientation;
use crate::error::{Error, Result};
use crate::exterior::{sd_frame, sym3_sqrt, two_to_matrix, wedge22, Sym3, ThreeForm, TwoForm, PAIRS};
use crate::fd;
use crate::gauge::PerturbationJet;
use crate::models::{ModelMetric, Point4, Scheme};
use crate::scalar::{inv_det4, Mat4};

/// Relative tolerance below which an eigenvalue of the wedge matrix counts as zero.
pub const DEFINITENESS_TOL: f64 = 1e-8;
/// Largest accepted `‖Σ∧Σ/μ − 2 Id‖` for metric reconstruction.
pub const WEDGE_ORTHOGONALITY_TOL: f64 = 1e-8;

/// `Σ_i∧Σ_j/μ − 2δ_ij`.
pub fn wedge_orthogonality_residual(sigma: &[TwoForm; 3], mu: f64) -> Sym3 {
    let w = |i: usize, j: usize| wedge22(&sigma[i], &sigma[j]) / mu;
    Sym3([w(0, 0) - 2.0, w(1, 1) - 2.0, w(2, 2) - 2.0, w(0, 1), w(0, 2), w(1, 2)])
}

fn swap_halves(v: &[f64; 6]) -> [f64; 6] {
    [v[3], v[4], v[5], v[0], v[1], v[2]]
}

/// Unit-determinant metric whose self-dual (or anti-self-dual) bundle is the span of
/// `forms`. The span must be definite for the wedge pairing.
///
/// The inverse metric `h` is the null vector of the linear conditions "σ h η is symmetric"
/// for σ in the span and η in its wedge complement, which say that the two spaces act by
/// commuting endomorphisms.
pub fn conformal_metric_from_span(forms: &[TwoForm; 3]) -> Result<Mat4> {
    let s = nalgebra::Matrix6x3::from_fn(|k, i| forms[i][k]);
    let scale = s.norm();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Definiteness("forms vanish or are not finite".into()));
    }
    let s = s / scale;
    let eig = SymmetricEigen::new(s * s.transpose());
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues[order[3]] <= 1e-14 * eig.eigenvalues[order[5]] {
        return Err(Error::Definiteness(
            "forms do not span a three-dimensional space".into(),
        ));
    }
    let column = |k: usize| -> [f64; 6] { std::array::from_fn(|r| eig.eigenvectors[(r, order[k])]) };
    let span: Vec<Mat4> = (3..6).map(|k| two_to_matrix(&column(k))).collect();
    let complement: Vec<Mat4> = (0..3).map(|k| two_to_matrix(&swap_halves(&column(k)))).collect();

    let unknowns: Vec<(usize, usize)> = (0..4).flat_map(|a| (a..4).map(move |b| (a, b))).collect();
    let mut system = DMatrix::<f64>::zeros(54, 10);
    for (col, &(a, b)) in unknowns.iter().enumerate() {
        let mut h = [[0.0; 4]; 4];
        h[a][b] = 1.0;
        h[b][a] = 1.0;
        let mut row = 0;
        for sg in &span {
            for et in &complement {
                let m = mul4(&mul4(sg, &h), et);
                for &(p, q) in PAIRS.iter() {
                    system[(row, col)] = m[p][q] - m[q][p];
                    row += 1;
                }
            }
        }
    }
    let svd = system.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numeric("SVD failed".into()))?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("ten singular values");
    let mut h = [[0.0; 4]; 4];
    for (col, &(a, b)) in unknowns.iter().enumerate() {
        h[a][b] = vt[(k, col)];
        h[b][a] = vt[(k, col)];
    }
    let hm = Matrix4::from_fn(|i, j| h[i][j]);
    let ev = SymmetricEigen::new(hm).eigenvalues;
    let sign = if ev.iter().all(|&l| l > 0.0) {
        1.0
    } else if ev.iter().all(|&l| l < 0.0) {
        -1.0
    } else {
        return Err(Error::Orientation(format!(
            "reconstructed inverse metric is indefinite (eigenvalues {:?})",
            ev.as_slice()
        )));
    };
    let h = h.map(|r| r.map(|v| v * sign));
    let (g, det) = inv_det4(&h);
    let det_g = 1.0 / det;
    let k = det_g.powf(-0.25);
    Ok(g.map(|r| r.map(|v| v * k)))
}

fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

/// The metric for which `Σ` is an oriented, wedge-orthogonal frame of `Λ⁺` with
/// `dvol = μ = ½ Σ₁∧Σ₁`.
pub fn metric_from_sigma(sigma: &[TwoForm; 3]) -> Result<(Mat4, f64)> {
    let mu = 0.5 * wedge22(&sigma[0], &sigma[0]);
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Argument(format!("Σ₁∧Σ₁ is not positive ({})", 2.0 * mu)));
    }
    let res = wedge_orthogonality_residual(sigma, mu).norm();
    if !(res <= WEDGE_ORTHOGONALITY_TOL) {
        return Err(Error::Argument(format!(
            "Σ is not wedge-orthogonal (residual {res:.3e})"
        )));
    }
    let conformal = conformal_metric_from_span(sigma)?;
    let g = conformal.map(|r| r.map(|v| v * mu.sqrt()));
    let frame = sd_frame(&g)?;
    let m = Matrix3::from_fn(|i, j| wedge22(&sigma[i], &frame.sigma[j]) / (2.0 * mu));
    if m.determinant() < 0.0 {
        return Err(Error::Orientation("Σ is orientation reversing".into()));
    }
    Ok((g, mu))
}

/// Pointwise quantities determined by the curvature alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureFields {
    pub y: Sym3,
    pub x: Sym3,
    /// Volume coefficient relative to the reference four-form.
    pub mu: f64,
    pub sigma: [TwoForm; 3],
}

/// `Y = ±√(Q/2μ)` normalised by `tr Y = Λ`, `X = Y⁻¹`, `Σ = X F`; `Q` is taken relative to
/// `reference · dx¹²³⁴`.
pub fn pure_fields_relative(f: &[TwoForm; 3], lambda: f64, reference: f64) -> Result<PureFields> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Argument(format!(
            "lambda must be finite and non-zero, got {lambda}"
        )));
    }
    let q = crate::connection::wedge_matrix(f, reference);
    let root = sym3_sqrt(&q.scaled(0.5), 1.0)?;
    let t = root.trace();
    let y = root.scaled(lambda.signum() * lambda.abs() / t);
    let x = y.inverse()?;
    let sigma = std::array::from_fn(|i| std::array::from_fn(|k| (0..3).map(|j| x.get(i, j) * f[j][k]).sum()));
    Ok(PureFields {
        y,
        x,
        mu: (t / lambda.abs()).powi(2),
        sigma,
    })
}

pub fn pure_fields(f: &[TwoForm; 3], lambda: f64) -> Result<PureFields> {
    pure_fields_relative(f, lambda, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureConnectionData {
    pub lambda: f64,
    pub y: Sym3,
    pub x: Sym3,
    pub mu: f64,
    pub sigma: [TwoForm; 3],
    /// Trace-free part `Y − Λ/3`.
    pub psi: Sym3,
    pub g: Mat4,
    pub f: [TwoForm; 3],
}

/// The metric, volume and frame canonically attached to a definite connection.
pub fn build_pure_connection_data(jet: &ConnectionJet, lambda: f64) -> Result<PureConnectionData> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Argument(format!(
            "lambda must be finite and non-zero, got {lambda}"
        )));
    }
    let report = classify_definite(jet, DEFINITENESS_TOL);
    let sign = match report.classification {
        Classification::Indefinite => {
            return Err(Error::Definiteness(format!(
                "wedge matrix is indefinite or degenerate (min |eig| ratio {:.3e})",
                report.min_abs_eigenvalue
            )))
        }
        Classification::Positive => 1.0,
        Classification::Negative => -1.0,
    };
    if report.base_orientation == Some(Orientation::Negative) {
        return Err(Error::Orientation(
            "curvature spans Λ⁻ of the coordinate orientation; reverse the chart".into(),
        ));
    }
    if sign != lambda.signum() {
        return Err(Error::Sign {
            connection: sign as i8,
            lambda,
        });
    }
    let pf = pure_fields(&jet.f, lambda)?;
    let (g, _) = metric_from_sigma(&pf.sigma)?;
    let third = lambda / 3.0;
    Ok(PureConnectionData {
        lambda,
        y: pf.y,
        x: pf.x,
        mu: pf.mu,
        sigma: pf.sigma,
        psi: pf.y.sub(&Sym3::identity().scaled(third)),
        g,
        f: jet.f,
    })
}

/// Curvature jet and pure connection data of the Levi-Civita connection on `Λ⁺` of a model.
pub fn lc_pure_data(model: &ModelMetric, p: &Point4, lambda: f64) -> Result<(ConnectionJet, PureConnectionData)> {
    let jet = curvature_forms(&LeviCivitaField { model: *model }, p, Scheme::Analytic)?;
    let pcd = build_pure_connection_data(&jet, lambda)?;
    Ok((jet, pcd))
}

/// Pure connection action density `¼ X_ij F^i∧F^j`, equal to `(Λ/2) μ_A`.
pub fn action_density(pcd: &PureConnectionData) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += pcd.x.get(i, j) * wedge22(&pcd.f[i], &pcd.f[j]);
        }
    }
    0.25 * s
}

/// Derivative of `F ↦ (Σ_A, Ψ_A)` along `F + t D`, by central differences with a step
/// relative to `‖F‖/‖D‖`.
pub fn theta_star(f: &[TwoForm; 3], d: &[TwoForm; 3], lambda: f64, h: f64) -> Result<([TwoForm; 3], Sym3)> {
    let nf = f.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let nd = d.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    if nd == 0.0 {
        return Ok(([[0.0; 6]; 3], Sym3::ZERO));
    }
    let step = h * nf / nd;
    pure_fields(f, lambda)?;
    let at = |t: f64| -> [f64; 24] {
        let ft: [TwoForm; 3] = std::array::from_fn(|i| std::array::from_fn(|k| f[i][k] + t * d[i][k]));
        match pure_fields(&ft, lambda) {
            Ok(pf) => std::array::from_fn(|n| if n < 18 { pf.sigma[n / 6][n % 6] } else { pf.y.0[n - 18] }),
            Err(_) => [f64::NAN; 24],
        }
    };
    let v = fd::derivative(at, step);
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::Definiteness(
            "curvature leaves the definite cone along the perturbation".into(),
        ));
    }
    let sigma = std::array::from_fn(|i| std::array::from_fn(|k| v[6 * i + k]));
    Ok((sigma, Sym3(std::array::from_fn(|k| v[18 + k]))))
}

/// `(d_A Σ)_i` at `p`, differencing the frame field with step `h`.
pub fn torsion_residual(
    field: &dyn ConnectionField,
    sigma_field: &(dyn Fn(&Point4) -> Result<[TwoForm; 3]> + Sync),
    p: &Point4,
    h: f64,
) -> Result<[ThreeForm; 3]> {
    field.check(p, fd::REACH * h)?;
    let sigma = sigma_field(p)?;
    let eval = |x: [f64; 4]| sigma_field(&x).unwrap_or([[f64::NAN; 6]; 3]);
    let ds = fd::gradient(&eval, *p, h);
    if !ds.iter().flatten().flatten().all(|v| v.is_finite()) {
        return Err(Error::Numeric(format!("frame field not defined around {p:?}")));
    }
    Ok(covariant_d2(&field.coeffs(p), &sigma, &ds))
}

/// A point of the Plebanski configuration space with the frame's first partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlebanskiPoint {
    pub jet: ConnectionJet,
    pub sigma: [TwoForm; 3],
    /// `d_sigma[μ][i] = ∂_μ Σ_i`.
    pub d_sigma: [[TwoForm; 3]; 4],
    pub psi: Sym3,
    pub lambda: f64,
}

impl PlebanskiPoint {
    pub fn new(
        jet: ConnectionJet,
        sigma: [TwoForm; 3],
        d_sigma: [[TwoForm; 3]; 4],
        psi: Sym3,
        lambda: f64,
    ) -> Result<Self> {
        let tr = (0..3).map(|i| wedge22(&sigma[i], &sigma[i])).sum::<f64>();
        if !(tr > 0.0) {
            return Err(Error::Argument(format!("tr(Σ∧Σ) = {tr} is not positive")));
        }
        Ok(PlebanskiPoint {
            jet,
            sigma,
            d_sigma,
            psi,
            lambda,
        })
    }

    /// `Ψ + Λ/3`.
    pub fn y(&self) -> Sym3 {
        self.psi.add(&Sym3::identity().scaled(self.lambda / 3.0))
    }

    /// `μ_Σ = tr(Σ∧Σ)/6`.
    pub fn mu(&self) -> f64 {
        (0..3).map(|i| wedge22(&self.sigma[i], &self.sigma[i])).sum::<f64>() / 6.0
    }
}

/// The image of a definite connection in Plebanski variables, at `p`.
pub fn theta_point(
    field: &dyn ConnectionField,
    p: &Point4,
    lambda: f64,
    h: f64,
) -> Result<(PlebanskiPoint, PureConnectionData)> {
    let jet = curvature_forms(field, p, Scheme::Analytic)
        .or_else(|_| curvature_forms(field, p, Scheme::FiniteDifference(h)))?;
    let pcd = build_pure_connection_data(&jet, lambda)?;
    field.check(p, fd::REACH * h)?;
    let scheme = if field.coeffs_jet(p).is_some() {
        Scheme::Analytic
    } else {
        Scheme::FiniteDifference(h)
    };
    let frame = |x: [f64; 4]| -> [TwoForm; 3] {
        curvature_forms(field, &x, scheme)
            .and_then(|j| pure_fields(&j.f, lambda))
            .map(|pf| pf.sigma)
            .unwrap_or([[f64::NAN; 6]; 3])
    };
    let d_sigma = fd::gradient(&frame, *p, h);
    if !d_sigma.iter().flatten().flatten().all(|v| v.is_finite()) {
        return Err(Error::Numeric(format!("frame field not defined around {p:?}")));
    }
    let pp = PlebanskiPoint::new(jet, pcd.sigma, d_sigma, pcd.psi, lambda)?;
    Ok((pp, pcd))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlebanskiResiduals {
    /// `d_A Σ`.
    pub connection: [ThreeForm; 3],
    /// Wedge-orthogonality defect at scale `μ_Σ`.
    pub psi: Sym3,
    /// `F − (Ψ + Λ/3) Σ`.
    pub sigma: [TwoForm; 3],
}

impl PlebanskiResiduals {
    pub fn norms(&self) -> [f64; 3] {
        let n = |it: &mut dyn Iterator<Item = f64>| it.map(|v| v * v).sum::<f64>().sqrt();
        [
            n(&mut self.connection.iter().flatten().copied()),
            self.psi.norm(),
            n(&mut self.sigma.iter().flatten().copied()),
        ]
    }
}

pub fn plebanski_residuals(pp: &PlebanskiPoint) -> PlebanskiResiduals {
    let y = pp.y();
    PlebanskiResiduals {
        connection: covariant_d2(&pp.jet.a, &pp.sigma, &pp.d_sigma),
        psi: wedge_orthogonality_residual(&pp.sigma, pp.mu()),
        sigma: std::array::from_fn(|i| {
            std::array::from_fn(|k| pp.jet.f[i][k] - (0..3).map(|j| y.get(i, j) * pp.sigma[j][k]).sum::<f64>())
        }),
    }
}

/// A tangent vector `(a, σ, φ)` to the Plebanski configuration space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub a: PerturbationJet,
    pub sigma: [TwoForm; 3],
    /// Trace-free.
    pub phi: Sym3,
}

/// Four-form densities of the first variation in the connection, Ψ and Σ directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    pub connection: f64,
    pub psi: f64,
    pub sigma: f64,
}

pub fn plebanski_first_variation(pp: &PlebanskiPoint, t: &Tangent) -> FirstVariation {
    let y = pp.y();
    let mut out = FirstVariation {
        connection: 0.0,
        psi: 0.0,
        sigma: 0.0,
    };
    for i in 0..3 {
        out.connection += wedge22(&t.a.d_a[i], &pp.sigma[i]);
        out.sigma += wedge22(&pp.jet.f[i], &t.sigma[i]);
        for j in 0..3 {
            let ss = wedge22(&pp.sigma[i], &pp.sigma[j]);
            out.psi -= 0.5 * t.phi.get(i, j) * ss;
            out.sigma -= y.get(i, j) * wedge22(&pp.sigma[j], &t.sigma[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::FnField;
    use crate::exterior::{flat_sd_basis, MetricData};
    use crate::gauge::Provenance;
    use crate::models::ModelKind;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ID: Mat4 = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];

    fn max_diff(a: &Mat4, b: &Mat4) -> f64 {
        (0..4)
            .flat_map(|i| (0..4).map(move |j| (a[i][j] - b[i][j]).abs()))
            .fold(0.0, f64::max)
    }

    fn rotate(h: &Matrix3<f64>, w: &[TwoForm; 3]) -> [TwoForm; 3] {
        std::array::from_fn(|i| std::array::from_fn(|k| (0..3).map(|j| h[(i, j)] * w[j][k]).sum()))
    }

    fn rotation(axis: [f64; 3], angle: f64) -> Matrix3<f64> {
        *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(nalgebra::Vector3::from(axis)), angle)
            .matrix()
    }

    fn spd(entries: &[f64]) -> Mat4 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                (0..4).map(|k| entries[4 * i + k] * entries[4 * j + k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 }
            })
        })
    }

    #[test]
    fn residual_examples() {
        assert_eq!(wedge_orthogonality_residual(&flat_sd_basis(), 1.0), Sym3::ZERO);
        let mut s = flat_sd_basis();
        s[0] = s[0].map(|v| 2.0 * v);
        assert_eq!(wedge_orthogonality_residual(&s, 1.0), Sym3::diag([6.0, 0.0, 0.0]));
    }

    #[test]
    fn flat_reconstruction() {
        let (g, mu) = metric_from_sigma(&flat_sd_basis()).unwrap();
        assert!(max_diff(&g, &ID) < 1e-14 && (mu - 1.0).abs() < 1e-15);
        let h = rotation([0.3, -1.0, 0.5], 1.1);
        let (g, mu) = metric_from_sigma(&rotate(&h, &flat_sd_basis())).unwrap();
        assert!(max_diff(&g, &ID) < 1e-13 && (mu - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_errors() {
        let s = flat_sd_basis();
        assert!(matches!(
            metric_from_sigma(&[s[0], s[1], s[2].map(|v| -v)]),
            Err(Error::Orientation(_))
        ));
        assert!(matches!(
            metric_from_sigma(&[s[0], s[1], s[1]]),
            Err(Error::Argument(_))
        ));
        let asd = crate::exterior::flat_asd_basis();
        assert!(matches!(metric_from_sigma(&asd), Err(Error::Argument(_))));
    }

    #[test]
    fn conformal_metric_handles_both_chiralities() {
        let g = spd(&[
            0.3, 0.1, -0.2, 0.5, 0.0, 0.7, 0.1, 0.2, -0.4, 0.3, 0.9, 0.0, 0.1, 0.1, 0.2, 0.6,
        ]);
        let det = MetricData::new(&g).sqrt_det.powi(2);
        let unit = g.map(|r| r.map(|v| v / det.powf(0.25)));
        let sd = sd_frame(&g).unwrap().sigma;
        let asd = crate::exterior::asd_frame(&g).unwrap().sigma;
        assert!(max_diff(&conformal_metric_from_span(&sd).unwrap(), &unit) < 1e-12);
        assert!(max_diff(&conformal_metric_from_span(&asd).unwrap(), &unit) < 1e-12);
        let mixed = [sd[0], sd[1], asd[0]];
        assert!(conformal_metric_from_span(&mixed).is_err());
        assert!(matches!(
            conformal_metric_from_span(&[[0.0; 6]; 3]),
            Err(Error::Definiteness(_))
        ));
    }

    #[test]
    fn sphere_and_hyperbolic_data() {
        let p = [0.2, -0.3, 0.1, 0.4];
        let sphere = ModelMetric::new(ModelKind::Sphere4);
        let (jet, d) = lc_pure_data(&sphere, &p, 3.0).unwrap();
        assert!(d.y.sub(&Sym3::identity()).norm() < 1e-10);
        assert!(d.x.sub(&Sym3::identity()).norm() < 1e-10);
        for i in 0..3 {
            for k in 0..6 {
                assert!((d.sigma[i][k] - jet.f[i][k]).abs() < 1e-10);
            }
        }
        let g = sphere.metric(&p);
        assert!(max_diff(&d.g, &g) < 1e-8 * g[0][0]);
        let hyp = ModelMetric::new(ModelKind::Hyperbolic4);
        let (jet, d) = lc_pure_data(&hyp, &p, -3.0).unwrap();
        assert!(d.y.add(&Sym3::identity()).norm() < 1e-10);
        for i in 0..3 {
            for k in 0..6 {
                assert!((d.sigma[i][k] + jet.f[i][k]).abs() < 1e-10);
            }
        }
        let g = hyp.metric(&p);
        assert!(max_diff(&d.g, &g) < 1e-8 * g[0][0]);
        assert!((d.mu - MetricData::new(&g).sqrt_det).abs() < 1e-9 * d.mu);
    }

    #[test]
    fn build_errors() {
        let p = [0.2, -0.3, 0.1, 0.4];
        let sphere = ModelMetric::new(ModelKind::Sphere4);
        assert!(matches!(
            lc_pure_data(&sphere, &p, -3.0),
            Err(Error::Sign { connection: 1, .. })
        ));
        assert!(matches!(lc_pure_data(&sphere, &p, 0.0), Err(Error::Argument(_))));
        let cp2 = ModelMetric::new(ModelKind::Cp2);
        assert!(matches!(lc_pure_data(&cp2, &p, 6.0), Err(Error::Definiteness(_))));
        let (_, d) = lc_pure_data(&cp2.reversed(), &p, 6.0).unwrap();
        assert!(d.psi.norm() < 1e-9, "{:?}", d.psi);
    }

    #[test]
    fn data_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (m, l) in [
            (ModelMetric::new(ModelKind::Sphere4), 3.0),
            (ModelMetric::new(ModelKind::Hyperbolic4), -3.0),
            (ModelMetric::new(ModelKind::Cp2).reversed(), 6.0),
        ] {
            for _ in 0..10 {
                let p = m.sample_point(&mut rng);
                let (_, d) = lc_pure_data(&m, &p, l).unwrap();
                assert!((d.y.matrix() * d.x.matrix() - Matrix3::identity()).norm() < 1e-12);
                assert!((d.y.trace() - l).abs() < 1e-12);
                assert!(wedge_orthogonality_residual(&d.sigma, d.mu).norm() < 1e-10);
                assert!(d.psi.trace().abs() < 1e-12);
                assert!((action_density(&d) - 0.5 * l * d.mu).abs() < 1e-12 * d.mu.abs());
                // with the half-trace normalisation the same contraction gives Λ μ
                assert!((2.0 * action_density(&d) - l * d.mu).abs() < 1e-12 * d.mu.abs());
                // frame has norm √2 for the reconstructed metric
                let md = MetricData::new(&d.g);
                for s in &d.sigma {
                    assert!((md.inner2(s, s) - 2.0).abs() < 1e-9);
                }
                let g = m.metric(&p);
                let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(max_diff(&d.g, &g) < 1e-6 * scale);
            }
        }
    }

    #[test]
    fn reference_form_does_not_change_the_volume_form() {
        let p = [0.1, 0.3, -0.2, 0.0];
        let (jet, _) = lc_pure_data(&ModelMetric::new(ModelKind::Sphere4), &p, 3.0).unwrap();
        let base = pure_fields_relative(&jet.f, 3.0, 1.0).unwrap();
        for r in [0.25, 3.0, 17.0] {
            let other = pure_fields_relative(&jet.f, 3.0, r).unwrap();
            assert!((other.mu * r - base.mu).abs() < 1e-12 * base.mu);
            assert!(other.y.sub(&base.y).norm() < 1e-12);
        }
    }

    #[test]
    fn equivariance_under_constant_rotation() {
        let p = [0.1, 0.3, -0.2, 0.0];
        let (jet, d) = lc_pure_data(&ModelMetric::new(ModelKind::Hyperbolic4), &p, -3.0).unwrap();
        let h = rotation([1.0, 2.0, -0.5], 0.7);
        let mut rj = jet;
        rj.f = rotate(&h, &jet.f);
        let r = build_pure_connection_data(&rj, -3.0).unwrap();
        let want = rotate(&h, &d.sigma);
        for i in 0..3 {
            for k in 0..6 {
                assert!((r.sigma[i][k] - want[i][k]).abs() < 1e-10);
            }
        }
        assert!(max_diff(&r.g, &d.g) < 1e-10 * d.g[0][0] && (r.mu - d.mu).abs() < 1e-12 * d.mu);
    }

    #[test]
    fn theta_star_along_the_curvature_itself() {
        let p = [0.1, 0.3, -0.2, 0.0];
        let (jet, d) = lc_pure_data(&ModelMetric::new(ModelKind::Hyperbolic4), &p, -3.0).unwrap();
        let (s, phi) = theta_star(&jet.f, &jet.f, -3.0, 1e-3).unwrap();
        assert!(phi.norm() < 1e-9);
        for i in 0..3 {
            for k in 0..6 {
                assert!((s[i][k] - d.sigma[i][k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn torsion_examples() {
        let zero = FnField(|_: &Point4| [[0.0; 4]; 3]);
        let flat = |_: &Point4| Ok(flat_sd_basis());
        let r = torsion_residual(&zero, &flat, &[0.3, 0.1, 0.0, 0.2], 1e-3).unwrap();
        assert!(r.iter().flatten().all(|v| v.abs() < 1e-12));
        let m = ModelMetric::new(ModelKind::Sphere4);
        let field = LeviCivitaField { model: m };
        let sigma = |x: &Point4| lc_pure_data(&m, x, 3.0).map(|(_, d)| d.sigma);
        let p = [0.2, -0.1, 0.3, 0.25];
        let r = torsion_residual(&field, &sigma, &p, 1e-3).unwrap();
        assert!(r.iter().flatten().all(|v| v.abs() < 1e-8), "{r:?}");
        // d_A(βΣ) = dβ∧Σ at a critical point
        let beta = |x: &Point4| 1.0 + 0.5 * x[0] - x[1] * x[2];
        let bumped = |x: &Point4| sigma(x).map(|s| s.map(|w| w.map(|v| v * beta(x))));
        let r = torsion_residual(&field, &bumped, &p, 1e-3).unwrap();
        let db = [0.5, -p[2], -p[1], 0.0];
        let s = sigma(&p).unwrap();
        for i in 0..3 {
            let want = crate::exterior::wedge12(&db, &s[i]);
            for m in 0..4 {
                assert!((r[i][m] - want[m]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn plebanski_residual_examples() {
        let field = LeviCivitaField {
            model: ModelMetric::new(ModelKind::Sphere4),
        };
        let p = [0.2, -0.1, 0.3, 0.25];
        let (pp, _) = theta_point(&field, &p, 3.0, 1e-3).unwrap();
        let n = plebanski_residuals(&pp).norms();
        assert!(n.iter().all(|v| *v < 1e-8), "{n:?}");
        let eps = 1e-3;
        let mut shifted = pp;
        shifted.psi = pp.psi.add(&Sym3::diag([eps, -eps, 0.0]));
        let r = plebanski_residuals(&shifted).sigma;
        let base = plebanski_residuals(&pp).sigma;
        for k in 0..6 {
            assert!((r[0][k] - base[0][k] + eps * pp.sigma[0][k]).abs() < 1e-15);
            assert!((r[1][k] - base[1][k] - eps * pp.sigma[1][k]).abs() < 1e-15);
            assert_eq!(r[2][k], base[2][k]);
        }
        let zero = FnField(|_: &Point4| [[0.0; 4]; 3]);
        let jet = curvature_forms(&zero, &p, Scheme::default_fd()).unwrap();
        let flat = PlebanskiPoint::new(jet, flat_sd_basis(), [[[0.0; 6]; 3]; 4], Sym3::ZERO, 3.0).unwrap();
        let r = plebanski_residuals(&flat);
        assert_eq!(r.sigma, flat_sd_basis().map(|w| w.map(|v| -v)));
        assert_eq!(r.psi, Sym3::ZERO);
    }

    #[test]
    fn first_variation_examples() {
        let zero = FnField(|_: &Point4| [[0.0; 4]; 3]);
        let p = [0.0; 4];
        let jet = curvature_forms(&zero, &p, Scheme::default_fd()).unwrap();
        let pp = PlebanskiPoint::new(jet, flat_sd_basis(), [[[0.0; 6]; 3]; 4], Sym3::ZERO, 3.0).unwrap();
        let t0 = Tangent {
            a: PerturbationJet {
                a: [[0.0; 4]; 3],
                d_a: [[0.0; 6]; 3],
                provenance: Provenance::Synthetic,
            },
            sigma: [[0.0; 6]; 3],
            phi: Sym3::ZERO,
        };
        let v = plebanski_first_variation(&pp, &t0);
        assert_eq!((v.connection, v.psi, v.sigma), (0.0, 0.0, 0.0));
        // σ along the residual F − YΣ = −Σ gives −Σ_i∧(−Σ_i)... = residual∧residual > 0
        let r = plebanski_residuals(&pp).sigma;
        let t = Tangent { sigma: r, ..t0 };
        assert!((plebanski_first_variation(&pp, &t).sigma - 6.0).abs() < 1e-14);
        let t = Tangent {
            sigma: r.map(|w| w.map(|v| -v)),
            ..t0
        };
        assert!(plebanski_first_variation(&pp, &t).sigma < 0.0);
        let t = Tangent {
            phi: Sym3::diag([1.0, -0.5, -0.5]),
            ..t0
        };
        assert!(plebanski_first_variation(&pp, &t).psi.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn reconstruction_recovers_random_metrics(entries in prop::collection::vec(-1.0f64..1.0, 16),
                                                  angle in 0.0f64..6.0) {
            let g = spd(&entries);
            let f = sd_frame(&g).unwrap();
            let h = rotation([0.2, 0.5, -1.0], angle);
            let (rg, mu) = metric_from_sigma(&rotate(&h, &f.sigma)).unwrap();
            let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            prop_assert!(max_diff(&rg, &g) < 1e-9 * scale);
            prop_assert!((mu - f.mu).abs() < 1e-10 * f.mu);
        }
    }
}
