//! Pointwise exterior algebra on an oriented 4-dimensional inner-product space.
//!
//! Two-forms are stored in the ordered basis `(dx¹², dx¹³, dx¹⁴, dx³⁴, dx⁴², dx²³)`,
//! so that the flat self-dual forms are `e_a + e_{a+3}` and the wedge pairing is
//! `ω∧η = Σ_a (ω_a η_{a+3} + ω_{a+3} η_a) dx¹²³⁴`. Three-forms use
//! `(dx²³⁴, dx¹³⁴, dx¹²⁴, dx¹²³)`. Four-forms are coefficients of `dx¹²³⁴`.
//!
//! The inner product on two-forms has `⟨dx^{ij}, dx^{ij}⟩ = g^{ii}g^{jj} − (g^{ij})²`,
//! which gives the flat self-dual basis norm √2.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, inv_det4, Mat4, Scalar};

pub type OneForm<D = f64> = [D; 4];
pub type TwoForm<D = f64> = [D; 6];
pub type ThreeForm<D = f64> = [D; 4];

/// Index pairs `(a, b)` so that component `k` multiplies `dx^a ∧ dx^b`.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

/// `dx^m ∧ T_m = TRIPLE_SIGN[m] dx¹²³⁴` for the three-form basis `T_m`.
const TRIPLE_SIGN: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
const TRIPLES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Levi-Civita symbol with ε₁₂₃ = +1.
pub fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// The two indices completing `i` to a cyclic triple, `ε_{i j k} = 1`.
pub const fn cyclic(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

pub fn flat_sd_basis() -> [TwoForm; 3] {
    std::array::from_fn(|a| {
        let mut w = [0.0; 6];
        w[a] = 1.0;
        w[a + 3] = 1.0;
        w
    })
}

pub fn flat_asd_basis() -> [TwoForm; 3] {
    std::array::from_fn(|a| {
        let mut w = [0.0; 6];
        w[a] = 1.0;
        w[a + 3] = -1.0;
        w
    })
}

pub fn two_to_matrix<D: Scalar>(w: &TwoForm<D>) -> Mat4<D> {
    let mut m = [[D::zero(); 4]; 4];
    for (k, &(a, b)) in PAIRS.iter().enumerate() {
        m[a][b] = w[k];
        m[b][a] = -w[k];
    }
    m
}

pub fn matrix_to_two<D: Scalar>(m: &Mat4<D>) -> TwoForm<D> {
    std::array::from_fn(|k| {
        let (a, b) = PAIRS[k];
        m[a][b]
    })
}

pub fn wedge22<D: Scalar>(a: &TwoForm<D>, b: &TwoForm<D>) -> D {
    let mut s = D::zero();
    for k in 0..3 {
        s += a[k] * b[k + 3] + a[k + 3] * b[k];
    }
    s
}

pub fn wedge11<D: Scalar>(a: &OneForm<D>, b: &OneForm<D>) -> TwoForm<D> {
    std::array::from_fn(|k| {
        let (i, j) = PAIRS[k];
        a[i] * b[j] - a[j] * b[i]
    })
}

pub fn wedge12<D: Scalar>(a: &OneForm<D>, w: &TwoForm<D>) -> ThreeForm<D> {
    let m = two_to_matrix(w);
    std::array::from_fn(|t| {
        let [x, y, z] = TRIPLES[t];
        a[x] * m[y][z] + a[y] * m[z][x] + a[z] * m[x][y]
    })
}

pub fn wedge13<D: Scalar>(a: &OneForm<D>, t: &ThreeForm<D>) -> D {
    let mut s = D::zero();
    for m in 0..4 {
        s += a[m] * t[m] * TRIPLE_SIGN[m];
    }
    s
}

/// `ι_v ω` for a two-form, `(ι_v ω)_ν = v^μ ω_{μν}`.
pub fn interior2(v: &[f64; 4], w: &TwoForm) -> OneForm {
    let m = two_to_matrix(w);
    std::array::from_fn(|nu| (0..4).map(|mu| v[mu] * m[mu][nu]).sum())
}

/// Exterior derivative of a two-form field from its partials `dw[μ] = ∂_μ ω`.
pub fn exterior_d2(dw: &[TwoForm; 4]) -> ThreeForm {
    let mut out = [0.0; 4];
    for (mu, d) in dw.iter().enumerate() {
        let mut e = [0.0; 4];
        e[mu] = 1.0;
        let t = wedge12(&e, d);
        for m in 0..4 {
            out[m] += t[m];
        }
    }
    out
}

/// Exterior derivative of a one-form field from `da[μ][ν] = ∂_μ a_ν`.
pub fn exterior_d1(da: &[[f64; 4]; 4]) -> TwoForm {
    std::array::from_fn(|k| {
        let (i, j) = PAIRS[k];
        da[i][j] - da[j][i]
    })
}

/// Metric data needed by every Hodge-type operation, computed once per point.
#[derive(Clone, Copy, Debug)]
pub struct MetricData<D: Scalar = f64> {
    pub g: Mat4<D>,
    pub inv: Mat4<D>,
    pub sqrt_det: D,
}

impl<D: Scalar> MetricData<D> {
    pub fn new(g: &Mat4<D>) -> Self {
        let (inv, det) = inv_det4(g);
        MetricData {
            g: *g,
            inv,
            sqrt_det: det.sqrt(),
        }
    }

    /// Gram matrix of the two-form basis.
    pub fn gram2(&self) -> [[D; 6]; 6] {
        let h = &self.inv;
        let mut out = [[D::zero(); 6]; 6];
        for (k, &(a, b)) in PAIRS.iter().enumerate() {
            for (l, &(p, q)) in PAIRS.iter().enumerate() {
                out[k][l] = h[a][p] * h[b][q] - h[a][q] * h[b][p];
            }
        }
        out
    }

    /// Matrix of the Hodge star on two-forms: `H = √g · W · G`.
    pub fn hodge2_matrix(&self) -> [[D; 6]; 6] {
        let gram = self.gram2();
        std::array::from_fn(|k| {
            let src = if k < 3 { k + 3 } else { k - 3 };
            std::array::from_fn(|l| gram[src][l] * self.sqrt_det)
        })
    }

    pub fn inner1(&self, a: &OneForm<D>, b: &OneForm<D>) -> D {
        let mut s = D::zero();
        for i in 0..4 {
            for j in 0..4 {
                s += self.inv[i][j] * a[i] * b[j];
            }
        }
        s
    }

    pub fn inner2(&self, a: &TwoForm<D>, b: &TwoForm<D>) -> D {
        inner_with(&self.gram2(), a, b)
    }

    pub fn star1(&self, a: &OneForm<D>) -> ThreeForm<D> {
        std::array::from_fn(|m| {
            let mut s = D::zero();
            for n in 0..4 {
                s += self.inv[m][n] * a[n];
            }
            s * self.sqrt_det * TRIPLE_SIGN[m]
        })
    }

    pub fn star3(&self, t: &ThreeForm<D>) -> OneForm<D> {
        std::array::from_fn(|m| {
            let mut s = D::zero();
            for n in 0..4 {
                s += self.g[m][n] * t[n] * TRIPLE_SIGN[n];
            }
            -s / self.sqrt_det
        })
    }

    pub fn star2(&self, w: &TwoForm<D>) -> TwoForm<D> {
        apply6(&self.hodge2_matrix(), w)
    }

    /// Index raising of a one-form, `α ↦ α^♯`.
    pub fn sharp(&self, a: &OneForm<D>) -> [D; 4] {
        std::array::from_fn(|i| {
            let mut s = D::zero();
            for j in 0..4 {
                s += self.inv[i][j] * a[j];
            }
            s
        })
    }

    pub fn flat(&self, v: &[D; 4]) -> OneForm<D> {
        std::array::from_fn(|i| {
            let mut s = D::zero();
            for j in 0..4 {
                s += self.g[i][j] * v[j];
            }
            s
        })
    }
}

pub fn inner_with<D: Scalar>(gram: &[[D; 6]; 6], a: &TwoForm<D>, b: &TwoForm<D>) -> D {
    let mut s = D::zero();
    for k in 0..6 {
        for l in 0..6 {
            s += a[k] * gram[k][l] * b[l];
        }
    }
    s
}

pub fn apply6<D: Scalar>(m: &[[D; 6]; 6], w: &TwoForm<D>) -> TwoForm<D> {
    std::array::from_fn(|k| {
        let mut s = D::zero();
        for l in 0..6 {
            s += m[k][l] * w[l];
        }
        s
    })
}

/// A form of any degree on the 4-space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Form {
    Zero(f64),
    One(OneForm),
    Two(TwoForm),
    Three(ThreeForm),
    Four(f64),
}

impl Form {
    pub fn degree(&self) -> usize {
        match self {
            Form::Zero(_) => 0,
            Form::One(_) => 1,
            Form::Two(_) => 2,
            Form::Three(_) => 3,
            Form::Four(_) => 4,
        }
    }
}

fn checked_metric(g: &Mat4) -> Result<MetricData> {
    let md = MetricData::new(g);
    let det = md.sqrt_det * md.sqrt_det;
    if !(det.is_finite() && det > 0.0) || md.inv.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "metric is singular or not positive (det {det})"
        )));
    }
    Ok(md)
}

pub fn hodge_star(g: &Mat4, form: &Form) -> Result<Form> {
    let md = checked_metric(g)?;
    Ok(match form {
        Form::Zero(f) => Form::Four(f * md.sqrt_det),
        Form::One(a) => Form::Three(md.star1(a)),
        Form::Two(w) => Form::Two(md.star2(w)),
        Form::Three(t) => Form::One(md.star3(t)),
        Form::Four(f) => Form::Zero(f / md.sqrt_det),
    })
}

/// Splits a two-form into self-dual and anti-self-dual parts.
pub fn sd_split(g: &Mat4, w: &TwoForm) -> Result<(TwoForm, TwoForm)> {
    let md = checked_metric(g)?;
    let s = md.star2(w);
    Ok((
        std::array::from_fn(|k| 0.5 * (w[k] + s[k])),
        std::array::from_fn(|k| 0.5 * (w[k] - s[k])),
    ))
}

/// An oriented, wedge-orthogonal frame of Λ⁺ (or of Λ⁻ for `asd_frame`).
#[derive(Clone, Copy, Debug)]
pub struct SdFrame<D: Scalar = f64> {
    pub sigma: [TwoForm<D>; 3],
    /// `√det g`, so that `Σ_i ∧ Σ_j = 2 δ_ij μ dx¹²³⁴`.
    pub mu: D,
}

fn chiral_frame<D: Scalar>(md: &MetricData<D>, sign: f64) -> Option<[TwoForm<D>; 3]> {
    let h = md.hodge2_matrix();
    let gram = md.gram2();
    let half: D = c(0.5);
    let mut out = [[D::zero(); 6]; 3];
    for a in 0..3 {
        let mut seed = [D::zero(); 6];
        seed[a] = D::one();
        seed[a + 3] = c(sign);
        let hs = apply6(&h, &seed);
        let mut v: TwoForm<D> = std::array::from_fn(|k| (seed[k] + hs[k] * sign) * half);
        for b in 0..a {
            // frame elements have squared norm 2
            let p = inner_with(&gram, &v, &out[b]) * half;
            for k in 0..6 {
                v[k] -= p * out[b][k];
            }
        }
        let n2 = inner_with(&gram, &v, &v);
        if !(n2.re() > 0.0) || !n2.re().is_finite() {
            return None;
        }
        let scale = (c::<D>(2.0) / n2).sqrt();
        out[a] = std::array::from_fn(|k| v[k] * scale);
    }
    Some(out)
}

/// Gram–Schmidt frame of Λ⁺_g seeded by the flat self-dual basis, each element of norm √2.
pub fn sd_frame<D: Scalar>(g: &Mat4<D>) -> Result<SdFrame<D>> {
    let md = MetricData::new(g);
    let sigma = chiral_frame(&md, 1.0).ok_or_else(|| Error::Numeric("Gram-Schmidt breakdown on Λ⁺".into()))?;
    Ok(SdFrame { sigma, mu: md.sqrt_det })
}

/// Same construction on Λ⁻, seeded by the flat anti-self-dual basis.
pub fn asd_frame<D: Scalar>(g: &Mat4<D>) -> Result<SdFrame<D>> {
    let md = MetricData::new(g);
    let sigma = chiral_frame(&md, -1.0).ok_or_else(|| Error::Numeric("Gram-Schmidt breakdown on Λ⁻".into()))?;
    Ok(SdFrame { sigma, mu: md.sqrt_det })
}

/// Pull-back by the reflection `x¹ ↦ −x¹`.
pub fn reflect_two<D: Scalar>(w: &TwoForm<D>) -> TwoForm<D> {
    std::array::from_fn(|k| if k < 3 { -w[k] } else { w[k] })
}

pub fn reflect_metric<D: Scalar>(g: &Mat4<D>) -> Mat4<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| if (i == 0) != (j == 0) { -g[i][j] } else { g[i][j] }))
}

/// Symmetric 3×3 matrix stored as `(11, 22, 33, 12, 13, 23)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym3(pub [f64; 6]);

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);

    pub fn identity() -> Self {
        Sym3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        Sym3([d[0], d[1], d[2], 0.0, 0.0, 0.0])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Sym3(self.0.map(|x| x * s))
    }

    /// Symmetric part of an arbitrary matrix.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Sym3([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    pub fn from_rows(m: &[[f64; 3]; 3]) -> Self {
        Self::from_matrix(&Matrix3::from_fn(|i, j| m[i][j]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let s = &self.0;
        match (i.min(j), i.max(j)) {
            (0, 0) => s[0],
            (1, 1) => s[1],
            (2, 2) => s[2],
            (0, 1) => s[3],
            (0, 2) => s[4],
            _ => s[5],
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn add(&self, other: &Sym3) -> Sym3 {
        Sym3(std::array::from_fn(|k| self.0[k] + other.0[k]))
    }

    pub fn sub(&self, other: &Sym3) -> Sym3 {
        Sym3(std::array::from_fn(|k| self.0[k] - other.0[k]))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix().norm()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        [e[0], e[1], e[2]]
    }

    pub fn inverse(&self) -> Result<Sym3> {
        self.matrix()
            .try_inverse()
            .map(|m| Sym3::from_matrix(&m))
            .ok_or_else(|| Error::Numeric("singular symmetric matrix".into()))
    }
}

/// Square root of a positive-definite `Q` with the requested sign.
pub fn sym3_sqrt(q: &Sym3, sign: f64) -> Result<Sym3> {
    let eig = SymmetricEigen::new(q.matrix());
    let scale = q.norm();
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-14 * scale) || !l.is_finite()) {
        return Err(Error::Definiteness(format!(
            "matrix is not positive definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    let s = sign.signum();
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| s * l.sqrt()));
    Ok(Sym3::from_matrix(
        &(eig.eigenvectors * d * eig.eigenvectors.transpose()),
    ))
}

/// Trace-free symmetric part.
pub fn s20_project(m: &Matrix3<f64>) -> Sym3 {
    let s = Sym3::from_matrix(m);
    let t = s.trace() / 3.0;
    Sym3([s.0[0] - t, s.0[1] - t, s.0[2] - t, s.0[3], s.0[4], s.0[5]])
}
