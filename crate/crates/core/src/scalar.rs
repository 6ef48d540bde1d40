//! Scalar abstraction shared by the `f64` code paths and forward-mode dual numbers.

use num_dual::DualNum;

/// Anything that behaves like a real number: `f64` or a (nested) dual number over it.
pub trait Scalar: DualNum<Primitive = f64> + Copy {}

impl<T: DualNum<Primitive = f64> + Copy> Scalar for T {}

#[inline]
pub fn c<D: Scalar>(x: f64) -> D {
    D::from(x)
}

/// Real part of a possibly nested dual number.
#[inline]
pub fn re<D: Scalar>(x: D) -> f64 {
    x.re()
}

pub type Mat4<D = f64> = [[D; 4]; 4];

pub fn zeros4<D: Scalar>() -> Mat4<D> {
    [[D::zero(); 4]; 4]
}

/// Inverse and determinant of a 4×4 matrix by 2×2 cofactor expansion.
pub fn inv_det4<D: Scalar>(m: &Mat4<D>) -> (Mat4<D>, D) {
    let a = m;
    let s0 = a[0][0] * a[1][1] - a[1][0] * a[0][1];
    let s1 = a[0][0] * a[1][2] - a[1][0] * a[0][2];
    let s2 = a[0][0] * a[1][3] - a[1][0] * a[0][3];
    let s3 = a[0][1] * a[1][2] - a[1][1] * a[0][2];
    let s4 = a[0][1] * a[1][3] - a[1][1] * a[0][3];
    let s5 = a[0][2] * a[1][3] - a[1][2] * a[0][3];
    let c5 = a[2][2] * a[3][3] - a[3][2] * a[2][3];
    let c4 = a[2][1] * a[3][3] - a[3][1] * a[2][3];
    let c3 = a[2][1] * a[3][2] - a[3][1] * a[2][2];
    let c2 = a[2][0] * a[3][3] - a[3][0] * a[2][3];
    let c1 = a[2][0] * a[3][2] - a[3][0] * a[2][2];
    let c0 = a[2][0] * a[3][1] - a[3][0] * a[2][1];
    let det = s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;
    let k = det.recip();
    let inv = [
        [
            (a[1][1] * c5 - a[1][2] * c4 + a[1][3] * c3) * k,
            (-a[0][1] * c5 + a[0][2] * c4 - a[0][3] * c3) * k,
            (a[3][1] * s5 - a[3][2] * s4 + a[3][3] * s3) * k,
            (-a[2][1] * s5 + a[2][2] * s4 - a[2][3] * s3) * k,
        ],
        [
            (-a[1][0] * c5 + a[1][2] * c2 - a[1][3] * c1) * k,
            (a[0][0] * c5 - a[0][2] * c2 + a[0][3] * c1) * k,
            (-a[3][0] * s5 + a[3][2] * s2 - a[3][3] * s1) * k,
            (a[2][0] * s5 - a[2][2] * s2 + a[2][3] * s1) * k,
        ],
        [
            (a[1][0] * c4 - a[1][1] * c2 + a[1][3] * c0) * k,
            (-a[0][0] * c4 + a[0][1] * c2 - a[0][3] * c0) * k,
            (a[3][0] * s4 - a[3][1] * s2 + a[3][3] * s0) * k,
            (-a[2][0] * s4 + a[2][1] * s2 - a[2][3] * s0) * k,
        ],
        [
            (-a[1][0] * c3 + a[1][1] * c1 - a[1][2] * c0) * k,
            (a[0][0] * c3 - a[0][1] * c1 + a[0][2] * c0) * k,
            (-a[3][0] * s3 + a[3][1] * s1 - a[3][2] * s0) * k,
            (a[2][0] * s3 - a[2][1] * s1 + a[2][2] * s0) * k,
        ],
    ];
    (inv, det)
}

pub fn mat_vec4(m: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| (0..4).map(|j| m[i][j] * v[j]).sum())
}
