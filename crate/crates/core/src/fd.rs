//! Fourth-order central difference stencils over anything that forms a vector space.

/// Values that can be combined linearly by a stencil.
pub trait Linear: Copy {
    fn zero() -> Self;
    fn add_scaled(self, c: f64, other: Self) -> Self;
    fn is_finite(&self) -> bool;
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(self, c: f64, other: Self) -> Self {
        self + c * other
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl<T: Linear, const N: usize> Linear for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn add_scaled(self, c: f64, other: Self) -> Self {
        let mut out = self;
        for (o, x) in out.iter_mut().zip(other) {
            *o = o.add_scaled(c, x);
        }
        out
    }
    fn is_finite(&self) -> bool {
        self.iter().all(Linear::is_finite)
    }
}

const FIRST: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
const SECOND: [(f64, f64); 5] = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];

/// Largest offset (in units of `h`) touched by any stencil here.
pub const REACH: f64 = 2.0;

pub fn shifted(x: [f64; 4], mu: usize, t: f64) -> [f64; 4] {
    let mut y = x;
    y[mu] += t;
    y
}

/// d/dt f(t) at t = 0.
pub fn derivative<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    let mut acc = T::zero();
    for (k, w) in FIRST {
        acc = acc.add_scaled(w / (12.0 * h), f(k * h));
    }
    acc
}

/// d²/dt² f(t) at t = 0.
pub fn second_derivative<T: Linear>(f: impl Fn(f64) -> T, h: f64) -> T {
    let mut acc = T::zero();
    for (k, w) in SECOND {
        acc = acc.add_scaled(w / (12.0 * h * h), f(k * h));
    }
    acc
}

/// ∂_mu f at x.
pub fn partial<T: Linear>(f: &impl Fn([f64; 4]) -> T, x: [f64; 4], mu: usize, h: f64) -> T {
    derivative(|t| f(shifted(x, mu, t)), h)
}

/// All four partials, indexed by direction.
pub fn gradient<T: Linear>(f: &impl Fn([f64; 4]) -> T, x: [f64; 4], h: f64) -> [T; 4] {
    std::array::from_fn(|mu| partial(f, x, mu, h))
}

/// ∂_mu ∂_nu f at x: the pure stencil on the diagonal, nested first stencils off it.
pub fn second_partial<T: Linear>(f: &impl Fn([f64; 4]) -> T, x: [f64; 4], mu: usize, nu: usize, h: f64) -> T {
    if mu == nu {
        second_derivative(|t| f(shifted(x, mu, t)), h)
    } else {
        derivative(|s| partial(f, shifted(x, mu, s), nu, h), h)
    }
}

/// Full symmetric Hessian, `out[mu][nu] = ∂_mu ∂_nu f`.
pub fn hessian<T: Linear>(f: &impl Fn([f64; 4]) -> T, x: [f64; 4], h: f64) -> [[T; 4]; 4] {
    let mut out = [[T::zero(); 4]; 4];
    for mu in 0..4 {
        for nu in mu..4 {
            let v = second_partial(f, x, mu, nu, h);
            out[mu][nu] = v;
            out[nu][mu] = v;
        }
    }
    out
}
