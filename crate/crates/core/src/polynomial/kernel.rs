use super::MultilinearPolynomial;

/// Largest `n` for which hypercube points fit in a `u64` mask.
pub const MAX_MASK_VARS: usize = 64;

#[inline]
fn chi(set: u64, point: u64) -> f64 {
    if (set & point).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Monomials packed as bitmasks for fast evaluation on hypercube vertices.
///
/// A point is a mask with bit `i` set iff `x_i = -1`; the monomial on `S`
/// evaluates to `(-1)^{|S ∩ point|}`.
#[derive(Debug, Clone)]
pub struct CubeKernel {
    n: usize,
    terms: Vec<(u64, f64)>,
}

impl CubeKernel {
    pub fn new(p: &MultilinearPolynomial) -> Option<Self> {
        if p.n() > MAX_MASK_VARS {
            return None;
        }
        let terms = p
            .terms()
            .iter()
            .map(|t| {
                let mask = t.vars().iter().fold(0u64, |m, &v| m | 1 << v);
                (mask, t.coeff())
            })
            .collect();
        Some(Self { n: p.n(), terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn eval(&self, point: u64) -> f64 {
        self.terms.iter().map(|&(s, c)| c * chi(s, point)).sum()
    }

    /// `(p(A), D_B p(A))` for vertices `A = a`, `B = b`.
    #[inline]
    pub fn value_and_directional(&self, a: u64, b: u64) -> (f64, f64) {
        let disagree = a ^ b;
        let mut value = 0.0;
        let mut slope = 0.0;
        for &(s, c) in &self.terms {
            let m = c * chi(s, a);
            value += m;
            // sum_{i in S} A_i B_i
            let dot = s.count_ones() as f64 - 2.0 * (s & disagree).count_ones() as f64;
            slope += m * dot;
        }
        (value, slope)
    }

    /// Writes `∇p(A)` into `grad` and returns `p(A)`.
    pub fn value_and_gradient(&self, a: u64, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for &(s, c) in &self.terms {
            let m = c * chi(s, a);
            value += m;
            let mut rest = s;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                // ∂/∂x_i of the monomial at A is m / A_i = m * A_i.
                grad[i] += if a >> i & 1 == 1 { -m } else { m };
            }
        }
        value
    }
}

/// Flattened monomial lists for evaluation at real points.
#[derive(Debug, Clone)]
pub struct RealKernel {
    n: usize,
    offsets: Vec<usize>,
    vars: Vec<usize>,
    coeffs: Vec<f64>,
}

impl RealKernel {
    pub fn new(p: &MultilinearPolynomial) -> Self {
        let mut offsets = Vec::with_capacity(p.num_terms() + 1);
        let mut vars = Vec::new();
        let mut coeffs = Vec::with_capacity(p.num_terms());
        offsets.push(0);
        for t in p.terms() {
            vars.extend(t.vars().iter().map(|&v| v as usize));
            offsets.push(vars.len());
            coeffs.push(t.coeff());
        }
        Self {
            n: p.n(),
            offsets,
            vars,
            coeffs,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let mut m = c;
            for &v in &self.vars[self.offsets[k]..self.offsets[k + 1]] {
                m *= x[v];
            }
            total += m;
        }
        total
    }

    /// `p(x)` and its gradient at a hypercube point (`x_i = ±1`), using
    /// `∂_i m(x) = m(x) x_i` for a monomial containing `i`.
    pub fn value_and_gradient_on_cube(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let vars = &self.vars[self.offsets[k]..self.offsets[k + 1]];
            let m = vars.iter().fold(c, |m, &v| m * x[v]);
            for &v in vars {
                grad[v] += m * x[v];
            }
            total += m;
        }
        total
    }

    /// `(p(x), D_v p(x))` in one pass, carrying the first-order part of
    /// `p(x + t v)` through each monomial product.
    #[inline]
    pub fn value_and_slope(&self, x: &[f64], v: &[f64]) -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let (mut a, mut b) = (c, 0.0);
            for &i in &self.vars[self.offsets[k]..self.offsets[k + 1]] {
                b = a * v[i] + b * x[i];
                a *= x[i];
            }
            value += a;
            slope += b;
        }
        (value, slope)
    }
}
