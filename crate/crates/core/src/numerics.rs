//! Shared numerical utilities: quadrature on the uniform ξ grid, profile
//! moments, a pivoting band solver, and the 2×2 matrix exponential.

use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Node coordinates of a uniform grid on [0, 1] with `n` points.
pub fn xi_nodes(n: usize) -> Vec<f64> {
    let h = spacing(n);
    (0..n).map(|i| i as f64 * h).collect()
}

pub fn spacing(n: usize) -> f64 {
    assert!(n >= 2, "grid needs at least two nodes");
    1.0 / (n - 1) as f64
}

/// Cumulative trapezoidal integral of `f` over the uniform ξ grid.
///
/// `from_left` gives ∫₀^ξ f dξ′; otherwise ∫₁^ξ f dξ′ (which is zero at
/// ξ = 1 and equals −∫₀¹ f at ξ = 0).
pub fn integrate_xi(f: &[C64], from_left: bool) -> Vec<C64> {
    let n = f.len();
    let mut g = vec![ZERO; n];
    if n < 2 {
        return g;
    }
    let half_h = 0.5 * spacing(n);
    if from_left {
        for i in 1..n {
            g[i] = g[i - 1] + half_h * (f[i - 1] + f[i]);
        }
    } else {
        for i in (0..n - 1).rev() {
            g[i] = g[i + 1] - half_h * (f[i] + f[i + 1]);
        }
    }
    g
}

/// Trapezoidal weights for the uniform grid, so that Σ wᵢ fᵢ ≈ ∫₀¹ f.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = spacing(n);
    let mut w = vec![h; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    w
}

pub fn integrate(f: &[C64]) -> C64 {
    let h = spacing(f.len());
    let inner: C64 = f[1..f.len() - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[f.len() - 1]))
}

pub fn integrate_real(f: &[f64]) -> f64 {
    let h = spacing(f.len());
    let inner: f64 = f[1..f.len() - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[f.len() - 1]))
}

/// ∫₀¹ |f|² dξ.
pub fn norm_sq(f: &[C64]) -> f64 {
    let abs2: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
    integrate_real(&abs2)
}

/// ‖a − b‖ / ‖b‖ in the trapezoidal L2 norm.
pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = norm_sq(b);
    if denom == 0.0 {
        return norm_sq(&diff).sqrt();
    }
    (norm_sq(&diff) / denom).sqrt()
}

pub fn rel_l2_real(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// First moment and second central moment of the density |f|² on [0, 1].
/// Returns `None` when the profile carries no weight.
pub fn intensity_moments(f: &[C64]) -> Option<(f64, f64)> {
    let xi = xi_nodes(f.len());
    let rho: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
    let mass = integrate_real(&rho);
    if !(mass > 0.0) {
        return None;
    }
    let first: Vec<f64> = rho.iter().zip(&xi).map(|(r, x)| r * x).collect();
    let mean = integrate_real(&first) / mass;
    let second: Vec<f64> = rho
        .iter()
        .zip(&xi)
        .map(|(r, x)| r * (x - mean).powi(2))
        .collect();
    Some((mean, integrate_real(&second) / mass))
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn all_finite(f: &[C64]) -> bool {
    f.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Gaussian envelope exp(−(ξ−c)²/(2w²)) sampled on the grid.
pub fn gaussian(n: usize, center: f64, width: f64) -> Vec<C64> {
    xi_nodes(n)
        .into_iter()
        .map(|x| C64::new((-(x - center).powi(2) / (2.0 * width * width)).exp(), 0.0))
        .collect()
}

pub type Mat2 = [[C64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat2_norm1(a: &Mat2) -> f64 {
    (0..2)
        .map(|j| a[0][j].norm() + a[1][j].norm())
        .fold(0.0, f64::max)
}

/// Matrix exponential of a complex 2×2 matrix by scaling and squaring with
/// a truncated Taylor series on the scaled matrix (‖A/2ˢ‖₁ ≤ 1/2).
pub fn expm2(a: &Mat2) -> Mat2 {
    let norm = mat2_norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let b: Mat2 = [
        [a[0][0] * scale, a[0][1] * scale],
        [a[1][0] * scale, a[1][1] * scale],
    ];
    // 18 terms of a series with ‖B‖ ≤ 1/2 is below f64 resolution.
    let mut result: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
    let mut term = result;
    for k in 1..=18 {
        term = mat2_mul(&term, &b);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat2_mul(&result, &result);
    }
    result
}

/// Square banded system with partial pivoting.
///
/// Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl`
/// super-diagonals absorb fill-in from row interchanges.
pub struct BandedSystem {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
    pub rhs: Vec<C64>,
}

impl BandedSystem {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
            rhs: vec![ZERO; n],
        }
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = ZERO);
        self.rhs.iter_mut().for_each(|v| *v = ZERO);
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.ku + self.kl);
        row * self.width + (col + self.kl - row)
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(col <= row + self.ku, "entry outside declared band");
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    /// Gaussian elimination in place; returns the solution vector.
    pub fn solve(&mut self) -> Result<Vec<C64>, crate::Error> {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut pivot = k;
            let mut best = self.data[self.slot(k, k)].norm();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].norm();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(crate::Error::Domain(format!(
                    "singular banded system at column {k}"
                )));
            }
            let last_col = (k + reach).min(n - 1);
            if pivot != k {
                for c in k..=last_col {
                    let a = self.slot(k, c);
                    let b = self.slot(pivot, c);
                    self.data.swap(a, b);
                }
                self.rhs.swap(k, pivot);
            }
            let diag = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let s = self.slot(r, k);
                let factor = self.data[s] / diag;
                if factor == ZERO {
                    continue;
                }
                self.data[s] = ZERO;
                for c in k + 1..=last_col {
                    let src = self.data[self.slot(k, c)];
                    let dst = self.slot(r, c);
                    self.data[dst] -= factor * src;
                }
                let rk = self.rhs[k];
                self.rhs[r] -= factor * rk;
            }
        }
        let mut x = vec![ZERO; n];
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut acc = self.rhs[i];
            for c in i + 1..=last_col {
                acc -= self.data[self.slot(i, c)] * x[c];
            }
            x[i] = acc / self.data[self.slot(i, i)];
        }
        Ok(x)
    }
}
