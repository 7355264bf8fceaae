//! Chebyshev collocation on the strip and on the half line.
//!
//! Nodes are ordered as `x_j = cos(jπ/(n-1))`, so index `0` is the top of the
//! strip (`y = 1`) or the point at infinity of the half line, and index `n-1`
//! is the bottom wall (`y = -1` or `y = 0`).
//!
//! Half-line grids use the algebraic map `y = L (1 + ξ) / (1 - ξ)`. The node
//! `ξ = 1` is kept; all physical-space derivative rows vanish there because
//! the metric does, so boundary conditions at infinity are written with the
//! `ξ`-space matrices ([`SpectralGrid::d_xi`]).

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::Geometry;

/// Smallest admissible number of collocation points.
pub const MIN_POINTS: usize = 16;
/// Default resolution on the strip.
pub const DEFAULT_POINTS_STRIP: usize = 128;
/// Default resolution on the half line.
pub const DEFAULT_POINTS_HALF_SPACE: usize = 192;
/// Default half-line map parameter.
pub const DEFAULT_MAP_SCALE: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct SpectralGrid {
    n: usize,
    geometry: Geometry,
    map_scale: Option<f64>,
    xi: Vec<f64>,
    nodes: Vec<f64>,
    /// Physical derivatives `d/dy`, ..., `d⁴/dy⁴`.
    d: [Mat<f64>; 4],
    /// Derivatives with respect to the computational coordinate `ξ`.
    d_xi: [Mat<f64>; 4],
    weights: Vec<f64>,
    /// `(Q f)_i = ∫_{-1}^{ξ_i} f dξ`.
    cumulative: Mat<f64>,
}

impl SpectralGrid {
    /// Builds a grid of `n` Gauss–Lobatto points.
    ///
    /// `map_scale` is required on the half line and ignored on the strip.
    pub fn new(geometry: Geometry, n: usize, map_scale: Option<f64>) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_POINTS} collocation points, got {n}"
            )));
        }
        let map_scale = match geometry {
            Geometry::Strip => None,
            Geometry::HalfSpace => {
                let l = map_scale.ok_or_else(|| {
                    Error::InvalidInput("half-space grid needs a map scale".into())
                })?;
                if !(l > 0.0 && l.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "map scale must be positive, got {l}"
                    )));
                }
                Some(l)
            }
        };

        let xi = chebyshev_nodes(n);
        let d_xi = chebyshev_diff_matrices(n);
        let cc = clenshaw_curtis_weights(n);
        let cumulative = cumulative_integration_matrix(n);

        let (nodes, d, weights) = match map_scale {
            None => (xi.clone(), d_xi.clone(), cc),
            Some(l) => {
                let nodes: Vec<f64> = xi
                    .iter()
                    .enumerate()
                    .map(|(j, &s)| if j == 0 { f64::INFINITY } else { l * (1.0 + s) / (1.0 - s) })
                    .collect();
                let d = chain_rule(&xi, &d_xi, l);
                let weights = xi
                    .iter()
                    .zip(&cc)
                    .enumerate()
                    .map(|(j, (&s, &w))| if j == 0 { 0.0 } else { w * 2.0 * l / ((1.0 - s) * (1.0 - s)) })
                    .collect();
                (nodes, d, weights)
            }
        };

        Ok(Self {
            n,
            geometry,
            map_scale,
            xi,
            nodes,
            d,
            d_xi,
            weights,
            cumulative,
        })
    }

    /// Grid with the default resolution and map scale for `geometry`.
    pub fn default_for(geometry: Geometry) -> Self {
        match geometry {
            Geometry::Strip => Self::new(geometry, DEFAULT_POINTS_STRIP, None),
            Geometry::HalfSpace => {
                Self::new(geometry, DEFAULT_POINTS_HALF_SPACE, Some(DEFAULT_MAP_SCALE))
            }
        }
        .expect("default grid parameters are valid")
    }

    /// Same geometry and map scale with a different number of points.
    pub fn with_points(&self, n: usize) -> Result<Self> {
        Self::new(self.geometry, n, self.map_scale)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn map_scale(&self) -> Option<f64> {
        self.map_scale
    }

    /// Physical coordinates; `+∞` at index 0 on the half line.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Computational coordinates `ξ_j ∈ [-1, 1]`.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Physical differentiation matrix of order `k ∈ 1..=4`.
    pub fn d(&self, k: usize) -> &Mat<f64> {
        &self.d[k - 1]
    }

    /// Differentiation matrix of order `k ∈ 1..=4` in the computational
    /// coordinate.
    pub fn d_xi(&self, k: usize) -> &Mat<f64> {
        &self.d_xi[k - 1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices of nodes at a finite position.
    pub fn finite_nodes(&self) -> std::ops::Range<usize> {
        match self.geometry {
            Geometry::Strip => 0..self.n,
            Geometry::HalfSpace => 1..self.n,
        }
    }

    /// Index of the bottom wall.
    pub fn wall_index(&self) -> usize {
        self.n - 1
    }

    /// Samples `f` on the nodes. On the half line the point at infinity is
    /// filled with `at_infinity`.
    pub fn sample(&self, f: impl Fn(f64) -> f64, at_infinity: f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&y| if y.is_infinite() { at_infinity } else { f(y) })
            .collect()
    }

    /// `∫ f dy` over the physical domain.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self.weights.iter().zip(f).map(|(w, v)| w * v).sum())
    }

    /// Antiderivative from the bottom wall: `F(y_j) = ∫_{wall}^{y_j} f dy`.
    ///
    /// On the half line `f` must decay fast enough for `f dy/dξ` to vanish at
    /// `ξ = 1`; the value at index 0 is then `∫_0^∞ f dy`.
    pub fn antiderivative(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.cumulative_integral(f, false)
    }

    /// Integral from `y_j` to the top of the domain (`+∞` on the half line).
    pub fn integral_to_top(&self, f: &[f64]) -> Result<Vec<f64>> {
        let anti = self.antiderivative(f)?;
        let total = anti[0];
        Ok(anti.iter().map(|v| total - v).collect())
    }

    /// Like [`integral_to_top`](Self::integral_to_top), but on the half line
    /// the integrand at infinity is taken from the degree `n - 2`
    /// interpolant of the finite nodes instead of being set to zero. The
    /// integrand then has no top Chebyshev mode, and differentiating the
    /// result returns `-f` on every finite node, as a collocation solve
    /// closed at infinity would. Roundoff in `f` far out is carried along
    /// rather than filtered, so prefer `integral_to_top` for weighted moments.
    pub fn integral_to_top_collocated(&self, f: &[f64]) -> Result<Vec<f64>> {
        let anti = self.cumulative_integral(f, true)?;
        let total = anti[0];
        Ok(anti.iter().map(|v| total - v).collect())
    }

    fn cumulative_integral(&self, f: &[f64], fill_infinity: bool) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let mut h: Vec<f64> = match self.map_scale {
            None => f.to_vec(),
            Some(l) => self
                .xi
                .iter()
                .zip(f)
                .enumerate()
                .map(|(j, (&s, &v))| if j == 0 { 0.0 } else { v * 2.0 * l / ((1.0 - s) * (1.0 - s)) })
                .collect(),
        };
        if fill_infinity && self.map_scale.is_some() {
            // barycentric weights (-1)^j, halved at the ends
            let m = self.n - 1;
            let s: f64 = (1..=m)
                .map(|j| {
                    let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                    w * if j == m { 0.5 } else { 1.0 } * h[j]
                })
                .sum();
            h[0] = -2.0 * s;
        }
        Ok(matvec(&self.cumulative, &h))
    }

    /// `k`-th derivative of a real field.
    pub fn diff(&self, k: usize, f: &[f64]) -> Vec<f64> {
        matvec(self.d(k), f)
    }

    /// `k`-th derivative of a complex field.
    pub fn diff_c(&self, k: usize, f: &[Complex64]) -> Vec<Complex64> {
        matvec_c(self.d(k), f)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

/// `∫ f ḡ dy` over the physical domain.
pub fn inner_product(f: &[Complex64], g: &[Complex64], grid: &SpectralGrid) -> Result<Complex64> {
    grid.check_len(f.len())?;
    grid.check_len(g.len())?;
    Ok(grid
        .weights()
        .iter()
        .zip(f.iter().zip(g))
        .map(|(w, (a, b))| a * b.conj() * *w)
        .sum())
}

/// Inner product of two velocity fields given by their components:
/// `⟨(u₁, u₂), (v₁, v₂)⟩ = ∫ u₁ v̄₁ + u₂ v̄₂ dy`.
pub fn vector_inner_product(
    u: (&[Complex64], &[Complex64]),
    v: (&[Complex64], &[Complex64]),
    grid: &SpectralGrid,
) -> Result<Complex64> {
    Ok(inner_product(u.0, v.0, grid)? + inner_product(u.1, v.1, grid)?)
}

pub(crate) fn matvec(m: &Mat<f64>, f: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * f[j]).sum())
        .collect()
}

pub(crate) fn matvec_c(m: &Mat<f64>, f: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| f[j] * m[(i, j)]).sum())
        .collect()
}

/// Gauss–Lobatto points `cos(jπ/(n-1))`, computed in the symmetric sine form.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let t = std::f64::consts::PI * (m - 2.0 * k as f64) / (2.0 * m);
            t.sin()
        })
        .collect()
}

/// Chebyshev differentiation matrices of orders 1 to 4 on Gauss–Lobatto
/// points (Weideman–Reddy recursion with trigonometric differences, flipping
/// and the negative-sum diagonal).
pub fn chebyshev_diff_matrices(n: usize) -> [Mat<f64>; 4] {
    use std::f64::consts::PI;
    let th: Vec<f64> = (0..n).map(|k| k as f64 * PI / (n - 1) as f64).collect();

    let n1 = n / 2;
    let mut dx = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            dx[(i, j)] = if i < n1 {
                2.0 * ((th[j] + th[i]) / 2.0).sin() * ((th[j] - th[i]) / 2.0).sin()
            } else {
                let (a, b) = (n - 1 - i, n - 1 - j);
                -2.0 * ((th[b] + th[a]) / 2.0).sin() * ((th[b] - th[a]) / 2.0).sin()
            };
        }
        dx[(i, i)] = 1.0;
    }

    let mut c = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == n - 1 {
                v *= 2.0;
            }
            if j == 0 || j == n - 1 {
                v /= 2.0;
            }
            c[(i, j)] = v;
        }
    }

    let mut z = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z[(i, j)] = 1.0 / dx[(i, j)];
            }
        }
    }

    let mut d = Mat::<f64>::identity(n, n);
    let mut out: Vec<Mat<f64>> = Vec::with_capacity(4);
    for ell in 1..=4 {
        let prev = d.clone();
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = ell as f64 * z[(i, j)] * (c[(i, j)] * prev[(i, i)] - prev[(i, j)]);
                d[(i, j)] = v;
                row_sum += v;
            }
            d[(i, i)] = -row_sum;
        }
        out.push(d.clone());
    }
    let mut it = out.into_iter();
    [
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    ]
}

/// Clenshaw–Curtis weights on `n` Gauss–Lobatto points for `∫_{-1}^{1}`.
pub fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let m = n - 1;
    let mf = m as f64;
    let mut w = vec![0.0; n];
    let theta: Vec<f64> = (0..n).map(|k| PI * k as f64 / mf).collect();
    let mut v = vec![1.0; n];
    if m % 2 == 0 {
        w[0] = 1.0 / (mf * mf - 1.0);
        w[m] = w[0];
        for k in 1..m / 2 {
            let kf = k as f64;
            for i in 1..m {
                v[i] -= 2.0 * (2.0 * kf * theta[i]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for i in 1..m {
            v[i] -= (mf * theta[i]).cos() / (mf * mf - 1.0);
        }
    } else {
        w[0] = 1.0 / (mf * mf);
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            let kf = k as f64;
            for i in 1..m {
                v[i] -= 2.0 * (2.0 * kf * theta[i]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for i in 1..m {
        w[i] = 2.0 * v[i] / mf;
    }
    w
}

/// Spectral cumulative integration on Gauss–Lobatto points:
/// `(Q f)_i = ∫_{-1}^{x_i} p(x) dx` where `p` interpolates `f`.
pub fn cumulative_integration_matrix(n: usize) -> Mat<f64> {
    use std::f64::consts::PI;
    let m = n - 1;
    let mf = m as f64;
    let cw = |k: usize| if k == 0 || k == m { 2.0 } else { 1.0 };
    // interpolation coefficients a = C v
    let coef = Mat::<f64>::from_fn(n, n, |k, j| {
        2.0 / (mf * cw(k) * cw(j)) * ((j * k) as f64 * PI / mf).cos()
    });
    let mut q = Mat::<f64>::zeros(n, n);
    let mut b = vec![0.0; n + 1];
    for j in 0..n {
        let a = |k: usize| if k < n { coef[(k, j)] } else { 0.0 };
        b.iter_mut().for_each(|v| *v = 0.0);
        b[1] = a(0) - a(2) / 2.0;
        for (k, bk) in b.iter_mut().enumerate().skip(2) {
            *bk = (a(k - 1) - a(k + 1)) / (2.0 * k as f64);
        }
        let at_minus_one: f64 = b
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .sum();
        for i in 0..n {
            let theta = i as f64 * PI / mf;
            let val: f64 = b
                .iter()
                .enumerate()
                .map(|(k, v)| v * (k as f64 * theta).cos())
                .sum();
            q[(i, j)] = val - at_minus_one;
        }
    }
    q
}

/// Converts `ξ`-derivatives into `y`-derivatives for `y = L(1+ξ)/(1-ξ)`
/// (Faà di Bruno up to fourth order).
fn chain_rule(xi: &[f64], dxi: &[Mat<f64>; 4], l: f64) -> [Mat<f64>; 4] {
    let n = xi.len();
    // derivatives of ξ(y) = (y - L)/(y + L), written in terms of ξ
    let metric: Vec<[f64; 4]> = xi
        .iter()
        .map(|&s| {
            let q = 1.0 - s;
            [
                q * q / (2.0 * l),
                -q.powi(3) / (2.0 * l * l),
                3.0 * q.powi(4) / (4.0 * l.powi(3)),
                -3.0 * q.powi(5) / (2.0 * l.powi(4)),
            ]
        })
        .collect();

    let mut d1 = Mat::<f64>::zeros(n, n);
    let mut d2 = Mat::<f64>::zeros(n, n);
    let mut d3 = Mat::<f64>::zeros(n, n);
    let mut d4 = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let [m1, m2, m3, m4] = metric[i];
        for j in 0..n {
            let (a1, a2, a3, a4) = (dxi[0][(i, j)], dxi[1][(i, j)], dxi[2][(i, j)], dxi[3][(i, j)]);
            d1[(i, j)] = m1 * a1;
            d2[(i, j)] = m1 * m1 * a2 + m2 * a1;
            d3[(i, j)] = m1.powi(3) * a3 + 3.0 * m1 * m2 * a2 + m3 * a1;
            d4[(i, j)] = m1.powi(4) * a4
                + 6.0 * m1 * m1 * m2 * a3
                + (3.0 * m2 * m2 + 4.0 * m1 * m3) * a2
                + m4 * a1;
        }
    }
    [d1, d2, d3, d4]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn strip(n: usize) -> SpectralGrid {
        SpectralGrid::new(Geometry::Strip, n, None).unwrap()
    }

    fn half(n: usize, l: f64) -> SpectralGrid {
        SpectralGrid::new(Geometry::HalfSpace, n, Some(l)).unwrap()
    }

    fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
        v.into_iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    #[test]
    fn five_point_nodes() {
        let x = chebyshev_nodes(5);
        let expected = [1.0, 0.5f64.sqrt(), 0.0, -0.5f64.sqrt(), -1.0];
        for (a, b) in x.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpectralGrid::new(Geometry::Strip, 8, None).is_err());
        assert!(SpectralGrid::new(Geometry::HalfSpace, 32, None).is_err());
        assert!(SpectralGrid::new(Geometry::HalfSpace, 32, Some(0.0)).is_err());
        assert!(SpectralGrid::new(Geometry::HalfSpace, 32, Some(-1.0)).is_err());
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [16, 17, 33, 64, 128] {
            let s: f64 = strip(n).weights().iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn weights_integrate_polynomials() {
        for n in [16, 25, 64] {
            let g = strip(n);
            for m in 0..=(n - 2) {
                let f = g.sample(|y| y.powi(m as i32), 0.0);
                let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
                assert_abs_diff_eq!(g.integrate(&f).unwrap(), exact, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn d1_kills_constants_and_differentiates_y() {
        for n in [16, 64, 128] {
            let g = strip(n);
            let ones = vec![1.0; n];
            let norm = max_abs((0..n).map(|j| g.d(1)[(0, j)]));
            assert!(max_abs(g.diff(1, &ones)) <= 1e-10 * norm);
            let dy = g.diff(1, g.nodes());
            assert!(max_abs(dy.iter().map(|v| v - 1.0)) <= 1e-8);
        }
    }

    #[test]
    fn strip_monomials() {
        // fourth-derivative roundoff grows like n^8, so keep n moderate
        let n = 24;
        let g = strip(n);
        for m in 0..=6i32 {
            let f = g.sample(|y| y.powi(m), 0.0);
            for k in 1..=4usize {
                let df = g.diff(k, &f);
                for j in 1..n - 1 {
                    let y = g.nodes()[j];
                    let mut exact = 0.0;
                    if m >= k as i32 {
                        let coef: f64 = (0..k as i32).map(|i| (m - i) as f64).product();
                        exact = coef * y.powi(m - k as i32);
                    }
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (df[j] - exact).abs() <= 1e-7 * scale,
                        "d{k} y^{m} at {y}: {} vs {exact}",
                        df[j]
                    );
                }
            }
        }
    }

    #[test]
    fn spectral_convergence_sin3y() {
        let err = |n: usize| {
            let g = strip(n);
            let f = g.sample(|y| (3.0 * y).sin(), 0.0);
            let df = g.diff(1, &f);
            max_abs(g.nodes().iter().zip(&df).map(|(y, d)| d - 3.0 * (3.0 * y).cos()))
        };
        let (e32, e48) = (err(32), err(48));
        // sin(3y) is already at roundoff by n = 32
        assert!(e48 * 10.0 <= e32 || e32 < 1e-12, "{e32} -> {e48}");

        let err30 = |n: usize| {
            let g = strip(n);
            let f = g.sample(|y| (30.0 * y).sin(), 0.0);
            let df = g.diff(1, &f);
            max_abs(g.nodes().iter().zip(&df).map(|(y, d)| d - 30.0 * (30.0 * y).cos()))
        };
        assert!(err30(48) * 10.0 <= err30(32));
    }

    #[test]
    fn integral_of_derivative() {
        let g = strip(64);
        let f = g.sample(|y| (2.0 * y).exp() * (y + 0.3).cos(), 0.0);
        let df = g.diff(1, &f);
        let lhs = g.integrate(&df).unwrap();
        assert_abs_diff_eq!(lhs, f[0] - f[63], epsilon = 1e-9);
    }

    #[test]
    fn half_space_exponential_derivative() {
        let g = half(64, 4.0);
        let f = g.sample(|y| (-y).exp(), 0.0);
        let df = g.diff(1, &f);
        for j in g.finite_nodes() {
            let y = g.nodes()[j];
            if y <= 20.0 {
                assert!((df[j] + (-y).exp()).abs() <= 1e-8, "at {y}");
            }
        }
    }

    #[test]
    fn half_space_second_derivative() {
        for l in [2.0, 4.0, 10.0] {
            let g = half(128, l);
            let f = g.sample(|y| y * y * (-y).exp(), 0.0);
            let d2 = g.diff(2, &f);
            let d3 = g.diff(3, &f);
            let d4 = g.diff(4, &f);
            for j in g.finite_nodes() {
                let y = g.nodes()[j];
                if y > 15.0 {
                    continue;
                }
                let e = (-y).exp();
                assert!((d2[j] - (2.0 - 4.0 * y + y * y) * e).abs() <= 1e-6, "d2 L={l} y={y}");
                // higher orders carry the roundoff of the clustered wall rows
                let row = |k: usize| (0..g.n()).map(|i| g.d(k)[(j, i)].abs()).sum::<f64>();
                let tol3 = 1e-6 + 1e-14 * row(3);
                let tol4 = 1e-6 + 1e-14 * row(4);
                assert!((d3[j] - (-6.0 + 6.0 * y - y * y) * e).abs() <= tol3, "d3 L={l} y={y}");
                assert!((d4[j] - (12.0 - 8.0 * y + y * y) * e).abs() <= tol4, "d4 L={l} y={y}");
            }
        }
    }

    #[test]
    fn antiderivatives() {
        let g = strip(40);
        let f = g.sample(|y| y.cos(), 0.0);
        let anti = g.antiderivative(&f).unwrap();
        for (j, &y) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(anti[j], y.sin() + 1f64.sin(), epsilon = 1e-13);
        }
        let h = half(96, 4.0);
        let f = h.sample(|y| (-y).exp(), 0.0);
        let anti = h.antiderivative(&f).unwrap();
        let tail = h.integral_to_top(&f).unwrap();
        for j in h.finite_nodes() {
            let y = h.nodes()[j];
            assert_abs_diff_eq!(anti[j], 1.0 - (-y).exp(), epsilon = 1e-10);
            assert_abs_diff_eq!(tail[j], (-y).exp(), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(anti[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn collocated_tail_integral_is_inverted_by_d1() {
        let h = half(128, 4.0);
        // decaying data with an alternating far-field component
        let f: Vec<f64> = h
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &y)| if y.is_finite() { (-y).exp() + 1e-10 * if j % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 })
            .collect();
        let tail = h.integral_to_top_collocated(&f).unwrap();
        let back = h.diff(1, &tail);
        for j in h.finite_nodes() {
            assert_abs_diff_eq!(back[j], -f[j], epsilon = 1e-11);
        }
        assert_abs_diff_eq!(tail[0], 0.0);
        // identical to the plain tail integral for data without a top mode
        let smooth = h.sample(|y| (-y).exp(), 0.0);
        let a = h.integral_to_top(&smooth).unwrap();
        let b = h.integral_to_top_collocated(&smooth).unwrap();
        for j in 0..h.n() {
            assert_abs_diff_eq!(a[j], b[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn half_space_rows_vanish_at_infinity() {
        let g = half(32, 4.0);
        for k in 1..=4 {
            assert!((0..32).all(|j| g.d(k)[(0, j)] == 0.0));
        }
        assert_eq!(g.weights()[0], 0.0);
        assert!(g.nodes()[0].is_infinite());
        assert_eq!(g.nodes()[31], 0.0);
    }

    #[test]
    fn inner_products() {
        let one = |n| vec![Complex64::new(1.0, 0.0); n];
        let g = strip(33);
        let n = g.n();
        assert_abs_diff_eq!(inner_product(&one(n), &one(n), &g).unwrap().re, 2.0, epsilon = 1e-13);
        let y: Vec<Complex64> = g.nodes().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        assert!(inner_product(&y, &one(n), &g).unwrap().norm() < 1e-14);

        let zero = vec![Complex64::new(0.0, 0.0); n];
        let a = vector_inner_product((&one(n), &zero), (&one(n), &zero), &g).unwrap();
        assert_abs_diff_eq!(a.re, 2.0, epsilon = 1e-13);
        let b = vector_inner_product((&one(n), &zero), (&zero, &one(n)), &g).unwrap();
        assert_eq!(b, Complex64::new(0.0, 0.0));

        let psi: Vec<f64> = g.nodes().iter().map(|y| (1.0 - y * y) * (y + 2.0)).collect();
        let ipsi: Vec<Complex64> = psi.iter().map(|&v| Complex64::new(0.0, v)).collect();
        let rpsi: Vec<Complex64> = psi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let norm2 = g.integrate(&psi.iter().map(|v| v * v).collect::<Vec<_>>()).unwrap();
        let c = vector_inner_product((&ipsi, &zero), (&rpsi, &zero), &g).unwrap();
        assert_abs_diff_eq!(c.re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.im, norm2, epsilon = 1e-12);

        let h = half(96, 4.0);
        let e: Vec<Complex64> = h.sample(|y| (-y).exp(), 0.0).into_iter().map(Complex64::from).collect();
        assert_abs_diff_eq!(inner_product(&e, &e, &h).unwrap().re, 0.5, epsilon = 1e-8);

        assert!(matches!(
            inner_product(&one(n), &one(n - 1), &g),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
