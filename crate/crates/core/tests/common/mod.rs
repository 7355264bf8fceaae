//! Compound-matrix shooting for the Orr–Sommerfeld equation, shared by the
//! oracle tests. Independent of the collocation code.

use num_complex::Complex64;

pub type Minors = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `m' = M m + m Mᵀ` for the companion matrix of `φ'''' = a φ'' + b φ`.
fn rhs(m: &Minors, a: Complex64, b: Complex64) -> Minors {
    let big_m = [
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ZERO, ZERO, ONE],
        [b, ZERO, a, ZERO],
    ];
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = ZERO;
            for k in 0..4 {
                s += big_m[i][k] * m[k][j] + m[i][k] * big_m[j][k];
            }
            out[i][j] = s;
        }
    }
    out
}

fn axpy(m: &Minors, h: f64, k: &Minors) -> Minors {
    let mut out = *m;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += k[i][j] * h;
        }
    }
    out
}

/// OS coefficients `(a, b)` at `y` for base flow values `(U, U'')`.
pub fn os_coeffs(alpha: f64, re: f64, c: Complex64, u: f64, upp: f64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    let a = 2.0 * alpha * alpha + i * alpha * re * (u - c);
    let b = -alpha.powi(4) - i * alpha * re * ((u - c) * alpha * alpha + upp);
    (a, b)
}

/// Classical RK4 on the minors from `y0` to `y1`, renormalizing every step.
pub fn integrate(
    mut m: Minors,
    y0: f64,
    y1: f64,
    steps: usize,
    coeffs: impl Fn(f64) -> (Complex64, Complex64),
) -> Minors {
    let h = (y1 - y0) / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let (a0, b0) = coeffs(y);
        let (a1, b1) = coeffs(y + 0.5 * h);
        let (a2, b2) = coeffs(y + h);
        let k1 = rhs(&m, a0, b0);
        let k2 = rhs(&axpy(&m, 0.5 * h, &k1), a1, b1);
        let k3 = rhs(&axpy(&m, 0.5 * h, &k2), a1, b1);
        let k4 = rhs(&axpy(&m, h, &k3), a2, b2);
        for r in 0..4 {
            for s in 0..4 {
                m[r][s] += (k1[r][s] + 2.0 * k2[r][s] + 2.0 * k3[r][s] + k4[r][s]) * (h / 6.0);
            }
        }
        let norm = m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        for v in m.iter_mut().flatten() {
            *v /= norm;
        }
        y += h;
    }
    m
}

/// Minors of two solution vectors `p` and `q`.
pub fn minors_of(p: [Complex64; 4], q: [Complex64; 4]) -> Minors {
    let mut m = [[ZERO; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = p[a] * q[b] - p[b] * q[a];
        }
    }
    m
}

/// Secant iteration on a scalar function of `c`.
pub fn secant(f: impl Fn(Complex64) -> Complex64, guess: Complex64) -> Complex64 {
    let (mut c0, mut c1) = (guess, guess * 1.001);
    let (mut f0, mut f1) = (f(c0), f(c1));
    for _ in 0..60 {
        let c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
        c0 = c1;
        f0 = f1;
        c1 = c2;
        f1 = f(c1);
        if (c1 - c0).norm() < 1e-14 {
            break;
        }
    }
    c1
}
