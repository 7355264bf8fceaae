//! Orr–Sommerfeld operator, its adjoint, and the resolvent problems of the
//! weakly nonlinear expansion.
//!
//! The direct problem is the pencil `A ψ = c B ψ` with
//!
//! ```text
//! A = U (D² − α²) − U'' − (ν / iα) (D² − α²)²,     B = D² − α²,
//! ```
//!
//! and the adjoint (with respect to the kinetic-energy pairing of the
//! velocities `ζ = (−ψ', iαψ)`) is
//!
//! ```text
//! A* = U (D² − α²) + 2 U' D − (iν / α) (D² − α²)²,  B* = D² − α²,
//! ```
//!
//! whose eigenvalues are the conjugates of the direct ones.
//!
//! Four rows of each pencil carry the boundary conditions `ψ = ψ' = 0` at
//! the walls (on the half line: at the wall, plus `ψ = ∂_ξψ = 0` at
//! `ξ = 1`). On those rows `A` holds the condition and `B` holds the
//! condition divided by one of [`SENTINELS`], so each boundary row
//! contributes an eigenvalue exactly at its sentinel, far outside the
//! physical range.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Lu};
use crate::profiles::{Geometry, ShearProfile};
use crate::spectral::{self, SpectralGrid};

/// Phase speeds assigned to the four boundary-row eigenvalues. They are kept
/// distinct so that the QZ iteration does not see a defective cluster.
pub const SENTINELS: [Complex64; 4] = [
    Complex64::new(0.0, -1000.0),
    Complex64::new(0.0, -1001.0),
    Complex64::new(0.0, -1002.0),
    Complex64::new(0.0, -1003.0),
];
/// Half-width in `ℜc` of the band around `U₊` treated as continuous
/// spectrum on the half line.
pub const CONTINUUM_BAND: f64 = 0.02;
/// Eigenvalues with `|c|` above this are treated as spurious.
pub const SPURIOUS_CUTOFF: f64 = 50.0;
/// Modes with a larger normwise backward error are discarded.
pub const MAX_MODE_RESIDUAL: f64 = 1e-6;
/// Largest admissible distance between the adjoint eigenvalue and `conj(c)`.
pub const ADJOINT_MATCH_TOL: f64 = 1e-6;
/// Resonance margin below which the second-harmonic solve warns.
pub const RESONANCE_WARN: f64 = 1e-4;
/// Resonance margin below which the second-harmonic solve fails.
pub const RESONANCE_FAIL: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PencilKind {
    Direct,
    Adjoint,
    /// Direct operator at wavenumber `2α` (used by the resonance guard).
    SecondHarmonic,
}

/// A discretized Orr–Sommerfeld pencil `(A, B)`.
#[derive(Clone, Debug)]
pub struct OSPencil {
    pub a: CMat,
    pub b: CMat,
    /// Wavenumber the pencil was assembled at (`2α` for
    /// [`PencilKind::SecondHarmonic`]).
    pub alpha: f64,
    pub nu: f64,
    pub bc_rows: [usize; 4],
    pub kind: PencilKind,
    /// Free-stream speed `U₊` on the half line. The continuous spectrum sits
    /// on `ℜc = U₊` and is skipped when picking the leading discrete mode.
    pub continuum: Option<f64>,
}

/// Leading eigenpair with its adjoint, normalized so that `⟨ζ, ζ*⟩ = 1`.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub alpha: f64,
    pub nu: f64,
    /// Complex phase speed.
    pub c: Complex64,
    /// Growth rate `λ = −iαc`.
    pub lambda: Complex64,
    /// Stream function on the grid, scaled to unit maximum with a real
    /// positive value at the maximum.
    pub psi: Vec<Complex64>,
    pub psi_star: Vec<Complex64>,
    /// Eigenvalue found for the adjoint pencil (≈ `conj(c)`).
    pub c_adjoint: Complex64,
    pub zeta_norm_ok: bool,
    /// Normwise backward errors `‖(A − cB)ψ‖ / ((‖A‖ + |c|‖B‖)‖ψ‖)`.
    pub residual_direct: f64,
    pub residual_adjoint: f64,
}

impl EigenSolution {
    /// `ℜλ = α ℑc`.
    pub fn growth_rate(&self) -> f64 {
        self.lambda.re
    }

    /// `ω₀ = ℑλ = −α ℜc`.
    pub fn omega(&self) -> f64 {
        self.lambda.im
    }

    /// Multiplies `ψ` by `s` and rescales `ψ*` by `1/s̄`, which keeps
    /// `⟨ζ, ζ*⟩` unchanged.
    pub fn rescaled(&self, s: Complex64) -> Self {
        let t = (Complex64::new(1.0, 0.0) / s).conj();
        let mut out = self.clone();
        out.psi.iter_mut().for_each(|v| *v *= s);
        out.psi_star.iter_mut().for_each(|v| *v *= t);
        out
    }
}

/// Result of a dense survey: a physical eigenvalue with its eigenvector.
#[derive(Clone, Debug)]
pub struct Mode {
    pub c: Complex64,
    pub psi: Vec<Complex64>,
    pub residual: f64,
}

/// Velocity `ζ = (−ψ', iαψ)` of the single-harmonic stream function.
pub fn velocity(
    psi: &[Complex64],
    alpha: f64,
    grid: &SpectralGrid,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let u = grid.diff_c(1, psi).into_iter().map(|v| -v).collect();
    let v = psi.iter().map(|p| I * alpha * p).collect();
    (u, v)
}

/// `⟨ζ, ζ*⟩` for the velocities generated by `psi` and `psi_star`.
pub fn zeta_pairing(
    psi: &[Complex64],
    psi_star: &[Complex64],
    alpha: f64,
    grid: &SpectralGrid,
) -> Result<Complex64> {
    let z = velocity(psi, alpha, grid);
    let zs = velocity(psi_star, alpha, grid);
    spectral::vector_inner_product((&z.0, &z.1), (&zs.0, &zs.1), grid)
}

fn check_params(alpha: f64, nu: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "wavenumber must be positive, got alpha = {alpha}"
        )));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "viscosity must be positive, got nu = {nu}"
        )));
    }
    Ok(())
}

struct BaseFlow {
    u: Vec<f64>,
    du: Vec<f64>,
    ddu: Vec<f64>,
}

fn base_flow(profile: &ShearProfile, grid: &SpectralGrid) -> Result<BaseFlow> {
    if profile.geometry() != grid.geometry() {
        return Err(Error::InvalidInput(format!(
            "profile {} lives on the {} but the grid is on the {}",
            profile.name(),
            profile.geometry(),
            grid.geometry()
        )));
    }
    let u_inf = profile.u_plus().unwrap_or(0.0);
    Ok(BaseFlow {
        u: grid.sample(|y| profile.u(y), u_inf),
        du: grid.sample(|y| profile.du(y), 0.0),
        ddu: grid.sample(|y| profile.ddu(y), 0.0),
    })
}

/// Rows of the four boundary conditions and the condition vectors placed in
/// them.
pub(crate) fn wall_conditions(grid: &SpectralGrid) -> [(usize, Vec<f64>); 4] {
    let n = grid.n();
    let unit = |k: usize| {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        e
    };
    let row = |m: &faer::Mat<f64>, i: usize| (0..n).map(|j| m[(i, j)]).collect::<Vec<_>>();
    let top_slope = match grid.geometry() {
        Geometry::Strip => row(grid.d(1), 0),
        // physical derivatives vanish identically at ξ = 1
        Geometry::HalfSpace => row(grid.d_xi(1), 0),
    };
    [
        (0, unit(0)),
        (1, top_slope),
        (n - 2, row(grid.d(1), n - 1)),
        (n - 1, unit(n - 1)),
    ]
}

fn impose_conditions(grid: &SpectralGrid, a: &mut CMat, b: Option<&mut CMat>) -> [usize; 4] {
    let conds = wall_conditions(grid);
    let n = grid.n();
    for (r, cond) in &conds {
        for j in 0..n {
            a[(*r, j)] = Complex64::new(cond[j], 0.0);
        }
    }
    if let Some(b) = b {
        for ((r, cond), s) in conds.iter().zip(SENTINELS) {
            for j in 0..n {
                b[(*r, j)] = Complex64::new(cond[j], 0.0) / s;
            }
        }
    }
    [conds[0].0, conds[1].0, conds[2].0, conds[3].0]
}

/// `(D² − k²)` and `(D² − k²)²` as dense complex matrices.
fn laplacians(grid: &SpectralGrid, k: f64) -> (CMat, CMat) {
    let n = grid.n();
    let (d2, d4) = (grid.d(2), grid.d(4));
    let k2 = k * k;
    let lap = CMat::from_fn(n, n, |i, j| {
        let diag = if i == j { k2 } else { 0.0 };
        Complex64::new(d2[(i, j)] - diag, 0.0)
    });
    let bih = CMat::from_fn(n, n, |i, j| {
        let diag = if i == j { k2 * k2 } else { 0.0 };
        Complex64::new(d4[(i, j)] - 2.0 * k2 * d2[(i, j)] + diag, 0.0)
    });
    (lap, bih)
}

fn assemble(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    k: f64,
    nu: f64,
    kind: PencilKind,
) -> Result<OSPencil> {
    let base = base_flow(profile, grid)?;
    let n = grid.n();
    let (lap, bih) = laplacians(grid, k);
    let d1 = grid.d(1);
    // direct: ν/(iα) enters with a minus sign, i.e. +iν/α; adjoint: −iν/α
    let visc = match kind {
        PencilKind::Direct | PencilKind::SecondHarmonic => I * nu / k,
        PencilKind::Adjoint => -I * nu / k,
    };
    let mut a = CMat::from_fn(n, n, |i, j| {
        let mut v = lap[(i, j)] * base.u[i] + bih[(i, j)] * visc;
        match kind {
            PencilKind::Direct | PencilKind::SecondHarmonic => {
                if i == j {
                    v -= base.ddu[i];
                }
            }
            PencilKind::Adjoint => v += 2.0 * base.du[i] * d1[(i, j)],
        }
        v
    });
    let mut b = lap;
    let bc_rows = impose_conditions(grid, &mut a, Some(&mut b));
    Ok(OSPencil {
        a,
        b,
        alpha: k,
        nu,
        bc_rows,
        kind,
        continuum: profile.u_plus(),
    })
}

/// Orr–Sommerfeld pencil at wavenumber `alpha` and viscosity `nu = 1/Re`.
pub fn assemble_direct(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
) -> Result<OSPencil> {
    check_params(alpha, nu)?;
    assemble(profile, grid, alpha, nu, PencilKind::Direct)
}

/// Adjoint Orr–Sommerfeld pencil (eigenvalues `conj(c)`).
pub fn assemble_adjoint(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
) -> Result<OSPencil> {
    check_params(alpha, nu)?;
    assemble(profile, grid, alpha, nu, PencilKind::Adjoint)
}

/// Direct pencil at the second-harmonic wavenumber `2α`.
pub fn assemble_second_harmonic(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
) -> Result<OSPencil> {
    check_params(alpha, nu)?;
    assemble(profile, grid, 2.0 * alpha, nu, PencilKind::SecondHarmonic)
}

/// Direct pencil without the sign check on `alpha`; negative wavenumbers
/// give the conjugate mirror of the spectrum.
pub fn assemble_direct_signed(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
) -> Result<OSPencil> {
    check_params(alpha.abs(), nu)?;
    assemble(profile, grid, alpha, nu, PencilKind::Direct)
}

impl OSPencil {
    /// Normwise backward error of the eigenpair `(c, v)`.
    pub fn residual(&self, c: Complex64, v: &[Complex64]) -> f64 {
        let av = linalg::cmatvec(&self.a, v);
        let bv = linalg::cmatvec(&self.b, v);
        let r = av
            .iter()
            .zip(&bv)
            .map(|(x, y)| (x - c * y).norm())
            .fold(0.0, f64::max);
        let scale = (linalg::norm_inf(&self.a) + c.norm() * linalg::norm_inf(&self.b))
            * linalg::vnorm_inf(v);
        if scale == 0.0 {
            0.0
        } else {
            r / scale
        }
    }

    fn is_physical(c: Complex64) -> bool {
        c.re.is_finite() && c.im.is_finite() && c.norm() <= SPURIOUS_CUTOFF
    }

    /// All eigenvalues of the pencil (finite ones; infinite ones dropped).
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        Ok(linalg::generalized_eigenvalues(&self.a, &self.b)?
            .into_iter()
            .filter(|(_, beta)| beta.norm() > 0.0)
            .map(|(s, beta)| s / beta)
            .collect())
    }

    /// Eigenvalues inside the physical window `|c| ≤ 50`.
    pub fn physical_eigenvalues(&self) -> Result<Vec<Complex64>> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .filter(|c| Self::is_physical(*c))
            .collect())
    }

    /// Dense eigensolve; returns the physical modes sorted by decreasing
    /// `ℑc` (decreasing growth rate).
    pub fn modes(&self) -> Result<Vec<Mode>> {
        let (vals, vecs) = linalg::generalized_eigen(&self.a, &self.b)?;
        let n = self.a.nrows();
        let mut modes: Vec<Mode> = vals
            .into_iter()
            .enumerate()
            .filter(|(_, (_, beta))| beta.norm() > 0.0)
            .map(|(k, (s, beta))| (k, s / beta))
            .filter(|(_, c)| Self::is_physical(*c))
            .map(|(k, c)| {
                let psi: Vec<Complex64> = (0..n).map(|i| vecs[(i, k)]).collect();
                let residual = self.residual(c, &psi);
                Mode { c, psi, residual }
            })
            .filter(|m| m.residual <= MAX_MODE_RESIDUAL)
            .collect();
        modes.sort_by(|x, y| y.c.im.total_cmp(&x.c.im));
        Ok(modes)
    }

    /// [`modes`](Self::modes) without the discretized continuous spectrum.
    pub fn discrete_modes(&self) -> Result<Vec<Mode>> {
        let modes = self.modes()?;
        Ok(modes.into_iter().filter(|m| !self.in_continuum(m.c)).collect())
    }

    pub fn in_continuum(&self, c: Complex64) -> bool {
        self.continuum.is_some_and(|u| (c.re - u).abs() < CONTINUUM_BAND)
    }

    /// Shift-invert iteration with Rayleigh-quotient shift updates.
    ///
    /// Converges to the eigenvalue nearest `shift` when started without a
    /// good vector; with a good starting vector it refines that mode.
    pub fn shift_invert(&self, shift: Complex64, start: Option<&[Complex64]>) -> Result<Mode> {
        let n = self.a.nrows();
        let mut v: Vec<Complex64> = match start {
            Some(s) => s.to_vec(),
            None => (0..n)
                .map(|j| Complex64::new(1.0 + 0.37 * (j as f64).sin(), 0.21 * (j as f64).cos()))
                .collect(),
        };
        let mut sigma = shift;
        let mut best: Option<Mode> = None;
        for outer in 0..12 {
            let m = CMat::from_fn(n, n, |i, j| self.a[(i, j)] - sigma * self.b[(i, j)]);
            let lu = Lu::new(&m);
            let inner = if outer == 0 { 4 } else { 2 };
            for _ in 0..inner {
                let bv = linalg::cmatvec(&self.b, &v);
                let mut w = lu.solve(&bv);
                let norm = linalg::vnorm_inf(&w);
                if !(norm.is_finite() && norm > 0.0) {
                    // exactly singular shift: nudge and retry
                    sigma *= Complex64::new(1.0 + 1e-10, 1e-10);
                    break;
                }
                w.iter_mut().for_each(|x| *x /= norm);
                v = w;
            }
            let av = linalg::cmatvec(&self.a, &v);
            let bv = linalg::cmatvec(&self.b, &v);
            let num: Complex64 = bv.iter().zip(&av).map(|(b, a)| b.conj() * a).sum();
            let den: Complex64 = bv.iter().map(|b| b.norm_sqr()).sum::<f64>().into();
            let c = num / den;
            let residual = self.residual(c, &v);
            let improved = best.as_ref().map_or(true, |b| residual < b.residual);
            if improved {
                best = Some(Mode {
                    c,
                    psi: v.clone(),
                    residual,
                });
            }
            let settled = (c - sigma).norm() <= 1e-13 * c.norm().max(1e-3);
            if residual < 1e-14 || (outer > 0 && settled) {
                break;
            }
            sigma = c;
        }
        let best = best.ok_or_else(|| Error::Eigensolver("shift-invert produced no iterate".into()))?;
        if best.residual > MAX_MODE_RESIDUAL || !Self::is_physical(best.c) {
            return Err(Error::Eigensolver(format!(
                "shift-invert from {shift} stalled at c = {} (residual {:.2e})",
                best.c, best.residual
            )));
        }
        Ok(best)
    }
}

fn check_pair(direct: &OSPencil, adjoint: &OSPencil) -> Result<()> {
    if direct.kind != PencilKind::Direct || adjoint.kind != PencilKind::Adjoint {
        return Err(Error::InvalidInput(
            "expected a direct and an adjoint pencil".into(),
        ));
    }
    if direct.alpha != adjoint.alpha || direct.nu != adjoint.nu || direct.a.nrows() != adjoint.a.nrows() {
        return Err(Error::InvalidInput(
            "direct and adjoint pencils were assembled at different (alpha, nu, n)".into(),
        ));
    }
    Ok(())
}

/// Scales `psi` to unit maximum modulus, real and positive at the maximum.
pub(crate) fn normalize_phase(psi: &mut [Complex64]) {
    let (k, _) = psi
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bk, bv), (k, v)| if v.norm() > bv { (k, v.norm()) } else { (bk, bv) });
    let s = psi[k];
    if s.norm() > 0.0 {
        psi.iter_mut().for_each(|v| *v /= s);
    }
}

fn finish(
    direct: &OSPencil,
    adjoint: &OSPencil,
    grid: &SpectralGrid,
    mode: Mode,
) -> Result<EigenSolution> {
    let alpha = direct.alpha;
    let mut psi = mode.psi;
    normalize_phase(&mut psi);
    // unit velocity amplitude, so that ε in the expansion is a velocity scale
    let (u, v) = velocity(&psi, alpha, grid);
    let k = u.iter().chain(&v).map(|z| z.norm()).fold(0.0, f64::max);
    if k > 0.0 && k.is_finite() {
        psi.iter_mut().for_each(|z| *z /= k);
    }
    let target = mode.c.conj();
    let start: Vec<Complex64> = psi.iter().map(|v| v.conj()).collect();
    let adj = adjoint.shift_invert(target, Some(&start))?;
    let distance = (adj.c - target).norm();
    if distance > ADJOINT_MATCH_TOL * mode.c.norm().max(1.0) {
        return Err(Error::AdjointMismatch {
            adjoint: adj.c,
            expected: target,
            distance,
        });
    }
    let mut psi_star = adj.psi;
    let p = zeta_pairing(&psi, &psi_star, alpha, grid)?;
    let zeta_norm_ok = p.norm() > 0.0 && p.is_finite();
    if zeta_norm_ok {
        // ⟨ζ, tζ*⟩ = t̄ p  ⇒  t = conj(1/p)
        let t = (Complex64::new(1.0, 0.0) / p).conj();
        psi_star.iter_mut().for_each(|v| *v *= t);
    }
    let residual_direct = direct.residual(mode.c, &psi);
    let residual_adjoint = adjoint.residual(adj.c, &psi_star);
    Ok(EigenSolution {
        alpha,
        nu: direct.nu,
        c: mode.c,
        lambda: -I * alpha * mode.c,
        psi,
        psi_star,
        c_adjoint: adj.c,
        zeta_norm_ok,
        residual_direct,
        residual_adjoint,
    })
}

/// Least-stable discrete mode from a dense solve, polished by inverse
/// iteration, with its normalized adjoint.
pub fn leading_mode(
    direct: &OSPencil,
    adjoint: &OSPencil,
    grid: &SpectralGrid,
) -> Result<EigenSolution> {
    check_pair(direct, adjoint)?;
    let mode = direct
        .discrete_modes()?
        .into_iter()
        .next()
        .ok_or(Error::NoPhysicalMode {
            alpha: direct.alpha,
            re: 1.0 / direct.nu,
        })?;
    // QZ eigenvalues of these non-normal pencils can be off by ~1e-7
    let mode = match direct.shift_invert(mode.c, Some(&mode.psi)) {
        Ok(m) if (m.c - mode.c).norm() <= 1e-4 * mode.c.norm().max(1e-2) => m,
        _ => mode,
    };
    finish(direct, adjoint, grid, mode)
}

/// Mode nearest `c_guess` (shift-invert), with its normalized adjoint.
/// Used for continuation, where the previous phase speed is the shift.
pub fn track_mode(
    direct: &OSPencil,
    adjoint: &OSPencil,
    grid: &SpectralGrid,
    c_guess: Complex64,
    psi_guess: Option<&[Complex64]>,
) -> Result<EigenSolution> {
    check_pair(direct, adjoint)?;
    let mode = direct.shift_invert(c_guess, psi_guess)?;
    finish(direct, adjoint, grid, mode)
}

/// Solution of the second-harmonic problem with its diagnostics.
#[derive(Clone, Debug)]
pub struct SecondHarmonic {
    pub psi: Vec<Complex64>,
    /// `‖Mψ − B₀‖ / ‖B₀‖` over the equation rows, in the quadrature norm.
    pub residual: f64,
    /// Pivot-ratio estimate of the condition number of the solve.
    pub condition_estimate: f64,
    /// `min |λ₂ − 2iω₀|` over the spectrum of the `2α` operator.
    pub resonance_margin: f64,
}

/// Operator `2iα[(U − c)(D² − 4α²) − U''] − ν(D² − 4α²)²` with `c = −ω₀/α`
/// and wall rows replaced by `ψ = ψ' = 0`.
pub fn second_harmonic_operator(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
    omega0: f64,
) -> Result<CMat> {
    check_params(alpha, nu)?;
    let base = base_flow(profile, grid)?;
    let n = grid.n();
    let c = -omega0 / alpha;
    let (lap, bih) = laplacians(grid, 2.0 * alpha);
    let mut m = CMat::from_fn(n, n, |i, j| {
        let mut v = lap[(i, j)] * (base.u[i] - c);
        if i == j {
            v -= base.ddu[i];
        }
        v * (2.0 * I * alpha) - bih[(i, j)] * nu
    });
    impose_conditions(grid, &mut m, None);
    Ok(m)
}

/// Distance from `2iω₀` to the spectrum of the linearized operator at `2α`,
/// measured on the growth-rate scale.
pub fn resonance_margin(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
    omega0: f64,
) -> Result<f64> {
    let pencil = assemble_second_harmonic(profile, grid, alpha, nu)?;
    let c = -omega0 / alpha;
    let k = 2.0 * alpha;
    Ok(pencil
        .physical_eigenvalues()?
        .into_iter()
        .map(|c2| k * (c2 - c).norm())
        .fold(f64::INFINITY, f64::min))
}

/// Solves `(2iω₀ − L) ζ₂₂ = B(ζ, ζ)` in stream-function form for `ψ₂₂`.
pub fn solve_second_harmonic(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
    omega0: f64,
    rhs_b0: &[Complex64],
) -> Result<SecondHarmonic> {
    grid.check_len(rhs_b0.len())?;
    let margin = resonance_margin(profile, grid, alpha, nu, omega0)?;
    if margin < RESONANCE_FAIL {
        return Err(Error::Resonance { margin });
    }
    if margin < RESONANCE_WARN {
        log::warn!("second harmonic close to resonance: margin {margin:.3e}");
    }
    let m = second_harmonic_operator(profile, grid, alpha, nu, omega0)?;
    let bc = wall_conditions(grid);
    let mut rhs = rhs_b0.to_vec();
    for (r, _) in &bc {
        rhs[*r] = Complex64::new(0.0, 0.0);
    }
    let lu = Lu::new(&m);
    let psi = lu.solve(&rhs);
    let residual = equation_residual_c(&m, &psi, &rhs, &bc.map(|(r, _)| r), grid.weights());
    Ok(SecondHarmonic {
        psi,
        residual,
        condition_estimate: lu.pivot_ratio(),
        resonance_margin: margin,
    })
}

/// `‖m x − rhs‖ / ‖rhs‖` over the rows not in `skip`, in the quadrature
/// norm of the grid. The max norm would be set by the rows next to the wall,
/// where the fourth-derivative entries put the rounding floor of any
/// double-precision solution near 1e-8.
fn equation_residual_c(m: &CMat, x: &[Complex64], rhs: &[Complex64], skip: &[usize], w: &[f64]) -> f64 {
    let mx = linalg::cmatvec(m, x);
    let err: Vec<Complex64> = mx.iter().zip(rhs).map(|(a, b)| a - b).collect();
    relative_l2(&err, rhs, skip, w)
}

fn relative_l2(err: &[Complex64], rhs: &[Complex64], skip: &[usize], w: &[f64]) -> f64 {
    let rows = (0..rhs.len()).filter(|r| !skip.contains(r));
    let num: f64 = rows.clone().map(|r| w[r] * err[r].norm_sqr()).sum();
    let den: f64 = rows.map(|r| w[r] * rhs[r].norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Mean-flow correction `V₂,₀ = (−∂_yψ₂₀, 0)`.
#[derive(Clone, Debug)]
pub struct MeanFlow {
    /// `ψ₂₀` on the strip. On the half line the stream function grows
    /// linearly (the velocity correction tends to a constant) and cannot be
    /// represented on the mapped grid, so only its derivatives are kept.
    pub psi: Option<Vec<f64>>,
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
    pub d3psi: Vec<f64>,
    /// `‖−ν∂⁴ψ₂₀ − rhs‖ / ‖rhs‖` over the equation rows, in the quadrature
    /// norm.
    pub residual: f64,
}

impl MeanFlow {
    /// Velocity correction `u₂₀ = −∂_yψ₂₀`.
    pub fn velocity(&self) -> Vec<f64> {
        self.dpsi.iter().map(|v| -v).collect()
    }
}

/// Closure of the mean-flow problem on the strip.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MeanFlowClosure {
    /// The correction carries no flux: `ψ₂₀ = ∂_yψ₂₀ = 0` at both walls.
    #[default]
    FixedFlux,
    /// The mean pressure gradient is unchanged: `∂_yψ₂₀ = 0` at both walls
    /// and `∂_y³ψ₂₀ = 0` at the lower one.
    FixedPressure,
}

impl std::str::FromStr for MeanFlowClosure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_flux" => Ok(Self::FixedFlux),
            "fixed_pressure" => Ok(Self::FixedPressure),
            _ => Err(Error::InvalidInput(format!(
                "unknown mean-flow closure '{s}' (expected fixed_flux or fixed_pressure)"
            ))),
        }
    }
}

impl std::fmt::Display for MeanFlowClosure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FixedFlux => "fixed_flux",
            Self::FixedPressure => "fixed_pressure",
        })
    }
}

/// Mean-flow correction with the default [`MeanFlowClosure::FixedFlux`].
pub fn solve_mean_flow(grid: &SpectralGrid, nu: f64, rhs: &[f64]) -> Result<MeanFlow> {
    solve_mean_flow_with(grid, nu, rhs, MeanFlowClosure::FixedFlux)
}

/// Solves `−ν ∂⁴_y ψ₂₀ = rhs` with the chosen closure.
///
/// Strip, fixed flux: `ψ₂₀' = 0` at both walls (no-slip for the velocity correction),
/// `ψ₂₀(−1) = 0` (gauge) and `ψ₂₀(1) = ψ₂₀(−1)` (zero net flux correction).
///
/// Half line: the problem is solved for `w = ∂_yψ₂₀` from `−ν w''' = rhs`
/// with `w(0) = 0` and bounded `w` whose shear decays at infinity.
///
/// On the half line the closure is irrelevant.
pub fn solve_mean_flow_with(
    grid: &SpectralGrid,
    nu: f64,
    rhs: &[f64],
    closure: MeanFlowClosure,
) -> Result<MeanFlow> {
    grid.check_len(rhs.len())?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidInput(format!("viscosity must be positive, got {nu}")));
    }
    let n = grid.n();
    let real = |m: &faer::Mat<f64>, s: f64| CMat::from_fn(n, n, |i, j| Complex64::new(s * m[(i, j)], 0.0));
    let rhs_c: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (mean, residual) = match grid.geometry() {
        Geometry::Strip => {
            let mut m = real(grid.d(4), -nu);
            let rows = impose_conditions(grid, &mut m, None);
            if closure == MeanFlowClosure::FixedPressure {
                // ψ fixed up to a constant only: pin the lower wall and
                // trade the upper ψ = 0 row for ψ''' = 0 at the lower wall
                for j in 0..n {
                    m[(0, j)] = Complex64::new(grid.d(3)[(n - 1, j)], 0.0);
                }
            }
            let mut b = rhs_c.clone();
            rows.iter().for_each(|&r| b[r] = Complex64::new(0.0, 0.0));
            let x = Lu::new(&m).solve(&b);
            let residual = equation_residual_c(&m, &x, &b, &rows, grid.weights());
            let psi: Vec<f64> = x.iter().map(|v| v.re).collect();
            let mean = MeanFlow {
                dpsi: grid.diff(1, &psi),
                d2psi: grid.diff(2, &psi),
                d3psi: grid.diff(3, &psi),
                psi: Some(psi),
                residual: 0.0,
            };
            (mean, residual)
        }
        Geometry::HalfSpace => {
            // w = ∂_yψ₂₀ solves −ν w''' = rhs with w(0) = 0 and w', w'' → 0 at
            // infinity. Integrating the derivatives one after another would
            // multiply roundoff near ξ = 1 by the map's Jacobian, so each one
            // is written as a single integral of the decaying right side:
            //   w''(y) = (1/ν) ∫_y^∞ rhs
            //   w'(y)  = −(1/ν) ∫_y^∞ (s − y) rhs
            //   w(y)   = −(1/ν) [∫_0^y s²/2 rhs + ∫_y^∞ (s y − y²/2) rhs]
            let y = grid.nodes();
            let moment = |k: i32| -> Vec<f64> {
                (0..n)
                    .map(|j| if j == 0 { 0.0 } else { rhs[j] * y[j].powi(k) })
                    .collect()
            };
            // w'' is what the equation residual differentiates, so it uses the
            // integral that differentiation inverts exactly; the moments
            // weighted by powers of y use the filtered one
            let i0c = grid.integral_to_top_collocated(rhs)?;
            let i0 = grid.integral_to_top(&moment(0))?;
            let i1 = grid.integral_to_top(&moment(1))?;
            let a2 = grid.antiderivative(&moment(2))?;
            let mut d3psi = vec![0.0; n];
            let mut d2psi = vec![0.0; n];
            let mut dpsi = vec![0.0; n];
            for j in 1..n {
                let yj = y[j];
                d3psi[j] = i0c[j] / nu;
                d2psi[j] = -(i1[j] - yj * i0[j]) / nu;
                dpsi[j] = -(0.5 * a2[j] + yj * i1[j] - 0.5 * yj * yj * i0[j]) / nu;
            }
            // limit at infinity: only the first moment term survives
            dpsi[0] = -0.5 * a2[0] / nu;
            // the equation on the finite nodes, −ν (w'')' = rhs
            let check = grid.diff(1, &d3psi);
            let err: Vec<Complex64> = (0..n).map(|r| Complex64::new(-nu * check[r] - rhs[r], 0.0)).collect();
            let rhs_c: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let residual = relative_l2(&err, &rhs_c, &[0], grid.weights());
            let mean = MeanFlow {
                psi: None,
                dpsi,
                d2psi,
                d3psi,
                residual: 0.0,
            };
            (mean, residual)
        }
    };
    if !residual.is_finite() {
        return Err(Error::Singular("mean-flow closure".into()));
    }
    Ok(MeanFlow { residual, ..mean })
}
