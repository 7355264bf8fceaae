//! Marginal stability curves, critical Reynolds numbers and the Landau
//! coefficient of the Hopf bifurcation on them.
//!
//! The least-stable discrete mode is located once by a dense solve and then
//! followed by shift-invert iteration while `α` or `Re` change. Roots of the
//! growth rate `ℜλ = α ℑc` are bracketed and refined with the Illinois
//! variant of regula falsi.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oss::{
    self, assemble_adjoint, assemble_direct, solve_mean_flow_with, solve_second_harmonic, track_mode,
    EigenSolution, MeanFlow, MeanFlowClosure, Mode,
};
use crate::profiles::{Geometry, ShearProfile};
use crate::spectral::{vector_inner_product, SpectralGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Absolute tolerance on `ℜλ` at a neutral point.
pub const NEUTRAL_TOL: f64 = 1e-9;
/// Iteration cap for the neutral-point secant.
pub const NEUTRAL_MAX_ITER: usize = 60;
/// Relative tolerance of the searches in `Re`.
pub const RE_REL_TOL: f64 = 1e-6;
/// `|ℜC| < MARGINAL_BAND (|ℜC| + |ℑC|)` is reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-8;
/// Grid-doubling change of `c` above which a resolution warning is logged.
pub const DOUBLING_TOL: f64 = 1e-7;

/// Points in the coarse dense scan over `α`.
const SCAN_POINTS: usize = 20;

/// Stopping rule of the neutral root, well inside [`NEUTRAL_TOL`] so that
/// `α` itself is pinned to about 1e-10 on shallow branches.
const ROOT_FTOL: f64 = 1e-3 * NEUTRAL_TOL;
const ROOT_XTOL: f64 = 1e-12;
/// A tracked mode moving further than this from its guess is re-identified
/// by a dense solve.
const TRACK_JUMP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `α_−(ν)`.
    Lower,
    /// `α_+(ν)`.
    Upper,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Lower => f.write_str("lower"),
            Branch::Upper => f.write_str("upper"),
        }
    }
}

/// A converged point on one marginal stability curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeutralPoint {
    pub nu: f64,
    pub re: f64,
    pub branch: Branch,
    pub alpha: f64,
    /// `ℜc`; `ℑc` vanishes to within the root tolerance.
    pub c_phase: f64,
    /// `ω₀ = −α ℜc`.
    pub omega0: f64,
    /// Residual growth rate `ℜλ` at the returned `α`.
    pub growth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeutralSample {
    pub nu: f64,
    pub alpha_minus: f64,
    pub c_minus: f64,
    pub alpha_plus: f64,
    pub c_plus: f64,
}

impl NeutralSample {
    pub fn re(&self) -> f64 {
        1.0 / self.nu
    }
}

#[derive(Clone, Debug)]
pub struct NeutralCurve {
    pub profile: String,
    /// Ordered by increasing `Re`.
    pub samples: Vec<NeutralSample>,
    pub re_c: f64,
    pub alpha_c: f64,
}

/// Nose of the neutral curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Critical {
    pub re_c: f64,
    pub alpha_c: f64,
    pub c_c: Complex64,
    /// `max_α ℜλ` at `re_c` (≈ 0).
    pub growth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// `ℜC < 0`.
    Subcritical,
    /// `ℜC > 0`.
    Supercritical,
    Marginal,
}

impl Verdict {
    pub fn of(c: Complex64) -> Self {
        if c.re.abs() < MARGINAL_BAND * (c.re.abs() + c.im.abs()) || c.re == 0.0 {
            Verdict::Marginal
        } else if c.re < 0.0 {
            Verdict::Subcritical
        } else {
            Verdict::Supercritical
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Subcritical => f.write_str("subcritical"),
            Verdict::Supercritical => f.write_str("supercritical"),
            Verdict::Marginal => f.write_str("marginal"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauDiagnostics {
    pub residual_direct: f64,
    pub residual_adjoint: f64,
    /// Relative residual of the second-harmonic solve.
    pub residual_second_harmonic: f64,
    /// Relative residual of the mean-flow solve.
    pub residual_mean_flow: f64,
    pub resonance_margin: f64,
    pub condition_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct LandauResult {
    pub point: NeutralPoint,
    /// Cubic Landau coefficient `C` in `dA/dt = λA − C A|A|²`.
    pub c_coeff: Complex64,
    /// `−2⟨B₁, ζ*⟩`.
    pub b1_proj: Complex64,
    /// `−2⟨B₂, ζ*⟩`.
    pub b2_proj: Complex64,
    /// `⟨Δζ, ζ*⟩`.
    pub delta_proj: Complex64,
    pub verdict: Verdict,
    pub diagnostics: LandauDiagnostics,
    pub eigen: EigenSolution,
    pub psi22: Vec<Complex64>,
    pub mean_flow: MeanFlow,
}

/// Evaluates the least-stable discrete mode of one profile on one grid.
struct Probe<'a> {
    profile: &'a ShearProfile,
    grid: &'a SpectralGrid,
}

impl<'a> Probe<'a> {
    fn new(profile: &'a ShearProfile, grid: &'a SpectralGrid) -> Result<Self> {
        if profile.geometry() != grid.geometry() {
            return Err(Error::InvalidInput(format!(
                "profile {} needs a {} grid",
                profile.name(),
                profile.geometry()
            )));
        }
        Ok(Self { profile, grid })
    }

    /// Dense solve; the returned mode carries no eigenvector. Picks the
    /// least stable mode, or the one nearest `near` when given.
    fn dense_near(&self, alpha: f64, nu: f64, near: Option<Complex64>) -> Result<Mode> {
        let pencil = assemble_direct(self.profile, self.grid, alpha, nu)?;
        let key = |c: &Complex64| match near {
            Some(z) => -(c - z).norm(),
            None => c.im,
        };
        pencil
            .physical_eigenvalues()?
            .into_iter()
            .filter(|c| !pencil.in_continuum(*c))
            .max_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|c| Mode {
                c,
                psi: Vec::new(),
                residual: 0.0,
            })
            .ok_or(Error::NoPhysicalMode { alpha, re: 1.0 / nu })
    }

    fn dense(&self, alpha: f64, nu: f64) -> Result<Mode> {
        self.dense_near(alpha, nu, None)
    }

    /// Follows `prev` to `(alpha, nu)`.
    fn tracked(&self, alpha: f64, nu: f64, prev: &Mode) -> Result<Mode> {
        let pencil = assemble_direct(self.profile, self.grid, alpha, nu)?;
        let start = (!prev.psi.is_empty()).then_some(prev.psi.as_slice());
        match pencil.shift_invert(prev.c, start) {
            Ok(m) if (m.c - prev.c).norm() < TRACK_JUMP && !pencil.in_continuum(m.c) => Ok(m),
            Ok(m) => {
                log::debug!(
                    "mode jumped from {} to {} at alpha = {alpha}; re-identifying",
                    prev.c,
                    m.c
                );
                let d = self.dense_near(alpha, nu, Some(prev.c))?;
                pencil.shift_invert(d.c, None)
            }
            Err(e) => {
                log::debug!("tracking failed at alpha = {alpha}: {e}; re-identifying");
                let d = self.dense_near(alpha, nu, Some(prev.c))?;
                pencil.shift_invert(d.c, None)
            }
        }
    }

    /// `α` window scanned for the unstable band.
    fn window(&self, nu: f64) -> (f64, f64) {
        match self.profile.geometry() {
            Geometry::Strip => (0.2, 4.0),
            Geometry::HalfSpace => match asymptotic_alphas(self.profile, nu) {
                Ok((lo, hi)) => ((0.25 * lo).max(1e-3), (4.0 * hi).min(2.0)),
                Err(_) => (0.01, 1.0),
            },
        }
    }

    fn scan(&self, nu: f64, lo: f64, hi: f64) -> Result<Vec<(f64, Mode)>> {
        let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
        (0..SCAN_POINTS)
            .map(|k| {
                let a = lo * ratio.powi(k as i32);
                Ok((a, self.dense(a, nu)?))
            })
            .collect()
    }

    /// Golden-section maximization of `ℜλ` over `[lo, hi]`, following
    /// `seed` (which should sit inside the interval).
    fn maximize(&self, nu: f64, lo: f64, hi: f64, seed: &Mode) -> Result<(f64, Mode)> {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut m1 = self.tracked(x1, nu, seed)?;
        let mut m2 = self.tracked(x2, nu, &m1)?;
        let growth = |x: f64, m: &Mode| x * m.c.im;
        let mut f1 = growth(x1, &m1);
        let mut f2 = growth(x2, &m2);
        for _ in 0..80 {
            if (b - a) <= 1e-7 * (a + b) {
                break;
            }
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                m2 = m1.clone();
                x1 = b - g * (b - a);
                m1 = self.tracked(x1, nu, &m2)?;
                f1 = growth(x1, &m1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                m1 = m2.clone();
                x2 = a + g * (b - a);
                m2 = self.tracked(x2, nu, &m1)?;
                f2 = growth(x2, &m2);
            }
        }
        Ok(if f1 > f2 { (x1, m1) } else { (x2, m2) })
    }

    /// Peak of `ℜλ` over `α` from a cold start.
    fn peak_cold(&self, nu: f64) -> Result<(f64, Mode, Vec<(f64, Mode)>)> {
        let (lo, hi) = self.window(nu);
        let scan = self.scan(nu, lo, hi)?;
        let k = (0..scan.len())
            .max_by(|&i, &j| {
                (scan[i].0 * scan[i].1.c.im).total_cmp(&(scan[j].0 * scan[j].1.c.im))
            })
            .unwrap_or(0);
        let a = scan[k.saturating_sub(1)].0;
        let b = scan[(k + 1).min(scan.len() - 1)].0;
        let (alpha, mode) = self.maximize(nu, a, b, &scan[k].1)?;
        Ok((alpha, mode, scan))
    }

    /// Peak of `ℜλ` near a previous peak `(alpha, mode)`.
    fn peak_warm(&self, nu: f64, alpha: f64, mode: &Mode) -> Result<(f64, Mode)> {
        let mut w = 0.1;
        for _ in 0..6 {
            let (lo, hi) = (alpha * (1.0 - w), alpha * (1.0 + w));
            let (x, m) = self.maximize(nu, lo, hi, mode)?;
            let inside = (x - lo) > 1e-3 * (hi - lo) && (hi - x) > 1e-3 * (hi - lo);
            if inside {
                return Ok((x, m));
            }
            w = (2.0 * w).min(0.8);
        }
        Err(Error::NoConvergence {
            what: "growth-rate maximization over alpha".into(),
            iterations: 6,
        })
    }

    fn growth(&self, alpha: f64, nu: f64, prev: &Mode) -> Result<(f64, Mode)> {
        let m = self.tracked(alpha, nu, prev)?;
        Ok((alpha * m.c.im, m))
    }

    /// Root of `ℜλ(·, ν)` in `[a, b]` with modes `ma`, `mb` at the ends.
    fn root(
        &self,
        nu: f64,
        branch: Branch,
        (a, ma): (f64, Mode),
        (b, mb): (f64, Mode),
    ) -> Result<(NeutralPoint, Mode)> {
        let fa = a * ma.c.im;
        let fb = b * mb.c.im;
        let mut last = if fa.abs() < fb.abs() { ma } else { mb };
        let (x, fx) = illinois(
            |x| {
                let (f, m) = self.growth(x, nu, &last)?;
                last = m;
                Ok(f)
            },
            (a, fa),
            (b, fb),
            ROOT_FTOL,
            ROOT_XTOL,
            NEUTRAL_MAX_ITER,
            "neutral wavenumber",
        )?;
        // the closure left `last` at the final iterate
        let m = self.tracked(x, nu, &last)?;
        let point = NeutralPoint {
            nu,
            re: 1.0 / nu,
            branch,
            alpha: x,
            c_phase: m.c.re,
            omega0: -x * m.c.re,
            growth: fx,
        };
        Ok((point, m))
    }

    /// Neutral point on `branch`, stepping outward from a nearby point.
    fn neutral_warm(
        &self,
        nu: f64,
        branch: Branch,
        alpha0: f64,
        mode0: &Mode,
    ) -> Result<(NeutralPoint, Mode)> {
        let (f0, m0) = self.growth(alpha0, nu, mode0)?;
        let inside = f0 > 0.0;
        // moving down in α leaves the band across the lower branch and
        // enters it across the upper one
        let down = matches!((branch, inside), (Branch::Lower, true) | (Branch::Upper, false));
        let mut step = 0.03;
        let (mut xa, mut ma, mut fa) = (alpha0, m0, f0);
        for _ in 0..40 {
            let xb = if down { xa * (1.0 - step) } else { xa * (1.0 + step) };
            let (fb, mb) = self.growth(xb, nu, &ma)?;
            if (fb > 0.0) != (fa > 0.0) {
                return self.root(nu, branch, (xa, ma), (xb, mb));
            }
            if fb.abs() <= ROOT_FTOL {
                let point = NeutralPoint {
                    nu,
                    re: 1.0 / nu,
                    branch,
                    alpha: xb,
                    c_phase: mb.c.re,
                    omega0: -xb * mb.c.re,
                    growth: fb,
                };
                return Ok((point, mb));
            }
            (xa, ma, fa) = (xb, mb, fb);
            step = (step * 1.5).min(0.3);
        }
        Err(Error::NoSignChange {
            lo: alpha0,
            hi: xa,
            what: format!("{branch} branch near alpha = {alpha0}"),
        })
    }

    /// Cold neutral point on `branch`.
    fn neutral_cold(&self, nu: f64, branch: Branch) -> Result<(NeutralPoint, Mode)> {
        let (alpha_peak, peak, scan) = self.peak_cold(nu)?;
        if alpha_peak * peak.c.im <= 0.0 {
            return Err(Error::NoUnstableBand { re: 1.0 / nu });
        }
        // nearest stable scan point on the requested side
        let outside = match branch {
            Branch::Lower => scan.iter().rev().find(|(a, m)| *a < alpha_peak && a * m.c.im < 0.0),
            Branch::Upper => scan.iter().find(|(a, m)| *a > alpha_peak && a * m.c.im < 0.0),
        };
        match outside {
            Some((a, _)) => {
                // follow the unstable mode out of the band: outside it a
                // different mode may be the least stable one
                let (fa, ma) = self.growth(*a, nu, &peak)?;
                if fa < 0.0 {
                    return self.root(nu, branch, (*a, ma), (alpha_peak, peak));
                }
                self.neutral_warm(nu, branch, alpha_peak, &peak)
            }
            None => self.neutral_warm(nu, branch, alpha_peak, &peak),
        }
    }
}

/// Illinois regula falsi on a bracket `[a, b]` with `f(a) f(b) < 0`.
fn illinois(
    mut f: impl FnMut(f64) -> Result<f64>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    ftol: f64,
    xtol_rel: f64,
    max_iter: usize,
    what: &str,
) -> Result<(f64, f64)> {
    if fa == 0.0 {
        return Ok((a, fa));
    }
    if fb == 0.0 {
        return Ok((b, fb));
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(Error::NoSignChange {
            lo: a.min(b),
            hi: a.max(b),
            what: what.to_string(),
        });
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let x = (a * fb - b * fa) / (fb - fa);
        let fx = f(x)?;
        if fx.abs() <= ftol || (b - a).abs() <= xtol_rel * x.abs() {
            return Ok((x, fx));
        }
        if (fx > 0.0) == (fb > 0.0) {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence {
        what: what.to_string(),
        iterations: max_iter,
    })
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("viscosity must be positive, got {nu}")))
    }
}

fn at_re(re: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtReynolds {
        re,
        source: Box::new(e),
    }
}

/// Root of `α ↦ ℜλ(α, ν)` on the requested branch.
///
/// Without a hint the unstable band is located by a dense scan over `α`;
/// with a hint `(a, b)` the root is sought inside that bracket.
pub fn neutral_alpha(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    nu: f64,
    branch: Branch,
    bracket_hint: Option<(f64, f64)>,
) -> Result<NeutralPoint> {
    check_nu(nu)?;
    let probe = Probe::new(profile, grid)?;
    let (point, _) = match bracket_hint {
        None => probe.neutral_cold(nu, branch)?,
        Some((a, b)) => {
            if !(a > 0.0 && b > a) {
                return Err(Error::InvalidInput(format!("bad alpha bracket ({a}, {b})")));
            }
            let (mut fa, mut ma) = probe.growth(a, nu, &probe.dense(a, nu)?)?;
            let (mut fb, mut mb) = probe.growth(b, nu, &probe.dense(b, nu)?)?;
            // the stable end must carry the continuation of the unstable mode
            if fa > 0.0 && fb <= 0.0 {
                (fb, mb) = probe.growth(b, nu, &ma)?;
            } else if fb > 0.0 && fa <= 0.0 {
                (fa, ma) = probe.growth(a, nu, &mb)?;
            }
            if (fa > 0.0) == (fb > 0.0) {
                return Err(Error::NoSignChange {
                    lo: a,
                    hi: b,
                    what: "growth rate over alpha".into(),
                });
            }
            probe.root(nu, branch, (a, ma), (b, mb))?
        }
    };
    Ok(point)
}

/// Critical Reynolds number: the smallest `Re` at which `max_α ℜλ` reaches
/// zero.
///
/// The inner maximization over `α` is a golden-section search; the outer
/// search brackets `Re` by doubling from 10³ and refines the root of the
/// peak growth rate.
pub fn critical_reynolds(profile: &ShearProfile, grid: &SpectralGrid) -> Result<Critical> {
    let probe = Probe::new(profile, grid)?;
    let mut re = 1e3;
    let mut prev: Option<(f64, f64, f64, Mode)> = None;
    let mut hit = None;
    while re <= 1e7 {
        let (alpha, mode, _) = probe.peak_cold(1.0 / re).map_err(at_re(re))?;
        let g = alpha * mode.c.im;
        if g > 0.0 {
            hit = Some((re, g, alpha, mode));
            break;
        }
        prev = Some((re, g, alpha, mode));
        re *= 2.0;
    }
    let (re_hi, g_hi, alpha_hi, mode_hi) = hit.ok_or(Error::NoUnstableBand { re: 1e7 })?;
    let (re_lo, g_lo) = match prev {
        Some((re, g, _, _)) => (re, g),
        None => {
            return Err(Error::NoSignChange {
                lo: 1e3,
                hi: 1e3,
                what: "flow is already unstable at the start of the critical search".into(),
            })
        }
    };
    let mut best = (alpha_hi, mode_hi.clone());
    let mut last = (alpha_hi, mode_hi);
    let (re_c, growth) = illinois(
        |re| {
            let (a, m) = probe.peak_warm(1.0 / re, last.0, &last.1).map_err(at_re(re))?;
            let g = a * m.c.im;
            best = (a, m.clone());
            last = (a, m);
            Ok(g)
        },
        (re_lo, g_lo),
        (re_hi, g_hi),
        1e-10,
        1e-8,
        80,
        "critical Reynolds number",
    )?;
    Ok(Critical {
        re_c,
        alpha_c: best.0,
        c_c: best.1.c,
        growth,
    })
}

/// Both marginal curves on `steps` equally spaced Reynolds numbers in
/// `[re_min, re_max]`, continued from the nose of the curve.
///
/// `re_min` may sit up to 0.1% below the critical value (rounded literature
/// values); the first sample is then moved just above the nose.
pub fn trace_neutral_curves(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    re_min: f64,
    re_max: f64,
    steps: usize,
    critical: Option<Critical>,
) -> Result<NeutralCurve> {
    if !(re_min > 0.0 && re_max >= re_min && steps >= 1) {
        return Err(Error::InvalidInput(format!(
            "need 0 < re_min <= re_max and steps >= 1, got [{re_min}, {re_max}], {steps}"
        )));
    }
    let crit = match critical {
        Some(c) => c,
        None => critical_reynolds(profile, grid)?,
    };
    let nose = crit.re_c * (1.0 + 1e-4);
    if re_min < crit.re_c * (1.0 - 1e-3) {
        return Err(Error::NoUnstableBand { re: re_min });
    }
    let start = re_min.max(nose);
    let probe = Probe::new(profile, grid)?;
    let res: Vec<f64> = if steps == 1 {
        vec![start]
    } else {
        (0..steps)
            .map(|k| start + (re_max.max(start) - start) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let seed = Mode {
        c: crit.c_c,
        psi: Vec::new(),
        residual: 0.0,
    };
    let mut lower = (crit.alpha_c, seed.clone());
    let mut upper = (crit.alpha_c, seed);
    let mut samples = Vec::with_capacity(res.len());
    for re in res {
        let nu = 1.0 / re;
        let (pl, ml) = probe
            .neutral_warm(nu, Branch::Lower, lower.0, &lower.1)
            .map_err(at_re(re))?;
        let (pu, mu) = probe
            .neutral_warm(nu, Branch::Upper, upper.0, &upper.1)
            .map_err(at_re(re))?;
        samples.push(NeutralSample {
            nu,
            alpha_minus: pl.alpha,
            c_minus: pl.c_phase,
            alpha_plus: pu.alpha,
            c_plus: pu.c_phase,
        });
        lower = (pl.alpha, ml);
        upper = (pu.alpha, mu);
    }
    Ok(NeutralCurve {
        profile: profile.name().to_string(),
        samples,
        re_c: crit.re_c,
        alpha_c: crit.alpha_c,
    })
}

/// Large-Reynolds asymptotes `(α_−, α_+)` of the marginal curves on the half
/// line:
/// `α_− ≈ 1.005 ν^{1/4} U'(0)^{5/4} / U₊^{3/2}` and
/// `α_+ ≈ (U'(0)^{11} / (2π² U''(0)²))^{1/6} ν^{1/6}`.
pub fn asymptotic_alphas(profile: &ShearProfile, nu: f64) -> Result<(f64, f64)> {
    check_nu(nu)?;
    let bp = profile.boundary_params();
    let u_plus = match (profile.geometry(), bp.u_plus) {
        (Geometry::HalfSpace, Some(u)) => u,
        _ => {
            return Err(Error::InvalidInput(format!(
                "asymptotic wavenumbers are only available on the half line, not for {profile}"
            )))
        }
    };
    let s = bp.wall_slope;
    let k = bp.wall_curvature;
    let minus = 1.005 * nu.powf(0.25) * s.powf(1.25) / u_plus.powf(1.5);
    let two_pi2 = 2.0 * std::f64::consts::PI.powi(2);
    let plus = (s.powi(11) / (two_pi2 * k * k)).powf(1.0 / 6.0) * nu.powf(1.0 / 6.0);
    Ok((minus, plus))
}

/// Field and its first three derivatives.
fn derivs(psi: &[Complex64], grid: &SpectralGrid) -> [Vec<Complex64>; 4] {
    [
        psi.to_vec(),
        grid.diff_c(1, psi),
        grid.diff_c(2, psi),
        grid.diff_c(3, psi),
    ]
}

/// Weight of `∇×B(ζ, ζ̄)` on the right side of the `ψ₂₀` problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MeanForcing {
    /// `−ν ∂_y⁴ψ₂₀ = ∇×B(ζ, ζ̄)`.
    #[default]
    Single,
    /// `−ν ∂_y⁴ψ₂₀ = 2∇×B(ζ, ζ̄)`, counting both cross terms `B(ζ, ζ̄)` and
    /// `B(ζ̄, ζ)` of a real perturbation.
    Double,
}

impl MeanForcing {
    fn weight(self) -> f64 {
        match self {
            Self::Single => 1.0,
            Self::Double => 2.0,
        }
    }
}

impl std::str::FromStr for MeanForcing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "1" => Ok(Self::Single),
            "double" | "2" => Ok(Self::Double),
            _ => Err(Error::InvalidInput(format!("unknown mean forcing {s:?}"))),
        }
    }
}

impl std::fmt::Display for MeanForcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Single => "single",
            Self::Double => "double",
        })
    }
}

/// Choices in the mean-flow part of the Landau pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LandauOptions {
    pub closure: MeanFlowClosure,
    pub forcing: MeanForcing,
}

/// Landau coefficient at a neutral point with default options, using the
/// eigenfunction normalization `max |ζ| = 1` over the grid nodes.
pub fn landau_coefficient(
    profile: &ShearProfile,
    point: &NeutralPoint,
    grid: &SpectralGrid,
) -> Result<LandauResult> {
    landau_coefficient_with(profile, point, grid, LandauOptions::default())
}

pub fn landau_coefficient_with(
    profile: &ShearProfile,
    point: &NeutralPoint,
    grid: &SpectralGrid,
    opts: LandauOptions,
) -> Result<LandauResult> {
    let direct = assemble_direct(profile, grid, point.alpha, point.nu)?;
    let adjoint = assemble_adjoint(profile, grid, point.alpha, point.nu)?;
    let eigen = track_mode(&direct, &adjoint, grid, Complex64::new(point.c_phase, 0.0), None)?;
    landau_from_eigen(profile, point, grid, eigen, opts)
}

/// Landau pipeline for a given normalized eigenpair.
pub fn landau_from_eigen(
    profile: &ShearProfile,
    point: &NeutralPoint,
    grid: &SpectralGrid,
    eigen: EigenSolution,
    opts: LandauOptions,
) -> Result<LandauResult> {
    let alpha = point.alpha;
    let nu = point.nu;
    let a2 = alpha * alpha;
    let [p0, p1, p2, p3] = derivs(&eigen.psi, grid);

    // second harmonic, forced by B(ζ, ζ)
    let b0: Vec<Complex64> = (0..grid.n())
        .map(|j| I * alpha * (p1[j] * p2[j] - p0[j] * p3[j]))
        .collect();
    let sh = solve_second_harmonic(profile, grid, alpha, nu, eigen.omega(), &b0)?;

    // mean flow, forced by B(ζ, ζ̄)
    let w = opts.forcing.weight();
    let rhs: Vec<f64> = (0..grid.n())
        .map(|j| w * (-alpha * (p1[j].conj() * p2[j] + p0[j].conj() * p3[j]).im))
        .collect();
    let mean = solve_mean_flow_with(grid, nu, &rhs, opts.closure)?;

    let [q0, q1, q2, _] = derivs(&sh.psi, grid);
    let n = grid.n();
    let mut b1 = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut b2 = (Vec::with_capacity(n), Vec::with_capacity(n));
    for j in 0..n {
        let (m1, m2) = (mean.dpsi[j], mean.d2psi[j]);
        b1.0.push(-0.5 * I * alpha * (p1[j] * m1 - p0[j] * m2));
        b1.1.push(-0.5 * a2 * p0[j] * m1);
        let (c0, c1, c2) = (p0[j].conj(), p1[j].conj(), p2[j].conj());
        b2.0.push(-0.5 * I * alpha * (c1 * q1[j] + c0 * q2[j] - 2.0 * q0[j] * c2));
        b2.1.push(-0.5 * 3.0 * a2 * (2.0 * c1 * q0[j] + c0 * q1[j]));
    }
    let zs = oss::velocity(&eigen.psi_star, alpha, grid);
    let b1_proj = -2.0 * vector_inner_product((&b1.0, &b1.1), (&zs.0, &zs.1), grid)?;
    let b2_proj = -2.0 * vector_inner_product((&b2.0, &b2.1), (&zs.0, &zs.1), grid)?;
    let c_coeff = b1_proj + b2_proj;

    let lap_u: Vec<Complex64> = (0..n).map(|j| -(p3[j] - a2 * p1[j])).collect();
    let lap_v: Vec<Complex64> = (0..n).map(|j| I * alpha * (p2[j] - a2 * p0[j])).collect();
    let delta_proj = vector_inner_product((&lap_u, &lap_v), (&zs.0, &zs.1), grid)?;

    let diagnostics = LandauDiagnostics {
        residual_direct: eigen.residual_direct,
        residual_adjoint: eigen.residual_adjoint,
        residual_second_harmonic: sh.residual,
        residual_mean_flow: mean.residual,
        resonance_margin: sh.resonance_margin,
        condition_estimate: sh.condition_estimate,
    };
    Ok(LandauResult {
        point: *point,
        c_coeff,
        b1_proj,
        b2_proj,
        delta_proj,
        verdict: Verdict::of(c_coeff),
        diagnostics,
        eigen,
        psi22: sh.psi,
        mean_flow: mean,
    })
}

/// Grid with twice the points and the same map.
pub fn doubled(grid: &SpectralGrid) -> Result<SpectralGrid> {
    SpectralGrid::new(grid.geometry(), 2 * grid.n(), grid.map_scale())
}

/// Change of the least-stable `c` near `c_guess` between `grid` and a grid
/// with twice the points. Logs a resolution warning above
/// [`DOUBLING_TOL`].
pub fn doubling_change(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    alpha: f64,
    nu: f64,
    c_guess: Complex64,
) -> Result<f64> {
    let fine = doubled(grid)?;
    let a = assemble_direct(profile, grid, alpha, nu)?.shift_invert(c_guess, None)?;
    let b = assemble_direct(profile, &fine, alpha, nu)?.shift_invert(a.c, None)?;
    let d = (a.c - b.c).norm();
    if d > DOUBLING_TOL {
        log::warn!(
            "resolution: c changes by {d:.2e} between n = {} and n = {} at alpha = {alpha}, Re = {}",
            grid.n(),
            fine.n(),
            1.0 / nu
        );
    }
    Ok(d)
}

/// Relative change of `C` under grid doubling (warns above 1%).
pub fn landau_doubling_change(
    profile: &ShearProfile,
    point: &NeutralPoint,
    grid: &SpectralGrid,
    coarse: &LandauResult,
    opts: LandauOptions,
) -> Result<(f64, LandauResult)> {
    let fine = landau_coefficient_with(profile, point, &doubled(grid)?, opts)?;
    let rel = (fine.c_coeff - coarse.c_coeff).norm() / coarse.c_coeff.norm();
    if rel > 0.01 {
        log::warn!(
            "resolution: C changes by {:.2}% under grid doubling at Re = {}",
            100.0 * rel,
            point.re
        );
    }
    Ok((rel, fine))
}

/// `ℜC` on the lower branch sampled along increasing `Re`, continued from
/// one sample to the next.
struct LowerBranchWalker<'a> {
    probe: Probe<'a>,
    last: Option<(f64, Mode)>,
}

impl<'a> LowerBranchWalker<'a> {
    fn point(&mut self, re: f64, branch: Branch) -> Result<NeutralPoint> {
        let nu = 1.0 / re;
        let (p, m) = match &self.last {
            None => self.probe.neutral_cold(nu, branch),
            Some((a, m)) => self.probe.neutral_warm(nu, branch, *a, m),
        }
        .map_err(at_re(re))?;
        self.last = Some((p.alpha, m));
        Ok(p)
    }
}

fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let r = (hi / lo).powf(1.0 / (k - 1) as f64);
    (0..k).map(|i| lo * r.powi(i as i32)).collect()
}

fn check_bracket((lo, hi): (f64, f64)) -> Result<()> {
    if lo > 0.0 && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("bad Reynolds bracket [{lo}, {hi}]")))
    }
}

/// Reynolds number where `ℜC` changes sign on the lower branch.
///
/// `ℜC` is first sampled at eight log-spaced points of the bracket; the
/// first sign change found is then refined.
pub fn find_re_s(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    bracket: (f64, f64),
) -> Result<f64> {
    find_re_s_with(profile, grid, bracket, LandauOptions::default())
}

pub fn find_re_s_with(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    bracket: (f64, f64),
    opts: LandauOptions,
) -> Result<f64> {
    check_bracket(bracket)?;
    let mut walker = LowerBranchWalker {
        probe: Probe::new(profile, grid)?,
        last: None,
    };
    let eval = |re: f64, walker: &mut LowerBranchWalker| -> Result<Complex64> {
        let p = walker.point(re, Branch::Lower)?;
        Ok(landau_coefficient_with(profile, &p, grid, opts)
            .map_err(at_re(re))?
            .c_coeff)
    };
    let samples = log_spaced(bracket.0, bracket.1, 8);
    let mut prev: Option<(f64, Complex64)> = None;
    for re in samples {
        let c = eval(re, &mut walker)?;
        log::debug!("lower branch Re = {re}: C = {c}");
        if let Some((re0, c0)) = prev {
            if (c0.re > 0.0) != (c.re > 0.0) {
                // restart the continuation from the left end of the bracket
                walker.last = None;
                walker.point(re0, Branch::Lower)?;
                let (root, _) = illinois(
                    |r| {
                        let cc = eval(r, &mut walker)?;
                        // stop once ℜC is negligible next to ℑC
                        Ok(if cc.re.abs() <= 1e-8 * cc.im.abs() { 0.0 } else { cc.re })
                    },
                    (re0, c0.re),
                    (re, c.re),
                    0.0,
                    RE_REL_TOL,
                    60,
                    "Re_s",
                )?;
                return Ok(root);
            }
        }
        prev = Some((re, c));
    }
    Err(Error::NoSignChange {
        lo: bracket.0,
        hi: bracket.1,
        what: "Re C does not change sign on the lower branch".into(),
    })
}

/// Both branches at one Reynolds number.
fn band_edges(
    lower: &mut LowerBranchWalker,
    upper: &mut LowerBranchWalker,
    re: f64,
) -> Result<(NeutralPoint, NeutralPoint)> {
    Ok((lower.point(re, Branch::Lower)?, upper.point(re, Branch::Upper)?))
}

/// Reynolds number where `2α_− = α_+`.
///
/// Returns [`Error::NoSignChange`] with "Re_d above bracket" when
/// `2α_− > α_+` throughout the bracket.
pub fn find_re_d(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    bracket: (f64, f64),
) -> Result<f64> {
    check_bracket(bracket)?;
    let mut lower = LowerBranchWalker {
        probe: Probe::new(profile, grid)?,
        last: None,
    };
    let mut upper = LowerBranchWalker {
        probe: Probe::new(profile, grid)?,
        last: None,
    };
    let gap = |(l, u): (NeutralPoint, NeutralPoint)| 2.0 * l.alpha - u.alpha;
    let samples = log_spaced(bracket.0, bracket.1, 8);
    let mut prev: Option<(f64, f64)> = None;
    let mut last_gap = 0.0;
    for re in samples {
        let g = gap(band_edges(&mut lower, &mut upper, re)?);
        log::debug!("Re = {re}: 2 alpha_- - alpha_+ = {g}");
        if let Some((re0, g0)) = prev {
            if (g0 > 0.0) != (g > 0.0) {
                lower.last = None;
                upper.last = None;
                band_edges(&mut lower, &mut upper, re0)?;
                let (root, _) = illinois(
                    |r| Ok(gap(band_edges(&mut lower, &mut upper, r)?)),
                    (re0, g0),
                    (re, g),
                    0.0,
                    RE_REL_TOL,
                    60,
                    "Re_d",
                )?;
                return Ok(root);
            }
        }
        prev = Some((re, g));
        last_gap = g;
    }
    let what = if last_gap > 0.0 {
        "Re_d above bracket"
    } else {
        "Re_d below bracket"
    };
    Err(Error::NoSignChange {
        lo: bracket.0,
        hi: bracket.1,
        what: what.into(),
    })
}

/// Sampled solution of the amplitude equation.
#[derive(Clone, Debug)]
pub struct AmplitudeTrajectory {
    pub t: Vec<f64>,
    pub a: Vec<Complex64>,
    /// Set when `|A|` escaped to large values or the step size collapsed.
    pub blow_up: bool,
}

impl AmplitudeTrajectory {
    pub fn modulus(&self) -> Vec<f64> {
        self.a.iter().map(|z| z.norm()).collect()
    }
}

struct Landau {
    lambda: Complex64,
    c: Complex64,
    cap: f64,
    escaped: bool,
}

type State = ode_solvers::Vector2<f64>;

impl ode_solvers::System<f64, State> for &mut Landau {
    fn system(&self, _t: f64, y: &State, dy: &mut State) {
        let a = Complex64::new(y[0], y[1]);
        let d = self.lambda * a - self.c * a * a.norm_sqr();
        dy[0] = d.re;
        dy[1] = d.im;
    }

    fn solout(&mut self, _t: f64, y: &State, _dy: &State) -> bool {
        if y[0].hypot(y[1]) > self.cap || !(y[0].is_finite() && y[1].is_finite()) {
            self.escaped = true;
        }
        self.escaped
    }
}

/// Integrates `dA/dt = λA − C A|A|²` with an adaptive Dormand–Prince
/// scheme, sampling every `dt`.
pub fn amplitude_ode(
    lambda: Complex64,
    c_coeff: Complex64,
    a0: Complex64,
    t_end: f64,
    dt: f64,
) -> Result<AmplitudeTrajectory> {
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let mut sys = Landau {
        lambda,
        c: c_coeff,
        cap: 1e6 * a0.norm().max(1.0),
        escaped: false,
    };
    let y0 = State::new(a0.re, a0.im);
    // the solver's dense output extrapolates its very last sample, so
    // integrate one sample further and discard it
    let mut solver = ode_solvers::Dopri5::new(&mut sys, 0.0, t_end + dt, dt, y0, 1e-10, 1e-14);
    let outcome = solver.integrate();
    let (ts, ys) = solver.results().get();
    let keep = ts.iter().take_while(|&&t| t <= t_end * (1.0 + 1e-12)).count();
    let t = ts[..keep].to_vec();
    let a = ys[..keep].iter().map(|v| Complex64::new(v[0], v[1])).collect();
    let collapsed = match outcome {
        Ok(_) => false,
        Err(ode_solvers::dop_shared::IntegrationError::StepSizeUnderflow { .. }) => true,
        Err(e) => {
            return Err(Error::NoConvergence {
                what: format!("amplitude equation ({e})"),
                iterations: 100_000,
            })
        }
    };
    drop(solver);
    Ok(AmplitudeTrajectory {
        t,
        a,
        blow_up: collapsed || sys.escaped,
    })
}

/// Real velocity field on an `nx × n` tensor grid over one period in `x`.
#[derive(Clone, Debug)]
pub struct WaveSnapshot {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `u[i][j]` at `(x[i], y[j])`.
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// Evaluates `U + εV₁ + ε²V₂` with `V₁ = ζe^{iαx} + c.c.` and
/// `V₂ = ζ₂₂e^{2iαx} + c.c. + V₂₀`. The point at infinity of a half-line
/// grid is dropped.
pub fn reconstruct_wave(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    eigen: &EigenSolution,
    psi22: &[Complex64],
    mean: &MeanFlow,
    epsilon: f64,
    nx: usize,
) -> Result<WaveSnapshot> {
    grid.check_len(eigen.psi.len())?;
    grid.check_len(psi22.len())?;
    grid.check_len(mean.dpsi.len())?;
    if nx == 0 {
        return Err(Error::InvalidInput("nx must be positive".into()));
    }
    if epsilon > 0.1 {
        log::warn!("epsilon = {epsilon} is outside the small-amplitude regime");
    }
    let alpha = eigen.alpha;
    let (u1, v1) = oss::velocity(&eigen.psi, alpha, grid);
    let u2: Vec<Complex64> = grid.diff_c(1, psi22).into_iter().map(|v| -v).collect();
    let v2: Vec<Complex64> = psi22.iter().map(|p| 2.0 * I * alpha * p).collect();
    let rows: Vec<usize> = grid.finite_nodes().collect();
    let y: Vec<f64> = rows.iter().map(|&j| grid.nodes()[j]).collect();
    let period = 2.0 * std::f64::consts::PI / alpha;
    let x: Vec<f64> = (0..nx).map(|i| period * i as f64 / nx as f64).collect();
    let mut u = Vec::with_capacity(nx);
    let mut v = Vec::with_capacity(nx);
    for &xi in &x {
        let e1 = Complex64::from_polar(1.0, alpha * xi);
        let e2 = e1 * e1;
        let mut ur = Vec::with_capacity(rows.len());
        let mut vr = Vec::with_capacity(rows.len());
        for (&j, &yj) in rows.iter().zip(&y) {
            let first_u = 2.0 * (u1[j] * e1).re;
            let first_v = 2.0 * (v1[j] * e1).re;
            let second_u = 2.0 * (u2[j] * e2).re - mean.dpsi[j];
            let second_v = 2.0 * (v2[j] * e2).re;
            ur.push(profile.u(yj) + epsilon * first_u + epsilon * epsilon * second_u);
            vr.push(epsilon * first_v + epsilon * epsilon * second_v);
        }
        u.push(ur);
        v.push(vr);
    }
    Ok(WaveSnapshot { x, y, u, v })
}
