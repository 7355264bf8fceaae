//! Subcommand implementations. Each one resolves its parameters, computes
//! everything first and writes its output in one piece.

use std::io::Write;

use shearstab::bifurcation::{
    self as bf, Branch, LandauOptions, LandauResult, NeutralPoint, Verdict,
};
use shearstab::oss::{self, EigenSolution};
use shearstab::{Error, Geometry, ShearProfile, SpectralGrid};

use crate::acceptance::{self, SuiteOptions};
use crate::config::{BranchChoice, ConfigError, Params, Quantity};
use crate::CliError;

/// Full round-trip precision (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn stage(name: &'static str) -> impl FnOnce(Error) -> CliError {
    move |source| CliError::Numerical { stage: name, source }
}

/// Profile and grid selected by `profile`, `p`, `n_points` and `map_scale`.
pub fn setup(p: &Params) -> Result<(ShearProfile, SpectralGrid), CliError> {
    let name = p.profile.as_deref().unwrap_or("poiseuille");
    let profile =
        ShearProfile::builtin(name, p.p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let default = SpectralGrid::default_for(profile.geometry());
    if profile.geometry() == Geometry::Strip && p.map_scale.is_some() {
        log::warn!("map_scale is ignored on the strip");
    }
    let grid = SpectralGrid::new(
        profile.geometry(),
        p.n_points.unwrap_or(default.n()),
        p.map_scale.or(default.map_scale()),
    )
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok((profile, grid))
}

pub fn landau_options(p: &Params) -> LandauOptions {
    LandauOptions {
        closure: p.closure.unwrap_or_default(),
        forcing: p.mean_forcing.unwrap_or_default(),
    }
}

/// Writes to stdout for `-`, otherwise to the named file.
pub fn emit(p: &Params, bytes: &[u8]) -> Result<(), CliError> {
    match p.output() {
        "-" => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        path => std::fs::write(path, bytes).map_err(|source| CliError::Output {
            path: path.to_string(),
            source,
        })?,
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn positive(v: f64, key: &str) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Invalid(format!("{key} must be positive, got {v}")))
    }
}

/// `k` equally spaced values from `a` to `b`.
pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

/// `re_min..=re_max` in `steps` points.
fn re_range(p: &Params) -> Result<Vec<f64>, ConfigError> {
    let steps = Params::require(&p.steps, "steps")?;
    if steps == 0 {
        return Err(ConfigError::Invalid("steps must be at least 1".into()));
    }
    let lo = positive(Params::require(&p.re_min, "re_min")?, "re_min")?;
    let hi = positive(Params::require(&p.re_max, "re_max")?, "re_max")?;
    if hi < lo {
        return Err(ConfigError::Invalid(format!("re_max = {hi} is below re_min = {lo}")));
    }
    Ok(linspace(lo, hi, steps))
}

/// Maps `f` over `items` on `workers` threads. The items are split into
/// contiguous blocks up front and the results come back in item order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let w = workers.clamp(1, items.len().max(1));
    if w == 1 {
        return items.iter().map(&f).collect();
    }
    let block = items.len().div_ceil(w);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(block)
            .map(|chunk| {
                let f = &f;
                s.spawn(move || chunk.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

pub fn leading(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    re: f64,
    alpha: f64,
) -> shearstab::Result<EigenSolution> {
    let nu = 1.0 / re;
    let direct = oss::assemble_direct(profile, grid, alpha, nu)?;
    let adjoint = oss::assemble_adjoint(profile, grid, alpha, nu)?;
    oss::leading_mode(&direct, &adjoint, grid)
}

pub fn eigen(p: &Params) -> Result<(), CliError> {
    let re = positive(Params::require(&p.re, "re")?, "re")?;
    let alpha = positive(Params::require(&p.alpha, "alpha")?, "alpha")?;
    let (profile, grid) = setup(p)?;
    let e = leading(&profile, &grid, re, alpha).map_err(stage("eigen"))?;
    let row = vec![
        profile.name().to_string(),
        num(re),
        num(alpha),
        num(e.lambda.re),
        num(e.lambda.im),
        num(e.c.re),
        num(e.c.im),
        num(e.residual_direct),
    ];
    let header = [
        "profile", "re", "alpha", "re_lambda", "im_lambda", "re_c_phase", "im_c_phase", "residual",
    ];
    emit(p, &csv_bytes(&header, &[row])?)
}

pub fn neutral(p: &Params) -> Result<(), CliError> {
    let res = re_range(p)?;
    let (profile, grid) = setup(p)?;
    let crit = bf::critical_reynolds(&profile, &grid).map_err(stage("re_c"))?;
    if res[0] < crit.re_c * (1.0 - 1e-3) {
        return Err(CliError::BelowCritical {
            re_min: res[0],
            re_c: crit.re_c,
        });
    }
    let curve = bf::trace_neutral_curves(&profile, &grid, res[0], res[res.len() - 1], res.len(), Some(crit))
        .map_err(stage("neutral"))?;
    let rows: Vec<Vec<String>> = curve
        .samples
        .iter()
        .map(|s| {
            vec![num(s.re()), num(s.alpha_minus), num(s.c_minus), num(s.alpha_plus), num(s.c_plus)]
        })
        .collect();
    emit(p, &csv_bytes(&["re", "alpha_minus", "c_minus", "alpha_plus", "c_plus"], &rows)?)
}

fn branches(choice: BranchChoice) -> Vec<Branch> {
    match choice {
        BranchChoice::Lower => vec![Branch::Lower],
        BranchChoice::Upper => vec![Branch::Upper],
        BranchChoice::Both => vec![Branch::Lower, Branch::Upper],
    }
}

pub fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Subcritical => "sub",
        Verdict::Supercritical => "super",
        Verdict::Marginal => "marginal",
    }
}

/// Neutral point and Landau coefficient on one branch at one `Re`.
pub fn landau_at(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    re: f64,
    branch: Branch,
    opts: LandauOptions,
) -> (Option<NeutralPoint>, shearstab::Result<LandauResult>) {
    match bf::neutral_alpha(profile, grid, 1.0 / re, branch, None) {
        Ok(pt) => (Some(pt), bf::landau_coefficient_with(profile, &pt, grid, opts)),
        Err(e) => (None, Err(e)),
    }
}

pub fn landau(p: &Params) -> Result<(), CliError> {
    let res = match p.re {
        Some(re) => vec![positive(re, "re")?],
        None => re_range(p)?,
    };
    let (profile, grid) = setup(p)?;
    let opts = landau_options(p);
    let items: Vec<(f64, Branch)> = res
        .iter()
        .flat_map(|&re| branches(p.branch.unwrap_or(BranchChoice::Both)).into_iter().map(move |b| (re, b)))
        .collect();
    let results = parallel_map(&items, p.workers(), |&(re, b)| landau_at(&profile, &grid, re, b, opts));
    let nan = || num(f64::NAN);
    let mut failed = 0;
    let rows: Vec<Vec<String>> = items
        .iter()
        .zip(&results)
        .map(|(&(re, b), (pt, r))| match r {
            Ok(l) => vec![
                num(re),
                b.to_string(),
                num(l.point.alpha),
                num(l.point.omega0),
                num(l.c_coeff.re),
                num(l.c_coeff.im),
                num(l.b1_proj.re),
                num(l.b1_proj.im),
                num(l.b2_proj.re),
                num(l.b2_proj.im),
                verdict_word(l.verdict).to_string(),
                num(l.diagnostics.resonance_margin),
            ],
            Err(e) => {
                failed += 1;
                log::warn!("Re = {re}, {b} branch: {e}");
                let margin = match e {
                    Error::Resonance { margin } => num(*margin),
                    _ => nan(),
                };
                let (alpha, omega0) = match pt {
                    Some(pt) => (num(pt.alpha), num(pt.omega0)),
                    None => (nan(), nan()),
                };
                let mut row = vec![num(re), b.to_string(), alpha, omega0];
                row.extend((0..6).map(|_| nan()));
                row.extend(["failed".to_string(), margin]);
                row
            }
        })
        .collect();
    let header = [
        "re", "branch", "alpha", "omega0", "re_C", "im_C", "re_b1", "im_b1", "re_b2", "im_b2",
        "verdict", "resonance_margin",
    ];
    emit(p, &csv_bytes(&header, &rows)?)?;
    if failed == rows.len() {
        return Err(CliError::AllFailed(failed));
    }
    Ok(())
}

/// Default `Re_s` search bracket above the critical point.
pub fn re_s_bracket(re_c: f64) -> (f64, f64) {
    (re_c * (1.0 + 1e-3), 2.0 * re_c)
}

/// Default `Re_d` search bracket above the critical point.
pub fn re_d_bracket(re_c: f64) -> (f64, f64) {
    (re_c * (1.0 + 1e-3), (3.0 * re_c).max(1e5))
}

pub fn is_above_bracket(e: &Error) -> bool {
    matches!(e, Error::NoSignChange { what, .. } if what.contains("above bracket"))
}

pub fn thresholds(p: &Params) -> Result<(), CliError> {
    let (profile, grid) = setup(p)?;
    let crit = bf::critical_reynolds(&profile, &grid).map_err(stage("re_c"))?;
    let user = match (p.re_min, p.re_max) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(ConfigError::Invalid("give both re_min and re_max or neither".into()).into()),
    };
    let s_bracket = user.unwrap_or(re_s_bracket(crit.re_c));
    let d_bracket = user.unwrap_or(re_d_bracket(crit.re_c));
    let re_s = bf::find_re_s_with(&profile, &grid, s_bracket, landau_options(p)).map_err(stage("re_s"))?;
    let re_d = match bf::find_re_d(&profile, &grid, d_bracket) {
        Ok(r) => num(r),
        Err(e) if is_above_bracket(&e) => "above bracket".to_string(),
        Err(e) => return Err(stage("re_d")(e)),
    };
    let report = format!(
        "profile={}\nre_c={}\nalpha_c={}\nc_c={}\nre_s={}\nre_d={}\nre_d_bracket_max={}\n",
        profile.name(),
        num(crit.re_c),
        num(crit.alpha_c),
        num(crit.c_c.re),
        num(re_s),
        re_d,
        num(d_bracket.1),
    );
    emit(p, report.as_bytes())
}

pub fn wave(p: &Params) -> Result<(), CliError> {
    let eps = Params::require(&p.epsilon, "epsilon")?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(ConfigError::Invalid(format!("epsilon must be non-negative, got {eps}")).into());
    }
    let re = positive(Params::require(&p.re, "re")?, "re")?;
    let branch = match p.branch.unwrap_or(BranchChoice::Lower) {
        BranchChoice::Lower => Branch::Lower,
        BranchChoice::Upper => Branch::Upper,
        BranchChoice::Both => {
            return Err(ConfigError::Invalid("wave needs branch = lower or upper".into()).into())
        }
    };
    let nx = p.nx.unwrap_or(32);
    if nx == 0 {
        return Err(ConfigError::Invalid("nx must be at least 1".into()).into());
    }
    let (profile, grid) = setup(p)?;
    let pt = bf::neutral_alpha(&profile, &grid, 1.0 / re, branch, None).map_err(stage("neutral"))?;
    let l = bf::landau_coefficient_with(&profile, &pt, &grid, landau_options(p)).map_err(stage("landau"))?;
    let w = bf::reconstruct_wave(&profile, &grid, &l.eigen, &l.psi22, &l.mean_flow, eps, nx)
        .map_err(stage("wave"))?;
    let mut rows = Vec::with_capacity(nx * w.y.len());
    for (i, x) in w.x.iter().enumerate() {
        for (j, y) in w.y.iter().enumerate() {
            rows.push(vec![num(*x), num(*y), num(w.u[i][j]), num(w.v[i][j])]);
        }
    }
    emit(p, &csv_bytes(&["x", "y", "u", "v"], &rows)?)
}

/// One evaluated sweep point.
pub fn sweep_row(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    quantity: Quantity,
    opts: LandauOptions,
    re: f64,
    alpha: f64,
) -> Vec<String> {
    let nan = || num(f64::NAN);
    let eig = match leading(profile, grid, re, alpha) {
        Ok(e) => e,
        Err(e) => {
            log::warn!("Re = {re}, alpha = {alpha}: {e}");
            let width = if quantity == Quantity::Growth { 2 } else { 4 };
            let mut row = vec![num(re), num(alpha)];
            row.extend((0..width).map(|_| nan()));
            row.push("failed".into());
            return row;
        }
    };
    let mut row = vec![num(re), num(alpha), num(eig.lambda.re), num(eig.lambda.im)];
    match quantity {
        Quantity::Growth => row.push("ok".into()),
        Quantity::Landau => {
            // off the neutral curve: ω₀ is taken from ℑλ
            let pt = NeutralPoint {
                nu: 1.0 / re,
                re,
                branch: Branch::Lower,
                alpha,
                c_phase: eig.c.re,
                omega0: eig.omega(),
                growth: eig.growth_rate(),
            };
            match bf::landau_from_eigen(profile, &pt, grid, eig, opts) {
                Ok(l) => {
                    row.extend([num(l.c_coeff.re), num(l.c_coeff.im), "extended".into()]);
                }
                Err(e) => {
                    log::warn!("Re = {re}, alpha = {alpha}: {e}");
                    row.extend([nan(), nan(), "failed".into()]);
                }
            }
        }
    }
    row
}

/// Sweep CSV for the grid `res × alphas`, row-major in `Re`.
pub fn sweep_csv(
    profile: &ShearProfile,
    grid: &SpectralGrid,
    quantity: Quantity,
    opts: LandauOptions,
    res: &[f64],
    alphas: &[f64],
    workers: usize,
) -> Result<Vec<u8>, CliError> {
    let points: Vec<(f64, f64)> =
        res.iter().flat_map(|&re| alphas.iter().map(move |&a| (re, a))).collect();
    let rows = parallel_map(&points, workers, |&(re, a)| sweep_row(profile, grid, quantity, opts, re, a));
    let header: &[&str] = match quantity {
        Quantity::Growth => &["re", "alpha", "re_lambda", "im_lambda", "status"],
        Quantity::Landau => &["re", "alpha", "re_lambda", "im_lambda", "re_C", "im_C", "status"],
    };
    csv_bytes(header, &rows)
}

pub fn sweep(p: &Params) -> Result<(), CliError> {
    let res = re_range(p)?;
    let k = Params::require(&p.alpha_steps, "alpha_steps")?;
    if k == 0 {
        return Err(ConfigError::Invalid("empty grid: alpha_steps must be at least 1".into()).into());
    }
    let a0 = positive(Params::require(&p.alpha_min, "alpha_min")?, "alpha_min")?;
    let a1 = positive(Params::require(&p.alpha_max, "alpha_max")?, "alpha_max")?;
    if a1 < a0 {
        return Err(ConfigError::Invalid(format!("alpha_max = {a1} is below alpha_min = {a0}")).into());
    }
    let (profile, grid) = setup(p)?;
    let bytes = sweep_csv(
        &profile,
        &grid,
        p.quantity.unwrap_or(Quantity::Growth),
        landau_options(p),
        &res,
        &linspace(a0, a1, k),
        p.workers(),
    )?;
    emit(p, &bytes)
}

pub fn validate(p: &Params, only: &[String]) -> Result<(), CliError> {
    for id in only {
        if !acceptance::CRITERIA.iter().any(|c| c.0 == id) {
            return Err(ConfigError::Invalid(format!("unknown criterion '{id}'")).into());
        }
    }
    let opts = SuiteOptions {
        n_points: p.n_points,
        map_scale: p.map_scale,
        seed: p.seed.unwrap_or(0),
        landau: landau_options(p),
    };
    let mut report = String::new();
    let outcomes = acceptance::run(&opts, only, |o| {
        // progress goes to stderr when the report itself is on stdout
        log::info!("{o}");
    });
    for o in &outcomes {
        report.push_str(&o.to_string());
        report.push('\n');
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    report.push_str(&format!("{} passed, {failed} failed\n", outcomes.len() - failed));
    emit(p, report.as_bytes())?;
    if failed > 0 {
        return Err(CliError::Validation {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}
