use proptest::prelude::*;
use shearstab::bifurcation::{self as bf, Branch, Critical};
use shearstab::oss;
use shearstab::{Error, ShearProfile, SpectralGrid};
use std::sync::OnceLock;

fn poiseuille() -> ShearProfile {
    ShearProfile::poiseuille_family(1).unwrap()
}

fn strip() -> SpectralGrid {
    SpectralGrid::default_for(poiseuille().geometry())
}

fn critical() -> &'static Critical {
    static CELL: OnceLock<Critical> = OnceLock::new();
    CELL.get_or_init(|| bf::critical_reynolds(&poiseuille(), &strip()).unwrap())
}

/// Growth rate of the least-stable mode from a fresh dense solve.
fn recheck(profile: &ShearProfile, grid: &SpectralGrid, alpha: f64, nu: f64) -> f64 {
    let d = oss::assemble_direct(profile, grid, alpha, nu).unwrap();
    let a = oss::assemble_adjoint(profile, grid, alpha, nu).unwrap();
    oss::leading_mode(&d, &a, grid).unwrap().growth_rate()
}

#[test]
fn poiseuille_critical_point() {
    let c = critical();
    assert!((5715.0..=5830.0).contains(&c.re_c), "{}", c.re_c);
    assert!((c.alpha_c - 1.0205).abs() < 1e-3, "{}", c.alpha_c);
    assert!((c.c_c.re - 0.264).abs() < 1e-3, "{}", c.c_c);
    assert!(c.growth.abs() <= 1e-8);
}

#[test]
fn traced_curve_is_ordered_and_neutral() {
    let p = poiseuille();
    let g = strip();
    let curve = bf::trace_neutral_curves(&p, &g, 5772.0, 1e4, 20, Some(*critical())).unwrap();
    assert_eq!(curve.samples.len(), 20);
    for w in curve.samples.windows(2) {
        assert!(w[1].re() > w[0].re());
        // the band widens with Re near the nose
        assert!(w[1].alpha_minus < w[0].alpha_minus);
    }
    for s in &curve.samples {
        assert!(s.alpha_minus < s.alpha_plus, "{s:?}");
    }
    for s in curve.samples.iter().step_by(6) {
        for alpha in [s.alpha_minus, s.alpha_plus] {
            let g_re = recheck(&p, &g, alpha, s.nu);
            assert!(g_re.abs() <= 1e-8, "Re = {}: {g_re}", s.re());
        }
    }
}

#[test]
fn warm_and_cold_starts_agree() {
    let p = poiseuille();
    let g = strip();
    let curve = bf::trace_neutral_curves(&p, &g, 6000.0, 9000.0, 4, Some(*critical())).unwrap();
    for s in &curve.samples {
        let lo = bf::neutral_alpha(&p, &g, s.nu, Branch::Lower, None).unwrap();
        let hi = bf::neutral_alpha(&p, &g, s.nu, Branch::Upper, None).unwrap();
        assert!((lo.alpha - s.alpha_minus).abs() <= 1e-8, "{} vs {}", lo.alpha, s.alpha_minus);
        assert!((hi.alpha - s.alpha_plus).abs() <= 1e-8, "{} vs {}", hi.alpha, s.alpha_plus);
    }
}

#[test]
fn trace_rejects_subcritical_start() {
    let e = bf::trace_neutral_curves(&poiseuille(), &strip(), 5000.0, 6000.0, 3, Some(*critical()))
        .unwrap_err();
    assert!(matches!(e, Error::NoUnstableBand { .. }), "{e}");
}

#[test]
fn hinted_bracket_finds_same_root() {
    let p = poiseuille();
    let g = strip();
    let cold = bf::neutral_alpha(&p, &g, 1.0 / 7000.0, Branch::Upper, None).unwrap();
    let hinted =
        bf::neutral_alpha(&p, &g, 1.0 / 7000.0, Branch::Upper, Some((cold.alpha - 0.05, cold.alpha + 0.05)))
            .unwrap();
    assert!((cold.alpha - hinted.alpha).abs() <= 1e-8);
    assert!(hinted.growth.abs() <= 1e-9);
    assert_eq!(hinted.omega0, -hinted.alpha * hinted.c_phase);
}

#[test]
fn exponential_band_at_high_reynolds() {
    let p = ShearProfile::exponential();
    let g = SpectralGrid::default_for(p.geometry());
    let mut ratios = Vec::new();
    for re in [1e5, 3e5] {
        let lo = bf::neutral_alpha(&p, &g, 1.0 / re, Branch::Lower, None).unwrap();
        let hi = bf::neutral_alpha(&p, &g, 1.0 / re, Branch::Upper, None).unwrap();
        assert!(lo.alpha < hi.alpha);
        assert!(recheck(&p, &g, lo.alpha, lo.nu).abs() <= 1e-8);
        ratios.push(hi.alpha / lo.alpha);
    }
    assert!(ratios[1] > ratios[0], "{ratios:?}");
}

#[test]
fn strip_re_d_lies_beyond_range() {
    let e = bf::find_re_d(&poiseuille(), &strip(), (critical().re_c * 1.001, 1e5)).unwrap_err();
    assert!(e.to_string().contains("Re_d above bracket"), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn lower_branch_below_upper(re in 6000.0f64..20000.0) {
        let p = poiseuille();
        let g = strip();
        let lo = bf::neutral_alpha(&p, &g, 1.0 / re, Branch::Lower, None).unwrap();
        let hi = bf::neutral_alpha(&p, &g, 1.0 / re, Branch::Upper, None).unwrap();
        prop_assert!(lo.alpha < hi.alpha);
        prop_assert!(lo.growth.abs() <= 1e-9 && hi.growth.abs() <= 1e-9);
        // inside the band the flow is unstable
        let mid = 0.5 * (lo.alpha + hi.alpha);
        prop_assert!(recheck(&p, &g, mid, 1.0 / re) > 0.0);
    }
}
