//! Base shear flows `U_s(y)` with closed-form derivatives.
//!
//! Two families are provided: the Poiseuille-type profiles `1 - y^{2p}` on
//! the strip `[-1, 1]` and the exponential profile `1 - e^{-y}` on the half
//! line `[0, ∞)`.

use std::fmt;

use crate::error::{Error, Result};

/// Physical domain of the base flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// `y ∈ [-1, 1]`, walls at both ends.
    Strip,
    /// `y ∈ [0, ∞)`, wall at `y = 0`.
    HalfSpace,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Strip => f.write_str("strip"),
            Geometry::HalfSpace => f.write_str("half-space"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    /// `1 - y^{2p}`.
    Power(u32),
    /// `1 - e^{-y}`.
    Exponential,
}

/// A base flow together with its first two derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearProfile {
    name: String,
    geometry: Geometry,
    family: Family,
}

/// Boundary data entering the large-Reynolds asymptotics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryParams {
    /// `U_s'` at the wall (the lower wall `y = -1` for the strip).
    pub wall_slope: f64,
    /// `U_s''` at the same wall.
    pub wall_curvature: f64,
    /// Limit of `U_s` at infinity; `None` on the strip.
    pub u_plus: Option<f64>,
}

impl ShearProfile {
    /// `U_s(y) = 1 - y^{2p}` on the strip.
    ///
    /// Only `p ∈ {1, 2, 3}` have been validated; larger exponents are accepted
    /// with a warning.
    pub fn poiseuille_family(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput(
                "poiseuille_family needs an exponent p >= 1".into(),
            ));
        }
        if p > 3 {
            log::warn!("poiseuille_family with p = {p} has not been validated (p in 1..=3)");
        }
        let name = match p {
            1 => "poiseuille".to_string(),
            2 => "quartic".to_string(),
            3 => "sextic".to_string(),
            _ => format!("poiseuille_p{p}"),
        };
        Ok(Self {
            name,
            geometry: Geometry::Strip,
            family: Family::Power(p),
        })
    }

    /// `U_s(y) = 1 - e^{-y}` on the half line.
    pub fn exponential() -> Self {
        Self {
            name: "exponential".into(),
            geometry: Geometry::HalfSpace,
            family: Family::Exponential,
        }
    }

    /// Looks up a builtin profile by family name (`poiseuille_family`,
    /// `exponential`) or by its short alias (`poiseuille`, `quartic`,
    /// `sextic`).
    pub fn builtin(name: &str, p: Option<u32>) -> Result<Self> {
        match (name, p) {
            ("poiseuille_family", Some(p)) => Self::poiseuille_family(p),
            ("poiseuille_family", None) => Err(Error::InvalidInput(
                "poiseuille_family requires the exponent p".into(),
            )),
            ("poiseuille", None | Some(1)) => Self::poiseuille_family(1),
            ("quartic", None | Some(2)) => Self::poiseuille_family(2),
            ("sextic", None | Some(3)) => Self::poiseuille_family(3),
            ("exponential", _) => Ok(Self::exponential()),
            ("poiseuille" | "quartic" | "sextic", Some(p)) => Err(Error::InvalidInput(format!(
                "profile '{name}' conflicts with p = {p}"
            ))),
            _ => Err(Error::InvalidInput(format!("unknown profile '{name}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Exponent `p` of the Poiseuille family, `None` for the exponential flow.
    pub fn exponent(&self) -> Option<u32> {
        match self.family {
            Family::Power(p) => Some(p),
            Family::Exponential => None,
        }
    }

    pub fn u(&self, y: f64) -> f64 {
        match self.family {
            Family::Power(p) => 1.0 - y.powi(2 * p as i32),
            Family::Exponential => -(-y).exp_m1(),
        }
    }

    pub fn du(&self, y: f64) -> f64 {
        match self.family {
            Family::Power(p) => {
                let k = 2 * p as i32;
                -(k as f64) * y.powi(k - 1)
            }
            Family::Exponential => (-y).exp(),
        }
    }

    pub fn ddu(&self, y: f64) -> f64 {
        match self.family {
            Family::Power(p) => {
                let k = 2 * p as i32;
                -((k * (k - 1)) as f64) * y.powi(k - 2)
            }
            Family::Exponential => -(-y).exp(),
        }
    }

    /// Limit of `U_s` at infinity (half space only).
    pub fn u_plus(&self) -> Option<f64> {
        match self.geometry {
            Geometry::HalfSpace => Some(1.0),
            Geometry::Strip => None,
        }
    }

    /// Position of the reference wall: `y = -1` on the strip, `y = 0` on the
    /// half line.
    pub fn wall(&self) -> f64 {
        match self.geometry {
            Geometry::Strip => -1.0,
            Geometry::HalfSpace => 0.0,
        }
    }

    pub fn boundary_params(&self) -> BoundaryParams {
        let y0 = self.wall();
        BoundaryParams {
            wall_slope: self.du(y0),
            wall_curvature: self.ddu(y0),
            u_plus: self.u_plus(),
        }
    }
}

impl fmt::Display for ShearProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.geometry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn all_builtin() -> Vec<ShearProfile> {
        vec![
            ShearProfile::poiseuille_family(1).unwrap(),
            ShearProfile::poiseuille_family(2).unwrap(),
            ShearProfile::poiseuille_family(3).unwrap(),
            ShearProfile::exponential(),
        ]
    }

    #[test]
    fn pointwise_values() {
        let p1 = ShearProfile::builtin("poiseuille_family", Some(1)).unwrap();
        assert_eq!(p1.u(0.0), 1.0);
        assert_eq!(p1.du(0.0), 0.0);
        assert_eq!(p1.ddu(0.0), -2.0);

        let e = ShearProfile::builtin("exponential", None).unwrap();
        assert_eq!(e.u(0.0), 0.0);
        assert_eq!(e.du(0.0), 1.0);
        assert_eq!(e.ddu(0.0), -1.0);

        let p2 = ShearProfile::poiseuille_family(2).unwrap();
        assert_eq!(p2.u(0.5), 0.9375);
    }

    #[test]
    fn boundary_parameters() {
        let e = ShearProfile::exponential().boundary_params();
        assert_eq!((e.wall_slope, e.wall_curvature, e.u_plus), (1.0, -1.0, Some(1.0)));

        let p1 = ShearProfile::poiseuille_family(1).unwrap().boundary_params();
        assert_eq!(p1.wall_slope, 2.0);
        assert_eq!(p1.u_plus, None);

        let p3 = ShearProfile::poiseuille_family(3).unwrap().boundary_params();
        assert_eq!(p3.wall_curvature, -30.0);
    }

    #[test]
    fn rejects_bad_names() {
        assert!(ShearProfile::builtin("couette", None).is_err());
        assert!(ShearProfile::builtin("poiseuille_family", None).is_err());
        assert!(ShearProfile::builtin("poiseuille_family", Some(0)).is_err());
        assert!(ShearProfile::builtin("quartic", Some(3)).is_err());
        // unvalidated but allowed
        assert!(ShearProfile::builtin("poiseuille_family", Some(4)).is_ok());
    }

    #[test]
    fn vanishes_at_walls() {
        for p in 1..=3 {
            let prof = ShearProfile::poiseuille_family(p).unwrap();
            assert!(prof.u(1.0).abs() <= 1e-14);
            assert!(prof.u(-1.0).abs() <= 1e-14);
        }
        let e = ShearProfile::exponential();
        assert!(e.u(0.0).abs() <= 1e-14);
        for y in [30.0, 35.0, 50.0, 1e3] {
            assert!((e.u(y) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let h = 1e-5;
        for prof in all_builtin() {
            for _ in 0..100 {
                let y = match prof.geometry() {
                    Geometry::Strip => rng.gen_range(-0.99..0.99),
                    Geometry::HalfSpace => rng.gen_range(0.01..20.0),
                };
                let fd1 = (prof.u(y + h) - prof.u(y - h)) / (2.0 * h);
                let fd2 = (prof.du(y + h) - prof.du(y - h)) / (2.0 * h);
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
                assert!(rel(fd1, prof.du(y)) <= 1e-6, "{prof} du at {y}");
                assert!(rel(fd2, prof.ddu(y)) <= 1e-6, "{prof} ddu at {y}");
            }
        }
    }

    #[test]
    fn strip_profiles_are_even() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for p in 1..=3 {
            let prof = ShearProfile::poiseuille_family(p).unwrap();
            for _ in 0..100 {
                let y: f64 = rng.gen_range(-1.0..1.0);
                assert!((prof.u(y) - prof.u(-y)).abs() <= 1e-14);
            }
        }
    }
}
