//! Compact-support kernels of the normalized distance `u = d / bandwidth`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelKind {
    Bartlett,
    Uniform,
    Epanechnikov,
    Parzen,
    QuarticBiweight,
    GaussianTruncated,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        KernelKind::Bartlett,
        KernelKind::Uniform,
        KernelKind::Epanechnikov,
        KernelKind::Parzen,
        KernelKind::QuarticBiweight,
        KernelKind::GaussianTruncated,
    ];

    /// Name used on the command line and in config files.
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Bartlett => "bartlett",
            KernelKind::Uniform => "uniform",
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Parzen => "parzen",
            KernelKind::QuarticBiweight => "biweight",
            KernelKind::GaussianTruncated => "gaussian",
        }
    }

    /// Kernel weight at normalized distance `u`; errors on negative or NaN `u`.
    pub fn weight(self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::invalid(format!(
                "normalized distance must be >= 0, got {u}"
            )));
        }
        Ok(self.weight_unchecked(u))
    }

    /// Kernel weight for `u >= 0`, without validation.
    #[inline]
    pub fn weight_unchecked(self, u: f64) -> f64 {
        if u > 1.0 {
            return 0.0;
        }
        match self {
            KernelKind::Uniform => 1.0,
            KernelKind::Bartlett => 1.0 - u,
            KernelKind::Epanechnikov => 1.0 - u * u,
            KernelKind::Parzen => {
                if u < 0.5 {
                    1.0 - 6.0 * u * u + 6.0 * u * u * u
                } else {
                    let v = 1.0 - u;
                    2.0 * v * v * v
                }
            }
            KernelKind::QuarticBiweight => {
                let v = 1.0 - u * u;
                v * v
            }
            // Open at u = 1; K(0) = 1 falls out of the formula.
            KernelKind::GaussianTruncated => {
                if u < 1.0 {
                    (-0.5 * u * u).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bartlett" => Ok(KernelKind::Bartlett),
            "uniform" => Ok(KernelKind::Uniform),
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            "parzen" => Ok(KernelKind::Parzen),
            "biweight" => Ok(KernelKind::QuarticBiweight),
            "gaussian" => Ok(KernelKind::GaussianTruncated),
            other => Err(Error::invalid(format!(
                "unknown kernel `{other}` (expected bartlett|uniform|epanechnikov|parzen|biweight|gaussian)"
            ))),
        }
    }
}

impl TryFrom<String> for KernelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelKind> for String {
    fn from(k: KernelKind) -> String {
        k.name().to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let w = |k: KernelKind, u| k.weight(u).unwrap();
        assert_eq!(w(KernelKind::Bartlett, 0.5), 0.5);
        assert_eq!(w(KernelKind::Parzen, 0.5), 0.25);
        assert_eq!(1.0 - 6.0 * 0.25 + 6.0 * 0.125, 2.0 * 0.125);
        assert_eq!(w(KernelKind::Epanechnikov, 0.5), 0.75);
        assert_eq!(w(KernelKind::QuarticBiweight, 0.5), 0.5625);
        assert!((w(KernelKind::GaussianTruncated, 0.5) - 0.882_496_902_584_595).abs() < 1e-12);
        for k in KernelKind::ALL {
            assert_eq!(w(k, 1.5), 0.0);
            assert_eq!(w(k, 0.0), 1.0);
        }
    }

    #[test]
    fn boundary_at_one() {
        for k in KernelKind::ALL {
            let expected = if k == KernelKind::Uniform { 1.0 } else { 0.0 };
            assert_eq!(k.weight(1.0).unwrap(), expected, "{k}");
        }
    }

    #[test]
    fn negative_u_rejected() {
        assert!(KernelKind::Bartlett.weight(-0.1).is_err());
        assert!(KernelKind::Bartlett.weight(f64::NAN).is_err());
    }

    #[test]
    fn names_round_trip() {
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
        assert!("triangle".parse::<KernelKind>().is_err());
    }

    #[test]
    fn monotone_and_dominated_by_uniform() {
        for k in KernelKind::ALL {
            let mut prev = f64::INFINITY;
            for s in 0..=10_000 {
                let u = s as f64 / 10_000.0;
                let w = k.weight(u).unwrap();
                assert!((0.0..=1.0).contains(&w));
                assert!(w <= prev, "{k} increases at {u}");
                if u < 1.0 {
                    assert!(w <= KernelKind::Uniform.weight(u).unwrap());
                }
                prev = w;
            }
        }
    }

    #[test]
    fn parzen_continuity() {
        let p = KernelKind::Parzen;
        let left = |u: f64| 1.0 - 6.0 * u * u + 6.0 * u * u * u;
        assert!((left(0.5) - p.weight(0.5).unwrap()).abs() < 1e-12);
        assert!((p.weight(1.0 - 1e-9).unwrap() - p.weight(1.0).unwrap()).abs() < 1e-12);
        assert!((p.weight(0.5 - 1e-12).unwrap() - p.weight(0.5).unwrap()).abs() < 1e-11);
    }
}
