use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fully resolved kernel function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    #[serde(rename = "poly")]
    Polynomial {
        gamma: f64,
        degree: u32,
        coef0: f64,
    },
    Rbf {
        gamma: f64,
    },
    Sigmoid {
        gamma: f64,
        coef0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    #[serde(alias = "polynomial")]
    Poly,
    Rbf,
    Sigmoid,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Poly),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

/// User-facing kernel choice. A missing `gamma` is resolved against the
/// scaled training set at fit time (see [`super::default_gamma`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub coef0: f64,
}

fn default_degree() -> u32 {
    3
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        Self {
            kind,
            gamma: None,
            degree: default_degree(),
            coef0: 0.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn resolve(&self, fallback_gamma: f64) -> Result<Kernel> {
        let gamma = self.gamma.unwrap_or(fallback_gamma);
        let kernel = match self.kind {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Poly => Kernel::Polynomial {
                gamma,
                degree: self.degree,
                coef0: self.coef0,
            },
            KernelKind::Rbf => Kernel::Rbf { gamma },
            KernelKind::Sigmoid => Kernel::Sigmoid {
                gamma,
                coef0: self.coef0,
            },
        };
        kernel.validate()?;
        Ok(kernel)
    }
}

impl From<Kernel> for KernelSpec {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Linear => KernelSpec::new(KernelKind::Linear),
            Kernel::Polynomial {
                gamma,
                degree,
                coef0,
            } => KernelSpec {
                kind: KernelKind::Poly,
                gamma: Some(gamma),
                degree,
                coef0,
            },
            Kernel::Rbf { gamma } => KernelSpec::new(KernelKind::Rbf).with_gamma(gamma),
            Kernel::Sigmoid { gamma, coef0 } => KernelSpec {
                coef0,
                ..KernelSpec::new(KernelKind::Sigmoid).with_gamma(gamma)
            },
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        let gamma_ok = |g: f64| g.is_finite() && g > 0.0;
        let ok = match *self {
            Kernel::Linear => true,
            Kernel::Polynomial {
                gamma,
                degree,
                coef0,
            } => gamma_ok(gamma) && degree >= 1 && coef0.is_finite(),
            Kernel::Rbf { gamma } => gamma_ok(gamma),
            Kernel::Sigmoid { gamma, coef0 } => gamma_ok(gamma) && coef0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid kernel parameters: {self:?}"
            )))
        }
    }

    /// Kernel value without the dimension check; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn apply(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Polynomial {
                gamma,
                degree,
                coef0,
            } => (gamma * dot(a, b) + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
            Kernel::Sigmoid { gamma, coef0 } => (gamma * dot(a, b) + coef0).tanh(),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Contract(format!(
                "kernel arguments differ in dimension ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        Ok(self.apply(a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let rbf = Kernel::Rbf { gamma: 0.7 };
        assert_eq!(rbf.eval(&[1.0, -2.0], &[1.0, -2.0]).unwrap(), 1.0);
        assert_eq!(Kernel::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let poly = Kernel::Polynomial {
            gamma: 1.0,
            degree: 1,
            coef0: 0.0,
        };
        for (a, b) in [([0.3, -1.5], [2.0, 4.0]), ([7.0, 0.0], [-1.0, 1.0])] {
            assert_eq!(
                poly.eval(&a, &b).unwrap(),
                Kernel::Linear.eval(&a, &b).unwrap()
            );
        }
        let rbf1 = Kernel::Rbf { gamma: 1.0 };
        assert!((rbf1.eval(&[0.0], &[2.0]).unwrap() - (-4.0f64).exp()).abs() < 1e-15);
        let sig = Kernel::Sigmoid {
            gamma: 0.5,
            coef0: -1.0,
        };
        assert!((sig.eval(&[1.0], &[2.0]).unwrap() - 0.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_a_contract_error() {
        assert!(matches!(
            Kernel::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn spec_resolution_and_validation() {
        let k = KernelSpec::new(KernelKind::Rbf).resolve(0.25).unwrap();
        assert_eq!(k, Kernel::Rbf { gamma: 0.25 });
        assert!(KernelSpec::new(KernelKind::Rbf)
            .with_gamma(0.0)
            .resolve(1.0)
            .is_err());
        let zero_degree = KernelSpec {
            degree: 0,
            ..KernelSpec::new(KernelKind::Poly)
        };
        assert!(zero_degree.resolve(1.0).is_err());
        assert_eq!(
            "polynomial".parse::<KernelKind>().unwrap(),
            KernelKind::Poly
        );
        assert!("cubic".parse::<KernelKind>().is_err());
    }

    #[test]
    fn kernel_json_shape() {
        let json = serde_json::to_string(&Kernel::Rbf { gamma: 0.5 }).unwrap();
        assert_eq!(json, r#"{"kind":"rbf","gamma":0.5}"#);
        let spec: KernelSpec = serde_json::from_str(r#"{"kind":"sigmoid","coef0":1}"#).unwrap();
        assert_eq!(spec.gamma, None);
        assert_eq!(spec.coef0, 1.0);
    }
}
