//! Point-cloud inputs: a CSV path or a generator spec such as
//! `vmf:mu=0,0,1:kappa=10:n=500`, `uniform:d=2:n=500` or
//! `icosa12:kappa=50:n=2400`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use s3w::distance::EmpiricalMeasure;
use s3w::io::{read_cloud, WeightColumn};
use s3w::rng::rng_from_seed;
use s3w::sphere::{sample_uniform, SpherePoint, VmfMixture, VonMisesFisher};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Uniform { d: usize, n: usize },
    Vmf { mu: Vec<f64>, kappa: f64, n: usize },
    Icosa12 { kappa: f64, n: usize },
}

const KINDS: [&str; 3] = ["uniform", "vmf", "icosa12"];

impl Generator {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let mut parts = spec.split(':');
        let kind = parts.next().unwrap_or_default();
        let mut kv = BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("generator `{spec}`: expected key=value, got `{p}`")))?;
            if kv.insert(k.to_owned(), v.to_owned()).is_some() {
                return Err(CliError::usage(format!("generator `{spec}`: duplicate key `{k}`")));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        let num = |key: &str, v: Option<String>| -> Result<Option<f64>, CliError> {
            v.map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("generator `{spec}`: `{key}={s}` is not a number")))
            })
            .transpose()
        };
        let count = |key: &str, v: Option<String>, default: usize| -> Result<usize, CliError> {
            match v {
                None => Ok(default),
                Some(s) => match s.parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(CliError::usage(format!("generator `{spec}`: `{key}={s}` must be a positive integer"))),
                },
            }
        };
        let g = match kind {
            "uniform" => {
                let d = count("d", take("d"), 2)?;
                let n = count("n", take("n"), 500)?;
                Generator::Uniform { d, n }
            }
            "vmf" => {
                let mu = match take("mu") {
                    None => vec![0.0, 0.0, 1.0],
                    Some(s) => s
                        .split(',')
                        .map(|c| c.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| CliError::usage(format!("generator `{spec}`: bad mu `{s}`")))?,
                };
                let kappa = num("kappa", take("kappa"))?.unwrap_or(10.0);
                let n = count("n", take("n"), 500)?;
                Generator::Vmf { mu, kappa, n }
            }
            "icosa12" => {
                let kappa = num("kappa", take("kappa"))?.unwrap_or(50.0);
                let n = count("n", take("n"), 2400)?;
                Generator::Icosa12 { kappa, n }
            }
            _ => {
                return Err(CliError::usage(format!(
                    "unknown generator `{kind}` (expected one of {})",
                    KINDS.join(", ")
                )))
            }
        };
        if let Some(k) = kv.keys().next() {
            return Err(CliError::usage(format!("generator `{spec}`: unknown key `{k}`")));
        }
        g.mixture()?;
        Ok(g)
    }

    /// The generating distribution as a mixture.
    pub fn mixture(&self) -> Result<VmfMixture, CliError> {
        Ok(match self {
            Generator::Uniform { d, .. } => VmfMixture::uniform_weights(vec![VonMisesFisher::uniform(*d)])?,
            Generator::Vmf { mu, kappa, .. } => {
                VmfMixture::uniform_weights(vec![VonMisesFisher::new(SpherePoint::new(mu.clone())?, *kappa)?])?
            }
            Generator::Icosa12 { kappa, .. } => VmfMixture::icosahedral(*kappa)?,
        })
    }

    pub fn size(&self) -> usize {
        match self {
            Generator::Uniform { n, .. } | Generator::Vmf { n, .. } | Generator::Icosa12 { n, .. } => *n,
        }
    }

    pub fn sample(&self, seed: u64) -> Result<Vec<SpherePoint>, CliError> {
        let mut rng = rng_from_seed(seed);
        Ok(match self {
            Generator::Uniform { d, n } => sample_uniform(*d, *n, &mut rng)?,
            _ => self.mixture()?.sample(self.size(), &mut rng),
        })
    }
}

/// A cloud given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    File(PathBuf),
    Generated(Generator),
}

impl Input {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let kind = s.split(':').next().unwrap_or_default();
        if s.contains(':') && KINDS.contains(&kind) || KINDS.contains(&s) {
            Ok(Input::Generated(Generator::parse(s)?))
        } else {
            Ok(Input::File(PathBuf::from(s)))
        }
    }

    pub fn load(&self, seed: u64, weights: WeightColumn) -> Result<EmpiricalMeasure, CliError> {
        match self {
            Input::File(p) => Ok(read_cloud(p, weights)?),
            Input::Generated(g) => Ok(EmpiricalMeasure::uniform(&g.sample(seed)?)?),
        }
    }

    pub fn density(&self) -> Option<VmfMixture> {
        match self {
            Input::Generated(g) => g.mixture().ok(),
            Input::File(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(
            Generator::parse("vmf:mu=0,0,1:kappa=10:n=500").unwrap(),
            Generator::Vmf { mu: vec![0.0, 0.0, 1.0], kappa: 10.0, n: 500 }
        );
        assert_eq!(Generator::parse("uniform:d=3:n=7").unwrap(), Generator::Uniform { d: 3, n: 7 });
        assert_eq!(Generator::parse("icosa12").unwrap(), Generator::Icosa12 { kappa: 50.0, n: 2400 });
        for bad in ["vmf:kappa=-1", "uniform:n=0", "vmf:mu=0,0,0", "uniform:q=1", "vmf:kappa", "blob:n=3"] {
            assert!(Generator::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn inputs() {
        assert!(matches!(Input::parse("cloud.csv").unwrap(), Input::File(_)));
        assert!(matches!(Input::parse("icosa12").unwrap(), Input::Generated(_)));
        assert!(matches!(Input::parse("uniform:n=5").unwrap(), Input::Generated(_)));
        let g = Generator::parse("uniform:d=2:n=5").unwrap();
        assert_eq!(g.sample(3).unwrap(), g.sample(3).unwrap());
    }
}
