//! Run configuration and its `key = value` file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::aggregators::AggregatorKind;
use crate::error::{Error, Result};
use crate::evidence::{parse_structure, EvidenceMatrix, InformationStructure};

/// Posterior supports of random environments lie in `[floor, 1 - floor]`.
pub const DEFAULT_POSTERIOR_FLOOR: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 0.1;

/// How the evidence matrix of a random environment is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixChoice {
    /// Rejection-sampled Bernoulli(1/2) entries with `sigma_min >= sigma_floor`.
    Random { n: usize, m: usize, sigma_floor: f64 },
    Identity(usize),
    Given(EvidenceMatrix),
}

/// Where the rounds come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentSpec {
    Example1,
    /// One structure (fixed) or several sharing `n` (one drawn uniformly per round).
    Structures(Vec<InformationStructure>),
    /// Random signals over a chosen matrix; several priors make the
    /// environment switch between them uniformly per round.
    Random {
        matrix: MatrixChoice,
        outcomes: usize,
        priors: Vec<f64>,
        posterior_floor: f64,
    },
    /// Kernel-vector counterexample for a non-injective matrix.
    Proposition1 { evidence: EvidenceMatrix, scale: f64 },
    /// Prior flips between `high` and `1 - high`; every expert reports 1/2.
    PriorFlip { n: usize, high: f64 },
}

/// Everything that determines one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Seed for building random environments; defaults to `seed`.
    pub env_seed: Option<u64>,
    pub horizon: u64,
    pub environment: EnvironmentSpec,
    pub aggregator: AggregatorKind,
    /// Lower bound on `sigma_min(A)`; `None` fills in the true value
    /// (oracle information, flagged in the trace).
    pub sigma: Option<f64>,
    pub beta: f64,
    pub doubling: bool,
    /// Count oracle reads and fail the run if any happen inside the aggregator calls.
    pub audit: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(environment: EnvironmentSpec, aggregator: AggregatorKind, horizon: u64, seed: u64) -> Self {
        Self {
            seed,
            env_seed: None,
            horizon,
            environment,
            aggregator,
            sigma: None,
            beta: DEFAULT_BETA,
            doubling: false,
            audit: true,
            out: None,
        }
    }

    pub fn env_seed(&self) -> u64 {
        self.env_seed.unwrap_or(self.seed)
    }

    /// Canonical text used for hashing; independent of file layout.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "env_seed={}", self.env_seed());
        let _ = writeln!(s, "T={}", self.horizon);
        let _ = writeln!(s, "aggregator={}", self.aggregator);
        let _ = writeln!(s, "sigma={:?}", self.sigma);
        let _ = writeln!(s, "beta={:?}", self.beta);
        let _ = writeln!(s, "doubling={}", self.doubling);
        let _ = writeln!(s, "environment={:?}", self.environment);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses the `key = value` format. See the crate README for the keys.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let seed = kv.take_parsed("seed")?.unwrap_or(0);
        let env_seed = kv.take_parsed("env_seed")?;
        let horizon = match kv.take_parsed::<u64>("T")? {
            Some(t) => Some(t),
            None => kv.take_parsed("horizon")?,
        }
        .ok_or_else(|| Error::Config("missing `T`".into()))?;
        if horizon == 0 {
            return Err(Error::Config("`T` must be at least 1".into()));
        }
        let aggregator = kv
            .take("aggregator")
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(AggregatorKind::Dynamic);
        let sigma = match kv.take("sigma") {
            None => None,
            Some((_, v)) if v == "auto" => None,
            Some((line, v)) => Some(parse_value::<f64>(&v, line)?),
        };
        let beta = kv.take_parsed("beta")?.unwrap_or(DEFAULT_BETA);
        let doubling = kv.take_parsed("doubling")?.unwrap_or(false);
        let audit = kv.take_parsed("audit")?.unwrap_or(true);
        let out = kv.take("out").map(|(_, v)| base_dir.join(v));

        let kind = kv
            .take("environment")
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Config("missing `environment`".into()))?;
        let environment = match kind.as_str() {
            "example1" => EnvironmentSpec::Example1,
            "structure" => {
                let (line, files) = kv
                    .take("structure")
                    .ok_or_else(|| Error::Config("`environment = structure` needs `structure = <file>[, ...]`".into()))?;
                let structures = split_list(&files)
                    .map(|f| {
                        let p = base_dir.join(f);
                        parse_structure(&read(&p)?).map_err(|e| Error::Io {
                            path: p.display().to_string(),
                            msg: e.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if structures.is_empty() {
                    return Err(Error::Parse {
                        line,
                        msg: "empty structure list".into(),
                    });
                }
                EnvironmentSpec::Structures(structures)
            }
            "random" => {
                let matrix = match kv.take("matrix") {
                    Some((_, v)) if v == "identity" => {
                        MatrixChoice::Identity(kv.take_parsed("n")?.ok_or_else(|| Error::Config("missing `n`".into()))?)
                    }
                    Some((_, v)) if v == "random" => random_matrix(&mut kv)?,
                    None => random_matrix(&mut kv)?,
                    Some((_, v)) => MatrixChoice::Given(read_matrix(&base_dir.join(v))?),
                };
                let priors = match kv.take("prior") {
                    Some((line, v)) => parse_list::<f64>(&v, line)?,
                    None => vec![0.5],
                };
                EnvironmentSpec::Random {
                    matrix,
                    outcomes: kv.take_parsed("outcomes")?.unwrap_or(3),
                    priors,
                    posterior_floor: kv.take_parsed("posterior_floor")?.unwrap_or(DEFAULT_POSTERIOR_FLOOR),
                }
            }
            "prop1" => {
                let (_, v) = kv
                    .take("matrix")
                    .ok_or_else(|| Error::Config("`environment = prop1` needs `matrix = <file>`".into()))?;
                EnvironmentSpec::Proposition1 {
                    evidence: read_matrix(&base_dir.join(v))?,
                    scale: kv.take_parsed("kernel_scale")?.unwrap_or(1.0),
                }
            }
            "prior_flip" => EnvironmentSpec::PriorFlip {
                n: kv.take_parsed("n")?.unwrap_or(1),
                high: kv.take_parsed("flip_high")?.unwrap_or(0.9),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown environment `{other}` (example1|structure|random|prop1|prior_flip)"
                )))
            }
        };
        kv.finish()?;
        Ok(Self {
            seed,
            env_seed,
            horizon,
            environment,
            aggregator,
            sigma,
            beta,
            doubling,
            audit,
            out,
        })
    }
}

fn random_matrix(kv: &mut KeyValues) -> Result<MatrixChoice> {
    let n: usize = kv.take_parsed("n")?.ok_or_else(|| Error::Config("missing `n`".into()))?;
    Ok(MatrixChoice::Random {
        n,
        m: kv.take_parsed("m")?.unwrap_or(n),
        sigma_floor: kv.take_parsed("sigma_floor")?.unwrap_or(0.1),
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Reads an evidence matrix file (one row per line).
pub fn read_matrix(path: &Path) -> Result<EvidenceMatrix> {
    EvidenceMatrix::parse(&read(path)?).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_value<T: std::str::FromStr>(text: &str, line: usize) -> Result<T> {
    text.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{}`", text.trim()),
    })
}

/// Comma-separated values.
pub fn parse_list<T: std::str::FromStr>(text: &str, line: usize) -> Result<Vec<T>> {
    split_list(text).map(|s| parse_value(s, line)).collect()
}

/// Flat `key = value` lines with `#` comments. Every key must be consumed.
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: "expected `key = value`".into(),
            })?;
            let key = k.trim().to_string();
            if entries.insert(key.clone(), (line, v.trim().to_string())).is_some() {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    pub fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key).map(|(line, v)| parse_value(&v, line)).transpose()
    }

    /// Errors on the first unrecognized key.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::Parse {
                line,
                msg: format!("unknown or unused key `{key}`"),
            }),
        }
    }
}
