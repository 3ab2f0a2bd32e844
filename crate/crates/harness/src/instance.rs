//! Problem instances: generation from parameters or loading from a dataset
//! container, and the oracle that certifies their optimum.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rvr::manifold::ManifoldPoint;
use rvr::optimizers::sampling::{self, tag};
use rvr::problems::{
    gen_lrmc, gen_pca, gen_spd, test_mse, Dataset, LrmcDataset, LrmcParams, LrmcProblem, PcaProblem, RkmProblem,
    StochasticProblem,
};

use crate::error::{HarnessError, Result};
use crate::oracle::{oracle_lrmc, oracle_pca, oracle_rkm, OracleResult, RichardsonOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Pca,
    Lrmc,
    Spd,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Pca => "pca",
            ProblemKind::Lrmc => "lrmc",
            ProblemKind::Spd => "spd",
        }
    }
}

/// Generator parameters. Unset fields take the per-kind defaults of
/// [`GenParams::resolved`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    /// Number of samples (PCA, SPD) or matrix columns (LRMC).
    #[arg(long)]
    pub n: Option<usize>,
    /// Ambient dimension (PCA, SPD) or matrix rows (LRMC).
    #[arg(long)]
    pub d: Option<usize>,
    /// Target rank (PCA, LRMC).
    #[arg(long)]
    pub r: Option<usize>,
    /// Condition number (LRMC singular values, SPD eigenvalues).
    #[arg(long)]
    pub cn: Option<f64>,
    /// Oversampling ratio (LRMC).
    #[arg(long)]
    pub os: Option<f64>,
    /// Noise level (LRMC).
    #[arg(long)]
    pub eps: Option<f64>,
}

impl GenParams {
    /// Fill unset fields: PCA `(n, d, r) = (10⁴, 50, 5)`; LRMC
    /// `(n, d, r, cn, os, ε) = (2·10⁴, 100, 5, 50, 8, 10⁻¹⁰)`; SPD
    /// `(n, d, cn) = (5000, 10, 20)`.
    pub fn resolved(&self, kind: ProblemKind) -> GenParams {
        let (n, d, r, cn, os, eps) = match kind {
            ProblemKind::Pca => (10_000, 50, 5, 1.0, 1.0, 0.0),
            ProblemKind::Lrmc => {
                let p = LrmcParams::default();
                (p.n, p.d, p.r, p.cn, p.os, p.eps)
            }
            ProblemKind::Spd => (5000, 10, 1, 20.0, 1.0, 0.0),
        };
        GenParams {
            n: Some(self.n.unwrap_or(n)),
            d: Some(self.d.unwrap_or(d)),
            r: Some(self.r.unwrap_or(r)),
            cn: Some(self.cn.unwrap_or(cn)),
            os: Some(self.os.unwrap_or(os)),
            eps: Some(self.eps.unwrap_or(eps)),
        }
    }
}

/// Generate a dataset from the `DATASET` stream of `seed`.
pub fn generate(kind: ProblemKind, params: &GenParams, seed: u64) -> Result<Dataset> {
    let p = params.resolved(kind);
    let (n, d, r) = (p.n.unwrap(), p.d.unwrap(), p.r.unwrap());
    let mut rng = sampling::stream(seed, tag::DATASET, 0, 0);
    // Generator shape errors come from user parameters.
    let params_error = |e: rvr::error::Error| match e {
        rvr::error::Error::Shape { .. } => HarnessError::Config(format!("{} generator: {e}", kind.name())),
        e => e.into(),
    };
    let data = match kind {
        ProblemKind::Pca => gen_pca(n, d, r, &mut rng).map(Dataset::Pca),
        ProblemKind::Lrmc => {
            let lp = LrmcParams { n, d, r, cn: p.cn.unwrap(), os: p.os.unwrap(), eps: p.eps.unwrap() };
            gen_lrmc(lp, &mut rng).map(Dataset::Lrmc)
        }
        ProblemKind::Spd => gen_spd(n, d, p.cn.unwrap(), &mut rng).map(Dataset::Spd),
    };
    data.map_err(params_error)
}

pub fn kind_of(data: &Dataset) -> ProblemKind {
    match data {
        Dataset::Pca(_) => ProblemKind::Pca,
        Dataset::Lrmc(_) => ProblemKind::Lrmc,
        Dataset::Spd(_) => ProblemKind::Spd,
    }
}

/// A ready-to-optimise problem together with the data it was built from.
pub enum Instance {
    Pca(PcaProblem),
    Lrmc { problem: LrmcProblem, data: LrmcDataset },
    Rkm(RkmProblem),
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Instance({}, n = {})", self.kind().name(), self.problem().n())
    }
}

impl Instance {
    pub fn from_dataset(data: Dataset) -> Result<Self> {
        Ok(match data {
            Dataset::Pca(d) => Instance::Pca(PcaProblem::new(d)?),
            Dataset::Lrmc(d) => Instance::Lrmc { problem: LrmcProblem::new(&d)?, data: d },
            Dataset::Spd(d) => Instance::Rkm(RkmProblem::new(d)?),
        })
    }

    /// Load `path` if given (its kind must match), otherwise generate.
    pub fn build(kind: ProblemKind, path: Option<&Path>, params: &GenParams, seed: u64) -> Result<Self> {
        let data = match path {
            Some(p) => {
                let data = Dataset::load(p)?;
                if kind_of(&data) != kind {
                    return Err(HarnessError::Config(format!(
                        "{} holds a {} dataset, expected {}",
                        p.display(),
                        kind_of(&data).name(),
                        kind.name()
                    )));
                }
                data
            }
            None => generate(kind, params, seed)?,
        };
        Self::from_dataset(data)
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Pca(_) => ProblemKind::Pca,
            Instance::Lrmc { .. } => ProblemKind::Lrmc,
            Instance::Rkm(_) => ProblemKind::Spd,
        }
    }

    pub fn problem(&self) -> &dyn StochasticProblem {
        match self {
            Instance::Pca(p) => p,
            Instance::Lrmc { problem, .. } => problem,
            Instance::Rkm(p) => p,
        }
    }

    /// The default oracle: eigendecomposition (PCA), Richardson iteration
    /// (SPD), generator ground truth (LRMC).
    pub fn oracle(&self) -> Result<OracleResult> {
        match self {
            Instance::Pca(p) => oracle_pca(&p.dataset()),
            Instance::Lrmc { data, .. } => oracle_lrmc(data),
            Instance::Rkm(p) => oracle_rkm(p.matrices(), &RichardsonOptions::default()),
        }
    }

    /// Held-out test MSE (LRMC only).
    pub fn test_metric(&self, x: &ManifoldPoint) -> Option<rvr::error::Result<f64>> {
        match self {
            Instance::Lrmc { data, .. } if !data.test.is_empty() => Some(test_mse(data, x)),
            _ => None,
        }
    }
}
