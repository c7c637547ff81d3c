use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::baselines::{
    HoeffdingTree, HoeffdingTreeConfig, LeafPrediction, SoftTree, SoftTreeConfig, HT_LIMIT_INTERNAL_NODES,
};
use crate::error::{Error, Result};
use crate::eval::{ht_grid, sohot_grid, st_grid, Classifier, ModelPool, PrequentialConfig, HYPERPLANE_GAMMAS, SOHOT_GAMMAS};
use crate::scalar::Scalar;
use crate::sohot::{SoHoTree, SoHoTreeConfig};
use crate::streams::{DataStream, DriftKind, DriftSchedule, GeneratorKind, LabelColumn, StreamSpec, SEA_THRESHOLDS};

use super::settings::{List, Resolver, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    SoHoT,
    Ht,
    HtLimit,
    St,
    /// Pool over the SoHoT grid.
    Pool,
    PoolHt,
    PoolSt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        Self::SoHoT,
        Self::Ht,
        Self::HtLimit,
        Self::St,
        Self::Pool,
        Self::PoolHt,
        Self::PoolSt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SoHoT => "sohot",
            Self::Ht => "ht",
            Self::HtLimit => "ht-limit",
            Self::St => "st",
            Self::Pool => "pool",
            Self::PoolHt => "pool-ht",
            Self::PoolSt => "pool-st",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model (sohot|ht|ht-limit|st|pool|pool-ht|pool-st)"))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Self::F32),
            "f64" => Ok(Self::F64),
            _ => Err("expected f32 or f64".into()),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::F32 => "f32",
            Self::F64 => "f64",
        })
    }
}

/// `mc` or `nba` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LeafMode(LeafPrediction);

impl FromStr for LeafMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mc" => Ok(Self(LeafPrediction::MajorityClass)),
            "nba" => Ok(Self(LeafPrediction::NaiveBayesAdaptive)),
            _ => Err("expected mc or nba".into()),
        }
    }
}

impl fmt::Display for LeafMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            LeafPrediction::MajorityClass => "mc",
            LeafPrediction::NaiveBayesAdaptive => "nba",
        })
    }
}

/// Fully resolved settings of one model on one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub precision: Precision,
    pub sohot: SoHoTreeConfig<f64>,
    pub soft: SoftTreeConfig<f64>,
    pub hoeffding: HoeffdingTreeConfig,
    pub stream: StreamSpec,
    pub prequential: PrequentialConfig,
    pub out: PathBuf,
    pub dump_tree: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Every resolved key, defaults included.
    pub echo: BTreeMap<String, String>,
}

fn range_check(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, what))
    }
}

fn resolve_stream(r: &mut Resolver, n_instances: u64) -> Result<StreamSpec> {
    let csv: Option<PathBuf> = r.opt::<String>("csv")?.map(PathBuf::from);
    let default_stream = if csv.is_some() { "csv" } else { "sea" };
    let stream: String = r.get("stream", default_stream.to_owned())?;
    let generator = match stream.as_str() {
        "sea" => {
            let noise = r.get("sea-noise", 0.0)?;
            range_check("sea-noise", (0.0..=1.0).contains(&noise), "must lie in [0, 1]")?;
            GeneratorKind::Sea {
                thresholds: SEA_THRESHOLDS.to_vec(),
                noise,
            }
        }
        "agrawal" => {
            let functions: List<u8> = r.get("agrawal-functions", List((1..=10).collect()))?;
            GeneratorKind::Agrawal {
                functions: functions.0,
                noise: r.get("agrawal-noise", 0.0)?,
            }
        }
        "hyperplane" => {
            let n_features = r.get("hyperplane-features", 10usize)?;
            GeneratorKind::Hyperplane {
                n_features,
                n_drift_features: n_features,
                magnitude: r.get("hyperplane-magnitude", 0.001)?,
                flip_probability: 0.1,
                noise: r.get("hyperplane-noise", 0.05)?,
            }
        }
        "rbf" => GeneratorKind::Rbf {
            n_centroids: r.get("rbf-centroids", 50usize)?,
            n_classes: r.get("rbf-classes", 5usize)?,
            n_features: r.get("rbf-features", 10usize)?,
            speed: r.get("rbf-speed", 0.001)?,
        },
        "csv" => {
            let path = csv.ok_or_else(|| Error::config("csv", "`--stream csv` needs a file path"))?;
            GeneratorKind::Csv {
                path,
                label_column: r.get("label-column", LabelColumn::Last)?,
                shuffle: !r.flag("no-shuffle")?,
            }
        }
        other => {
            return Err(Error::config(
                "stream",
                format!("unknown stream `{other}` (sea|agrawal|hyperplane|rbf|csv)"),
            ))
        }
    };
    let positions: List<u64> = r.get("drift-at", List(Vec::new()))?;
    let default_kind = if positions.0.is_empty() {
        DriftKind::None
    } else {
        DriftKind::Abrupt
    };
    let drift = DriftSchedule {
        kind: r.get("drift-kind", default_kind)?,
        positions: positions.0,
        width: r.count("drift-width", 1000)?,
        magnitude: r.get("drift-magnitude", 0.1)?,
    };
    let spec = StreamSpec {
        generator,
        n_instances,
        drift,
        seed: 0,
    };
    spec.validate()?;
    Ok(spec)
}

impl RunConfig {
    pub fn resolve(settings: &Settings) -> Result<Self> {
        let mut r = Resolver::new(settings);
        let model: ModelKind = r.get("model", ModelKind::SoHoT)?;
        let precision = r.get("precision", Precision::F64)?;
        let seed = r.count("seed", 0)?;
        let n_instances = r.count("instances", 100_000)?;
        let reps = r.count("reps", 5)?;
        let prequential = PrequentialConfig {
            n_instances,
            window: r.count("window", 1000)?,
            repetitions: usize::try_from(reps).map_err(|_| Error::config("reps", "too large"))?,
            base_seed: seed,
            track_transparency: r.get("track-transparency", true)?,
        };
        prequential.validate()?;

        let alpha = r.get("alpha", 0.3)?;
        let gamma = r.get("gamma", 1.0)?;
        let max_depth = r.count("max-depth", 7)? as usize;
        let delta = r.get("delta", 1e-7)?;
        let tau = r.get("tau", 0.05)?;
        let grace_period = r.count("grace", 200)?;
        let learning_rate = r.get("learning-rate", 1e-2)?;
        let normalize = r.get("normalize", true)?;
        let normalizer_momentum = r.get("normalizer-momentum", 0.99)?;
        let sohot = SoHoTreeConfig {
            alpha,
            gamma,
            max_depth,
            delta,
            tau,
            epsilon_s: r.get("epsilon-s", 0.25)?,
            grace_period,
            learning_rate,
            normalize,
            normalizer_momentum,
            split_weight_init: r.get("split-weight-init", 0.01)?,
            seed,
        };
        let soft = SoftTreeConfig {
            depth: max_depth,
            gamma,
            learning_rate,
            normalize,
            normalizer_momentum,
            ..SoftTreeConfig::default()
        };
        let leaf: LeafMode = r.get("leaf-prediction", LeafMode(LeafPrediction::NaiveBayesAdaptive))?;
        // the cap of ht-limit is implied by the model name, so it is only
        // echoed when given explicitly
        let node_limit = match r.opt::<usize>("node-limit")? {
            Some(n) => Some(n),
            None if model == ModelKind::HtLimit => Some(HT_LIMIT_INTERNAL_NODES),
            None => None,
        };
        range_check("node-limit", node_limit != Some(0), "must be at least 1")?;
        let hoeffding = HoeffdingTreeConfig {
            leaf_prediction: leaf.0,
            delta,
            tau,
            grace_period,
            node_limit,
        };
        range_check("delta", delta > 0.0 && delta < 1.0, "must lie in (0, 1)")?;
        range_check("grace", grace_period > 0, "must be at least 1")?;
        match model {
            ModelKind::St | ModelKind::PoolSt => {
                range_check("max-depth", max_depth >= 1, "soft tree depth must be at least 1")?;
                range_check("gamma", gamma > 0.0, "must be positive")?;
                range_check("learning-rate", learning_rate > 0.0, "must be positive")?;
            }
            ModelKind::SoHoT | ModelKind::Pool => sohot.validate()?,
            _ => {}
        }

        let stream = resolve_stream(&mut r, n_instances)?;
        let out = PathBuf::from(r.get("out", "report.csv".to_owned())?);
        let dump_tree = r.opt::<String>("dump-tree")?.map(PathBuf::from);
        let plot = r.opt::<String>("plot")?.map(PathBuf::from);
        Ok(Self {
            model,
            precision,
            sohot,
            soft,
            hoeffding,
            stream,
            prequential,
            out,
            dump_tree,
            plot,
            echo: r.into_echo(),
        })
    }

    /// The stream of repetition seed `seed`.
    pub fn build_stream(&self, seed: u64) -> Result<Box<dyn DataStream>> {
        self.stream.clone().with_seed(seed).build()
    }

    pub fn build_model(&self, seed: u64, p: usize, k: usize) -> Result<Box<dyn Classifier>> {
        match self.precision {
            Precision::F64 => self.build_typed::<f64>(seed, p, k),
            Precision::F32 => self.build_typed::<f32>(seed, p, k),
        }
    }

    fn sohot_gammas(&self) -> &'static [f64] {
        match self.stream.generator {
            GeneratorKind::Hyperplane { .. } => &HYPERPLANE_GAMMAS,
            _ => &SOHOT_GAMMAS,
        }
    }

    fn build_typed<F: Scalar>(&self, seed: u64, p: usize, k: usize) -> Result<Box<dyn Classifier>> {
        let sohot = SoHoTreeConfig {
            seed,
            ..self.sohot.cast::<F>()
        };
        let soft = SoftTreeConfig {
            seed,
            ..self.soft.cast::<F>()
        };
        let member_seed = |i: usize| seed.wrapping_add(i as u64);
        Ok(match self.model {
            ModelKind::SoHoT => Box::new(SoHoTree::new(p, k, sohot)?),
            ModelKind::St => Box::new(SoftTree::new(p, k, soft)?),
            ModelKind::Ht | ModelKind::HtLimit => Box::new(HoeffdingTree::<F>::new(p, k, self.hoeffding.clone())?),
            ModelKind::Pool => {
                let members = sohot_grid(&sohot, self.sohot_gammas())
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| SoHoTree::new(p, k, SoHoTreeConfig { seed: member_seed(i), ..c }))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(ModelPool::new(members)?)
            }
            ModelKind::PoolHt => {
                let members = ht_grid(&self.hoeffding)
                    .into_iter()
                    .map(|c| HoeffdingTree::<F>::new(p, k, c))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(ModelPool::new(members)?)
            }
            ModelKind::PoolSt => {
                let members = st_grid(&soft)
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| SoftTree::new(p, k, SoftTreeConfig { seed: member_seed(i), ..c }))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(ModelPool::new(members)?)
            }
        })
    }
}
