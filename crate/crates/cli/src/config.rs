//! Run configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! # one dataset source
//! dataset.idx.train_images = train-images-idx3-ubyte
//! dataset.idx.train_labels = train-labels-idx1-ubyte
//! dataset.idx.test_images = t10k-images-idx3-ubyte
//! dataset.idx.test_labels = t10k-labels-idx1-ubyte
//! model = smokecnn
//! activation = sgelu
//! train.epochs = 3
//! output_dir = runs/sgelu
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use satact::data::{load_cifar, load_idx, synthetic_blobs, CifarVariant, Dataset};
use satact::nn::{Model, TrainConfig};
use satact::ActivationSpec;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Cifar {
        variant: CifarVariant,
        dir: PathBuf,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Synthetic {
        seed: u64,
        n_per_class: usize,
        test_per_class: usize,
        dims: usize,
        classes: usize,
        separation: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    SmokeCnn,
    Mlp(Vec<usize>),
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    /// Keep only the first `n` training samples.
    pub train_subset: Option<usize>,
    pub test_subset: Option<usize>,
    /// Per-channel standardisation with training-split statistics.
    pub normalize: bool,
    /// Overrides the class count inferred from the data.
    pub classes: Option<usize>,
    pub model: ModelKind,
    /// Weight-initialisation seed; defaults to `train.seed`.
    pub model_seed: Option<u64>,
    pub activation: ActivationSpec,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Keys {
    map: BTreeMap<String, String>,
    base: PathBuf,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| usage(format!("{key} = {v}: {e}")))
            })
            .transpose()
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        self.take(key).map(|v| self.base.join(v))
    }

    fn require_path(&mut self, key: &str) -> CliResult<PathBuf> {
        self.path(key).ok_or_else(|| usage(format!("missing key {key}")))
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.map.keys().any(|k| k == prefix || k.starts_with(&format!("{prefix}.")))
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| usage(format!("{key} = {v}: {e}"))))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim().to_string();
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(usage(format!("line {}: duplicate key {k}", n + 1)));
            }
        }
        let mut keys = Keys {
            map,
            base: base.to_path_buf(),
        };

        let sources = ["dataset.cifar10", "dataset.cifar100", "dataset.idx", "dataset.synthetic"]
            .into_iter()
            .filter(|p| keys.has_prefix(p))
            .collect::<Vec<_>>();
        let dataset = match sources[..] {
            ["dataset.cifar10"] => DatasetSource::Cifar {
                variant: CifarVariant::Cifar10,
                dir: keys.require_path("dataset.cifar10")?,
            },
            ["dataset.cifar100"] => DatasetSource::Cifar {
                variant: CifarVariant::Cifar100,
                dir: keys.require_path("dataset.cifar100")?,
            },
            ["dataset.idx"] => DatasetSource::Idx {
                train_images: keys.require_path("dataset.idx.train_images")?,
                train_labels: keys.require_path("dataset.idx.train_labels")?,
                test_images: keys.require_path("dataset.idx.test_images")?,
                test_labels: keys.require_path("dataset.idx.test_labels")?,
            },
            ["dataset.synthetic"] => {
                keys.take("dataset.synthetic");
                let n_per_class = keys.parse("dataset.synthetic.n_per_class")?.unwrap_or(100);
                DatasetSource::Synthetic {
                    seed: keys.parse("dataset.synthetic.seed")?.unwrap_or(0),
                    n_per_class,
                    test_per_class: keys
                        .parse("dataset.synthetic.test_per_class")?
                        .unwrap_or((n_per_class / 4).max(1)),
                    dims: keys.parse("dataset.synthetic.dims")?.unwrap_or(2),
                    classes: keys.parse("dataset.synthetic.classes")?.unwrap_or(2),
                    separation: keys.parse("dataset.synthetic.separation")?.unwrap_or(10.0),
                }
            }
            [] => return Err(usage("no dataset source: set one of dataset.cifar10, dataset.cifar100, dataset.idx.*, dataset.synthetic.*")),
            _ => return Err(usage(format!("exactly one dataset source allowed, found {}", sources.join(", ")))),
        };

        let model = match keys.take("model").as_deref() {
            None | Some("smokecnn") => ModelKind::SmokeCnn,
            Some("logistic") => ModelKind::Logistic,
            Some("mlp") => {
                let hidden = keys.take("model.hidden").unwrap_or_else(|| "128".into());
                ModelKind::Mlp(parse_list("model.hidden", &hidden)?)
            }
            Some(other) => {
                return Err(usage(format!(
                    "model = {other}: expected smokecnn, mlp or logistic"
                )))
            }
        };
        if !matches!(model, ModelKind::Mlp(_)) && keys.has_prefix("model.hidden") {
            return Err(usage("model.hidden only applies to model = mlp"));
        }

        let name = keys.take("activation").unwrap_or_else(|| "relu".into());
        let mut activation: ActivationSpec = name.parse().map_err(|e: satact::Error| usage(e.to_string()))?;
        if let Some(beta) = keys.parse("activation.beta")? {
            activation = activation.with_beta(beta).map_err(|e| usage(e.to_string()))?;
        }
        if let Some(slope) = keys.parse("activation.negative_slope")? {
            activation = activation
                .with_negative_slope(slope)
                .map_err(|e| usage(e.to_string()))?;
        }

        let d = TrainConfig::default();
        let train = TrainConfig {
            lr0: keys.parse("train.lr0")?.unwrap_or(d.lr0),
            lr_divisor: keys.parse("train.lr_divisor")?.unwrap_or(d.lr_divisor),
            milestones: match keys.take("train.milestones") {
                Some(v) => parse_list("train.milestones", &v)?,
                None => d.milestones,
            },
            momentum: keys.parse("train.momentum")?.unwrap_or(d.momentum),
            weight_decay: keys.parse("train.weight_decay")?.unwrap_or(d.weight_decay),
            epochs: keys.parse("train.epochs")?.unwrap_or(d.epochs),
            batch_size: keys.parse("train.batch_size")?.unwrap_or(d.batch_size),
            seed: keys.parse("train.seed")?.unwrap_or(d.seed),
        };
        train.validate().map_err(|e| usage(e.to_string()))?;

        let config = RunConfig {
            dataset,
            train_subset: keys.parse("dataset.train_subset")?,
            test_subset: keys.parse("dataset.test_subset")?,
            normalize: keys.parse("dataset.normalize")?.unwrap_or(true),
            classes: keys.parse("dataset.classes")?,
            model,
            model_seed: keys.parse("model.seed")?,
            activation,
            train,
            output_dir: keys.path("output_dir").unwrap_or_else(|| base.join("out")),
        };
        if let Some(k) = keys.map.keys().next() {
            return Err(usage(format!("unknown key {k}")));
        }
        Ok(config)
    }

    /// Train and test splits, subset and normalized as configured.
    pub fn load_datasets(&self) -> CliResult<(Dataset, Dataset)> {
        let (mut train, mut test) = match &self.dataset {
            DatasetSource::Cifar { variant, dir } => load_cifar(dir, *variant)?,
            DatasetSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => (
                load_idx(train_images, train_labels)?,
                load_idx(test_images, test_labels)?,
            ),
            &DatasetSource::Synthetic {
                seed,
                n_per_class,
                test_per_class,
                dims,
                classes,
                separation,
            } => (
                synthetic_blobs(seed, n_per_class, dims, classes, separation)?,
                synthetic_blobs(seed.wrapping_add(1), test_per_class, dims, classes, separation)?,
            ),
        };
        if let Some(n) = self.train_subset {
            train = train.split_at(n).0;
        }
        if let Some(n) = self.test_subset {
            test = test.split_at(n).0;
        }
        let classes = self
            .classes
            .unwrap_or(train.num_classes().max(test.num_classes()));
        train = train.with_num_classes(classes)?;
        test = test.with_num_classes(classes)?;
        if self.normalize {
            let stats = train.channel_stats();
            train = train.apply_normalization(&stats)?;
            test = test.apply_normalization(&stats)?;
        }
        Ok((train, test))
    }

    pub fn build_model(&self, train: &Dataset) -> CliResult<Model<f32>> {
        let shape = train.sample_shape().to_vec();
        let classes = train.num_classes();
        let seed = self.model_seed.unwrap_or(self.train.seed);
        let model = match &self.model {
            ModelKind::SmokeCnn => {
                Model::smoke_cnn(shape[0], shape[1], shape[2], classes, self.activation, seed)
            }
            ModelKind::Mlp(hidden) => Model::mlp(shape, hidden, classes, self.activation, seed),
            ModelKind::Logistic => Model::logistic(shape, classes, seed),
        };
        Ok(model?)
    }
}
