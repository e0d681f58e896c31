//! Dataset containers, CIFAR/IDX readers, normalization and batching.

mod cifar;
mod dataset;
mod idx;
mod synthetic;

pub use cifar::{
    encode_cifar_records, load_cifar, parse_cifar_file, parse_cifar_records, CifarVariant,
};
pub use dataset::{batches, epoch_order, Batch, Batches, Dataset};
pub use idx::{load_idx, write_idx};
pub use synthetic::synthetic_blobs;
