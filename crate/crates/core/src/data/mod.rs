//! Dataset handling: IDX ingestion, client partitioning, backdoor poisoning
//! and synthetic data generation.

mod idx;
mod poison;
mod synthetic;

pub use idx::{load_idx, write_idx};
pub use poison::{apply_trigger, poison_client, replicate, PoisonSpec};
pub use synthetic::make_synthetic;

use std::path::PathBuf;

use crate::seed;
use crate::tensor::{Shape3, Tensor3};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad IDX magic {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: truncated IDX file, needed {needed} bytes but found {found}")]
    Truncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },
    #[error("{path}: {extra} trailing bytes after IDX payload")]
    TrailingBytes { path: PathBuf, extra: usize },
    #[error("image/label example counts differ: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("cannot split {examples} examples across {clients} clients")]
    PartitionTooFine { examples: usize, clients: usize },
    #[error("trigger block {size}x{size} at ({row},{col}) exceeds image {height}x{width}")]
    TriggerOutOfBounds {
        size: usize,
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
}

/// Images in [0,1] with integer class labels.
///
/// `reported_example_count` is the example count a client announces to the
/// aggregator; it equals the stored length for benign data and is inflated by
/// the attack scale factor for poisoned data.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<Tensor3<f32>>,
    pub labels: Vec<usize>,
    pub reported_example_count: usize,
    pub num_classes: usize,
}

impl LabeledDataset {
    /// A benign dataset: the reported count equals the stored length.
    pub fn new(
        images: Vec<Tensor3<f32>>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        let reported = images.len();
        Self::with_reported_count(images, labels, num_classes, reported)
    }

    pub fn with_reported_count(
        images: Vec<Tensor3<f32>>,
        labels: Vec<usize>,
        num_classes: usize,
        reported_example_count: usize,
    ) -> Result<Self, DataError> {
        if images.len() != labels.len() {
            return Err(DataError::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            });
        }
        if reported_example_count < images.len() {
            return Err(DataError::InvalidDataset(format!(
                "reported count {reported_example_count} below stored length {}",
                images.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::InvalidDataset(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if let Some(shape) = images.first().map(Tensor3::shape) {
            if images.iter().any(|img| img.shape() != shape) {
                return Err(DataError::InvalidDataset(
                    "images have mixed shapes".into(),
                ));
            }
        }
        Ok(Self {
            images,
            labels,
            reported_example_count,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image_shape(&self) -> Option<Shape3> {
        self.images.first().map(Tensor3::shape)
    }

    /// True when every pixel lies in [0,1].
    pub fn pixels_in_unit_range(&self) -> bool {
        self.images
            .iter()
            .all(|img| img.as_slice().iter().all(|&p| (0.0..=1.0).contains(&p)))
    }

    /// The first `limit` examples of a seeded permutation (all examples when
    /// `limit` is 0 or exceeds the length). Used to downscale experiments.
    pub fn subsample(&self, limit: usize, seed_value: u64) -> LabeledDataset {
        if limit == 0 || limit >= self.len() {
            return self.clone();
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = seed::stream_rng(seed_value, &[]);
        seed::fisher_yates(&mut order, &mut rng);
        order.truncate(limit);
        let images = order.iter().map(|&i| self.images[i].clone()).collect();
        let labels = order.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(images, labels, self.num_classes)
            .expect("subsample preserves validity")
    }
}

/// Splits `data` into `clients` disjoint near-equal shares.
///
/// A seeded permutation is cut into contiguous chunks whose sizes differ by
/// at most one; the union of the outputs is exactly the input multiset.
pub fn partition_random(
    data: &LabeledDataset,
    clients: usize,
    seed_value: u64,
) -> Result<Vec<LabeledDataset>, DataError> {
    if clients == 0 || data.len() < clients {
        return Err(DataError::PartitionTooFine {
            examples: data.len(),
            clients,
        });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seed::stream_rng(seed_value, &[]);
    seed::fisher_yates(&mut order, &mut rng);

    let base = data.len() / clients;
    let extra = data.len() % clients;
    let mut shares = Vec::with_capacity(clients);
    let mut offset = 0usize;
    for k in 0..clients {
        let size = base + usize::from(k < extra);
        let slice = &order[offset..offset + size];
        offset += size;
        let images = slice.iter().map(|&i| data.images[i].clone()).collect();
        let labels = slice.iter().map(|&i| data.labels[i]).collect();
        shares.push(LabeledDataset::new(images, labels, data.num_classes)?);
    }
    Ok(shares)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset(n: usize) -> LabeledDataset {
        let images = (0..n)
            .map(|i| Tensor3::from_vec((1, 1, 2), vec![i as f32 / n as f32, 0.5]))
            .collect();
        let labels = (0..n).map(|i| i % 3).collect();
        LabeledDataset::new(images, labels, 3).unwrap()
    }

    #[test]
    fn partition_sizes_differ_by_at_most_one() {
        let data = tiny_dataset(23);
        let shares = partition_random(&data, 5, 9).unwrap();
        let sizes: Vec<usize> = shares.iter().map(LabeledDataset::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        let min = *sizes.iter().min().unwrap();
        let max = *sizes.iter().max().unwrap();
        assert!(max - min <= 1, "sizes {sizes:?}");
        for share in &shares {
            assert_eq!(share.reported_example_count, share.len());
        }
    }

    #[test]
    fn partition_of_one_is_a_permutation() {
        let data = tiny_dataset(10);
        let shares = partition_random(&data, 1, 4).unwrap();
        assert_eq!(shares.len(), 1);
        let mut got: Vec<usize> = shares[0].labels.clone();
        let mut want = data.labels.clone();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want);
        assert_eq!(shares[0].len(), data.len());
    }

    #[test]
    fn partition_rejects_too_many_clients() {
        let data = tiny_dataset(4);
        assert!(matches!(
            partition_random(&data, 5, 0),
            Err(DataError::PartitionTooFine { .. })
        ));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let images = vec![Tensor3::from_vec((1, 1, 1), vec![0.0])];
        let err = LabeledDataset::new(images, vec![], 2).unwrap_err();
        assert!(matches!(err, DataError::CountMismatch { .. }));
    }

    #[test]
    fn out_of_range_label_rejected() {
        let images = vec![Tensor3::from_vec((1, 1, 1), vec![0.0])];
        let err = LabeledDataset::new(images, vec![7], 3).unwrap_err();
        assert!(matches!(err, DataError::InvalidDataset(_)));
    }

    #[test]
    fn subsample_is_deterministic_prefix() {
        let data = tiny_dataset(20);
        let a = data.subsample(8, 3);
        let b = data.subsample(8, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert_eq!(data.subsample(0, 3), data);
        assert_eq!(data.subsample(50, 3), data);
    }
}
