//! Big-endian IDX container parsing and writing (the MNIST file format).

use std::fs;
use std::path::{Path, PathBuf};

use crate::tensor::Tensor3;

use super::{DataError, LabeledDataset};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn read_u32(&mut self) -> Result<u32, DataError> {
        let end = self.pos + 4;
        if end > self.bytes.len() {
            return Err(DataError::Truncated {
                path: self.path.to_path_buf(),
                needed: end,
                found: self.bytes.len(),
            });
        }
        let value = u32::from_be_bytes(self.bytes[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(value)
    }

    fn read_payload(&mut self, len: usize) -> Result<&'a [u8], DataError> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(DataError::Truncated {
                path: self.path.to_path_buf(),
                needed: end,
                found: self.bytes.len(),
            });
        }
        if self.bytes.len() > end {
            return Err(DataError::TrailingBytes {
                path: self.path.to_path_buf(),
                extra: self.bytes.len() - end,
            });
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads an image/label IDX file pair into a dataset.
///
/// The image file must carry magic `0x00000803` with dimensions
/// `[n, rows, cols]`, the label file magic `0x00000801` with `[n]`; pixel
/// bytes 0..=255 are scaled to [0,1]. The two example counts must agree.
pub fn load_idx(images_file: &Path, labels_file: &Path) -> Result<LabeledDataset, DataError> {
    let image_bytes = read_file(images_file)?;
    let mut cur = Cursor {
        bytes: &image_bytes,
        pos: 0,
        path: images_file,
    };
    let magic = cur.read_u32()?;
    if magic != IMAGE_MAGIC {
        return Err(DataError::BadMagic {
            path: images_file.to_path_buf(),
            found: magic,
            expected: IMAGE_MAGIC,
        });
    }
    let count = cur.read_u32()? as usize;
    let rows = cur.read_u32()? as usize;
    let cols = cur.read_u32()? as usize;
    let pixels = cur.read_payload(count * rows * cols)?;

    let label_bytes = read_file(labels_file)?;
    let mut cur = Cursor {
        bytes: &label_bytes,
        pos: 0,
        path: labels_file,
    };
    let magic = cur.read_u32()?;
    if magic != LABEL_MAGIC {
        return Err(DataError::BadMagic {
            path: labels_file.to_path_buf(),
            found: magic,
            expected: LABEL_MAGIC,
        });
    }
    let label_count = cur.read_u32()? as usize;
    let raw_labels = cur.read_payload(label_count)?;

    if count != label_count {
        return Err(DataError::CountMismatch {
            images: count,
            labels: label_count,
        });
    }

    let images = pixels
        .chunks_exact(rows * cols)
        .map(|chunk| {
            Tensor3::from_vec(
                (1, rows, cols),
                chunk.iter().map(|&b| b as f32 / 255.0).collect(),
            )
        })
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let num_classes = labels.iter().copied().max().map_or(1, |m| m + 1).max(10);

    LabeledDataset::new(images, labels, num_classes)
}

/// Writes a dataset as an IDX image/label file pair (inverse of `load_idx`).
///
/// Pixels are quantized to bytes by rounding `pixel * 255`.
pub fn write_idx(
    data: &LabeledDataset,
    images_file: &Path,
    labels_file: &Path,
) -> Result<(), DataError> {
    let (channels, rows, cols) = data
        .image_shape()
        .ok_or_else(|| DataError::InvalidDataset("cannot write an empty dataset".into()))?;
    if channels != 1 {
        return Err(DataError::InvalidDataset(
            "IDX image files hold single-channel images".into(),
        ));
    }

    let mut image_bytes = Vec::with_capacity(16 + data.len() * rows * cols);
    image_bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    image_bytes.extend_from_slice(&(data.len() as u32).to_be_bytes());
    image_bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    image_bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for image in &data.images {
        image_bytes.extend(
            image
                .as_slice()
                .iter()
                .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8),
        );
    }

    let mut label_bytes = Vec::with_capacity(8 + data.len());
    label_bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    label_bytes.extend_from_slice(&(data.len() as u32).to_be_bytes());
    label_bytes.extend(data.labels.iter().map(|&l| l as u8));

    write_file(images_file, &image_bytes)?;
    write_file(labels_file, &label_bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds an in-memory IDX image file (used by tests and fixtures).
pub(crate) fn encode_image_file(images: &[&[u8]], rows: usize, cols: usize) -> Vec<u8> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(rows as u32).to_be_bytes());
    bytes.extend_from_slice(&(cols as u32).to_be_bytes());
    for image in images {
        assert_eq!(image.len(), rows * cols);
        bytes.extend_from_slice(image);
    }
    bytes
}

pub(crate) fn encode_label_file(labels: &[u8]) -> Vec<u8> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pair(dir: &Path, images: &[u8], labels: &[u8]) -> (PathBuf, PathBuf) {
        let ip = dir.join("images-idx3-ubyte");
        let lp = dir.join("labels-idx1-ubyte");
        fs::write(&ip, images).unwrap();
        fs::write(&lp, labels).unwrap();
        (ip, lp)
    }

    #[test]
    fn two_image_pair_scales_byte_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let img0 = [0u8, 255, 0, 255];
        let img1 = [255u8, 0, 255, 0];
        let images = encode_image_file(&[&img0, &img1], 2, 2);
        let labels = encode_label_file(&[3, 7]);
        let (ip, lp) = write_pair(dir.path(), &images, &labels);

        let data = load_idx(&ip, &lp).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.image_shape(), Some((1, 2, 2)));
        assert_eq!(data.images[0].as_slice(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(data.images[1].as_slice(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(data.labels, vec![3, 7]);
    }

    #[test]
    fn label_file_with_image_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = [0u8; 4];
        let images = encode_image_file(&[&img], 2, 2);
        // Deliberately write the image magic into the label file.
        let mut labels = encode_label_file(&[1]);
        labels[..4].copy_from_slice(&IMAGE_MAGIC.to_be_bytes());
        let (ip, lp) = write_pair(dir.path(), &images, &labels);

        match load_idx(&ip, &lp) {
            Err(DataError::BadMagic { path, found, expected }) => {
                assert_eq!(path, lp);
                assert_eq!(found, IMAGE_MAGIC);
                assert_eq!(expected, LABEL_MAGIC);
            }
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn truncated_image_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = [7u8; 4];
        let mut images = encode_image_file(&[&img], 2, 2);
        images.truncate(images.len() - 2);
        let labels = encode_label_file(&[0]);
        let (ip, lp) = write_pair(dir.path(), &images, &labels);

        match load_idx(&ip, &lp) {
            Err(DataError::Truncated { path, .. }) => assert_eq!(path, ip),
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = [7u8; 4];
        let images = encode_image_file(&[&img], 2, 2);
        let labels = encode_label_file(&[0, 1]);
        let (ip, lp) = write_pair(dir.path(), &images, &labels);

        assert!(matches!(
            load_idx(&ip, &lp),
            Err(DataError::CountMismatch { images: 1, labels: 2 })
        ));
    }

    #[test]
    fn missing_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("missing-images");
        let lp = dir.path().join("missing-labels");
        match load_idx(&ip, &lp) {
            Err(DataError::Io { path, .. }) => assert_eq!(path, ip),
            other => panic!("expected Io, got {other:?}"),
        }
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let data = crate::data::make_synthetic(24, (1, 6, 6), 4, 51);
        let ip = dir.path().join("imgs");
        let lp = dir.path().join("lbls");
        write_idx(&data, &ip, &lp).unwrap();
        let loaded = load_idx(&ip, &lp).unwrap();
        assert_eq!(loaded.len(), 24);
        assert_eq!(loaded.labels, data.labels);
        // Pixels survive up to the 8-bit quantization step.
        for (a, b) in loaded.images.iter().zip(&data.images) {
            for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() <= 0.5 / 255.0 + 1e-6);
            }
        }
    }
}
