//! Image classification datasets.
//!
//! File format (CSV, `#` starts a comment line):
//!
//! ```text
//! count,channels,height,width,classes,max_value
//! label,pixel_0,...,pixel_{c*h*w-1}
//! ...
//! ```
//!
//! Pixels are row-major per channel, channel-major overall, and are divided by
//! `max_value` on load so images lie in `[0, 1]`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::FeatureMap;

/// Bundled 8x8 handwritten digits (1797 images, 10 classes).
pub const DIGITS_CSV: &str = include_str!("../../data/digits8x8.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub images: Vec<FeatureMap>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(classes: usize, images: Vec<FeatureMap>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::dim(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if classes == 0 {
            return Err(Error::domain("dataset needs at least one class"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::domain(format!("label {bad} outside 0..{classes}")));
        }
        let (channels, height, width) = match images.first() {
            Some(x) => (x.channels(), x.height(), x.width()),
            None => (0, 0, 0),
        };
        if images
            .iter()
            .any(|x| (x.channels(), x.height(), x.width()) != (channels, height, width))
        {
            return Err(Error::dim("images differ in shape"));
        }
        Ok(Dataset {
            channels,
            height,
            width,
            classes,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// The bundled digits.
    pub fn digits() -> Self {
        parse_csv(DIGITS_CSV, "<bundled digits>").expect("bundled dataset is well formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_csv(&text, &path.display().to_string())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            channels: self.channels,
            height: self.height,
            width: self.width,
            classes: self.classes,
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Seeded shuffle into disjoint train and test parts.
    pub fn split(&self, train_count: usize, split_seed: u64) -> Result<Split> {
        if train_count == 0 || train_count >= self.len() {
            return Err(Error::domain(format!(
                "train count {train_count} must be in 1..{}",
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut seed::rng(split_seed));
        let (train_idx, test_idx) = order.split_at(train_count);
        Ok(Split {
            train: self.subset(train_idx),
            test: self.subset(test_idx),
            train_indices: train_idx.to_vec(),
            test_indices: test_idx.to_vec(),
        })
    }

    /// Two-class set separable by a linear rule: class 1 images are brighter
    /// in the top half, class 0 in the bottom half.
    pub fn two_class_toy(count: usize, edge: usize, toy_seed: u64) -> Self {
        let mut rng = seed::rng(toy_seed);
        let mut images = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for i in 0..count {
            let label = i % 2;
            let data = (0..edge * edge)
                .map(|p| {
                    let top = p / edge < edge / 2;
                    let bright = top == (label == 1);
                    let base = if bright { 0.7 } else { 0.2 };
                    base + rng.random_range(-0.15..0.15)
                })
                .collect();
            images.push(FeatureMap::from_vec(1, edge, edge, data).expect("toy image"));
            labels.push(label);
        }
        Dataset::new(2, images, labels).expect("toy dataset")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, what: &str, line: u64) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Config(format!("dataset line {line}: bad {what}")))
}

/// Parses the dataset CSV format; `origin` names the source in errors.
pub fn parse_csv(text: &str, origin: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let bad = |e: csv::Error| Error::io(origin, e);

    let header = records
        .next()
        .ok_or_else(|| Error::Config(format!("{origin}: missing header line")))?
        .map_err(bad)?;
    let line = header.position().map_or(0, |p| p.line());
    let count: usize = field(&header, 0, "count", line)?;
    let channels: usize = field(&header, 1, "channels", line)?;
    let height: usize = field(&header, 2, "height", line)?;
    let width: usize = field(&header, 3, "width", line)?;
    let classes: usize = field(&header, 4, "classes", line)?;
    let max_value: f64 = field(&header, 5, "max_value", line)?;
    if !(max_value > 0.0) {
        return Err(Error::Config(format!("{origin}: max_value must be > 0")));
    }
    let pixels = channels * height * width;

    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for rec in records {
        let rec = rec.map_err(bad)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != pixels + 1 {
            return Err(Error::Config(format!(
                "{origin} line {line}: expected {} fields, found {}",
                pixels + 1,
                rec.len()
            )));
        }
        labels.push(field(&rec, 0, "label", line)?);
        let data = (1..=pixels)
            .map(|i| field::<f64>(&rec, i, "pixel", line).map(|v| v / max_value))
            .collect::<Result<Vec<_>>>()?;
        images.push(FeatureMap::from_vec(channels, height, width, data)?);
    }
    if images.len() != count {
        return Err(Error::Config(format!(
            "{origin}: header declares {count} rows, found {}",
            images.len()
        )));
    }
    Dataset::new(classes, images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_digits() {
        let d = Dataset::digits();
        assert_eq!(d.len(), 1797);
        assert_eq!((d.channels, d.height, d.width, d.classes), (1, 8, 8, 10));
        assert!(d
            .images
            .iter()
            .all(|x| x.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v))));
        for k in 0..10 {
            assert!(d.labels.iter().filter(|&&l| l == k).count() > 150);
        }
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let d = Dataset::digits();
        let s = d.split(1197, 5).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1197, 600));
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1797).collect::<Vec<_>>());
        assert_eq!(s, d.split(1197, 5).unwrap());
        assert_ne!(s.train_indices, d.split(1197, 6).unwrap().train_indices);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_csv("", "x").is_err());
        assert!(parse_csv("1,1,2,2,2,1\n0,1,1,1\n", "x").is_err());
        assert!(parse_csv("2,1,2,2,2,1\n0,1,1,1,1\n", "x").is_err());
        assert!(parse_csv("1,1,2,2,2,1\n5,1,1,1,1\n", "x").is_err());
        let d = parse_csv("# c\n1,1,2,2,2,4\n1,0,2,4,4\n", "x").unwrap();
        assert_eq!(d.images[0].as_slice(), &[0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn missing_file_names_path() {
        let err = Dataset::load(Path::new("/no/such/file.csv")).unwrap_err();
        assert!(err.to_string().contains("/no/such/file.csv"));
    }
}
