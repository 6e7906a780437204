//! Synthetic generators, LIBSVM ingestion, normalization and splitting.

pub mod libsvm;
pub mod rng;
pub mod synthetic;
pub mod transform;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

pub use libsvm::{map_labels, parse_libsvm, read_libsvm_file, serialize_libsvm};
pub use rng::SeededStream;
pub use synthetic::{gen_example1, gen_example2, Spec1, Spec2};
pub use transform::{normalize_two_pass, scale_to_unit_interval};

/// Where a prepared dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Example1(Spec1),
    Example2(Spec2),
    File {
        path: PathBuf,
        test_path: Option<PathBuf>,
    },
}

impl Provenance {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Provenance::Example1(s) => Some(s.seed),
            Provenance::Example2(s) => Some(s.seed),
            Provenance::File { .. } => None,
        }
    }
}

/// A training set, an optional held-out set and the data's origin.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub provenance: Provenance,
    /// True parameter, known for Example 2 only.
    pub truth: Option<Vec<f64>>,
}

impl PreparedData {
    pub fn feature_count(&self) -> usize {
        self.train.p()
    }

    /// Moves all rows from `m1` on into the test set.
    pub fn split_first(mut self, m1: usize) -> Result<Self> {
        if self.test.is_some() {
            return Err(Error::arg("dataset already has a test split"));
        }
        let n = self.train.n();
        if m1 == 0 || m1 > n {
            return Err(Error::arg(format!("training size {m1} must lie in 1..={n}")));
        }
        if m1 < n {
            let rows: Vec<usize> = (0..n).collect();
            let test = self.train.select_rows(&rows[m1..])?;
            self.train = self.train.select_rows(&rows[..m1])?;
            self.test = Some(test);
        }
        Ok(self)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            provenance: self.provenance.clone(),
            seed: self.provenance.seed(),
            p: self.feature_count(),
            train_size: self.train.n(),
            test_size: self.test.as_ref().map_or(0, Dataset::n),
        }
    }
}

/// JSON record written next to generated or converted data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub p: usize,
    pub train_size: usize,
    pub test_size: usize,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Loads a LIBSVM training file and an optional test file.
///
/// Labels of both files go through one joint mapping and both sets share the
/// larger feature count, so the two splits stay comparable.
pub fn load_libsvm(train: &Path, test: Option<&Path>, p: Option<usize>) -> Result<PreparedData> {
    let open = |path: &Path| {
        std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    };
    let raw_train = libsvm::read_raw(open(train)?)?;
    let raw_test = test.map(|t| open(t).and_then(libsvm::read_raw)).transpose()?;
    let mut all = raw_train.labels.clone();
    if let Some(rt) = &raw_test {
        all.extend_from_slice(&rt.labels);
    }
    let mut mapped = map_labels(&all)?;
    let test_labels = mapped.split_off(raw_train.labels.len());
    let width = raw_train
        .max_index
        .max(raw_test.as_ref().map_or(0, |r| r.max_index));
    let p = Some(p.unwrap_or(width));
    let train_ds = libsvm::to_dataset(raw_train, mapped, p)?;
    let test_ds = raw_test
        .map(|rt| libsvm::to_dataset(rt, test_labels, p))
        .transpose()?;
    Ok(PreparedData {
        train: train_ds,
        test: test_ds,
        provenance: Provenance::File {
            path: train.to_path_buf(),
            test_path: test.map(Path::to_path_buf),
        },
        truth: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_keeps_row_order() {
        let d = gen_example1(Spec1 { n: 10, p: 3, seed: 1 }).unwrap();
        let first = d.train.x().row_entries(7);
        let d = d.split_first(6).unwrap();
        assert_eq!(d.train.n(), 6);
        let test = d.test.as_ref().unwrap();
        assert_eq!(test.n(), 4);
        assert_eq!(test.x().row_entries(1), first);
        let m = d.manifest();
        assert_eq!((m.seed, m.train_size, m.test_size, m.p), (Some(1), 6, 4, 3));
        let back: Manifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn split_rejects_bad_sizes() {
        let d = gen_example1(Spec1 { n: 4, p: 2, seed: 1 }).unwrap();
        assert!(d.clone().split_first(0).is_err());
        assert!(d.clone().split_first(5).is_err());
        assert!(d.split_first(4).unwrap().test.is_none());
    }

    #[test]
    fn joint_label_map_across_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.svm");
        let b = dir.path().join("b.svm");
        std::fs::write(&a, "1 1:1\n1 2:1\n").unwrap();
        std::fs::write(&b, "-1 4:1\n1 1:2\n").unwrap();
        let d = load_libsvm(&a, Some(&b), None).unwrap();
        assert_eq!(d.train.y(), &[1.0, 1.0]);
        assert_eq!(d.test.as_ref().unwrap().y(), &[0.0, 1.0]);
        assert_eq!(d.train.p(), 4);
        assert_eq!(d.test.as_ref().unwrap().p(), 4);
    }
}
