use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ProblemError;

/// Labeled examples stored row-major. The value in the last CSV column is the
/// label.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    n_features: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self, ProblemError> {
        if rows.is_empty() {
            return Err(ProblemError::EmptyData);
        }
        if rows.len() != labels.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let n_features = rows[0].len();
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(ProblemError::Parse {
                    row: i + 1,
                    message: format!("expected {} features, found {}", n_features, row.len()),
                });
            }
            features.extend_from_slice(row);
        }
        Ok(Dataset {
            features,
            labels,
            n_features,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Labels as class indices `0..n_classes`.
    pub fn class_labels(&self) -> Result<Vec<usize>, ProblemError> {
        self.labels
            .iter()
            .enumerate()
            .map(|(row, &label)| {
                if label >= 0.0 && label.fract() == 0.0 && label < 1e9 {
                    Ok(label as usize)
                } else {
                    Err(ProblemError::InvalidLabel {
                        row: row + 1,
                        label,
                        reason: "class labels must be non-negative integers",
                    })
                }
            })
            .collect()
    }

    /// Reads a headerless or single-header CSV; a first line that does not
    /// parse as numbers is taken as the header.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, ProblemError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(ProblemError::Parse {
                        row: i + 1,
                        message: e.to_string(),
                    })
                }
            };
            let Some((&label, feats)) = values.split_last() else {
                continue;
            };
            if feats.is_empty() {
                return Err(ProblemError::Parse {
                    row: i + 1,
                    message: "a row needs at least one feature and a label".into(),
                });
            }
            rows.push(feats.to_vec());
            labels.push(label);
        }
        Self::new(rows, labels)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, ProblemError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), ProblemError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.n_features).map(|k| format!("x{k}")).collect();
        header.push("label".into());
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut fields: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            fields.push(format!("{:?}", self.label(i)));
            wtr.write_record(&fields)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), ProblemError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Two Gaussian clusters centred at `-offset * 1` (label 0) and
/// `+offset * 1` (label 1) with isotropic standard deviation `std`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobSpec {
    pub n: usize,
    pub dim: usize,
    pub offset: f64,
    pub std: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            n: 2000,
            dim: 16,
            offset: 0.5,
            std: 1.0,
            seed: 20_190_601,
        }
    }
}

/// Balanced blobs; rows alternate between the two classes.
pub fn make_blobs(spec: BlobSpec) -> Result<Dataset, ProblemError> {
    if spec.n == 0 || spec.dim == 0 {
        return Err(ProblemError::EmptyData);
    }
    let normal = Normal::new(0.0, spec.std).map_err(|e| ProblemError::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let class = (i % 2) as f64;
        let centre = if class == 0.0 {
            -spec.offset
        } else {
            spec.offset
        };
        rows.push(
            (0..spec.dim)
                .map(|_| centre + normal.sample(&mut rng))
                .collect(),
        );
        labels.push(class);
    }
    Dataset::new(rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let ds = make_blobs(BlobSpec {
            n: 10,
            dim: 3,
            ..BlobSpec::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn headerless_csv_and_errors() {
        let ds = Dataset::from_csv_reader("1,2,0\n3,4,1\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.label(1), 1.0);
        assert!(Dataset::from_csv_reader("a,b\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("1,2,0\nx,4,1\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("1,2,0\n3,1\n".as_bytes()).is_err());
    }

    #[test]
    fn blobs_are_balanced_and_deterministic() {
        let a = make_blobs(BlobSpec::default()).unwrap();
        let b = make_blobs(BlobSpec::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2000);
        assert_eq!(a.n_features(), 16);
        let ones = a.labels().iter().filter(|&&l| l == 1.0).count();
        assert_eq!(ones, 1000);
        let mean1: f64 = (0..a.len())
            .filter(|&i| a.label(i) == 1.0)
            .map(|i| a.row(i).iter().sum::<f64>() / 16.0)
            .sum::<f64>()
            / 1000.0;
        assert!((mean1 - 0.5).abs() < 0.05);
    }

    #[test]
    fn class_labels_validate() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0.0, 1.5]).unwrap();
        assert!(ds.class_labels().is_err());
    }
}
