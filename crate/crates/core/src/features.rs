//! Labelled feature matrices and their CSV representation.
//!
//! A feature CSV has a header row; the last two columns are always
//! `speaker,label`. Frame-level tables carry an extra leading `utterance`
//! column so that frames can be grouped back into utterances.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rows of feature vectors with class labels and speaker ids.
///
/// `labels[i]` indexes into `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: DMatrix<f64>,
    pub feature_names: Vec<String>,
    pub speakers: Vec<String>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        data: DMatrix<f64>,
        feature_names: Vec<String>,
        speakers: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n = data.nrows();
        if feature_names.len() != data.ncols() {
            return Err(Error::BadInput(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                data.ncols()
            )));
        }
        if speakers.len() != n || labels.len() != n {
            return Err(Error::BadInput(format!(
                "{} rows but {} speakers and {} labels",
                n,
                speakers.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::BadInput(format!(
                "label index {bad} outside {} classes",
                class_names.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("feature matrix contains non-finite values".into()));
        }
        Ok(Self {
            data,
            feature_names,
            speakers,
            labels,
            class_names,
        })
    }

    /// Builds a matrix with generated feature names `f0, f1, ...`.
    pub fn from_parts(
        data: DMatrix<f64>,
        speakers: Vec<String>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let names = (0..data.ncols()).map(|j| format!("f{j}")).collect();
        Self::new(data, names, speakers, labels, class_names)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let data = self.data.select_rows(rows.iter());
        FeatureMatrix {
            data,
            feature_names: self.feature_names.clone(),
            speakers: rows.iter().map(|&r| self.speakers[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.select_columns(cols.iter()),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            speakers: self.speakers.clone(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Replaces the feature block, keeping speakers and labels.
    pub fn with_data(&self, data: DMatrix<f64>, feature_names: Vec<String>) -> Result<FeatureMatrix> {
        FeatureMatrix::new(
            data,
            feature_names,
            self.speakers.clone(),
            self.labels.clone(),
            self.class_names.clone(),
        )
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
        let file = std::fs::File::open(path.as_ref())?;
        Ok(read_table(file)?.matrix)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        write_table(file, self, None)
    }
}

/// A parsed feature CSV. `utterances` is present for frame-level tables.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub matrix: FeatureMatrix,
    pub utterances: Option<Vec<String>>,
}

impl FeatureTable {
    pub fn read(path: impl AsRef<Path>) -> Result<FeatureTable> {
        read_table(std::fs::File::open(path.as_ref())?)
    }
}

/// Formats a float so that it parses back to the identical value.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn read_table<R: Read>(reader: R) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let n_cols = headers.len();
    if n_cols < 2 || headers[n_cols - 2] != "speaker" || headers[n_cols - 1] != "label" {
        return Err(Error::BadInput(
            "feature CSV must end with `speaker,label` columns".into(),
        ));
    }
    let has_utt = headers.first().map(|h| h == "utterance").unwrap_or(false) && n_cols >= 3;
    let first = usize::from(has_utt);
    let feature_names: Vec<String> = headers[first..n_cols - 2].to_vec();
    let dims = feature_names.len();

    let mut values = Vec::new();
    let mut speakers = Vec::new();
    let mut raw_labels = Vec::new();
    let mut utterances = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != n_cols {
            return Err(Error::BadInput(format!(
                "row {} has {} fields, expected {n_cols}",
                line + 2,
                record.len()
            )));
        }
        if has_utt {
            utterances.push(record[0].to_string());
        }
        for field in record.iter().skip(first).take(dims) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::BadInput(format!("row {}: cannot parse `{field}` as a number", line + 2))
            })?;
            values.push(v);
        }
        speakers.push(record[n_cols - 2].to_string());
        raw_labels.push(record[n_cols - 1].to_string());
    }
    let n = speakers.len();
    let class_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels = raw_labels
        .iter()
        .map(|l| class_names.binary_search(l).expect("label collected above"))
        .collect();
    let data = DMatrix::from_row_slice(n, dims, &values);
    let matrix = FeatureMatrix::new(data, feature_names, speakers, labels, class_names)?;
    Ok(FeatureTable {
        matrix,
        utterances: has_utt.then_some(utterances),
    })
}

pub fn write_table<W: Write>(
    writer: W,
    fm: &FeatureMatrix,
    utterances: Option<&[String]>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::with_capacity(fm.n_features() + 3);
    if utterances.is_some() {
        header.push("utterance");
    }
    header.extend(fm.feature_names.iter().map(String::as_str));
    header.push("speaker");
    header.push("label");
    wtr.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..fm.n_samples() {
        row.clear();
        if let Some(u) = utterances {
            row.push(u[i].clone());
        }
        row.extend(fm.data.row(i).iter().map(|&v| format_f64(v)));
        row.push(fm.speakers[i].clone());
        row.push(fm.class_names[fm.labels[i]].clone());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
