//! Feature matrix with explicit missing cells, and its CSV form.

use std::io::{Read, Write};

use crate::patternfeat::{PatternFeatures, FEATURE_NAMES};
use crate::{Error, Mechanism, Result};

/// Rows of pattern features with binary labels (1 = gunshot).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub labels: Vec<u8>,
    pub bt_distance: Vec<f64>,
    pub ids: Vec<String>,
}

const META_COLUMNS: [&str; 3] = ["pattern_id", "label", "bt_distance_cm"];

impl FeatureMatrix {
    pub fn new(
        names: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
        labels: Vec<u8>,
        bt_distance: Vec<f64>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let n = rows.len();
        if labels.len() != n || bt_distance.len() != n || ids.len() != n {
            return Err(Error::InvalidInput("row metadata lengths disagree".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::InvalidInput(format!(
                "row {bad} has {} cells, expected {}",
                rows[bad].len(),
                names.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidInput("labels must be 0 or 1".into()));
        }
        Ok(Self {
            names,
            rows,
            labels,
            bt_distance,
            ids,
        })
    }

    /// Builds a matrix with the registry's column order.
    pub fn from_patterns(patterns: &[PatternFeatures]) -> Self {
        Self {
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: patterns.iter().map(|p| p.values.clone()).collect(),
            labels: patterns.iter().map(|p| p.label.class()).collect(),
            bt_distance: patterns.iter().map(|p| p.bt_distance_cm).collect(),
            ids: patterns.iter().map(|p| p.id.clone()).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            bt_distance: indices.iter().map(|&i| self.bt_distance[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// First column holding a missing cell.
    pub fn first_missing_column(&self) -> Option<usize> {
        (0..self.n_cols()).find(|&c| self.rows.iter().any(|r| r[c].is_none()))
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = META_COLUMNS
            .iter()
            .copied()
            .chain(self.names.iter().map(String::as_str))
            .collect();
        w.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let label = Mechanism::from_class(self.labels[i]).expect("validated label");
            let mut record = vec![
                self.ids[i].clone(),
                label.to_string(),
                self.bt_distance[i].to_string(),
            ];
            record.extend(
                row.iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// Reads a matrix written by [`FeatureMatrix::write_csv`]; empty cells
    /// become missing values.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < META_COLUMNS.len() || cols[..3] != META_COLUMNS {
            return Err(Error::InvalidInput(format!(
                "feature CSV must start with {}",
                META_COLUMNS.join(",")
            )));
        }
        let names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
        let (mut rows, mut labels, mut bt, mut ids) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (line, record) in r.records().enumerate() {
            let record = record?;
            ids.push(record[0].to_string());
            labels.push(record[1].parse::<Mechanism>()?.class());
            bt.push(parse_number(&record[2], line)?);
            let row = record
                .iter()
                .skip(3)
                .map(|cell| {
                    if cell.trim().is_empty() {
                        Ok(None)
                    } else {
                        parse_number(cell, line).map(Some)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(names, rows, labels, bt, ids)
    }
}

fn parse_number(cell: &str, line: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        Error::InvalidInput(format!("record {}: '{cell}' is not a number", line + 1))
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!(
            "record {}: non-finite value",
            line + 1
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> FeatureMatrix {
        FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![Some(1.5), None], vec![Some(-2.0), Some(0.1)]],
            vec![1, 0],
            vec![30.0, 120.5],
            vec!["x.png".into(), "y,z.png".into()],
        )
        .unwrap()
    }

    #[test]
    fn csv_layout() {
        let text = String::from_utf8(small().to_csv_bytes().unwrap()).unwrap();
        assert_eq!(
            text,
            "pattern_id,label,bt_distance_cm,a,b\nx.png,gunshot,30,1.5,\n\"y,z.png\",impact,120.5,-2,0.1\n"
        );
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FeatureMatrix::new(
            vec!["a".into()],
            vec![vec![]],
            vec![0],
            vec![0.0],
            vec!["r".into()]
        )
        .is_err());
        assert!(
            FeatureMatrix::new(vec![], vec![vec![]], vec![2], vec![0.0], vec!["r".into()]).is_err()
        );
        assert!(FeatureMatrix::read_csv("id,label\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(cells in proptest::collection::vec(proptest::option::of(-1e9f64..1e9), 12), labels in proptest::collection::vec(0u8..2, 4)) {
            let rows: Vec<Vec<Option<f64>>> = cells.chunks(3).map(|c| c.to_vec()).collect();
            let m = FeatureMatrix::new(
                vec!["p".into(), "q".into(), "r".into()],
                rows,
                labels,
                vec![10.0, 20.0, 30.0, 40.0],
                (0..4).map(|i| format!("row{i}")).collect(),
            ).unwrap();
            let back = FeatureMatrix::read_csv(m.to_csv_bytes().unwrap().as_slice()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
