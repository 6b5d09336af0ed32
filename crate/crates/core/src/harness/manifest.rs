//! Dataset manifests: one record per scan with its label, blood-to-target
//! distance and scan resolution.

use std::collections::HashSet;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Mechanism, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    /// As written in the manifest; relative paths resolve against the
    /// manifest's directory.
    pub path: PathBuf,
    pub label: Mechanism,
    pub bt_distance_cm: f64,
    pub dpi: f64,
}

impl ManifestRecord {
    /// Pattern identifier used in feature tables.
    pub fn id(&self) -> String {
        self.path.to_string_lossy().replace('\\', "/")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub base_dir: PathBuf,
    pub records: Vec<ManifestRecord>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonManifest {
    List(Vec<ManifestRecord>),
    Wrapped { records: Vec<ManifestRecord> },
}

impl DatasetManifest {
    pub fn new(base_dir: impl Into<PathBuf>, records: Vec<ManifestRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(&r.path) {
                return Err(Error::InvalidInput(format!(
                    "duplicate manifest path {}",
                    r.path.display()
                )));
            }
            if !(r.dpi > 0.0 && r.dpi.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "record {}: dpi must be positive, got {}",
                    i + 1,
                    r.dpi
                )));
            }
            if !(r.bt_distance_cm >= 0.0 && r.bt_distance_cm.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "record {}: blood-to-target distance must be non-negative, got {}",
                    i + 1,
                    r.bt_distance_cm
                )));
            }
        }
        Ok(Self {
            base_dir: base_dir.into(),
            records,
        })
    }

    /// CSV with header `path,label,bt_distance_cm,dpi`.
    pub fn from_csv<R: Read>(reader: R, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestRecord>, _>>()?;
        Self::new(base_dir, records)
    }

    /// A JSON array of records, or an object with a `records` array.
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let records = match serde_json::from_str(text)? {
            JsonManifest::List(r) | JsonManifest::Wrapped { records: r } => r,
        };
        Self::new(base_dir, records)
    }

    /// Loads by extension: `.json` as JSON, anything else as CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json(&std::fs::read_to_string(path)?, base)
        } else {
            Self::from_csv(std::fs::File::open(path)?, base)
        }
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        self.base_dir.join(&record.path)
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str =
        "path,label,bt_distance_cm,dpi\nscans/a.png,gunshot,30,600\nscans/b.png,impact,120.5,600\n";

    #[test]
    fn csv_manifest() {
        let m = DatasetManifest::from_csv(CSV.as_bytes(), "/data").unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[1].label, Mechanism::Impact);
        assert_eq!(m.records[1].bt_distance_cm, 120.5);
        assert_eq!(m.resolve(&m.records[0]), PathBuf::from("/data/scans/a.png"));
        assert_eq!(m.records[0].id(), "scans/a.png");
    }

    #[test]
    fn csv_round_trip() {
        let m = DatasetManifest::from_csv(CSV.as_bytes(), "").unwrap();
        let again = DatasetManifest::from_csv(m.to_csv_bytes().unwrap().as_slice(), "").unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn json_forms() {
        let list = r#"[{"path":"a.png","label":"impact","bt_distance_cm":10,"dpi":300}]"#;
        let wrapped = format!(r#"{{"records":{list}}}"#);
        let a = DatasetManifest::from_json(list, "").unwrap();
        let b = DatasetManifest::from_json(&wrapped, "").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records[0].dpi, 300.0);
    }

    #[test]
    fn invalid_manifests() {
        let dup = "path,label,bt_distance_cm,dpi\na.png,gunshot,30,600\na.png,impact,30,600\n";
        assert!(DatasetManifest::from_csv(dup.as_bytes(), "").is_err());
        let zero_dpi = "path,label,bt_distance_cm,dpi\na.png,gunshot,30,0\n";
        assert!(DatasetManifest::from_csv(zero_dpi.as_bytes(), "").is_err());
        let bad_label = "path,label,bt_distance_cm,dpi\na.png,arterial,30,600\n";
        assert!(DatasetManifest::from_csv(bad_label.as_bytes(), "").is_err());
    }
}
