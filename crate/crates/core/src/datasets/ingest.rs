use std::path::Path;

use serde::Serialize;

use super::{Dataset, Provenance, Sample};
use crate::error::{Error, Result};

/// Counts gathered while ingesting one file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub duplicates_removed: usize,
    pub samples: usize,
    pub features: usize,
    pub legitimate: usize,
    pub phishing: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum LabelKind {
    /// Binary 0/1 column named `label`.
    Label,
    /// UCI `Result` column with -1/1 values.
    Result,
}

fn is_index_column(name: &str) -> bool {
    name.is_empty() || name.eq_ignore_ascii_case("index") || name.eq_ignore_ascii_case("id")
}

fn build(
    name: &str,
    header: Vec<String>,
    rows: impl Iterator<Item = Result<Vec<String>>>,
    provenance: Provenance,
) -> Result<(Dataset, IngestReport)> {
    let (label_col, kind) = header
        .iter()
        .position(|h| h == "label")
        .map(|i| (i, LabelKind::Label))
        .or_else(|| header.iter().position(|h| h == "Result").map(|i| (i, LabelKind::Result)))
        .ok_or_else(|| Error::MissingLabelColumn(name.to_string()))?;
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_col && !is_index_column(&header[i]))
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| header[i].clone()).collect();

    let mut samples = Vec::new();
    for (r, record) in rows.enumerate() {
        let record = record?;
        let row_no = r + 1;
        let cell = |i: usize| -> Result<f64> {
            let raw = record.get(i).map(|s| s.trim()).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumericCell {
                    row: row_no,
                    column: header[i].clone(),
                    value: raw.to_string(),
                })
        };
        let features = feature_cols.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?;
        let raw_label = cell(label_col)?;
        let label = match (kind, raw_label) {
            (LabelKind::Label, 0.0) | (LabelKind::Result, -1.0) => 0,
            (LabelKind::Label, 1.0) | (LabelKind::Result, 1.0) => 1,
            (_, value) => {
                return Err(Error::InvalidLabel {
                    row: row_no,
                    column: header[label_col].clone(),
                    value,
                })
            }
        };
        samples.push(Sample {
            features,
            label,
            provenance,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows_read = samples.len();
    let mut dataset = Dataset::new(name, feature_names, samples)?;
    let duplicates_removed = dataset.dedup();
    let (legitimate, phishing) = dataset.class_distribution();
    let report = IngestReport {
        rows_read,
        duplicates_removed,
        samples: dataset.len(),
        features: dataset.n_features(),
        legitimate,
        phishing,
    };
    Ok((dataset, report))
}

/// Parses CSV text with a header row.
pub fn parse_csv(text: &str, name: &str, provenance: Provenance) -> Result<(Dataset, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let rows = reader
        .into_records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(Error::from));
    build(name, header, rows, provenance)
}

/// Parses the ARFF layout the UCI repository distributes.
fn parse_arff(text: &str, name: &str, provenance: Provenance) -> Result<(Dataset, IngestReport)> {
    let mut header = Vec::new();
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    for line in lines.by_ref() {
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@attribute") {
            let attr = line["@attribute".len()..].trim_start();
            let attr_name = if let Some(quoted) = attr.strip_prefix('\'') {
                quoted.split('\'').next().unwrap_or_default()
            } else {
                attr.split_whitespace().next().unwrap_or_default()
            };
            header.push(attr_name.to_string());
        } else if lower.starts_with("@data") {
            break;
        }
    }
    if header.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = lines.map(|l| Ok(l.split(',').map(|c| c.trim().trim_matches('\'').to_string()).collect()));
    build(name, header, rows, provenance)
}

/// Reads a labelled table, removes exact duplicate rows and maps labels to
/// {0, 1}. Files ending in `.arff` are read as ARFF, everything else as CSV.
pub fn load_csv(path: impl AsRef<Path>, provenance: Provenance) -> Result<(Dataset, IngestReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let is_arff = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"));
    if is_arff {
        parse_arff(&text, &name, provenance)
    } else {
        parse_csv(&text, &name, provenance)
    }
}

/// Alias of [`load_csv`] for callers that also pass ARFF files.
pub fn load_table(path: impl AsRef<Path>, provenance: Provenance) -> Result<(Dataset, IngestReport)> {
    load_csv(path, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_column_is_remapped() {
        let (ds, report) = parse_csv("a,b,Result\n1,-1,-1\n0,1,1\n", "t", Provenance::Uci).unwrap();
        assert_eq!(ds.labels(), vec![0, 1]);
        assert_eq!(ds.feature_names, vec!["a", "b"]);
        assert_eq!(report.rows_read, 2);
        assert_eq!(report.duplicates_removed, 0);
    }

    #[test]
    fn identical_rows_collapse() {
        let text = "a,label\n1,1\n1,1\n1,1\n1,1\n";
        let (ds, report) = parse_csv(text, "t", Provenance::Unknown).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(report.duplicates_removed, 3);
    }

    #[test]
    fn missing_label_column() {
        assert!(matches!(
            parse_csv("a,b\n1,2\n", "t", Provenance::Unknown),
            Err(Error::MissingLabelColumn(_))
        ));
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        match parse_csv("a,b,label\n1,2,0\n1,x,1\n", "t", Provenance::Unknown) {
            Err(Error::NonNumericCell { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "b", "x"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_files_are_rejected() {
        assert!(matches!(parse_csv("", "t", Provenance::Unknown), Err(Error::EmptyDataset)));
        assert!(matches!(
            parse_csv("a,label\n", "t", Provenance::Unknown),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn labels_outside_the_mapping_are_rejected() {
        assert!(matches!(
            parse_csv("a,Result\n1,0\n", "t", Provenance::Uci),
            Err(Error::InvalidLabel { .. })
        ));
        assert!(matches!(
            parse_csv("a,label\n1,-1\n", "t", Provenance::Uci),
            Err(Error::InvalidLabel { .. })
        ));
    }

    #[test]
    fn index_column_is_dropped() {
        let (ds, _) = parse_csv("index,a,label\n0,1,1\n1,1,1\n", "t", Provenance::Unknown).unwrap();
        assert_eq!(ds.feature_names, vec!["a"]);
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn arff_layout() {
        let text = "% comment\n@relation phishing\n\n@attribute having_IP_Address  { -1,1 }\n\
                    @attribute URL_Length   { 1,0,-1 }\n@attribute Result  { -1,1 }\n\n@data\n\
                    -1,1,-1\n1,1,1\n-1,1,-1\n";
        let (ds, report) = parse_arff(text, "t", Provenance::Uci).unwrap();
        assert_eq!(ds.feature_names, vec!["having_IP_Address", "URL_Length"]);
        assert_eq!(report.rows_read, 3);
        assert_eq!(ds.class_distribution(), (1, 1));
    }
}
