use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::data::dataset::LabeledDataset;
use crate::error::{CaaError, Result};
use crate::matrix::DenseMatrix;

pub const WISCONSIN_FEATURES: [&str; 9] = [
    "clump_thickness",
    "uniformity_of_cell_size",
    "uniformity_of_cell_shape",
    "marginal_adhesion",
    "single_epithelial_cell_size",
    "bare_nuclei",
    "bland_chromatin",
    "normal_nucleoli",
    "mitoses",
];

const COLUMNS: usize = 11;

/// Loads the UCI breast-cancer file: `id, 9 features, class` with class
/// 2 (benign, label 0) or 4 (malignant, label 1). Rows with a `?` in any
/// feature are dropped.
pub fn load_wisconsin(path: &Path) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|e| CaaError::io(path, e))?;
    parse_wisconsin(BufReader::new(file)).map_err(|e| match e {
        CaaError::Io { source, .. } => CaaError::io(path, source),
        other => other,
    })
}

pub fn parse_wisconsin<R: Read>(input: R) -> Result<LabeledDataset> {
    let reader = BufReader::new(input);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| CaaError::io(Path::new("<input>"), e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != COLUMNS {
            return Err(CaaError::Schema {
                line: line_no,
                expected: COLUMNS,
                found: fields.len(),
            });
        }
        if fields[1..10].contains(&"?") {
            continue;
        }
        let mut row = [0.0; 9];
        for (j, f) in fields[1..10].iter().enumerate() {
            row[j] = f.parse::<u32>().map(f64::from).map_err(|_| CaaError::Parse {
                line: line_no,
                message: format!("feature {} is not an integer: {f:?}", WISCONSIN_FEATURES[j]),
            })?;
        }
        let label = match fields[10] {
            "2" => 0,
            "4" => 1,
            other => {
                return Err(CaaError::Parse {
                    line: line_no,
                    message: format!("class must be 2 or 4, got {other:?}"),
                })
            }
        };
        data.extend_from_slice(&row);
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(CaaError::InsufficientData("no complete rows in input".into()));
    }
    let x = DenseMatrix::new(labels.len(), 9, data)?;
    LabeledDataset::new(x, labels, WISCONSIN_FEATURES.iter().map(|s| s.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
1000025,5,1,1,1,2,1,3,1,1,2
1002945,5,4,4,5,7,10,3,2,1,2
1057013,8,4,5,1,2,?,7,3,1,4
1017122,8,10,10,8,7,10,9,7,1,4
";

    #[test]
    fn drops_missing_and_maps_labels() {
        let ds = parse_wisconsin(SAMPLE.as_bytes()).unwrap();
        assert_eq!(ds.x.shape(), (3, 9));
        assert_eq!(ds.labels, vec![0, 0, 1]);
        assert_eq!(ds.x.row(2)[1], 10.0);
        assert_eq!(ds.feature_names[8], "mitoses");
    }

    #[test]
    fn malformed_value_names_line() {
        let text = SAMPLE.replace("1002945,5,4", "1002945,5,x");
        match parse_wisconsin(text.as_bytes()) {
            Err(CaaError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count() {
        let text = "1,2,3\n";
        assert!(matches!(
            parse_wisconsin(text.as_bytes()),
            Err(CaaError::Schema { line: 1, expected: 11, found: 3 })
        ));
    }

    #[test]
    fn unknown_class_code() {
        assert!(parse_wisconsin("1,1,1,1,1,1,1,1,1,1,3\n".as_bytes()).is_err());
    }
}
