//! CSV ingestion and export. Input files carry a header `x1,…,xd[,y]`; an empty
//! `y` cell marks an unlabeled row.

use std::path::Path;

use crate::graph::{PointCloud, PointSet};
use crate::predict::Prediction;

use super::ExperimentError;

fn parse_error(line: usize, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Parse { line, message: message.into() }
}

/// Reads a point cloud; also returns whether the file has a label column.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<PointCloud, ExperimentError> {
    let (points, labels) = read_table(path.as_ref())?;
    let (idx, vals): (Vec<usize>, Vec<f64>) = labels
        .iter()
        .enumerate()
        .filter_map(|(i, y)| y.map(|v| (i, v)))
        .unzip();
    Ok(PointCloud::new(points, idx, vals)?)
}

/// Points and optional label per row.
pub fn read_table(path: &Path) -> Result<(PointSet, Vec<Option<f64>>), ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_or_parse(e, 1))?;
    let header = reader.headers().map_err(|e| io_or_parse(e, 1))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let has_y = names.last() == Some(&"y");
    let dim = names.len() - usize::from(has_y);
    if dim == 0 {
        return Err(parse_error(1, "header has no coordinate columns"));
    }
    for (i, name) in names[..dim].iter().enumerate() {
        if *name != format!("x{}", i + 1) {
            return Err(parse_error(1, format!("expected column x{} but found {name:?}", i + 1)));
        }
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| io_or_parse(e, line))?;
        let fields: Vec<&str> = record.iter().collect();
        let expected = if has_y { dim..=dim + 1 } else { dim..=dim };
        if !expected.contains(&fields.len()) {
            return Err(ExperimentError::DimensionMismatch { line, expected: names.len(), got: fields.len() });
        }
        for f in &fields[..dim] {
            let v: f64 = f.parse().map_err(|_| parse_error(line, format!("bad coordinate {f:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(line, format!("non-finite coordinate {f:?}")));
            }
            data.push(v);
        }
        let y = match fields.get(dim) {
            Some(f) if !f.is_empty() => {
                let v: f64 = f.parse().map_err(|_| parse_error(line, format!("bad label {f:?}")))?;
                if !v.is_finite() {
                    return Err(parse_error(line, format!("non-finite label {f:?}")));
                }
                Some(v)
            }
            _ => None,
        };
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(parse_error(2, "no data rows"));
    }
    Ok((PointSet::new(data, dim)?, labels))
}

fn io_or_parse(e: csv::Error, line: usize) -> ExperimentError {
    let line = e.position().map_or(line, |p| p.line() as usize);
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => ExperimentError::Io(io.to_string()),
            _ => unreachable!(),
        }
    } else {
        parse_error(line, e.to_string())
    }
}

fn header(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

/// Writes the cloud with its raw labels; round-trips bit-exactly through
/// [`ingest_csv`].
pub fn export_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| ExperimentError::Io(e.to_string()))?;
    let mut head = header(cloud.dim());
    head.push("y".into());
    w.write_record(&head).map_err(|e| ExperimentError::Io(e.to_string()))?;
    for (i, y) in cloud.raw_label_column().into_iter().enumerate() {
        let mut row: Vec<String> = cloud.point(i).iter().map(|v| format!("{v:?}")).collect();
        row.push(y.map(|v| format!("{v:?}")).unwrap_or_default());
        w.write_record(&row).map_err(|e| ExperimentError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| ExperimentError::Io(e.to_string()))
}

/// Predictions CSV `x1,…,xd,mean,variance,gamma`, values in the original label scale.
pub fn write_predictions(
    path: impl AsRef<Path>,
    points: &PointSet,
    predictions: &[Prediction],
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| ExperimentError::Io(e.to_string()))?;
    let mut head = header(points.dim());
    head.extend(["mean", "variance", "gamma"].map(String::from));
    w.write_record(&head).map_err(|e| ExperimentError::Io(e.to_string()))?;
    for (i, p) in predictions.iter().enumerate() {
        let mut row: Vec<String> = points.row(i).iter().map(|v| format!("{v:?}")).collect();
        row.extend([p.mean, p.variance, p.gamma].map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(|e| ExperimentError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| ExperimentError::Io(e.to_string()))
}
