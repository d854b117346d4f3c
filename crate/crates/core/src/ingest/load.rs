//! CSV loading, encoding, transforms and the sensitive-attribute split.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::schema::{ColumnKind, DefaultKind, Schema, SensitiveRule, Transform, TransformSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const MISSING: [&str; 3] = ["", "NA", "?"];

fn is_missing(v: &str) -> bool {
    MISSING.contains(&v)
}

/// Encoded columns before the sensitive attribute is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub feature_names: Vec<String>,
    pub features: Array2<f64>,
    pub label_name: String,
    pub labels: Vec<f64>,
    /// Present when the schema maps the sensitive column by reference level.
    pub sensitive: Option<Vec<bool>>,
    pub dropped_rows: usize,
    /// Transforms applied so far, in order.
    pub transforms: Vec<(String, Transform)>,
}

impl Frame {
    fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub label_name: String,
    pub dropped_rows: usize,
    pub transforms: Vec<(String, Transform)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Resolved {
    Numeric,
    Categorical,
    Sensitive,
    Label,
    Drop,
}

fn parse_number(v: &str, row: usize, column: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{v}` is not a number"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{v}` is not finite"),
        });
    }
    Ok(x)
}

/// Reads and encodes a CSV file. No transforms are applied.
///
/// Categorical columns become one-hot columns named `column=level` over
/// the sorted levels, minus the first. Rows with a missing value (empty,
/// `NA` or `?`) in any used column are dropped and counted.
pub fn load_frame(path: impl AsRef<Path>, schema: &Schema) -> Result<Frame> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    for c in &schema.columns {
        if !header.contains(&c.name) {
            return Err(Error::SchemaMismatch(format!("column `{}` not found in header", c.name)));
        }
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }

    let mut kinds = Vec::with_capacity(header.len());
    for name in &header {
        let kind = match schema.column(name).map(|c| &c.kind) {
            Some(ColumnKind::Numeric) => Some(Resolved::Numeric),
            Some(ColumnKind::Categorical) => Some(Resolved::Categorical),
            Some(ColumnKind::SensitiveBinary(SensitiveRule::AboveMedian)) => Some(Resolved::Numeric),
            Some(ColumnKind::SensitiveBinary(SensitiveRule::Reference(_))) => Some(Resolved::Sensitive),
            Some(ColumnKind::Label) => Some(Resolved::Label),
            Some(ColumnKind::Drop) => Some(Resolved::Drop),
            None => match schema.default {
                DefaultKind::Numeric => Some(Resolved::Numeric),
                DefaultKind::Categorical => Some(Resolved::Categorical),
                DefaultKind::Drop => Some(Resolved::Drop),
                DefaultKind::Auto => None,
                DefaultKind::Error => {
                    return Err(Error::SchemaMismatch(format!("column `{name}` is not in the schema")))
                }
            },
        };
        kinds.push(kind);
    }

    let total = rows.len();
    rows.retain(|(_, r)| {
        r.iter()
            .zip(&kinds)
            .all(|(v, k)| *k == Some(Resolved::Drop) || !is_missing(v))
    });
    let dropped_rows = total - rows.len();
    let n = rows.len();

    let kinds: Vec<Resolved> = kinds
        .into_iter()
        .enumerate()
        .map(|(j, k)| {
            k.unwrap_or_else(|| {
                if rows.iter().all(|(_, r)| r[j].parse::<f64>().is_ok_and(f64::is_finite)) {
                    Resolved::Numeric
                } else {
                    Resolved::Categorical
                }
            })
        })
        .collect();

    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut label_name = String::new();
    let mut sensitive = None;
    for (j, name) in header.iter().enumerate() {
        match kinds[j] {
            Resolved::Drop => {}
            Resolved::Numeric => {
                names.push(name.clone());
                columns.push(rows.iter().map(|(l, r)| parse_number(&r[j], *l, name)).collect::<Result<_>>()?);
            }
            Resolved::Label => {
                label_name = name.clone();
                labels = rows.iter().map(|(l, r)| parse_number(&r[j], *l, name)).collect::<Result<_>>()?;
            }
            Resolved::Categorical => {
                let levels: BTreeSet<&str> = rows.iter().map(|(_, r)| r[j].as_str()).collect();
                for level in levels.iter().skip(1) {
                    names.push(format!("{name}={level}"));
                    columns.push(rows.iter().map(|(_, r)| (r[j] == *level) as u8 as f64).collect());
                }
            }
            Resolved::Sensitive => {
                let Some(ColumnKind::SensitiveBinary(SensitiveRule::Reference(reference))) =
                    schema.column(name).map(|c| &c.kind)
                else {
                    unreachable!("resolved from the schema")
                };
                sensitive = Some(rows.iter().map(|(_, r)| r[j] != *reference).collect());
            }
        }
    }
    let d = columns.len();
    let features = Array2::from_shape_fn((n, d), |(i, j)| columns[j][i]);
    Ok(Frame {
        feature_names: names,
        features,
        label_name,
        labels,
        sensitive,
        dropped_rows,
        transforms: Vec::new(),
    })
}

fn apply(t: &Transform, v: f64, column: &str) -> Result<f64> {
    match t {
        Transform::None => Ok(v),
        Transform::Square => Ok(v * v),
        Transform::Log => {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::TransformDomain {
                    column: column.to_string(),
                    transform: "log".into(),
                    value: v,
                })
            }
        }
        Transform::Custom(tag) => Err(Error::SchemaMismatch(format!(
            "transform `{tag}` on column `{column}` is not supported"
        ))),
    }
}

/// Applies the declared column transforms (features or label) and records
/// them on the frame.
pub fn harrison_transform(mut frame: Frame, spec: &TransformSpec) -> Result<Frame> {
    for (name, t) in &spec.columns {
        if *name == frame.label_name {
            for y in frame.labels.iter_mut() {
                *y = apply(t, *y, name)?;
            }
        } else if let Some(j) = frame.column_index(name) {
            for v in frame.features.column_mut(j).iter_mut() {
                *v = apply(t, *v, name)?;
            }
        } else {
            return Err(Error::SchemaMismatch(format!("transform target `{name}` is not a loaded column")));
        }
        frame.transforms.push((name.clone(), t.clone()));
    }
    Ok(frame)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `A = 1` strictly above the median of `column`, which is then removed
/// from the features. Ties at the median go to group 0.
pub fn median_split_sensitive(frame: &Frame, column: &str) -> Result<Dataset> {
    let j = frame
        .column_index(column)
        .ok_or_else(|| Error::SchemaMismatch(format!("split column `{column}` is not a numeric feature")))?;
    let values: Vec<f64> = frame.features.column(j).to_vec();
    if values.is_empty() {
        return Err(Error::DegenerateSplit(column.to_string()));
    }
    let m = median(&values);
    let sensitive: Vec<bool> = values.iter().map(|&v| v > m).collect();
    if sensitive.iter().all(|&a| a) || !sensitive.iter().any(|&a| a) {
        return Err(Error::DegenerateSplit(column.to_string()));
    }
    let keep: Vec<usize> = (0..frame.features.ncols()).filter(|&k| k != j).collect();
    let features = frame.features.select(ndarray::Axis(1), &keep);
    let names = keep.iter().map(|&k| frame.feature_names[k].clone()).collect();
    Dataset::with_names(features, sensitive, frame.labels.clone(), names)
}

/// Full ingest: read, encode, transform, assign the sensitive attribute.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Loaded> {
    schema.validate()?;
    let frame = harrison_transform(load_frame(path, schema)?, &schema.transform_spec())?;
    let (col, rule) = schema.sensitive();
    let dataset = match rule {
        SensitiveRule::AboveMedian => median_split_sensitive(&frame, &col.name)?,
        SensitiveRule::Reference(_) => Dataset::with_names(
            frame.features.clone(),
            frame.sensitive.clone().expect("reference rule fills sensitive"),
            frame.labels.clone(),
            frame.feature_names.clone(),
        )?,
    };
    Ok(Loaded {
        dataset,
        label_name: frame.label_name,
        dropped_rows: frame.dropped_rows,
        transforms: frame.transforms,
    })
}

/// Writes features, the sensitive attribute (0/1) and labels with a header,
/// in that fixed column order.
pub fn write_dataset_csv<W: Write>(out: W, dataset: &Dataset, sensitive_name: &str, label_name: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push(sensitive_name);
    header.push(label_name);
    w.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut rec: Vec<String> = dataset.row_slice(i).iter().map(|v| v.to_string()).collect();
        rec.push((dataset.sensitive()[i] as u8).to_string());
        rec.push(dataset.labels()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn frame_of(values: &[f64]) -> Frame {
        let n = values.len();
        Frame {
            feature_names: vec!["v".into(), "w".into()],
            features: Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { values[i] } else { i as f64 }),
            label_name: "y".into(),
            labels: vec![1.0; n],
            sensitive: None,
            dropped_rows: 0,
            transforms: Vec::new(),
        }
    }

    #[test]
    fn three_row_file() {
        let f = file("x,g,y\n1.0,a,2\n2.0,b,3\n3.5,a,4\n");
        let s = Schema::parse("g = sensitive, reference=a\ny = label\nx = numeric\n").unwrap();
        let l = load_csv(f.path(), &s).unwrap();
        assert_eq!(l.dataset.len(), 3);
        assert_eq!(l.dataset.dim(), 1);
        assert_eq!(l.dataset.sensitive(), &[false, true, false]);
        assert_eq!(l.dataset.labels(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn one_hot_drops_first_sorted_level() {
        let f = file("c,g,y\nred,a,1\nblue,b,2\ngreen,a,3\nred,b,4\n");
        let s = Schema::parse("g = sensitive, reference=a\ny = label\nc = categorical\n").unwrap();
        let l = load_csv(f.path(), &s).unwrap();
        assert_eq!(l.dataset.feature_names(), &["c=green", "c=red"]);
        for i in 0..4 {
            assert!(l.dataset.row_slice(i).iter().sum::<f64>() <= 1.0);
        }
        assert_eq!(l.dataset.row_slice(1), &[0.0, 0.0]);
    }

    #[test]
    fn semicolon_and_auto_kinds() {
        let f = file("school;sex;age;G1;G3\nGP;F;18;5;6\nMS;M;17;5;6\nGP;M;16;7;10\n");
        let s = Schema::parse("@delimiter = ;\nsex = sensitive, reference=F\nG3 = label\nG1 = drop\n").unwrap();
        let l = load_csv(f.path(), &s).unwrap();
        assert_eq!(l.dataset.feature_names(), &["school=MS", "age"]);
        assert_eq!(l.dataset.sensitive(), &[false, true, true]);
    }

    #[test]
    fn missing_rows_dropped_and_counted() {
        let f = file("x,g,y\n1,a,2\nNA,b,3\n3,a,?\n4,b,5\n,a,1\n6,a,1\n");
        let s = Schema::parse("g = sensitive, reference=a\ny = label\n").unwrap();
        let l = load_csv(f.path(), &s).unwrap();
        assert_eq!(l.dropped_rows, 3);
        assert_eq!(l.dataset.len(), 3);
    }

    #[test]
    fn schema_and_parse_errors() {
        let f = file("x,g,y\n1,a,2\n2,b,3\n");
        let s = Schema::parse("g = sensitive, reference=a\nlabel_col = label\n").unwrap();
        assert!(matches!(load_csv(f.path(), &s), Err(Error::SchemaMismatch(_))));
        let f = file("x,g,y\n1,a,2\nabc,b,3\n");
        let s = Schema::parse("g = sensitive, reference=a\ny = label\nx = numeric\n").unwrap();
        assert!(matches!(load_csv(f.path(), &s), Err(Error::Parse { row: 3, .. })));
        let f = file("x,g,y\n1,a,2\n2,a,3\n");
        let s = Schema::parse("g = sensitive, reference=a\ny = label\n").unwrap();
        assert!(matches!(load_csv(f.path(), &s), Err(Error::EmptyGroup { .. })));
    }

    #[test]
    fn encoding_is_deterministic() {
        let f = file("c,x,g,y\nu,1,a,2\nv,2,b,3\nw,3,a,4\nu,0.5,b,1\n");
        let s = Schema::parse("g = sensitive, reference=a\ny = label\n").unwrap();
        assert_eq!(load_csv(f.path(), &s).unwrap(), load_csv(f.path(), &s).unwrap());
    }

    #[test]
    fn median_split_rules() {
        let ds = median_split_sensitive(&frame_of(&[1.0, 2.0, 3.0, 4.0]), "v").unwrap();
        assert_eq!(ds.sensitive(), &[false, false, true, true]);
        assert_eq!(ds.feature_names(), &["w"]);
        // median 2 is tied: ties stay in group 0
        let ds = median_split_sensitive(&frame_of(&[1.0, 2.0, 2.0, 2.0, 5.0]), "v").unwrap();
        assert_eq!(ds.sensitive(), &[false, false, false, false, true]);
        assert!(matches!(
            median_split_sensitive(&frame_of(&[3.0; 4]), "v"),
            Err(Error::DegenerateSplit(_))
        ));
    }

    #[test]
    fn transforms() {
        let mut fr = frame_of(&[1.0, 2.0, 3.0]);
        fr.labels = vec![22.5, 1.0, 2.0];
        let spec = TransformSpec {
            columns: vec![("y".into(), Transform::Log), ("v".into(), Transform::Square)],
        };
        let out = harrison_transform(fr.clone(), &spec).unwrap();
        assert_eq!(out.labels[0], 22.5f64.ln());
        assert_eq!(out.features.column(0).to_vec(), vec![1.0, 4.0, 9.0]);
        assert_eq!(out.transforms.len(), 2);
        assert_eq!(harrison_transform(fr.clone(), &TransformSpec::default()).unwrap(), fr);
        let bad = TransformSpec {
            columns: vec![("w".into(), Transform::Log)],
        };
        assert!(matches!(harrison_transform(fr, &bad), Err(Error::TransformDomain { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let ds = Dataset::from_column(&[0.1, 2.0, 1.0 / 3.0], &[true, false, true], &[1.5, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &ds, "a", "y").unwrap();
        let f = file(std::str::from_utf8(&buf).unwrap());
        let s = Schema::parse("a = sensitive, reference=0\ny = label\n").unwrap();
        assert_eq!(load_csv(f.path(), &s).unwrap().dataset, ds);
    }
}
