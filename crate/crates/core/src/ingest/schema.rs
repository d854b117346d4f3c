//! Declarative column schema.
//!
//! One column per line, `name = kind[, key=value]*`, plus `@`-directives:
//!
//! ```text
//! @version = 1
//! @delimiter = ;
//! @default = auto          # numeric | categorical | drop | auto | error
//! sex  = sensitive, reference=F
//! nox  = sensitive, split=median
//! G3   = label
//! G1   = drop
//! rm   = numeric, transform=square
//! ```
//!
//! `#` starts a comment. Columns missing from the schema take the default
//! kind; `auto` picks numeric when every value parses, categorical otherwise.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    None,
    Log,
    Square,
    Custom(String),
}

impl Transform {
    fn parse(s: &str) -> Transform {
        match s {
            "none" | "identity" => Transform::None,
            "log" => Transform::Log,
            "square" => Transform::Square,
            other => Transform::Custom(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Transform::None => "none",
            Transform::Log => "log",
            Transform::Square => "square",
            Transform::Custom(tag) => tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitiveRule {
    /// `reference -> 0`, any other value `-> 1`.
    Reference(String),
    /// `1` strictly above the column median.
    AboveMedian,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    SensitiveBinary(SensitiveRule),
    Label,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefaultKind {
    Auto,
    Numeric,
    Categorical,
    Drop,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
    pub delimiter: u8,
    pub default: DefaultKind,
    pub version: Option<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            columns: Vec::new(),
            delimiter: b',',
            default: DefaultKind::Auto,
            version: None,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::SchemaMismatch(format!("schema line {line}: {msg}"))
}

impl Schema {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut schema = Schema::default();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| bad(lineno, "expected `name = kind`"))?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            if let Some(directive) = lhs.strip_prefix('@') {
                match directive {
                    "version" => schema.version = Some(rhs.to_string()),
                    "delimiter" => {
                        let d = match rhs {
                            "tab" | "\\t" => b'\t',
                            "comma" => b',',
                            "semicolon" => b';',
                            s if s.len() == 1 => s.as_bytes()[0],
                            s => return Err(bad(lineno, format!("bad delimiter `{s}`"))),
                        };
                        schema.delimiter = d;
                    }
                    "default" => {
                        schema.default = match rhs {
                            "auto" => DefaultKind::Auto,
                            "numeric" => DefaultKind::Numeric,
                            "categorical" => DefaultKind::Categorical,
                            "drop" => DefaultKind::Drop,
                            "error" => DefaultKind::Error,
                            s => return Err(bad(lineno, format!("bad default `{s}`"))),
                        }
                    }
                    other => return Err(bad(lineno, format!("unknown directive `@{other}`"))),
                }
                continue;
            }
            if lhs.is_empty() {
                return Err(bad(lineno, "empty column name"));
            }
            let mut parts = rhs.split(',').map(str::trim);
            let kind_name = parts.next().unwrap_or("");
            let mut reference = None;
            let mut split = None;
            let mut transform = Transform::None;
            for opt in parts {
                let (k, v) = opt
                    .split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| bad(lineno, format!("expected key=value, got `{opt}`")))?;
                match k {
                    "reference" => reference = Some(v.to_string()),
                    "split" => split = Some(v.to_string()),
                    "transform" => transform = Transform::parse(v),
                    _ => return Err(bad(lineno, format!("unknown option `{k}`"))),
                }
            }
            let kind = match kind_name {
                "numeric" => ColumnKind::Numeric,
                "categorical" => ColumnKind::Categorical,
                "label" => ColumnKind::Label,
                "drop" => ColumnKind::Drop,
                "sensitive" => match (reference, split.as_deref()) {
                    (Some(r), None) => ColumnKind::SensitiveBinary(SensitiveRule::Reference(r)),
                    (None, Some("median")) => ColumnKind::SensitiveBinary(SensitiveRule::AboveMedian),
                    _ => {
                        return Err(bad(
                            lineno,
                            "sensitive needs exactly one of reference=<level> or split=median",
                        ))
                    }
                },
                k => return Err(bad(lineno, format!("unknown kind `{k}`"))),
            };
            if schema.columns.iter().any(|c| c.name == lhs) {
                return Err(bad(lineno, format!("column `{lhs}` declared twice")));
            }
            schema.columns.push(ColumnSchema {
                name: lhs.to_string(),
                kind,
                transform,
            });
        }
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let count = |pred: fn(&ColumnKind) -> bool| self.columns.iter().filter(|c| pred(&c.kind)).count();
        let labels = count(|k| matches!(k, ColumnKind::Label));
        let sensitive = count(|k| matches!(k, ColumnKind::SensitiveBinary(_)));
        if labels != 1 {
            return Err(Error::SchemaMismatch(format!("expected exactly one label column, found {labels}")));
        }
        if sensitive != 1 {
            return Err(Error::SchemaMismatch(format!(
                "expected exactly one sensitive column, found {sensitive}"
            )));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn label(&self) -> &ColumnSchema {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Label)
            .expect("validated schema has a label")
    }

    pub fn sensitive(&self) -> (&ColumnSchema, &SensitiveRule) {
        self.columns
            .iter()
            .find_map(|c| match &c.kind {
                ColumnKind::SensitiveBinary(rule) => Some((c, rule)),
                _ => None,
            })
            .expect("validated schema has a sensitive column")
    }

    /// Makes `name` the sensitive column. The previous sensitive column
    /// stays in the data as an ordinary feature: categorical if it was
    /// mapped by reference level, numeric if it was split at the median.
    pub fn with_sensitive(mut self, name: &str, rule: SensitiveRule) -> Result<Self> {
        if self.label().name == name {
            return Err(Error::SchemaMismatch(format!("`{name}` is the label, it cannot be sensitive")));
        }
        for c in self.columns.iter_mut() {
            if let ColumnKind::SensitiveBinary(old) = &c.kind {
                c.kind = match old {
                    SensitiveRule::Reference(_) => ColumnKind::Categorical,
                    SensitiveRule::AboveMedian => ColumnKind::Numeric,
                };
            }
        }
        match self.columns.iter_mut().find(|c| c.name == name) {
            Some(c) => c.kind = ColumnKind::SensitiveBinary(rule),
            None => self.columns.push(ColumnSchema {
                name: name.to_string(),
                kind: ColumnKind::SensitiveBinary(rule),
                transform: Transform::None,
            }),
        }
        self.validate()?;
        Ok(self)
    }

    /// The declared per-column transforms, in schema order.
    pub fn transform_spec(&self) -> TransformSpec {
        TransformSpec {
            columns: self
                .columns
                .iter()
                .filter(|c| c.transform != Transform::None)
                .map(|c| (c.name.clone(), c.transform.clone()))
                .collect(),
        }
    }
}

/// Column transforms to apply to a loaded frame.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub columns: Vec<(String, Transform)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_directives_and_columns() {
        let s = Schema::parse(
            "@version = 2\n@delimiter = ;\n@default = drop\n\
             # comment\nsex = sensitive, reference=F\nG3 = label  # target\nrm = numeric, transform=square\n",
        )
        .unwrap();
        assert_eq!(s.delimiter, b';');
        assert_eq!(s.default, DefaultKind::Drop);
        assert_eq!(s.version.as_deref(), Some("2"));
        assert_eq!(s.label().name, "G3");
        assert_eq!(s.sensitive().1, &SensitiveRule::Reference("F".into()));
        assert_eq!(s.transform_spec().columns, vec![("rm".to_string(), Transform::Square)]);
    }

    #[test]
    fn rejects_missing_label_or_sensitive() {
        assert!(Schema::parse("a = sensitive, reference=x\n").is_err());
        assert!(Schema::parse("y = label\n").is_err());
        assert!(Schema::parse("y = label\ny2 = label\na = sensitive, split=median\n").is_err());
    }

    #[test]
    fn sensitive_override_demotes_previous() {
        let s = Schema::parse("y = label\nsex = sensitive, reference=F\nnox = numeric\n").unwrap();
        let s = s.with_sensitive("nox", SensitiveRule::AboveMedian).unwrap();
        assert_eq!(s.sensitive().0.name, "nox");
        assert_eq!(s.column("sex").unwrap().kind, ColumnKind::Categorical);
        let s = s.with_sensitive("school", SensitiveRule::Reference("GP".into())).unwrap();
        assert_eq!(s.column("nox").unwrap().kind, ColumnKind::Numeric);
        assert!(s.with_sensitive("y", SensitiveRule::AboveMedian).is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Schema::parse("y = label\na = sensitive\n").is_err());
        assert!(Schema::parse("y = label\na = sensitive, split=median\nb = weird\n").is_err());
        assert!(Schema::parse("y label\n").is_err());
        assert!(Schema::parse("@colour = red\n").is_err());
    }
}
