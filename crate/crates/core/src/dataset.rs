//! Tabular data: schema, CSV ingestion and vertical partitioning.
//!
//! A dataset has `M` columns; the first `M - 1` are input features and the
//! last is the target. [`vertical_partition`] turns it into `M - 1`
//! [`FeatureSubset`]s, each pairing one feature column with the target
//! column. A subset is the unit that gets allocated to simulated nodes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Category code used for a value that is not in an open vocabulary.
pub const UNSEEN_CATEGORY: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Continuous,
}

/// One input column. `values` is the vocabulary of a categorical feature;
/// when `open` is set, values not listed are appended at load time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub open: bool,
}

/// The target column. A categorical target makes a classification problem,
/// a continuous one a regression problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub open: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureDescriptor>,
    pub target: TargetDescriptor,
}

#[derive(Deserialize)]
struct RawFeature {
    name: String,
    kind: FeatureKind,
    values: Option<Vec<String>>,
    open: Option<bool>,
}

#[derive(Deserialize)]
struct RawTarget {
    name: String,
    kind: FeatureKind,
    classes: Option<Vec<String>>,
    open: Option<bool>,
}

#[derive(Deserialize)]
struct RawSchema {
    features: Vec<RawFeature>,
    target: RawTarget,
}

impl Schema {
    /// Parses the JSON sidecar format. A categorical feature without a
    /// `values` list (or a target without `classes`) has an open vocabulary.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSchema = serde_json::from_str(text)?;
        let features = raw
            .features
            .into_iter()
            .map(|f| {
                let open = f.open.unwrap_or(f.values.is_none());
                FeatureDescriptor {
                    name: f.name,
                    kind: f.kind,
                    values: f.values.unwrap_or_default(),
                    open: open && f.kind == FeatureKind::Categorical,
                }
            })
            .collect();
        let target = TargetDescriptor {
            open: raw.target.open.unwrap_or(raw.target.classes.is_none())
                && raw.target.kind == FeatureKind::Categorical,
            name: raw.target.name,
            kind: raw.target.kind,
            classes: raw.target.classes.unwrap_or_default(),
        };
        let schema = Schema { features, target };
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        let names = self
            .features
            .iter()
            .map(|f| &f.name)
            .chain(std::iter::once(&self.target.name));
        for name in names {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(Error::Schema(format!("duplicate column name {name:?}")));
            }
        }
        for f in &self.features {
            if f.kind == FeatureKind::Continuous && !f.values.is_empty() {
                return Err(Error::Schema(format!(
                    "continuous feature {:?} cannot declare values",
                    f.name
                )));
            }
            check_vocabulary(&f.name, &f.values)?;
        }
        if self.target.kind == FeatureKind::Categorical {
            check_vocabulary(&self.target.name, &self.target.classes)?;
            if self.target.classes.is_empty() && !self.target.open {
                return Err(Error::Schema("classification target needs classes".into()));
            }
        }
        Ok(())
    }

    /// Number of input features (`M - 1`).
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Column count including the target (`M`).
    pub fn n_columns(&self) -> usize {
        self.features.len() + 1
    }

    /// The target is always the last column.
    pub fn target_index(&self) -> usize {
        self.features.len()
    }

    pub fn is_classification(&self) -> bool {
        self.target.kind == FeatureKind::Categorical
    }

    pub fn n_classes(&self) -> usize {
        self.target.classes.len()
    }

    pub fn feature_kind(&self, j: usize) -> FeatureKind {
        self.features[j].kind
    }

    pub fn class_label(&self, code: u32) -> &str {
        &self.target.classes[code as usize]
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.features
            .iter()
            .map(|f| f.name.as_str())
            .chain(std::iter::once(self.target.name.as_str()))
            .collect()
    }

    /// Structural equality ignoring vocabulary contents: same names, kinds
    /// and target kind.
    pub fn same_layout(&self, other: &Schema) -> bool {
        self.features.len() == other.features.len()
            && self
                .features
                .iter()
                .zip(&other.features)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
            && self.target.name == other.target.name
            && self.target.kind == other.target.kind
    }

    /// Parses one categorical or continuous cell of feature `j`. Unknown
    /// categories are rejected for closed vocabularies and mapped to
    /// [`UNSEEN_CATEGORY`] for open ones.
    pub fn parse_feature(&self, j: usize, raw: &str) -> Result<Value, String> {
        let f = &self.features[j];
        match f.kind {
            FeatureKind::Continuous => parse_number(&f.name, raw).map(Value::Number),
            FeatureKind::Categorical => match f.values.iter().position(|v| v == raw) {
                Some(code) => Ok(Value::Category(code as u32)),
                None if f.open => Ok(Value::Category(UNSEEN_CATEGORY)),
                None => Err(format!("unknown value {raw:?} for feature {:?}", f.name)),
            },
        }
    }
}

fn check_vocabulary(name: &str, values: &[String]) -> Result<()> {
    let mut seen = HashMap::new();
    for v in values {
        if seen.insert(v.as_str(), ()).is_some() {
            return Err(Error::Schema(format!("duplicate value {v:?} in {name:?}")));
        }
    }
    Ok(())
}

fn parse_number(column: &str, raw: &str) -> Result<f64, String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(format!("missing value in column {column:?}"));
    }
    match trimmed.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(format!("non-finite number {raw:?} in column {column:?}")),
        Err(_) => Err(format!("unparsable number {raw:?} in column {column:?}")),
    }
}

/// A single cell: a category code into the feature's vocabulary or a number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Category(u32),
    Number(f64),
}

impl Value {
    pub fn as_category(self) -> Option<u32> {
        match self {
            Value::Category(c) => Some(c),
            Value::Number(_) => None,
        }
    }

    pub fn as_number(self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(x),
            Value::Category(_) => None,
        }
    }
}

/// Feature values of one record, in schema order, without the target.
pub type Sample = Vec<Value>;

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Categorical(Vec<u32>),
    Continuous(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Column::Categorical(_) => FeatureKind::Categorical,
            Column::Continuous(_) => FeatureKind::Continuous,
        }
    }

    pub fn get(&self, i: usize) -> Value {
        match self {
            Column::Categorical(v) => Value::Category(v[i]),
            Column::Continuous(v) => Value::Number(v[i]),
        }
    }
}

/// Target column: class codes for classification, numbers for regression.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Classes(Vec<u32>),
    Values(Vec<f64>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Classes(v) => v.len(),
            Target::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Value {
        match self {
            Target::Classes(v) => Value::Category(v[i]),
            Target::Values(v) => Value::Number(v[i]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
    target: Arc<Target>,
}

impl Dataset {
    /// Builds a dataset from already-encoded columns, checking lengths,
    /// kinds, category codes and finiteness.
    pub fn from_columns(schema: Schema, columns: Vec<Column>, target: Target) -> Result<Self> {
        schema.validate()?;
        if columns.len() != schema.n_features() {
            return Err(Error::Dataset(format!(
                "{} feature columns for {} schema features",
                columns.len(),
                schema.n_features()
            )));
        }
        let n = target.len();
        for (j, (col, desc)) in columns.iter().zip(&schema.features).enumerate() {
            if col.len() != n {
                return Err(Error::Dataset(format!(
                    "column {j} has {} rows, target has {n}",
                    col.len()
                )));
            }
            if col.kind() != desc.kind {
                return Err(Error::Dataset(format!("column {j} kind differs from schema")));
            }
            match col {
                Column::Categorical(codes) => {
                    if let Some(c) = codes.iter().find(|&&c| c as usize >= desc.values.len()) {
                        return Err(Error::Dataset(format!(
                            "column {j} has code {c} outside its vocabulary"
                        )));
                    }
                }
                Column::Continuous(xs) => {
                    if xs.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Dataset(format!("column {j} has a non-finite value")));
                    }
                }
            }
        }
        match (&target, schema.target.kind) {
            (Target::Classes(codes), FeatureKind::Categorical) => {
                if codes.iter().any(|&c| c as usize >= schema.n_classes()) {
                    return Err(Error::Dataset("target code outside class list".into()));
                }
            }
            (Target::Values(ys), FeatureKind::Continuous) => {
                if ys.iter().any(|y| !y.is_finite()) {
                    return Err(Error::Dataset("non-finite target value".into()));
                }
            }
            _ => return Err(Error::Dataset("target kind differs from schema".into())),
        }
        Ok(Dataset {
            schema,
            columns,
            target: Arc::new(target),
        })
    }

    /// Parses string records (features then target, in schema order).
    /// Open vocabularies grow in first-appearance order. Row numbers in
    /// errors are 1-based data rows.
    pub fn from_records<I, R, S>(schema: &Schema, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut schema = schema.clone();
        let m = schema.n_columns();
        let mut columns: Vec<Column> = schema
            .features
            .iter()
            .map(|f| match f.kind {
                FeatureKind::Categorical => Column::Categorical(Vec::new()),
                FeatureKind::Continuous => Column::Continuous(Vec::new()),
            })
            .collect();
        let mut target = match schema.target.kind {
            FeatureKind::Categorical => Target::Classes(Vec::new()),
            FeatureKind::Continuous => Target::Values(Vec::new()),
        };
        let mut vocab: Vec<HashMap<String, u32>> = schema
            .features
            .iter()
            .map(|f| {
                f.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.clone(), i as u32))
                    .collect()
            })
            .collect();
        let mut classes: HashMap<String, u32> = schema
            .target
            .classes
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect();

        for (idx, record) in records.into_iter().enumerate() {
            let row = idx + 1;
            let cells = record.as_ref();
            if cells.len() != m {
                return Err(Error::MalformedRow {
                    row,
                    reason: format!("expected {m} values, found {}", cells.len()),
                });
            }
            for (j, column) in columns.iter_mut().enumerate() {
                let raw = cells[j].as_ref();
                let desc = &mut schema.features[j];
                match column {
                    Column::Continuous(xs) => {
                        let x = parse_number(&desc.name, raw)
                            .map_err(|reason| Error::MalformedRow { row, reason })?;
                        xs.push(x);
                    }
                    Column::Categorical(codes) => {
                        let code = intern(&mut vocab[j], &mut desc.values, desc.open, raw)
                            .map_err(|reason| Error::MalformedRow {
                                row,
                                reason: format!("{reason} for feature {:?}", desc.name),
                            })?;
                        codes.push(code);
                    }
                }
            }
            let raw = cells[m - 1].as_ref();
            let t = &mut schema.target;
            match &mut target {
                Target::Values(ys) => {
                    let y = parse_number(&t.name, raw)
                        .map_err(|reason| Error::MalformedRow { row, reason })?;
                    ys.push(y);
                }
                Target::Classes(codes) => {
                    let code = intern(&mut classes, &mut t.classes, t.open, raw).map_err(
                        |reason| Error::MalformedRow {
                            row,
                            reason: format!("{reason} for target {:?}", t.name),
                        },
                    )?;
                    codes.push(code);
                }
            }
        }
        Dataset::from_columns(schema, columns, target)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Number of records (`N`).
    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    /// Number of columns including the target (`M`).
    pub fn n_columns(&self) -> usize {
        self.schema.n_columns()
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn shared_target(&self) -> Arc<Target> {
        Arc::clone(&self.target)
    }

    pub fn sample(&self, i: usize) -> Sample {
        self.columns.iter().map(|c| c.get(i)).collect()
    }

    pub fn samples(&self) -> Vec<Sample> {
        (0..self.n_rows()).map(|i| self.sample(i)).collect()
    }
}

fn intern(
    lookup: &mut HashMap<String, u32>,
    values: &mut Vec<String>,
    open: bool,
    raw: &str,
) -> Result<u32, String> {
    if raw.is_empty() {
        return Err("missing value".into());
    }
    if let Some(&code) = lookup.get(raw) {
        return Ok(code);
    }
    if !open {
        return Err(format!("unknown value {raw:?}"));
    }
    let code = values.len() as u32;
    values.push(raw.to_string());
    lookup.insert(raw.to_string(), code);
    Ok(code)
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn header_of<R: Read>(reader: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(reader.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

/// Reads a CSV with a header row matching the schema's column names.
pub fn read_csv<R: Read>(input: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv_reader(input);
    let header = header_of(&mut reader)?;
    let expected = schema.column_names();
    if header != expected {
        return Err(Error::HeaderMismatch {
            expected: expected.join(","),
            found: header.join(","),
        });
    }
    let mut records = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedRow {
            row: idx + 1,
            reason: e.to_string(),
        })?;
        records.push(record.iter().map(str::to_string).collect::<Vec<_>>());
    }
    Dataset::from_records(schema, records)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Samples to predict, with the true target when the file carried it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub truth: Option<Vec<Value>>,
}

/// Reads prediction input. The header must list the schema's features,
/// optionally followed by the target column. An empty input yields an empty
/// set.
pub fn read_samples<R: Read>(input: R, schema: &Schema) -> Result<SampleSet> {
    let mut reader = csv_reader(input);
    let header = header_of(&mut reader)?;
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Ok(SampleSet::default());
    }
    let names = schema.column_names();
    let features = &names[..names.len() - 1];
    let with_target = if header == names {
        true
    } else if header == features {
        false
    } else {
        return Err(Error::SchemaMismatch(format!(
            "header [{}] does not match model features [{}]",
            header.join(","),
            features.join(",")
        )));
    };
    let mut set = SampleSet {
        samples: Vec::new(),
        truth: with_target.then(Vec::new),
    };
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {} values, found {}", header.len(), record.len()),
            });
        }
        let sample = (0..schema.n_features())
            .map(|j| schema.parse_feature(j, &record[j]))
            .collect::<Result<Sample, String>>()
            .map_err(|reason| Error::MalformedRow { row, reason })?;
        set.samples.push(sample);
        if let Some(truth) = set.truth.as_mut() {
            let raw = &record[schema.n_features()];
            let t = &schema.target;
            let value = match t.kind {
                FeatureKind::Continuous => Value::Number(
                    parse_number(&t.name, raw).map_err(|reason| Error::MalformedRow { row, reason })?,
                ),
                FeatureKind::Categorical => Value::Category(
                    t.classes
                        .iter()
                        .position(|c| c == raw)
                        .map(|c| c as u32)
                        .unwrap_or(UNSEEN_CATEGORY),
                ),
            };
            truth.push(value);
        }
    }
    Ok(set)
}

pub fn load_samples(path: impl AsRef<Path>, schema: &Schema) -> Result<SampleSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(file, schema)
}

/// Checks that a sample has the schema's arity and per-feature kinds.
pub fn check_sample(schema: &Schema, sample: &[Value]) -> Result<()> {
    if sample.len() != schema.n_features() {
        return Err(Error::SchemaMismatch(format!(
            "sample has {} values, schema has {} features",
            sample.len(),
            schema.n_features()
        )));
    }
    for (j, (v, f)) in sample.iter().zip(&schema.features).enumerate() {
        let ok = match (v, f.kind) {
            (Value::Category(c), FeatureKind::Categorical) => {
                (*c as usize) < f.values.len() || *c == UNSEEN_CATEGORY
            }
            (Value::Number(x), FeatureKind::Continuous) => x.is_finite(),
            _ => false,
        };
        if !ok {
            return Err(Error::SchemaMismatch(format!("feature {j} ({:?}) value {v:?}", f.name)));
        }
    }
    Ok(())
}

/// Fixed bytes at the start of a serialized feature subset: magic (2),
/// feature kind (1), target kind (1), feature index (u32), entry count (u64).
pub const SUBSET_HEADER_BYTES: u64 = 16;
const SUBSET_MAGIC: &[u8; 2] = b"FS";

/// Serialized size of one entry: row index (u64), feature value (u32 code
/// or f64), target value (u32 class or f64).
pub fn entry_bytes(feature: FeatureKind, target: FeatureKind) -> u64 {
    let width = |k: FeatureKind| match k {
        FeatureKind::Categorical => 4,
        FeatureKind::Continuous => 8,
    };
    8 + width(feature) + width(target)
}

/// Serialized size of a subset of `rows` entries with the given kinds.
pub fn subset_size_for(feature: FeatureKind, target: FeatureKind, rows: u64) -> u64 {
    SUBSET_HEADER_BYTES + rows * entry_bytes(feature, target)
}

/// One entry `<i, y_ij, y_i(M-1)>` of a feature subset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub value: Value,
    pub target: Value,
}

/// One feature column paired with the target column. Entries are implicitly
/// in ascending row order and cover every row of the source dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSubset {
    feature_index: usize,
    column: Column,
    target: Arc<Target>,
}

impl FeatureSubset {
    pub fn new(feature_index: usize, column: Column, target: Arc<Target>) -> Result<Self> {
        if column.len() != target.len() {
            return Err(Error::Dataset(format!(
                "subset {feature_index}: {} feature values for {} targets",
                column.len(),
                target.len()
            )));
        }
        Ok(FeatureSubset {
            feature_index,
            column,
            target,
        })
    }

    pub fn feature_index(&self) -> usize {
        self.feature_index
    }

    pub fn kind(&self) -> FeatureKind {
        self.column.kind()
    }

    pub fn n_rows(&self) -> usize {
        self.column.len()
    }

    pub fn column(&self) -> &Column {
        &self.column
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn entry(&self, row: usize) -> Entry {
        Entry {
            row,
            value: self.column.get(row),
            target: self.target.get(row),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = Entry> + '_ {
        (0..self.n_rows()).map(|i| self.entry(i))
    }

    fn target_kind(&self) -> FeatureKind {
        match *self.target {
            Target::Classes(_) => FeatureKind::Categorical,
            Target::Values(_) => FeatureKind::Continuous,
        }
    }

    /// Serialized size in bytes; equals the length written by
    /// [`FeatureSubset::write_to`].
    pub fn size_bytes(&self) -> u64 {
        subset_size_for(self.kind(), self.target_kind(), self.n_rows() as u64)
    }

    /// Little-endian binary serialization: header then one fixed-width
    /// record per entry.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let kind_byte = |k: FeatureKind| match k {
            FeatureKind::Categorical => 0u8,
            FeatureKind::Continuous => 1u8,
        };
        out.write_all(SUBSET_MAGIC)?;
        out.write_all(&[kind_byte(self.kind()), kind_byte(self.target_kind())])?;
        out.write_all(&(self.feature_index as u32).to_le_bytes())?;
        out.write_all(&(self.n_rows() as u64).to_le_bytes())?;
        for e in self.entries() {
            out.write_all(&(e.row as u64).to_le_bytes())?;
            for v in [e.value, e.target] {
                match v {
                    Value::Category(c) => out.write_all(&c.to_le_bytes())?,
                    Value::Number(x) => out.write_all(&x.to_le_bytes())?,
                }
            }
        }
        Ok(())
    }
}

pub fn subset_size_bytes(fs: &FeatureSubset) -> u64 {
    fs.size_bytes()
}

/// Splits the dataset by columns into `M - 1` feature subsets, subset `j`
/// holding `<i, y_ij, y_i(M-1)>` for every row `i`.
pub fn vertical_partition(d: &Dataset) -> Result<Vec<FeatureSubset>> {
    if d.n_columns() < 2 {
        return Err(Error::InvalidArgument(
            "vertical partition needs at least one input feature".into(),
        ));
    }
    d.columns
        .iter()
        .enumerate()
        .map(|(j, col)| FeatureSubset::new(j, col.clone(), d.shared_target()))
        .collect()
}
