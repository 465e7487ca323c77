//! CSV ingestion and discretization.
//!
//! Continuous channels are cut into equal-frequency bins; each bin is
//! represented by the mean of the training values that fell into it, so
//! forecast distributions can be turned back into real-valued expectations.
//! Categorical channels map labels to state indices through a sorted
//! dictionary. Sensor drift or rescaling is not corrected.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HistoryWindow;
use crate::network::{Variable, VariableKind};

pub const DEFAULT_BINS: usize = 7;

/// Name of the optional leading time column.
pub const TIME_COLUMN: &str = "t";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
        }
    }
}

/// Which columns to read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    /// Exactly these columns, in this order.
    Explicit(Vec<ColumnSchema>),
    /// Every header column except `t`; the named ones are categorical.
    Infer { categorical: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Continuous(_) => ColumnKind::Continuous,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Raw multivariate observations, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    columns: Vec<Column>,
    time: Option<Vec<f64>>,
    len: usize,
}

impl TimeSeriesTable {
    pub fn new(columns: Vec<Column>, time: Option<Vec<f64>>) -> Result<Self> {
        let len = columns.first().map(Column::len).unwrap_or(0);
        if columns.iter().any(|c| c.len() != len) || time.as_ref().is_some_and(|t| t.len() != len) {
            return Err(Error::InvalidArgument("table columns differ in length".into()));
        }
        if let Some(t) = &time {
            if let Some(i) = (1..t.len()).find(|&i| !(t[i] > t[i - 1])) {
                return Err(Error::NonMonotonicTime(i + 1));
            }
        }
        Ok(Self { columns, time, len })
    }

    /// Convenience constructor for continuous columns.
    pub fn from_continuous(columns: Vec<(String, Vec<Option<f64>>)>) -> Result<Self> {
        Self::new(
            columns
                .into_iter()
                .map(|(name, v)| Column {
                    name,
                    data: ColumnData::Continuous(v),
                })
                .collect(),
            None,
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn time(&self) -> Option<&[f64]> {
        self.time.as_deref()
    }

    /// Raw continuous value, or `None` for a missing cell or categorical column.
    pub fn value(&self, t: usize, col: usize) -> Option<f64> {
        match &self.columns[col].data {
            ColumnData::Continuous(v) => v[t],
            ColumnData::Categorical(_) => None,
        }
    }

    /// A copy of rows `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeriesTable {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Continuous(v) => ColumnData::Continuous(v[range.clone()].to_vec()),
                    ColumnData::Categorical(v) => ColumnData::Categorical(v[range.clone()].to_vec()),
                },
            })
            .collect();
        TimeSeriesTable {
            columns,
            time: self.time.as_ref().map(|t| t[range.clone()].to_vec()),
            len: range.len(),
        }
    }
}

pub fn load_csv_path(path: impl AsRef<Path>, schema: &Schema) -> Result<TimeSeriesTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv(file, schema)
}

/// Reads a headered, comma-separated file. Blank cells are missing values.
pub fn load_csv<R: Read>(source: R, schema: &Schema) -> Result<TimeSeriesTable> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let schema: Vec<ColumnSchema> = match schema {
        Schema::Explicit(cols) => cols.clone(),
        Schema::Infer { categorical } => {
            if let Some(unknown) = categorical.iter().find(|c| !header.contains(c)) {
                return Err(Error::UnknownColumn(unknown.clone()));
            }
            header
                .iter()
                .filter(|h| h.as_str() != TIME_COLUMN)
                .map(|h| ColumnSchema {
                    name: h.clone(),
                    kind: if categorical.contains(h) {
                        ColumnKind::Categorical
                    } else {
                        ColumnKind::Continuous
                    },
                })
                .collect()
        }
    };
    let positions = schema
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| *h == c.name)
                .ok_or_else(|| Error::UnknownColumn(c.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let time_pos = header.iter().position(|h| h == TIME_COLUMN);

    let mut continuous: Vec<Vec<Option<f64>>> = vec![Vec::new(); schema.len()];
    let mut categorical: Vec<Vec<Option<String>>> = vec![Vec::new(); schema.len()];
    let mut time = time_pos.map(|_| Vec::new());

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        if let (Some(p), Some(ts)) = (time_pos, time.as_mut()) {
            ts.push(parse_number(&record[p], row, TIME_COLUMN)?.ok_or_else(|| Error::ParseCell {
                row,
                column: TIME_COLUMN.into(),
                value: String::new(),
            })?);
        }
        for (c, (col, &p)) in schema.iter().zip(&positions).enumerate() {
            let cell = &record[p];
            match col.kind {
                ColumnKind::Continuous => continuous[c].push(parse_number(cell, row, &col.name)?),
                ColumnKind::Categorical => {
                    categorical[c].push((!cell.is_empty()).then(|| cell.to_owned()))
                }
            }
        }
    }

    let columns = schema
        .into_iter()
        .zip(continuous.into_iter().zip(categorical))
        .map(|(col, (cont, cat))| Column {
            data: match col.kind {
                ColumnKind::Continuous => ColumnData::Continuous(cont),
                ColumnKind::Categorical => ColumnData::Categorical(cat),
            },
            name: col.name,
        })
        .collect();
    TimeSeriesTable::new(columns, time)
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::ParseCell {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMethod {
    /// Cut points at the `j / n_bins` empirical quantiles.
    #[default]
    Quantile,
    EqualWidth,
}

/// Cut points and representative values for one continuous column.
/// A value `x` falls into the bin given by the number of cut points `< x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub cuts: Vec<f64>,
    pub representatives: Vec<f64>,
}

impl BinSpec {
    pub fn new(cuts: Vec<f64>, representatives: Vec<f64>) -> Result<Self> {
        if cuts.windows(2).any(|w| !(w[0] < w[1])) || cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("cut points must be finite and strictly increasing".into()));
        }
        if representatives.len() != cuts.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} representative values for {} bins",
                representatives.len(),
                cuts.len() + 1
            )));
        }
        Ok(Self { cuts, representatives })
    }

    pub fn bins(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Out-of-range values clamp to the edge bins.
    pub fn state_of(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c < x)
    }
}

/// Bins a column. Missing values stay missing; duplicate cut points are
/// merged, so heavily tied data can yield fewer than `n_bins` states.
pub fn discretize(values: &[Option<f64>], n_bins: usize, method: BinMethod) -> Result<(BinSpec, Vec<Option<usize>>)> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
    }
    let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Err(Error::EmptyColumn(String::new()));
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);

    let raw: Vec<f64> = (1..n_bins)
        .map(|j| match method {
            BinMethod::Quantile => {
                let below = (j * n) / n_bins;
                if below == 0 {
                    min
                } else {
                    0.5 * (sorted[below - 1] + sorted[below])
                }
            }
            BinMethod::EqualWidth => min + (max - min) * j as f64 / n_bins as f64,
        })
        .collect();
    let mut cuts: Vec<f64> = Vec::with_capacity(raw.len());
    for c in raw {
        // a cut at or above the maximum separates nothing
        if c < max && cuts.last().is_none_or(|&last| c > last) {
            cuts.push(c);
        }
    }
    if cuts.len() + 1 < n_bins {
        log::warn!(
            "requested {n_bins} bins but the data only supports {}",
            cuts.len() + 1
        );
    }

    let mut spec = BinSpec {
        representatives: Vec::new(),
        cuts,
    };
    spec.representatives = representative_values(&spec, values);
    let states = values.iter().map(|v| v.map(|x| spec.state_of(x))).collect();
    Ok((spec, states))
}

/// Mean training value of each bin; an empty bin falls back to the midpoint
/// of its cut points, or the nearest cut point for an edge bin.
pub fn representative_values(spec: &BinSpec, training: &[Option<f64>]) -> Vec<f64> {
    let bins = spec.bins();
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for x in training.iter().flatten() {
        let s = spec.state_of(*x);
        sums[s] += x;
        counts[s] += 1;
    }
    (0..bins)
        .map(|b| {
            if counts[b] > 0 {
                sums[b] / counts[b] as f64
            } else if spec.cuts.is_empty() {
                0.0
            } else if b == 0 {
                spec.cuts[0]
            } else if b == bins - 1 {
                spec.cuts[b - 1]
            } else {
                0.5 * (spec.cuts[b - 1] + spec.cuts[b])
            }
        })
        .collect()
}

/// How one table column maps to discrete states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnCoding {
    Binned { name: String, spec: BinSpec },
    Categorical { name: String, labels: Vec<String> },
}

impl ColumnCoding {
    pub fn name(&self) -> &str {
        match self {
            ColumnCoding::Binned { name, .. } | ColumnCoding::Categorical { name, .. } => name,
        }
    }

    pub fn cardinality(&self) -> usize {
        match self {
            ColumnCoding::Binned { spec, .. } => spec.bins(),
            ColumnCoding::Categorical { labels, .. } => labels.len(),
        }
    }

    /// Bin means for binned columns, state indices for categorical ones.
    pub fn representative_values(&self) -> Vec<f64> {
        match self {
            ColumnCoding::Binned { spec, .. } => spec.representatives.clone(),
            ColumnCoding::Categorical { labels, .. } => (0..labels.len()).map(|i| i as f64).collect(),
        }
    }

    pub fn variable(&self) -> Variable {
        let kind = match self {
            ColumnCoding::Binned { .. } => VariableKind::Discretized,
            ColumnCoding::Categorical { .. } => VariableKind::Categorical,
        };
        Variable::new(self.name(), self.cardinality(), kind)
    }

    fn encode(&self, column: &Column) -> Result<Vec<Option<usize>>> {
        match (self, &column.data) {
            (ColumnCoding::Binned { spec, .. }, ColumnData::Continuous(v)) => {
                Ok(v.iter().map(|x| x.map(|x| spec.state_of(x))).collect())
            }
            (ColumnCoding::Categorical { labels, name }, ColumnData::Categorical(v)) => v
                .iter()
                .map(|cell| {
                    cell.as_ref()
                        .map(|label| {
                            labels.binary_search(label).map_err(|_| Error::UnknownLabel {
                                column: name.clone(),
                                label: label.clone(),
                            })
                        })
                        .transpose()
                })
                .collect(),
            _ => Err(Error::InvalidArgument(format!(
                "column `{}` kind does not match its coding",
                column.name
            ))),
        }
    }
}

/// Learns a coding for every column of `table`.
pub fn fit_codings(table: &TimeSeriesTable, n_bins: usize, method: BinMethod) -> Result<Vec<ColumnCoding>> {
    table
        .columns()
        .iter()
        .map(|col| match &col.data {
            ColumnData::Continuous(v) => {
                let (spec, _) = discretize(v, n_bins, method).map_err(|e| match e {
                    Error::EmptyColumn(_) => Error::EmptyColumn(col.name.clone()),
                    other => other,
                })?;
                Ok(ColumnCoding::Binned {
                    name: col.name.clone(),
                    spec,
                })
            }
            ColumnData::Categorical(v) => {
                let mut labels: Vec<String> = v.iter().flatten().cloned().collect();
                labels.sort();
                labels.dedup();
                if labels.is_empty() {
                    return Err(Error::EmptyColumn(col.name.clone()));
                }
                Ok(ColumnCoding::Categorical {
                    name: col.name.clone(),
                    labels,
                })
            }
        })
        .collect()
}

/// Discrete states per time step, with `None` for missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSeries {
    variables: Vec<Variable>,
    rows: Vec<Vec<Option<usize>>>,
}

impl DiscreteSeries {
    pub fn new(variables: Vec<Variable>, rows: Vec<Vec<Option<usize>>>) -> Result<Self> {
        for (t, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(Error::RaggedRow {
                    row: t,
                    expected: variables.len(),
                    found: row.len(),
                });
            }
            for (v, s) in row.iter().enumerate() {
                if let Some(s) = *s {
                    if s >= variables[v].cardinality {
                        return Err(Error::StateOutOfRange {
                            node: variables[v].name.clone(),
                            state: s,
                            cardinality: variables[v].cardinality,
                        });
                    }
                }
            }
        }
        Ok(Self { variables, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn row(&self, t: usize) -> &[Option<usize>] {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[Vec<Option<usize>>] {
        &self.rows
    }

    pub fn state(&self, t: usize, var: usize) -> Option<usize> {
        self.rows[t][var]
    }

    /// The `len` slices ending at `t` inclusive.
    pub fn window(&self, t: usize, len: usize) -> Result<HistoryWindow> {
        if t >= self.rows.len() || t + 1 < len {
            return Err(Error::WindowTooShort {
                needed: len,
                got: (t + 1).min(self.rows.len()),
            });
        }
        Ok(HistoryWindow::new(self.rows[t + 1 - len..=t].to_vec()))
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> DiscreteSeries {
        DiscreteSeries {
            variables: self.variables.clone(),
            rows: self.rows[range].to_vec(),
        }
    }
}

/// Applies codings column by column (matched by name).
pub fn encode(table: &TimeSeriesTable, codings: &[ColumnCoding]) -> Result<DiscreteSeries> {
    let columns = codings
        .iter()
        .map(|c| {
            let col = table
                .column(c.name())
                .ok_or_else(|| Error::UnknownColumn(c.name().to_owned()))?;
            c.encode(col)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..table.len())
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect();
    DiscreteSeries::new(codings.iter().map(ColumnCoding::variable).collect(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn fourteen_values_into_seven_bins() {
        let values = some(&(1..=14).map(f64::from).collect::<Vec<_>>());
        let (spec, states) = discretize(&values, 7, BinMethod::Quantile).unwrap();
        assert_eq!(spec.bins(), 7);
        let mut counts = [0; 7];
        for s in states.iter().flatten() {
            counts[*s] += 1;
        }
        assert_eq!(counts, [2; 7]);
        assert_eq!(spec.representatives[0], 1.5);
    }

    #[test]
    fn constant_column_collapses_to_one_bin() {
        let (spec, states) = discretize(&some(&[3.0; 10]), 7, BinMethod::Quantile).unwrap();
        assert_eq!(spec.bins(), 1);
        assert!(states.iter().all(|s| *s == Some(0)));
        assert_eq!(spec.representatives, vec![3.0]);
    }

    #[test]
    fn out_of_range_values_clamp() {
        let (spec, _) = discretize(&some(&[1.0, 2.0, 3.0, 4.0]), 2, BinMethod::Quantile).unwrap();
        assert_eq!(spec.state_of(-100.0), 0);
        assert_eq!(spec.state_of(100.0), 1);
    }

    #[test]
    fn missing_stays_missing_and_all_missing_errors() {
        let (_, states) = discretize(&[Some(1.0), None, Some(2.0)], 2, BinMethod::Quantile).unwrap();
        assert_eq!(states[1], None);
        assert!(matches!(discretize(&[None, None], 2, BinMethod::Quantile), Err(Error::EmptyColumn(_))));
    }

    #[test]
    fn representative_value_rules() {
        let spec = BinSpec::new(vec![4.0, 6.0], vec![0.0; 3]).unwrap();
        let reps = representative_values(&spec, &some(&[1.0, 3.0, 7.0]));
        assert_eq!(reps, vec![2.0, 5.0, 7.0]);

        let spec = BinSpec::new(vec![4.0], vec![0.0; 2]).unwrap();
        assert_eq!(representative_values(&spec, &some(&[2.0, 2.0, 5.0, 5.0])), vec![2.0, 5.0]);
        assert_eq!(representative_values(&spec, &some(&[2.0, 2.0, 5.0])), vec![2.0, 5.0]);
        let spec = BinSpec::new(vec![10.0], vec![0.0; 2]).unwrap();
        assert_eq!(representative_values(&spec, &some(&[2.0, 2.0, 5.0])), vec![3.0, 10.0]);
    }

    #[test]
    fn csv_loading_and_errors() {
        let text = "t,HR,CV,SaO2,REM\n1,70,5000,96,W\n2,71,,95,R\n";
        let schema = Schema::Infer {
            categorical: vec!["REM".into()],
        };
        let table = load_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.value(1, 1), None);
        assert_eq!(table.value(1, 0), Some(71.0));
        assert_eq!(table.time(), Some(&[1.0, 2.0][..]));

        let bad = "HR,CV\n70,abc\n";
        match load_csv(bad.as_bytes(), &Schema::Infer { categorical: vec![] }) {
            Err(Error::ParseCell { row, column, .. }) => assert_eq!((row, column.as_str()), (1, "CV")),
            other => panic!("{other:?}"),
        }
        let ragged = "HR,CV\n70,1\n71\n";
        assert!(matches!(
            load_csv(ragged.as_bytes(), &Schema::Infer { categorical: vec![] }),
            Err(Error::RaggedRow { row: 2, .. })
        ));
        let unknown = Schema::Explicit(vec![ColumnSchema::continuous("BP")]);
        assert!(matches!(load_csv(text.as_bytes(), &unknown), Err(Error::UnknownColumn(_))));
        let backwards = "t,HR\n2,70\n1,71\n";
        assert!(matches!(
            load_csv(backwards.as_bytes(), &Schema::Infer { categorical: vec![] }),
            Err(Error::NonMonotonicTime(2))
        ));
    }

    #[test]
    fn categorical_coding_round_trip() {
        let text = "REM,HR\nW,1\nR,2\n,3\nW,4\n";
        let table = load_csv(text.as_bytes(), &Schema::Infer { categorical: vec!["REM".into()] }).unwrap();
        let codings = fit_codings(&table, 2, BinMethod::Quantile).unwrap();
        let series = encode(&table, &codings).unwrap();
        assert_eq!(codings[0].cardinality(), 2);
        let rem: Vec<_> = (0..4).map(|t| series.state(t, 0)).collect();
        assert_eq!(rem, vec![Some(1), Some(0), None, Some(1)]);
        assert_eq!(series.window(3, 2).unwrap().len(), 2);
        assert!(series.window(0, 2).is_err());
    }
}
