//! JSON model files.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so a save/load cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptation::{AlphaEntry, AlphaState};
use crate::error::{Error, Result};
use crate::model::{ConvexCpd, Dnm, DnmStructure, LagRef};
use crate::network::{Cpt, Variable, VariableKind};
use crate::preprocess::ColumnCoding;

pub const SCHEMA_VERSION: u32 = 1;

/// Row sums further than this from one are rejected on load.
const LOAD_TOLERANCE: f64 = 1e-6;

/// Everything needed to resume forecasting.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub dnm: Dnm,
    pub alpha: AlphaState,
    /// How raw columns map to states; absent for models built in code.
    pub codings: Option<Vec<ColumnCoding>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    order: usize,
    theta: f64,
    variables: Vec<VariableEntry>,
}

/// A lagged parent by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagEntry {
    pub variable: String,
    pub lag: usize,
}

/// Parent sets of one variable, by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentSpec {
    pub variable: String,
    #[serde(default)]
    pub contemporaneous: Vec<String>,
    #[serde(default)]
    pub lagged: Vec<LagEntry>,
}

/// A hand-written topology, independent of cardinalities and column order.
/// Variables without an entry get no parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub order: usize,
    pub parents: Vec<ParentSpec>,
}

impl StructureSpec {
    pub fn from_structure(s: &DnmStructure) -> Self {
        let name = |i: usize| s.variables()[i].name.clone();
        Self {
            order: s.order(),
            parents: (0..s.n_vars())
                .map(|i| ParentSpec {
                    variable: name(i),
                    contemporaneous: s.contemporaneous(i).iter().map(|&p| name(p)).collect(),
                    lagged: s
                        .lagged(i)
                        .iter()
                        .map(|r| LagEntry {
                            variable: name(r.var),
                            lag: r.lag,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn resolve(&self, variables: Vec<Variable>) -> Result<DnmStructure> {
        let index = |name: &str| {
            variables
                .iter()
                .position(|v| v.name == name)
                .ok_or_else(|| Error::InvalidStructure(format!("unknown variable `{name}`")))
        };
        let mut contemporaneous = vec![Vec::new(); variables.len()];
        let mut lagged = vec![Vec::new(); variables.len()];
        for p in &self.parents {
            let child = index(&p.variable)?;
            if !contemporaneous[child].is_empty() || !lagged[child].is_empty() {
                return Err(Error::InvalidStructure(format!("`{}` listed twice", p.variable)));
            }
            contemporaneous[child] = p.contemporaneous.iter().map(|n| index(n)).collect::<Result<_>>()?;
            lagged[child] = p
                .lagged
                .iter()
                .map(|r| Ok(LagRef::new(index(&r.variable)?, r.lag)))
                .collect::<Result<_>>()?;
        }
        DnmStructure::new(variables, self.order, contemporaneous, lagged)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VariableEntry {
    name: String,
    kind: VariableKind,
    cardinality: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coding: Option<ColumnCoding>,
    representative_values: Vec<f64>,
    marginal: Vec<f64>,
    contemporaneous_parents: Vec<String>,
    lagged_parents: Vec<LagEntry>,
    /// Rows over contemporaneous parent configurations, first parent most significant.
    cpt_contemporaneous: Vec<Vec<f64>>,
    cpt_lagged: Vec<Vec<f64>>,
    alpha: f64,
    dls_a: f64,
    dls_b: f64,
}

pub fn to_json(model: &SavedModel) -> Result<String> {
    let dnm = &model.dnm;
    let s = dnm.structure();
    let names: Vec<&str> = dnm.variables().iter().map(|v| v.name.as_str()).collect();
    if model.alpha.len() != dnm.n_vars() {
        return Err(Error::InvalidModel("alpha state does not match the model".into()));
    }
    let variables = dnm
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let entry = model.alpha.entry(i);
            VariableEntry {
                name: v.name.clone(),
                kind: v.kind,
                cardinality: v.cardinality,
                coding: model.codings.as_ref().map(|c| c[i].clone()),
                representative_values: dnm.representative_values(i).to_vec(),
                marginal: dnm.marginal(i).to_vec(),
                contemporaneous_parents: s.contemporaneous(i).iter().map(|&p| names[p].to_owned()).collect(),
                lagged_parents: s
                    .lagged(i)
                    .iter()
                    .map(|r| LagEntry {
                        variable: names[r.var].to_owned(),
                        lag: r.lag,
                    })
                    .collect(),
                cpt_contemporaneous: dnm.cpd(i).cpt_c.rows().map(<[f64]>::to_vec).collect(),
                cpt_lagged: dnm.cpd(i).cpt_nc.rows().map(<[f64]>::to_vec).collect(),
                alpha: entry.alpha,
                dls_a: entry.a_sum,
                dls_b: entry.b_sum,
            }
        })
        .collect();
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        order: s.order(),
        theta: model.alpha.theta(),
        variables,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(text: &str) -> Result<SavedModel> {
    let version: serde_json::Value = serde_json::from_str(text)?;
    let found = version
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::InvalidModel("missing schema_version".into()))?;
    if found != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            expected: SCHEMA_VERSION,
            found: found.try_into().unwrap_or(u32::MAX),
        });
    }
    let file: ModelFile = serde_json::from_value(version)?;

    let index = |name: &str| {
        file.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::InvalidModel(format!("unknown parent `{name}`")))
    };
    let mut contemporaneous = Vec::new();
    let mut lagged = Vec::new();
    for v in &file.variables {
        contemporaneous.push(v.contemporaneous_parents.iter().map(|p| index(p)).collect::<Result<Vec<_>>>()?);
        lagged.push(
            v.lagged_parents
                .iter()
                .map(|p| Ok(LagRef::new(index(&p.variable)?, p.lag)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let variables: Vec<Variable> = file
        .variables
        .iter()
        .map(|v| Variable::new(v.name.clone(), v.cardinality, v.kind))
        .collect();
    let structure = DnmStructure::new(variables, file.order, contemporaneous, lagged)?;

    let mut cpds = Vec::new();
    let mut marginals = Vec::new();
    let mut values = Vec::new();
    let mut entries = Vec::new();
    let mut codings = Vec::new();
    for (i, v) in file.variables.into_iter().enumerate() {
        let table = |rows: &[Vec<f64>], cards: Vec<usize>, which: &str| -> Result<Cpt> {
            let mut cpt = Cpt::from_rows(v.cardinality, cards, rows)
                .map_err(|e| Error::InvalidModel(format!("`{}` {which} table: {e}", v.name)))?;
            cpt.renormalize(LOAD_TOLERANCE)
                .map_err(|e| Error::InvalidModel(format!("`{}` {which} table: {e}", v.name)))?;
            Ok(cpt)
        };
        let cpt_c = table(&v.cpt_contemporaneous, structure.contemporaneous_cards(i), "contemporaneous")?;
        let cpt_nc = table(&v.cpt_lagged, structure.lagged_cards(i), "lagged")?;
        let mut marginal = Cpt::prior(v.marginal.clone())?;
        marginal
            .renormalize(LOAD_TOLERANCE)
            .map_err(|e| Error::InvalidModel(format!("`{}` marginal: {e}", v.name)))?;
        cpds.push(ConvexCpd::new(cpt_c, cpt_nc, v.alpha)?);
        marginals.push(marginal.probs().to_vec());
        values.push(v.representative_values);
        entries.push(AlphaEntry {
            a_sum: v.dls_a,
            b_sum: v.dls_b,
            alpha: v.alpha,
        });
        codings.push(v.coding);
    }
    let dnm = Dnm::new(structure, cpds, marginals, values)?;
    let alpha = AlphaState::from_entries(entries, file.theta)?;
    let codings = if codings.iter().all(Option::is_some) {
        Some(codings.into_iter().flatten().collect::<Vec<_>>())
    } else if codings.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::InvalidModel("column codings given for only some variables".into()));
    };
    if let Some(cs) = &codings {
        for (c, v) in cs.iter().zip(dnm.variables()) {
            if c.name() != v.name || c.cardinality() != v.cardinality {
                return Err(Error::InvalidModel(format!("coding of `{}` does not match the variable", v.name)));
            }
        }
    }
    Ok(SavedModel { dnm, alpha, codings })
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
