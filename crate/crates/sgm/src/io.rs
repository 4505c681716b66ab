//! Dataset and model files.
//!
//! Datasets are CSV: an optional `#cardinalities:` comment line, a header
//! row of column names, and rows of non-negative category indices. A final
//! column named `class` holds 1-based integer labels. Cardinalities default
//! to 2 when the comment line is absent.
//!
//! Models are JSON documents with node names and cardinalities, edges and
//! strata by name, the equivalent sample size `N`, and optionally the
//! conditional tables of a generating model. A `*` in a stratum context
//! expands over that variable's categories at load time; saving always
//! writes explicit contexts, so load/save round-trips are exact.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::generate::{CliqueSampler, Cpt, GeneratingModel};
use crate::graph::{Edge, UndirectedGraph};
use crate::strata::{common_neighbors, OutcomeSpace, StratifiedGraph, Stratum};

const CARD_PREFIX: &str = "#cardinalities:";
const CLASS_COLUMN: &str = "class";

/// Write a dataset (and labels, when given) as CSV.
pub fn save_dataset(
    path: impl AsRef<Path>,
    data: &DataMatrix,
    labels: Option<&[usize]>,
) -> Result<()> {
    if let Some(labels) = labels {
        if labels.len() != data.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} rows",
                labels.len(),
                data.n_rows()
            )));
        }
    }
    let mut out = String::new();
    let cards: Vec<String> = data.cards().iter().map(|k| k.to_string()).collect();
    out.push_str(CARD_PREFIX);
    out.push(' ');
    out.push_str(&cards.join(","));
    out.push('\n');
    out.push_str(&data.names().join(","));
    if labels.is_some() {
        out.push(',');
        out.push_str(CLASS_COLUMN);
    }
    out.push('\n');
    for (r, row) in data.rows_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = labels {
            cells.push(labels[r].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load a dataset; the label vector is present iff the file has a `class`
/// column. Parse failures report the offending line and column.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<(DataMatrix, Option<LabelVector>)> {
    let file = std::fs::File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let mut cards_decl: Option<Vec<usize>> = None;
    let mut header: Option<(usize, String)> = None;
    for (idx, line) in &mut lines {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix(CARD_PREFIX) {
            let mut cards = Vec::new();
            for cell in rest.split(',') {
                let cell = cell.trim();
                cards.push(cell.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad cardinality '{cell}'"),
                })?);
            }
            cards_decl = Some(cards);
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        header = Some((line_no, trimmed.to_string()));
        break;
    }
    let (header_line, header) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing header row".into(),
    })?;
    let mut names: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    if names.iter().any(|n| n.is_empty()) {
        return Err(Error::Parse {
            line: header_line,
            msg: "empty column name".into(),
        });
    }
    let has_labels = names.last().map(String::as_str) == Some(CLASS_COLUMN);
    if has_labels {
        names.pop();
    }
    if names.is_empty() {
        return Err(Error::Parse {
            line: header_line,
            msg: "no feature columns".into(),
        });
    }
    let cards = match cards_decl {
        Some(cards) => {
            if cards.len() != names.len() {
                return Err(Error::Parse {
                    line: header_line,
                    msg: format!(
                        "{} cardinalities declared for {} feature columns",
                        cards.len(),
                        names.len()
                    ),
                });
            }
            cards
        }
        None => vec![2; names.len()],
    };
    for (c, &k) in cards.iter().enumerate() {
        if k < 2 {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("column '{}': cardinality {k} below 2", names[c]),
            });
        }
    }

    let mut data = DataMatrix::new(names.clone(), cards.clone(), vec![])?;
    let mut labels: LabelVector = Vec::new();
    let expected = names.len() + usize::from(has_labels);
    let mut row_buf = vec![0u8; names.len()];
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cells.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("{} fields, expected {expected}", cells.len()),
            });
        }
        for (c, cell) in cells[..names.len()].iter().enumerate() {
            let value: u8 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("column '{}': invalid value '{cell}'", names[c]),
            })?;
            if value as usize >= cards[c] {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!(
                        "column '{}': value {value} exceeds cardinality {}",
                        names[c], cards[c]
                    ),
                });
            }
            row_buf[c] = value;
        }
        if has_labels {
            let cell = cells[names.len()];
            let label: usize = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("column 'class': invalid label '{cell}'"),
            })?;
            if label == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "column 'class': labels are 1-based".into(),
                });
            }
            labels.push(label);
        }
        data.push_row(&row_buf)?;
    }
    Ok((data, has_labels.then_some(labels)))
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeSpec {
    name: String,
    card: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CtxValue {
    Value(u8),
    Wildcard(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct StratumSpec {
    edge: (String, String),
    contexts: Vec<BTreeMap<String, CtxValue>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CptSpec {
    var: String,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableSpec {
    given: Vec<String>,
    order: Vec<String>,
    cpts: Vec<CptSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    nodes: Vec<NodeSpec>,
    edges: Vec<(String, String)>,
    #[serde(default)]
    strata: Vec<StratumSpec>,
    #[serde(rename = "N")]
    equivalent_sample_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tables: Option<Vec<TableSpec>>,
}

/// A model as stored on disk: a stratified graph over named variables, the
/// prior strength, and optionally the conditional tables of a generator.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub names: Vec<String>,
    pub space: OutcomeSpace,
    pub sg: StratifiedGraph,
    pub equivalent_sample_size: f64,
    pub generator: Option<GeneratingModel>,
}

impl ModelDocument {
    /// Wrap a generating model with default `x1..xd` names.
    pub fn from_generator(gm: &GeneratingModel, equivalent_sample_size: f64) -> Self {
        ModelDocument {
            names: (1..=gm.space().len()).map(|i| format!("x{i}")).collect(),
            space: gm.space().clone(),
            sg: gm.sg().clone(),
            equivalent_sample_size,
            generator: Some(gm.clone()),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let d = self.space.len();
        if self.names.len() != d || self.sg.graph().node_count() != d {
            return Err(Error::InvalidArgument(
                "model document names, space, and graph disagree on size".into(),
            ));
        }
        let nodes: Vec<NodeSpec> = self
            .names
            .iter()
            .zip(self.space.cards())
            .map(|(name, &card)| NodeSpec {
                name: name.clone(),
                card,
            })
            .collect();
        let edges: Vec<(String, String)> = self
            .sg
            .graph()
            .edges()
            .iter()
            .map(|e| {
                let (u, v) = e.endpoints();
                (self.names[u].clone(), self.names[v].clone())
            })
            .collect();
        let strata: Vec<StratumSpec> = self
            .sg
            .strata()
            .map(|(e, contexts)| {
                let (u, v) = e.endpoints();
                let neighbors =
                    common_neighbors(self.sg.graph(), e).expect("stratum edge is in graph");
                StratumSpec {
                    edge: (self.names[u].clone(), self.names[v].clone()),
                    contexts: contexts
                        .iter()
                        .map(|ctx| {
                            neighbors
                                .iter()
                                .zip(ctx)
                                .map(|(&w, &val)| (self.names[w].clone(), CtxValue::Value(val)))
                                .collect()
                        })
                        .collect(),
                }
            })
            .collect();
        let tables = self.generator.as_ref().map(|gm| {
            gm.cliques
                .iter()
                .map(|cs| TableSpec {
                    given: cs.given.iter().map(|&v| self.names[v].clone()).collect(),
                    order: cs.order.iter().map(|&v| self.names[v].clone()).collect(),
                    cpts: cs
                        .order
                        .iter()
                        .zip(&cs.cpts)
                        .map(|(&v, cpt)| CptSpec {
                            var: self.names[v].clone(),
                            rows: cpt.rows.clone(),
                        })
                        .collect(),
                })
                .collect()
        });
        let file = ModelFile {
            nodes,
            edges,
            strata,
            equivalent_sample_size: self.equivalent_sample_size,
            tables,
        };
        let mut writer = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut writer, &file)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let file: ModelFile = serde_json::from_reader(reader)?;

        let names: Vec<String> = file.nodes.iter().map(|n| n.name.clone()).collect();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name, i).is_some() {
                return Err(Error::DataValidation(format!(
                    "duplicate node name '{name}'"
                )));
            }
        }
        let resolve = |name: &str| -> Result<usize> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::DataValidation(format!("unknown node name '{name}'")))
        };
        let space = OutcomeSpace::new(file.nodes.iter().map(|n| n.card).collect())?;

        let mut graph = UndirectedGraph::new(names.len())?;
        for (a, b) in &file.edges {
            graph.add_edge(resolve(a)?, resolve(b)?)?;
        }

        let mut strata = Vec::new();
        for spec in &file.strata {
            let edge = Edge::new(resolve(&spec.edge.0)?, resolve(&spec.edge.1)?)?;
            let neighbors = common_neighbors(&graph, edge)?;
            let mut contexts: Vec<Vec<u8>> = Vec::new();
            for ctx_map in &spec.contexts {
                if ctx_map.len() != neighbors.len() {
                    return Err(Error::DataValidation(format!(
                        "context on edge {}-{} must assign all {} common neighbors",
                        spec.edge.0,
                        spec.edge.1,
                        neighbors.len()
                    )));
                }
                // One slot per common neighbor; None marks a wildcard.
                let mut slots: Vec<Option<u8>> = Vec::with_capacity(neighbors.len());
                for &w in &neighbors {
                    let value = ctx_map.get(&names[w]).ok_or_else(|| {
                        Error::DataValidation(format!(
                            "context on edge {}-{} is missing variable '{}'",
                            spec.edge.0, spec.edge.1, names[w]
                        ))
                    })?;
                    slots.push(match value {
                        CtxValue::Value(v) => Some(*v),
                        CtxValue::Wildcard(s) if s == "*" => None,
                        CtxValue::Wildcard(s) => {
                            return Err(Error::DataValidation(format!(
                                "context value '{s}' is neither an integer nor '*'"
                            )))
                        }
                    });
                }
                expand_wildcards(&slots, &neighbors, &space, &mut contexts);
            }
            strata.push(Stratum::new(edge, contexts));
        }
        let sg = StratifiedGraph::new(graph, strata)?;
        sg.validate_contexts(&space)?;

        let generator = match file.tables {
            None => None,
            Some(tables) => {
                let mut samplers = Vec::with_capacity(tables.len());
                for table in &tables {
                    let given: Vec<usize> = table
                        .given
                        .iter()
                        .map(|n| resolve(n))
                        .collect::<Result<_>>()?;
                    let order: Vec<usize> = table
                        .order
                        .iter()
                        .map(|n| resolve(n))
                        .collect::<Result<_>>()?;
                    if table.cpts.len() != order.len() {
                        return Err(Error::DataValidation(format!(
                            "table with order {:?} has {} CPTs",
                            table.order,
                            table.cpts.len()
                        )));
                    }
                    let cpts = table
                        .cpts
                        .iter()
                        .zip(&order)
                        .map(|(spec, &v)| {
                            if resolve(&spec.var)? != v {
                                return Err(Error::DataValidation(format!(
                                    "CPT for '{}' out of order",
                                    spec.var
                                )));
                            }
                            Ok(Cpt {
                                rows: spec.rows.clone(),
                            })
                        })
                        .collect::<Result<_>>()?;
                    samplers.push(CliqueSampler { given, order, cpts });
                }
                Some(GeneratingModel::from_parts(
                    sg.clone(),
                    space.clone(),
                    samplers,
                )?)
            }
        };

        Ok(ModelDocument {
            names,
            space,
            sg,
            equivalent_sample_size: file.equivalent_sample_size,
            generator,
        })
    }
}

fn expand_wildcards(
    slots: &[Option<u8>],
    neighbors: &[usize],
    space: &OutcomeSpace,
    out: &mut Vec<Vec<u8>>,
) {
    let mut ctx: Vec<u8> = slots.iter().map(|s| s.unwrap_or(0)).collect();
    fn rec(
        slots: &[Option<u8>],
        neighbors: &[usize],
        space: &OutcomeSpace,
        ctx: &mut Vec<u8>,
        from: usize,
        out: &mut Vec<Vec<u8>>,
    ) {
        match slots[from..].iter().position(Option::is_none) {
            None => out.push(ctx.clone()),
            Some(offset) => {
                let slot = from + offset;
                for v in 0..space.card(neighbors[slot]) {
                    ctx[slot] = v as u8;
                    rec(slots, neighbors, space, ctx, slot + 1, out);
                }
            }
        }
    }
    rec(slots, neighbors, space, &mut ctx, 0, out);
}
