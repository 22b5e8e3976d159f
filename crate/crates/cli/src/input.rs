//! Population ingestion from CSV or from the built-in generator.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use sampler_core::designs::with_size_constraint;
use sampler_core::{Design, Population, ProbabilityVector};

use crate::args::PopulationArgs;
use crate::failure::{Failure, Outcome};

pub const DEFAULT_GENERATED_SIZE: usize = 8;

/// Where the inclusion probabilities came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PiSource {
    Column { name: String },
    Proportional { column: String, n: f64 },
    Uniform { n: f64 },
}

/// Resolved description of the population, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationConfig {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(rename = "N")]
    pub size: usize,
    pub y_col: String,
    pub pi: PiSource,
    pub aux_cols: Vec<String>,
    /// The π column was added as the only balancing variable.
    pub pi_constraint: bool,
}

pub struct Loaded {
    pub population: Population,
    pub probabilities: ProbabilityVector,
    pub described: PopulationConfig,
}

struct Table {
    names: Vec<String>,
    columns: Vec<Vec<String>>,
    index: HashMap<String, usize>,
}

impl Table {
    fn new(names: Vec<String>, columns: Vec<Vec<String>>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { names, columns, index }
    }

    fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn raw(&self, name: &str) -> Outcome<&[String]> {
        match self.index.get(name) {
            Some(&i) => Ok(&self.columns[i]),
            None => Err(Failure::config(format!(
                "column `{name}` not found; available columns: {}",
                self.names.join(", ")
            ))),
        }
    }

    fn numeric(&self, name: &str) -> Outcome<Vec<f64>> {
        self.raw(name)?
            .iter()
            .enumerate()
            .map(|(row, cell)| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Failure::config(format!("column `{name}`, data row {}: `{cell}` is not a number", row + 1))
                })
            })
            .collect()
    }
}

fn read_csv(path: &Path) -> Outcome<(Table, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let bad = |e: csv::Error| Failure::config(format!("{}: {e}", path.display()));
    let names: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(bad)?;
        for (col, cell) in columns.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    Ok((Table::new(names, columns), digest))
}

/// Synthetic population: `y_k = 0.5 + 0.4 sin k`, `size_k = 1 + (k mod 10)/10`,
/// `x1_k = k / N`, for `k = 1..=N`.
fn generate(size: usize) -> Table {
    let mut columns: Vec<Vec<String>> = (0..4).map(|_| Vec::with_capacity(size)).collect();
    for k in 1..=size {
        let kf = k as f64;
        columns[0].push(k.to_string());
        columns[1].push(format!("{:?}", 0.5 + 0.4 * kf.sin()));
        columns[2].push(format!("{:?}", 1.0 + (k % 10) as f64 / 10.0));
        columns[3].push(format!("{:?}", kf / size as f64));
    }
    Table::new(["id", "y", "size", "x1"].map(String::from).to_vec(), columns)
}

pub fn load(args: &PopulationArgs, design: Design) -> Outcome<Loaded> {
    let (table, source, sha256) = match &args.population {
        Some(path) => {
            if args.population_size.is_some() {
                return Err(Failure::config("--N applies only to the synthetic population"));
            }
            let (table, digest) = read_csv(path)?;
            (table, path.display().to_string(), Some(digest))
        }
        None => {
            let size = args.population_size.unwrap_or(DEFAULT_GENERATED_SIZE);
            (generate(size), "generated".to_string(), None)
        }
    };
    let rows = table.rows();
    if rows == 0 {
        return Err(Failure::config(format!("{source}: no data rows")));
    }

    let y = table.numeric(&args.y_col)?;
    let ids = if table.has(&args.id_col) {
        table.raw(&args.id_col)?.to_vec()
    } else {
        (1..=rows).map(|k| k.to_string()).collect()
    };
    let aux = args
        .aux_cols
        .iter()
        .map(|c| table.numeric(c))
        .collect::<Outcome<Vec<_>>>()?;

    let (pi_source, probabilities) = if let Some(col) = args.pi_col.as_deref().or(
        (args.size_col.is_none() && args.n.is_none() && table.has("pi")).then_some("pi"),
    ) {
        let pv = ProbabilityVector::new(table.numeric(col)?)?;
        (PiSource::Column { name: col.to_string() }, pv)
    } else if let Some(col) = &args.size_col {
        let n = args
            .n
            .ok_or_else(|| Failure::config("--size-col needs the expected sample size --n"))?;
        let sizes = table.numeric(col)?;
        let pv = ProbabilityVector::proportional(&sizes, n)?;
        (PiSource::Proportional { column: col.clone(), n }, pv)
    } else {
        let n = match (args.n, &args.population) {
            (Some(n), _) => n,
            (None, None) => (rows / 2) as f64,
            (None, Some(_)) => {
                return Err(Failure::config(
                    "no inclusion probabilities: pass --pi-col, --size-col with --n, or --n",
                ))
            }
        };
        let pv = if n.fract() == 0.0 && n >= 0.0 {
            ProbabilityVector::uniform(rows, n as usize)?
        } else {
            ProbabilityVector::new(vec![n / rows as f64; rows])?
        };
        (PiSource::Uniform { n }, pv)
    };

    let mut population = Population::new(ids, y, aux)?;
    let pi_constraint = design == Design::Cube && population.q() == 0;
    if pi_constraint {
        population = with_size_constraint(&population, &probabilities)?;
    }
    Ok(Loaded {
        population,
        probabilities,
        described: PopulationConfig {
            source,
            sha256,
            size: rows,
            y_col: args.y_col.clone(),
            pi: pi_source,
            aux_cols: args.aux_cols.clone(),
            pi_constraint,
        },
    })
}
