//! File formats: JSON-lines instance, dataset and result files, TSPLib and
//! CVRPLib readers, gap reports and SVG plots.
//!
//! Every JSON-lines file starts with a [`Header`] line followed by one
//! record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};
use crate::problems::atsp::CostMatrix;
use crate::problems::kp::Item;
use crate::problems::{Knapsack, PathAtsp, PathCvrp, PathOp, PathTsp, ProblemInstance, ProblemKind, Sense, Solution};

pub mod report;
pub mod svg;
pub mod tsplib;

pub use report::{natural_value, signed_gap, summarize, Summary};
pub use svg::{render_svg, write_svg};
pub use tsplib::{euc_2d, parse_cvrplib, parse_tsplib, Tsplib};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Instances,
    Dataset,
    Results,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: FileKind,
    pub version: u32,
    pub problem: ProblemKind,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Free-form provenance such as the generator settings.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

impl Header {
    pub fn new(format: FileKind, problem: ProblemKind, count: usize) -> Self {
        Header { format, version: FORMAT_VERSION, problem, count, n: None, seed: None, meta: serde_json::Value::Null }
    }
}

/// Serializable form of any instance, reduced states included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum InstanceRecord {
    Tsp {
        coords: Vec<[f64; 2]>,
        origin: usize,
        destination: usize,
        active: Vec<usize>,
    },
    Atsp {
        costs: Vec<Vec<f64>>,
        ids: Vec<Vec<f64>>,
        origin: usize,
        destination: usize,
        active: Vec<usize>,
    },
    Cvrp {
        coords: Vec<[f64; 2]>,
        demands: Vec<u32>,
        depot: usize,
        origin: usize,
        capacity: u32,
        remaining: u32,
        active: Vec<usize>,
    },
    Op {
        coords: Vec<[f64; 2]>,
        prizes: Vec<f64>,
        origin: usize,
        destination: usize,
        budget: f64,
        active: Vec<usize>,
    },
    Kp {
        items: Vec<Item>,
        capacity: f64,
        active: Vec<usize>,
    },
}

impl From<&ProblemInstance> for InstanceRecord {
    fn from(inst: &ProblemInstance) -> Self {
        match inst {
            ProblemInstance::Tsp(p) => InstanceRecord::Tsp {
                coords: p.coords().to_vec(),
                origin: p.origin(),
                destination: p.destination(),
                active: p.active().to_vec(),
            },
            ProblemInstance::Atsp(p) => InstanceRecord::Atsp {
                costs: p.costs().rows(),
                ids: p.ids().to_vec(),
                origin: p.origin(),
                destination: p.destination(),
                active: p.active().to_vec(),
            },
            ProblemInstance::Cvrp(p) => InstanceRecord::Cvrp {
                coords: p.coords().to_vec(),
                demands: p.demands().to_vec(),
                depot: p.depot(),
                origin: p.origin(),
                capacity: p.capacity(),
                remaining: p.remaining(),
                active: p.active().to_vec(),
            },
            ProblemInstance::Op(p) => InstanceRecord::Op {
                coords: p.coords().to_vec(),
                prizes: p.prizes().to_vec(),
                origin: p.origin(),
                destination: p.destination(),
                budget: p.budget(),
                active: p.active().to_vec(),
            },
            ProblemInstance::Kp(p) => {
                InstanceRecord::Kp { items: p.items().to_vec(), capacity: p.capacity(), active: p.active().to_vec() }
            }
        }
    }
}

impl TryFrom<InstanceRecord> for ProblemInstance {
    type Error = CopError;

    fn try_from(r: InstanceRecord) -> Result<Self> {
        Ok(match r {
            InstanceRecord::Tsp { coords, origin, destination, active } => {
                PathTsp::with_active(Arc::new(coords), origin, destination, active)?.into()
            }
            InstanceRecord::Atsp { costs, ids, origin, destination, active } => {
                PathAtsp::with_active(Arc::new(CostMatrix::new(costs)?), Arc::new(ids), origin, destination, active)?
                    .into()
            }
            InstanceRecord::Cvrp { coords, demands, depot, origin, capacity, remaining, active } => {
                PathCvrp::with_state(Arc::new(coords), Arc::new(demands), depot, origin, capacity, remaining, active)?
                    .into()
            }
            InstanceRecord::Op { coords, prizes, origin, destination, budget, active } => {
                PathOp::with_state(Arc::new(coords), Arc::new(prizes), origin, destination, budget, active)?.into()
            }
            InstanceRecord::Kp { items, capacity, active } => {
                Knapsack::with_state(Arc::new(items), capacity, active)?.into()
            }
        })
    }
}

/// An instance with an expert solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub instance: InstanceRecord,
    pub solution: Solution,
    /// Cost for minimization problems, collected value for maximization.
    pub value: f64,
    /// False when the exact solver stopped at its search limit.
    pub proven: bool,
}

/// Output of one solver or policy run on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub index: usize,
    pub solution: Solution,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

pub fn write_jsonl<R: Serialize>(path: &Path, header: &Header, records: &[R]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines file, checking its version and, when given, its kind.
pub fn read_jsonl<R: DeserializeOwned>(path: &Path, expect: Option<FileKind>) -> Result<(Header, Vec<R>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| CopError::MalformedSection(format!("{}: empty file", path.display())))??;
    let header: Header = serde_json::from_str(&first)?;
    if header.version != FORMAT_VERSION {
        return Err(CopError::Config(format!("unsupported file version {}", header.version)));
    }
    if let Some(kind) = expect {
        if header.format != kind {
            return Err(CopError::Config(format!("expected a {kind:?} file, found {:?}", header.format)));
        }
    }
    let mut records = Vec::with_capacity(header.count);
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header, records))
}

pub fn write_instances(path: &Path, header: &Header, insts: &[ProblemInstance]) -> Result<()> {
    let records: Vec<InstanceRecord> = insts.iter().map(InstanceRecord::from).collect();
    write_jsonl(path, header, &records)
}

/// Instances of an instance or dataset file.
pub fn read_instances(path: &Path) -> Result<(Header, Vec<ProblemInstance>)> {
    let (header, values): (Header, Vec<serde_json::Value>) = read_jsonl(path, None)?;
    if header.format == FileKind::Results {
        return Err(CopError::Config("a results file holds no instances".into()));
    }
    let insts = values
        .into_iter()
        .map(|v| {
            let rec: InstanceRecord = match header.format {
                FileKind::Instances => serde_json::from_value(v)?,
                _ => serde_json::from_value::<DatasetRecord>(v)?.instance,
            };
            ProblemInstance::try_from(rec)
        })
        .collect::<Result<_>>()?;
    Ok((header, insts))
}

pub fn read_dataset(path: &Path) -> Result<(Header, Vec<(ProblemInstance, DatasetRecord)>)> {
    let (header, records): (Header, Vec<DatasetRecord>) = read_jsonl(path, Some(FileKind::Dataset))?;
    let pairs =
        records.into_iter().map(|r| Ok((ProblemInstance::try_from(r.instance.clone())?, r))).collect::<Result<_>>()?;
    Ok((header, pairs))
}

/// Objective in minimization form from a natural value.
pub fn objective_from_value(kind: ProblemKind, value: f64) -> f64 {
    match kind.sense() {
        Sense::Minimize => value,
        Sense::Maximize => -value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::generate::{generate, GeneratorConfig};
    use crate::problems::Problem;

    #[test]
    fn instance_records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.jsonl");
        for kind in ProblemKind::ALL {
            let insts: Vec<_> = (0..3).map(|i| generate(kind, 6, 9, i, &GeneratorConfig::default()).unwrap()).collect();
            write_instances(&path, &Header::new(FileKind::Instances, kind, 3), &insts).unwrap();
            let (h, back) = read_instances(&path).unwrap();
            assert_eq!(h.problem, kind);
            for (a, b) in insts.iter().zip(&back) {
                assert!(a.same_state(b));
                assert_eq!(InstanceRecord::from(a), InstanceRecord::from(b));
            }
        }
    }

    #[test]
    fn same_content_gives_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GeneratorConfig::default();
        let insts: Vec<_> = (0..4).map(|i| generate(ProblemKind::Cvrp, 8, 1, i, &cfg).unwrap()).collect();
        let h = Header::new(FileKind::Instances, ProblemKind::Cvrp, 4);
        write_instances(&dir.path().join("a"), &h, &insts).unwrap();
        write_instances(&dir.path().join("b"), &h, &insts).unwrap();
        assert_eq!(std::fs::read(dir.path().join("a")).unwrap(), std::fs::read(dir.path().join("b")).unwrap());
    }

    #[test]
    fn wrong_file_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_jsonl::<ResultRecord>(&path, &Header::new(FileKind::Results, ProblemKind::Tsp, 0), &[]).unwrap();
        assert!(read_dataset(&path).is_err());
        assert!(read_instances(&path).is_err());
    }
}
