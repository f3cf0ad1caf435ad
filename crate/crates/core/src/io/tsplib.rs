//! TSPLib and CVRPLib files with `EUC_2D` node coordinates.

use std::fmt::Write;

use crate::error::{CopError, Result};
use crate::oracles::held_karp_path;
use crate::problems::{PathCvrp, PathTsp, ProblemInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsplibType {
    Tsp,
    Cvrp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tsplib {
    pub name: String,
    pub comment: Option<String>,
    pub kind: TsplibType,
    /// Node ids as written in the file, in file order.
    pub ids: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
    pub capacity: Option<u32>,
    pub demands: Option<Vec<u32>>,
    /// Depot position in `coords`.
    pub depot: Option<usize>,
}

/// TSPLib `EUC_2D` distance: Euclidean length rounded to the nearest integer.
pub fn euc_2d(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).hypot(a[1] - b[1]) + 0.5).floor()
}

fn malformed(msg: impl Into<String>) -> CopError {
    CopError::MalformedSection(msg.into())
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| malformed(format!("bad or missing {what}")))
}

enum Section {
    Spec,
    Coords,
    Demands,
    Depots,
}

pub fn parse_tsplib(text: &str) -> Result<Tsplib> {
    let mut name = String::new();
    let mut comment = None;
    let mut kind = None;
    let mut dimension: Option<usize> = None;
    let mut capacity = None;
    let mut weight_type = None;
    let mut nodes: Vec<(usize, [f64; 2])> = Vec::new();
    let mut demands: Vec<(usize, u32)> = Vec::new();
    let mut depots: Vec<usize> = Vec::new();
    let mut section = Section::Spec;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "EOF" => break,
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            _ if line.ends_with("_SECTION") => return Err(malformed(format!("unsupported section {line}"))),
            _ => {}
        }
        let mut tok = line.split_whitespace();
        match section {
            Section::Spec => {
                let (key, value) =
                    line.split_once(':').ok_or_else(|| malformed(format!("expected KEY : VALUE, got {line}")))?;
                let value = value.trim();
                match key.trim() {
                    "NAME" => name = value.to_string(),
                    "COMMENT" => comment = Some(value.to_string()),
                    "TYPE" => {
                        kind = Some(match value {
                            "TSP" => TsplibType::Tsp,
                            "CVRP" => TsplibType::Cvrp,
                            other => return Err(malformed(format!("unsupported TYPE {other}"))),
                        })
                    }
                    "DIMENSION" => dimension = Some(num(Some(value), "DIMENSION")?),
                    "CAPACITY" => capacity = Some(num(Some(value), "CAPACITY")?),
                    "EDGE_WEIGHT_TYPE" => {
                        if value != "EUC_2D" {
                            return Err(CopError::UnsupportedEdgeWeightType(value.to_string()));
                        }
                        weight_type = Some(value.to_string());
                    }
                    _ => {}
                }
            }
            Section::Coords => {
                let id = num(tok.next(), "node id")?;
                let x = num(tok.next(), "x coordinate")?;
                let y = num(tok.next(), "y coordinate")?;
                nodes.push((id, [x, y]));
            }
            Section::Demands => demands.push((num(tok.next(), "node id")?, num(tok.next(), "demand")?)),
            Section::Depots => {
                let id: i64 = num(tok.next(), "depot id")?;
                if id >= 0 {
                    depots.push(id as usize);
                }
            }
        }
    }
    let kind = kind.ok_or_else(|| malformed("missing TYPE"))?;
    if weight_type.is_none() {
        return Err(malformed("missing EDGE_WEIGHT_TYPE"));
    }
    let dimension = dimension.ok_or_else(|| malformed("missing DIMENSION"))?;
    if nodes.len() != dimension {
        return Err(malformed(format!("NODE_COORD_SECTION has {} nodes, DIMENSION is {dimension}", nodes.len())));
    }
    let ids: Vec<usize> = nodes.iter().map(|n| n.0).collect();
    let position =
        |id: usize| ids.iter().position(|&i| i == id).ok_or_else(|| malformed(format!("unknown node id {id}")));
    let (demands, depot) = match kind {
        TsplibType::Tsp => (None, None),
        TsplibType::Cvrp => {
            if capacity.is_none() {
                return Err(malformed("missing CAPACITY"));
            }
            if demands.len() != dimension {
                return Err(malformed(format!(
                    "DEMAND_SECTION has {} entries, DIMENSION is {dimension}",
                    demands.len()
                )));
            }
            let mut d = vec![0; dimension];
            for (id, q) in demands {
                d[position(id)?] = q;
            }
            let depot = match depots.as_slice() {
                [one] => position(*one)?,
                [] => return Err(malformed("missing DEPOT_SECTION")),
                _ => return Err(malformed("only single-depot instances are supported")),
            };
            (Some(d), Some(depot))
        }
    };
    Ok(Tsplib {
        name,
        comment,
        kind,
        ids,
        coords: nodes.into_iter().map(|n| n.1).collect(),
        capacity: if kind == TsplibType::Cvrp { capacity } else { None },
        demands,
        depot,
    })
}

/// Parses a CVRPLib file; the file must describe a CVRP.
pub fn parse_cvrplib(text: &str) -> Result<Tsplib> {
    let t = parse_tsplib(text)?;
    if t.kind != TsplibType::Cvrp {
        return Err(malformed("expected TYPE : CVRP"));
    }
    Ok(t)
}

impl Tsplib {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME : {}", self.name);
        if let Some(c) = &self.comment {
            let _ = writeln!(s, "COMMENT : {c}");
        }
        let kind = match self.kind {
            TsplibType::Tsp => "TSP",
            TsplibType::Cvrp => "CVRP",
        };
        let _ = writeln!(s, "TYPE : {kind}");
        let _ = writeln!(s, "DIMENSION : {}", self.coords.len());
        if let Some(c) = self.capacity {
            let _ = writeln!(s, "CAPACITY : {c}");
        }
        s.push_str("EDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n");
        for (id, [x, y]) in self.ids.iter().zip(&self.coords) {
            let _ = writeln!(s, "{id} {x} {y}");
        }
        if let Some(d) = &self.demands {
            s.push_str("DEMAND_SECTION\n");
            for (id, q) in self.ids.iter().zip(d) {
                let _ = writeln!(s, "{id} {q}");
            }
        }
        if let Some(depot) = self.depot {
            let _ = writeln!(s, "DEPOT_SECTION\n{}\n-1", self.ids[depot]);
        }
        s.push_str("EOF\n");
        s
    }

    /// Closed tour from the first node (TSP) or a CVRP from the depot, on
    /// the raw coordinates.
    pub fn to_instance(&self) -> Result<ProblemInstance> {
        Ok(match self.kind {
            TsplibType::Tsp => PathTsp::closed(self.coords.clone(), 0)?.into(),
            TsplibType::Cvrp => PathCvrp::new(
                self.coords.clone(),
                self.demands.clone().expect("parsed CVRP has demands"),
                self.depot.expect("parsed CVRP has a depot"),
                self.capacity.expect("parsed CVRP has a capacity"),
            )?
            .into(),
        })
    }

    /// `EUC_2D` length of a closed tour over node positions.
    pub fn tour_length(&self, tour: &[usize]) -> f64 {
        let n = tour.len();
        (0..n).map(|i| euc_2d(self.coords[tour[i]], self.coords[tour[(i + 1) % n]])).sum()
    }

    /// Optimal closed tour under `EUC_2D` distances, starting at node 0.
    pub fn solve_exact(&self) -> Result<(Vec<usize>, f64)> {
        let nodes: Vec<usize> = (1..self.coords.len()).collect();
        let (order, len) = held_karp_path(0, 0, &nodes, |a, b| euc_2d(self.coords[a], self.coords[b]))?;
        Ok((std::iter::once(0).chain(order).collect(), len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "NAME : tri3\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 0.5 7.25\nEOF\n";

    #[test]
    fn three_four_five() {
        assert_eq!(euc_2d([0.0, 0.0], [3.0, 4.0]), 5.0);
        assert_eq!(euc_2d([0.0, 0.0], [1.0, 1.0]), 1.0);
        assert_eq!(euc_2d([0.0, 0.0], [1.5, 0.0]), 2.0);
    }

    #[test]
    fn coordinates_round_trip() {
        let t = parse_tsplib(TRIANGLE).unwrap();
        assert_eq!(t.coords, vec![[0.0, 0.0], [3.0, 4.0], [0.5, 7.25]]);
        let again = parse_tsplib(&t.to_text()).unwrap();
        assert_eq!(again, t);
        assert_eq!(again.to_text(), t.to_text());
    }

    #[test]
    fn other_weight_types_fail() {
        let text = TRIANGLE.replace("EUC_2D", "GEO");
        assert!(matches!(parse_tsplib(&text), Err(CopError::UnsupportedEdgeWeightType(t)) if t == "GEO"));
    }

    #[test]
    fn short_coordinate_section_fails() {
        let text = TRIANGLE.replace("DIMENSION : 3", "DIMENSION : 4");
        assert!(matches!(parse_tsplib(&text), Err(CopError::MalformedSection(_))));
    }

    #[test]
    fn cvrplib_depot_maps_to_instance() {
        let text = "NAME : small\nTYPE : CVRP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 10\n\
                    NODE_COORD_SECTION\n1 5 5\n2 0 0\n3 9 9\nDEMAND_SECTION\n1 3\n2 0\n3 4\nDEPOT_SECTION\n 2\n -1\nEOF\n";
        let t = parse_cvrplib(text).unwrap();
        assert_eq!(t.depot, Some(1));
        let ProblemInstance::Cvrp(p) = t.to_instance().unwrap() else { panic!() };
        assert_eq!(p.depot(), 1);
        assert_eq!(p.active(), &[0, 2]);
        assert_eq!(p.capacity(), 10);
    }
}
