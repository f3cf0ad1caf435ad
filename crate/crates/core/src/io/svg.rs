//! SVG plots of instances and (partial) solutions.

use std::fmt::Write;
use std::path::Path;

use crate::error::Result;
use crate::problems::{Problem, ProblemInstance};
use crate::solution::PartialSolution;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 20.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Node positions, scaled into the drawing area.
fn layout(inst: &ProblemInstance) -> Vec<[f64; 2]> {
    let raw: Vec<[f64; 2]> = match inst {
        ProblemInstance::Tsp(p) => p.coords().to_vec(),
        ProblemInstance::Cvrp(p) => p.coords().to_vec(),
        ProblemInstance::Op(p) => p.coords().to_vec(),
        ProblemInstance::Atsp(p) => {
            let n = p.node_count() as f64;
            (0..p.node_count())
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n;
                    [t.cos(), t.sin()]
                })
                .collect()
        }
        ProblemInstance::Kp(p) => p.items().iter().map(|it| [it.weight, it.value]).collect(),
    };
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &raw {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    raw.iter().map(|c| [MARGIN + (c[0] - lo[0]) * scale, SIZE - MARGIN - (c[1] - lo[1]) * scale]).collect()
}

/// Node sequences drawn as polylines.
fn routes(inst: &ProblemInstance, partial: &PartialSolution) -> Vec<Vec<usize>> {
    if partial.is_empty() {
        return Vec::new();
    }
    let nodes: Vec<usize> = partial.steps().map(|z| z.index()).collect();
    let path = |origin: usize, destination: usize, closed: bool| {
        let mut r = vec![origin];
        r.extend(&nodes);
        if closed {
            r.push(destination);
        }
        vec![r]
    };
    match inst {
        ProblemInstance::Tsp(p) => path(p.origin(), p.destination(), inst.is_complete_after(partial)),
        ProblemInstance::Atsp(p) => path(p.origin(), p.destination(), inst.is_complete_after(partial)),
        ProblemInstance::Op(p) => path(p.origin(), p.destination(), true),
        ProblemInstance::Cvrp(p) => {
            let tours = p.subtours(partial).unwrap_or_default();
            let done = inst.is_complete_after(partial);
            let last = tours.len().saturating_sub(1);
            tours
                .into_iter()
                .enumerate()
                .map(|(t, tour)| {
                    let mut r = vec![if t == 0 { p.origin() } else { p.depot() }];
                    r.extend(tour);
                    if t < last || done {
                        r.push(p.depot());
                    }
                    r
                })
                .collect()
        }
        ProblemInstance::Kp(_) => Vec::new(),
    }
}

trait CompleteAfter {
    fn is_complete_after(&self, partial: &PartialSolution) -> bool;
}

impl CompleteAfter for ProblemInstance {
    fn is_complete_after(&self, partial: &PartialSolution) -> bool {
        self.is_feasible(partial)
    }
}

/// Nodes as circles, endpoints and depot as squares, routes as polylines
/// (one colour per CVRP subtour) and picked knapsack items filled.
pub fn render_svg(inst: &ProblemInstance, partial: &PartialSolution) -> String {
    let pos = layout(inst);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (k, r) in routes(inst, partial).iter().enumerate() {
        let points: Vec<String> = r.iter().map(|&i| format!("{:.2},{:.2}", pos[i][0], pos[i][1])).collect();
        let _ = writeln!(
            s,
            "<polyline class=\"route\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            COLORS[k % COLORS.len()],
            points.join(" ")
        );
    }
    let markers: Vec<usize> = match inst {
        ProblemInstance::Tsp(p) => vec![p.origin(), p.destination()],
        ProblemInstance::Atsp(p) => vec![p.origin(), p.destination()],
        ProblemInstance::Op(p) => vec![p.origin(), p.destination()],
        ProblemInstance::Cvrp(p) => vec![p.origin(), p.depot()],
        ProblemInstance::Kp(_) => Vec::new(),
    };
    let picked: Vec<usize> = match inst {
        ProblemInstance::Kp(_) => partial.steps().map(|z| z.index()).collect(),
        _ => Vec::new(),
    };
    for (i, [x, y]) in pos.iter().enumerate() {
        if markers.contains(&i) {
            let _ = writeln!(
                s,
                "<rect class=\"depot\" x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"black\"/>",
                x - 5.0,
                y - 5.0
            );
        } else {
            let fill = if picked.contains(&i) { "#d62728" } else { "white" };
            let _ = writeln!(
                s,
                "<circle class=\"node\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{fill}\" stroke=\"black\"/>"
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(inst: &ProblemInstance, partial: &PartialSolution, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(inst, partial))?;
    Ok(())
}
