//! Parses a TSPLib file, solves it exactly and renders the tour as SVG.
//!
//! `cargo run --example tsplib_io -- [file.tsp] [out.svg]`

use bqco::io::svg::write_svg;
use bqco::io::{parse_tsplib, signed_gap};
use bqco::problems::Sense;
use bqco::{PartialSolution, SolutionKind, Step};

const SAMPLE: &str = "NAME : square
TYPE : TSP
DIMENSION : 5
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 10 10
3 10 0
4 0 10
5 5 -3
EOF
";

fn main() -> bqco::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let text = match args.first() {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let t = parse_tsplib(&text)?;
    println!("{} with {} nodes", t.name, t.coords.len());
    let (tour, length) = t.solve_exact()?;
    println!("tour {tour:?} length {length}");
    println!("gap against itself {:.2}%", 100.0 * signed_gap(Sense::Minimize, t.tour_length(&tour), length));
    println!("round trip stable: {}", parse_tsplib(&t.to_text())? == t);

    let inst = t.to_instance()?;
    let partial = PartialSolution::from_steps(SolutionKind::Sequence, tour.iter().skip(1).map(|&n| Step::Node(n)));
    let out = args.get(1).cloned().unwrap_or_else(|| std::env::temp_dir().join("tour.svg").display().to_string());
    write_svg(&inst, &partial, out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
