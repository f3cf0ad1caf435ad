//! Shows the policy input of each problem, with and without a k-nearest restriction.

use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::problems::ObserveOptions;
use bqco::{Problem, ProblemKind};

fn main() -> bqco::Result<()> {
    let gen = GeneratorConfig::default();
    for kind in ProblemKind::ALL {
        let inst = generate(kind, 8, 1, 0, &gen)?;
        let full = inst.observe(&ObserveOptions::default());
        let near = inst.observe(&ObserveOptions { knn: Some(3), ..Default::default() });
        println!(
            "{kind:<5} tokens {:>2} channels {} heads {} allowed {:>2} (k=3: {}) graph weights {}",
            full.tokens(),
            full.features.ncols(),
            full.heads,
            full.allowed_count(),
            near.allowed_count(),
            full.edge_weights.is_some()
        );
    }
    let tsp = generate(ProblemKind::Tsp, 5, 1, 0, &gen)?;
    let obs = tsp.observe(&ObserveOptions::default());
    println!("\ntsp features, origin and destination tokens first:\n{:.3}", obs.features);
    Ok(())
}
