//! Runs the policy forward on one state and compares analytic and numeric gradients.

use bqco::policy::gradcheck::{check_gradients, randomize_residuals};
use bqco::policy::{forward, PolicyConfig, PolicyModel};
use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::problems::ObserveOptions;
use bqco::{Problem, ProblemKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bqco::Result<()> {
    let inst = generate(ProblemKind::Cvrp, 8, 1, 0, &GeneratorConfig::default())?;
    let obs = inst.observe(&ObserveOptions::default());
    let cfg = PolicyConfig {
        d_in: obs.features.ncols(),
        d_model: 16,
        heads: 2,
        d_ff: 32,
        layers: 2,
        out: 2,
        graph_conv: false,
    };
    let mut model = PolicyModel::new(cfg, 1)?;
    randomize_residuals(&mut model, &mut ChaCha8Rng::seed_from_u64(1));

    let tape = forward(&model, &[&obs])?;
    for (a, p) in obs.actions.iter().zip(&tape.log_probs[0]).filter(|(_, p)| p.is_finite()) {
        println!("{:>6}  p = {:.3}", a.map(|s| s.to_string()).unwrap_or_default(), p.exp());
    }

    let allowed = obs.allowed_count() as f64;
    let target: Vec<f64> = obs.mask.iter().map(|&m| if m { 1.0 / allowed } else { 0.0 }).collect();
    let r = check_gradients(&model, &[&obs], &[target], 1e-5)?;
    println!("{} parameters, {} checked, max relative error {:.2e}", model.param_count(), r.checked, r.max_rel_error);
    Ok(())
}
