use coin_core::check::{
    objective_gradcheck, theory_suite, toy_config, toy_graph, GRADCHECK_TOLERANCE, THEORY_TOLERANCE,
};
use coin_core::trainer::Model;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Gradcheck,
    Theory,
}

/// Runs a suite, printing its report; failures become [`CliError::CheckFailed`].
pub fn run(suite: Suite, instances: usize, corrupt_gradient: bool) -> Result<()> {
    match suite {
        Suite::Gradcheck => {
            let config = toy_config();
            let r = objective_gradcheck(&config, corrupt_gradient)?;
            println!(
                "gradcheck: {} entries, max relative error {:.3e} (tolerance {:.0e})",
                r.entries_checked, r.max_rel_error, GRADCHECK_TOLERANCE
            );
            if r.max_rel_error < GRADCHECK_TOLERANCE {
                return Ok(());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let g = toy_graph();
            let names = Model::new(g.num_u(), g.num_v(), &config, &mut rng)?.dims().layout();
            let (p, e) = r.worst.unwrap_or((0, 0));
            Err(CliError::CheckFailed(format!(
                "gradcheck failed: worst entry {e} of parameter {}",
                names[p].0
            )))
        }
        Suite::Theory => {
            let r = theory_suite(instances, 0, 8)?;
            println!(
                "theory: {} instances, max residual {:.3e} (tolerance {:.0e})",
                r.instances, r.max_residual, THEORY_TOLERANCE
            );
            if r.passed() {
                return Ok(());
            }
            let seeds: Vec<String> = r.failures.iter().map(|(s, _)| s.to_string()).collect();
            Err(CliError::CheckFailed(format!(
                "theory failed for instance seeds {}",
                seeds.join(", ")
            )))
        }
    }
}
