//! Both solutions through the `solve` driver: summary table, verification
//! and the least-energy selection. Files land in `target/two_solutions`.

use schrodinger_poisson::cli::{run_solve, RunConfig};
use schrodinger_poisson::solvers::Kind;

fn main() -> schrodinger_poisson::Result<()> {
    let cfg = RunConfig { out_dir: "target/two_solutions".into(), ..RunConfig::default() };
    let o = run_solve(&cfg)?;
    println!(
        "lambda0 = {:.6}, rho = {:.6}, level bound = {:.6}",
        o.constants.lambda0, o.constants.rho, o.constants.level_bound
    );
    for r in o.saddle.iter().chain(o.ball.iter()).chain(o.least.iter()) {
        println!(
            "{:<13} J = {:+.9e}  ‖u‖ = {:.6}  converged = {}",
            r.kind.to_string(),
            r.energy,
            r.h1_norm,
            r.converged
        );
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("    failed {}: {}", c.name, c.detail);
        }
    }
    for kind in [Kind::Saddle, Kind::BallMin] {
        if let Some(v) = o.verification(kind) {
            println!("verify {kind}: strong residual {:.2e}, all checks pass: {}", v.strong_residual, v.passed());
        }
    }
    if let Some(s) = o.separation {
        println!("relative separation {s:.4}");
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}
