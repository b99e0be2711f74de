//! Elastic-string search for the mountain-pass solution on the canonical
//! instance, followed by an independent verification.
//!
//! ```text
//! RUST_LOG=info cargo run --release --example mountain_pass
//! ```

use schrodinger_poisson::energy::compute_constants;
use schrodinger_poisson::solvers::{find_mountain_pass, verify_solution, MountainPassConfig};
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let grid = Grid3::new(12.0, 48)?;
    let base = builtin_instance("const_K_gaussian_f", grid, 1.5, 1.0)?;
    let lambda0 = compute_constants(&base)?.lambda0;
    let instance = base.with_lambda(0.5 * lambda0)?;

    let report = find_mountain_pass(&instance, &MountainPassConfig::default())?;
    println!(
        "c = {:.9e}  ‖u‖ = {:.6}  |g| = {:.2e}  after {} iterations",
        report.energy, report.h1_norm, report.grad_norm, report.iterations
    );
    for r in report.log.iter().step_by(5) {
        println!("  it {:>3}  J = {:.6e}  |g| = {:.3e}", r.iteration, r.energy, r.grad_norm);
    }
    for c in &report.checks {
        println!("  {:<20} {:<5} {}", c.name, c.passed, c.detail);
    }
    let v = verify_solution(&instance, &report)?;
    println!("verification: strong residual {:.2e}", v.strong_residual);
    for c in &v.checks {
        println!("  {:<20} {:<5} {}", c.name, c.passed, c.detail);
    }
    Ok(())
}
