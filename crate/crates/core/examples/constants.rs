//! Closed-form constants for each builtin instance, and how the sphere floor
//! `alpha_floor` changes sign as `λ` crosses `λ₀`.
//!
//! ```text
//! cargo run --release --example constants
//! ```

use schrodinger_poisson::energy::compute_constants;
use schrodinger_poisson::models::BUILTIN_NAMES;
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    let grid = Grid3::new(12.0, 48)?;
    let q = 1.5;
    println!("{:<20} {:>10} {:>10} {:>10} {:>10} {:>12}", "instance", "S", "rho", "lambda0", "C0", "level_bound");
    for name in BUILTIN_NAMES {
        let base = builtin_instance(name, grid, q, 1.0)?;
        let lambda0 = compute_constants(&base)?.lambda0;
        let c = compute_constants(&base.with_lambda(0.5 * lambda0)?)?;
        println!("{name:<20} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>12.6}", c.s, c.rho, c.lambda0, c.c0, c.level_bound);
    }

    let base = builtin_instance("const_K_gaussian_f", grid, q, 1.0)?;
    let c = compute_constants(&base)?;
    println!("\nalpha_floor around lambda0 = {:.6}:", c.lambda0);
    for frac in [0.5, 0.9, 0.999, 1.001, 1.1] {
        let at = c.with_lambda(frac * c.lambda0)?;
        println!("  lambda = {frac:>5} lambda0  alpha_floor = {:+.6e}", at.alpha_floor);
    }
    Ok(())
}
