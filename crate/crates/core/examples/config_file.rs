//! Builds a run from TOML text, as `spcrit --config` does, with a custom
//! `(K, f)` pair, and writes the constants table.

use schrodinger_poisson::cli::{run_constants, RunConfig};

const CONFIG: &str = r#"
[grid]
half_width = 10.0
points = 32

[problem]
k = "lorentzian"
k_amplitude = 2.0
k_width = 1.5
f = "gaussian"
f_width = 0.8
q = 1.25
lambda_fraction = 0.3

[output]
dir = "target/config_file"
"#;

fn main() -> schrodinger_poisson::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let c = run_constants(&cfg)?;
    println!("|K|∞ = {:.4}, |f| = {:.6}, lambda = {:.6}", c.k_sup, c.norm_f, c.lambda);
    println!("rho = {:.6}, lambda0 = {:.6}, level bound = {:.6}", c.rho, c.lambda0, c.level_bound);
    println!("written to {}", cfg.out_dir.join("constants.csv").display());

    match RunConfig::parse("[problem]\nq = 2.0\nlambda = 0.1\n").and_then(|c| c.instance()) {
        Ok(_) => println!("unexpected: q = 2 accepted"),
        Err(e) => println!("q = 2 rejected: {e}"),
    }
    Ok(())
}
