//! Levels `c(λ)` and `c~(λ)` across a range of `λ/λ₀`, solved in parallel.
//! The worker count follows `SP_THREADS` when set.

use schrodinger_poisson::cli::{run_sweep, thread_limit, RunConfig};

fn main() -> schrodinger_poisson::Result<()> {
    let cfg = RunConfig { out_dir: "target/lambda_sweep".into(), ..RunConfig::default() };
    let rows = run_sweep(&cfg, &[0.2, 0.4, 0.6, 0.8], thread_limit()?)?;
    println!("{:>8} {:>16} {:>16}  status", "λ/λ₀", "c", "c~");
    for r in rows {
        let show = |v: Option<f64>| v.map(|x| format!("{x:+.9e}")).unwrap_or_else(|| "-".into());
        println!("{:>8.3} {:>16} {:>16}  {}", r.lambda_fraction, show(r.c), show(r.c_tilde), r.status);
    }
    Ok(())
}
