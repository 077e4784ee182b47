//! Pricing from a TOML configuration, as the command line tool does.

use qis::cli::config::RunConfig;
use qis::cli::presets::preset_source;
use qis::cli::Workspace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = preset_source("spark").expect("built-in preset");
    println!("{text}");
    let mut cfg = RunConfig::from_toml(text)?;
    cfg.mc.n = 50_000;
    // no cache directory: grids are built in memory
    let mut ws = Workspace::new(None);
    let out = ws.price(&cfg)?;
    let c = &out.comparison;
    println!("theta {}", out.theta);
    println!("crude {:.4}  var {:.2}", c.crude.estimate, c.crude.sample_variance);
    println!("qis   {:.4}  var {:.2}  ratio {:.1}", c.qis.estimate, c.qis.sample_variance, c.variance_ratio);
    Ok(())
}
