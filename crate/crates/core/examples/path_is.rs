//! Drift importance sampling for an arithmetic Asian call under
//! Black-Scholes, comparing drift bases.

use qis::basis::BasisKind;
use qis::isopt::NewtonOptions;
use qis::models::{ModelSpec, PayoffSpec, Problem};
use qis::pipeline::{decomposition_for, path_quantizer, quantized_paths, run_path};

fn main() -> qis::Result<()> {
    let model = ModelSpec::BlackScholes { rate: 0.04, sigma: vec![0.5], s0: vec![100.0] };
    let payoff = PayoffSpec::Asian { strike: 115.0, dates: 20 };
    let problem = Problem::new(model, payoff, 1.0, 100)?;

    let q = path_quantizer(&problem, &decomposition_for(966)?)?;
    let ens = quantized_paths(&problem, &q)?;
    let opts = NewtonOptions::default();
    for (kind, m) in [(BasisKind::Constant, 1), (BasisKind::ShiftedLegendre, 4), (BasisKind::Haar, 4)] {
        let run = run_path(&problem, &q, &ens, kind, m, &opts, 50_000, 3)?;
        let c = &run.comparison;
        println!(
            "{:<20} price {:.3} (crude {:.3})  variance {:.2} vs {:.2}  ratio {:.1}",
            run.theta.to_string(), c.qis.estimate, c.crude.estimate,
            c.qis.sample_variance, c.crude.sample_variance, c.variance_ratio
        );
    }
    Ok(())
}
