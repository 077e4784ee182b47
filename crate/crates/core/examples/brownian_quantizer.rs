//! Product functional quantizers of Brownian motion and of an OU process.

use qis::funcquant::{build_brownian_quantizer, build_ou_quantizer, kl_eigenvalue};
use qis::pipeline::decomposition_for;

fn main() -> qis::Result<()> {
    for budget in [10, 100, 966] {
        let dec = decomposition_for(budget)?;
        let q = build_brownian_quantizer(1.0, &dec)?;
        println!("budget {budget:4}: decomposition {dec:?}, {} paths, E|W - Ŵ|² = {:.5}", q.len(), q.distortion2());
    }
    println!("λ_1 = {:.5}, λ_2 = {:.5}", kl_eigenvalue(1.0, 1), kl_eigenvalue(1.0, 2));

    let q = build_brownian_quantizer(1.0, &[6, 3, 2])?;
    let heaviest = (0..q.len()).max_by(|&a, &b| q.weights()[a].total_cmp(&q.weights()[b])).unwrap();
    print!("heaviest path:");
    for k in 0..=4 {
        print!(" {:+.3}", q.brownian_value(heaviest, k as f64 / 4.0));
    }
    println!();

    let ou = build_ou_quantizer(0.5, 0.3, 0.7, &[8, 3])?;
    println!("OU quantizer: {} paths, value of path 0 at T: {:+.4}", ou.len(), ou.process_value(0, 0.5));
    Ok(())
}
