//! Optimal quantizers of N(0, 1) and a randomized Lloyd grid of N(0, I_2).

use qis::quant1d::{distortion_table, optimal_grid};
use qis::quantnd::build_grid_nd;

fn main() -> qis::Result<()> {
    let g = optimal_grid(10)?;
    println!("N = 10, distortion {:.6}", g.distortion2);
    for (x, w) in g.points.iter().zip(&g.weights) {
        println!("  {x:+.5}  {w:.5}");
    }
    println!("stationarity residual {:.2e}", g.stationarity_residual());

    let table = distortion_table(200)?;
    for n in [1, 10, 50, 100, 200] {
        // N² D_N tends to the Zador constant √3 π / 2 ≈ 2.72
        println!("N = {n:3}  D = {:.3e}  N²·D = {:.4}", table[n - 1], (n * n) as f64 * table[n - 1]);
    }

    let g2 = build_grid_nd(2, 50, 100_000, 7, 30)?;
    println!("d = 2, N = 50: distortion {:.5}, weights sum {:.6}", g2.distortion2_estimate, g2.weights.iter().sum::<f64>());
    println!("cell of the origin: {}", g2.nearest_cell(&[0.0, 0.0])?);
    Ok(())
}
