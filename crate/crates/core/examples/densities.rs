//! Noise densities used by the finite objective: log density, score and
//! curvature, and the likelihood ratio of a translation.

use qis::density::{make_density, DensityKind};

fn main() -> qis::Result<()> {
    for kind in [DensityKind::Gaussian, DensityKind::Logistic] {
        let p = make_density(kind, 1)?;
        let (mut score, mut curv) = ([0.0], [0.0]);
        for x in [-2.0, 0.0, 1.5] {
            p.score(&[x], &mut score);
            p.curvature(&[x], &mut curv);
            println!(
                "{kind:?} x={x:+.1}: log p {:.4}  score {:+.4}  curvature {:+.4}  ratio(θ=0.5) {:.4}",
                p.log_density(&[x]), score[0], curv[0], p.ratio(&[x], &[0.5])
            );
        }
    }
    Ok(())
}
