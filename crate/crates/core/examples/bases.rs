//! Drift bases on [0, T] and their Gram matrices.

use qis::basis::{gram, make_basis, BasisKind};

fn main() -> qis::Result<()> {
    for kind in [BasisKind::Constant, BasisKind::ShiftedLegendre, BasisKind::KarhunenLoeve, BasisKind::Haar] {
        let m = if kind == BasisKind::Constant { 1 } else { 4 };
        let b = make_basis(kind, m, 1.0)?;
        let g = gram(&b);
        let off = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g[i][j].abs())
            .fold(0.0, f64::max);
        println!("{kind:?} m={m} ({}): diag {:?}, max off-diagonal {off:.1e}",
            b.normalization(),
            (0..m).map(|i| (g[i][i] * 1e4).round() / 1e4).collect::<Vec<_>>());
    }
    let haar = make_basis(BasisKind::Haar, 4, 1.0)?;
    println!("Haar breakpoints {:?}", haar.breakpoints());
    println!("θ(0.3) for c = (1, 0.5, 0, 0): {:.4}", haar.combination(&[1.0, 0.5, 0.0, 0.0], 0.3));
    Ok(())
}
