//! Brownian bridge smoothing of a discretely simulated down-and-in call.

use qis::models::{bridge_survival, dic_smoothed_payoff};
use qis::rng::SampleStream;

fn main() {
    let (x0, sigma, rate, horizon, steps) = (100.0f64, 0.3, 0.04, 1.0, 50);
    let (strike, barrier) = (90.0, 85.0);
    let dt = horizon / steps as f64;

    for (a, b) in [(100.0, 95.0), (88.0, 87.0), (86.0, 85.5)] {
        println!("survival {a} → {b} over dt: {:.4}", bridge_survival(a, b, barrier, dt, sigma * a));
    }

    let n = 200_000;
    let (mut naive, mut smooth) = (0.0, 0.0);
    let mut path = vec![0.0; steps + 1];
    for i in 0..n {
        let mut s = SampleStream::new(11, i);
        path[0] = x0;
        for k in 0..steps {
            let z = s.normal();
            path[k + 1] = path[k] * ((rate - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * z).exp();
        }
        let call = (path[steps] - strike).max(0.0) * (-rate * horizon).exp();
        if path.iter().any(|&x| x <= barrier) {
            naive += call;
        }
        smooth += dic_smoothed_payoff(&path, strike, barrier, rate, horizon, |x| sigma * x);
    }
    // monitoring only at grid dates misses crossings between them
    println!("discrete monitoring {:.4}, bridge smoothed {:.4}", naive / n as f64, smooth / n as f64);
}
