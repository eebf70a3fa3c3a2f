//! The equilibrium functional: for a cell-step observable with a uniform
//! windowed mean, the normalized correlations `mu((F o T^n) g) / mu(g)`
//! settle on the same value for every witness density, and that value
//! matches the windowed mean of F.
//!
//! ```text
//! cargo run --example equilibrium_functional
//! ```

use infinimix::maps::PiecewiseMap;
use infinimix::mixing::{Method, MixingLab};
use infinimix::observables::{GlobalObservable, LocalObservable};

fn main() {
    let lab = MixingLab::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    // tails at 0.25 with a bump of height 1 on cell [0, 1)
    let f = GlobalObservable::from_id("step:0.25:0.25:0:1.25").unwrap();
    let g_set = vec![
        LocalObservable::indicator(0.0, 1.0, false).unwrap(),
        LocalObservable::indicator(5.0, 6.0, false).unwrap(),
        LocalObservable::indicator(0.0, 2.0, true).unwrap(),
    ];
    let ns: Vec<usize> = (0..=1000).step_by(20).collect();

    let est = lab
        .estimate_rho(&f, &g_set, &ns, Method::ExactLattice, 1.0 / 3.0)
        .unwrap();
    println!("per-density tail means of corr(n)/mu(g):");
    for d in &est.per_density {
        println!(
            "  {:<22} tail mean {:.6}  spread {:.2e}",
            d.g_id, d.tail_mean, d.tail_spread
        );
    }
    println!("\nrho estimate       {:.6}", est.rho_hat);
    println!("pairwise defect    {:.2e}", est.coalescence_defect);

    let (cesaro, defect) = f.cesaro_mean(&[0, 7, -7, 40, -40], 60).unwrap();
    println!("windowed mean of F {cesaro:.6} (uniformity defect {defect:.2e})");
    println!("\nthe equilibrium value tracks the windowed mean; the residual gap");
    println!("is the local-limit tail p_n(0) ~ 0.017 still alive at n = 1000.");
}
