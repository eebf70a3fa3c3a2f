//! Exactness probed through the L1 decay of mean-zero densities: the
//! system is exact precisely when `||P^n g||_1 -> 0` for every mean-zero
//! `g`, so the dipole ladder is the cheapest exactness diagnostic there is.
//!
//! ```text
//! cargo run --example lin_exactness
//! ```

use std::sync::Arc;

use infinimix::maps::PiecewiseMap;
use infinimix::observables::LocalObservable;
use infinimix::transfer::TransferEngine;

fn main() {
    let map = Arc::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    let engine = TransferEngine::exact_lattice(map).unwrap();
    let dipole = LocalObservable::dipole(0, 1).unwrap();

    let ns: Vec<usize> = vec![0, 1, 2, 5, 10, 30, 100, 300, 600, 1000];
    let series = engine.lin_norm(&dipole, &ns).unwrap();

    println!("||P^n g||_1 for g = 1_[0,1) - 1_[1,2) on rw:-1:2");
    println!("{:>6}  {:>20}  {:>12}", "n", "value", "error bound");
    for i in 0..ns.len() {
        println!(
            "{:>6}  {:>20.15}  {:>12.3e}",
            series.n_values[i], series.values[i], series.error_bounds[i]
        );
    }
    println!(
        "\nnonincreasing: {} (largest upward jump {:.1e})",
        series.max_increase() <= 1e-12,
        series.max_increase()
    );
    println!("a local-limit heuristic says the decay is ~ c / sqrt(n); check:");
    for i in [6usize, 9] {
        let n = series.n_values[i] as f64;
        println!("  n = {:>4}: value * sqrt(n) = {:.4}", n, series.values[i] * n.sqrt());
    }
}
