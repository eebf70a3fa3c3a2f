//! Zero type with a rate: the overlap `mu(T^{-n}[0,1) ∩ [0,1)) = p_n(0)`
//! vanishes like the local limit theorem predicts,
//! `p_n(0) ~ 1 / sqrt(2 pi sigma^2 n)` with `sigma^2 = 2/3` for uniform
//! jumps on {-1, 0, 1}.
//!
//! ```text
//! cargo run --example local_limit_theorem
//! ```

use std::sync::Arc;

use infinimix::lattice::LatticeMeasure;
use infinimix::maps::PiecewiseMap;
use infinimix::transfer::TransferEngine;

fn main() {
    let map = Arc::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    let engine = TransferEngine::exact_lattice(map).unwrap();
    let mut ladder = engine.ladder(LatticeMeasure::single_cell(0)).unwrap();

    let clt = 1.0 / (4.0 * std::f64::consts::PI / 3.0).sqrt();
    println!("p_n(0) for rw:-1:2 against the local-limit constant {clt:.6}");
    println!("{:>6}  {:>14}  {:>14}  {:>10}", "n", "p_n(0)", "p_n(0)*sqrt(n)", "rel. err");
    for n in [4usize, 16, 64, 256, 1000, 4000] {
        let (p0, _) = ladder.entry(n).mass_with_bound(0);
        let scaled = p0 * (n as f64).sqrt();
        println!(
            "{n:>6}  {p0:>14.8}  {scaled:>14.8}  {:>10.2e}",
            (scaled - clt).abs() / clt
        );
    }
    println!("\nsymmetric law, so p_n(j) = p_n(-j) exactly; the walk has no drift.");
}
