//! The random-walk map `rw:-1:2` and the exact lattice action of its
//! transfer operator: `P^n` of a cell mass is the n-fold convolution with
//! the uniform jump law, carried in exact rationals.
//!
//! ```text
//! cargo run --example random_walk_lattice
//! ```

use std::sync::Arc;

use infinimix::lattice::LatticeMeasure;
use infinimix::maps::PiecewiseMap;
use infinimix::transfer::TransferEngine;

fn main() {
    let map = Arc::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    println!("map {}: jump law", map.id());
    for (j, p) in map.jump_law().unwrap().jumps() {
        println!("  jump {j:+}: {p}");
    }

    let engine = TransferEngine::exact_lattice(map).unwrap();
    let g = LatticeMeasure::single_cell(0);
    println!("\nP^n of the unit mass on cell [0,1):");
    for n in 0..=4 {
        let pn = engine.apply_lattice(&g, n).unwrap();
        let cells: Vec<String> = pn.cells().map(|(j, m)| format!("{j}:{m}")).collect();
        println!("  n = {n}: {}", cells.join("  "));
    }

    let p60 = engine.apply_lattice(&g, 60).unwrap();
    println!(
        "\nafter 60 steps the support covers {} cells and the mass is still {}",
        p60.len(),
        p60.total_mass()
    );
}
