//! Dynamical compatibility of a window family: a finite-time application
//! of the map should barely change a large window, i.e.
//! `mu(T^{-n} V symmdiff V) = o(mu(V))`. The ratios come from exact
//! interval arithmetic on the pulled-back endpoints.
//!
//! ```text
//! cargo run --example volume_compatibility
//! ```

use infinimix::maps::PiecewiseMap;
use infinimix::volume::{avol_check, ExhaustiveFamily};

fn main() {
    let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0, 10_000.0]);

    for id in ["rw:-1:2", "boole"] {
        let map = PiecewiseMap::from_id(id).unwrap();
        println!("{id}:");
        for n in 1..=2 {
            let series = avol_check(&map, &fam, n).unwrap();
            let row: Vec<String> = series
                .iter()
                .map(|(m, r)| format!("M={m:>5}: {r:.3e}"))
                .collect();
            println!("  n = {n}:  {}", row.join("   "));
        }
    }
    println!("\nfor rw:-1:2 the one-step ratio is exactly 2/(3M): the mismatch");
    println!("lives in a boundary collar whose width does not grow with M.");
}
