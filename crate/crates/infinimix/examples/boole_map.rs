//! The Boole transformation `T(x) = x - 1/x`: orbits, preimages and the
//! Perron-Frobenius weights that make it Lebesgue-preserving.
//!
//! ```text
//! cargo run --example boole_map
//! ```

use infinimix::maps::PiecewiseMap;

fn main() {
    let t = PiecewiseMap::boole();

    println!("orbit of x = 2.0:");
    let mut x = 2.0;
    for n in 0..=6 {
        println!("  T^{n}(2) = {x:+.12}");
        x = t.apply(x).unwrap();
    }

    println!("\npreimages and weights (they sum to one):");
    for y in [0.0, 1.5, -3.0, 10.0] {
        let pre = t.preimages(y).unwrap();
        let sum: f64 = pre.iter().map(|(_, w)| w).sum();
        let detail: Vec<String> = pre
            .iter()
            .map(|(x, w)| format!("x = {x:+.6} (w = {w:.6})"))
            .collect();
        println!("  y = {y:+.1}: {}  |  sum = {sum:.15}", detail.join(", "));
    }

    println!("\nthe pole is singular, not infinite:");
    match t.apply(0.0) {
        Err(e) => println!("  T(0) -> {e}"),
        Ok(v) => println!("  unexpected value {v}"),
    }
}
