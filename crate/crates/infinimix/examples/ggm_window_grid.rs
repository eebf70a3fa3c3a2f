//! Global-global mixing: window averages `mu_V((F o T^n) G)` over a grid
//! of scales and times, with the joint limit probed along the anti-diagonal
//! `M = n`. For period-one profiles on a lift the entries are exact.
//!
//! ```text
//! cargo run --example ggm_window_grid
//! ```

use infinimix::maps::PiecewiseMap;
use infinimix::mixing::MixingLab;
use infinimix::observables::GlobalObservable;
use infinimix::volume::ExhaustiveFamily;

fn main() {
    let lab = MixingLab::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    let f = GlobalObservable::half_cell(1).unwrap();
    let fam = ExhaustiveFamily::cell_aligned(vec![0, 4, -4], vec![2.0, 4.0, 6.0, 8.0]);
    let ns: Vec<usize> = (0..=8).collect();

    let grid = lab.ggm_grid(&f, &f, &fam, &ns, 0.02).unwrap();
    println!("mu_V((F o T^n) F) for F = half-cell indicator (target {}):", grid.target);
    print!("{:>6}", "M\\n");
    for n in &grid.n_values {
        print!("{n:>9}");
    }
    println!();
    for (i, m) in grid.scales.iter().enumerate() {
        print!("{m:>6}");
        for cell in &grid.entries[i] {
            match cell {
                Some((v, _)) => print!("{v:>9.5}"),
                None => print!("{:>9}", "-"),
            }
        }
        println!();
    }
    println!("\nanti-diagonal deviations from the target:");
    for (m, dev) in &grid.corner {
        println!("  M = n = {m}: {dev:.2e}");
    }
    println!("verdict: {:?}", grid.verdict);
}
