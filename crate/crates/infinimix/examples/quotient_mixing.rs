//! Global-local mixing on a random-walk map via the quotient circle: for a
//! periodic observable, `mu((F o T^n) g)` converges to `m(F) mu(g)` at the
//! mixing rate of `T mod 1`. Three estimators agree: exact interval
//! arithmetic, orbit quadrature and Monte Carlo sampling.
//!
//! ```text
//! cargo run --example quotient_mixing
//! ```

use infinimix::interval::rat_to_f64;
use infinimix::maps::PiecewiseMap;
use infinimix::mixing::{Method, MixingLab};
use infinimix::observables::{GlobalObservable, LocalObservable};
use infinimix::quotient::line_correlation_exact;

fn main() {
    let lab = MixingLab::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    let f = GlobalObservable::half_cell(1).unwrap();
    let g = LocalObservable::indicator(0.0, 0.5, true).unwrap();
    let ns: Vec<usize> = (0..=8).collect();

    let quad = lab.correlate(&f, &g, &ns, Method::Quadrature).unwrap();
    let mc = lab
        .correlate(&f, &g, &ns, Method::MonteCarlo { seed: 7, samples: 400_000 })
        .unwrap();
    let prof = f.pc_profile().unwrap();
    let pieces = g.pc_pieces().unwrap();

    println!("mu((F o T^n) g), F = half-cell indicator, g = 2 * 1_[0, 1/2)");
    println!("{:>3}  {:>18}  {:>14}  {:>14}", "n", "exact (rational)", "quadrature", "monte carlo");
    for (i, &n) in ns.iter().enumerate() {
        let exact = line_correlation_exact(lab.map(), &prof, &pieces, n).unwrap();
        println!(
            "{n:>3}  {:>18.12}  {:>14.9}  {:>14.9}",
            rat_to_f64(&exact),
            quad.estimates[i],
            mc.estimates[i]
        );
    }
    println!("\nthe limit is m(F) mu(g) = 1/2; the n = 1 value is exactly 2/3.");
}
