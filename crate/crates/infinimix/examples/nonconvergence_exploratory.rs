//! Exploratory: a bounded observable whose correlations refuse to settle.
//!
//! Coalescence makes the evolved measures of different densities agree, but
//! nothing forces the common value to converge. A step observable whose
//! sign flips on dyadic blocks of cells keeps resonating with the sqrt(n)
//! diffusive scale: every doubling of n shifts the bulk of `P^n g` into the
//! next block, so the correlation oscillates on a log-time clock instead of
//! converging. No closed-form target exists here; this is a numerical
//! exploration, not a verified identity.
//!
//! ```text
//! cargo run --example nonconvergence_exploratory
//! ```

use infinimix::maps::PiecewiseMap;
use infinimix::mixing::{Method, MixingLab};
use infinimix::observables::{GlobalObservable, LocalObservable, StepFn};

/// +1 / -1 by the dyadic block of |j|: cells 1, [2,4), [4,8), ... flip sign.
fn dyadic_step(radius: i64) -> GlobalObservable {
    let cell_sign = |j: i64| -> f64 {
        if j == 0 {
            1.0
        } else {
            let block = (j.unsigned_abs() as f64).log2().floor() as u32;
            if block % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    let values: Vec<f64> = (-radius..=radius).map(cell_sign).collect();
    let tail = cell_sign(radius + 1);
    GlobalObservable::lattice_step(
        StepFn {
            offset: -radius,
            values,
            left_tail: tail,
            right_tail: tail,
        },
        "dyadic-flip".into(),
    )
}

fn main() {
    let lab = MixingLab::new(PiecewiseMap::random_walk(-1, 2).unwrap());
    let f = dyadic_step(1024);
    let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();

    // sample n on a geometric grid: the interesting clock is log n
    let mut ns: Vec<usize> = (0..=22)
        .map(|k| (2.0f64).powf(k as f64 / 2.0).round() as usize)
        .collect();
    ns.dedup();
    let series = lab.correlate(&f, &g, &ns, Method::ExactLattice).unwrap();

    println!("corr(n) = <F, P^n g> for the dyadic-flip step observable");
    println!("{:>8}  {:>12}", "n", "corr(n)");
    for (i, &n) in series.n_values.iter().enumerate() {
        println!("{n:>8}  {:+.6}", series.estimates[i]);
    }
    let tail: Vec<f64> = series.estimates.iter().rev().take(8).cloned().collect();
    let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("\nlate-time spread {spread:.3} — the series keeps swinging while");
    println!("any two densities would still coalesce against this F.");
}
