//! Uniform infinite-volume averages: a limit must hold uniformly over all
//! large windows of the family. The cosine passes on symmetric windows;
//! `sign` fails as soon as the family carries adversarial centers, because
//! the window at `a = M` averages to one while the window at zero averages
//! to nothing.
//!
//! ```text
//! cargo run --example infinite_volume_average
//! ```

use infinimix::observables::GlobalObservable;
use infinimix::volume::{estimate_avg, ExhaustiveFamily, Probe, DEFAULT_AVG_TOL};

fn print_report(label: &str, rep: &infinimix::volume::IvLimitReport) {
    println!("{label}");
    println!("  estimate {:+.3e}   verdict {:?}", rep.estimate, rep.verdict);
    for p in &rep.ladder {
        println!("  M = {:>8}: defect {:.3e}", p.m, p.defect);
    }
}

fn main() {
    let ladder = vec![10.0, 100.0, 1000.0, 10_000.0];

    let cos = GlobalObservable::cosine(1).unwrap();
    let sym = ExhaustiveFamily::symmetric(ladder.clone());
    print_report(
        "cos(2 pi x) on symmetric windows [-M, M):",
        &estimate_avg(&cos, &sym, DEFAULT_AVG_TOL).unwrap(),
    );

    let sign = GlobalObservable::sign();
    print_report(
        "\nsign on the same symmetric windows (odd symmetry hides the failure):",
        &estimate_avg(&sign, &sym, DEFAULT_AVG_TOL).unwrap(),
    );

    let adversarial = ExhaustiveFamily::translated(
        vec![Probe::At(0.0), Probe::PlusScale, Probe::MinusScale],
        ladder,
    );
    print_report(
        "\nsign with adversarial probe centers {0, +M, -M}:",
        &estimate_avg(&sign, &adversarial, DEFAULT_AVG_TOL).unwrap(),
    );
}
