//! Building a map from a user-supplied branch spec. The construction runs
//! the Lebesgue-preservation check on a grid and rejects branch data whose
//! preimage weights fail to sum to one.
//!
//! ```text
//! cargo run --example custom_map
//! ```

use infinimix::maps::{BranchSpec, Formula, MapSpec, MapSpecKind, PiecewiseMap};

fn main() {
    // A two-branch lift with integer-aligned images: jumps 0 and 1 occur
    // with probabilities 3/4 and 1/4.
    let spec = MapSpec {
        kind: MapSpecKind::Lift,
        branches: vec![
            BranchSpec {
                domain: [0.0, 0.5],
                forward: Formula::Affine { slope: 4.0, intercept: 0.0 },
                inverse: Formula::Affine { slope: 0.25, intercept: 0.0 },
                derivative: Formula::Constant { value: 4.0 },
            },
            BranchSpec {
                domain: [0.5, 1.0],
                forward: Formula::Affine { slope: 2.0, intercept: -1.0 },
                inverse: Formula::Affine { slope: 0.5, intercept: 0.5 },
                derivative: Formula::Constant { value: 2.0 },
            },
        ],
    };
    let map = PiecewiseMap::custom("custom:demo", &spec).unwrap();
    let report = map.preservation_report().unwrap();
    println!(
        "construction check: {} points, max deviation {:.2e}",
        report.points_checked, report.max_deviation
    );
    println!("detected jump law:");
    for (j, p) in map.jump_law().unwrap().jumps() {
        println!("  jump {j:+}: {p}");
    }

    // The same spec as JSON, as the catalog id custom:<file> would load it.
    println!("\nspec as JSON:\n{}", serde_json::to_string_pretty(&spec).unwrap());

    // A broken spec: fractional images with mismatched slopes.
    let broken = MapSpec {
        kind: MapSpecKind::Lift,
        branches: vec![
            BranchSpec {
                domain: [0.0, 0.5],
                forward: Formula::Affine { slope: 5.0, intercept: 0.0 },
                inverse: Formula::Affine { slope: 0.2, intercept: 0.0 },
                derivative: Formula::Constant { value: 5.0 },
            },
            BranchSpec {
                domain: [0.5, 1.0],
                forward: Formula::Affine { slope: 3.0, intercept: -1.5 },
                inverse: Formula::Affine { slope: 1.0 / 3.0, intercept: 0.5 },
                derivative: Formula::Constant { value: 3.0 },
            },
        ],
    };
    match PiecewiseMap::custom("custom:broken", &broken) {
        Err(e) => println!("\nbroken spec rejected:\n  {e}"),
        Ok(_) => println!("\nunexpectedly accepted"),
    }
}
