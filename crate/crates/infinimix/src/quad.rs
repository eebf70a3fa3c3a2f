//! Globally adaptive quadrature on finite intervals.
//!
//! A 7/15-point Gauss–Kronrod pair is applied per panel; the panel with the
//! largest error estimate is bisected until the summed estimate meets the
//! requested absolute tolerance. Exceeding the evaluation budget is an
//! error, never a silent inaccuracy.
//!
//! Integrands may fail (orbit singularities); failures propagate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default evaluation budget per integral.
pub const DEFAULT_BUDGET: usize = 1_000_000;

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights. Standard QUADPACK constants.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error actually achieved.
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    // Symmetric node pairs are summed together so that odd integrands on
    // symmetric panels cancel exactly in floating point.
    for (i, &x) in XGK.iter().enumerate() {
        if x == 0.0 {
            let fc = f(c)?;
            kronrod += WGK[i] * fc;
            gauss += WG[3] * fc;
        } else {
            let f1 = f(c - h * x)?;
            let f2 = f(c + h * x)?;
            let pair = f1 + f2;
            kronrod += WGK[i] * pair;
            if i % 2 == 1 {
                gauss += WG[i / 2] * pair;
            }
        }
    }
    kronrod *= h;
    gauss *= h;
    Ok((kronrod, (kronrod - gauss).abs()))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `splits` lists interior points where the integrand is known to be
/// non-smooth (support endpoints, step discontinuities, cell boundaries);
/// panels never straddle them, which is what keeps piecewise integrands
/// cheap and keeps Gauss nodes away from the discontinuities themselves.
pub fn integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
    splits: &[f64],
) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a < b) {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let count = std::cell::Cell::new(0usize);
    let mut eval = |x: f64| -> Result<f64> {
        count.set(count.get() + 1);
        f(x)
    };

    // Initial panel edges: [a, interior splits, b].
    let mut edges: Vec<f64> = Vec::with_capacity(splits.len() + 2);
    edges.push(a);
    for &s in splits {
        if s > a && s < b {
            edges.push(s);
        }
    }
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();

    if (edges.len() - 1) * 15 > budget {
        return Err(Error::QuadratureBudget {
            budget,
            context: format!("{} initial panels need more than the budget", edges.len() - 1),
        });
    }

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&mut eval, w[0], w[1])?;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }

    while total_err > tol {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel no longer splittable at f64 resolution; keep its estimate.
            heap.push(worst);
            break;
        }
        if count.get() + 30 > budget {
            return Err(Error::QuadratureBudget {
                budget,
                context: format!(
                    "residual error {:.3e} > tol {:.3e} over [{}, {}]",
                    total_err, tol, a, b
                ),
            });
        }
        let (v1, e1) = gk15(&mut eval, worst.a, mid)?;
        let (v2, e2) = gk15(&mut eval, mid, worst.b)?;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Recompute the totals from the heap for a tighter, non-drifting sum.
    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    Ok(QuadResult {
        value,
        error,
        evaluations: count.get(),
    })
}

/// Convenience wrapper for infallible integrands.
pub fn integrate_fn<F>(f: F, a: f64, b: f64, tol: f64, budget: usize, splits: &[f64]) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate(|x| Ok(f(x)), a, b, tol, budget, splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_near_exact() {
        let r = integrate_fn(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 10_000, &[]).unwrap();
        // exact: 4 - 4 + 2 = 2
        assert!((r.value - 2.0).abs() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn step_function_with_split_hint() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { -1.0 };
        let r = integrate_fn(f, 0.0, 1.0, 1e-10, 100_000, &[0.3]).unwrap();
        assert!((r.value - (0.3 - 0.7)).abs() < 1e-10);
        assert!(r.evaluations <= 30);
    }

    #[test]
    fn step_function_without_hint_still_converges() {
        let f = |x: f64| if x < 1.0 / 3.0 { 2.0 } else { 0.0 };
        let r = integrate_fn(f, 0.0, 1.0, 1e-9, 1_000_000, &[]).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-8, "got {}", r.value);
    }

    #[test]
    fn budget_exceeded_is_an_error() {
        // Highly oscillatory with a tiny budget.
        let f = |x: f64| (1000.0 * x).sin();
        let err = integrate_fn(f, 0.0, 50.0, 1e-12, 200, &[]).unwrap_err();
        match err {
            Error::QuadratureBudget { .. } => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x: f64| {
                if x > 0.5 {
                    Err(Error::SingularOrbit { x, step: 1 })
                } else {
                    Ok(1.0)
                }
            },
            0.0,
            1.0,
            1e-9,
            1000,
            &[],
        );
        assert!(r.is_err());
    }

    #[test]
    fn cosine_over_whole_periods_vanishes() {
        let splits: Vec<f64> = (1..100).map(|k| k as f64).collect();
        let r = integrate_fn(
            |x| (2.0 * std::f64::consts::PI * x).cos(),
            0.0,
            100.0,
            1e-10,
            1_000_000,
            &splits,
        )
        .unwrap();
        assert!(r.value.abs() < 1e-11, "got {}", r.value);
    }
}
