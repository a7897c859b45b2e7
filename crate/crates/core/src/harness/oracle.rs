//! Naive reference implementation of the template correlation, kept apart
//! from the production path in `tap` so the two can be checked against each
//! other.

use crate::sensor::{AccelTrace, Axis};
use crate::tap::AxisRule;

#[allow(clippy::needless_range_loop, clippy::manual_clamp)]
fn naive_axis_correlation(a: &AccelTrace, b: &AccelTrace, axis: Axis) -> f64 {
    let n = a.len();
    let xs = a.samples();
    let ys = b.samples();
    let mut sum_x = 0.0;
    for i in 0..n {
        sum_x += xs[i].axis(axis);
    }
    let mut sum_y = 0.0;
    for i in 0..n {
        sum_y += ys[i].axis(axis);
    }
    let mean_x = sum_x / n as f64;
    let mean_y = sum_y / n as f64;
    let mut num = 0.0;
    let mut den_x = 0.0;
    let mut den_y = 0.0;
    for i in 0..n {
        let dx = xs[i].axis(axis) - mean_x;
        let dy = ys[i].axis(axis) - mean_y;
        num += dx * dy;
        den_x += dx * dx;
        den_y += dy * dy;
    }
    if den_x == 0.0 || den_y == 0.0 {
        return 0.0;
    }
    let c = num / (den_x * den_y).sqrt();
    if c > 1.0 {
        1.0
    } else if c < -1.0 {
        -1.0
    } else {
        c
    }
}

/// Full `m × m` matrix of pairwise template correlations with a unit
/// diagonal. All traces must have the same number of samples.
pub fn brute_force_pair_matrix(traces: &[AccelTrace], rule: AxisRule) -> Vec<Vec<f64>> {
    let m = traces.len();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                out[i][j] = 1.0;
                continue;
            }
            assert_eq!(traces[i].len(), traces[j].len(), "traces must be commensurate");
            let cx = naive_axis_correlation(&traces[i], &traces[j], Axis::X);
            let cy = naive_axis_correlation(&traces[i], &traces[j], Axis::Y);
            let cz = naive_axis_correlation(&traces[i], &traces[j], Axis::Z);
            out[i][j] = match rule {
                AxisRule::Mean => (cx + cy + cz) / 3.0,
                AxisRule::Min | AxisRule::AllAxes => {
                    let mut lo = cx;
                    if cy < lo {
                        lo = cy;
                    }
                    if cz < lo {
                        lo = cz;
                    }
                    lo
                }
            };
        }
    }
    out
}

/// Smallest off-diagonal entry.
pub fn min_off_diagonal(matrix: &[Vec<f64>]) -> f64 {
    let mut lo = f64::INFINITY;
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j && v < lo {
                lo = v;
            }
        }
    }
    lo
}
