//! Two-variable planning over the lower stress and the change time, from a
//! precomputed raw grid so the example runs instantly. Swap in
//! `optimise_2d` to simulate the grid instead.
//!
//! ```bash
//! cargo run --release --example plan_two_variable
//! ```

use ssalt::design::{linspace, Criterion, CriterionPoint, CriterionSurface};

fn main() -> ssalt::Result<()> {
    let x1_grid = linspace(0.1, 0.9, 5);
    let tau_grid = linspace(0.05, 5.95, 9);

    // a bowl in tau whose floor rises with x1
    let mut points = Vec::new();
    for &x1 in &x1_grid {
        for &tau in &tau_grid {
            let c1 = 0.2 + 0.3 * x1 + 0.01 * (tau - 4.0).powi(2);
            let c2 = 0.1 + 0.2 * x1 + 0.02 * (tau - 3.0).powi(2);
            points.push(CriterionPoint::from_values(x1, tau, c1, c2));
        }
    }
    let surface = CriterionSurface::from_points(x1_grid, tau_grid, points, (0.1, 0.9), (0.05, 5.95))?;
    println!("bandwidths: h_x1 = {:.3}, h_tau = {:.4}", surface.h_x1, surface.h_tau);
    for c in Criterion::ALL {
        let o = surface.optimum(c);
        println!("{}: x1 = {:.3}, tau = {:.3}, value {:.4}", c.label(), o.x1, o.tau, o.value);
    }
    Ok(())
}
