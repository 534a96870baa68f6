use std::sync::Arc;

use inclusion_core::exec::Execution;
use inclusion_core::fundsol::{fit_residual_exponent, layered_h, LayeredKernel, Residual};
use inclusion_core::geometry::Grid;
use inclusion_core::green::{GreenField, GreenSolver};
use inclusion_core::media::{Bounds, CellCoefficients, MediumField};
use inclusion_core::solver::{Impedance, SolverOptions};
use inclusion_core::Complex64 as C;

fn kernel() -> LayeredKernel {
    LayeredKernel::new(2.0, 1.0, [[1.5, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 2.0]], 0.0).unwrap()
}

// Green's function of the two-phase medium on [-1/2, 1/2]^3, with zero or kernel-matched wall data.
fn layered_green(k: &LayeredKernel, res: usize, y: [f64; 3], matched: bool) -> GreenField {
    let g = Arc::new(Grid::build([-0.5; 3], [0.5; 3], res).unwrap());
    let n = g.n_cells();
    let bounds = Bounds { gamma_bar: f64::INFINITY, eta0: 0.0, lambda_bar: f64::INFINITY };
    let m = MediumField::sampled(&g, &vec![false; n], &vec![false; n], bounds, |p| {
        let a = if p[2] > k.interface { k.a_plus } else { k.a_minus };
        CellCoefficients { a_b: a, a_d: a, tensor: k.a0, q_b: 0.0, q_d: 0.0 }
    })
    .unwrap();
    let s = GreenSolver::on_grid(&g, &m, Impedance::Plus, SolverOptions::default(), Execution::default()).unwrap();
    if matched {
        s.green_with_data(y, |p| C::new(layered_h(p, y, k).unwrap(), 0.0)).unwrap()
    } else {
        s.green_with_data(y, |_| C::new(0.0, 0.0)).unwrap()
    }
}

fn cases() -> [(LayeredKernel, [f64; 3]); 3] {
    let near = [1.0 / 64.0, 1.0 / 64.0, 3.0 / 64.0];
    [(kernel(), near), (kernel(), [1.0 / 64.0, 1.0 / 64.0, 11.0 / 64.0]), (LayeredKernel::isotropic(1.0, 1.0), near)]
}

#[test]
fn residual_is_one_power_smoother_than_the_kernel() {
    for (k, y) in cases() {
        let g = layered_green(&k, 32, y, false);
        let h = g.grid().spacing();
        let v = fit_residual_exponent(&g, &k, Residual::Value, 4.0 * h, 0.4).unwrap();
        assert!(v.slope >= -0.2, "value residual slope {}", v.slope);
        let d = fit_residual_exponent(&g, &k, Residual::Gradient, 4.0 * h, 0.4).unwrap();
        assert!(d.slope >= -1.7, "gradient residual slope {}", d.slope);
    }
}

#[test]
fn matched_wall_data_reproduces_the_kernel_mid_range() {
    for (k, y) in cases() {
        let g = layered_green(&k, 32, y, true);
        for c in (0..g.grid().n_cells()).filter(|&c| (0.15..=0.3).contains(&g.radius(c))) {
            let hv = layered_h(g.grid().center(c), y, &k).unwrap();
            assert!((g.get(c).re - hv).abs() <= 0.02 * hv, "cell {c}: {} vs {hv}", g.get(c).re);
        }
    }
}

#[test]
fn narrow_window_is_rejected() {
    let k = kernel();
    let g = layered_green(&k, 16, [1.0 / 32.0, 1.0 / 32.0, 5.0 / 32.0], false);
    assert!(fit_residual_exponent(&g, &k, Residual::Value, 0.1, 0.3).is_err());
}
