use std::sync::Arc;

use inclusion_core::exec::Execution;
use inclusion_core::fit::loglog_fit;
use inclusion_core::geometry::{hausdorff_distance, modified_distance, Grid, InclusionShape, ShapeKind};
use inclusion_core::inverse::subspace_aperture;
use inclusion_core::io::{format_scalar_grid, parse_scalar_grid, Table};
use inclusion_core::media::{MediumField, MediumSpec, ScalarSpec, TensorSpec};
use inclusion_core::solver::{assemble, Impedance};
use inclusion_core::Complex64 as C;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn grid() -> Arc<Grid> {
    Arc::new(Grid::build([0.0; 3], [1.0; 3], 12).unwrap())
}

fn ball() -> impl Strategy<Value = ShapeKind> {
    ([0.35..0.65f64, 0.35..0.65f64, 0.35..0.65f64], 0.08..0.25f64).prop_map(|(center, radius)| ShapeKind::Ball { center, radius })
}

fn mask(g: &Grid, k: ShapeKind) -> Vec<bool> {
    InclusionShape::rasterize(k, g).unwrap().mask
}

fn spd() -> impl Strategy<Value = [[f64; 3]; 3]> {
    (prop::array::uniform3(0.5..2.0f64), prop::array::uniform3(-0.15..0.15f64))
        .prop_map(|(d, o)| [[d[0] + 0.5, o[0], o[1]], [o[0], d[1] + 0.5, o[2]], [o[1], o[2], d[2] + 0.5]])
}

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<C>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), rows * cols)
        .prop_map(move |v| DMatrix::from_iterator(rows, cols, v.into_iter().map(|(re, im)| C::new(re, im))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hausdorff_is_a_metric(a in ball(), b in ball(), c in ball()) {
        let g = grid();
        let (ma, mb, mc) = (mask(&g, a), mask(&g, b), mask(&g, c));
        let d = |x: &[bool], y: &[bool]| hausdorff_distance(&g, x, y, Execution::Sequential).unwrap();
        prop_assert_eq!(d(&ma, &ma), 0.0);
        prop_assert!(d(&ma, &mb) >= 0.0);
        prop_assert_eq!(d(&ma, &mb), d(&mb, &ma));
        prop_assert!(d(&ma, &mc) <= d(&ma, &mb) + d(&mb, &mc) + 1e-12);
        prop_assert_eq!(d(&ma, &mb), hausdorff_distance(&g, &ma, &mb, Execution::default()).unwrap());
    }

    #[test]
    fn modified_distance_is_bounded_by_hausdorff(a in ball(), b in ball()) {
        let g = grid();
        let omega = vec![true; g.n_cells()];
        let (ma, mb) = (mask(&g, a), mask(&g, b));
        let dm = modified_distance(&g, &omega, &ma, &mb, Execution::default()).unwrap();
        let dh = hausdorff_distance(&g, &ma, &mb, Execution::default()).unwrap();
        prop_assert!(dm >= 0.0 && dm <= dh + 1e-12, "d_mu {} d_H {}", dm, dh);
        prop_assert_eq!(modified_distance(&g, &omega, &ma, &ma, Execution::default()).unwrap(), 0.0);
    }

    #[test]
    fn assembled_operator_is_symmetric(t in spd(), a_d in 1.5..3.0f64, q in -2.0..2.0f64, k in ball()) {
        let g = Arc::new(Grid::build([0.0; 3], [1.0; 3], 8).unwrap());
        let spec = MediumSpec {
            a_d: ScalarSpec::Constant(a_d),
            tensor: TensorSpec::Full(t),
            q_b: ScalarSpec::Constant(q),
            ..MediumSpec::default()
        };
        let chi = mask(&g, k);
        let m = MediumField::from_spec(&spec, &g, &chi, &vec![false; g.n_cells()]).unwrap();
        prop_assert!(m.max_asymmetry() <= 1e-15);
        let op = assemble(&g, &m, Impedance::Plus, Execution::default()).unwrap();
        let a = op.matrix();
        for (r, c, v) in a.triplets() {
            prop_assert!((v - a.get(c, r)).norm() <= 1e-13 * v.norm().max(1e-300));
        }
    }

    #[test]
    fn aperture_lies_in_unit_interval(a in complex_matrix(8, 3), b in complex_matrix(8, 3), c in complex_matrix(8, 2)) {
        let ab = subspace_aperture(&a, &b).unwrap();
        prop_assert!(ab.value >= 0.0 && ab.value <= 1.0);
        prop_assert!((ab.forward - ab.backward).abs() <= 1e-10);
        prop_assert!(subspace_aperture(&a, &a).unwrap().value <= 1e-10);
        let ac = subspace_aperture(&a, &c).unwrap();
        prop_assert!((ac.value - 1.0).abs() <= 1e-10);
        prop_assert!(ac.forward >= ac.backward - 1e-12);
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::array::uniform3(-1e6..1e6f64), 1..20)) {
        let mut t = Table::new(&["a", "b", "c"]);
        for r in &rows {
            t.push_numbers(r).unwrap();
        }
        let back = Table::parse_csv(&t.to_csv(Some("abc123"))).unwrap();
        prop_assert_eq!(&back.columns, &t.columns);
        for (i, name) in ["a", "b", "c"].iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            prop_assert_eq!(back.column(name).unwrap(), col);
        }
    }

    #[test]
    fn grid_dump_round_trip(values in prop::collection::vec(-1e3..1e3f64, 512)) {
        let g = Grid::build([0.0; 3], [1.0; 3], 8).unwrap();
        let back = parse_scalar_grid(&format_scalar_grid(&g, "u", &values, None).unwrap()).unwrap();
        prop_assert_eq!(back.dims, [8, 8, 8]);
        prop_assert_eq!(back.values, values);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(p in -3.0..3.0f64, c in 0.1..10.0f64) {
        let r: Vec<f64> = (1..10).map(|i| 0.01 * i as f64).collect();
        let v: Vec<f64> = r.iter().map(|x| c * x.powf(p)).collect();
        let fit = loglog_fit(&r, &v).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-10);
    }
}
