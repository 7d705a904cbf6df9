use proptest::prelude::*;

use fracflow::flow::{assemble_flow, harmonic, solve_flow, ConductivityField, FaceBc, FlowBc, IntersectionModel};
use fracflow::geometry::{diagonal, BoundingBox};
use fracflow::mesh_io::{cartesian_dfm_mesher, FractureRectangle, Lattice};
use fracflow::postproc::{float_rows, parse_csv, to_csv, Field};

fn field() -> impl Strategy<Value = Field> {
    prop_oneof![
        any::<i32>().prop_map(|i| Field::Int(i as i64)),
        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Field::Float),
    ]
}

proptest! {
    #[test]
    fn csv_reserializes_identically(rows in prop::collection::vec(prop::collection::vec(field(), 1..6), 1..20)) {
        let text = to_csv(&rows);
        let back = parse_csv(&text, None).unwrap();
        prop_assert_eq!(to_csv(&back), text);
    }

    #[test]
    fn float_rows_keep_their_bits(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..30)) {
        let text = to_csv(&float_rows(std::slice::from_ref(&values)));
        let back = parse_csv(&text, Some(values.len())).unwrap();
        for (f, v) in back[0].iter().zip(&values) {
            let x = match *f { Field::Float(x) => x, Field::Int(i) => i as f64 };
            prop_assert_eq!(x.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn harmonic_is_symmetric_and_below_min(a in 1e-12f64..1e12, b in 1e-12f64..1e12) {
        let h = harmonic(a, b);
        prop_assert_eq!(h, harmonic(b, a));
        prop_assert!(h <= a.min(b) * (1.0 + 1e-12));
        prop_assert!(h >= 0.5 * a.min(b) * (1.0 - 1e-12));
    }

    #[test]
    fn random_anisotropic_lattice_conserves(
        k in prop::collection::vec((1e-3f64..1e3, 1e-3f64..1e3, 1e-3f64..1e3), 64),
        kf in 1e-4f64..1e4,
        left in -5.0f64..5.0,
        right in -5.0f64..5.0,
    ) {
        let lattice = Lattice::cube(BoundingBox::unit_cube(), 4);
        let frac = FractureRectangle { id: 0, corners: [[0.5, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, 1.0, 1.0], [0.5, 0.0, 1.0]] };
        let mut grid = cartesian_dfm_mesher(&lattice, &[frac], |_| 1).unwrap();
        grid.set_apertures([1e-9, 1e-6, 1e-3, 1.0]);
        let cond = ConductivityField::from_fn(
            &grid,
            |d, c| if d == 3 { diagonal([k[c].0, k[c].1, k[c].2]) } else { diagonal([1e-3 * kf; 3]) },
            |_, _| 2e3 * kf,
        );
        let bc = FlowBc::from_fn(&grid, |d, f| {
            let x = grid.subdomains[d].faces[f].centroid[0];
            if x < 1e-10 { FaceBc::Head(left) } else if x > 1.0 - 1e-10 { FaceBc::Head(right) } else { FaceBc::NoFlux }
        });
        let disc = assemble_flow(&grid, &cond, &bc, None, IntersectionModel::Resolved).unwrap();
        let sol = solve_flow(&disc, 1e-13).unwrap();
        let scale = sol.boundary_flux.iter().map(|q| q.abs()).sum::<f64>().max(1e-300);
        prop_assert!(sol.boundary_flux.iter().sum::<f64>().abs() <= 1e-8 * scale);
        let (lo, hi) = (left.min(right), left.max(right));
        let slack = 1e-9 * (hi - lo).max(1.0);
        for h in sol.heads.iter().flatten() {
            prop_assert!(*h >= lo - slack && *h <= hi + slack, "{} outside [{}, {}]", h, lo, hi);
        }
    }
}
