use hardylab_core::grid::{make_grid, Grid, SampledFunction};
use hardylab_core::maximal::{hl_maximal, hp_quasinorm, make_bump, smooth_maximal, ScaleLadder};
use proptest::prelude::*;

fn grid() -> Grid {
    make_grid(1, 8.0, 128).unwrap()
}

/// Nonnegative data supported in `[-L/4, L/4]`.
fn central(grid: Grid) -> impl Strategy<Value = SampledFunction> {
    prop::collection::vec(0.0f64..1.0, grid.len()).prop_map(move |v| {
        let l = grid.half_width();
        let vals = v
            .iter()
            .enumerate()
            .map(|(j, &x)| if grid.coord(j).abs() <= 0.25 * l { x } else { 0.0 })
            .collect();
        SampledFunction::from_real(grid, vals).unwrap()
    })
}

fn signed(grid: Grid) -> impl Strategy<Value = SampledFunction> {
    prop::collection::vec(-1.0f64..1.0, grid.len()).prop_map(move |v| SampledFunction::from_real(grid, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smooth_maximal_is_bounded_by_the_sup(f in signed(grid()), half in any::<bool>()) {
        let g = grid();
        let m = smooth_maximal(&f, &make_bump(1).unwrap(), &ScaleLadder::new(&g, half)).unwrap();
        prop_assert!(m.max_abs() <= f.max_abs() * (1.0 + 1e-12));
    }

    #[test]
    fn hl_is_sublinear_and_homogeneous(f in signed(grid()), h in signed(grid()), c in -3.0f64..3.0) {
        let g = grid();
        let ladder = ScaleLadder::new(&g, true);
        let mf = hl_maximal(&f, &ladder).unwrap();
        let mh = hl_maximal(&h, &ladder).unwrap();
        let msum = hl_maximal(&f.add(&h).unwrap(), &ladder).unwrap();
        let mc = hl_maximal(&f.scale(c), &ladder).unwrap();
        for j in 0..g.len() {
            let (a, b, s) = (mf.values()[j].re, mh.values()[j].re, msum.values()[j].re);
            prop_assert!(s <= (a + b) * (1.0 + 1e-12) + 1e-15);
            prop_assert!((mc.values()[j].re - c.abs() * a).abs() <= 1e-12 * a.max(1e-300));
        }
    }

    #[test]
    fn hl_is_monotone(f in central(grid()), h in central(grid())) {
        let g = grid();
        let ladder = ScaleLadder::new(&g, false);
        let big = f.zip_with(&h, |a, b| num_complex::Complex64::new(a.re.max(b.re), 0.0)).unwrap();
        let mf = hl_maximal(&f, &ladder).unwrap();
        let mb = hl_maximal(&big, &ladder).unwrap();
        for (a, b) in mf.values().iter().zip(mb.values()) {
            prop_assert!(a.re <= b.re * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn smooth_maximal_is_dominated_by_hl(f in central(grid()), half in any::<bool>()) {
        let g = grid();
        let phi = make_bump(1).unwrap();
        let ladder = ScaleLadder::new(&g, half);
        let c = phi.domination_constant(&g, &ladder);
        let ms = smooth_maximal(&f, &phi, &ladder).unwrap();
        let mh = hl_maximal(&f, &ladder).unwrap();
        for j in 0..g.len() {
            if g.coord(j).abs() <= 0.25 * g.half_width() {
                prop_assert!(ms.values()[j].re <= c * mh.values()[j].re * (1.0 + 1e-9) + 1e-15);
            }
        }
    }

    #[test]
    fn hp_quasinorm_scales_exactly(f in signed(grid()), c in 0.01f64..100.0, p in 0.3f64..3.0) {
        let g = grid();
        let phi = make_bump(1).unwrap();
        let ladder = ScaleLadder::new(&g, false);
        let a = hp_quasinorm(&f.scale(c), p, &phi, &ladder).unwrap();
        let b = c * hp_quasinorm(&f, p, &phi, &ladder).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn domination_constant_is_modest() {
    let g = grid();
    let phi = make_bump(1).unwrap();
    let c = phi.domination_constant(&g, &ScaleLadder::new(&g, true));
    assert!(c > 0.5 && c < 5.0, "{c}");
}
