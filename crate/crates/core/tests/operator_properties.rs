use hardylab_core::grid::{make_grid, Grid, SampledFunction};
use hardylab_core::operators::{apply, apply_general, apply_oracle, Cutoff, MultilinearOperator};
use hardylab_core::symbols::{builtin_symbol, constant_one, resolve_symbol, Symbol};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> Grid {
    make_grid(1, 4.0, 16).unwrap()
}

/// Random smooth periodic input: a few low modes with random coefficients.
fn input(grid: Grid) -> impl Strategy<Value = SampledFunction> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4).prop_map(move |c| {
        let l = grid.half_width();
        let vals = (0..grid.len())
            .map(|j| {
                let x = grid.coord(j);
                c.iter()
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let w = std::f64::consts::PI * k as f64 * x / l;
                        Complex64::new(a * w.cos(), b * w.sin())
                    })
                    .sum()
            })
            .collect();
        SampledFunction::new(grid, vals).unwrap()
    })
}

fn op(sym: Symbol) -> MultilinearOperator {
    MultilinearOperator::new(sym, grid()).unwrap()
}

fn close(a: &SampledFunction, b: &SampledFunction, tol: f64) -> bool {
    let scale = a.max_abs().max(b.max_abs()).max(1e-300);
    a.values().iter().zip(b.values()).all(|(x, y)| (x - y).norm() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_in_each_slot(
        f in input(grid()), g in input(grid()), h in input(grid()),
        a in -2.0f64..2.0, b in -2.0f64..2.0, slot in 0usize..2,
    ) {
        let t = op(builtin_symbol("sigma1_bilinear").unwrap());
        let combo = f.scale(a).add(&g.scale(b)).unwrap();
        let with = |x: &SampledFunction| {
            let ins: Vec<&SampledFunction> = if slot == 0 { vec![x, &h] } else { vec![&h, x] };
            apply(&t, &ins).unwrap().0
        };
        let expected = with(&f).scale(a).add(&with(&g).scale(b)).unwrap();
        prop_assert!(close(&with(&combo), &expected, 1e-12));
    }

    #[test]
    fn commutes_with_translation(f in input(grid()), g in input(grid()), k in -8isize..8) {
        let t = op(builtin_symbol("sigma1_bilinear").unwrap());
        let shifted = apply(&t, &[&f.shift_cells([k, 0]), &g.shift_cells([k, 0])]).unwrap().0;
        let expected = apply(&t, &[&f, &g]).unwrap().0.shift_cells([k, 0]);
        prop_assert!(close(&shifted, &expected, 1e-12));
    }

    #[test]
    fn symmetric_symbol_gives_symmetric_operator(f in input(grid()), g in input(grid())) {
        let t = op(builtin_symbol("sigma1_bilinear").unwrap());
        prop_assert!(close(&apply(&t, &[&f, &g]).unwrap().0, &apply(&t, &[&g, &f]).unwrap().0, 1e-12));
    }

    #[test]
    fn general_path_matches_oracle(f in input(grid()), g in input(grid()), h in input(grid())) {
        let t = op(builtin_symbol("sigma1").unwrap());
        let out = apply_general(&t, &[&f, &g, &h]).unwrap().0;
        let pts: Vec<Vec<f64>> = [0usize, 3, 7, 12].iter().map(|&j| vec![grid().coord(j)]).collect();
        let oracle = apply_oracle(&t, &[&f, &g, &h], &pts).unwrap();
        let scale = out.max_abs().max(1e-300);
        for (p, o) in [0usize, 3, 7, 12].iter().zip(&oracle) {
            prop_assert!((out.values()[*p] - o).norm() <= 1e-10 * scale);
        }
    }
}

#[test]
fn structured_and_general_paths_agree() {
    let g = grid();
    let f = |c: f64| {
        SampledFunction::from_real(g, (0..g.len()).map(|j| (-(g.coord(j) - c).powi(2)).exp()).collect()).unwrap()
    };
    let (a, b, c) = (f(0.0), f(0.5), f(-1.0));
    for name in ["sigma2", "sigma3", "sigma4"] {
        let sym = builtin_symbol(name).unwrap();
        let fast = apply(&op(sym.clone()), &[&a, &b, &c]).unwrap().0;
        let slow = apply_general(&op(sym.as_general()), &[&a, &b, &c]).unwrap().0;
        assert!(close(&fast, &slow, 1e-10), "{name}");
    }
}

#[test]
fn constant_symbol_gives_pointwise_product() {
    let g = grid();
    let a = SampledFunction::from_real(g, (0..g.len()).map(|j| (g.coord(j) * 0.7).cos()).collect()).unwrap();
    let b = SampledFunction::from_real(g, (0..g.len()).map(|j| (g.coord(j) * 0.3).sin() + 1.0).collect()).unwrap();
    let t = MultilinearOperator::new(constant_one(2, 1), g).unwrap().with_cutoff(Cutoff::None);
    let out = apply(&t, &[&a, &b]).unwrap().0;
    let expected = a.zip_with(&b, |x, y| x * y).unwrap();
    assert!(close(&out, &expected, 1e-12));
}

#[test]
fn powers_resolve_with_the_requested_arity() {
    let s = resolve_symbol("sigma1_bilinear^2", 2).unwrap();
    let xi = [0.3, -1.1];
    let base = builtin_symbol("sigma1_bilinear").unwrap().eval(&xi);
    assert!((s.eval(&xi) - base * base).norm() < 1e-15);
    assert!(resolve_symbol("sigma1", 2).is_err());
}
