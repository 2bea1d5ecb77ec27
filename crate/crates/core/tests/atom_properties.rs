use hardylab_core::atoms::{
    indicator, make_atom, make_atomic_sum, make_unprojected_atom, moment_tolerance, moments, Cube, FiniteAtomicSum,
};
use hardylab_core::grid::{make_grid, Grid};
use proptest::prelude::*;

fn grid() -> Grid {
    make_grid(1, 16.0, 1024).unwrap()
}

/// Grid-aligned cube with side `2^level` that keeps its `Q**` inside the box.
fn cube() -> impl Strategy<Value = Cube> {
    (-1i32..=0, -64i64..=64).prop_map(|(level, c)| {
        let g = grid();
        Cube::new(vec![c as f64 * g.spacing()], 2f64.powi(level)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn atoms_are_bounded_supported_and_moment_free(q in cube(), big_n in 0usize..=8, seed in any::<u64>()) {
        let g = grid();
        let a = make_atom(&q, 1.0, big_n, seed, &g).unwrap();
        let v = a.values();
        prop_assert!(v.max_abs() <= 1.0);
        prop_assert!((v.max_abs() - 0.5).abs() < 1e-12);
        let chi = indicator(&q, &g);
        for (x, c) in v.values().iter().zip(chi.values()) {
            prop_assert!(c.re == 1.0 || *x == num_complex::Complex64::new(0.0, 0.0));
        }
        let ms = moments(v, big_n, &q);
        let orders = hardylab_core::symbols::multi_indices(1, big_n);
        for (m, alpha) in ms.iter().zip(&orders) {
            prop_assert!(m.norm() <= moment_tolerance(&q, alpha[0]), "alpha {:?}: {}", alpha, m.norm());
        }
    }

    #[test]
    fn construction_is_seed_deterministic(q in cube(), big_n in 0usize..=6, seed in any::<u64>()) {
        let g = grid();
        let a = make_atom(&q, 0.5, big_n, seed, &g).unwrap();
        let b = make_atom(&q, 0.5, big_n, seed, &g).unwrap();
        let same = a.values().values().iter().zip(b.values().values())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        prop_assert!(same);
        let c = make_atom(&q, 0.5, big_n, seed.wrapping_add(1), &g).unwrap();
        prop_assert!(a.values().values() != c.values().values());
    }

    #[test]
    fn atomic_sums_stay_below_their_majorant(
        entries in prop::collection::vec((0.0f64..3.0, cube(), any::<u64>()), 1..6),
        big_n in 0usize..=4,
    ) {
        let g = grid();
        let s = make_atomic_sum(&entries, 1.0, big_n, &g).unwrap();
        for (r, m) in s.realized().values().iter().zip(s.majorant().values()) {
            prop_assert!(r.norm() <= m.re * (1.0 + 1e-12));
        }
        let total: f64 = entries.iter().map(|e| e.0).sum();
        prop_assert!(s.majorant().max_abs() <= total * (1.0 + 1e-12));
    }
}

#[test]
fn unprojected_control_keeps_its_moments() {
    let g = grid();
    let q = Cube::new(vec![0.0], 1.0).unwrap();
    let worst = (0..20u64)
        .map(|seed| {
            let a = make_unprojected_atom(&q, 1.0, 4, seed, &g).unwrap();
            moments(a.values(), 4, &q)
                .iter()
                .enumerate()
                .map(|(k, m)| m.norm() / moment_tolerance(&q, k))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e3, "{worst}");
}

#[test]
fn guards_reject_unresolved_and_clipped_cubes() {
    let g = grid();
    assert!(make_atom(&Cube::new(vec![0.0], 0.25).unwrap(), 1.0, 2, 1, &g).is_err());
    assert!(make_atom(&Cube::new(vec![15.0], 1.0).unwrap(), 1.0, 2, 1, &g).is_err());
    let a = make_atom(&Cube::new(vec![0.0], 1.0).unwrap(), 1.0, 2, 1, &g).unwrap();
    assert!(FiniteAtomicSum::from_atoms(&g, vec![(-1.0, a)]).is_err());
}
