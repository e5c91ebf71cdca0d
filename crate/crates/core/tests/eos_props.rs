use proptest::prelude::*;
use sale_core::eos::{
    eos_energy, eos_pressure, mixed_cell_pressure, steinberg_yield, CellThermo, Material,
    MaterialSet, Steinberg,
};

proptest! {
    #[test]
    fn energy_pressure_round_trip(
        rho in 1e-3f64..1e3,
        e in 1e-9f64..1e3,
        gamma in 1.01f64..3.0,
    ) {
        let back = eos_energy(rho, eos_pressure(rho, e, gamma), gamma).unwrap();
        prop_assert!(((back - e) / e).abs() < 1e-14, "{} vs {}", back, e);
    }

    #[test]
    fn pressure_non_negative_for_non_negative_energy(
        rho in 0.0f64..1e3,
        e in 0.0f64..1e3,
        gamma in 1.01f64..3.0,
    ) {
        prop_assert!(eos_pressure(rho, e, gamma) >= 0.0);
    }

    #[test]
    fn pure_cell_matches_scalar_path_bitwise(
        rho in 1e-3f64..1e3,
        e in -1.0f64..1e3,
        gamma in 1.01f64..3.0,
        materials in 1usize..5,
        which in 0usize..5,
    ) {
        let which = which % materials;
        let set = MaterialSet::new(
            (0..materials)
                .map(|m| Material::ideal_gas(&format!("m{m}"), gamma + 0.1 * m as f64, 1.0))
                .collect(),
        )
        .unwrap();
        let mut cell = CellThermo {
            fraction: vec![0.0; materials],
            density: vec![0.0; materials],
            energy: vec![0.0; materials],
            ..Default::default()
        };
        cell.fraction[which] = 1.0;
        cell.density[which] = rho;
        cell.energy[which] = e;
        let scalar = eos_pressure(rho, e, set.gamma(which));
        prop_assert_eq!(mixed_cell_pressure(&cell, &set).unwrap().to_bits(), scalar.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn yield_is_non_decreasing_in_plastic_strain(
        g0 in 0.1f64..10.0,
        y0 in 0.0f64..5.0,
        headroom in 0.0f64..5.0,
        beta in 0.0f64..50.0,
        n in 0.0f64..1.0,
        shear in 0.1f64..20.0,
        a in 0.0f64..2.0,
        step in 0.0f64..2.0,
    ) {
        let s = Steinberg { g0, gp: 0.0, gt: 0.0, y0, beta, n, ymax: y0 + headroom };
        prop_assert!(steinberg_yield(&s, a + step, shear) >= steinberg_yield(&s, a, shear));
        prop_assert!(steinberg_yield(&s, a, shear) <= s.ymax * shear / g0 * (1.0 + 1e-15));
    }
}
