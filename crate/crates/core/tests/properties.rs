use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector4;
use proptest::prelude::*;
use symchord_core::chords::{partner_chord, shoot, ShootOptions};
use symchord_core::flow::{integrate, integrate_variational, FlowOptions};
use symchord_core::homology::{brute_force_realizable, realizable, z2_homology, GradedZ2Complex, HomologyProfile};
use symchord_core::index::{rs_index, IndexOptions};
use symchord_core::kepler::{circular_data, circular_radius};
use symchord_core::systems::{make_system, symplectic_matrix, Branch, Involution, SYSTEM_IDS};

fn point() -> impl Strategy<Value = Vector4<f64>> {
    (0.3f64..1.5, 0.0f64..2.0 * PI, -1.5f64..1.5, -1.5f64..1.5)
        .prop_map(|(r, a, p1, p2)| Vector4::new(r * a.cos(), r * a.sin(), p1, p2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn involutions_preserve_energy_and_reverse_the_field(id in 0..SYSTEM_IDS.len(), x in point()) {
        let sys = make_system(SYSTEM_IDS[id]).unwrap();
        let v = sys.vector_field_state(&x).unwrap();
        for rho in sys.involutions() {
            let y = rho.apply_state(&x);
            prop_assert!((sys.energy(&y) - sys.energy(&x)).abs() < 1e-12);
            let w = sys.vector_field_state(&y).unwrap();
            prop_assert!((rho.matrix() * v + w).norm() < 1e-10);
        }
    }

    #[test]
    fn reflections_commute_exactly_when_orthogonal(t1 in 0.0f64..PI, gap in 0.05f64..PI - 0.05) {
        let a = Involution::reflection("a", t1);
        let orthogonal = Involution::reflection("b", t1 + FRAC_PI_2);
        let other = Involution::reflection("c", t1 + gap);
        let commutator = |x: &Involution, y: &Involution| (x.matrix() * y.matrix() - y.matrix() * x.matrix()).norm();
        prop_assert!(commutator(&a, &orthogonal) < 1e-12);
        if (gap - FRAC_PI_2).abs() > 1e-3 {
            prop_assert!(commutator(&a, &other) > 1e-6);
        }
    }

    #[test]
    fn radius_increases_with_energy(t1 in -3.0f64..-1.5001, t2 in -3.0f64..-1.5001) {
        prop_assume!((t1 - t2).abs() > 1e-9);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(circular_radius(lo).unwrap() < circular_radius(hi).unwrap());
    }

    #[test]
    fn realizability_matches_enumeration(degrees in prop::collection::vec(-1i64..3, 0..7), target in prop::collection::btree_map(-1i64..3, 1usize..3, 0..3)) {
        let target: HomologyProfile = target;
        prop_assert_eq!(realizable(&degrees, &target), brute_force_realizable(&degrees, &target).unwrap());
    }

    /// Direct sums of single generators and acyclic pairs.
    #[test]
    fn homology_of_split_complexes(singles in prop::collection::vec(-3i64..3, 0..5), pairs in prop::collection::vec(-3i64..3, 0..5)) {
        let mut gens = Vec::new();
        let mut boundary = Vec::new();
        let mut expected = HomologyProfile::new();
        for &d in &singles {
            gens.push((format!("s{}", gens.len()), d));
            *expected.entry(d).or_insert(0) += 1;
        }
        for &d in &pairs {
            let i = gens.len();
            gens.push((format!("a{i}"), d));
            gens.push((format!("b{i}"), d + 1));
            boundary.push([i, i + 1]);
        }
        let cx = GradedZ2Complex::new(gens, boundary).unwrap();
        prop_assert_eq!(z2_homology(&cx).unwrap(), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// `rho(x(t))` flowed for `t` lands back on `x(0)` when `x(0)` is fixed,
    /// up to local errors amplified by the linearised flow.
    #[test]
    fn trajectories_are_reversible(tau in -2.4f64..-1.6, ds in -0.1f64..0.1, t in 0.1f64..3.0) {
        let sys = make_system("rotating-kepler").unwrap();
        let rho = sys.involution("rho0").unwrap();
        let s = circular_radius(tau).unwrap() + ds;
        let x0 = sys.fix_chart(rho, s, tau, Branch::Direct).unwrap();
        let opts = FlowOptions::default();
        let Ok(seg) = integrate_variational(&sys, &x0, t, &opts) else { return Ok(()) };
        let amplification = seg.final_monodromy().unwrap().norm();
        let back = rho.apply(&seg.final_state());
        let Ok(seg2) = integrate(&sys, &back, t, &opts) else { return Ok(()) };
        let err = seg2.final_state().distance(&x0);
        prop_assert!(err < 1e-10 * (1.0 + amplification), "{err:e} with |M| = {amplification:.1}");
    }

    #[test]
    fn circular_orbits_conserve_energy(tau in -2.4f64..-1.56, cover in 1u64..=3) {
        let sys = make_system("rotating-kepler").unwrap();
        let c = circular_data(tau).unwrap();
        let seg = integrate(&sys, &c.point, c.cover_duration(cover), &FlowOptions::default()).unwrap();
        prop_assert!(seg.max_energy_drift < 1e-9);
    }

    #[test]
    fn monodromy_is_symplectic_with_reciprocal_spectrum(tau in -2.4f64..-1.56) {
        let sys = make_system("rotating-kepler").unwrap();
        let c = circular_data(tau).unwrap();
        let seg = integrate_variational(&sys, &c.point, c.period(), &FlowOptions::default()).unwrap();
        let m = seg.final_monodromy().unwrap();
        let j = symplectic_matrix();
        prop_assert!((m.transpose() * j * m - j).norm() < 1e-6);
        let eig = m.complex_eigenvalues();
        for l in eig.iter() {
            let inv = l.inv();
            prop_assert!(eig.iter().any(|k| (k - inv).norm() < 1e-5), "{:?}", eig);
        }
    }

    #[test]
    fn partner_chords_share_index_and_verdict(tau in -2.4f64..-1.56, cover in 1u64..=3) {
        let sys = make_system("rotating-kepler").unwrap();
        let opts = ShootOptions::default();
        let c = circular_data(tau).unwrap();
        let ch = shoot(&sys, "rho0", tau, c.r, c.cover_duration(cover), &opts).unwrap();
        prop_assume!(ch.degeneracy_measure.abs() > 1e-4);
        let partner = partner_chord(&sys, &ch, &opts).unwrap();
        prop_assert!((partner.duration - ch.duration).abs() < 1e-8);
        prop_assert_eq!(partner.nondegenerate, ch.nondegenerate);
        let io = IndexOptions::default();
        prop_assert_eq!(rs_index(&sys, &ch, &io).unwrap().mu_x2, rs_index(&sys, &partner, &io).unwrap().mu_x2);
    }
}
