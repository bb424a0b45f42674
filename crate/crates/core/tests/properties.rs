//! Randomized invariants of rotations, decompositions and transition
//! probabilities.

use std::f64::consts::PI;

use kinscape::quantum::{coherent_probability, transition_probability, Level};
use kinscape::su2rep::{d_matrix, euler_from_unitary, exp_spin1, Convention, EulerAngles};
use num_complex::Complex64;
use proptest::prelude::*;

fn convention() -> impl Strategy<Value = Convention> {
    prop_oneof![Just(Convention::Zyz), Just(Convention::Yzy)]
}

fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
    (-PI..PI, 0.0..PI, -PI..PI)
}

proptest! {
    #[test]
    fn rotations_are_unitary_with_unit_determinant(c in convention(), (a, b, g) in angles()) {
        let u = d_matrix(&EulerAngles::new(a, b, g, c));
        prop_assert!(u.unitarity_defect() < 1e-13);
        prop_assert!((u.as_matrix().determinant() - Complex64::from(1.0)).norm() < 1e-13);
    }

    #[test]
    fn decomposition_reconstructs_phased_rotations(
        c in convention(),
        n in prop::array::uniform3(-1.0f64..1.0),
        theta in -PI..PI,
        phase in -PI..PI,
    ) {
        prop_assume!(n.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        let u = exp_spin1(n, theta).scale(Complex64::from_polar(1.0, phase));
        let r = euler_from_unitary(&u, c).unwrap();
        prop_assert!(r.in_r);
        let back = d_matrix(&r.angles.unwrap()).scale(Complex64::from_polar(1.0, r.global_phase));
        prop_assert!(back.frobenius_distance(&u) < 1e-9);
    }

    #[test]
    fn measured_probabilities_form_a_distribution(
        (a1, b1, g1) in angles(),
        (a2, b2, g2) in angles(),
        m in 1u8..=3,
    ) {
        let u1 = d_matrix(&EulerAngles::zyz(a1, b1, g1));
        let u2 = d_matrix(&EulerAngles::zyz(a2, b2, g2));
        let measured = Level::from_number(m).unwrap();
        let total: f64 = Level::ALL.iter().map(|&k| transition_probability(&u1, measured, &u2, k).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for k in Level::ALL {
            let p = transition_probability(&u1, measured, &u2, k).unwrap();
            prop_assert!((-1e-14..=1.0 + 1e-14).contains(&p));
        }
    }

    #[test]
    fn coherent_transfer_to_level_two_is_at_most_half((a, b, g) in angles()) {
        let u = d_matrix(&EulerAngles::zyz(a, b, g));
        prop_assert!(coherent_probability(&u, Level::Two) <= 0.5 + 1e-12);
    }
}
