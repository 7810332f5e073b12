use dicke_core::analysis::fidelity;
use dicke_core::dynamics::{measure_ancilla, AncillaOutcome, Propagator};
use dicke_core::{BasisTag, Complex64, OperatorMatrix, StateVector};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn hermitian(dim: usize) -> impl Strategy<Value = OperatorMatrix> {
    proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), dim * dim).prop_map(move |v| {
        let a = DMatrix::from_iterator(dim, dim, v.into_iter().map(|(re, im)| Complex64::new(re, im)));
        let h = &a + a.adjoint();
        OperatorMatrix::hermitian(BasisTag::ion_register(3), h).unwrap()
    })
}

fn state(basis: BasisTag) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), basis.dim())
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(move |v| {
            let amps: Vec<Complex64> = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            StateVector::from_vec(basis, amps).unwrap().normalized().unwrap()
        })
}

proptest! {
    #[test]
    fn propagation_is_unitary(h in hermitian(8), psi in state(BasisTag::ion_register(3)), t in -5.0f64..5.0) {
        let prop = Propagator::new(&h).unwrap();
        let out = prop.apply(&psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let back = prop.apply(&out, -t).unwrap();
        prop_assert!(fidelity(&back, &psi).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        a in state(BasisTag::ion_register(3)),
        b in state(BasisTag::ion_register(3)),
    ) {
        let ab = fidelity(&a, &b).unwrap();
        let ba = fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-14);
        prop_assert!((-1e-14..=1.0 + 1e-14).contains(&ab));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_collapses_onto_one_ancilla_level(
        psi in state(BasisTag::ion_register(2).with_ancilla()),
        seed in any::<u64>(),
    ) {
        let rec = measure_ancilla(&psi, seed).unwrap();
        prop_assert!((rec.post_state.norm() - 1.0).abs() < 1e-12);
        let b = *rec.post_state.basis();
        let other = match rec.outcome {
            AncillaOutcome::AncillaExcited => 0,
            AncillaOutcome::AncillaGround => 1,
        };
        for x in 0..b.ion_dim() {
            prop_assert!(rec.post_state.amplitudes()[b.index(other, x, 0)].norm() < 1e-15);
        }
        let again = measure_ancilla(&psi, seed).unwrap();
        prop_assert_eq!(again.outcome, rec.outcome);
    }
}

#[test]
fn measurement_frequencies_follow_born_rule() {
    let basis = BasisTag::ion_register(1).with_ancilla();
    let p = 0.3f64;
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    amps[basis.index(1, 0, 0)] = Complex64::new(p.sqrt(), 0.0);
    amps[basis.index(0, 1, 0)] = Complex64::new(0.0, (1.0 - p).sqrt());
    let psi = StateVector::from_vec(basis, amps).unwrap();
    let trials = 20_000;
    let excited = (0..trials)
        .filter(|&s| measure_ancilla(&psi, s).unwrap().outcome == AncillaOutcome::AncillaExcited)
        .count();
    let freq = excited as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((freq - p).abs() < 4.0 * sigma, "freq {freq}");
}
