use dicke_core::dsl::{format_angle, parse_angle, parse_schedule};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = String> {
    prop_oneof![
        (0i32..=8, 1u32..=8).prop_map(|(p, q)| format!("{p}pi/{q}")),
        Just("pi".to_string()),
        (0.0f64..10.0).prop_map(|x| x.to_string()),
    ]
}

fn phase() -> impl Strategy<Value = String> {
    prop_oneof![
        (-8i32..=8, 1u32..=8).prop_map(|(p, q)| format!("{p}pi/{q}")),
        Just("-pi/2".to_string()),
        (-10.0f64..10.0).prop_map(|x| x.to_string()),
    ]
}

fn model() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        Just(" model=two-level".to_string()),
        Just(" model=symmetric".to_string()),
        Just(" model=full".to_string()),
    ]
}

fn pulse(n: usize, n_max: usize) -> impl Strategy<Value = String> {
    prop_oneof![
        (prop_oneof![Just("blue"), Just("red")], 0..n, 0..n_max, angle(), phase(), model()).prop_map(
            |(kind, k0, n0, a, p, m)| format!("pulse {kind} k0={k0} n0={n0} angle={a} phase={p}{m}")
        ),
        (angle(), phase()).prop_map(|(a, p)| format!("pulse carrier angle={a} phase={p}")),
        (0..n_max, angle()).prop_map(|(n0, a)| format!("pulse ancilla_red n0={n0} angle={a}")),
        Just("measure ancilla".to_string()),
    ]
}

fn document() -> impl Strategy<Value = String> {
    (1usize..=5, 2usize..=6).prop_flat_map(|(n, n_max)| {
        (
            prop_oneof![Just(10.0), Just(100.0), 1.0f64..1000.0],
            0..=n,
            0..=n_max,
            proptest::option::of(any::<u64>()),
            proptest::collection::vec(pulse(n, n_max), 0..6),
            proptest::collection::vec((0..=n_max, 0..=n), 0..3),
        )
            .prop_map(move |(ratio, k, fock, seed, pulses, expects)| {
                let mut text = format!("# generated\nconfig N={n} nmax={n_max} ratio={ratio}\n");
                if let Some(s) = seed {
                    text.push_str(&format!("seed {s}\n"));
                }
                text.push_str(&format!("init fock={fock} dicke={k}\n"));
                for p in pulses {
                    text.push_str(&p);
                    text.push('\n');
                }
                for (f, d) in expects {
                    text.push_str(&format!("expect fock={f} dicke={d}\n"));
                }
                text
            })
    })
}

proptest! {
    #[test]
    fn serialized_schedules_reparse_identically(text in document()) {
        let doc = parse_schedule(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let canon = doc.to_text().unwrap();
        let again = parse_schedule(&canon).unwrap();
        prop_assert!(doc.same_schedule(&again));
        prop_assert_eq!(again.to_text().unwrap(), canon);
    }

    #[test]
    fn angle_format_round_trips(x in -100.0f64..100.0) {
        prop_assert_eq!(parse_angle(&format_angle(x)), Some(x));
    }

    #[test]
    fn pi_rationals_round_trip(p in -64i64..=64, q in 1i64..=64) {
        let x = p as f64 * std::f64::consts::PI / q as f64;
        prop_assert_eq!(parse_angle(&format_angle(x)), Some(x));
    }
}

#[test]
fn bundled_corpus_round_trips() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("schedules");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let doc = parse_schedule(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let again = parse_schedule(&doc.to_text().unwrap()).unwrap();
        assert!(doc.same_schedule(&again), "{}", path.display());
        count += 1;
    }
    assert!(count >= 10);
}
