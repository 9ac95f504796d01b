//! Round-trip and robustness properties of the two file formats over
//! seeded random networks and random byte inputs.

use pbn_cli::elvira::{parse_elvira, write_elvira};
use pbn_cli::native::{parse_native, write_native};
use pbn_core::bayesnet::{student_network, BayesianNetwork};
use pbn_core::ci::random_network;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_joint_diff(a: &BayesianNetwork, b: &BayesianNetwork) -> f64 {
    let ja = a.joint_distribution().unwrap();
    let jb = b.joint_distribution().unwrap();
    ja.values()
        .iter()
        .zip(jb.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn elvira_round_trip_on_random_networks() {
    for seed in 0..100 {
        let net = random_network(2 + (seed as usize % 4), 3, seed);
        let text = write_elvira("random", &net);
        let parsed = parse_elvira(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let diff = max_joint_diff(&net, &parsed.network);
        assert!(diff < 1e-6, "seed {seed}: joint drifted by {diff}");
    }
}

#[test]
fn native_round_trip_is_exact_on_random_networks() {
    for seed in 0..100 {
        let net = random_network(2 + (seed as usize % 4), 3, seed);
        let text = write_native("random", &net);
        let parsed = parse_native(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        for v in net.variables() {
            assert_eq!(
                net.cpt(v.name()).unwrap().values(),
                parsed.network.cpt(v.name()).unwrap().values(),
                "seed {seed}, node {}",
                v.name()
            );
        }
        // and the rendering itself is a fixed point
        assert_eq!(write_native("random", &parsed.network), text, "seed {seed}");
    }
}

#[test]
fn student_round_trips_reproduce_regression_numbers() {
    use pbn_core::bracket::{evaluate, parse_query, FunctionRegistry};

    let net = student_network();
    let text = write_elvira("Student", &net);
    let reparsed = parse_elvira(&text).unwrap().network;
    let funcs = FunctionRegistry::new();
    let cases = [
        ("P(G=g1)", 0.3620),
        ("P(G=g2)", 0.2884),
        ("P(G=g3)", 0.3496),
        ("P(L=l1)", 0.502),
        ("P(I=i1 | G=g3)", 0.079),
        ("P(L=l1 | I=i0, D=d0)", 0.513),
    ];
    for (query, expected) in cases {
        let result = evaluate(&parse_query(query).unwrap(), &reparsed, &funcs).unwrap();
        let value = result.as_scalar().unwrap();
        assert!((value - expected).abs() < 5e-4, "{query}: {value}");
    }
}

/// Mixes raw random bytes, random ASCII and mutations of valid
/// documents; the parsers must return a result, never panic.
fn fuzz_inputs(count: usize, max_len: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elv = write_elvira("Student", &student_network());
    let json = write_native("Student", &student_network());
    let mut inputs = Vec::with_capacity(count);
    for _ in 0..count {
        let len = rng.gen_range(0..=max_len);
        let input = match rng.gen_range(0..4u8) {
            0 => (0..len).map(|_| rng.gen_range(' '..='~')).collect(),
            1 => {
                let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
            _ => {
                // mutate a valid document: truncate and splice
                let base = if rng.gen() { &elv } else { &json };
                let mut s: Vec<char> = base.chars().collect();
                for _ in 0..rng.gen_range(1..8) {
                    if s.is_empty() {
                        break;
                    }
                    let i = rng.gen_range(0..s.len());
                    match rng.gen_range(0..3u8) {
                        0 => s[i] = rng.gen_range(' '..='~'),
                        1 => {
                            s.remove(i);
                        }
                        _ => s.truncate(i),
                    }
                }
                s.into_iter().take(max_len).collect()
            }
        };
        inputs.push(input);
    }
    inputs
}

#[test]
fn parsers_never_panic_on_arbitrary_input() {
    for input in fuzz_inputs(2000, 4096, 11) {
        let _ = parse_elvira(&input);
        let _ = parse_native(&input);
    }
}
