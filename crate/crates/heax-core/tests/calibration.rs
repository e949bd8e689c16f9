//! Noise calibration harness. Run manually with
//! `cargo test -p heax-core --test calibration -- --ignored --nocapture`;
//! the printed maxima, doubled, are the regression bounds frozen in the
//! acceptance suite.

use heax_core::ckks::{self, HeParams, ParamSet, Plaintext};
use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

mod util;
use util::{max_abs_bigint, negacyclic_i128, round_div};

const PLAINTEXT_BOUND: i64 = 1 << 24;

fn random_coeffs(n: usize, bound: i64, rng: &mut ChaCha20Rng) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

/// Maximum per-coefficient error of encrypt -> mul -> relinearize ->
/// rescale -> decrypt against the exact rounded product, over `trials`.
fn measure_pipeline(set: ParamSet, trials: usize, seed: u64) -> BigInt {
    let params = HeParams::for_set(set).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sk = ckks::keygen(&params, &mut rng);
    let rlk = ckks::relin_keygen(&sk, &params, &mut rng).unwrap();
    let level = params.max_level();
    let p_last = BigInt::from(params.basis.moduli()[level].value());

    let mut worst = BigInt::from(0);
    for _ in 0..trials {
        let u0 = random_coeffs(params.n, PLAINTEXT_BOUND, &mut rng);
        let u1 = random_coeffs(params.n, PLAINTEXT_BOUND, &mut rng);
        let pt0 = Plaintext::from_signed_coeffs(&u0, &params.basis, level, 1.0);
        let pt1 = Plaintext::from_signed_coeffs(&u1, &params.basis, level, 1.0);
        let ct0 = ckks::sym_enc(&pt0, &sk, &params, &mut rng);
        let ct1 = ckks::sym_enc(&pt1, &sk, &params, &mut rng);

        let prod = ckks::hom_mul(&ct0, &ct1, &params).unwrap();
        let relin = ckks::relinearize(&prod, &rlk, &params).unwrap();
        let rescaled = ckks::rescale(&relin, &params).unwrap();
        let got = ckks::decrypt_centered(&rescaled, &sk, &params).unwrap();

        let exact = negacyclic_i128(&u0, &u1);
        for (g, e) in got.iter().zip(&exact) {
            let expected = round_div(&BigInt::from(*e), &p_last);
            let err = (g - expected).magnitude().clone();
            if BigInt::from(err.clone()) > worst {
                worst = err.into();
            }
        }
    }
    worst
}

/// Maximum decryption drift of an identity key switch over `trials`.
fn measure_key_switch(set: ParamSet, trials: usize, seed: u64) -> BigInt {
    let params = HeParams::for_set(set).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sk = ckks::keygen(&params, &mut rng);
    let ksk = ckks::ksk_gen(&sk.s, &sk, &params, &mut rng).unwrap();
    let level = params.max_level();

    let mut worst = BigInt::from(0);
    for _ in 0..trials {
        let u = random_coeffs(params.n, PLAINTEXT_BOUND, &mut rng);
        let pt = Plaintext::from_signed_coeffs(&u, &params.basis, level, 1.0);
        let ct = ckks::sym_enc(&pt, &sk, &params, &mut rng);
        let switched = ckks::key_switch(&ct, &ksk, &params).unwrap();
        let before = ckks::decrypt_centered(&ct, &sk, &params).unwrap();
        let after = ckks::decrypt_centered(&switched, &sk, &params).unwrap();
        let diff: Vec<BigInt> = before.iter().zip(&after).map(|(a, b)| a - b).collect();
        let m = max_abs_bigint(&diff);
        if m > worst {
            worst = m;
        }
    }
    worst
}

#[test]
#[ignore = "manual calibration run"]
fn calibrate_pipeline_error() {
    for (set, trials) in [(ParamSet::A, 50), (ParamSet::B, 30), (ParamSet::C, 15)] {
        let worst = measure_pipeline(set, trials, 0xca11b);
        println!("pipeline {set:?}: max |error| = {worst} over {trials} trials");
    }
}

#[test]
#[ignore = "manual calibration run"]
fn calibrate_key_switch_noise() {
    for (set, trials) in [
        (ParamSet::A, 1000),
        (ParamSet::B, 1000),
        (ParamSet::C, 1000),
    ] {
        let worst = measure_key_switch(set, trials, 0xca12b);
        println!("key switch {set:?}: max |drift| = {worst} over {trials} trials");
    }
}
