//! Acceptance checks for the file-based interface: bitwise serialization
//! round-trips, the mul -> relin -> rescale pipeline through the binary,
//! and the dataflow verifier subcommand.

use std::path::Path;
use std::process::{Command, Output};

use heax_cli::serial;
use heax_core::ckks::{self, HeParams, ParamSet, Plaintext};
use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Frozen per-set pipeline error bounds; same constants as the scheme
/// acceptance suite.
const PIPELINE_ERROR_BOUND: [(ParamSet, &str, u64); 3] = [
    (ParamSet::A, "A", 244),
    (ParamSet::B, "B", 274),
    (ParamSet::C, "C", 386),
];

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion {
            name,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, cond: bool, msg: impl FnOnce() -> String) {
        if !cond {
            self.failures.push(msg());
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("{}: PASS", self.name);
        } else {
            println!("{}: FAIL ({} issue(s))", self.name, self.failures.len());
            for f in &self.failures {
                println!("  - {f}");
            }
            panic!("{} failed", self.name);
        }
    }
}

fn heax() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heax"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn negacyclic_i128(a: &[i64], b: &[i64]) -> Vec<i128> {
    let n = a.len();
    let mut c = vec![0i128; n];
    for i in 0..n {
        let ai = a[i] as i128;
        for j in 0..n {
            let prod = ai * b[j] as i128;
            if i + j < n {
                c[i + j] += prod;
            } else {
                c[i + j - n] -= prod;
            }
        }
    }
    c
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    let q = a / b;
    if (a - &q * b).sign() == num_bigint::Sign::Minus {
        q - 1
    } else {
        q
    }
}

fn round_div(x: &BigInt, d: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    floor_div(&(x * &two + d), &(d * &two))
}

fn write_coeffs(path: &Path, coeffs: &[i64]) {
    let text: String = coeffs.iter().map(|c| format!("{c}\n")).collect();
    std::fs::write(path, text).unwrap();
}

/// Runs the full file-based pipeline for one parameter set and returns the
/// worst per-coefficient error against the exact rounded product.
fn file_pipeline(set_name: &str, set: ParamSet, dir: &Path) -> BigInt {
    let params = HeParams::for_set(set).unwrap();
    let keys = dir.join("keys");
    run_ok(
        heax()
            .args(["keygen", "--set", set_name, "--seed", "7", "--out-dir"])
            .arg(&keys),
    );

    // The params file carries k ciphertext moduli plus the special one.
    let written =
        serial::deserialize_params(&std::fs::read(keys.join("params.heax")).unwrap()).unwrap();
    assert_eq!(written.modulus_values().len(), params.k + 1);

    let mut rng = ChaCha20Rng::seed_from_u64(1000);
    let bound = 1i64 << 24;
    let u0: Vec<i64> = (0..params.n)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    let u1: Vec<i64> = (0..params.n)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    write_coeffs(&dir.join("u0.txt"), &u0);
    write_coeffs(&dir.join("u1.txt"), &u1);

    let params_file = keys.join("params.heax");
    let secret = keys.join("secret.heax");
    for (idx, seed) in [(0, "21"), (1, "22")] {
        run_ok(
            heax()
                .args(["encrypt", "--params"])
                .arg(&params_file)
                .arg("--secret")
                .arg(&secret)
                .arg("--coeffs")
                .arg(dir.join(format!("u{idx}.txt")))
                .args(["--scale", "1", "--seed", seed, "--out"])
                .arg(dir.join(format!("ct{idx}.heax"))),
        );
    }
    run_ok(
        heax()
            .args(["eval", "mul", "--params"])
            .arg(&params_file)
            .arg(dir.join("ct0.heax"))
            .arg(dir.join("ct1.heax"))
            .arg("--out")
            .arg(dir.join("prod.heax")),
    );
    run_ok(
        heax()
            .args(["eval", "relin", "--params"])
            .arg(&params_file)
            .arg(dir.join("prod.heax"))
            .arg("--key")
            .arg(keys.join("relin.heax"))
            .arg("--out")
            .arg(dir.join("relin.heax")),
    );
    run_ok(
        heax()
            .args(["eval", "rescale", "--params"])
            .arg(&params_file)
            .arg(dir.join("relin.heax"))
            .arg("--out")
            .arg(dir.join("rescaled.heax")),
    );
    run_ok(
        heax()
            .args(["decrypt", "--params"])
            .arg(&params_file)
            .arg("--secret")
            .arg(&secret)
            .arg("--input")
            .arg(dir.join("rescaled.heax"))
            .arg("--out")
            .arg(dir.join("out.heax"))
            .arg("--coeffs-out")
            .arg(dir.join("out.txt")),
    );

    let text = std::fs::read_to_string(dir.join("out.txt")).unwrap();
    let got: Vec<BigInt> = text
        .lines()
        .map(|l| l.trim().parse::<BigInt>().unwrap())
        .collect();
    assert_eq!(got.len(), params.n);

    let p_last = BigInt::from(params.basis.moduli()[params.max_level()].value());
    let exact = negacyclic_i128(&u0, &u1);
    let mut worst = BigInt::from(0);
    for (g, e) in got.iter().zip(&exact) {
        let expected = round_div(&BigInt::from(*e), &p_last);
        let err = BigInt::from((g - &expected).magnitude().clone());
        if err > worst {
            worst = err;
        }
    }
    worst
}

#[test]
fn criterion_10_cli() {
    let mut c = Criterion::new("criterion 10 (file-based interface)");
    let tmp = tempfile::tempdir().unwrap();

    // Serialization round-trips bitwise; corruption is rejected distinctly.
    {
        let params = HeParams::from_bit_sizes(64, 30, &[26, 26], 28, 3.2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let sk = ckks::keygen(&params, &mut rng);
        let pt = Plaintext::from_signed_coeffs(
            &vec![3i64; params.n],
            &params.basis,
            params.max_level(),
            1.0,
        );
        let ct = ckks::sym_enc(&pt, &sk, &params, &mut rng);
        let bytes = serial::serialize_ciphertext(&ct, &params);
        let back = serial::deserialize_ciphertext(&bytes, &params).unwrap();
        c.check(
            serial::serialize_ciphertext(&back, &params) == bytes,
            || "ciphertext round-trip not bitwise".into(),
        );
        let mut corrupt = bytes.clone();
        corrupt[1] = b'!';
        c.check(
            matches!(
                serial::deserialize_ciphertext(&corrupt, &params),
                Err(serial::SerialError::BadMagic)
            ),
            || "corrupted magic not rejected".into(),
        );
    }

    // Key generation is reproducible from the seed.
    {
        let d0 = tmp.path().join("k0");
        let d1 = tmp.path().join("k1");
        for d in [&d0, &d1] {
            run_ok(
                heax()
                    .args(["keygen", "--set", "A", "--seed", "99", "--out-dir"])
                    .arg(d)
                    .args(["--rotations", "1"]),
            );
        }
        for name in ["params.heax", "secret.heax", "relin.heax", "rot_1.heax"] {
            let b0 = std::fs::read(d0.join(name)).unwrap();
            let b1 = std::fs::read(d1.join(name)).unwrap();
            c.check(b0 == b1, || {
                format!("{name} differs across identical seeds")
            });
        }
    }

    // The file-based pipeline satisfies the frozen end-to-end bounds.
    for (set, name, bound) in PIPELINE_ERROR_BOUND {
        let dir = tmp.path().join(format!("pipeline_{name}"));
        std::fs::create_dir_all(&dir).unwrap();
        let worst = file_pipeline(name, set, &dir);
        c.check(worst <= BigInt::from(bound), || {
            format!("set {name}: pipeline error {worst} > {bound}")
        });
    }

    // Level mismatch surfaces as exit code 2 with the scheme's message;
    // rotation works through the file interface.
    {
        let dir = tmp.path().join("mismatch");
        std::fs::create_dir_all(&dir).unwrap();
        let keys = dir.join("keys");
        run_ok(
            heax()
                .args(["keygen", "--set", "A", "--seed", "3", "--out-dir"])
                .arg(&keys)
                .args(["--rotations", "1"]),
        );
        let params_file = keys.join("params.heax");
        write_coeffs(&dir.join("m.txt"), &[1, 2, 3]);
        for (seed, out) in [("1", "a.heax"), ("2", "b.heax")] {
            run_ok(
                heax()
                    .args(["encrypt", "--params"])
                    .arg(&params_file)
                    .arg("--secret")
                    .arg(keys.join("secret.heax"))
                    .arg("--coeffs")
                    .arg(dir.join("m.txt"))
                    .args(["--seed", seed, "--out"])
                    .arg(dir.join(out)),
            );
        }
        run_ok(
            heax()
                .args(["eval", "rescale", "--params"])
                .arg(&params_file)
                .arg(dir.join("b.heax"))
                .arg("--out")
                .arg(dir.join("b_low.heax")),
        );
        let out = heax()
            .args(["eval", "add", "--params"])
            .arg(&params_file)
            .arg(dir.join("a.heax"))
            .arg(dir.join("b_low.heax"))
            .arg("--out")
            .arg(dir.join("sum.heax"))
            .output()
            .unwrap();
        c.check(out.status.code() == Some(2), || {
            format!("level mismatch exit code {:?}", out.status.code())
        });
        let stderr = String::from_utf8_lossy(&out.stderr);
        c.check(stderr.contains("level mismatch"), || {
            format!("stderr missing message: {stderr}")
        });

        run_ok(
            heax()
                .args(["eval", "rotate", "--params"])
                .arg(&params_file)
                .arg(dir.join("a.heax"))
                .arg("--key")
                .arg(keys.join("rot_1.heax"))
                .args(["--steps", "1", "--out"])
                .arg(dir.join("rot.heax")),
        );
        run_ok(
            heax()
                .args(["decrypt", "--params"])
                .arg(&params_file)
                .arg("--secret")
                .arg(keys.join("secret.heax"))
                .arg("--input")
                .arg(dir.join("rot.heax"))
                .arg("--out")
                .arg(dir.join("rot_pt.heax")),
        );
    }

    // The dataflow verifier exits 0 on every tested shape.
    for log_n in [12u32, 13, 14] {
        for cores in [4u32, 8, 16] {
            let out = heax()
                .args([
                    "sim",
                    "verify-ntt",
                    "--n",
                    &(1u32 << log_n).to_string(),
                    "--cores",
                    &cores.to_string(),
                    "--trials",
                    "2",
                ])
                .output()
                .unwrap();
            c.check(out.status.success(), || {
                format!(
                    "verify-ntt n=2^{log_n} cores={cores}: {}",
                    String::from_utf8_lossy(&out.stderr)
                )
            });
        }
    }

    c.finish();
}

#[test]
fn estimate_and_bench_reports() {
    // Estimate prints the reported resource figure for the Set-A build.
    let out = run_ok(heax().args(["sim", "estimate", "--set", "A", "--device", "stratix10"]));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("dsp=2018"), "estimate output: {text}");
    assert!(text.contains("keyswitch_ops_per_sec=97656"));

    // JSON form parses and carries the same figure.
    let out = run_ok(heax().args([
        "sim",
        "estimate",
        "--set",
        "A",
        "--device",
        "stratix10",
        "--format",
        "json",
    ]));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["resources"]["dsp"], 2018);

    // Non-power-of-two ring degree is a usage error.
    let out = heax()
        .args([
            "sim",
            "estimate",
            "--n",
            "1000",
            "--k",
            "2",
            "--intt0-cores",
            "8",
            "--m0",
            "2",
            "--freq",
            "300000000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Bench reports the model's prediction beside host numbers and
    // rejects a zero iteration count.
    let out = run_ok(heax().args(["bench", "--set", "B", "--iterations", "2"]));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("heax_keyswitch_ops_per_sec=22536"),
        "bench output: {text}"
    );
    assert!(text.contains("host_keyswitch_ops_per_sec="));
    let out = heax()
        .args(["bench", "--set", "A", "--iterations", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
