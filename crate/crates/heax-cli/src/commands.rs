//! Command implementations behind the CLI front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use heax_core::ckks::{
    self, Ciphertext, CkksError, HeParams, KeySwitchKey, ParamSet, Plaintext, SecretKey,
};
use heax_core::heaxsim::{self, known_build, CoreCosts, Device, LowLevelOp, SimError};
use heax_core::modarith;
use heax_core::ntt::{self, NttTable};
use heax_core::rns;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::serial::{self, SerialError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ckks(#[from] CkksError),
    #[error(transparent)]
    Serial(#[from] SerialError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// I/O failures exit with 1, everything else (usage, scheme, format,
    /// model errors) with 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_set(name: &str) -> Result<ParamSet, CliError> {
    ParamSet::parse(name).ok_or_else(|| CliError::Usage(format!("unknown parameter set {name:?}")))
}

pub fn load_params(path: &Path) -> Result<HeParams, CliError> {
    Ok(serial::deserialize_params(&read_file(path)?)?)
}

pub fn load_secret(path: &Path, params: &HeParams) -> Result<SecretKey, CliError> {
    Ok(serial::deserialize_secret_key(&read_file(path)?, params)?)
}

pub fn load_ksk(path: &Path, params: &HeParams) -> Result<KeySwitchKey, CliError> {
    Ok(serial::deserialize_ksk(&read_file(path)?, params)?)
}

pub fn load_ciphertext(path: &Path, params: &HeParams) -> Result<Ciphertext, CliError> {
    Ok(serial::deserialize_ciphertext(&read_file(path)?, params)?)
}

/// Generates parameters, secret key, relinearization key, and any requested
/// rotation keys; fully reproducible from the seed.
pub fn cmd_keygen(
    set: ParamSet,
    seed: u64,
    out_dir: &Path,
    rotations: &[i64],
) -> Result<Vec<PathBuf>, CliError> {
    let params = HeParams::for_set(set)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sk = ckks::keygen(&params, &mut rng);
    let rlk = ckks::relin_keygen(&sk, &params, &mut rng)?;

    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
        let path = out_dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    emit("params.heax".into(), serial::serialize_params(&params))?;
    emit(
        "secret.heax".into(),
        serial::serialize_secret_key(&sk, &params),
    )?;
    emit("relin.heax".into(), serial::serialize_ksk(&rlk, &params))?;
    for &steps in rotations {
        let gk = ckks::rotation_keygen(steps, &sk, &params, &mut rng)?;
        emit(
            format!("rot_{steps}.heax"),
            serial::serialize_ksk(&gk, &params),
        )?;
    }
    Ok(written)
}

/// Parses whitespace-separated signed integers, padding with zeros to `n`.
pub fn parse_coeffs(text: &str, n: usize) -> Result<Vec<i64>, CliError> {
    let mut coeffs = Vec::with_capacity(n);
    for tok in text.split_whitespace() {
        let v: i64 = tok
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid coefficient {tok:?}")))?;
        coeffs.push(v);
    }
    if coeffs.len() > n {
        return Err(CliError::Usage(format!(
            "too many coefficients ({} > ring degree {})",
            coeffs.len(),
            n
        )));
    }
    coeffs.resize(n, 0);
    Ok(coeffs)
}

pub fn cmd_encrypt(
    params_path: &Path,
    secret_path: &Path,
    coeffs_path: Option<&Path>,
    plaintext_path: Option<&Path>,
    scale: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let params = load_params(params_path)?;
    let sk = load_secret(secret_path, &params)?;
    let pt = match (coeffs_path, plaintext_path) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let coeffs = parse_coeffs(&text, params.n)?;
            Plaintext::from_signed_coeffs(&coeffs, &params.basis, params.max_level(), scale)
        }
        (None, Some(path)) => serial::deserialize_plaintext(&read_file(path)?, &params)?,
        _ => {
            return Err(CliError::Usage(
                "exactly one of --coeffs or --plaintext is required".into(),
            ))
        }
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let ct = ckks::sym_enc(&pt, &sk, &params, &mut rng);
    write_file(out, &serial::serialize_ciphertext(&ct, &params))
}

pub fn cmd_decrypt(
    params_path: &Path,
    secret_path: &Path,
    input: &Path,
    out: &Path,
    coeffs_out: Option<&Path>,
) -> Result<(), CliError> {
    let params = load_params(params_path)?;
    let sk = load_secret(secret_path, &params)?;
    let ct = load_ciphertext(input, &params)?;
    let pt = ckks::decrypt(&ct, &sk, &params)?;
    write_file(out, &serial::serialize_plaintext(&pt, &params))?;
    if let Some(path) = coeffs_out {
        let centered = pt.centered_coeffs(&params.basis);
        let text: String = centered.iter().map(|c| format!("{c}\n")).collect();
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalOp {
    Add,
    Mul,
    Relin,
    Rescale,
    Rotate,
    KeySwitch,
}

impl EvalOp {
    pub fn parse(s: &str) -> Result<EvalOp, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "add" => Ok(EvalOp::Add),
            "mul" => Ok(EvalOp::Mul),
            "relin" => Ok(EvalOp::Relin),
            "rescale" => Ok(EvalOp::Rescale),
            "rotate" => Ok(EvalOp::Rotate),
            "keyswitch" => Ok(EvalOp::KeySwitch),
            other => Err(CliError::Usage(format!("unknown eval op {other:?}"))),
        }
    }
}

pub fn cmd_eval(
    op: EvalOp,
    params_path: &Path,
    inputs: &[PathBuf],
    key_path: Option<&Path>,
    steps: i64,
    out: &Path,
) -> Result<(), CliError> {
    let params = load_params(params_path)?;
    let need = |count: usize| -> Result<(), CliError> {
        if inputs.len() != count {
            return Err(CliError::Usage(format!(
                "operation expects {count} input ciphertext(s), got {}",
                inputs.len()
            )));
        }
        Ok(())
    };
    let key = |name: &str| -> Result<KeySwitchKey, CliError> {
        let path = key_path
            .ok_or_else(|| CliError::Usage(format!("--key <{name}> is required for this op")))?;
        load_ksk(path, &params)
    };
    let result = match op {
        EvalOp::Add => {
            need(2)?;
            let a = load_ciphertext(&inputs[0], &params)?;
            let b = load_ciphertext(&inputs[1], &params)?;
            ckks::hom_add(&a, &b, &params)?
        }
        EvalOp::Mul => {
            need(2)?;
            let a = load_ciphertext(&inputs[0], &params)?;
            let b = load_ciphertext(&inputs[1], &params)?;
            ckks::hom_mul(&a, &b, &params)?
        }
        EvalOp::Relin => {
            need(1)?;
            let a = load_ciphertext(&inputs[0], &params)?;
            ckks::relinearize(&a, &key("relin.heax")?, &params)?
        }
        EvalOp::Rescale => {
            need(1)?;
            let a = load_ciphertext(&inputs[0], &params)?;
            ckks::rescale(&a, &params)?
        }
        EvalOp::Rotate => {
            need(1)?;
            let a = load_ciphertext(&inputs[0], &params)?;
            ckks::rotate(&a, steps, &key("rotation key")?, &params)?
        }
        EvalOp::KeySwitch => {
            need(1)?;
            let a = load_ciphertext(&inputs[0], &params)?;
            ckks::key_switch(&a, &key("ksk")?, &params)?
        }
    };
    write_file(out, &serial::serialize_ciphertext(&result, &params))
}

fn measure<F: FnMut()>(iterations: u64, mut f: F) -> f64 {
    f(); // warmup
    let start = Instant::now();
    for _ in 0..iterations {
        f();
    }
    iterations as f64 / start.elapsed().as_secs_f64()
}

/// Host-side kernel benchmark with the model's predictions printed beside
/// the measurements. Host numbers are informational only.
pub fn cmd_bench(set: ParamSet, iterations: u64, device: Device) -> Result<String, CliError> {
    if iterations == 0 {
        return Err(CliError::Usage("iterations must be positive".into()));
    }
    let params = HeParams::for_set(set)?;
    let cfg = known_build(device, set)
        .ok_or_else(|| CliError::Usage("no reported build for this device/set".into()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(0xbe9c);
    let sk = ckks::keygen(&params, &mut rng);
    let rlk = ckks::relin_keygen(&sk, &params, &mut rng)?;
    let pt = Plaintext::from_signed_coeffs(
        &vec![1i64; params.n],
        &params.basis,
        params.max_level(),
        1.0,
    );
    let ct0 = ckks::sym_enc(&pt, &sk, &params, &mut rng);
    let ct1 = ckks::sym_enc(&pt, &sk, &params, &mut rng);

    let table = params.basis.table(0);
    let mut poly: Vec<u64> = (0..params.n as u64).collect();
    let host_ntt = measure(iterations, || {
        ntt::ntt_forward_in_place(&mut poly, table);
    });
    let host_intt = measure(iterations, || {
        ntt::ntt_inverse_in_place(&mut poly, table);
    });
    let a = ntt::ntt_forward(&poly, table);
    let host_dyadic = measure(iterations, || {
        std::hint::black_box(ntt::dyadic_product(&a, &a, table.modulus()));
    });
    let ksk = ckks::ksk_gen(&sk.s, &sk, &params, &mut rng)?;
    let host_keyswitch = measure(iterations, || {
        std::hint::black_box(ckks::key_switch(&ct0, &ksk, &params).unwrap());
    });
    let host_mul_relin = measure(iterations, || {
        let prod = ckks::hom_mul(&ct0, &ct1, &params).unwrap();
        std::hint::black_box(ckks::relinearize(&prod, &rlk, &params).unwrap());
    });

    let mut out = String::new();
    out.push_str(&format!(
        "set={:?} device={device:?} iterations={iterations}\n",
        set
    ));
    let mut line = |k: &str, host: f64, heax: u64| {
        out.push_str(&format!("host_{k}_ops_per_sec={host:.0}\n"));
        out.push_str(&format!("heax_{k}_ops_per_sec={heax}\n"));
    };
    line(
        "ntt",
        host_ntt,
        heaxsim::lowlevel_throughput(&cfg, LowLevelOp::Ntt),
    );
    line(
        "intt",
        host_intt,
        heaxsim::lowlevel_throughput(&cfg, LowLevelOp::Intt),
    );
    line(
        "dyadic",
        host_dyadic,
        heaxsim::lowlevel_throughput(&cfg, LowLevelOp::Dyadic),
    );
    line(
        "keyswitch",
        host_keyswitch,
        heaxsim::keyswitch_throughput(&cfg),
    );
    line(
        "mul_relin",
        host_mul_relin,
        heaxsim::mul_relin_throughput(&cfg),
    );
    Ok(out)
}

pub enum ReportFormat {
    KeyValue,
    Json,
}

/// Architecture estimation report for an explicit or preset configuration.
pub fn cmd_sim_estimate(
    n: usize,
    k: usize,
    nc_intt0: usize,
    m0: usize,
    freq_hz: u64,
    device: Device,
    format: ReportFormat,
) -> Result<String, CliError> {
    if !n.is_power_of_two() {
        return Err(CliError::Usage("ring degree must be a power of two".into()));
    }
    let cfg = heaxsim::derive_config(n, k, nc_intt0, m0, freq_hz)?;
    let report = heaxsim::estimate(&cfg, &CoreCosts::default(), device);
    Ok(match format {
        ReportFormat::KeyValue => report.to_key_value_lines(),
        ReportFormat::Json => serde_json::to_string_pretty(&report).expect("serializable"),
    })
}

/// Runs the banked-memory dataflow simulator against the direct transform
/// on random inputs; returns the number of mismatching trials.
pub fn cmd_sim_verify_ntt(n: usize, cores: usize, trials: u64, seed: u64) -> Result<u64, CliError> {
    if !n.is_power_of_two() {
        return Err(CliError::Usage("ring degree must be a power of two".into()));
    }
    let modulus = modarith::gen_ntt_primes(n, ckks::WORD_BITS, 1)
        .map_err(|e| CliError::Ckks(CkksError::Rns(rns::RnsError::ModArith(e))))?[0];
    let table = NttTable::new(modulus, n)
        .map_err(|e| CliError::Ckks(CkksError::Rns(rns::RnsError::ModArith(e))))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for trial in 0..trials {
        let a: Vec<u64> = (0..n)
            .map(|_| rand::Rng::random_range(&mut rng, 0..modulus.value()))
            .collect();
        let report = heaxsim::simulate_banked_ntt(&a, &table, cores)?;
        let direct = ntt::ntt_forward(&a, &table);
        if report.output != direct {
            eprintln!("trial {trial}: output mismatch");
            mismatches += 1;
        }
        println!(
            "trial={trial} steps={} cycles={} ok={}",
            report.steps,
            report.cycles,
            report.output == direct
        );
    }
    Ok(mismatches)
}
