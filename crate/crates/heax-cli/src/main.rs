use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heax_cli::commands::{self, CliError, EvalOp, ReportFormat};
use heax_core::heaxsim::Device;

#[derive(Parser)]
#[command(
    name = "heax",
    about = "RNS-CKKS evaluation kernels and accelerator model",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate parameters, secret key, relinearization and rotation keys.
    Keygen {
        /// Parameter set: A, B, or C.
        #[arg(long, default_value = "A")]
        set: String,
        /// RNG seed; the same seed reproduces identical files.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// Rotation steps to generate keys for (comma separated).
        #[arg(long, value_delimiter = ',')]
        rotations: Vec<i64>,
    },
    /// Encrypt a plaintext polynomial.
    Encrypt {
        #[command(flatten)]
        keys: KeyArgs,
        /// Text file of signed integer coefficients (zero padded to n).
        #[arg(long, value_name = "FILE")]
        coeffs: Option<PathBuf>,
        /// Serialized plaintext file as an alternative to --coeffs.
        #[arg(long, value_name = "FILE")]
        plaintext: Option<PathBuf>,
        /// Scale attached to the plaintext.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Decrypt a ciphertext to a plaintext file.
    Decrypt {
        #[command(flatten)]
        keys: KeyArgs,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write centered integer coefficients as text.
        #[arg(long, value_name = "FILE")]
        coeffs_out: Option<PathBuf>,
    },
    /// Evaluate a homomorphic operation on serialized ciphertexts.
    Eval {
        /// add | mul | relin | rescale | rotate | keyswitch
        op: String,
        #[arg(long, value_name = "FILE")]
        params: PathBuf,
        /// Input ciphertext files.
        inputs: Vec<PathBuf>,
        /// Key file (relinearization, rotation, or switching key).
        #[arg(long, value_name = "FILE")]
        key: Option<PathBuf>,
        /// Rotation steps for `rotate`.
        #[arg(long, default_value_t = 1)]
        steps: i64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Benchmark host kernels beside the model's predictions.
    Bench {
        #[arg(long, default_value = "A")]
        set: String,
        #[arg(long, default_value_t = 10)]
        iterations: u64,
        #[arg(long, default_value = "stratix10")]
        device: String,
    },
    /// Architecture model: estimation reports and dataflow verification.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
}

#[derive(Args)]
struct KeyArgs {
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    #[arg(long, value_name = "FILE")]
    secret: PathBuf,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Print the configuration, cycle, throughput, resource, and bandwidth
    /// estimates for an architecture instance.
    Estimate {
        /// Preset: parameter set A/B/C with the reported build for --device.
        #[arg(long)]
        set: Option<String>,
        #[arg(long, default_value = "stratix10")]
        device: String,
        /// Ring degree (overrides the preset).
        #[arg(long)]
        n: Option<usize>,
        /// RNS component count of the ciphertext modulus.
        #[arg(long)]
        k: Option<usize>,
        /// Cores in the initial INTT module.
        #[arg(long)]
        intt0_cores: Option<usize>,
        /// Number of forward-NTT modules fed by the initial INTT.
        #[arg(long)]
        m0: Option<usize>,
        /// Clock frequency in Hz.
        #[arg(long)]
        freq: Option<u64>,
        /// Output format: kv or json.
        #[arg(long, default_value = "kv")]
        format: String,
    },
    /// Run the banked-memory NTT simulator against the direct transform.
    VerifyNtt {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cores: usize,
        #[arg(long, default_value_t = 3)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_device(s: &str) -> Result<Device, CliError> {
    Device::parse(s).ok_or_else(|| CliError::Usage(format!("unknown device {s:?}")))
}

fn run() -> Result<ExitCode, CliError> {
    match Cli::parse().command {
        Command::Keygen {
            set,
            seed,
            out_dir,
            rotations,
        } => {
            let set = commands::parse_set(&set)?;
            let written = commands::cmd_keygen(set, seed, &out_dir, &rotations)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Encrypt {
            keys,
            coeffs,
            plaintext,
            scale,
            seed,
            out,
        } => {
            commands::cmd_encrypt(
                &keys.params,
                &keys.secret,
                coeffs.as_deref(),
                plaintext.as_deref(),
                scale,
                seed,
                &out,
            )?;
        }
        Command::Decrypt {
            keys,
            input,
            out,
            coeffs_out,
        } => {
            commands::cmd_decrypt(
                &keys.params,
                &keys.secret,
                &input,
                &out,
                coeffs_out.as_deref(),
            )?;
        }
        Command::Eval {
            op,
            params,
            inputs,
            key,
            steps,
            out,
        } => {
            let op = EvalOp::parse(&op)?;
            commands::cmd_eval(op, &params, &inputs, key.as_deref(), steps, &out)?;
        }
        Command::Bench {
            set,
            iterations,
            device,
        } => {
            let set = commands::parse_set(&set)?;
            let device = parse_device(&device)?;
            print!("{}", commands::cmd_bench(set, iterations, device)?);
        }
        Command::Sim { command } => match command {
            SimCommand::Estimate {
                set,
                device,
                n,
                k,
                intt0_cores,
                m0,
                freq,
                format,
            } => {
                let device = parse_device(&device)?;
                // Preset fills in the reported build; explicit flags override.
                let preset = match set.as_deref() {
                    Some(s) => {
                        let set = commands::parse_set(s)?;
                        let found = heax_core::heaxsim::known_builds()
                            .into_iter()
                            .find(|(d, ps, _, _, _)| *d == device && *ps == set)
                            .ok_or_else(|| {
                                CliError::Usage("no reported build for this device/set".into())
                            })?;
                        let (n, _, k) = found.1.shape();
                        Some((n, k, found.2, found.3, found.4))
                    }
                    None => None,
                };
                let field = |explicit: Option<usize>, preset_v: Option<usize>, name: &str| {
                    explicit.or(preset_v).ok_or_else(|| {
                        CliError::Usage(format!("--{name} is required without --set"))
                    })
                };
                let n = field(n, preset.map(|p| p.0), "n")?;
                let k = field(k, preset.map(|p| p.1), "k")?;
                let intt0 = field(intt0_cores, preset.map(|p| p.2), "intt0-cores")?;
                let m0 = field(m0, preset.map(|p| p.3), "m0")?;
                let freq = match freq.or(preset.map(|p| p.4)) {
                    Some(f) => f,
                    None => return Err(CliError::Usage("--freq is required without --set".into())),
                };
                let format = match format.as_str() {
                    "kv" => ReportFormat::KeyValue,
                    "json" => ReportFormat::Json,
                    other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
                };
                print!(
                    "{}",
                    commands::cmd_sim_estimate(n, k, intt0, m0, freq, device, format)?
                );
            }
            SimCommand::VerifyNtt {
                n,
                cores,
                trials,
                seed,
            } => {
                let mismatches = commands::cmd_sim_verify_ntt(n, cores, trials, seed)?;
                if mismatches > 0 {
                    eprintln!("{mismatches} mismatching trial(s)");
                    return Ok(ExitCode::from(3));
                }
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
