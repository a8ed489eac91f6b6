use std::fs;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use avgkit::closed_form::{default_beta_grid, default_cf_grid};
use avgkit::random::{random_averaged, random_nonexpansive, random_subspace};
use avgkit::report::{
    sig12, CompareRow, RunReport, RunResult, SweepRow, VerifyCheck, TOOL_VERSION,
};
use avgkit::{
    angles, build_composition, is_nonexpansive, kappa_bisection, kappa_closed_form, kappa_exact,
    kappa_quotient_sample, ogura_yamada_bound, q_envelope, sym_eigen, CompositionSpec, DenseMatrix,
    Error, ModulusReport, Route, Subspace, SubspaceWire, ToleranceConfig,
};

const EXIT_CLAIM: i32 = 1;
const EXIT_PRECONDITION: i32 = 2;
const EXIT_PARSE: i32 = 3;

#[derive(Parser)]
#[command(name = "avgkit", version, about = "Modulus of averagedness toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Output file (stdout when omitted)
    #[arg(short, long, global = true)]
    output: Option<String>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// RNG seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override the PSD margin tolerance
    #[arg(long, global = true)]
    psd_tol: Option<f64>,
    /// Override the rank cutoff tolerance
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Override the angle-cluster tolerance
    #[arg(long, global = true)]
    cluster_tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Exact,
    Bisect,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum RandomKind {
    Nonexpansive,
    Averaged,
    SubspacePair,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the modulus of averagedness of a matrix
    Kappa {
        /// Matrix file or inline JSON
        #[arg(short, long)]
        input: String,
        #[arg(long, value_enum, default_value_t = RouteArg::Exact)]
        route: RouteArg,
        /// Sample count for --route sample
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Principal, Dixmier, and Friedrichs angles between two subspaces
    Angles {
        /// Subspace file or inline JSON for U
        u: String,
        /// Subspace file or inline JSON for V
        v: String,
    },
    /// Evaluate the closed-form modulus of ((1-b) I + b R_V) P_U
    ClosedForm {
        /// Subspace file or inline JSON for U
        #[arg(short, long)]
        u: Option<String>,
        /// Subspace file or inline JSON for V
        #[arg(short, long)]
        v: Option<String>,
        /// Friedrichs cosine, as an alternative to subspace inputs
        #[arg(long)]
        cf: Option<f64>,
        #[arg(long)]
        beta: f64,
    },
    /// Cross-validate the closed form against the eigenvalue route on
    /// random subspace pairs
    Compare {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        trials: usize,
    },
    /// Tabulate the closed form and the Ogura-Yamada bound over a grid
    Sweep {
        /// Beta grid as start:stop:step (default 0.05:0.95:0.05)
        #[arg(long)]
        beta: Option<String>,
        /// Friedrichs-cosine grid as start:stop:step (default 0:1:0.05)
        #[arg(long)]
        cf: Option<String>,
    },
    /// Regression of the built-in worked example
    VerifyPaper {
        /// Perturb the built-in matrix (negative-control hook)
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb: f64,
    },
    /// Emit a random instance as JSON
    Random {
        #[arg(long, value_enum)]
        kind: RandomKind,
        #[arg(long)]
        dim: usize,
        /// Target modulus for --kind averaged
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = run(cli);
    std::process::exit(code);
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Domain(_) => EXIT_PARSE,
        _ => EXIT_PRECONDITION,
    }
}

fn run(cli: Cli) -> i32 {
    let cfg = match build_config(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_PARSE;
        }
    };
    let start = Instant::now();
    let outcome = dispatch(&cli, &cfg);
    match outcome {
        Ok((result, claim_ok)) => {
            let report = RunReport {
                request: std::env::args().collect(),
                result,
                tool_version: TOOL_VERSION.into(),
                tolerances: cfg,
                wall_time_secs: start.elapsed().as_secs_f64(),
            };
            if let Err(e) = emit(&report, &cli.global) {
                eprintln!("error: {e}");
                return EXIT_PRECONDITION;
            }
            if claim_ok {
                0
            } else {
                EXIT_CLAIM
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn build_config(g: &GlobalOpts) -> Result<ToleranceConfig, Error> {
    let profile = std::env::var("AVGKIT_TOLERANCE_PROFILE").unwrap_or_else(|_| "default".into());
    let mut cfg = ToleranceConfig::profile(&profile)?;
    if let Some(v) = g.psd_tol {
        cfg.psd_tol = v;
    }
    if let Some(v) = g.rank_tol {
        cfg.rank_tol = v;
    }
    if let Some(v) = g.cluster_tol {
        cfg.cluster_tol = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Inputs starting with '{' are inline JSON, anything else is a path.
fn read_input(arg: &str) -> Result<String, Error> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| Error::Parse(format!("cannot read '{arg}': {e}")))
    }
}

fn parse_matrix(arg: &str) -> Result<DenseMatrix, Error> {
    let text = read_input(arg)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("invalid matrix JSON: {e}")))
}

fn parse_subspace(arg: &str, cfg: &ToleranceConfig) -> Result<Subspace, Error> {
    let text = read_input(arg)?;
    let wire: SubspaceWire = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("invalid subspace JSON: {e}")))?;
    Subspace::from_wire(&wire, cfg)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid must be start:stop:step, got '{spec}'")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| Error::Parse(format!("bad grid number: {e}"))))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || stop < start {
        return Err(Error::Parse("grid step must be positive and stop >= start".into()));
    }
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let x = start + step * i as f64;
        if x > stop + 1e-12 {
            break;
        }
        out.push(x.min(stop));
        i += 1;
    }
    Ok(out)
}

fn dispatch(cli: &Cli, cfg: &ToleranceConfig) -> Result<(RunResult, bool), Error> {
    match &cli.command {
        Command::Kappa { input, route, samples } => {
            let m = parse_matrix(input)?;
            let rep = match route {
                RouteArg::Exact => kappa_exact(&m, cfg)?,
                RouteArg::Bisect => kappa_bisection(&m, cfg)?,
                RouteArg::Sample => {
                    let k = kappa_quotient_sample(&m, *samples, cli.global.seed, cfg)?;
                    ModulusReport {
                        kappa: k,
                        route: Route::QuotientSample,
                        certificate: None,
                        d: 0,
                    }
                }
            };
            Ok((RunResult::Modulus(rep), true))
        }
        Command::Angles { u, v } => {
            let su = parse_subspace(u, cfg)?;
            let sv = parse_subspace(v, cfg)?;
            Ok((RunResult::Angles(angles(&su, &sv, cfg)?), true))
        }
        Command::ClosedForm { u, v, cf, beta } => {
            let kappa = match (u, v, cf) {
                (Some(u), Some(v), None) => {
                    let su = parse_subspace(u, cfg)?;
                    let sv = parse_subspace(v, cfg)?;
                    let spec = CompositionSpec::new(su, sv, *beta, cfg)?;
                    kappa_closed_form(&spec, cfg)?
                }
                (None, None, Some(cf)) => q_envelope(*cf, *beta)?,
                _ => {
                    return Err(Error::Parse(
                        "pass either --u and --v, or --cf alone".into(),
                    ))
                }
            };
            Ok((RunResult::ClosedForm { kappa }, true))
        }
        Command::Compare { dim, trials } => cmd_compare(*dim, *trials, cli.global.seed, cfg),
        Command::Sweep { beta, cf } => {
            let beta_grid = match beta {
                Some(s) => parse_grid(s)?,
                None => default_beta_grid(),
            };
            let cf_grid = match cf {
                Some(s) => parse_grid(s)?,
                None => default_cf_grid(),
            };
            cmd_sweep(&beta_grid, &cf_grid)
        }
        Command::VerifyPaper { perturb } => cmd_verify(*perturb, cfg),
        Command::Random { kind, dim, kappa } => cmd_random(*kind, *dim, *kappa, cli.global.seed, cfg),
    }
}

fn cmd_compare(
    dim: usize,
    trials: usize,
    seed: u64,
    cfg: &ToleranceConfig,
) -> Result<(RunResult, bool), Error> {
    if dim < 2 {
        return Err(Error::Domain(format!("dim must be at least 2, got {dim}")));
    }
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    let mut max_abs_diff = 0.0_f64;
    for trial in 0..trials {
        // Draw until U is a proper subspace not contained in V.
        let spec = loop {
            let du = rng.gen_range(1..dim);
            let dv = rng.gen_range(0..=dim);
            let u = random_subspace(dim, du, &mut rng, cfg);
            let v = random_subspace(dim, dv, &mut rng, cfg);
            let beta = rng.gen_range(0.05..0.95);
            let spec = CompositionSpec::new(u, v, beta, cfg)?;
            if !spec.u_is_full && !spec.u_subset_v {
                break spec;
            }
        };
        let t = build_composition(&spec)?;
        let exact = kappa_exact(&t, cfg)?.kappa;
        let closed = kappa_closed_form(&spec, cfg)?;
        let abs_diff = (exact - closed).abs();
        max_abs_diff = max_abs_diff.max(abs_diff);
        rows.push(CompareRow {
            trial,
            c_f: spec.friedrichs,
            beta: spec.beta,
            kappa_exact: exact,
            kappa_closed_form: closed,
            abs_diff,
            oy_bound: ogura_yamada_bound(0.5, spec.beta)?,
        });
    }
    let ok = max_abs_diff <= 1e-6;
    Ok((RunResult::Compare { rows, max_abs_diff }, ok))
}

fn cmd_sweep(beta_grid: &[f64], cf_grid: &[f64]) -> Result<(RunResult, bool), Error> {
    let mut rows = Vec::new();
    let mut monotone = true;
    for &beta in beta_grid {
        let mut prev: Option<f64> = None;
        for &cf in cf_grid {
            let kappa = q_envelope(cf, beta)?;
            let oy = ogura_yamada_bound(0.5, beta)?;
            if let Some(p) = prev {
                if kappa <= p {
                    monotone = false;
                }
            }
            prev = Some(kappa);
            rows.push(SweepRow { beta, c_f: cf, kappa_closed_form: kappa, oy_bound: oy, gap: oy - kappa });
        }
    }
    Ok((RunResult::Sweep { rows, monotone }, monotone))
}

fn cmd_verify(perturb: f64, cfg: &ToleranceConfig) -> Result<(RunResult, bool), Error> {
    let sqrt2 = 2.0_f64.sqrt();
    let kappa_star = (3.0 + sqrt2) / 7.0;
    let mut m = DenseMatrix::from_rows(&[vec![0.5, 0.0], vec![0.5, 0.0]])?;
    if perturb != 0.0 {
        let v = m.get(0, 0) + perturb;
        m.set(0, 0, v);
    }
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(VerifyCheck { name: name.into(), passed, detail });
    };

    let id = DenseMatrix::identity(2);
    let res = id.sub(&m)?;
    let a = res.transpose().matmul(&res)?;
    let b = id.scale(2.0).sub(&m.add(&m.transpose())?)?;

    // (a) eigenvalues of B are (3 +/- sqrt 2)/2
    let beig = sym_eigen(&b, cfg)?;
    let want_b = [(3.0 + sqrt2) / 2.0, (3.0 - sqrt2) / 2.0];
    let err_b = (beig.eigenvalues[0] - want_b[0])
        .abs()
        .max((beig.eigenvalues[1] - want_b[1]).abs());
    push("eigenvalues_of_B", err_b <= 1e-9, format!("max error {err_b:.3e}"));

    // (b) eigenvalues of the reduced matrix C are (3 +/- sqrt 2)/7
    let u = beig.eigenvectors.clone();
    let uau = u.transpose().matmul(&a)?.matmul(&u)?;
    let mut c = DenseMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let s = 1.0 / (beig.eigenvalues[i] * beig.eigenvalues[j]).sqrt();
            c.set(i, j, uau.get(i, j) * s);
        }
    }
    let ceig = sym_eigen(&c, cfg)?;
    let want_c = [(3.0 + sqrt2) / 7.0, (3.0 - sqrt2) / 7.0];
    let err_c = (ceig.eigenvalues[0] - want_c[0])
        .abs()
        .max((ceig.eigenvalues[1] - want_c[1]).abs());
    push("eigenvalues_of_C", err_c <= 1e-9, format!("max error {err_c:.3e}"));

    // (c) kappa(M) = (3 + sqrt 2)/7
    let exact = kappa_exact(&m, cfg)?.kappa;
    let err_k = (exact - kappa_star).abs();
    push("kappa_exact", err_k <= 1e-9, format!("kappa {}, error {err_k:.3e}", sig12(exact)));

    // (d) a-posteriori inequality: holds at delta = 0, fails at delta = -1e-4.
    // The failure direction is checked on the explicit witness z = (-sqrt 2, 1)
    // so it cannot be masked by a loose PSD tolerance.
    let averagedness_form = |kappa: f64, z: &[f64]| -> Result<f64, Error> {
        let mtm = m.transpose().matmul(&m)?;
        let sym = m.add(&m.transpose())?;
        let w = DenseMatrix::identity(2)
            .scale(2.0 * kappa - 1.0)
            .sub(&mtm.sub(&sym.scale(1.0 - kappa))?)?;
        let wz = w.apply(z)?;
        Ok(z.iter().zip(&wz).map(|(a, b)| a * b).sum())
    };
    let at_zero = avgkit::is_kappa_averaged(&m, kappa_star, cfg)?.is_psd;
    let witness = [-sqrt2, 1.0];
    let below = averagedness_form(kappa_star + (-1e-4) / 14.0, &witness)?;
    push(
        "aposteriori_inequality",
        at_zero && below < 0.0,
        format!("holds at delta=0: {at_zero}; witness form at delta=-1e-4: {below:.3e}"),
    );

    // (e) closed form through the Friedrichs angle matches
    let su = Subspace::span(2, &[vec![1.0, 0.0]], cfg)?;
    let sv = Subspace::span(2, &[vec![1.0, 1.0]], cfg)?;
    let spec = CompositionSpec::new(su, sv, 0.5, cfg)?;
    let closed = kappa_closed_form(&spec, cfg)?;
    let err_cf = (closed - kappa_star).abs();
    push("closed_form", err_cf <= 1e-9, format!("kappa {}, error {err_cf:.3e}", sig12(closed)));

    let all_passed = checks.iter().all(|c| c.passed);
    Ok((RunResult::Verify { checks, all_passed }, all_passed))
}

fn cmd_random(
    kind: RandomKind,
    dim: usize,
    kappa: f64,
    seed: u64,
    cfg: &ToleranceConfig,
) -> Result<(RunResult, bool), Error> {
    if dim < 1 {
        return Err(Error::Domain("dim must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = match kind {
        RandomKind::Nonexpansive => {
            let m = random_nonexpansive(dim, &mut rng, cfg);
            let check = is_nonexpansive(&m, cfg)?;
            if !check.is_psd {
                return Err(Error::Numeric("generated matrix failed its own predicate".into()));
            }
            serde_json::to_value(&m).map_err(|e| Error::Numeric(e.to_string()))?
        }
        RandomKind::Averaged => {
            if !(0.0..=1.0).contains(&kappa) {
                return Err(Error::Domain(format!("kappa must lie in [0, 1], got {kappa}")));
            }
            let m = random_averaged(dim, kappa, &mut rng, cfg);
            let check = avgkit::is_kappa_averaged(&m, kappa.max(f64::MIN_POSITIVE), cfg)?;
            if !check.is_psd {
                return Err(Error::Numeric("generated matrix failed its own predicate".into()));
            }
            serde_json::to_value(&m).map_err(|e| Error::Numeric(e.to_string()))?
        }
        RandomKind::SubspacePair => {
            let du = rng.gen_range(0..=dim);
            let dv = rng.gen_range(0..=dim);
            let u = random_subspace(dim, du, &mut rng, cfg);
            let v = random_subspace(dim, dv, &mut rng, cfg);
            serde_json::json!({
                "u": serde_json::to_value(u.to_wire()).map_err(|e| Error::Numeric(e.to_string()))?,
                "v": serde_json::to_value(v.to_wire()).map_err(|e| Error::Numeric(e.to_string()))?,
            })
        }
    };
    Ok((RunResult::Instance(value), true))
}

fn emit(report: &RunReport, g: &GlobalOpts) -> Result<(), Error> {
    let text = match g.format {
        Format::Json => serde_json::to_string_pretty(report)
            .map_err(|e| Error::Numeric(e.to_string()))?,
        Format::Csv => render_csv(report)?,
        Format::Text => render_text(report),
    };
    match &g.output {
        Some(path) => fs::write(path, text + "\n")
            .map_err(|e| Error::Parse(format!("cannot write '{path}': {e}"))),
        None => {
            let mut out = std::io::stdout();
            let _ = writeln!(out, "{text}");
            Ok(())
        }
    }
}

fn render_csv(report: &RunReport) -> Result<String, Error> {
    match &report.result {
        RunResult::Sweep { rows, .. } => {
            let mut s = String::from("beta,c_F,kappa_closed_form,oy_bound,gap");
            for r in rows {
                s.push_str(&format!(
                    "\n{},{},{},{},{}",
                    sig12(r.beta),
                    sig12(r.c_f),
                    sig12(r.kappa_closed_form),
                    sig12(r.oy_bound),
                    sig12(r.gap)
                ));
            }
            Ok(s)
        }
        RunResult::Compare { rows, .. } => {
            let mut s = String::from("trial,c_F,beta,kappa_exact,kappa_closed_form,abs_diff,oy_bound");
            for r in rows {
                s.push_str(&format!(
                    "\n{},{},{},{},{},{},{}",
                    r.trial,
                    sig12(r.c_f),
                    sig12(r.beta),
                    sig12(r.kappa_exact),
                    sig12(r.kappa_closed_form),
                    sig12(r.abs_diff),
                    sig12(r.oy_bound)
                ));
            }
            Ok(s)
        }
        _ => Err(Error::Parse("csv format is only available for sweep and compare".into())),
    }
}

fn render_text(report: &RunReport) -> String {
    match &report.result {
        RunResult::Modulus(m) => {
            let mut s = format!("kappa = {}\nroute = {:?}\nd = {}", sig12(m.kappa), m.route, m.d);
            if let Some(c) = &m.certificate {
                s.push_str(&format!(
                    "\npsd margin at kappa = {}\npsd margin below = {}",
                    sig12(c.psd_margin_at_kappa),
                    sig12(c.psd_margin_below)
                ));
            }
            s
        }
        RunResult::Angles(a) => format!(
            "cosines = [{}]\ndim(U ∩ V) = {}\nc_D = {}\nc_F = {}",
            a.cosines.iter().map(|&c| sig12(c)).collect::<Vec<_>>().join(", "),
            a.dim_intersection,
            sig12(a.dixmier),
            sig12(a.friedrichs)
        ),
        RunResult::ClosedForm { kappa } => format!("kappa = {}", sig12(*kappa)),
        RunResult::Compare { rows, max_abs_diff } => format!(
            "trials = {}\nmax |kappa_closed_form - kappa_exact| = {}",
            rows.len(),
            sig12(*max_abs_diff)
        ),
        RunResult::Sweep { rows, monotone } => {
            format!("rows = {}\nmonotone per beta = {monotone}", rows.len())
        }
        RunResult::Verify { checks, all_passed } => {
            let mut s = String::new();
            for c in checks {
                s.push_str(&format!(
                    "{} {} ({})\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                ));
            }
            s.push_str(&format!("all checks passed = {all_passed}"));
            s
        }
        RunResult::Instance(v) => serde_json::to_string_pretty(v).unwrap_or_default(),
    }
}
