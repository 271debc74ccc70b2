use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use genus0::cmcheck::{cm_scan, theta_cm_scan, CMReport, Grid, ScanPlan};
use genus0::efun::{
    beta0_compute, expand_preset, order_estimate, read_zero_file, FunctionModel, Preset, TailModel, ZeroSequence,
};
use genus0::gk::{discrepancy_probe, GkSource};
use genus0::heatkernel::{laplace_residual, ThetaKernel};
use genus0::numcore::{to_decimal, PrecisionContext, QuadratureSpec};
use genus0::riemann::{corollary4_run, ingest_zeros, xi_coefficients, Corollary4Input, PhiSeriesSpec, XiSqrtModel};
use genus0::rug::Complex;

/// Genus-0 entire functions, heat kernels and certified complete-monotonicity scans.
#[derive(Parser, Debug)]
#[command(name = "genus0", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Estimate the order of a preset from its Taylor coefficients.
    Order,
    /// Compute the real-part dominance constant of a zero set.
    Beta0,
    /// Scan (-1)^k Θ^(k)(t) over a t-grid.
    Theta,
    /// Compare the Laplace transform of t^k Θ(t) with its zero sum.
    LaplaceVerify,
    /// Scan (-1)^m G_k^(m)(x) over an x-grid.
    CmScan,
    /// Canonical G_k against the literal operator iterate.
    #[command(name = "probe-236")]
    Probe236,
    /// Taylor coefficients of ξ(1/2 + s) in s².
    XiCoeffs,
    /// Scan G_k for ξ(1/2 + √s) using ingested ordinates.
    RiemannCheck,
    /// List the preset families.
    Presets,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Opts {
    #[arg(long, global = true, default_value_t = 192)]
    precision_bits: u32,
    #[arg(long, global = true)]
    kmax: Option<usize>,
    #[arg(long, global = true)]
    mmax: Option<usize>,
    /// Grid of x values, `log:a:b:n` or `lin:a:b:n`.
    #[arg(long, global = true)]
    xgrid: Option<String>,
    /// Grid of t values, `log:a:b:n` or `lin:a:b:n`.
    #[arg(long, global = true)]
    tgrid: Option<String>,
    /// Zero-list file: one `re` or `re im` per line, `#` comments.
    #[arg(long, global = true)]
    zeros: Option<PathBuf>,
    /// One zero as `re` or `re,im`; repeatable.
    #[arg(long, global = true, allow_hyphen_values = true)]
    zeros_inline: Vec<String>,
    /// `NAME[:params]`; see `genus0 presets`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// `none`, `power:c:p` or `riemann:T`.
    #[arg(long, global = true)]
    tail_model: Option<String>,
    #[arg(long, global = true)]
    quad_level: Option<u32>,
    /// Terms of the Φ series.
    #[arg(long, global = true)]
    nterms: Option<usize>,
    /// Highest coefficient index for `order` and `xi-coeffs`.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    #[arg(long, global = true)]
    x: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: Command,
    #[serde(flatten)]
    opts: &'a Opts,
    precision: &'a PrecisionContext,
}

struct Run {
    body: Value,
    cells_csv: Option<Vec<u8>>,
    exit: u8,
    note: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    validate(cli)?;
    let opts = &cli.opts;
    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build_global()
        .context("building the thread pool")?;
    let ctx = PrecisionContext::with_bits(opts.precision_bits)?;
    let start = Instant::now();
    let out = match cli.command {
        Command::Order => order(opts, &ctx)?,
        Command::Beta0 => beta0(opts, &ctx)?,
        Command::Theta => theta(opts, &ctx)?,
        Command::LaplaceVerify => laplace(opts, &ctx)?,
        Command::CmScan => scan(opts, &ctx)?,
        Command::Probe236 => probe(opts, &ctx)?,
        Command::XiCoeffs => xi_coeffs(opts, &ctx)?,
        Command::RiemannCheck => riemann(opts, &ctx)?,
        Command::Presets => presets(),
    };
    let config = RunConfig {
        command: cli.command,
        opts,
        precision: &ctx,
    };
    let bytes = match opts.format {
        Format::Json => {
            let mut doc = json!({ "config": config });
            let map = doc.as_object_mut().expect("object");
            match out.body {
                Value::Object(fields) => map.extend(fields),
                other => {
                    map.insert("result".into(), other);
                }
            }
            map.entry("timings")
                .or_insert_with(|| json!({ "evaluation_ms": 0 }))
                .as_object_mut()
                .expect("timings object")
                .insert("total_ms".into(), json!(start.elapsed().as_millis()));
            let mut s = serde_json::to_vec_pretty(&doc)?;
            s.push(b'\n');
            s
        }
        Format::Csv => out.cells_csv.expect("validated"),
    };
    match &opts.out {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(&bytes))
            .with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(&bytes)?,
    }
    if !out.note.is_empty() {
        eprintln!("{}", out.note);
    }
    Ok(out.exit)
}

fn validate(cli: &Cli) -> Result<()> {
    use Command::*;
    let o = &cli.opts;
    let c = cli.command;
    let given: [(&str, bool, &[Command]); 13] = [
        ("--kmax", o.kmax.is_some(), &[Theta, LaplaceVerify, CmScan, RiemannCheck]),
        ("--mmax", o.mmax.is_some(), &[CmScan, RiemannCheck]),
        ("--xgrid", o.xgrid.is_some(), &[LaplaceVerify, CmScan, RiemannCheck]),
        ("--tgrid", o.tgrid.is_some(), &[Theta]),
        ("--zeros", o.zeros.is_some(), &[Beta0, Theta, LaplaceVerify, CmScan, Probe236, RiemannCheck]),
        ("--zeros-inline", !o.zeros_inline.is_empty(), &[Beta0, Theta, LaplaceVerify, CmScan, Probe236]),
        ("--preset", o.preset.is_some(), &[Order, Beta0, Theta, CmScan, Probe236]),
        ("--tail-model", o.tail_model.is_some(), &[Beta0, Theta, CmScan, Probe236]),
        ("--quad-level", o.quad_level.is_some(), &[XiCoeffs, RiemannCheck]),
        ("--nterms", o.nterms.is_some(), &[XiCoeffs, RiemannCheck]),
        ("--nmax", o.nmax.is_some(), &[Order, XiCoeffs]),
        ("--x", o.x.is_some(), &[Probe236]),
        ("--k", o.k.is_some(), &[Probe236]),
    ];
    for (flag, present, allowed) in given {
        if present && !allowed.contains(&c) {
            bail!("{flag} is not accepted by this command");
        }
    }
    if o.format == Format::Csv && !matches!(c, Theta | CmScan | RiemannCheck) {
        bail!("--format csv is only available for theta, cm-scan and riemann-check");
    }
    if o.threads == 0 {
        bail!("--threads must be at least 1");
    }
    if o.zeros.is_some() && !o.zeros_inline.is_empty() {
        bail!("give either --zeros or --zeros-inline, not both");
    }
    let has_zeros = o.zeros.is_some() || !o.zeros_inline.is_empty();
    if has_zeros && o.preset.is_some() {
        bail!("give either zeros or --preset, not both");
    }
    if o.tail_model.is_some() && !has_zeros {
        bail!("--tail-model applies to zeros given by --zeros or --zeros-inline");
    }
    match c {
        Order if o.preset.is_none() => bail!("order needs --preset"),
        LaplaceVerify if !has_zeros => bail!("laplace-verify needs --zeros or --zeros-inline"),
        Beta0 | Theta | CmScan | Probe236 if !has_zeros && o.preset.is_none() => {
            bail!("this command needs --zeros, --zeros-inline or --preset")
        }
        RiemannCheck if o.zeros.is_none() => bail!("riemann-check needs --zeros FILE"),
        _ => {}
    }
    Ok(())
}

fn parse_inline(s: &str, ctx: &PrecisionContext) -> Result<Complex> {
    let mut parts = s.split(',');
    let re = ctx.parse(parts.next().unwrap_or_default())?;
    let im = match parts.next() {
        Some(p) => ctx.parse(p)?,
        None => ctx.zero(),
    };
    if parts.next().is_some() {
        bail!("inline zero '{s}' should be 're' or 're,im'");
    }
    Ok(Complex::with_val(ctx.prec(), (re, im)))
}

fn parse_tail(spec: &str, ctx: &PrecisionContext) -> Result<TailModel> {
    let parts: Vec<&str> = spec.split(':').collect();
    Ok(match parts.as_slice() {
        ["none"] => TailModel::None,
        ["power", c, p] => TailModel::PowerLaw {
            c: ctx.parse(c)?,
            p: ctx.parse(p)?,
        },
        ["riemann", t] => TailModel::RiemannDensity { t_cut: ctx.parse(t)? },
        _ => bail!("tail model '{spec}' should be none, power:c:p or riemann:T"),
    })
}

fn zero_sequence(opts: &Opts, ctx: &PrecisionContext) -> Result<Option<ZeroSequence>> {
    let zeros = if let Some(p) = &opts.zeros {
        read_zero_file(p, ctx)?
    } else if !opts.zeros_inline.is_empty() {
        opts.zeros_inline
            .iter()
            .map(|s| parse_inline(s, ctx))
            .collect::<Result<_>>()?
    } else {
        return Ok(None);
    };
    let tail = match &opts.tail_model {
        Some(s) => parse_tail(s, ctx)?,
        None => TailModel::None,
    };
    Ok(Some(ZeroSequence::new(zeros, tail)?))
}

fn preset_model(opts: &Opts, ctx: &PrecisionContext) -> Result<Option<FunctionModel>> {
    opts.preset
        .as_deref()
        .map(|s| -> Result<FunctionModel> { Ok(expand_preset(&s.parse::<Preset>()?, ctx)?) })
        .transpose()
}

enum Source {
    Zeros(ZeroSequence),
    Model(FunctionModel),
}

impl Source {
    fn load(opts: &Opts, ctx: &PrecisionContext) -> Result<Self> {
        if let Some(z) = zero_sequence(opts, ctx)? {
            return Ok(Self::Zeros(z));
        }
        preset_model(opts, ctx)?
            .map(Self::Model)
            .ok_or_else(|| anyhow!("no zeros or preset given"))
    }

    fn gk(&self) -> &dyn GkSource {
        match self {
            Self::Zeros(z) => z,
            Self::Model(m) => m,
        }
    }

    fn zeros(&self) -> Result<&ZeroSequence> {
        match self {
            Self::Zeros(z) => Ok(z),
            Self::Model(m) => m
                .zeros()
                .ok_or_else(|| anyhow!("preset '{}' has no known zero sequence", m.label())),
        }
    }
}

fn grid(spec: &Option<String>, default: &str) -> Result<Grid> {
    Ok(spec.as_deref().unwrap_or(default).parse::<Grid>()?)
}

fn phi_quad(opts: &Opts) -> (PhiSeriesSpec, QuadratureSpec) {
    let mut phi = PhiSeriesSpec::default();
    if let Some(n) = opts.nterms {
        phi.n_terms = n;
    }
    let quad = opts.quad_level.map(QuadratureSpec::with_level).unwrap_or_default();
    (phi, quad)
}

fn scan_run(report: CMReport) -> Result<Run> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "m", report.variable.as_str(), "value", "error_bound", "verdict", "escalated", "note"])?;
    for c in &report.cells {
        let verdict = serde_json::to_value(c.verdict)?;
        w.write_record([
            c.k.to_string(),
            c.m.to_string(),
            to_decimal(&c.x, 17),
            to_decimal(&c.margin.value, 40),
            to_decimal(&c.margin.error_bound, 6),
            verdict.as_str().unwrap_or_default().to_string(),
            c.escalated.to_string(),
            c.note.clone().unwrap_or_default(),
        ])?;
    }
    let note = format!("{}: {} cells, summary {:?}", report.source, report.cells.len(), report.summary);
    Ok(Run {
        exit: report.exit_code() as u8,
        cells_csv: Some(w.into_inner()?),
        body: serde_json::to_value(&report)?,
        note,
    })
}

fn plain(body: Value, exit: u8) -> Run {
    Run {
        body: json!({ "result": body }),
        cells_csv: None,
        exit,
        note: String::new(),
    }
}

fn order(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let model = preset_model(opts, ctx)?.expect("validated");
    let stream = model.coefficients().expect("presets carry coefficients");
    let est = order_estimate(stream, opts.nmax.unwrap_or(128), ctx)?;
    Ok(plain(json!({ "source": model.label(), "order": est }), 0))
}

fn beta0(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let source = Source::load(opts, ctx)?;
    let z = source.zeros()?;
    let stored = beta0_compute(z.zeros())?;
    Ok(plain(
        json!({
            "stored_zeros": z.len(),
            "beta0_stored": to_decimal(&stored, 30),
            "beta0_with_tail": to_decimal(&z.beta0_total(), 30),
            "tail_model": z.tail().label(),
        }),
        0,
    ))
}

fn theta(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let source = Source::load(opts, ctx)?;
    let kernel = ThetaKernel::new(source.zeros()?.clone())?;
    let plan = ScanPlan::new(opts.kmax.unwrap_or(4), 0, grid(&opts.tgrid, "log:0.1:10:20")?);
    scan_run(theta_cm_scan(&kernel, &plan, ctx))
}

fn laplace(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let z = zero_sequence(opts, ctx)?.expect("validated");
    let kernel = ThetaKernel::new(z)?;
    let xs = grid(&opts.xgrid, "lin:0.5:3:6")?.points();
    let mut checks = Vec::new();
    let mut all = true;
    for k in 0..=opts.kmax.unwrap_or(3) {
        for &x in &xs {
            let r = laplace_residual(&kernel, &ctx.float(x), k, ctx)?;
            all &= r.identity_holds && r.integrability_holds;
            checks.push(r);
        }
    }
    let mut run = plain(json!({ "all_hold": all, "checks": checks }), if all { 0 } else { 3 });
    run.note = format!("{} laplace checks, all hold: {all}", checks.len());
    Ok(run)
}

fn scan(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let source = Source::load(opts, ctx)?;
    let plan = ScanPlan::new(
        opts.kmax.unwrap_or(4),
        opts.mmax.unwrap_or(4),
        grid(&opts.xgrid, "log:0.1:10:20")?,
    );
    scan_run(cm_scan(source.gk(), &plan, ctx))
}

fn probe(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let source = Source::load(opts, ctx)?;
    let x = opts.x.unwrap_or(2.0);
    if x <= 0.0 {
        bail!("--x must be positive");
    }
    let r = discrepancy_probe(source.gk(), &ctx.float(x), opts.k.unwrap_or(2), ctx)?;
    let mut run = plain(serde_json::to_value(&r)?, 0);
    run.note = format!("canonical G_{k}({x}) = {}, literal = {}", r.canonical, r.literal, k = r.k);
    Ok(run)
}

fn xi_coeffs(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let (phi, quad) = phi_quad(opts);
    let a = xi_coefficients(opts.nmax.unwrap_or(16), &phi, &quad, ctx)?;
    Ok(plain(json!({ "coefficients": a }), 0))
}

fn riemann(opts: &Opts, ctx: &PrecisionContext) -> Result<Run> {
    let (phi, quad) = phi_quad(opts);
    let data = ingest_zeros(opts.zeros.as_ref().expect("validated"), ctx)?;
    let plan = ScanPlan::new(
        opts.kmax.unwrap_or(3),
        opts.mmax.unwrap_or(4),
        grid(&opts.xgrid, "log:1:10000:9")?,
    );
    let input = Corollary4Input {
        zeros: Some(data),
        model: Some(XiSqrtModel::new(phi, quad)),
    };
    scan_run(corollary4_run(&input, &plan, ctx)?)
}

fn presets() -> Run {
    plain(json!({ "presets": Preset::NAMES }), 0)
}
