use std::fs;
use std::io::Write;
use std::path::Path;

use constat_core::examples::{build, crosscheck, reduced_coefficients, section, Built, ExampleSpec};
use constat_core::families::{reduce_family, reduce_function_family};
use constat_core::{eval_form, Covector, ForceGrid, GridAxis, Point, SublinearForm, Vector, Verdict};
use rayon::prelude::*;

use crate::descriptor::Descriptor;
use crate::report::{GridSpec, SampleHeader, SampleReport, SampleRow};
use crate::{
    exit, parse_floats, parse_params, CheckArgs, CliError, Format, ReduceArgs, SampleArgs, SystemArgs, VerifyArgs,
};

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn descriptor(args: &SystemArgs) -> Result<Descriptor, CliError> {
    match (&args.system, args.example) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            Descriptor::parse(&text)
        }
        (None, Some(id)) => Ok(Descriptor::for_example(
            id,
            parse_params(args.params.as_deref())?,
            args.dim.unwrap_or(3),
        )),
        (None, None) => Err(CliError::Usage("give --system FILE or --example ID".into())),
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Member => exit::MEMBER,
        Verdict::NonMember => exit::NON_MEMBER,
        Verdict::Boundary => exit::BOUNDARY,
    }
}

fn write_out(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("standard output: {e}"))),
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

pub(crate) fn check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let system = descriptor(&args.system)?.load()?;
    let q = Point::new(parse_floats(&args.q, "--q")?);
    let f = Covector::new(parse_floats(&args.f, "--f")?);
    let m = system.membership(&q, &f, args.tol)?;
    writeln!(out, "{} margin={}", m.verdict.name(), m.margin).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(verdict_code(m.verdict))
}

pub(crate) fn sample(args: &SampleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let desc = descriptor(&args.system)?;
    let system = desc.load()?;
    let n = system.q_dim();
    let q = Point::new(parse_floats(&args.q, "--q")?);
    let base = match &args.f {
        Some(f) => parse_floats(f, "--f")?,
        None => vec![0.0; n],
    };
    if args.grid.len() > n {
        return Err(CliError::Usage(format!(
            "{} grid axes for {n} force components",
            args.grid.len()
        )));
    }
    let mut axes = Vec::new();
    let mut specs = Vec::new();
    for g in &args.grid {
        let v = parse_floats(g, "--grid")?;
        let [min, max, step] = v[..] else {
            return Err(CliError::Usage(format!("--grid takes MIN,MAX,STEP, got `{g}`")));
        };
        axes.push(GridAxis::new(min, max, step)?);
        specs.push(GridSpec { min, max, step });
    }
    let grid = ForceGrid::new(Covector::new(base.clone()), axes)?;
    // fail on bad q or f before fanning out
    system.membership(&q, &grid.base, args.tol)?;
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let f = grid.node(i);
            let m = system.membership(&q, &f, args.tol)?;
            Ok(SampleRow {
                f: f.to_vec(),
                verdict: m.verdict.name().to_string(),
                margin: m.margin,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = SampleReport {
        header: SampleHeader {
            system: desc.canonical(),
            q: q.to_vec(),
            base,
            grid: specs,
            tol: args.tol,
            seed: args.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
    };
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    write_out(&text, args.out.as_deref(), out)?;
    Ok(exit::MEMBER)
}

fn closed_form(id: u8) -> &'static str {
    match id {
        1 => "f = a⁻²⟨f, q − q₀⟩ g(q − q₀) on ‖q − q₀‖ = a",
        2 | 7 => "‖f‖ ≤ ρ",
        3 => "torque normal to ϑ vanishes, |⟨f, ϑ⟩| ≤ ρ",
        4 => "f = 0 off the plane; √(‖f‖² − ⟨f, k⟩²) + ρ⟨f, k⟩ ≤ 0 on it",
        5 => "f = k(1 ∓ a/‖q − q₀‖) g(q − q₀)",
        6 => "f = c g(q − q₀), c = (kk′ + kk″ + k′k″)/(k′ + k″)",
        8 => "‖f − c g(q − q₀)‖ ≤ kρ/(k + k′), c = kk′/(k + k′)",
        9 => "f = k g(q − q₀ − aϑ), k√(‖q − q₀‖² − ⟨g(q − q₀), ϑ⟩²) ≤ ρ",
        10 => "‖f − c g(q − q₀)‖ ≤ ρ, c = kk′/(k + k′)",
        _ => "",
    }
}

fn verify_ids(text: &str) -> Result<Vec<u8>, CliError> {
    if text.trim() == "all" {
        return Ok((1..=10).collect());
    }
    text.split(',')
        .map(|s| match s.trim().parse::<u8>() {
            Ok(id) if (1..=10).contains(&id) => Ok(id),
            _ => Err(CliError::Usage(format!("unknown example id `{}`", s.trim()))),
        })
        .collect()
}

pub(crate) fn verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let ids = verify_ids(&args.example)?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    if args.trials == 0 {
        writeln!(err, "warning: zero trials; the verification is vacuous").map_err(io)?;
    }
    writeln!(
        out,
        "{:>7} {:>7} {:>7} {:>7} {:>8}  closed form",
        "example", "trials", "agree", "skipped", "disagree"
    )
    .map_err(io)?;
    let mut reports = Vec::new();
    for &id in &ids {
        let spec = ExampleSpec::new(id, args.dim)?;
        let r = crosscheck(&spec, args.trials, args.seed, args.tol)?;
        writeln!(
            out,
            "{:>7} {:>7} {:>7} {:>7} {:>8}  {}",
            id,
            r.trials,
            r.agreements,
            r.boundary_skipped,
            r.disagreements.len(),
            closed_form(id)
        )
        .map_err(io)?;
        reports.push((spec, r));
    }
    for (spec, r) in &reports {
        if spec.id == 7 {
            writeln!(
                out,
                "example 7 band check: ‖f‖ ≤ ρ = {}, trials with |ρ − ‖f‖| ≤ {} skipped ({}), {} of {} compared agree",
                spec.params.rho,
                args.tol * spec.params.rho,
                r.boundary_skipped,
                r.agreements,
                r.agreements + r.disagreements.len()
            )
            .map_err(io)?;
        }
        for d in r.disagreements.iter().take(5) {
            writeln!(
                out,
                "example {} trial {}: q = {} f = {} closed form {} (margin {}), numeric {} (margin {})",
                spec.id,
                d.trial,
                list(&d.q),
                list(&d.f),
                if d.analytic.member { "member" } else { "non-member" },
                d.analytic.margin,
                d.numeric.name(),
                d.numeric_margin
            )
            .map_err(io)?;
        }
    }
    let failed = reports.iter().any(|(_, r)| !r.passed());
    writeln!(out, "{}", if failed { "FAIL" } else { "PASS" }).map_err(io)?;
    Ok(if failed { 1 } else { 0 })
}

pub(crate) fn reduce(args: &ReduceArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let id = args.example;
    let space = constat_core::MetricSpace::identity(args.dim.max(1));
    let spec = ExampleSpec::from_params(id, space, &parse_params(args.params.as_deref())?)?;
    let n = spec.dim();
    let Some(zeta) = section(&spec) else {
        return Err(match id {
            1..=4 => CliError::Usage(format!(
                "example {id} is a static system; only generating families reduce"
            )),
            _ => CliError::NoSection(format!(
                "example {id} has no global section: the critical set is not the image of a section"
            )),
        });
    };
    let q0 = spec.q0.to_vec();
    // a g-unit displacement from q₀ probes the coefficients
    let e = spec
        .space
        .normalize(&Vector::new((0..n).map(|i| (i == 0) as u8 as f64).collect()))
        .expect("nonzero");
    let probe = Point::new(q0.iter().zip(e.as_slice()).map(|(a, b)| a + b).collect());
    let q = match &args.q {
        Some(t) => Point::new(parse_floats(t, "--q")?),
        None => probe.clone(),
    };
    if q.dim() != n {
        return Err(CliError::Usage(format!("--q has {} components, expected {n}", q.dim())));
    }
    let samples = [q.clone(), spec.q0.clone(), probe.clone()];
    let mut text = String::new();
    use std::fmt::Write as _;
    match build(&spec)? {
        Built::Form(fam) => {
            let reduced = reduce_family(&fam, zeta, &samples, args.tol)?;
            let at_q = reduced.form_at(&q)?;
            let at_probe = reduced.form_at(&probe)?;
            let linear = match at_q.canonical() {
                Some(h) => h.linear_part().to_vec(),
                None => Vec::new(),
            };
            let a_probe = at_probe.canonical().map(|h| h.linear_part().clone());
            let coefficient = a_probe
                .map(|a| a.as_slice().iter().zip(e.as_slice()).map(|(x, y)| x * y).sum::<f64>())
                .unwrap_or(f64::NAN);
            let minus_e = Vector::new(e.as_slice().iter().map(|x| -x).collect());
            let weight = (eval_form(&at_q, &e)? + eval_form(&at_q, &minus_e)?) / 2.0;
            let _ = writeln!(text, "example {id}: reduced form c⟨g(q − q₀), δq⟩ + w‖δq‖");
            let _ = writeln!(text, "q = {}", list(q.as_slice()));
            let _ = writeln!(text, "linear = {}", list(&linear));
            let _ = writeln!(text, "linear_coefficient = {coefficient}");
            let _ = writeln!(text, "seminorm_weight = {weight}");
            let _ = writeln!(text, "domain_dim = {}", at_q.domain().dim());
        }
        Built::Function(fam) => {
            let reduced = reduce_function_family(&fam, zeta, &samples, args.tol)?;
            let coefficient = reduced.energy(&probe) - reduced.energy(&spec.q0);
            let _ = writeln!(text, "example {id}: reduced energy U(q) = e‖q − q₀‖²");
            let _ = writeln!(text, "energy_coefficient = {coefficient}");
            let _ = writeln!(text, "q = {}", list(q.as_slice()));
            let _ = writeln!(text, "energy = {}", reduced.energy(&q));
            let _ = writeln!(text, "gradient = {}", list(reduced.gradient(&q)?.as_slice()));
            // the gradient is 2e g(q − q₀)
            let _ = writeln!(text, "linear_coefficient = {}", 2.0 * coefficient);
            let _ = writeln!(text, "seminorm_weight = 0");
        }
        Built::Static(_) => unreachable!("sections exist only for families"),
    }
    if let Some((c, w)) = reduced_coefficients(&spec) {
        let _ = match id {
            6 => writeln!(text, "closed form: e = {}", c / 2.0),
            _ => writeln!(text, "closed form: c = {c}, w = {w}"),
        };
    }
    write_out(&text, args.out.as_deref(), out)?;
    Ok(exit::MEMBER)
}
