use std::fs::File;
use std::io::BufReader;

use ptflab::decompose::{build_regularity_tree, recursion_trace, RegularityConfig, TraceSchedule};
use ptflab::hypercube::{fourier, gl_witness_row, GlRow, ENUMERATION_CAP};
use ptflab::randomized::{
    estimate_alpha, estimate_average_sensitivity, estimate_noise_sensitivity, exact_alpha,
    random_polynomial, PolynomialSpec, Sampling, StreamRng, EXACT_ALPHA_CAP,
};
use ptflab::{gl_bound, theorem_bound, BoundConstants, MultilinearPolynomial, SignFunction};

use crate::args::{Args, Format};
use crate::error::CliError;
use crate::report::{
    write_json, BoundValue, CheckKind, CheckRow, Measured, NoisePoint, PolynomialMeta,
    SensitivityReport, Summary, TheoremBoundValue,
};

/// Noise rates reported by `analyze`.
pub const NOISE_RATES: [f64; 4] = [0.01, 0.05, 0.1, 0.25];

pub fn sampling(args: &Args, seed: u64) -> Sampling {
    Sampling::new(args.samples, seed).with_workers(args.workers)
}

pub fn regularity_config(args: &Args) -> Result<RegularityConfig, CliError> {
    let mut c = RegularityConfig::new(args.tau, args.eps, args.delta)?;
    c.big_m = args.big_m;
    c.validate()?;
    Ok(c)
}

/// A polynomial from `--input`, or generated from `--n/--d/--terms/--seed`.
pub fn load_polynomial(args: &Args, seed: u64) -> Result<(MultilinearPolynomial, PolynomialMeta), CliError> {
    let (p, source, used_seed) = match (&args.input, args.n) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
            let p = MultilinearPolynomial::from_json_reader(BufReader::new(file))?;
            (p, path.display().to_string(), None)
        }
        (None, Some(n)) => {
            let d = args.d.ok_or_else(|| CliError::Usage("--d is required with --n".into()))?;
            (generate(n, d, args.terms, seed)?, "generated".to_string(), Some(seed))
        }
        (None, None) => return Err(CliError::Usage("either --input or --n/--d is required".into())),
    };
    let meta = PolynomialMeta {
        n: p.n(),
        degree: p.degree(),
        terms: p.num_terms(),
        source,
        seed: used_seed,
    };
    Ok((p, meta))
}

pub fn generate(n: usize, d: usize, terms: Option<usize>, seed: u64) -> Result<MultilinearPolynomial, CliError> {
    let spec = PolynomialSpec { n, d, terms };
    Ok(random_polynomial(&spec, &mut StreamRng::new(seed, 0))?)
}

fn row(check: &str, kind: CheckKind, passed: bool, measured: f64, bound: Option<f64>, detail: String) -> CheckRow {
    CheckRow {
        suite: "analyze".into(),
        check: check.into(),
        instance: "input".into(),
        kind,
        passed,
        measured,
        bound,
        method: "enumeration".into(),
        detail,
    }
}

pub fn analyze(args: &Args, seed: u64) -> Result<SensitivityReport, CliError> {
    let (p, meta) = load_polynomial(args, seed)?;
    let n = p.n();
    let s = sampling(args, seed);
    let f = SignFunction::new(p.clone());
    let mut checks = Vec::new();

    let (average_sensitivity, noise_sensitivity, influences) = if n <= ENUMERATION_CAP {
        let table = f.truth_table()?;
        let edge = table.average_sensitivity();
        let spectrum = fourier(&table)?;
        let spectral = spectrum.total_influence();
        checks.push(row(
            "two_path_sensitivity",
            CheckKind::Identity,
            (edge - spectral).abs() <= 1e-9,
            (edge - spectral).abs(),
            Some(1e-9),
            format!("edge count {edge}, spectral {spectral}"),
        ));
        let weight = spectrum.total_weight();
        checks.push(row(
            "parseval",
            CheckKind::Identity,
            (weight - 1.0).abs() <= 1e-9,
            weight,
            Some(1.0),
            "sum of squared Walsh coefficients of sgn p".into(),
        ));
        let ns = NOISE_RATES
            .iter()
            .map(|&delta| NoisePoint {
                delta,
                value: Measured::exact(ptflab::hypercube::noise_sensitivity_from_spectrum(&spectrum, delta)),
            })
            .collect();
        (Some(Measured::exact(edge)), ns, Some(table.influences()))
    } else if args.samples == 0 {
        return Err(CliError::Infeasible(format!(
            "n = {n} exceeds the enumeration cap {ENUMERATION_CAP} and --samples is 0"
        )));
    } else {
        let avg = estimate_average_sensitivity(&p, &s)?;
        let ns = NOISE_RATES
            .iter()
            .enumerate()
            .map(|(k, &delta)| {
                Ok(NoisePoint {
                    delta,
                    value: estimate_noise_sensitivity(&p, delta, &s.derived(10 + k as u32))?.into(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        (Some(avg.into()), ns, None)
    };

    let alpha = if n <= EXACT_ALPHA_CAP {
        Some(Measured::exact(exact_alpha(&p)?))
    } else if args.samples > 0 {
        Some(estimate_alpha(&p, &s.derived(1))?.into())
    } else {
        None
    };

    let variance = p.variance();
    let total = p.total_influence();
    let d = p.degree();
    let sandwich = variance <= total + 1e-9 && total <= d as f64 * variance + 1e-9;
    checks.push(row(
        "influence_sandwich",
        CheckKind::Hard,
        sandwich,
        total,
        Some(d as f64 * variance),
        format!("variance {variance} <= total influence {total} <= degree * variance"),
    ));

    let as_value = average_sensitivity.map(|m| m.value());
    let gl = if n >= 2 && d >= 1 {
        let value = gl_bound(n, d)?;
        let ratio = as_value.map(|v| v / value);
        if let Some(Measured::Enumeration { value: v }) = average_sensitivity {
            checks.push(row(
                "gl_conjecture",
                CheckKind::Hard,
                v <= value + 1e-9,
                v,
                Some(value),
                "exact average sensitivity against the conjectured bound".into(),
            ));
        }
        Some(BoundValue { value, ratio })
    } else {
        None
    };
    let theorem = if d >= 1 {
        let constants = BoundConstants {
            c_log: args.clog,
            c_exp: args.cexp,
        };
        Some(TheoremBoundValue {
            value: theorem_bound(n as f64, d, constants)?,
            c_log: args.clog,
            c_exp: args.cexp,
        })
    } else {
        None
    };
    let summary = Summary::of(&checks);
    Ok(SensitivityReport {
        polynomial: meta,
        average_sensitivity,
        noise_sensitivity,
        influences,
        polynomial_influences: p.influences(),
        variance,
        regularity: p.regularity().ok(),
        alpha,
        gl_bound: gl,
        theorem_bound: theorem,
        checks,
        summary,
    })
}

pub fn random(args: &Args, seed: u64) -> Result<Vec<u8>, CliError> {
    let n = args.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
    let d = args.d.ok_or_else(|| CliError::Usage("--d is required".into()))?;
    let p = generate(n, d, args.terms, seed)?;
    let mut out = Vec::new();
    p.write_json(&mut out)?;
    Ok(out)
}

pub fn tree(args: &Args, seed: u64) -> Result<Vec<u8>, CliError> {
    let (p, _) = load_polynomial(args, seed)?;
    let config = regularity_config(args)?;
    let tree = build_regularity_tree(&p, &config)?;
    let mut out = Vec::new();
    match args.format {
        Format::Json => write_json(&tree, &mut out)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["leaf", "depth", "class", "sign", "method", "mass", "path", "terms"])?;
            for (i, leaf) in tree.leaves().iter().enumerate() {
                let (class, sign) = match leaf.class {
                    ptflab::decompose::LeafClass::Regular => ("regular", String::new()),
                    ptflab::decompose::LeafClass::NearConstant { sign } => ("near_constant", sign.to_string()),
                    ptflab::decompose::LeafClass::Bad => ("bad", String::new()),
                };
                let path: Vec<String> = leaf.path.iter().map(|s| format!("x{}={}", s.var, s.value)).collect();
                w.write_record([
                    i.to_string(),
                    leaf.depth.to_string(),
                    class.to_string(),
                    sign,
                    serde_json::to_value(leaf.method)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default(),
                    leaf.mass().to_string(),
                    path.join(" "),
                    leaf.polynomial.num_terms().to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(out)
}

pub fn trace(args: &Args, seed: u64) -> Result<Vec<u8>, CliError> {
    let (p, _) = load_polynomial(args, seed)?;
    let mut schedule = TraceSchedule::new(args.blocks.clone(), regularity_config(args)?);
    schedule.c1 = args.c1;
    schedule.c2 = args.c2;
    let s = sampling(args, seed);
    if args.samples == 0 {
        return Err(CliError::Infeasible("trace needs --samples > 0".into()));
    }
    let trace = recursion_trace(&p, &schedule, &s)?;
    let mut out = Vec::new();
    match args.format {
        Format::Json => write_json(&trace, &mut out)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "level", "members", "mean_n", "b", "measured", "reference", "mean_block_alpha",
                "aleph_count", "aleph_median", "regular_mass", "near_constant_mass", "bad_mass",
            ])?;
            for l in &trace.levels {
                w.write_record([
                    l.level.to_string(),
                    l.members.to_string(),
                    l.mean_n.to_string(),
                    l.b.to_string(),
                    l.measured.to_string(),
                    l.reference.to_string(),
                    l.mean_block_alpha.to_string(),
                    l.aleph.count.to_string(),
                    l.aleph.median.to_string(),
                    l.regular_mass.to_string(),
                    l.near_constant_mass.to_string(),
                    l.bad_mass.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(out)
}

pub fn gl(args: &Args) -> Result<Vec<u8>, CliError> {
    let d = args.d.unwrap_or(1);
    let rows: Vec<GlRow> = match args.n {
        Some(n) => vec![gl_witness_row(n, d)?],
        None => (d.max(2)..=15).map(|n| gl_witness_row(n, d)).collect::<Result<_, _>>()?,
    };
    let mut out = Vec::new();
    match args.format {
        Format::Json => write_json(&rows, &mut out)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(GlRow::CSV_HEADER)?;
            for r in &rows {
                w.write_record([
                    r.n.to_string(),
                    r.d.to_string(),
                    r.as_exact.to_string(),
                    r.gl_bound.to_string(),
                    r.ratio.to_string(),
                    r.witness_flag.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(out)
}
