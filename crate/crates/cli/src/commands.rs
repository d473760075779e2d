use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use gpk_core::crp::{
    check_conjecture8, expected_kstar, expected_s, joint_kstar_s, pmf_kstar, pmf_s,
    pmf_s_given_kstar, prob_all_new, prob_all_old, sample_group, GroupOutcome,
};
use gpk_core::gibbs::format_ln_decimal;
use gpk_core::stirling::{noncentral_stirling, StirlingTable};
use gpk_core::verify::{self, Suite, SuiteReport, SuiteScale};
use gpk_core::{GibbsModel, PartitionState, Pmf, SignedLogValue, VTable, Weights};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::model::{ModelArgs, ModelKind};
use crate::output::{real, write_json};
use crate::{CliError, Format, PredictArgs, SampleArgs, StirlingArgs, TableArgs, VerifyArgs};

/// Replicates per generator stream in `sample`.
const SHARD: usize = 4096;

fn pick(format: Option<Format>, default: Format, allowed: &[Format], command: &str) -> Result<Format, CliError> {
    let f = format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!("{command} does not support --format {f:?}").to_lowercase()))
    }
}

fn parse_state(sizes: &str) -> Result<PartitionState, CliError> {
    Ok(PartitionState::from_str(sizes)?)
}

fn decimal(v: SignedLogValue) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let sign = if v.sign() < 0 { "-" } else { "" };
    let x = v.to_f64();
    if x.is_finite() && x != 0.0 {
        // 15 significant digits, then the shortest form of that
        let rounded: f64 = format!("{x:.14e}").parse().unwrap_or(x);
        format!("{rounded}")
    } else {
        format!("{sign}{}", format_ln_decimal(v.log_mag()))
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn stirling(
    model: &ModelArgs,
    args: &StirlingArgs,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let format = pick(format, Format::Text, &[Format::Text, Format::Json, Format::Csv], "stirling")?;
    let alpha = model
        .alpha
        .ok_or_else(|| CliError::Usage("stirling needs --alpha".into()))?;
    if args.k > args.n {
        return Err(CliError::Validation(format!(
            "need k <= n, got n = {}, k = {}",
            args.n, args.k
        )));
    }
    let value = match args.gamma {
        Some(gamma) => noncentral_stirling(alpha, gamma, args.n, args.k)?,
        None => StirlingTable::new(alpha, args.n)?.get(args.n, args.k)?,
    };
    let ln = if value.is_zero() { f64::NEG_INFINITY } else { value.log_mag() };
    match format {
        Format::Text => {
            writeln!(out, "value {}", decimal(value))?;
            writeln!(out, "sign {}", value.sign())?;
            writeln!(out, "log_magnitude {ln}")?;
        }
        Format::Json => write_json(
            out,
            json!({
                "n": args.n,
                "k": args.k,
                "alpha": real(alpha),
                "gamma": args.gamma.map(real),
                "value": real(value.to_f64()),
                "decimal": decimal(value),
                "sign": value.sign(),
                "log_magnitude": real(ln),
            }),
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["n", "k", "alpha", "gamma", "value", "sign", "log_magnitude"])?;
            w.write_record([
                args.n.to_string(),
                args.k.to_string(),
                sci(alpha),
                args.gamma.map(sci).unwrap_or_default(),
                decimal(value),
                value.sign().to_string(),
                sci(ln),
            ])?;
            w.flush()?;
        }
    }
    Ok(())
}

fn pmf_json<T>(pmf: &Pmf<T>, label: impl Fn(&T) -> Value) -> Value {
    json!({
        "support": pmf.support().iter().map(label).collect::<Vec<_>>(),
        "probs": pmf.probs().iter().map(|&p| real(p)).collect::<Vec<_>>(),
        "sum": real(pmf.sum()),
    })
}

pub fn predict(
    model: &ModelArgs,
    args: &PredictArgs,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let format = pick(format, Format::Json, &[Format::Json, Format::Csv], "predict")?;
    let model = model.build()?;
    let state = parse_state(&args.sizes)?;
    let m = args.m;
    model.check_reach(state.n() + m + 1)?;

    let joint = joint_kstar_s(&model, &state, m)?;
    let s_law = pmf_s(&model, &state, m)?;
    let k_law = pmf_kstar(&model, &state, m)?;
    let mut conditionals = Vec::new();
    for (&kstar, p) in k_law.iter() {
        if p > 0.0 {
            conditionals.push((kstar, pmf_s_given_kstar(&model, &state, m, kstar)?));
        }
    }
    let e_s = expected_s(&model, &state, m)?;
    let e_k = expected_kstar(&model, &state, m)?;
    let all_new = prob_all_new(&model, &state, m)?;
    let all_old = prob_all_old(&model, &state, m)?;
    let c8 = check_conjecture8(&model, &state, m, args.tol)?;

    match format {
        Format::Json => write_json(
            out,
            json!({
                "model": model.describe(),
                "state": {"sizes": state.sizes(), "n": state.n(), "k": state.k()},
                "m": m,
                "joint": pmf_json(&joint, |&(k, s)| json!({"kstar": k, "s": s})),
                "s": pmf_json(&s_law, |&s| json!(s)),
                "kstar": pmf_json(&k_law, |&k| json!(k)),
                "s_given_kstar": conditionals
                    .iter()
                    .map(|(k, pmf)| json!({"kstar": k, "pmf": pmf_json(pmf, |&s| json!(s))}))
                    .collect::<Vec<_>>(),
                "expected_s": real(e_s),
                "expected_kstar": real(e_k),
                "prob_all_new": real(all_new),
                "prob_all_old": real(all_old),
                "conjecture8": {
                    "expected_s": real(c8.expected_s),
                    "conjectured": real(c8.conjectured),
                    "rel_gap": real(c8.rel_gap),
                    "tol": real(c8.tol),
                    "passed": c8.passed,
                    "form_gaps": {
                        "stirling_vs_rising": real(c8.form_gaps.stirling_vs_rising),
                        "stirling_vs_weighted": real(c8.form_gaps.stirling_vs_weighted),
                        "rising_vs_weighted": real(c8.form_gaps.rising_vs_weighted),
                    },
                },
            }),
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["quantity", "kstar", "s", "value"])?;
            let blank = String::new;
            for (&(k, s), p) in joint.iter() {
                w.write_record(["joint".into(), k.to_string(), s.to_string(), sci(p)])?;
            }
            for (&s, p) in s_law.iter() {
                w.write_record(["s".into(), blank(), s.to_string(), sci(p)])?;
            }
            for (&k, p) in k_law.iter() {
                w.write_record(["kstar".into(), k.to_string(), blank(), sci(p)])?;
            }
            for (k, pmf) in &conditionals {
                for (&s, p) in pmf.iter() {
                    w.write_record(["s_given_kstar".into(), k.to_string(), s.to_string(), sci(p)])?;
                }
            }
            for (name, v) in [
                ("expected_s", e_s),
                ("expected_kstar", e_k),
                ("prob_all_new", all_new),
                ("prob_all_old", all_old),
                ("conjectured_expected_s", c8.conjectured),
            ] {
                w.write_record([name.into(), blank(), blank(), sci(v)])?;
            }
            w.flush()?;
        }
        Format::Text => unreachable!(),
    }
    Ok(())
}

struct Draw {
    sizes: String,
    kstar: usize,
    s: usize,
}

fn draw_shard(
    model: &GibbsModel,
    state: &PartitionState,
    m: usize,
    seed: u64,
    shard: usize,
    count: usize,
) -> Result<Vec<Draw>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    (0..count)
        .map(|_| {
            let o: GroupOutcome = sample_group(model, state, m, &mut rng)?;
            Ok(Draw {
                sizes: o.apply(state)?.to_string(),
                kstar: o.kstar(),
                s: o.s(),
            })
        })
        .collect()
}

pub fn sample(
    model: &ModelArgs,
    args: &SampleArgs,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let format = pick(format, Format::Csv, &[Format::Csv, Format::Json], "sample")?;
    let model = model.build()?;
    let state = parse_state(&args.sizes)?;
    let m = match (args.m, args.n_total) {
        (Some(m), _) => m,
        (None, Some(total)) => total.checked_sub(state.n()).ok_or_else(|| {
            CliError::Validation(format!(
                "--n-total {total} is below the {} customers already seated",
                state.n()
            ))
        })?,
        (None, None) => return Err(CliError::Usage("give --m or --n-total".into())),
    };
    model.check_reach(state.n() + m)?;

    let started = Instant::now();
    let shards = args.reps.div_ceil(SHARD);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let results: Vec<Result<Vec<Draw>, CliError>> = pool.install(|| {
        (0..shards)
            .into_par_iter()
            .map(|i| {
                let count = SHARD.min(args.reps - i * SHARD);
                draw_shard(&model, &state, m, args.seed, i, count)
            })
            .collect()
    });
    log::info!(
        "drew {} replicates in {} shards in {:.3}s",
        args.reps,
        shards,
        started.elapsed().as_secs_f64()
    );

    let draws = results.into_iter().flat_map(|r| match r {
        Ok(v) => v.into_iter().map(Ok).collect::<Vec<_>>(),
        Err(e) => vec![Err(e)],
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["rep", "sizes", "kstar", "s"])?;
            for (rep, d) in draws.enumerate() {
                let d = d?;
                w.write_record([rep.to_string(), d.sizes, d.kstar.to_string(), d.s.to_string()])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows = draws
                .enumerate()
                .map(|(rep, d)| d.map(|d| json!({"rep": rep, "sizes": d.sizes, "kstar": d.kstar, "s": d.s})))
                .collect::<Result<Vec<_>, _>>()?;
            write_json(out, Value::Array(rows))?;
        }
        Format::Text => unreachable!(),
    }
    Ok(())
}

fn suites(name: &str) -> Result<Vec<Suite>, CliError> {
    if name.eq_ignore_ascii_case("all") {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::from_str(name)
        .map(|s| vec![s])
        .map_err(|e| CliError::Usage(e.to_string()))
}

pub fn verify(
    model: &ModelArgs,
    args: &VerifyArgs,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let format = pick(format, Format::Text, &[Format::Text, Format::Json], "verify")?;
    let suites = suites(&args.suite)?;
    // Stirling identities only need alpha, which may be any value below 1
    if suites == [Suite::Stirling] && model.model != ModelKind::Table {
        let alpha = model.alpha.unwrap_or(0.5);
        let report = SuiteReport {
            suite: Suite::Stirling,
            checks: verify::stirling_identities(alpha, args.nmax.unwrap_or(SuiteScale::default().n_max))?,
        };
        return emit_reports(json!({"kind": "stirling", "alpha": alpha}), vec![report], format, out);
    }
    let model = model.build_unchecked()?;
    let defaults = SuiteScale::default();
    let scale = SuiteScale {
        n: args.n.unwrap_or(defaults.n),
        n_max: args.nmax.or(model.max_n()).unwrap_or(defaults.n_max),
        m: args.m.unwrap_or(defaults.m),
    };

    let mut reports: Vec<SuiteReport> = Vec::new();
    // a table that breaks the recursion does not define a partition; stop there
    if model.max_n().is_some() && !suites.contains(&Suite::Recursion) {
        let check = verify::recursion(&model, scale.n_max);
        let ok = check.passed();
        reports.push(SuiteReport {
            suite: Suite::Recursion,
            checks: vec![check],
        });
        if ok {
            for &suite in &suites {
                reports.push(verify::run(suite, &model, scale)?);
            }
        }
    } else {
        for &suite in &suites {
            let started = Instant::now();
            reports.push(verify::run(suite, &model, scale)?);
            log::info!("suite {suite} took {:.3}s", started.elapsed().as_secs_f64());
        }
    }

    emit_reports(describe_unchecked(&model), reports, format, out)
}

fn emit_reports(
    model: Value,
    reports: Vec<SuiteReport>,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let passed = reports.iter().all(SuiteReport::passed);
    match format {
        Format::Text => {
            for r in &reports {
                writeln!(out, "{r}")?;
            }
        }
        Format::Json => write_json(
            out,
            json!({
                "model": model,
                "passed": passed,
                "suites": reports
                    .iter()
                    .map(|r| json!({
                        "suite": r.suite.name(),
                        "passed": r.passed(),
                        "checks": r.checks.iter().map(|c| json!({
                            "name": c.name,
                            "residual": real(c.residual),
                            "tol": c.tol.map(real),
                            "cases": c.cases,
                            "passed": c.passed(),
                        })).collect::<Vec<_>>(),
                    }))
                    .collect::<Vec<_>>(),
            }),
        )?,
        Format::Csv => unreachable!(),
    }
    if passed {
        Ok(())
    } else {
        out.flush()?;
        Err(CliError::Verification("verification failed".into()))
    }
}

fn describe_unchecked(model: &GibbsModel) -> Value {
    match model.weights() {
        Weights::ExplicitTable(t) => json!({"kind": "table", "alpha": model.alpha(), "n_max": t.n_max()}),
        _ => model.describe(),
    }
}

pub fn table(
    model: &ModelArgs,
    args: &TableArgs,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let format = pick(format, Format::Json, &[Format::Json, Format::Csv], "table")?;
    let model = model.build()?;
    let mut table = VTable::from_model(&model, args.nmax)?;
    if let Some(spec) = &args.perturb {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [n, k, f] => n.parse::<usize>().ok().zip(k.parse::<usize>().ok()).zip(f.parse::<f64>().ok()),
            _ => None,
        };
        let ((n, k), factor) =
            parsed.ok_or_else(|| CliError::Usage(format!("--perturb expects N,K,FACTOR, got {spec:?}")))?;
        if k == 0 || k > n || n > args.nmax {
            return Err(CliError::Validation(format!("cannot perturb V({n},{k}) in a table of {} rows", args.nmax)));
        }
        table.perturb(n, k, factor);
    }
    match format {
        // table entries are decimal strings already
        Format::Json => {
            serde_json::to_writer(&mut *out, &table.to_json_value()).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["n", "k", "V"])?;
            for n in 1..=table.n_max() {
                for k in 1..=n {
                    w.write_record([n.to_string(), k.to_string(), format_ln_decimal(table.ln_v(n, k)?)])?;
                }
            }
            w.flush()?;
        }
        Format::Text => unreachable!(),
    }
    Ok(())
}
