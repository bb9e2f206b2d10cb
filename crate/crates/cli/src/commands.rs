use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use qjsp::chimera::{embed as embed_qubo, ChimeraGraph, EmbedConfig, HardwareSpec};
use qjsp::exact::ms_optimize;
use qjsp::qubo::{add_timespan_discrimination, comment_value};
use qjsp::sampler::{repetitions_for_confidence, run_query, Backend, Classification, EmbeddedSa, SaParams};
use qjsp::search::{
    optimize, BoundSource, Certainty, DecisionOracle, MakespanModel, MsOracle, QuboOracle, SearchConfig,
};
use qjsp::shaving::{icp_shave, prune_with_windows, window_rows, Windows};
use qjsp::{generate, Coeff, EnsembleParams, Execution, Formulation, JspInstance, PenaltyConfig, QuboProblem};

use crate::provenance::{emit, envelope, provenance, sha256_hex};
use crate::{
    BackendArg, BenchArgs, BoundsArg, CompileArgs, EmbedArgs, EmbedOpts, FamilyArgs, Format, FormulationArg, GenArgs,
    PenaltyArgs, PrecharArgs, SamplerArgs, ShaveArgs, SolveArgs, SolveMode,
};

const EXIT_OK: u8 = 0;
const EXIT_INFEASIBLE: u8 = 1;
const EXIT_UNPROVEN: u8 = 2;

/// Caps the rayon pool at `QJSP_THREADS` workers.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("QJSP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("QJSP_THREADS must be a positive integer, got '{raw}'"))?;
    ensure!(n > 0, "QJSP_THREADS must be positive");
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn family_params(f: &FamilyArgs) -> Result<EnsembleParams> {
    let params = EnsembleParams {
        jobs: f.jobs,
        machines: f.machines,
        theta: f.theta,
        p_min: f.pmin,
        p_max: f.pmax,
        seed: f.seed,
    };
    params.validate()?;
    Ok(params)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Accepts a bare instance or any JSON object with an `instance` field.
fn read_instance(path: &Path) -> Result<(JspInstance, String)> {
    let bytes = read_bytes(path)?;
    let value: Value = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    let raw = value.get("instance").cloned().unwrap_or(value);
    let instance = serde_json::from_value(raw).with_context(|| format!("invalid instance in {}", path.display()))?;
    Ok((instance, sha256_hex(&bytes)))
}

fn coeff(text: &str, what: &str) -> Result<Coeff> {
    Coeff::from_str(text.trim()).map_err(|_| anyhow::anyhow!("{what}: cannot parse '{text}' as a rational"))
}

fn penalty_config(p: &PenaltyArgs, formulation: FormulationArg) -> Result<PenaltyConfig> {
    let parts: Vec<&str> = p.penalties.split(',').collect();
    ensure!(parts.len() == 3, "--penalties expects eta,alpha,beta");
    let cfg = PenaltyConfig {
        eta: coeff(parts[0], "eta")?,
        alpha: coeff(parts[1], "alpha")?,
        beta: coeff(parts[2], "beta")?,
        formulation: match formulation {
            FormulationArg::Penalties => Formulation::Penalties,
            FormulationArg::Rewards => Formulation::Rewards,
        },
        eta_prime: coeff(&p.eta_prime, "eta-prime")?,
        discrimination_k: p.k,
        epsilon: coeff(&p.epsilon, "epsilon")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn build_qubo(instance: &JspInstance, timespan: u32, cfg: &PenaltyConfig, shave: bool) -> Result<QuboProblem> {
    let mut qubo = qjsp::compile(instance, timespan, cfg)?;
    if shave {
        qubo = prune_with_windows(&qubo, &icp_shave(instance, timespan).windows)?;
    }
    Ok(add_timespan_discrimination(&qubo, instance, timespan, cfg.discrimination_k, cfg.epsilon)?)
}

fn hardware(spec: &str) -> Result<HardwareSpec> {
    let mut parts = spec.splitn(3, ',');
    let size = parts.next().unwrap_or_default().trim().parse().context("--hardware size")?;
    let cell = parts.next().context("--hardware expects size,cell[,dead-file]")?.trim().parse().context("--hardware cell")?;
    let mut dead = Vec::new();
    if let Some(path) = parts.next() {
        let text = fs::read_to_string(path.trim()).with_context(|| format!("reading dead-qubit file {path}"))?;
        for tok in text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            dead.push(tok.parse().with_context(|| format!("bad qubit id '{tok}'"))?);
        }
        dead.sort_unstable();
        dead.dedup();
    }
    ensure!(size > 0 && cell > 0, "--hardware size and cell must be positive");
    Ok(HardwareSpec { size, cell, dead })
}

fn embed_config(seed: u64, opts: &EmbedOpts) -> Result<EmbedConfig> {
    ensure!(opts.time_limit > 0.0, "--time-limit must be positive");
    Ok(EmbedConfig {
        seed,
        time_limit: Duration::from_secs_f64(opts.time_limit),
        attempts: opts.attempts.max(1),
        ..EmbedConfig::default()
    })
}

fn backend(s: &SamplerArgs) -> Result<Backend> {
    let reads = match s.confidence {
        Some(r0) => repetitions_for_confidence(s.success_rate, r0)?,
        None => s.reads,
    };
    let sa = SaParams {
        reads,
        sweeps: s.sweeps,
        seed: s.seed,
        anneal_time_us: s.anneal_time,
        execution: Execution::Parallel,
    };
    Ok(match s.backend {
        BackendArg::Exhaustive => Backend::Exhaustive {
            cap: s.max_vars,
            execution: Execution::Parallel,
        },
        BackendArg::Sa => Backend::Sa(sa),
        BackendArg::Embedded => Backend::EmbeddedSa(EmbeddedSa {
            sa,
            hardware: hardware(&s.embed.hardware)?,
            embed: embed_config(s.seed, &s.embed)?,
            chain_coupling: s.jf,
        }),
        BackendArg::Ms => bail!("the ms backend has no sampler"),
    })
}

pub fn gen(a: GenArgs) -> Result<u8> {
    let params = family_params(&a.family)?;
    let instance = generate(&params)?;
    let digest = sha256_hex(serde_json::to_string(&a.family)?.as_bytes());
    let prov = provenance("gen", &digest, &a.family)?;
    emit(a.out.as_deref(), &envelope(prov, "instance", &instance)?)?;
    Ok(EXIT_OK)
}

pub fn compile(a: CompileArgs) -> Result<u8> {
    let (instance, digest) = read_instance(&a.instance)?;
    let cfg = penalty_config(&a.penalty, a.mode)?;
    let qubo = build_qubo(&instance, a.timespan, &cfg, a.penalty.shave)?;
    let config = json!({ "timespan": a.timespan, "mode": a.mode, "penalty": a.penalty });
    let prov = provenance("compile", &digest, &config)?;
    let extra = [
        format!("instance {}", instance.to_json()),
        format!("provenance {}", serde_json::to_string(&prov)?),
    ];
    emit(a.out.as_deref(), &qubo.to_text(&extra))?;
    if qubo.is_infeasible_marker() {
        eprintln!("T = {}: a processing window is empty, wrote the infeasible marker", a.timespan);
    } else {
        eprintln!("T = {}: {} variables, {} couplings", a.timespan, qubo.num_vars(), qubo.quadratic().len());
    }
    Ok(EXIT_OK)
}

pub fn shave(a: ShaveArgs) -> Result<u8> {
    let (instance, digest) = read_instance(&a.instance)?;
    let simple = Windows::simple(&instance, a.timespan);
    let outcome = icp_shave(&instance, a.timespan);
    let before = window_rows(&instance, &simple);
    let after = window_rows(&instance, &outcome.windows);
    let text = match a.format {
        Format::Json => {
            let prov = provenance("shave", &digest, &json!({ "timespan": a.timespan }))?;
            let report = json!({
                "timespan": a.timespan,
                "status": outcome.status,
                "iterations": outcome.iterations,
                "vars_before": simple.count_vars(),
                "vars_after": outcome.windows.count_vars(),
                "before": before,
                "after": after,
            });
            envelope(prov, "report", &report)?
        }
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "# input_sha256 {digest}")?;
            writeln!(s, "T = {}, {} sweeps, status {:?}", a.timespan, outcome.iterations, outcome.status)?;
            writeln!(s, "variables {} -> {}", simple.count_vars(), outcome.windows.count_vars())?;
            writeln!(s, "{:>4} {:>4} {:>4} {:>12} {:>12}", "op", "job", "mach", "simple", "shaved")?;
            for (b, w) in before.iter().zip(&after) {
                writeln!(
                    s,
                    "{:>4} {:>4} {:>4} {:>12} {:>12}",
                    b.operation,
                    b.job,
                    b.machine,
                    format!("[{},{}]", b.earliest, b.latest),
                    format!("[{},{}]", w.earliest, w.latest)
                )?;
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

pub fn embed(a: EmbedArgs) -> Result<u8> {
    let bytes = read_bytes(&a.qubo)?;
    let text = String::from_utf8(bytes.clone()).context("QUBO file is not UTF-8")?;
    let qubo = QuboProblem::from_text(&text)?;
    let spec = hardware(&a.opts.hardware)?;
    let hw = ChimeraGraph::from_spec(&spec);
    let cfg = embed_config(a.seed, &a.opts)?;
    let outcome = embed_qubo(qubo.num_vars(), &qubo.edges(), &hw, &cfg);
    eprintln!("embedding search took {:.3} s", outcome.elapsed.as_secs_f64());
    let prov = provenance("embed", &sha256_hex(&bytes), &json!({ "seed": a.seed, "opts": a.opts }))?;
    let result = json!({
        "hardware": spec,
        "logical_vars": qubo.num_vars(),
        "found": outcome.embedding.is_some(),
        "attempt_seed": outcome.seed,
        "physical_qubits": outcome.embedding.as_ref().map(|e| e.num_qubits()),
        "max_chain": outcome.embedding.as_ref().map(|e| e.max_chain()),
        "mean_chain": outcome.embedding.as_ref().map(|e| e.mean_chain()),
        "chains": outcome.embedding.as_ref().map(|e| e.to_json_map()),
    });
    emit(a.out.as_deref(), &envelope(prov, "embedding", &result)?)?;
    Ok(if outcome.embedding.is_some() { EXIT_OK } else { EXIT_UNPROVEN })
}

#[derive(Serialize)]
struct SolveConfig<'a> {
    mode: SolveMode,
    timespan: Option<u32>,
    formulation: FormulationArg,
    penalty: &'a PenaltyArgs,
    sampler: &'a SamplerArgs,
    bounds: BoundsArg,
    max_queries: usize,
    model: Option<&'a MakespanModel>,
}

pub fn solve(a: SolveArgs) -> Result<u8> {
    match a.mode {
        SolveMode::Decision => solve_decision(&a),
        SolveMode::Optimize => solve_optimize(&a),
    }
}

fn solve_decision(a: &SolveArgs) -> Result<u8> {
    let cfg = penalty_config(&a.penalty, a.formulation)?;
    let (instance, qubo, digest) = match (&a.qubo, &a.instance) {
        (Some(path), None) => {
            let bytes = read_bytes(path)?;
            let text = String::from_utf8(bytes.clone()).context("QUBO file is not UTF-8")?;
            let qubo = QuboProblem::from_text(&text)?;
            let raw = comment_value(&text, "instance").context("QUBO file has no '# instance' header")?;
            let instance = JspInstance::from_json(raw).context("invalid instance header")?;
            (instance, qubo, sha256_hex(&bytes))
        }
        (None, Some(path)) => {
            let t = a.timespan.context("--timespan is required with --instance in decision mode")?;
            let (instance, digest) = read_instance(path)?;
            let qubo = build_qubo(&instance, t, &cfg, a.penalty.shave)?;
            (instance, qubo, digest)
        }
        _ => bail!("decision mode needs exactly one of --qubo or --instance"),
    };
    let config = SolveConfig {
        mode: a.mode,
        timespan: Some(qubo.timespan()),
        formulation: a.formulation,
        penalty: &a.penalty,
        sampler: &a.sampler,
        bounds: a.bounds,
        max_queries: a.max_queries,
        model: None,
    };
    let prov = provenance("solve", &digest, &config)?;

    if a.sampler.backend == BackendArg::Ms {
        let answer = MsOracle.query(&instance, qubo.timespan(), qubo.discrimination_k())?;
        let result = json!({
            "timespan": qubo.timespan(),
            "classification": answer.classification,
            "makespan": answer.makespan,
            "schedule": answer.schedule,
            "nodes": answer.nodes,
            "gantt": answer.schedule.as_ref().map(|s| s.gantt(&instance)),
        });
        emit(a.out.as_deref(), &envelope(prov, "result", &result)?)?;
        return Ok(if answer.classification == Classification::Invalid { EXIT_INFEASIBLE } else { EXIT_OK });
    }

    let backend = backend(&a.sampler)?;
    let outcome = run_query(&instance, &qubo, &backend)?;
    if let Some(path) = &a.samples {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        outcome.samples.write_csv(file)?;
    }
    let mut result = serde_json::to_value(&outcome)?;
    if let Value::Object(map) = &mut result {
        map.insert("marker".into(), json!(qubo.is_infeasible_marker()));
        map.insert("num_vars".into(), json!(qubo.num_vars()));
        map.insert("ground_states".into(), json!(outcome.samples.meta.ground_states));
        map.insert("gantt".into(), json!(outcome.schedule.as_ref().map(|s| s.gantt(&instance))));
    }
    emit(a.out.as_deref(), &envelope(prov, "result", &result)?)?;
    Ok(match outcome.classification {
        Classification::Invalid if qubo.is_infeasible_marker() => EXIT_INFEASIBLE,
        Classification::Invalid if matches!(backend, Backend::Exhaustive { .. }) => EXIT_INFEASIBLE,
        Classification::Invalid => EXIT_UNPROVEN,
        _ => EXIT_OK,
    })
}

/// Default model from the instance's own shape and duration range.
fn instance_model(instance: &JspInstance) -> MakespanModel {
    let durations = instance.ops().iter().map(|o| o.duration);
    let p_min = durations.clone().min().unwrap_or(0);
    let p_max = durations.max().unwrap_or(0);
    MakespanModel::for_family(&EnsembleParams {
        jobs: instance.num_jobs(),
        machines: instance.num_machines(),
        theta: instance.theta(),
        p_min,
        p_max,
        seed: 0,
    })
}

fn read_model(path: &Path) -> Result<MakespanModel> {
    let value: Value = serde_json::from_slice(&read_bytes(path)?)?;
    let raw = value
        .pointer("/result/model")
        .or_else(|| value.get("model"))
        .cloned()
        .unwrap_or(value);
    serde_json::from_value(raw).with_context(|| format!("no makespan model in {}", path.display()))
}

fn solve_optimize(a: &SolveArgs) -> Result<u8> {
    let path = a.instance.as_ref().context("optimize mode needs --instance")?;
    let (instance, digest) = read_instance(path)?;
    let cfg = penalty_config(&a.penalty, a.formulation)?;
    let model = match &a.model {
        Some(p) => read_model(p)?,
        None => instance_model(&instance),
    };
    let search = SearchConfig {
        k: a.penalty.k,
        bounds: match a.bounds {
            BoundsArg::Zero => BoundSource::Zero,
            BoundsArg::Trivial => BoundSource::Trivial,
            BoundsArg::Icp => BoundSource::Icp,
        },
        max_queries: a.max_queries,
    };
    let mut oracle: Box<dyn DecisionOracle> = match a.sampler.backend {
        BackendArg::Ms => Box::new(MsOracle),
        _ => Box::new(QuboOracle {
            penalties: cfg,
            backend: backend(&a.sampler)?,
            shave: a.penalty.shave,
        }),
    };
    let report = optimize(&instance, oracle.as_mut(), &model, &search)?;
    let config = SolveConfig {
        mode: a.mode,
        timespan: None,
        formulation: a.formulation,
        penalty: &a.penalty,
        sampler: &a.sampler,
        bounds: a.bounds,
        max_queries: a.max_queries,
        model: Some(&model),
    };
    let prov = provenance("solve", &digest, &config)?;
    let mut result = serde_json::to_value(&report)?;
    if let Value::Object(map) = &mut result {
        map.insert("schedule".into(), json!(report.schedule));
    }
    emit(a.out.as_deref(), &envelope(prov, "result", &result)?)?;
    Ok(match report.status {
        Certainty::Certified => EXIT_OK,
        Certainty::Unproven => EXIT_UNPROVEN,
    })
}

pub fn precharacterize(a: PrecharArgs) -> Result<u8> {
    let params = family_params(&a.family)?;
    ensure!(a.count > 0, "--count must be positive");
    let pre = qjsp::search::precharacterize(&params, a.count, Execution::Parallel)?;
    let config = json!({ "family": a.family, "count": a.count });
    let digest = sha256_hex(serde_json::to_string(&config)?.as_bytes());
    if let Some(path) = &a.histogram {
        let mut csv = format!("# input_sha256 {digest}\nmakespan,count\n");
        for (t, c) in &pre.model.histogram {
            writeln!(csv, "{t},{c}")?;
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "mean {:.3}, sigma {:.3}, fitted mean {:.3}",
        pre.model.mean, pre.model.sigma, pre.fit_mean
    );
    let prov = provenance("precharacterize", &digest, &config)?;
    emit(a.out.as_deref(), &envelope(prov, "result", &pre)?)?;
    Ok(EXIT_OK)
}

pub fn bench(a: BenchArgs) -> Result<u8> {
    let params = family_params(&a.family)?;
    let model = MakespanModel::for_family(&params);
    let config = json!({ "family": a.family, "count": a.count });
    let digest = sha256_hex(serde_json::to_string(&config)?.as_bytes());
    let mut csv = format!("# input_sha256 {digest}\n");
    csv.push_str("instance,jobs,machines,theta,p_min,p_max,seed,optimum,queries,nodes,wall_seconds\n");
    for i in 0..a.count {
        let seed = params.member_seed(i);
        let instance = generate(&params.with_seed(seed))?;
        let r = ms_optimize(&instance, &model)?;
        let nodes: u64 = r.queries.iter().map(|q| q.nodes).sum();
        let wall: f64 = r.queries.iter().map(|q| q.wall_seconds).sum();
        writeln!(
            csv,
            "{i},{},{},{},{},{},{seed},{},{},{nodes},{wall:.6}",
            params.jobs,
            params.machines,
            params.theta,
            params.p_min,
            params.p_max,
            r.makespan,
            r.queries.len()
        )?;
    }
    emit(a.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}
