use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use aoi_mec::analytic::{aoi_bounds, p_opt_paoi, system_metrics};
use aoi_mec::model::check_stability;
use aoi_mec::optimize::{objective_at, search_p, stable_p_interval, Objective, OptResult};
use aoi_mec::par::Execution;
use aoi_mec::simulate::{collect_records, simulate_mec_with, write_trace, Estimate, SimParams};
use aoi_mec::{Error, Scheme, SystemConfig};

use crate::args::{AnalyticArgs, OptimizeArgs, SimulateArgs, SweepArgs, ValidateArgs};
use crate::config::parse_config;
use crate::format::{cell, write_csv};
use crate::sweep::{evaluate, run_sweep, RowStatus, SweepSpec, ROW_HEADER};
use crate::validate::{compare, Z_LIMIT};
use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_config(path: &Path) -> Result<SystemConfig, CliError> {
    parse_config(&read(path)?).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(BufWriter::new(file), header, rows).map_err(|e| io_err(e.into()))
}

fn kind(s: Scheme) -> &'static str {
    match s.normalized() {
        Scheme::Local => "local",
        Scheme::Edge => "edge",
        Scheme::Partial(_) => "partial",
    }
}

fn describe(cfg: &SystemConfig, out: &mut dyn Write) -> io::Result<()> {
    writeln!(
        out,
        "scheme {} (p = {}), {} UEs, mu_b = {}, mu_d = {}",
        kind(cfg.scheme()),
        cfg.offload_ratio(),
        cfg.num_ues(),
        cfg.edge_rate(),
        cfg.tx_rate()
    )
}

fn sim_params(settings: crate::sweep::SimSettings, min_reps: usize) -> Result<SimParams, CliError> {
    let params = settings.params();
    params.validate()?;
    if params.replications < min_reps {
        return Err(CliError::Usage(format!(
            "at least {min_reps} replications are needed for standard errors, got {}",
            params.replications
        )));
    }
    Ok(params)
}

pub fn cmd_analytic(args: &AnalyticArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    check_stability(&cfg).require_stable()?;
    let m = system_metrics(&cfg)?;
    let mut report = || -> io::Result<()> {
        describe(&cfg, out)?;
        for ue in 0..cfg.num_ues() {
            writeln!(
                out,
                "ue {ue}: lambda = {}, mu_local = {}, aoi = {}, paoi = {}",
                cfg.gen_rate(ue),
                cfg.local_rates()[ue],
                m.per_ue_aoi[ue],
                m.per_ue_paoi[ue]
            )?;
        }
        writeln!(out, "system: aoi = {}, paoi = {}", m.system_aoi, m.system_paoi)?;
        Ok(())
    };
    report().map_err(stdout_err)?;

    if cfg.is_homogeneous() {
        let b = aoi_bounds(&cfg)?;
        let opt = p_opt_paoi(&cfg)?;
        (|| -> io::Result<()> {
            writeln!(
                out,
                "bounds: aoi_low = {} <= aoi = {} <= aoi_up = {} (gap = {}, gamma = {})",
                b.lower, m.system_aoi, b.upper, b.gap, b.gap_ratio
            )?;
            writeln!(
                out,
                "p_opt = {} by {}{}",
                opt.p,
                opt.branch.describe(),
                if opt.stable { "" } else { ", unstable at p_opt" }
            )
        })()
        .map_err(stdout_err)?;
    }
    let stability = check_stability(&cfg);
    if stability.is_near_unstable() {
        writeln!(out, "warning: utilization {} is close to 1", stability.max_utilization()).map_err(stdout_err)?;
    }

    if let Some(path) = &args.out {
        let row = evaluate(&cfg, kind(cfg.scheme()), None, Execution::Parallel);
        write_table(path, &ROW_HEADER, &[row.record()])?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = SweepSpec::parse(&read(&args.config)?).map_err(|source| CliError::Config {
        path: args.config.clone(),
        source,
    })?;
    let settings = args.sim.settings().or(spec.sim);
    let params = if args.simulate || spec.simulate {
        Some(sim_params(settings, 2)?)
    } else {
        None
    };
    let rows = run_sweep(&spec, params.as_ref(), Execution::Parallel);
    for r in &rows {
        if let (RowStatus::Error | RowStatus::Unstable, Some(m)) = (r.status, &r.message) {
            eprintln!("{} = {}, scheme {}: {}: {m}", spec.swept, cell(r.value), r.scheme, r.status);
        }
    }
    let records: Vec<_> = rows.iter().map(|r| r.record()).collect();
    match &args.out {
        Some(path) => write_table(path, &ROW_HEADER, &records),
        None => write_csv(&mut *out, &ROW_HEADER, &records).map_err(|e| stdout_err(e.into())),
    }
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    check_stability(&cfg).require_stable()?;
    let params = sim_params(args.sim.settings(), 2)?.with_correlations(true);
    let sim = simulate_mec_with(&cfg, &params, Execution::Parallel)?;
    if sim.diagnostics.diverged {
        return Err(CliError::Unstable("simulation diverged: a queue reached its cap".into()));
    }
    let comparisons = compare(&cfg, &sim, args.corrupt_term.as_deref())?;
    if let Some(t) = &args.corrupt_term {
        if !comparisons.iter().any(|c| &c.term == t) {
            return Err(CliError::Usage(format!("no compared term is named `{t}`")));
        }
    }

    let fmt_opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| v.to_string());
    (|| -> io::Result<()> {
        describe(&cfg, out)?;
        writeln!(
            out,
            "{} packets per UE ({} warmup), {} replications, seed {}",
            params.packets_per_ue, params.warmup_packets_per_ue, params.replications, params.seed
        )?;
        for c in &comparisons {
            writeln!(
                out,
                "{:<24} analytic = {}, simulated = {}, se = {}, z = {} {}",
                c.name(),
                c.analytic,
                c.simulated,
                fmt_opt(c.std_error),
                c.z.map_or_else(|| "-".to_string(), |z| format!("{z:.2}")),
                if c.pass { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    })()
    .map_err(stdout_err)?;

    if let Some(path) = &args.out {
        let rows: Vec<_> = comparisons
            .iter()
            .map(|c| {
                vec![
                    c.scope.clone(),
                    c.term.clone(),
                    cell(Some(c.analytic)),
                    cell(Some(c.simulated)),
                    cell(c.std_error),
                    cell(c.z),
                    c.pass.to_string(),
                ]
            })
            .collect();
        write_table(path, &["scope", "term", "analytic", "simulated", "std_error", "z", "pass"], &rows)?;
    }

    let failed: Vec<String> = comparisons.iter().filter(|c| !c.pass).map(|c| c.name()).collect();
    writeln!(
        out,
        "{}/{} comparisons within {Z_LIMIT} standard errors",
        comparisons.len() - failed.len(),
        comparisons.len()
    )
    .map_err(stdout_err)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("outside {Z_LIMIT} standard errors: {}", failed.join(", "))))
    }
}

pub fn cmd_optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    if !cfg.is_homogeneous() {
        return Err(Error::NotHomogeneous.into());
    }
    if stable_p_interval(&cfg).is_none() {
        let err = check_stability(&cfg).require_stable().err().unwrap_or(Error::EmptyStableInterval);
        return Err(err.into());
    }
    let opt = p_opt_paoi(&cfg)?;
    let at_opt = |obj| if opt.stable { objective_at(&cfg, opt.p, obj) } else { None };
    let objectives = match args.objective {
        Some(o) => vec![o.into()],
        None => vec![Objective::Paoi, Objective::Aoi],
    };
    let searches = objectives
        .iter()
        .map(|&o| search_p(&cfg, o, args.resolution, Execution::Parallel))
        .collect::<Result<Vec<OptResult>, _>>()?;

    let aoi_min = searches.iter().find(|s| s.objective == Objective::Aoi).map(|s| s.best_value);
    let aoi_opt = at_opt(Objective::Aoi);
    let gap = aoi_min.zip(aoi_opt).map(|(min, v)| (v - min) / min);

    (|| -> io::Result<()> {
        describe(&cfg, out)?;
        writeln!(
            out,
            "p_opt = {} by {}{}",
            opt.p,
            opt.branch.describe(),
            if opt.stable { "" } else { ", unstable at p_opt" }
        )?;
        if let (Some(w), Some(a)) = (at_opt(Objective::Paoi), aoi_opt) {
            writeln!(out, "at p_opt: paoi = {w}, aoi = {a}")?;
        }
        for s in &searches {
            let i = s.stable_interval;
            writeln!(
                out,
                "search {}: p = {}, {} = {} ({}, {} evaluations over stable p in {}{}, {}{})",
                s.objective,
                s.best_p,
                s.objective,
                s.best_value,
                s.method,
                s.evaluations,
                if i.min_inclusive { "[" } else { "(" },
                i.p_min,
                i.p_max,
                if i.max_inclusive { "]" } else { ")" }
            )?;
        }
        if let Some(g) = gap {
            writeln!(out, "relative aoi gap of p_opt: {g}")?;
        }
        Ok(())
    })()
    .map_err(stdout_err)?;

    if let Some(path) = &args.out {
        let mut rows = vec![vec![
            "paoi".to_string(),
            "closed_form".to_string(),
            cell(Some(opt.p)),
            cell(at_opt(Objective::Paoi)),
            cell(aoi_opt),
        ]];
        for s in &searches {
            rows.push(vec![
                s.objective.to_string(),
                s.method.to_string(),
                cell(Some(s.best_p)),
                cell(Some(s.best_value)),
                cell(objective_at(&cfg, s.best_p, Objective::Aoi)),
            ]);
        }
        write_table(path, &["objective", "method", "p", "value", "aoi"], &rows)?;
    }
    Ok(())
}

fn estimate_line(label: &str, e: &Estimate) -> String {
    match e.half_width() {
        Some(hw) => format!("{label} = {} +/- {hw}", e.mean),
        None => format!("{label} = {}", e.mean),
    }
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    check_stability(&cfg).require_stable()?;
    let params = sim_params(args.sim.settings(), 1)?;
    let sim = simulate_mec_with(&cfg, &params, Execution::Parallel)?;
    let d = &sim.diagnostics;

    (|| -> io::Result<()> {
        describe(&cfg, out)?;
        writeln!(
            out,
            "{} packets per UE ({} warmup), {} replications, seed {}",
            params.packets_per_ue, params.warmup_packets_per_ue, params.replications, params.seed
        )?;
        for (ue, e) in sim.per_ue.iter().enumerate() {
            writeln!(out, "ue {ue}: {}, {}", estimate_line("aoi", &e.aoi), estimate_line("paoi", &e.paoi))?;
        }
        writeln!(
            out,
            "system: {}, {}",
            estimate_line("aoi", &sim.system_aoi),
            estimate_line("paoi", &sim.system_paoi)
        )?;
        writeln!(
            out,
            "max queue lengths: edge {}, transmission {}, local {:?}",
            d.max_queue_edge, d.max_queue_tx, d.max_queue_local
        )?;
        if d.diverged {
            writeln!(out, "warning: a queue reached its cap and the run was cut short")?;
        }
        Ok(())
    })()
    .map_err(stdout_err)?;

    if let Some(path) = &args.out {
        let row = |scope: String, a: &Estimate, w: &Estimate| {
            vec![scope, cell(Some(a.mean)), cell(a.half_width()), cell(Some(w.mean)), cell(w.half_width())]
        };
        let mut rows: Vec<_> = sim.per_ue.iter().enumerate().map(|(u, e)| row(format!("ue{u}"), &e.aoi, &e.paoi)).collect();
        rows.push(row("system".into(), &sim.system_aoi, &sim.system_paoi));
        write_table(path, &["scope", "aoi", "aoi_hw", "paoi", "paoi_hw"], &rows)?;
    }
    if let Some(path) = &args.trace {
        let records: Vec<_> = collect_records(&cfg, &params, 0)?.into_iter().flatten().collect();
        let io_err = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        write_trace(&records, &mut w).and_then(|()| w.flush()).map_err(io_err)?;
    }
    if d.diverged {
        return Err(CliError::Unstable("simulation diverged: a queue reached its cap".into()));
    }
    Ok(())
}
