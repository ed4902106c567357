use crate::FormatArg;
use anyhow::{Context, Result};
use std::path::{Path, PathBuf};
use wcec_core::device::{parse_device_graph, parse_platform};
use wcec_core::report::ENERGY_SIG;
use wcec_core::units::{format_exact, format_sig, micro, q_u64, PS_PER_S};
use wcec_core::{
    analyze_program, build_ilp, default_esp32c3_model, export_lp as render_lp, parse_wcir, render_lines, render_table,
    row, Analysis, DeviceGraph, Objective, PlatformModel, SolverConfig, StateId, WcirProgram,
};

pub struct Options {
    pub paths: Vec<PathBuf>,
    pub objective: Option<Objective>,
    pub device_graph: Option<PathBuf>,
    pub platform: Option<PathBuf>,
    pub entry_states: Option<Vec<String>>,
    pub format: FormatArg,
}

pub fn load_model(graph: Option<&Path>, platform: Option<&Path>) -> Result<(DeviceGraph, PlatformModel)> {
    let (g, mut pl) = match graph {
        Some(p) => {
            let text = read(p)?;
            parse_device_graph(&text).with_context(|| format!("{}", p.display()))?
        }
        None => default_esp32c3_model(),
    };
    if let Some(p) = platform {
        pl = parse_platform(&read(p)?).with_context(|| format!("{}", p.display()))?;
    }
    Ok((g, pl))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_program(path: &Path) -> Result<WcirProgram> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_wcir(&bytes).with_context(|| format!("{}", path.display()))
}

fn analyze_one(path: &Path, opts: &Options, graph: &DeviceGraph, platform: &PlatformModel) -> Result<Analysis> {
    let mut program = load_program(path)?;
    if let Some(states) = &opts.entry_states {
        program.entry_states = states.iter().map(StateId::new).collect();
    }
    analyze_program(&program, graph, platform, &SolverConfig::default()).with_context(|| format!("{}", path.display()))
}

/// Analyzes every path (in parallel) and prints results in input order.
/// Returns false if any input failed.
pub fn run(opts: &Options) -> Result<bool> {
    let (graph, platform) = load_model(opts.device_graph.as_deref(), opts.platform.as_deref())?;
    let results: Vec<Result<Analysis>> = std::thread::scope(|s| {
        let handles: Vec<_> = opts
            .paths
            .iter()
            .map(|p| s.spawn(|| analyze_one(p, opts, &graph, &platform)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("analysis thread panicked"))
            .collect()
    });
    let mut ok = true;
    let mut analyses = Vec::new();
    for r in results {
        match r {
            Ok(a) => {
                for w in &a.warnings {
                    eprintln!("{}: {w}", a.name);
                }
                analyses.push(a);
            }
            Err(e) => {
                ok = false;
                eprintln!("error: {e:#}");
            }
        }
    }
    if !analyses.is_empty() {
        print!("{}", render(&analyses, opts.objective, opts.format));
    }
    Ok(ok)
}

pub fn render(analyses: &[Analysis], objective: Option<Objective>, format: FormatArg) -> String {
    let Some(objective) = objective else {
        let rows: Vec<_> = analyses.iter().map(row).collect();
        return match format {
            FormatArg::Table => render_table(&rows),
            FormatArg::Lines => render_lines(&rows),
        };
    };
    let mut out = String::new();
    for a in analyses {
        let value = match (objective, format) {
            (Objective::WcetCycles, _) => a.wcet_cycles.to_string(),
            (o, FormatArg::Table) => format!("{} uJ", format_sig(&micro(&a.bound(o)), ENERGY_SIG)),
            (o, FormatArg::Lines) => format!("{} pJ", format_exact(&(a.bound(o) * q_u64(PS_PER_S)))),
        };
        out.push_str(&format!("{} {value}\n", a.name));
    }
    out
}

pub fn export_lp(path: &Path, objective: Objective, graph: Option<&Path>, output: Option<&Path>) -> Result<bool> {
    let (graph, platform) = load_model(graph, None)?;
    let program = load_program(path)?;
    // run the full pipeline first so the exported problem is a certified one
    let analysis = analyze_program(&program, &graph, &platform, &SolverConfig::default())
        .with_context(|| format!("{}", path.display()))?;
    let problem = build_ilp(&program, Some(&analysis.states), &graph, &platform, objective)
        .with_context(|| format!("{}", path.display()))?;
    let text = render_lp(&problem);
    match output {
        Some(o) => std::fs::write(o, text).with_context(|| format!("cannot write {}", o.display()))?,
        None => print!("{text}"),
    }
    Ok(true)
}
