use crate::ScenarioArg;
use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::PathBuf;
use wcec_core::trace::TwinBounds;
use wcec_core::units::{format_exact, format_sig, micro, parse_decimal, q_u64, PS_PER_NS, PS_PER_S};
use wcec_core::{check_bound, check_scenario, parse_channel_script, run_traced, AckWaitState, Scenario};

pub struct Options {
    pub scenario: ScenarioArg,
    pub script: PathBuf,
    pub policy: AckWaitState,
    pub window_ns: u64,
    pub trace_out: Option<PathBuf>,
    pub check_bound: Option<String>,
    pub check_twins: bool,
}

pub fn run(opts: &Options) -> Result<bool> {
    let text = std::fs::read_to_string(&opts.script)
        .with_context(|| format!("cannot read script {}", opts.script.display()))?;
    let script = parse_channel_script(&text).with_context(|| format!("{}", opts.script.display()))?;
    let scenario = match opts.scenario {
        ScenarioArg::Tx => Scenario::TxTask { policy: opts.policy },
        ScenarioArg::Rx => Scenario::RxBurst {
            window_ns: opts.window_ns,
        },
        ScenarioArg::Idle => Scenario::Idle { ns: opts.window_ns },
    };
    let bound = opts
        .check_bound
        .as_deref()
        .map(|b| parse_decimal(b).map(|v| v / q_u64(1_000_000)))
        .transpose()
        .context("--check-bound expects a decimal number of µJ")?;

    let (run, violations) = if opts.check_twins {
        let mut bounds = TwinBounds::new(scenario.policy());
        let (run, v) = check_scenario(scenario, &script, &mut bounds)?;
        (run, Some(v))
    } else {
        (run_traced(scenario, &script)?, None)
    };

    let trace = &run.trace;
    let mut out = String::new();
    let _ = match scenario {
        Scenario::TxTask { policy } => writeln!(out, "scenario tx_task policy={}", policy.as_str()),
        Scenario::RxBurst { window_ns } => writeln!(out, "scenario rx_burst window_ns={window_ns}"),
        Scenario::Idle { ns } => writeln!(out, "scenario idle window_ns={ns}"),
    };
    if let Some(o) = run.tx_outcome {
        let _ = writeln!(out, "outcome {}", o.as_str());
    }
    let duration = trace.end_ps().unwrap_or(0) - trace.start_ps().unwrap_or(0);
    let _ = writeln!(out, "calls {}", run.calls.len());
    let _ = writeln!(out, "delivered_frames {}", run.delivered_frames);
    let _ = writeln!(
        out,
        "duration_ns {}",
        format_exact(&(q_u64(duration) / q_u64(PS_PER_NS)))
    );
    let _ = writeln!(out, "cycles {}", trace.total_cycles);
    let _ = writeln!(
        out,
        "energy_pj {}",
        format_exact(&(&trace.total_energy * q_u64(PS_PER_S)))
    );
    let _ = writeln!(out, "energy_uj {}", format_sig(&micro(&trace.total_energy), 4));

    let mut ok = true;
    if let Some(b) = &bound {
        let c = check_bound(trace, b);
        ok &= c.pass;
        let margin = if c.pass { c.slack } else { c.excess };
        let _ = writeln!(
            out,
            "bound {} uJ {} by {} uJ",
            format_exact(&micro(b)),
            if c.pass { "pass" } else { "FAIL" },
            format_sig(&micro(&margin), 4)
        );
    }
    if let Some(v) = &violations {
        ok &= v.is_empty();
        let _ = writeln!(out, "violations {}", v.len());
        for v in v {
            let _ = writeln!(out, "violation {} {}", v.function, v.what);
        }
    }
    print!("{out}");
    if let Some(p) = &opts.trace_out {
        std::fs::write(p, trace.export()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(ok)
}
