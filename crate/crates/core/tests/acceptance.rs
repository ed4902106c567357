//! Acceptance gate. Run with `--nocapture` to see one line per criterion.

mod common;

use common::*;
use num_traits::ToPrimitive;
use rand::Rng;
use std::path::PathBuf;
use std::time::{Duration, Instant};
use wcec_core::driver::tables::TX_TASK_NAME;
use wcec_core::harness::{tx_task_transaction, Transaction};
use wcec_core::peripheral::dma::MAX_DMA_LEN;
use wcec_core::peripheral::regs::{self, Access, REGISTER_MAP};
use wcec_core::peripheral::{PeripheralConfig, PeripheralState, RxInjection};
use wcec_core::report::{row, ENERGY_SIG, TIME_SIG};
use wcec_core::trace::{check_scenario, inbound_frame, TwinBounds};
use wcec_core::units::{format_sig, micro, q_u64, ratio};
use wcec_core::{
    analyze_program, check_certificate, default_esp32c3_model, parse_wcir, simulate_lifecycle, AckWaitState, Analysis,
    Capacitor, ChannelScript, HarvestTrace, Objective, Scenario, SolverConfig, WcirProgram, Q,
};

const FUNCTION_BUDGET: Duration = Duration::from_secs(5);
const TASK_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const DOMINANCE_BUDGET: Duration = Duration::from_secs(120);
const ORACLE_PROGRAMS: u64 = 200;
const ORACLE_MAX_BLOCKS: usize = 12;
const DOMINANCE_SCRIPTS: u64 = 120;
const HARVEST_TRACES: u64 = 120;
/// Device-aware TX-task bracket, µJ.
const TX_BRACKET_UJ: (i64, i64) = (30, 40);

/// Function table: name, cycles, µs and always-on µJ as rendered.
const FUNCTIONS: [(&str, u64, &str, &str); 12] = [
    ("wifi_hw_deinit", 48, "0.3", "0.3099"),
    ("wifi_setup_interrupt", 178, "1.11", "1.149"),
    ("wifi_setup_rx", 1881, "11.8", "12.14"),
    ("wifi_hw_init", 49, "0.306", "0.3163"),
    ("wifi_transmit_packet", 335, "2.09", "2.163"),
    ("wifi_wait_for_tx", 52184, "326", "336.9"),
    ("wifi_process_tx_done", 157, "0.981", "1.014"),
    ("wifi_handle_rx", 12989, "81.2", "83.85"),
    ("wifi_process_timeout", 138, "0.862", "0.8909"),
    ("wifi_get_bssid", 94, "0.588", "0.6068"),
    ("wifi_mac_handle_rx", 68715, "429", "443.6"),
    ("wifi_interrupt_handler", 943, "5.89", "6.088"),
];

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load(rel: &str) -> WcirProgram {
    let bytes = std::fs::read(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
    parse_wcir(&bytes).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn analyze(p: &WcirProgram) -> Analysis {
    let (g, pl) = default_esp32c3_model();
    analyze_program(p, &g, &pl, &SolverConfig::default()).unwrap_or_else(|e| panic!("{}: {e}", p.name))
}

fn uj(v: &Q) -> f64 {
    micro(v).to_f64().unwrap()
}

fn within(budget: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t < budget {
        Ok(t)
    } else {
        Err(format!("took {t:?}, budget {budget:?}"))
    }
}

fn function_table() -> Verdict {
    let start = Instant::now();
    for (name, cycles, us, aon) in FUNCTIONS {
        let a = analyze(&load(&format!("functions/{name}.wcir")));
        let r = row(&a);
        let got = (r.cycles, r.time_us.as_str(), r.always_on_uj.as_str());
        if got != (cycles, us, aon) {
            return Err(format!("{name}: got {got:?}, want {:?}", (cycles, us, aon)));
        }
        // independent route: 6.25 ns and 6.455625 nJ per cycle
        let secs = q_u64(cycles) / q_u64(160_000_000);
        let joules = q_u64(cycles) * ratio(6_455_625, 1_000_000) / q_u64(1_000_000_000);
        if format_sig(&micro(&secs), TIME_SIG) != us || format_sig(&micro(&joules), ENERGY_SIG) != aon {
            return Err(format!("{name}: hand computation disagrees with the expected row"));
        }
    }
    let t = within(FUNCTION_BUDGET, start)?;
    Ok(format!("12/12 rows exact in {t:.2?}"))
}

fn task_table() -> Verdict {
    let start = Instant::now();
    let r = row(&analyze(&load("tasks/tx_task.wcir")));
    let got = (r.cycles, r.time_us.as_str(), r.always_on_uj.as_str());
    if got != (52615, "329", "339.7") {
        return Err(format!("got {got:?}"));
    }
    let t = within(TASK_BUDGET, start)?;
    Ok(format!("52615 cy, 329 us, 339.7 uJ in {t:.2?}"))
}

fn device_aware_bracket() -> Verdict {
    let fixture = analyze(&load("tasks/tx_task.wcir"));
    let cycles = q_u64(fixture.wcet_cycles);
    // CPU alone: 28 mA at 3.3 V for 6.25 ns per cycle
    let floor = &cycles * ratio(5775, 10_000) / q_u64(1_000_000_000);
    let ceiling = &cycles * ratio(6_455_625, 1_000_000) / q_u64(1_000_000_000);
    let mut notes = Vec::new();
    for policy in AckWaitState::ALL {
        let a = analyze(&load(&format!("policies/tx_task_{}.wcir", policy.as_str())));
        let da = &a.wcec_device_aware;
        if *da < floor || *da > ceiling || *da >= a.wcec_always_on {
            return Err(format!(
                "{}: {:.4} uJ outside [{:.4}, {:.4})",
                policy.as_str(),
                uj(da),
                uj(&floor),
                uj(&ceiling)
            ));
        }
        notes.push(format!("{}={:.2}", policy.as_str(), uj(da)));
    }
    let (lo, hi) = TX_BRACKET_UJ;
    let da = &fixture.wcec_device_aware;
    if *da < ratio(lo, 1_000_000) || *da > ratio(hi, 1_000_000) {
        return Err(format!("fixture {:.4} uJ outside [{lo}, {hi}]", uj(da)));
    }
    Ok(format!(
        "fixture {:.2} uJ in [{lo}, {hi}], floor {:.3}, ceiling {:.1}; {}",
        uj(da),
        uj(&floor),
        uj(&ceiling),
        notes.join(" ")
    ))
}

fn ipet_oracle() -> Verdict {
    let start = Instant::now();
    let (g, pl) = default_esp32c3_model();
    let aon_per_cycle = ratio(6_455_625, 1_000_000) / q_u64(1_000_000_000);
    let mut mismatches = Vec::new();
    for seed in 0..ORACLE_PROGRAMS {
        let p = acyclic_program(0xacce_0000 + seed, ORACLE_MAX_BLOCKS);
        let a = analyze(&p);
        let wcet = brute_force_max(&p, |b| q_u64(p.block(b).unwrap().cycles));
        let aon = brute_force_max(&p, |b| q_u64(p.block(b).unwrap().cycles) * &aon_per_cycle);
        let da = brute_force_max(&p, |b| {
            wcec_core::ipet::block_coefficient(&p, b, Some(&a.states), &g, &pl, Objective::WcecDeviceAware).unwrap()
        });
        for (o, want) in [
            (Objective::WcetCycles, wcet),
            (Objective::WcecAlwaysOn, aon),
            (Objective::WcecDeviceAware, da),
        ] {
            if a.bound(o) != want {
                mismatches.push(format!("seed {seed} {}", o.as_str()));
            }
        }
    }
    if !mismatches.is_empty() {
        return Err(format!("{} mismatches: {}", mismatches.len(), mismatches.join(", ")));
    }
    let t = within(ORACLE_BUDGET, start)?;
    Ok(format!(
        "{ORACLE_PROGRAMS} programs x 3 objectives, 0 mismatches in {t:.2?}"
    ))
}

fn loop_bounds() -> Verdict {
    let (pre, body, post) = (17, 9, 5);
    for n in [1, 10, 52160] {
        let a = analyze(&single_loop(pre, body, post, n));
        if a.wcet_cycles != pre + n * body + post {
            return Err(format!("N={n}: {} != {}", a.wcet_cycles, pre + n * body + post));
        }
    }
    let ack = analyze(&single_loop(0, 1, 0, 52160));
    if ack.wcet_seconds() != ratio(326, 1_000_000) {
        return Err(format!("52160 one-cycle polls take {} s", ack.wcet_seconds()));
    }
    Ok("N in {1, 10, 52160} exact; 52160 polls = 326 us".into())
}

fn random_script(seed: u64) -> (Scenario, ChannelScript) {
    let mut r = rng(seed);
    let mut s = ChannelScript {
        ack_latency_ns: (0..r.gen_range(1..=3)).map(|_| r.gen_range(10_000..=326_000)).collect(),
        airtime_ns: r.gen_range(1..=1450),
        dma_confirm_ns: r.gen_range(0..=800),
        ..ChannelScript::default()
    };
    if r.gen_bool(0.25) {
        s.drops.insert(0);
    }
    let tx = r.gen_bool(0.5);
    let window_ns = 600_000;
    let injections = r.gen_range(0..=10);
    for _ in 0..injections {
        let frame = if r.gen_bool(0.85) {
            inbound_frame((0..r.gen_range(0..=1500)).map(|_| r.gen()).collect())
        } else {
            (0..r.gen_range(1..=MAX_DMA_LEN)).map(|_| r.gen()).collect()
        };
        s.rx.push(RxInjection {
            time_ns: r.gen_range(0..window_ns),
            frame,
        });
    }
    s.rx.sort_by_key(|i| i.time_ns);
    let scenario = if tx {
        Scenario::TxTask {
            policy: AckWaitState::ALL[r.gen_range(0..3)],
        }
    } else {
        Scenario::RxBurst { window_ns }
    };
    (scenario, s)
}

fn dominance() -> Verdict {
    let start = Instant::now();
    let mut bounds: Vec<(AckWaitState, TwinBounds)> =
        AckWaitState::ALL.iter().map(|p| (*p, TwinBounds::new(*p))).collect();
    let (mut tx, mut rx, mut calls) = (0, 0, 0);
    for seed in 0..DOMINANCE_SCRIPTS {
        let (scenario, script) = random_script(0xd0_0000 + seed);
        let b = &mut bounds.iter_mut().find(|(p, _)| *p == scenario.policy()).unwrap().1;
        let (run, violations) = check_scenario(scenario, &script, b).map_err(|e| format!("seed {seed}: {e}"))?;
        if !violations.is_empty() {
            return Err(format!("seed {seed} {scenario:?}: {violations:?}"));
        }
        calls += run.calls.len();
        match scenario {
            Scenario::TxTask { .. } => tx += 1,
            _ => rx += 1,
        }
    }
    // the whole-task check inside `check_scenario` compares against this twin
    let (_, a) = bounds[2].1.get(TX_TASK_NAME).map_err(|e| e.to_string())?;
    let t = within(DOMINANCE_BUDGET, start)?;
    Ok(format!(
        "{DOMINANCE_SCRIPTS} scripts ({tx} tx, {rx} rx), {calls} calls, 0 violations; tx_task bound {} cy in {t:.2?}",
        a.wcet_cycles
    ))
}

fn certification() -> Verdict {
    let mut checked = 0;
    let mut rels: Vec<String> = FUNCTIONS.iter().map(|(n, ..)| format!("functions/{n}.wcir")).collect();
    rels.push("tasks/tx_task.wcir".into());
    rels.extend(
        AckWaitState::ALL
            .iter()
            .map(|p| format!("policies/tx_task_{}.wcir", p.as_str())),
    );
    for rel in &rels {
        let a = analyze(&load(rel));
        for s in &a.solved {
            if !check_certificate(&s.problem, &s.solution) {
                return Err(format!("{rel} {}: genuine solution rejected", s.problem.kind.as_str()));
            }
            checked += 1;
            for i in 0..s.solution.assignment.len() {
                let mut bumped = s.solution.clone();
                bumped.assignment[i] += q_u64(1);
                let mut value = s.solution.clone();
                value.objective_value += ratio(1, 1_000_000_000_000);
                if check_certificate(&s.problem, &bumped) || check_certificate(&s.problem, &value) {
                    return Err(format!("{rel} {}: perturbation {i} accepted", s.problem.kind.as_str()));
                }
            }
        }
    }
    Ok(format!(
        "{checked} fixture solutions certified; every perturbation rejected"
    ))
}

fn random_harvest(r: &mut impl Rng, min_uw: u64, max_uw: u64, horizon_ns: u64) -> HarvestTrace {
    let n = r.gen_range(1..=10);
    let mut times: Vec<u64> = (0..n).map(|_| r.gen_range(0..horizon_ns)).collect();
    times.push(0);
    times.sort();
    times.dedup();
    HarvestTrace::new(
        times
            .into_iter()
            .map(|t| (t * 1000, ratio(r.gen_range(min_uw..=max_uw) as i64, 1_000_000)))
            .collect(),
    )
    .unwrap()
}

fn intermittency() -> Verdict {
    let horizon_ns = 500_000_000;
    let txns: Vec<Transaction> = AckWaitState::ALL
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let scripts: Vec<_> = (0..4).map(|k| random_script(0x1a_0000 + 10 * i as u64 + k).1).collect();
            tx_task_transaction(*p, &scripts).unwrap()
        })
        .collect();
    let sleep = &txns[2];
    let mut r = rng(0x1b_0000);
    let (mut runs, mut periods) = (0u64, 0usize);
    for k in 0..HARVEST_TRACES {
        let cap_uf = [100, 220, 470, 1000][r.gen_range(0..4)];
        let v_now = ratio(280 + r.gen_range(0..=50), 100);
        let cap = Capacitor::new(ratio(cap_uf, 1_000_000), v_now, ratio(28, 10), ratio(33, 10)).unwrap();
        // arbitrary harvest, including dead spells and cuts right after dispatch
        let harvest = random_harvest(&mut r, 0, 5000, horizon_ns / 1000);
        let mix: Vec<Transaction> = (0..r.gen_range(1..=3))
            .map(|_| txns[r.gen_range(0..3)].clone())
            .collect();
        let rep = simulate_lifecycle(&cap, &mix, &harvest, horizon_ns * 1000);
        if !rep.brownouts.is_empty() {
            return Err(format!("trace {k}: brown-out {:?}", rep.brownouts[0]));
        }
        runs += rep.completions;

        // sustained harvest of at least 1 mW from an empty 100 µF capacitor
        let sustained = random_harvest(&mut r, 1000, 5000, horizon_ns);
        let rep = simulate_lifecycle(
            &Capacitor::demo().emptied(),
            std::slice::from_ref(sleep),
            &sustained,
            horizon_ns * 1000,
        );
        if !rep.brownouts.is_empty() {
            return Err(format!("sustained trace {k}: brown-out"));
        }
        if rep.periods.is_empty() || rep.periods.iter().any(|p| p.completions == 0) {
            return Err(format!("sustained trace {k}: a period without a completed TX"));
        }
        // charging to the gate never takes longer than wcec / 1 mW
        let worst_charge = (&sleep.wcec * q_u64(1000) * q_u64(1_000_000_000_000))
            .ceil()
            .to_integer()
            .to_u64()
            .unwrap();
        if let Some(p) = rep
            .periods
            .iter()
            .find(|p| p.run_start_ps - p.charge_start_ps > worst_charge)
        {
            return Err(format!(
                "sustained trace {k}: charging took {} ps",
                p.run_start_ps - p.charge_start_ps
            ));
        }
        periods += rep.periods.len();
        runs += rep.completions;
    }
    Ok(format!(
        "{HARVEST_TRACES} random + {HARVEST_TRACES} sustained traces, 0 brown-outs, {runs} runs, {periods} sustained periods each with >= 1 TX"
    ))
}

fn register_map() -> Verdict {
    let (g, _) = default_esp32c3_model();
    let fresh = || PeripheralState::new(g.clone(), PeripheralConfig::default(), ChannelScript::default()).unwrap();
    let mut rw = 0;
    for info in REGISTER_MAP {
        match info.access {
            Access::ReadOnly => {
                let mut p = fresh();
                if p.mmio_write(info.address, 0xffff_ffff).is_ok() {
                    return Err(format!(
                        "write to read-only {} ({:#010x}) accepted",
                        info.name, info.address
                    ));
                }
                p.mmio_read(info.address).map_err(|e| format!("{}: {e}", info.name))?;
            }
            Access::ReadWrite => {
                rw += 1;
                for word in [0, 0x5a5a_5a5a, 0x0000_1000, 0x3fff_fffc] {
                    let mut p = fresh();
                    p.mmio_write(info.address, word)
                        .map_err(|e| format!("{}: {e}", info.name))?;
                    let back = p.mmio_read(info.address).map_err(|e| format!("{}: {e}", info.name))?;
                    if back != word {
                        return Err(format!("{} wrote {word:#010x}, read {back:#010x}", info.name));
                    }
                }
            }
        }
    }
    let mut p = fresh();
    if p.mmio_write(regs::INT_STATUS, 0).is_ok() || p.mmio_write(0x6003_3c3c, 1).is_ok() {
        return Err("0x60033c3c accepted a write".into());
    }
    for bad in [0x6003_6000, 0x6003_3001, 0x600c_2004, 0] {
        if p.mmio_read(bad).is_ok() || p.mmio_write(bad, 0).is_ok() {
            return Err(format!("unmapped {bad:#010x} accessible"));
        }
    }
    Ok(format!(
        "{} registers ({rw} R/W round-trip), 0x60033c3c write faults",
        REGISTER_MAP.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("function table reproduction", function_table),
        ("TX task always-on", task_table),
        ("TX task device-aware bracket", device_aware_bracket),
        ("IPET oracle equivalence", ipet_oracle),
        ("loop-bound exactness", loop_bounds),
        ("bound dominance", dominance),
        ("solver certification", certification),
        ("intermittency safety", intermittency),
        ("register-map conformance", register_map),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = f();
        match &verdict {
            Ok(msg) => println!("criterion {} {name}: PASS ({msg})", i + 1),
            Err(msg) => {
                println!("criterion {} {name}: FAIL ({msg})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
