//! The bundled fixture set, generated from the driver tables so the files on
//! disk and the code cannot drift apart.

use anyhow::{Context, Result};
use std::path::Path;
use wcec_core::device::serialize_device_graph;
use wcec_core::driver::twins::fixture_files;
use wcec_core::peripheral::RxInjection;
use wcec_core::trace::inbound_frame;
use wcec_core::{default_esp32c3_model, ChannelScript};

const HEADER: &str = "# Generated by `wcec gen-fixtures`; do not edit.\n";

fn script(s: ChannelScript) -> String {
    format!("{HEADER}{}", s.to_text())
}

fn acks(latencies: &[u64]) -> ChannelScript {
    ChannelScript {
        ack_latency_ns: latencies.to_vec(),
        ..ChannelScript::default()
    }
}

/// Every fixture as `(relative path, contents)`, in a fixed order.
pub fn all() -> Vec<(String, String)> {
    let mut out = fixture_files();
    let (graph, platform) = default_esp32c3_model();
    let graph_text = serialize_device_graph(&graph, &platform);
    let platform_line = graph_text
        .lines()
        .find(|l| l.starts_with("platform "))
        .expect("serialized graph has a platform line")
        .to_string();
    out.push(("device/esp32c3.dev".into(), format!("{HEADER}{graph_text}")));
    out.push(("device/esp32c3.platform".into(), format!("{HEADER}{platform_line}\n")));

    out.push(("scripts/ack_max.script".into(), script(acks(&[326_000]))));
    out.push(("scripts/ack_fast.script".into(), script(acks(&[10_000]))));
    out.push(("scripts/ack_typical.script".into(), script(acks(&[50_000]))));
    let mut timeout = acks(&[326_000]);
    timeout.drops.insert(0);
    out.push(("scripts/timeout.script".into(), script(timeout)));
    let rx = ChannelScript {
        rx: [(20_000, 32usize), (21_000, 256), (60_000, 1500)]
            .into_iter()
            .map(|(t, len)| RxInjection {
                time_ns: t,
                frame: inbound_frame((0..len).map(|i| i as u8).collect()),
            })
            .collect(),
        ..ChannelScript::default()
    };
    out.push(("scripts/rx_burst.script".into(), script(rx)));

    let harvest = |body: &str| format!("{HEADER}{body}");
    out.push(("harvest/constant_1mw.harvest".into(), harvest("harvest 0 1000\n")));
    out.push(("harvest/zero.harvest".into(), harvest("harvest 0 0\n")));
    out.push((
        "harvest/cut_after_dispatch.harvest".into(),
        harvest("harvest 0 1000\nharvest 1 0\n"),
    ));
    out.push((
        "harvest/flicker.harvest".into(),
        harvest("harvest 0 2500\nharvest 20000000 0\nharvest 50000000 1200\nharvest 120000000 300\nharvest 400000000 1000\n"),
    ));

    let lifecycle = |horizon_ms: u32, v_now: &str, harvest: &str| {
        format!(
            "{HEADER}horizon_ms = {horizon_ms}\n\n[capacitor]\ncapacitance_uf = 100\nv_now = {v_now}\nv_min = 2.8\nv_max = 3.3\n\n\
             [harvest]\nfile = \"../harvest/{harvest}.harvest\"\n\n\
             [[transaction]]\nkind = \"tx_task\"\npolicy = \"sleep\"\n\
             scripts = [\"../scripts/ack_max.script\", \"../scripts/ack_typical.script\", \"../scripts/timeout.script\"]\n"
        )
    };
    out.push(("lifecycle/demo.toml".into(), lifecycle(1000, "2.8", "constant_1mw")));
    out.push(("lifecycle/zero_harvest.toml".into(), lifecycle(1000, "2.8", "zero")));
    out.push((
        "lifecycle/power_cut.toml".into(),
        lifecycle(1000, "3.3", "cut_after_dispatch"),
    ));
    out.push(("lifecycle/flicker.toml".into(), lifecycle(1000, "2.8", "flicker")));
    out
}

pub fn write_all(dir: &Path) -> Result<bool> {
    for (rel, text) in all() {
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(true)
}
