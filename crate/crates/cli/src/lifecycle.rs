//! TOML-configured lifecycle runs.
//!
//! ```toml
//! horizon_ms = 2000
//!
//! [capacitor]
//! capacitance_uf = 100
//! v_now = 3.3
//! v_min = 2.8
//! v_max = 3.3
//!
//! [harvest]
//! file = "../harvest/constant_1mw.harvest"   # or: constant_uw = 1000
//!
//! [[transaction]]
//! kind = "tx_task"
//! policy = "sleep"
//! scripts = ["../scripts/ack_max.script"]
//! ```
//!
//! Paths are relative to the config file. Numbers may be written as TOML
//! numbers or as decimal strings; both are read exactly.

use anyhow::{bail, Context, Result};
use num_traits::ToPrimitive;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use wcec_core::harness::tx_task_transaction;
use wcec_core::units::{parse_decimal, q_u64, Q};
use wcec_core::{parse_channel_script, simulate_lifecycle, AckWaitState, Capacitor, ChannelScript, HarvestTrace};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Decimal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Decimal {
    fn exact(&self, what: &str) -> Result<Q> {
        let text = match self {
            Decimal::Int(i) => i.to_string(),
            // shortest round-trip rendering, so `3.3` stays 33/10
            Decimal::Float(f) => f.to_string(),
            Decimal::Text(s) => s.clone(),
        };
        parse_decimal(&text).with_context(|| format!("`{what}`"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    horizon_ms: Decimal,
    capacitor: CapacitorConfig,
    harvest: HarvestConfig,
    #[serde(rename = "transaction")]
    transactions: Vec<TransactionConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacitorConfig {
    capacitance_uf: Decimal,
    v_now: Decimal,
    v_min: Decimal,
    v_max: Decimal,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarvestConfig {
    file: Option<PathBuf>,
    constant_uw: Option<Decimal>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransactionConfig {
    kind: String,
    policy: String,
    #[serde(default)]
    scripts: Vec<PathBuf>,
}

pub fn run(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let report =
        run_config(&text, path.parent().unwrap_or(Path::new("."))).with_context(|| format!("{}", path.display()))?;
    print!("{}", report.render());
    Ok(report.brownouts.is_empty())
}

pub fn run_config(text: &str, base: &Path) -> Result<wcec_core::LifecycleReport> {
    let cfg: Config = toml::from_str(text)?;
    let c = &cfg.capacitor;
    let cap = Capacitor::new(
        c.capacitance_uf.exact("capacitance_uf")? / q_u64(1_000_000),
        c.v_now.exact("v_now")?,
        c.v_min.exact("v_min")?,
        c.v_max.exact("v_max")?,
    )?;
    let harvest = match (&cfg.harvest.file, &cfg.harvest.constant_uw) {
        (Some(f), None) => {
            let p = base.join(f);
            let t = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
            HarvestTrace::parse(&t).with_context(|| format!("{}", p.display()))?
        }
        (None, Some(uw)) => {
            let w = uw.exact("constant_uw")? / q_u64(1_000_000);
            HarvestTrace::new(vec![(0, w)])?
        }
        _ => bail!("[harvest] needs exactly one of `file` and `constant_uw`"),
    };
    if cfg.transactions.is_empty() {
        bail!("at least one [[transaction]] is required");
    }
    let mut txns = Vec::new();
    for t in &cfg.transactions {
        if t.kind != "tx_task" {
            bail!("unknown transaction kind `{}` (only `tx_task`)", t.kind);
        }
        let policy = AckWaitState::parse(&t.policy).with_context(|| format!("unknown policy `{}`", t.policy))?;
        let scripts = if t.scripts.is_empty() {
            vec![ChannelScript::default()]
        } else {
            t.scripts
                .iter()
                .map(|s| {
                    let p = base.join(s);
                    let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
                    parse_channel_script(&text).with_context(|| format!("{}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?
        };
        txns.push(tx_task_transaction(policy, &scripts)?);
    }
    let horizon_ps = (cfg.horizon_ms.exact("horizon_ms")? * q_u64(1_000_000_000))
        .ceil()
        .to_integer()
        .to_u64()
        .context("horizon_ms must be non-negative and fit in 64-bit picoseconds")?;
    Ok(simulate_lifecycle(&cap, &txns, &harvest, horizon_ps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_stay_exact() {
        let d: Decimal = toml::from_str::<toml::Value>("x = 3.3").unwrap()["x"]
            .clone()
            .try_into()
            .unwrap();
        assert_eq!(d.exact("x").unwrap(), Q::new(33.into(), 10.into()));
    }

    #[test]
    fn zero_harvest_config() {
        let text = "horizon_ms = 100\n[capacitor]\ncapacitance_uf = 100\nv_now = 2.8\nv_min = 2.8\nv_max = 3.3\n\
                    [harvest]\nconstant_uw = 0\n[[transaction]]\nkind = \"tx_task\"\npolicy = \"sleep\"\n";
        let r = run_config(text, Path::new(".")).unwrap();
        assert_eq!((r.completions, r.brownouts.len()), (0, 0));
    }

    #[test]
    fn malformed_configs() {
        let base = Path::new(".");
        assert!(run_config("horizon_ms = 1", base).is_err());
        assert!(run_config("horizon_ms = 1\nbogus = 2", base).is_err());
        let text = "horizon_ms = 1\n[capacitor]\ncapacitance_uf = 100\nv_now = 3.3\nv_min = 2.8\nv_max = 3.3\n\
                    [harvest]\nconstant_uw = 1\n[[transaction]]\nkind = \"rx\"\npolicy = \"sleep\"\n";
        assert!(run_config(text, base).is_err());
    }
}
