//! Plain-text outputs: per-seed traces, per-round summary, per-seed totals
//! and the run manifest.
//!
//! Numbers are written with ten significant digits (`%.10g`), so files are
//! byte-identical for identical inputs. Only the manifest carries
//! run-specific metadata, and only in comments.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::SystemConfig;
use crate::error::Result;
use crate::metrics::{reputation_ratio, ScenarioSummary};
use crate::model::RoundOutcome;
use crate::scenarios::ScenarioRun;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SEEDS_FILE: &str = "seeds.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

/// `%.10g`: ten significant digits, trailing zeros dropped, scientific
/// notation outside `1e-4 <= |x| < 1e10`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn trace_header(n: usize) -> String {
    let mut cols: Vec<String> = [
        "seed",
        "round",
        "audited",
        "accepted_correct",
        "tie",
        "p_a",
        "reputation_ratio",
    ]
    .map(String::from)
    .to_vec();
    for i in 0..n {
        cols.push(format!("p_c_{i}"));
        cols.push(format!("rho_{i}"));
        cols.push(format!("cheated_{i}"));
    }
    cols.join(",")
}

/// One row per round, `7 + 3n` columns.
pub fn write_trace<W: Write>(mut w: W, seed: u64, trace: &[RoundOutcome]) -> io::Result<()> {
    let n = trace.first().map_or(0, |o| o.workers());
    writeln!(w, "{}", trace_header(n))?;
    for o in trace {
        let mut row = vec![
            seed.to_string(),
            o.round.to_string(),
            flag(o.audited).into(),
            flag(o.accepted_correct).into(),
            flag(o.tie_broken).into(),
            fmt_num(o.p_audit_after),
            fmt_num(reputation_ratio(o)),
        ];
        for i in 0..n {
            row.push(fmt_num(o.p_cheat_after[i]));
            row.push(fmt_num(o.reputations_after[i]));
            row.push(flag(o.cheated(i)).into());
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Per-round means over seeds.
pub fn write_summary<W: Write>(mut w: W, summary: &ScenarioSummary) -> io::Result<()> {
    let m = &summary.means;
    let n = m.p_cheat.first().map_or(0, Vec::len);
    let mut header: Vec<String> = [
        "round",
        "p_a",
        "audit_rate",
        "correct_rate",
        "reputation_ratio",
    ]
    .map(String::from)
    .to_vec();
    header.extend((0..n).map(|i| format!("p_c_{i}")));
    header.extend((0..n).map(|i| format!("rho_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for r in 0..m.rounds() {
        let mut row = vec![
            r.to_string(),
            fmt_num(m.p_audit[r]),
            fmt_num(m.audited[r]),
            fmt_num(m.correct[r]),
            fmt_num(m.reputation_ratio[r]),
        ];
        row.extend(m.p_cheat[r].iter().map(|&x| fmt_num(x)));
        row.extend(m.reputation[r].iter().map(|&x| fmt_num(x)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Per-seed totals; an empty convergence cell means none was detected.
pub fn write_seed_totals<W: Write>(mut w: W, summary: &ScenarioSummary) -> io::Result<()> {
    writeln!(
        w,
        "seed,convergence_round,audits,correct,reward_paid,final_p_a"
    )?;
    for s in &summary.seeds {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.seed,
            s.convergence.map_or(String::new(), |r| r.to_string()),
            s.audits,
            s.correct,
            fmt_num(s.reward_paid),
            fmt_num(s.final_p_audit)
        )?;
    }
    Ok(())
}

/// Fully-resolved configuration, loadable with `--config`. Metadata lives
/// in leading comments only.
pub fn manifest_text(config: &SystemConfig, label: Option<&str>) -> String {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut out = format!(
        "# repmech {} run manifest\n# created_unix = {created}\n",
        env!("CARGO_PKG_VERSION")
    );
    if let Some(label) = label {
        out.push_str(&format!("# scenario = {label}\n"));
    }
    out.push_str(&config.to_toml_string());
    out
}

/// Writes traces, summaries and the manifest into `dir`, creating it if
/// needed. Returns the paths written.
pub fn write_run(dir: &Path, run: &ScenarioRun, label: Option<&str>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut create = |name: String| -> Result<io::BufWriter<fs::File>> {
        let path = dir.join(name);
        let f = fs::File::create(&path)?;
        written.push(path);
        Ok(io::BufWriter::new(f))
    };
    for (seed, trace) in &run.runs {
        let mut w = create(trace_file_name(*seed))?;
        write_trace(&mut w, *seed, trace)?;
        w.flush()?;
    }
    let mut w = create(SUMMARY_FILE.into())?;
    write_summary(&mut w, &run.summary)?;
    w.flush()?;
    let mut w = create(SEEDS_FILE.into())?;
    write_seed_totals(&mut w, &run.summary)?;
    w.flush()?;
    let mut w = create(MANIFEST_FILE.into())?;
    w.write_all(manifest_text(&run.config, label).as_bytes())?;
    w.flush()?;
    Ok(written)
}
