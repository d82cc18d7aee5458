//! Human-readable block printed after a run. Every value shown is read back
//! from the report, so it also appears in the report file.

use cce_core::pipeline::Report;

const HIGHLIGHTS: &[(&str, &str)] = &[
    ("model", "model"),
    ("volume.v", "renormalized volume"),
    ("volume.v_exact", "  exact"),
    ("volume.uncertainty", "  uncertainty"),
    ("eigenfunction.w2", "w2"),
    ("compactify.min_scalar", "min compactified scalar"),
    ("compactify.scalar_margin", "  margin over 2R"),
    ("integrals.weyl_energy_einstein", "weyl energy"),
    ("identity.relative", "identity residual (relative)"),
    ("closed.euler_gb", "euler characteristic"),
    ("closed.signature", "signature"),
    ("closed.sigma2_integral", "sigma2 integral"),
    ("closed.weyl_energy", "weyl energy"),
    ("curvature.scalar", "scalar curvature"),
    ("curvature.weyl_norm2", "|W|^2"),
    ("curvature.sigma2", "sigma2"),
    ("models", "models"),
];

pub fn render(r: &Report) -> String {
    let mut out = String::new();
    let mut line = |label: &str, value: &str| out.push_str(&format!("{label:<30} {value}\n"));
    for (key, label) in HIGHLIGHTS {
        if let Some(v) = r.get(key) {
            line(label, v);
        }
    }
    for (k, v) in r.entries() {
        if let Some(name) = k.strip_prefix("topology.check.").filter(|n| !n.contains('.')) {
            let margin = r.get(&format!("{k}.margin")).unwrap_or("");
            line(&format!("check {name}"), &format!("{v} (margin {margin})"));
        }
    }
    let conclusions: Vec<&str> = r
        .entries()
        .iter()
        .filter(|(k, _)| k.starts_with("topology.conclusion.") && !k.ends_with(".chain"))
        .map(|(_, v)| v.as_str())
        .collect();
    if !conclusions.is_empty() {
        out.push_str("conclusions:\n");
        for c in conclusions {
            out.push_str(&format!("  - {c}\n"));
        }
    }
    let notes = r.entries().iter().filter(|(k, _)| k.starts_with("topology.note."));
    for (_, n) in notes {
        out.push_str(&format!("note: {n}\n"));
    }
    let failed: Vec<&str> = r
        .entries()
        .iter()
        .filter(|(k, v)| k.starts_with("gate.") && !k.ends_with(".value") && !k.ends_with(".limit") && v == "fail")
        .map(|(k, _)| &k["gate.".len()..])
        .collect();
    let mut line = |label: &str, value: &str| out.push_str(&format!("{label:<30} {value}\n"));
    if let (Some(total), Some(nfail)) = (r.get("gates.total"), r.get("gates.failed")) {
        line("gates", &format!("{total} checked, {nfail} failed"));
    }
    for f in failed {
        line("  failed", f);
    }
    if let Some(s) = r.get("status") {
        line("status", s);
    }
    out
}
