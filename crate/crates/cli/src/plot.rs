//! Matplotlib script emission. The script is written, never executed.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;

use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Witness E against temperature, one curve per file (`witness-scan`).
    Witness,
    /// T_c against U; chains solid, rings dashed (`tc-vs-u`).
    TcVsU,
    /// QMC T_c brackets against U grouped by lattice (`qmc-run`).
    Qmc,
}

impl Figure {
    fn command(self) -> &'static str {
        match self {
            Figure::Witness => "witness-scan",
            Figure::TcVsU => "tc-vs-u",
            Figure::Qmc => "qmc-run",
        }
    }

    fn body(self) -> &'static str {
        match self {
            Figure::Witness => WITNESS_BODY,
            Figure::TcVsU => TC_BODY,
            Figure::Qmc => QMC_BODY,
        }
    }
}

/// Check that every input exists and came from the matching command.
pub fn check_inputs(figure: Figure, inputs: &[PathBuf]) -> Result<()> {
    if inputs.is_empty() {
        bail!("plot needs at least one CSV file");
    }
    let mut problems = Vec::new();
    for path in inputs {
        match output::read(path) {
            Ok(parsed) => {
                let command = parsed.meta("command").and_then(|v| v.as_str()).unwrap_or("?");
                if command != figure.command() {
                    problems.push(format!(
                        "{}: written by `{command}`, expected `{}`",
                        path.display(),
                        figure.command()
                    ));
                }
            }
            Err(e) => problems.push(format!("{}: {e:#}", path.display())),
        }
    }
    if !problems.is_empty() {
        bail!("cannot plot:\n  - {}", problems.join("\n  - "));
    }
    Ok(())
}

fn python_string(s: &str) -> String {
    let escaped = s.replace('\\', "\\\\").replace('"', "\\\"");
    format!("\"{escaped}\"")
}

pub fn script(figure: Figure, inputs: &[PathBuf], image: &Path) -> String {
    let files: Vec<String> = inputs.iter().map(|p| python_string(&p.display().to_string())).collect();
    format!(
        "{PRELUDE}\nFILES = [{}]\nIMAGE = {}\n\n{}",
        files.join(", "),
        python_string(&image.display().to_string()),
        figure.body()
    )
}

pub fn write(figure: Figure, inputs: &[PathBuf], out: &Path) -> Result<()> {
    check_inputs(figure, inputs)?;
    let image = out.with_extension("pdf");
    std::fs::write(out, script(figure, inputs, &image)).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

const PRELUDE: &str = r##"#!/usr/bin/env python3
# Generated by hubbard-witness plot. Requires Python >= 3.11 and matplotlib.
import csv
import tomllib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    """Return (preamble dict, list of row dicts) for a hubbard-witness CSV."""
    head, body = [], []
    with open(path, newline="") as f:
        for line in f:
            if line.startswith("#"):
                head.append(line[2:] if line.startswith("# ") else line[1:])
            else:
                body.append(line)
    return tomllib.loads("".join(head)), list(csv.DictReader(body))


def number(s):
    return float(s) if s not in ("", None) else None
"##;

const WITNESS_BODY: &str = r##"fig, ax = plt.subplots(figsize=(5, 3.6))
for path in FILES:
    pre, rows = load(path)
    t = [number(r["T"]) for r in rows]
    e = [number(r["witness_e"]) for r in rows]
    label = f"U = {pre['meta'].get('u', '?'):g}"
    if "err_witness_e" in rows[0]:
        err = [number(r["err_witness_e"]) for r in rows]
        ax.errorbar(t, e, yerr=err, fmt="o", ms=3, capsize=2, label=label)
    else:
        ax.plot(t, e, label=label)
ax.axhline(0.0, color="k", lw=0.6)
ax.set_xscale("log")
ax.set_xlabel(r"$k_B T / t$")
ax.set_ylabel(r"$\mathcal{E}$")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(IMAGE)
print("wrote", IMAGE)
"##;

const TC_BODY: &str = r##"fig, ax = plt.subplots(figsize=(5, 3.6))
for path in FILES:
    pre, rows = load(path)
    kind = pre["geometry"]["kind"]
    n = pre["meta"]["n_sites"]
    pts = [(number(r["U"]), number(r["Tc"])) for r in rows if r["status"] == "ok"]
    if not pts:
        continue
    u, tc = zip(*pts)
    style = "-" if kind == "chain" else "--"
    line, = ax.plot(u, tc, style, label=f"{kind} {n} ({pre['model']['ensemble']})")
    k = max(range(len(tc)), key=tc.__getitem__)
    ax.annotate(str(n), (u[k], tc[k]), textcoords="offset points", xytext=(0, 4),
                ha="center", fontsize=8, color=line.get_color())
ax.set_xscale("log")
ax.set_xlabel(r"$U / t$")
ax.set_ylabel(r"$k_B T_c / t$")
ax.legend(frameon=False, fontsize=7)
fig.tight_layout()
fig.savefig(IMAGE)
print("wrote", IMAGE)
"##;

const QMC_BODY: &str = r##"groups = {}
for path in FILES:
    pre, rows = load(path)
    res = pre.get("result", {})
    if "tc" not in res:
        print(f"{path}: no T_c bracket, skipped")
        continue
    kind = pre["geometry"]["kind"]
    groups.setdefault(kind, []).append((pre["model"]["u"], res["tc"], res["tc_error"]))

fig, ax = plt.subplots(figsize=(5, 3.6))
markers = {"chain": "s", "ring": "o", "square": "^", "cubic": "D"}
for kind, pts in sorted(groups.items()):
    pts.sort()
    u, tc, err = zip(*pts)
    ax.errorbar(u, tc, yerr=err, fmt=markers.get(kind, "o") + "-", ms=4, capsize=2, label=kind)
ax.set_xlabel(r"$U / t$")
ax.set_ylabel(r"$k_B T_c / t$")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(IMAGE)
print("wrote", IMAGE)
"##;
