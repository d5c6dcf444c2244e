"""Run several loop modes on one master seed and tabulate NS, AP and validity."""
from __future__ import annotations

import csv
import logging
import shutil
from dataclasses import replace
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..io import read_json, write_json  # noqa: E402
from ..trainer.sft import CUMULATIVE, NON_CUMULATIVE  # noqa: E402
from .config import EF_NO_FEEDBACK, EXIF, PF_BASELINE, RunConfig  # noqa: E402
from .loop import Run  # noqa: E402

log = logging.getLogger(__name__)

DEFAULT_MODES = (EXIF, EF_NO_FEEDBACK, PF_BASELINE)
COLUMNS = ("run", "mode", "data_mode", "iteration", "ns", "ap_mean", "ap_stderr", "valid_ratio",
           "records", "pairs", "train_records")


def run_name(mode: str, data_mode: str) -> str:
    return mode if data_mode == CUMULATIVE else f"{mode}-{data_mode}"


def _variants(config: RunConfig, modes, with_non_cumulative: bool) -> list[RunConfig]:
    out = [config.with_overrides(mode=m, data_mode=CUMULATIVE) for m in modes]
    if with_non_cumulative and EXIF in modes:
        out.append(config.with_overrides(mode=EXIF, data_mode=NON_CUMULATIVE))
    return out


def _shares_round0(a: RunConfig, b: RunConfig) -> bool:
    """Round 0 is identical when only the mode (between the scripted loop modes) or data mode differ."""
    scripted = {EXIF, EF_NO_FEEDBACK}
    if a.mode not in scripted or b.mode not in scripted:
        return False
    return replace(a, mode=EXIF, train=replace(a.train, data_mode=CUMULATIVE)) == \
        replace(b, mode=EXIF, train=replace(b.train, data_mode=CUMULATIVE))


def _reuse_round0_data(src: Path, dst: Path) -> None:
    """Copy the explore/label/validate artifacts; training onwards reruns under the new config."""
    dst.mkdir(parents=True)
    shutil.copytree(src / "trajectories", dst / "trajectories")
    for name in ("labeled.jsonl", "validated.jsonl"):
        shutil.copy2(src / name, dst / name)
    stages = read_json(src / "stages.json")
    write_json(dst / "stages.json", {k: stages[k] for k in ("explore", "label", "validate")})


def compare_modes(config: RunConfig, out_dir: str | Path, modes=DEFAULT_MODES,
                  with_non_cumulative: bool = True) -> list[dict]:
    """Run each variant under ``out_dir/<run>/`` and write ``compare.csv`` plus figures."""
    out = Path(out_dir)
    rows: list[dict] = []
    done: list[tuple[RunConfig, Path]] = []
    for cfg in _variants(config, modes, with_non_cumulative):
        name = run_name(cfg.mode, cfg.train.data_mode)
        root = out / name
        for prev_cfg, prev_root in done:
            src = prev_root / "rounds" / "0"
            if _shares_round0(cfg, prev_cfg) and src.exists() and not (root / "rounds" / "0").exists():
                _reuse_round0_data(src, root / "rounds" / "0")
                log.info("reusing round-0 data of %s for %s", prev_root.name, name)
                break
        report = Run(cfg, root).execute()
        done.append((cfg, root))
        for it in report["iterations"]:
            rows.append({
                "run": name, "mode": cfg.mode, "data_mode": cfg.train.data_mode,
                "iteration": it["iteration"], "ns": it["ns"], "ap_mean": it["ap_mean"],
                "ap_stderr": it["ap_stderr"], "valid_ratio": it["valid_ratio"], "records": it["records"],
                "pairs": it["pairs"], "train_records": it["train_records"],
            })
    write_table(rows, out / "compare.csv")
    plot_comparison(rows, out)
    return rows


def write_table(rows: list[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in COLUMNS})


def read_table(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def format_table(rows: list[dict]) -> str:
    lines = [f"{'run':<28} {'it':>2} {'NS':>3} {'AP%':>6} {'valid':>6} {'pairs':>6}"]
    for r in rows:
        lines.append(f"{r['run']:<28} {int(r['iteration']):>2} {int(r['ns']):>3} "
                     f"{100 * float(r['ap_mean']):>6.1f} {float(r['valid_ratio']):>6.2f} {int(r['pairs']):>6}")
    return "\n".join(lines)


def plot_comparison(rows: list[dict], out_dir: str | Path) -> list[Path]:
    """NS and AP per iteration for every run, and the valid ratio per run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs: dict[str, list[dict]] = {}
    for r in rows:
        runs.setdefault(r["run"], []).append(r)
    written = []

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, rs in runs.items():
        ax.plot([int(r["iteration"]) for r in rs], [int(r["ns"]) for r in rs], marker="o", label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("learned skills (NS)")
    ax.set_ylim(0, 22)
    ax.legend(fontsize=7)
    fig.tight_layout()
    written.append(out / "ns_by_iteration.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, rs in runs.items():
        ax.errorbar([int(r["iteration"]) for r in rs], [100 * float(r["ap_mean"]) for r in rs],
                    yerr=[100 * float(r["ap_stderr"]) for r in rs], marker="o", capsize=3, label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("average progress (%)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    written.append(out / "ap_by_iteration.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    names = list(runs)
    means = [sum(float(r["valid_ratio"]) for r in runs[n]) / len(runs[n]) for n in names]
    ax.bar(range(len(names)), means)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, fontsize=7)
    ax.set_ylabel("valid ratio")
    ax.set_ylim(0, 1)
    fig.tight_layout()
    written.append(out / "valid_ratio.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)
    return written
