"""Rendering of cohort reports: text table, CSV series and figures.

The figure set mirrors the standard presentation for this paradigm: the
aggregated magnitude curve with linear/power fits, the aggregated
discounted-value curve with all three discount fits, and a three-panel
remapping figure (objective scale, subjective scale, decreasing-impatience
curves on both scales).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fitting import predict

__all__ = ["render_text", "write_csv_series", "write_figures", "write_report_dir"]


def _fmt(value, digits=3):
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def _fmt_pm(mean, sem, digits=3):
    if mean is None:
        return "-"
    if sem is None:
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f}±{sem:.{digits}f}"


def render_text(report: dict) -> str:
    """Plain-text cohort summary in the shape of the model-comparison table."""
    counts = report["counts"]
    n = counts["n"]
    lines = []
    lines.append(f"Cohort report  (n={n}, excluded={report['n_excluded']})")
    lines.append("")
    lines.append("Classification counts")
    lines.append(
        f"  magnitude mapping : power {counts['power_mapped']}/{n}, "
        f"linear {counts['linear_mapped']}/{n}"
    )
    lines.append(
        f"  discounting       : exponential {counts['exponential']}, "
        f"proportional hyperbolic {counts['proportional_hyperbolic']}, "
        f"general hyperbolic {counts['general_hyperbolic']} "
        f"(hyperbolic total {counts['hyperbolic']})"
    )
    lines.append(
        f"  general hyperbolic better than exponential: "
        f"{counts['gh_better_than_exponential']}/{n}"
    )
    lines.append("")

    two = report["two_stage"]
    agg = report["aggregated"]
    remap = report.get("remap", {})
    has_remap = "aggregated_pre" in remap
    n_remap = remap.get("n", 0)

    cols = ["Exponential", "Prop.Hyp", "Gen.Hyp"]
    if has_remap:
        cols += [f"Gen.Hyp obj (n={n_remap})", f"Gen.Hyp subj (n={n_remap})"]
    header = f"{'':22s}" + "".join(f"{c:>22s}" for c in cols)
    lines.append("Discounting model comparison (objective vs subjective time)")
    lines.append(header)

    def row(label, values):
        lines.append(f"{label:22s}" + "".join(f"{v:>22s}" for v in values))

    fam_keys = ["exponential", "proportional_hyperbolic", "general_hyperbolic"]
    r2_vals = [
        _fmt_pm(two[k]["mean_r2"], two[k]["sem_r2"]) for k in fam_keys
    ]
    agg_r2 = [_fmt(agg["discounting"][k]["r2"]) for k in fam_keys]
    delta_row = [
        _fmt_pm(two["exponential"]["means"].get("delta"), two["exponential"]["sems"].get("delta")),
        _fmt_pm(
            two["proportional_hyperbolic"]["means"].get("delta"),
            two["proportional_hyperbolic"]["sems"].get("delta"),
        ),
        "-",
    ]
    h_row = ["-", "-", _fmt_pm(two["general_hyperbolic"]["means"].get("h"),
                               two["general_hyperbolic"]["sems"].get("h"))]
    r_row = ["-", "-", _fmt_pm(two["general_hyperbolic"]["means"].get("r"),
                               two["general_hyperbolic"]["sems"].get("r"))]
    bic_row = [_fmt(agg["discounting"][k]["bic"], 1) for k in fam_keys]
    if has_remap:
        pre, post = remap["aggregated_pre"], remap["aggregated_post"]
        r2_vals += ["-", "-"]
        agg_r2 += [_fmt(pre["r2"]), _fmt(post["r2"])]
        delta_row += ["-", "-"]
        h_row += [_fmt(pre["params"]["h"]), _fmt(post["params"]["h"])]
        r_row += [_fmt(pre["params"]["r"]), _fmt(post["params"]["r"])]
        bic_row += [_fmt(pre["bic"], 1), _fmt(post["bic"], 1)]
    row("Two-stage R2", r2_vals)
    row("Aggregated R2", agg_r2)
    row("delta", delta_row)
    row("h", h_row)
    row("r", r_row)
    row("BIC", bic_row)
    lines.append("")

    mag = agg["magnitude"]
    lines.append("Magnitude mapping (aggregated)")
    lines.append(
        f"  linear : c={_fmt(mag['linear']['params']['c'], 2)}, "
        f"a={_fmt(mag['linear']['params']['a'], 2)}, "
        f"BIC={_fmt(mag['linear']['bic'], 1)}, R2={_fmt(mag['linear']['r2'])}"
    )
    lines.append(
        f"  power  : c={_fmt(mag['power']['params']['c'], 2)}, "
        f"a={_fmt(mag['power']['params']['a'], 2)}, "
        f"beta={_fmt(mag['power']['params']['beta'], 3)}, "
        f"BIC={_fmt(mag['power']['bic'], 1)}, R2={_fmt(mag['power']['r2'])}"
    )
    lines.append("")

    if has_remap:
        lines.append(f"Time-scale remapping (n={n_remap})")
        lines.append(
            f"  aggregated h: {_fmt(remap['aggregated_pre']['params']['h'])} -> "
            f"{_fmt(remap['aggregated_post']['params']['h'])}   "
            f"r: {_fmt(remap['aggregated_pre']['params']['r'])} -> "
            f"{_fmt(remap['aggregated_post']['params']['r'])}   "
            f"(c_aggregate={_fmt(remap['c_aggregate'])})"
        )
        lines.append(
            f"  h lower after remap: {remap['subjects_h_lower_after']}/{n_remap}; "
            f"still hyperbolic after remap: {remap['still_hyperbolic_after']}/{n_remap}"
        )
        bayes = report.get("bayes", {})
        if "bf_objective_lower" in bayes:
            lines.append(
                f"  paired Bayes factors on h: "
                f"BF(obj<subj)={bayes['bf_objective_lower']:.3f}, "
                f"BF(obj>=subj)={bayes['bf_objective_higher']:.3f} "
                f"(t={bayes['t_stat']:.2f}, n={bayes['n']})"
            )
        elif "error" in bayes:
            lines.append(f"  paired Bayes factors on h: not computed ({bayes['error']})")
    return "\n".join(lines) + "\n"


def write_csv_series(report: dict, out_dir) -> list:
    """Delimited per-figure series plus the per-subject classification table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    agg = report["aggregated"]
    mag_series = agg["magnitude_series"]
    grid = mag_series["t"]
    lin, pow_ = agg["magnitude"]["linear"], agg["magnitude"]["power"]
    path = out_dir / "figure1_magnitude.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["interval_months", "mean_px", "sem_px", "linear_fit", "power_fit"])
        lin_fit = predict("linear", lin["params"], grid)
        pow_fit = predict("power", pow_["params"], grid)
        for i, t in enumerate(grid):
            w.writerow([t, mag_series["y"][i], mag_series["sem"][i],
                        float(lin_fit[i]), float(pow_fit[i])])
    written.append(path)

    dv_series = agg["dv_series"]
    grid = dv_series["t"]
    path = out_dir / "figure2_discounting.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["interval_months", "mean_dv", "sem_dv", "exponential_fit",
             "proportional_fit", "general_fit"]
        )
        fits = {
            k: predict(k, agg["discounting"][k]["params"], grid)
            for k in ("exponential", "proportional_hyperbolic", "general_hyperbolic")
        }
        for i, t in enumerate(grid):
            w.writerow(
                [t, dv_series["y"][i], dv_series["sem"][i],
                 float(fits["exponential"][i]), float(fits["proportional_hyperbolic"][i]),
                 float(fits["general_hyperbolic"][i])]
            )
    written.append(path)

    di = report.get("di_curves", {})
    if "objective" in di:
        path = out_dir / "figure3_decreasing_impatience.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["interval_months", "di_objective", "di_subjective"])
            for i, t in enumerate(di["t"]):
                w.writerow([t, di["objective"][i], di["subjective"][i]])
        written.append(path)

    path = out_dir / "classifications.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["subject_id", "flags", "magnitude_class", "discount_class",
             "gh_better_than_exponential", "c_exponent", "h_pre", "h_post",
             "r_pre", "r_post", "total_choice_trials"]
        )
        for s in report["subjects"]:
            w.writerow(
                [s["subject_id"], ";".join(s["flags"]), s["magnitude_class"],
                 s["discount_class"], s["gh_better_than_exponential"],
                 s["c_exponent"], s["h_pre"], s["h_post"], s["r_pre"],
                 s["r_post"], s["total_choice_trials"]]
            )
    written.append(path)
    return written


def write_figures(report: dict, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    agg = report["aggregated"]
    smooth = np.linspace(0.5, 37.0, 200)

    # magnitude curve with both mappings
    ms = agg["magnitude_series"]
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.errorbar(ms["t"], ms["y"], yerr=ms["sem"], fmt="o", color="k",
                capsize=3, label="mean response")
    ax.plot(smooth, predict("linear", agg["magnitude"]["linear"]["params"], smooth),
            "--", label="linear")
    ax.plot(smooth, predict("power", agg["magnitude"]["power"]["params"], smooth),
            ":", lw=2, label="power")
    ax.set_xlabel("time interval (months)")
    ax.set_ylabel("response length (px)")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = out_dir / "figure1_magnitude.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    # discounted value with the three discount fits
    dv = agg["dv_series"]
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.errorbar(dv["t"], dv["y"], yerr=dv["sem"], fmt="o", color="k",
                capsize=3, label="mean DV")
    styles = {"exponential": "-", "proportional_hyperbolic": ":",
              "general_hyperbolic": "--"}
    labels = {"exponential": "exponential", "proportional_hyperbolic": "proportional",
              "general_hyperbolic": "general hyperbolic"}
    for fam, style in styles.items():
        ax.plot(smooth, predict(fam, agg["discounting"][fam]["params"], smooth),
                style, label=labels[fam])
    ax.set_xlabel("time interval (months)")
    ax.set_ylabel("discounted value")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = out_dir / "figure2_discounting.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    remap = report.get("remap", {})
    if "aggregated_pre" in remap:
        pre, post = remap["aggregated_pre"], remap["aggregated_post"]
        c_agg = remap["c_aggregate"]
        sub = remap["dv_series"]
        di = report["di_curves"]
        fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))

        axes[0].errorbar(sub["t"], sub["y"], yerr=sub["sem"], fmt="o", color="k",
                         capsize=3)
        axes[0].plot(smooth, predict("general_hyperbolic", pre["params"], smooth),
                     "--", label="general hyperbolic")
        axes[0].plot(smooth, np.exp(-pre["params"]["r"] * smooth), "-",
                     label="exponential (rate r)")
        axes[0].set_xlabel("objective time (months)")
        axes[0].set_ylabel("discounted value")
        axes[0].set_title("objective scale")
        axes[0].legend(frameon=False, fontsize=8)

        smooth_subj = np.power(smooth, c_agg)
        t_subj = np.power(np.asarray(sub["t"]), c_agg)
        axes[1].errorbar(t_subj, sub["y"], yerr=sub["sem"], fmt="o", color="k",
                         capsize=3)
        axes[1].plot(smooth_subj,
                     predict("subjective_general_hyperbolic", post["params"], smooth,
                             time_exponent=c_agg),
                     "--", label="general hyperbolic")
        axes[1].plot(smooth_subj, np.exp(-post["params"]["r"] * smooth_subj), "-",
                     label="exponential (rate r)")
        axes[1].set_xlabel(f"subjective time (months^{c_agg:.2f})")
        axes[1].set_title("subjective scale")
        axes[1].legend(frameon=False, fontsize=8)

        axes[2].plot(di["t"], di["objective"], "--", lw=2.2, label="objective")
        axes[2].plot(di["t"], di["subjective"], "--", lw=1.0, label="subjective")
        axes[2].set_xlabel("time interval (months)")
        axes[2].set_ylabel("decreasing impatience h/(1+ht)")
        axes[2].set_title("decreasing impatience")
        axes[2].legend(frameon=False, fontsize=8)

        fig.tight_layout()
        path = out_dir / "figure3_remapping.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def write_report_dir(report: dict, out_dir) -> dict:
    """Write report.json, report.txt, the CSV series and the figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    text = render_text(report)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    csvs = write_csv_series(report, out_dir)
    figs = write_figures(report, out_dir)
    return {"json": json_path, "text": out_dir / "report.txt", "csv": csvs, "figures": figs}
