"""Run orchestration: advance a configured simulation and write its outputs.

A run produces, inside the configured output directory:

  snapshot_NNNNNN.csv   cell fields (i, j, x, y, c1, c2, p, phi, rho_f) at
                        step 0, every `snapshot_stride`-th accepted step, and
                        the final step
  monitors.csv          one row per accepted step with every monitor value
                        and flag
  bounds.txt            the evaluated a-priori constants and the data norms
                        they were computed from
  summary.json          step/sweep statistics, monitor verdict, wall time

Floats are written with repr(), so rerunning the same configuration
reproduces the CSV files byte for byte (summary.json contains the wall time
and is exempt from that guarantee).
"""

import json
import os
import time
from dataclasses import dataclass

from . import gummel
from .monitors import MonitorReport
from .transport import free_charge


def _fmt(value):
    return repr(float(value))


def snapshot_rows(grid, params, state):
    """Yield csv rows (lists of strings) for one state, header first."""
    yield ["i", "j", "x", "y", "c1", "c2", "p", "phi", "rho_f"]
    rho = free_charge(params, state.conc).values
    c1, c2 = state.conc.c1.values, state.conc.c2.values
    p, phi = state.flow.p.values, state.electro.phi.values
    for j in range(grid.ny):
        for i in range(grid.nx):
            yield [
                str(i),
                str(j),
                _fmt(grid.xc[i]),
                _fmt(grid.yc[j]),
                _fmt(c1[j, i]),
                _fmt(c2[j, i]),
                _fmt(p[j, i]),
                _fmt(phi[j, i]),
                _fmt(rho[j, i]),
            ]


def _write_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")


def bounds_text(ledger):
    n = ledger.norms
    lines = [
        "a-priori constants (T = %s)" % _fmt(ledger.T),
        "",
        "  B0        = %s" % _fmt(ledger.B0),
        "  B0_energy = %s" % _fmt(ledger.B0_energy),
        "  B0_moser  = %s" % _fmt(ledger.B0_moser),
        "  C0_hat    = %s" % _fmt(ledger.C0_hat),
        "  C0_hat_energy = %s" % _fmt(ledger.C0_hat_energy),
        "  C0        = %s" % _fmt(ledger.C0),
        "  CM        = %s" % _fmt(ledger.CM),
        "  log10(CM) = %s" % _fmt(ledger.cm_log10),
        "  Ce        = %s" % _fmt(ledger.Ce),
        "  Cf        = %s" % _fmt(ledger.Cf),
        "",
        "data norms",
        "  sigma_inf = %s" % _fmt(n.sigma_inf),
        "  f_inf     = %s" % _fmt(n.f_inf),
        "  rhob_inf  = %s" % _fmt(n.rhob_inf),
        "  g_inf     = %s, %s" % (_fmt(n.g_inf[0]), _fmt(n.g_inf[1])),
        "  g_l2      = %s, %s" % (_fmt(n.g_l2[0]), _fmt(n.g_l2[1])),
        "  c0_l2     = %s, %s" % (_fmt(n.c0_l2[0]), _fmt(n.c0_l2[1])),
        "  c0_inf    = %s, %s" % (_fmt(n.c0_inf[0]), _fmt(n.c0_inf[1])),
    ]
    return "\n".join(lines) + "\n"


def bounds_csv_rows(ledger):
    n = ledger.norms
    items = [
        ("T", ledger.T),
        ("B0", ledger.B0),
        ("B0_energy", ledger.B0_energy),
        ("B0_moser", ledger.B0_moser),
        ("C0_hat", ledger.C0_hat),
        ("C0_hat_energy", ledger.C0_hat_energy),
        ("C0", ledger.C0),
        ("CM", ledger.CM),
        ("log10_CM", ledger.cm_log10),
        ("Ce", ledger.Ce),
        ("Cf", ledger.Cf),
        ("sigma_inf", n.sigma_inf),
        ("f_inf", n.f_inf),
        ("rhob_inf", n.rhob_inf),
        ("g_inf_1", n.g_inf[0]),
        ("g_inf_2", n.g_inf[1]),
        ("g_l2_1", n.g_l2[0]),
        ("g_l2_2", n.g_l2[1]),
        ("c0_l2_1", n.c0_l2[0]),
        ("c0_l2_2", n.c0_l2[1]),
        ("c0_inf_1", n.c0_inf[0]),
        ("c0_inf_2", n.c0_inf[1]),
    ]
    return [["quantity", "value"]] + [[k, _fmt(v)] for k, v in items]


@dataclass
class RunOutput:
    result: object  # gummel.SimResult
    out_dir: str
    files: list
    summary: dict


def run(cfg, out_dir=None):
    """Advance the configured simulation and write every output file."""
    target = out_dir or cfg.out_dir
    os.makedirs(target, exist_ok=True)
    t_start = time.perf_counter()
    result = gummel.advance(
        cfg.grid,
        cfg.params,
        cfg.initial,
        cfg.schedule,
        tol=cfg.tol,
        max_sweeps=cfg.max_sweeps,
        damping=cfg.damping,
        init_iterate=cfg.init_iterate,
        lin_tol=cfg.lin_tol,
        lin_tol_transport=cfg.lin_tol_transport,
    )
    wall = time.perf_counter() - t_start

    files = []
    last = len(result.states) - 1
    for k, state in enumerate(result.states):
        if k % cfg.snapshot_stride != 0 and k != last:
            continue
        name = "snapshot_%06d.csv" % k
        _write_csv(os.path.join(target, name), snapshot_rows(cfg.grid, cfg.params, state))
        files.append(name)

    _write_csv(
        os.path.join(target, "monitors.csv"),
        [MonitorReport.csv_header()] + [m.csv_row() for m in result.monitors],
    )
    files.append("monitors.csv")

    with open(os.path.join(target, "bounds.txt"), "w", encoding="utf-8") as fh:
        fh.write(bounds_text(result.ledger))
    files.append("bounds.txt")

    summary = run_summary(cfg, result, wall)
    with open(os.path.join(target, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append("summary.json")

    return RunOutput(result=result, out_dir=target, files=files, summary=summary)


def run_summary(cfg, result, wall_time):
    reports = result.reports
    monitors = result.monitors
    flag_failures = {
        flag: sum(1 for m in monitors if not getattr(m, flag)) for flag in MonitorReport.FLAGS
    }
    return {
        "grid": [cfg.grid.nx, cfg.grid.ny],
        "domain": [cfg.grid.lx, cfg.grid.ly],
        "t_end": result.states[-1].time,
        "steps": len(reports),
        "total_sweeps": sum(r.sweeps for r in reports),
        "max_sweeps_in_step": max((r.sweeps for r in reports), default=0),
        "total_halvings": sum(r.halvings for r in reports),
        "monitor_rows": len(monitors),
        "monitor_failures": flag_failures,
        "all_monitors_ok": all(m.all_ok() for m in monitors),
        "wall_time_s": wall_time,
    }


def check(cfg):
    """Run without writing files; return (ok, human-readable verdict lines)."""
    result = gummel.advance(
        cfg.grid,
        cfg.params,
        cfg.initial,
        cfg.schedule,
        tol=cfg.tol,
        max_sweeps=cfg.max_sweeps,
        damping=cfg.damping,
        init_iterate=cfg.init_iterate,
        lin_tol=cfg.lin_tol,
        lin_tol_transport=cfg.lin_tol_transport,
    )
    monitors = result.monitors
    lines = []
    ok = True
    for flag in MonitorReport.FLAGS:
        bad = [m for m in monitors if not getattr(m, flag)]
        status = "PASS" if not bad else "FAIL"
        ok = ok and not bad
        detail = ""
        if bad:
            detail = "  (%d of %d steps, first at t=%s)" % (len(bad), len(monitors), _fmt(bad[0].time))
        lines.append("%s  %-12s%s" % (status, flag.removesuffix("_ok"), detail))
    lines.append("steps: %d   sweeps: %d   halvings: %d" % (
        len(result.reports),
        sum(r.sweeps for r in result.reports),
        sum(r.halvings for r in result.reports),
    ))
    return ok, lines
