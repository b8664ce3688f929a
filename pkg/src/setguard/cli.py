"""Thin command-line client.

Each subcommand builds the same request the HTTP service accepts and either
runs the handler in-process (default) or posts it to a running service when
--server is given.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request

from .service import models as sm
from .service.app import handle_identify, handle_report, handle_simulate, handle_synth


def _post(server: str, path: str, payload: dict) -> dict:
    req = urllib.request.Request(
        server.rstrip("/") + path,
        data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode())


def _dispatch(server, path, handler, request_model, payload):
    if server:
        return _post(server, path, payload)
    return handler(request_model.model_validate(payload)).model_dump()


def _read_json(path):
    with open(path) as f:
        return json.load(f)


def cmd_identify(args):
    payload = {"bank": _read_json(args.bank)}
    out = _dispatch(args.server, "/identify", handle_identify,
                    sm.IdentifyRequest, payload)
    with open(args.out, "w") as f:
        json.dump(out["model"], f)
    print(f"identified model set: {out['order']} generators "
          f"from {out['samples']} samples -> {args.out}")


def cmd_synth(args):
    payload = {
        "bank": _read_json(args.data),
        "scenario": _read_json(args.scenario),
        "options": {"build_aux": not args.no_aux, "seed": args.seed,
                    "coverage_target": args.coverage_target,
                    "coverage_samples": args.coverage_samples,
                    "j_max": args.j_max},
    }
    out = _dispatch(args.server, "/synth", handle_synth, sm.SynthRequest, payload)
    with open(args.out, "w") as f:
        json.dump(out["bundle"], f)
    cov = ", ".join(f"{c:.3f}" for c in out["coverage"])
    print(f"bundle -> {args.out} (cell coverage: {cov})")
    if any(out["stalled"]):
        print("warning: coverage stalled on cells "
              f"{[i for i, s in enumerate(out['stalled']) if s]}", file=sys.stderr)


def cmd_simulate(args):
    payload = {
        "bundle": _read_json(args.bundle),
        "scenario": _read_json(args.scenario),
        "seed": args.seed,
        "mode": args.mode,
        "include_tubes": args.tubes is not None,
    }
    out = _dispatch(args.server, "/simulate", handle_simulate,
                    sm.SimulateRequest, payload)
    with open(args.out, "w", newline="") as f:
        f.write(out["trace_csv"])
    if args.tubes is not None:
        with open(args.tubes, "w") as f:
            json.dump(out["tubes"], f)
    print(f"trace -> {args.out} (mode={out['mode']} seed={out['seed']} "
          f"e_r={out['e_r']:.4f})")


def cmd_report(args):
    traces: dict = {}
    for spec in args.traces:
        label, _, path = spec.partition("=")
        if not path:
            label, path = "trace", label
        with open(path) as f:
            traces.setdefault(label, []).append(f.read())
    out = _dispatch(args.server, "/report", handle_report, sm.ReportRequest,
                    {"traces": traces})
    table = out["table"]
    width = max(len(k) for k in table)
    print(f"{'label'.ljust(width)}  median e_r  mean e_r  runs")
    for label, row in table.items():
        print(f"{label.ljust(width)}  {row['median']:10.4f}  {row['mean']:8.4f}"
              f"  {len(row['e_r'])}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump(table, f, indent=2)
        print(f"report -> {args.out}")


def cmd_serve(args):
    import uvicorn

    uvicorn.run("setguard.service.app:app", host=args.host, port=args.port)


def cmd_cstr_assets(args):
    import os

    from . import cstr
    from .service.models import BankModel

    os.makedirs(args.outdir, exist_ok=True)
    seed = cstr.DATA_SEED if args.data_seed is None else args.data_seed
    bank = cstr.collect_bank(seed=seed)
    bank_path = os.path.join(args.outdir, "bank.json")
    with open(bank_path, "w") as f:
        json.dump(BankModel.from_core(bank).model_dump(), f)
    scn_path = os.path.join(args.outdir, "scenario.json")
    with open(scn_path, "w") as f:
        json.dump(cstr_scenario_json(), f, indent=2)
    print(f"wrote {bank_path} and {scn_path}")


def cstr_scenario_json() -> dict:
    """Shipped reactor scenario in the on-disk config schema."""
    from . import cstr

    return {
        "plant": {
            "A": cstr.A.tolist(),
            "B": cstr.B.tolist(),
            "W": {"center": cstr.disturbance().center.tolist(),
                  "generators": cstr.disturbance().generators.tolist()},
            "X": {"lo": cstr.X_LO.tolist(), "hi": cstr.X_HI.tolist()},
            "U": {"lo": cstr.U_LO.tolist(), "hi": cstr.U_HI.tolist()},
            "x0": cstr.X0.tolist(),
        },
        "controller": {
            "Kt": cstr.tracking_gain().tolist(),
            "X_eta": {"lo": (cstr.ETA_SHRINK * cstr.X_LO).tolist(),
                      "hi": (cstr.ETA_SHRINK * cstr.X_HI).tolist()},
        },
        "cells": [{"x_e": list(map(float, xe))} for xe in cstr.EQUILIBRIUM_SEEDS],
        "weights": {"alpha": cstr.ALPHA, "beta": cstr.BETA},
        "detector": {"tau": cstr.TAU, "clear_streak": cstr.CLEAR_STREAK},
        "attacks": [
            {"channel": a.channel, "window": list(a.window),
             "offset": a.offset.tolist(), "slope": a.slope.tolist(),
             "k_ref": a.k_ref}
            for a in cstr.ATTACKS
        ],
        "reference": [{"k": k, "r": list(r)} for k, r in cstr.WAYPOINTS],
        "horizon": cstr.HORIZON,
        "seed": 0,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="setguard",
        description="data-driven set-theoretic safety control toolkit")
    parser.add_argument("--server", default=None,
                        help="URL of a running setguard service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="build the model set from a trajectory bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("synth", help="synthesize the control-set bundle")
    p.add_argument("--data", required=True, help="trajectory bank JSON")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-aux", action="store_true",
                   help="skip the recovery-index auxiliary families")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coverage-target", type=float, default=0.99)
    p.add_argument("--coverage-samples", type=int, default=3000)
    p.add_argument("--j-max", type=int, default=50)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run one closed-loop scenario")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["proposed", "ec_only", "no_attack"],
                   default="proposed")
    p.add_argument("--tubes", default=None,
                   help="also dump the supervisor's tube sections to this JSON file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="tracking-error table from trace CSVs")
    p.add_argument("--traces", nargs="+", required=True,
                   metavar="LABEL=PATH")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("cstr-assets",
                       help="write the shipped reactor bank and scenario configs")
    p.add_argument("--outdir", required=True)
    p.add_argument("--data-seed", type=int, default=None)
    p.set_defaults(func=cmd_cstr_assets)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    main()
