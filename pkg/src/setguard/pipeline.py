"""End-to-end orchestration: identify, synthesize, simulate, report.

The synthesis bundle carries everything the online modules need (model set,
partition, terminal sets and gains, level-set families, index tables) and
round-trips through JSON so simulation runs never re-synthesize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._rng import philox
from . import ctrlsets, sysid
from .sets import HPolytope, MatrixZonotope, Zonotope
from .sim import Scenario, ScenarioTrace, baseline_ec_only, metric_er, run_scenario
from .supervisor import IndexTable, build_index_table
from .sysid import TrajectoryBank

AUX_COVERAGE_POINTS = 400


@dataclass
class Bundle:
    """Offline synthesis product consumed by the online loop."""

    M: MatrixZonotope
    W: Zonotope
    X_eta: HPolytope
    U: HPolytope
    cells: list
    families: list
    aux_families: list | None
    index_table: IndexTable
    meta: dict

    def to_json(self):
        return {
            "M": self.M.to_json(),
            "W": self.W.to_json(),
            "X_eta": self.X_eta.to_json(),
            "U": self.U.to_json(),
            "cells": [_cell_to_json(c) for c in self.cells],
            "families": [_family_to_json(f) for f in self.families],
            "aux_families": ([_family_to_json(f) for f in self.aux_families]
                             if self.aux_families is not None else None),
            "index_table": {
                "I1": self.index_table.I1.tolist(),
                "I2": self.index_table.I2.tolist(),
                "alpha": self.index_table.alpha,
                "beta": self.index_table.beta,
                "sorted_rows": [list(r) for r in self.index_table.sorted_rows],
            },
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj):
        cells = [_cell_from_json(c) for c in obj["cells"]]
        families = [_family_from_json(f, cells) for f in obj["families"]]
        aux = obj.get("aux_families")
        aux_families = ([_family_from_json(f, cells) for f in aux]
                        if aux is not None else None)
        it = obj["index_table"]
        return cls(
            M=MatrixZonotope.from_json(obj["M"]),
            W=Zonotope.from_json(obj["W"]),
            X_eta=HPolytope.from_json(obj["X_eta"]),
            U=HPolytope.from_json(obj["U"]),
            cells=cells,
            families=families,
            aux_families=aux_families,
            index_table=IndexTable(I1=np.array(it["I1"]), I2=np.array(it["I2"]),
                                   alpha=it["alpha"], beta=it["beta"]),
            meta=obj.get("meta", {}),
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(json.load(f))


def _cell_to_json(c: ctrlsets.EquilibriumCell):
    return {"index": c.index, "x_e": c.x_e.tolist(), "u_e": c.u_e.tolist(),
            "K": c.K.tolist(), "T0": c.T0.to_json(), "V": c.V.to_json()}


def _cell_from_json(obj):
    return ctrlsets.EquilibriumCell(
        index=obj["index"], x_e=np.array(obj["x_e"]), u_e=np.array(obj["u_e"]),
        K=np.array(obj["K"]), T0=Zonotope.from_json(obj["T0"]),
        V=HPolytope.from_json(obj["V"]))


def _family_to_json(f: ctrlsets.RoscFamily):
    return {
        "cell": f.cell.index,
        "C": [c.to_json() for c in f.C],
        "Xi": [None if x is None else x.to_json() for x in f.Xi],
        "inner": [None if z is None else z.to_json() for z in f.inner],
        "coverage": f.coverage,
        "stalled": f.stalled,
    }


def _family_from_json(obj, cells):
    return ctrlsets.RoscFamily(
        cell=cells[obj["cell"]],
        C=tuple(HPolytope.from_json(c) for c in obj["C"]),
        Xi=tuple(None if x is None else HPolytope.from_json(x) for x in obj["Xi"]),
        inner=tuple(None if z is None else Zonotope.from_json(z) for z in obj["inner"]),
        coverage=obj["coverage"],
        stalled=obj["stalled"],
    )


def identify_bank(bank: TrajectoryBank) -> MatrixZonotope:
    """Data matrices, rank check, and the consistent-model matrix zonotope."""
    d = sysid.assemble(bank)
    if not sysid.check_rank(d):
        raise ValueError("collected data fails the rank condition")
    return sysid.identify(d, sysid.noise_matrix_zonotope(bank))


def synthesize_bundle(bank: TrajectoryBank, scenario: Scenario, seeds,
                      build_aux: bool = True,
                      coverage_target: float = ctrlsets.COVERAGE_TARGET,
                      coverage_samples: int = 3000,
                      j_max: int = ctrlsets.J_MAX,
                      seed: int = 0) -> Bundle:
    """Identify the model set and synthesize cells, families, and indices."""
    M = identify_bank(bank)
    W = scenario.plant.W
    X_eta = scenario.X_eta
    U = scenario.plant.U
    A_c = M.center[:, :M.shape[0]]
    B_c = M.center[:, M.shape[0]:]
    n = M.shape[0]
    floor = 1.3 * ctrlsets.model_tightening_radius(M, X_eta, U, W)
    voronoi = ctrlsets.voronoi_partition(X_eta, seeds)
    cells = []
    for i, x_e in enumerate(seeds):
        x_e = np.asarray(x_e, dtype=float).ravel()
        u_e = np.linalg.lstsq(B_c, (np.eye(n) - A_c) @ x_e, rcond=None)[0]
        K, T0 = ctrlsets.synthesize_rci(M, x_e, u_e, W, U, X_eta,
                                        radius_floor=floor)
        cells.append(ctrlsets.EquilibriumCell(index=i, x_e=x_e, u_e=u_e,
                                              K=K, T0=T0, V=voronoi[i]))
    families = [
        ctrlsets.build_family(c, M, X_eta, U, W,
                              coverage_target=coverage_target,
                              j_max=j_max, n_samples=coverage_samples,
                              seed=seed + c.index)
        for c in cells
    ]
    aux_families = None
    if build_aux:
        aux_families = [
            ctrlsets.build_family(
                c, M, X_eta, U, W, coverage_target=1.0 - 1e-9, j_max=j_max,
                seed=seed + 100 + c.index,
                coverage_points=_all_terminal_samples(cells, seed))
            for c in cells
        ]
    table = build_index_table(cells, aux_families, scenario.alpha,
                              scenario.beta, seed=seed)
    meta = {"seed": seed, "coverage_target": coverage_target,
            "coverage": [f.coverage for f in families],
            "stalled": [f.stalled for f in families]}
    return Bundle(M=M, W=W, X_eta=X_eta, U=U, cells=cells, families=families,
                  aux_families=aux_families, index_table=table, meta=meta)


def _all_terminal_samples(cells, seed, per_cell=AUX_COVERAGE_POINTS):
    pts = []
    for c in cells:
        rng = philox(seed, 0xA0, c.index)
        beta = rng.uniform(-1, 1, size=(per_cell, c.T0.order))
        pts.append(c.T0.center + beta @ c.T0.generators.T)
    return np.vstack(pts)


def simulate(scenario: Scenario, bundle: Bundle, seed: int,
             mode: str = "proposed") -> ScenarioTrace:
    """Run one closed-loop scenario; mode in proposed | ec_only | no_attack."""
    if mode == "no_attack":
        return run_scenario(scenario, bundle, seed, attacks_enabled=False)
    if mode == "ec_only":
        return baseline_ec_only(scenario, bundle, seed)
    if mode == "proposed":
        return run_scenario(scenario, bundle, seed)
    raise ValueError(f"unknown mode {mode!r}")


def report(traces: dict) -> dict:
    """Tracking-error table over named traces (mode -> list of traces)."""
    out = {}
    for name, trs in traces.items():
        vals = [metric_er(t) for t in trs]
        out[name] = {"e_r": vals, "median": float(np.median(vals)),
                     "mean": float(np.mean(vals))}
    return out
