"""Actuation-channel and dual-channel attack behavior.

The shipped case study attacks only the measurement channel; these runs
exercise the other half of the attack model: the plant-side verification
must catch corrupted inputs on its own, and safety must survive attacks on
both channels at once.
"""

import dataclasses

import numpy as np

from setguard import pipeline
from setguard.sim import AttackSpec, check_safety, metric_er


def _with_attacks(scenario, attacks):
    return dataclasses.replace(scenario, attacks=tuple(attacks))


def test_actuation_ramp_triggers_plant_side_rejection(cstr_assets):
    scn = _with_attacks(cstr_assets.scenario, [
        AttackSpec(channel="actuation", window=(60, 100),
                   offset=np.zeros(2), slope=np.array([0.2, 0.2]), k_ref=59),
    ])
    tr = pipeline.simulate(scn, cstr_assets.bundle, seed=0, mode="proposed")
    audit = check_safety(tr, scn.plant)
    assert all(audit.values()), audit
    verdicts = tr.column("verdict")
    window = verdicts[60:101]
    assert any(v != "safe" for v in window), "corrupted inputs never rejected"
    f = np.array(tr.column("f"))
    assert (f[60:101] == 0).any(), "emergency controller never engaged"
    # recovery after the window
    assert (f[150:200] == 1).all()
    assert (np.array(tr.column("d"))[150:200] == 0).all()


def test_dual_channel_attack_keeps_plant_safe(cstr_assets):
    scn = _with_attacks(cstr_assets.scenario, [
        AttackSpec(channel="measurement", window=(60, 90),
                   offset=np.zeros(2), slope=np.array([0.05, 0.05]), k_ref=59),
        AttackSpec(channel="actuation", window=(70, 100),
                   offset=np.zeros(2), slope=np.array([0.1, 0.1]), k_ref=69),
    ])
    tr = pipeline.simulate(scn, cstr_assets.bundle, seed=0, mode="proposed")
    audit = check_safety(tr, scn.plant)
    assert all(audit.values()), audit
    # the detector flags the episode and tracking eventually resumes
    d = np.array(tr.column("d"))
    assert d[60:100].sum() > 0
    assert (d[200:260] == 0).all()
    assert metric_er(tr) < 10.0


def test_actuation_attack_outside_u_is_never_applied(cstr_assets):
    scn = _with_attacks(cstr_assets.scenario, [
        AttackSpec(channel="actuation", window=(60, 80),
                   offset=np.array([5.0, 0.0]), slope=np.zeros(2), k_ref=59),
    ])
    tr = pipeline.simulate(scn, cstr_assets.bundle, seed=1, mode="proposed")
    u_applied = tr.vector_column("u_applied")
    U = scn.plant.U
    assert (u_applied @ U.H.T <= U.h + 1e-9).all()
    # the received input was out of range, so the verdict says so
    verdicts = tr.column("verdict")
    assert any(v == "unsafe_input" for v in verdicts[60:81])
