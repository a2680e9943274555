"""Experiment-level acceptance checks, shared by the CLI --check flag and
the test suite.

Each check runs the built-in experiment in the variants it needs on the
given robot and evaluates one ordinal assertion:

  e1  reflex off contacts the extension stop on at least 3 of 7 impacts;
      reflex on never touches it.
  e2  postural drift with the reflex is at most half the no-reflex drift,
      for every swept parameter set.
  e3  a long release window beats plain feedback on convergence time, a
      short one loses to it, and the reflex never worsens peak deviation.
  e4  lifting with the reflex spikes tension at least as high but settles
      at most 0.8x the no-reflex steady tension; with friction removed the
      steady gap collapses below 5%, isolating friction as the mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .experiments import ExperimentDef, Variant, builtin_experiments
from .metrics import conv_time, drift, limit_contact, max_deviation, tension_stats
from .robot import Robot
from .scenario import run
from .telemetry import TelemetryLog

__all__ = ["CriterionResult", "check_experiment", "run_variant", "zero_friction", "CHECKS"]


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    details: str


def run_variant(exp: ExperimentDef, robot: Robot, variant: Variant) -> TelemetryLog:
    reflex = exp.reflex_params(variant, robot.groups)
    return run(exp.scenario, robot, reflex=reflex, feedback=exp.feedback)


def zero_friction(robot: Robot) -> Robot:
    """The same robot with all joint friction removed (static and kinetic)."""
    n = robot.model.n_joints
    joints = replace(
        robot.model.joints, mu_static=np.zeros(n), mu_kinetic=np.zeros(n)
    )
    return replace(robot, model=replace(robot.model, joints=joints))


def _variant(sweep, label):
    return next(v for v in sweep if v.label == label)


def _impact_windows(scenario):
    times = sorted(imp.t for imp in scenario.impulses)
    edges = times + [scenario.duration]
    return [(edges[i], edges[i + 1]) for i in range(len(times))]


def check_e1(robot: Robot) -> CriterionResult:
    exp = builtin_experiments(robot)["e1"]
    off = run_variant(exp, robot, _variant(exp.paper_sweep, "reflex-off"))
    on = run_variant(exp, robot, _variant(exp.paper_sweep, "reflex-on"))
    windows = _impact_windows(exp.scenario)
    joint = exp.scenario.impulses[0].joint
    hits_off = sum(
        1 for t0, t1 in windows if np.max(off.limit_force[off.window(t0, t1), joint]) > 0.0
    )
    on_contact = limit_contact(on)
    passed = hits_off >= 3 and on_contact == 0.0
    return CriterionResult(
        name="e1 protective reflex",
        passed=passed,
        details=(
            f"reflex off hit the stop on {hits_off}/{len(windows)} impacts (need >= 3); "
            f"reflex on max limit force {on_contact:g} N*m (need 0)"
        ),
    )


def check_e2(robot: Robot) -> CriterionResult:
    exp = builtin_experiments(robot)["e2"]
    joint = exp.scenario.impulses[0].joint
    t0, t1 = exp.analysis.drift_t_before, exp.analysis.drift_t_after

    def drift_of(variant):
        log = run_variant(exp, robot, variant)
        return drift(log, joint, t0, t1, exp.analysis.window)

    d_off = drift_of(_variant(exp.paper_sweep, "reflex-off"))
    parts = [f"off {d_off:.4f} rad"]
    passed = True
    for v in exp.paper_sweep:
        if not v.reflex:
            continue
        d_on = drift_of(v)
        ratio = d_on / d_off if d_off > 0 else float("inf")
        parts.append(f"{v.label} {d_on:.4f} (x{ratio:.2f})")
        passed = passed and d_on <= 0.5 * d_off
    return CriterionResult(
        name="e2 postural drift",
        passed=passed,
        details="; ".join(parts) + " (need each ratio <= 0.5)",
    )


def check_e3(robot: Robot) -> CriterionResult:
    exp = builtin_experiments(robot)["e3"]
    a = exp.analysis

    def stats(variant):
        log = run_variant(exp, robot, variant)
        ct = conv_time(log, a.conv_joint, a.conv_t_impact, a.conv_theta_thre, a.conv_direction)
        dev = max_deviation(log, a.conv_joint, a.theta_ref[a.conv_joint], a.conv_t_impact)
        return ct, dev

    ct_off, dev_off = stats(_variant(exp.paper_sweep, "reflex-off"))
    ct_on, dev_on = {}, {}
    for v in exp.paper_sweep:
        if v.reflex:
            ct_on[v.dt_loose], dev_on[v.dt_loose] = stats(v)

    ordering = ct_on[5.0] < ct_off and ct_on[1.0] > ct_off
    deviation = all(dev_on[k] <= dev_off for k in dev_on)
    return CriterionResult(
        name="e3 convergence ordering",
        passed=ordering and deviation,
        details=(
            f"conv time: off {ct_off:.2f}, dt1 {ct_on[1.0]:.2f}, dt3 {ct_on[3.0]:.2f}, "
            f"dt5 {ct_on[5.0]:.2f} s (need dt5 < off < dt1); "
            f"max deviation: off {dev_off:.3f}, on "
            + ", ".join(f"dt{k:g} {dev_on[k]:.3f}" for k in sorted(dev_on))
            + " rad (need each <= off)"
        ),
    )


def check_e4(robot: Robot) -> CriterionResult:
    def stats(bot):
        exp = builtin_experiments(bot)["e4"]
        wf = exp.analysis.window_final
        off = run_variant(exp, bot, _variant(exp.paper_sweep, "reflex-off"))
        on = run_variant(exp, bot, _variant(exp.paper_sweep, "reflex-on"))
        return tension_stats(off, wf), tension_stats(on, wf)

    (peak_off, steady_off), (peak_on, steady_on) = stats(robot)
    (_, steady_off0), (_, steady_on0) = stats(zero_friction(robot))

    gap0 = abs(steady_on0 - steady_off0) / steady_off0
    passed = (
        peak_on >= peak_off
        and steady_on <= 0.8 * steady_off
        and gap0 < 0.05
    )
    return CriterionResult(
        name="e4 lifting tensions",
        passed=passed,
        details=(
            f"peak on/off {peak_on:.0f}/{peak_off:.0f} N (need on >= off); "
            f"steady on/off {steady_on:.0f}/{steady_off:.0f} N "
            f"(x{steady_on / steady_off:.2f}, need <= 0.8); "
            f"frictionless steady gap {100 * gap0:.1f}% (need < 5%)"
        ),
    )


CHECKS = {"e1": check_e1, "e2": check_e2, "e3": check_e3, "e4": check_e4}


def check_experiment(name: str, robot: Robot) -> CriterionResult:
    return CHECKS[name](robot)
