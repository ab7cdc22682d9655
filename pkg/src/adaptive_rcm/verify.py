"""Self-checks run by ``adaptive-rcm verify``.

Each check compares an implementation against an independent route
(finite differences, SVD, direct substitution) and returns a CheckResult.
``jacobian_perturbation`` corrupts the analytic Jacobians on purpose so the
suite can be seen to fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import control, environment, estimation, manipulator, rcm

FD_STEP = 1e-6
FD_TOL = 1e-5


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def fd_position_jacobian(point_fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                         h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of a 3-vector function."""
    cols = []
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        cols.append((point_fn(x + e) - point_fn(x - e)) / (2.0 * h))
    return np.column_stack(cols)


def _ee_point(model):
    return lambda q: manipulator.forward_kinematics(model, q)[0].position


def _ins_point(model):
    return lambda q: manipulator.forward_kinematics(model, q)[1].position


def _rcm_point(model):
    def f(x):
        pe, pi = manipulator.forward_kinematics(model, x[:7])
        return rcm.rcm_position(pe.position, pi.position, x[7])
    return f


def jacobian_errors(model, q, eta, perturbation: float = 0.0) -> dict[str, float]:
    """Max-abs difference between analytic and central-difference Jacobians."""
    J_ee = manipulator.jacobian_ee(model, q) + perturbation
    J_ins = manipulator.jacobian_ins(model, q) + perturbation
    pe, pi = manipulator.forward_kinematics(model, q)
    J_rcm = rcm.jacobian_rcm(J_ee, J_ins, pi.position - pe.position, eta)
    x = np.append(q, eta)
    return {
        "J_ee": float(np.abs(J_ee - fd_position_jacobian(_ee_point(model), q)).max()),
        "J_ins": float(np.abs(J_ins - fd_position_jacobian(_ins_point(model), q)).max()),
        "J_rcm": float(np.abs(J_rcm - fd_position_jacobian(_rcm_point(model), x)).max()),
    }


def _random_unit(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def check_jacobians(n: int, rng, perturbation: float = 0.0) -> list[CheckResult]:
    out = []
    for name in manipulator.BUILTIN_MODELS:
        model = manipulator.builtin_model(name)
        worst = {"J_ee": 0.0, "J_ins": 0.0, "J_rcm": 0.0}
        for _ in range(n):
            errs = jacobian_errors(model, model.random_configuration(rng),
                                   rng.uniform(0.05, 0.95), perturbation)
            worst = {k: max(worst[k], errs[k]) for k in worst}
        for k, v in worst.items():
            out.append(CheckResult(f"{k} finite differences ({name})", v < FD_TOL,
                                   f"max |error| = {v:.2e} (tol {FD_TOL:g})"))
    return out


def check_total_jacobian_rank(n: int, rng) -> list[CheckResult]:
    out = []
    for name in manipulator.BUILTIN_MODELS:
        model = manipulator.builtin_model(name)
        bad = 0
        for _ in range(n):
            kin = manipulator.evaluate(model, model.random_configuration(rng))
            eta = rng.uniform(0.05, 0.95)
            J = rcm.total_jacobian(kin.J_ins, rcm.jacobian_rcm(kin.J_ee, kin.J_ins, kin.d_ins, eta))
            rank = np.linalg.matrix_rank(J, tol=1e-8)
            bad += rank != 6
        out.append(CheckResult(f"total Jacobian rank 6, nullity 2 ({name})", bad == 0,
                               f"{bad}/{n} configurations rank-deficient"))
    return out


def check_projector(n: int, rng) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        d = _random_unit(rng) * rng.uniform(0.05, 1.0)
        P = control.projection_matrix(d)
        worst = max(worst, np.abs(P @ P - P).max(), np.abs(P - P.T).max(),
                    np.abs((np.eye(3) - P) @ d).max())
        v = control.admittance_velocity(rng.normal(size=3), np.zeros(3), d, rng.uniform(0.01, 1))
        worst = max(worst, abs(v @ d))
    return CheckResult("projector identities and admittance perpendicularity", worst < 1e-10,
                       f"max residual {worst:.1e}")


def check_gamma_matrix(n: int, rng) -> CheckResult:
    bad_rank, worst_null = 0, 0.0
    eps = np.finfo(float).eps
    for _ in range(n):
        d = _random_unit(rng) * rng.uniform(0.1, 0.6)
        eta = rng.uniform(0.05, 0.95)
        G = estimation.build_gamma_matrix(d, eta)
        bad_rank += np.linalg.matrix_rank(G, tol=1e-8) != 5
        # zero in exact arithmetic; allow a few ulps of |d|^2 for product ordering
        residual = np.abs(G @ np.concatenate([d, -d])).max() / (eps * (d @ d))
        worst_null = max(worst_null, residual)
    ok = bad_rank == 0 and worst_null <= 4.0
    return CheckResult("force estimation matrix rank 5 and null pair", ok,
                       f"{bad_rank} rank failures, null residual {worst_null:.1f} ulp of |d|^2")


def check_estimators(n: int, rng) -> list[CheckResult]:
    worst_gamma = worst_c1 = worst_c2 = 0.0
    for _ in range(n):
        d = _random_unit(rng) * rng.uniform(0.1, 0.6)
        eta = rng.uniform(0.05, 0.95)
        f1 = rng.normal(size=3)
        f2 = rng.normal(size=3)
        gamma = rng.uniform(0.05, 0.95)
        # single force at gamma*d is a "rcm" force for a virtual eta = gamma
        w = environment.synthesize_base_wrench(f1, np.zeros(3), d, gamma)
        worst_gamma = max(worst_gamma, abs(estimation.gamma_criterion(w, d) - gamma))
        w = environment.synthesize_base_wrench(f1, np.zeros(3), d, eta)
        worst_c1 = max(worst_c1, np.abs(estimation.estimate_case1(w) - f1).max())
        w = environment.synthesize_base_wrench(f1, f2, d, eta)
        truth = np.concatenate([f2, f1])
        fi, fr = estimation.estimate_case2(w, d, eta, prior=truth)
        worst_c2 = max(worst_c2, np.abs(np.concatenate([fi, fr]) - truth).max())
    return [
        CheckResult("gamma_hat recovers single-load location", worst_gamma < 1e-9,
                    f"max error {worst_gamma:.1e}"),
        CheckResult("single-load estimator round trip", worst_c1 < 1e-12,
                    f"max error {worst_c1:.1e} N"),
        CheckResult("two-load estimator round trip (prior = truth)", worst_c2 < 1e-9,
                    f"max error {worst_c2:.1e} N"),
    ]


def check_null_space(n: int, rng) -> CheckResult:
    model = manipulator.generic_7dof()
    worst = 0.0
    for _ in range(n):
        kin = manipulator.evaluate(model, model.random_configuration(rng))
        eta = rng.uniform(0.05, 0.95)
        J = rcm.total_jacobian(kin.J_ins, rcm.jacobian_rcm(kin.J_ee, kin.J_ins, kin.d_ins, eta))
        w = rng.normal(size=8)
        _, null = control.redundancy_terms(J, np.zeros(6), w, 0.0, 1.0)
        worst = max(worst, np.linalg.norm(J @ null) / np.linalg.norm(w))
    return CheckResult("null-space step leaves constraints untouched", worst <= 1e-8,
                       f"max |J n| / |w| = {worst:.1e}")


def run_checks(n: int = 200, seed: int = 0,
               jacobian_perturbation: float = 0.0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    groups: list[Callable[[], CheckResult | list[CheckResult]]] = [
        lambda: check_jacobians(n, rng, jacobian_perturbation),
        lambda: check_total_jacobian_rank(n, rng),
        lambda: check_projector(n, rng),
        lambda: check_gamma_matrix(n, rng),
        lambda: check_estimators(n, rng),
        lambda: check_null_space(n, rng),
    ]
    results = []
    for group in groups:
        t0 = time.perf_counter()
        res = group()
        res = res if isinstance(res, list) else [res]
        dt = time.perf_counter() - t0
        for r in res:
            r.seconds = dt / len(res)
        results.extend(res)
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
