"""Admittance command and redundancy resolution for the augmented system.

The command stacks instrument position feedback (gain ``k_ins``) over an RCM
velocity driven by the estimated interaction force, projected onto the plane
normal to the shaft. Joint and eta rates come from a damped pseudoinverse of
the 6x8 total Jacobian plus a null-space step that pulls eta toward ``eta0``.

Sign convention for the null-space term: the step is ``-w_gain * w`` so that it
descends the cost ``0.5 * (eta - eta0)**2`` whose gradient is ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateGeometryError(ValueError):
    pass


class SingularityError(np.linalg.LinAlgError):
    pass


_SINGULAR_RCOND = 1e-12


@dataclass(frozen=True)
class GainSet:
    k_ins: np.ndarray = field(default_factory=lambda: np.array([20.0, 20.0, 20.0]))
    k_adm: float = 0.1
    eta0: float = 0.25
    lambda_dls: float = 1e-4
    w_gain: float = 1.0
    qdot_limit: float = 2.0
    f_rcm_desired: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        k = np.asarray(self.k_ins, dtype=float)
        if k.ndim == 2:
            if np.count_nonzero(k - np.diag(np.diag(k))):
                raise ValueError("k_ins must be diagonal")
            k = np.diag(k)
        elif k.ndim == 0:
            k = np.full(3, float(k))
        if k.shape != (3,) or np.any(k <= 0):
            raise ValueError("k_ins needs three positive diagonal entries")
        object.__setattr__(self, "k_ins", k)
        # k_adm = 0 is allowed as the admittance-off ablation
        if self.k_adm < 0:
            raise ValueError("k_adm must be non-negative")
        if not 0.0 < self.eta0 < 1.0:
            raise ValueError("eta0 must lie in (0, 1)")
        if self.lambda_dls < 0:
            raise ValueError("lambda_dls must be non-negative")
        if self.w_gain < 0:
            raise ValueError("w_gain must be non-negative")
        if not self.qdot_limit > 0:
            raise ValueError("qdot_limit must be positive")
        fd = np.asarray(self.f_rcm_desired, dtype=float)
        if fd.shape != (3,):
            raise ValueError("f_rcm_desired must be a 3-vector")
        object.__setattr__(self, "f_rcm_desired", fd)

    @property
    def K_ins(self) -> np.ndarray:
        return np.diag(self.k_ins)


@dataclass(frozen=True)
class ControlCommand:
    q_dot: np.ndarray
    eta_dot: float
    x_dot_cmd: np.ndarray
    e_tot: np.ndarray
    null_step: np.ndarray  # the part of (q_dot, eta_dot) contributed by the null-space term


def projection_matrix(d_ins) -> np.ndarray:
    """Rank-1 projector onto the shaft direction."""
    d = np.asarray(d_ins, dtype=float)
    n = np.linalg.norm(d)
    if n <= 1e-9:
        raise DegenerateGeometryError(f"shaft vector too short to define a direction (|d|={n:g})")
    nd = d / n
    return np.outer(nd, nd)


def admittance_velocity(f_rcm_hat, f_desired, d_ins, k_adm: float) -> np.ndarray:
    """RCM velocity from the force error, with the shaft-axis component removed."""
    f_err = np.asarray(f_rcm_hat, dtype=float) - np.asarray(f_desired, dtype=float)
    return k_adm * ((np.eye(3) - projection_matrix(d_ins)) @ f_err)


def gain_matrix(gains: GainSet, d_ins) -> np.ndarray:
    G = np.zeros((6, 6))
    G[:3, :3] = gains.K_ins
    G[3:, 3:] = gains.k_adm * (np.eye(3) - projection_matrix(d_ins))
    return G


def build_command(e_pos, f_err, gains: GainSet, d_ins) -> np.ndarray:
    """Return ``G @ e_tot`` for ``e_tot = (x_desired - x_ins, f_hat - f_desired)``."""
    e_tot = np.concatenate([np.asarray(e_pos, dtype=float), np.asarray(f_err, dtype=float)])
    return gain_matrix(gains, d_ins) @ e_tot


def eta_cost(eta: float, eta0: float) -> float:
    return 0.5 * (eta - eta0) ** 2


def null_space_gradient(eta: float, eta0: float) -> np.ndarray:
    w = np.zeros(8)
    w[7] = eta - eta0
    return w


def damped_pinv(J: np.ndarray, lambda_dls: float) -> np.ndarray:
    """``J.T @ inv(J @ J.T + lambda**2 I)``; raises on a singular undamped system."""
    JJt = J @ J.T
    if lambda_dls == 0.0:
        s = np.linalg.svd(JJt, compute_uv=False)
        if s[-1] <= _SINGULAR_RCOND * max(s[0], 1.0):
            raise SingularityError("J J^T is numerically singular; use lambda_dls > 0")
    else:
        JJt = JJt + lambda_dls ** 2 * np.eye(J.shape[0])
    return np.linalg.solve(JJt, J).T


def redundancy_terms(J_total, x_dot_cmd, w, lambda_dls: float, w_gain: float):
    """Split the solution into its task part and its null-space part."""
    J = np.asarray(J_total, dtype=float)
    J_pinv = damped_pinv(J, lambda_dls)
    task = J_pinv @ np.asarray(x_dot_cmd, dtype=float)
    N = np.eye(J.shape[1]) - J_pinv @ J
    null = N @ (-w_gain * np.asarray(w, dtype=float))
    return task, null


def solve_redundancy(J_total, x_dot_cmd, w, lambda_dls: float = 1e-4,
                     w_gain: float = 1.0) -> tuple[np.ndarray, float]:
    task, null = redundancy_terms(J_total, x_dot_cmd, w, lambda_dls, w_gain)
    sol = task + null
    return sol[:7], float(sol[7])


def saturate_rates(sol: np.ndarray, qdot_limit: float) -> np.ndarray:
    """Uniformly scale (q_dot, eta_dot) so that max |q_dot_i| <= qdot_limit."""
    peak = np.abs(sol[:7]).max()
    if peak > qdot_limit:
        return sol * (qdot_limit / peak)
    return sol


def compute_command(J_total, x_ins, x_desired, f_rcm_hat, d_ins, eta: float,
                    gains: GainSet) -> ControlCommand:
    """One full controller evaluation, from errors to saturated rates."""
    e_tot = np.concatenate([np.asarray(x_desired) - np.asarray(x_ins),
                            np.asarray(f_rcm_hat) - gains.f_rcm_desired])
    x_dot_cmd = gain_matrix(gains, d_ins) @ e_tot
    w = null_space_gradient(eta, gains.eta0)
    task, null = redundancy_terms(J_total, x_dot_cmd, w, gains.lambda_dls, gains.w_gain)
    sol = saturate_rates(task + null, gains.qdot_limit)
    return ControlCommand(sol[:7], float(sol[7]), x_dot_cmd, e_tot, null)
