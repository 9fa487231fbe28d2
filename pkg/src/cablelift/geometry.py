"""Minimal geometric toolbox for rotations (SO(3)) and unit vectors (S2).

Conventions used throughout the package:
  * rotation matrices map body coordinates to inertial coordinates,
  * body angular velocity Omega satisfies Rdot = R * hat(Omega),
  * cable directions q are unit vectors with qdot = omega x q, omega . q = 0.
"""

from __future__ import annotations

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

ROTATION_TOL = 1e-9
UNIT_TOL = 1e-9


class BranchError(ValueError):
    """Rotation logarithm requested too close to the angle-pi branch cut."""


class ChartError(ValueError):
    """State lies outside the local chart a mapping is defined on."""


def hat(v):
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(m, tol=1e-8):
    """Inverse of hat. Rejects matrices that are not skew-symmetric."""
    m = np.asarray(m, dtype=float)
    sym = m + m.T
    if np.max(np.abs(sym)) > tol:
        raise ValueError(f"matrix is not skew-symmetric (|M+M^T|_max = {np.max(np.abs(sym)):.3e})")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def is_rotation(r, tol=ROTATION_TOL):
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    return (np.max(np.abs(r.T @ r - np.eye(3))) <= tol) and abs(np.linalg.det(r) - 1.0) <= tol


def check_rotation(r, tol=ROTATION_TOL, name="R"):
    if not is_rotation(r, tol):
        raise ValueError(f"{name} is not a rotation matrix within tolerance {tol}")


def check_unit(q, tol=UNIT_TOL, name="q"):
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > tol:
        raise ValueError(f"{name} is not unit length within tolerance {tol}")


def normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def polar_project(m):
    """Nearest rotation matrix in the Frobenius sense (polar factor via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def exp_so3(v):
    """Rotation matrix exp(hat(v)), Rodrigues form with a series fallback near zero."""
    v = np.asarray(v, dtype=float)
    th = np.linalg.norm(v)
    vh = hat(v)
    if th < 1e-6:
        # second-order series coefficients, exact to machine precision at this scale
        a = 1.0 - th * th / 6.0
        b = 0.5 - th * th / 24.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / (th * th)
    return np.eye(3) + a * vh + b * (vh @ vh)


def log_so3(r, branch_tol=1e-6):
    """Rotation vector of R on the principal branch (angle < pi).

    Raises BranchError within branch_tol of angle pi, where the axis sign
    is ambiguous.
    """
    r = np.asarray(r, dtype=float)
    c = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    th = np.arccos(c)
    if th > np.pi - branch_tol:
        raise BranchError(f"rotation angle {th:.9f} within {branch_tol} of pi; axis ambiguous")
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if th < 1e-8:
        return 0.5 * w
    return (th / (2.0 * np.sin(th))) * w


def dlog_so3_inv_rate(eta, omega):
    """Time derivative of eta = log(R) given body rate Omega, Rdot = R hat(Omega).

    Computes J_r(eta)^{-1} @ Omega where J_r is the right Jacobian of SO(3).
    """
    eta = np.asarray(eta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    th = np.linalg.norm(eta)
    eh = hat(eta)
    if th < 1e-6:
        c = 1.0 / 12.0 + th * th / 720.0
    else:
        c = 1.0 / (th * th) - (1.0 + np.cos(th)) / (2.0 * th * np.sin(th))
    return omega + 0.5 * (eh @ omega) + c * (eh @ (eh @ omega))


def so3_error(r_d, r):
    """Attitude error vector 0.5 * vee(R_d^T R - R^T R_d)."""
    r_d = np.asarray(r_d, dtype=float)
    r = np.asarray(r, dtype=float)
    m = r_d.T @ r
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def s2_error(q_d, q):
    """Direction error cross(q_d, q); always perpendicular to q_d."""
    return np.cross(np.asarray(q_d, dtype=float), np.asarray(q, dtype=float))


def config_error_cable(q_d, q):
    """Scalar direction error 1 - q_d . q, in [0, 2], zero iff q == q_d."""
    return 1.0 - float(np.dot(q_d, q))


def config_error_payload(r_d, r):
    """Scalar attitude error 0.5 * tr(I - R_d^T R), in [0, 2], zero iff R == R_d."""
    return 0.5 * float(np.trace(np.eye(3) - np.asarray(r_d).T @ np.asarray(r)))


def rotation_zyx(roll, pitch, yaw=0.0):
    """Rotation from Z-Y-X intrinsic Euler angles: R = Rz(yaw) Ry(pitch) Rx(roll)."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def euler_zyx(r):
    """(roll, pitch, yaw) of R = Rz(yaw) Ry(pitch) Rx(roll); pitch away from +-pi/2."""
    r = np.asarray(r, dtype=float)
    pitch = -np.arcsin(np.clip(r[2, 0], -1.0, 1.0))
    roll = np.arctan2(r[2, 1], r[2, 2])
    yaw = np.arctan2(r[1, 0], r[0, 0])
    return roll, pitch, yaw


def euler_rates_zyx(roll, pitch, omega):
    """Euler angle rates (droll, dpitch, dyaw) from the body angular velocity."""
    sr, cr = np.sin(roll), np.cos(roll)
    cp = np.cos(pitch)
    tp = np.tan(pitch)
    e = np.array([
        [1.0, sr * tp, cr * tp],
        [0.0, cr, -sr],
        [0.0, sr / cp, cr / cp],
    ])
    return e @ np.asarray(omega, dtype=float)
