"""Homogeneous-space group actions used by the integrators.

Three concrete geometries are provided:

* rotations acting on the unit sphere (rigid body),
* GL(2) acting on the punctured plane by matrix-vector product (Van der Pol
  in first-order form),
* SE(3) acting on the dual of its algebra by the coadjoint action (heavy
  top).

Each geometry packages the same small contract: linear operations on
algebra elements, the group exponential, the action on points, the
infinitesimal action (the vector field generated by an algebra element),
and an ambient Euclidean metric.  Points and algebra elements are plain
numpy arrays; group elements are whatever the geometry finds convenient
(matrices, or a rotation/translation pair).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Input outside the operation's mathematical domain."""


# ------------------------------------------------------------ so(3) basics

def hat(v) -> np.ndarray:
    """Skew matrix of a 3-vector: hat(v) @ w == cross(v, w)."""
    v = np.asarray(v, float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(M) -> np.ndarray:
    """Inverse of hat.  Rejects matrices that are not skew within 1e-12."""
    M = np.asarray(M, float)
    if M.shape != (3, 3) or np.max(np.abs(M + M.T)) > 1e-12:
        raise DomainError("vee expects an antisymmetric 3x3 matrix")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def so3_exp(v) -> np.ndarray:
    """Rotation matrix exp(hat(v)) by the Rodrigues formula.

    Below theta = 1e-4 the two trigonometric quotients switch to short
    Taylor expansions; the closed forms lose digits to cancellation there.
    """
    v = np.asarray(v, float)
    K = hat(v)
    t2 = float(v @ v)
    if t2 < 1e-8:  # theta < 1e-4
        A = 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 ** 3 / 5040.0
        B = 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 ** 3 / 40320.0
    else:
        t = math.sqrt(t2)
        A = math.sin(t) / t
        B = (1.0 - math.cos(t)) / t2
    return np.eye(3) + A * K + B * (K @ K)


# ------------------------------------------------------------- gl(2) basics

def gl2_exp(A) -> np.ndarray:
    """Exponential of a real 2x2 matrix in closed form.

    Writing A = mu*I + B with tr(B) = 0 and D = mu^2 - det(A) = -det(B),
    exp(A) = e^mu (C(D) I + S(D) B) where C, S are cosh/cos and sinhc/sinc
    depending on the sign of D.  Within 1e-6 of the branch point D = 0 both
    are evaluated by their common power series in D.

    For strongly hyperbolic input (large sqrt(D)) the e^mu cosh/sinh
    products are rearranged into the two eigenvalue exponentials
    e^(mu +- sqrt(D)) so that stiff but contractive matrices do not
    overflow in intermediates; genuinely divergent input yields
    non-finite entries rather than an exception.
    """
    A = np.asarray(A, float)
    mu = 0.5 * (A[0, 0] + A[1, 1])
    B = A - mu * np.eye(2)
    D = mu * mu - (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    if abs(D) < 1e-6:
        C = 1.0 + D / 2.0 + D * D / 24.0 + D ** 3 / 720.0 + D ** 4 / 40320.0
        S = 1.0 + D / 6.0 + D * D / 120.0 + D ** 3 / 5040.0 + D ** 4 / 362880.0
    elif D > 0.0:
        s = math.sqrt(D)
        if s > 30.0 or mu + s > 700.0:
            with np.errstate(over="ignore", invalid="ignore"):
                ep = float(np.exp(mu + s))
                em = float(np.exp(mu - s))
                return 0.5 * (ep + em) * np.eye(2) + 0.5 * (ep - em) / s * B
        C = math.cosh(s)
        S = math.sinh(s) / s
    else:
        s = math.sqrt(-D)
        C = math.cos(s)
        S = math.sin(s) / s
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.exp(mu)) * (C * np.eye(2) + S * B)


# ------------------------------------------------------------- se(3) basics

@dataclass(frozen=True)
class Se3Element:
    """Group element (g, u): rotation matrix and translation vector.

    Composition follows (g, u) * (h, v) = (g h, g v + u).
    """
    rot: np.ndarray
    trans: np.ndarray

    def compose(self, other: "Se3Element") -> "Se3Element":
        return Se3Element(self.rot @ other.rot,
                          self.rot @ other.trans + self.trans)

    def inverse(self) -> "Se3Element":
        return Se3Element(self.rot.T, -(self.rot.T @ self.trans))

    @staticmethod
    def identity() -> "Se3Element":
        return Se3Element(np.eye(3), np.zeros(3))


def se3_bracket(a, b) -> np.ndarray:
    """Algebra bracket [(xi,u),(eta,v)] = (xi x eta, xi x v - eta x u)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    xi, u = a[:3], a[3:]
    eta, v = b[:3], b[3:]
    return np.concatenate([np.cross(xi, eta),
                           np.cross(xi, v) - np.cross(eta, u)])


def se3_exp(a) -> Se3Element:
    """Exponential of (xi, u): rotation so3_exp(xi) and translation V(xi) u
    with V the convergent series sum_m hat(xi)^m / (m+1)!.
    """
    a = np.asarray(a, float)
    xi, u = a[:3], a[3:]
    K = hat(xi)
    t2 = float(xi @ xi)
    if t2 < 1e-8:
        B = 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 ** 3 / 40320.0
        C = 1 / 6 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 ** 3 / 362880.0
    else:
        t = math.sqrt(t2)
        B = (1.0 - math.cos(t)) / t2
        C = (t - math.sin(t)) / (t2 * t)
    V = np.eye(3) + B * K + C * (K @ K)
    return Se3Element(so3_exp(xi), V @ u)


def coadjoint_act(ge: Se3Element, m) -> np.ndarray:
    """Coadjoint action of (g, u) on (mu, beta):
    (g^T (mu - u x beta), g^T beta)."""
    m = np.asarray(m, float)
    mu, beta = m[:3], m[3:]
    g, u = ge.rot, ge.trans
    return np.concatenate([g.T @ (mu - np.cross(u, beta)), g.T @ beta])


# ----------------------------------------------------------- action contract

class GroupAction(ABC):
    """Contract a geometry implements for the commutator-free stepper."""

    name: str = "abstract"

    @abstractmethod
    def algebra_zero(self):
        """Zero element of the Lie algebra, in the representation f uses."""

    def algebra_axpy(self, coeff: float, v, acc):
        """acc + coeff * v (algebra elements are numpy arrays here)."""
        return acc + coeff * v

    @abstractmethod
    def exp(self, v):
        """Group exponential of an algebra element."""

    @abstractmethod
    def act(self, g, p):
        """Apply a group element to a point."""

    @abstractmethod
    def infinitesimal(self, v, p):
        """d/dt at t=0 of act(exp(t v), p), as an ambient vector."""

    def ambient_norm(self, p) -> float:
        return float(np.linalg.norm(np.asarray(p, float).ravel()))

    def ambient_distance(self, p, q) -> float:
        return float(np.linalg.norm(
            (np.asarray(p, float) - np.asarray(q, float)).ravel()))


class So3SphereAction(GroupAction):
    """Rotations acting on vectors in R^3 (restricting to the sphere)."""

    name = "so3-sphere"

    def algebra_zero(self):
        return np.zeros(3)

    def exp(self, v):
        return so3_exp(v)

    def act(self, g, p):
        return g @ p

    def infinitesimal(self, v, p):
        return np.cross(v, p)


class Gl2PlaneAction(GroupAction):
    """Invertible 2x2 matrices acting on the punctured plane."""

    name = "gl2-plane"

    def algebra_zero(self):
        return np.zeros((2, 2))

    def exp(self, v):
        return gl2_exp(v)

    def act(self, g, p):
        return g @ p

    def infinitesimal(self, v, p):
        return v @ p

    def ambient_norm(self, p) -> float:
        return float(np.linalg.norm(p))


class Se3CoadjointAction(GroupAction):
    """SE(3) acting on (mu, beta) pairs by the coadjoint action.

    This is a right action: act(a.compose(b), m) equals
    act(b, act(a, m)).  Applying group elements in evaluation order
    therefore composes their flows in the same order as for the matrix
    geometries.
    """

    name = "se3-coadjoint"

    def algebra_zero(self):
        return np.zeros(6)

    def exp(self, v):
        return se3_exp(v)

    def act(self, g, p):
        return coadjoint_act(g, p)

    def infinitesimal(self, v, p):
        v = np.asarray(v, float)
        p = np.asarray(p, float)
        xi, u = v[:3], v[3:]
        mu, beta = p[:3], p[3:]
        return np.concatenate([-np.cross(xi, mu) - np.cross(u, beta),
                               -np.cross(xi, beta)])
