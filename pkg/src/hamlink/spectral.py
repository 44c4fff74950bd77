"""Matrices A and L, their spectra, and the orthogonal split E_M = Y ⊕ Z.

Eigenvalues come from a cyclic Jacobi solver; the circulant closed form
``2 - 2cos(2πj/M)`` is kept separate so each can check the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hamlink.core import MIN_PERIOD


class JacobiError(RuntimeError):
    pass


def _round_robin(n: int) -> list[list[tuple[int, int]]]:
    """Circle-method schedule: n-1 rounds of disjoint index pairs covering every pair once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = []
        for i in range(k // 2):
            p, q = players[i], players[k - 1 - i]
            if p >= 0 and q >= 0:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, tol: float = 1e-13, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi rotations.

    Each round annihilates a set of disjoint off-diagonal pairs at once
    (round-robin ordering), so one sweep touches every pair exactly once.
    Stops when the off-diagonal Frobenius norm drops below ``tol * ||a||_F``.

    Returns:
        (eigenvalues ascending, eigenvectors as columns)
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    fro = np.linalg.norm(a)
    if n == 1 or fro == 0.0:
        return np.diag(a).copy(), v

    upper = np.triu_indices(n, 1)

    def off(x):
        return np.sqrt(2.0 * np.sum(x[upper] ** 2))

    schedule = [
        (np.array([p for p, _ in r]), np.array([q for _, q in r])) for r in _round_robin(n)
    ]
    for _ in range(max_sweeps):
        if off(a) < tol * fro:
            break
        for p, q in schedule:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(tau) > 1e150
            tau_s = np.where(big, 1.0, tau)
            t = np.where(tau_s >= 0, 1.0, -1.0) / (np.abs(tau_s) + np.sqrt(1.0 + tau_s * tau_s))
            t = np.where(big, 0.5 / np.where(big, tau, 1.0), t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rot = np.eye(n)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            v = v @ rot
    else:
        if off(a) >= tol * fro:
            raise JacobiError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _check_m(m: int) -> None:
    if int(m) != m or m < MIN_PERIOD:
        raise ValueError(f"m: must be >= {MIN_PERIOD}")


def _check_n0(m: int, n0: int) -> None:
    if int(n0) != n0 or not 3 <= n0 <= m - 2:
        raise ValueError(f"n0: must satisfy 3 <= n0 <= m-2 (m={m}), got {n0}")


def build_A(m: int) -> np.ndarray:
    """Circulant second-difference matrix with uᵀAu = Σ(Δu_s)²."""
    _check_m(m)
    eye = np.eye(m)
    return 2.0 * eye - np.roll(eye, 1, axis=1) - np.roll(eye, -1, axis=1)


def closed_form_eigenvalues_A(m: int) -> np.ndarray:
    j = np.arange(m)
    return np.sort(2.0 - 2.0 * np.cos(2.0 * np.pi * j / m))


def lambda_min(m: int) -> float:
    """Smallest positive eigenvalue of A."""
    return 2.0 * (1.0 - np.cos(2.0 * np.pi / m))


def lambda_max(m: int) -> float:
    return float(closed_form_eigenvalues_A(m)[-1])


@lru_cache(maxsize=None)
def _numeric_spectrum_A(m: int) -> tuple[float, ...]:
    w, _ = jacobi_eigh(build_A(m))
    return tuple(w.tolist())


def spectrum_A(m: int, atol: float = 1e-10) -> tuple[np.ndarray, float, float]:
    """Closed-form spectrum of A, cross-checked against the Jacobi solver.

    Raises:
        ArithmeticError: if the two routes disagree by more than ``atol``, or
            the kernel is not exactly one-dimensional.
    """
    _check_m(m)
    eigs = closed_form_eigenvalues_A(m)
    numeric = np.array(_numeric_spectrum_A(m))
    gap = np.max(np.abs(numeric - eigs))
    if gap > atol:
        raise ArithmeticError(f"closed form and Jacobi spectra of A differ by {gap:.3e}")
    if np.count_nonzero(np.abs(numeric) < atol) != 1:
        raise ArithmeticError("A must have a one-dimensional kernel")
    return eigs, lambda_min(m), float(eigs[-1])


def build_L(m: int, n0: int) -> tuple[np.ndarray, float]:
    """Matrix of the form vᵀLv = Σv_s² + 2v_{n0-1}v_{n0}, with its smallest positive eigenvalue."""
    _check_m(m)
    _check_n0(m, n0)
    lm = np.eye(m)
    i, j = n0 - 2, n0 - 1
    lm[i, j] = lm[j, i] = 1.0
    w, _ = jacobi_eigh(lm)
    positive = w[w > 1e-10]
    return lm, float(positive.min())


def _gram_schmidt(vectors: list[np.ndarray], against: list[np.ndarray], tol: float = 1e-8) -> list[np.ndarray]:
    basis = list(against)
    out = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(2):
            for b in basis:
                w = w - (b @ w) * b
        nrm = np.linalg.norm(w)
        if nrm > tol:
            w = w / nrm
            basis.append(w)
            out.append(w)
    return out


@dataclass(frozen=True, eq=False)
class SpectralData:
    m: int
    n0: int
    a_matrix: np.ndarray
    l_matrix: np.ndarray
    eigs_a: np.ndarray
    lambda_min: float
    lambda_max: float
    gamma_min: float
    basis_z: np.ndarray  # shape (2, M), rows orthonormal
    basis_y: np.ndarray  # shape (M-2, M)

    @property
    def proj_z(self) -> np.ndarray:
        return self.basis_z.T @ self.basis_z

    @property
    def proj_y(self) -> np.ndarray:
        return self.basis_y.T @ self.basis_y

    def project_z(self, u) -> np.ndarray:
        return self.basis_z.T @ (self.basis_z @ np.asarray(u, dtype=float))

    def project_y(self, u) -> np.ndarray:
        return self.basis_y.T @ (self.basis_y @ np.asarray(u, dtype=float))


@lru_cache(maxsize=64)
def decompose(m: int, n0: int = 3) -> SpectralData:
    """Assemble A, L and the orthonormal bases of Z = span{1, e_n0} and Y = Z^⊥."""
    _check_m(m)
    _check_n0(m, n0)
    a = build_A(m)
    eigs, lmin, lmax = spectrum_A(m)
    lm, gamma = build_L(m, n0)
    if abs(gamma - 1.0) > 1e-10:
        raise ArithmeticError(f"smallest positive eigenvalue of L is {gamma}, expected 1")
    e_n0 = np.zeros(m)
    e_n0[n0 - 1] = 1.0
    bz = _gram_schmidt([np.ones(m), e_n0], [])
    by = _gram_schmidt(list(np.eye(m)), bz)
    if len(bz) != 2 or len(by) != m - 2:
        raise ArithmeticError("Y ⊕ Z split has wrong dimensions")
    for arr in (a, lm, eigs):
        arr.flags.writeable = False
    basis_z = np.array(bz)
    basis_y = np.array(by)
    basis_z.flags.writeable = False
    basis_y.flags.writeable = False
    return SpectralData(
        m=m,
        n0=n0,
        a_matrix=a,
        l_matrix=lm,
        eigs_a=eigs,
        lambda_min=lmin,
        lambda_max=lmax,
        gamma_min=gamma,
        basis_z=basis_z,
        basis_y=basis_y,
    )
