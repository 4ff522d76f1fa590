"""Controllability Gramian of the steering window, blockwise over modes.

The input map feeds the velocity slot only, b = (0, 1)^T, so on the window
[tau - delta, tau] the Gramian of one mode is

    Q = integral_0^delta  (exp(K s) b) (exp(K s) b)^T  ds,

computed here in energy coordinates (the diagonal similarity diag(lambda, 1)
absorbed on both the map and its adjoint), where the blocks are symmetric
positive definite and the Euclidean norm agrees with the state-space energy
norm.  Two independent evaluation paths are provided: an exact antiderivative
using the eigen-expansion of exp(K s) b (production) and composite
Gauss-Legendre quadrature (oracle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .semigroup import ModeBlock, _require_distinct_roots
from .spectral import ModeSet

# Per-panel span |2 rho_2| * width kept below this so 64-node Gauss-Legendre
# stays converged to machine precision even for the stiffest retained mode.
PANEL_SPAN = 50.0


@dataclass(frozen=True)
class SteerWindow:
    """Final-interval steering window [tau - delta, tau].

    delta = 0 is admitted as a degenerate probe (empty window, zero Gramian);
    every steering operation requires delta > 0.
    """

    tau: float
    delta: float

    def __post_init__(self):
        if self.tau <= 0:
            raise InvalidArgumentError("tau must be positive")
        if not 0 <= self.delta <= self.tau:
            raise InvalidArgumentError("delta must lie in [0, tau]")

    @property
    def start(self) -> float:
        return self.tau - self.delta


@dataclass(frozen=True)
class ModeGramian:
    """Symmetric 2x2 Gramian block of one mode, energy coordinates."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.shape != (2, 2):
            raise InvalidArgumentError("Gramian block must be 2x2")

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def positive_definite(self) -> bool:
        return bool(self.eigenvalues()[0] > 0)


@dataclass(frozen=True)
class GramianSet:
    """Per-mode Gramian blocks stacked as an (N, 2, 2) array."""

    blocks: np.ndarray
    min_eigenvalue: float
    positive_definite: bool

    @property
    def count(self) -> int:
        return int(self.blocks.shape[0])

    @classmethod
    def from_blocks(cls, blocks) -> "GramianSet":
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[1:] != (2, 2):
            raise InvalidArgumentError("blocks must have shape (N, 2, 2)")
        min_eig = float(np.linalg.eigvalsh(blocks)[:, 0].min())
        return cls(blocks, min_eig, min_eig > 0)


def quadrature_panels(block: ModeBlock, delta: float) -> int:
    """Panels needed so each panel's stiffest decay span stays moderate."""
    _, r2 = block.roots()
    return max(1, int(np.ceil(2.0 * abs(r2) * delta / PANEL_SPAN)))


def _input_response(block: ModeBlock, s: np.ndarray):
    """Columns exp(K s) b in energy coordinates, for an array of times s."""
    r1, r2 = block.roots()
    e1 = np.exp(r1 * s)
    e2 = np.exp(r2 * s)
    dr = r1 - r2
    g1 = block.lam * (e1 - e2) / dr
    g2 = (r1 * e1 - r2 * e2) / dr
    return g1, g2


def gramian_mode_quadrature(
    block: ModeBlock, window: SteerWindow, nodes: int = 64
) -> ModeGramian:
    """Gramian block by composite Gauss-Legendre quadrature.

    ``nodes`` points per panel; the panel count grows with the stiffness of
    the mode so the rule stays converged for every retained mode.
    """
    if nodes < 2:
        raise InvalidArgumentError("quadrature needs at least 2 nodes")
    delta = window.delta
    if delta == 0:
        return ModeGramian(np.zeros((2, 2)))
    x, wts = np.polynomial.legendre.leggauss(nodes)
    Q = np.zeros((2, 2))
    panels = quadrature_panels(block, delta)
    width = delta / panels
    for p in range(panels):
        lo = p * width
        s = lo + 0.5 * width * (x + 1.0)
        ww = 0.5 * width * wts
        g1, g2 = _input_response(block, s)
        Q[0, 0] += np.sum(ww * g1 * g1)
        Q[0, 1] += np.sum(ww * g1 * g2)
        Q[1, 1] += np.sum(ww * g2 * g2)
    Q[1, 0] = Q[0, 1]
    return ModeGramian(0.5 * (Q + Q.T))


def gramian_mode_closedform(block: ModeBlock, window: SteerWindow) -> ModeGramian:
    """Gramian block by exact antiderivative evaluation.

    Expanding exp(K s) b over the eigenvectors turns every entry into a sum
    of terms c_i c_k (exp((rho_i + rho_k) delta) - 1) / (rho_i + rho_k).
    """
    _require_distinct_roots(block.beta)
    delta = window.delta
    if delta == 0:
        return ModeGramian(np.zeros((2, 2)))
    r1, r2 = block.roots()
    c = 1.0 / (r1 - r2)
    vecs = (np.array([block.lam, r1]), np.array([block.lam, r2]))
    coef = (c, -c)
    rhos = (r1, r2)
    Q = np.zeros((2, 2))
    for i in range(2):
        for k in range(2):
            rr = rhos[i] + rhos[k]
            E = (np.exp(rr * delta) - 1.0) / rr
            Q += coef[i] * coef[k] * E * np.outer(vecs[i], vecs[k])
    return ModeGramian(0.5 * (Q + Q.T))


def assemble_gramian(modes: ModeSet, beta: float, window: SteerWindow) -> GramianSet:
    """Closed-form Gramian blocks for every mode, with the spectral summary."""
    blocks = np.stack(
        [
            gramian_mode_closedform(ModeBlock(lam, beta), window).matrix
            for lam in modes.lambdas
        ]
    )
    min_eig = float(np.linalg.eigvalsh(blocks)[:, 0].min())
    return GramianSet(blocks, min_eig, bool(min_eig > 0 and window.delta > 0))


def solve_regularized(gramians: GramianSet, alpha: float, rhs: np.ndarray) -> np.ndarray:
    """Blockwise solution eta of (alpha I + Q_j) eta_j = rhs_j.

    ``rhs`` holds one energy-coordinate pair per mode, shape (N, 2); the
    result has the same shape.  Direct 2x2 solves, no factorisation reuse.
    """
    if alpha <= 0:
        raise InvalidArgumentError("regularisation parameter must be positive")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (gramians.count, 2):
        raise InvalidArgumentError("rhs must have shape (N, 2)")
    systems = gramians.blocks + alpha * np.eye(2)[None, :, :]
    return np.linalg.solve(systems, rhs[:, :, None])[:, :, 0]
