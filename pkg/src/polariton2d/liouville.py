"""Total Liouvillian, its invariant blocks and biorthogonal eigendecomposition.

The generator is stored in energy units: ``d vec(rho)/dt = L vec(rho) / hbar``.
Eigenvalues are therefore energies too, ``lambda = -Gamma - i omega``, and
time evolution of an eigenmode is ``exp(lambda t / hbar)`` with t in fs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .dissipation import brw_dephasing, lindblad_dephasing, lindblad_loss
from .errors import DefectiveLiouvillian
from .manifold import HamiltonianSystem
from .params import HBAR, BathSpec
from .superop import Superoperator, vec

CONDITION_LIMIT = 1e8
PATTERN_TOL = 1e-14


def coherent_part(system: HamiltonianSystem) -> np.ndarray:
    """-i [H, .] in the eigenbasis; diagonal with entries -i (E_a - E_b)."""
    e = system.energies
    return np.diag(-1j * (e[:, None] - e[None, :]).reshape(-1))


def assemble_liouvillian(
    system: HamiltonianSystem,
    kappa: float | None = None,
    bath: BathSpec | None = None,
    dephasing: str | None = None,
    keep_parts: bool | None = None,
) -> Superoperator:
    """-i[H, .] + kappa L_a + sum_i Gamma_i, vectorized in the eigenbasis.

    Rates default to those of ``system.params``. ``dephasing`` selects the
    Bloch-Redfield ("brw") or plain Lindblad ("lindblad") emitter term.
    Named parts are kept for small systems unless ``keep_parts`` says otherwise.
    """
    p = system.params
    kappa = p.kappa if kappa is None else kappa
    bath = p.bath if bath is None else bath
    dephasing = p.dephasing if dephasing is None else dephasing
    if keep_parts is None:
        keep_parts = system.dim <= 32

    coherent = coherent_part(system)
    loss = lindblad_loss(system, kappa).matrix
    if dephasing == "brw":
        deph = brw_dephasing(system, bath).matrix
    elif dephasing == "lindblad":
        deph = lindblad_dephasing(system, bath.gamma).matrix
    else:
        raise ValueError(f"unknown dephasing model {dephasing!r}")
    if keep_parts:
        parts = {"coherent": coherent, "loss": loss, "dephasing": deph}
        total = coherent + loss + deph
    else:
        parts = {}
        total = deph
        total += loss
        del loss
        total += coherent
        del coherent
    return Superoperator(system.dim, total, parts)


def reduced_matrix(liouvillian: Superoperator, system: HamiltonianSystem, pairs) -> np.ndarray:
    """Generator restricted to the listed (ket label, bra label) pairs."""
    idx = [(system.index(a), system.index(b)) for a, b in pairs]
    return liouvillian.restrict(idx)


# block structure -----------------------------------------------------------

ENTRY_KINDS = ("zero", "coherent", "loss", "dephasing", "both")


@dataclass
class BlockReport:
    """Invariant subspaces of a generator found by reachability.

    ``blocks`` lists index arrays (sorted); ``kinds`` is a dim^2 x dim^2 code
    table into ``ENTRY_KINDS`` when named parts were available, else None.
    ``upward`` records, per block, whether any population entry moves weight
    from a lower to a higher manifold.
    """

    dim_h: int
    blocks: list
    kinds: np.ndarray | None
    upward: list

    @property
    def sizes(self) -> list:
        return [len(b) for b in self.blocks]

    def render(self, labels=None) -> str:
        """Character map of the generator in block order: . zero, c coherent,
        k loss, g dephasing, b both."""
        if self.kinds is None:
            return "entry classification unavailable (parts not kept)"
        order = np.concatenate(self.blocks)
        glyph = np.array([".", "c", "k", "g", "b"])
        rows = []
        for r in order:
            line = "".join(glyph[self.kinds[r, order]])
            if labels is not None:
                a, b = divmod(int(r), self.dim_h)
                line = f"{labels[a]:>4}-{labels[b]:<4} " + line
            rows.append(line)
        return "\n".join(rows)


def _pattern(matrix: np.ndarray) -> np.ndarray:
    scale = np.abs(matrix).max() if matrix.size else 0.0
    return np.abs(matrix) > PATTERN_TOL * max(scale, 1.0)


def invariant_blocks(matrix: np.ndarray) -> list:
    """Strongly coupled index sets of the nonzero pattern (symmetrized)."""
    pattern = _pattern(matrix)
    graph = csr_matrix(pattern | pattern.T)
    count, comp = connected_components(graph, directed=False)
    blocks = [np.flatnonzero(comp == c) for c in range(count)]
    blocks.sort(key=lambda b: (-len(b), b[0]))
    return blocks


def block_structure(liouvillian: Superoperator, system: HamiltonianSystem | None = None) -> BlockReport:
    d = liouvillian.dim_h
    blocks = invariant_blocks(liouvillian.matrix)
    kinds = None
    if liouvillian.parts:
        parts = liouvillian.parts
        coh = _pattern(parts.get("coherent", np.zeros(1))) if "coherent" in parts else False
        loss = _pattern(parts["loss"]) if "loss" in parts else False
        deph = _pattern(parts["dephasing"]) if "dephasing" in parts else False
        kinds = np.zeros(liouvillian.shape, dtype=np.int8)
        kinds[coh & ~loss & ~deph] = 1
        kinds[loss & ~deph] = 2
        kinds[deph & ~loss] = 3
        kinds[loss & deph] = 4
    upward = []
    pattern = _pattern(liouvillian.matrix)
    for b in blocks:
        up = False
        if system is not None:
            pops = [i for i in b if i // d == i % d]
            for r in pops:
                for c in pops:
                    if r != c and pattern[r, c] and system.manifold[r // d] > system.manifold[c // d]:
                        up = True
        upward.append(up)
    return BlockReport(d, blocks, kinds, upward)


# eigendecomposition -----------------------------------------------------------


@dataclass(eq=False)
class LiouvilleEigendecomposition:
    """Right/left eigenvectors stored per invariant block.

    Eigenvalue ``i`` lives in block ``block_id[i]``; its right vector is
    column ``local[i]`` of ``right_blocks[b]`` on rows ``blocks[b]`` and its
    left vector the matching row of ``left_blocks[b]`` (the inverse), so
    left/right pairs are biorthonormal by construction.

    Labels name the |alpha><beta| component with the largest biorthogonal
    weight |V_ki (V^-1)_ik|; ``confidence`` is that weight's share.
    """

    dim_h: int
    eigenvalues: np.ndarray
    blocks: list
    right_blocks: list
    left_blocks: list
    block_id: np.ndarray
    local: np.ndarray
    labels: list
    label_index: list
    confidence: np.ndarray
    condition: float
    hbar: float = HBAR
    _offsets: list = field(default_factory=list, repr=False)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def gamma(self) -> np.ndarray:
        """Decay widths Gamma_i = -Re lambda_i (eV)."""
        return -self.eigenvalues.real

    @property
    def omega(self) -> np.ndarray:
        """Oscillation energies omega_i = -Im lambda_i (eV)."""
        return -self.eigenvalues.imag

    def label(self, i: int) -> str:
        a, b = self.labels[i]
        return f"{a}-{b}"

    def find(self, ket: str, bra: str) -> int:
        """Eigenvalue index whose dominant component is |ket><bra|."""
        for i, pair in enumerate(self.labels):
            if pair == (ket, bra):
                return i
        raise KeyError(f"no Liouvillian eigenvector dominated by |{ket}><{bra}|")

    def eigenvalue(self, ket: str, bra: str) -> complex:
        return complex(self.eigenvalues[self.find(ket, bra)])

    # coordinate changes, all blockwise -----------------------------------

    def to_coeffs(self, x: np.ndarray) -> np.ndarray:
        """c = V^{-1} x for vectorized operators (columns of x)."""
        x = np.asarray(x)
        out = np.zeros((self.size,) + x.shape[1:], dtype=complex)
        for b, idx in enumerate(self.blocks):
            o = self._offsets[b]
            out[o : o + len(idx)] = self.left_blocks[b] @ x[idx]
        return out

    def from_coeffs(self, c: np.ndarray) -> np.ndarray:
        """x = V c."""
        c = np.asarray(c)
        out = np.zeros((self.dim_h**2,) + c.shape[1:], dtype=complex)
        for b, idx in enumerate(self.blocks):
            o = self._offsets[b]
            out[idx] = self.right_blocks[b] @ c[o : o + len(idx)]
        return out

    def rows_times_right(self, r: np.ndarray) -> np.ndarray:
        """r V for row vectors r (shape (..., dim^2))."""
        r = np.asarray(r)
        out = np.zeros(r.shape[:-1] + (self.size,), dtype=complex)
        for b, idx in enumerate(self.blocks):
            o = self._offsets[b]
            out[..., o : o + len(idx)] = r[..., idx] @ self.right_blocks[b]
        return out

    def rows_times_left(self, r: np.ndarray) -> np.ndarray:
        """r V^{-1} for row vectors r in eigen-coordinates."""
        r = np.asarray(r)
        out = np.zeros(r.shape[:-1] + (self.dim_h**2,), dtype=complex)
        for b, idx in enumerate(self.blocks):
            o = self._offsets[b]
            out[..., idx] = r[..., o : o + len(idx)] @ self.left_blocks[b]
        return out

    def right_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim_h**2, dtype=complex)
        b = self.block_id[i]
        v[self.blocks[b]] = self.right_blocks[b][:, self.local[i]]
        return v

    def left_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim_h**2, dtype=complex)
        b = self.block_id[i]
        v[self.blocks[b]] = self.left_blocks[b][self.local[i], :]
        return v

    def right_matrix(self) -> np.ndarray:
        return self.from_coeffs(np.eye(self.size))

    def left_matrix(self) -> np.ndarray:
        return self.to_coeffs(np.eye(self.dim_h**2))

    def reconstruct(self) -> np.ndarray:
        """V diag(lambda) V^{-1} as a dense matrix."""
        return self.from_coeffs(self.eigenvalues[:, None] * self.left_matrix())

    def steady_state_index(self) -> int:
        return int(np.argmin(np.abs(self.eigenvalues)))


CLUSTER_TOL = 1e-9


def _orthonormalize_clusters(m, w, v, tol):
    """Replace eigenvectors of each exactly degenerate eigenvalue by an
    orthonormal basis of their span.

    Any basis of an eigenspace is valid, and the one returned by the dense
    solver can be nearly parallel (dark-state multiplets), which inflates the
    condition number of V by orders of magnitude. A cluster whose orthonormal
    basis is not annihilated by (m - w) is a Jordan block; it is left alone so
    the condition check reports it.
    """
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    w = w.copy()
    v = v.copy()
    free = np.ones(len(w), dtype=bool)
    for i in range(len(w)):
        if not free[i]:
            continue
        cluster = np.flatnonzero(free & (np.abs(w - w[i]) < tol))
        free[cluster] = False
        if len(cluster) > 1:
            q, _ = np.linalg.qr(v[:, cluster])
            mean = w[cluster].mean()
            if np.abs(m @ q - mean * q).max() > 1e-8 * scale:
                continue
            v[:, cluster] = q
            w[cluster] = mean
    return w, v


def _eig_block(m):
    w, v = scipy.linalg.eig(m, overwrite_a=False, check_finite=False)
    v = v / np.linalg.norm(v, axis=0)
    w, v = _orthonormalize_clusters(m, w, v, CLUSTER_TOL * max(1.0, float(np.abs(w).max(initial=0.0))))
    vi = np.linalg.inv(v)
    cond = np.linalg.norm(v, 1) * np.linalg.norm(vi, 1)
    return w, v, vi, cond


def diagonalize(
    liouvillian: Superoperator,
    system: HamiltonianSystem | None = None,
    strategy: str = "blocks",
    condition_limit: float = CONDITION_LIMIT,
) -> LiouvilleEigendecomposition:
    """Dense non-Hermitian eigendecomposition.

    ``strategy="blocks"`` diagonalizes each invariant block separately (same
    spectrum, far cheaper for many emitters); ``"full"`` uses one dense solve.
    Left eigenvectors are the inverse of the right-eigenvector matrix.
    Raises DefectiveLiouvillian when a block's 1-norm condition number exceeds
    ``condition_limit``.
    """
    m = liouvillian.matrix
    d = liouvillian.dim_h
    if strategy == "blocks":
        blocks = invariant_blocks(m)
    elif strategy == "full":
        blocks = [np.arange(d * d)]
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    values, rights, lefts, block_id, local, offsets = [], [], [], [], [], []
    worst = 0.0
    offset = 0
    for b, idx in enumerate(blocks):
        w, v, vi, cond = _eig_block(m[np.ix_(idx, idx)])
        worst = max(worst, cond)
        if cond > condition_limit:
            raise DefectiveLiouvillian(cond, params=system.params if system is not None else None, block=b)
        values.append(w)
        rights.append(v)
        lefts.append(vi)
        block_id.append(np.full(len(idx), b))
        local.append(np.arange(len(idx)))
        offsets.append(offset)
        offset += len(idx)

    eigenvalues = np.concatenate(values)
    labels, label_index, confidence = [], [], []
    names = system.labels if system is not None else [str(i) for i in range(d)]
    for b, idx in enumerate(blocks):
        # biorthogonal weights |V_ki (V^-1)_ik| sum to one per mode and, unlike the
        # right vector alone, give zero GG weight to every decaying population mode
        weights = np.abs(rights[b] * lefts[b].T)
        top = np.argmax(weights, axis=0)  # first index wins ties
        conf = weights[top, np.arange(weights.shape[1])] / weights.sum(axis=0)
        for k in range(weights.shape[1]):
            alpha, beta = divmod(int(idx[top[k]]), d)
            labels.append((names[alpha], names[beta]))
            label_index.append((alpha, beta))
            confidence.append(conf[k])

    return LiouvilleEigendecomposition(
        dim_h=d,
        eigenvalues=eigenvalues,
        blocks=blocks,
        right_blocks=rights,
        left_blocks=lefts,
        block_id=np.concatenate(block_id),
        local=np.concatenate(local),
        labels=labels,
        label_index=label_index,
        confidence=np.array(confidence),
        condition=worst,
        _offsets=offsets,
    )


def propagate(eig: LiouvilleEigendecomposition, rho0, t):
    """Evolve a vectorized (or dim x dim) operator for time(s) t in fs.

    Scalar t returns one vector; an array of times returns shape (len(t), dim^2).
    """
    x = np.asarray(rho0, dtype=complex)
    if x.ndim == 2:
        x = vec(x)
    c = eig.to_coeffs(x)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    phases = np.exp(np.outer(times, eig.eigenvalues) / eig.hbar)
    out = eig.from_coeffs((phases * c[None, :]).T).T
    return out[0] if np.ndim(t) == 0 else out


def frequency_shifts(eig: LiouvilleEigendecomposition, system: HamiltonianSystem) -> np.ndarray:
    """pi_ab per mode: oscillation frequency minus the bare gap E_a - E_b of its label (eV).

    A diagnostic only; zero for populations and for closed systems.
    """
    e = system.energies
    gaps = np.array([e[a] - e[b] for a, b in eig.label_index])
    return eig.omega - gaps
