"""Truncated-excitation basis, Tavis-Cummings Hamiltonian and its eigensystem.

Basis states are bare products |m photons> x |set of excited emitters>.
Eigenvectors are stored as columns of a real orthogonal matrix ``V`` with
``H_bare = V diag(E) V^T``; operators in the eigenbasis are ``V^T A V``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NonResonantLabeling
from .params import ModelParams

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, order=True)
class BasisState:
    photons: int
    excited_set: tuple

    @property
    def excitation_number(self) -> int:
        return self.photons + len(self.excited_set)

    def __str__(self):
        emitters = ",".join(str(i + 1) for i in self.excited_set)
        return f"|{self.photons};{{{emitters}}}>"


def build_basis(params: ModelParams) -> list[BasisState]:
    """All states with at most ``n_max`` excitations.

    Ordered by excitation number, then photon count descending, then the
    lexicographic set of excited emitters (0-based indices).
    """
    states = []
    for n in range(params.n_max + 1):
        for m in range(n, -1, -1):
            k = n - m
            if k > params.n_emitters:
                continue
            for combo in itertools.combinations(range(params.n_emitters), k):
                states.append(BasisState(m, combo))
    return states


def _bare_operators(basis, n_emitters):
    dim = len(basis)
    index = {s: i for i, s in enumerate(basis)}
    a = np.zeros((dim, dim))
    sigma = [np.zeros((dim, dim)) for _ in range(n_emitters)]
    for j, s in enumerate(basis):
        if s.photons > 0:
            a[index[BasisState(s.photons - 1, s.excited_set)], j] = math.sqrt(s.photons)
        for i in s.excited_set:
            rest = tuple(x for x in s.excited_set if x != i)
            sigma[i][index[BasisState(s.photons, rest)], j] = 1.0
    return a, sigma


def _gauge_fixed_multiplet(vectors, tol=1e-6):
    """Deterministic orthonormal basis of span(vectors).

    Projects the bare unit vectors onto the multiplet in enumeration order and
    Gram-Schmidt orthonormalizes them; each vector's first non-negligible
    component is made positive.
    """
    k = vectors.shape[1]
    projector = vectors @ vectors.T
    out = []
    for b in range(projector.shape[0]):
        x = projector[:, b].copy()
        for y in out:
            x -= y * (y @ x)
        norm = np.linalg.norm(x)
        if norm > tol:
            out.append(x / norm)
        if len(out) == k:
            break
    fixed = []
    for x in out:
        first = np.flatnonzero(np.abs(x) > 1e-10)[0]
        fixed.append(x * np.sign(x[first]))
    return np.array(fixed).T


def _diagonalize_by_manifold(h, excitation):
    dim = len(h)
    energies = np.zeros(dim)
    vectors = np.zeros((dim, dim))
    col = 0
    for n in sorted(set(excitation)):
        idx = np.flatnonzero(excitation == n)
        e, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        i = 0
        while i < len(e):
            j = i
            while j + 1 < len(e) and abs(e[j + 1] - e[i]) < DEGENERACY_TOL:
                j += 1
            block = _gauge_fixed_multiplet(v[:, i : j + 1])
            mean = float(np.mean(e[i : j + 1]))
            for c in range(block.shape[1]):
                vectors[idx, col] = block[:, c]
                energies[col] = mean
                col += 1
            i = j + 1
    return energies, vectors


def _indexed(tag, members):
    if len(members) == 1:
        return {members[0]: tag}
    return {m: f"{tag}{k + 1}" if tag == "D" else f"{tag}_{k + 1}" for k, m in enumerate(members)}


def _label_states(params, basis, energies, vectors, manifold):
    n_emitters = params.n_emitters
    dim = len(basis)
    index = {s: i for i, s in enumerate(basis)}
    labels = [""] * dim
    warn = abs(params.detuning) > params.rabi_splitting / 2

    def sym_vec(photons, k):
        """Normalized bare vector with ``photons`` and a symmetric k-emitter state."""
        x = np.zeros(dim)
        if k > n_emitters:
            return None
        combos = list(itertools.combinations(range(n_emitters), k))
        for c in combos:
            s = BasisState(photons, c)
            if s not in index:
                return None
            x[index[s]] = 1.0
        return x / math.sqrt(len(combos))

    def weight(states, span):
        span = [s for s in span if s is not None]
        q = np.array(span).T
        return np.sum((q.T @ vectors[:, states]) ** 2, axis=0)

    for n in sorted(set(manifold)):
        members = [i for i in range(dim) if manifold[i] == n]
        if n == 0:
            labels[members[0]] = "G"
        elif n == 1:
            w = weight(members, [sym_vec(1, 0), sym_vec(0, 1)])
            bright = [m for m, x in zip(members, w) if x > 0.5]
            if len(bright) == 2:
                lo, hi = sorted(bright, key=lambda i: energies[i])
                named = {lo: "L", hi: "U"}
                dark = [m for m in members if m not in bright]
            else:
                warn = True
                named = {}
                dark = []
                ordered = sorted(members, key=lambda i: energies[i])
                if ordered:
                    named[ordered[0]] = "L"
                if len(ordered) > 1:
                    named[ordered[-1]] = "U"
                dark = [m for m in ordered[1:-1]]
            named.update(_indexed("D", sorted(dark, key=lambda i: (energies[i], i))))
            for m, tag in named.items():
                labels[m] = tag
        elif n == 2:
            w = weight(members, [sym_vec(2, 0), sym_vec(1, 1), sym_vec(0, 2)])
            sym = sorted((m for m, x in zip(members, w) if x > 0.5), key=lambda i: energies[i])
            named = {}
            if len(sym) >= 2:
                named[sym[0]] = "L2"
                named[sym[-1]] = "U2"
            else:
                warn = True
                ordered = sorted(members, key=lambda i: energies[i])
                named[ordered[0]] = "L2"
                named[ordered[-1]] = "U2"
            rest = [m for m in members if m not in named]
            c_states = []
            if n_emitters >= 3 and rest:
                # the middle symmetric state and everything degenerate with it
                sym_weight = dict(zip(members, w))
                middle = max(rest, key=lambda m: sym_weight[m])
                c_states = [m for m in rest if abs(energies[m] - energies[middle]) < DEGENERACY_TOL]
            others = sorted((m for m in rest if m not in c_states), key=lambda i: (energies[i], i))
            half = len(others) // 2
            named.update(_indexed("C2", c_states))
            named.update(_indexed("A2", others[:half]))
            named.update(_indexed("B2", others[half:]))
            for m, tag in named.items():
                labels[m] = tag
        else:
            for k, m in enumerate(sorted(members, key=lambda i: (energies[i], i))):
                labels[m] = f"X{n}_{k + 1}"
    if warn:
        warnings.warn(
            f"polariton character ambiguous at detuning {params.detuning:.4g} eV "
            f"(splitting {params.rabi_splitting:.4g} eV); labels follow energy order",
            NonResonantLabeling,
            stacklevel=3,
        )
    return labels


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """Eigensystem of the truncated Tavis-Cummings Hamiltonian.

    ``mu_plus`` and ``mu_minus`` are a^dag and a in the eigenbasis.
    ``emitter_number_ops`` holds sigma_i^dag sigma_i in the eigenbasis.
    """

    params: ModelParams
    basis: tuple
    hamiltonian: np.ndarray
    energies: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple
    manifold: np.ndarray
    a_bare: np.ndarray
    sigma_bare: tuple
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    emitter_number_ops: tuple
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, label: str) -> int:
        """Position of the eigenstate carrying ``label``."""
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"no eigenstate labeled {label!r}; available: {list(self.labels)}") from None

    def manifold_indices(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.manifold == n)

    def transition_energy(self, upper: str, lower: str = "G") -> float:
        return float(self.energies[self.index(upper)] - self.energies[self.index(lower)])

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v.T @ op @ v


def build_hamiltonian(params: ModelParams, coupling: float | None = None) -> HamiltonianSystem:
    """Assemble and diagonalize the Hamiltonian manifold by manifold.

    ``coupling`` overrides the g derived from the splitting; pass 0 for the
    decoupled limit.
    """
    basis = build_basis(params)
    a, sigma = _bare_operators(basis, params.n_emitters)
    g = params.coupling if coupling is None else float(coupling)
    numbers = [s.T @ s for s in sigma]
    h = params.omega_c * (a.T @ a) + params.omega_0 * sum(numbers, np.zeros_like(a))
    h = h + g * sum((a.T @ s + s.T @ a for s in sigma), np.zeros_like(a))
    excitation = np.array([s.excitation_number for s in basis])
    energies, vectors = _diagonalize_by_manifold(h, excitation)
    manifold = excitation[np.argmax(np.abs(vectors), axis=0)]
    labels = _label_states(params, basis, energies, vectors, manifold)
    mu_minus = vectors.T @ a @ vectors
    mu_minus[np.abs(mu_minus) < 1e-15] = 0.0
    mu_plus = mu_minus.T.copy()
    number_ops = tuple(vectors.T @ n @ vectors for n in numbers)
    for arr in (h, energies, vectors, manifold, a, mu_plus, mu_minus, *sigma, *number_ops):
        arr.setflags(write=False)
    return HamiltonianSystem(
        params=params,
        basis=tuple(basis),
        hamiltonian=h,
        energies=energies,
        eigenvectors=vectors,
        labels=tuple(labels),
        manifold=manifold,
        a_bare=a,
        sigma_bare=tuple(sigma),
        mu_plus=mu_plus,
        mu_minus=mu_minus,
        emitter_number_ops=number_ops,
        _index={lab: i for i, lab in enumerate(labels)},
    )


def dipole_operators(system: HamiltonianSystem) -> tuple[np.ndarray, np.ndarray]:
    """(a^dag, a) in the eigenbasis; transitions out of the top manifold are truncated."""
    return system.mu_plus, system.mu_minus
