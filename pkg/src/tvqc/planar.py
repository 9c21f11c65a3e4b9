"""Planar surface code: construction, syndromes, MWPM decoding.

The distance-d planar code lives on a (2d-1) x (2d-1) grid.  Qubits sit
on sites (r, c) with r + c even; X-type checks (vertices) at even r, odd
c; Z-type checks (plaquettes) at odd r, even c.  That gives
n = d^2 + (d-1)^2 qubits, d(d-1) checks of each type and one encoded
qubit.  The logical X is an X-chain down column 0, the logical Z a
Z-chain along row 0.

Decoding is independent minimum-weight perfect matching on the two
defect graphs.  X-error defects live on the plaquette grid (d-1 rows x d
columns) and terminate on the north/south boundaries; Z-error defects
live on the vertex grid (d rows x d-1 columns) and terminate on the
west/east boundaries.  Edge weights are unweighted lattice shortest-path
lengths (Manhattan distance on the defect grid); every defect is also
joined to its nearest boundary through a private virtual node, and
virtual nodes interconnect at zero weight.  The blossom algorithm from
networkx finds the exact minimum-weight perfect matching; corrections
are laid along canonical row-then-column paths.  Codes are immutable
after construction and decoding is pure, so everything is safe to share
across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import NumericalError, UsageError
from .pauli import PauliOperator


@dataclass(frozen=True)
class Syndrome:
    """Defect bits: x_defects over Z-type checks, z_defects over X-type."""

    x_defects: np.ndarray
    z_defects: np.ndarray


class PlanarLattice:
    """Coordinate bookkeeping for one code distance."""

    def __init__(self, d: int):
        self.d = d
        self.span = 2 * d - 1
        self.qubit_index = {}
        for r in range(self.span):
            for c in range(self.span):
                if (r + c) % 2 == 0:
                    self.qubit_index[(r, c)] = len(self.qubit_index)
        self.n = len(self.qubit_index)
        # row-major check coordinates on their own (i, j) grids
        self.plaquettes = [(i, j) for i in range(d - 1) for j in range(d)]
        self.vertices = [(i, j) for i in range(d) for j in range(d - 1)]

    def plaquette_qubits(self, i: int, j: int):
        """Grid neighbours of the Z-check at grid position (2i+1, 2j)."""
        r, c = 2 * i + 1, 2 * j
        cells = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        return [self.qubit_index[p] for p in cells if p in self.qubit_index]

    def vertex_qubits(self, i: int, j: int):
        """Grid neighbours of the X-check at grid position (2i, 2j+1)."""
        r, c = 2 * i, 2 * j + 1
        cells = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        return [self.qubit_index[p] for p in cells if p in self.qubit_index]

    # --- X-error (plaquette) graph geometry ---

    def plaquette_boundary_distance(self, i: int, j: int) -> int:
        return min(i + 1, self.d - 1 - i)

    def plaquette_path(self, a, b):
        """Qubits of the canonical row-then-column path between plaquettes."""
        (i1, j1), (i2, j2) = a, b
        qubits = []
        step = 1 if i2 >= i1 else -1
        for i in range(i1, i2, step):
            lo = min(i, i + step)
            qubits.append(self.qubit_index[(2 * lo + 2, 2 * j1)])
        step = 1 if j2 >= j1 else -1
        for j in range(j1, j2, step):
            lo = min(j, j + step)
            qubits.append(self.qubit_index[(2 * i2 + 1, 2 * lo + 1)])
        return qubits

    def plaquette_boundary_path(self, i: int, j: int):
        """Qubits of the straight chain to the nearest north/south boundary."""
        if i + 1 <= self.d - 1 - i:
            rows = range(0, i + 1)
        else:
            rows = range(i + 1, self.d)
        return [self.qubit_index[(2 * a, 2 * j)] for a in rows]

    # --- Z-error (vertex) graph geometry ---

    def vertex_boundary_distance(self, i: int, j: int) -> int:
        return min(j + 1, self.d - 1 - j)

    def vertex_path(self, a, b):
        (i1, j1), (i2, j2) = a, b
        qubits = []
        step = 1 if i2 >= i1 else -1
        for i in range(i1, i2, step):
            lo = min(i, i + step)
            qubits.append(self.qubit_index[(2 * lo + 1, 2 * j1 + 1)])
        step = 1 if j2 >= j1 else -1
        for j in range(j1, j2, step):
            lo = min(j, j + step)
            qubits.append(self.qubit_index[(2 * i2, 2 * lo + 2)])
        return qubits

    def vertex_boundary_path(self, i: int, j: int):
        if j + 1 <= self.d - 1 - j:
            cols = range(0, j + 1)
        else:
            cols = range(j + 1, self.d)
        return [self.qubit_index[(2 * i, 2 * b)] for b in cols]


class PlanarCode:
    """[[d^2 + (d-1)^2, 1, d]] planar code with decoding geometry."""

    def __init__(self, d: int):
        if d % 2 == 0 or not 3 <= d <= 15:
            raise UsageError(f"distance must be odd and in [3, 15], got {d}")
        self.d = d
        lat = PlanarLattice(d)
        self.lattice = lat
        self.n = lat.n

        self.z_stabilizers = []
        hz = np.zeros((len(lat.plaquettes), self.n), dtype=np.uint8)
        for k, (i, j) in enumerate(lat.plaquettes):
            z = np.zeros(self.n, dtype=np.uint8)
            z[lat.plaquette_qubits(i, j)] = 1
            hz[k] = z
            self.z_stabilizers.append(
                PauliOperator(self.n, np.zeros(self.n, dtype=np.uint8), z))

        self.x_stabilizers = []
        hx = np.zeros((len(lat.vertices), self.n), dtype=np.uint8)
        for k, (i, j) in enumerate(lat.vertices):
            x = np.zeros(self.n, dtype=np.uint8)
            x[lat.vertex_qubits(i, j)] = 1
            hx[k] = x
            self.x_stabilizers.append(
                PauliOperator(self.n, x, np.zeros(self.n, dtype=np.uint8)))

        lx = np.zeros(self.n, dtype=np.uint8)
        lx[[lat.qubit_index[(2 * a, 0)] for a in range(d)]] = 1
        self.logical_x = PauliOperator(self.n, lx,
                                       np.zeros(self.n, dtype=np.uint8))
        lz = np.zeros(self.n, dtype=np.uint8)
        lz[[lat.qubit_index[(0, 2 * b)] for b in range(d)]] = 1
        self.logical_z = PauliOperator(self.n,
                                       np.zeros(self.n, dtype=np.uint8), lz)

        self._hz = hz  # z-bits of Z-checks: detect X components
        self._hx = hx  # x-bits of X-checks: detect Z components
        self._hz.setflags(write=False)
        self._hx.setflags(write=False)


def build_planar(d: int) -> PlanarCode:
    """Construct the distance-d planar code (d odd, 3 <= d <= 15)."""
    return PlanarCode(d)


def syndrome(code: PlanarCode, error: PauliOperator) -> Syndrome:
    """Defect bits: symplectic product of the error with each generator."""
    if error.n != code.n:
        raise UsageError(f"error acts on {error.n} qubits, code has {code.n}")
    x_defects = (code._hz @ error.x_bits) % 2
    z_defects = (code._hx @ error.z_bits) % 2
    return Syndrome(x_defects.astype(np.uint8), z_defects.astype(np.uint8))


def _manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _match_defects(coords, boundary_distance):
    """Minimum-weight perfect matching of defects against each other and
    their nearest boundaries.

    Returns (pairs, total_weight) where each pair is ("dd", a, b) for a
    defect-defect match or ("db", a) for a defect-boundary match, with
    coordinates in row-major order.  Minimization is cast as maximum
    weight perfect matching with weights K - w, which is exact because
    all perfect matchings of the graph have the same cardinality.
    """
    k = len(coords)
    if k == 0:
        return [], 0
    if k == 1:
        return [("db", coords[0])], boundary_distance(*coords[0])
    big = 8 * max(len(coords), 2) + 8 * max(abs(i) + abs(j)
                                            for i, j in coords) + 16
    graph = nx.Graph()
    for a in range(k):
        for b in range(a + 1, k):
            graph.add_edge(a, b, weight=big - _manhattan(coords[a], coords[b]))
    for a in range(k):
        graph.add_edge(a, k + a, weight=big - boundary_distance(*coords[a]))
    for a in range(k):
        for b in range(a + 1, k):
            graph.add_edge(k + a, k + b, weight=big)
    matching = nx.max_weight_matching(graph, maxcardinality=True)
    pairs = []
    total = 0
    for u, v in sorted(tuple(sorted(edge)) for edge in matching):
        if u < k and v < k:
            pairs.append(("dd", coords[u], coords[v]))
            total += _manhattan(coords[u], coords[v])
        elif u < k <= v:
            if v - k != u:
                raise NumericalError("matched a defect to a foreign virtual")
            pairs.append(("db", coords[u]))
            total += boundary_distance(*coords[u])
    return pairs, total


def mwpm_decode(code: PlanarCode, s: Syndrome) -> PauliOperator:
    """Correction operator whose syndrome equals s.

    The X- and Z-defect graphs are decoded independently; ties between
    equal-weight matchings are broken deterministically by the fixed
    row-major defect ordering, so identical syndromes always produce
    identical corrections.
    """
    lat = code.lattice
    x_corr = np.zeros(code.n, dtype=np.uint8)
    z_corr = np.zeros(code.n, dtype=np.uint8)

    coords = [lat.plaquettes[idx] for idx in np.nonzero(s.x_defects)[0]]
    pairs, _ = _match_defects(coords, lat.plaquette_boundary_distance)
    for pair in pairs:
        if pair[0] == "dd":
            path = lat.plaquette_path(pair[1], pair[2])
        else:
            path = lat.plaquette_boundary_path(*pair[1])
        x_corr[path] ^= 1

    coords = [lat.vertices[idx] for idx in np.nonzero(s.z_defects)[0]]
    pairs, _ = _match_defects(coords, lat.vertex_boundary_distance)
    for pair in pairs:
        if pair[0] == "dd":
            path = lat.vertex_path(pair[1], pair[2])
        else:
            path = lat.vertex_boundary_path(*pair[1])
        z_corr[path] ^= 1

    return PauliOperator(code.n, x_corr, z_corr)


def is_logical_failure(code: PlanarCode, error: PauliOperator,
                       correction: PauliOperator) -> bool:
    """True iff error + correction flips a logical operator.

    The residual must be syndrome-free (guaranteed by mwpm_decode); a
    nonzero residual syndrome signals a decoder bug and raises.
    """
    residual = error.compose(correction)
    res_syndrome = syndrome(code, residual)
    if res_syndrome.x_defects.any() or res_syndrome.z_defects.any():
        raise NumericalError("residual error has nonzero syndrome; "
                             "decoder postcondition violated")
    return (residual.symplectic_product(code.logical_x) == 1
            or residual.symplectic_product(code.logical_z) == 1)
