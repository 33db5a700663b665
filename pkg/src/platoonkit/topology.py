"""Platoon communication topologies and the Laplacian-plus-pinning algebra.

A platoon has one leader (index 0) and N followers (1..N).  The follower
network is a 0/1 adjacency matrix ``a[i, j] = 1`` iff follower i+1 receives
state information from follower j+1; the pinning vector marks followers that
receive the leader's state directly.  The coupling matrix

    M = D - A + P

(degree minus adjacency plus pinning) governs per-block closed-loop
stability: lower triangular for look-ahead families, symmetric for
bidirectional families.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LeaderUnreachableError, TopologyError

DIRECTED_KINDS = ("PF", "PFL", "TPF", "TPFL", "rPF", "rPFL")
UNDIRECTED_KINDS = ("BD", "BDL", "rBD", "rBDL")
NAMED_KINDS = DIRECTED_KINDS + UNDIRECTED_KINDS

# tolerance for treating a computed eigenvalue as real
_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class Topology:
    """Immutable follower graph plus leader pinning.

    adjacency[i, j] = 1 iff follower i+1 hears follower j+1 (zero diagonal);
    pinning[i] = 1 iff follower i+1 hears the leader.
    """

    n_followers: int
    adjacency: np.ndarray
    pinning: np.ndarray
    kind_label: str = "custom"
    range: int = 1

    def __post_init__(self):
        n = self.n_followers
        adj = np.asarray(self.adjacency, dtype=float)
        pin = np.asarray(self.pinning, dtype=float)
        if n < 1:
            raise TopologyError("platoon needs at least one follower")
        if adj.shape != (n, n):
            raise TopologyError(f"adjacency must be {n}x{n}, got {adj.shape}")
        if pin.shape != (n,):
            raise TopologyError(f"pinning must have length {n}, got {pin.shape}")
        if not np.isin(adj, (0.0, 1.0)).all() or not np.isin(pin, (0.0, 1.0)).all():
            raise TopologyError("adjacency and pinning entries must be 0 or 1")
        if np.diagonal(adj).any():
            raise TopologyError("adjacency diagonal must be zero")
        if self.kind_label in ("BD", "BDL", "rBD", "rBDL") and not np.array_equal(adj, adj.T):
            raise TopologyError(f"{self.kind_label} adjacency must be symmetric")
        adj.setflags(write=False)
        pin.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "pinning", pin)

    @property
    def degree(self) -> np.ndarray:
        """In-degree of each follower (row sums of the adjacency)."""
        return self.adjacency.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degree) - self.adjacency

    def coupling_matrix(self) -> np.ndarray:
        """M = L + P."""
        return self.laplacian() + np.diag(self.pinning)


@dataclass(frozen=True)
class CouplingSpectrum:
    """Spectrum of the coupling matrix M = L + P.

    Eigenvalues are sorted by ascending real part (ties by ascending
    imaginary part).  For lower-triangular M they are read off the diagonal
    exactly; for symmetric M a symmetric solver is used.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    min_eig: float
    max_eig: float
    is_triangular: bool
    is_symmetric: bool
    kind_label: str = "custom"

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def real_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues.real


def build_named(kind: str, n_followers: int, range: int = 1) -> Topology:
    """Construct one of the canonical platoon topologies.

    Look-ahead families (directed): PF, PFL, TPF, TPFL, rPF, rPFL — follower i
    hears up to 1, 2 or r nearest predecessors.  Bidirectional families
    (undirected): BD, BDL, rBD, rBDL — follower i hears up to 1 or r nearest
    neighbors on each side.  Plain kinds pin follower 1 to the leader (TPF
    additionally pins follower 2, whose second predecessor is the leader);
    L-variants pin every follower.  Neighbor windows truncate at the platoon
    edges.
    """
    n = int(n_followers)
    r = int(range)
    if n < 1:
        raise TopologyError("n_followers must be >= 1")
    if r < 1:
        raise TopologyError("range must be >= 1")
    if kind not in NAMED_KINDS:
        raise TopologyError(f"unknown topology kind {kind!r}")
    if kind in ("rPF", "rPFL", "rBD", "rBDL") and r > n:
        raise TopologyError(f"range {r} exceeds platoon size {n}")

    adj = np.zeros((n, n))
    pin = np.zeros(n)

    if kind in DIRECTED_KINDS:
        window = {"PF": 1, "PFL": 1, "TPF": 2, "TPFL": 2}.get(kind, r)
        for i in range_(1, n):
            for j in range_(max(1, i - window), i - 1):
                adj[i - 1, j - 1] = 1
        if kind.endswith("L"):
            pin[:] = 1
        elif kind == "TPF":
            pin[0] = 1
            if n >= 2:
                pin[1] = 1
        else:
            pin[0] = 1
    else:
        window = 1 if kind in ("BD", "BDL") else r
        for i in range_(1, n):
            for j in range_(1, n):
                if i != j and abs(i - j) <= window:
                    adj[i - 1, j - 1] = 1
        if kind.endswith("L"):
            pin[:] = 1
        else:
            pin[0] = 1

    return Topology(n, adj, pin, kind_label=kind, range=r)


def range_(lo, hi):
    """Inclusive integer range helper (1-based follower indexing)."""
    return range(lo, hi + 1)


def has_leader_spanning_tree(t: Topology) -> bool:
    """True iff every follower is reachable from the leader.

    Information flows leader -> i when pinning[i] = 1 and j -> i when
    adjacency[i, j] = 1.
    """
    n = t.n_followers
    reached = t.pinning.astype(bool).copy()
    frontier = list(np.nonzero(reached)[0])
    while frontier:
        j = frontier.pop()
        for i in np.nonzero(t.adjacency[:, j])[0]:
            if not reached[i]:
                reached[i] = True
                frontier.append(i)
    return bool(reached.all())


def coupling_spectrum(t: Topology) -> CouplingSpectrum:
    """Eigen-decompose the coupling matrix M = L + P of a valid topology.

    Raises LeaderUnreachableError when the leader does not span the graph
    (the spectrum may then touch zero and the stability results do not
    apply).
    """
    if not has_leader_spanning_tree(t):
        raise LeaderUnreachableError(
            "leader does not reach every follower; coupling matrix may be singular"
        )
    m = t.coupling_matrix()
    is_tri = not np.triu(m, 1).any()
    is_sym = np.array_equal(m, m.T)
    if is_tri:
        eig = np.diagonal(m).astype(complex)
    elif is_sym:
        eig = np.linalg.eigvalsh(m).astype(complex)
    else:
        eig = np.linalg.eigvals(m)
    order = np.lexsort((eig.imag, eig.real))
    eig = eig[order]
    m_ro = m.copy()
    m_ro.setflags(write=False)
    return CouplingSpectrum(
        matrix=m_ro,
        eigenvalues=eig,
        min_eig=float(eig.real.min()),
        max_eig=float(eig.real.max()),
        is_triangular=bool(is_tri),
        is_symmetric=bool(is_sym),
        kind_label=t.kind_label,
    )


def gershgorin_certificate(spec: CouplingSpectrum) -> bool:
    """Check that every eigenvalue sits inside the union of Gershgorin disks
    of M and has non-negative real part.

    A False return indicates a solver bug rather than a property of the
    topology.
    """
    m = spec.matrix
    centers = np.diagonal(m)
    radii = np.abs(m).sum(axis=1) - np.abs(centers)
    tol = 1e-9 * max(1.0, np.abs(m).max())
    for lam in spec.eigenvalues:
        if lam.real < -tol:
            return False
        if not (np.abs(lam - centers) <= radii + tol).any():
            return False
    return True


def save_topology(t: Topology, path) -> None:
    """Write the plain-text matrix format: ``N r kind`` header, N adjacency
    rows, then one pinning row."""
    lines = [f"{t.n_followers} {t.range} {t.kind_label}"]
    for row in t.adjacency.astype(int):
        lines.append(" ".join(str(v) for v in row))
    lines.append(" ".join(str(v) for v in t.pinning.astype(int)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_topology(path) -> Topology:
    """Read the plain-text matrix format written by save_topology."""
    with open(path) as fh:
        tokens = [ln.split() for ln in fh if ln.strip()]
    if not tokens:
        raise TopologyError(f"empty topology file {path}")
    head = tokens[0]
    if len(head) != 3:
        raise TopologyError("header must be 'N r kind'")
    n, r, kind = int(head[0]), int(head[1]), head[2]
    if len(tokens) != n + 2:
        raise TopologyError(f"expected {n} adjacency rows plus pinning, got {len(tokens) - 1}")
    adj = np.array([[float(v) for v in row] for row in tokens[1 : n + 1]])
    pin = np.array([float(v) for v in tokens[n + 1]])
    return Topology(n, adj, pin, kind_label=kind, range=r)
