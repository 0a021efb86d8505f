"""Patch samples, migration pressure, the coupling matrix T and primitivity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .colonization import ColonizationFunction
from .errors import ConfigError, NotApplicable, PreconditionError
from .landscape import Landscape, covering_number, small_ball_min_mass
from .perron import PerronResult, perron_eigenvalue
from .rng import SAMPLING, make_rng


@dataclass(frozen=True, eq=False)
class PatchSet:
    """``n`` patch locations in a landscape; immutable once built.

    The sparse migration matrix ``K`` with ``S(x) = K x`` is built lazily and
    cached, as is the list of neighbouring pairs within ``r``.
    """

    landscape: Landscape
    locations: np.ndarray
    seed: int | None = None
    replicate: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.locations, dtype=float))
        if z.shape[0] < 2:
            raise PreconditionError("a patch set needs n >= 2")
        z = self.landscape.domain.check_point(z)
        if self.landscape.domain.periodic:
            side = self.landscape.domain.side
            z = np.where(z >= side, 0.0, z)
        z.setflags(write=False)
        object.__setattr__(self, "locations", z)

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    @property
    def e(self) -> np.ndarray:
        if "e" not in self._cache:
            self._cache["e"] = self.landscape.e(self.locations)
        return self._cache["e"]

    @property
    def pairs(self) -> np.ndarray:
        """Index pairs ``i < j`` with ``|z_i - z_j| <= r``."""
        if "pairs" not in self._cache:
            dom = self.landscape.domain
            box = dom.side if dom.periodic else None
            tree = cKDTree(self.locations, boxsize=box)
            self._cache["pairs"] = tree.query_pairs(self.landscape.r, output_type="ndarray").reshape(-1, 2)
        return self._cache["pairs"]

    @property
    def K(self) -> sp.csr_matrix:
        """``K_ij = A/(n-1) a(z_j) c(z_i, z_j; r)`` with zero diagonal."""
        if "K" not in self._cache:
            self._cache["K"] = self._build_K()
        return self._cache["K"]

    def _build_K(self, mask=None) -> sp.csr_matrix:
        land = self.landscape
        z, pr = self.locations, self.pairs
        i = np.concatenate([pr[:, 0], pr[:, 1]])
        j = np.concatenate([pr[:, 1], pr[:, 0]])
        vals = land.A / (self.n - 1) * land.a(z[j]) * land.c(z[i], z[j])
        keep = vals > 0
        if mask is not None:
            keep &= mask[j]
        K = sp.csr_matrix((vals[keep], (i[keep], j[keep])), shape=(self.n, self.n))
        K.sum_duplicates()
        return K

    def K_restricted(self, mask: np.ndarray) -> sp.csr_matrix:
        """``K`` with columns outside ``mask`` removed (sums only over masked sources)."""
        return self._build_K(np.asarray(mask, dtype=bool))


def sample_patches(land: Landscape, n: int, seed: int, replicate: int = 0, key: tuple = ()) -> PatchSet:
    """Draw ``n`` i.i.d. locations with density ``sigma / A`` by rejection against ``sigma_max``.

    Raises:
        PreconditionError: if ``n < 2``.
        ConfigError: if the expected acceptance rate is below 1e-6.

    ``key`` adds integers to the random stream key (e.g. to separate sample sizes).
    """
    if n < 2:
        raise PreconditionError("n must be at least 2")
    rng = make_rng(seed, replicate, SAMPLING, *key)
    lo, hi = land.domain.bounding_box
    smax = land.sigma.upper
    rate = land.A / (smax * float(np.prod(hi - lo)))
    if rate < 1e-6:
        raise ConfigError(f"rejection acceptance rate {rate:.3g} is below 1e-6")
    out, have = [], 0
    while have < n:
        m = int(min(max(1.2 * (n - have) / rate, 256), 4_000_000))
        y = lo + (hi - lo) * rng.random((m, land.dim))
        u = rng.random(m) * smax
        ok = land.domain.contains(y)
        ok[ok] = u[ok] <= land.sigma(y[ok])
        acc = y[ok]
        out.append(acc)
        have += len(acc)
    z = np.concatenate(out)[:n]
    return PatchSet(land, z, seed, replicate)


def migration_pressure(ps: PatchSet, x, i: int | None = None):
    """``S_i(x) = A/(n-1) sum_{j != i} a(z_j) c(z_i, z_j; r) x_j``; all ``i`` when ``i`` is None."""
    x = np.asarray(x, dtype=float)
    if x.shape != (ps.n,):
        raise PreconditionError(f"x must have shape ({ps.n},)")
    if i is None:
        return ps.K @ x
    if not -ps.n <= i < ps.n:
        raise IndexError(f"patch index {i} out of range for n = {ps.n}")
    K = ps.K
    i %= ps.n
    a, b = K.indptr[i], K.indptr[i + 1]
    return float(K.data[a:b] @ x[K.indices[a:b]])


@dataclass(frozen=True)
class PrimitivityCertificate:
    """Outcome of the graph test: connected and containing a triangle."""

    primitive: bool
    connected: bool
    n_components: int
    triangle: tuple | None
    n_edges: int


def is_primitive(ps: PatchSet) -> PrimitivityCertificate:
    """Graph test on edges ``|z_i - z_j| <= r``.

    Connectivity gives irreducibility and three mutually adjacent patches
    give closed walks of length 2 and 3, hence aperiodicity. This criterion
    is sufficient; a triangle-free odd cycle would also do but is not searched.
    """
    pr = ps.pairs
    n = ps.n
    adj = sp.csr_matrix((np.ones(len(pr)), (pr[:, 0], pr[:, 1])), shape=(n, n))
    adj = ((adj + adj.T) > 0).astype(np.int64)
    ncomp, _ = connected_components(adj, directed=False)
    tri = _find_triangle(adj, pr)
    return PrimitivityCertificate(ncomp == 1 and tri is not None, ncomp == 1, int(ncomp), tri, int(len(pr)))


def _find_triangle(adj: sp.csr_matrix, pairs: np.ndarray):
    # dense geometric graphs almost always close a triangle on the first edges tried
    ptr, idx = adj.indptr, adj.indices
    for a, b in pairs[:2000]:
        common = np.intersect1d(idx[ptr[a]:ptr[a + 1]], idx[ptr[b]:ptr[b + 1]], assume_unique=True)
        if common.size:
            return tuple(sorted((int(a), int(b), int(common[0]))))
    if len(pairs) <= 2000:
        return None
    found = (adj @ adj).multiply(adj).tocoo()
    if not found.nnz:
        return None
    a, b = int(found.row[0]), int(found.col[0])
    k = np.intersect1d(idx[ptr[a]:ptr[a + 1]], idx[ptr[b]:ptr[b + 1]], assume_unique=True)[0]
    return tuple(sorted((a, b, int(k))))


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """``T_ij = f'(0) K_ij / e(z_i)`` with its Perron root and primitivity flags."""

    T: sp.csr_matrix
    lambda_T: float
    perron: PerronResult
    irreducible: bool
    primitive: bool
    n_edges: int
    certificate: PrimitivityCertificate


def coupling_matrix(ps: PatchSet, f: ColonizationFunction, tol: float = 1e-10) -> CouplingMatrix:
    T = sp.diags(f.L_f / ps.e) @ ps.K
    T = sp.csr_matrix(T)
    sym = None
    if ps.landscape.kernel.position_independent:
        # T = diag(f'(0)/e) C diag(w a) with C symmetric
        sym = np.sqrt(ps.landscape.a(ps.locations) * ps.e)
    res = perron_eigenvalue(T, tol=tol, sym_scale=sym)
    cert = is_primitive(ps)
    return CouplingMatrix(T, res.value, res, cert.connected, cert.primitive, cert.n_edges, cert)


@dataclass(frozen=True)
class PrimitivityBound:
    value: float
    covering: int
    min_mass: float
    n: int
    step: float


def primitivity_probability_bound(land: Landscape, n: int, r: float | None = None,
                                  step: float | None = None) -> PrimitivityBound:
    """``1 - N(Omega, r/3) exp(-n min_z A^-1 int 1(|y-z| <= r/3) sigma)``, returned unclamped.

    Raises:
        NotApplicable: when ``n <= 2 N(Omega, r/3)``.
    """
    r = land.r if r is None else r
    N = covering_number(land, r / 3)
    if n <= 2 * N:
        raise NotApplicable(f"needs n > 2 N(Omega, r/3) = {2 * N}, got n = {n}")
    step = step or r / 8
    mass = small_ball_min_mass(land, r / 3, step)
    return PrimitivityBound(1.0 - N * math.exp(-n * mass), N, mass, n, step)
