"""Exact finite-n edge/triangle ensembles and an edge-flip Metropolis sampler.

Ground truth at desk scale. For a hard constraint C* = (edges, triangles),
the microcanonical ensemble is uniform on {G : C(G) = C*}; the canonical
ensemble is the exponential family

    P(G | theta) = exp(n^2 [theta . T(G) - psi_n(theta)]),
    T(G) = (t(edge, G), t(triangle, G)),

in homomorphism-density coordinates t(F, G) = p(F) C_F(G) / n^|V(F)| with
p(edge) = p(wedge) = 2 and p(triangle) = 6. Two constraint scalings are
exposed throughout: raw subgraph counts and the density vector; conversions
are exact rationals times counts, so nothing n-dependent can leak between
them silently.

Exact operations enumerate all 2^(n(n-1)/2) graphs (counting up to n = 8,
exponential-weight sums up to n = 7; the split reflects that counting needs
one cheap predicate pass while weighted sums keep per-graph exponentials
alive). Enumeration tables are cached per n, log-sum-exp keeps psi_n finite
at |n^2 theta . T| in the hundreds, and multiplier calibration is a damped
Newton iteration whose Jacobian is the (positive-definite) scaled covariance
of the densities.

The relative entropy of the microcanonical with respect to the canonical
ensemble is computed two ways: as the full sum over the constraint class and
from a single representative (the canonical weight is constant on the
class); both are returned by ``relative_entropy_exact`` and must agree to
1e-12.

At larger n the canonical ensemble is sampled by single-edge-flip Metropolis
with incremental triangle updates (flipping (i, j) changes the triangle
count by |N(i) & N(j)| via one bitset AND), and multipliers are calibrated
stochastically by Robbins-Monro.
"""

import math
import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, ConvergenceError, DomainError
from .scaling import MultiplierPair

__all__ = [
    "DenseGraph",
    "SubgraphCounts",
    "EnsembleSolution",
    "McmcSummary",
    "subgraph_counts",
    "hom_density",
    "counts_to_densities",
    "densities_to_counts",
    "count_constrained",
    "partition_exact",
    "calibrate_exact",
    "relative_entropy_exact",
    "mcmc_sample",
    "mcmc_calibrate",
    "COUNT_CAPACITY",
    "WEIGHTED_CAPACITY",
]

COUNT_CAPACITY = 8     # predicate pass over 2^28 masks
WEIGHTED_CAPACITY = 7  # per-graph exponentials over 2^21 masks


@dataclass(frozen=True)
class DenseGraph:
    """Labelled simple graph, adjacency bit-packed one integer row per vertex."""

    n: int
    rows: tuple  # rows[i] has bit j set iff {i, j} is an edge

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"need n >= 1, got {self.n!r}")
        if len(self.rows) != self.n:
            raise DomainError("row count must equal n")
        for i, r in enumerate(self.rows):
            if r >> self.n:
                raise DomainError(f"row {i} has bits beyond vertex range")
            if (r >> i) & 1:
                raise DomainError(f"self-loop at vertex {i}")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if ((self.rows[i] >> j) & 1) != ((self.rows[j] >> i) & 1):
                    raise DomainError(f"adjacency not symmetric at ({i}, {j})")

    @classmethod
    def from_edges(cls, n: int, edges) -> "DenseGraph":
        rows = [0] * n
        for i, j in edges:
            if i == j:
                raise DomainError(f"self-loop at vertex {i}")
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        return cls(n, tuple(rows))

    @classmethod
    def from_matrix(cls, a) -> "DenseGraph":
        a = np.asarray(a)
        n = a.shape[0]
        rows = [int(sum((1 << j) for j in range(n) if a[i, j])) for i in range(n)]
        return cls(n, tuple(rows))

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "DenseGraph":
        """Graph from an edge-subset index over the pairs of K_n (i<j order)."""
        rows = [0] * n
        for b, (i, j) in enumerate(_pairs(n)):
            if (mask >> b) & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
        return cls(n, tuple(rows))

    def to_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.n):
                a[i, j] = (r >> j) & 1
        return a

    def relabeled(self, perm) -> "DenseGraph":
        """Graph with vertex i renamed perm[i]."""
        rows = [0] * self.n
        for i in range(self.n):
            for j in range(self.n):
                if (self.rows[i] >> j) & 1:
                    rows[perm[i]] |= 1 << perm[j]
        return DenseGraph(self.n, tuple(rows))

    def to_text(self) -> str:
        """n, then the upper-triangular bit rows as 0/1 strings."""
        lines = [str(self.n)]
        for i in range(self.n - 1):
            lines.append("".join(str((self.rows[i] >> j) & 1) for j in range(i + 1, self.n)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DenseGraph":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        n = int(lines[0])
        edges = []
        for i, ln in enumerate(lines[1 : n]):
            for k, ch in enumerate(ln):
                if ch == "1":
                    edges.append((i, i + 1 + k))
        return cls.from_edges(n, edges)


class SubgraphCounts(NamedTuple):
    edges: int
    wedges: int
    triangles: int


def subgraph_counts(g: DenseGraph) -> SubgraphCounts:
    """Exact edge, wedge (2-path), and triangle counts via bitset intersections."""
    degs = [r.bit_count() for r in g.rows]
    edges = sum(degs) // 2
    wedges = sum(d * (d - 1) // 2 for d in degs)
    tri3 = 0
    for i in range(g.n):
        ri = g.rows[i]
        for j in range(i + 1, g.n):
            if (ri >> j) & 1:
                tri3 += (ri & g.rows[j]).bit_count()
    return SubgraphCounts(edges=edges, wedges=wedges, triangles=tri3 // 3)


_HOM_PERMS = {"edge": 2, "wedge": 2, "triangle": 6}
_HOM_VERTS = {"edge": 2, "wedge": 3, "triangle": 3}


def hom_density(kind: str, g: DenseGraph) -> float:
    """Homomorphism density t(F, G) = p(F) C_F(G) / n^|V(F)|."""
    if kind not in _HOM_PERMS:
        raise DomainError(f"kind must be one of {sorted(_HOM_PERMS)}, got {kind!r}")
    counts = subgraph_counts(g)
    c = {"edge": counts.edges, "wedge": counts.wedges, "triangle": counts.triangles}[kind]
    return _HOM_PERMS[kind] * c / g.n ** _HOM_VERTS[kind]


def counts_to_densities(n: int, edges: float, triangles: float) -> tuple:
    """(2 e / n^2, 6 tr / n^3): count constraints in density coordinates."""
    return 2.0 * edges / n ** 2, 6.0 * triangles / n ** 3


def densities_to_counts(n: int, t1: float, t3: float) -> tuple:
    return t1 * n ** 2 / 2.0, t3 * n ** 3 / 6.0


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------


def _pairs(n: int):
    return list(combinations(range(n), 2))


def _popcount_u32(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint32, copy=True)
    v = v - ((v >> np.uint32(1)) & np.uint32(0x55555555))
    v = (v & np.uint32(0x33333333)) + ((v >> np.uint32(2)) & np.uint32(0x33333333))
    v = (v + (v >> np.uint32(4))) & np.uint32(0x0F0F0F0F)
    return ((v * np.uint32(0x01010101)) >> np.uint32(24)).astype(np.int64)


def _triangle_masks(n: int) -> list:
    bit = {p: b for b, p in enumerate(_pairs(n))}
    masks = []
    for i, j, k in combinations(range(n), 3):
        masks.append((1 << bit[(i, j)]) | (1 << bit[(j, k)]) | (1 << bit[(i, k)]))
    return masks


@lru_cache(maxsize=8)
def _enum_tables(n: int) -> tuple:
    """(edge counts, triangle counts) for every graph mask on n vertices, n <= 7."""
    m = n * (n - 1) // 2
    masks = np.arange(1 << m, dtype=np.uint32)
    edges = _popcount_u32(masks)
    tris = np.zeros(masks.size, dtype=np.int16)
    for tm in _triangle_masks(n):
        tm = np.uint32(tm)
        tris += ((masks & tm) == tm).astype(np.int16)
    return edges, tris


def count_constrained(n: int, c_star) -> int:
    """Number of graphs on n labelled vertices with the exact count pair.

    n <= 8. For n = 8 the 2^28 masks are streamed in chunks: a popcount
    pass filters on the edge count, and only survivors get the 56
    triangle-mask tests.
    """
    e_star, t_star = int(c_star[0]), int(c_star[1])
    if n < 1 or n > COUNT_CAPACITY:
        raise CapacityError(f"count_constrained handles 1 <= n <= {COUNT_CAPACITY}, got {n!r}")
    if e_star < 0 or t_star < 0:
        return 0
    m = n * (n - 1) // 2
    if e_star > m:
        return 0
    if n <= WEIGHTED_CAPACITY:
        edges, tris = _enum_tables(n)
        return int(np.count_nonzero((edges == e_star) & (tris == t_star)))
    tmasks = [np.uint32(t) for t in _triangle_masks(n)]
    total = 0
    chunk = 1 << 22
    for start in range(0, 1 << m, chunk):
        masks = np.arange(start, min(start + chunk, 1 << m), dtype=np.uint32)
        masks = masks[_popcount_u32(masks) == e_star]
        if masks.size == 0:
            continue
        tris = np.zeros(masks.size, dtype=np.int16)
        for tm in tmasks:
            tris += ((masks & tm) == tm).astype(np.int16)
        total += int(np.count_nonzero(tris == t_star))
    return total


def _require_weighted(n: int) -> None:
    if n < 1 or n > WEIGHTED_CAPACITY:
        raise CapacityError(
            f"exact weighted enumeration handles 1 <= n <= {WEIGHTED_CAPACITY}, got {n!r}"
        )


def _log_weights(n: int, theta) -> tuple:
    """(log canonical weights over all masks, psi_n)."""
    edges, tris = _enum_tables(n)
    th1, th2 = float(theta[0]), float(theta[1])
    # n^2 theta . T(G) = 2 th1 C1 + (6/n) th2 C3
    h = 2.0 * th1 * edges + (6.0 / n) * th2 * tris
    hmax = float(h.max())
    logz = hmax + math.log(float(np.exp(h - hmax).sum()))
    psi = logz / n ** 2
    return h - logz, psi


def partition_exact(n: int, theta) -> tuple:
    """(psi_n, (mean edge density, mean triangle density)) by full enumeration."""
    _require_weighted(n)
    logw, psi = _log_weights(n, theta)
    w = np.exp(logw)
    edges, tris = _enum_tables(n)
    t1 = 2.0 * edges / n ** 2
    t3 = 6.0 * tris / n ** 3
    return psi, (float(w @ t1), float(w @ t3))


def _means_and_jacobian(n: int, theta) -> tuple:
    logw, psi = _log_weights(n, theta)
    w = np.exp(logw)
    edges, tris = _enum_tables(n)
    t1 = 2.0 * edges / n ** 2
    t3 = 6.0 * tris / n ** 3
    m1, m3 = float(w @ t1), float(w @ t3)
    d1, d3 = t1 - m1, t3 - m3
    cov = np.array([
        [float(w @ (d1 * d1)), float(w @ (d1 * d3))],
        [float(w @ (d1 * d3)), float(w @ (d3 * d3))],
    ])
    return np.array([m1, m3]), n ** 2 * cov, psi


def calibrate_exact(n: int, t_target, units: str = "density",
                    tol: float = 1e-10, max_iter: int = 100) -> MultiplierPair:
    """Multipliers matching the canonical means to the target, by damped Newton.

    ``units`` selects the target scaling: "density" for (t1, t3), "count"
    for raw (edges, triangles). The Jacobian of the moment map is the scaled
    density covariance (positive definite for interior targets); the step is
    halved until the residual norm decreases. Non-interior targets make the
    multipliers run away, which is detected and reported as divergence.
    """
    _require_weighted(n)
    if units == "count":
        target = np.array(counts_to_densities(n, t_target[0], t_target[1]))
    elif units == "density":
        target = np.array([float(t_target[0]), float(t_target[1])], dtype=float)
    else:
        raise DomainError(f"units must be 'density' or 'count', got {units!r}")

    # canonical means are strictly interior: every graph has positive weight,
    # so extreme targets force the multipliers to run away
    t1_max, t3_max = counts_to_densities(n, n * (n - 1) // 2, math.comb(n, 3))
    if not 0.0 < target[0] < t1_max or not 0.0 < target[1] < t3_max:
        raise ConvergenceError(
            "target on the boundary of the mean region; multipliers diverge",
            {"target": target.tolist(), "bounds": [(0.0, t1_max), (0.0, t3_max)]},
        )

    p0 = min(max(target[0] * n / (n - 1) if n > 1 else target[0], 1e-3), 1.0 - 1e-3)
    theta = np.array([0.5 * math.log(p0 / (1.0 - p0)), 0.0])
    means, jac, _ = _means_and_jacobian(n, theta)
    resid = means - target
    for it in range(max_iter):
        if float(np.max(np.abs(resid))) < tol:
            return MultiplierPair(float(theta[0]), float(theta[1]))
        try:
            step = np.linalg.solve(jac, resid)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular moment-map Jacobian",
                                   {"theta": theta.tolist()}) from exc
        scale = 1.0
        for _ in range(60):
            cand = theta - scale * step
            means2, jac2, _ = _means_and_jacobian(n, cand)
            resid2 = means2 - target
            if np.linalg.norm(resid2) < np.linalg.norm(resid):
                break
            scale *= 0.5
        else:
            raise ConvergenceError(
                "Newton stalled; target likely on the boundary of the mean region",
                {"theta": theta.tolist(), "residual": resid.tolist()},
            )
        theta, means, jac, resid = cand, means2, jac2, resid2
        if float(np.max(np.abs(theta))) > 60.0:
            raise ConvergenceError(
                "multipliers diverging; target not interior to the mean region",
                {"theta": theta.tolist(), "residual": resid.tolist()},
            )
    raise ConvergenceError("Newton did not converge",
                           {"theta": theta.tolist(), "residual": resid.tolist()})


@dataclass(frozen=True)
class EnsembleSolution:
    theta: MultiplierPair
    psi_n: float
    mean_t: tuple
    s_n: float
    omega: int


def relative_entropy_exact(n: int, c_star) -> EnsembleSolution:
    """Relative entropy of the microcanonical w.r.t. the calibrated canonical.

    The hard constraint is an exact count pair (edges, triangles). The
    relative entropy is computed both as the literal sum over the constraint
    class and from a single representative; the two must agree to 1e-12
    because the canonical weight is constant on the class.
    """
    _require_weighted(n)
    e_star, t_star = int(c_star[0]), int(c_star[1])
    edges, tris = _enum_tables(n)
    sel = (edges == e_star) & (tris == t_star)
    omega = int(np.count_nonzero(sel))
    if omega == 0:
        raise DomainError(f"constraint ({e_star}, {t_star}) is not graphical for n={n}")
    target = counts_to_densities(n, e_star, t_star)
    theta = calibrate_exact(n, target, units="density")
    logw, psi = _log_weights(n, theta)
    # full sum over the class
    p_mic = 1.0 / omega
    s_sum = float(np.sum(p_mic * (math.log(p_mic) - logw[sel])))
    # single-representative identity
    s_single = -math.log(omega) - float(logw[np.argmax(sel)])
    if abs(s_sum - s_single) > 1e-12 * max(1.0, abs(s_single)):
        raise ConvergenceError("class-sum and single-graph relative entropies disagree",
                               {"sum": s_sum, "single": s_single})
    means = partition_exact(n, theta)[1]
    return EnsembleSolution(theta=theta, psi_n=psi, mean_t=means,
                            s_n=s_single, omega=omega)


# ---------------------------------------------------------------------------
# Metropolis sampler
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McmcSummary:
    """Batch-means summary of an edge-flip Metropolis run.

    mean_t1/mean_t3 are homomorphism densities (the Hamiltonian's conjugate
    coordinates); mean_edge_fraction is the unbiased per-pair retention
    estimate C1 / (n choose 2), whose stationary mean under independent
    edges is the retention probability itself with no (n-1)/n correction.
    """

    n: int
    theta: MultiplierPair
    steps: int
    burnin: int
    seed: int
    mean_t1: float
    se_t1: float
    mean_t3: float
    se_t3: float
    mean_edge_fraction: float
    se_edge_fraction: float
    accept_rate: float

    ROW_FIELDS = ("theta1", "theta2", "n", "steps", "seed",
                  "mean_t1", "se_t1", "mean_t3", "se_t3")

    def to_row(self) -> dict:
        return {
            "theta1": self.theta.theta1, "theta2": self.theta.theta2,
            "n": self.n, "steps": self.steps, "seed": self.seed,
            "mean_t1": self.mean_t1, "se_t1": self.se_t1,
            "mean_t3": self.mean_t3, "se_t3": self.se_t3,
        }


def _batch_stats(batch_means: np.ndarray) -> tuple:
    mean = float(batch_means.mean())
    if batch_means.size < 2:
        return mean, float("nan")
    se = float(batch_means.std(ddof=1) / math.sqrt(batch_means.size))
    return mean, se


def mcmc_sample(n: int, theta, steps: int, seed: int,
                burnin: int | None = None, batches: int = 32,
                start: DenseGraph | None = None) -> McmcSummary:
    """Single-edge-flip Metropolis chain targeting the canonical ensemble.

    Proposes a uniform pair per step and accepts with min(1, e^dH) where
    dH = 2 th1 dC1 + (6/n) th2 dC3; the triangle increment is the popcount
    of one row intersection. Runs ``burnin`` proposals (default 10 n^2) and
    then ``steps`` recorded proposals split into ``batches`` for standard
    errors. Fully deterministic for a fixed seed.
    """
    if n < 3:
        raise DomainError(f"need n >= 3, got {n!r}")
    steps = int(steps)
    if steps < 1:
        raise DomainError(f"need steps >= 1, got {steps!r}")
    th1, th2 = float(theta[0]), float(theta[1])
    if burnin is None:
        burnin = 10 * n * n
    rng = random.Random(seed)
    if start is None:
        rows = [0] * n
        c1 = c3 = 0
    else:
        if start.n != n:
            raise DomainError("start graph size mismatch")
        rows = list(start.rows)
        counts = subgraph_counts(start)
        c1, c3 = counts.edges, counts.triangles

    pairs = _pairs(n)
    npairs = len(pairs)
    tri_coef = 6.0 / n
    accepted = 0

    nb = max(1, min(batches, steps))
    batch_id = (np.arange(steps, dtype=np.int64) * nb) // steps
    sums1 = np.zeros(nb)
    sums3 = np.zeros(nb)
    lens = np.bincount(batch_id, minlength=nb).astype(float)

    total = burnin + steps
    for step in range(total):
        i, j = pairs[rng.randrange(npairs)]
        present = (rows[i] >> j) & 1
        common = (rows[i] & rows[j]).bit_count()
        d1 = -1 if present else 1
        d3 = -common if present else common
        dh = 2.0 * th1 * d1 + tri_coef * th2 * d3
        if dh >= 0.0 or rng.random() < math.exp(dh):
            rows[i] ^= 1 << j
            rows[j] ^= 1 << i
            c1 += d1
            c3 += d3
            accepted += 1
        if step >= burnin:
            b = batch_id[step - burnin]
            sums1[b] += c1
            sums3[b] += c3

    m1 = sums1 / lens
    m3 = sums3 / lens
    t1_batches = 2.0 * m1 / n ** 2
    t3_batches = 6.0 * m3 / n ** 3
    frac_batches = m1 / npairs
    mean_t1, se_t1 = _batch_stats(t1_batches)
    mean_t3, se_t3 = _batch_stats(t3_batches)
    mean_fr, se_fr = _batch_stats(frac_batches)
    return McmcSummary(
        n=n, theta=MultiplierPair(th1, th2), steps=steps, burnin=burnin,
        seed=seed, mean_t1=mean_t1, se_t1=se_t1, mean_t3=mean_t3, se_t3=se_t3,
        mean_edge_fraction=mean_fr, se_edge_fraction=se_fr,
        accept_rate=accepted / total,
    )


def _run_block(n, rows, c1, c3, th1, th2, steps, rng, record=True):
    """Advance the chain in place for ``steps`` proposals.

    Returns (c1, c3, mean_C1, mean_C3) where the means are over the block's
    recorded states (NaN when record is False).
    """
    pairs = _pairs(n)
    npairs = len(pairs)
    tri_coef = 6.0 / n
    s1 = s3 = 0
    for _ in range(steps):
        i, j = pairs[rng.randrange(npairs)]
        present = (rows[i] >> j) & 1
        common = (rows[i] & rows[j]).bit_count()
        d1 = -1 if present else 1
        d3 = -common if present else common
        dh = 2.0 * th1 * d1 + tri_coef * th2 * d3
        if dh >= 0.0 or rng.random() < math.exp(dh):
            rows[i] ^= 1 << j
            rows[j] ^= 1 << i
            c1 += d1
            c3 += d3
        if record:
            s1 += c1
            s3 += c3
    if not record:
        return c1, c3, float("nan"), float("nan")
    return c1, c3, s1 / steps, s3 / steps


def mcmc_calibrate(n: int, t_target, seed: int, tol: float = 5e-3,
                   max_rounds: int = 80, block: int | None = None,
                   a0: float = 2.0, k0: int = 8) -> MultiplierPair:
    """Robbins-Monro calibration of the multipliers against density targets.

    One persistent chain is advanced block by block; after each block the
    update theta_{k+1} = theta_k - a_k (block mean - target) is applied with
    a_k = a0 / (k + k0). Convergence requires the block means within ``tol``
    per component of the target, re-confirmed on an 8x longer block (a block
    mean's noise floor is about 1/sqrt(2 * block), independent of n, so the
    default block is sized for the tolerance). Persistent failure is
    reported with diagnostics; metastability near the broken-equivalence
    region shows up here and is reported rather than silently retried.
    """
    target1, target3 = float(t_target[0]), float(t_target[1])
    if block is None:
        block = max(10 * n * n, int(1.0 / (2.0 * tol * tol)))
    rng = random.Random(seed)
    p0 = min(max(target1, 1e-3), 1.0 - 1e-3)
    th1 = 0.5 * math.log(p0 / (1.0 - p0))
    th2 = 0.0
    rows = [0] * n
    c1 = c3 = 0
    c1, c3, _, _ = _run_block(n, rows, c1, c3, th1, th2, 10 * n * n, rng, record=False)
    resid = (float("inf"), float("inf"))
    for k in range(max_rounds):
        c1, c3, m1, m3 = _run_block(n, rows, c1, c3, th1, th2, block, rng)
        r1 = 2.0 * m1 / n ** 2 - target1
        r3 = 6.0 * m3 / n ** 3 - target3
        resid = (r1, r3)
        if abs(r1) < tol and abs(r3) < tol and k >= 5:
            # confirm on a longer block before declaring convergence: a
            # single block's mean is noisy at the tolerance scale
            c1, c3, m1, m3 = _run_block(n, rows, c1, c3, th1, th2, 8 * block, rng)
            r1 = 2.0 * m1 / n ** 2 - target1
            r3 = 6.0 * m3 / n ** 3 - target3
            resid = (r1, r3)
            if abs(r1) < tol and abs(r3) < tol:
                return MultiplierPair(th1, th2)
        a_k = a0 / (k + k0)
        th1 -= a_k * r1
        th2 -= a_k * r3
    raise ConvergenceError(
        "Robbins-Monro calibration did not reach tolerance",
        {"theta": (th1, th2), "residual": resid, "tol": tol, "rounds": max_rounds},
    )
