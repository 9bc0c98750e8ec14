"""Synthetic networks, Gibbs sampling and exact enumeration for small models."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .core import SCHEMA_VERSION, Dataset, ModelSpec, MRFError, SymmetricParams, packed_indices

WEIGHT_LOW, WEIGHT_HIGH = 0.5, 1.0
MAX_ENUMERATION = 2 ** 20


def child_seed(seed, *key: int) -> np.random.SeedSequence:
    """Independent stream ``key`` derived from a master seed."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(seed, spawn_key=key)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _count(fraction: float, total: int) -> int:
    # guard against 0.1 * 780 = 78.00000000000001 style round-up
    return int(math.ceil(fraction * total - 1e-9))


def _draw_weights(rng: np.random.Generator, n: int, sign: int | None = None) -> np.ndarray:
    """Uniform on [-1, -0.5] u [0.5, 1]; ``sign`` fixes the sign when given."""
    magnitude = rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=n)
    if sign is None:
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    else:
        signs = np.full(n, float(sign))
    return signs * magnitude


def _offdiag_slots(p: int) -> np.ndarray:
    rows, cols = packed_indices(p)
    return np.nonzero(rows != cols)[0]


def random_network(p: int, density: float, seed=None) -> SymmetricParams:
    """Random sparse edge weights with zero diagonal.

    ``ceil(density * p(p-1)/2)`` off-diagonal positions are chosen uniformly
    without replacement and filled with weights uniform on
    ``[-1, -0.5] u [0.5, 1]``.
    """
    if p < 2:
        raise MRFError("random_network needs p >= 2")
    if not 0 < density <= 1:
        raise MRFError("density must lie in (0, 1]")
    slots = _offdiag_slots(p)
    m = _count(density, slots.size)
    if m == 0:
        raise MRFError("density yields no edges")
    rng = _rng(seed)
    chosen = rng.choice(slots, size=m, replace=False)
    values = np.zeros(p * (p + 1) // 2)
    values[chosen] = _draw_weights(rng, m)
    return SymmetricParams(p, values)


def similarity_pair(p: int, density: float, similarity: float, seed=None,
                    redraw_positions: bool = True) -> tuple[SymmetricParams, SymmetricParams]:
    """Pre/post matrices sharing a fixed fraction of their edges.

    ``ceil(similarity * m)`` of the ``m`` edges of the first matrix are copied
    (position and value) into the second.  The remaining edges of the second
    matrix get fresh values, and fresh positions too when
    ``redraw_positions`` is set; otherwise they reuse the first matrix's
    non-shared positions.
    """
    if not 0 <= similarity <= 1:
        raise MRFError("similarity must lie in [0, 1]")
    rng = _rng(seed)
    theta1 = random_network(p, density, rng)
    support = np.nonzero(theta1.entries)[0]
    m = support.size
    n_shared = _count(similarity, m)
    shared = rng.choice(support, size=n_shared, replace=False) if n_shared else np.empty(0, int)
    values = np.zeros_like(theta1.entries)
    values[shared] = theta1.entries[shared]
    n_new = m - n_shared
    if n_new:
        if redraw_positions:
            free = np.setdiff1d(_offdiag_slots(p), shared)
        else:
            free = np.setdiff1d(support, shared)
        new_pos = rng.choice(free, size=n_new, replace=False)
        new_vals = _draw_weights(rng, n_new)
        # a redrawn weight must differ from the first matrix at that slot
        clash = new_vals == theta1.entries[new_pos]
        while np.any(clash):
            new_vals[clash] = _draw_weights(rng, int(clash.sum()))
            clash = new_vals == theta1.entries[new_pos]
        values[new_pos] = new_vals
    return theta1, SymmetricParams(p, values)


@dataclass(frozen=True)
class BlockCounts:
    """Edge counts and signs for a two-community layout."""

    within1: int
    within2: int
    between: int
    within_sign: int = 1
    between_sign: int = -1


# Positive/negative edge counts before and after the change in the two-community design
TABLE6_PRE = BlockCounts(50, 63, 10)
TABLE6_POST = BlockCounts(52, 21, 50)


@dataclass(frozen=True)
class CommunityLayout:
    sizes: tuple[int, int] = (25, 25)
    pre: BlockCounts = TABLE6_PRE
    post: BlockCounts = TABLE6_POST

    @property
    def p(self) -> int:
        return sum(self.sizes)

    def to_json(self) -> dict:
        return {"sizes": list(self.sizes), "pre": asdict(self.pre), "post": asdict(self.post)}

    @classmethod
    def from_json(cls, obj: dict) -> "CommunityLayout":
        return cls(tuple(obj["sizes"]), BlockCounts(**obj["pre"]), BlockCounts(**obj["post"]))


def _block_slots(sizes: tuple[int, int]) -> dict[str, np.ndarray]:
    p = sum(sizes)
    rows, cols = packed_indices(p)
    group = np.repeat([0, 1], sizes)
    off = rows != cols
    gr, gc = group[rows], group[cols]
    return {
        "within1": np.nonzero(off & (gr == 0) & (gc == 0))[0],
        "within2": np.nonzero(off & (gr == 1) & (gc == 1))[0],
        "between": np.nonzero(off & (gr != gc))[0],
    }


def _community_matrix(layout: CommunityLayout, counts: BlockCounts, rng) -> SymmetricParams:
    slots = _block_slots(layout.sizes)
    values = np.zeros(layout.p * (layout.p + 1) // 2)
    for block, n, sign in (("within1", counts.within1, counts.within_sign),
                           ("within2", counts.within2, counts.within_sign),
                           ("between", counts.between, counts.between_sign)):
        capacity = slots[block].size
        if n > capacity:
            raise MRFError(f"{block}: {n} edges requested, block holds {capacity}")
        if n:
            pos = rng.choice(slots[block], size=n, replace=False)
            values[pos] = _draw_weights(rng, n, sign)
    return SymmetricParams(layout.p, values)


def community_pair(layout: CommunityLayout = CommunityLayout(),
                   seed=None) -> tuple[SymmetricParams, SymmetricParams]:
    """Two-community pre/post matrices with prescribed block counts and signs."""
    if len(layout.sizes) != 2 or min(layout.sizes) < 1:
        raise MRFError("community layout needs two non-empty groups")
    rng = _rng(seed)
    return _community_matrix(layout, layout.pre, rng), _community_matrix(layout, layout.post, rng)


def community_labels(layout: CommunityLayout) -> tuple:
    return tuple(["group1"] * layout.sizes[0] + ["group2"] * layout.sizes[1])


def log_weight_table(spec: ModelSpec, theta: SymmetricParams):
    """All states of ``alphabet^p`` (as codes) and their unnormalized log-weights."""
    p = theta.p
    n_states = spec.size ** p
    if n_states > MAX_ENUMERATION:
        raise MRFError(f"state space of size {n_states} is too large to enumerate")
    states = np.array(list(itertools.product(range(spec.size), repeat=p)), dtype=np.int32)
    W = theta.dense()
    logw = (spec.b0_table[states] * np.diag(W)).sum(axis=1)
    for j in range(p):
        for k in range(j):
            if W[j, k] != 0.0:
                logw += W[j, k] * spec.b_table[states[:, j], states[:, k]]
    return states, logw


def exact_distribution(spec: ModelSpec, theta: SymmetricParams):
    """Exact probabilities of every state, by brute-force enumeration.

    Returns ``(states, probs)`` with states in lexicographic code order.
    """
    states, logw = log_weight_table(spec, theta)
    w = np.exp(logw - logw.max())
    return states, w / w.sum()


@dataclass(frozen=True)
class SamplerOptions:
    burn_in: int = 1000   # sweeps discarded before recording
    thin: int = 5         # sweeps between recorded states

    def __post_init__(self):
        if self.burn_in < 0 or self.thin < 1:
            raise MRFError("burn_in must be >= 0 and thin >= 1")


_CHUNK = 1 << 16


def gibbs_sample(spec: ModelSpec, theta: SymmetricParams, n: int, burn_in: int = 1000,
                 thin: int = 5, seed=None, backend=None) -> np.ndarray:
    """One systematic-scan Gibbs chain targeting the joint MRF law.

    Each sweep updates sites ``0..p-1`` in order.  After ``burn_in`` sweeps
    the state is recorded every ``thin`` sweeps until ``n`` rows exist.
    Returns an ``n x p`` array of alphabet codes; :func:`sample_dataset`
    wraps it into a :class:`Dataset`.
    """
    if n < 1:
        raise MRFError("n must be >= 1")
    SamplerOptions(burn_in, thin)
    kern = kernels if backend is None else kernels.get_backend(backend)
    rng = _rng(seed)
    p = theta.p
    W = theta.dense()
    state = rng.integers(0, spec.size, size=p).astype(np.int32)
    out = np.empty((max(n, 2), p), dtype=np.int32)
    total = burn_in + n * thin
    done = 0
    while done < total:
        m = min(_CHUNK, total - done)
        uniforms = rng.random((m, p))
        sweep = done + 1 + np.arange(m)
        after = sweep - burn_in
        record = np.where((after > 0) & (after % thin == 0), after // thin - 1, -1).astype(np.intp)
        kern.gibbs_sweeps(W, spec.b0_table, spec.b_table, state, uniforms, record, out)
        done += m
    return out[:n]


def sample_dataset(spec: ModelSpec, theta: SymmetricParams, n: int,
                   opts: SamplerOptions = SamplerOptions(), seed=None) -> Dataset:
    return Dataset(gibbs_sample(spec, theta, n, opts.burn_in, opts.thin, seed))


def generate_series(spec: ModelSpec, theta1: SymmetricParams, theta2: SymmetricParams, T: int,
                    tau_star: int, opts: SamplerOptions = SamplerOptions(), seed=None,
                    node_labels=None) -> Dataset:
    """``tau_star`` rows from the first law followed by ``T - tau_star`` from the second."""
    if not 1 <= tau_star < T:
        raise MRFError(f"tau_star must lie in [1, {T - 1}]")
    if theta1.p != theta2.p:
        raise MRFError("pre/post matrices differ in p")
    first = gibbs_sample(spec, theta1, tau_star, opts.burn_in, opts.thin, child_seed(seed, 0))
    second = gibbs_sample(spec, theta2, T - tau_star, opts.burn_in, opts.thin, child_seed(seed, 1))
    return Dataset(np.vstack([first, second]), node_labels)


@dataclass(frozen=True)
class ScenarioSpec:
    """Description of one synthetic change-point experiment."""

    p: int
    T: int
    tau_star: int
    density: float = 0.1
    similarity: float = 0.0
    seed: int = 0
    redraw_positions: bool = True
    community: CommunityLayout | None = None
    sampler: SamplerOptions = field(default_factory=SamplerOptions)

    def __post_init__(self):
        if not 0 < self.density <= 1:
            raise MRFError("density must lie in (0, 1]")
        if not 0 <= self.similarity <= 1:
            raise MRFError("similarity must lie in [0, 1]")
        if not 1 <= self.tau_star < self.T:
            raise MRFError(f"tau_star must lie in [1, {self.T - 1}]")
        if self.community is not None and self.community.p != self.p:
            raise MRFError("community sizes must sum to p")

    @property
    def alpha_star(self) -> float:
        return self.tau_star / self.T

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "p": self.p, "T": self.T, "tau_star": self.tau_star,
            "density": self.density, "similarity": self.similarity,
            "seed": self.seed, "redraw_positions": self.redraw_positions,
            "community": None if self.community is None else self.community.to_json(),
            "sampler": asdict(self.sampler),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioSpec":
        community = obj.get("community")
        return cls(
            p=int(obj["p"]), T=int(obj["T"]), tau_star=int(obj["tau_star"]),
            density=float(obj.get("density", 0.1)), similarity=float(obj.get("similarity", 0.0)),
            seed=int(obj.get("seed", 0)), redraw_positions=bool(obj.get("redraw_positions", True)),
            community=None if community is None else CommunityLayout.from_json(community),
            sampler=SamplerOptions(**obj.get("sampler", {})),
        )


def table6_scenario(T: int = 1500, tau_star: int = 750, seed: int = 0) -> ScenarioSpec:
    layout = CommunityLayout()
    return ScenarioSpec(p=layout.p, T=T, tau_star=tau_star, density=0.1, seed=seed,
                        community=layout)


def build_scenario(scenario: ScenarioSpec, spec: ModelSpec | None = None):
    """Ground-truth matrices and the simulated series for a scenario.

    Matrices use stream 0 of the scenario seed and the series stream 1, so
    the truth does not depend on sampler settings.
    """
    from .core import make_ising_spec

    spec = make_ising_spec() if spec is None else spec
    net_rng = np.random.default_rng(child_seed(scenario.seed, 0))
    if scenario.community is not None:
        theta1, theta2 = community_pair(scenario.community, net_rng)
    else:
        theta1, theta2 = similarity_pair(scenario.p, scenario.density, scenario.similarity,
                                         net_rng, scenario.redraw_positions)
    data = generate_series(spec, theta1, theta2, scenario.T, scenario.tau_star,
                           scenario.sampler, child_seed(scenario.seed, 1))
    return theta1, theta2, data
