"""Sample plans and deterministic index-tuple streams."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .exceptions import PlanError
from .metric_core import FiniteSpace, Space

CHUNK = 1 << 15
EXHAUSTIVE_LIMIT = 10**8


def child_seed(seed: int, label: str) -> int:
    """Derive an independent 64-bit seed for a labelled sub-stream."""
    digest = hashlib.blake2b(f"{int(seed)}/{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, label: str) -> np.random.Generator:
    # Philox is counter-based: streams depend only on (seed, label).
    return np.random.Generator(np.random.Philox(key=child_seed(seed, label)))


@dataclass
class SamplePlan:
    """How configurations are drawn for a check.

    ``mode`` is ``"exhaustive"`` (every index tuple over the pool) or
    ``"random"`` (``tuple_count`` uniform draws with replacement). ``tuples``
    optionally pins the exact n-tuples used by tuple-level checks.
    """

    mode: str = "random"
    tuple_count: int = 10_000
    seed: int = 0
    point_pool: object = None
    tuples: object = None

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise PlanError(f"unknown sample mode {self.mode!r}")
        if int(self.tuple_count) < 1:
            raise PlanError("tuple_count must be >= 1")
        self.tuple_count = int(self.tuple_count)
        self.seed = int(self.seed)

    @classmethod
    def uniform_pool(cls, low: float, high: float, count: int, seed: int, **kw) -> "SamplePlan":
        """Plan over ``count`` reals drawn uniformly from ``[low, high)``."""
        pool = make_rng(seed, "pool").uniform(low, high, size=count)
        return cls(seed=seed, point_pool=pool, **kw)

    def pool_for(self, space: Space) -> np.ndarray:
        if self.point_pool is not None:
            pool = space.coerce_points(self.point_pool)
        elif isinstance(space, FiniteSpace):
            pool = space.all_points()
        elif self.tuples is not None:
            pool = np.empty((0,) + space.point_shape)
        else:
            raise PlanError("real-vector spaces need an explicit point_pool")
        if self.tuples is None and len(pool) == 0:
            raise PlanError("point pool is empty")
        return pool

    def index_batches(self, pool_size: int, width: int, label: str) -> Iterator[np.ndarray]:
        """Yield ``(B, width)`` arrays of pool indices.

        Exhaustive mode walks every index tuple in lexicographic order.
        """
        if self.mode == "exhaustive":
            total = pool_size**width
            if total > EXHAUSTIVE_LIMIT:
                raise PlanError(
                    f"exhaustive enumeration of {pool_size}^{width} = {total} configurations "
                    f"exceeds the limit {EXHAUSTIVE_LIMIT}"
                )
            shape = (pool_size,) * width
            for start in range(0, total, CHUNK):
                flat = np.arange(start, min(start + CHUNK, total))
                yield np.stack(np.unravel_index(flat, shape), axis=1).astype(np.int64)
        else:
            rng = make_rng(self.seed, label)
            left = self.tuple_count
            while left > 0:
                size = min(CHUNK, left)
                yield rng.integers(0, pool_size, size=(size, width), dtype=np.int64)
                left -= size

    def point_batches(self, space: Space, pool: np.ndarray, width: int, label: str) -> Iterator[np.ndarray]:
        for idx in self.index_batches(len(pool), width, label):
            yield pool[idx]
