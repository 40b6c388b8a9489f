"""Admissible support families (abstract simplicial complexes) and block products.

Supports are sorted tuples of column indices. A complex is stored by its
maximal faces only; downward closure is implicit. Uniform complexes (all
supports of size at most s) keep a lazy combinatorial iterator instead of an
explicit face list so m choose s never has to be materialized.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator

import numpy as np

Support = tuple[int, ...]
ProductSupport = tuple[Support, ...]

__all__ = [
    "Asc",
    "ProductSupport",
    "Support",
    "flatten_product_asc",
    "flatten_support",
    "maximal_pair_unions",
    "num_product_faces",
    "product_faces",
    "restrict",
    "support_union",
]


def _normalize_support(support: Iterable[int], ambient: int) -> Support:
    out = tuple(sorted({int(i) for i in support}))
    if out and (out[0] < 0 or out[-1] >= ambient):
        raise ValueError(f"support {out} out of range for ambient {ambient}")
    return out


@dataclass(frozen=True)
class Asc:
    """Downward-closed family of supports over {0..ambient-1}.

    Either uniform (every support of size <= uniform_s) or explicit
    (stored maximal faces, pairwise non-nested).
    """

    ambient: int
    uniform_s: int | None = None
    maximal: tuple[Support, ...] | None = None

    def __post_init__(self) -> None:
        if self.ambient < 0:
            raise ValueError("ambient must be nonnegative")
        if (self.uniform_s is None) == (self.maximal is None):
            raise ValueError("exactly one of uniform_s / maximal must be set")
        if self.uniform_s is not None and not 0 <= self.uniform_s <= self.ambient:
            raise ValueError(f"sparsity level {self.uniform_s} outside [0, {self.ambient}]")

    @classmethod
    def uniform(cls, ambient: int, s: int) -> "Asc":
        return cls(ambient=ambient, uniform_s=int(s))

    @classmethod
    def explicit(cls, ambient: int, faces: Iterable[Iterable[int]]) -> "Asc":
        normalized = {_normalize_support(f, ambient) for f in faces}
        if not normalized:
            normalized = {()}
        # drop faces nested inside another so the stored list is antichain
        keep = [
            f
            for f in normalized
            if not any(f != g and set(f) <= set(g) for g in normalized)
        ]
        return cls(ambient=ambient, maximal=tuple(sorted(keep)))

    @property
    def is_uniform(self) -> bool:
        return self.uniform_s is not None

    def is_face(self, support: Iterable[int]) -> bool:
        s = _normalize_support(support, self.ambient)
        if self.uniform_s is not None:
            return len(s) <= self.uniform_s
        return any(set(s) <= set(f) for f in self.maximal)

    def maximal_faces(self) -> Iterator[Support]:
        """Maximal faces in lexicographic order."""
        if self.uniform_s is not None:
            return iter(itertools.combinations(range(self.ambient), self.uniform_s))
        return iter(self.maximal)

    def num_maximal_faces(self) -> int:
        if self.uniform_s is not None:
            return comb(self.ambient, self.uniform_s)
        return len(self.maximal)

    def max_face_size(self) -> int:
        if self.uniform_s is not None:
            return self.uniform_s
        return max((len(f) for f in self.maximal), default=0)

    def to_json(self) -> dict:
        if self.uniform_s is not None:
            return {"kind": "uniform", "s": self.uniform_s}
        return {"kind": "explicit", "maximal": [list(f) for f in self.maximal]}

    @classmethod
    def from_json(cls, obj, ambient: int) -> "Asc":
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj.get("kind")
        if kind == "uniform":
            return cls.uniform(ambient, int(obj["s"]))
        if kind == "explicit":
            return cls.explicit(ambient, obj["maximal"])
        raise ValueError(f"unknown complex kind: {kind!r}")


def product_faces(asc: Asc, blocks: int) -> Iterator[ProductSupport]:
    """All tuples of maximal faces, one per block (exhaustive small-instance use)."""
    faces = list(asc.maximal_faces())
    return itertools.product(faces, repeat=blocks)


def num_product_faces(asc: Asc, blocks: int) -> int:
    return asc.num_maximal_faces() ** blocks


def flatten_support(blocks_support: ProductSupport, m: int) -> Support:
    """Identify block k index i with the flat index k*m + i."""
    return tuple(k * m + i for k, s in enumerate(blocks_support) for i in s)


def flatten_product_asc(asc: Asc, blocks: int) -> Asc:
    """The product complex as an explicit complex over blocks * ambient indices."""
    m = asc.ambient
    faces = [flatten_support(ps, m) for ps in product_faces(asc, blocks)]
    return Asc.explicit(blocks * m, faces)


def support_union(a: ProductSupport, b: ProductSupport) -> ProductSupport:
    if len(a) != len(b):
        raise ValueError("block counts differ")
    return tuple(tuple(sorted(set(sa) | set(sb))) for sa, sb in zip(a, b))


def restrict(x, support: Iterable[int]) -> np.ndarray:
    """Copy of x with entries outside the support zeroed (dimension preserved)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    idx = list(support)
    if idx:
        out[idx] = x[idx]
    return out


def maximal_pair_unions(asc: Asc) -> list[tuple[Support, Support, Support]]:
    """Inclusion-maximal unions S | S' of two maximal faces, with a witness pair.

    Injectivity-style checks over all pairs of faces only need these unions:
    every other pairwise union is contained in one of them. Returned as
    (union, face_a, face_b) sorted by union.
    """
    if asc.uniform_s is not None:
        s, m = asc.uniform_s, asc.ambient
        u = min(2 * s, m)
        out = []
        for union in itertools.combinations(range(m), u):
            out.append((union, union[:s], union[-s:] if s else ()))
        return out
    unions: dict[Support, tuple[Support, Support]] = {}
    faces = list(asc.maximal)
    for i, fa in enumerate(faces):
        for fb in faces[i:]:
            union = tuple(sorted(set(fa) | set(fb)))
            unions.setdefault(union, (fa, fb))
    keep = [
        u for u in unions if not any(u != v and set(u) <= set(v) for v in unions)
    ]
    return [(u, unions[u][0], unions[u][1]) for u in sorted(keep)]
