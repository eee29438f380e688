"""Synthetic instance generation and dataset persistence.

Rounds are drawn i.i.d. from one of four entry distributions (gaussian,
cauchy, uniform(-1,1), gamma(shape=2, scale=2)); each round's constraint
matrix is normalized to unit Frobenius norm and the target/reward vectors to
unit Euclidean norm.  Randomness comes from numpy's PCG64 generator seeded
through ``SeedSequence(entropy=seed, spawn_key=(round_index,))``, one
substream per round, so a dataset prefix is stable when the horizon grows.

Datasets persist as JSON Lines, one round per line::

    {"A": [[...m rows of d...]], "b": [...], "u": [...], "blocks": [offsets]}

with doubles written at 17 significant digits (bit-exact round trip).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .oracle import RoundData, SimplexBlocks

__all__ = [
    "GeneratorConfig",
    "DatasetFormatError",
    "generate",
    "save_dataset",
    "load_dataset",
]

_DISTRIBUTIONS = ("gaussian", "cauchy", "uniform", "gamma")


class DatasetFormatError(ValueError):
    """A dataset file that cannot be parsed into rounds."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Shape, distribution and seed of a synthetic dataset.

    ``blocks`` defaults to a single simplex spanning all d coordinates (one
    request per round); ``seed`` is reduced mod 2**64.
    """

    distribution: str
    m: int
    d: int
    horizon: int
    blocks: SimplexBlocks | None = field(default=None)
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in _DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if min(self.m, self.d, self.horizon) < 1:
            raise ValueError("m, d and horizon must be positive")
        blocks = self.blocks or SimplexBlocks((0, self.d))
        if blocks.dim != self.d:
            raise ValueError("blocks do not span d coordinates")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "seed", int(self.seed) % 2**64)


def _draw(rng: np.random.Generator, distribution: str, shape) -> np.ndarray:
    if distribution == "gaussian":
        return rng.standard_normal(shape)
    if distribution == "cauchy":
        return rng.standard_cauchy(shape)
    if distribution == "uniform":
        return rng.uniform(-1.0, 1.0, shape)
    return rng.gamma(shape=2.0, scale=2.0, size=shape)


def _unit(rng, distribution, shape, norm) -> np.ndarray:
    while True:
        v = _draw(rng, distribution, shape)
        n = norm(v)
        if n > 0.0 and math.isfinite(n):
            return v / n


def generate(config: GeneratorConfig) -> list[RoundData]:
    """Generate ``horizon`` i.i.d. normalized rounds, deterministic in the
    seed (per-round substreams)."""
    rounds = []
    for t in range(config.horizon):
        seq = np.random.SeedSequence(entropy=config.seed, spawn_key=(t,))
        rng = np.random.default_rng(seq)
        a = _unit(rng, config.distribution, (config.m, config.d), np.linalg.norm)
        b = _unit(rng, config.distribution, config.m, np.linalg.norm)
        u = _unit(rng, config.distribution, config.d, np.linalg.norm)
        rounds.append(RoundData(a=a, b=b, u=u, blocks=config.blocks))
    return rounds


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _vec(v) -> str:
    return "[" + ",".join(_fmt(x) for x in v) + "]"


def save_dataset(path, rounds) -> None:
    """Write rounds as JSON Lines with 17-significant-digit doubles."""
    with open(path, "w", newline="\n") as fh:
        for r in rounds:
            rows = ",".join(_vec(row) for row in r.a)
            offsets = ",".join(str(o) for o in r.blocks.offsets)
            fh.write(
                f'{{"A":[{rows}],"b":{_vec(r.b)},"u":{_vec(r.u)},'
                f'"blocks":[{offsets}]}}\n'
            )


def _parse_round(obj: dict, lineno: int) -> RoundData:
    for key in ("A", "b", "u", "blocks"):
        if key not in obj:
            raise DatasetFormatError(f'line {lineno}: missing field "{key}"')
    try:
        blocks = SimplexBlocks(tuple(obj["blocks"]))
        return RoundData(
            a=np.asarray(obj["A"], dtype=float),
            b=np.asarray(obj["b"], dtype=float),
            u=np.asarray(obj["u"], dtype=float),
            blocks=blocks,
        )
    except (ValueError, TypeError) as exc:
        raise DatasetFormatError(f"line {lineno}: {exc}") from exc


def load_dataset(path) -> list[RoundData]:
    """Read a JSON Lines dataset; raises DatasetFormatError with the line
    number on malformed input or inconsistent dimensions."""
    rounds: list[RoundData] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: malformed JSON: {exc}") from exc
            r = _parse_round(obj, lineno)
            if rounds and (r.m, r.d) != (rounds[0].m, rounds[0].d):
                raise DatasetFormatError(
                    f"line {lineno}: dimensions ({r.m},{r.d}) differ from "
                    f"({rounds[0].m},{rounds[0].d})"
                )
            rounds.append(r)
    if not rounds:
        raise DatasetFormatError("no rounds")
    return rounds
