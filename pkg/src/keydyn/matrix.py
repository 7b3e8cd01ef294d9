"""Score matrices over a user roster, and score-level fusion."""

from __future__ import annotations

import io
import json
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import RosterMismatchError, ShapeMismatchError
from .verifiers import (
    DEFAULT_ABSOLUTE_THRESHOLD,
    PreparedProfile,
    ProfileLike,
    SimilarityMode,
    Verifier,
    absolute_from_prepared,
    itad_from_prepared,
    prepare_profile,
    similarity_from_prepared,
)


@dataclass(frozen=True)
class ScorerSpec:
    """A verifier plus its settings; identifies one score-matrix producer."""

    verifier: Verifier
    mode: SimilarityMode = SimilarityMode.AS_PUBLISHED
    threshold: float = DEFAULT_ABSOLUTE_THRESHOLD

    @property
    def label(self) -> str:
        return self.verifier.value


class FusionMethod(str, Enum):
    MEAN = "fmean"
    MEDIAN = "fmedian"
    MIN = "fmin"
    MAX = "fmax"


@dataclass
class ScoreMatrix:
    """n x n match scores; rows index probe users, columns enrollment users."""

    roster: tuple[str, ...]
    values: np.ndarray
    scorer: str = ""
    scenario: str = ""

    @property
    def n(self) -> int:
        return len(self.roster)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.roster), len(self.roster)):
            raise ShapeMismatchError(
                f"values shape {self.values.shape} does not match roster of {len(self.roster)}"
            )


def _score_pair(spec: ScorerSpec, enroll: PreparedProfile, probe: PreparedProfile) -> float:
    if spec.verifier is Verifier.SIMILARITY:
        return similarity_from_prepared(enroll, probe, spec.mode)
    if spec.verifier is Verifier.ABSOLUTE:
        return absolute_from_prepared(enroll, probe, spec.threshold)
    return itad_from_prepared(enroll, probe)


def _score_rows(
    args: tuple[ScorerSpec, list[PreparedProfile], dict[str, PreparedProfile], list[str]],
) -> list[list[float]]:
    spec, probe_chunk, enroll_map, roster = args
    return [[_score_pair(spec, enroll_map[u], probe) for u in roster] for probe in probe_chunk]


def build_matrix_prepared(
    enroll: dict[str, PreparedProfile],
    probe: dict[str, PreparedProfile],
    spec: ScorerSpec,
    *,
    scenario: str = "",
    jobs: int = 1,
    executor: Executor | None = None,
) -> ScoreMatrix:
    """Score every probe user against every enrollment user.

    ``values[i][j]`` is the score of probe ``roster[i]`` against enrollment
    ``roster[j]``. With ``jobs > 1`` rows are scored in contiguous chunks on
    a process pool; assembly order is fixed, so the result is identical to
    the sequential one.
    """
    if set(enroll) != set(probe):
        raise RosterMismatchError(
            f"enroll/probe user sets differ: {sorted(set(enroll) ^ set(probe))}"
        )
    roster = sorted(enroll)
    n = len(roster)
    probes = [probe[u] for u in roster]

    if jobs <= 1 or n < 2:
        rows = _score_rows((spec, probes, enroll, roster))
    else:
        chunks = [c for c in np.array_split(np.arange(n), jobs) if c.size]
        tasks = [(spec, [probes[i] for i in chunk], enroll, roster) for chunk in chunks]
        if executor is None:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                blocks = list(pool.map(_score_rows, tasks))
        else:
            blocks = list(executor.map(_score_rows, tasks))
        rows = [row for block in blocks for row in block]

    return ScoreMatrix(tuple(roster), np.array(rows, dtype=np.float64), spec.label, scenario)


def build_score_matrix(
    enroll: Mapping[str, ProfileLike],
    probe: Mapping[str, ProfileLike],
    verifier: Verifier,
    *,
    mode: SimilarityMode = SimilarityMode.AS_PUBLISHED,
    threshold: float = DEFAULT_ABSOLUTE_THRESHOLD,
    scenario: str = "",
    jobs: int = 1,
) -> ScoreMatrix:
    """Build one verifier's score matrix from raw profile maps."""
    spec = ScorerSpec(verifier, mode, threshold)
    enroll_prep = {u: prepare_profile(p) for u, p in enroll.items()}
    probe_prep = {u: prepare_profile(p) for u, p in probe.items()}
    return build_matrix_prepared(enroll_prep, probe_prep, spec, scenario=scenario, jobs=jobs)


def fuse(matrices: Sequence[ScoreMatrix], method: FusionMethod) -> ScoreMatrix:
    """Element-wise fusion of score matrices from different verifiers."""
    if len(matrices) < 2:
        raise ValueError("fusion needs at least two matrices")
    first = matrices[0]
    for m in matrices[1:]:
        if m.roster != first.roster:
            raise RosterMismatchError(f"rosters differ: {m.roster} vs {first.roster}")
        if m.values.shape != first.values.shape:
            raise ShapeMismatchError(f"shapes differ: {m.values.shape} vs {first.values.shape}")
    # sorting per cell makes mean accumulation order-independent bit-for-bit
    stacked = np.sort(np.stack([m.values for m in matrices]), axis=0)
    if method is FusionMethod.MEAN:
        # clip shaves the ulp-level float excursions past the input range
        fused = np.clip(stacked.mean(axis=0), 0.0, 1.0)
    elif method is FusionMethod.MEDIAN:
        mid = len(matrices) // 2
        if len(matrices) % 2 == 1:
            fused = stacked[mid]
        else:
            fused = np.clip((stacked[mid - 1] + stacked[mid]) / 2, 0.0, 1.0)
    elif method is FusionMethod.MIN:
        fused = stacked[0]
    else:
        fused = stacked[-1]
    return ScoreMatrix(first.roster, fused, method.value, first.scenario)


def matrix_to_csv(matrix: ScoreMatrix) -> str:
    out = io.StringIO()
    out.write("probe," + ",".join(matrix.roster) + "\n")
    for user, row in zip(matrix.roster, matrix.values):
        out.write(user + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()


def matrix_to_json(matrix: ScoreMatrix) -> str:
    doc = {
        "scorer": matrix.scorer,
        "scenario": matrix.scenario,
        "roster": list(matrix.roster),
        "values": [[float(v) for v in row] for row in matrix.values],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def matrix_from_json(text: str) -> ScoreMatrix:
    doc = json.loads(text)
    return ScoreMatrix(
        tuple(doc["roster"]),
        np.array(doc["values"], dtype=np.float64),
        doc.get("scorer", ""),
        doc.get("scenario", ""),
    )
