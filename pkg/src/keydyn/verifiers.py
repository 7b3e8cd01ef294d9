"""Statistical keystroke verifiers: Similarity, Absolute, and ITAD.

All three compare an enrollment pattern A against a probe pattern B over
their common feature set and return a match score in [0, 1]. Profiles are
any Mapping from feature key to a non-empty sequence of durations;
:class:`~keydyn.features.FeatureDictionary` qualifies.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import EmptyListError
from .features import FeatureKey


class Verifier(str, Enum):
    SIMILARITY = "sim"
    ABSOLUTE = "abs"
    ITAD = "itad"


class SimilarityMode(str, Enum):
    """Which direction the Similarity verifier counts a feature match.

    AS_PUBLISHED counts a feature when at most half of the probe values fall
    inside the enrollment band (median +/- std), which makes identical
    profiles score 0. CORRECTED counts the complement, so overlap raises the
    score. Both are exposed; AS_PUBLISHED is the default.
    """

    AS_PUBLISHED = "published"
    CORRECTED = "corrected"


DEFAULT_ABSOLUTE_THRESHOLD = 1.5


@dataclass(frozen=True)
class MatchScore:
    value: float
    verifier: Verifier
    mode: SimilarityMode | None = None

    def __float__(self) -> float:
        return self.value


ProfileLike = Mapping[FeatureKey, Sequence[float]]


def median(values: Sequence[float]) -> float:
    """Middle of the sorted values; mean of the two middles for even length."""
    n = len(values)
    if n == 0:
        raise EmptyListError("median of empty list")
    ordered = sorted(values)
    mid = n // 2
    if n % 2 == 1:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2


def sample_std(values: Sequence[float]) -> float | None:
    """Sample standard deviation (n-1 denominator); None when n < 2."""
    if len(values) < 2:
        return None
    return float(np.std(np.asarray(values, dtype=np.float64), ddof=1))


def ecdf(values: Sequence[float], query: float) -> float:
    """Fraction of values <= query (right-continuous empirical CDF)."""
    if len(values) == 0:
        raise EmptyListError("ecdf of empty list")
    return sum(1 for v in values if v <= query) / len(values)


class PreparedFeature(NamedTuple):
    values: np.ndarray  # sorted ascending, float64
    median: float
    std: float  # nan when count < 2
    count: int


PreparedProfile = dict[FeatureKey, PreparedFeature]


def prepare_profile(profile: ProfileLike) -> PreparedProfile:
    """Precompute per-feature sorted values, median, and std.

    Prepare each profile once when scoring many pairs; all scoring kernels
    operate on this form.
    """
    prepared: PreparedProfile = {}
    for key, raw in profile.items():
        arr = np.sort(np.asarray(raw, dtype=np.float64))
        n = arr.size
        if n == 0:
            raise EmptyListError(f"empty value list for feature {key}")
        mid = n // 2
        med = float(arr[mid]) if n % 2 == 1 else (float(arr[mid - 1]) + float(arr[mid])) / 2
        std = float(np.std(arr, ddof=1)) if n >= 2 else float("nan")
        prepared[key] = PreparedFeature(arr, med, std, n)
    return prepared


def _similarity_counts(enroll: PreparedProfile, probe: PreparedProfile) -> tuple[int, int]:
    """Return (k, t): features where at most half the probe values fall in band."""
    common = enroll.keys() & probe.keys()
    k = 0
    for f in common:
        pa = enroll[f]
        pb = probe[f]
        # std undefined for a single sample: fall back to that value / 4
        sigma = pa.std if pa.count >= 2 else pa.values[0] / 4.0
        lo = pa.median - sigma
        hi = pa.median + sigma
        # strict open interval; inverted/empty band counts nothing
        v = int(np.searchsorted(pb.values, hi, side="left")) - int(np.searchsorted(pb.values, lo, side="right"))
        if v < 0:
            v = 0
        if v / pb.count <= 0.5:
            k += 1
    return k, len(common)


def similarity_from_prepared(enroll: PreparedProfile, probe: PreparedProfile, mode: SimilarityMode) -> float:
    k, t = _similarity_counts(enroll, probe)
    if t == 0:
        return 0.0
    # k/t + (t-k)/t == 1.0 holds exactly in binary floating point
    return k / t if mode is SimilarityMode.AS_PUBLISHED else (t - k) / t


def _medians_match(med_a: float, med_b: float, threshold: float) -> bool:
    if med_a > 0 and med_b > 0:
        return max(med_a, med_b) / min(med_a, med_b) <= threshold
    if med_a == 0 and med_b == 0:
        return True
    if med_a == 0 or med_b == 0:
        return False
    if (med_a > 0) != (med_b > 0):
        return False
    # both negative: compare magnitudes, ratio >= 1 by construction
    hi = max(abs(med_a), abs(med_b))
    lo = min(abs(med_a), abs(med_b))
    return hi / lo <= threshold


def absolute_from_prepared(enroll: PreparedProfile, probe: PreparedProfile, threshold: float) -> float:
    common = enroll.keys() & probe.keys()
    if not common:
        return 0.0
    matches = sum(1 for f in common if _medians_match(enroll[f].median, probe[f].median, threshold))
    return matches / len(common)


def itad_from_prepared(enroll: PreparedProfile, probe: PreparedProfile) -> float:
    common = enroll.keys() & probe.keys()
    if not common:
        return 0.0
    total = 0.0
    count = 0
    # fixed accumulation order keeps the float result reproducible
    for f in sorted(common):
        pa = enroll[f]
        pb = probe[f]
        p = np.searchsorted(pa.values, pb.values, side="right") / pa.count
        s = np.where(pb.values <= pa.median, p, 1.0 - p)
        total += float(s.sum())
        count += pb.count
    return total / count


def similarity_score(
    enroll: ProfileLike,
    probe: ProfileLike,
    mode: SimilarityMode = SimilarityMode.AS_PUBLISHED,
) -> float:
    """Weighted similarity score of probe B against enrollment A.

    Per common feature: band = median(A[f]) +/- std(A[f]) (value/4 when A[f]
    has a single sample); v/u = fraction of B[f] strictly inside the band.
    AS_PUBLISHED counts the feature when v/u <= 0.5, CORRECTED when > 0.5;
    the score is counted features over total common features.
    """
    return similarity_from_prepared(prepare_profile(enroll), prepare_profile(probe), mode)


def absolute_score(
    enroll: ProfileLike,
    probe: ProfileLike,
    threshold: float = DEFAULT_ABSOLUTE_THRESHOLD,
) -> float:
    """Absolute match score: fraction of common features whose medians agree.

    Two medians agree when the larger-to-smaller ratio is at most
    ``threshold``. Medians of opposite sign never agree; a zero median agrees
    only with another exact zero; negative pairs compare by magnitude.
    """
    if not threshold > 1:
        raise ValueError(f"threshold must be > 1, got {threshold}")
    return absolute_from_prepared(prepare_profile(enroll), prepare_profile(probe), threshold)


def itad_score(enroll: ProfileLike, probe: ProfileLike) -> float:
    """Instance-based tail area density score.

    Every probe value y contributes the tail mass of the enrollment ECDF on
    y's side of the enrollment median; the score is the mean over one flat
    list across all common features, so values from large lists weigh more.
    """
    return itad_from_prepared(prepare_profile(enroll), prepare_profile(probe))


def score_profiles(
    enroll: ProfileLike,
    probe: ProfileLike,
    verifier: Verifier,
    *,
    mode: SimilarityMode = SimilarityMode.AS_PUBLISHED,
    threshold: float = DEFAULT_ABSOLUTE_THRESHOLD,
) -> MatchScore:
    """Score one pair with the requested verifier, labeled with its settings."""
    if verifier is Verifier.SIMILARITY:
        return MatchScore(similarity_score(enroll, probe, mode), verifier, mode)
    if verifier is Verifier.ABSOLUTE:
        return MatchScore(absolute_score(enroll, probe, threshold), verifier)
    return MatchScore(itad_score(enroll, probe), verifier)
