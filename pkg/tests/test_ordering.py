"""Deterministic ordering: known-answer vectors, restart stability, uniformity."""

import subprocess
import sys
from collections import Counter

import pytest
from scipy.stats import chi2, norm

from emomap.ordering import (
    SplitMix64,
    deterministic_shuffle,
    fnv1a_64,
    ordering_seed,
    participant_order,
)

# Published FNV-1a 64-bit test vectors (IETF FNV draft).
FNV_VECTORS = [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
]

# Published SplitMix64 sequences (reference C implementation).
SPLITMIX_VECTORS = [
    (0, [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, 0xF88BB8A8724C81EC]),
    (42, [0xBDD732262FEB6E95, 0x28EFE333B266F103, 0x47526757130F9F52, 0x581CE1FF0E4AE394]),
    (0x123456789ABCDEF, [0x157A3807A48FAA9D, 0xD573529B34A1D093, 0x2F90B72E996DCCBE, 0xA2D419334C4667EC]),
]


@pytest.mark.parametrize("data,expected", FNV_VECTORS)
def test_fnv1a_known_answers(data, expected):
    assert fnv1a_64(data) == expected


@pytest.mark.parametrize("seed,expected", SPLITMIX_VECTORS)
def test_splitmix64_known_answers(seed, expected):
    rng = SplitMix64(seed)
    assert [rng.next_u64() for _ in expected] == expected


# Frozen permutations: these bytes must never change, or deployed
# experiments would reorder pictures under participants' feet.
FROZEN_ORDERS = [
    ("exp-1", "p-1", list("abcdef"), list("cadbef")),
    ("exp-1", "p-2", list("abcdef"), list("fbdeac")),
]


@pytest.mark.parametrize("exp,pid,pictures,expected", FROZEN_ORDERS)
def test_frozen_permutations(exp, pid, pictures, expected):
    assert participant_order(exp, pid, pictures) == expected


def test_same_inputs_same_permutation():
    pictures = [f"pic{i}" for i in range(12)]
    a = participant_order("e", "p", pictures)
    b = participant_order("e", "p", pictures)
    assert a == b
    assert sorted(a) == sorted(pictures)


def test_identity_and_small_inputs():
    assert participant_order("e", "p", []) == []
    assert participant_order("e", "p", ["only"]) == ["only"]


def test_permutation_survives_process_restart():
    code = (
        "from emomap.ordering import participant_order;"
        "print(','.join(participant_order('exp-9', 'part-9', [str(i) for i in range(8)])))"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    ).stdout.strip()
    expected = ",".join(participant_order("exp-9", "part-9", [str(i) for i in range(8)]))
    assert out == expected


def test_uniformity_chi_squared():
    """10,000 participants x 6 pictures: frequencies consistent with uniform."""
    pictures = list("abcdef")
    counts = Counter(
        tuple(participant_order("exp-uniform", f"participant-{i}", pictures))
        for i in range(10_000)
    )
    n_perms = 720
    expected = 10_000 / n_perms
    stat = sum((counts[perm] - expected) ** 2 / expected
               for perm in _all_permutations(pictures))
    threshold = chi2.isf(norm.sf(5.0), df=n_perms - 1)
    assert stat < threshold, f"chi2 stat {stat:.1f} exceeds 5-sigma threshold {threshold:.1f}"

    # per-permutation binomial check at 5 sigma
    p = 1 / n_perms
    sigma = (10_000 * p * (1 - p)) ** 0.5
    worst = max(abs(counts[perm] - expected) for perm in _all_permutations(pictures))
    assert worst <= 5 * sigma


def _all_permutations(items):
    from itertools import permutations

    return [tuple(p) for p in permutations(items)]
