import itertools
import math

import numpy as np

from hologen.choice import CHOICE_TABLE, FAMILY_ORDER, modulator_class, suggest_algorithm
from hologen.quantise import SlmSpec
from hologen.variants import Variant

SLMS = [
    SlmSpec("phase", 2, 0.0, math.pi),
    SlmSpec("phase", 4, 0.0, 2 * math.pi, full_circle=True),
    SlmSpec("phase", 256, 0.0, 2 * math.pi, full_circle=True),
    SlmSpec("phase", 17, -math.pi / 2, math.pi / 2),
    SlmSpec("amplitude", 2),
    SlmSpec("amplitude", 16),
]


def test_chart_examples():
    assert suggest_algorithm(SLMS[2])[0] is Variant.GS
    assert suggest_algorithm(SLMS[4])[0] in (Variant.DIRECT_SEARCH, Variant.SIMULATED_ANNEALING)
    for slm in SLMS:
        assert suggest_algorithm(slm, realtime=True)[0] is Variant.OSPR


def test_total_and_deterministic():
    # the input space is finite: modulator class x two flags
    for slm, pi, rt in itertools.product(SLMS, (False, True), (False, True)):
        a = suggest_algorithm(slm, pi, rt)
        assert a == suggest_algorithm(slm, pi, rt)
        assert sorted(a, key=lambda v: v.value) == sorted(Variant, key=lambda v: v.value)
        families = [v.family for v in a]
        # each family stays contiguous
        assert [f for f, _ in itertools.groupby(families)] == list(CHOICE_TABLE[(modulator_class(slm), rt)])


def test_modulator_classes():
    assert [modulator_class(s) for s in SLMS] == ["piecewise", "multi-level phase", "multi-level phase",
                                                  "multi-level phase", "piecewise", "piecewise"]
    assert set(CHOICE_TABLE) == set(itertools.product(("multi-level phase", "piecewise"), (False, True)))
    assert all(sorted(v) == sorted(FAMILY_ORDER) for v in CHOICE_TABLE.values())


def test_illumination_does_not_matter():
    lit = SlmSpec("phase", 2, 0.0, math.pi, illumination=np.full((4, 4), 2.0))
    assert suggest_algorithm(lit) == suggest_algorithm(SLMS[0])
