"""Shared test utilities: box shorthand, stub solvers, strategies."""

from hypothesis import strategies as st

from qsqs.geometry import BoundingBox
from qsqs.qubo import qubo_energy
from qsqs.solvers import Sample, SampleSet


def box(x1, y1, x2, y2, score=0.5, class_id=0, source_index=0):
    return BoundingBox(x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2),
                       score=float(score), class_id=class_id,
                       source_index=source_index)


# The containment pair used throughout: a thin column and its lower half.
# Their IoU is exactly 200/400 = 0.5 and the closeness-times-area-ratio
# feature lands at about 0.40037, as close to 0.4 as any geometry gets.
def occlusion_pair():
    big = box(0, 0, 1, 400, score=0.9, source_index=0)
    small = box(0, 0, 1, 200, score=0.6, source_index=1)
    return [big, small]


class FixedBitsSolver:
    """Stub solver that always answers with one fixed bit string."""

    def __init__(self, bits):
        self.bits = tuple(int(b) for b in bits)

    def sample(self, instance):
        energy = qubo_energy(instance, self.bits)
        return SampleSet(samples=(Sample(bits=self.bits, energy=energy, count=1),),
                         total_reads=1, sense=instance.sense)


@st.composite
def box_strategy(draw, class_id=0, source_index=0):
    x1 = draw(st.floats(-50, 50))
    y1 = draw(st.floats(-50, 50))
    w = draw(st.floats(0.5, 40))
    h = draw(st.floats(0.5, 40))
    score = draw(st.floats(0.02, 1.0))
    return box(x1, y1, x1 + w, y1 + h, score=score, class_id=class_id,
               source_index=source_index)


@st.composite
def box_list_strategy(draw, min_size=1, max_size=8, class_id=0):
    n = draw(st.integers(min_size, max_size))
    return [draw(box_strategy(class_id=class_id, source_index=i))
            for i in range(n)]
