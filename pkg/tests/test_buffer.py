import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankreg.buffer import STRATEGIES, PositiveBuffer, merged_batch
from rankreg.exceptions import ConfigurationError, InvalidArgumentError


def filled(strategy, scores, capacity=None):
    buf = PositiveBuffer(capacity or len(scores), strategy)
    for i, s in enumerate(scores):
        assert buf.push(i, [float(i)], s) is None
    return buf


def simulate(strategy, capacity, scores):
    """Reference model: list of (id, score, arrival); returns final ids and eviction order."""
    held, evicted = [], []
    for i, s in enumerate(scores):
        if len(held) == capacity:
            if strategy == "fifo":
                victim = min(held, key=lambda e: e[2])
            elif strategy == "dequeue-max":
                victim = max(held, key=lambda e: (e[1], -e[2]))
            else:
                victim = min(held, key=lambda e: (e[1], e[2]))
            held.remove(victim)
            evicted.append(victim[0])
        held.append((i, s, i))
    return sorted(e[0] for e in held), evicted


def test_dequeue_max_evicts_most_confident():
    buf = filled("dequeue-max", [0.9, 0.4])
    out = buf.push(2, [2.0], 0.2)
    assert out.last_score == 0.9
    assert sorted(buf.scores().tolist()) == [0.2, 0.4]


def test_fifo_evicts_oldest():
    buf = filled("fifo", [0.9, 0.4])
    out = buf.push(2, [2.0], 0.2)
    assert out.sample_id == 0
    assert sorted(buf.sample_ids()) == [1, 2]


def test_dequeue_min_evicts_least_confident():
    buf = filled("dequeue-min", [0.9, 0.4])
    out = buf.push(2, [2.0], 0.95)
    assert out.last_score == 0.4


def test_under_capacity_appends():
    buf = PositiveBuffer(3)
    assert buf.push(0, [0.0], 1.0) is None
    assert len(buf) == 1


def test_rejects_negative_sample():
    with pytest.raises(InvalidArgumentError):
        PositiveBuffer(2).push(0, [0.0], 0.1, label=0)


def test_rejects_bad_config():
    with pytest.raises(ConfigurationError):
        PositiveBuffer(2, "lifo")
    with pytest.raises(ConfigurationError):
        PositiveBuffer(-1)


def test_zero_capacity_holds_nothing():
    buf = PositiveBuffer(0)
    out = buf.push(0, [0.0], 0.3)
    assert out.sample_id == 0 and len(buf) == 0


@given(
    st.sampled_from(STRATEGIES),
    st.integers(1, 8),
    st.lists(st.floats(-5, 5), max_size=60),
)
def test_matches_reference_simulator(strategy, capacity, scores):
    buf = PositiveBuffer(capacity, strategy)
    evicted = []
    for i, s in enumerate(scores):
        out = buf.push(i, [0.0], s)
        assert len(buf) <= capacity
        if out is not None:
            evicted.append(out.sample_id)
    ids, ref_evicted = simulate(strategy, capacity, scores)
    assert sorted(buf.sample_ids()) == ids
    assert evicted == ref_evicted


@given(st.integers(1, 8), st.lists(st.integers(0, 10**6), min_size=1, max_size=60, unique=True))
def test_dequeue_max_never_evicts_below_retained(capacity, keys):
    buf = PositiveBuffer(capacity, "dequeue-max")
    for i, k in enumerate(keys):
        before = buf.scores()
        out = buf.push(i, [0.0], float(k))
        if out is not None:
            assert out.last_score == before.max()


def test_fifo_is_a_ring_buffer():
    buf = PositiveBuffer(4, "fifo")
    evicted = [buf.push(i, [0.0], np.sin(i)) for i in range(20)]
    assert [e.sample_id for e in evicted if e is not None] == list(range(16))


def test_refresh_scores():
    buf = PositiveBuffer(3)
    buf.refresh_scores(lambda X: X[:, 0])  # empty: no-op
    for i in range(3):
        buf.push(i, [float(i), 1.0], 0.0)
    order = buf.sample_ids()
    buf.refresh_scores(lambda X: np.full(len(X), 7.0))
    assert buf.scores().tolist() == [7.0, 7.0, 7.0]
    buf.refresh_scores(lambda X: -((X[:, 0] - 1.0) ** 2))  # id 1 scores highest
    assert buf.sample_ids() == order
    out = buf.push(3, [3.0, 1.0], -10.0)
    assert out.sample_id == 1


def test_merged_batch_ordering():
    X = np.arange(6.0).reshape(3, 2)
    y = np.array([0, 1, 0])
    Xm, ym, origin = merged_batch(X, y, None)
    assert np.array_equal(Xm, X) and not origin.any()

    buf = PositiveBuffer(2)
    buf.push(10, [100.0, 101.0], 0.1)
    buf.push(11, [110.0, 111.0], 0.2)
    Xm, ym, origin = merged_batch(X, y, buf)
    assert Xm[:3].tolist() == X.tolist()
    assert Xm[3:].tolist() == [[100.0, 101.0], [110.0, 111.0]]
    assert ym.tolist() == [0, 1, 0, 1, 1]
    assert origin.tolist() == [False, False, False, True, True]


def test_merged_batch_sizes():
    buf = PositiveBuffer(32)
    for i in range(40):
        buf.push(i, [0.0, 0.0], float(i))
    Xm, ym, _ = merged_batch(np.zeros((32, 2)), np.zeros(32, dtype=int), buf)
    assert Xm.shape == (64, 2) and ym.sum() == 32
