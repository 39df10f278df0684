import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nestfuse.errors import ContractError
from nestfuse.marginals import normalize_ranks, universe_marginals
from nestfuse.runs import RunList, build_universe


def test_three_documents():
    np.testing.assert_array_equal(normalize_ranks([1, 2, 3]), [0.75, 0.50, 0.25])


def test_single_document():
    assert normalize_ranks([1]).tolist() == [0.5]


def test_worst_rank_is_positive():
    u = normalize_ranks(np.arange(1, 101))
    assert u[-1] == 1 / 101
    assert u.min() > 0 and u.max() < 1


@pytest.mark.parametrize("bad", [[1, 1, 2], [0, 1, 2], [1, 2, 4], [], [1.5, 2.5]])
def test_rejects_non_permutations(bad):
    with pytest.raises(ContractError):
        normalize_ranks(bad)


@given(st.permutations(list(range(1, 40))))
def test_fresh_list_properties(perm):
    r = np.array(perm)
    m = r.size
    u = normalize_ranks(r)
    assert sorted(u.tolist()) == [k / (m + 1) for k in range(1, m + 1)]
    assert u.sum() == pytest.approx(m / 2, abs=1e-12)
    order_r = np.argsort(r)
    assert np.all(np.diff(u[order_r]) < 0)


def test_universe_marginals_align_with_docs():
    runs = [RunList.from_rankings("A", {"Q": ["D1", "D2"]}), RunList.from_rankings("B", {"Q": ["D2", "D3"]})]
    a, b = universe_marginals(build_universe(runs, "Q"))
    assert a.as_dict() == {"D1": 0.75, "D2": 0.5, "D3": 0.25}
    assert b.as_dict() == {"D1": 0.25, "D2": 0.75, "D3": 0.5}
