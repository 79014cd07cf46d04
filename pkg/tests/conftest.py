import numpy as np
import pytest

from hilbert_que.field_core import available_fields, get_field

FIELDS = ["q", "qsqrt2", "qsqrt5", "cubic49"]


@pytest.fixture(params=FIELDS)
def field(request):
    return get_field(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def test_shipped_fields_present():
    assert set(FIELDS) <= set(available_fields())
