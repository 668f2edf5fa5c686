from fractions import Fraction

import pytest

from app.config import settings
from app.services.dynamics import RevisionProcess
from app.services.zoo import TRIANGLE_STATES, make_lb_pos_instance, make_lb_unit_instance, make_parallel_links, make_triangle


@pytest.fixture(autouse=True)
def _data_dir(tmp_path, monkeypatch):
    # отчёты пишутся во временный каталог, а не в ./data
    monkeypatch.setattr(settings, "DATA_DIR", tmp_path / "data")


@pytest.fixture(scope="session")
def triangle():
    return make_triangle()


@pytest.fixture(scope="session")
def tri():
    """Имена состояний треугольника → StateId."""
    return dict(TRIANGLE_STATES)


@pytest.fixture(scope="session")
def lb_unit_22():
    return make_lb_unit_instance(2, 2)


@pytest.fixture(scope="session")
def lb_pos_22():
    return make_lb_pos_instance(2, 2)


@pytest.fixture(scope="session")
def parallel_12():
    return make_parallel_links([Fraction(1), Fraction(2)], 3)


@pytest.fixture(scope="session")
def independent():
    return RevisionProcess.independent(Fraction(1, 2))


@pytest.fixture(scope="session")
def asynchronous():
    return RevisionProcess.asynchronous()
