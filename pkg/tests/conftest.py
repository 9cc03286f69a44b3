import pytest

from modfix import Affine, DomainBox, MeasureGrid, ModularFn, StepSequence, StopRule


@pytest.fixture
def scalar():
    return MeasureGrid.scalar()


@pytest.fixture
def absolute():
    return ModularFn.absolute()


@pytest.fixture
def example_map():
    return Affine(2 / 3, 1 / 3)


@pytest.fixture
def example_box():
    return DomainBox.uniform(1, 8)


@pytest.fixture
def half():
    return StepSequence.constant(0.5)


@pytest.fixture
def stop_1e5():
    return StopRule.to_fixed_point(1.0, 1e-5)
