import pytest

from rinlink import Constellation, LinkParams, build_channel


@pytest.fixture
def pam4():
    return Constellation.pam(4)


@pytest.fixture
def pam4_channel():
    return build_channel(LinkParams.for_order(4), Constellation.pam(4), 0.0)


@pytest.fixture
def pam6_channel():
    return build_channel(LinkParams.for_order(6), Constellation.pam(6), 0.0)
