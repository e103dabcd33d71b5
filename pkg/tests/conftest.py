import pytest

from cwbind.suite import CipherSuite, Drbg, SuiteConfig


@pytest.fixture
def suite() -> CipherSuite:
    return CipherSuite(SuiteConfig())


@pytest.fixture
def rng() -> Drbg:
    return Drbg.from_int(0xC0FFEE)
