import time

import pytest

import rhsim


@pytest.fixture(scope="session")
def calibrated_mfh():
    """One shared calibration run against the shipped mf-H anchors."""
    start = time.perf_counter()
    profile = rhsim.calibrate(rhsim.MFH_ANCHORS, 65536, vendor_id="mf-H")
    elapsed = time.perf_counter() - start
    return {"profile": profile, "seconds": elapsed}


@pytest.fixture
def small_geometry():
    return rhsim.DramGeometry(banks_per_chip=1, rows_per_bank=64,
                              row_size_bits=64)
