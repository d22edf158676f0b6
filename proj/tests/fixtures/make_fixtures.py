#!/usr/bin/env python3
"""Regenerates the small NPY interop fixtures in this directory.

The files are committed so the C++ tests can check against reference-written
bytes without needing Python at test time. Rerun after changing this script:

    python3 tests/fixtures/make_fixtures.py
"""

import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def save(name, array, version=(1, 0)):
    path = os.path.join(HERE, name)
    with open(path, "wb") as f:
        np.lib.format.write_array(f, array, version=version)
    print(f"{name}: shape={array.shape} dtype={array.dtype} version={version}")


def main():
    save("f8_vec.npy", np.array([1.0, 2.0], dtype="<f8"))
    save("f4_mat.npy", np.arange(12, dtype="<f4").reshape(3, 4))
    save("u1_img.npy", np.array([[0, 7, 255], [128, 1, 64]], dtype="|u1"))

    rng = np.random.default_rng(20240614)
    save("f8_4d.npy", rng.random((2, 3, 4, 5)).astype("<f8"))
    save("f4_big_header.npy", np.ones((2, 2), dtype="<f4"), version=(2, 0))

    fortran = np.asfortranarray(np.arange(6, dtype="<f8").reshape(2, 3))
    save("f8_fortran.npy", fortran)

    save("i4_unsupported.npy", np.arange(4, dtype="<i4"))


if __name__ == "__main__":
    main()
