"""Reproduce the second-well depth of the bundled DS2 scenario.

DS2 pairs a strong barrier (V0 = 3.0) with a shallower well on the far
side of the periodic box.  The barrier alone produces a negative-type
eigenvalue at positive frequency; the well depth is tuned by root finding
until that level coincides with the nearest positive-type level, which
turns the crossing into a critical point.

Usage: python3 scripts/tune_ds2.py [--lo 1.0 --hi 1.1]
"""

import argparse
import copy

import numpy as np
from scipy.optimize import brentq

from kreinfield.cli import build_model, bundled_scenario


def levels(config, depth):
    cfg = copy.deepcopy(config)
    cfg["potential"]["V"][1]["V0"] = -depth
    model = build_model(cfg)
    lam, R = np.linalg.eig(model.b)
    q = np.einsum("ij,ik,kj->j", R.conj(), model.K.G, R).real / np.linalg.norm(R, axis=0) ** 2
    real = np.abs(lam.imag) < 1e-9
    return lam.real[real], q[real]


def crossing_gap(config, depth, window=(0.0, 0.6)):
    """Signed distance from the positive-frequency negative-type level to the nearest positive-type level."""
    lam, q = levels(config, depth)
    sel = (lam > window[0]) & (lam < window[1])
    neg = lam[sel & (q < 0)]
    pos = lam[sel & (q > 0)]
    if neg.size == 0 or pos.size == 0:
        # at the crossing the two levels merge into one mixed pair
        return 0.0
    x = neg.max()
    return float(x - pos[np.argmin(np.abs(pos - x))])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lo", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=1.1)
    args = p.parse_args(argv)
    config = bundled_scenario("DS2")
    depth = brentq(lambda d: crossing_gap(config, d), args.lo, args.hi, xtol=1e-15, rtol=1e-15)
    frozen = -config["potential"]["V"][1]["V0"]
    print(f"tuned depth {depth!r}, frozen depth {frozen!r}, gap at frozen depth {crossing_gap(config, frozen):.2e}")


if __name__ == "__main__":
    main()
