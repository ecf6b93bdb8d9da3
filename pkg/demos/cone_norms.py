"""Local-energy norms, dyadic cone decomposition, and the embedding check.

Builds the dyadic decomposition of a cone slab, evaluates LE / LE* / LE1
norms of a synthetic mode field under the r^2 dr dt measure, verifies the
duality pairing, and reports the sup-vs-L2 embedding ratio on cone blocks
across scales.
"""

import numpy as np

from pricelab.analysis import (GridField, NormSpec, cone_partition, duality_pairing,
                               le_norm, sobolev_check)


def main():
    print("== dyadic decomposition of C_16 ==")
    for reg in cone_partition(16.0):
        hi = "inf" if not np.isfinite(reg.hi) else f"{reg.hi:g}"
        tag = "  (closed upward)" if reg.extended else ""
        print(f"  {reg.kind}-block scale {reg.scale:g}: "
              f"{'r' if reg.kind == 'R' else 't-r'} in [{reg.lo:g}, {hi}){tag}")

    t = np.linspace(0.0, 10.0, 80)
    r = np.linspace(0.05, 60.0, 500)
    u = GridField.from_function(
        lambda T, R: np.exp(-(((R - 8.0) / 3.0) ** 2)) * (1 + 0.2 * np.sin(T)), t, r, ell=1)

    print("\n== norms of a synthetic l=1 mode field ==")
    for variant in ("LE", "LE_star", "LE1"):
        res = le_norm(u, NormSpec(variant))
        blocks = ", ".join(f"R={k:g}: {v:.3f}" for k, v in sorted(res.per_block.items())
                           if v > 1e-3)
        print(f"  {variant:8s} = {res.value:.4f}   [{blocks}]")

    f = GridField.from_function(
        lambda T, R: np.cos(T) * np.exp(-(((R - 15.0) / 4.0) ** 2)), t, r)
    lhs = duality_pairing(u, f)
    rhs = le_norm(u, NormSpec("LE")).value * le_norm(f, NormSpec("LE_star")).value
    print(f"\n== duality:  |<u, f>| = {lhs:.4f}  <=  LE(u) x LE*(f) = {rhs:.4f} ==")

    print("\n== Sobolev embedding ratio on R-blocks (stable across T) ==")
    for T in (32.0, 64.0, 128.0):
        regs = [g for g in cone_partition(T) if g.kind == "R"]
        reg = regs[len(regs) // 2]
        sc = reg.scale
        w = GridField.from_function(
            lambda A, B: np.exp(-(((A - 1.5 * T) / (0.2 * T)) ** 2)
                                - (((B - 1.4 * sc) / (0.3 * sc)) ** 2)),
            np.linspace(0.45 * T, 4.2 * T, 150),
            np.linspace(1e-3, min(8.0 * sc, 4.2 * T), 150), ell=1)
        res = sobolev_check(w, reg)
        print(f"  T={T:6.0f}, R={reg.scale:g}: sup = {res.lhs:.3e}, "
              f"weighted L2 side = {res.rhs:.3e}, ratio = {res.ratio:.4f}")


if __name__ == "__main__":
    main()
