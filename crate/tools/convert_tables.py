"""Convert published triangle quadrature tables into the volpot text format.

Reads the Xiao-Gimbutas and Vioreanu-Rokhlin triangle tables distributed with
the `modepy` package, maps them onto the simplex {x >= 0, y >= 0, x + y <= 1},
polishes nodes and weights with a few Gauss-Newton steps against the
orthonormal Koornwinder moments, and writes `kind N len` + `x y w` files.

usage: python3 tools/convert_tables.py <modepy/quadrature dir> <out dir>
"""
import importlib.util
import math
import sys

import numpy as np


def load(path, name):
    spec = importlib.util.spec_from_file_location(name, f"{path}/{name}.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def jacobi(k_max, alpha, t):
    out = [np.ones_like(t)]
    if k_max >= 1:
        out.append(((alpha + 2) * t + alpha) / 2)
    for n in range(2, k_max + 1):
        a = 2 * n + alpha
        c1 = 2 * n * (n + alpha) * (a - 2)
        c2 = (a - 1) * (a * (a - 2) * t + alpha * alpha)
        c3 = 2 * (n + alpha - 1) * (n - 1) * a
        out.append((c2 * out[-1] - c3 * out[-2]) / c1)
    return out


def koornwinder(order, x, y):
    s = 1 - x
    legendre = [np.ones_like(x)]
    if order >= 1:
        legendre.append(2 * y - s)
    for m in range(1, order):
        legendre.append(((2 * m + 1) * (2 * y - s) * legendre[m] - m * s * s * legendre[m - 1]) / (m + 1))
    cols = []
    jac = {m: jacobi(order - m, 2 * m + 1, 2 * x - 1) for m in range(order + 1)}
    for n in range(order + 1):
        for m in range(n + 1):
            c = math.sqrt(2 * (2 * m + 1) * (n + 1))
            cols.append(c * legendre[m] * jac[m][n - m])
    return np.array(cols)


def residual(order, x, y, w):
    vals = koornwinder(order, x, y)
    r = vals @ w
    r[0] -= 1 / math.sqrt(2)
    return r


def polish(order, x, y, w, steps=6):
    h = 1e-20
    for _ in range(steps):
        vals = koornwinder(order, x, y)
        dx = np.imag(koornwinder(order, x + 1j * h, y.astype(complex))) / h
        dy = np.imag(koornwinder(order, x.astype(complex), y + 1j * h)) / h
        r = vals @ w
        r[0] -= 1 / math.sqrt(2)
        jmat = np.hstack([dx * w, dy * w, vals])
        step = np.linalg.lstsq(jmat, -r, rcond=None)[0]
        n = len(w)
        x = x + step[:n]
        y = y + step[n:2 * n]
        w = w + step[2 * n:]
    return x, y, w


def write(path, kind, order, x, y, w):
    with open(path, "w") as fh:
        fh.write(f"{kind} {order} {len(w)}\n")
        for a, b, c in zip(x, y, w):
            fh.write(f"{a:.17e} {b:.17e} {c:.17e}\n")


def equilateral_to_unit(p):
    a = np.array([[1, -1 / math.sqrt(3)], [0, 2 / math.sqrt(3)]])
    return a @ p + np.array([[-1 / 3], [-1 / 3]])


def main():
    src, out = sys.argv[1], sys.argv[2]
    xg = load(src, "xg_quad_data").triangle_table
    vr = load(src, "vr_quad_data_tri").triangle_data
    for order in (12, 20, 33, 40, 50):
        rule = xg[order]
        u = equilateral_to_unit(np.asarray(rule["points"]).T)
        x, y = (u[0] + 1) / 2, (u[1] + 1) / 2
        w = np.asarray(rule["weights"]) * (2 / math.sqrt(3)) / 4
        before = np.abs(residual(order, x, y, w)).max()
        x, y, w = polish(order, x, y, w)
        after = np.abs(residual(order, x, y, w)).max()
        print(f"xg {order}: len {len(w)} residual {before:.2e} -> {after:.2e}")
        write(f"{out}/xg_{order:02}.txt", "xg", order, x, y, w)
    for order in (12, 20):
        rule = vr[order]
        u = equilateral_to_unit(np.asarray(rule["points"]))
        x, y = (u[0] + 1) / 2, (u[1] + 1) / 2
        w = np.asarray(rule["weights"])
        w = w * (0.5 / w.sum())
        exact = int(rule["quad_degree"])
        before = np.abs(residual(exact, x, y, w)).max()
        print(f"vr {order}: len {len(w)} exact to {exact} residual {before:.2e}")
        write(f"{out}/vr_{order:02}.txt", "vr", order, x, y, w)


if __name__ == "__main__":
    main()
