"""Fast oracle checks runnable from an installed package (``nschrelax verify``)."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import stencil as st
from .grid import GridSpec
from .nsch import ModelParams, NschSolver, NschState
from .relax import RelaxParams, RelaxSolver
from .sparse import build_elliptic


def _rate(err: Callable[[int], float], n0: int, n1: int) -> float:
    return float(np.log(err(n0) / err(n1)) / np.log(n1 / n0))


def _sin_err(op, target):
    def err(n):
        g = GridSpec(n)
        xc, _ = g.cell_centers()
        xf, _ = g.xface_centers()
        out, loc = op(g, np.sin(2 * np.pi * xc), np.sin(2 * np.pi * xf)), target(xc, xf)
        return float(np.max(np.abs(out - loc)))
    return err


def checks() -> list[tuple[str, Callable[[], bool]]]:
    tp = 2 * np.pi
    orders = {
        "grad_c": (lambda g, c, f: st.grad_c_to_faces(g, c)[0], lambda xc, xf: tp * np.cos(tp * xf)),
        "interp": (lambda g, c, f: st.interp_c_to_faces(g, c)[0], lambda xc, xf: np.sin(tp * xf)),
        "biharmonic": (lambda g, c, f: st.div_faces_to_cells(g, *st.grad_lap_to_faces(g, c)),
                       lambda xc, xf: tp ** 4 * np.sin(tp * xc)),
        "div": (lambda g, c, f: st.div_faces_to_cells(g, f, 0 * f), lambda xc, xf: tp * np.cos(tp * xc)),
        "convect": (lambda g, c, f: st.convect_u(g, f, 0 * f)[0], lambda xc, xf: tp * np.sin(2 * tp * xf)),
    }
    out = []
    for name, (op, target) in orders.items():
        out.append((f"order of {name} is 2", lambda op=op, target=target:
                    abs(_rate(_sin_err(op, target), 64, 256) - 2.0) <= 0.1))

    def bih():
        g = GridSpec(16)
        e = np.zeros(g.shape)
        e[0, 5] = 1.0
        got = st.div_faces_to_cells(g, *st.grad_lap_to_faces(g, e))
        want = np.zeros(g.shape)
        want[0, 3:8] = [1, -4, 6, -4, 1]
        return np.allclose(got, want / g.dx ** 4, rtol=0, atol=1e-9 / g.dx ** 4)

    def elliptic():
        g = GridSpec(64)
        K = build_elliptic(g, 1e-3, 0.1)
        x, _ = g.cell_centers()
        ok = True
        for k in (1, 3, 7):
            c = np.sin(tp * k * x)
            sigma = (2 - 2 * np.cos(tp * k * g.dx)) / g.dx ** 2
            ok &= np.max(np.abs(K.solve(c) - c / (1 + 1e-4 * sigma))) <= 1e-10
        return bool(ok)

    def fixed_points():
        g = GridSpec(16)
        s = NschState.initial(g, np.ones(g.shape))
        ns = NschSolver(g, ModelParams(1e-3, 1e-3))
        rs = RelaxSolver(g, RelaxParams(1e-6, 1e-5, 1e-6, 1e-3, 1e-3))
        r = rs.init(np.ones(g.shape))
        for _ in range(10):
            s, r = ns.step(s), rs.step(r)
        return np.max(np.abs(s.c - 1)) < 1e-12 and np.max(np.abs(r.c - 1)) < 1e-12

    out += [("biharmonic composition", bih), ("elliptic symbol", elliptic),
            ("constant states are fixed points", fixed_points)]
    return out


def run_checks(echo=print) -> bool:
    ok_all = True
    for name, fn in checks():
        ok = bool(fn())
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}")
    return ok_all
