"""Radial convolution kernels and their scale derivatives.

A kernel spec pairs a radial profile with the comparison dimension n.
Profiles are expressed through G(v) with v = |x|^2 / t^2:

    gauss:N=<int>    G(v) = exp(-v^N)          (phi(x) = exp(-|x|^(2N)))
    invpow:a=<float> G(v) = (1 + v)^(-a), a > n/2
    hard             phi_t(x) = t^(-n) * 1{|x| <= t}

phi_t(x) = t^(-n) G(|x|^2/t^2).  Scale derivatives t^k d^k/dt^k phi_t are
computed exactly: with theta = t d/dt one has t^k d^k/dt^k =
theta (theta - 1) ... (theta - k + 1), and theta acts on t^(-n) v^p G^(q)(v)
as a two-term shift, so the result is a finite sum of v^p G^(q)(v) terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

MAX_DERIVATIVE_ORDER = 4


@dataclass(frozen=True)
class KernelSpec:
    family: str              # "gauss" | "invpow" | "hard"
    n: int
    N: int | None = None     # gauss exponent
    a: float | None = None   # invpow exponent

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("kernel dimension n must be >= 1")
        if self.family == "gauss":
            if self.N is None or self.N < 1 or self.N != int(self.N):
                raise ValueError("gauss kernel needs integer N >= 1")
        elif self.family == "invpow":
            if self.a is None or not self.a > self.n / 2:
                raise ValueError("invpow kernel needs a > n/2")
        elif self.family == "hard":
            if self.N is not None or self.a is not None:
                raise ValueError("hard kernel takes no parameters")
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")

    @property
    def smooth(self) -> bool:
        return self.family != "hard"

    def __str__(self):
        if self.family == "gauss":
            return f"gauss:N={self.N}"
        if self.family == "invpow":
            return f"invpow:a={self.a:g}"
        return "hard"


def parse_kernel(text: str, n: int) -> KernelSpec:
    """Parse CLI kernel strings: gauss:N=1, invpow:a=1.5, hard."""
    text = text.strip()
    if text == "hard":
        return KernelSpec("hard", n)
    try:
        family, arg = text.split(":", 1)
        key, val = arg.split("=", 1)
    except ValueError:
        raise ValueError(f"malformed kernel string {text!r}") from None
    if family == "gauss" and key == "N":
        return KernelSpec("gauss", n, N=int(val))
    if family == "invpow" and key == "a":
        return KernelSpec("invpow", n, a=float(val))
    raise ValueError(f"malformed kernel string {text!r}")


# ---------------------------------------------------------------------------
# profile derivatives in the squared variable


def _g_derivatives(spec: KernelSpec, v: np.ndarray, qmax: int) -> list[np.ndarray]:
    """[G(v), G'(v), ..., G^(qmax)(v)] for the smooth families."""
    v = np.asarray(v, dtype=float)
    if spec.family == "gauss":
        N = spec.N
        ev = np.exp(-(v ** N))
        out = [ev]
        poly = np.array([1.0])                      # G^(q) = P_q(v) exp(-v^N)
        bump = np.zeros(N)
        bump[-1] = -float(N)                        # -N v^(N-1)
        for _ in range(qmax):
            poly = npoly.polyadd(npoly.polyder(poly), npoly.polymul(bump, poly))
            out.append(npoly.polyval(v, poly) * ev)
        return out
    if spec.family == "invpow":
        a = spec.a
        base = (1.0 + v) ** (-a)
        out = [base]
        pref = 1.0
        for q in range(qmax):
            pref *= -(a + q)
            out.append(pref * (1.0 + v) ** (-(a + q + 1)))
        return out
    raise ValueError("hard kernel has no smooth profile")


def _theta_coeffs(n: int, k: int) -> dict[tuple[int, int], float]:
    """Coefficients c[p, q] with t^k d^k/dt^k phi_t = t^-n sum c v^p G^(q)."""
    terms = {(0, 0): 1.0}
    for i in range(k):
        nxt: dict[tuple[int, int], float] = {}
        for (p, q), c in terms.items():
            nxt[(p, q)] = nxt.get((p, q), 0.0) + c * (-n - 2 * p - i)
            nxt[(p + 1, q + 1)] = nxt.get((p + 1, q + 1), 0.0) - 2.0 * c
        terms = nxt
    return terms


# ---------------------------------------------------------------------------
# radial evaluations (s = |x|), vectorized over s


def phi_radial(spec: KernelSpec, s, t: float) -> np.ndarray:
    if not t > 0:
        raise ValueError("t must be positive")
    s = np.asarray(s, dtype=float)
    tn = t ** (-spec.n)
    if spec.family == "hard":
        return tn * (s <= t)
    v = (s / t) ** 2
    return tn * _g_derivatives(spec, v, 0)[0]


def dk_phi_radial(spec: KernelSpec, s, t: float, k: int) -> np.ndarray:
    """t^k d^k/dt^k phi_t evaluated at radius s."""
    if not t > 0:
        raise ValueError("t must be positive")
    if not 1 <= k <= MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order must be in [1, {MAX_DERIVATIVE_ORDER}]")
    if not spec.smooth:
        raise ValueError("scale derivatives need a smooth kernel family")
    s = np.asarray(s, dtype=float)
    v = (s / t) ** 2
    coeffs = _theta_coeffs(spec.n, k)
    qmax = max(q for _, q in coeffs)
    G = _g_derivatives(spec, v, qmax)
    acc = np.zeros_like(v)
    for (p, q), c in sorted(coeffs.items()):
        acc += c * v ** p * G[q]
    return t ** (-spec.n) * acc


def difference_radial(spec: KernelSpec, s, t: float, k: int = 1) -> np.ndarray:
    """D^k[phi_t] at radius s: sum_i (-1)^i C(k, i) phi_{2^i t}."""
    if k < 1:
        raise ValueError("difference order must be >= 1")
    if not spec.smooth and k != 1:
        raise ValueError("hard kernel supports only the first difference")
    s = np.asarray(s, dtype=float)
    acc = np.zeros_like(s, dtype=float)
    for i in range(k + 1):
        acc += (-1) ** i * math.comb(k, i) * phi_radial(spec, s, (2.0 ** i) * t)
    return acc


# contract-level wrappers taking a point x in R^d


def phi_t(spec: KernelSpec, x, t: float) -> float:
    return float(phi_radial(spec, _norm(x), t))


def d_phi(spec: KernelSpec, x, t: float) -> float:
    """t d/dt phi_t(x), in closed form through the profile derivative."""
    return float(dk_phi_radial(spec, _norm(x), t, 1))


def dk_phi(spec: KernelSpec, x, t: float, k: int) -> float:
    return float(dk_phi_radial(spec, _norm(x), t, k))


def discrete_difference_kernel(spec: KernelSpec, x, t: float, k: int) -> float:
    return float(difference_radial(spec, _norm(x), t, k))


def _norm(x) -> float:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("kernel argument must be finite")
    return float(np.sqrt((x ** 2).sum()))


# ---------------------------------------------------------------------------
# flat-measure integrals


def truncation_factor(spec: KernelSpec) -> float:
    """Neighbor-query radius per unit scale beyond which the profile tail
    is negligible for field sums."""
    if spec.family == "gauss":
        return 12.0
    if spec.family == "invpow":
        return 1000.0
    return 1.0


_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


def plane_annihilation_defect(spec: KernelSpec, t: float, k: int = 1,
                              kind: str = "difference",
                              panels: int = 64, nodes: int = 12) -> float:
    """|integral over R^n of the k-th difference or scale-derivative kernel|.

    Both vanish identically on an n-plane; the returned defect is the
    quadrature's distance from that cancellation.  Tensor Gauss-Legendre
    on [-T, T]^n with T = 10t (gauss) or 100t (invpow).
    """
    if kind not in ("difference", "dt"):
        raise ValueError("kind must be 'difference' or 'dt'")
    if spec.family == "hard":
        if kind != "difference" or k != 1:
            raise ValueError("hard kernel supports only the first difference")
        vol = _UNIT_BALL_VOLUME[spec.n]
        return abs(vol * sum((-1) ** i * math.comb(k, i) for i in range(k + 1)))
    T = (10.0 if spec.family == "gauss" else 100.0) * t * (2.0 ** (k if kind == "difference" else 0))
    x, w = _panel_gauss(-T, T, panels, nodes)
    if kind == "difference":
        f = lambda s: difference_radial(spec, s, t, k)
    else:
        f = lambda s: dk_phi_radial(spec, s, t, k)
    if spec.n == 1:
        return abs(float(np.sum(w * f(np.abs(x)))))
    if spec.n == 2:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        vals = f(np.sqrt(xx ** 2 + yy ** 2))
        return abs(float(np.einsum("i,j,ij->", w, w, vals)))
    raise ValueError("plane integrals implemented for n in {1, 2}")


def _panel_gauss(a: float, b: float, panels: int, nodes: int):
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return x, w


def convex_weight(R: float, s, n: int) -> np.ndarray:
    """Scale-averaging weight 2 s^(n+1) R^-(n+2) exp(-s^2/R^2).

    Reproduces the Gaussian level profile through
    integral_s^inf convex_weight(R, r, n) r^-n dr = R^-n exp(-s^2/R^2).
    """
    if not R > 0:
        raise ValueError("R must be positive")
    s = np.asarray(s, dtype=float)
    return 2.0 * s ** (n + 1) * R ** (-(n + 2)) * np.exp(-(s / R) ** 2)
