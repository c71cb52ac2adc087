"""Random environments: laws, samples, regime classification and shifts.

An environment assigns to every site ``x`` the probability ``omega(x)`` in
``(0, 1]`` that a jump attempted from ``x`` goes to the right.  Environments
are i.i.d. draws from an :class:`EnvironmentLaw`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

HALF = 0.5
GAMMA_GRID = tuple(k / 20 for k in range(1, 10))  # 0.05, 0.10, ..., 0.45
_ATOL = 1e-12


class NonBallisticLawError(ValueError):
    """Raised when a law violates E[(1 - omega) / omega] < 1."""


def _check_unit(name, value, *, allow_zero=False):
    lo_ok = value >= 0 if allow_zero else value > 0
    if not (lo_ok and value <= 1):
        raise ValueError(f"{name}={value!r} must lie in (0, 1]")


# --------------------------------------------------------------------------
# laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    p: float

    def __post_init__(self):
        _check_unit("p", self.p)

    @property
    def essential_inf(self) -> float:
        return self.p

    def cdf(self, x: float) -> float:
        return 1.0 if x >= self.p - _ATOL else 0.0

    def atom(self, x: float) -> float:
        return 1.0 if abs(x - self.p) <= _ATOL else 0.0

    def ballistic_expectation(self) -> float:
        return (1 - self.p) / self.p

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.p))

    def __str__(self):
        return f"constant({self.p:g})"


@dataclass(frozen=True)
class TwoPoint:
    """``omega = p1`` with probability ``alpha``, else ``p2``."""

    p1: float
    p2: float
    alpha: float

    def __post_init__(self):
        _check_unit("p1", self.p1)
        _check_unit("p2", self.p2)
        _check_unit("alpha", self.alpha, allow_zero=True)
        if self.p1 == self.p2:
            raise ValueError("two-point law needs p1 != p2")

    def _points(self):
        return ((self.p1, self.alpha), (self.p2, 1 - self.alpha))

    @property
    def essential_inf(self) -> float:
        return min(p for p, w in self._points() if w > 0)

    def cdf(self, x: float) -> float:
        return sum(w for p, w in self._points() if p <= x + _ATOL)

    def atom(self, x: float) -> float:
        return sum(w for p, w in self._points() if abs(p - x) <= _ATOL)

    def ballistic_expectation(self) -> float:
        return sum(w * (1 - p) / p for p, w in self._points())

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        pick = rng.random(n) < self.alpha
        return np.where(pick, float(self.p1), float(self.p2))

    def __str__(self):
        return f"twopoint({self.p1:g},{self.p2:g},{self.alpha:g})"


@dataclass(frozen=True)
class Uniform:
    """Uniform law on the closed interval ``[a, b]``."""

    a: float
    b: float

    def __post_init__(self):
        _check_unit("a", self.a)
        _check_unit("b", self.b)
        if not self.a < self.b:
            raise ValueError("uniform law needs a < b")

    @property
    def essential_inf(self) -> float:
        return self.a

    def cdf(self, x: float) -> float:
        return float(np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0))

    def atom(self, x: float) -> float:
        return 0.0

    def ballistic_expectation(self) -> float:
        # mean of 1/omega - 1 over [a, b]
        return (math.log(self.b) - math.log(self.a)) / (self.b - self.a) - 1.0

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.a + (self.b - self.a) * rng.random(n)

    def __str__(self):
        return f"uniform({self.a:g},{self.b:g})"


EnvironmentLaw = Constant | TwoPoint | Uniform

_LAW_RE = re.compile(r"^\s*(constant|twopoint|uniform)\s*\(([^()]*)\)\s*$", re.I)
_LAW_ARITY = {"constant": (Constant, 1), "twopoint": (TwoPoint, 3), "uniform": (Uniform, 2)}


def parse_law(text: str) -> EnvironmentLaw:
    """Parse ``constant(p)``, ``twopoint(p1,p2,alpha)`` or ``uniform(a,b)``.

    Arguments may be decimals or simple fractions such as ``1/4``.
    """
    m = _LAW_RE.match(text)
    if m is None:
        raise ValueError(f"malformed law specification: {text!r}")
    cls, arity = _LAW_ARITY[m.group(1).lower()]
    parts = [s.strip() for s in m.group(2).split(",") if s.strip()]
    if len(parts) != arity:
        raise ValueError(f"{m.group(1)} takes {arity} argument(s), got {len(parts)}")
    values = []
    for s in parts:
        num, _, den = s.partition("/")
        try:
            values.append(float(num) / float(den) if den else float(num))
        except ValueError:
            raise ValueError(f"bad number {s!r} in {text!r}") from None
    return cls(*values)


def ballistic_expectation(law: EnvironmentLaw) -> float:
    """Closed-form ``E[(1 - omega) / omega]`` under ``law``."""
    if law.essential_inf <= 0:
        raise ZeroDivisionError("expectation diverges for supports touching 0")
    return law.ballistic_expectation()


# --------------------------------------------------------------------------
# regimes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NonNestling:
    eps: float
    ballistic_expectation: float


@dataclass(frozen=True)
class MarginalNestling:
    has_atom_at_half: bool
    ballistic_expectation: float


@dataclass(frozen=True)
class PlainNestling:
    beta: float
    gamma: float
    ballistic_expectation: float


RegimeClass = NonNestling | MarginalNestling | PlainNestling


def regime_label(regime: RegimeClass) -> str:
    return {
        NonNestling: "non-nestling",
        MarginalNestling: "marginal-nestling",
        PlainNestling: "plain-nestling",
    }[type(regime)]


def _nestling_parameters(law: EnvironmentLaw) -> tuple[float, float]:
    for gamma in sorted(GAMMA_GRID, reverse=True):
        beta = law.cdf(HALF - gamma)
        # continuous laws put no mass on the single point inf
        if isinstance(law, Uniform) and HALF - gamma <= law.a + _ATOL:
            beta = 0.0
        if beta > 0:
            return beta, gamma
    # support dips below 1/2 by less than the grid spacing
    gamma = (HALF - law.essential_inf) / 2
    return law.cdf(HALF - gamma), gamma


def classify(law: EnvironmentLaw) -> RegimeClass:
    """Sort a ballistic law into non-, marginal or plain nestling.

    For plain nestling laws ``gamma`` is the largest grid value in
    ``{0.05, ..., 0.45}`` with ``beta = P(omega <= 1/2 - gamma) > 0``.
    """
    be = ballistic_expectation(law)
    if not be < 1:
        raise NonBallisticLawError(f"{law} is not ballistic: E[(1-w)/w] = {be:.6g} >= 1")
    inf = law.essential_inf
    if inf > HALF + _ATOL:
        return NonNestling(eps=inf - HALF, ballistic_expectation=be)
    if abs(inf - HALF) <= _ATOL:
        return MarginalNestling(has_atom_at_half=law.atom(HALF) > 0, ballistic_expectation=be)
    beta, gamma = _nestling_parameters(law)
    return PlainNestling(beta=beta, gamma=gamma, ballistic_expectation=be)


def delta_exponent(beta: float, gamma: float, delta_tilde: float = 0.5) -> tuple[float, bool]:
    """Lower-bound exponent ``delta`` for plain nestling laws.

    Returns ``(delta, violates)`` where ``violates`` flags ``delta >= 1/2``,
    which cannot happen for a ballistic pair ``(beta, q)``.
    """
    if not 0 < gamma < HALF:
        raise ValueError("gamma must lie in (0, 1/2)")
    if not (0 < beta < 1 and 0 < delta_tilde < 1):
        raise ValueError("beta and delta_tilde must lie in (0, 1)")
    q = (HALF + gamma) / (HALF - gamma)
    delta = delta_tilde * math.log(q) / (2 * math.log(1 / beta))
    return delta, delta >= HALF


# --------------------------------------------------------------------------
# environments
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Environment:
    """Rates ``omega(x)`` for sites ``offset, ..., offset + len - 1``.

    Sites outside the window are not defined; indexing them raises
    ``IndexError``.
    """

    rates: np.ndarray
    offset: int = 1

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        if rates.ndim != 1 or rates.size < 2:
            raise ValueError("an environment needs at least two sites")
        if np.any(rates <= 0) or np.any(rates > 1):
            raise ValueError("environment rates must lie in (0, 1]")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "offset", int(self.offset))

    def __len__(self):
        return self.rates.size

    @property
    def sites(self) -> range:
        return range(self.offset, self.offset + self.rates.size)

    def __getitem__(self, site: int) -> float:
        i = site - self.offset
        if not 0 <= i < self.rates.size:
            raise IndexError(f"site {site} outside window {self.sites}")
        return float(self.rates[i])

    def __eq__(self, other):
        if not isinstance(other, Environment):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.rates, other.rates)

    def __hash__(self):
        return hash((self.offset, self.rates.tobytes()))

    def shift(self, n: int) -> Environment:
        return shift(self, n)

    def restrict(self, first: int, last: int) -> Environment:
        """Sub-window covering sites ``first..last`` (inclusive)."""
        if first < self.offset or last >= self.offset + len(self) or last <= first:
            raise IndexError(f"[{first}, {last}] not inside {self.sites}")
        return Environment(self.rates[first - self.offset : last - self.offset + 1], first)


def constant_environment(p: float, n: int, offset: int = 1) -> Environment:
    return Environment(np.full(n, float(p)), offset)


def sample_environment(law: EnvironmentLaw, n: int, seed, offset: int = 1) -> Environment:
    """``n`` i.i.d. draws from ``law``; deterministic in ``seed``."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    return Environment(law.sample(n, rng), offset)


def shift(env: Environment, n: int) -> Environment:
    """Environment moved ``n`` sites to the right: ``omega_n(x) = omega(x - n)``."""
    return Environment(env.rates, env.offset + int(n))


def env_leq(lower: Environment, upper: Environment) -> bool:
    """Environment order: ``1 - lower(x) <= 1 - upper(x)`` at every site.

    The smaller environment pushes particles harder to the right.
    """
    if lower.offset != upper.offset or len(lower) != len(upper):
        raise ValueError("environments live on different windows")
    return bool(np.all(lower.rates >= upper.rates))
