"""Temperature ladder, block schedule and the itineraries built from it.

Strict-mode blocks are astronomically long, so itineraries are stored as
runs ``(start, stop, symbol)`` over the index j and individual symbols are
answered by bisection on the run list.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import ScheduleTooShort
from .partition import PartitionScheme, block_bounds

UNCHECKED = ["tau_0 constraint involving C_0, upsilon_0, t_*sup, t_*inf (constants not computable)"]


def with_even_parity(scheme: PartitionScheme) -> tuple[PartitionScheme, bool]:
    """Round q up by one when q + Xi is odd; the flag says whether that happened."""
    if (scheme.q + scheme.Xi) % 2 == 0:
        return scheme, False
    return PartitionScheme(scheme.xi, scheme.Xi, scheme.q + 1, scheme.strict_mode), True


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _smallest_int_above_sqrt_plus(S: int, ratio: Fraction, shift: Fraction) -> int:
    """Smallest integer n with n > S*sqrt(ratio) + shift, decided exactly."""
    # candidates around the float estimate, then exact comparison (n - shift)^2 > S^2 ratio
    n = math.floor(S * math.sqrt(ratio) + shift) - 2
    target = S * S * ratio

    def above(k: int) -> bool:
        d = k - shift
        return d > 0 and d * d > target

    while above(n):
        n -= 1
    while not above(n):
        n += 1
    return n


@dataclass(frozen=True)
class TauSchedule:
    scheme: PartitionScheme
    Omega: Fraction
    S: tuple[int, ...]
    tau: tuple[Fraction, ...]
    ell: tuple[int, ...]
    parity_adjusted: bool = False
    unchecked_constraints: tuple[str, ...] = tuple(UNCHECKED)

    def s_minus_sq(self, m: int) -> Fraction:
        """s^-(tau_m)^2 as an exact rational."""
        return self.S[m] ** 2 * Fraction(self.scheme.Xi + 2 * self.scheme.xi, self.scheme.Xi - 2 * self.scheme.xi)

    def s_plus_sq(self, m: int) -> Fraction:
        """s^+(tau_m)^2 rebuilt from tau_m; equals S_m^2 exactly."""
        return Fraction(self.scheme.Xi - 2 * self.scheme.xi) / (self.scheme.q * (1 - self.tau[m]))

    def as_dict(self) -> dict:
        return {"scheme": self.scheme.as_dict(), "Omega": str(self.Omega),
                "S_m": list(self.S), "tau_m": [str(t) for t in self.tau], "ell_m": list(self.ell),
                "parity_adjusted": self.parity_adjusted,
                "unchecked_constraints": list(self.unchecked_constraints)}


def build_schedule(scheme: PartitionScheme, Omega=0, m_max: int = 4,
                   adjust_parity: bool = False) -> TauSchedule:
    """Temperatures tau_m = 1 - (Xi - 2xi)/(q S_m^2) with integer S_m chosen minimal.

    S_0 is the least integer with tau_0 >= 1 - 1/(400 q); for m >= 1, S_m is the
    least integer strictly above s^-(tau_{m-1}) + Omega + 6.
    """
    Omega = _as_fraction(Omega)
    if Omega < 0:
        raise ValueError("Omega must be nonnegative")
    if m_max < 0:
        raise ValueError("m_max must be nonnegative")
    adjusted = False
    if adjust_parity:
        scheme, adjusted = with_even_parity(scheme)
    D = Fraction(scheme.Xi) - 2 * scheme.xi
    if D <= 0:
        raise ValueError("Xi - 2 xi must be positive")
    # S_0^2 >= 400 D
    S0 = math.isqrt(math.ceil(400 * D))
    while S0 * S0 < 400 * D:
        S0 += 1
    S = [S0]
    ratio = (Fraction(scheme.Xi) + 2 * scheme.xi) / D
    for _ in range(m_max):
        S.append(_smallest_int_above_sqrt_plus(S[-1], ratio, Omega + 6))
    tau = [1 - D / (scheme.q * s * s) for s in S]
    ell = [0] + [s - 5 for s in S[1:]]
    if any(b <= a for a, b in zip(ell, ell[1:])):
        raise ValueError(f"block schedule ell={ell} is not strictly increasing")
    return TauSchedule(scheme, Omega, tuple(S), tuple(tau), tuple(ell), adjusted)


class Hat(str, enum.Enum):
    ZERO = "0"
    PLUS = "1+"
    MINUS = "1-"


@dataclass(frozen=True)
class SignSequence:
    """Signs sigma(1), sigma(2), ... given by a finite prefix and a constant tail."""

    prefix: tuple[str, ...]
    tail: str | None = None

    @classmethod
    def parse(cls, text: str) -> "SignSequence":
        """'+-+' is a finite prefix; '+-(+)' repeats '+' forever."""
        tail = None
        if text.endswith(")") and "(" in text:
            text, tail = text[:-1].split("(")
        return cls(tuple(text), tail or None)

    def __post_init__(self):
        for c in (*self.prefix, *( [self.tail] if self.tail else [] )):
            if c not in "+-" or len(c) != 1:
                raise ValueError(f"bad sign {c!r}")

    def __call__(self, m: int) -> str:
        if m < 1:
            raise IndexError("signs are indexed from 1")
        if m <= len(self.prefix):
            return self.prefix[m - 1]
        if self.tail is None:
            raise ScheduleTooShort(f"sign sequence has no entry for band m={m}")
        return self.tail


class _Runs:
    """Sorted, contiguous runs (start, stop, value) covering [0, length)."""

    def __init__(self, runs: list[tuple[int, int, object]], length: int):
        self.runs = runs
        self.length = length
        self._starts = [r[0] for r in runs]

    def __len__(self) -> int:
        return self.length

    def _value_at(self, j: int):
        if not 0 <= j < self.length:
            raise IndexError(j)
        return self.runs[bisect.bisect_right(self._starts, j) - 1]

    def window(self, start: int, stop: int) -> list:
        return [self[j] for j in range(start, min(stop, self.length))]

    def __iter__(self) -> Iterator:
        for j in range(self.length):
            yield self[j]


class HatItinerary(_Runs):
    def __init__(self, runs, length: int, sign_seq: SignSequence):
        super().__init__(runs, length)
        self.sign_seq = sign_seq

    def __getitem__(self, j: int) -> Hat:
        return self._value_at(j)[2]

    def minus_runs(self) -> list[tuple[int, int]]:
        """Maximal 1- runs as (start, stop), merged across adjacent runs."""
        out: list[list[int]] = []
        for a, b, v in self.runs:
            if v is not Hat.MINUS:
                continue
            if out and out[-1][1] == a:
                out[-1][1] = b
            else:
                out.append([a, b])
        return [tuple(r) for r in out]


def hat_itinerary(schedule: TauSchedule, sign_seq: SignSequence | str | Sequence[str],
                  length: int) -> HatItinerary:
    """The first ``length`` symbols: 0 on I-blocks, band signs on J-blocks."""
    if length < 1:
        raise ValueError("length must be at least 1")
    if not isinstance(sign_seq, SignSequence):
        sign_seq = SignSequence.parse(sign_seq) if isinstance(sign_seq, str) else SignSequence(tuple(sign_seq))
    scheme, ell = schedule.scheme, schedule.ell
    runs: list[tuple[int, int, Hat]] = []
    s = 0
    # position k = j + 1, so block [x, y) of positions is [x-1, y-1) of indices
    while True:
        bb = block_bounds(scheme, s)
        a, b, an = bb.a_int, bb.b_int, bb.a_next_int
        if a is None:
            raise ScheduleTooShort("requested length exceeds the exactly representable blocks")
        if a - 1 >= length:
            break
        if b > a:
            runs.append((a - 1, min(b - 1, length), Hat.ZERO))
        if b - 1 < length and an > b:
            m = bisect.bisect_right(ell, s) - 1
            if m == len(ell) - 1:
                raise ScheduleTooShort(f"block s={s} lies beyond ell({m}); extend m_max")
            sym = Hat.PLUS if m == 0 else (Hat.PLUS if sign_seq(m) == "+" else Hat.MINUS)
            runs.append((b - 1, min(an - 1, length), sym))
        s += 1
    return HatItinerary(runs, length, sign_seq)


class Bit(str, enum.Enum):
    ZERO = "0"
    ONE = "1"
    ALT = "alt"  # x_j = j mod 2


class BitItinerary(_Runs):
    def __getitem__(self, j: int) -> int:
        v = self._value_at(j)[2]
        if v is Bit.ALT:
            return j % 2
        return 1 if v is Bit.ONE else 0


def bit_itinerary(hat: HatItinerary) -> BitItinerary:
    """0 under 0, 1 under 1+, and j mod 2 under 1-."""
    table = {Hat.ZERO: Bit.ZERO, Hat.PLUS: Bit.ONE, Hat.MINUS: Bit.ALT}
    return BitItinerary([(a, b, table[v]) for a, b, v in hat.runs], hat.length)


def _length(seq) -> int:
    # len() is limited to machine-size integers; run objects can be far longer
    return seq.length if isinstance(seq, _Runs) else len(seq)


def _as_hat(x) -> Hat:
    return x if isinstance(x, Hat) else Hat(str(x))


def check_compatible(bits, hat) -> tuple[bool, int | None]:
    """Check x_j = 0 under 0, x_j = 1 under 1+, and x_j != x_{j+1} under a 1-,1- pair.

    Run-level objects are compared run by run, so huge prefixes are cheap.
    """
    if _length(bits) != _length(hat):
        raise ValueError("bits and hat must have equal lengths")
    if isinstance(bits, BitItinerary) and isinstance(hat, HatItinerary):
        return _check_runs(bits, hat)
    prev = None
    for j in range(_length(hat)):
        h, x = _as_hat(hat[j]), int(bits[j])
        if h is Hat.ZERO and x != 0 or h is Hat.PLUS and x != 1:
            return False, j
        if prev is not None and prev[0] is Hat.MINUS and h is Hat.MINUS and prev[1] == x:
            return False, j - 1
        prev = (h, x)
    return True, None


def _check_runs(bits: BitItinerary, hat: HatItinerary) -> tuple[bool, int | None]:
    # every bit pattern has period <= 2, so the first two indices of each
    # segment plus the pair straddling its left edge decide the whole segment
    cuts = sorted({0, hat.length} | {r[0] for r in bits.runs} | {r[0] for r in hat.runs})
    for a, b in zip(cuts, cuts[1:]):
        lo = max(a - 1, 0)
        ok, j = check_compatible([bits[i] for i in range(lo, min(b, a + 2))],
                                 [hat[i] for i in range(lo, min(b, a + 2))])
        if not ok:
            return False, lo + j
    return True, None
