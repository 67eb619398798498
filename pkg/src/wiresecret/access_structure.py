"""Monotone access structures over participants ``1..K``.

Subsets are handled internally as integer bitmasks (bit ``i-1`` set for
participant ``i``); the public API speaks in ``frozenset`` of 1-based
participant labels.  The qualified family is implicitly closed upward and the
forbidden family implicitly closed downward, so any generating family may be
supplied.
"""

from dataclasses import dataclass, field
from itertools import combinations

from ._validation import ValidationError

MAX_PARTICIPANTS = 64
MAX_ENUMERATION = 20


class AccessStructureError(ValidationError):
    """Malformed access structure (bad labels, empty sets, bad parameters)."""


class OverlapError(AccessStructureError):
    """A set is required to be both qualified and forbidden."""

    def __init__(self, conflicts):
        self.conflicts = conflicts
        q, f = conflicts[0]
        super().__init__(
            f"{len(conflicts)} conflicting pair(s); e.g. qualified {sorted(q)} "
            f"is contained in forbidden {sorted(f)}")


def to_mask(subset):
    m = 0
    for i in subset:
        m |= 1 << (int(i) - 1)
    return m


def from_mask(mask):
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def _is_subset(a, b):
    return a & ~b == 0


def _canonical(sets):
    """Sort subsets by size then lexicographically."""
    return tuple(sorted((frozenset(s) for s in sets), key=lambda s: (len(s), sorted(s))))


@dataclass(frozen=True)
class AccessStructure:
    participant_count: int
    qualified: tuple = ()
    forbidden: tuple = ()

    def __post_init__(self):
        K = self.participant_count
        if not isinstance(K, int) or K < 1:
            raise AccessStructureError(f"participant_count must be a positive integer, got {K!r}")
        if K > MAX_PARTICIPANTS:
            raise AccessStructureError(f"at most {MAX_PARTICIPANTS} participants are supported")
        for label, fam in (("qualified", self.qualified), ("forbidden", self.forbidden)):
            for s in fam:
                s = frozenset(s)
                if not s:
                    raise AccessStructureError(f"{label} family contains the empty set")
                bad = [i for i in s if not (isinstance(i, int) and 1 <= i <= K)]
                if bad:
                    raise AccessStructureError(
                        f"{label} set {sorted(s)} has labels outside 1..{K}: {bad}")
        object.__setattr__(self, "qualified", _canonical(self.qualified))
        object.__setattr__(self, "forbidden", _canonical(self.forbidden))

    @property
    def K(self):
        return self.participant_count

    def qualified_masks(self):
        return [to_mask(s) for s in self.qualified]

    def forbidden_masks(self):
        return [to_mask(s) for s in self.forbidden]

    def to_dict(self):
        return {
            "K": self.K,
            "qualified": [sorted(s) for s in self.qualified],
            "forbidden": [sorted(s) for s in self.forbidden],
        }

    @classmethod
    def from_dict(cls, d):
        """Build from the JSON form ``{"K":.., "qualified":[..], "forbidden":[..]|"complement"}``.

        ``{"K":.., "threshold": k}`` is accepted as shorthand for :func:`threshold`.
        """
        if "K" not in d:
            raise AccessStructureError("access structure needs a 'K' entry")
        K = int(d["K"])
        if "threshold" in d:
            return threshold(int(d["threshold"]), K)
        qualified = [frozenset(int(i) for i in s) for s in d.get("qualified", [])]
        forbidden = d.get("forbidden", [])
        if forbidden == "complement":
            forbidden = complement_forbidden(qualified, K)
        elif isinstance(forbidden, str):
            raise AccessStructureError(f"unknown forbidden keyword {forbidden!r}")
        else:
            forbidden = [frozenset(int(i) for i in s) for s in forbidden]
        return cls(K, tuple(qualified), tuple(forbidden))


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`."""
    valid: bool
    qualified_closed: bool      # generating family already upward closed
    forbidden_closed: bool      # generating family already downward closed
    closure_sizes: tuple = (0, 0)
    anomalies: list = field(default_factory=list)


def _closed_up(masks, K):
    present = set(masks)
    full = (1 << K) - 1
    for m in present:
        rest = full & ~m
        bit = 1
        while bit <= rest:
            if rest & bit and (m | bit) not in present:
                return False
            bit <<= 1
    return True


def _closed_down(masks):
    present = set(masks)
    for m in present:
        bits = m
        while bits:
            b = bits & -bits
            sub = m & ~b
            if sub and sub not in present:
                return False
            bits &= bits - 1
    return True


def _closure_size_up(masks, K):
    if K > MAX_ENUMERATION:
        return -1
    return sum(1 for s in range(1, 1 << K) if any(_is_subset(q, s) for q in masks))


def _closure_size_down(masks, K):
    if K > MAX_ENUMERATION:
        return -1
    return sum(1 for s in range(1, 1 << K) if any(_is_subset(s, f) for f in masks))


def validate(structure):
    """Check monotonicity metadata and consistency of an access structure.

    A set lies in both closures exactly when some qualified generator is
    contained in some forbidden generator; such pairs raise
    :class:`OverlapError`.  Emptiness anomalies are reported, not raised.
    """
    K = structure.K
    q = structure.qualified_masks()
    f = structure.forbidden_masks()
    conflicts = [(from_mask(a), from_mask(b)) for a in q for b in f if _is_subset(a, b)]
    if conflicts:
        raise OverlapError(conflicts)
    anomalies = []
    if not q:
        anomalies.append("qualified family is empty: no participant set can recover the secret")
    if not f:
        anomalies.append("forbidden family is empty: no secrecy constraint")
    small = K <= MAX_ENUMERATION
    return ValidationReport(
        valid=True,
        qualified_closed=_closed_up(q, K) if small else False,
        forbidden_closed=_closed_down(f) if small else False,
        closure_sizes=(_closure_size_up(q, K), _closure_size_down(f, K)),
        anomalies=anomalies,
    )


def _minimal(masks):
    masks = sorted(set(masks), key=lambda m: (bin(m).count("1"), m))
    kept = []
    for m in masks:
        if not any(_is_subset(k, m) for k in kept):
            kept.append(m)
    return kept


def _maximal(masks):
    masks = sorted(set(masks), key=lambda m: (-bin(m).count("1"), m))
    kept = []
    for m in masks:
        if not any(_is_subset(m, k) for k in kept):
            kept.append(m)
    return kept


def minimal_qualified(structure):
    """Inclusion-minimal members of the upward closure of the qualified family."""
    validate(structure)
    return _canonical(from_mask(m) for m in _minimal(structure.qualified_masks()))


def maximal_forbidden(structure):
    """Inclusion-maximal members of the downward closure of the forbidden family."""
    validate(structure)
    return _canonical(from_mask(m) for m in _maximal(structure.forbidden_masks()))


def complement_forbidden(qualified, K):
    """All nonempty subsets of ``1..K`` outside the upward closure of ``qualified``."""
    if K > MAX_ENUMERATION:
        raise AccessStructureError(f"complement needs K <= {MAX_ENUMERATION}, got {K}")
    AccessStructure(K, tuple(qualified), ())
    q = _minimal(to_mask(s) for s in qualified)
    return _canonical(from_mask(s) for s in range(1, 1 << K)
                      if not any(_is_subset(a, s) for a in q))


def threshold(k, K):
    """The (k, K) threshold structure: any k participants qualify, any k-1 do not."""
    if not (isinstance(k, int) and isinstance(K, int)) or not 1 <= k <= K:
        raise AccessStructureError(f"threshold needs 1 <= k <= K, got k={k}, K={K}")
    if K > MAX_ENUMERATION:
        raise AccessStructureError(f"threshold needs K <= {MAX_ENUMERATION}, got {K}")
    people = range(1, K + 1)
    qualified = [frozenset(c) for r in range(k, K + 1) for c in combinations(people, r)]
    forbidden = [frozenset(c) for r in range(1, k) for c in combinations(people, r)]
    return AccessStructure(K, tuple(qualified), tuple(forbidden))


def is_antichain(family):
    masks = [to_mask(s) for s in family]
    return all(not (_is_subset(a, b) or _is_subset(b, a))
               for i, a in enumerate(masks) for b in masks[i + 1:])
