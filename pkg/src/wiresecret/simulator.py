"""Small-blocklength superposition / random-binning codes with exact analysis.

Layer k holds 2^{n Rt_k} sequences per parent codeword, split into 2^{n R_k}
bins; the bin carries message w_k and a uniform in-bin index l_k supplies
the encoder's randomness.  At these blocklengths every quantity of interest
(block error probability, leakage) is computed by full enumeration of
messages, bin indices and channel outputs.

Codewords are stored per layer in flat arrays.  The flat index of a layer-k
sequence is the mixed-radix number with digits ``d_1 .. d_k`` where
``d_j = w_j * bin_size_j + l_j`` (``d_1 = w_1``), so index order equals
lexicographic order of the tuple ``(w_1, w_2, l_2, .., w_k, l_k)``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

import numpy as np

from ._validation import ValidationError
from .channels import DmcBroadcast, check_degraded_chain
from .region import check_chain, layer_information

MAX_CODEWORDS = 10 ** 6
MAX_TABLE = 10 ** 7
EXACT_TABLE = 1 << 14
TIE_RTOL = 1e-12
LEAK_FLOOR = 1e-13
RATE_TOL = 1e-12


class EnumerationOverflowError(ValidationError):
    """An exact enumeration would exceed its size cap."""


def _power_of_two_count(exponent, what):
    c = 2.0 ** exponent
    r = int(round(c))
    if r < 1 or abs(c - r) > 1e-9 * max(1.0, c):
        raise ValidationError(f"{what}: 2^{exponent:.6g} is not an integer")
    return r


@dataclass
class SimulationConfig:
    """Channel, layer laws and rates of a layered binning code.

    ``dists`` are the chain factors ``[P_U1, P_U2|U1, .., P_X|U_(K-1)]``;
    ``rates`` are the message rates R_k and ``total_rates`` the Rt_k, with
    Rt_1 = R_1.
    """
    channel: DmcBroadcast
    dists: list
    rates: np.ndarray
    total_rates: np.ndarray

    def __post_init__(self):
        self.dists = check_chain(self.dists, self.channel)
        K = self.channel.K
        self.rates = np.asarray(self.rates, dtype=float).reshape(-1)
        self.total_rates = np.asarray(self.total_rates, dtype=float).reshape(-1)
        if self.rates.size != K or self.total_rates.size != K:
            raise ValidationError(f"need {K} message rates and {K} total rates")
        if np.any(self.rates < 0):
            raise ValidationError("message rates must be nonnegative")
        if abs(self.total_rates[0] - self.rates[0]) > RATE_TOL:
            raise ValidationError("the first layer has no binning: total rate must equal R_1")
        if np.any(self.total_rates < self.rates - RATE_TOL):
            raise ValidationError("total rates must be at least the message rates")

    @property
    def K(self):
        return self.channel.K

    @classmethod
    def from_dict(cls, d):
        from .channels import channel_from_dict
        ch = channel_from_dict(d["channel"])
        dists = [np.asarray(d["dists"][0], dtype=float)] + [
            np.asarray(m, dtype=float) for m in d["dists"][1:]]
        return cls(ch, dists, d["rates"], d["total_rates"])


@dataclass
class Condition:
    name: str
    layer: int
    receiver: int
    lhs: float        # rate side
    rhs: float        # information side
    slack: float      # >= 0 when satisfied
    kind: str         # "decoding", "secrecy" or "binning"
    required: bool = True   # secrecy of a layer without message bits is vacuous

    def __post_init__(self):
        self.lhs, self.rhs, self.slack = float(self.lhs), float(self.rhs), float(self.slack)
        self.required = bool(self.required)

    @property
    def ok(self):
        return not self.required or self.slack >= -RATE_TOL


@dataclass
class RateReport:
    conditions: list

    @property
    def passed(self):
        return all(c.ok for c in self.conditions)

    def of_kind(self, kind):
        return [c for c in self.conditions if c.kind == kind]


def validate_rates(config):
    """Check the decodability, secrecy and binning conditions of a configuration.

    decoding: R_1 <= I(U_1;Y_1) and Rt_k <= I(U_k;Y_k|U_{k-1});
    secrecy:  Rt_k - R_k >= I(U_k;Y_{k-1}|U_{k-1});
    binning:  Rt_j - R_j >= I(U_j;Y_e|U_{j-1}) for every eavesdropping
              receiver e < j, the hypothesis needed at each level e.

    Secrecy and binning conditions of a layer with R_j = 0 carry no secret
    and are reported with ``required=False``.
    """
    ch, dists = config.channel, config.dists
    R, Rt = config.rates, config.total_rates
    conds = []
    i1 = layer_information(dists, ch, 1, 1)
    conds.append(Condition("R_1 <= I(U_1;Y_1)", 1, 1, R[0], i1, i1 - R[0], "decoding"))
    for k in range(2, ch.K + 1):
        own = layer_information(dists, ch, k, k)
        conds.append(Condition(f"Rt_{k} <= I(U_{k};Y_{k}|U_{k-1})", k, k, Rt[k - 1], own,
                               own - Rt[k - 1], "decoding"))
        leak = layer_information(dists, ch, k, k - 1)
        extra = Rt[k - 1] - R[k - 1]
        conds.append(Condition(f"Rt_{k} - R_{k} >= I(U_{k};Y_{k-1}|U_{k-1})", k, k - 1, extra,
                               leak, extra - leak, "secrecy", R[k - 1] > RATE_TOL))
    for e in range(1, ch.K):
        for j in range(e + 1, ch.K + 1):
            info = layer_information(dists, ch, j, e)
            extra = Rt[j - 1] - R[j - 1]
            conds.append(Condition(f"Rt_{j} - R_{j} >= I(U_{j};Y_{e}|U_{j-1})", j, e, extra,
                                   info, extra - info, "binning", R[j - 1] > RATE_TOL))
    return RateReport(conds)


@dataclass
class LayeredCodebook:
    n: int
    seed: object
    counts: tuple          # sequences per parent, per layer
    bin_sizes: tuple       # sequences per bin, per layer
    layers: list           # layers[k]: (prod(counts[:k+1]), n) symbol arrays
    rates: np.ndarray
    total_rates: np.ndarray

    @property
    def K(self):
        return len(self.counts)

    @property
    def bins(self):
        return tuple(c // b for c, b in zip(self.counts, self.bin_sizes))

    @property
    def codewords(self):
        return self.layers[-1]

    @property
    def size(self):
        return len(self.layers[-1])

    def digits(self, index=None):
        """Mixed-radix digits ``d_1..d_K`` of every (or the given) codeword index."""
        idx = np.arange(self.size) if index is None else np.asarray(index)
        out = np.empty(idx.shape + (self.K,), dtype=np.int64)
        rest = idx.copy()
        for k in range(self.K - 1, -1, -1):
            out[..., k] = rest % self.counts[k]
            rest = rest // self.counts[k]
        return out

    def messages(self, index=None):
        """Message tuples ``(w_1..w_K)`` of every (or the given) codeword index."""
        return self.digits(index) // np.asarray(self.bin_sizes)

    def ancestor(self, layer, index=None):
        """Flat index of the layer-``layer`` (1-based) ancestor of each codeword."""
        idx = np.arange(self.size) if index is None else np.asarray(index)
        return idx // prod(self.counts[layer:])

    def index_of(self, messages, bin_indices):
        """Flat codeword index for messages ``w_1..w_K`` and in-bin indices ``l_2..l_K``."""
        w = np.asarray(messages, dtype=np.int64)
        l = np.asarray(bin_indices, dtype=np.int64)
        idx = np.zeros(w.shape[:-1], dtype=np.int64)
        for k in range(self.K):
            lk = l[..., k - 1] if k else 0
            idx = idx * self.counts[k] + w[..., k] * self.bin_sizes[k] + lk
        return idx


def generate_codebook(config, n, seed):
    """Draw a superposition codebook with blocklength ``n``.

    Layer-k symbols are drawn i.i.d. from P(U_k | U_{k-1}) given the parent
    codeword symbol by symbol.  ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`; the same seed gives the same codebook.
    """
    if n < 1:
        raise ValidationError("blocklength must be >= 1")
    K = config.K
    counts, bin_sizes = [], []
    for k in range(K):
        c = _power_of_two_count(n * config.total_rates[k], f"layer {k + 1} sequences")
        b = _power_of_two_count(n * config.rates[k], f"layer {k + 1} bins")
        if c % b:
            raise ValidationError(f"layer {k + 1}: {c} sequences do not split into {b} bins")
        counts.append(c)
        bin_sizes.append(c // b)
    total = sum(prod(counts[:k + 1]) for k in range(K))
    if total > MAX_CODEWORDS:
        raise EnumerationOverflowError(f"codebook would hold {total} sequences (cap {MAX_CODEWORDS})")
    rng = np.random.default_rng(seed)
    d0 = config.dists[0]
    layers = [rng.choice(d0.size, size=(counts[0], n), p=d0)]
    for k in range(1, K):
        cdf = np.cumsum(config.dists[k], axis=1)
        cdf[:, -1] = 1.0
        parent = np.repeat(layers[-1], counts[k], axis=0)
        u = rng.random(parent.shape)
        child = (u[..., None] >= cdf[parent]).sum(axis=-1)
        layers.append(child)
    return LayeredCodebook(n, seed, tuple(counts), tuple(bin_sizes), layers,
                           config.rates.copy(), config.total_rates.copy())


def encode(codebook, messages, rng=None, return_index=False):
    """Channel input for ``messages = (w_1..w_K)`` with uniform in-bin indices.

    ``messages`` may also be a batch of shape ``(B, K)``.  With
    ``return_index`` the flat codeword index is returned as well.
    """
    w = np.asarray(messages, dtype=np.int64)
    bins = np.asarray(codebook.bins)
    if w.shape[-1] != codebook.K or np.any(w < 0) or np.any(w >= bins):
        raise ValidationError(f"message indices must satisfy 0 <= w_k < {list(codebook.bins)}")
    rng = np.random.default_rng(rng)
    sizes = np.asarray(codebook.bin_sizes[1:], dtype=np.int64)
    l = rng.integers(0, sizes, size=w.shape[:-1] + (codebook.K - 1,)) if codebook.K > 1 \
        else np.zeros(w.shape[:-1] + (0,), dtype=np.int64)
    idx = codebook.index_of(w, l)
    if return_index:
        return codebook.codewords[idx], idx
    return codebook.codewords[idx]


def transmit(x, channel, receiver, rng=None):
    """Pass input sequence(s) ``x`` through receiver ``receiver``'s channel."""
    W = channel.transition(receiver)
    rng = np.random.default_rng(rng)
    cdf = np.cumsum(W, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(np.shape(x))
    return (u[..., None] >= cdf[np.asarray(x)]).sum(axis=-1)


def _likelihoods(codebook, W, ys):
    """``L[c, j] = P(ys[j] | codeword c)`` for output sequences ``ys``."""
    X = codebook.codewords
    L = np.ones((len(X), len(ys)))
    for i in range(codebook.n):
        L *= W[X[:, i]][:, ys[:, i]]
    return L


def _group_rows(values, keys, n_groups):
    """Sum rows of ``values`` sharing the same key."""
    out = np.zeros((n_groups,) + values.shape[1:])
    np.add.at(out, keys, values)
    return out


def _argmax_smallest(post):
    """Per column, the smallest row index whose value ties the column max."""
    top = post.max(axis=0)
    tied = post >= top * (1.0 - TIE_RTOL)
    return np.argmax(tied, axis=0)


def _output_sequences(q, n, start=0, stop=None):
    stop = q ** n if stop is None else stop
    idx = np.arange(start, stop)
    ys = np.empty((len(idx), n), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        ys[:, i] = idx % q
        idx = idx // q
    return ys


def _check_receiver_arg(codebook, channel, receiver):
    if not 1 <= receiver <= codebook.K or codebook.K != channel.K:
        raise ValidationError(f"receiver must be in 1..{codebook.K}")


def decode(codebook, y, receiver, channel):
    """MAP estimate of ``(w_1..w_k)`` at receiver ``k`` from output ``y``.

    The posterior of each layer-k tuple ``(w_1, l_1.., w_k, l_k)`` sums the
    likelihoods of all codewords below it (messages and in-bin indices are
    uniform, so all codewords are equally likely a priori).  Ties go to the
    lexicographically smallest tuple.
    """
    _check_receiver_arg(codebook, channel, receiver)
    y = np.asarray(y, dtype=np.int64).reshape(1, -1)
    W = channel.transition(receiver)
    if y.shape[1] != codebook.n or np.any(y < 0) or np.any(y >= W.shape[1]):
        raise ValidationError("output sequence has wrong length or symbols")
    L = _likelihoods(codebook, W, y)
    n_tuples = prod(codebook.counts[:receiver])
    post = _group_rows(L, codebook.ancestor(receiver), n_tuples)
    best = int(_argmax_smallest(post)[0])
    first = best * prod(codebook.counts[receiver:])
    return tuple(int(v) for v in codebook.messages(first)[:receiver])


def _message_keys(codebook, upto):
    """Integer key of ``(w_1..w_upto)`` for every codeword."""
    w = codebook.messages()
    key = np.zeros(codebook.size, dtype=np.int64)
    for k in range(upto):
        key = key * codebook.bins[k] + w[:, k]
    return key, prod(codebook.bins[:upto])


def decision_table(codebook, channel, receiver, chunk=1 << 16):
    """Decoded message key for every output sequence, in output-enumeration order."""
    _check_receiver_arg(codebook, channel, receiver)
    W = channel.transition(receiver)
    q = W.shape[1]
    M = q ** codebook.n
    if M > MAX_TABLE:
        raise EnumerationOverflowError(f"{M} output sequences exceed the cap {MAX_TABLE}")
    anc = codebook.ancestor(receiver)
    n_tuples = prod(codebook.counts[:receiver])
    key, _ = _message_keys(codebook, receiver)
    below = prod(codebook.counts[receiver:])
    out = np.empty(M, dtype=np.int64)
    for s in range(0, M, chunk):
        ys = _output_sequences(q, codebook.n, s, min(M, s + chunk))
        post = _group_rows(_likelihoods(codebook, W, ys), anc, n_tuples)
        out[s:s + len(ys)] = key[_argmax_smallest(post) * below]
    return out


def _exact_error_probability(codebook, channel, receiver):
    W = [[Fraction(float(v)) for v in row] for row in channel.transition(receiver)]
    q = len(W[0])
    n = codebook.n
    X = codebook.codewords.tolist()
    key, _ = _message_keys(codebook, receiver)
    anc = codebook.ancestor(receiver).tolist()
    below = prod(codebook.counts[receiver:])
    n_tuples = prod(codebook.counts[:receiver])
    err = Fraction(0)
    for y in _output_sequences(q, n).tolist():
        lik = []
        for x in X:
            p = Fraction(1)
            for a, b in zip(x, y):
                p *= W[a][b]
            lik.append(p)
        post = [Fraction(0)] * n_tuples
        for c, p in enumerate(lik):
            post[anc[c]] += p
        best = max(range(n_tuples), key=lambda t: (post[t], -t))
        decided = key[best * below]
        err += sum((p for c, p in enumerate(lik) if key[c] != decided), Fraction(0))
    return float(err / len(X))


def exact_error_probability(codebook, channel, receiver, exact=None):
    """Block error probability of ``(w_1..w_k)`` at receiver ``k``, by enumeration.

    Averages over uniform messages, uniform in-bin indices and every channel
    output sequence.  With ``exact`` (default: when the codeword-by-output
    table has at most ``EXACT_TABLE`` entries) the sum is carried out in
    rational arithmetic on the channel's floating-point entries, so the
    result is the correctly rounded value.
    """
    _check_receiver_arg(codebook, channel, receiver)
    q = channel.transition(receiver).shape[1]
    M = q ** codebook.n
    if M > MAX_TABLE:
        raise EnumerationOverflowError(f"{M} output sequences exceed the cap {MAX_TABLE}")
    if exact is None:
        exact = codebook.size * M <= EXACT_TABLE
    if exact:
        return _exact_error_probability(codebook, channel, receiver)
    W = channel.transition(receiver)
    key, _ = _message_keys(codebook, receiver)
    dec = decision_table(codebook, channel, receiver)
    err = 0.0
    chunk = max(1, MAX_TABLE // max(codebook.size, 1) // 8)
    for s in range(0, M, chunk):
        ys = _output_sequences(q, codebook.n, s, min(M, s + chunk))
        L = _likelihoods(codebook, W, ys)
        wrong = key[:, None] != dec[None, s:s + len(ys)]
        err += float(np.sum(L * wrong))
    return err / codebook.size


def monte_carlo_error_probability(codebook, channel, receiver, trials, seed):
    """Estimate the block error probability by simulation.

    Returns ``(estimate, standard_error)``.  Messages and in-bin indices are
    drawn uniformly, sent through :func:`encode` and the channel, and decoded
    with the same MAP rule as :func:`exact_error_probability`.
    """
    _check_receiver_arg(codebook, channel, receiver)
    rng = np.random.default_rng(seed)
    w = rng.integers(0, np.asarray(codebook.bins), size=(trials, codebook.K))
    x = encode(codebook, w, rng)
    y = transmit(x, channel, receiver, rng)
    q = channel.transition(receiver).shape[1]
    table = decision_table(codebook, channel, receiver)
    y_index = np.zeros(trials, dtype=np.int64)
    for i in range(codebook.n):
        y_index = y_index * q + y[:, i]
    sent = np.zeros(trials, dtype=np.int64)
    for k in range(receiver):
        sent = sent * codebook.bins[k] + w[:, k]
    errors = table[y_index] != sent
    p = float(errors.mean())
    return p, float(np.sqrt(max(p * (1 - p), 0.0) / trials))


@dataclass
class LeakageReport:
    """Per-receiver leakage (1/n) I(W_{k+1..K}; Y_k^n | W_1..W_k) in bits."""
    n: int
    values: dict                      # receiver -> clamped value
    raw: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)   # receiver -> sum_{j>k} R_j


def exact_leakage(codebook, channel, receiver, given=None):
    """Exact leakage rate at receiver ``k``.

    Computes (1/n) I(W_{g+1..K}; Y_k^n | W_1..W_g) with ``g = given``
    (default ``k``) from the exact joint law of messages, in-bin indices and
    outputs.  Values within 1e-13 of zero are reported as zero and the
    result is clamped to ``[0, sum_{j>g} R_j]``; the raw value is returned
    alongside as ``(value, raw)``.
    """
    _check_receiver_arg(codebook, channel, receiver)
    g = receiver if given is None else int(given)
    if not 0 <= g <= codebook.K:
        raise ValidationError(f"given must be in 0..{codebook.K}")
    bound = float(np.sum(codebook.rates[g:]))
    if g == codebook.K:
        return 0.0, 0.0
    W = channel.transition(receiver)
    q = W.shape[1]
    M = q ** codebook.n
    if codebook.size * M > MAX_TABLE:
        raise EnumerationOverflowError(
            f"joint table of {codebook.size} x {M} entries exceeds the cap {MAX_TABLE}")
    L = _likelihoods(codebook, W, _output_sequences(q, codebook.n))
    full_key, n_full = _message_keys(codebook, codebook.K)
    part_key, n_part = _message_keys(codebook, g)
    per_full = codebook.size // n_full
    per_part = codebook.size // n_part
    p_full = _group_rows(L, full_key, n_full) / per_full          # P(y | w_1..w_K)
    p_part = _group_rows(L, part_key, n_part) / per_part          # P(y | w_1..w_g)
    # map each full message tuple to its prefix key
    w_full = np.array(np.unravel_index(np.arange(n_full), codebook.bins)).T
    prefix = np.zeros(n_full, dtype=np.int64)
    for k in range(g):
        prefix = prefix * codebook.bins[k] + w_full[:, k]
    ref = p_part[prefix]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p_full > 0, p_full * np.log2(p_full / ref), 0.0)
    raw = float(terms.sum() / n_full / codebook.n)
    value = 0.0 if abs(raw) <= LEAK_FLOOR else min(max(raw, 0.0), bound)
    return value, raw


def leakage_report(codebook, channel):
    """Leakage at every receiver ``1..K`` with its ceiling ``sum_{j>k} R_j``."""
    rep = LeakageReport(codebook.n, {})
    for k in range(1, codebook.K + 1):
        v, raw = exact_leakage(codebook, channel, k)
        rep.values[k] = v
        rep.raw[k] = raw
        rep.bounds[k] = float(np.sum(codebook.rates[k:]))
    return rep


@dataclass
class TrendRow:
    n: int
    seed: int
    receiver: int
    error_prob: float
    leakage: float


@dataclass
class TrendTable:
    rows: list
    mean_leakage: dict        # receiver -> {n: mean over seeds}
    trend_fraction: dict      # receiver -> fraction of adjacent n pairs with nonincreasing mean

    def as_records(self):
        return [(r.n, r.seed, r.receiver, r.error_prob, r.leakage) for r in self.rows]


def codebook_seed(master_seed, n, trial):
    """Independent seed stream for ``(master seed, blocklength, trial)``."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(n), int(trial)))


def _trend_fraction(means, ns):
    pairs = list(zip(ns[:-1], ns[1:]))
    if not pairs:
        return 1.0
    ok = sum(1 for a, b in pairs if means[b] <= means[a] + 1e-12)
    return ok / len(pairs)


def leakage_trend(config, n_list, seeds, master_seed=0, receivers=None,
                  with_errors=True, check_degraded=True, map_fn=map):
    """Mean exact leakage over seeded codebooks for each blocklength.

    ``seeds`` is a number of trials or an explicit list of trial indices.
    ``map_fn`` may be a parallel map; results are reassembled in canonical
    ``(n, trial, receiver)`` order either way.
    """
    if check_degraded:
        check_degraded_chain(config.channel)
    trials = list(range(seeds)) if isinstance(seeds, (int, np.integer)) else list(seeds)
    ns = sorted(int(n) for n in n_list)
    receivers = list(receivers or range(1, config.K + 1))
    jobs = [(n, t) for n in ns for t in trials]

    def run(job):
        n, t = job
        cb = generate_codebook(config, n, codebook_seed(master_seed, n, t))
        out = []
        for k in receivers:
            err = exact_error_probability(cb, config.channel, k, exact=False) \
                if with_errors else float("nan")
            leak, _ = exact_leakage(cb, config.channel, k)
            out.append(TrendRow(n, t, k, err, leak))
        return out

    rows = [r for chunk in map_fn(run, jobs) for r in chunk]
    rows.sort(key=lambda r: (r.n, r.seed, r.receiver))
    means, fractions = {}, {}
    for k in receivers:
        means[k] = {n: float(np.mean([r.leakage for r in rows if r.receiver == k and r.n == n]))
                    for n in ns}
        fractions[k] = _trend_fraction(means[k], ns)
    return TrendTable(rows, means, fractions)
