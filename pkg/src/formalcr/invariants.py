"""Invariant pairs, the refined set of triples, tensor scalars and their transformation laws."""

from __future__ import annotations

from dataclasses import dataclass, field

from .hypersurface import FormalMap, PhiForm, QForm, phi_to_q
from .series import BeyondTruncation, GaussRat, MultiSeries, first_difference


class TruncationTooSmall(Exception):
    pass


def precedes(a, b, strict: bool = True) -> bool:
    """Partial order on (alpha, mu): a <= b iff alpha+mu <= beta+nu and mu <= nu."""
    weak = a[0] + a[1] <= b[0] + b[1] and a[1] <= b[1]
    if strict:
        return weak and tuple(a) != tuple(b)
    return weak


def _series_and_vars(M):
    if isinstance(M, PhiForm):
        return M.phi, "s"
    if isinstance(M, QForm):
        return M.q, "tau"
    raise TypeError("expected a PhiForm or QForm")


def coefficient_series(M, alpha: int, mu: int) -> MultiSeries:
    """phi_{alpha,mu}(zb) or q_{alpha,mu}(zb), known to degree D - alpha - mu."""
    series, tvar = _series_and_vars(M)
    return series.coeff_extract({"z": alpha, tvar: mu})


def support_pairs(M) -> set:
    series, tvar = _series_and_vars(M)
    zi, ti = series.vars.index("z"), series.vars.index(tvar)
    pairs = set()
    for e, c in series.items():
        if e[zi] >= 1:
            if tvar == "tau" and e == (0, 0, 1):
                continue
            pairs.add((e[zi], e[ti]))
    return pairs


def invariant_pairs(M) -> set:
    support = support_pairs(M)
    return {p for p in support if not any(precedes(q, p) for q in support)}


def provisional_pairs(M) -> set:
    """Invariant pairs that a hidden invariant pair below them could still overturn.

    A hidden invariant pair (beta, nu) has its first coefficient at total
    degree >= 2 beta + nu, so it is invisible when that exceeds D.
    """
    D = _series_and_vars(M)[0].trunc
    out = set()
    for a, m in invariant_pairs(M):
        for nu in range(m + 1):
            for beta in range(1, a + m - nu + 1):
                if (beta, nu) != (a, m) and 2 * beta + nu > D:
                    out.add((a, m))
    return out


def _q_form(M) -> QForm:
    if isinstance(M, PhiForm):
        return phi_to_q(M)
    return M


def lambda_set(M) -> set:
    return {t for t, _ in _tensor_table(M).items()}


def _tensor_table(M) -> dict:
    table = {}
    for a, m in invariant_pairs(M):
        coeff = coefficient_series(M, a, m)
        n = coeff.valuation()
        if isinstance(n, BeyondTruncation):
            raise TruncationTooSmall(f"coefficient of ({a},{m}) indeterminate")
        table[(a, n, m)] = coeff.coeff((n,))
    return table


def tensor_coeff(M, triple) -> GaussRat:
    """Leading zb^n coefficient of q_{alpha,mu} (taken on the Q side)."""
    Mq = _q_form(M)
    a, n, m = triple
    coeff = coefficient_series(Mq, a, m)
    if coeff.trunc < n:
        raise TruncationTooSmall(f"need degree {a + m + n} for {triple}")
    if triple not in lambda_set(Mq):
        raise ValueError(f"{triple} is not in the invariant set")
    return coeff.coeff((n,))


def finite_type_order(M):
    series, tvar = _series_and_vars(M)
    best = None
    for a, m in support_pairs(M):
        if m == 0 and (best is None or a < best):
            best = a
    return BeyondTruncation(series.trunc) if best is None else best


def m0(M):
    pairs = support_pairs(M)
    if not pairs:
        return BeyondTruncation(_series_and_vars(M)[0].trunc)
    return min(a + m for a, m in pairs)


@dataclass(frozen=True)
class InvariantProfile:
    qm: frozenset
    lam: frozenset
    tensors: dict
    m0: object
    gamma0: object
    trunc: int
    provisional: frozenset = field(default_factory=frozenset)


def profile(M) -> InvariantProfile:
    Mq = _q_form(M)
    table = _tensor_table(Mq)
    return InvariantProfile(
        qm=frozenset(invariant_pairs(Mq)),
        lam=frozenset(table),
        tensors=table,
        m0=m0(Mq),
        gamma0=finite_type_order(Mq),
        trunc=Mq.trunc,
        provisional=frozenset(provisional_pairs(Mq)),
    )


@dataclass(frozen=True)
class TransformVerdict:
    holds: bool
    same_lambda: bool
    failures: tuple = ()

    def __bool__(self):
        return self.holds and self.same_lambda


def check_transform(M: QForm, M_target: QForm, H: FormalMap) -> TransformVerdict:
    """Check the coefficient law for invariant pairs and the tensor law, M = H^{-1}(M_target)."""
    fz = H.F.coeff((1, 0))
    fw = H.F.coeff((0, 1))
    gw_bar = H.G.coeff((0, 1)).conj()
    fbar0 = H.F.coeff_extract({"w": 0}).conj()  # conj(F)(zb, 0) in the single variable
    failures = []
    for a, m in sorted(invariant_pairs(M)):
        q = coefficient_series(M, a, m)
        q_t = coefficient_series(M_target, a, m)
        d = min(q.trunc, q_t.trunc, fbar0.trunc)
        arg = fbar0.truncate(d).rename(q_t.vars)
        composed = q_t.truncate(d).substitute({q_t.vars[0]: arg})
        if (a, m) != (1, 0):
            rhs = composed.scale(fz ** a * gw_bar ** (m - 1))
        else:
            rhs = (composed * (MultiSeries.constant(q.vars, fz, d) + q.truncate(d).scale(fw))).scale(gw_bar.inverse())
        bad = first_difference(q.truncate(d), rhs, d)
        if bad is not None:
            failures.append(("coefficient law", (a, m), bad))
    lam, lam_t = _tensor_table(M), _tensor_table(M_target)
    for (a, n, m), T in lam.items():
        if (a, n, m) not in lam_t:
            continue
        expected = lam_t[(a, n, m)] * fz ** a * fz.conj() ** n * gw_bar ** (m - 1)
        if not (T - expected).is_zero():
            failures.append(("tensor law", (a, n, m), None))
    return TransformVerdict(not failures, set(lam) == set(lam_t), tuple(failures))

