"""K3 lattice models and the 9-dimensional transcendental form with
complex multiplication by a totally real cubic field.

The reference lattices are the hyperbolic plane U, the E8 Cartan form,
the full 22-dimensional even form 3U (+) 2(-E8), and its 21-dimensional
polarized companions where the first U is replaced by <2d>.

The transcendental model is a block-diagonal 9x9 form D whose blocks are
regular representations of three field elements.  A field element a acts
by the block-diagonal matrix of its regular representation; the exact
matrix identity M_a^T D M_a = D M_{a^2} holds because all blocks are
commuting symmetric matrices, and on a numeric period vector the action
is multiplication by the distinguished real embedding of a.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

from . import linalg, qform
from .field import FieldElt, SymCubicField, SignPattern, conjugates, regular_rep, sign_pattern
from .intervals import ComplexInterval, Interval, sqrt_interval
from .linalg import Matrix
from .qform import QForm


class PeriodParameterError(ValueError):
    """The period parameter t is outside the solvable range."""


# ---------------------------------------------------------------------------
# reference lattices


def gram_U() -> QForm:
    return QForm([[0, 1], [1, 0]])


# Cartan matrix of the E8 diagram: chain 1-3-4-5-6-7-8 with 2 attached to 4
_E8_EDGES = ((1, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (2, 4))


def gram_E8() -> QForm:
    g = [[0] * 8 for _ in range(8)]
    for i in range(8):
        g[i][i] = 2
    for i, j in _E8_EDGES:
        g[i - 1][j - 1] = g[j - 1][i - 1] = -1
    return QForm(g)


def gram_minus_E8() -> QForm:
    e8 = gram_E8()
    return QForm(linalg.mat_scale(e8.gram, Fraction(-1)))


def gram_L0() -> QForm:
    """3 U (+) 2 (-E8): signature (3, 19), determinant -1, even."""
    u = gram_U().gram
    me8 = gram_minus_E8().gram
    return QForm(linalg.block_diag([u, u, u, me8, me8]))


def gram_L2d(d: int) -> QForm:
    """First U summand replaced by the rank-1 form <2d> spanned by e1 + d f1."""
    if d <= 0:
        raise ValueError("d must be a positive integer")
    u = gram_U().gram
    me8 = gram_minus_E8().gram
    top = linalg.mat([[2 * d]])
    return QForm(linalg.block_diag([top, u, u, me8, me8]))


# ---------------------------------------------------------------------------
# the transcendental space


@dataclass(frozen=True)
class TranscendentalSpace:
    field: SymCubicField
    phi: tuple[FieldElt, FieldElt, FieldElt]
    D: Matrix
    signature: tuple[int, int]
    patterns: tuple[SignPattern, SignPattern, SignPattern]
    chosen_embedding: int | None

    @property
    def form(self) -> QForm:
        return QForm(self.D)


def build_transcendental(
    field: SymCubicField, phi: Sequence[FieldElt]
) -> TranscendentalSpace:
    """Assemble D = diag(rep(phi1), rep(phi2), rep(phi3)) and cross-check its
    signature against the summed sign patterns of the phi."""
    phi = tuple(phi)
    if len(phi) != 3:
        raise ValueError("phi must be a triple")
    if any(p.is_zero() for p in phi):
        raise qform.DegenerateFormError(
            sum(3 for p in phi if p.is_zero())
        )
    blocks = [regular_rep(p) for p in phi]
    d = linalg.block_diag(blocks)
    inv = qform.form_invariants(QForm(d))
    patterns = tuple(sign_pattern(p) for p in phi)
    summed = (
        sum(p.positives for p in patterns),
        sum(p.negatives for p in patterns),
    )
    if inv.signature != summed:
        raise AssertionError(
            f"signature {inv.signature} disagrees with sign patterns {summed}"
        )
    chosen = None
    for j in range(3):
        if patterns[0].signs[j] > 0 and patterns[1].signs[j] > 0:
            chosen = j
            break
    return TranscendentalSpace(
        field=field,
        phi=phi,
        D=d,
        signature=inv.signature,
        patterns=patterns,
        chosen_embedding=chosen,
    )


# ---------------------------------------------------------------------------
# complex multiplication


@dataclass(frozen=True)
class CMAction:
    element: FieldElt
    matrix: Matrix
    exact_identity: bool  # M_a^T D M_a == D M_{a^2}, verified exactly


def cm_action(space: TranscendentalSpace, a: FieldElt) -> CMAction:
    if a.is_zero():
        raise ValueError("CM element must be nonzero")
    block = regular_rep(a)
    m = linalg.block_diag([block, block, block])
    m_sq = regular_rep(a * a)
    m2 = linalg.block_diag([m_sq, m_sq, m_sq])
    lhs = linalg.mat_mul(linalg.transpose(m), linalg.mat_mul(space.D, m))
    rhs = linalg.mat_mul(space.D, m2)
    ok = lhs == rhs
    if not ok:
        raise AssertionError("CM identity M_a^T D M_a = D M_{a^2} failed")
    return CMAction(element=a, matrix=m, exact_identity=ok)


def is_cup_preserving(space: TranscendentalSpace, a: FieldElt) -> bool:
    """A CM element preserves the cup-product form up to a rational multiple
    iff its square is rational."""
    if a.is_zero():
        raise ValueError("CM element must be nonzero")
    return (a * a).is_rational()


# ---------------------------------------------------------------------------
# period solving


@dataclass(frozen=True)
class PeriodVector:
    """Period data: symbolic entry layout b_i x_j plus certified numerics."""

    space: TranscendentalSpace
    t: Fraction
    entries: tuple[ComplexInterval, ...]
    symbolic: tuple[tuple[int, int], ...]  # (b index, x index) per entry
    x3_squared: Interval
    q: tuple[Interval, Interval, Interval]
    residual: ComplexInterval  # v^T D v
    vbar_dv: ComplexInterval  # conj(v)^T D v
    identity_value: Interval  # 2 q2 t^2 = 2 (q1 + q3 x3^2), the exact value
    idealized_2q1: Interval
    precision_bits: int
    independence_assumed: bool = True

    @property
    def residual_ok(self) -> bool:
        return self.residual.contains_zero()

    @property
    def vbar_matches_identity(self) -> bool:
        return self.vbar_dv.im.straddles_zero() and self.vbar_dv.re.overlaps(
            self.identity_value
        )

    @property
    def vbar_positive(self) -> bool:
        return self.vbar_dv.re.is_positive()

    @property
    def vbar_contains_2q1(self) -> bool:
        """Diagnostic: the idealized value 2 q1 differs from the true
        identity value by 2 |q3| x3^2 > 0, so this is expected to be False
        for any certifiable t."""
        return self.vbar_dv.re.overlaps(self.idealized_2q1)


def _embedding_values(space: TranscendentalSpace, precision: Fraction):
    j = space.chosen_embedding
    f = space.field
    sb = [conjugates(b, precision)[j] for b in f.b_basis]
    sphi = [conjugates(p, precision)[j] for p in space.phi]
    return sb, sphi


def solve_period(
    space: TranscendentalSpace, t, precision_bits: int = 128
) -> PeriodVector:
    """Numeric period vector for x2 = i t, solving x3 real from the quadric.

    With q_k = sigma(phi_k) * sum sigma(b_i)^2 at the distinguished
    embedding, v^T D v = q1 - t^2 q2 + x3^2 q3 vanishes for
    x3^2 = (q2 t^2 - q1)/q3, which requires t^2 < q1/q2 (strictly: the
    boundary forces x3 = 0 and kills coordinate independence).  Then
    conj(v)^T D v = 2 q2 t^2 exactly, a positive number.
    """
    t = Fraction(t)
    if t <= 0:
        raise PeriodParameterError("t must be a positive rational")
    if space.chosen_embedding is None:
        raise PeriodParameterError(
            "no distinguished embedding: phi1, phi2 share no positive sign"
        )
    sig1 = space.patterns[0].signs[space.chosen_embedding]
    sig2 = space.patterns[1].signs[space.chosen_embedding]
    sig3 = space.patterns[2].signs[space.chosen_embedding]
    if not (sig1 > 0 and sig2 > 0 and sig3 < 0):
        raise PeriodParameterError(
            "phi sign pattern invalid: need phi1, phi2 > 0 > phi3 at the "
            "distinguished embedding"
        )

    ratio = space.phi[0] / space.phi[1]
    if ratio.is_rational() and t * t == ratio.as_rational():
        raise PeriodParameterError(
            "t is at the boundary sqrt(q1/q2): x3 = 0 is rejected"
        )

    precision = Fraction(1, 2 ** (precision_bits + 16))
    for _ in range(4):
        sb, sphi = _embedding_values(space, precision)
        s_norm = sb[0].square() + sb[1].square() + sb[2].square()
        q1, q2, q3 = (sphi[k] * s_norm for k in range(3))
        margin = q1 - t * t * q2
        if margin.is_positive():
            break
        if margin.hi < 0:
            raise PeriodParameterError(
                f"t out of range: t^2 >= q1/q2 (t = {t})"
            )
        precision *= Fraction(1, 2**64)
    else:
        raise PeriodParameterError(
            "cannot certify t below the boundary sqrt(q1/q2)"
        )

    x3_squared = (q2 * (t * t) - q1) / q3
    if not x3_squared.is_positive():
        raise PeriodParameterError("cannot certify x3^2 > 0")
    x3 = sqrt_interval(x3_squared, bits=precision_bits + 16)

    zero = Interval.point(0)
    entries: list[ComplexInterval] = []
    symbolic: list[tuple[int, int]] = []
    for xi, scale in ((1, None), (2, "it"), (3, "x3")):
        for bi in range(3):
            symbolic.append((bi + 1, xi))
            base = sb[bi]
            if scale is None:
                entries.append(ComplexInterval(base, zero))
            elif scale == "it":
                entries.append(ComplexInterval(zero, base * t))
            else:
                entries.append(ComplexInterval(base, zero) * ComplexInterval(x3, zero))

    dv = [
        sum(
            (entries[j] * space.D[i][j] for j in range(9)),
            ComplexInterval.point(0),
        )
        for i in range(9)
    ]
    residual = sum(
        (entries[i] * dv[i] for i in range(9)), ComplexInterval.point(0)
    )
    vbar_dv = sum(
        (entries[i].conjugate() * dv[i] for i in range(9)),
        ComplexInterval.point(0),
    )
    identity_value = 2 * t * t * q2
    idealized = 2 * q1

    pv = PeriodVector(
        space=space,
        t=t,
        entries=tuple(entries),
        symbolic=tuple(symbolic),
        x3_squared=x3_squared,
        q=(q1, q2, q3),
        residual=residual,
        vbar_dv=vbar_dv,
        identity_value=identity_value,
        idealized_2q1=idealized,
        precision_bits=precision_bits,
    )
    if not pv.residual_ok:
        raise AssertionError("period residual interval does not contain 0")
    if not pv.vbar_matches_identity:
        raise AssertionError("conj(v)^T D v missed its exact identity value")
    if not pv.vbar_positive:
        raise AssertionError("conj(v)^T D v is not certified positive")
    return pv


def auto_period_parameter(space: TranscendentalSpace) -> Fraction:
    """A deterministic valid t just below the boundary sqrt(q1/q2)."""
    if space.chosen_embedding is None:
        raise PeriodParameterError("no distinguished embedding")
    precision = Fraction(1, 2**80)
    sb, sphi = _embedding_values(space, precision)
    s_norm = sb[0].square() + sb[1].square() + sb[2].square()
    q1 = sphi[0] * s_norm
    q2 = sphi[1] * s_norm
    bound = sqrt_interval(q1 / q2, bits=80)
    t = Fraction(int(bound.lo * 2**20 * Fraction(63, 64)), 2**20)
    for _ in range(12):
        if t <= 0:
            break
        try:
            solve_period(space, t, precision_bits=64)
            return t
        except PeriodParameterError:
            t *= Fraction(63, 64)
    raise PeriodParameterError("could not find a valid period parameter")


def verify_period_scaling(
    action: CMAction, period: PeriodVector, tolerance=Fraction(1, 10**20)
) -> tuple[bool, Fraction]:
    """Check v . M_a = sigma(a) v on the numeric period entries: every
    difference interval must contain 0 with width below tolerance."""
    space = period.space
    precision = Fraction(1, 2 ** (period.precision_bits + 16))
    sigma_a = conjugates(action.element, precision)[space.chosen_embedding]
    m = action.matrix
    ok = True
    worst = Fraction(0)
    for j in range(9):
        acc = ComplexInterval.point(0)
        for i in range(9):
            if m[i][j] != 0:
                acc = acc + period.entries[i] * m[i][j]
        diff = acc - period.entries[j] * ComplexInterval(sigma_a, Interval.point(0))
        if not diff.contains_zero():
            ok = False
        worst = max(worst, diff.re.width, diff.im.width)
    return ok and worst < tolerance, worst


# ---------------------------------------------------------------------------
# embedding into the K3 forms


def embeds_in_k3(space: TranscendentalSpace, d: int) -> qform.ComplementCertificate:
    """Rational embedding certificate of D into the polarized 21-dim form."""
    return qform.complement_for_embedding(space.form, gram_L2d(d))


# ---------------------------------------------------------------------------
# the composite finding


@dataclass(frozen=True)
class HodgeVsIsometryReport:
    """Evidence that CM by the field generator is a Hodge-structure
    automorphism which no combination of cup-preserving maps reproduces."""

    space_signature: tuple[int, int]
    cm_exact_identity: bool
    period_t: Fraction | None
    period_scaling_ok: bool | None
    cup_preserving_alpha: bool
    irrational_witness: str | None
    sweep_height: int
    sweep_all_square_checks: bool
    sweep_cup_preserving_all_rational: bool
    notes: tuple[str, ...]


def hodge_vs_isometry(
    space: TranscendentalSpace, sweep_height: int = 5
) -> HodgeVsIsometryReport:
    f = space.field
    alpha = f.alpha()
    action = cm_action(space, alpha)
    notes: list[str] = []

    period_t = None
    scaling_ok = None
    witness = None
    if space.signature == (2, 7) and space.chosen_embedding is not None:
        t = auto_period_parameter(space)
        period = solve_period(space, t)
        ok, _ = verify_period_scaling(action, period)
        period_t = t
        scaling_ok = ok
        witness = str(alpha)
    else:
        notes.append(
            "signature is not (2,7): no period stage, no irrational witness"
        )

    cup_alpha = is_cup_preserving(space, alpha)

    all_checks = True
    all_rational = True
    r = range(-sweep_height, sweep_height + 1)
    from .field import rational_square_check

    for c0 in r:
        for c1 in r:
            for c2 in r:
                x = f.element((c0, c1, c2))
                if x.is_zero():
                    continue
                if not rational_square_check(x):
                    all_checks = False
                if (x * x).is_rational() and not x.is_rational():
                    all_rational = False
    return HodgeVsIsometryReport(
        space_signature=space.signature,
        cm_exact_identity=action.exact_identity,
        period_t=period_t,
        period_scaling_ok=scaling_ok,
        cup_preserving_alpha=cup_alpha,
        irrational_witness=witness,
        sweep_height=sweep_height,
        sweep_all_square_checks=all_checks,
        sweep_cup_preserving_all_rational=all_rational,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# serialization


def space_to_json(space: TranscendentalSpace) -> dict:
    from .field import element_to_json

    return {
        "phi": [element_to_json(p) for p in space.phi],
        "D": [[str(x) for x in row] for row in space.D],
        "signature": list(space.signature),
        "patterns": [
            {"positives": p.positives, "negatives": p.negatives,
             "signs": list(p.signs)}
            for p in space.patterns
        ],
        "chosen_embedding": space.chosen_embedding,
    }


def _interval_json(i: Interval) -> list[str]:
    return [f"{float(i.lo):.24e}", f"{float(i.hi):.24e}"]


def period_to_json(pv: PeriodVector) -> dict:
    return {
        "t": str(pv.t),
        "precision_bits": pv.precision_bits,
        "symbolic": [f"b{b} * x{x}" for b, x in pv.symbolic],
        "entries": [
            {"re": _interval_json(e.re), "im": _interval_json(e.im)}
            for e in pv.entries
        ],
        "x3_squared": _interval_json(pv.x3_squared),
        "q": [_interval_json(q) for q in pv.q],
        "residual_re": _interval_json(pv.residual.re),
        "residual_im": _interval_json(pv.residual.im),
        "vbar_dv_re": _interval_json(pv.vbar_dv.re),
        "identity_value_2_q2_t2": _interval_json(pv.identity_value),
        "idealized_2q1": _interval_json(pv.idealized_2q1),
        "vbar_contains_2q1": pv.vbar_contains_2q1,
        "independence_assumed": pv.independence_assumed,
    }
