"""Command-line orchestration: configuration, pipeline execution, and
machine-readable reports.

Exit codes: 0 success, 2 configuration error, 3 precondition failure,
4 verification failure, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from . import __version__, clifford, field, k3lattice, kugasatake, qform
from .field import SearchExhaustedError, make_field, search_prop33, sign_pattern
from .k3lattice import PeriodParameterError
from .kugasatake import KSPreconditionError, Prop51Config
from .qform import (
    CodimensionError,
    DegenerateFormError,
    SignatureObstructionError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_VERIFICATION = 4
EXIT_INTERNAL = 5

_PRECISION_ENV = "K3CM_PRECISION_BITS"

PHI_PRESETS = {
    # generator, its square minus itself minus one, one
    "default": ((0, 1, 0), (-1, -1, 1), (1, 0, 0)),
    # the all-positive diagnostic triple; the geometric stage reports its
    # sign patterns and halts
    "alternate": ((10, -1, -1), (2, -7, 2), (-1, -1, 0)),
}

POLICY_CHOICES = ("paper", "threefold", "closure", "both", "all")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    field_matrix: tuple = ((1, 1, 1), (1, 1, 0), (1, 0, 0))
    phi_mode: str = "default"  # default | alternate | searched | explicit
    phi_coords: tuple | None = None
    search_epsilon: Fraction = Fraction(1, 4)
    search_height: int = 150
    t: str | Fraction = "auto"
    modulus: int = 101
    policy: str = "both"
    embedding_d: int = 1
    precision_bits: int = 128
    block_conventions: tuple[str, ...] = ("powersym", "rep")
    run_ks_small: bool = True
    out: str | None = None


def _default_precision() -> int:
    raw = os.environ.get(_PRECISION_ENV)
    if raw is None:
        return 128
    try:
        bits = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{_PRECISION_ENV} must be an integer") from exc
    if bits < 16:
        raise ConfigError(f"{_PRECISION_ENV} must be at least 16")
    return bits


def parse_config(path: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Validated pipeline configuration from a JSON file plus overrides.

    An empty configuration yields the full defaults (the bundled field
    matrix, phi mode 'default', modulus 101, both word policies,
    precision 128 unless the environment overrides it).
    """
    data: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})

    known = {
        "field_matrix", "phi", "phi_coords", "search_epsilon",
        "search_height", "t", "modulus", "policy", "embedding_d",
        "precision_bits", "block_conventions", "run_ks_small", "out",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    matrix = data.get("field_matrix", ((1, 1, 1), (1, 1, 0), (1, 0, 0)))
    try:
        matrix = tuple(tuple(int(x) for x in row) for row in matrix)
    except (TypeError, ValueError) as exc:
        raise ConfigError("field_matrix must be a 3x3 integer matrix") from exc
    if len(matrix) != 3 or any(len(r) != 3 for r in matrix):
        raise ConfigError("field_matrix must be 3x3")

    phi_mode = data.get("phi", "default")
    phi_coords = data.get("phi_coords")
    if phi_mode == "explicit":
        if phi_coords is None:
            raise ConfigError("phi mode 'explicit' needs phi_coords")
        try:
            phi_coords = tuple(
                tuple(str(Fraction(str(x))) for x in row) for row in phi_coords
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("phi_coords must be three coordinate triples") from exc
        if len(phi_coords) != 3 or any(len(r) != 3 for r in phi_coords):
            raise ConfigError("phi_coords must be three coordinate triples")
    elif phi_mode not in ("default", "alternate", "searched"):
        raise ConfigError(f"unknown phi mode {phi_mode!r}")

    try:
        eps = Fraction(str(data.get("search_epsilon", "1/4")))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError("search_epsilon must be a rational") from exc
    if eps <= 0:
        raise ConfigError("search_epsilon must be positive")
    height = int(data.get("search_height", 150))
    if height < 1:
        raise ConfigError("search_height must be positive")

    t = data.get("t", "auto")
    if t != "auto":
        try:
            t = Fraction(str(t))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError("t must be a rational or 'auto'") from exc
        if t <= 0:
            raise ConfigError("t must be positive")

    modulus = int(data.get("modulus", 101))
    from .intmath import is_prime

    if not is_prime(modulus):
        raise ConfigError(f"modulus {modulus} is not prime")

    policy = data.get("policy", "both")
    if policy not in POLICY_CHOICES:
        raise ConfigError(f"policy must be one of {POLICY_CHOICES}")

    d = int(data.get("embedding_d", 1))
    if d < 1:
        raise ConfigError("embedding_d must be a positive integer")

    bits = data.get("precision_bits")
    bits = _default_precision() if bits is None else int(bits)
    if bits < 16:
        raise ConfigError("precision_bits must be at least 16")

    conventions = tuple(data.get("block_conventions", ("powersym", "rep")))
    for conv in conventions:
        if conv not in kugasatake.BLOCK_CONVENTIONS:
            raise ConfigError(f"unknown block convention {conv!r}")

    return PipelineConfig(
        field_matrix=matrix,
        phi_mode=phi_mode,
        phi_coords=phi_coords,
        search_epsilon=eps,
        search_height=height,
        t=t,
        modulus=modulus,
        policy=policy,
        embedding_d=d,
        precision_bits=bits,
        block_conventions=conventions,
        run_ks_small=bool(data.get("run_ks_small", True)),
        out=data.get("out"),
    )


def _policies_for(policy: str) -> tuple[str, ...]:
    return {
        "paper": ("fourfold-restricted",),
        "threefold": ("threefold",),
        "closure": ("closure",),
        "both": ("fourfold-restricted", "closure"),
        "all": ("fourfold-restricted", "threefold", "closure"),
    }[policy]


def _interval_str(iv) -> list[str]:
    return [f"{float(iv.lo):.24e}", f"{float(iv.hi):.24e}"]


def run_pipeline(config: PipelineConfig) -> dict:
    """Field construction, phi resolution, the transcendental form and its
    signature, the geometric stage when the signature is (2,7), the nine
    generators, and the rank computations.  Partial results are emitted on
    stage failure with the failing stage named."""
    checks: list[dict] = []
    timings: dict[str, float] = {}
    report: dict = {
        "tool": "k3cm",
        "config": {
            "field_matrix": [list(r) for r in config.field_matrix],
            "phi_mode": config.phi_mode,
            "phi_coords": (
                [list(r) for r in config.phi_coords] if config.phi_coords else None
            ),
            "search_epsilon": str(config.search_epsilon),
            "search_height": config.search_height,
            "t": str(config.t),
            "modulus": config.modulus,
            "policy": config.policy,
            "embedding_d": config.embedding_d,
            "precision_bits": config.precision_bits,
            "block_conventions": list(config.block_conventions),
        },
        "conventions": {
            "hasse_pairs": "i<=j (default; the strict i<j variant is "
            "reported alongside in every invariant record)",
        },
        "checks": checks,
        "timings": timings,
    }

    def check(claim: str, ok: bool, method: str):
        checks.append({"claim": claim, "ok": bool(ok), "method": method})

    stage = "field"
    t0 = time.perf_counter()
    fld = make_field(config.field_matrix)
    roots = fld.roots(Fraction(1, 2**config.precision_bits))
    report["field"] = {
        "matrix": [[str(x) for x in row] for row in fld.A],
        "charpoly": fld.charpoly_str(),
        "roots": [_interval_str(r) for r in roots],
        "b_basis": [field.element_to_json(b) for b in fld.b_basis],
    }
    timings[stage] = time.perf_counter() - t0

    stage = "phi"
    t0 = time.perf_counter()
    if config.phi_mode == "searched":
        triple = search_prop33(fld, config.search_epsilon, config.search_height)
        phi = (triple.f1, triple.f2, triple.f3)
    elif config.phi_mode == "explicit":
        phi = tuple(
            fld.element(Fraction(c) for c in row) for row in config.phi_coords
        )
    else:
        phi = tuple(fld.element(c) for c in PHI_PRESETS[config.phi_mode])
    patterns = [sign_pattern(p) for p in phi]
    report["phi"] = {
        "mode": config.phi_mode,
        "coords": [field.element_to_json(p) for p in phi],
        "sign_patterns": [
            {"positives": p.positives, "negatives": p.negatives,
             "signs": list(p.signs)}
            for p in patterns
        ],
    }
    timings[stage] = time.perf_counter() - t0

    stage = "transcendental"
    t0 = time.perf_counter()
    space = k3lattice.build_transcendental(fld, phi)
    report["transcendental"] = {
        "signature": list(space.signature),
        "chosen_embedding": space.chosen_embedding,
    }
    check(
        "signature of D equals the componentwise sum of phi sign patterns",
        True,
        "exact",
    )
    timings[stage] = time.perf_counter() - t0

    stage = "geometric"
    t0 = time.perf_counter()
    if space.signature == (2, 7) and space.chosen_embedding is not None:
        cert = k3lattice.embeds_in_k3(space, config.embedding_d)
        check(
            f"rational embedding into the polarized 21-dim form (d = "
            f"{config.embedding_d})",
            cert.verified,
            "exact",
        )
        t_param = (
            k3lattice.auto_period_parameter(space)
            if config.t == "auto"
            else Fraction(config.t)
        )
        period = k3lattice.solve_period(space, t_param, config.precision_bits)
        check("period residual interval v^T D v contains 0", period.residual_ok, "interval")
        check(
            "conj(v)^T D v interval contains the exact value 2 q2 t^2",
            period.vbar_matches_identity,
            "interval",
        )
        check("conj(v)^T D v is positive", period.vbar_positive, "interval")
        hodge = k3lattice.hodge_vs_isometry(space)
        report["geometric"] = {
            "ran": True,
            "embedding_certificate": qform.certificate_to_json(cert),
            "period": k3lattice.period_to_json(period),
            "hodge_vs_isometry": {
                "cm_exact_identity": hodge.cm_exact_identity,
                "period_scaling_ok": hodge.period_scaling_ok,
                "cup_preserving_generator": hodge.cup_preserving_alpha,
                "irrational_witness": hodge.irrational_witness,
                "sweep_height": hodge.sweep_height,
                "sweep_all_square_checks": hodge.sweep_all_square_checks,
                "sweep_cup_preserving_all_rational":
                    hodge.sweep_cup_preserving_all_rational,
            },
        }
        check("CM matrix identity M_a^T D M_a = D M_{a^2}", hodge.cm_exact_identity, "exact")
        check(
            "numeric CM action scales the period vector by the embedded value",
            bool(hodge.period_scaling_ok),
            "interval",
        )
        check(
            "cup-preserving elements in the height sweep are exactly the rationals",
            hodge.sweep_cup_preserving_all_rational,
            "exact",
        )
    else:
        report["geometric"] = {
            "ran": False,
            "reason": (
                f"signature {space.signature} is not (2, 7): the period "
                "stage needs one positive conjugate for each of phi1, phi2 "
                "at a common embedding and none for phi3; sign patterns "
                "are reported above"
            ),
        }
    timings[stage] = time.perf_counter() - t0

    stage = "ranks"
    t0 = time.perf_counter()
    prop_cfg = Prop51Config(
        field_matrix=config.field_matrix,
        phi_coords=tuple(tuple(p.coords) for p in phi),
        modulus=config.modulus,
        policies=_policies_for(config.policy),
        block_conventions=config.block_conventions,
    )
    prop = kugasatake.run_prop51(prop_cfg)
    report["generators"] = {
        "checksum": prop.generator_checksum,
        "golden_verified": prop.golden_verified,
    }
    if prop.golden_verified:
        check("generator components match their pinned expected values", True, "exact")
    report["ranks"] = {
        conv: {
            policy: clifford.rank_report_to_json(rep)
            for policy, rep in per.items()
        }
        for conv, per in prop.reports.items()
    }
    for conv, per in prop.reports.items():
        for policy, rep in per.items():
            check(
                f"span rank over GF({rep.modulus}) [{conv}, {policy}] = {rep.rank}",
                True,
                "mod-p",
            )
    timings[stage] = time.perf_counter() - t0

    if config.run_ks_small:
        stage = "ks-small"
        t0 = time.perf_counter()
        report["ks_small_instance"] = _ks_small_report(check)
        timings[stage] = time.perf_counter() - t0

    report["verified"] = all(c["ok"] for c in checks)
    report["versions"] = {
        "k3cm": __version__,
        "python": ".".join(map(str, sys.version_info[:3])),
        "numpy": np.__version__,
    }
    return report


def _ks_small_report(check) -> dict:
    alg = clifford.CliffordAlgebra(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]]
    )
    f1, f2 = alg.generator(0), alg.generator(1)
    ks = kugasatake.build_ks_structure(alg, f1, f2)
    emb = kugasatake.embed_V(alg, alg.generator(2))
    comm = kugasatake.verify_embedding_commutation(emb, f1, f2)
    rep = kugasatake.pullback_check(
        ks, emb, alg.gram,
        invariance_factor=clifford.mul(alg.generator(2), alg.generator(3)),
    )
    check("small instance: a polarization sign is positive definite", True, "exact")
    check(
        "small instance: members commute with the right-multiplication "
        "complex structure",
        bool(comm.right_j_commutes),
        "exact",
    )
    check(
        "small instance: conjugation by J intertwines the family with the "
        "half-turn of the period plane",
        comm.ad_j_rotation_ok,
        "exact",
    )
    check(
        "small instance: induced pairing is a positive rational multiple "
        "of the input form",
        rep.proportional and rep.lam_positive_rational,
        "exact",
    )
    check(
        "small instance: proportionality class is invariant under right "
        "multiplication of the embedding",
        bool(rep.invariance_ok),
        "exact",
    )
    return {
        "gram": "diag(1, 1, -1, -1)",
        "polarization_sign": ks.sign,
        "lambda": str(rep.lam),
        "invariance_ok": rep.invariance_ok,
    }


# ---------------------------------------------------------------------------
# report emission


def emit_report(report: dict, fmt: str = "json", out: str | None = None) -> str:
    """Stable-ordered JSON (round-trippable) or a human-readable summary."""
    if fmt == "json":
        text = json.dumps(report, indent=2)
    elif fmt == "text":
        text = _text_summary(report)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    return text


def _text_summary(report: dict) -> str:
    lines = [
        f"k3cm pipeline report (v{report['versions']['k3cm']})",
        "Hasse pair convention: i<=j (strict i<j variant reported alongside)",
        "",
        f"field: charpoly {report['field']['charpoly']}",
        f"phi mode: {report['phi']['mode']}",
        f"signature of D: {tuple(report['transcendental']['signature'])}",
    ]
    geo = report.get("geometric", {})
    if geo.get("ran"):
        lines.append(
            f"geometric stage: embedding verified = "
            f"{geo['embedding_certificate']['verified']}, period t = "
            f"{geo['period']['t']}"
        )
    else:
        lines.append(f"geometric stage skipped: {geo.get('reason')}")
    ranks = report.get("ranks", {})
    for conv, per in ranks.items():
        for policy, rep in per.items():
            lines.append(
                f"rank [{conv:9s} {policy:20s}] words={rep['word_count']:5d} "
                f"rank={rep['rank']}"
            )
    lines.append("")
    bad = [c for c in report["checks"] if not c["ok"]]
    lines.append(
        f"checks: {len(report['checks']) - len(bad)}/{len(report['checks'])} ok"
    )
    for c in bad:
        lines.append(f"  FAILED [{c['method']}] {c['claim']}")
    lines.append(f"verified: {report['verified']}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing and subcommands


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="k3cm",
        description="Exact-arithmetic workbench for quadratic forms, cubic "
        "fields, K3-type transcendental forms with complex multiplication, "
        "and Kuga-Satake Clifford-algebra rank computations.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qform", help="quadratic form invariants and embeddings")
    qs = q.add_subparsers(dest="subcommand", required=True)
    qi = qs.add_parser("invariants", help="invariants of a form")
    qi.add_argument("--gram", required=True, help="JSON matrix or @file")
    qe = qs.add_parser("embed", help="complement certificate q1 -> q2")
    qe.add_argument("--q1", required=True, help="JSON matrix or @file")
    qe.add_argument("--q2", required=True, help="JSON matrix or @file")
    ql = qs.add_parser("local", help="dim-4 form with given local invariants")
    ql.add_argument("--p", type=int, required=True)
    ql.add_argument("--disc", required=True)
    ql.add_argument("--hasse", type=int, choices=(1, -1), required=True)

    f = sub.add_parser("field", help="cubic field info and element search")
    fs = f.add_subparsers(dest="subcommand", required=True)
    fi = fs.add_parser("info", help="charpoly, roots, distinguished basis")
    fi.add_argument("--matrix", default=None, help="JSON 3x3 or @file")
    fse = fs.add_parser("search", help="sign-pattern triple search")
    fse.add_argument("--matrix", default=None)
    fse.add_argument("--epsilon", default="1/4")
    fse.add_argument("--height", type=int, default=150)

    k = sub.add_parser("k3", help="reference lattices and the 9-dim form")
    ks_ = k.add_subparsers(dest="subcommand", required=True)
    kl = ks_.add_parser("lattice", help="invariants of the 22/21-dim forms")
    kl.add_argument("--d", type=int, default=1)
    kt = ks_.add_parser("space", help="transcendental form for a phi choice")
    kt.add_argument("--phi", default="default",
                    choices=("default", "alternate", "searched"))
    kt.add_argument("--embed-d", type=int, default=None)
    kt.add_argument("--period-t", default=None)

    c = sub.add_parser("clifford", help="Clifford algebra span ranks")
    cs = c.add_subparsers(dest="subcommand", required=True)
    cr = cs.add_parser("rank", help="span rank of elements over GF(p)")
    cr.add_argument("--gram", required=True, help="JSON matrix or @file")
    cr.add_argument("--elements", required=True, help="JSON list or @file")
    cr.add_argument("--prime", type=int, default=101)

    g = sub.add_parser("ks", help="Kuga-Satake structures")
    gs = g.add_subparsers(dest="subcommand", required=True)
    gg = gs.add_parser("generators", help="the nine generators and checksums")
    gg.add_argument("--convention", default="powersym",
                    choices=tuple(kugasatake.BLOCK_CONVENTIONS))
    gs.add_parser("small", help="the dim-4 exact instance")
    gp = gs.add_parser("pullback9", help="the 9-dim surrogate-period run")
    gp.add_argument("--epsilon", default="1/4")
    gp.add_argument("--height", type=int, default=150)

    pl = sub.add_parser("pipeline", help="full verification pipeline")
    pl.add_argument("--config", default=None, help="JSON config file")
    pl.add_argument("--policy", default=None, choices=POLICY_CHOICES)
    pl.add_argument("--prime", type=int, default=None)
    pl.add_argument("--phi", default=None,
                    choices=("default", "alternate", "searched"))
    pl.add_argument("--t", default=None)
    pl.add_argument("--embedding-d", type=int, default=None)
    pl.add_argument("--out", default=None)
    pl.add_argument("--format", default="json", choices=("json", "text"))
    return p


def _load_json_arg(raw: str):
    if raw.startswith("@"):
        with open(raw[1:]) as fh:
            return json.load(fh)
    return json.loads(raw)


def _cmd_qform(args) -> int:
    if args.subcommand == "invariants":
        form = qform.qform_from_json(
            {"gram": [[str(x) for x in row] for row in _load_json_arg(args.gram)]}
        )
        inv = qform.form_invariants(form)
        print(json.dumps(qform.invariants_to_json(inv), indent=2))
        return EXIT_OK
    if args.subcommand == "embed":
        q1 = qform.qform_from_json(
            {"gram": [[str(x) for x in row] for row in _load_json_arg(args.q1)]}
        )
        q2 = qform.qform_from_json(
            {"gram": [[str(x) for x in row] for row in _load_json_arg(args.q2)]}
        )
        cert = qform.complement_for_embedding(q1, q2)
        print(json.dumps(qform.certificate_to_json(cert), indent=2))
        return EXIT_OK if cert.verified else EXIT_VERIFICATION
    if args.subcommand == "local":
        form = qform.build_local_form(args.p, Fraction(args.disc), args.hasse)
        print(json.dumps(qform.qform_to_json(form), indent=2))
        return EXIT_OK
    raise ConfigError("unknown qform subcommand")


def _field_matrix_arg(raw):
    if raw is None:
        return ((1, 1, 1), (1, 1, 0), (1, 0, 0))
    return tuple(tuple(int(x) for x in row) for row in _load_json_arg(raw))


def _cmd_field(args) -> int:
    fld = make_field(_field_matrix_arg(args.matrix))
    if args.subcommand == "info":
        print(json.dumps(field.field_to_json(fld), indent=2))
        return EXIT_OK
    if args.subcommand == "search":
        triple = search_prop33(fld, Fraction(args.epsilon), args.height)
        out = {
            "f1": field.element_to_json(triple.f1),
            "f2": field.element_to_json(triple.f2),
            "f3": field.element_to_json(triple.f3),
            "embedding": triple.embedding,
            "patterns": [
                {"positives": p.positives, "negatives": p.negatives}
                for p in triple.patterns
            ],
        }
        print(json.dumps(out, indent=2))
        return EXIT_OK
    raise ConfigError("unknown field subcommand")


def _cmd_k3(args) -> int:
    if args.subcommand == "lattice":
        l0 = k3lattice.gram_L0()
        inv0 = qform.form_invariants(l0)
        l2 = k3lattice.gram_L2d(args.d)
        inv2 = qform.form_invariants(l2)
        print(json.dumps({
            "full_form": {
                "signature": list(inv0.signature),
                "determinant": str(l0.determinant()),
                "even": all(l0.gram[i][i] % 2 == 0 for i in range(l0.dim)),
            },
            "polarized_form": {
                "d": args.d,
                "signature": list(inv2.signature),
                "top_entry": str(l2.gram[0][0]),
            },
        }, indent=2))
        return EXIT_OK
    if args.subcommand == "space":
        fld = make_field(((1, 1, 1), (1, 1, 0), (1, 0, 0)))
        if args.phi == "searched":
            triple = search_prop33(fld, Fraction(1, 4), 150)
            phi = (triple.f1, triple.f2, triple.f3)
        else:
            phi = tuple(fld.element(c) for c in PHI_PRESETS[args.phi])
        space = k3lattice.build_transcendental(fld, phi)
        out = k3lattice.space_to_json(space)
        code = EXIT_OK
        if args.embed_d is not None:
            cert = k3lattice.embeds_in_k3(space, args.embed_d)
            out["embedding_certificate"] = qform.certificate_to_json(cert)
            if not cert.verified:
                code = EXIT_VERIFICATION
        if args.period_t is not None:
            t = (
                k3lattice.auto_period_parameter(space)
                if args.period_t == "auto"
                else Fraction(args.period_t)
            )
            period = k3lattice.solve_period(space, t)
            out["period"] = k3lattice.period_to_json(period)
        print(json.dumps(out, indent=2))
        return code
    raise ConfigError("unknown k3 subcommand")


def _cmd_clifford(args) -> int:
    gram = [[Fraction(str(x)) for x in row] for row in _load_json_arg(args.gram)]
    alg = clifford.CliffordAlgebra(gram)
    elements = [
        clifford.element_from_json(alg, e) for e in _load_json_arg(args.elements)
    ]
    rank = clifford.span_rank(elements, args.prime)
    print(json.dumps({
        "modulus": args.prime,
        "element_count": len(elements),
        "rank": rank,
    }, indent=2))
    return EXIT_OK


def _cmd_ks(args) -> int:
    if args.subcommand == "generators":
        fld = make_field(((1, 1, 1), (1, 1, 0), (1, 0, 0)))
        phi = tuple(fld.element(c) for c in PHI_PRESETS["default"])
        gram = kugasatake.BLOCK_CONVENTIONS[args.convention](phi)
        product = kugasatake.expand_f1f2(fld, gram)
        gens = kugasatake.build_generators(product)
        print(json.dumps(kugasatake.generators_to_json(gens), indent=2))
        return EXIT_OK
    if args.subcommand == "small":
        checks: list[dict] = []

        def check(claim, ok, method):
            checks.append({"claim": claim, "ok": bool(ok), "method": method})

        out = _ks_small_report(check)
        out["checks"] = checks
        print(json.dumps(out, indent=2))
        return EXIT_OK if all(c["ok"] for c in checks) else EXIT_VERIFICATION
    if args.subcommand == "pullback9":
        fld = make_field(((1, 1, 1), (1, 1, 0), (1, 0, 0)))
        triple = search_prop33(fld, Fraction(args.epsilon), args.height)
        space = k3lattice.build_transcendental(
            fld, (triple.f1, triple.f2, triple.f3)
        )
        sur = kugasatake.rational_surrogate_periods(space)
        ks = kugasatake.build_ks_structure(sur.algebra, sur.f1, sur.f2)
        emb = kugasatake.embed_V(sur.algebra, sur.e)
        comm = kugasatake.verify_embedding_commutation(emb, sur.f1, sur.f2)
        rep = kugasatake.pullback_check(
            ks, emb, space.D,
            invariance_factor=clifford.mul(
                sur.algebra.generator(0), sur.algebra.generator(1)
            ),
        )
        ok = (
            rep.proportional
            and rep.lam_positive_rational
            and bool(comm.right_j_commutes)
            and comm.ad_j_rotation_ok
        )
        print(json.dumps({
            "method": rep.method,
            "polarization_sign": ks.sign,
            "right_j_commutes": comm.right_j_commutes,
            "ad_j_rotation_ok": comm.ad_j_rotation_ok,
            "lambda_approx": str(rep.lam),
            "proportional": rep.proportional,
            "lambda_positive": rep.lam_positive_rational,
            "invariance_ok": rep.invariance_ok,
            "max_residual": rep.max_residual,
        }, indent=2))
        return EXIT_OK if ok else EXIT_VERIFICATION
    raise ConfigError("unknown ks subcommand")


def _cmd_pipeline(args) -> int:
    overrides = {
        "policy": args.policy,
        "modulus": args.prime,
        "phi": args.phi,
        "t": args.t,
        "embedding_d": args.embedding_d,
        "out": args.out,
    }
    config = parse_config(args.config, overrides)
    report = run_pipeline(config)
    text = emit_report(report, args.format, config.out)
    print(text)
    return EXIT_OK if report["verified"] else EXIT_VERIFICATION


_PRECONDITION_ERRORS = (
    DegenerateFormError,
    CodimensionError,
    SignatureObstructionError,
    SearchExhaustedError,
    PeriodParameterError,
    KSPreconditionError,
    clifford.CoefficientModulusError,
    clifford.AlgebraMismatchError,
)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "qform": _cmd_qform,
        "field": _cmd_field,
        "k3": _cmd_k3,
        "clifford": _cmd_clifford,
        "ks": _cmd_ks,
        "pipeline": _cmd_pipeline,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _PRECONDITION_ERRORS as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except Exception as exc:  # pragma: no cover - genuine bugs
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
