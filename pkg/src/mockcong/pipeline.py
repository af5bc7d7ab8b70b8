"""End-to-end congruence search: expand, reindex, twist, project, hunt, assemble, verify.

Every stage appends a record to ``steps``, so a report carries enough data to
redo each stage by hand.  The twist, projection and Hecke stages run on
``F = q^tau M(q^delta)``; the final progression is verified on ``M`` whenever
it maps to one.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from mockcong import __version__
from mockcong.bounds import pipeline_bound_report
from mockcong.cachefile import series_checksum
from mockcong.catalog import MockThetaSpec, expand_series, get_spec, reindex_to_F
from mockcong.congruence import (
    NoAdmissibleA,
    Status,
    assemble_congruence,
    hunt_annihilating_prime,
    m_progression,
    verify_progression,
)
from mockcong.hecke import alpha_beta, treneer_projection
from mockcong.qseries import TruncatedSeries, WindowError, restrict
from mockcong.twist import (
    check_twist_prime,
    forbidden_twist_primes,
    hat_filter,
    kronecker_symbol,
    level_after_double_twist,
    select_twist_prime,
)

__all__ = ["PipelineConfig", "PipelineReport", "PipelineError", "run_pipeline", "lambda_for"]

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3


class PipelineError(RuntimeError):
    """A stage could not run; ``exit_code`` says whether the config or the window is at fault."""

    def __init__(self, message: str, exit_code: int = EXIT_INFEASIBLE):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class PipelineConfig:
    series: str
    trunc: int
    ell: int
    j: int = 1
    Q: Optional[int] = None
    allow_q_equals_ell: bool = False
    alpha: Optional[int] = None
    beta: Optional[int] = None
    min_ord_div: Optional[int] = None
    min_ord_nondiv: Optional[int] = None
    lam: Optional[int] = None
    chi_disc: Optional[int] = None
    p_max: int = 100
    p_class: str = "restricted"
    bound: Optional[int] = None
    min_bound: int = 50
    horizon: Optional[int] = None
    cross_check_terms: int = 1 << 18
    v: Optional[int] = 0
    r: int = 1
    threads: int = 1

    def validate(self) -> None:
        def bad(msg):
            raise PipelineError(msg, EXIT_INVALID)

        if self.trunc < 1:
            bad("trunc must be positive")
        if self.ell < 3 or self.ell % 2 == 0:
            bad("ell must be an odd prime")
        if self.j < 1:
            bad("j must be >= 1")
        if self.p_class not in ("restricted", "all"):
            bad("p_class must be 'restricted' or 'all'")
        if self.alpha is not None and self.alpha < 0:
            bad("alpha must be nonnegative")
        if self.p_max < 3:
            bad("p_max must be >= 3")
        if self.horizon is not None and self.horizon < 0:
            bad("horizon must be nonnegative")


def lambda_for(spec: MockThetaSpec, ell: int, beta: int) -> int:
    """``lambda`` with ``lambda + 1/2 = weight(f) + ell^beta (ell^2 - 1)/2``."""
    twice = spec.weight_twice + ell**beta * (ell * ell - 1)
    if twice % 2 != 1:
        raise PipelineError(f"{spec.name}: weight {spec.weight_twice}/2 is not half-integral", EXIT_INVALID)
    return (twice - 1) // 2


@dataclass
class PipelineReport:
    config: dict
    steps: list = field(default_factory=list)
    hunts: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    bounds: Optional[dict] = None
    outcome: str = "INCOMPLETE"
    exit_code: int = EXIT_INFEASIBLE
    message: str = ""
    version: str = __version__

    def to_dict(self) -> dict:
        out = asdict(self)
        out["certificates"] = [c.to_dict() for c in self.certificates]
        return out


def _log(progress: Optional[Callable[[str], None]], msg: str) -> None:
    if progress is not None:
        progress(msg)


def _stderr(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _resolve_alpha_beta(cfg: PipelineConfig) -> tuple[int, int, str]:
    ab = None
    if cfg.min_ord_div is not None or cfg.min_ord_nondiv is not None:
        ab = alpha_beta(cfg.min_ord_div or 0, cfg.min_ord_nondiv or 0, cfg.ell)
    alpha = cfg.alpha if cfg.alpha is not None else (ab.alpha if ab else 0)
    beta = cfg.beta if cfg.beta is not None else (ab.beta if ab else 0)
    if cfg.alpha is not None:
        source = "given"
    elif ab is not None:
        source = "cusp orders"
    else:
        source = "default (no cusp orders supplied)"
    return alpha, beta, source


def drop_principal_part(s: TruncatedSeries) -> TruncatedSeries:
    """Restrict to exponents >= 0, refusing if a nonzero negative-exponent coefficient remains."""
    if s.val < 0:
        head = np.asarray(s.coeffs[: min(-s.val, len(s.coeffs))])
        nz = np.flatnonzero(head != 0)
        if len(nz):
            raise PipelineError(
                f"principal part survives the projection at exponent {s.val + int(nz[0])}; "
                "the series is not holomorphic at infinity after twisting"
            )
    return restrict(s, 0, s.trunc) if s.val != 0 else s


def run_pipeline(
    cfg: PipelineConfig,
    series_M: Optional[TruncatedSeries] = None,
    progress: Optional[Callable[[str], None]] = _stderr,
) -> PipelineReport:
    """Run every stage; failures inside stages end up in the report, config errors raise."""
    cfg.validate()
    report = PipelineReport(config=asdict(cfg))
    steps = report.steps
    try:
        spec = get_spec(cfg.series)
    except ValueError as exc:
        raise PipelineError(str(exc), EXIT_INVALID) from None
    ell_pow = cfg.ell**cfg.j
    if spec.level % cfg.ell == 0:
        raise PipelineError(f"ell={cfg.ell} divides the level {spec.level}", EXIT_INVALID)
    alpha, beta, ab_source = _resolve_alpha_beta(cfg)

    # expand
    if series_M is None:
        _log(progress, f"expanding {spec.name} mod {ell_pow} to {cfg.trunc} terms")
        M = expand_series(spec, cfg.trunc, ell_pow)
    else:
        M = series_M if series_M.modulus == ell_pow else None
        if M is None:
            raise PipelineError(f"supplied series has modulus {series_M.modulus}, need {ell_pow}", EXIT_INVALID)
    checksum = series_checksum(M)
    steps.append(
        {"step": "expand", "series": spec.name, "trunc": M.trunc, "modulus": ell_pow, "checksum": checksum,
         "source": spec.source}
    )

    # reindex
    F = reindex_to_F(M, spec)
    steps.append({"step": "reindex", "delta": spec.delta, "tau": spec.tau, "val": F.val, "trunc": F.trunc})

    # twist
    forbidden = forbidden_twist_primes(spec.level, cfg.ell, cfg.allow_q_equals_ell)
    try:
        if cfg.Q is None:
            Q = select_twist_prime(spec.shadow_deltas, forbidden)
            how = "smallest admissible"
        else:
            check_twist_prime(cfg.Q, spec.shadow_deltas, forbidden)
            Q = cfg.Q
            how = "given"
    except ValueError as exc:
        raise PipelineError(str(exc), EXIT_INVALID) from None
    if Q == cfg.ell and alpha != 0:
        raise PipelineError("Q = ell is only available with alpha = 0", EXIT_INVALID)
    _log(progress, f"hat filter with Q={Q}")
    F_hat = hat_filter(F, Q, path="direct")
    check_hi = min(F.trunc, F.val + cfg.cross_check_terms)
    prefix = restrict(F, F.val, check_hi)
    paths_agree = hat_filter(prefix, Q, path="composite") == restrict(F_hat, F.val, check_hi)
    if not paths_agree:
        raise PipelineError("direct and composite hat filters disagree", EXIT_INFEASIBLE)
    level_out = level_after_double_twist(spec.level, Q)
    steps.append(
        {"step": "twist", "Q": Q, "selection": how, "forbidden": forbidden, "shadow_deltas": list(spec.shadow_deltas),
         "level_in": spec.level, "level_out": level_out, "composite_cross_check_terms": check_hi - F.val,
         "paths_agree": True, "q_equals_ell": Q == cfg.ell}
    )
    del F, prefix

    # project
    lam = cfg.lam if cfg.lam is not None else lambda_for(spec, cfg.ell, beta)
    treneer = treneer_projection(F_hat, cfg.ell, alpha)
    del F_hat
    G = drop_principal_part(treneer)
    del treneer
    steps.append(
        {"step": "project", "ell": cfg.ell, "alpha": alpha, "beta": beta, "alpha_beta_source": ab_source,
         "lambda": lam, "weight": f"{2 * lam + 1}/2", "trunc": G.trunc}
    )

    # bounds for the ambient integral-weight space
    bound_report = pipeline_bound_report(spec.level // 4, Q, cfg.ell, cfg.j, beta=beta, v=cfg.v, r=cfg.r)
    report.bounds = bound_report.to_dict()
    sturm = bound_report.s

    chi_disc = cfg.chi_disc if cfg.chi_disc is not None else spec.character
    exclude: list[int] = []
    found_counterexample = False
    series_id = f"{spec.name}|F(delta={spec.delta},tau={spec.tau})|hat(Q={Q})|proj(ell={cfg.ell},alpha={alpha})"
    while True:
        _log(progress, f"hunting annihilating primes <= {cfg.p_max} ({cfg.p_class})")
        try:
            hunt = hunt_annihilating_prime(
                G, ell_pow, alpha, lam, lambda p: kronecker_symbol(chi_disc, p), level_out, cfg.p_max,
                bound=cfg.bound, restrict_class=cfg.p_class == "restricted", exclude=exclude, sturm=sturm,
                min_bound=cfg.min_bound, series_id=series_id, threads=cfg.threads,
            )
        except WindowError as exc:
            report.outcome, report.exit_code, report.message = "INFEASIBLE", EXIT_INFEASIBLE, str(exc)
            return report
        record = {
            "step": "hunt", "p_class": cfg.p_class, "p_max": cfg.p_max, "chi_discriminant": chi_disc,
            "lambda": lam, "level": level_out, "sturm_bound": sturm, "attempts": hunt.attempts,
            "skipped_window": hunt.skipped, "excluded": list(exclude), "p": hunt.p,
        }
        report.hunts.append(record)
        if not hunt:
            if found_counterexample:
                report.outcome, report.exit_code = "COUNTEREXAMPLE", EXIT_COUNTEREXAMPLE
                report.message = "every annihilating prime found led to a failing progression"
            else:
                report.outcome, report.exit_code = "NO_PRIME", EXIT_INFEASIBLE
                report.message = f"no annihilating prime <= {cfg.p_max} within the window"
            return report
        p = hunt.p
        report.certificates.append(hunt.certificate)
        _log(progress, f"T({p}^2) annihilates to exponent {hunt.certificate.horizon}; assembling")

        try:
            asm = assemble_congruence(p, cfg.ell, alpha, Q, spec, allow_q_equals_ell=cfg.allow_q_equals_ell)
        except NoAdmissibleA as exc:
            report.outcome, report.exit_code, report.message = "INFEASIBLE", EXIT_INFEASIBLE, str(exc)
            return report
        steps.append({"step": "assemble", **asm.to_dict(), "proof_modulus_form": "p^4 ell^(m+1) Q",
                      "statement_modulus_form": "p^4 ell^m Q"})

        target = m_progression(asm.A_mod, asm.B, spec.delta, spec.tau)
        if target is not None:
            on, s_target, (A, B) = "M", M, target
        else:
            on, s_target, (A, B) = "F", reindex_to_F(M, spec), (asm.A_mod, asm.B)
        available = (s_target.trunc - 1 - B) // A
        horizon = available if cfg.horizon is None else cfg.horizon
        if available < 0 or horizon > available:
            need = A * max(horizon, 0) + B + 1
            if on == "F":
                need = -((spec.tau - need) // spec.delta)
            report.outcome, report.exit_code = "INFEASIBLE", EXIT_INFEASIBLE
            report.message = f"progression {A}n+{B} on {on} needs trunc >= {need} (M terms), have {M.trunc}"
            return report
        provenance = [dict(s) for s in steps] + [dict(hunt.certificate.provenance[0])] + [
            {"step": "verify", "on": on, "A": A, "B": B, "horizon": horizon}
        ]
        cert = verify_progression(
            s_target, A, B, ell_pow, horizon,
            series_id=spec.name if on == "M" else f"{spec.name}|F(delta={spec.delta},tau={spec.tau})",
            provenance=provenance, checksum=checksum,
        )
        report.certificates.append(cert)
        if cert.status is Status.COUNTEREXAMPLE:
            _log(progress, f"progression {A}n+{B} fails at n={cert.counterexample_n}; continuing the hunt")
            found_counterexample = True
            exclude.append(p)
            continue
        report.outcome, report.exit_code = "VERIFIED", EXIT_OK
        report.message = f"c({A}n+{B}) = 0 (mod {ell_pow}) on {on} for n <= {horizon}"
        _log(progress, report.message)
        return report
