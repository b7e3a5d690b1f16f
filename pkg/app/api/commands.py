"""Command handlers behind the ``params``, ``extract``, ``family-audit`` and ``verify`` subcommands.

Handlers return a CommandResult; the entry point prints its payload as JSON
and exits with its code (0 pass, 1 property violation, 2 usage error).
"""

import json
import math
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field

from app.errors import ExtractorError, FamilyError, PreconditionError
from app.logging_config import get_logger
from app.models.bounds import BoundReport
from app.models.family import HashFamilyDescriptor, Seed
from app.services import hash_families, lhl_bounds
from app.tasks.harness import run_suite

logger = get_logger("api")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class CliConfig(BaseModel):
    """Parsed command line."""
    command: str
    suite: Optional[str] = None
    family: Optional[str] = None
    seed_hex: Optional[str] = None
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    n: Optional[int] = None
    ell: Optional[int] = None
    delta: Optional[float] = None
    hmin: Optional[float] = None
    eps: Optional[float] = None
    trials: int = 200
    rng_seed: int = 0
    report_path: Optional[Path] = None


class CommandResult(BaseModel):
    """Exit code plus the JSON document printed on stdout."""
    exit_code: int = EXIT_OK
    payload: dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def usage(cls, error: ExtractorError) -> "CommandResult":
        return cls(exit_code=EXIT_USAGE, payload={"error": error.message, "error_type": type(error).__name__})


def cmd_params(config: CliConfig) -> CommandResult:
    """Key length from (H, Delta), or distance and short-seed parameters from (H, l)."""
    log = logger.bind(command="params")
    try:
        if config.hmin is None:
            raise PreconditionError("--hmin is required")
        if (config.ell is None) == (config.delta is None):
            raise PreconditionError("give exactly one of --l and --delta")

        if config.ell is None:
            ell = lhl_bounds.extractable_bits(config.hmin, config.delta)
            report = BoundReport(delta=config.delta, ell=ell, distinguish_success=lhl_bounds.distinguishing_advantage(config.delta))
            if config.n is not None and config.eps is not None and 1 <= ell < config.n:
                seeded = lhl_bounds.short_seed_params(config.n, ell, config.eps)
                report = report.model_copy(update={k: getattr(seeded, k) for k in ("k", "s", "r", "delta1", "delta2", "s_statement", "s_discrepancy", "family")})
        elif config.n is not None and config.eps is not None:
            report = lhl_bounds.short_seed_params(config.n, config.ell, config.eps, config.hmin)
        else:
            delta = lhl_bounds.thm_two_universal_delta(config.ell, config.hmin, config.eps or 0.0)
            report = BoundReport(delta=delta, eps_star=0.0, ell=config.ell, distinguish_success=lhl_bounds.distinguishing_advantage(delta))
    except ExtractorError as e:
        log.warning("params_rejected", error=e.message)
        return CommandResult.usage(e)

    log.info("params_computed", ell=report.ell, delta=report.delta)
    return CommandResult(payload=report.to_dict())


def _read_input(path: Path, n: int) -> int:
    data = path.read_bytes()
    if len(data) * 8 < n:
        raise FamilyError(f"input has {len(data) * 8} bits, family needs n={n}")
    value = int.from_bytes(data[: math.ceil(n / 8)], "little")
    return value & ((1 << n) - 1)


def cmd_extract(config: CliConfig) -> CommandResult:
    """Hash the first n input bits and write l output bits plus a ``.hdr`` sidecar."""
    log = logger.bind(command="extract", family=config.family)
    try:
        if config.family is None or config.seed_hex is None or config.input_path is None or config.output_path is None:
            raise PreconditionError("extract needs --family, --seed-hex, --in and --out")
        desc = HashFamilyDescriptor.parse(config.family)
        seed = Seed.from_hex(config.seed_hex, desc.seed_bits)
        x = _read_input(config.input_path, desc.n)
        z = hash_families.evaluate(desc, x, seed)
    except ExtractorError as e:
        log.warning("extract_rejected", error=e.message)
        return CommandResult.usage(e)
    except OSError as e:
        log.warning("extract_io_error", error=str(e))
        return CommandResult(exit_code=EXIT_USAGE, payload={"error": str(e), "error_type": type(e).__name__})

    out = z.to_bytes(math.ceil(desc.ell / 8))
    config.output_path.write_bytes(out)
    header = config.output_path.with_name(config.output_path.name + ".hdr")
    header.write_text(f"bits={desc.ell} family={desc.format()}\n")
    log.info("extracted", bits=desc.ell, output=str(config.output_path))
    return CommandResult(payload={"family": desc.format(), "bits": desc.ell, "output": out.hex()})


def cmd_family_audit(config: CliConfig, budget: Optional[int] = None) -> CommandResult:
    """Exhaustive collision audit against the construction's bound; exit 1 if exceeded."""
    log = logger.bind(command="family-audit", family=config.family)
    try:
        if config.family is None:
            raise PreconditionError("family-audit needs --family")
        desc = HashFamilyDescriptor.parse(config.family)
        audited = hash_families.audit_collision_prob(desc, budget)
    except ExtractorError as e:
        log.warning("audit_rejected", error=e.message)
        return CommandResult.usage(e)

    delta = hash_families.theoretical_delta(desc)
    passed = audited <= delta
    payload = {
        "family": desc.format(),
        "delta_hat": str(audited),
        "delta_hat_value": float(audited),
        "delta": str(delta),
        "delta_value": float(delta),
        "seeds": desc.size,
        "passed": passed,
    }
    if not passed:
        log.warning("collision_bound_exceeded", delta_hat=str(audited), delta=str(delta))
    return CommandResult(exit_code=EXIT_OK if passed else EXIT_VIOLATION, payload=payload)


def cmd_verify(config: CliConfig) -> CommandResult:
    """Run a verification suite; the full report goes to ``--report`` when given."""
    log = logger.bind(command="verify", suite=config.suite, trials=config.trials, seed=config.rng_seed)
    try:
        if config.suite is None:
            raise PreconditionError("verify needs a suite name")
        report = run_suite(config.suite, config.trials, config.rng_seed)
    except ExtractorError as e:
        log.warning("verify_rejected", error=e.message)
        return CommandResult.usage(e)

    if config.report_path is not None:
        try:
            config.report_path.write_text(report.to_json(include_records=True))
        except OSError as e:
            log.warning("report_io_error", error=str(e), report=str(config.report_path))
            return CommandResult(exit_code=EXIT_USAGE, payload={"error": str(e), "error_type": type(e).__name__})
    return CommandResult(
        exit_code=EXIT_OK if report.passed else EXIT_VIOLATION,
        payload=json.loads(report.to_json()),
    )
