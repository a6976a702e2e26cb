"""Check registry - maps check names to their implementations."""

from typing import Optional, Sequence

from ..errors import DSLabError, PreconditionError
from ..utils.logger import get_logger
from .base import BaseCheck, CheckResult, VerifyContext
from .checks import (
    BandEdgeSchemeGap,
    BranchFrequencyIsEven,
    CoupledOperatorSymmetry,
    EvolutionMatchesPencil,
    GrowthModeResidual,
    LineSolitonEquilibrium,
    LineSolitonShape,
    NegativeDirectionOtherTriples,
    QuadraticFormIdentity,
    ResolventRoundTrip,
    ResolventScaling,
    ReverserAnticommutes,
    SchrodingerGroundState,
    SchurKernelAtBandEdge,
    SecondDerivativeAccuracy,
    SingleNegativeDirection,
    SixSechSpectrum,
    SplitStepInvariants,
    TrialFamilyLimit,
    ZeroModeSolve,
)

logger = get_logger("verification")

# Register checks here. To add a new check:
# 1. Create a new class extending BaseCheck
# 2. Add it to this mapping
CHECKS: dict[str, type[BaseCheck]] = {
    "grid-derivative": SecondDerivativeAccuracy,
    "operator-symmetry": CoupledOperatorSymmetry,
    "negative-count": SingleNegativeDirection,
    "negative-count-triples": NegativeDirectionOtherTriples,
    "omega0-scheme-gap": BandEdgeSchemeGap,
    "six-sech-spectrum": SixSechSpectrum,
    "schrodinger-ground-state": SchrodingerGroundState,
    "form-identity": QuadraticFormIdentity,
    "form-limit": TrialFamilyLimit,
    "reverser": ReverserAnticommutes,
    "resolvent-round-trip": ResolventRoundTrip,
    "resolvent-scaling": ResolventScaling,
    "zero-mode": ZeroModeSolve,
    "line-soliton-equilibrium": LineSolitonEquilibrium,
    "continuation-branch": BranchFrequencyIsEven,
    "schur-kernel": SchurKernelAtBandEdge,
    "growth-residual": GrowthModeResidual,
    "evolve-vs-pencil": EvolutionMatchesPencil,
    "split-step-invariants": SplitStepInvariants,
    "soliton-shape": LineSolitonShape,
}


def create_check(name: str) -> BaseCheck:
    """Instantiate a registered check.

    Raises:
        PreconditionError: If the check name is not registered.
    """
    check_class = CHECKS.get(name)
    if check_class is None:
        available = ", ".join(CHECKS.keys())
        raise PreconditionError(f"Unknown check '{name}'. Available checks: {available}")
    return check_class()


def run_checks(ctx: VerifyContext, names: Optional[Sequence[str]] = None) -> list[CheckResult]:
    """Run the named checks (all by default); a check that raises is recorded as failed."""
    checks = [create_check(name) for name in (names or CHECKS.keys())]
    results = []
    for check in checks:
        try:
            result = check.run(ctx)
        except DSLabError as e:
            result = CheckResult(location=check.location, label=check.label, passed=False, detail=f"{type(e).__name__}: {e}")
        logger.info("check_finished", location=result.location, label=result.label, passed=result.passed, value=result.value)
        results.append(result)
    return results


def format_report(results: Sequence[CheckResult]) -> str:
    lines = []
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        lines.append(f"{result.location}: {result.label} — {status} ({result.detail})")
    passed = sum(1 for r in results if r.passed)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
