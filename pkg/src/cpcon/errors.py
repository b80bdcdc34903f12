"""Exception hierarchy shared across the CPCON stack."""

from __future__ import annotations


class CpconError(Exception):
    """Base class for every error raised by this package."""


# --- policy language ---------------------------------------------------


class PolicyError(CpconError):
    """A directive/event document violated the policy language."""


class MalformedJsonError(PolicyError):
    """Input was not well-formed JSON or had the wrong shape."""


class UnknownVerbError(PolicyError):
    """Action verb outside the closed verb set."""


class LevelOutOfRangeError(PolicyError):
    """CPCON level outside 1..5."""


class EmptyActionListError(PolicyError):
    """Directive carried no actions."""


class DuplicateActionError(PolicyError):
    """Directive repeated the same (verb, target) pair."""


class MissingAlertError(PolicyError):
    """Event document lacked its alert."""


# --- topology / emulation ----------------------------------------------


class EmulationError(CpconError):
    """Base for virtual-network errors."""


class SchemaViolationError(EmulationError):
    """Topology document failed structural validation."""


class DuplicateHostIdError(EmulationError):
    """Two nodes pinned the same host id."""


class OrphanHostError(EmulationError):
    """Host referenced a subnet that does not exist."""


class UnknownSubnetError(EmulationError):
    """Named subnet not present in the topology."""


class UnknownHostError(EmulationError):
    """Host id not present in the topology."""


class UnknownRouterError(EmulationError):
    """Named router not present in the topology."""


class DuplicateRuleIdError(EmulationError):
    """Rule id already installed on that router."""


# --- agents -------------------------------------------------------------


class AgentError(CpconError):
    """Base for enforcement-agent errors."""


class DuplicateRegistrationError(AgentError):
    """Agent attempted to register twice."""


class InvalidParamsError(AgentError):
    """Security module parameters failed validation."""


class OrchestratorUnreachableError(AgentError):
    """Control channel to the orchestrator is down; message queued."""


# --- orchestrator -------------------------------------------------------


class OrchestrationError(CpconError):
    """Base for engine-side errors."""


class UnknownTargetError(OrchestrationError):
    """Directive action named a target that cannot be resolved."""


class ScanUnavailableError(OrchestrationError):
    """Verification scan could not be issued; retry scheduled."""


class AlreadyResolvedError(OrchestrationError):
    """Recommendation was already approved or dismissed."""


class DeescalationError(OrchestrationError):
    """Directive lowers the posture without the explicit opt-in flag."""


# --- scenario harness ----------------------------------------------------


class ScenarioError(CpconError):
    """Base for harness errors (config problems exit with code 3)."""


class UnknownScenarioError(ScenarioError):
    """Scenario name not registered."""


class PhaseAssertionError(ScenarioError):
    """A scenario phase did not produce its expected outcome."""

    def __init__(self, failures: list[str]):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class IoFailureError(ScenarioError):
    """Report or metrics file could not be written."""
