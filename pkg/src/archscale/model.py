"""Domain model for a microservice email-processing architecture.

The model captures everything the capacity math, the placement planner and
the simulator need to know about a system: service types with strong/weak
dependencies and resource demands, the VM catalog, the statistical email
profile, and the message pipeline topology.

All numeric fields that feed capacity formulas are ``fractions.Fraction``
so that ceiling arithmetic never misfires at integer boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Union

#: Sentinel for an unbounded per-instance throughput limit.
INFINITE: float = math.inf

Rational = Union[Fraction, float]

#: Message part kinds a request can carry through the pipeline.
PART_KINDS = ("email", "header", "links", "text", "block", "attachment", "report")


class MFKind(Enum):
    """How a service's mean requests-per-email factor is derived."""

    UNIT = "unit"
    PER_BLOCK = "per_block"
    PER_ATTACHMENT = "per_attachment"
    PER_CLEAN_ATTACHMENT = "per_clean_attachment"
    EMAIL_PARTS_SUM = "email_parts_sum"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MFRule:
    kind: MFKind
    expression: str | None = None  # only for CUSTOM


@dataclass(frozen=True)
class MCLParams:
    """Inputs to the per-instance throughput-limit formula.

    ``attachments_per_request`` scales the mean request payload: 0 for
    negligible-payload services, 1 for services handling one attachment per
    request, and the profile's mean attachment count for services that
    receive whole emails.  ``data_rate_by_cores`` maps a core count to the
    MB/s the service moves when granted that many cores.  ``explicit_mcl``,
    when set, overrides the formula entirely.
    """

    attachments_per_request: Fraction = Fraction(0)
    penalty_factor: Fraction = Fraction(0)
    data_rate_by_cores: dict[int, Fraction] = field(default_factory=dict)
    explicit_mcl: Fraction | None = None

    def __hash__(self) -> int:
        return hash((
            self.attachments_per_request,
            self.penalty_factor,
            tuple(sorted(self.data_rate_by_cores.items())),
            self.explicit_mcl,
        ))


@dataclass(frozen=True)
class ServiceType:
    name: str
    cores_required: int
    memory_required: int  # MB
    strong_requires: tuple[str, ...] = ()
    weak_requires: tuple[str, ...] = ()
    provide_capacity: int = -1  # -1 = unbounded consumers
    mcl_params: MCLParams = field(default_factory=MCLParams)
    mf_rule: MFRule = field(default=MFRule(MFKind.UNIT))


@dataclass(frozen=True)
class EmailProfile:
    """Statistical structure of inbound emails.

    The sampling supports are inclusive integer ranges whose means must
    equal the declared ``n_blocks`` / ``n_attachments`` so that simulated
    traffic matches the capacity math.
    """

    n_blocks: Fraction = Fraction(5, 2)
    n_attachments: Fraction = Fraction(2)
    attachment_size: Fraction = Fraction(7)  # MB
    p_virus: Fraction = Fraction(1, 4)
    block_count_support: tuple[int, int] = (1, 4)
    attachment_count_support: tuple[int, int] = (0, 4)


@dataclass(frozen=True)
class VMType:
    name: str
    cores: int
    memory: int  # MB
    speed_per_core: Fraction  # resource units per tick per core
    startup_time: int  # ticks
    cost: Fraction  # abstract monetary units per acquisition


@dataclass(frozen=True)
class PipelineEdge:
    """One hop of the message flow: ``src`` forwards ``part`` to ``dst``.

    ``when`` restricts attachment-carrying completions: "clean" edges fire
    only for virus-free attachments, "infected" only for flagged ones.
    """

    src: str
    dst: str
    part: str
    when: str | None = None  # None | "clean" | "infected"


@dataclass(frozen=True)
class SystemArchitecture:
    services: tuple[ServiceType, ...]
    vm_catalog: tuple[VMType, ...]
    profile: EmailProfile
    pipeline: tuple[PipelineEdge, ...] = ()

    def service(self, name: str) -> ServiceType:
        for svc in self.services:
            if svc.name == name:
                return svc
        raise KeyError(name)

    def service_index(self, name: str) -> int:
        for i, svc in enumerate(self.services):
            if svc.name == name:
                return i
        raise KeyError(name)

    def vm_type(self, name: str) -> VMType:
        for vm in self.vm_catalog:
            if vm.name == name:
                return vm
        raise KeyError(name)

    def entry_service(self) -> str | None:
        """The service that receives raw inbound emails.

        Defined as the unique service with no incoming pipeline edge that
        appears as a source, or simply the unique pipeline root.
        """
        if not self.services:
            return None
        targets = {e.dst for e in self.pipeline}
        roots = [s.name for s in self.services
                 if s.name not in targets and any(e.src == s.name for e in self.pipeline)]
        if len(roots) == 1:
            return roots[0]
        if not self.pipeline:
            return self.services[0].name if len(self.services) == 1 else None
        return None


@dataclass(frozen=True)
class Violation:
    """One invariant violation: names exactly one owner/field pair."""

    owner: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.owner}.{self.field}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, owner: str, fieldname: str, message: str) -> None:
        self.violations.append(Violation(owner, fieldname, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def validate_architecture(arch: SystemArchitecture) -> ValidationReport:
    """Check every type invariant; violations are data, not failures."""
    report = ValidationReport()
    for svc in arch.services:
        owner = f"service {svc.name}"
        if svc.cores_required < 1:
            report.add(owner, "cores_required", "must be >= 1")
        if svc.memory_required < 0:
            report.add(owner, "memory_required", "must be >= 0")
        if svc.provide_capacity < -1:
            report.add(owner, "provide_capacity", "must be -1 or >= 0")
        seen: set[str] = set()
        for dep in svc.strong_requires:
            if dep in seen:
                report.add(owner, "strong_requires", f"duplicate requirement {dep!r}")
            seen.add(dep)
        p = svc.mcl_params
        if p.penalty_factor < 0:
            report.add(owner, "mcl_params.penalty_factor", "must be >= 0")
        if p.attachments_per_request < 0:
            report.add(owner, "mcl_params.attachments_per_request", "must be >= 0")
        for cores, rate in p.data_rate_by_cores.items():
            if rate <= 0:
                report.add(owner, f"mcl_params.data_rate_by_cores[{cores}]", "rate must be > 0")
        if p.explicit_mcl is not None and p.explicit_mcl <= 0:
            report.add(owner, "mcl_params.explicit_mcl", "must be > 0 when present")

    for vm in arch.vm_catalog:
        owner = f"vm {vm.name}"
        if vm.cores < 1:
            report.add(owner, "cores", "must be >= 1")
        if vm.speed_per_core <= 0:
            report.add(owner, "speed_per_core", "must be > 0")
        if vm.startup_time < 0:
            report.add(owner, "startup_time", "must be >= 0")
        if vm.cost <= 0:
            report.add(owner, "cost", "must be > 0")

    prof = arch.profile
    if not (0 <= prof.p_virus <= 1):
        report.add("profile", "p_virus", "must lie in [0, 1]")
    if prof.attachment_size <= 0:
        report.add("profile", "attachment_size", "must be > 0")
    for fieldname, support, mean in (
        ("block_count_support", prof.block_count_support, prof.n_blocks),
        ("attachment_count_support", prof.attachment_count_support, prof.n_attachments),
    ):
        lo, hi = support
        if lo < 0 or hi < lo:
            report.add("profile", fieldname, "must be a range 0 <= lo <= hi")
        elif Fraction(lo + hi, 2) != mean:
            report.add("profile", fieldname,
                       f"support mean {Fraction(lo + hi, 2)} differs from declared mean {mean}")
    return report
