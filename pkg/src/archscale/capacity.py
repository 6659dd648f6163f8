"""Capacity mathematics.

Everything that turns an architecture plus an email profile into numbers:
per-service request multiplicities (how many requests one inbound email
generates for each service), per-instance throughput limits (MCL,
requests/sec), instance counts needed to sustain a target inbound rate,
the system-wide sustainable rate of a configuration, and the synthesis of
a base configuration plus an incremental delta/scale ladder.

All arithmetic is exact rational arithmetic; ceilings never misfire at
integer boundaries.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass
from fractions import Fraction

from .model import (
    INFINITE,
    EmailProfile,
    MFKind,
    Rational,
    ServiceType,
    SystemArchitecture,
)


class CapacityError(ValueError):
    """Missing or inconsistent capacity parameters."""


def ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def is_infinite(mcl: Rational) -> bool:
    return mcl == INFINITE


_ALLOWED_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}


def _eval_profile_expression(expr: str, profile: EmailProfile) -> Fraction:
    """Evaluate a custom MF expression over the profile's fields."""
    env = {
        "n_blocks": profile.n_blocks,
        "n_attachments": profile.n_attachments,
        "attachment_size": profile.attachment_size,
        "p_virus": profile.p_virus,
    }

    def walk(node: ast.AST) -> Fraction:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_OPS:
            return _ALLOWED_OPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -walk(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return Fraction(str(node.value))
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise CapacityError(f"custom MF expression references undefined profile field {node.id!r}")
            return env[node.id]
        raise CapacityError(f"unsupported construct in custom MF expression: {ast.dump(node)}")

    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise CapacityError(f"invalid custom MF expression: {expr!r}") from exc
    return walk(tree)


def multiplicative_factor(service: ServiceType, profile: EmailProfile) -> Fraction:
    """Mean number of requests one inbound email generates for ``service``."""
    kind = service.mf_rule.kind
    if kind is MFKind.UNIT:
        return Fraction(1)
    if kind is MFKind.PER_BLOCK:
        return profile.n_blocks
    if kind is MFKind.PER_ATTACHMENT:
        return profile.n_attachments
    if kind is MFKind.PER_CLEAN_ATTACHMENT:
        return profile.n_attachments * (1 - profile.p_virus)
    if kind is MFKind.EMAIL_PARTS_SUM:
        # one header + one set of links + one text body + one message per attachment
        return Fraction(3) + profile.n_attachments
    return _eval_profile_expression(service.mf_rule.expression or "", profile)


def request_size(service: ServiceType, arch: SystemArchitecture) -> Fraction:
    """Mean request payload in MB.

    Services that aggregate all email parts receive a mix of negligible
    reports and clean attachments, so their mean is the total clean-payload
    mass spread over all their requests.  Everything else scales with how
    many attachments ride along per request.
    """
    profile = arch.profile
    if service.mf_rule.kind is MFKind.EMAIL_PARTS_SUM:
        mf = multiplicative_factor(service, profile)
        clean_mass = profile.n_attachments * (1 - profile.p_virus) * profile.attachment_size
        return clean_mass / mf
    return service.mcl_params.attachments_per_request * profile.attachment_size


def service_mcl(service: ServiceType, arch: SystemArchitecture) -> Rational:
    """Per-instance throughput limit in requests/sec, possibly INFINITE.

    An explicit override wins.  A service that moves no payload and pays no
    penalty has no limit.  Otherwise ``1 / (size/rate + penalty)`` with the
    data rate looked up by the service's core count.
    """
    params = service.mcl_params
    if params.explicit_mcl is not None:
        return params.explicit_mcl
    size = request_size(service, arch)
    if size == 0 and params.penalty_factor == 0:
        return INFINITE
    if size == 0:
        return 1 / params.penalty_factor
    rate = params.data_rate_by_cores.get(service.cores_required)
    if rate is None:
        raise CapacityError(
            f"service {service.name}: no data rate for {service.cores_required} cores "
            "and no explicit_mcl override")
    return 1 / (size / rate + params.penalty_factor)


@dataclass(frozen=True)
class ServiceCapacity:
    name: str
    mf: Fraction
    request_size: Fraction  # MB
    mcl: Rational  # requests/sec, possibly INFINITE


@dataclass(frozen=True)
class CapacityTable:
    """Per-service capacity figures, in architecture service order."""

    entries: tuple[ServiceCapacity, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, name: str) -> ServiceCapacity:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_text(self) -> str:
        """Tabular export: service, MF, request size (MB), MCL (req/s)."""
        rows = [("service", "MF", "request_size_MB", "MCL_per_sec")]
        for e in self.entries:
            mcl = "inf" if is_infinite(e.mcl) else format_rational(e.mcl)
            rows.append((e.name, format_rational(e.mf), format_rational(e.request_size), mcl))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def format_rational(x: Rational) -> str:
    if x == INFINITE:
        return "inf"
    frac = Fraction(x)
    if frac.denominator == 1:
        return str(frac.numerator)
    value = float(frac)
    if Fraction(str(value)) == frac:
        return str(value)
    return f"{frac.numerator}/{frac.denominator}"


def build_capacity_table(arch: SystemArchitecture) -> CapacityTable:
    entries = []
    for svc in arch.services:
        mf = multiplicative_factor(svc, arch.profile)
        entries.append(ServiceCapacity(
            name=svc.name,
            mf=mf,
            request_size=request_size(svc, arch),
            mcl=service_mcl(svc, arch),
        ))
    return CapacityTable(tuple(entries))


@dataclass(frozen=True)
class Configuration:
    """Instance counts per service, in the same order as arch.services."""

    counts: tuple[int, ...]

    def __add__(self, other: "Configuration") -> "Configuration":
        return Configuration(tuple(a + b for a, b in zip(self.counts, other.counts)))

    def __sub__(self, other: "Configuration") -> "Configuration":
        return Configuration(tuple(a - b for a, b in zip(self.counts, other.counts)))

    def total(self) -> int:
        return sum(self.counts)


def instances_for_target(sys_mcl: Rational, mf: Fraction, mcl: Rational) -> int:
    """Minimum instances so that ``count * mcl / mf >= sys_mcl``, floored at 1."""
    if is_infinite(mcl):
        return 1
    if mcl <= 0:
        raise CapacityError("mcl must be positive or infinite")
    return max(1, ceil_frac(Fraction(sys_mcl) * mf / Fraction(mcl)))


def system_mcl(config: Configuration, table: CapacityTable) -> Rational:
    """Max sustainable inbound emails/sec: the bottleneck service's ratio."""
    if len(config.counts) != len(table.entries):
        raise CapacityError("configuration length does not match capacity table")
    best: Rational | None = None
    for count, entry in zip(config.counts, table.entries):
        if is_infinite(entry.mcl):
            continue
        ratio = count * Fraction(entry.mcl) / entry.mf
        if best is None or ratio < best:
            best = ratio
    return INFINITE if best is None else best


def base_configuration(target: Rational, table: CapacityTable) -> Configuration:
    return Configuration(tuple(
        instances_for_target(target, e.mf, e.mcl) for e in table.entries))


@dataclass(frozen=True)
class ScaleLadder:
    """Base configuration plus incremental deltas and their scale prefix sums.

    ``deltas[i]`` holds the extra instances that, stacked on top of base and
    all previous deltas, raise the guaranteed system rate from
    ``base_mcl + increments[i-1]`` to ``base_mcl + increments[i]``.
    Scale i is by construction the prefix sum delta 1 + ... + delta i.
    """

    base: Configuration
    base_mcl: Fraction  # guaranteed emails/sec of the base configuration
    deltas: tuple[Configuration, ...]
    scale_mcl_increments: tuple[Fraction, ...]  # guaranteed extra emails/sec per scale

    @property
    def num_scales(self) -> int:
        return len(self.deltas)

    def scale(self, i: int) -> Configuration:
        """Scale i as an instance-count vector (1-based; prefix of deltas)."""
        if not 1 <= i <= self.num_scales:
            raise IndexError(f"scale index {i} out of range 1..{self.num_scales}")
        acc = Configuration(tuple(0 for _ in self.base.counts))
        for d in self.deltas[:i]:
            acc = acc + d
        return acc

    def scale_composition(self, i: int) -> tuple[int, ...]:
        """Multiset of delta indices composing scale i, as per-delta counts."""
        return tuple(1 if j < i else 0 for j in range(self.num_scales))

    def configuration_for(self, delta_vector: tuple[int, ...]) -> Configuration:
        """Base plus ``delta_vector[i]`` copies of each delta."""
        acc = self.base
        for count, d in zip(delta_vector, self.deltas):
            for _ in range(count):
                acc = acc + d
        return acc

    def last_scale_covers_finite_services(self, table: CapacityTable) -> bool:
        """Whether the largest scale adds at least one instance to every
        finite-MCL service (keeps repeated largest-scale stacking balanced)."""
        top = self.scale(self.num_scales)
        return all(
            add >= 1
            for add, entry in zip(top.counts, table.entries)
            if not is_infinite(entry.mcl)
        )


def synthesize_scale_ladder(
    base_mcl: Rational,
    increments: list[Fraction] | tuple[Fraction, ...],
    table: CapacityTable,
) -> ScaleLadder:
    """Build the delta ladder for ``base_mcl`` plus each increment.

    The cumulative requirement at level i is the per-service instance count
    for a target of ``base_mcl + increments[i]``; each delta is the
    difference between consecutive cumulative requirements.
    """
    incs = [Fraction(i) for i in increments]
    if any(b <= a for a, b in zip(incs, incs[1:])) or any(i <= 0 for i in incs):
        raise CapacityError("scale increments must be positive and strictly increasing")
    base = base_configuration(base_mcl, table)
    deltas = []
    prev = base
    for inc in incs:
        cum = base_configuration(Fraction(base_mcl) + inc, table)
        delta = cum - prev
        if any(c < 0 for c in delta.counts):
            raise CapacityError(
                f"negative delta component at increment {inc}: inconsistent capacity table")
        deltas.append(delta)
        prev = cum
    return ScaleLadder(
        base=base,
        base_mcl=Fraction(base_mcl),
        deltas=tuple(deltas),
        scale_mcl_increments=tuple(incs),
    )


def request_cost(
    service: ServiceType,
    speed_per_core: Fraction,
    ticks_per_second: int,
    mcl: Rational,
) -> Fraction:
    """Computational resource one request consumes at ``service``.

    An instance's per-tick budget is ``speed_per_core * cores_required``, so
    charging ``budget * ticks_per_second / mcl`` per request caps sustained
    throughput at exactly ``mcl`` requests/sec regardless of the hosting VM.
    """
    if is_infinite(mcl):
        return Fraction(0)
    return speed_per_core * service.cores_required * ticks_per_second / Fraction(mcl)


def ladder_to_text(ladder: ScaleLadder, table: CapacityTable) -> str:
    """Render base/delta counts per service plus the scale composition row."""
    header = ["service", "B"] + [f"D{i}" for i in range(1, ladder.num_scales + 1)]
    rows = [tuple(header)]
    for idx, entry in enumerate(table.entries):
        row = [entry.name, str(ladder.base.counts[idx])]
        row += [f"+{d.counts[idx]}" for d in ladder.deltas]
        rows.append(tuple(row))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.append("")
    for i in range(1, ladder.num_scales + 1):
        parts = " + ".join(f"D{j}" for j in range(1, i + 1))
        inc = format_rational(ladder.scale_mcl_increments[i - 1])
        lines.append(f"Scale{i} (+{inc} emails/sec) = {parts}")
    return "\n".join(lines) + "\n"
