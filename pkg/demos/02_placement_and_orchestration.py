"""Optimal VM packing and the timed action program that deploys it.

Plans the first capacity increment of the reference ladder onto the VM
catalog, prints the resulting orchestration (acquisitions, the overall
startup setting, dependency-ordered instance creation, weak bindings,
speed decrements) and its exact inverse.
"""

from fractions import Fraction

from archscale import (
    DeploymentRegistry,
    build_capacity_table,
    load_architecture,
    orchestration_to_script,
    plan_placement,
    synthesize_orchestration,
    synthesize_scale_ladder,
    synthesize_undeployment,
)
from archscale.cli import reference_architecture_path

arch = load_architecture(reference_architecture_path())
table = build_capacity_table(arch)
ladder = synthesize_scale_ladder(
    Fraction(60), [Fraction(x) for x in (60, 150, 240, 330)], table)

# The registry starts with the base configuration already running.
registry = DeploymentRegistry(arch)
base = {s.name: n for s, n in zip(arch.services, ladder.base.counts)}
base_placement = plan_placement(base, arch, arch.vm_catalog)
registry.apply(synthesize_orchestration(base_placement, arch, registry))
print(f"base deployment: {len(base_placement.acquired_vms)} VMs, "
      f"cost {float(base_placement.total_cost):g}")

delta = {s.name: c for s, c in zip(arch.services, ladder.deltas[0].counts) if c > 0}
print(f"\nincrement to place: {delta}")
placement = plan_placement(delta, arch, arch.vm_catalog)
print(f"optimal cost {float(placement.total_cost):g} using "
      f"{', '.join(t.name for t, _ in placement.acquired_vms)}")
for vm_type, idx in placement.acquired_vms:
    print(f"  {vm_type.name}: {', '.join(placement.services_on(idx))}")

orch = synthesize_orchestration(placement, arch, registry)
print("\ndeployment orchestration:")
print(orchestration_to_script(orch))

before = registry.state_hash()
registry.apply(orch)
undeploy = synthesize_undeployment(orch)
print("undeployment orchestration:")
print(orchestration_to_script(undeploy))
registry.apply(undeploy)
print(f"state hash restored after undeploy: {registry.state_hash() == before}")
