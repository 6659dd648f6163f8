"""Bursty mail traffic and the price of a slow monitoring loop.

Part 1 replays a plateau-style trace (quiet, surge, taper) reminiscent of
mail-server traffic and compares both policies on losses.

Part 2 repeats the diurnal comparison with the monitoring period stretched
from 10 seconds to 40 minutes: with so few observation points the policies
barely react at all, and whichever configuration they happen to pick rides
out the whole wave.
"""

from pathlib import Path

from archscale import ExperimentSpec, WorkloadSpec, run_experiment
from archscale.cli import reference_architecture_path
from archscale.workload import Diurnal, Steps

here = Path(__file__).parent

# -- part 1: surge steps -----------------------------------------------------

surge = WorkloadSpec(Steps((
    (0, 70.0),          # overnight trickle
    (120 * 30, 300.0),  # the morning rush arrives within one tick
    (420 * 30, 140.0),  # taper
)))
spec = ExperimentSpec(
    architecture=str(reference_architecture_path()),
    policies=("global", "local"),
    output=str(here / "out_surge"),
    duration_s=600,
    seed=7,
    exact_arrivals=True,
    workload=surge,
)
result = run_experiment(spec)
print("surge trace (70 -> 300 -> 140 emails/s):")
print(result.report.to_text())

# -- part 2: 40-minute monitoring period --------------------------------------

slow = ExperimentSpec(
    architecture=str(reference_architecture_path()),
    policies=("global", "local"),
    output=str(here / "out_slow_monitor"),
    duration_s=7200,
    seed=42,
    exact_arrivals=True,
    workload=WorkloadSpec(Diurnal(base=60, peak=380, period_s=7200)),
    monitoring_period_s=2400,
)
result = run_experiment(slow)
print("same diurnal wave, monitors every 40 minutes instead of 10 seconds:")
print(result.report.to_text())
print("with observations this sparse both policies lag the wave; losses land")
print("on whoever scaled last, and scale-downs arrive long after the peak")
