"""From an email profile to a deployment ladder, step by step.

Walks the capacity math for the bundled email-pipeline architecture:
request multiplicities per service, mean request sizes, per-instance
throughput limits, the base configuration for 60 emails/s, and the
incremental delta/scale ladder that raises capacity in guaranteed steps.
"""

from fractions import Fraction

from archscale import (
    build_capacity_table,
    load_architecture,
    synthesize_scale_ladder,
    system_mcl,
)
from archscale.capacity import ladder_to_text
from archscale.cli import reference_architecture_path

arch = load_architecture(reference_architecture_path())
profile = arch.profile

print("email profile:")
print(f"  mean text blocks      {profile.n_blocks}")
print(f"  mean attachments      {profile.n_attachments}")
print(f"  attachment size       {profile.attachment_size} MB")
print(f"  virus probability     {profile.p_virus}")
print()

table = build_capacity_table(arch)
print("capacity table (per service):")
print(table.to_text())

# A single mail fans out: whole email -> parts -> per-block and
# per-attachment work.  The aggregator sees one message per part, which is
# why its multiplicity is 3 + mean attachments.
analyser = table.entry("MessageAnalyser")
print(f"aggregator multiplicity: {analyser.mf} requests per email")
print(f"aggregator request size: {analyser.request_size} MB "
      "(clean attachment mass spread over all its requests)")
print()

ladder = synthesize_scale_ladder(
    Fraction(60), [Fraction(x) for x in (60, 150, 240, 330)], table)
print("deployment ladder for base 60 emails/s:")
print(ladder_to_text(ladder, table))

config = ladder.base
print("guaranteed system capacity per level:")
print(f"  base          {float(system_mcl(config, table)):7.2f} emails/s")
for i, delta in enumerate(ladder.deltas, start=1):
    config = config + delta
    print(f"  base+scale{i}   {float(system_mcl(config, table)):7.2f} emails/s")
