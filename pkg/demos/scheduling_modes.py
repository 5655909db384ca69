"""The same protocol under synchronous, semi-synchronous and asynchronous schedulers.

Run: python3 demos/scheduling_modes.py
"""

from ringverify import presburger as pb
from ringverify.ringmodel import Configuration, ProtocolSpec
from ringverify.semantics import Mode, post_star, reachable_bad_bounded, trace

farther = ProtocolSpec.parse("x1 > x2", 2)
start = Configuration(5, (0, 1))

for mode in (Mode.SYNC, Mode.SEMISYNC, Mode.ASYNC):
    steps = [(p, ph) for _, p, ph in trace(farther, start, mode, 4)]
    print(f"{mode.value:9s} trace: " + " -> ".join(str(p) for p, _ in steps))
    reach = sorted(c.positions for c in post_star(farther, start, mode))
    print(f"{'':9s} Post*: {reach}")

print()
# Brute-force search for a collision over small rings.
collision = pb.parse_formula("x1 = x2")
for mode in (Mode.SYNC, Mode.SEMISYNC):
    w = reachable_bad_bounded(farther, pb.TRUE, collision, mode, range(2, 8))
    print(f"{mode.value}: first collision at n={w.n}: "
          f"{w.start.positions} ->* {w.successor.positions}")

# On three nodes both robots jump into the same gap.
w = reachable_bad_bounded(farther, pb.TRUE, collision, Mode.SYNC, [3], one_step=True)
print(f"n=3 sync one step: {w.start.positions} -> {w.successor.positions}")
