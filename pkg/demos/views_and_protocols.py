"""Views on a ring, reversal, and the asymmetry condition a protocol must meet.

Run: python3 demos/views_and_protocols.py
"""

from ringverify.ringmodel import (Configuration, ProtocolSpec, protocol_valid_bounded, revert,
                                  view_clockwise, views)

# Five robots on ten nodes; robots 1 and 2 share node 1 (a tower).
tower = Configuration(10, (1, 1, 4, 8, 9))
for i in range(1, tower.k + 1):
    v = view_clockwise(tower, i)
    print(f"robot {i} at node {tower.positions[i - 1]}: view {v}, reversed {revert(v)}")

# A robot whose two views coincide cannot tell the directions apart.
sym = Configuration(7, (2, 5, 6))
v = view_clockwise(sym, 1)
print(f"\n{sym}: robot 1 sees {v}, self-symmetric: {revert(v) == v}")

# A protocol says "move clockwise" on the views it accepts.  It must never
# accept both a view and its distinct reversal.
for text in ("x1 > x2", "x1 >= 1", "x1 = x2"):
    phi = ProtocolSpec.parse(text, 2)
    verdict = protocol_valid_bounded(phi, 8)
    tail = "" if verdict.valid else f" (accepts {verdict.counterexample} and its reversal)"
    print(f"{text!r}: valid up to n=8: {verdict.valid}{tail}")

print(f"\nviews of 3 robots on 5 nodes: {len(list(views(3, 5)))}")
