"""Tour of the diagram engine: enumeration, counting laws, loop weights.

Prints the tree zoo, contracts background-field legs into loops, and shows
the weight matching that pins the loop-counting parameter beta.
"""

from phi4box.diagrams import (enumerate_diagrams, enumerate_trees,
                              enumerate_cauchy_trees, wick_contract_xi,
                              qft_weight, beta_match, hbar_power,
                              unlabeled_count)

print("tree topologies with labeled external legs:")
for n in (4, 6, 8):
    trees = enumerate_trees(n)
    print(f"  n = {n}: {len(trees)} labeled "
          f"({unlabeled_count(trees)} unlabeled)")

print()
print("counting laws N = n/2 + 2k and l = k - n/2 + 1:")
for n in (2, 4, 6):
    for k in (0, 1, 2, 3):
        ds = enumerate_diagrams(n, k)
        if ds:
            d = ds[0]
            print(f"  (n={n}, k={k}): {len(ds):4d} diagrams, "
                  f"N = {d.num_lines}, loops = {d.loop_count()}")

print()
print("rooted retarded trees of the Cauchy expansion:")
for order in range(4):
    ds = enumerate_cauchy_trees(order)
    total = sum(d.weight for d in ds)
    print(f"  order {order}: {len(ds)} shapes, total multiplicity {total}")

print()
print("the tadpole: two background-field legs contracted into a loop")
tree = enumerate_diagrams(4, 1, tags=["ext", "ext", "xi", "xi"])[0]
tadpole = wick_contract_xi(tree)[0]
print(tadpole.ascii_art())
print("  hbar power:", hbar_power(tadpole))
print("  quantum (Wick) weight of the same topology:",
      qft_weight(2, 1, enumerate_diagrams(2, 1)[0]))

print()
print("matching classical loop weights to the Wick oracle fixes beta:")
rep = beta_match(tadpole)
print(f"  classical weight {rep.classical_weight}, "
      f"quantum weight {rep.quantum_weight} "
      f"-> beta = {rep.beta_coeff}/pi = 1/(2 pi)")
