"""Minimum-cost rainbow structures on randomly colored weighted instances.

Library layout:
  instance       seeded generation and serialization of instances/colorings
  baselines      plain MST/TSP reference solvers and reference constants
  rainbow_exact  exact rainbow spanning tree solver plus brute-force oracles
  tree_construct bipartite-matching construction of cheap rainbow trees
  tour_greedy    greedy path system + reserve completion rainbow tours
  colorstats     repeated-color counts, isolated pattern copies, gap experiments
  harness        experiment orchestration, CSV emission, scaling fits
"""

__version__ = "0.1.0"
