"""Stage groups of the Klein bottle group for n = 2 and the p/q vanishing table."""

from metabench.metabelian_lab import FiniteStageGroup, h2_tower, klein_datum, n_lower_central_series, pq_check

datum = klein_datum()
W = FiniteStageGroup(datum, 2, 2, "corollary")
print("|W_2| with exponent n^(2j+1):", W.order)
print("group axioms:", W.check_group_axioms()["passed"])
series = n_lower_central_series(W, 2, 3)
print("2-series orders:", [series.order(i) for i in range(1, 4)], "sandwich:", series.sandwich["passed"])

tower = h2_tower(datum, 2, depth=4)
print("H2(Q_i; Z/2) lengths:", [s["h2_length"] for s in tower.stages])
print("images (two routes):", tower.images, tower.images_from_next)

table = pq_check(datum, 2, 3, depth=4)["table"]
print("H2(Q_m; Z/3):", {r["m"]: r["h2"] for r in table})
