"""Walk through the polycyclic example H = Z^2 x| Z with matrix [[0, 1], [1, 3]]."""

from metabench.cli import bundled_corpus, parse_input
from metabench.completion_lab import wedge_completion_model
from metabench.metabelian_lab import bousfield_ses_report, h2_by_wang, h2_tower
from metabench.module_engine import exterior_coinvariants
from metabench.ring_kernel import CoefficientRing
from metabench.sigma_tame import tameness_report

inp = parse_input(bundled_corpus()["H"])
datum = inp.datum()
Z = CoefficientRing.integers()

print("(wedge^2 M)_A:", exterior_coinvariants(inp.matrix_action, Z))
wm = wedge_completion_model(inp.module(CoefficientRing.mod(2)))
print("completed twisted wedge over Z/2:", wm.invariants, "at index", wm.index)
print("tameness:", tameness_report(inp.module(Z)).overall)

for n in (2, 3):
    tower = h2_tower(datum, n, depth=4)
    print(f"n={n} stage orders:", [s["order"] for s in tower.stages])
    print(f"n={n} H2 lengths:", [s["h2_length"] for s in tower.stages])
    print(f"n={n} images:", tower.images, "stable from", tower.certificate.get("from"))
    rep = bousfield_ses_report(datum, n, n, 4, h2_by_wang(datum, n), tower=tower)
    print(f"n={n} report:", rep["status"], "kernel length", rep.get("phi_kernel_length"))
