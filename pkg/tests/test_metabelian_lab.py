import numpy as np
import pytest

from metabench.metabelian_lab import (
    BUNDLED_DATA,
    FiniteGroupTable,
    FiniteStageGroup,
    SizeCapExceeded,
    bousfield_ses_report,
    bs12_datum,
    e2_comparison,
    functoriality_check,
    gamma_tower_ZJ,
    h2_bar,
    h2_by_wang,
    h2_finite,
    h2_integral,
    h2_tower,
    h_datum,
    klein_datum,
    lamplighter_datum,
    n_lower_central_series,
    pq_check,
    quotient_table,
    telescope_comparison,
)
from metabench.ring_kernel import CapabilityError


def test_bundled_data_validate():
    assert set(BUNDLED_DATA) == {"klein", "H", "bs12", "lamplighter"}
    assert not lamplighter_datum().complete_presentation
    with pytest.raises(ValueError):
        d = klein_datum()
        type(d)(d.A, d.M, [[(7, 1)]], d.generator_names)


def test_klein_stage_group_order_and_axioms():
    W = FiniteStageGroup(klein_datum(), 2, 2, "corollary")
    assert W.order == 128
    assert W.check_group_axioms()["passed"]


def test_relators_hold_in_stage_group():
    for datum in (klein_datum(), h_datum(), bs12_datum()):
        W = FiniteStageGroup(datum, 3, 2, "tight")
        assert all(W.evaluate(w) == W.identity for w in datum.relators)


def test_stage_cap_is_enforced():
    with pytest.raises(SizeCapExceeded):
        FiniteStageGroup(h_datum(), 3, 4, "corollary", cap=1000)


@pytest.mark.parametrize("datum,n", [(klein_datum(), 2), (h_datum(), 3)])
def test_functoriality(datum, n):
    assert functoriality_check(datum, n, 2, samples=300, policy="tight")["passed"]


def test_n_series_sandwich():
    W = FiniteStageGroup(klein_datum(), 2, 3, "tight")
    s = n_lower_central_series(W, 2, 4)
    assert s.sandwich["passed"] and s.sandwich["gamma2_meet_P_equals_P_In"]
    orders = [s.order(i) for i in range(1, 5)]
    assert orders == sorted(orders, reverse=True)


@pytest.mark.parametrize(
    "orders,p,multiplier,fp_dim",
    [((2, 2), 2, 1, 3), ((4,), 2, 0, 1), ((2, 2, 2), 2, 3, 6), ((3, 3), 3, 1, 3), ((2, 4), 2, 1, 3), ((6,), 3, 0, 1)],
)
def test_h2_of_abelian_groups(orders, p, multiplier, fp_dim):
    # H_2(Q; F_p) = multiplier tensor F_p + Tor(H_1 Q, F_p)
    Q = FiniteGroupTable.abelian(orders)
    h2z, _ = h2_integral(Q)
    assert len(h2z) == multiplier
    assert h2_finite(Q, p).dimension == fp_dim == h2_bar(Q, p)


def test_h2_finite_over_f2_matches_bar_and_uct():
    Q = FiniteGroupTable.abelian((2, 2))
    # UCT: H_2(Z/2^2; F_2) = Z/2 (multiplier) + Tor(H_1, F_2) = F_2^3
    assert h2_finite(Q, 2).dimension == 3 == h2_bar(Q, 2)
    # over Z/4: Z/2 from the multiplier plus Tor(Z/2 + Z/2, Z/4) = (Z/2)^2
    assert h2_finite(Q, 4).invariant_factors == (2, 2, 2)
    with pytest.raises(SizeCapExceeded):
        h2_finite(FiniteGroupTable.abelian((8, 8)), 2, cap=32)


def test_h2_tower_klein_n2():
    rep = h2_tower(klein_datum(), 2, depth=4)
    assert rep.images == rep.images_from_next == [0, 1, 1, 1]
    assert [s["h2_length"] for s in rep.stages] == [0, 3, 3, 3]
    assert rep.certificate["status"] == "Stable"
    assert all(s.get("bar_oracle", s["h2_length"]) == s["h2_length"] for s in rep.stages)


def test_h2_tower_needs_prime_field():
    with pytest.raises(CapabilityError):
        h2_tower(klein_datum(), 2, 4, depth=2)


def test_bousfield_report_with_wang():
    d = klein_datum()
    wang = h2_by_wang(d, 2)
    rep = bousfield_ses_report(d, 2, 2, 4, wang)
    assert rep["status"] == "Pass"
    assert rep["stable_image_length"] == 1 and rep["phi_kernel_length"] == 0
    h = bousfield_ses_report(h_datum(), 2, 2, 4, h2_by_wang(h_datum(), 2))
    assert h["status"] == "Pass" and h["phi_kernel_length"] == 1


def test_pq_vanishing_small():
    rep = pq_check(klein_datum(), 2, 3, depth=3)
    assert rep["status"] == "Pass" and all(r["zero"] for r in rep["table"])


def test_integral_gamma_layers():
    t = gamma_tower_ZJ(h_datum(), 3)
    assert [str(x) for x in t.layers][:1] == ["Z/3"]


def test_e2_and_telescope():
    assert e2_comparison(klein_datum(), "Z", 2)["status"] == "Pass"
    h = e2_comparison(h_datum(), "Z", 2)
    assert h["status"] == "Pass"
    assert h["wedge_model"]["uncompleted_exterior_coinvariants"] == "Z/2"
    assert telescope_comparison(klein_datum(), 2)["status"] == "Pass"


def test_quotient_table_is_a_group():
    W = FiniteStageGroup(klein_datum(), 2, 2, "tight")
    s = n_lower_central_series(W, 2, 3)
    tab, labels = quotient_table(W, s.terms[1])
    mult = tab.multiplication_table()
    assert tab.order == len(np.unique(labels))
    assert (np.sort(mult, axis=1) == np.arange(tab.order)).all()


def test_kernels_descend_along_the_tower():
    # images of H_2(G) grow, so the kernels of H_2(G) -> H_2(Q_i) shrink
    for datum, n in ((klein_datum(), 2), (h_datum(), 3)):
        images = h2_tower(datum, n, depth=4).images
        assert images == sorted(images)
