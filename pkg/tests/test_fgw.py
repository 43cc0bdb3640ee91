import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.sparse.csgraph import floyd_warshall

from src.errors import InputValidationError
from src.fgw import (
    SolverParams,
    attribute_costs,
    barcode_loss,
    fgw_distance,
    fgw_objective,
    graph_loss,
    is_coupling,
    monotone_coupling,
    pairwise_fgw,
    shortest_path_costs,
    transport_vertex,
)

from .conftest import make_drg, random_drg


def _symmetric(rng, n):
    a = rng.uniform(0, 3, (n, n))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    return a


def _random_coupling(rng, n, m):
    # a convex combination of transport vertices is feasible
    w = rng.dirichlet(np.ones(3))
    return sum(wk * transport_vertex(rng.random((n, m))) for wk in w)


def _ot_oracle(costs):
    n, m = costs.shape
    a_eq = np.vstack([np.kron(np.eye(n), np.ones(m)), np.kron(np.ones(n), np.eye(m))])
    b_eq = np.concatenate([np.full(n, 1 / n), np.full(m, 1 / m)])
    return linprog(costs.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs").fun


def test_shortest_path_costs_on_a_path():
    drg = make_drg([0.0, 1.0, 3.0], [(0, 1), (1, 2)], [[], [], []])
    c = shortest_path_costs(drg)
    assert c.matrix[0, 2] == pytest.approx(3.0)
    assert not c.disconnected.any()
    single = shortest_path_costs(make_drg([2.0], [], [[]]))
    assert single.matrix.tolist() == [[0.0]]


def test_shortest_path_costs_match_floyd_warshall(rng):
    drg = random_drg(rng, 15)
    f = np.array([node.mean_filter for node in drg.skeleton.nodes])
    w = np.full((15, 15), np.inf)
    for u, v in drg.skeleton.edges:
        w[u, v] = w[v, u] = abs(f[u] - f[v])
    assert np.allclose(shortest_path_costs(drg).matrix, floyd_warshall(w, directed=False))


def test_disconnected_pairs_are_filled():
    drg = make_drg([0.0, 2.0, 5.0], [(0, 1)], [[], [], []])
    c = shortest_path_costs(drg)
    assert c.disconnected[0, 2] and c.matrix[0, 2] == pytest.approx(20.0)
    assert np.isfinite(c.matrix).all()


def test_zero_weight_edges_are_kept():
    c = shortest_path_costs(make_drg([1.0, 1.0, 4.0], [(0, 1), (1, 2)], [[], [], []]))
    assert not c.disconnected.any()
    assert c.matrix[0, 2] == pytest.approx(3.0)


def test_graph_loss_matches_quadruple_loop(rng):
    for n, m in [(4, 5), (6, 6), (3, 2)]:
        c1, c2 = _symmetric(rng, n), _symmetric(rng, m)
        pi = _random_coupling(rng, n, m)
        expected = 0.0
        for i in range(n):
            for j in range(m):
                for k in range(n):
                    for l in range(m):
                        expected += (c1[i, k] - c2[j, l]) ** 2 * pi[i, j] * pi[k, l]
        assert graph_loss(pi, c1, c2) == pytest.approx(expected, abs=1e-8)


def test_graph_loss_simple_cases(rng):
    c = _symmetric(rng, 4)
    assert graph_loss(np.eye(4) / 4, c, c) == pytest.approx(0.0, abs=1e-12)
    assert graph_loss(np.ones((1, 1)), np.zeros((1, 1)), np.zeros((1, 1))) == 0.0
    with pytest.raises(InputValidationError):
        graph_loss(np.ones((2, 2)) / 4, c, c)


def test_barcode_loss(rng):
    pi = np.full((3, 4), 1 / 12)
    assert barcode_loss(pi, np.zeros((3, 4))) == 0.0
    assert barcode_loss(pi, np.ones((3, 4))) == pytest.approx(1.0)
    m = rng.random((5, 6))
    pi = _random_coupling(rng, 5, 6)
    expected = sum(m[i, j] * pi[i, j] for i in range(5) for j in range(6))
    assert barcode_loss(pi, m) == pytest.approx(expected, abs=1e-8)


def test_objective_is_affine_in_alpha(rng):
    c1, c2 = _symmetric(rng, 4), _symmetric(rng, 5)
    m = rng.random((4, 5))
    pi = _random_coupling(rng, 4, 5)
    ends = fgw_objective(pi, c1, c2, m, 0.0), fgw_objective(pi, c1, c2, m, 1.0)
    for a in (0.1, 0.4, 0.9):
        assert fgw_objective(pi, c1, c2, m, a) == pytest.approx((1 - a) * ends[0] + a * ends[1])


def test_transport_vertex_is_a_coupling(rng):
    for n, m in [(3, 3), (4, 7), (6, 2)]:
        assert is_coupling(transport_vertex(rng.random((n, m))))


def test_identical_graphs_are_at_distance_zero(rng):
    g = random_drg(rng, 6)
    for alpha in (0.0, 0.5, 1.0):
        assert fgw_distance(g, g, alpha).value <= 1e-6


def test_alpha_zero_is_linear_transport(rng):
    for n, m in [(4, 4), (3, 5), (6, 4)]:
        a, b = random_drg(rng, n), random_drg(rng, m)
        costs = attribute_costs(a, b, "image")
        result = fgw_distance(a, b, 0.0, "image")
        assert result.value**2 == pytest.approx(_ot_oracle(costs), abs=1e-6)


def test_single_nodes():
    a = make_drg([0.0], [], [[(0.0, 1.0)]])
    b = make_drg([5.0], [], [[(0.0, 2.0)]])
    costs = attribute_costs(a, b, "bottleneck")
    for alpha in (0.0, 0.3, 1.0):
        value, pi = fgw_distance(a, b, alpha, "bottleneck")
        assert value**2 == pytest.approx((1 - alpha) * costs[0, 0])
        assert pi.tolist() == [[1.0]]


def test_alpha_one_is_the_graph_term(rng):
    a, b = random_drg(rng, 5), random_drg(rng, 6)
    result = fgw_distance(a, b, 1.0)
    c1, c2 = shortest_path_costs(a).matrix, shortest_path_costs(b).matrix
    assert result.objective == pytest.approx(graph_loss(result.coupling, c1, c2))


def test_solver_iterates_stay_feasible_and_descend(rng):
    a, b = random_drg(rng, 6), random_drg(rng, 5)
    result = fgw_distance(a, b, 0.5, "stats", SolverParams(keep_iterates=True))
    assert result.iterates
    assert all(is_coupling(pi) for pi in result.iterates)
    assert np.all(np.diff(result.history) <= 1e-12)


def test_result_beats_product_and_filter_order_couplings(rng):
    a, b = random_drg(rng, 5), random_drg(rng, 5)
    c1, c2 = shortest_path_costs(a).matrix, shortest_path_costs(b).matrix
    costs = attribute_costs(a, b, "image")
    f1 = [node.mean_filter for node in a.skeleton.nodes]
    f2 = [node.mean_filter for node in b.skeleton.nodes]
    # nodes of random_drg are numbered in filter order
    assert np.array_equal(monotone_coupling(f1, f2), np.eye(5) / 5)
    result = fgw_distance(a, b, 0.5, "image")
    assert result.objective <= fgw_objective(np.full((5, 5), 1 / 25), c1, c2, costs, 0.5) + 1e-12
    assert result.objective <= fgw_objective(np.eye(5) / 5, c1, c2, costs, 0.5) + 1e-12
    assert result.objective <= fgw_objective(np.fliplr(np.eye(5)) / 5, c1, c2, costs, 0.5) + 1e-12


def test_monotone_coupling():
    pi = monotone_coupling([0.0, 1.0], [0.0, 1.0, 2.0])
    np.testing.assert_allclose(pi * 6, [[2, 1, 0], [0, 1, 2]])
    pi = monotone_coupling([0.0, 1.0], [0.0, 1.0, 2.0], reverse=True)
    np.testing.assert_allclose(pi * 6, [[0, 1, 2], [2, 1, 0]])
    for n, m in [(1, 4), (4, 7), (6, 2), (5, 5)]:
        assert is_coupling(monotone_coupling(np.arange(n), np.arange(m)))


def test_monotone_coupling_follows_the_filter_not_the_ids(rng):
    f1, f2 = rng.random(4), rng.random(6)
    perm = rng.permutation(6)
    np.testing.assert_array_equal(monotone_coupling(f1, f2[perm]), monotone_coupling(f1, f2)[:, perm])


def _relabeled(drg, perm):
    inv = np.argsort(perm)
    nodes = drg.skeleton.nodes
    return make_drg(
        [nodes[p].mean_filter for p in perm],
        [(int(inv[u]), int(inv[v])) for u, v in drg.skeleton.edges],
        [drg.diagrams[p].pairs.tolist() for p in perm],
        name=drg.name,
    )


def test_relabeling_does_not_change_the_value(rng):
    a, b = random_drg(rng, 5), random_drg(rng, 6)
    shuffled = _relabeled(b, rng.permutation(6))
    # alpha = 0 has a unique optimal value
    assert fgw_distance(a, shuffled, 0.0).value == pytest.approx(fgw_distance(a, b, 0.0).value, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_relabeling_does_not_change_the_value_with_structure(rng, alpha):
    for n in (3, 4, 5, 6, 7):
        a, b = random_drg(rng, n), random_drg(rng, n)
        shuffled = _relabeled(b, rng.permutation(n))
        assert abs(fgw_distance(a, shuffled, alpha).value - fgw_distance(a, b, alpha).value) < 1e-6
        assert abs(fgw_distance(shuffled, a, alpha).value - fgw_distance(b, a, alpha).value) < 1e-6


def test_alpha_zero_ignores_the_skeleton(rng):
    g = [random_drg(rng, n, f"g{n}") for n in (3, 4, 5, 6)]
    rewired = [
        make_drg([node.mean_filter for node in x.skeleton.nodes], [(0, 1)], [d.pairs.tolist() for d in x.diagrams])
        for x in g
    ]
    relabeled = [_relabeled(x, rng.permutation(x.n_nodes)) for x in g]
    base = pairwise_fgw(g, 0.0)
    np.testing.assert_allclose(pairwise_fgw(rewired, 0.0), base, rtol=0, atol=1e-9)
    np.testing.assert_allclose(pairwise_fgw(relabeled, 0.0), base, rtol=0, atol=1e-6)
    assert not np.allclose(pairwise_fgw(rewired, 0.5), pairwise_fgw(g, 0.5))


def test_multistart_never_does_worse(rng):
    a, b = random_drg(rng, 6), random_drg(rng, 7)
    single = fgw_distance(a, b, 0.5, "stats")
    multi = fgw_distance(a, b, 0.5, "stats", SolverParams(n_starts=5, seed=3))
    assert multi.objective <= single.objective + 1e-12


def test_fgw_rejects_bad_input(rng):
    a = random_drg(rng, 3)
    with pytest.raises(InputValidationError):
        fgw_distance(a, a, 1.5)
    with pytest.raises(InputValidationError):
        fgw_distance(a, a, 0.5, "wasserstein")
    with pytest.raises(InputValidationError):
        fgw_distance(a, make_drg([0.0, 1.0, 2.0], [], [[], [], []], mode="barcode-transform"), 0.5)
    with pytest.raises(InputValidationError):
        fgw_distance(a, a, 0.5, costs=np.zeros((2, 2)))


def test_pairwise_fgw(rng):
    g = [random_drg(rng, 4, "a"), random_drg(rng, 5, "b"), random_drg(rng, 6, "c")]
    d = pairwise_fgw([g[0], g[0]], 0.5)
    assert d[0, 1] <= 1e-6
    d = pairwise_fgw(g, 0.5)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0.0)
    multi = pairwise_fgw(g, 0.5, params=SolverParams(n_starts=5, seed=1))
    assert np.all(multi <= d + 1e-9)
    with pytest.raises(InputValidationError):
        pairwise_fgw(g[:1], 0.5)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_default_start_matches_best_of_random_restarts(alpha):
    # two-node couplings lie on the segment between the two filter-order vertices
    g = [
        make_drg([0.0, 3.0], [(0, 1)], [[(0.1, 0.9)], []], "a"),
        make_drg([0.0, 1.0], [(0, 1)], [[], [(0.2, 0.4), (0.3, 1.0)]], "b"),
        make_drg([1.0, 5.0], [], [[(0.0, 0.5)], [(0.5, 0.6)]], "c"),
    ]
    single = pairwise_fgw(g, alpha)
    best = np.full_like(single, np.inf)
    for seed in range(5):
        best = np.minimum(best, pairwise_fgw(g, alpha, params=SolverParams(n_starts=2, seed=seed)))
    np.testing.assert_allclose(single, best, rtol=0, atol=1e-9)


def test_pairwise_fgw_workers_match_inline(rng):
    g = [random_drg(rng, n, f"g{n}") for n in (3, 4, 5, 6)]
    inline = pairwise_fgw(g, 0.25)
    pooled = pairwise_fgw(g, 0.25, n_jobs=2)
    np.testing.assert_allclose(pooled, inline, rtol=0, atol=1e-10)


def test_transport_vertex_on_a_large_unequal_instance(rng):
    costs = rng.random((40, 55))
    pi = transport_vertex(costs)
    assert is_coupling(pi)
    assert barcode_loss(pi, costs) == pytest.approx(_ot_oracle(costs), abs=1e-9)


def test_attribute_weight_trades_off_against_alpha(rng):
    a, b = random_drg(rng, 4), random_drg(rng, 6)
    costs = attribute_costs(a, b, "stats")
    heavy = fgw_distance(a, b, 0.5, costs=costs, attr_weight=3.0)
    # alpha / (3 (1 - alpha)) = 1 / 3 at alpha = 0.5, i.e. alpha = 0.25 with unit weight
    light = fgw_distance(a, b, 0.25, costs=costs)
    assert heavy.objective == pytest.approx(light.objective * 0.5 / 0.25, rel=1e-9)
    assert fgw_distance(a, b, 0.0, costs=costs, attr_weight=3.0).value == pytest.approx(
        np.sqrt(3.0) * fgw_distance(a, b, 0.0, costs=costs).value, rel=1e-9
    )
    with pytest.raises(InputValidationError):
        fgw_distance(a, b, 0.5, costs=costs, attr_weight=0.0)
