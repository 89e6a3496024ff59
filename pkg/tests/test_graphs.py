import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nnc.graphs import (
    EdgeListError,
    Graph,
    ParetoExpCutoff,
    ZeroTruncatedPoisson,
    _truncated_poisson_rate,
    build_graph_configuration,
    build_true_graph_from_rounds,
    common_neighbors,
    load_edge_list,
    load_rounds,
    sample_degree_sequence,
    write_edge_list,
)
from nnc.seeding import make_rng


# -- Graph basics ----------------------------------------------------------


def test_graph_canonicalizes_and_dedupes_edges():
    g = Graph(4, [1, 0, 2, 1], [0, 1, 3, 0])
    assert g.n_edges == 2
    assert list(g.edge_i) == [0, 2]
    assert list(g.edge_j) == [1, 3]
    assert list(g.degrees) == [1, 1, 1, 1]


def test_graph_rejects_self_edges_and_bad_indices():
    with pytest.raises(ValueError):
        Graph(3, [0], [0])
    with pytest.raises(IndexError):
        Graph(3, [0], [3])


def test_graph_adjacency_is_symmetric_with_zero_diagonal():
    g = Graph(5, [0, 1, 2], [1, 2, 4])
    a = g.adjacency
    assert np.array_equal(a, a.T)
    assert not a.diagonal().any()
    assert g.has_edge(2, 1) and not g.has_edge(0, 2)
    assert list(g.neighbors(2)) == [1, 4]


def test_graph_from_adjacency_roundtrip():
    base = Graph(10, *np.triu_indices(10, 1))
    obs = Graph.from_adjacency(base.adjacency)
    assert obs == base
    with pytest.raises(ValueError):
        Graph.from_adjacency(np.ones((3, 3), dtype=bool))
    bad = np.zeros((3, 3), dtype=bool)
    bad[0, 1] = True
    with pytest.raises(ValueError):
        Graph.from_adjacency(bad)


def test_common_neighbors_examples():
    triangle = Graph(3, [0, 0, 1], [1, 2, 2])
    assert common_neighbors(triangle, 0, 1) == 1
    star = Graph(4, [0, 0, 0], [1, 2, 3])
    assert common_neighbors(star, 0, 1) == 0
    assert common_neighbors(star, 1, 2) == 1
    with pytest.raises(IndexError):
        common_neighbors(star, 0, 9)
    with pytest.raises(ValueError):
        common_neighbors(star, 1, 1)


# -- zero-truncated Poisson sampler ---------------------------------------


def test_truncated_poisson_rate_solves_mean_equation():
    for target in (1.2, 2.0, 5.0, 10.0, 40.0):
        mu = _truncated_poisson_rate(target)
        assert abs(mu / -math.expm1(-mu) - target) < 1e-9


def test_ztp_tiny_mean_gives_all_ones():
    rng = make_rng(0)
    d = sample_degree_sequence(ZeroTruncatedPoisson(1e-9), 5, rng)
    assert list(d) == [1, 1, 1, 1, 1]


def test_ztp_sample_mean_matches_target():
    rng = make_rng(11)
    d = sample_degree_sequence(ZeroTruncatedPoisson(10.0), 100_000, rng)
    assert d.min() >= 1
    assert abs(d.mean() - 10.0) < 0.1


def test_ztp_kolmogorov_distance_to_target_cdf():
    n = 100_000
    rng = make_rng(12)
    dist = ZeroTruncatedPoisson(10.0)
    d = sample_degree_sequence(dist, n, rng)
    mu = dist.parent_rate
    ks = np.arange(1, d.max() + 1)
    p0 = math.exp(-mu)
    target = (stats.poisson.cdf(ks, mu) - p0) / (1.0 - p0)
    target[-1] = max(target[-1], 1.0)  # clamp mass folded onto the top value
    ecdf = np.cumsum(np.bincount(d, minlength=d.max() + 1)[1:]) / n
    assert np.abs(ecdf - np.minimum(target, 1.0)).max() < 0.02


# -- Pareto with exponential cutoff ---------------------------------------


def _pareto_grid_oracle(rate, shape, lo, hi, n_grid=1_000_001):
    # independent quadrature of the target density on a dense grid
    x = np.linspace(lo, hi, n_grid)
    w = np.exp(-rate * x) * x ** -(shape + 1.0)
    i0 = np.trapezoid(w, x)
    i1 = np.trapezoid(x * w, x)
    return x, w, i0, i1


def test_pareto_sample_mean_within_5pct_of_quadrature():
    rate, shape, lo, n = 0.1, 2.0, 5.0, 10_000
    rng = make_rng(21)
    dist = ParetoExpCutoff(rate=rate, shape=shape, lower=lo, upper=n - 1)
    d = sample_degree_sequence(dist, n, rng)
    _, _, i0, i1 = _pareto_grid_oracle(rate, shape, lo, n - 1)
    target = i1 / i0
    assert d.min() >= 5 and d.max() <= n - 1
    assert abs(d.mean() - target) / target < 0.05


def test_pareto_distribution_mean_and_normalization_consistency():
    dist = ParetoExpCutoff(rate=0.1, shape=2.0, lower=5.0, upper=9_999.0)
    _, _, i0, i1 = _pareto_grid_oracle(0.1, 2.0, 5.0, 9_999.0)
    assert dist.mean == pytest.approx(i1 / i0, rel=1e-4)
    assert dist.normalization == pytest.approx(1.0 / i0, rel=1e-4)
    # integration-by-parts identity linking the constant to the mean
    closed = (dist.rate * dist.mean + dist.shape) / (
        dist.lower ** -dist.shape * math.exp(-dist.rate * dist.lower)
        - dist.upper ** -dist.shape * math.exp(-dist.rate * dist.upper)
    )
    assert dist.normalization == pytest.approx(closed, rel=1e-4)


def test_pareto_kolmogorov_distance_to_target_cdf():
    rate, shape, lo, n = 0.12, 1.5, 3.0, 2_000
    rng = make_rng(22)
    dist = ParetoExpCutoff(rate=rate, shape=shape, lower=lo, upper=n - 1)
    d = sample_degree_sequence(dist, 100_000, rng)
    x, w, i0, _ = _pareto_grid_oracle(rate, shape, lo, n - 1)
    cdf_grid = np.concatenate([[0.0], np.cumsum((w[1:] + w[:-1]) / 2 * np.diff(x))]) / i0
    ks = np.arange(math.ceil(lo), d.max() + 1)
    target = np.interp(np.minimum(ks + 0.5, n - 1.0), x, cdf_grid)
    target[-1] = 1.0
    counts = np.bincount(d, minlength=d.max() + 1)[math.ceil(lo):]
    ecdf = np.cumsum(counts) / d.size
    assert np.abs(ecdf - target).max() < 0.02


def test_pareto_parameter_validation():
    with pytest.raises(ValueError):
        ParetoExpCutoff(rate=-0.1, shape=2.0, lower=5.0, upper=99.0)
    with pytest.raises(ValueError):
        ParetoExpCutoff(rate=0.1, shape=2.0, lower=0.5, upper=99.0)
    with pytest.raises(ValueError):
        ParetoExpCutoff(rate=0.1, shape=2.0, lower=99.0, upper=99.0)


# -- configuration-model builder ------------------------------------------


def test_configuration_two_nodes_single_edge():
    g = build_graph_configuration([1, 1], make_rng(1))
    assert g.n_edges == 1 and g.has_edge(0, 1)


def test_configuration_triangle_is_unique_realization():
    g = build_graph_configuration([2, 2, 2], make_rng(2))
    assert g.n_edges == 3
    assert all(g.has_edge(i, j) for i, j in [(0, 1), (0, 2), (1, 2)])


def _graphs_with_degree_sequence(degrees):
    # exhaustive oracle over all labeled simple graphs on len(degrees) nodes
    n = len(degrees)
    pairs = list(itertools.combinations(range(n), 2))
    hits = []
    for mask in range(2 ** len(pairs)):
        deg = [0] * n
        for b, (i, j) in enumerate(pairs):
            if mask >> b & 1:
                deg[i] += 1
                deg[j] += 1
        if deg == list(degrees):
            hits.append(mask)
    return hits, pairs


def test_configuration_star_is_only_realization_and_is_built():
    hits, pairs = _graphs_with_degree_sequence([3, 1, 1, 1])
    assert len(hits) == 1
    star_edges = {pairs[b] for b in range(len(pairs)) if hits[0] >> b & 1}
    assert star_edges == {(0, 1), (0, 2), (0, 3)}
    for seed in range(5):
        g = build_graph_configuration([3, 1, 1, 1], make_rng(seed))
        assert {(int(i), int(j)) for i, j in zip(g.edge_i, g.edge_j)} == star_edges


def test_configuration_odd_total_is_repaired_and_reported():
    g = build_graph_configuration([2, 1, 2], make_rng(5))
    assert g.meta["odd_repair_node"] is not None
    assert g.degrees.sum() % 2 == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.lists(st.integers(1, 7), min_size=8, max_size=40))
def test_configuration_degree_bounds_and_stub_accounting(seed, degrees):
    n = len(degrees)
    degrees = [min(d, n - 1) for d in degrees]
    rng = make_rng(seed)
    g = build_graph_configuration(degrees, rng)
    requested = np.asarray(degrees)
    if g.meta["odd_repair_node"] is not None:
        requested = requested.copy()
        requested[g.meta["odd_repair_node"]] += 1
    assert np.all(g.degrees <= requested)
    assert g.degrees.sum() % 2 == 0
    assert g.n_edges <= requested.sum() // 2
    assert g.degrees.sum() == requested.sum() - g.meta["erased_stub_count"]


def test_configuration_rejects_bad_degrees():
    with pytest.raises(ValueError):
        build_graph_configuration([], make_rng(0))
    with pytest.raises(ValueError):
        build_graph_configuration([0, 1], make_rng(0))
    with pytest.raises(ValueError):
        build_graph_configuration([2, 1], make_rng(0))


# -- edge-list ingestion ----------------------------------------------------


def test_load_edge_list_header_only_is_empty_graph():
    g = load_edge_list(io.StringIO("node_a,node_b\n"))
    assert g.n_v == 0 and g.n_edges == 0


def test_load_edge_list_dedupes_reversed_pairs():
    g = load_edge_list(io.StringIO("node_a,node_b\na,b\nb,a\n"))
    assert g.n_v == 2 and g.n_edges == 1
    assert g.labels == ("a", "b")


def test_load_edge_list_path_degrees():
    g = load_edge_list(io.StringIO("node_a,node_b\na,b\nb,c\n"))
    assert [g.degree(g.labels.index(x)) for x in "abc"] == [1, 2, 1]


def test_load_edge_list_errors_carry_line_numbers():
    with pytest.raises(EdgeListError, match="line 1"):
        load_edge_list(io.StringIO("nodes\n"))
    with pytest.raises(EdgeListError, match="line 3"):
        load_edge_list(io.StringIO("node_a,node_b\na,b\na,b,c\n"))
    with pytest.raises(EdgeListError, match="line 2"):
        load_edge_list(io.StringIO("node_a,node_b\nx,x\n"))


def test_write_edge_list_roundtrip():
    g = load_edge_list(io.StringIO("node_a,node_b\na,b\nb,c\nc,a\n"))
    buf = io.StringIO()
    write_edge_list(g, buf)
    again = load_edge_list(io.StringIO(buf.getvalue()))
    assert again.n_v == g.n_v and again.n_edges == g.n_edges


# -- multi-round contact data -----------------------------------------------


ROUNDS_CSV = "round,node_a,node_b\n1,a,b\n3,a,b\n2,b,c\n1,c,d\n4,d,a\n"


def test_rounds_min_count_two_keeps_repeated_pair():
    data = load_rounds(io.StringIO(ROUNDS_CSV))
    g = build_true_graph_from_rounds(data, min_count=2)
    ia, ib = g.labels.index("a"), g.labels.index("b")
    assert g.has_edge(ia, ib)
    assert g.n_edges == 1


def test_rounds_single_occurrence_is_dropped_at_min_count_two():
    data = load_rounds(io.StringIO(ROUNDS_CSV))
    g = build_true_graph_from_rounds(data, min_count=2)
    ib, ic = g.labels.index("b"), g.labels.index("c")
    assert not g.has_edge(ib, ic)


def test_rounds_min_count_one_is_union():
    data = load_rounds(io.StringIO(ROUNDS_CSV))
    g = build_true_graph_from_rounds(data, min_count=1)
    assert g.n_edges == 4


def test_rounds_monotone_in_min_count():
    data = load_rounds(io.StringIO(ROUNDS_CSV))
    sizes = [build_true_graph_from_rounds(data, k).n_edges for k in (1, 2, 3, 4)]
    assert sizes == sorted(sizes, reverse=True)


def test_rounds_parse_errors():
    with pytest.raises(EdgeListError, match="line 2"):
        load_rounds(io.StringIO("round,node_a,node_b\nzero,a,b\n"))
    with pytest.raises(EdgeListError, match="line 2"):
        load_rounds(io.StringIO("round,node_a,node_b\n0,a,b\n"))
    with pytest.raises(ValueError):
        build_true_graph_from_rounds(load_rounds(io.StringIO(ROUNDS_CSV)), min_count=0)
