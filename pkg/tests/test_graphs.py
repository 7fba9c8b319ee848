import numpy as np
import pytest

from lsbounds import (
    AssumptionViolationError,
    EdgeListError,
    InputError,
    ModelKind,
    adjacency_spectrum,
    build_nod_model,
    generate_random_regular,
    graph_from_adjacency,
    nod_bound,
    parse_edge_list,
)
from lsbounds.graphs import SweepRecord, make_sweep_record

from conftest import cycle_adjacency, k4_adjacency


class TestGeneration:
    def test_k4_is_unique_3_regular_on_4(self):
        g = generate_random_regular(4, 3, seed=0)
        np.testing.assert_array_equal(g.adjacency, k4_adjacency())

    def test_six_cycle_is_unique_connected_2_regular_on_6(self):
        # any connected 2-regular graph on 6 vertices is the 6-cycle, so the
        # spectrum must match the circulant eigenvalues 2cos(2 pi j / 6)
        g = generate_random_regular(6, 2, seed=123)
        assert g.degree == 2
        assert g.is_connected
        np.testing.assert_allclose(
            g.spectrum, np.sort(np.linalg.eigvalsh(cycle_adjacency(6)))[::-1],
            atol=1e-9,
        )

    def test_postconditions_on_random_instance(self):
        g = generate_random_regular(12, 3, seed=7)
        assert g.n == 12
        np.testing.assert_array_equal(g.adjacency.sum(axis=1), np.full(12, 3.0))
        np.testing.assert_array_equal(g.adjacency, g.adjacency.T)
        assert np.all(np.diag(g.adjacency) == 0)
        assert g.is_connected
        assert g.attempts >= 1

    def test_deterministic_for_seed(self):
        a = generate_random_regular(16, 3, seed=42)
        b = generate_random_regular(16, 3, seed=42)
        np.testing.assert_array_equal(a.adjacency, b.adjacency)
        c = generate_random_regular(16, 3, seed=43)
        assert not np.array_equal(a.adjacency, c.adjacency)

    def test_dense_degree(self):
        g = generate_random_regular(36, 30, seed=5)
        np.testing.assert_array_equal(g.adjacency.sum(axis=1), np.full(36, 30.0))
        assert g.is_connected

    def test_odd_product_rejected(self):
        with pytest.raises(InputError):
            generate_random_regular(7, 3, seed=0)

    def test_degree_bounds(self):
        with pytest.raises(InputError):
            generate_random_regular(5, 5, seed=0)


class TestSpectrum:
    def test_k4(self, k4):
        lambda2, lambda_min, lambda_prime = adjacency_spectrum(k4)
        assert lambda2 == pytest.approx(-1.0, abs=1e-12)
        assert lambda_min == pytest.approx(-1.0, abs=1e-12)
        assert lambda_prime == pytest.approx(1.0, abs=1e-12)

    def test_c6(self, c6):
        lambda2, lambda_min, lambda_prime = adjacency_spectrum(c6)
        assert lambda2 == pytest.approx(1.0, abs=1e-9)
        assert lambda_min == pytest.approx(-2.0, abs=1e-9)
        assert lambda_prime == pytest.approx(2.0, abs=1e-9)

    def test_petersen(self, petersen):
        lambda2, lambda_min, lambda_prime = adjacency_spectrum(petersen)
        assert lambda2 == pytest.approx(1.0, abs=1e-9)
        assert lambda_min == pytest.approx(-2.0, abs=1e-9)
        assert lambda_prime == pytest.approx(2.0, abs=1e-9)
        # known multiplicities: {3, 1 (x5), -2 (x4)}
        np.testing.assert_allclose(
            petersen.spectrum, [3] + [1] * 5 + [-2] * 4, atol=1e-9
        )

    def test_perron_root_on_random_graphs(self):
        for seed, (n, k) in enumerate([(10, 3), (14, 5), (20, 4), (36, 30)]):
            g = generate_random_regular(n, k, seed=seed)
            assert g.spectrum[0] == pytest.approx(k, abs=1e-9)

    def test_disconnected_rejected(self):
        A = np.zeros((6, 6))
        A[:3, :3] = k4_adjacency()[:3, :3]  # triangle
        A[3:, 3:] = k4_adjacency()[:3, :3]  # disjoint triangle
        g = graph_from_adjacency(A)
        with pytest.raises(InputError):
            adjacency_spectrum(g)

    def test_irregular_rejected(self):
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = 1.0
        g = graph_from_adjacency(A)
        assert g.degree is None
        with pytest.raises(InputError):
            adjacency_spectrum(g)


class TestNodBound:
    def test_reference_values(self, k4, c6, petersen):
        assert nod_bound(k4, 1.0) == pytest.approx(4.0 / 3, abs=1e-12)
        assert nod_bound(c6, 2.0) == pytest.approx(0.5, abs=1e-12)
        assert nod_bound(petersen, 1.0) == pytest.approx(1.0 / 3, abs=1e-12)

    def test_linear_in_decay(self, petersen):
        base = nod_bound(petersen, 1.0)
        for c in (0.5, 2.0, 7.25):
            assert nod_bound(petersen, c) == pytest.approx(c * base, abs=1e-12)

    def test_isomorphism_invariance(self):
        g = generate_random_regular(12, 4, seed=2)
        rng = np.random.default_rng(0)
        perm = rng.permutation(12)
        h = graph_from_adjacency(g.adjacency[np.ix_(perm, perm)])
        assert abs(nod_bound(g, 1.3) - nod_bound(h, 1.3)) <= 1e-10
        np.testing.assert_allclose(
            adjacency_spectrum(g), adjacency_spectrum(h), atol=1e-10
        )

    def test_complete_graph_formula(self, k4):
        # general decay: d * n / (n - 1); collapses to n only when d equals
        # the degree
        assert nod_bound(k4, 2.0) == pytest.approx(2.0 * 4 / 3, abs=1e-12)
        assert nod_bound(k4, 3.0) == pytest.approx(4.0, abs=1e-12)
        assert "complete graph" in nod_bound.__doc__


class TestBuildNodModel:
    @pytest.mark.parametrize("kind", [ModelKind.HOPFIELD, ModelKind.FIRING_RATE])
    def test_k4_singular_point(self, k4, kind):
        model, sp = build_nod_model(k4, 1.0, kind)
        assert sp.p_star == pytest.approx(1.0 / 3, abs=1e-15)
        assert sp.decomposition.q == 1
        np.testing.assert_allclose(np.abs(sp.decomposition.V[:, 0]), 0.5, atol=1e-10)

    def test_c6_singular_parameter(self, c6):
        _, sp = build_nod_model(c6, 2.0, ModelKind.HOPFIELD)
        assert sp.p_star == pytest.approx(1.0, abs=1e-15)

    def test_rejects_invalid_decay(self, k4):
        with pytest.raises(InputError):
            build_nod_model(k4, 0.0, ModelKind.HOPFIELD)


class TestEdgeList:
    def test_roundtrip_k4(self, tmp_path):
        lines = ["# complete graph on four vertices"]
        for i in range(4):
            for j in range(i + 1, 4):
                lines.append(f"{i} {j}")
        g = parse_edge_list(lines)
        np.testing.assert_array_equal(g.adjacency, k4_adjacency())

    def test_explicit_unit_weight_accepted(self):
        g = parse_edge_list(["0 1 1.0", "1 2", "2 0"])
        assert g.degree == 2

    def test_malformed_token_names_line(self):
        with pytest.raises(EdgeListError, match="line 2"):
            parse_edge_list(["0 1", "1 x"])

    def test_self_loop_rejected(self):
        with pytest.raises(EdgeListError, match="line 1"):
            parse_edge_list(["3 3"])

    def test_non_unit_weight_rejected(self):
        with pytest.raises(EdgeListError, match="line 1"):
            parse_edge_list(["0 1 2.5"])

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "c6.txt"
        path.write_text("\n".join(f"{i} {(i + 1) % 6}" for i in range(6)) + "\n")
        from lsbounds import load_edge_list

        g = load_edge_list(path)
        assert g.degree == 2 and g.n == 6


class TestSweepRecord:
    def test_record_consistent_with_spectrum(self):
        rec = make_sweep_record(12, 3, 1.0, seed=77)
        rec.validate()
        assert rec.n == 12 and rec.k == 3
        expected = 1.0 * (3 - rec.lambda2) / (3 * rec.lambda_prime)
        assert rec.r_par_bound == pytest.approx(expected, abs=1e-15)

    def test_validate_rejects_tampering(self):
        rec = make_sweep_record(10, 3, 1.0, seed=1)
        bad = SweepRecord(
            n=rec.n, k=rec.k, d=rec.d, seed=rec.seed, lambda2=rec.lambda2,
            lambda_min=rec.lambda_min, lambda_prime=rec.lambda_prime,
            r_par_bound=rec.r_par_bound * 1.01,
        )
        with pytest.raises(AssumptionViolationError):
            bad.validate()

    def test_csv_row_roundtrips(self):
        rec = make_sweep_record(8, 3, 1.5, seed=3)
        row = rec.csv_row()
        fields = row.split(",")
        assert int(fields[0]) == 8 and int(fields[1]) == 3
        assert float(fields[7]) == rec.r_par_bound
