import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carsmooth import ArealGraph, GraphError, spain_provinces


def test_lattice_shape_and_degrees():
    g = ArealGraph.lattice(3, 4)
    assert g.num_areas == 12
    # rook adjacency on a 3x4 grid: corners 2, edges 3, interior 4
    counts = np.sort(g.neighbor_counts)
    assert counts.min() == 2 and counts.max() == 4
    assert g.num_edges == 3 * 3 + 4 * 2  # horizontal + vertical


def test_path_lattice():
    g = ArealGraph.lattice(5, 1)
    assert g.num_edges == 4
    assert list(g.neighbor_counts) == [1, 2, 2, 2, 1]


def test_from_edge_list_dedup_and_validation():
    g = ArealGraph.from_edge_list([(1, 2), (2, 1), (2, 3)], 3)
    assert g.num_edges == 2
    with pytest.raises(GraphError):
        ArealGraph.from_edge_list([(1, 1)], 2)  # self loop
    with pytest.raises(GraphError):
        ArealGraph.from_edge_list([(0, 1)], 2)  # out of range
    with pytest.raises(GraphError):
        ArealGraph.from_edge_list([(1, 5)], 3)


def test_structure_matrix_rowsums_zero():
    g = ArealGraph.lattice(4, 4)
    R = g.structure_matrix()
    assert np.allclose(R.sum(axis=1), 0.0)
    assert np.allclose(R, R.T)
    W = g.proximity_matrix()
    assert np.all(np.diag(W) == 0)
    assert np.allclose(np.diag(R), g.neighbor_counts)


def test_csr_matches_dense():
    g = ArealGraph.lattice(3, 3)
    indptr, indices = g.adjacency_csr()
    W = g.proximity_matrix()
    for i in range(9):
        assert sorted(indices[indptr[i]: indptr[i + 1]]) == list(np.nonzero(W[i])[0])


def test_from_file_roundtrip(tmp_path):
    p = tmp_path / "edges.txt"
    p.write_text("# comment\n1 2\n2 3\n\n3 4\n")
    g = ArealGraph.from_file(p)
    assert g.num_areas == 4 and g.num_edges == 3
    with pytest.raises(FileNotFoundError):
        ArealGraph.from_file(tmp_path / "bad.txt")
    p2 = tmp_path / "malformed.txt"
    p2.write_text("1 2 3\n")
    with pytest.raises(GraphError):
        ArealGraph.from_file(p2)


def test_spain_graph():
    g = spain_provinces()
    assert g.num_areas == 47
    assert g.is_connected()
    assert g.area_labels is not None and len(g.area_labels) == 47
    assert g.neighbor_counts.min() >= 1


def test_disconnected_detection():
    g = ArealGraph.from_edge_list([(1, 2), (3, 4)], 4)
    assert not g.is_connected()


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(1, 6))
def test_structure_matrix_psd(rows, cols):
    R = ArealGraph.lattice(rows, cols).structure_matrix()
    assert np.linalg.eigvalsh(R).min() >= -1e-10
