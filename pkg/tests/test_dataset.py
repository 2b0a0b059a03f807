import numpy as np
import pytest

from casediff.dataset import (
    Annotation,
    AnnotationTable,
    DataError,
    DifficultyVector,
    EmbeddingDataset,
    ProbabilityMatrix,
    load_annotations,
    load_embeddings,
    load_labels,
    load_probabilities,
    load_scores,
    write_embeddings,
    write_probabilities,
    write_scores,
)


def test_load_embeddings_basic(write_csv):
    path = write_csv("e.csv", "id,label,e0,e1\nx,a,1,0\ny,a,0,1\nz,b,0.6,0.8\n")
    data = load_embeddings(path)
    assert data.case_ids == ("x", "y", "z")
    assert data.class_names == ("a", "b")
    assert data.labels.tolist() == [0, 0, 1]
    assert len(data) == 3 and data.n_classes == 2 and data.dim == 2
    np.testing.assert_allclose(np.linalg.norm(data.embeddings, axis=1), 1.0, atol=1e-6)


def test_load_embeddings_renormalizes(write_csv):
    data = load_embeddings(write_csv("e.csv", "id,label,e0,e1\nx,a,2,0\n"))
    assert data.embeddings[0].tolist() == [1.0, 0.0]


def test_small_drift_kept_as_is(write_csv):
    data = load_embeddings(write_csv("e.csv", "id,label,e0,e1\nx,a,1.0000001,0\n"))
    assert data.embeddings[0, 0] == 1.0000001


@pytest.mark.parametrize(
    "body, message",
    [
        ("x,a,0,0\n", "zero-norm embedding"),
        ("x,a,1,0\nx,b,0,1\n", "duplicate id"),
        ("x,,1,0\n", "empty label"),
        ("x,a,1,zz\n", "non-numeric coordinate"),
        ("x,a,1\n", "expected 4 fields"),
    ],
)
def test_load_embeddings_errors(write_csv, body, message):
    path = write_csv("e.csv", "id,label,e0,e1\n" + body)
    with pytest.raises(DataError, match=message) as exc:
        load_embeddings(path)
    assert str(path) in str(exc.value)


def test_load_embeddings_bad_header(write_csv):
    with pytest.raises(DataError, match="header"):
        load_embeddings(write_csv("e.csv", "id,label,x0,x1\nx,a,1,0\n"))


def test_load_embeddings_fixed_class_names(write_csv):
    path = write_csv("e.csv", "id,label,e0,e1\nx,b,1,0\ny,a,0,1\n")
    data = load_embeddings(path, class_names=["a", "b", "c"])
    assert data.labels.tolist() == [1, 0]
    with pytest.raises(DataError, match="unknown label"):
        load_embeddings(path, class_names=["a"])


def test_embedding_round_trip(tmp_path, rng):
    emb = rng.standard_normal((20, 5))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    data = EmbeddingDataset([f"c{i}" for i in range(20)], rng.integers(0, 3, 20), emb, ["p", "q", "r"])
    path = tmp_path / "e.csv"
    write_embeddings(data, path)
    again = load_embeddings(path, class_names=data.class_names)
    assert again.case_ids == data.case_ids
    assert again.labels.tolist() == data.labels.tolist()
    np.testing.assert_allclose(again.embeddings, data.embeddings, rtol=0, atol=1e-12)


def test_containers_are_immutable(rng):
    data = EmbeddingDataset(["a", "b"], [0, 1], np.eye(2), ["x", "y"])
    with pytest.raises(ValueError):
        data.embeddings[0, 0] = 5.0
    v = DifficultyVector("m", ["a"], [0.5])
    with pytest.raises(ValueError):
        v.scores[0] = 1.0


def test_difficulty_vector_rejects_non_finite():
    with pytest.raises(DataError, match="non-finite"):
        DifficultyVector("m", ["a", "b"], [0.1, np.nan])
    with pytest.raises(DataError):
        DifficultyVector("m", ["a", "b"], [0.1])


def test_difficulty_vector_alignment():
    v = DifficultyVector("m", ["a", "b", "c"], [1.0, 2.0, 3.0])
    assert v.aligned_to(["c", "a"]).scores.tolist() == [3.0, 1.0]
    with pytest.raises(DataError, match="missing"):
        v.aligned_to(["z"])


def test_load_annotations(write_csv):
    path = write_csv(
        "a.csv",
        "case_id,rater_id,response,certainty\nc1,r1,mel,high\nc1,r2,unknown,\n",
    )
    table = load_annotations(path, ["mel", "nv"])
    assert table.records[0] == Annotation("c1", "r1", "mel", "high")
    assert table.records[1] == Annotation("c1", "r2", "unknown", None)


@pytest.mark.parametrize(
    "row, message",
    [
        ("c1,r1,xyz,high\n", "unknown response class"),
        ("c1,r1,mel,sure\n", "unknown certainty token"),
        ("c1,r1,mel,high\nc1,r1,nv,low\n", "duplicate"),
    ],
)
def test_load_annotations_errors(write_csv, row, message):
    path = write_csv("a.csv", "case_id,rater_id,response,certainty\n" + row)
    with pytest.raises(DataError, match=message):
        load_annotations(path, ["mel", "nv"])


def test_annotation_table_rejects_duplicates():
    with pytest.raises(DataError):
        AnnotationTable([Annotation("c", "r", "a"), Annotation("c", "r", "b")])


def test_load_probabilities(write_csv):
    pm = load_probabilities(write_csv("p.csv", "id,label,p0,p1\nc1,0,0.7,0.3\n"))
    assert pm.probs[0].tolist() == [0.7, 0.3]
    assert pm.labels.tolist() == [0]


def test_load_probabilities_renormalizes(write_csv):
    pm = load_probabilities(write_csv("p.csv", "id,label,p0,p1\nc1,0,0.7000005,0.3\n"))
    assert abs(pm.probs[0].sum() - 1.0) < 1e-15
    assert pm.probs[0, 0] == pytest.approx(0.7000005 / 1.0000005, abs=1e-15)


@pytest.mark.parametrize(
    "row, message",
    [
        ("c1,0,0.9,0.3\n", "row sum out of tolerance"),
        ("c1,0,1.2,-0.2\n", "negative probability"),
        ("c1,5,0.5,0.5\n", "out of range"),
    ],
)
def test_load_probabilities_errors(write_csv, row, message):
    with pytest.raises(DataError, match=message):
        load_probabilities(write_csv("p.csv", "id,label,p0,p1\n" + row))


def test_probability_round_trip(tmp_path):
    pm = ProbabilityMatrix(["a", "b"], [1, 0], [[0.25, 0.75], [1 / 3, 2 / 3]])
    write_probabilities(pm, tmp_path / "p.csv")
    again = load_probabilities(tmp_path / "p.csv")
    np.testing.assert_array_equal(again.probs, pm.probs)


def test_scores_round_trip(tmp_path):
    a = DifficultyVector("inv_sim", ["x", "y"], [0.1, 1 / 3])
    b = DifficultyVector("scp", ["x", "y"], [0.2, 2 / 3])
    write_scores([a, b], tmp_path / "s.csv")
    loaded = load_scores(tmp_path / "s.csv")
    assert list(loaded) == ["inv_sim", "scp"]
    np.testing.assert_array_equal(loaded["inv_sim"].scores, a.scores)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "id,method,score"


def test_load_labels_accepts_embeddings_file(write_csv):
    path = write_csv("e.csv", "id,label,e0\nx,a,1\ny,b,1\n")
    assert load_labels(path) == {"x": "a", "y": "b"}


def test_loading_preserves_file_order(write_csv):
    rows = "".join(f"id{k},c{k % 2},1,{k}\n" for k in (5, 3, 9, 1))
    data = load_embeddings(write_csv("e.csv", "id,label,e0,e1\n" + rows))
    assert data.case_ids == ("id5", "id3", "id9", "id1")
