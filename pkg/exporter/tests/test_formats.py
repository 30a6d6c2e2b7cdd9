import json
import struct

import numpy as np
import pytest

from synthcap_exporter import (
    CorpusRecord,
    ExportError,
    read_input_corpus,
    write_corpus,
    write_embeddings,
)

HEADER = struct.Struct("<4sIIIB")


def read_syne(path):
    """Independent reader used only to check what the writer emits."""
    blob = open(path, "rb").read()
    magic, version, rows, dim, dtype = HEADER.unpack_from(blob, 0)
    assert magic == b"SYNE" and version == 1 and dtype == 0
    payload = blob[HEADER.size :]
    assert len(payload) == rows * dim * 4
    return np.frombuffer(payload, dtype="<f4").reshape(rows, dim)


def test_golden_bytes(tmp_path):
    path = tmp_path / "one.syne"
    write_embeddings(str(path), np.array([[1.0, 0.0]], dtype=np.float32))
    expected = bytes.fromhex(
        "53594e45010000000100000002000000000000803f00000000"
    )
    assert path.read_bytes() == expected


def test_header_fields(tmp_path):
    path = tmp_path / "m.syne"
    rows = np.arange(12, dtype=np.float32).reshape(3, 4)
    write_embeddings(str(path), rows)
    magic, version, n, d, dtype = HEADER.unpack_from(path.read_bytes(), 0)
    assert (magic, version, n, d, dtype) == (b"SYNE", 1, 3, 4, 0)
    np.testing.assert_array_equal(read_syne(str(path)), rows)


def test_zero_rows_are_allowed(tmp_path):
    path = tmp_path / "z.syne"
    rows = np.zeros((2, 3), dtype=np.float32)
    write_embeddings(str(path), rows)
    np.testing.assert_array_equal(read_syne(str(path)), rows)


def test_non_finite_rejected(tmp_path):
    with pytest.raises(ExportError, match="non-finite"):
        write_embeddings(str(tmp_path / "bad.syne"), np.array([[np.nan, 0.0]]))


def test_bad_shape_rejected(tmp_path):
    with pytest.raises(ExportError, match="2-D"):
        write_embeddings(str(tmp_path / "bad.syne"), np.zeros(4))
    with pytest.raises(ExportError, match="2-D"):
        write_embeddings(str(tmp_path / "bad.syne"), np.zeros((0, 4)))


def test_corpus_round_trip(tmp_path):
    path = tmp_path / "corpus.jsonl"
    records = [
        CorpusRecord(id="a", text="a red cat", objects=["cat"]),
        CorpusRecord(id="b", text="a blue dog", objects=[]),
    ]
    write_corpus(str(path), records)
    assert read_input_corpus(str(path)) == records
    lines = path.read_text().splitlines()
    assert json.loads(lines[0]) == {"id": "a", "text": "a red cat", "objects": ["cat"]}


def test_corpus_objects_optional_on_read(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": "a", "text": "hello there"}\n')
    assert read_input_corpus(str(path)) == [CorpusRecord(id="a", text="hello there")]


def test_corpus_blank_lines_skipped(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": "a", "text": "x y"}\n\n{"id": "b", "text": "y z"}\n')
    assert [r.id for r in read_input_corpus(str(path))] == ["a", "b"]


@pytest.mark.parametrize(
    "line,message",
    [
        ("not json", "not valid JSON"),
        ("[1, 2]", "expected a JSON object"),
        ('{"text": "x"}', "id must be"),
        ('{"id": "", "text": "x"}', "id must be"),
        ('{"id": "a"}', "text must be"),
        ('{"id": "a", "text": "  "}', "text must be"),
        ('{"id": "a", "text": "x", "objects": "cat"}', "array of strings"),
        ('{"id": "a", "text": "x", "objects": [1]}', "array of strings"),
    ],
)
def test_corpus_bad_lines(tmp_path, line, message):
    path = tmp_path / "corpus.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(ExportError, match=message):
        read_input_corpus(str(path))


def test_corpus_duplicate_id(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
    with pytest.raises(ExportError, match="duplicate id"):
        read_input_corpus(str(path))


def test_corpus_empty_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n")
    with pytest.raises(ExportError, match="empty"):
        read_input_corpus(str(path))


def test_corpus_error_names_line(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": 3, "text": "y"}\n')
    with pytest.raises(ExportError, match=":2:"):
        read_input_corpus(str(path))
