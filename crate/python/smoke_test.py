"""Smoke test for the `openindex` Python module.

Build and install the module first:

    pip install ./crates/py

then run `python python/smoke_test.py` from the repository root.
"""

import json
import pathlib
import tempfile

import openindex

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"


def main():
    assert openindex.normalize_doi("https://doi.org/10.1145/2740908.2742839") == "10.1145/2740908.2742839"
    assert openindex.validate_orcid("https://orcid.org/0000-0002-1825-0097") == "0000-0002-1825-0097"
    assert openindex.validate_issn("0378-5955") == "0378-5955"
    assert openindex.parse_id("https://openalex.org/W12") == ("works", 12, "https://openalex.org/W12")
    try:
        openindex.validate_orcid("0000-0002-1825-0098")
    except ValueError:
        pass
    else:
        raise AssertionError("bad ORCID check digit accepted")

    tree = openindex.ConceptTree.load(str(FIXTURES / "tree_toy.jsonl"))
    assert len(tree) == 20
    registry = openindex.InstitutionRegistry.from_jsonl((FIXTURES / "institutions_toy.jsonl").read_text())
    assert registry.match_affiliation("Dept. of Physics, University of Granada, 18071 Granada, Spain") == ["I1"]

    with tempfile.TemporaryDirectory() as tmp:
        store = openindex.Store(str(pathlib.Path(tmp) / "store"), sync=False)
        store.set_concept_tree(tree)
        store.set_issn_table((FIXTURES / "issn_linking.csv").read_text())
        records = (FIXTURES / "works_10.jsonl").read_text().splitlines()
        counts = store.ingest(records + ["{not json"])
        assert counts == {"created": 10, "merged": 0, "rejected": 1, "updated": 0}, counts
        assert store.ingest(records)["updated"] == 10
        assert store.counts()["works"] == 10
        assert store.integrity_check() == []

        status, body = store.request("/works", "filter=publication_year:2022")
        assert status == 200 and json.loads(body)["meta"]["count"] == 3
        status, body = store.request("/works/doi:10.1145/2740908.2742839")
        assert status == 200 and json.loads(body)["cited_by_count"] == 3

        out = pathlib.Path(tmp) / "dump"
        exported = store.export_dump(str(out))
        fresh = openindex.Store(str(pathlib.Path(tmp) / "fresh"), sync=False)
        assert fresh.import_dump(str(out)) == exported

    print("openindex smoke test passed")


if __name__ == "__main__":
    main()
