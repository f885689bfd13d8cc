import json

from opkz.cli import main


def run(args):
    return main(args)


def test_usage_error_exit_code(capsys):
    assert run(["nonsense"]) == 3
    assert run(["homology", "--target", "bogus"]) == 3


def test_dims_text(capsys):
    assert run(["dims", "--n", "2", "--arity", "3"]) == 0
    out = capsys.readouterr().out
    assert "arity" in out and "36" in out


def test_dims_json_schema(capsys):
    assert run(["dims", "--n", "2", "--arity", "2", "--out", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    import jsonschema
    from importlib.resources import files
    schema = json.loads(files("opkz.schemas")
                        .joinpath("dims_rows.schema.json").read_text())
    jsonschema.validate(rows, schema)


def test_homology_json_schema(capsys):
    assert run(["homology", "--target", "en", "--n", "2", "--arity", "2",
                "--out", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    import jsonschema
    from importlib.resources import files
    schema = json.loads(files("opkz.schemas")
                        .joinpath("homology_rows.schema.json").read_text())
    jsonschema.validate(rows, schema)
    assert rows[0]["betti"] == 1


def test_homology_coinv_and_ring(capsys):
    assert run(["homology", "--target", "coinv", "--n", "2", "--arity", "2",
                "--ring", "F2", "--chi", "0", "--out", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert {r["degree"] for r in rows} == {0, 1}


def test_output_dir_writes_delimited_and_figure(tmp_path):
    out = tmp_path / "report"
    assert run(["homology", "--target", "en", "--n", "2", "--arity", "2",
                "--out", "csv", "--out-dir", str(out)]) == 0
    csv_file = out / "homology_en.csv"
    png_file = out / "homology_en.png"
    assert csv_file.exists() and png_file.exists()
    assert csv_file.read_text().startswith("object,degree,betti,torsion")
    assert png_file.stat().st_size > 1000
    assert run(["dims", "--n", "1", "--arity", "3", "--out", "csv",
                "--out-dir", str(out)]) == 0
    assert (out / "dims.csv").exists() and (out / "dims.png").exists()


def test_cache_idempotent(tmp_path, capsys):
    cache = tmp_path / "cache"
    args = ["dims", "--n", "2", "--arity", "3", "--out", "json",
            "--cache-dir", str(cache)]
    assert run(args) == 0
    first = capsys.readouterr().out
    entries = list(cache.glob("*.json"))
    assert len(entries) == 1
    blob = json.loads(entries[0].read_text())
    assert blob["checksum"]
    assert run(args) == 0
    assert capsys.readouterr().out == first
    # corruption is detected and the entry recomputed
    entries[0].write_text(entries[0].read_text().replace(
        '"rank": 36', '"rank": 37'))
    assert run(args) == 0
    assert capsys.readouterr().out == first


def test_resource_cap_exit_code(capsys):
    assert run(["dims", "--n", "3", "--arity", "4", "--mem-cap", "10"]) == 2
    err = capsys.readouterr().err
    assert "resource cap" in err


def test_check_suites(capsys):
    assert run(["check", "--suite", "axioms", "--n", "2", "--arity", "3",
                "--seed", "1"]) == 0
    assert run(["check", "--suite", "kgraph", "--n", "2", "--arity", "3",
                "--seed", "1"]) == 0
    assert run(["check", "--suite", "cobar", "--n", "1", "--arity", "3"]) == 0
    assert run(["check", "--suite", "sphere", "--arity", "2", "--m", "2"]) == 0
    assert run(["check", "--suite", "latching", "--n", "2", "--arity", "2",
                "--seed", "0"]) == 0


def test_omega_and_psi_artifacts(tmp_path):
    out = tmp_path / "artifacts"
    assert run(["omega", "--n", "2", "--arity", "3", "--out-dir",
                str(out)]) == 0
    payload = json.loads((out / "omega.json").read_text())
    import jsonschema
    from importlib.resources import files
    schema = json.loads(files("opkz.schemas")
                        .joinpath("twisting_family.schema.json").read_text())
    jsonschema.validate(payload, schema)
    assert payload["manifest"]["version"]
    assert run(["psi", "--n", "2", "--arity", "2", "--out-dir",
                str(out)]) == 0
    pobj = json.loads((out / "psi.json").read_text())
    schema2 = json.loads(files("opkz.schemas")
                         .joinpath("cochain_map.schema.json").read_text())
    jsonschema.validate(pobj, schema2)
    assert run(["phi", "--n", "2", "--arity", "2", "--out-dir",
                str(out)]) == 0
    jsonschema.validate(json.loads((out / "phi.json").read_text()), schema2)
