"""End-to-end tests for the ``cap`` command line tool."""

import json

import pytest

from symcap.cli import main


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("SYMCAP_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path / "cache"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# capacity tables


def test_ech_table(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "ech", "--domain", "E:1,2", "--k", "1..8"
    )
    assert code == 0
    assert out == "1,2,2,3,3,4,4,4\n"


def test_eh_single_value(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "eh", "--domain", "E:1.5,1.5", "--k", "2"
    )
    assert code == 0
    assert out == "3/2\n"


def test_gh_is_an_alias_for_eh(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "gh", "--domain", "E:1.5,1.5", "--k", "1..7"
    )
    assert code == 0
    assert out == "3/2,3/2,3,3,9/2,9/2,6\n"


def test_eh_accepts_balls_and_infinite_factors(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "eh", "--domain", "B:2", "--k", "1..4"
    )
    assert (code, out) == (0, "2,2,4,4\n")
    code, out, _ = run(
        capsys, "capacity", "--family", "eh", "--domain", "E:1,inf", "--k", "1..3"
    )
    assert (code, out) == (0, "1,2,3\n")


def test_tangency_family(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "g-tangency", "--domain", "P:1,3", "--k", "5"
    )
    assert code == 0
    assert out == "5\n"


def test_tangency_without_formula_is_infeasible(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "g-tangency", "--domain", "E:1,2", "--k", "5"
    )
    assert code == 2
    assert out == "no-formula\n"


def test_point_counts_on_the_ball(capsys):
    code, out, _ = run(
        capsys, "capacity", "--family", "r-points", "--domain", "B", "--k", "1..7"
    )
    assert code == 0
    assert out == "1,1,2,2,2,3,3\n"


def test_csv_table_and_sentinel_rows(capsys, tmp_path):
    dest = tmp_path / "table.csv"
    code, out, _ = run(
        capsys,
        "capacity", "--family", "g-tangency", "--domain", "E:1,2",
        "--k", "1..3", "--output", str(dest),
    )
    assert code == 0  # a multi-row table is printed even with sentinel cells
    assert out == "1,2,no-formula\n"
    assert dest.read_text() == "k,exact,decimal\n1,1,1\n2,2,2\n3,no-formula,\n"


def test_cache_round_trip(capsys, isolated_cache, tmp_path):
    argv = ["capacity", "--family", "ech", "--domain", "E:1,2", "--k", "1..8"]
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    man1 = tmp_path / "a.json"
    man2 = tmp_path / "b.json"
    code, out1, _ = run(
        capsys, *argv, "--output", str(first), "--manifest", str(man1)
    )
    assert code == 0
    cached = sorted(p.name for p in (isolated_cache / "capacity").iterdir())
    assert len(cached) == 2
    assert cached[0].endswith(".csv") and cached[1].endswith(".manifest.json")

    code, out2, _ = run(
        capsys, *argv, "--output", str(second), "--manifest", str(man2)
    )
    assert code == 0
    assert out1 == out2
    assert first.read_bytes() == second.read_bytes()
    assert man1.read_bytes() == man2.read_bytes()
    manifest = json.loads(man1.read_text())
    assert manifest["command"] == "capacity"
    assert manifest["parameters"]["domain"] == "E:1,2"
    assert list(manifest["outputs"].values())[0]  # digest of the CSV table


def test_no_cache_leaves_no_files(capsys, isolated_cache):
    code, out, _ = run(
        capsys,
        "capacity", "--family", "ech", "--domain", "E:1,2", "--k", "3",
        "--no-cache",
    )
    assert (code, out) == (0, "2\n")
    assert not isolated_cache.exists()


# ---------------------------------------------------------------------------
# obstructions


def test_stabilized_bound(capsys):
    code, out, _ = run(
        capsys, "obstruct", "--source", "E:1,8", "--target", "B", "--stabilized"
    )
    assert code == 0
    assert out == "bound 8/3, witness k=8\n"


def test_stabilized_polydisk_target(capsys):
    code, out, _ = run(
        capsys, "obstruct", "--source", "P:1,2", "--target", "P", "--stabilized"
    )
    assert code == 0
    assert out == "bound 3/2, witness k=3\n"


def test_four_dimensional_comparison(capsys):
    code, out, _ = run(
        capsys, "obstruct", "--source", "E:1,2", "--target", "E:1.5,1.5"
    )
    assert code == 0
    assert out == "obstructed at k=2: c_2(E(1,2)) = 2 > 3/2 = c_2(E(3/2,3/2))\n"


def test_four_dimensional_no_obstruction(capsys):
    code, out, _ = run(
        capsys, "obstruct", "--source", "E:1,1", "--target", "E:1,1"
    )
    assert code == 0
    assert out == "no obstruction below K=100\n"


# ---------------------------------------------------------------------------
# model files


def test_check_passes_on_good_model(capsys, fixtures_dir):
    code, out, _ = run(capsys, "linf", "check", str(fixtures_dir / "b2.model"))
    assert code == 0
    assert out == "pass\n"


def test_check_locates_broken_relation(capsys, fixtures_dir):
    code, out, err = run(
        capsys, "linf", "check", str(fixtures_dir / "broken.model")
    )
    assert code == 3
    assert out == ""
    assert "first at word (x)" in err
    assert "residual (z): 1*T^0" in err


def test_solver_levels(capsys, fixtures_dir):
    model = str(fixtures_dir / "b2_lin.model")
    code, out, _ = run(
        capsys,
        "linf", "solve-gb", model, "--b", "t^3", "--l", "2",
        "--action-cutoff", "12",
    )
    assert (code, out) == (0, "4\n")
    code, out, _ = run(
        capsys, "linf", "solve-gb", model, "--b", "t^11", "--action-cutoff", "5"
    )
    assert code == 2
    assert out == "not-found-below-cutoff (word cap 3, action cutoff 5)\n"


def test_mc_check(capsys, fixtures_dir):
    model = str(fixtures_dir / "dgla.model")
    code, out, _ = run(
        capsys, "linf", "mc", model, "--m", "x:1*T^1,y:1*T^1"
    )
    assert code == 2
    assert out == "Maurer-Cartan: fail; residual at (z) is 1*T^2\n"
    code, out, _ = run(
        capsys, "linf", "mc", model, "--m", "x:1*T^1,y:1*T^1,w:1*T^2"
    )
    assert (code, out) == (0, "Maurer-Cartan: pass\n")


def test_mc_rejects_valuation_zero(capsys, fixtures_dir):
    code, _, err = run(
        capsys, "linf", "mc", str(fixtures_dir / "dgla.model"), "--m", "x:1"
    )
    assert code == 3
    assert err.startswith("cap: integrity:")


def test_linearize_prints_a_model_file(capsys, fixtures_dir, tmp_path):
    code, out, _ = run(
        capsys, "linf", "linearize", str(fixtures_dir / "cdga_aug.model")
    )
    assert code == 0
    assert out.startswith("[flags]")
    assert "algebra_mode = module" in out
    assert "(-1*T^(1/2)) * (b) + (1*T^(1/2)) * (c)" in out
    dest = tmp_path / "lin.model"
    code, out, _ = run(
        capsys,
        "linf", "linearize", str(fixtures_dir / "cdga_aug.model"),
        "--output", str(dest),
    )
    assert (code, out) == (0, "")
    assert "algebra_mode = module" in dest.read_text()


# ---------------------------------------------------------------------------
# tangency counts


def test_gw_evaluate(capsys, fixtures_dir):
    code, out, _ = run(
        capsys,
        "gw", "evaluate", "CP2 d=2 <(T^4 p)>",
        "--table", str(fixtures_dir / "base.tbl"),
    )
    assert (code, out) == (0, "1\n")


def test_gw_evaluate_vanishing_cover(capsys):
    code, out, _ = run(capsys, "gw", "evaluate", "CP1 d=2 <(T^2 p)>")
    assert (code, out) == (0, "0\n")


def test_gw_evaluate_reports_missing_rows(capsys, fixtures_dir):
    code, _, err = run(
        capsys,
        "gw", "evaluate", "CP2 d=3 <(T^7 p)>",
        "--table", str(fixtures_dir / "base.tbl"),
    )
    assert code == 2
    assert err.startswith("cap: base table is missing 22 entries: CP2 d=3")


def test_gw_reduce_trace(capsys):
    code, out, _ = run(capsys, "gw", "reduce", "CP2 d=1 <(T^1 p)>")
    assert code == 0
    assert out == (
        "CP2 d=1 <(T^1 p)> ->\n"
        "    1 * CP2 d=1 <(p),(p)>\n"
        "    -1 * CP2 d=1 <(p,p)>\n"
        "result: -1 * CP2 d=1 <(p,p)>  +  1 * CP2 d=1 <(p),(p)>\n"
    )


def test_gw_reduce_is_seed_invariant(capsys):
    outputs = set()
    for seed in ("0", "1", "7"):
        code, out, _ = run(
            capsys, "gw", "reduce", "CP2 d=2 <(T^4 p)>", "--seed", seed
        )
        assert code == 0
        outputs.add(out.splitlines()[-1])
    assert len(outputs) == 1


# ---------------------------------------------------------------------------
# exit codes and wiring


def test_usage_errors_exit_one(capsys, fixtures_dir):
    bad = [
        ["capacity", "--family", "xyz", "--domain", "B", "--k", "1"],
        ["capacity", "--family", "eh", "--domain", "B", "--k", "0..3"],
        ["capacity", "--family", "eh", "--domain", "Q:1", "--k", "1"],
        ["capacity", "--family", "eh", "--domain", "P:1,2", "--k", "1"],
        ["capacity", "--family", "ech", "--domain", "E:1,inf", "--k", "1"],
        ["capacity", "--family", "r-points", "--domain", "E:1,2", "--k", "1"],
        ["linf", "check", str(fixtures_dir / "nope.model")],
    ]
    for argv in bad:
        code, out, err = run(capsys, *argv)
        assert code == 1, argv
        assert err.startswith("cap: error:"), argv


def test_version_flag(capsys):
    from symcap import __version__

    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out == f"cap {__version__}\n"
