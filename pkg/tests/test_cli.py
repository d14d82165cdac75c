import json
import subprocess
import sys

import pytest

from cardauct import io as bidio
from cardauct.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, bench, parse_and_dispatch
from cardauct.instances import NamedInstance, generate
from cardauct.model import Bid, InputError, units


def cli(capsys, *argv):
    code = parse_and_dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def ex2_csv(tmp_path):
    path = tmp_path / "ex2.csv"
    bidio.write_bids(path, generate(NamedInstance.EXAMPLE2_TRUTHFUL).bids)
    return path


# ------------------------------------------------------------------ io

def test_csv_round_trip(tmp_path):
    bids = [Bid(0, units(100) + 1, 1), Bid(3, 2_500_000, 4)]
    path = tmp_path / "b.csv"
    bidio.write_bids(path, bids)
    assert path.read_text().splitlines()[0] == "bidder_id,amount,cap"
    assert bidio.read_bids(path) == bids


def test_json_round_trip(tmp_path):
    bids = [Bid(0, units(7), 2)]
    path = tmp_path / "b.json"
    bidio.write_bids(path, bids)
    assert json.loads(path.read_text()) == [{"id": 0, "bid": "7", "cap": 2}]
    assert bidio.read_bids(path) == bids


@pytest.mark.parametrize("text", [
    "id,amount,cap\n1,2,3\n",
    "bidder_id,amount,cap\n1,2\n",
    "bidder_id,amount,cap\nx,2,3\n",
    "bidder_id,amount,cap\n1,-2,3\n",
])
def test_bad_csv(text):
    with pytest.raises(InputError):
        bidio.parse_bids_csv(text)


@pytest.mark.parametrize("text", [
    "[{\"id\": 0, \"bid\": 5, \"cap\": 1}]",
    "{\"id\": 0}",
    "[{\"id\": 0, \"bid\": \"5\"}]",
    "[oops",
])
def test_bad_json(text):
    with pytest.raises(InputError):
        bidio.parse_bids_json(text)


# ------------------------------------------------------------------ commands

def test_run_report(capsys, ex2_csv):
    code, out, _ = cli(capsys, "run", "--mechanism", "mpp", "--input", str(ex2_csv))
    assert code == EXIT_OK
    assert json.loads(out) == {
        "mechanism": "mpp", "k": 2,
        "winners": [{"id": 1, "bid": "80", "price": "70"}, {"id": 2, "bid": "70", "price": "20"}],
        "efficiency": "150", "revenue": "90",
    }


def test_run_prefix_positions(capsys, ex2_csv, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = cli(capsys, "run", "--mechanism", "pgsp", "--input", str(ex2_csv),
                       "--items", "2", "--output", str(report))
    assert code == EXIT_OK and out == ""
    data = json.loads(report.read_text())
    assert [w["position"] for w in data["winners"]] == [1, 2]


def test_outputs_are_byte_identical(capsys, ex2_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        cli(capsys, "run", "--mechanism", "vcg", "--input", str(ex2_csv), "-o", str(path))
    assert a.read_bytes() == b.read_bytes()


def test_sigma_with_figure(capsys, tmp_path):
    bids = tmp_path / "seesaw.csv"
    fig = tmp_path / "sigma.png"
    assert cli(capsys, "gen", "--name", "seesaw", "--output", str(bids))[0] == EXIT_OK
    code, out, _ = cli(capsys, "sigma", "--input", str(bids), "--figure", str(fig))
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["sigma"][:5] == ["1000", "800", "1200", "1190", "1290"]
    assert data["k_star"] == 5
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_gen_random_to_stdout(capsys):
    code, out, _ = cli(capsys, "gen", "--random", "n=4,seed=1,step=5")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "bidder_id,amount,cap"
    assert len(out.splitlines()) == 5


def test_gen_needs_one_source(capsys):
    assert cli(capsys, "gen")[0] == EXIT_INPUT
    assert cli(capsys, "gen", "--name", "seesaw", "--random", "n=2")[0] == EXIT_INPUT


def test_verify_passes(capsys, tmp_path):
    bids = tmp_path / "r.csv"
    cli(capsys, "gen", "--random", "n=12,seed=7", "-o", str(bids))
    code, out, _ = cli(capsys, "verify", "--input", str(bids))
    data = json.loads(out)
    assert code == EXIT_OK and data["passed"]
    assert {c["name"] for c in data["checks"]} == {
        "sigma_vs_brute", "sigma_vs_scan", "best_allocation", "second_best", "vcg_prices",
        "mpp_min_pay", "prefix_best"}


def test_verify_failure_exit_code(capsys, ex2_csv, monkeypatch):
    import cardauct.cli as cli_mod
    monkeypatch.setattr(cli_mod, "second_best_sum", lambda *a: -1)
    code, out, _ = cli(capsys, "verify", "--input", str(ex2_csv))
    assert code == EXIT_VERIFY
    assert not json.loads(out)["passed"]


def test_verify_budget_exit_code(capsys, tmp_path):
    bids = tmp_path / "big.csv"
    cli(capsys, "gen", "--random", "n=20,seed=1", "-o", str(bids))
    code, _, err = cli(capsys, "verify", "--input", str(bids))
    assert code == EXIT_BUDGET
    assert "budget" in err


def test_input_errors(capsys, tmp_path):
    assert cli(capsys, "run", "--mechanism", "mpp", "--input", str(tmp_path / "none.csv"))[0] == EXIT_INPUT
    assert cli(capsys, "run", "--mechanism", "xyz", "--input", "a.csv")[0] == EXIT_INPUT
    assert cli(capsys)[0] == EXIT_INPUT
    empty = tmp_path / "empty.csv"
    empty.write_text("bidder_id,amount,cap\n")
    assert cli(capsys, "sigma", "--input", str(empty))[0] == EXIT_INPUT


@pytest.fixture
def tight_vals(tmp_path):
    path = tmp_path / "tight.csv"
    path.write_text(bidio.format_bids_csv(generate(NamedInstance.POA_TIGHT).valuations))
    return path


def test_poa_command(capsys, tight_vals):
    code, out, _ = cli(capsys, "poa", "--valuations", str(tight_vals), "--mode", "rational",
                       "--step", "25", "--snap")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["ratio"] == "100000000/50000001"
    assert data["grid"] == {"step": "25", "max_multiplier": "2", "snap": True, "mode": "rational"}


def test_off_grid_without_snap_is_input_error(capsys, tight_vals):
    code, _, err = cli(capsys, "poa", "--valuations", str(tight_vals), "--step", "25")
    assert code == EXIT_INPUT
    assert "grid" in err


def test_revcmp_command(capsys, tmp_path):
    path = tmp_path / "half.csv"
    path.write_text(bidio.format_bids_csv(generate(NamedInstance.REVENUE_HALF).valuations))
    code, out, _ = cli(capsys, "revcmp", "--valuations", str(path), "--mode", "rational",
                       "--step", "25", "--snap", "--threads", "2")
    assert code == EXIT_OK
    assert json.loads(out)["ratio"] == "1/2"


def test_equilibria_command_with_figure(capsys, tmp_path):
    path = tmp_path / "shade.csv"
    path.write_text(bidio.format_bids_csv(generate(NamedInstance.PRELIM_SHADING).valuations))
    fig = tmp_path / "eq.png"
    code, out, _ = cli(capsys, "equilibria", "--valuations", str(path), "--step", "25",
                       "--figure", str(fig))
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["optimal_efficiency"] == "150"
    assert data["equilibria"] and all(e["efficiency"] == "150" for e in data["equilibria"])
    assert fig.stat().st_size > 0


def test_equilibria_budget_exit_code(capsys, tmp_path):
    path = tmp_path / "five.csv"
    path.write_text("bidder_id,amount,cap\n" + "".join(f"{i},25,1\n" for i in range(5)))
    assert cli(capsys, "equilibria", "--valuations", str(path), "--step", "25")[0] == EXIT_BUDGET


def test_bench_small(capsys, tmp_path):
    fig = tmp_path / "bench.png"
    code, out, _ = cli(capsys, "bench", "--sizes", "200,400", "--reps", "1", "--figure", str(fig))
    assert code == EXIT_OK
    data = json.loads(out)
    assert [r["n"] for r in data["rows"]] == [200, 400]
    assert all(r["naive_agrees"] for r in data["rows"])
    assert fig.exists()


def test_bench_rejects_unsorted():
    with pytest.raises(InputError):
        bench([400, 200])


def test_bench_parallel_rows():
    data = bench([100, 200], reps=1, workers=2)
    assert [r["n"] for r in data["rows"]] == [100, 200]


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "cardauct.cli", "gen", "--name", "example1"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout == "bidder_id,amount,cap\n0,100,1\n1,90,2\n2,80,2\n"
