import numpy as np
import pandas as pd
import pytest
from fastapi.testclient import TestClient
from typer.testing import CliRunner
from app.cli import cli
from app.main import app
from app.models.network import NetworkGraph
from app.schemas import ExperimentConfig
from app.services import experimentService
from conftest import complete, cycle

client = TestClient(app)
runner = CliRunner()


def edge_list(g: NetworkGraph) -> str:
    return g.write_edge_list()

# network routers

# generate_network


def test_generate_er_network():
    response = client.post("/networks/generate", json={"model": "er", "stations": 20, "seed": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["n"] == 20
    assert body["positions"] is None
    assert all(edge["gain"] == 1.0 for edge in body["edges"])
    assert body["edge_list"].startswith("spinalloc-graph v1 n=20")


def test_generate_is_seeded():
    first = client.post("/networks/generate", json={"model": "er", "stations": 30, "seed": 4}).json()
    second = client.post("/networks/generate", json={"model": "er", "stations": 30, "seed": 4}).json()
    assert first["graph_hash"] == second["graph_hash"]


def test_generate_geometric_network():
    response = client.post("/networks/generate",
                           json={"model": "geo", "stations": 40, "mu_dbm": -80.0, "seed": 2})
    assert response.status_code == 200
    body = response.json()
    assert len(body["positions"]) == body["n"]
    assert NetworkGraph.parse_edge_list(body["edge_list"]).n == body["n"]


def test_generate_too_many_stations():
    response = client.post("/networks/generate", json={"model": "er", "stations": 5000})
    assert response.status_code == 413
    assert response.json()["detail"] == "At most 2000 stations are served"


def test_generate_invalid_body():
    response = client.post("/networks/generate", json={"model": "er", "stations": 0})
    assert response.status_code == 422
    response = client.post("/networks/generate", json={"model": "ring", "stations": 10})
    assert response.status_code == 422

# allocation routers

# solve_allocation


def test_solve_triangle_with_mnf():
    response = client.post("/allocations/solve",
                           json={"edge_list": edge_list(complete(3)), "pools": 3, "solver": "mnf"})
    assert response.status_code == 200
    body = response.json()
    assert body["assignment"] == [1, 2, 3]
    assert body["interference_links"] == 0
    assert body["cost"] == 0
    assert body["zero_interference"] is True
    assert body["stats"]["solver"] == "mnf"


def test_solve_with_sp_is_seeded():
    g = NetworkGraph.generate_erdos_renyi(25, 0.18, np.random.default_rng(3))
    payload = {"edge_list": edge_list(g), "pools": 4, "solver": "sp", "seed": 11}
    first = client.post("/allocations/solve", json=payload).json()
    second = client.post("/allocations/solve", json=payload).json()
    assert first["assignment"] == second["assignment"]
    assert all(1 <= p <= 4 for p in first["assignment"])
    assert first["cost"] == first["interference_links"]


def test_solve_unsatisfiable_reports_conflicts():
    response = client.post("/allocations/solve",
                           json={"edge_list": edge_list(complete(3)), "pools": 2, "solver": "bp"})
    assert response.status_code == 200
    body = response.json()
    assert body["interference_links"] >= 1
    assert body["zero_interference"] is False
    assert body["stats"]["stopped"] is True


def test_solve_malformed_edge_list():
    response = client.post("/allocations/solve", json={
        "edge_list": "spinalloc-graph v1 n=2\n0 1 1.0\n1 0 1.0\n", "pools": 2})
    assert response.status_code == 422
    assert response.json()["detail"].startswith("line 3")


def test_solve_unknown_solver():
    response = client.post("/allocations/solve",
                           json={"edge_list": edge_list(cycle(4)), "pools": 2, "solver": "dsatur"})
    assert response.status_code == 422

# metrics routers

# hyperbolicity


def test_hyperbolicity_four_cycle():
    response = client.post("/metrics/hyperbolicity", json={"edge_list": edge_list(cycle(4))})
    assert response.status_code == 200
    assert response.json() == {"delta": 1.0, "components": 1, "diameter": 2}


def test_hyperbolicity_sampled():
    response = client.post("/metrics/hyperbolicity",
                           json={"edge_list": edge_list(cycle(4)), "mode": "sampled", "samples": 50})
    assert response.status_code == 200
    assert response.json()["delta"] == 1.0


def test_hyperbolicity_exact_too_large():
    response = client.post("/metrics/hyperbolicity", json={"edge_list": edge_list(NetworkGraph(81))})
    assert response.status_code == 413

# experiment routers

# run_experiment


def test_run_experiment_endpoint():
    response = client.post("/experiments/run", json={
        "i_values": [12], "q_values": [3], "z": 3, "solvers": ["sp", "mnf"], "master_seed": 6})
    assert response.status_code == 200
    rows = response.json()
    assert [row["solver"] for row in rows] == ["sp", "mnf"]
    assert all(row["z"] == 3 for row in rows)
    assert all(0.0 <= row["zero_rate_pct"] <= 100.0 for row in rows)


def test_run_experiment_endpoint_too_many_runs():
    response = client.post("/experiments/run", json={
        "i_values": [12], "q_values": [3], "z": 300, "solvers": ["mnf"]})
    assert response.status_code == 413


def test_run_experiment_endpoint_invalid_config():
    response = client.post("/experiments/run", json={
        "i_values": [12], "q_values": [3], "solvers": ["mnf", "mnf"]})
    assert response.status_code == 422

# determinism


def test_records_reproducible_modulo_runtime(tmp_path):
    cfg = ExperimentConfig(model="geo", i_values=[20], q_values=[3, 4], z=2,
                           solvers=["sp", "bp", "mnf", "pmnf", "random"], master_seed=21)
    for name in ("a", "b"):
        records = experimentService.run_experiment(cfg)
        experimentService.emit_outputs(records, experimentService.aggregate(records), tmp_path / name)
    first = pd.read_csv(tmp_path / "a" / "records.csv").drop(columns=["runtime_ms"])
    second = pd.read_csv(tmp_path / "b" / "records.csv").drop(columns=["runtime_ms"])
    assert first.to_csv(index=False) == second.to_csv(index=False)
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_worker_count_does_not_change_records():
    cfg = ExperimentConfig(i_values=[15], q_values=[3], z=3, solvers=["sp", "random"], master_seed=2)
    serial = experimentService.run_experiment(cfg)
    parallel = experimentService.run_experiment(cfg.model_copy(update={"workers": 2}))
    strip = [r.model_dump(exclude={"runtime_ms"}) for r in serial]
    assert strip == [r.model_dump(exclude={"runtime_ms"}) for r in parallel]

# cli


def test_cli_generate_prints_edge_list():
    result = runner.invoke(cli, ["generate", "--model", "er", "--stations", "12", "--seed", "5"])
    assert result.exit_code == 0
    g = NetworkGraph.parse_edge_list(result.stdout)
    assert g.n == 12


def test_cli_generate_writes_file(tmp_path):
    out = tmp_path / "net.txt"
    result = runner.invoke(cli, ["generate", "--model", "geo", "--stations", "30", "--out", str(out)])
    assert result.exit_code == 0
    assert NetworkGraph.parse_edge_list(out.read_text(encoding="utf-8")).positions is not None


def test_cli_solve_graph_file(tmp_path):
    graph = tmp_path / "star.txt"
    graph.write_text(edge_list(NetworkGraph(5, [(0, k) for k in range(1, 5)])), encoding="utf-8")
    out = tmp_path / "allocation.csv"
    result = runner.invoke(cli, ["solve", "--graph", str(graph), "--pools", "2",
                                 "--solver", "mnf", "--out", str(out)])
    assert result.exit_code == 0
    assert out.read_text(encoding="utf-8") == "station,pool\n0,1\n1,2\n2,2\n3,2\n4,2\n"


def test_cli_solve_generated_network(tmp_path):
    out = tmp_path / "allocation.csv"
    result = runner.invoke(cli, ["solve", "--stations", "20", "--pools", "4", "--solver", "sp",
                                 "--seed", "3", "--out", str(out)])
    assert result.exit_code == 0
    rows = out.read_text(encoding="utf-8").splitlines()
    assert rows[0] == "station,pool"
    assert len(rows) == 21


def test_cli_solve_bad_graph(tmp_path):
    graph = tmp_path / "bad.txt"
    graph.write_text("not a graph\n", encoding="utf-8")
    result = runner.invoke(cli, ["solve", "--graph", str(graph)])
    assert result.exit_code == 1
    result = runner.invoke(cli, ["solve", "--graph", str(tmp_path / "missing.txt")])
    assert result.exit_code == 1


def test_cli_solve_unknown_solver():
    result = runner.invoke(cli, ["solve", "--solver", "dsatur"])
    assert result.exit_code == 2


def test_cli_experiment(tmp_path):
    out = tmp_path / "results"
    result = runner.invoke(cli, ["experiment", "--model", "er", "--stations", "10", "--pools", "3",
                                 "--solver", "sp", "--solver", "mnf", "--z", "2", "--seed", "3",
                                 "--out", str(out)])
    assert result.exit_code == 0
    assert sorted(p.name for p in out.iterdir()) == ["figures.gp", "records.csv", "summary.csv"]
    records = pd.read_csv(out / "records.csv")
    assert len(records) == 4
    assert list(records["solver"]) == ["sp", "mnf", "sp", "mnf"]


def test_cli_experiment_config_file(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text('{"model": "geo", "i_values": [15], "q_values": [3], "z": 1, '
                      '"solvers": ["pmnf"], "mu_values": [-80.0, -75.0]}', encoding="utf-8")
    out = tmp_path / "results"
    result = runner.invoke(cli, ["experiment", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0
    summary = pd.read_csv(out / "summary.csv")
    assert list(summary["mu_dbm"]) == [-80.0, -75.0]


def test_cli_experiment_bad_config(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text("[1, 2]", encoding="utf-8")
    result = runner.invoke(cli, ["experiment", "--config", str(config), "--out", str(tmp_path / "r")])
    assert result.exit_code == 1
    assert not (tmp_path / "r").exists()


def test_cli_hyperbolicity(tmp_path):
    graph = tmp_path / "c4.txt"
    graph.write_text(edge_list(cycle(4)), encoding="utf-8")
    result = runner.invoke(cli, ["hyperbolicity", "--graph", str(graph)])
    assert result.exit_code == 0
    assert "delta=1 components=1 diameter=2" in result.stdout


@pytest.mark.parametrize("samples", ["10", "200"])
def test_cli_hyperbolicity_sampled(tmp_path, samples):
    graph = tmp_path / "k4.txt"
    graph.write_text(edge_list(complete(4)), encoding="utf-8")
    result = runner.invoke(cli, ["hyperbolicity", "--graph", str(graph), "--samples", samples])
    assert result.exit_code == 0
    assert "delta=0 " in result.stdout
