import json

import pytest
from sqlmodel import Session, SQLModel, create_engine, select
from sqlmodel.pool import StaticPool

from app.cli import record_run, run
from app.models import ExperimentRun, ExperimentSpec


@pytest.fixture(name="engine")
def engine_fixture(monkeypatch):
    """Motor SQLite en memoria en lugar del registro configurado."""
    engine = create_engine(
        "sqlite://",
        connect_args={"check_same_thread": False},
        poolclass=StaticPool,
    )
    monkeypatch.setattr("app.database.engine", engine)
    return engine


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0], lines[1].split(","), [line.split(",") for line in lines[2:]]


class TestOutputs:
    """Tests para los formatos de salida."""

    def test_csv_header(self, tmp_path):
        """Test: CSV con cabecera '# ' y parámetros."""
        out = tmp_path / "resolvent.csv"
        code = run(["resolvent", "--theta", "3.141592653589793", "1.0", "--out", str(out)])
        assert code == 0
        header, columns, rows = read_csv(out)
        assert header.startswith("# ")
        parameters = json.loads(header[2:])
        assert parameters["command"] == "resolvent"
        assert parameters["parameters"]["theta"] == [3.141592653589793, 1.0]
        assert columns == ["theta", "bound", "two_over_theta_sq"]
        assert float(rows[0][1]) == pytest.approx(0.5)

    def test_json_report(self, tmp_path):
        """Test: JSON con bloque 'parameters'."""
        out = tmp_path / "spectrum.json"
        assert run(["--seed", "7", "spectrum", "--re", "0.5", "--out", str(out)]) == 0
        document = json.loads(out.read_text(encoding="utf-8"))
        assert document["parameters"]["seed"] == 7
        assert document["parameters"]["parameters"]["re"] == 0.5
        assert document["verdict"]["location"] == "interior"

    def test_table_as_json(self, tmp_path):
        """Test: una tabla con salida .json lleva columnas y filas."""
        out = tmp_path / "talpha.json"
        assert run(["talpha", "--alpha", "0.25", "--nmax", "2", "--out", str(out)]) == 0
        document = json.loads(out.read_text(encoding="utf-8"))
        assert document["columns"] == ["n", "alpha", "bound"]
        assert document["rows"][0][2] == pytest.approx(1.25 / 0.75)

    def test_stdout(self, capsys):
        """Test: sin --out se escribe en stdout."""
        assert run(["laguerre", "eval", "--n", "1", "--t", "0", "2"]) == 0
        output = capsys.readouterr().out
        assert output.startswith("# ")
        assert "t,value" in output

    def test_deterministic(self, tmp_path):
        """Test: misma entrada, mismo archivo byte a byte."""
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            argv = ["orbit", "--sequence", "inv-square", "--N", "64", "--nmax", "8", "--out", str(path)]
            assert run(argv) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_sequence_file(self, tmp_path):
        """Test: secuencia leída de JSON y rellenada con el límite."""
        source = tmp_path / "x.json"
        source.write_text(json.dumps({"prefix": [0.0, 0.5, 1.0 / 3.0], "limit": 0.0}), encoding="utf-8")
        out = tmp_path / "pre.json"
        assert run(["preimage", "--input", str(source), "--N", "8", "--out", str(out)]) == 0
        document = json.loads(out.read_text(encoding="utf-8"))
        assert "limit_uncertainty" in document
        assert document["membership"]["status"] == "inconclusive"


class TestExitCodes:
    """Tests para los códigos de salida."""

    def test_usage_error(self, capsys):
        """Test: falta --input/--sequence."""
        assert run(["orbit"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_help(self):
        """Test: --help sale con 0."""
        assert run(["--help"]) == 0

    def test_version(self, capsys):
        """Test: --version imprime nombre y versión."""
        assert run(["--version"]) == 0
        assert "1.0.0" in capsys.readouterr().out

    def test_invalid_input(self):
        """Test: theta = 0 es entrada inválida."""
        assert run(["resolvent", "--theta", "0"]) == 1

    def test_missing_file(self, tmp_path):
        """Test: archivo inexistente."""
        assert run(["range-check", "--input", str(tmp_path / "missing.json")]) == 1

    def test_numerical_failure(self, capsys):
        """Test: integral de Borel divergente sale con 2."""
        assert run(["borel", "integral", "--name", "ones"]) == 2
        assert "numerical failure" in capsys.readouterr().err


class TestLedger:
    """Tests para el registro de ejecuciones desde la línea de comandos."""

    def test_record_flag(self, engine, tmp_path):
        """Test: --record guarda comando, parámetros y código."""
        out = tmp_path / "spec.json"
        assert run(["--record", "--seed", "3", "spectrum", "--re", "2", "--out", str(out)]) == 0
        with Session(engine) as session:
            runs = session.exec(select(ExperimentRun)).all()
        assert len(runs) == 1
        assert runs[0].command == "spectrum"
        assert runs[0].seed == 3
        assert json.loads(runs[0].parameters)["re"] == 2.0

    def test_record_never_raises(self, engine, monkeypatch):
        """Test: un fallo del registro sólo se registra en el log."""

        def broken():
            raise RuntimeError("disk full")

        monkeypatch.setattr("app.database.create_db_and_tables", broken)
        record_run(ExperimentSpec(command="orbit"), 0)
        with Session(engine) as session:
            SQLModel.metadata.create_all(engine)
            assert session.exec(select(ExperimentRun)).all() == []
