"""
Integration tests for the command line and the complete pipeline.
"""

import json
import os
import shutil
import tempfile
from fractions import Fraction
from unittest.mock import Mock, patch

import pytest

import main as cli
from src.pipeline.moduli import tasks
from src.pipeline.moduli.engine import TraceEngine
from src.pipeline.moduli.errors import PrecisionExhaustedError
from src.pipeline.moduli.modfunc import CuspExpansion
from src.pipeline.moduli.models import Config


@pytest.fixture(autouse=True)
def private_cache(monkeypatch, tmp_path):
    """Point SMT_CACHE_DIR at a temporary directory."""
    monkeypatch.setenv("SMT_CACHE_DIR", str(tmp_path / "cache"))


def _run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


class TestCommandLine:
    """Test main() end to end."""

    def test_forms(self, capsys):
        """Test the class table of discriminant -20."""
        code, out = _run(capsys, "forms", "--disc", "20", "--level", "1")
        assert code == cli.EXIT_OK
        rows = json.loads(out)
        assert len(rows) == 2

    def test_cusps_csv(self, capsys):
        """Test CSV output of the cusps of Gamma_0(4)."""
        code, out = _run(capsys, "cusps", "--level", "4", "--format", "csv")
        assert code == cli.EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "alpha_over_beta,width,beta,eps,sigma"
        assert len(lines) == 4

    def test_cusps_pretty(self, capsys):
        """Test the aligned table output."""
        code, out = _run(capsys, "cusps", "--level", "2", "--format", "pretty")
        assert code == cli.EXIT_OK
        assert "alpha_over_beta" in out.splitlines()[0]
        assert len(out.strip().splitlines()) == 3

    def test_trace_index(self, capsys):
        """Test a single trace as a JSON table."""
        code, out = _run(capsys, "trace", "--index", "3", "--no-cache")
        assert code == cli.EXIT_OK
        document = json.loads(out)
        assert document["N"] == 1
        assert [(row["m"], row["value"]) for row in document["entries"]] == [(3, "-248")]

    def test_trace_range_is_cached(self, capsys, tmp_path):
        """Test a range run fills the cache directory."""
        code, out = _run(capsys, "trace", "--range", "3", "4")
        assert code == cli.EXIT_OK
        assert [row["value"] for row in json.loads(out)["entries"]] == ["-248", "492"]
        assert list((tmp_path / "cache").glob("*/*.json"))

    def test_twisted_trace(self, capsys):
        """Test the chi_5 trace at 20."""
        code, out = _run(capsys, "trace", "--index", "20", "--delta", "5", "--no-cache")
        assert code == cli.EXIT_OK
        assert json.loads(out)["entries"][0]["value"] == "565760"

    def test_series(self, capsys):
        """Test the generating series document."""
        code, out = _run(capsys, "series", "--max", "4", "--no-cache")
        assert code == cli.EXIT_OK
        assert json.loads(out) == {"prec": 5, "terms": [[-1, "1"], [0, "-2"], [3, "-248"], [4, "492"]]}

    def test_series_to_file_then_sieve(self, capsys, tmp_path):
        """Test --out followed by sieve --in."""
        series_file = tmp_path / "series.json"
        code, _ = _run(capsys, "series", "--max", "8", "--no-cache", "--out", str(series_file))
        assert code == cli.EXIT_OK

        code, out = _run(capsys, "sieve", "--t", "3", "--in", str(series_file))
        assert code == cli.EXIT_OK
        kept = [n for n, _ in json.loads(out)["terms"]]
        assert kept == [-1, 8]

    def test_congruence_scan(self, capsys):
        """Test a scan with stubbed traces reports one prime."""
        with patch('src.pipeline.moduli.engine.certified_trace', return_value=(Fraction(3), 0.0)):
            code, out = _run(capsys, "congruence-scan", "--p", "3", "--t", "3", "--n-max", "8", "--no-cache")
        assert code == cli.EXIT_OK
        document = json.loads(out)
        assert document["params"]["p"] == 3
        assert [report["r"] for report in document["reports"]] == [107]
        assert document["reports"][0]["verdict"] is True

    def test_congruence_scan_without_congruence(self, capsys):
        """Test a scan with no true verdict exits with 1."""
        with patch('src.pipeline.moduli.engine.certified_trace', return_value=(Fraction(1), 0.0)):
            code, out = _run(capsys, "congruence-scan", "--p", "3", "--t", "3", "--n-max", "8", "--no-cache")
        assert code == cli.EXIT_VERIFY_FAILED
        assert json.loads(out)["reports"][0]["verdict"] is False

    def test_verify(self, capsys):
        """Test a passing verification case exits with 0."""
        code, out = _run(capsys, "verify", "--case", "negative-squares", "--max-m", "3", "--no-cache")
        assert code == cli.EXIT_OK
        assert json.loads(out)["passed"] is True

    def test_verify_alias(self, capsys):
        """Test the alternate case name is accepted on the command line."""
        code, out = _run(capsys, "verify", "--case", "prop43", "--max-m", "3", "--no-cache")
        assert code == cli.EXIT_OK
        assert json.loads(out)["case"] == "negative-squares"

    @pytest.mark.parametrize("argv", [
        ["trace", "--index", "3", "--delta", "9"],
        ["trace", "--index", "3", "--level", "2", "--delta", "5"],
        ["trace", "--index", "3", "--f", "{broken"],
        ["sieve", "--t", "3", "--in", "/nonexistent/series.json"],
        ["forms", "--disc", "5"],
        ["trace", "--index", "3", "--bits", "8192"],
    ])
    def test_invalid_input(self, capsys, argv):
        """Test invalid input exits with 2."""
        code, _ = _run(capsys, *argv)
        assert code == cli.EXIT_INVALID_INPUT

    def test_precision_exhausted(self, capsys):
        """Test an exhausted precision loop exits with 3."""
        error = PrecisionExhaustedError("no certified value", bits=4096)
        with patch('src.pipeline.moduli.engine.certified_trace', side_effect=error):
            code, _ = _run(capsys, "trace", "--index", "3", "--no-cache")
        assert code == cli.EXIT_PRECISION


    def test_short_expansion_is_not_a_verification_failure(self, capsys):
        """Test an expansion read past its range exits with 2."""
        short = CuspExpansion(prec=Fraction(0))
        with patch('src.pipeline.moduli.engine.certified_trace', side_effect=lambda *a, **k: short.coefficient(1)):
            code, _ = _run(capsys, "trace", "--index", "3", "--no-cache")
        assert code == cli.EXIT_INVALID_INPUT


class TestPipelineIntegration:
    """Integration tests for the complete pipeline."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_full_pipeline_flow(self):
        """Test the task chain with XCom hand-offs and a stubbed scan."""
        engine = TraceEngine(Config(cache_dir=os.path.join(self.temp_dir, "cache")))
        pulled = {}
        ti = Mock()
        ti.xcom_pull.side_effect = lambda task_ids: pulled[task_ids]

        with patch.object(tasks, '_engine', engine):
            # Step 1: traces for the series through q^8
            pulled['build_trace_table'] = tasks.build_trace_table_task(function='builtin:J', level=1, delta=1, d_max=8)
            assert [row["m"] for row in pulled['build_trace_table']["entries"]] == [-1, 3, 4, 7, 8]

            # Step 2: the generating series
            pulled['assemble_series'] = tasks.assemble_series_task(ti=ti, d_max=8)
            assert pulled['assemble_series']["terms"][:2] == [[-1, "1"], [0, "-2"]]

            # Step 3: sieve
            pulled['sieve_series'] = tasks.sieve_series_task(ti=ti, t=3)
            assert [n for n, _ in pulled['sieve_series']["terms"]] == [-1, 8]

            # Step 4: congruence scan with stubbed traces
            with patch('src.pipeline.moduli.engine.certified_trace', return_value=(Fraction(6), 0.0)):
                pulled['congruence_scan'] = tasks.congruence_scan_task(ti=ti, p=3, t=3, n_max=8)
            assert pulled['congruence_scan'][0]["verdict"] is True

            # Step 5: save
            output_file = os.path.join(self.temp_dir, "report.json")
            series_file = os.path.join(self.temp_dir, "sieved.json")
            saved_file = tasks.save_report_task(ti=ti, output_file=output_file, series_file=series_file)

        assert saved_file == output_file
        with open(output_file, 'r') as f:
            data = json.load(f)
        assert data[0]["r"] == 107
        assert [c["n"] for c in data[0]["checked"]] == [1, 4, 7]
        with open(series_file, 'r') as f:
            assert json.load(f)["prec"] == 9
