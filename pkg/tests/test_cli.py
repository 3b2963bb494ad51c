import csv
import io
import math

import numpy as np
import pytest

from kerrmetro import __version__
from kerrmetro.cli import SweepSpec, UsageError, main
from kerrmetro.estimation import fit_scaling_exponent


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse(text):
    """(comment lines, data rows as dicts, fit rows as dicts)."""
    comments, blocks, current = [], [], None
    for line in text.splitlines():
        if line.startswith("#"):
            comments.append(line)
            current = None
            continue
        if current is None:
            current = []
            blocks.append(current)
        current.append(line)
    tables = [list(csv.DictReader(io.StringIO("\n".join(b)))) for b in blocks]
    return comments, tables[0], tables[1] if len(tables) > 1 else []


def col(rows, key, quad=None):
    return np.array([float(r[key]) for r in rows if quad is None or r["quad"] == quad])


@pytest.fixture
def conf(tmp_path):
    def write(text):
        path = tmp_path / "run.conf"
        path.write_text(text)
        return str(path)

    return write


class TestSweepSpec:
    def test_parse(self):
        s = SweepSpec.parse("n:1e5:1e7:3:log")
        assert s.values() == pytest.approx([1e5, 1e6, 1e7], rel=1e-14)
        assert SweepSpec.parse("t:0:1:3:lin").values() == [0.0, 0.5, 1.0]

    @pytest.mark.parametrize("text", ["n:1:2:1:lin", "n:2:1:3:lin", "n:0:1:3:log", "x:0:1:3:lin", "n:0:1:3", "n:a:1:3:lin", "n:0:1:3:sqrt"])
    def test_invalid(self, text):
        with pytest.raises(UsageError):
            SweepSpec.parse(text)


class TestParams:
    def test_reference_table(self, capsys):
        code, out, err = run(capsys, "params")
        assert code == 0 and "warning" not in err
        derived = {line.split()[0]: float(line.split()[-2]) for line in out.splitlines()[1:11]}
        assert derived["dx"] == pytest.approx(2.4e-13, rel=0.05)
        assert derived["gamma"] == pytest.approx(1.6e-4, rel=0.05)
        assert derived["kappa"] == pytest.approx(3.7e5, rel=0.05)
        assert derived["Gamma_a"] == pytest.approx(4.7e3, rel=0.05)
        assert "strong_damping" in out and "yes" in out

    def test_missing_key(self, capsys, conf):
        code, _, err = run(capsys, "params", "--config", conf("length = 2e-6\nn = 1\nt = 1\n"))
        assert code == 2
        assert "width" in err

    def test_inconsistent_chi_warns(self, capsys, conf, tmp_path):
        from kerrmetro.config import REFERENCE_CONFIG, format_config

        text = format_config({**REFERENCE_CONFIG, "critical_amplitude": 0.2e-9})
        code, _, err = run(capsys, "params", "--config", conf(text), "--out", str(tmp_path / "p.csv"))
        assert code == 0 and "warning" in err
        assert (tmp_path / "p.csv").read_text().startswith("# kerrmetro")


class TestMoments:
    def test_columns_and_header(self, capsys):
        code, out, _ = run(capsys, "moments", "--sweep", "gamma:0:1e-4:2:lin")
        assert code == 0
        comments, rows, _ = parse(out)
        assert comments[0].startswith(f"# kerrmetro {__version__} moments")
        for key in ("n=", "gamma=", "Gamma_a=", "t=", "chi=", "sweep=gamma:0:1e-4:2:lin"):
            assert key in comments[0]
        assert list(rows[0]) == ["n", "gamma", "beta", "Gamma_a", "Gamma_b", "t", "quad", "mean", "variance", "regime"]
        assert len(rows) == 2 * 4

    def test_fringe_period(self, capsys, conf):
        path = conf("n = 1e7\nt = 1e-3\ngamma = 0\nbeta = 0\nGamma = 0\n")
        code, out, _ = run(capsys, "moments", "--config", path, "--quad", "x+", "--sweep", "gamma:0:2e-3:4001:lin")
        assert code == 0
        _, rows, _ = parse(out)
        mean = col(rows, "mean")
        phase = col(rows, "gamma") * 1e7 * 1e-3
        assert {r["regime"] for r in rows} == {"no_damping"}
        peaks = [i for i in range(1, len(mean) - 1) if mean[i] > mean[i - 1] and mean[i] >= mean[i + 1]]
        assert len(peaks) >= 2
        assert np.allclose(np.diff(phase[peaks]), 2 * math.pi, rtol=2e-3)

    def test_strong_damping_reaches_vacuum_noise(self, capsys, conf):
        path = conf("n = 10\nt = 1\ngamma = 0.05\nbeta = 0\nGamma = 1000\n")
        code, out, _ = run(capsys, "moments", "--config", path, "--regime", "general")
        _, rows, _ = parse(out)
        assert np.allclose(col(rows, "variance"), 1.0, atol=1e-3)

    def test_auto_regime_is_recorded(self, capsys):
        code, out, _ = run(capsys, "moments", "--sweep", "Gamma:0:4700:2:lin", "--quad", "y+")
        _, rows, _ = parse(out)
        assert [r["regime"] for r in rows] == ["no_damping", "strong_damping"]

    def test_strong_damping_requires_damping(self, capsys, conf):
        path = conf("n = 10\nt = 1\ngamma = 0.05\nGamma = 0\n")
        code, _, err = run(capsys, "moments", "--config", path, "--regime", "strong-damping")
        assert code == 2 and "Gamma" in err

    def test_bad_sweep(self, capsys):
        code, _, err = run(capsys, "moments", "--sweep", "n:5:1:3:lin")
        assert code == 2 and "MIN < MAX" in err


class TestPrecision:
    @staticmethod
    def minima(rows, quad):
        d = col(rows, "delta", quad)
        ph = col(rows, "gamma", quad) * 1e4
        return ph[[i for i in range(1, len(d) - 1) if d[i] < d[i - 1] and d[i] <= d[i + 1]]]

    def sweep(self, capsys, conf, *extra):
        path = conf("n = 1e7\nt = 1e-3\ngamma = 0\nbeta = 0\nGamma = 0\n")
        code, out, _ = run(capsys, "precision", "--config", path, "--sweep", "gamma:1e-5:6e-4:1200:lin", *extra)
        assert code == 0
        return parse(out)[1]

    def test_interleaved_minima(self, capsys, conf):
        rows = self.sweep(capsys, conf)
        assert {r["regime"] for r in rows} == {"no_damping"}
        mx, my = self.minima(rows, "X+"), self.minima(rows, "Y+")
        merged = sorted([(p, "x") for p in mx] + [(p, "y") for p in my])
        labels = [k for _, k in merged]
        assert len(labels) >= 3 and all(a != b for a, b in zip(labels, labels[1:]))
        assert np.allclose(np.diff([p for p, _ in merged]), math.pi / 2, atol=0.01)

    def test_general_path_minima_still_interleave(self, capsys, conf):
        # growing quadrature noise pulls each minimum toward smaller phase,
        # but the two families keep alternating
        rows = self.sweep(capsys, conf, "--regime", "general")
        mx, my = self.minima(rows, "X+"), self.minima(rows, "Y+")
        merged = sorted([(p, "x") for p in mx] + [(p, "y") for p in my])
        labels = [k for _, k in merged]
        assert len(labels) >= 3 and all(a != b for a, b in zip(labels, labels[1:]))

    def test_fit_block(self, capsys, conf):
        path = conf("n = 1e7\nt = 1e-3\ngamma = 1e-4\nbeta = 0\nGamma = 0\n")
        code, out, _ = run(
            capsys, "precision", "--config", path, "--regime", "general", "--sweep", "n:1e5:1e7:21:log", "--fit"
        )
        assert code == 0
        comments, rows, fits = parse(out)
        assert any(c.startswith("# fit") for c in comments)
        by_quad = {f["quad"]: f for f in fits}
        assert set(by_quad) == {"X+", "X-", "Y+", "Y-"}
        for quad in ("X+", "Y+"):
            lib = fit_scaling_exponent(zip(col(rows, "n", quad), col(rows, "delta", quad)))
            assert float(by_quad[quad]["slope"]) == pytest.approx(lib.slope, rel=1e-12)
            assert int(by_quad[quad]["points_used"]) == 21
        assert float(by_quad["X+"]["slope"]) == pytest.approx(-2.5, abs=0.1)

    def test_infinite_point_refuses_fit(self, capsys, conf):
        path = conf("n = 1e7\nt = 1e-3\ngamma = 0\nbeta = 0\nGamma = 0\n")
        code, out, err = run(capsys, "precision", "--config", path, "--quad", "x+", "--regime", "general", "--fit")
        assert code == 3 and "fit impossible" in err
        _, rows, _ = parse(out)
        assert rows[0]["delta"] == "inf"

    def test_fit_needs_n_sweep(self, capsys):
        code, _, _ = run(capsys, "precision", "--sweep", "t:1e-3:2e-3:3:lin", "--fit")
        assert code == 2


class TestOracleCheck:
    def test_exact_path_passes(self, capsys):
        code, out, _ = run(capsys, "oracle-check", "--paths", "exact")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 37 and all(l.startswith("PASS") for l in lines)
        assert sum("revival_err" in l for l in lines) == 12

    def test_tiny_cutoff(self, capsys):
        code, _, err = run(capsys, "oracle-check", "--cutoff", "3")
        assert code == 4 and "cutoff" in err


class TestFigdata:
    def test_figure_4_boundaries(self, capsys):
        code, out, _ = run(capsys, "figdata", "4")
        assert code == 0
        _, rows, _ = parse(out)
        free = [r for r in rows if float(r["Gamma_a"]) == 0]
        for quad, expected in (("X+", [200]), ("Y+", [100, 300])):
            d = col(free, "delta", quad)
            peaks = [i for i in range(1, len(d) - 1) if d[i] >= d[i - 1] and d[i] >= d[i + 1]]
            assert peaks == expected
            phases = col(free, "gamma", quad) * 1e7 * 1e-3
            assert np.allclose(phases[peaks], np.array(expected) * math.pi / 200, atol=1e-12)
        x = col(free, "delta", "X+")
        assert x[0] == math.inf and x[-1] > x[-2]
        assert {float(r["Gamma_a"]) for r in rows} == {0.0, 4700.0}

    def test_figure_5_range(self, capsys):
        code, out, _ = run(capsys, "figdata", "5")
        assert code == 0
        _, rows, fits = parse(out)
        phase = col(rows, "n") * col(rows, "gamma") * col(rows, "t")
        assert phase.max() <= 1 + 1e-12 and phase.min() == pytest.approx(0.01)
        assert {f["Gamma_a"] for f in fits} == {"0", "470", "4700"}

    @pytest.mark.parametrize("fig", ["2", "3"])
    def test_grid_figures(self, capsys, fig):
        code, out, _ = run(capsys, "figdata", fig, "--quad", "x+")
        _, rows, _ = parse(out)
        assert code == 0 and len(rows) == 21 * 201
        heavy = [r for r in rows if float(r["Gamma"]) == 9400.0]
        assert np.allclose(col(heavy, "variance"), 1.0, atol=1e-2)

    def test_unknown_figure(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["figdata", "7"])
        assert info.value.code == 2


class TestDeterminism:
    ARGS = ["precision", "--sweep", "n:1e5:1e7:9:log", "--fit"]

    def test_repeated_runs_identical(self, tmp_path, capsys):
        outputs = []
        for i, threads in enumerate((1, 1, 3)):
            path = tmp_path / f"run{i}.csv"
            assert main(self.ARGS + ["--threads", str(threads), "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_seventeen_digits(self, capsys):
        _, out, _ = run(capsys, "moments", "--quad", "x+")
        _, rows, _ = parse(out)
        assert float(rows[0]["mean"]) == float(repr(float(rows[0]["mean"])))
        assert len(rows[0]["mean"].replace(".", "").lstrip("0")) >= 15
