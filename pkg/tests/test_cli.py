import subprocess
import sys

import pytest

from bikripke.cli import main
from bikripke.frame import load, loads
from bikripke.semantics import holds_at


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestParseCommand:
    def test_roundtrip(self, capsys):
        code, out, _ = run(capsys, "parse", "<u>[u]p->[u]<u>p")
        assert code == 0
        assert out.strip() == "<u>[u]p -> [u]<u>p"

    def test_syntax_error_exit_3(self, capsys):
        code, _, err = run(capsys, "parse", "p -> ")
        assert code == 3
        assert "offset" in err


class TestDecideCommand:
    def test_valid_exit_0(self, capsys):
        code, out, _ = run(capsys, "decide", "--theory", "s4.2",
                           "<u>[u]p -> [u]<u>p")
        assert code == 0
        assert out.strip() == "valid"

    def test_invalid_exit_1_with_reloadable_countermodel(self, capsys, tmp_path):
        code, out, _ = run(capsys, "decide", "--theory", "s4.2",
                           "<u>[u]p -> p")
        assert code == 1
        lines = out.splitlines()
        assert lines[0] == "invalid"
        cm = loads("\n".join(lines[1:]) + "\n")
        from bikripke.formula import parse
        assert not holds_at(cm, cm.point, parse("<u>[u]p -> p"))

    def test_unknown_exit_2_on_tiny_budget(self, capsys):
        code, out, _ = run(capsys, "decide", "--theory", "s4.2",
                           "--budget", "1", "<u>[u]p -> p")
        assert code == 2
        assert out.startswith("unknown")


class TestCheckCommand:
    def test_check(self, capsys, tmp_path):
        path = tmp_path / "m.frame"
        run(capsys, "gen", "--kind", "bs", "--buttons", "1", "--switches", "1",
            "-o", str(path))
        code, out, _ = run(capsys, "check", "--frame", str(path), "~[u]b1")
        assert code == 0 and out.strip() == "holds"
        code, out, _ = run(capsys, "check", "--frame", str(path), "[u]b1")
        assert code == 1 and out.strip() == "fails"


class TestGenCommand:
    @pytest.mark.parametrize("args,worlds", [
        (("--kind", "point"), 1),
        (("--kind", "cluster", "--size", "3"), 3),
        (("--kind", "chain", "--height", "4"), 4),
        (("--kind", "bs", "--buttons", "2", "--switches", "1"), 8),
        (("--kind", "powerset", "--buttons", "1", "--classes", "2",
          "--point", "full"), 8),
        (("--kind", "combo", "--variant", "below", "--cluster", "2",
          "--buttons", "1", "--switches", "0"), 3),
    ])
    def test_kinds(self, capsys, tmp_path, args, worlds):
        path = tmp_path / "g.frame"
        code, _, _ = run(capsys, *args, "gen", "-o", str(path)) \
            if False else run(capsys, "gen", *args, "-o", str(path))
        assert code == 0
        obj = load(str(path))
        frame = obj.frame if hasattr(obj, "frame") else obj
        assert frame.n == worlds


class TestMlCommand:
    def test_single_point_down(self, capsys, tmp_path):
        path = tmp_path / "sp.frame"
        run(capsys, "gen", "--kind", "point", "-o", str(path))
        code, out, _ = run(capsys, "ml", "--frame", str(path),
                           "--direction", "down", "--letters", "1",
                           "--size", "4")
        assert code == 0
        body = dict(line.split("=", 1) for line in out.splitlines()
                    if "=" in line)
        assert "pl" in body["matches"].split(",")


class TestControlsCommand:
    def test_bs_family(self, capsys, tmp_path):
        path = tmp_path / "bs.frame"
        run(capsys, "gen", "--kind", "bs", "--buttons", "2", "--switches", "1",
            "-o", str(path))
        code, out, _ = run(capsys, "controls", "--frame", str(path),
                           "--direction", "up", "--buttons", "2",
                           "--switches", "1")
        assert code == 0
        assert "b1;b2" in out and "s1" in out and "certificate=ok" in out


class TestExperimentCommand:
    def test_thm8(self, capsys, tmp_path):
        out_path = tmp_path / "thm8.report"
        code, out, _ = run(capsys, "experiment", "thm8", "--out", str(out_path))
        assert code == 0
        text = out_path.read_text()
        assert "mixed_button_violations=0" in text
        assert "double_s5_points=0" in text
        assert text.splitlines()[-1].startswith("elapsed_ms=")

    def test_reports_reproducible(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(capsys, "experiment", "thm8", "--out", str(a))
        run(capsys, "experiment", "thm8", "--out", str(b))
        strip = lambda p: [l for l in p.read_text().splitlines()
                           if not l.startswith("elapsed_ms=")]
        assert strip(a) == strip(b)


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bikripke.cli", "decide", "--theory", "s5",
         "<u>p -> [u]<u>p"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "valid"
