import math
import zlib

import numpy as np
import pytest

from espsmooth.cli import main


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def field(out, name):
    for line in out.splitlines():
        if line.startswith(name + ":"):
            return line.split(":", 1)[1].split()[0]
    raise KeyError(name)


class TestCompress:
    @pytest.mark.slow
    def test_megabyte_of_zeros(self, tmp_path, capsys):
        src = tmp_path / "zeros.bin"
        src.write_bytes(bytes(1 << 20))
        code, out, _ = run_cli(capsys, "compress", src, tmp_path / "z.esp", "--auto-n")
        assert code == 0
        payload = int(field(out, "payload_bits"))
        assert payload < 0.01 * 8 * (1 << 20)
        code, _, _ = run_cli(capsys, "decompress", tmp_path / "z.esp", tmp_path / "z.out")
        assert code == 0 and (tmp_path / "z.out").read_bytes() == bytes(1 << 20)

    def test_count_warning(self, tmp_path, capsys):
        src = tmp_path / "a.txt"
        src.write_bytes(b"hello world\n" * 20)
        code, _, err = run_cli(capsys, "compress", src, tmp_path / "a.esp", "--schedule", "count", "--lambda", "0.96", "--m", "1")
        assert code == 0
        assert "warning" in err and "0.489796" in err

    def test_no_warning_for_safe_schedule(self, tmp_path, capsys):
        src = tmp_path / "a.txt"
        src.write_bytes(b"abc" * 50)
        code, out, err = run_cli(capsys, "compress", src, tmp_path / "a.esp", "--schedule", "decaying")
        assert code == 0 and err == ""
        assert int(field(out, "original_bits")) == 8 * 150

    def test_missing_input(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "compress", tmp_path / "nope", tmp_path / "out.esp")
        assert code == 2
        assert "nope" in err
        assert not (tmp_path / "out.esp").exists()

    def test_corrupt_container(self, tmp_path, capsys):
        bad = tmp_path / "bad.esp"
        bad.write_bytes(b"garbage")
        code, _, err = run_cli(capsys, "decompress", bad, tmp_path / "out")
        assert code == 3 and "not an ESP container" in err
        assert not (tmp_path / "out").exists()

    def test_corpus_roundtrip(self, tmp_path, capsys, rng):
        text = b"The quick brown fox jumps over the lazy dog.\n" * 200
        corpus = {
            "text.txt": text,
            "binary.bin": rng.integers(0, 256, 20_000, dtype=np.uint8).tobytes(),
            "packed.z": zlib.compress(text + rng.bytes(4000), 9),
            "empty": b"",
            "one": b"\x80",
        }
        for flags in ([], ["--schedule", "decaying"], ["--schedule", "count", "--m", "2"], ["--alpha", "0.99", "--prior", "0.3"]):
            for name, data in corpus.items():
                src = tmp_path / name
                src.write_bytes(data)
                packed, restored = tmp_path / (name + ".esp"), tmp_path / (name + ".out")
                assert run_cli(capsys, "compress", src, packed, *flags)[0] == 0
                assert run_cli(capsys, "decompress", packed, restored)[0] == 0
                assert restored.read_bytes() == data

    def test_identical_invocations(self, tmp_path, capsys):
        src = tmp_path / "a"
        src.write_bytes(b"repeat me" * 100)
        run_cli(capsys, "compress", src, tmp_path / "1.esp")
        run_cli(capsys, "compress", src, tmp_path / "2.esp")
        assert (tmp_path / "1.esp").read_bytes() == (tmp_path / "2.esp").read_bytes()


class TestBounds:
    def test_fixed_auto(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "--schedule", "fixed", "--n", 1000, "--segments", 1, "--pmin", 0.5)
        assert code == 0
        assert float(field(out, "bound_bits")) == pytest.approx(118.0, abs=0.1)
        sqrt_form = 2 * math.pi * math.log2(math.e) / math.sqrt(6) * math.sqrt(1000) + 1
        assert float(field(out, "sqrt_form_bits")) == pytest.approx(sqrt_form, abs=1e-6)
        assert float(field(out, "sqrt_form_bits")) == pytest.approx(118.04, abs=0.02)
        assert float(field(out, "alpha")) == pytest.approx(0.9602, abs=5e-4)

    @pytest.mark.parametrize("flags", [["--schedule", "fixed"], ["--schedule", "decaying"], ["--schedule", "count", "--lambda", "0.9", "--m", "2"]])
    def test_segments_scale(self, capsys, flags):
        one = float(field(run_cli(capsys, "bounds", *flags, "--n", 500)[1], "bound_bits"))
        three = float(field(run_cli(capsys, "bounds", *flags, "--n", 500, "--segments", 3)[1], "bound_bits"))
        assert three == pytest.approx(3 * one, rel=1e-6)

    def test_pmin_rejected(self, capsys):
        code, _, err = run_cli(capsys, "bounds", "--n", 1000, "--pmin", 1.0)
        assert code == 3 and "pmin" in err

    def test_missing_n(self, capsys):
        assert run_cli(capsys, "bounds")[0] == 1

    def test_csv(self, tmp_path, capsys):
        path = tmp_path / "b.csv"
        code, out, _ = run_cli(capsys, "bounds", "--schedule", "decaying", "--n", 50, "--pmin", 0.1, "--csv", path)
        assert code == 0
        lines = path.read_text().splitlines()
        assert lines[0] == "k,bound_bits" and len(lines) == 51
        assert float(lines[-1].split(",")[1]) == pytest.approx(float(field(out, "bound_bits")), rel=1e-6)
        assert float(lines[1].split(",")[1]) == pytest.approx(math.log2(10) + 2 * math.pi * math.log2(math.e) / math.sqrt(3))


class TestSimulate:
    def test_default_reduced(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--out", tmp_path / "r.csv")
        assert code == 0
        assert field(out, "dominance") == "true"
        assert int(field(out, "simulations")) == 7**4 * 10
        assert len((tmp_path / "r.csv").read_text().splitlines()) == 1001

    def test_full_plan(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--full", "--dry-run")
        assert code == 0
        assert int(field(out, "simulations")) == 13_032_100
        assert int(field(out, "grid_values")) == 19

    def test_seed_repeatable(self, tmp_path, capsys):
        flags = ["--n", 200, "--partition", "0,50,200", "--q-step", 0.3, "--repeats", 2, "--seed", 42]
        run_cli(capsys, "simulate", *flags, "--out", tmp_path / "a.csv")
        run_cli(capsys, "simulate", *flags, "--out", tmp_path / "b.csv", "--workers", 2)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("# tiny\npartition = 0,40,100\nq_step = 0.45\nrepeats = 1\nschedule = decaying\n")
        code, out, _ = run_cli(capsys, "simulate", "--config", cfg)
        assert code == 0
        assert field(out, "schedule") == "decaying"
        assert field(out, "simulations") == str(3**3)
        assert field(out, "dominance") == "true"

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("repeats = -1\n")
        assert run_cli(capsys, "simulate", "--config", cfg)[0] == 3
        assert run_cli(capsys, "simulate", "--config", tmp_path / "none.cfg")[0] == 2

    def test_violating_schedule_still_runs(self, capsys):
        code, out, err = run_cli(capsys, "simulate", "--schedule", "count", "--lambda", 0.96, "--n", 100, "--q-step", 0.45, "--repeats", 1)
        assert code == 0 and "warning" in err


class TestEntropy:
    def test_zero_bytes(self, tmp_path, capsys):
        src = tmp_path / "z"
        src.write_bytes(bytes(64))
        code, out, _ = run_cli(capsys, "entropy", src, "--partition", "0,100,512")
        assert code == 0
        assert float(field(out, "entropy_bits")) == 0.0 and float(field(out, "pws_bits")) == 0.0

    def test_alternating(self, tmp_path, capsys):
        src = tmp_path / "a"
        src.write_bytes(b"\x55" * 32)
        _, out, _ = run_cli(capsys, "entropy", src)
        assert float(field(out, "entropy_bits")) == 256.0
        assert int(field(out, "bits")) == 256

    def test_bad_partition(self, tmp_path, capsys):
        src = tmp_path / "a"
        src.write_bytes(b"\x55" * 32)
        code, _, err = run_cli(capsys, "entropy", src, "--partition", "0,100,200")
        assert code == 3 and "256" in err


def test_unknown_flag(capsys):
    code, _, err = run_cli(capsys, "bounds", "--n", 10, "--bogus")
    assert code == 1 and "usage" in err


def test_no_subcommand(capsys):
    assert run_cli(capsys)[0] == 1
