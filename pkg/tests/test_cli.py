import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from protomdpc.cli import EXIT_DECODING, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from protomdpc.simulation import read_results

TOY = ["--base", "[[1,3,3],[2,1,1]]", "--state-columns", "0", "--Q", "101"]


def _write_plaintext(path, Q, seed=1):
    u = np.random.default_rng(seed).integers(0, 2, Q, dtype=np.uint8)
    path.write_bytes(np.packbits(u, bitorder="little").tobytes())
    return u


class TestKeygen:
    def test_deterministic_files(self, tmp_path):
        a = str(tmp_path / "a")
        b = str(tmp_path / "b")
        for prefix in (a, b):
            rc = main(["keygen", *TOY, "--seed", "7", "--out-prefix", prefix])
            assert rc == EXIT_OK
        assert (tmp_path / "a.priv.json").read_bytes() == (tmp_path / "b.priv.json").read_bytes()
        assert (tmp_path / "a.pub.json").read_bytes() == (tmp_path / "b.pub.json").read_bytes()

    def test_usage_error_exit_code(self):
        assert main(["keygen", "--out-prefix", "/tmp/x", "--Q", "13"]) == EXIT_USAGE

    def test_seed_echo(self, tmp_path, capsys):
        rc = main(["keygen", *TOY, "--out-prefix", str(tmp_path / "k")])
        assert rc == EXIT_OK
        assert "seed:" in capsys.readouterr().err


class TestEncryptDecryptRoundtrip:
    def test_roundtrip_and_failure_exit_codes(self, tmp_path):
        prefix = str(tmp_path / "k")
        assert main(["keygen", *TOY, "--seed", "5", "--out-prefix", prefix]) == EXIT_OK
        pt = tmp_path / "pt.bin"
        u = _write_plaintext(pt, 101)
        ct = tmp_path / "ct.bin"
        rc = main([
            "encrypt", "--key", prefix + ".pub.json", "--in", str(pt), "--out", str(ct),
            "--seed", "9", "--error-weight", "2",
        ])
        assert rc == EXIT_OK
        out = tmp_path / "rt.bin"
        rc = main([
            "decrypt", "--key", prefix + ".priv.json", "--in", str(ct), "--out", str(out),
            "--algorithm", "E", "--omega", "2",
        ])
        assert rc == EXIT_OK
        assert out.read_bytes() == pt.read_bytes()

    def test_decrypt_failure_exit_2(self, tmp_path):
        prefix = str(tmp_path / "k")
        assert main(["keygen", *TOY, "--seed", "5", "--out-prefix", prefix]) == EXIT_OK
        pt = tmp_path / "pt.bin"
        _write_plaintext(pt, 101)
        ct = tmp_path / "ct.bin"
        # e = Q: half of the ciphertext bits flipped, guaranteed failure
        assert main([
            "encrypt", "--key", prefix + ".pub.json", "--in", str(pt), "--out", str(ct),
            "--seed", "9", "--error-weight", "101",
        ]) == EXIT_OK
        rc = main([
            "decrypt", "--key", prefix + ".priv.json", "--in", str(ct),
            "--out", str(tmp_path / "rt.bin"), "--algorithm", "E", "--omega", "2",
            "--max-iterations", "20",
        ])
        assert rc == EXIT_DECODING

    def test_hex_mode(self, tmp_path):
        prefix = str(tmp_path / "k")
        assert main(["keygen", *TOY, "--seed", "5", "--out-prefix", prefix]) == EXIT_OK
        pt = tmp_path / "pt.hex"
        u = np.random.default_rng(2).integers(0, 2, 101, dtype=np.uint8)
        pt.write_bytes(np.packbits(u, bitorder="little").tobytes().hex().encode())
        ct = tmp_path / "ct.hex"
        assert main([
            "encrypt", "--key", prefix + ".pub.json", "--in", str(pt), "--out", str(ct),
            "--seed", "3", "--error-weight", "0", "--hex",
        ]) == EXIT_OK
        out = tmp_path / "rt.hex"
        assert main([
            "decrypt", "--key", prefix + ".priv.json", "--in", str(ct), "--out", str(out),
            "--algorithm", "E", "--omega", "2", "--hex",
        ]) == EXIT_OK
        assert out.read_text().strip() == pt.read_text().strip()

    def test_missing_key_file_exit_3(self, tmp_path):
        pt = tmp_path / "pt.bin"
        _write_plaintext(pt, 101)
        rc = main([
            "encrypt", "--key", str(tmp_path / "nope.json"), "--in", str(pt),
            "--out", str(tmp_path / "ct.bin"), "--seed", "1",
        ])
        assert rc == EXIT_IO


class TestSimulate:
    def test_csv_output(self, tmp_path):
        out = tmp_path / "r.csv"
        rc = main([
            "simulate", *TOY, "--algorithm", "E", "--omega", "2", "--weights", "0,2",
            "--trials", "8", "--seed", "11", "--out", str(out), "--max-iterations", "20",
        ])
        assert rc == EXIT_OK
        rows = read_results(out)
        assert [r["e"] for r in rows] == [0, 2]
        assert rows[0]["failures"] == 0
        assert rows[0]["ensemble"] == "custom"


class TestThreshold:
    def test_toy_threshold_csv(self, tmp_path, capsys):
        rc = main([
            "threshold", "--base", "[[3,3]]", "--state-columns", "", "--Q", "1000",
            "--algorithm", "E", "--omega", "1", "--tol", "1e-3",
        ])
        assert rc == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        row = next(csv.DictReader(lines))
        assert 0.0 < float(row["delta_star"]) < 0.5
        assert row["algorithm"] == "E"

    @pytest.mark.slow
    def test_table1_a14_value(self, capsys):
        rc = main(["threshold", "--ensemble", "A", "--algorithm", "E", "--omega", "14"])
        assert rc == EXIT_OK
        row = next(csv.DictReader(capsys.readouterr().out.strip().splitlines()))
        assert abs(float(row["n_delta_star"]) - 106) <= 2


class TestSecurity:
    def test_report_values(self, capsys):
        rc = main([
            "security", "--ensemble", "A", "--Q", "4801", "--error-weight", "84",
        ])
        assert rc == EXIT_OK
        rows = list(csv.DictReader(capsys.readouterr().out.strip().splitlines()))
        by_attack = {r["attack"]: float(r["bits"]) for r in rows}
        assert abs(by_attack["key distinguishing"] - 80.6) <= 3
        assert abs(by_attack["decoding"] - 81.0) <= 3
        assert round(by_attack["key space"]) == 715

    def test_json_flag(self, capsys):
        rc = main([
            "security", "--ensemble", "C", "--Q", "4801", "--error-weight", "102", "--json",
        ])
        assert rc == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 3


class TestInspect:
    def test_ensemble(self, capsys):
        assert main(["inspect", "--ensemble", "C", "--Q", "4801"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "2^446" in out
        assert "row-weight bound: 90" in out

    def test_key(self, tmp_path, capsys):
        prefix = str(tmp_path / "k")
        main(["keygen", *TOY, "--seed", "5", "--out-prefix", prefix])
        capsys.readouterr()
        assert main(["inspect", "--key", prefix + ".priv.json"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "punctured" in out
        assert "degree profile" in out


class TestConfigFile:
    def test_config_defaults_and_flag_override(self, tmp_path):
        cfg = tmp_path / "pm.ini"
        cfg.write_text(
            "[protomdpc]\nbase = [[1,3,3],[2,1,1]]\nstate-columns = 0\nQ = 101\n"
            "trials = 6\nweights = 0\nalgorithm = E\nomega = 2\nseed = 4\n"
            "max-iterations = 20\n"
        )
        out = tmp_path / "r.csv"
        rc = main(["--config", str(cfg), "simulate", "--out", str(out)])
        assert rc == EXIT_OK
        rows = read_results(out)
        assert rows[0]["trials"] == 6
        # a flag overrides the config value
        rc = main(["--config", str(cfg), "simulate", "--trials", "3", "--out", str(out)])
        assert rc == EXIT_OK
        assert read_results(out)[0]["trials"] == 3

    def test_config_env_var(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "pm.ini"
        cfg.write_text("[protomdpc]\nQ = 977\n")
        monkeypatch.setenv("PROTOMDPC_CONFIG", str(cfg))
        assert main(["inspect", "--ensemble", "A"]) == EXIT_OK
        assert "Q=977" in capsys.readouterr().out

    def test_missing_config_is_usage_error(self):
        assert main(["--config", "/does/not/exist.ini", "inspect", "--ensemble", "A"]) == EXIT_USAGE


class TestConsoleScript:
    def test_entry_point_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "protomdpc.cli", "inspect", "--ensemble", "B", "--Q", "4801"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "2^327.8" in proc.stdout
