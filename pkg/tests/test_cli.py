"""Command-line interface: CSV contract, determinism, exit codes."""

import numpy as np
from pytest import approx, raises

import oracles
from nmsse.cli import emit_csv, main, read_bloch_csv
from nmsse.errors import ConfigError

FAST_SSE = ["--ntraj", "16", "--t-final", "0.5", "--dt", "1e-2",
            "--record-stride", "10"]
FAST_REF = ["--t-final", "2.0", "--dt", "1e-2", "--record-stride", "10",
            "--enlarged-dt", "1e-3", "--nmax", "3"]


# ---------------------------------------------------------------------------
# CSV contract


def test_emit_csv_exact_bytes(tmp_path):
    p = tmp_path / "out.csv"
    emit_csv(str(p), "t,x", [np.array([0.0, 0.1]), np.array([1.0, -0.25])])
    want = (b"t,x\n"
            b"0.00000000000e+00,1.00000000000e+00\n"
            b"1.00000000000e-01,-2.50000000000e-01\n")
    assert p.read_bytes() == want


def test_emit_csv_stdout(capsys):
    emit_csv("", "t,x", [np.array([1.5]), np.array([2.0])])
    out = capsys.readouterr().out
    assert out == "t,x\n1.50000000000e+00,2.00000000000e+00\n"


def test_read_bloch_csv_round_trip(tmp_path):
    p = tmp_path / "b.csv"
    times = np.array([0.0, 0.5, 1.0])
    bloch = np.array([[0.0, 0.0, 1.0], [0.1, -0.2, 0.8], [0.2, -0.3, 0.5]])
    se = np.zeros_like(bloch)
    emit_csv(str(p), "t,x,y,z,sx,sy,sz",
             [times, bloch[:, 0], bloch[:, 1], bloch[:, 2],
              se[:, 0], se[:, 1], se[:, 2]])
    t, b = read_bloch_csv(str(p))
    assert np.allclose(t, times)
    assert np.allclose(b, bloch)


def test_read_bloch_csv_requires_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x,y\n0.0,0.1,0.2\n")
    with raises(ConfigError, match="missing column 'z'"):
        read_bloch_csv(str(p))


# ---------------------------------------------------------------------------
# subcommand round trips


def test_run_enlarged_matches_scalar_oracle(tmp_path):
    out = tmp_path / "ref.csv"
    rc = main(["run-enlarged", "--delta", "0", "--chi", "0",
               *FAST_REF, "-o", str(out)])
    assert rc == 0
    t, bloch = read_bloch_csv(str(out))
    want = oracles.undriven_z(t, 1.0, 1.0)
    assert np.max(np.abs(bloch[:, 2] - want)) < 1e-6
    # reference runs advertise zero stderr columns
    raw = np.loadtxt(str(out), delimiter=",", skiprows=1)
    assert np.all(raw[:, 4:] == 0.0)


def test_run_enlarged_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["run-enlarged", *FAST_REF[:-2], "--nmax", "8"]  # driven: more Fock
    assert main([*argv, "-o", str(a)]) == 0
    assert main([*argv, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_sse_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run-sse", *FAST_SSE, "-o", str(a)]) == 0
    assert main(["run-sse", *FAST_SSE, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    t, bloch = read_bloch_csv(str(a))
    assert t[-1] == approx(0.5)
    assert bloch[0] == approx([0.0, 0.0, 1.0])
    raw = np.loadtxt(str(a), delimiter=",", skiprows=1)
    assert np.any(raw[1:, 4:] > 0.0)  # ensemble runs report stderr


def test_run_sse_config_file_and_flag_override(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("ntraj = 16\nt_final = 0.5\ndt = 1e-2\n"
                       "record_stride = 10\nseed = 3\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run-sse", "-c", str(cfgfile), "-o", str(a)]) == 0
    assert main(["run-sse", *FAST_SSE, "--seed", "3", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_postmarkovian_and_quadrature(tmp_path):
    out = tmp_path / "pm.csv"
    rc = main(["run-postmarkovian", *FAST_SSE, "--unravelling", "quadrature",
               "-o", str(out)])
    assert rc == 0
    t, bloch = read_bloch_csv(str(out))
    assert np.all(np.isfinite(bloch))
    # the method knob is fixed for this subcommand
    with raises(SystemExit):
        main(["run-postmarkovian", "--method", "perturbative"])


def test_run_markov_decays(tmp_path):
    out = tmp_path / "mk.csv"
    rc = main(["run-markov", "--delta", "0", "--chi", "0",
               *FAST_REF, "-o", str(out)])
    assert rc == 0
    t, bloch = read_bloch_csv(str(out))
    # z = 2 e^{-gamma t} - 1 for the undriven Lindblad atom
    assert np.allclose(bloch[:, 2], 2.0 * np.exp(-t) - 1.0, atol=1e-8)


def test_compare_subcommand(tmp_path):
    a, b, d = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "d.csv"
    assert main(["run-markov", "--delta", "0", "--chi", "0", *FAST_REF,
                 "-o", str(a)]) == 0
    assert main(["run-enlarged", "--delta", "0", "--chi", "0", *FAST_REF,
                 "-o", str(b)]) == 0
    assert main(["compare", str(a), str(b), "-o", str(d)]) == 0
    with open(d) as fh:
        assert fh.readline().strip() == "t,dx,dy,dz"
    diffs = np.loadtxt(str(d), delimiter=",", skiprows=1)
    assert diffs.shape[1] == 4
    # kappa = 1 memory is far from Markovian: differences must be visible
    assert np.max(np.abs(diffs[:, 3])) > 0.01


def test_noise_check_passes_and_is_deterministic(capsys):
    argv = ["noise-check", "--ntraj", "4000", "--t-final", "2.0",
            "--dt", "1e-2", "--record-stride", "20"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert first.startswith("kind,t,s,")
    assert "alpha," in first and "pseudo," in first
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_noise_check_quadrature(capsys):
    rc = main(["noise-check", "--unravelling", "quadrature", "--ntraj",
               "4000", "--t-final", "2.0", "--dt", "1e-2",
               "--record-stride", "20"])
    assert rc == 0
    assert "beta," in capsys.readouterr().out


def test_markov_check_gate(capsys):
    rc = main(["markov-check", "--t-final", "2.0", "--dt", "1e-2",
               "--record-stride", "10", "--enlarged-dt", "2e-4",
               "--nmax", "4"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "OK" in out and "kappa=100" in out


# ---------------------------------------------------------------------------
# exit codes


def test_exit_code_config_error(tmp_path):
    assert main(["run-sse", "--order", "9"]) == 2
    assert main(["run-sse", "--kernel", "bogus"]) == 2
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("volume = 11\n")
    assert main(["run-sse", "-c", str(cfgfile)]) == 2
    # quadrature refuses kernels with unpaired detuned components
    assert main(["run-sse", "--unravelling", "quadrature",
                 "--kernel", "0.25,1,2"]) == 2


def test_exit_code_numeric_failure():
    # stiff kernel under a coarse step: every trajectory blows up
    rc = main(["run-sse", "--kernel", "10,40,0", "--dt", "0.5",
               "--t-final", "5", "--record-stride", "1", "--ntraj", "8"])
    assert rc == 3
    # drive overflows a two-level mode truncation
    rc = main(["run-enlarged", "--nmax", "1", "--t-final", "2.0",
               "--dt", "1e-2", "--record-stride", "10",
               "--enlarged-dt", "1e-3"])
    assert rc == 3


def test_exit_code_io_error(tmp_path):
    assert main(["run-sse", "-c", str(tmp_path / "absent.cfg")]) == 4
    assert main(["compare", str(tmp_path / "nope.csv"),
                 str(tmp_path / "nada.csv")]) == 4


def test_exit_code_grid_mismatch(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run-markov", "--delta", "0", "--chi", "0", *FAST_REF,
                 "-o", str(a)]) == 0
    assert main(["run-markov", "--delta", "0", "--chi", "0", "--t-final",
                 "1.0", "--dt", "1e-2", "--record-stride", "10",
                 "--enlarged-dt", "1e-3", "-o", str(b)]) == 0
    assert main(["compare", str(a), str(b)]) == 2


def test_unknown_flags_exit_via_argparse():
    with raises(SystemExit) as info:
        main(["run-sse", "--gamma", "2"])
    assert info.value.code == 2
