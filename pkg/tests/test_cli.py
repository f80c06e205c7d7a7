"""CLI surface: parsing, env fallbacks, exit codes, subcommand behavior."""

import socket
import subprocess
import sys

import numpy as np
import pytest

from emgwire import cli


def run_cli(argv, **kwargs):
    return subprocess.run([sys.executable, "-m", "emgwire.cli", *argv],
                          capture_output=True, text=True, timeout=120, **kwargs)


class TestThroughputCommand:
    def test_frame_bits_240(self, capsys):
        assert cli.main(["throughput", "--baud", "115200", "--frame-bits", "240"]) == 0
        assert capsys.readouterr().out == "480.000 Hz\n"

    def test_frame_bytes_11(self, capsys):
        assert cli.main(["throughput", "--baud", "115200", "--frame-bytes", "11"]) == 0
        assert capsys.readouterr().out == "1047.273 Hz\n"

    def test_missing_frame_size_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["throughput", "--baud", "115200"])
        assert exc.value.code == 2


class TestDeviceCommand:
    def test_loopback_virtual_run(self, capsys):
        rc = cli.main(["device", "--transport", "loopback", "--duration", "0.2",
                       "--seed", "0", "--virtual-clock"])
        assert rc == 0
        assert "frames=200" in capsys.readouterr().out

    def test_connection_refused_exits_1(self, capsys):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        rc = cli.main(["device", "--transport", f"tcp:127.0.0.1:{port}",
                       "--source", "sine:1,0.01763", "--duration", "0.1",
                       "--virtual-clock"])
        assert rc == 1

    def test_bad_source_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["device", "--source", "sine:oops"])
        assert exc.value.code == 2

    def test_stdout_transport_streams_frames(self):
        result = subprocess.run(
            [sys.executable, "-m", "emgwire.cli", "device", "--transport", "stdout",
             "--duration", "0.1", "--seed", "0", "--virtual-clock"],
            capture_output=True, timeout=120)
        assert result.returncode == 0
        assert len(result.stdout) == 100 * 11  # frames on stdout, summary on stderr
        assert b"frames=100" in result.stderr

    def test_gesture_source_accepted(self, capsys):
        rc = cli.main(["device", "--source", "gesture", "--duration", "0.1",
                       "--seed", "1", "--virtual-clock"])
        assert rc == 0


class TestValidationCommands:
    def test_validate_sine_passes(self, capsys, tmp_path):
        out = tmp_path / "sine.kv"
        rc = cli.main(["validate-sine", "--virtual-clock", "--duration", "1.5",
                       "--report-out", str(out)])
        captured = capsys.readouterr().out
        assert rc == 0
        assert "ratio_pct" in captured
        assert "result=pass" in out.read_text()

    def test_validate_replay_synthetic(self, capsys):
        rc = cli.main(["validate-replay", "--synthetic"])
        assert rc == 0
        assert "mse_filtered_mv2" in capsys.readouterr().out

    def test_validate_replay_from_file(self, tmp_path, capsys):
        from emgwire.analysis import synthetic_semg

        path = tmp_path / "ref.csv"
        np.savetxt(path, synthetic_semg(duration_s=1.0), delimiter=",")
        rc = cli.main(["validate-replay", "--reference", str(path)])
        assert rc == 0

    def test_determinism_under_seed(self, tmp_path):
        a = run_cli(["validate-replay", "--synthetic", "--seed", "3"])
        b = run_cli(["validate-replay", "--synthetic", "--seed", "3"])
        assert a.stdout == b.stdout
        assert a.returncode == b.returncode == 0


class TestHostCommand:
    def test_stdin_session(self, tmp_path):
        from emgwire.device import DeviceConfig, LoopbackTransport, VirtualClock, run_device
        from emgwire.sources import SineSpec

        transport = LoopbackTransport()
        run_device(DeviceConfig(), SineSpec(5.0, 2e-3), 1.0, seed=0,
                   transport=transport, clock=VirtualClock())
        out = tmp_path / "rec.csv"
        result = subprocess.run(
            [sys.executable, "-m", "emgwire.cli", "host", "--source", "-",
             "--duration", "0.5", "--output", str(out)],
            input=bytes(transport.data), capture_output=True, timeout=120)
        assert result.returncode == 0
        assert b"frames received" in result.stdout
        assert out.exists()


class TestSpectrumCommand:
    def test_spectrum_of_recording(self, tmp_path, capsys):
        from emgwire.device import DeviceConfig, LoopbackTransport, VirtualClock, run_device
        from emgwire.host import DecodePipeline, record_csv
        from emgwire.sources import SineSpec

        transport = LoopbackTransport()
        run_device(DeviceConfig(bypass_filter=True), SineSpec(60.0, 5e-3), 3.0,
                   seed=0, transport=transport, clock=VirtualClock())
        blocks = [rec for rec, _ in DecodePipeline().push_bytes(bytes(transport.data))]
        rec = tmp_path / "rec.csv"
        record_csv(blocks, str(rec))
        spec_out = tmp_path / "spec.csv"
        rc = cli.main(["spectrum", "--input", str(rec), "--channel", "1",
                       "--output", str(spec_out)])
        captured = capsys.readouterr().out
        assert rc == 0
        peak = float(captured.split("peak:")[1].split("Hz")[0])
        resolution = float(captured.split("resolution:")[1].split("Hz")[0])
        assert abs(peak - 60.0) <= resolution
        assert spec_out.read_text().startswith("freq_hz,magnitude_db")

    def test_bad_channel(self, tmp_path):
        rec = tmp_path / "rec.csv"
        rec.write_text("t_s," + ",".join(f"ch{i}_mV" for i in range(1, 9)) + "\n" +
                       "0.000," + ",".join(["0"] * 8) + "\n")
        rc = cli.main(["spectrum", "--input", str(rec), "--channel", "9"])
        assert rc == 1


class TestEnvFallback:
    def test_env_sets_default(self, monkeypatch, capsys):
        monkeypatch.setenv("EMGWIRE_BAUD", "57600")
        rc = cli.main(["throughput", "--frame-bits", "110"])
        assert rc == 0
        assert capsys.readouterr().out == "523.636 Hz\n"

    def test_flag_beats_env(self, monkeypatch, capsys):
        monkeypatch.setenv("EMGWIRE_BAUD", "57600")
        rc = cli.main(["throughput", "--baud", "115200", "--frame-bits", "240"])
        assert rc == 0
        assert capsys.readouterr().out == "480.000 Hz\n"
