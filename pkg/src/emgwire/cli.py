"""Command line entry point: device, host, validations, spectra, link math.

Config precedence is flags > EMGWIRE_* environment variables > defaults;
every flag maps to EMGWIRE_<FLAG> with dashes as underscores (e.g.
--sample-rate / EMGWIRE_SAMPLE_RATE).  Exit codes: 0 success, 1 runtime
error (or failed validation), 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis, codec
from .bridge import LiveHost
from .device import DeviceConfig, VirtualClock, run_device
from .errors import EmgWireError
from .host import SessionConfig, blocks_to_array, iter_socket_chunks, \
    read_recording, run_session
from .signal_chain import NotchSpec
from .sources import GestureSpec, ReplaySpec, SineSpec


def _env(flag: str, default=None):
    return os.environ.get("EMGWIRE_" + flag.replace("-", "_").upper(), default)


def _add(parser: argparse.ArgumentParser, flag: str, **kwargs):
    """add_argument with the EMGWIRE_* environment fallback baked in."""
    env_val = _env(flag)
    if env_val is not None:
        if kwargs.get("action") == "store_true":
            kwargs["default"] = env_val.lower() in ("1", "true", "yes", "on")
        else:
            kwargs["default"] = kwargs.get("type", str)(env_val)
    parser.add_argument("--" + flag, **kwargs)


def parse_source(text: str):
    """sine:FREQ,AMPLITUDE | replay:PATH[,GAIN] | gesture"""
    kind, _, rest = text.partition(":")
    if kind == "sine":
        try:
            freq, amplitude = (float(x) for x in rest.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"bad sine source {text!r} (want sine:FREQ_HZ,AMPLITUDE_V)")
        return SineSpec(freq, amplitude)
    if kind == "replay":
        if not rest:
            raise argparse.ArgumentTypeError("replay source needs a file path")
        path, _, gain = rest.partition(",")
        return ReplaySpec(path, float(gain) if gain else 1.0)
    if kind == "gesture" and not rest:
        return GestureSpec()
    raise argparse.ArgumentTypeError(f"unknown source {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emgwire",
        description="Simulated 8-channel sEMG acquisition link.",
        epilog="Defaults can be set via EMGWIRE_<FLAG> environment variables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("throughput", help="frames per second for a given link")
    _add(p, "baud", type=float, default=115200.0)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--frame-bits", type=float)
    group.add_argument("--frame-bytes", type=int)

    p = sub.add_parser("device", help="run the simulated acquisition device")
    _add(p, "source", type=parse_source, default=parse_source("sine:1,0.01763"))
    _add(p, "transport", default="loopback")
    _add(p, "duration", type=float, default=10.0)
    _add(p, "sample-rate", type=int, default=1000)
    _add(p, "baud", type=int, default=115200)
    _add(p, "mains-amplitude", type=float, default=0.0)
    _add(p, "seed", type=int, default=None)
    _add(p, "bypass-filter", action="store_true")
    _add(p, "virtual-clock", action="store_true")

    p = sub.add_parser("host", help="decode a device stream; record and serve it")
    _add(p, "source", default="tcp-listen:127.0.0.1:7240",
         help="tcp-listen:HOST:PORT or - for stdin")
    _add(p, "duration", type=float, default=6.0)
    _add(p, "output", default=None, help="recording CSV path")
    _add(p, "notch", action="store_true", help="start with the 60 Hz notch on")
    _add(p, "record-notched", action="store_true")
    _add(p, "bridge-port", type=int, default=None,
         help="serve the control/stream bridge and run until interrupted")

    p = sub.add_parser("validate-sine", help="full-scale sine reconstruction check")
    _add(p, "amplitude", type=float, default=0.01763)
    _add(p, "freq", type=float, default=1.0)
    _add(p, "duration", type=float, default=3.0)
    _add(p, "seed", type=int, default=0)
    _add(p, "report-out", default=None)
    p.add_argument("--virtual-clock", action="store_true",
                   help="accepted for symmetry; this validation always runs virtual")

    p = sub.add_parser("validate-replay", help="replay reconstruction error check")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--reference", help="reference CSV (volts at --rate)")
    group.add_argument("--synthetic", action="store_true",
                       help="generate a plausible muscle-burst reference")
    _add(p, "rate", type=float, default=1000.0)
    _add(p, "gain", type=float, default=1.0)
    _add(p, "seed", type=int, default=0)
    _add(p, "report-out", default=None)

    p = sub.add_parser("spectrum", help="amplitude spectrum of a recording channel")
    p.add_argument("--input", required=True, help="recording CSV from the host")
    _add(p, "channel", type=int, default=1)
    _add(p, "n", type=int, default=2048)
    _add(p, "output", default=None, help="write freq_hz,magnitude_db CSV")

    return parser


def cmd_throughput(args) -> int:
    bits = args.frame_bits if args.frame_bits else codec.frame_bits(args.frame_bytes)
    print(f"{codec.throughput(args.baud, bits):.3f} Hz")
    return 0


def cmd_device(args) -> int:
    cfg = DeviceConfig(
        sample_rate=args.sample_rate,
        baud=args.baud,
        transport=args.transport,
        bypass_filter=args.bypass_filter,
        mains_amplitude=args.mains_amplitude,
    )
    clock = VirtualClock() if args.virtual_clock else None
    stats = run_device(cfg, args.source, args.duration, seed=args.seed, clock=clock)
    print(stats.summary(), file=sys.stderr if args.transport == "stdout" else sys.stdout)
    return 1 if stats.error else 0


def _host_chunks(source: str):
    if source == "-" or source == "stdin":
        def chunks():
            while True:
                data = sys.stdin.buffer.read(4096)
                if not data:
                    return
                yield data
        return chunks()
    if source.startswith("tcp-listen:"):
        import socket

        host, port = source[len("tcp-listen:"):].rsplit(":", 1)
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((host, int(port)))
        listener.listen(1)
        print(f"listening for device on {host}:{listener.getsockname()[1]}", file=sys.stderr)
        conn, addr = listener.accept()
        conn.settimeout(0.5)
        listener.close()
        return iter_socket_chunks(conn)
    raise EmgWireError(f"unknown host source {source!r}")


def cmd_host(args) -> int:
    notch = NotchSpec()
    if args.bridge_port is not None:
        source = args.source
        if not source.startswith("tcp-listen:"):
            raise EmgWireError("bridge mode needs a tcp-listen data source")
        host, port = source[len("tcp-listen:"):].rsplit(":", 1)
        live = LiveHost(host, int(port), "127.0.0.1", args.bridge_port,
                        notch=notch, record_notched=args.record_notched,
                        default_output=args.output or "recording.csv").start()
        if args.notch:
            live.controller.set_notch(True)
        print(f"device data port: {live.data_port}", file=sys.stderr)
        print(f"bridge: ws://127.0.0.1:{live.bridge.port}", file=sys.stderr)
        try:
            import time

            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            pass
        finally:
            live.close()
        return 0

    cfg = SessionConfig(duration_s=args.duration, notch_enabled=args.notch,
                        output_path=args.output, source=args.source,
                        record_notched=args.record_notched, notch=notch)
    _blocks, summary = run_session(cfg, _host_chunks(args.source))
    print(summary.as_text())
    return 1 if summary.aborted else 0


def _finish_report(report, report_out) -> int:
    print(report.as_text())
    if report_out:
        report.write_kv(report_out)
    return 0 if report.passed else 1


def cmd_validate_sine(args) -> int:
    report = analysis.validate_sine(args.amplitude, args.freq, args.duration, args.seed)
    return _finish_report(report, args.report_out)


def cmd_validate_replay(args) -> int:
    if args.synthetic:
        reference = analysis.synthetic_semg(seed=args.seed)
        report = analysis.validate_replay(reference, args.rate, args.gain, args.seed)
    else:
        report = analysis.validate_replay(args.reference, args.rate, args.gain, args.seed)
    return _finish_report(report, args.report_out)


def cmd_spectrum(args) -> int:
    blocks = read_recording(args.input)
    if not 1 <= args.channel <= codec.CHANNELS:
        raise EmgWireError(f"channel must be 1..{codec.CHANNELS}")
    signal = blocks_to_array(blocks)[:, args.channel - 1] * 1e3
    spec = analysis.spectrum(signal, 1000.0, args.n)
    print(f"resolution: {spec.resolution:.3f} Hz  peak: {spec.peak_frequency():.1f} Hz")
    if args.output:
        spec.write_csv(args.output)
        print(f"spectrum written to {args.output}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "throughput": cmd_throughput,
        "device": cmd_device,
        "host": cmd_host,
        "validate-sine": cmd_validate_sine,
        "validate-replay": cmd_validate_replay,
        "spectrum": cmd_spectrum,
    }
    try:
        return handlers[args.command](args)
    except EmgWireError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
