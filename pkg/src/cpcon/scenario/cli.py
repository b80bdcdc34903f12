"""Command-line interface.

    cpconctl run --scenario full_timeline --seed 42 [--out report.json]
    cpconctl serve --listen 127.0.0.1:8443 [--token T] [--demo]
    cpconctl ui-fixture --seed 42 --out fixture.json

Exit codes: 0 success, 2 phase assertion failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from cpcon.errors import PhaseAssertionError, ScenarioError
from cpcon.scenario.harness import ScenarioOptions, run_scenario
from cpcon.scenario.metrics import emit_metrics

EXIT_OK = 0
EXIT_PHASE_FAILURE = 2
EXIT_CONFIG_ERROR = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpconctl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scripted scenario")
    run.add_argument("--scenario", required=True,
                     help="full_timeline | dns_dos_only | exfil_only | scale_test")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--hosts", type=int, default=None,
                     help="single host count for scale_test")
    run.add_argument("--realtime", action="store_true",
                     help="pace virtual time against the wall clock")
    run.add_argument("--fault", default=None, metavar="KIND:TARGET",
                     help="e.g. drop_router_rule:subnet2, agent_crash:subnet1-host-2")
    run.add_argument("--out", default=None, metavar="REPORT.json")
    run.add_argument("--emit-metrics", default=None, metavar="PATH")
    run.add_argument("--metrics-format", choices=("csv", "json"), default="csv")
    run.add_argument("--log-dir", default=None,
                     help="also dump repository/event/audit/flow logs here")

    serve = sub.add_parser("serve", help="serve the control API (and UI if built)")
    serve.add_argument("--listen", default="127.0.0.1:8443")
    serve.add_argument("--token", default=None, help="shared operator token")
    serve.add_argument("--seed", type=int, default=42)
    serve.add_argument("--demo", action="store_true",
                       help="schedule the full timeline against the live clock")
    serve.add_argument("--ui", default=None, help="path to built UI assets")

    fixture = sub.add_parser("ui-fixture", help="export stream+snapshot fixture for the UI tests")
    fixture.add_argument("--seed", type=int, default=42)
    fixture.add_argument("--out", required=True)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    options = ScenarioOptions(hosts=args.hosts, fault=args.fault, realtime=args.realtime)
    try:
        report = run_scenario(args.scenario, args.seed, options)
    except PhaseAssertionError as exc:
        print(f"scenario {args.scenario} FAILED:", file=sys.stderr)
        for failure in exc.failures:
            print(f"  - {failure}", file=sys.stderr)
        return EXIT_PHASE_FAILURE
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    summary = {
        "scenario": report.scenario,
        "seed": report.seed,
        "log_hash": report.log_hash,
        "wall_clock_s": round(report.wall_clock_s, 3),
        "verification": report.verification_outcomes,
    }
    print(json.dumps(summary, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_obj(), indent=2, sort_keys=True) + "\n")
        print(f"report written to {args.out}")
    if args.emit_metrics:
        emit_metrics(report, args.metrics_format, args.emit_metrics)
        print(f"metrics written to {args.emit_metrics}")
    if args.log_dir and report.enclave is not None:
        paths = report.enclave.orchestrator.dump_logs(args.log_dir)
        print(f"logs written to {paths['audit'].parent}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from cpcon.api.server import ControlPlane, create_app
    from cpcon.orchestrator.engine import OrchestratorConfig
    from cpcon.runtime import Enclave
    from cpcon.scenario import attacks
    from cpcon.scenario.harness import BASELINE_LEVEL, DNS_MONITOR_PARAMS, DEFAULT_OFFSETS

    enclave = Enclave.build(
        id_seed=args.seed, config=OrchestratorConfig(baseline_level=BASELINE_LEVEL)
    )
    for host in enclave.network.topology.managed_hosts():
        enclave.orchestrator.deploy_module(host.host_id, "dns_monitor", DNS_MONITOR_PARAMS)
    enclave.pump(5)

    if args.demo:
        topo = enclave.network.topology
        attacks.schedule_dns_flood(
            enclave,
            topo.host_by_name("subnet2-host-1").host_id,
            topo.host_by_name("utility-server").host_id,
            start_ms=enclave.clock.now_ms + DEFAULT_OFFSETS["flood_start"],
        )
        attacks.schedule_exfil_attempt(
            enclave,
            topo.host_by_name("web-server").host_id,
            topo.host_by_name("subnet1-host-1").host_id,
            at_ms=enclave.clock.now_ms + DEFAULT_OFFSETS["exfil_at"],
        )

    plane = ControlPlane(enclave)
    plane.start_realtime()
    app = create_app(plane, token=args.token)

    ui_dir = Path(args.ui) if args.ui else Path("frontend/dist")
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    host, _, port = args.listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    plane.stop()
    return EXIT_OK


def _cmd_ui_fixture(args: argparse.Namespace) -> int:
    report = run_scenario("full_timeline", args.seed, ScenarioOptions(capture_audit=True))
    # frames are the audit entries a stream consumer would have replayed to
    # reach the terminal /api/state answer
    fixture = {
        "seed": args.seed,
        "frames": report.audit_entries,
        "terminal_snapshot": report.final_snapshot,
    }
    Path(args.out).write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    print(f"ui fixture written to {args.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "ui-fixture":
        return _cmd_ui_fixture(args)
    return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
