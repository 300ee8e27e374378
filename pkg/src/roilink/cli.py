"""Command-line entry points: propose, select, expand, sweep, bench, and the
drone / ground / loopback session commands.

A TOML config file (``--config``) may supply any flag under a table named
after the subcommand (dashes become underscores); explicit flags win.
``ROILINK_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import socket
import sys
import threading
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dataset import expand_min_size, load_dataset, save_dataset, write_metrics_csv
from .geometry import FrameDims
from .matching import MatchConfig, MatchMode
from .selection import Accounting, SelectionMode, SelectionPolicy
from .sweep import SweepConfig, bench, compose_throughput, default_r_grid, sweep

log = logging.getLogger("roilink")


def parse_dims(text: str) -> FrameDims:
    try:
        w, h = text.lower().split("x")
        return FrameDims(int(w), int(h))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"dims must look like 3840x2160, got {text!r}") from exc


def parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host:
        raise argparse.ArgumentTypeError(f"address must look like host:port, got {text!r}")
    return host, int(port)


def parse_grid(text: str) -> tuple[float, ...]:
    """Grid specs: ``log:LO:HI:N``, ``lin:LO:HI:N``, or a comma list."""
    import numpy as np

    if text.startswith("log:") or text.startswith("lin:"):
        kind, lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        values = (
            np.logspace(np.log10(lo), np.log10(hi), n)
            if kind == "log"
            else np.linspace(lo, hi, n)
        )
        return tuple(sorted({0.0, *map(float, values)}))
    return tuple(sorted(float(v) for v in text.split(",")))


def make_policy(args) -> SelectionPolicy:
    return SelectionPolicy(
        SelectionMode(args.policy),
        Accounting(args.accounting),
        getattr(args, "exact_small_n", None),
    )


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", choices=["area", "confidence"], default="area")
    p.add_argument("--accounting", choices=["union", "sum"], default="union")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roilink", description=__doc__)
    parser.add_argument("--config", type=Path, help="TOML config file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propose", help="heatmaps (PFM) -> detections JSON")
    p.add_argument("--heatmaps", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--connectivity", type=int, choices=[4, 8], default=8)
    p.add_argument("--min-area", type=int, default=0)

    p = sub.add_parser("select", help="apply the bandwidth budget to detections")
    p.add_argument("--detections", required=True, type=Path)
    p.add_argument("--images", required=True, type=Path, help="JSON with the images array")
    p.add_argument("--r", required=True, type=float)
    _add_policy_flags(p)
    p.add_argument("--exact-small-n", type=int, default=None)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("expand", help="minimum-box-size ground truth transform")
    p.add_argument("--annotations", required=True, type=Path)
    p.add_argument("--min-w", type=int, default=500)
    p.add_argument("--min-h", type=int, default=500)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("sweep", help="metrics over a budget grid -> CSV")
    p.add_argument("--annotations", required=True, type=Path)
    p.add_argument("--detections", required=True, type=Path)
    _add_policy_flags(p)
    p.add_argument("--grid", type=parse_grid, default=None, help="log:1e-3:1:50, lin:…, or comma list")
    p.add_argument("--agg", choices=["micro", "macro"], default="micro")
    p.add_argument("--match", choices=["iou", "iogt"], default="iogt")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("bench", help="stage throughput benchmark")
    p.add_argument("--dims", type=parse_dims, default=FrameDims(3840, 2160))
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--stages", default="binarize,components")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("drone", help="serve frames to a ground station")
    p.add_argument("--listen", required=True, type=parse_addr)
    p.add_argument("--frames", type=Path, help="folder of PNG/JPEG frames")
    p.add_argument("--heatmaps", type=Path, help="folder of PFM heatmaps")
    p.add_argument("--detections", type=Path, help="detections JSON instead of heatmaps")
    p.add_argument("--annotations", type=Path, help="images JSON (needed with --detections)")
    p.add_argument("--synthetic", type=int, default=None, help="serve N synthetic frames")
    p.add_argument("--dims", type=parse_dims, default=FrameDims(640, 480))
    p.add_argument("--r", type=float, default=0.2)
    p.add_argument("--downscale", type=int, default=8)
    _add_policy_flags(p)
    p.add_argument("--fps", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ground", help="receive, composite, detect, record, serve")
    p.add_argument("--connect", required=True, type=parse_addr)
    p.add_argument("--plugin", help="detector command reading a PNG tile on stdin")
    p.add_argument("--plugin-timeout", type=float, default=5.0)
    p.add_argument("--ws-listen", type=parse_addr, help="operator console WebSocket address")
    p.add_argument("--record", type=Path, help="directory for PNG/JSON/session.csv records")

    p = sub.add_parser("loopback", help="drone + ground in one process (demo / e2e)")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--dims", type=parse_dims, default=FrameDims(640, 480))
    p.add_argument("--r", type=float, default=0.2)
    p.add_argument("--downscale", type=int, default=8)
    _add_policy_flags(p)
    p.add_argument("--fps", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plugin")
    p.add_argument("--record", type=Path)
    p.add_argument("--ws-listen", type=parse_addr)
    p.add_argument("--wait-client", action="store_true", help="hold frames until a console connects")
    return parser


def apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Fill non-explicit flags from the TOML table named after the subcommand."""
    if args.config is None:
        return
    with open(args.config, "rb") as f:
        doc = tomllib.load(f)
    table = {**doc.get(args.command, {})}
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in table.items():
        attr = key.replace("-", "_")
        if attr in explicit or not hasattr(args, attr):
            continue
        current = getattr(args, attr)
        default = parser.get_default(attr) if hasattr(args, attr) else None
        if current == default:
            if attr in ("listen", "connect", "ws_listen"):
                value = parse_addr(str(value))
            elif attr == "dims":
                value = parse_dims(str(value))
            elif attr == "grid":
                value = parse_grid(str(value))
            elif isinstance(current, Path) or attr in ("out", "record", "heatmaps", "frames"):
                value = Path(value) if not isinstance(value, (int, float)) else value
            setattr(args, attr, value)


def cmd_propose(args) -> int:
    from .rasters import read_pfm
    from .saliency import propose_from_heatmap

    paths = sorted(Path(args.heatmaps).glob("*.pfm"))
    if not paths:
        log.error("no .pfm heatmaps in %s", args.heatmaps)
        return 2
    images, annotations = [], []
    for i, path in enumerate(paths):
        heat = read_pfm(path)
        proposals = propose_from_heatmap(heat, args.threshold, args.connectivity, args.min_area)
        images.append(
            {"id": i, "file_name": path.stem + ".png",
             "width": heat.dims.width, "height": heat.dims.height}
        )
        for b in proposals.boxes:
            annotations.append(
                {"id": len(annotations), "image_id": i,
                 "bbox": [b.rect.x, b.rect.y, b.rect.w, b.rect.h]}
            )
    args.out.write_text(json.dumps({"images": images, "annotations": annotations}, indent=1))
    log.info("proposed %d boxes over %d heatmaps -> %s", len(annotations), len(images), args.out)
    return 0


def cmd_select(args) -> int:
    from .selection import select

    ds = load_dataset(args.images, args.detections)
    policy = make_policy(args)
    results = []
    for img_id in sorted(ds.detections):
        for rect in select(ds.detections[img_id], args.r, policy):
            results.append({"image_id": img_id, "bbox": [rect.x, rect.y, rect.w, rect.h]})
    args.out.write_text(json.dumps(results, indent=1))
    log.info("selected %d boxes at r=%g -> %s", len(results), args.r, args.out)
    return 0


def cmd_expand(args) -> int:
    ds = load_dataset(args.annotations)
    save_dataset(expand_min_size(ds, args.min_w, args.min_h), args.out)
    log.info("expanded annotations -> %s", args.out)
    return 0


def cmd_sweep(args) -> int:
    ds = load_dataset(args.annotations, args.detections)
    cfg = SweepConfig(
        r_grid=args.grid if args.grid is not None else default_r_grid(),
        policy=make_policy(args),
        match=MatchConfig(args.threshold, MatchMode(args.match)),
        aggregation=args.agg,
    )
    points = sweep(ds, cfg)
    write_metrics_csv(points, args.out)
    meta = {
        "policy": args.policy,
        "accounting": args.accounting,
        "match": args.match,
        "threshold": args.threshold,
        "aggregation": args.agg,
        "grid_points": len(cfg.r_grid),
    }
    Path(str(args.out) + ".meta.json").write_text(json.dumps(meta, indent=1))
    log.info("wrote %d rows -> %s", len(points), args.out)
    return 0


def cmd_bench(args) -> int:
    stages = [s.strip() for s in args.stages.split(",") if s.strip()]
    timings = bench(stages, args.dims, args.frames, args.seed)
    for t in timings:
        print(f"{t.name}: {t.fps:.1f} FPS")
    if len(timings) > 1:
        print(f"serial: {compose_throughput(timings, 'serial'):.1f} FPS")
        print(f"parallel: {compose_throughput(timings, 'parallel'):.1f} FPS")
    return 0


def _drone_source(args):
    from .link.sources import folder_frames, synthetic_frames

    if args.synthetic is not None:
        return synthetic_frames(args.synthetic, args.dims, args.seed)
    if args.frames is None:
        raise SystemExit("drone needs --frames DIR or --synthetic N")
    dataset = None
    if args.detections is not None:
        # propose output carries its own images array and can stand alone
        images_doc = args.annotations if args.annotations is not None else args.detections
        dataset = load_dataset(images_doc, args.detections)
    return folder_frames(args.frames, args.heatmaps, dataset)


def cmd_drone(args) -> int:
    from .link.drone import DroneConfig
    from .link.run import run_drone_over_socket

    source = list(_drone_source(args))
    dims = FrameDims(source[0].frame.shape[1], source[0].frame.shape[0])
    config = DroneConfig(dims, args.r, make_policy(args), args.downscale)
    host, port = args.listen
    with socket.create_server((host, port)) as server:
        print(f"DRONE_LISTENING {server.getsockname()[1]}", flush=True)
        conn, peer = server.accept()
        log.info("ground station connected from %s", peer)
        with conn:
            sent = run_drone_over_socket(
                conn, source, config, frame_period=1.0 / args.fps if args.fps > 0 else 0.0
            )
    print(f"DRONE_DONE frames={sent}", flush=True)
    return 0


def _start_ws(bridge, addr):
    import uvicorn

    from .link.bridge import create_app

    config = uvicorn.Config(
        create_app(bridge), host=addr[0], port=addr[1], log_level="warning", ws="websockets"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("WebSocket server failed to start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    print(f"WS_LISTENING {port}", flush=True)
    return server, thread


def _stop_ws(server, thread) -> None:
    server.should_exit = True
    thread.join(timeout=5)


def cmd_ground(args) -> int:
    from .link.bridge import WsBridge
    from .link.ground import FrameRecorder, GroundSession
    from .link.run import make_ground_callbacks, run_ground_over_socket, upstream_sender

    conn = socket.create_connection(args.connect)
    bridge = ws = None
    if args.ws_listen:
        bridge = WsBridge(send_upstream=upstream_sender(conn))
        ws = _start_ws(bridge, args.ws_listen)
    on_frame, on_ack = make_ground_callbacks(bridge)
    recorder = FrameRecorder(args.record) if args.record else None
    ground = GroundSession(
        plugin_cmd=args.plugin,
        plugin_timeout=args.plugin_timeout,
        recorder=recorder,
        on_frame=on_frame,
        on_ack=on_ack,
    )
    try:
        with conn:
            run_ground_over_socket(conn, ground)
    finally:
        if recorder:
            recorder.close()
        if bridge:
            bridge.close()
        if ws:
            _stop_ws(*ws)
    print(
        f"GROUND_DONE frames={ground.frames_completed} dropped={ground.frames_dropped} "
        f"plugin_failures={ground.plugin_failures}",
        flush=True,
    )
    return 0


def cmd_loopback(args) -> int:
    from .link.bridge import WsBridge
    from .link.drone import DroneConfig
    from .link.ground import FrameRecorder, GroundSession
    from .link.run import (
        make_ground_callbacks,
        run_drone_over_socket,
        run_ground_over_socket,
        upstream_sender,
    )
    from .link.sources import synthetic_frames

    drone_sock, ground_sock = socket.socketpair()
    config = DroneConfig(args.dims, args.r, make_policy(args), args.downscale)
    bridge = ws = None
    if args.ws_listen:
        bridge = WsBridge(send_upstream=upstream_sender(ground_sock))
        ws = _start_ws(bridge, args.ws_listen)
        if args.wait_client:
            while not bridge._feeds:
                time.sleep(0.02)
    on_frame, on_ack = make_ground_callbacks(bridge)
    recorder = FrameRecorder(args.record) if args.record else None
    ground = GroundSession(
        plugin_cmd=args.plugin, recorder=recorder, on_frame=on_frame, on_ack=on_ack
    )
    source = synthetic_frames(args.frames, args.dims, args.seed)
    period = 1.0 / args.fps if args.fps > 0 else 0.0
    drone_thread = threading.Thread(
        target=run_drone_over_socket, args=(drone_sock, source, config, period), daemon=True
    )
    drone_thread.start()
    try:
        run_ground_over_socket(ground_sock, ground)
    finally:
        drone_thread.join(timeout=10)
        drone_sock.close()
        ground_sock.close()
        if recorder:
            recorder.close()
        if bridge:
            bridge.close()
        if ws:
            _stop_ws(*ws)
    print(f"LOOPBACK_DONE frames={ground.frames_completed}", flush=True)
    return 0


_COMMANDS = {
    "propose": cmd_propose,
    "select": cmd_select,
    "expand": cmd_expand,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "drone": cmd_drone,
    "ground": cmd_ground,
    "loopback": cmd_loopback,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(
        level=os.environ.get("ROILINK_LOG", "INFO").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    apply_config(args, parser, argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
