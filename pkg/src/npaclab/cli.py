"""Command-line interface over the print pipeline.

Exit codes: 0 success, 1 domain error (single machine-parseable line
``error: <code> ...`` on stderr), 2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import calibration as cal
from . import gamut as gm
from . import halftone as ht
from . import report as rpt
from .colorimetry import LabColor, d50_2deg, spectra_to_lab_array
from .errors import FileFormatError, NpacLabError, OutOfGamutError
from .neugebauer import NPac, NPTable, YNParams, np_count, validate_npac
from .press import Chart, PressModel, apply_drift, measure, synth_np_table
from .serialize import grid_to_dict, lab_to_list, match_to_dict, npac_to_dict


def resolve_press_path(spec: str) -> Path:
    """A press argument is a file path or a bundled demo (``demo:cmyk``)."""
    if spec.startswith("demo:"):
        name = spec.split(":", 1)[1]
        path = resources.files("npaclab.data").joinpath(f"presses/demo_{name}.json")
        if not path.is_file():
            raise FileFormatError(f"unknown demo press {name!r}; available: cmyk, 8ink")
        return Path(str(path))
    return Path(spec)


def load_press(spec: str) -> PressModel:
    path = resolve_press_path(spec)
    if not path.is_file():
        raise FileFormatError(f"press model not found: {path}")
    return PressModel.load(path)


def parse_npac_arg(raw: str) -> NPac:
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"--npac is not valid JSON: {exc}") from exc
    problems = validate_npac(data)
    if problems:
        raise FileFormatError("invalid NPac: " + "; ".join(v.message for v in problems))
    return NPac.from_dict(data)


def parse_lab_arg(raw: str) -> LabColor:
    try:
        parts = [float(x) for x in raw.split(",")]
        if len(parts) != 3:
            raise ValueError
    except ValueError:
        raise FileFormatError(f"--target must be 'L,a,b', got {raw!r}") from None
    return LabColor(*parts)


def parse_size_arg(raw: str):
    try:
        w, h = raw.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise FileFormatError(f"--size must be WIDTHxHEIGHT, got {raw!r}") from None


def parse_matrix_arg(raw: str, seed: int) -> ht.ThresholdMatrix:
    """Matrix spec: 'bayer16', 'bluenoise64', or a PGM file path."""
    if raw.startswith("bayer"):
        return ht.bayer_matrix(int(raw[len("bayer"):]))
    if raw.startswith("bluenoise"):
        return ht.blue_noise_matrix(int(raw[len("bluenoise"):]), seed=seed)
    path = Path(raw)
    if path.is_file():
        return ht.load_matrix_pgm(path)
    raise FileFormatError(f"unknown matrix spec {raw!r} (bayerN, bluenoiseN, or a PGM path)")


def emit(doc, out=None):
    text = json.dumps(doc, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_press_demo(args):
    path = resolve_press_path(f"demo:{args.name}")
    press = PressModel.load(path)
    press.save(args.out)
    print(f"wrote {args.out} ({press.press_id}: {press.inkset.n} inks, "
          f"{np_count(press.inkset)} primaries)")
    return 0


def cmd_press_synth(args):
    press = load_press(args.press)
    ids = [int(x) for x in args.ids.split(",")] if args.ids else None
    table = synth_np_table(press, ids=ids)
    table.save(args.out)
    print(f"wrote {args.out} ({len(table)} primaries)")
    return 0


def cmd_press_drift(args):
    press = load_press(args.press)
    gains = [float(x) for x in args.gains.split(",")]
    try:
        drifted = apply_drift(press, gains)
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc
    drifted.save(args.out)
    print(f"wrote {args.out} (gains {gains})")
    return 0


def cmd_chart_measure(args):
    press = load_press(args.press)
    chart = Chart.load(args.chart)
    spectra = measure(press, chart, seed=args.seed)
    vc = d50_2deg()
    labs = spectra_to_lab_array(np.stack([s.values for s in spectra]), vc)
    doc = {
        "press_id": press.press_id,
        "seed": args.seed,
        "patches": [
            {"spectrum": [round(float(v), 9) for v in s.values],
             "lab": [round(float(v), 4) for v in lab]}
            for s, lab in zip(spectra, labs)
        ],
    }
    emit(doc, args.out)
    return 0


def cmd_predict(args):
    if args.table:
        table = NPTable.load(args.table)
    else:
        table = synth_np_table(load_press(args.press))
    yn = YNParams(args.yn) if args.yn else None
    npac = parse_npac_arg(args.npac)
    vc = d50_2deg()
    from .neugebauer import predict, predict_lab

    lab = predict_lab(npac, table, yn, vc)
    doc = {"lab": lab_to_list(lab)}
    if args.spectrum:
        doc["spectrum"] = [round(float(v), 9) for v in predict(npac, table, yn).values]
    emit(doc, args.out)
    return 0


def cmd_separate(args):
    press = load_press(args.press)
    table = synth_np_table(press)
    vc = d50_2deg()
    gamut = gm.build_gamut(table, vc=vc)
    target = parse_lab_arg(args.target)
    objective = gm.SeparationObjective(args.objective)
    npac = gm.invert(target, gamut, objective=objective)
    from .neugebauer import predict_lab

    back = predict_lab(npac, table, vc=vc)
    emit({"npac": npac_to_dict(npac), "lab": lab_to_list(back)}, args.out)
    return 0


def cmd_gamut(args):
    press = load_press(args.press)
    table = synth_np_table(press)
    vc = d50_2deg()
    gamut = gm.build_gamut(table, vc=vc)
    mesh = gamut.to_mesh_dict()
    if args.gamut_cmd == "build":
        print(f"{press.press_id}: {len(table)} primaries, {len(gamut.facets)} facets, "
              f"{len(gamut.sample_lab)} surface samples, volume {gamut.hull_volume():.1f}")
        if args.report_dir:
            for path in rpt.gamut_report(gamut, args.report_dir):
                print(f"wrote {path}")
    if args.out:
        emit(mesh, args.out)
        print(f"wrote {args.out}")
    elif args.gamut_cmd == "export":
        emit(mesh)
    return 0


def cmd_halftone(args):
    press = load_press(args.press)
    table = synth_np_table(press)
    npac = parse_npac_arg(args.npac)
    missing = [i for i in npac.ids() if i not in table]
    if missing:
        raise FileFormatError(f"NPac references unknown primaries {missing}")
    width, height = parse_size_arg(args.size)
    matrix = parse_matrix_arg(args.matrix, args.seed)
    img = ht.NPacImage.constant(npac, width, height)
    out = ht.halftone(img, matrix)
    ht.save_halftone(args.out, out, np_total=np_count(press.inkset))
    if args.matrix_out:
        ht.save_matrix_pgm(args.matrix_out, matrix)
    cov = ht.measure_coverages(out)
    print(f"wrote {args.out} ({width}x{height}); realized coverages {npac_to_dict(cov)}")
    return 0


def cmd_preview(args):
    press = load_press(args.press)
    table = synth_np_table(press)
    halftone_img = ht.load_halftone(args.halftone)
    rgb = ht.render_preview(halftone_img, table, d50_2deg())
    ht.save_png(args.out, rgb)
    print(f"wrote {args.out}")
    return 0


def cmd_calibrate(args):
    press = load_press(args.press)
    vc = d50_2deg()
    if args.make_reference:
        ref = cal.build_reference(press, steps=args.steps, vc=vc, seed=args.seed,
                                  repeats=args.repeats)
        doc = {
            "steps": ref.steps,
            "channel_names": list(ref.channel_names),
            "labs": [[round(float(v), 6) for v in lab] for lab in ref.labs],
            "press_id": ref.press_id,
        }
        emit(doc, args.out_reference)
        print(f"wrote {args.out_reference} ({len(ref.labs)} patches)")
        return 0

    if not args.reference:
        raise FileFormatError("calibrate needs --reference (or --make-reference)")
    try:
        raw = json.loads(Path(args.reference).read_text())
        ref = cal.CalibrationReference(
            steps=int(raw["steps"]),
            channel_names=tuple(raw["channel_names"]),
            labs=np.asarray(raw["labs"], dtype=np.float64),
            press_id=str(raw.get("press_id", "press")),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"malformed reference file: {exc}") from exc

    luts, report = cal.recalibrate(press, ref, max_iters=args.max_iters,
                                   threshold=args.threshold, vc=vc, seed=args.seed)
    built_at = f"deterministic(seed={args.seed})"
    luts = cal.LUTSet(luts.luts, press_id=luts.press_id, built_at=built_at,
                      residual_mean_de2000=luts.residual_mean_de2000)
    luts.save(args.out_luts)
    print(f"wrote {args.out_luts}")
    if args.out_report:
        emit(report.to_dict(), args.out_report)
        print(f"wrote {args.out_report}")
    if args.report_dir:
        for path in rpt.calibration_report(report, luts, args.report_dir):
            print(f"wrote {path}")
    print(f"converged={report.converged} iterations={report.iterations} "
          f"mean={report.residual_mean[-1]:.3f} max={report.residual_max[-1]:.3f}")
    return 0


def cmd_spot_match(args):
    press = load_press(args.press)
    table = synth_np_table(press)
    vc = d50_2deg()
    gamut = gm.build_gamut(table, vc=vc)
    target = parse_lab_arg(args.target)
    grid = gm.alternatives_grid(target, gamut, n_h=args.n_h, n_l=args.n_l,
                                step_h=args.step_h, step_l=args.step_l,
                                metric=args.metric)
    emit(grid_to_dict(grid, vc), args.out)
    if args.report_dir:
        for path in rpt.spot_report(grid, vc, args.report_dir):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_serve(args):
    from .service import ServiceConfig, run_service

    config = ServiceConfig.load(args.config)
    run_service(config)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npaclab",
        description="Neugebauer-primary print pipeline: predict, separate, "
                    "halftone, calibrate, and match spot colors on a simulated press.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    press = sub.add_parser("press", help="press model utilities")
    press_sub = press.add_subparsers(dest="press_cmd", required=True)

    p = press_sub.add_parser("demo", help="write a bundled demo press model")
    p.add_argument("--name", choices=["cmyk", "8ink"], default="cmyk")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_press_demo)

    p = press_sub.add_parser("synth", help="synthesize the NP spectra table")
    p.add_argument("--press", required=True, help="press JSON path or demo:<name>")
    p.add_argument("--ids", help="comma-separated NP id subset")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_press_synth)

    p = press_sub.add_parser("drift", help="apply per-channel drift gains")
    p.add_argument("--press", required=True)
    p.add_argument("--gains", required=True, help="comma-separated gains in (0,2], one per channel")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_press_drift)

    p = sub.add_parser("chart", help="chart printing and measurement")
    chart_sub = p.add_subparsers(dest="chart_cmd", required=True)
    p = chart_sub.add_parser("measure", help="measure a chart on the virtual press")
    p.add_argument("--press", required=True)
    p.add_argument("--chart", required=True, help="chart JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_chart_measure)

    p = sub.add_parser("predict", help="predict the color of an NPac")
    p.add_argument("--press", help="press JSON path or demo:<name>")
    p.add_argument("--table", help="NP table JSON (alternative to --press)")
    p.add_argument("--npac", required=True, help='JSON object, e.g. \'{"0":0.5,"15":0.5}\'')
    p.add_argument("--yn", type=float, help="Yule-Nielsen exponent override")
    p.add_argument("--spectrum", action="store_true", help="include the predicted spectrum")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("separate", help="invert a target color into an NPac")
    p.add_argument("--press", required=True)
    p.add_argument("--target", required=True, help="L,a,b")
    p.add_argument("--objective", choices=[o.value for o in gm.SeparationObjective],
                   default="min_ink")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_separate)

    p = sub.add_parser("gamut", help="gamut geometry")
    gamut_sub = p.add_subparsers(dest="gamut_cmd", required=True)
    for name, help_text in (("build", "build the gamut and print stats"),
                            ("export", "export the gamut surface mesh JSON")):
        g = gamut_sub.add_parser(name, help=help_text)
        g.add_argument("--press", required=True)
        g.add_argument("--out")
        g.add_argument("--report-dir", help="write projection figures and sample CSV here")
        g.set_defaults(fn=cmd_gamut)

    p = sub.add_parser("halftone", help="halftone a constant NPac field")
    p.add_argument("--press", required=True)
    p.add_argument("--npac", required=True)
    p.add_argument("--size", required=True, help="WIDTHxHEIGHT")
    p.add_argument("--matrix", default="bluenoise64", help="bayerN | bluenoiseN | PGM path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output raster (PGM or NPHT)")
    p.add_argument("--matrix-out", help="also save the threshold matrix as PGM")
    p.set_defaults(fn=cmd_halftone)

    p = sub.add_parser("preview", help="render a halftone to sRGB PNG")
    p.add_argument("--press", required=True)
    p.add_argument("--halftone", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_preview)

    p = sub.add_parser("calibrate", help="closed-loop channel LUT calibration")
    p.add_argument("--press", required=True)
    p.add_argument("--reference", help="reference JSON from --make-reference")
    p.add_argument("--make-reference", action="store_true",
                   help="measure a nominal press and write the reference instead")
    p.add_argument("--out-reference", help="reference output path (with --make-reference)")
    p.add_argument("--out-luts", help="LUT set output path")
    p.add_argument("--out-report", help="convergence report JSON path")
    p.add_argument("--report-dir", help="write residual/LUT figures and CSV here")
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=3)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("spot", help="spot color tools")
    spot_sub = p.add_subparsers(dest="spot_cmd", required=True)
    p = spot_sub.add_parser("match", help="closest match + hue/lightness alternatives")
    p.add_argument("--press", required=True)
    p.add_argument("--target", required=True, help="L,a,b")
    p.add_argument("--n-h", type=int, default=3)
    p.add_argument("--n-l", type=int, default=3)
    p.add_argument("--step-h", type=float, default=4.0)
    p.add_argument("--step-l", type=float, default=3.0)
    p.add_argument("--metric", choices=["de76", "de2000"], default="de2000")
    p.add_argument("--out")
    p.add_argument("--report-dir", help="write swatch sheet and CSV here")
    p.set_defaults(fn=cmd_spot_match)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except OutOfGamutError as exc:
        closest = exc.closest
        detail = ""
        if closest is not None:
            detail = (f" closest_lab={lab_to_list(closest.lab)}"
                      f" closest_de={closest.de:.4f}")
        print(f"error: {exc.code}{detail}", file=sys.stderr)
        return 1
    except NpacLabError as exc:
        print(f"error: {exc.code} {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: bad_file {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
