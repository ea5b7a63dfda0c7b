"""``crackmd`` command line: run, preset and analyze.

Exit codes: 0 success, 1 configuration or input error, 2 I/O error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import AnalysisError, CrackMDError, NumericalError
from .io import read_config, read_dump, read_thermo, write_csv
from .presets import PRESETS, preset_text

log = logging.getLogger("crackmd")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3


def _progress(rec) -> None:
    print(
        f"step {rec.step:8d}  strain {rec.strain:8.5f}  T {rec.temperature:7.2f} K  "
        f"sigma_zz {rec.sigma_zz:8.4f} GPa  crack {rec.crack_length:7.2f} A",
        file=sys.stderr,
        flush=True,
    )


def cmd_run(args) -> int:
    from .runner import run_scenario

    path = Path(args.config)
    cfg = read_config(path)
    if args.seed is not None:
        cfg.loading.seed = args.seed
    out = Path(args.output_dir) if args.output_dir else Path(cfg.output.directory)
    summary = run_scenario(
        cfg, out, threads=args.threads, dry_run=args.dry_run, base_dir=path.parent,
        progress=None if args.quiet else _progress, n_steps=args.steps,
    )
    print(f"run finished: {summary.n_atoms} atoms, {summary.n_steps} steps, outputs in {out}", file=sys.stderr)
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.list:
        print("\n".join(PRESETS))
        return EXIT_OK
    if args.name is None:
        raise CrackMDError("a preset name is required; valid names: " + ", ".join(PRESETS))
    text = preset_text(args.name)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _frame_system(frame, lattice_constant: float):
    from .geometry import OPEN, PERIODIC, SimBox
    from .lattice import AtomSystem, get_species

    box = SimBox(frame.bounds[:, 0], frame.bounds[:, 1],
                 tuple(PERIODIC if b == "periodic" else OPEN for b in frame.boundary))
    types = frame.columns["type"] - 1
    species = tuple(get_species("Ni") for _ in range(int(types.max()) + 1))
    return AtomSystem(frame.positions, types, species, box, lattice_constant=lattice_constant)


def cmd_analyze(args) -> int:
    from .analysis import (
        NO_YIELD,
        binned_profile,
        classify_structure,
        global_stress_strain,
        monotone,
        slip_plane_fit,
    )

    if args.dump is None and args.thermo is None:
        raise CrackMDError("give --dump and/or --thermo")
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    a = args.lattice_constant

    if args.thermo:
        records = read_thermo(args.thermo)
        if records:
            curve = global_stress_strain(records)
            write_csv(out / "stress_strain.csv", ("strain", "sigma_zz_GPa", "smoothed_GPa"),
                      zip(curve.strain, curve.stress, curve.smoothed))
            status = curve.status
            if curve.yielded:
                text = f"critical_stress_GPa={curve.critical_stress!r}\ncritical_strain={curve.critical_strain!r}\n"
            else:
                text = f"{NO_YIELD}\n"
            lengths = [r.crack_length for r in records]
            write_csv(out / "crack_length.csv", ("step", "strain", "crack_len_A", "crack_len_monotone_A"),
                      zip([r.step for r in records], [r.strain for r in records], lengths, monotone(lengths)))
        else:
            write_csv(out / "stress_strain.csv", ("strain", "sigma_zz_GPa", "smoothed_GPa"), [])
            status, text = NO_YIELD, f"{NO_YIELD}\n"
        (out / "critical_stress.txt").write_text(text)
        print(f"stress-strain: {text.strip()}" if status != NO_YIELD else NO_YIELD, file=sys.stderr)

    if args.dump:
        frames = read_dump(args.dump)
        if not frames:
            raise AnalysisError(f"{args.dump}: no frames")
        rows = []
        for frame in frames:
            plane = args.plane_z if args.plane_z is not None else float(frame.bounds[2].mean())
            try:
                prof = binned_profile(frame.columns["x"], frame.columns["z"], frame.columns["c_vm"], plane,
                                      args.band * a, args.bin_width * a, frame.bounds[0, 0], frame.bounds[0, 1])
            except AnalysisError as exc:
                print(f"step {frame.step}: {exc}", file=sys.stderr)
                continue
            rows += [(frame.step, x, v, int(c)) for x, v, c in zip(prof.x, prof.mean_von_mises, prof.counts)]
        write_csv(out / "tip_profiles.csv", ("step", "x_A", "mean_vm_eV", "count"), rows)

        last = frames[-1]
        system = _frame_system(last, a)
        labels = classify_structure(system)
        try:
            fit = slip_plane_fit(system, labels)
            report = (
                f"step={last.step}\nn_hcp_atoms={fit.n_atoms}\n"
                f"normal={' '.join(f'{v:.6f}' for v in fit.normal)}\n"
                f"nearest_111={' '.join(str(v) for v in fit.miller)}\n"
                f"deviation_deg={fit.deviation_deg:.4f}\n"
            )
        except AnalysisError as exc:
            report = f"step={last.step}\n{exc}\n"
        (out / "slip_report.txt").write_text(report)
        print(report.strip().splitlines()[-1], file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crackmd", description="Edge-crack molecular dynamics in FCC metals.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="build, relax and load a scenario")
    r.add_argument("config", help="scenario config file")
    r.add_argument("--dry-run", action="store_true", help="build and validate, write the initial dump only")
    r.add_argument("--threads", type=int, default=1, help="force-kernel threads (1 is the determinism reference)")
    r.add_argument("--output-dir", help="override [output] directory")
    r.add_argument("--seed", type=int, help="override the velocity seed")
    r.add_argument("--steps", type=int, help="override the number of loading steps")
    r.add_argument("--quiet", action="store_true", help="no per-record progress lines")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("preset", help="print a preset scenario config")
    s.add_argument("name", nargs="?", help="preset name")
    s.add_argument("--list", action="store_true", help="list preset names")
    s.add_argument("-o", "--output", help="write to a file instead of stdout")
    s.set_defaults(func=cmd_preset)

    a = sub.add_parser("analyze", help="post-process a dump and/or thermo CSV")
    a.add_argument("--dump", help="dump file written by run")
    a.add_argument("--thermo", help="thermo CSV written by run")
    a.add_argument("--output-dir", default="analysis", help="directory for CSV reports")
    a.add_argument("--lattice-constant", type=float, default=3.52, help="host lattice constant, Å")
    a.add_argument("--plane-z", type=float, help="crack-plane z (default: box mid-height)")
    a.add_argument("--band", type=float, default=2.0, help="band half-width, lattice constants")
    a.add_argument("--bin-width", type=float, default=1.0, help="profile bin width, lattice constants")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for I/O here
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    threads = getattr(args, "threads", 1)
    if threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if threads > 1:
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CrackMDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
