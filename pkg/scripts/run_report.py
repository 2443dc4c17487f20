"""Full deficiency report in every format, written to a results directory."""
import argparse
import io
import pathlib

from buchsieve.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--mode", default="upper", choices=["upper", "midpoint", "monte_carlo"])
    ap.add_argument("--gamma", default="1/19")
    ap.add_argument("--config")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    extra = ["--config", args.config] if args.config else []
    code = 0
    for fmt, ext in (("text", "txt"), ("csv", "csv"), ("json", "json")):
        buf = io.StringIO()
        code = max(code, cli(["report", "--mode", args.mode, "--gamma", args.gamma, "--format", fmt, *extra], out=buf))
        path = out / f"report_{args.mode}.{ext}"
        path.write_text(buf.getvalue())
        print(f"wrote {path}")
    print((out / f"report_{args.mode}.txt").read_text())
    raise SystemExit(code)


if __name__ == "__main__":
    main()
