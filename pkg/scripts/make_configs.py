"""Regenerate configs/*.json from the builders in surfelast.experiments."""
import argparse
import json
from pathlib import Path

from surfelast import config
from surfelast.experiments import bundled_configs

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "configs"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fname, data in bundled_configs().items():
        config.validate(data)
        (out / fname).write_text(json.dumps(data, indent=2) + "\n")
        print(f"wrote {out / fname}")


if __name__ == "__main__":
    main()
