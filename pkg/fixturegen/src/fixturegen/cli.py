"""Generate the committed FCIDUMP fixture set (one-shot)."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from . import recipes

# calibrated against the published reference energies; see the sidecars
CBD_GEOMETRIES_PATH = Path(__file__).parent / "cbd_geometries.json"


def generate_all(out_dir: Path, families: set[str]):
    paths = []
    if "h2" in families:
        paths.append(recipes.generate_h2(out_dir))
    if "h4" in families:
        paths.extend(recipes.generate_h4_scan(out_dir))
        paths.extend(recipes.generate_h4_symm(out_dir))
        paths.append(recipes.generate_h4_square_symhf(out_dir))
    if "water" in families:
        paths.extend(recipes.generate_water_scans(out_dir))
    if "cbd" in families:
        geo = json.loads(CBD_GEOMETRIES_PATH.read_text())
        for sym in ("d2h", "d4h"):
            g = geo[sym]
            paths.append(recipes.generate_cbd(
                out_dir, f"cbd_hf_{sym}", "hf", g["r1"], g["r2"], g["rch"],
                notes="geometry refined against published reference energies"))
            paths.append(recipes.generate_cbd(
                out_dir, f"cbd_cas_{sym}", "casscf", g["r1"], g["r2"], g["rch"],
                notes="geometry refined against published reference energies",
                moiety_edges="r2" if sym == "d4h" else "r1"))
    if "fragments" in families:
        frag_dir = out_dir / "fragments"
        for parent in ("h4_r2_1.00", "h4_r2_2.00", "cbd_hf_d2h", "cbd_hf_d4h"):
            parent_path = out_dir / f"{parent}.fcidump"
            if parent_path.exists():
                paths.extend(recipes.generate_fragment_fixtures(
                    frag_dir, parent_path, parent))
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fixturegen", description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--only", default="h2,h4,water,cbd,fragments",
                        help="comma list: h2,h4,water,cbd,fragments")
    args = parser.parse_args(argv)
    families = {f.strip() for f in args.only.split(",") if f.strip()}
    paths = generate_all(Path(args.out), families)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
