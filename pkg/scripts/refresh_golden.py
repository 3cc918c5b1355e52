"""Regenerate the frozen golden-scenario fixtures under tests/golden/.

Run after any intentional change to consensus rules, encodings, detectors,
or the golden scenario itself; review the diff before committing. Tests
compare runs byte-for-byte against these files.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from veriledger.sim import ScenarioRunner, parse_scenario  # noqa: E402


def main() -> int:
    config = parse_scenario(
        json.loads((REPO / "scenarios" / "golden.json").read_text())
    )
    fixture_dir = REPO / "tests" / "golden"
    fixture_dir.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        result = ScenarioRunner(config).run(out_dir=tmp)
        for name in ("report.json", "metrics.csv"):
            shutil.copy(Path(tmp) / name, fixture_dir / name)

    genesis = result.chain.records[0].block
    tip = result.chain.tip
    meta = {
        "genesis_block_hash": genesis.block_hash.hex,
        "genesis_state_root": genesis.state_root.hex,
        "tip_block_hash": tip.block_hash.hex,
        "tip_state_root": tip.state_root.hex,
        "blocks": len(result.chain.records),
    }
    (fixture_dir / "chain_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote fixtures to {fixture_dir}")
    for key, value in meta.items():
        print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
