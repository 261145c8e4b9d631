"""Regenerate the packaged reference weather year.

The file is committed; rerun only when the generator changes, and expect
bit-identical output for an unchanged seed.
"""
from pathlib import Path

from zonesim.synthetic import DEFAULT_SEED, MUNICH, generate_epw

OUT = Path(__file__).resolve().parent.parent / "src" / "zonesim" / "data" \
    / "weather" / "munich_synthetic.epw"


def main() -> None:
    text = generate_epw(site=MUNICH, seed=DEFAULT_SEED)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(text, encoding="ascii")
    print(f"wrote {OUT} ({len(text.splitlines())} lines)")


if __name__ == "__main__":
    main()
