#!/usr/bin/env python3
"""Regenerate the committed replay fixture (replay_cache.jsonl).

Runs the fixture config once in record mode against the deterministic
offline transport and captures every exchange. Re-run this after any change
to the prompt templates, then commit the refreshed cache.
"""

from __future__ import annotations

import sys
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent
sys.path.insert(0, str(FIXTURES.parent))  # for helpers

from helpers import deterministic_reply  # noqa: E402

from taxsim.config import load_config  # noqa: E402
from taxsim.gateway import ChatGateway  # noqa: E402
from taxsim.simulation import run  # noqa: E402


def main() -> None:
    cache_path = FIXTURES / "replay_cache.jsonl"
    if cache_path.exists():
        cache_path.unlink()
    config = load_config(FIXTURES / "replay_config.json")
    gateway = ChatGateway("record", cache_path=cache_path, transport=deterministic_reply)
    result = run(config, gateway=gateway)
    lines = cache_path.read_text(encoding="utf-8").count("\n")
    print(f"recorded {lines} exchanges over {len(result.month_records)} months")
    print(f"wrote {cache_path}")


if __name__ == "__main__":
    main()
